//! Instances, allocations, routes and their validity rules.

use std::collections::BTreeSet;
use std::fmt;

use mtsp_milp::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DistanceMatrix, Point};

/// Index of the shared depot.
pub const DEPOT: usize = 0;

/// City sets per salesman; every set contains the depot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub sets: Vec<BTreeSet<usize>>,
}

impl Allocation {
    pub fn new(sets: Vec<BTreeSet<usize>>) -> Self {
        Self { sets }
    }

    /// City `c >= 1` goes to salesman `(c - 1) % m`.
    pub fn round_robin(n: usize, m: usize) -> Self {
        let mut sets = vec![BTreeSet::from([DEPOT]); m];
        for c in 1..n {
            sets[(c - 1) % m].insert(c);
        }
        Self { sets }
    }

    pub fn num_salesmen(&self) -> usize {
        self.sets.len()
    }

    pub fn owner_of(&self, city: usize) -> Option<usize> {
        if city == DEPOT {
            return None;
        }
        self.sets.iter().position(|s| s.contains(&city))
    }

    /// The partition as a salesman-independent set of city sets.
    pub fn as_partition(&self) -> BTreeSet<BTreeSet<usize>> {
        self.sets.iter().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    WrongSalesmanCount { expected: usize, found: usize },
    DuplicateCity(usize),
    MissingCity(usize),
    UnknownCity { salesman: usize, city: usize },
    MissingDepot(usize),
    TooFewCities(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WrongSalesmanCount { expected, found } => {
                write!(f, "wrong-salesman-count({found}, expected {expected})")
            }
            Violation::DuplicateCity(c) => write!(f, "duplicate-city({c})"),
            Violation::MissingCity(c) => write!(f, "missing-city({c})"),
            Violation::UnknownCity { salesman, city } => write!(f, "unknown-city({city} held by {salesman})"),
            Violation::MissingDepot(a) => write!(f, "missing-depot({a})"),
            Violation::TooFewCities(a) => write!(f, "too-few-cities({a})"),
        }
    }
}

/// Checks that `alloc` partitions the non-depot cities of an `n`-city,
/// `m`-salesman instance, with the depot and at least one city per salesman.
pub fn check_allocation(n: usize, m: usize, alloc: &Allocation) -> Vec<Violation> {
    let mut out = Vec::new();
    if alloc.sets.len() != m {
        out.push(Violation::WrongSalesmanCount {
            expected: m,
            found: alloc.sets.len(),
        });
    }
    let mut seen = vec![0usize; n];
    for (a, set) in alloc.sets.iter().enumerate() {
        if !set.contains(&DEPOT) {
            out.push(Violation::MissingDepot(a));
        }
        if set.iter().all(|&c| c == DEPOT) {
            out.push(Violation::TooFewCities(a));
        }
        for &c in set {
            if c >= n {
                out.push(Violation::UnknownCity { salesman: a, city: c });
            } else if c != DEPOT {
                seen[c] += 1;
            }
        }
    }
    for (c, &k) in seen.iter().enumerate().skip(1) {
        match k {
            0 => out.push(Violation::MissingCity(c)),
            1 => {}
            _ => out.push(Violation::DuplicateCity(c)),
        }
    }
    out
}

pub fn validate_allocation<T: Scalar>(inst: &Instance<T>, alloc: &Allocation) -> Vec<Violation> {
    check_allocation(inst.n(), inst.m(), alloc)
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum InstanceError {
    #[error("at least two salesmen are required, got {0}")]
    TooFewSalesmen(usize),
    #[error("{n} cities cannot give each of {m} salesmen a city besides the depot")]
    TooFewCities { n: usize, m: usize },
    #[error("non-finite coordinate at city {0}")]
    NonFinite(usize),
    #[error("invalid endowment: {0}")]
    Endowment(String),
}

#[derive(Debug, Clone)]
pub struct Instance<T> {
    points: Vec<Point<T>>,
    endowment: Allocation,
    dist: DistanceMatrix<T>,
}

impl<T: Scalar> Instance<T> {
    pub fn new(points: Vec<Point<T>>, endowment: Allocation) -> Result<Self, InstanceError> {
        Self::build(points, endowment, 2)
    }

    /// As [`Instance::new`] but allows a single salesman, which the
    /// routing formulations accept.
    pub fn new_single_or_more(points: Vec<Point<T>>, endowment: Allocation) -> Result<Self, InstanceError> {
        Self::build(points, endowment, 1)
    }

    fn build(points: Vec<Point<T>>, endowment: Allocation, min_m: usize) -> Result<Self, InstanceError> {
        let m = endowment.num_salesmen();
        if m < min_m {
            return Err(InstanceError::TooFewSalesmen(m));
        }
        if points.len() < m + 1 {
            return Err(InstanceError::TooFewCities { n: points.len(), m });
        }
        if let Some(i) = points.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(InstanceError::NonFinite(i));
        }
        let problems = check_allocation(points.len(), m, &endowment);
        if !problems.is_empty() {
            let text: Vec<String> = problems.iter().map(ToString::to_string).collect();
            return Err(InstanceError::Endowment(text.join(", ")));
        }
        let dist = DistanceMatrix::from_points(&points);
        Ok(Self { points, endowment, dist })
    }

    pub fn round_robin(points: Vec<Point<T>>, m: usize) -> Result<Self, InstanceError> {
        let n = points.len();
        Self::new(points, Allocation::round_robin(n, m))
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn m(&self) -> usize {
        self.endowment.num_salesmen()
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn endowment(&self) -> &Allocation {
        &self.endowment
    }

    pub fn dist(&self) -> &DistanceMatrix<T> {
        &self.dist
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RouteError {
    #[error("route must start and end at the depot")]
    NotAnchored,
    #[error("city {0} is not part of the instance")]
    UnknownCity(usize),
    #[error("city {0} is visited twice")]
    Repeated(usize),
}

/// Closed tour `0 -> ... -> 0`. The depot-only tour is `[0, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route<T> {
    pub cities: Vec<usize>,
    pub length: T,
}

impl<T: Scalar> Route<T> {
    /// Builds a route from the visiting order of non-depot cities.
    pub fn from_order(order: &[usize], dist: &DistanceMatrix<T>) -> Self {
        let mut cities = Vec::with_capacity(order.len() + 2);
        cities.push(DEPOT);
        cities.extend(order.iter().copied().filter(|&c| c != DEPOT));
        cities.push(DEPOT);
        let length = dist.closed_length(&cities);
        Self { cities, length }
    }

    /// Non-depot cities in visiting order.
    pub fn interior(&self) -> &[usize] {
        &self.cities[1..self.cities.len() - 1]
    }

    pub fn city_set(&self) -> BTreeSet<usize> {
        self.cities.iter().copied().collect()
    }

    pub fn check(&self, n: usize) -> Result<(), RouteError> {
        if self.cities.len() < 2 || self.cities[0] != DEPOT || self.cities[self.cities.len() - 1] != DEPOT {
            return Err(RouteError::NotAnchored);
        }
        let mut seen = BTreeSet::new();
        for &c in self.interior() {
            if c >= n {
                return Err(RouteError::UnknownCity(c));
            }
            if c == DEPOT || !seen.insert(c) {
                return Err(RouteError::Repeated(c));
            }
        }
        Ok(())
    }

    pub fn reversed(&self) -> Self {
        let mut cities = self.cities.clone();
        cities.reverse();
        Self {
            cities,
            length: self.length,
        }
    }
}

/// Sum of consecutive distances along `route`.
pub fn route_length<T: Scalar>(route: &Route<T>, inst: &Instance<T>) -> Result<T, RouteError> {
    route.check(inst.n())?;
    Ok(inst.dist().closed_length(&route.cities))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_points() -> Vec<Point<f64>> {
        [(0.0, 0.0), (50.0, 200.0), (100.0, 50.0), (50.0, 150.0), (0.0, 200.0), (200.0, 150.0)]
            .into_iter()
            .map(|(x, y)| Point::new(x, y))
            .collect()
    }

    fn worked() -> Instance<f64> {
        let endow = Allocation::new(vec![BTreeSet::from([0, 2, 4]), BTreeSet::from([0, 1, 3, 5])]);
        Instance::new(worked_points(), endow).unwrap()
    }

    #[test]
    fn route_lengths_of_the_worked_example() {
        let inst = worked();
        let r = Route::from_order(&[3, 1], inst.dist());
        assert!((route_length(&r, &inst).unwrap() - 414.27).abs() < 0.01);
        let r = Route::from_order(&[5, 1, 4, 3], inst.dist());
        assert!((route_length(&r, &inst).unwrap() - 686.94).abs() < 0.01);
        let empty = Route::from_order(&[], inst.dist());
        assert_eq!(empty.cities, vec![0, 0]);
        assert_eq!(route_length(&empty, &inst).unwrap(), 0.0);
    }

    #[test]
    fn route_errors() {
        let inst = worked();
        let bad = Route { cities: vec![0, 1, 1, 0], length: 0.0 };
        assert_eq!(route_length(&bad, &inst), Err(RouteError::Repeated(1)));
        let bad = Route { cities: vec![0, 9, 0], length: 0.0 };
        assert_eq!(route_length(&bad, &inst), Err(RouteError::UnknownCity(9)));
        let bad = Route { cities: vec![1, 0], length: 0.0 };
        assert_eq!(route_length(&bad, &inst), Err(RouteError::NotAnchored));
    }

    #[test]
    fn round_robin_is_valid() {
        let alloc = Allocation::round_robin(7, 2);
        assert_eq!(alloc.sets[0], BTreeSet::from([0, 1, 3, 5]));
        assert_eq!(alloc.sets[1], BTreeSet::from([0, 2, 4, 6]));
        assert!(check_allocation(7, 2, &alloc).is_empty());
    }

    #[test]
    fn violations_name_the_rule() {
        let mut alloc = Allocation::round_robin(7, 2);
        alloc.sets[1].insert(3);
        assert_eq!(check_allocation(7, 2, &alloc), vec![Violation::DuplicateCity(3)]);

        let alloc = Allocation::new(vec![BTreeSet::from([0, 1, 2]), BTreeSet::from([0])]);
        assert_eq!(check_allocation(3, 2, &alloc), vec![Violation::TooFewCities(1)]);
        assert_eq!(Violation::TooFewCities(1).to_string(), "too-few-cities(1)");
    }

    #[test]
    fn instance_rejects_overfull_salesman_count() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        let err = Instance::new(pts, Allocation::new(vec![BTreeSet::from([0, 1]), BTreeSet::from([0])]));
        assert!(matches!(err, Err(InstanceError::TooFewCities { n: 2, m: 2 })));
    }
}
