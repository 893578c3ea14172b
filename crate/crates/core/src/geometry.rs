//! Points in the plane and exact Euclidean distances.

use mtsp_milp::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

/// Unrounded Euclidean norm of `p - q` (no TSPLIB nearest-integer rounding).
pub fn euclidean_distance<T: Scalar>(p: Point<T>, q: Point<T>) -> T {
    (p.x - q.x).hypot(p.y - q.y)
}

/// Dense symmetric matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    n: usize,
    d: Vec<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    pub fn from_points(points: &[Point<T>]) -> Self {
        let n = points.len();
        let mut d = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = euclidean_distance(points[i], points[j]);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self { n, d }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.d[i * self.n + j]
    }

    /// Length of the closed walk through `cities` in the given order.
    pub fn closed_length(&self, cities: &[usize]) -> T {
        if cities.len() < 2 {
            return T::zero();
        }
        let mut total = cities.windows(2).fold(T::zero(), |acc, w| acc + self.get(w[0], w[1]));
        let (first, last) = (cities[0], cities[cities.len() - 1]);
        if first != last {
            total += self.get(last, first);
        }
        total
    }
}
