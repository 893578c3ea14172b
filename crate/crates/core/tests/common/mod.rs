#![allow(dead_code)]

use std::collections::BTreeSet;

use mtsp_core::geometry::{DistanceMatrix, Point};
use mtsp_core::instance::Instance;
use proptest::prelude::*;

pub fn points_strategy(min: usize, max: usize) -> impl Strategy<Value = Vec<Point<f64>>> {
    proptest::collection::vec((0u32..300, 0u32..300), min..=max)
        .prop_map(|v| v.into_iter().map(|(x, y)| Point::new(f64::from(x), f64::from(y))).collect())
}

/// Shortest closed tour through `cities` (depot first) by trying every order.
pub fn brute_force_tour(dist: &DistanceMatrix<f64>, cities: &[usize]) -> f64 {
    let rest: Vec<usize> = cities.iter().copied().filter(|&c| c != 0).collect();
    let mut best = f64::INFINITY;
    permute(&mut rest.clone(), 0, &mut |order| {
        let mut tour = vec![0];
        tour.extend_from_slice(order);
        best = best.min(dist.closed_length(&tour));
    });
    if rest.is_empty() {
        0.0
    } else {
        best
    }
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// Every assignment of cities `1..n` to `m` salesmen with no empty one.
pub fn partitions(n: usize, m: usize) -> Vec<Vec<BTreeSet<usize>>> {
    let k = n - 1;
    let mut out = Vec::new();
    let total = m.pow(k as u32);
    for code in 0..total {
        let mut sets = vec![BTreeSet::from([0]); m];
        let mut c = code;
        for city in 1..n {
            sets[c % m].insert(city);
            c /= m;
        }
        if sets.iter().all(|s| s.len() > 1) {
            out.push(sets);
        }
    }
    out
}

/// Optimal total length over all partitions, by enumeration and brute-force tours.
pub fn mtsp_oracle(dist: &DistanceMatrix<f64>, m: usize) -> f64 {
    partitions(dist.len(), m)
        .iter()
        .map(|sets| {
            sets.iter()
                .map(|s| brute_force_tour(dist, &s.iter().copied().collect::<Vec<_>>()))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// The six-city exchange example: salesman 0 (the host) owns cities 2 and
/// 4, salesman 1 (the guest) owns 1, 3 and 5.
pub fn worked_example() -> Instance<f64> {
    let pts = [(0.0, 0.0), (50.0, 200.0), (100.0, 50.0), (50.0, 150.0), (0.0, 200.0), (200.0, 150.0)];
    let points = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
    let endowment = mtsp_core::Allocation::new(vec![BTreeSet::from([0, 2, 4]), BTreeSet::from([0, 1, 3, 5])]);
    Instance::new(points, endowment).unwrap()
}

pub fn random_instance(seed: u64, n: usize, m: usize) -> Instance<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| Point::new(f64::from(rng.random_range(0u32..300)), f64::from(rng.random_range(0u32..300))))
        .collect();
    Instance::round_robin(points, m).unwrap()
}
