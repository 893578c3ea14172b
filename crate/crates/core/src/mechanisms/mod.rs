//! The allocation mechanisms, run against a virtual clock.
//!
//! Suffix `b` marks benevolent variants (minimise the total length), `s`
//! selfish ones (an exchange must shorten every party's own route).

mod central;
mod decentral;
pub mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Budget;
use crate::instance::{Allocation, Route};
use crate::instance::Instance;

pub use central::{run_centr, run_cluster, run_norealloc};
pub use decentral::{run_auction, run_cnp, run_p2p, Protocol, Session};
pub use trace::{Message, MessageKind, Offer, RoundRecord, Transfer};

/// Length tolerance used by every comparison between routes and costs.
pub const LENGTH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MechanismKind {
    NoRealloc,
    CentrB,
    P2pB,
    P2pS,
    CnpB,
    CnpS,
    AuctionB,
    AuctionS,
    ClusterRB,
    ClusterSB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Benevolent,
    Selfish,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 10] = [
        MechanismKind::NoRealloc,
        MechanismKind::CentrB,
        MechanismKind::P2pB,
        MechanismKind::P2pS,
        MechanismKind::CnpB,
        MechanismKind::CnpS,
        MechanismKind::AuctionB,
        MechanismKind::AuctionS,
        MechanismKind::ClusterRB,
        MechanismKind::ClusterSB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::NoRealloc => "norealloc",
            MechanismKind::CentrB => "centr_b",
            MechanismKind::P2pB => "p2p_b",
            MechanismKind::P2pS => "p2p_s",
            MechanismKind::CnpB => "cnp_b",
            MechanismKind::CnpS => "cnp_s",
            MechanismKind::AuctionB => "auction_b",
            MechanismKind::AuctionS => "auction_s",
            MechanismKind::ClusterRB => "cluster_r_b",
            MechanismKind::ClusterSB => "cluster_s_b",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum UnknownMechanism {
    #[error("`{0}` has no selfish counterpart that can be run; use the `_b` variant")]
    Unspecified(String),
    #[error("unknown mechanism `{0}`")]
    Unknown(String),
}

impl FromStr for MechanismKind {
    type Err = UnknownMechanism;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(k) = MechanismKind::ALL.iter().find(|k| k.name() == lower) {
            return Ok(*k);
        }
        match lower.as_str() {
            "centr_s" | "cluster_s" | "cluster_r_s" | "cluster_s_s" => Err(UnknownMechanism::Unspecified(lower)),
            _ => Err(UnknownMechanism::Unknown(lower)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub kind: MechanismKind,
    pub allocation: Allocation,
    /// Route per salesman.
    pub routes: Vec<Route<f64>>,
    pub total: f64,
    pub rounds: Vec<RoundRecord>,
    pub messages: Vec<Message>,
    pub budget: Budget,
    pub termination: Termination,
    /// Every solve of the run was proven optimal.
    pub all_optimal: bool,
}

impl RunResult {
    /// Critical-path virtual time consumed.
    pub fn elapsed(&self) -> u64 {
        self.budget.elapsed()
    }
}

pub fn total_length(routes: &[Route<f64>]) -> f64 {
    routes.iter().map(|r| r.length).sum()
}

/// Runs `kind` on `inst` with a fresh copy of `budget`.
pub fn run(kind: MechanismKind, inst: &Instance<f64>, budget: Budget) -> RunResult {
    use crate::clustering::ClusterFormulation;
    match kind {
        MechanismKind::NoRealloc => run_norealloc(inst, budget),
        MechanismKind::CentrB => run_centr(inst, budget),
        MechanismKind::P2pB => run_p2p(inst, budget, Variant::Benevolent),
        MechanismKind::P2pS => run_p2p(inst, budget, Variant::Selfish),
        MechanismKind::CnpB => run_cnp(inst, budget, Variant::Benevolent),
        MechanismKind::CnpS => run_cnp(inst, budget, Variant::Selfish),
        MechanismKind::AuctionB => run_auction(inst, budget, Variant::Benevolent),
        MechanismKind::AuctionS => run_auction(inst, budget, Variant::Selfish),
        MechanismKind::ClusterRB => run_cluster(inst, budget, ClusterFormulation::Median),
        MechanismKind::ClusterSB => run_cluster(inst, budget, ClusterFormulation::Center),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in MechanismKind::ALL {
            assert_eq!(k.name().parse::<MechanismKind>().unwrap(), k);
        }
        assert!(matches!("cluster_s".parse::<MechanismKind>(), Err(UnknownMechanism::Unspecified(_))));
        assert!(matches!("centr_s".parse::<MechanismKind>(), Err(UnknownMechanism::Unspecified(_))));
        assert!(matches!("ga".parse::<MechanismKind>(), Err(UnknownMechanism::Unknown(_))));
    }
}
