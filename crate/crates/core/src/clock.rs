//! Virtual clock charging only solver time.
//!
//! Mechanisms declare phases. Inside a phase actors run concurrently, so the
//! phase lasts as long as its busiest actor; phases run one after another.
//! An actor's remaining budget is the limit minus the closed phases minus
//! what the actor itself already used in the open phase.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use mtsp_milp::Limit;
use serde::{Deserialize, Serialize};
use serde_with::{DeserializeFromStr, SerializeDisplay};

use crate::routing::Effort;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    /// Measured solver time, in microseconds.
    Wall,
    /// One branch-and-bound node is one unit.
    Nodes,
}

/// Serialised as `CA` or `s<index>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, SerializeDisplay, DeserializeFromStr)]
pub enum Actor {
    /// The central authority.
    Ca,
    Salesman(usize),
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Ca => write!(f, "CA"),
            Actor::Salesman(a) => write!(f, "s{a}"),
        }
    }
}

impl FromStr for Actor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "CA" {
            return Ok(Actor::Ca);
        }
        s.strip_prefix('s')
            .and_then(|i| i.parse().ok())
            .map(Actor::Salesman)
            .ok_or_else(|| format!("unknown actor `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub label: String,
    pub charges: BTreeMap<Actor, u64>,
}

impl Phase {
    pub fn span(&self) -> u64 {
        self.charges.values().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub mode: ClockMode,
    /// `None` means unlimited.
    pub limit: Option<u64>,
    pub phases: Vec<Phase>,
}

impl Budget {
    pub fn nodes(limit: u64) -> Self {
        Self::new(ClockMode::Nodes, Some(limit))
    }

    pub fn wall(limit: Duration) -> Self {
        let micros = u64::try_from(limit.as_micros()).unwrap_or(u64::MAX);
        Self::new(ClockMode::Wall, Some(micros))
    }

    pub fn unlimited(mode: ClockMode) -> Self {
        Self::new(mode, None)
    }

    pub fn new(mode: ClockMode, limit: Option<u64>) -> Self {
        Self {
            mode,
            limit,
            phases: Vec::new(),
        }
    }

    /// Closes the open phase (if any) and opens a new one.
    pub fn begin_phase(&mut self, label: impl Into<String>) {
        self.phases.push(Phase {
            label: label.into(),
            charges: BTreeMap::new(),
        });
    }

    fn closed_span(&self) -> u64 {
        let k = self.phases.len().saturating_sub(1);
        self.phases[..k].iter().map(Phase::span).sum()
    }

    /// Critical-path time: sum over phases of the busiest actor's time.
    pub fn elapsed(&self) -> u64 {
        self.phases.iter().map(Phase::span).sum()
    }

    pub fn used_by(&self, actor: Actor) -> u64 {
        self.phases
            .last()
            .and_then(|p| p.charges.get(&actor))
            .copied()
            .unwrap_or(0)
    }

    /// Units left to `actor` in the open phase; `u64::MAX` when unlimited.
    pub fn remaining(&self, actor: Actor) -> u64 {
        match self.limit {
            None => u64::MAX,
            Some(limit) => limit.saturating_sub(self.closed_span() + self.used_by(actor)),
        }
    }

    pub fn exhausted(&self, actor: Actor) -> bool {
        self.remaining(actor) == 0
    }

    /// Adds `units` to `actor` in the open phase, never beyond its remaining
    /// budget.
    pub fn charge(&mut self, actor: Actor, units: u64) {
        if units == 0 {
            return;
        }
        let units = units.min(self.remaining(actor));
        if self.phases.is_empty() {
            self.begin_phase("main");
        }
        let phase = self.phases.last_mut().expect("a phase is open");
        *phase.charges.entry(actor).or_insert(0) += units;
    }

    pub fn charge_effort(&mut self, actor: Actor, effort: Effort) {
        let units = match self.mode {
            ClockMode::Nodes => effort.nodes,
            ClockMode::Wall => u64::try_from(effort.elapsed.as_micros()).unwrap_or(u64::MAX),
        };
        self.charge(actor, units);
    }

    /// Solver limit matching what `actor` has left.
    pub fn solver_limit(&self, actor: Actor) -> Limit {
        if self.limit.is_none() {
            return Limit::Unlimited;
        }
        let left = self.remaining(actor);
        match self.mode {
            ClockMode::Nodes => Limit::Nodes(left),
            ClockMode::Wall => Limit::Wall(Duration::from_micros(left)),
        }
    }

    /// Elapsed time in reporting units: nodes, or milliseconds of wall time.
    pub fn elapsed_reported(&self) -> f64 {
        let e = self.elapsed() as f64;
        match self.mode {
            ClockMode::Nodes => e,
            ClockMode::Wall => e / 1000.0,
        }
    }
}
