//! Single-round mechanisms: no reallocation, the central solver, and
//! clustering followed by local routing.

use mtsp_milp::SolveStatus;

use crate::clock::{Actor, Budget};
use crate::clustering::{cluster, ClusterFormulation};
use crate::instance::{Allocation, Route};
use crate::mechanisms::trace::{Message, MessageKind, RoundRecord, Transfer};
use crate::mechanisms::{total_length, MechanismKind, RunResult, Termination};
use crate::routing::{solve_mtsp, solve_tsp};
use crate::instance::Instance;

struct Local {
    routes: Vec<Route<f64>>,
    optimal: bool,
}

/// Every salesman routes its own set in one parallel phase. Without an
/// incumbent the set is visited in increasing index order.
fn route_locally(inst: &Instance<f64>, alloc: &Allocation, budget: &mut Budget) -> Local {
    let mut optimal = true;
    let routes = alloc
        .sets
        .iter()
        .enumerate()
        .map(|(a, set)| {
            let cities: Vec<usize> = set.iter().copied().collect();
            let actor = Actor::Salesman(a);
            let s = solve_tsp(inst.dist(), &cities, budget.solver_limit(actor)).expect("valid city set");
            budget.charge_effort(actor, s.effort);
            optimal &= s.status == SolveStatus::Optimal;
            s.route.unwrap_or_else(|| Route::from_order(&cities[1..], inst.dist()))
        })
        .collect();
    Local { routes, optimal }
}

fn transfers(from: &Allocation, to: &Allocation) -> Vec<Transfer> {
    let mut out = Vec::new();
    for (b, set) in to.sets.iter().enumerate() {
        for &c in set.iter().skip(1) {
            if let Some(a) = from.owner_of(c) {
                if a != b {
                    out.push(Transfer { city: c, from: a, to: b });
                }
            }
        }
    }
    out.sort_by_key(|t| t.city);
    out
}

fn finish(
    kind: MechanismKind,
    inst: &Instance<f64>,
    allocation: Allocation,
    routes: Vec<Route<f64>>,
    messages: Vec<Message>,
    budget: Budget,
    all_optimal: bool,
) -> RunResult {
    let total = total_length(&routes);
    let record = RoundRecord {
        round: 0,
        host: None,
        participants: (0..inst.m()).collect(),
        offers: Vec::new(),
        objective: Some(total),
        status_quo_objective: None,
        transfers: transfers(inst.endowment(), &allocation),
        exact: all_optimal,
        abandoned: false,
        total_before: None,
        total_after: total,
        elapsed_after: budget.elapsed(),
    };
    RunResult {
        kind,
        allocation,
        routes,
        total,
        rounds: vec![record],
        messages,
        budget,
        termination: if all_optimal {
            Termination::Converged
        } else {
            Termination::BudgetExhausted
        },
        all_optimal,
    }
}

pub fn run_norealloc(inst: &Instance<f64>, mut budget: Budget) -> RunResult {
    budget.begin_phase("salesmen");
    let local = route_locally(inst, inst.endowment(), &mut budget);
    finish(
        MechanismKind::NoRealloc,
        inst,
        inst.endowment().clone(),
        local.routes,
        Vec::new(),
        budget,
        local.optimal,
    )
}

fn hand_in(inst: &Instance<f64>, budget: &Budget) -> Vec<Message> {
    inst.endowment()
        .sets
        .iter()
        .enumerate()
        .map(|(a, set)| Message {
            round: 0,
            from: Actor::Salesman(a),
            to: Actor::Ca,
            kind: MessageKind::Endowment,
            cities: set.iter().copied().collect(),
            values: Vec::new(),
            time: budget.elapsed(),
        })
        .collect()
}

fn hand_out(routes: &[Route<f64>], budget: &Budget, messages: &mut Vec<Message>) {
    for (a, r) in routes.iter().enumerate() {
        messages.push(Message {
            round: 0,
            from: Actor::Ca,
            to: Actor::Salesman(a),
            kind: MessageKind::Assignment,
            cities: r.cities.clone(),
            values: vec![r.length],
            time: budget.elapsed(),
        });
    }
}

/// The CA solves allocation and routing jointly. Without an incumbent the
/// salesmen route their endowments with whatever budget is left.
pub fn run_centr(inst: &Instance<f64>, mut budget: Budget) -> RunResult {
    let mut messages = hand_in(inst, &budget);
    budget.begin_phase("ca");
    let sol = solve_mtsp(inst, budget.solver_limit(Actor::Ca)).expect("instance has n >= m + 1");
    budget.charge_effort(Actor::Ca, sol.effort);
    match (sol.allocation, sol.routes) {
        (Some(allocation), Some(routes)) => {
            hand_out(&routes, &budget, &mut messages);
            let optimal = sol.status == SolveStatus::Optimal;
            finish(MechanismKind::CentrB, inst, allocation, routes, messages, budget, optimal)
        }
        _ => {
            budget.begin_phase("salesmen");
            let local = route_locally(inst, inst.endowment(), &mut budget);
            finish(
                MechanismKind::CentrB,
                inst,
                inst.endowment().clone(),
                local.routes,
                messages,
                budget,
                false,
            )
        }
    }
}

/// The CA clusters the cities, then every salesman routes its cluster with
/// the remaining budget. Without a clustering the endowment is kept.
pub fn run_cluster(inst: &Instance<f64>, mut budget: Budget, formulation: ClusterFormulation) -> RunResult {
    let kind = match formulation {
        ClusterFormulation::Median => MechanismKind::ClusterRB,
        ClusterFormulation::Center => MechanismKind::ClusterSB,
    };
    let mut messages = hand_in(inst, &budget);
    budget.begin_phase("ca");
    let sol = cluster(inst.dist(), inst.m(), formulation, budget.solver_limit(Actor::Ca)).expect("instance has n >= m + 1");
    budget.charge_effort(Actor::Ca, sol.effort);
    let clustered = sol.status == SolveStatus::Optimal;
    let allocation = sol.allocation.unwrap_or_else(|| inst.endowment().clone());
    for (a, set) in allocation.sets.iter().enumerate() {
        messages.push(Message {
            round: 0,
            from: Actor::Ca,
            to: Actor::Salesman(a),
            kind: MessageKind::Assignment,
            cities: set.iter().copied().collect(),
            values: Vec::new(),
            time: budget.elapsed(),
        });
    }
    budget.begin_phase("salesmen");
    let local = route_locally(inst, &allocation, &mut budget);
    finish(kind, inst, allocation, local.routes, messages, budget, clustered && local.optimal)
}
