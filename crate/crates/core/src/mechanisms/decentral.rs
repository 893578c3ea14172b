//! Multi-round exchange protocols: peer-to-peer, contract net and auction.
//!
//! All salesmen (and the CA of the auction) compute concurrently over the
//! whole run, so the run is one parallel clock phase in which each actor
//! has its own budget. A round whose solve finds no incumbent is abandoned
//! and the pre-round state, memory included, is restored.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use mtsp_milp::SolveStatus;

use crate::clock::{Actor, Budget};
use crate::exchange::{
    build_bundles, pad_missing_costs, solve_exchange_with, status_quo_objective, AllocationDecision, CostMatrix,
    ExchangeKind, ExchangeOptions, ExchangeRound, PaddedMatrix, Proposal,
};
use crate::instance::{Allocation, Route};
use crate::mechanisms::trace::{Message, MessageKind, Offer, RoundRecord, Transfer};
use crate::mechanisms::{total_length, MechanismKind, RunResult, Termination, Variant, LENGTH_TOL};
use crate::routing::{bundle_cost, select_city_to_drop, solve_tsp, DropDecision, Effort, Refusal};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    P2p,
    Cnp,
    Auction,
}

#[derive(Debug, Clone)]
struct AgentState {
    cities: BTreeSet<usize>,
    route: Route<f64>,
}

type Memory = BTreeMap<(usize, usize), BTreeSet<usize>>;

#[derive(Debug, Clone)]
struct Dropped {
    city: usize,
    saving: f64,
    base: Route<f64>,
}

/// Book-keeping of the round in progress.
struct Ctx {
    round: usize,
    exact: bool,
    failed: bool,
    offers: Vec<Offer>,
    /// Tours over `base ∪ bundle` computed while pricing, keyed by agent and bundle.
    routes: HashMap<(usize, Vec<usize>), Route<f64>>,
}

enum Outcome {
    /// Nobody could act (budget gone); nothing recorded.
    Skipped,
    Done { changed: bool },
}

/// A running exchange protocol that can be advanced round by round.
pub struct Session<'a> {
    inst: &'a Instance<f64>,
    protocol: Protocol,
    variant: Variant,
    agents: Vec<AgentState>,
    memory: Memory,
    budget: Budget,
    rounds: Vec<RoundRecord>,
    messages: Vec<Message>,
    cursor: usize,
    quiet: usize,
    all_optimal: bool,
    cut_short: bool,
    done: Option<Termination>,
}

impl<'a> Session<'a> {
    /// Starts a run: every salesman routes its endowment.
    pub fn new(protocol: Protocol, variant: Variant, inst: &'a Instance<f64>, mut budget: Budget) -> Self {
        budget.begin_phase("exchange");
        let mut all_optimal = true;
        let agents = inst
            .endowment()
            .sets
            .iter()
            .enumerate()
            .map(|(a, set)| {
                let cities: Vec<usize> = set.iter().copied().collect();
                let actor = Actor::Salesman(a);
                let s = solve_tsp(inst.dist(), &cities, budget.solver_limit(actor)).expect("valid endowment");
                budget.charge_effort(actor, s.effort);
                all_optimal &= s.status == SolveStatus::Optimal;
                AgentState {
                    cities: set.clone(),
                    route: s.route.unwrap_or_else(|| Route::from_order(&cities[1..], inst.dist())),
                }
            })
            .collect();
        Self {
            inst,
            protocol,
            variant,
            agents,
            memory: Memory::new(),
            budget,
            rounds: Vec::new(),
            messages: Vec::new(),
            cursor: 0,
            quiet: 0,
            all_optimal,
            cut_short: !all_optimal,
            done: None,
        }
    }

    fn m(&self) -> usize {
        self.agents.len()
    }

    /// Rounds per sweep of the schedule.
    fn sweep_len(&self) -> usize {
        match self.protocol {
            Protocol::P2p => self.m() * (self.m() - 1),
            Protocol::Cnp => self.m(),
            Protocol::Auction => 1,
        }
    }

    pub fn allocation(&self) -> Allocation {
        Allocation::new(self.agents.iter().map(|a| a.cities.clone()).collect())
    }

    pub fn routes(&self) -> Vec<Route<f64>> {
        self.agents.iter().map(|a| a.route.clone()).collect()
    }

    pub fn total(&self) -> f64 {
        self.agents.iter().map(|a| a.route.length).sum()
    }

    /// Cities `proposer` has already offered to `counterpart`.
    pub fn memory(&self, proposer: usize, counterpart: usize) -> BTreeSet<usize> {
        self.memory.get(&(proposer, counterpart)).cloned().unwrap_or_default()
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn is_done(&self) -> bool {
        self.done.is_some()
    }

    /// Runs rounds until one is recorded; `None` once the run has ended,
    /// i.e. after a full sweep changed neither cities nor memory.
    pub fn step(&mut self) -> Option<&RoundRecord> {
        loop {
            if self.done.is_some() {
                return None;
            }
            if self.quiet >= self.sweep_len() {
                self.done = Some(if self.cut_short {
                    Termination::BudgetExhausted
                } else {
                    Termination::Converged
                });
                return None;
            }
            let slot = self.cursor;
            self.cursor = (self.cursor + 1) % self.sweep_len();
            let outcome = match self.protocol {
                Protocol::P2p => {
                    let m = self.m();
                    let h = slot / (m - 1);
                    let k = slot % (m - 1);
                    let g = if k >= h { k + 1 } else { k };
                    self.p2p_round(h, g)
                }
                Protocol::Cnp => self.cnp_round(slot),
                Protocol::Auction => self.auction_round(),
            };
            match outcome {
                Outcome::Skipped => {
                    self.cut_short = true;
                    self.quiet += 1;
                }
                Outcome::Done { changed } => {
                    self.quiet = if changed { 0 } else { self.quiet + 1 };
                    return self.rounds.last();
                }
            }
        }
    }

    pub fn finish(mut self) -> RunResult {
        while self.step().is_some() {}
        let kind = match (self.protocol, self.variant) {
            (Protocol::P2p, Variant::Benevolent) => MechanismKind::P2pB,
            (Protocol::P2p, Variant::Selfish) => MechanismKind::P2pS,
            (Protocol::Cnp, Variant::Benevolent) => MechanismKind::CnpB,
            (Protocol::Cnp, Variant::Selfish) => MechanismKind::CnpS,
            (Protocol::Auction, Variant::Benevolent) => MechanismKind::AuctionB,
            (Protocol::Auction, Variant::Selfish) => MechanismKind::AuctionS,
        };
        let routes = self.routes();
        RunResult {
            kind,
            allocation: self.allocation(),
            total: total_length(&routes),
            routes,
            rounds: self.rounds,
            messages: self.messages,
            budget: self.budget,
            termination: self.done.unwrap_or(Termination::BudgetExhausted),
            all_optimal: self.all_optimal,
        }
    }

    // ---- shared round machinery ----

    fn new_ctx(&self) -> Ctx {
        Ctx {
            round: self.rounds.len(),
            exact: true,
            failed: false,
            offers: Vec::new(),
            routes: HashMap::new(),
        }
    }

    fn exhausted(&self, actor: Actor) -> bool {
        self.budget.exhausted(actor)
    }

    fn send(&mut self, ctx: &Ctx, from: Actor, to: Actor, kind: MessageKind, cities: Vec<usize>, values: Vec<f64>) {
        self.messages.push(Message {
            round: ctx.round,
            from,
            to,
            kind,
            cities,
            values,
            time: self.budget.elapsed(),
        });
    }

    fn note_status(&mut self, ctx: &mut Ctx, status: SolveStatus) {
        match status {
            SolveStatus::Optimal => {}
            SolveStatus::NoIncumbent => {
                ctx.failed = true;
                ctx.exact = false;
            }
            _ => ctx.exact = false,
        }
        if status != SolveStatus::Optimal {
            self.all_optimal = false;
        }
    }

    fn charge(&mut self, actor: Actor, effort: Effort) {
        self.budget.charge_effort(actor, effort);
    }

    fn union_memory(&self, proposer: usize, counterparts: &[usize]) -> BTreeSet<usize> {
        counterparts
            .iter()
            .flat_map(|&c| self.memory(proposer, c))
            .collect()
    }

    fn remember(&mut self, ctx: &mut Ctx, proposer: usize, counterpart: usize, city: usize) {
        self.memory.entry((proposer, counterpart)).or_default().insert(city);
        ctx.offers.push(Offer {
            proposer,
            counterpart,
            city,
        });
    }

    /// Drop-city solve of agent `a` under `memory`; `None` on refusal.
    fn drop_city(&mut self, ctx: &mut Ctx, a: usize, memory: &BTreeSet<usize>) -> Option<Dropped> {
        let actor = Actor::Salesman(a);
        let cities: Vec<usize> = self.agents[a].cities.iter().copied().collect();
        let s = select_city_to_drop(
            self.inst.dist(),
            &cities,
            self.agents[a].route.length,
            memory,
            self.budget.solver_limit(actor),
        )
        .expect("agent cities are valid");
        self.charge(actor, s.effort);
        self.note_status(ctx, s.status);
        match s.decision {
            DropDecision::Drop { city, saving, base } => Some(Dropped { city, saving, base }),
            DropDecision::Refuse(Refusal::Budget) => {
                ctx.failed = true;
                None
            }
            DropDecision::Refuse(Refusal::Memory) => None,
        }
    }

    /// Cost for agent `a` of adding `bundle` to its base tour.
    fn cost(&mut self, ctx: &mut Ctx, a: usize, base: &Route<f64>, bundle: &[usize]) -> Option<f64> {
        let actor = Actor::Salesman(a);
        let s = bundle_cost(
            self.inst.dist(),
            &base.cities,
            Some(base.length),
            bundle,
            self.budget.solver_limit(actor),
        )
        .expect("bundle is disjoint from the base");
        self.charge(actor, s.effort);
        self.note_status(ctx, s.status);
        if let Some(route) = s.route {
            let mut key = bundle.to_vec();
            key.sort_unstable();
            ctx.routes.insert((a, key), route);
        }
        s.cost
    }

    fn snapshot(&self) -> (Vec<AgentState>, Memory) {
        (self.agents.clone(), self.memory.clone())
    }

    fn abandon(&mut self, ctx: Ctx, snap: (Vec<AgentState>, Memory), host: Option<usize>, participants: Vec<usize>) -> Outcome {
        let (agents, memory) = snap;
        self.agents = agents;
        self.memory = memory;
        self.cut_short = true;
        let total = self.total();
        self.rounds.push(RoundRecord {
            round: ctx.round,
            host,
            participants,
            offers: Vec::new(),
            objective: None,
            status_quo_objective: None,
            transfers: Vec::new(),
            exact: false,
            abandoned: true,
            total_before: Some(total),
            total_after: total,
            elapsed_after: self.budget.elapsed(),
        });
        Outcome::Done { changed: false }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        ctx: Ctx,
        host: Option<usize>,
        participants: Vec<usize>,
        before: f64,
        decision: Option<(&AllocationDecision<f64>, f64)>,
        transfers: Vec<Transfer>,
    ) -> Outcome {
        let changed = !ctx.offers.is_empty() || !transfers.is_empty();
        let exact = ctx.exact && decision.is_none_or(|(d, _)| !d.uses_padding);
        self.rounds.push(RoundRecord {
            round: ctx.round,
            host,
            participants,
            offers: ctx.offers,
            objective: decision.map(|(d, _)| d.objective),
            status_quo_objective: decision.map(|(_, sq)| sq),
            transfers,
            exact,
            abandoned: false,
            total_before: Some(before),
            total_after: self.total(),
            elapsed_after: self.budget.elapsed(),
        });
        Outcome::Done { changed }
    }

    /// Hands out bundles per `decision`. Agents keeping their own city are
    /// untouched; others get the tour priced for their bundle, or a fresh
    /// solve when the bundle was priced by padding. `None` if such a solve
    /// found no tour.
    fn apply(
        &mut self,
        ctx: &mut Ctx,
        round: &ExchangeRound,
        decision: &AllocationDecision<f64>,
        drops: &[Dropped],
    ) -> Option<Vec<Transfer>> {
        let mut updates = Vec::new();
        let mut transfers = Vec::new();
        for (col, p) in round.proposals.iter().enumerate() {
            let assigned = &decision.assigned[col];
            for &b in assigned {
                for c in round.bundles[b].cities() {
                    let owner = round.proposals.iter().find(|q| q.city == c).expect("bundle of proposed cities").agent;
                    if owner != p.agent {
                        transfers.push(Transfer {
                            city: c,
                            from: owner,
                            to: p.agent,
                        });
                    }
                }
            }
            if assigned.as_slice() == [round.single_of(col)] {
                continue;
            }
            let base = &drops[col].base;
            let mut cities = base.city_set();
            let mut extra: Vec<usize> = assigned.iter().flat_map(|&b| round.bundles[b].cities()).collect();
            extra.sort_unstable();
            cities.extend(extra.iter().copied());
            let route = if extra.is_empty() {
                base.clone()
            } else if let Some(r) = ctx.routes.get(&(p.agent, extra.clone())) {
                r.clone()
            } else {
                let actor = Actor::Salesman(p.agent);
                let list: Vec<usize> = cities.iter().copied().collect();
                let s = solve_tsp(self.inst.dist(), &list, self.budget.solver_limit(actor)).expect("valid city set");
                self.charge(actor, s.effort);
                self.note_status(ctx, s.status);
                s.route?
            };
            updates.push((p.agent, AgentState { cities, route }));
        }
        for (a, state) in updates {
            self.agents[a] = state;
        }
        transfers.sort_by_key(|t| t.city);
        Some(transfers)
    }

    fn proposal(&self, agent: usize, city: usize) -> Proposal {
        Proposal {
            agent,
            city,
            city_count: self.agents[agent].cities.len(),
        }
    }

    fn solve_matrix(
        &mut self,
        ctx: &mut Ctx,
        solver: Actor,
        round: &ExchangeRound,
        costs: &PaddedMatrix<f64>,
        options: &ExchangeOptions,
    ) -> Option<AllocationDecision<f64>> {
        let s = solve_exchange_with(round, costs, options, self.budget.solver_limit(solver))
            .expect("the status quo is always feasible");
        self.charge(solver, s.effort);
        self.note_status(ctx, s.status);
        s.decision
    }

    // ---- peer to peer ----

    fn p2p_round(&mut self, h: usize, g: usize) -> Outcome {
        let (sh, sg) = (Actor::Salesman(h), Actor::Salesman(g));
        if self.exhausted(sh) || self.exhausted(sg) {
            return Outcome::Skipped;
        }
        let snap = self.snapshot();
        let before = self.total();
        let mut ctx = self.new_ctx();
        let parts = vec![h, g];
        self.send(&ctx, sh, sg, MessageKind::Rfp, Vec::new(), Vec::new());

        let mem = self.memory(g, h);
        let dg = self.drop_city(&mut ctx, g, &mem);
        if ctx.failed {
            return self.abandon(ctx, snap, Some(h), parts);
        }
        let Some(dg) = dg else {
            self.send(&ctx, sg, sh, MessageKind::Refusal, Vec::new(), Vec::new());
            return self.record(ctx, Some(h), parts, before, None, Vec::new());
        };
        self.remember(&mut ctx, g, h, dg.city);
        self.send(&ctx, sg, sh, MessageKind::Proposal, vec![dg.city], vec![dg.saving]);

        let mem = self.memory(h, g);
        let dh = self.drop_city(&mut ctx, h, &mem);
        if ctx.failed {
            return self.abandon(ctx, snap, Some(h), parts);
        }
        let Some(dh) = dh else {
            self.send(&ctx, sh, sg, MessageKind::Refusal, Vec::new(), Vec::new());
            return self.record(ctx, Some(h), parts, before, None, Vec::new());
        };
        self.remember(&mut ctx, h, g, dh.city);
        let benevolent = self.variant == Variant::Benevolent;

        let h_cg = self.cost(&mut ctx, h, &dh.base, &[dg.city]);
        let h_pair = if benevolent {
            self.cost(&mut ctx, h, &dh.base, &[dh.city, dg.city])
        } else {
            None
        };
        if ctx.failed {
            return self.abandon(ctx, snap, Some(h), parts);
        }
        let h_cg = h_cg.expect("no failure");
        let mut values = vec![dh.saving, h_cg];
        values.extend(h_pair);
        self.send(&ctx, sh, sg, MessageKind::Costs, vec![dh.city, dg.city], values);

        let g_ch = self.cost(&mut ctx, g, &dg.base, &[dh.city]);
        let g_pair = if benevolent {
            self.cost(&mut ctx, g, &dg.base, &[dh.city, dg.city])
        } else {
            None
        };
        if ctx.failed {
            return self.abandon(ctx, snap, Some(h), parts);
        }
        let g_ch = g_ch.expect("no failure");

        let round = build_bundles(ExchangeKind::P2p, &[self.proposal(h, dh.city), self.proposal(g, dg.city)])
            .expect("distinct agents and cities");
        let mut matrix = CostMatrix::missing(&round);
        matrix.set(0, 0, dh.saving);
        matrix.set(1, 0, h_cg);
        matrix.set(0, 1, g_ch);
        matrix.set(1, 1, dg.saving);
        if let (Some(hp), Some(gp)) = (h_pair, g_pair) {
            matrix.set(2, 0, hp);
            matrix.set(2, 1, gp);
        }
        let padded = pad_missing_costs(&matrix).expect("entries present");
        let sq = status_quo_objective(&round, &padded);
        let decision = if benevolent {
            match self.solve_matrix(&mut ctx, sg, &round, &padded, &ExchangeOptions::default()) {
                Some(d) => d,
                None => return self.abandon(ctx, snap, Some(h), parts),
            }
        } else {
            // only the swap or the status quo; both must gain
            let swap = g_ch < dg.saving - LENGTH_TOL && h_cg < dh.saving - LENGTH_TOL;
            let assigned = if swap { vec![vec![1], vec![0]] } else { vec![vec![0], vec![1]] };
            manual_decision(&padded, assigned, !swap)
        };
        let Some(transfers) = self.apply(&mut ctx, &round, &decision, &[dh, dg]) else {
            return self.abandon(ctx, snap, Some(h), parts);
        };
        let objective = decision.objective;
        self.send(&ctx, sg, sh, MessageKind::Decision, transfers.iter().map(|t| t.city).collect(), vec![objective]);
        self.record(ctx, Some(h), parts, before, Some((&decision, sq)), transfers)
    }

    // ---- contract net ----

    fn cnp_round(&mut self, h: usize) -> Outcome {
        let sh = Actor::Salesman(h);
        if self.exhausted(sh) {
            return Outcome::Skipped;
        }
        let guests: Vec<usize> = (0..self.m()).filter(|&g| g != h && !self.exhausted(Actor::Salesman(g))).collect();
        if guests.is_empty() {
            return Outcome::Skipped;
        }
        let snap = self.snapshot();
        let before = self.total();
        let mut ctx = self.new_ctx();
        let mut parts = vec![h];
        parts.extend(&guests);
        let benevolent = self.variant == Variant::Benevolent;

        let mem = self.union_memory(h, &guests);
        let dh = self.drop_city(&mut ctx, h, &mem);
        if ctx.failed {
            return self.abandon(ctx, snap, Some(h), parts);
        }
        let Some(dh) = dh else {
            return self.record(ctx, Some(h), parts, before, None, Vec::new());
        };
        for &g in &guests {
            self.remember(&mut ctx, h, g, dh.city);
            self.send(&ctx, sh, Actor::Salesman(g), MessageKind::Announce, vec![dh.city], Vec::new());
        }

        struct Bid {
            agent: usize,
            drop: Dropped,
            for_host_city: f64,
            for_pair: Option<f64>,
        }
        let mut bids: Vec<Bid> = Vec::new();
        for &g in &guests {
            let sg = Actor::Salesman(g);
            let mem = self.memory(g, h);
            let dg = self.drop_city(&mut ctx, g, &mem);
            if ctx.failed {
                return self.abandon(ctx, snap, Some(h), parts);
            }
            let Some(dg) = dg else {
                self.send(&ctx, sg, sh, MessageKind::Refusal, Vec::new(), Vec::new());
                continue;
            };
            let g_ch = self.cost(&mut ctx, g, &dg.base, &[dh.city]);
            if ctx.failed {
                return self.abandon(ctx, snap, Some(h), parts);
            }
            let g_ch = g_ch.expect("no failure");
            if !benevolent && g_ch >= dg.saving - LENGTH_TOL {
                // taking the host's city would not shorten this guest's route
                self.send(&ctx, sg, sh, MessageKind::Refusal, Vec::new(), Vec::new());
                continue;
            }
            self.remember(&mut ctx, g, h, dg.city);
            let g_pair = if benevolent {
                let c = self.cost(&mut ctx, g, &dg.base, &[dh.city, dg.city]);
                if ctx.failed {
                    return self.abandon(ctx, snap, Some(h), parts);
                }
                c
            } else {
                None
            };
            let mut values = vec![g_ch];
            if benevolent {
                values.push(dg.saving);
                values.extend(g_pair);
            }
            self.send(&ctx, sg, sh, MessageKind::Proposal, vec![dg.city], values);
            bids.push(Bid {
                agent: g,
                drop: dg,
                for_host_city: g_ch,
                for_pair: g_pair,
            });
        }
        if bids.is_empty() {
            return self.record(ctx, Some(h), parts, before, None, Vec::new());
        }

        let mut proposals = vec![self.proposal(h, dh.city)];
        proposals.extend(bids.iter().map(|b| self.proposal(b.agent, b.drop.city)));
        let round = build_bundles(ExchangeKind::Cnp, &proposals).expect("distinct agents and cities");
        let g_count = bids.len();
        let mut matrix = CostMatrix::missing(&round);
        matrix.set(0, 0, dh.saving);
        let mut host_single = Vec::with_capacity(g_count);
        for (i, bid) in bids.iter().enumerate() {
            let hc = self.cost(&mut ctx, h, &dh.base, &[bid.drop.city]);
            let hp = if benevolent {
                self.cost(&mut ctx, h, &dh.base, &[dh.city, bid.drop.city])
            } else {
                None
            };
            if ctx.failed {
                return self.abandon(ctx, snap, Some(h), parts);
            }
            let hc = hc.expect("no failure");
            host_single.push(hc);
            matrix.set(1 + i, 0, hc);
            matrix.set(0, 1 + i, bid.for_host_city);
            matrix.set(1 + i, 1 + i, bid.drop.saving);
            if let (Some(hp), Some(gp)) = (hp, bid.for_pair) {
                matrix.set(1 + g_count + i, 0, hp);
                matrix.set(1 + g_count + i, 1 + i, gp);
            }
        }
        let padded = pad_missing_costs(&matrix).expect("entries present");
        let sq = status_quo_objective(&round, &padded);
        let decision = if benevolent {
            match self.solve_matrix(&mut ctx, sh, &round, &padded, &ExchangeOptions::default()) {
                Some(d) => d,
                None => return self.abandon(ctx, snap, Some(h), parts),
            }
        } else {
            // the host swaps with the guest whose city suits it best, if that helps it
            let best = (0..g_count)
                .filter(|&i| host_single[i] < dh.saving - LENGTH_TOL)
                .min_by(|&i, &j| host_single[i].total_cmp(&host_single[j]));
            let mut assigned: Vec<Vec<usize>> = (0..=g_count).map(|c| vec![c]).collect();
            if let Some(i) = best {
                assigned[0] = vec![1 + i];
                assigned[1 + i] = vec![0];
            }
            manual_decision(&padded, assigned, best.is_none())
        };
        let mut drops = vec![dh];
        drops.extend(bids.into_iter().map(|b| b.drop));
        let Some(transfers) = self.apply(&mut ctx, &round, &decision, &drops) else {
            return self.abandon(ctx, snap, Some(h), parts);
        };
        for (col, p) in round.proposals.iter().enumerate().skip(1) {
            let cities = decision.assigned[col].iter().flat_map(|&b| round.bundles[b].cities()).collect();
            self.send(&ctx, sh, Actor::Salesman(p.agent), MessageKind::Decision, cities, Vec::new());
        }
        self.record(ctx, Some(h), parts, before, Some((&decision, sq)), transfers)
    }

    // ---- auction ----

    fn auction_round(&mut self) -> Outcome {
        if self.exhausted(Actor::Ca) {
            return Outcome::Skipped;
        }
        let bidders: Vec<usize> = (0..self.m()).filter(|&a| !self.exhausted(Actor::Salesman(a))).collect();
        if bidders.len() < 2 {
            return Outcome::Skipped;
        }
        let snap = self.snapshot();
        let before = self.total();
        let mut ctx = self.new_ctx();
        let benevolent = self.variant == Variant::Benevolent;
        for &a in &bidders {
            self.send(&ctx, Actor::Ca, Actor::Salesman(a), MessageKind::Announce, Vec::new(), Vec::new());
        }

        let mut props: Vec<(usize, Dropped)> = Vec::new();
        for &a in &bidders {
            let others: Vec<usize> = bidders.iter().copied().filter(|&b| b != a).collect();
            let mem = self.union_memory(a, &others);
            let d = self.drop_city(&mut ctx, a, &mem);
            if ctx.failed {
                return self.abandon(ctx, snap, None, bidders);
            }
            match d {
                Some(d) => {
                    self.send(&ctx, Actor::Salesman(a), Actor::Ca, MessageKind::Proposal, vec![d.city], vec![d.saving]);
                    props.push((a, d));
                }
                None => self.send(&ctx, Actor::Salesman(a), Actor::Ca, MessageKind::Refusal, Vec::new(), Vec::new()),
            }
        }
        if props.len() < 2 {
            return self.record(ctx, None, bidders, before, None, Vec::new());
        }
        let parts: Vec<usize> = props.iter().map(|(a, _)| *a).collect();
        let cities: Vec<usize> = props.iter().map(|(_, d)| d.city).collect();
        for (i, &a) in parts.iter().enumerate() {
            for &b in &parts {
                if b != a {
                    self.remember(&mut ctx, a, b, cities[i]);
                }
            }
        }
        for &a in &parts {
            self.send(&ctx, Actor::Ca, Actor::Salesman(a), MessageKind::Broadcast, cities.clone(), Vec::new());
        }

        let proposals: Vec<Proposal> = props.iter().map(|(a, d)| self.proposal(*a, d.city)).collect();
        let round = build_bundles(ExchangeKind::Auction, &proposals).expect("distinct agents and cities");
        let mut matrix = CostMatrix::missing(&round);
        let k = props.len();
        for col in 0..k {
            let (agent, base) = (props[col].0, props[col].1.base.clone());
            matrix.set(col, col, props[col].1.saving);
            let mut values = Vec::new();
            for other in 0..k {
                if other == col {
                    continue;
                }
                let single = self.cost(&mut ctx, agent, &base, &[cities[other]]);
                let pair = if benevolent {
                    self.cost(&mut ctx, agent, &base, &[cities[other], cities[col]])
                } else {
                    None
                };
                if ctx.failed {
                    return self.abandon(ctx, snap, None, parts);
                }
                let single = single.expect("no failure");
                matrix.set(other, col, single);
                values.push(single);
                if let Some(p) = pair {
                    let b = round
                        .bundle_index(crate::exchange::Bundle::Pair(cities[other], cities[col]))
                        .expect("all pairs are bundles");
                    matrix.set(b, col, p);
                    values.push(p);
                }
            }
            self.send(&ctx, Actor::Salesman(agent), Actor::Ca, MessageKind::Costs, cities.clone(), values);
        }
        let padded = pad_missing_costs(&matrix).expect("entries present");
        let sq = status_quo_objective(&round, &padded);
        let options = if benevolent {
            ExchangeOptions::default()
        } else {
            // singles only, and only cities cheaper than the agent's own
            let allowed = (0..round.bundles.len())
                .map(|b| {
                    (0..k)
                        .map(|col| b == col || (b < k && padded.d[b][col] < padded.d[col][col] - LENGTH_TOL))
                        .collect()
                })
                .collect();
            ExchangeOptions {
                one_bundle_per_agent: true,
                allowed: Some(allowed),
            }
        };
        let Some(decision) = self.solve_matrix(&mut ctx, Actor::Ca, &round, &padded, &options) else {
            return self.abandon(ctx, snap, None, parts);
        };
        let drops: Vec<Dropped> = props.into_iter().map(|(_, d)| d).collect();
        let Some(transfers) = self.apply(&mut ctx, &round, &decision, &drops) else {
            return self.abandon(ctx, snap, None, parts);
        };
        for (col, &a) in parts.iter().enumerate() {
            let got = decision.assigned[col].iter().flat_map(|&b| round.bundles[b].cities()).collect();
            self.send(&ctx, Actor::Ca, Actor::Salesman(a), MessageKind::Assignment, got, Vec::new());
        }
        self.record(ctx, None, parts, before, Some((&decision, sq)), transfers)
    }
}

fn manual_decision(costs: &PaddedMatrix<f64>, assigned: Vec<Vec<usize>>, status_quo: bool) -> AllocationDecision<f64> {
    let mut objective = 0.0;
    let mut uses_padding = false;
    for (a, bs) in assigned.iter().enumerate() {
        for &b in bs {
            objective += costs.d[b][a];
            uses_padding |= costs.padded[b][a];
        }
    }
    AllocationDecision {
        assigned,
        objective,
        uses_padding,
        status_quo,
    }
}

pub fn run_p2p(inst: &Instance<f64>, budget: Budget, variant: Variant) -> RunResult {
    Session::new(Protocol::P2p, variant, inst, budget).finish()
}

pub fn run_cnp(inst: &Instance<f64>, budget: Budget, variant: Variant) -> RunResult {
    Session::new(Protocol::Cnp, variant, inst, budget).finish()
}

pub fn run_auction(inst: &Instance<f64>, budget: Budget, variant: Variant) -> RunResult {
    Session::new(Protocol::Auction, variant, inst, budget).finish()
}
