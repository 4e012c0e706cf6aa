//! The synchronous round executor.
//!
//! Each round: live stations produce intents; crashes due this round are
//! applied, then a zero-delay strategy may add crashes after reading the
//! intents; surviving transmitters are resolved on the channel; the protocol
//! observes the feedback; the round is recorded.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{self, Write};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{
    legal_candidates, AdversarySpec, CrashRequest, ObservableHistory, Strategy,
};
use crate::channel::{resolve, ChannelKind, Feedback, Payload};
use crate::ids::{all_stations, StationId, TaskId};
use crate::math::{ceil_log2, ceil_sqrt, CoinBank};
use crate::poset::{Poset, PosetLiteral};
use crate::protocols::{Protocol, ProtocolEvent, ProtocolKind, RoundAction};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    /// Keep every round record.
    #[default]
    Full,
    /// Keep only the running totals needed for metrics and reliability.
    Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    /// Actions of the stations that were live at the start of the round,
    /// including those crashed before acting.
    pub intents: BTreeMap<StationId, RoundAction>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub crashes_applied: Vec<StationId>,
    /// Requests dropped as illegal (oblivious strategies only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<CrashRequest>,
    pub feedback: Feedback,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acknowledged: Option<StationId>,
    pub tasks_performed: Vec<(StationId, TaskId)>,
    pub halts: Vec<StationId>,
    pub operational_after: Vec<StationId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<ProtocolEvent>,
}

impl RoundRecord {
    /// Stations that actually transmitted.
    pub fn transmitters(&self) -> impl Iterator<Item = StationId> + '_ {
        self.intents
            .iter()
            .filter(|(s, a)| a.payload().is_some() && !self.crashes_applied.contains(s))
            .map(|(s, _)| *s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub work: u64,
    pub time: u64,
    pub energy: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    Timeout { round_cap: u64 },
    TaskUnperformed { task: TaskId },
    StationNotHalted { station: StationId },
    IllegalCrash { round: u64, station: StationId },
    BudgetExceeded { crashes: usize, f: usize },
    NoSurvivor { round: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    /// Every task performed, every survivor halted, and the protocol's own
    /// list of outstanding tasks is empty.
    Solved,
    /// Every task performed and every survivor halted.
    Completed,
    Violation {
        reason: Violation,
    },
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        !matches!(self, Outcome::Violation { .. })
    }
}

/// Static description of a run, echoed into its trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub protocol: ProtocolKind,
    pub channel: ChannelKind,
    pub p: usize,
    pub t: usize,
    pub seed: u64,
    pub adversary: String,
    pub f: usize,
    pub delay: u64,
    pub order: PosetLiteral,
    pub strategy: String,
    pub round_cap: u64,
}

/// Running totals kept in every trace level.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub metrics: Metrics,
    pub crashed: Vec<StationId>,
    pub halted: Vec<StationId>,
    pub unperformed: Vec<TaskId>,
    pub rejected_requests: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub header: TraceHeader,
    pub level: TraceLevel,
    pub rounds: Vec<RoundRecord>,
    pub outcome: Outcome,
    pub ledger: Ledger,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(
        "strategy `{strategy}` requested an illegal crash of {target} at round {round}: {reason}"
    )]
    IllegalCrash {
        strategy: String,
        round: u64,
        target: StationId,
        reason: String,
    },
    #[error("trace has no stations")]
    EmptyTrace,
    #[error("round cap must be at least 1")]
    BadRoundCap,
    #[error("adversary order names station {0}, outside 1..=p")]
    StationOutOfRange(StationId),
}

/// `50 * (t + p * ceil(sqrt t) * ceil(log2 p)^2)`.
pub fn default_round_cap(p: usize, t: usize) -> u64 {
    let log = ceil_log2(p as u64).max(1) as u64;
    50 * (t as u64 + p as u64 * ceil_sqrt(t as u64) * log * log)
}

pub struct Simulation {
    protocol: Box<dyn Protocol>,
    spec: AdversarySpec,
    strategy: Box<dyn Strategy>,
    channel: ChannelKind,
    p: usize,
    t: usize,
    seed: u64,
    round_cap: u64,
    level: TraceLevel,
    coins: CoinBank,
    round: u64,
    crashed: FixedBitSet,
    halted: FixedBitSet,
    crash_log: Vec<StationId>,
    doomed: BTreeSet<StationId>,
    pending: Vec<CrashRequest>,
    budget_used: usize,
    recent: VecDeque<RoundRecord>,
    rounds: Vec<RoundRecord>,
    performed: FixedBitSet,
    metrics: Metrics,
    rejected: usize,
    outcome: Option<Outcome>,
}

impl Simulation {
    pub fn new(
        protocol: Box<dyn Protocol>,
        spec: AdversarySpec,
        strategy: Box<dyn Strategy>,
        channel: ChannelKind,
        p: usize,
        t: usize,
        master_seed: u64,
    ) -> Result<Self, EngineError> {
        if p == 0 {
            return Err(EngineError::EmptyTrace);
        }
        if let Some(&s) = spec
            .order
            .elements()
            .iter()
            .find(|s| s.0 == 0 || s.0 as usize > p)
        {
            return Err(EngineError::StationOutOfRange(s));
        }
        Ok(Simulation {
            protocol,
            spec,
            strategy,
            channel,
            p,
            t,
            seed: master_seed,
            round_cap: default_round_cap(p, t),
            level: TraceLevel::Full,
            coins: CoinBank::new(master_seed, p),
            round: 0,
            crashed: FixedBitSet::with_capacity(p),
            halted: FixedBitSet::with_capacity(p),
            crash_log: Vec::new(),
            doomed: BTreeSet::new(),
            pending: Vec::new(),
            budget_used: 0,
            recent: VecDeque::new(),
            rounds: Vec::new(),
            performed: FixedBitSet::with_capacity(t),
            metrics: Metrics::default(),
            rejected: 0,
            outcome: None,
        })
    }

    pub fn with_round_cap(mut self, cap: u64) -> Result<Self, EngineError> {
        if cap == 0 {
            return Err(EngineError::BadRoundCap);
        }
        self.round_cap = cap;
        Ok(self)
    }

    pub fn with_trace_level(mut self, level: TraceLevel) -> Self {
        self.level = level;
        self
    }

    /// Replaces the station coins, e.g. with a perturbed bank.
    pub fn with_coins(mut self, coins: CoinBank) -> Self {
        self.coins = coins;
        self
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn metrics(&self) -> Metrics {
        self.metrics
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn protocol(&self) -> &dyn Protocol {
        self.protocol.as_ref()
    }

    pub fn last_record(&self) -> Option<&RoundRecord> {
        self.recent.back()
    }

    fn live(&self) -> Vec<StationId> {
        (0..self.p)
            .filter(|&i| !self.crashed.contains(i) && !self.halted.contains(i))
            .map(StationId::from_slot)
            .collect()
    }

    fn header(&self) -> TraceHeader {
        TraceHeader {
            protocol: self.protocol.kind(),
            channel: self.channel,
            p: self.p,
            t: self.t,
            seed: self.seed,
            adversary: self.spec.label.name(),
            f: self.spec.f,
            delay: self.spec.delay,
            order: PosetLiteral::from_poset(&self.spec.order),
            strategy: self.strategy.name().to_string(),
            round_cap: self.round_cap,
        }
    }

    /// Checks a freshly submitted batch and queues it in a legal order.
    fn admit(&mut self, requests: &[CrashRequest]) -> Result<(), (StationId, String)> {
        let targets: Vec<StationId> = requests.iter().map(|r| r.target).collect();
        if self.budget_used + targets.len() > self.spec.f {
            return Err((targets[0], "crash budget exhausted".to_string()));
        }
        let gone = |s: &StationId| {
            s.0 == 0
                || s.0 as usize > self.p
                || self.doomed.contains(s)
                || self.halted.contains(s.slot())
        };
        if let Some(&s) = targets.iter().find(|s| gone(s)) {
            return Err((s, "station already crashed, halted or unknown".to_string()));
        }
        let ordered = self
            .spec
            .order
            .validate_batch(&self.doomed, &targets)
            .map_err(|e| (targets[0], e.to_string()))?;
        let submitted = requests[0].submitted_round;
        self.budget_used += ordered.len();
        self.doomed.extend(ordered.iter().copied());
        self.pending
            .extend(ordered.into_iter().map(|target| CrashRequest {
                target,
                submitted_round: submitted,
                effective_round: submitted + self.spec.delay,
            }));
        Ok(())
    }

    /// Illegal batches from oblivious strategies are dropped; from any other
    /// strategy they are a bug.
    fn submit(
        &mut self,
        requests: Vec<CrashRequest>,
        rejected: &mut Vec<CrashRequest>,
    ) -> Result<(), EngineError> {
        if requests.is_empty() {
            return Ok(());
        }
        match self.admit(&requests) {
            Ok(()) => Ok(()),
            Err(_) if self.strategy.oblivious() => {
                self.rejected += requests.len();
                rejected.extend(requests);
                Ok(())
            }
            Err((target, reason)) => Err(EngineError::IllegalCrash {
                strategy: self.strategy.name().to_string(),
                round: self.round,
                target,
                reason,
            }),
        }
    }

    fn decide(
        &mut self,
        intents: Option<&BTreeMap<StationId, RoundAction>>,
    ) -> Result<Vec<CrashRequest>, EngineError> {
        let candidates: Vec<StationId> =
            legal_candidates(&self.spec, &self.doomed, self.budget_used)
                .into_iter()
                .filter(|s| !self.halted.contains(s.slot()))
                .collect();
        let records = self.recent.make_contiguous();
        let view = ObservableHistory {
            round: self.round,
            delay: self.spec.delay,
            records,
            current_intents: intents,
            focal_station: self.protocol.focal_station(),
            doomed: &self.doomed,
            budget_left: self.spec.f - self.budget_used,
            order: &self.spec.order,
        };
        Ok(self.strategy.decide(&view, &candidates))
    }

    /// Runs one round. Returns false once the run is over.
    pub fn step(&mut self) -> Result<bool, EngineError> {
        if self.outcome.is_some() {
            return Ok(false);
        }
        self.round += 1;
        let r = self.round;
        let live = self.live();
        let mut rejected = Vec::new();

        if self.spec.delay > 0 {
            let requests = self.decide(None)?;
            self.submit(requests, &mut rejected)?;
        }

        let intents: BTreeMap<StationId, RoundAction> = self
            .protocol
            .intents(r, &live, &mut self.coins)
            .into_iter()
            .collect();

        if self.spec.delay == 0 {
            let requests = self.decide(Some(&intents))?;
            self.submit(requests, &mut rejected)?;
        }

        let mut crashes_applied = Vec::new();
        let mut still_pending = Vec::new();
        for req in std::mem::take(&mut self.pending) {
            if req.effective_round > r {
                still_pending.push(req);
            } else if !self.halted.contains(req.target.slot()) {
                self.crashed.insert(req.target.slot());
                self.crash_log.push(req.target);
                crashes_applied.push(req.target);
            }
        }
        self.pending = still_pending;

        let mut transmissions: Vec<(StationId, Payload)> = Vec::new();
        let mut tasks_performed = Vec::new();
        let mut halts = Vec::new();
        for (&s, action) in &intents {
            if self.crashed.contains(s.slot()) {
                continue;
            }
            if let Some(m) = action.payload() {
                transmissions.push((s, m));
            }
            if let Some(x) = action.task() {
                tasks_performed.push((s, x));
                self.performed.insert(x.slot());
            }
            if action.is_halt() {
                halts.push(s);
            }
        }
        let resolution = resolve(self.channel, &transmissions);
        let events = self.protocol.observe(r, resolution.feedback);
        for s in &halts {
            self.halted.insert(s.slot());
        }

        self.metrics.work += live.len() as u64;
        self.metrics.time = r;
        self.metrics.energy += transmissions.len() as u64;

        let operational_after = self.live();
        let record = RoundRecord {
            round: r,
            intents,
            crashes_applied,
            rejected,
            feedback: resolution.feedback,
            acknowledged: resolution.acknowledged,
            tasks_performed,
            halts,
            operational_after,
            events,
        };
        if self.level == TraceLevel::Full {
            self.rounds.push(record.clone());
        }
        self.recent.push_back(record);
        while self.recent.len() as u64 > self.spec.delay + 2 {
            self.recent.pop_front();
        }

        let survivors = (0..self.p).filter(|&i| !self.crashed.contains(i)).count();
        if survivors == 0 {
            self.outcome = Some(Outcome::Violation {
                reason: Violation::NoSurvivor { round: r },
            });
        } else if self
            .recent
            .back()
            .is_some_and(|rec| rec.operational_after.is_empty())
        {
            self.outcome = Some(self.final_outcome());
        } else if r >= self.round_cap {
            self.outcome = Some(Outcome::Violation {
                reason: Violation::Timeout {
                    round_cap: self.round_cap,
                },
            });
        }
        Ok(self.outcome.is_none())
    }

    fn final_outcome(&self) -> Outcome {
        if let Some(i) = (0..self.t).find(|&i| !self.performed.contains(i)) {
            return Outcome::Violation {
                reason: Violation::TaskUnperformed {
                    task: TaskId::from_slot(i),
                },
            };
        }
        if self.protocol.shared_view().tasks.is_empty() {
            Outcome::Solved
        } else {
            Outcome::Completed
        }
    }

    fn ledger(&self) -> Ledger {
        Ledger {
            metrics: self.metrics,
            crashed: self.crash_log.clone(),
            halted: self.halted.ones().map(StationId::from_slot).collect(),
            unperformed: (0..self.t)
                .filter(|&i| !self.performed.contains(i))
                .map(TaskId::from_slot)
                .collect(),
            rejected_requests: self.rejected,
        }
    }

    /// Runs to completion.
    pub fn run(mut self) -> Result<(ExecutionTrace, Metrics), EngineError> {
        while self.step()? {}
        let trace = ExecutionTrace {
            header: self.header(),
            level: self.level,
            rounds: std::mem::take(&mut self.rounds),
            outcome: self.outcome.clone().expect("run finished"),
            ledger: self.ledger(),
        };
        Ok((trace, self.metrics))
    }
}

/// Runs one simulation with a full trace.
#[allow(clippy::too_many_arguments)]
pub fn run(
    protocol: Box<dyn Protocol>,
    adversary: AdversarySpec,
    strategy: Box<dyn Strategy>,
    channel: ChannelKind,
    p: usize,
    t: usize,
    master_seed: u64,
    round_cap: Option<u64>,
) -> Result<(ExecutionTrace, Metrics), EngineError> {
    let mut sim = Simulation::new(protocol, adversary, strategy, channel, p, t, master_seed)?;
    if let Some(cap) = round_cap {
        sim = sim.with_round_cap(cap)?;
    }
    sim.run()
}

/// Metrics recomputed from the round records, or taken from the ledger of a
/// summary trace.
pub fn compute_metrics(trace: &ExecutionTrace) -> Result<Metrics, EngineError> {
    if trace.header.p == 0 {
        return Err(EngineError::EmptyTrace);
    }
    if trace.level == TraceLevel::Summary {
        return Ok(trace.ledger.metrics);
    }
    let mut metrics = Metrics::default();
    let mut before = trace.header.p as u64;
    for rec in &trace.rounds {
        if before > 0 {
            metrics.time = rec.round;
        }
        metrics.work += before;
        metrics.energy += rec.transmitters().count() as u64;
        before = rec.operational_after.len() as u64;
    }
    Ok(metrics)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub violations: Vec<Violation>,
}

impl ReliabilityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every task was performed, every survivor halted and every
/// applied crash was legal when it happened.
pub fn verify_reliability(trace: &ExecutionTrace, t: usize) -> ReliabilityReport {
    let mut violations = Vec::new();
    if let Outcome::Violation {
        reason: reason @ Violation::Timeout { .. },
    } = &trace.outcome
    {
        violations.push(reason.clone());
    }
    let p = trace.header.p;
    let (performed, crashed, halted): (BTreeSet<TaskId>, Vec<StationId>, BTreeSet<StationId>) =
        if trace.level == TraceLevel::Full {
            (
                trace
                    .rounds
                    .iter()
                    .flat_map(|r| r.tasks_performed.iter().map(|(_, x)| *x))
                    .collect(),
                trace
                    .rounds
                    .iter()
                    .flat_map(|r| r.crashes_applied.iter().copied())
                    .collect(),
                trace
                    .rounds
                    .iter()
                    .flat_map(|r| r.halts.iter().copied())
                    .collect(),
            )
        } else {
            let unperformed: BTreeSet<TaskId> = trace.ledger.unperformed.iter().copied().collect();
            (
                (0..t)
                    .map(TaskId::from_slot)
                    .filter(|x| !unperformed.contains(x))
                    .collect(),
                trace.ledger.crashed.clone(),
                trace.ledger.halted.iter().copied().collect(),
            )
        };
    for x in (0..t).map(TaskId::from_slot) {
        if !performed.contains(&x) {
            violations.push(Violation::TaskUnperformed { task: x });
        }
    }
    let crashed_set: BTreeSet<StationId> = crashed.iter().copied().collect();
    for s in all_stations(p) {
        if !crashed_set.contains(&s) && !halted.contains(&s) {
            violations.push(Violation::StationNotHalted { station: s });
        }
    }
    if crashed.len() > trace.header.f {
        violations.push(Violation::BudgetExceeded {
            crashes: crashed.len(),
            f: trace.header.f,
        });
    }
    if crashed_set.len() >= p {
        violations.push(Violation::NoSurvivor {
            round: trace.ledger.metrics.time,
        });
    }
    if let Ok(order) = trace.header.order.resolve(&[]) {
        violations.extend(legality_violations(trace, &order));
    }
    ReliabilityReport { violations }
}

fn legality_violations(trace: &ExecutionTrace, order: &Poset) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut down = BTreeSet::new();
    let batches: Vec<(u64, Vec<StationId>)> = if trace.level == TraceLevel::Full {
        trace
            .rounds
            .iter()
            .filter(|r| !r.crashes_applied.is_empty())
            .map(|r| (r.round, r.crashes_applied.clone()))
            .collect()
    } else {
        vec![(0, trace.ledger.crashed.clone())]
    };
    for (round, batch) in batches {
        for s in batch {
            if !matches!(order.crash_is_legal(&down, s), Ok(true)) {
                out.push(Violation::IllegalCrash { round, station: s });
            }
            down.insert(s);
        }
    }
    out
}

/// Writes one round record per line.
pub fn write_jsonl<W: Write>(trace: &ExecutionTrace, mut out: W) -> io::Result<()> {
    for rec in &trace.rounds {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn trace_to_jsonl(trace: &ExecutionTrace) -> String {
    let mut buf = Vec::new();
    write_jsonl(trace, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{make_strategy, NoOp, ObliviousSchedule, StrategyConfig};
    use crate::protocols::{build, ProtocolOptions};

    fn run_plain(kind: ProtocolKind, p: usize, t: usize) -> (ExecutionTrace, Metrics) {
        let channel = kind.native_channel();
        let proto = build(kind, p, t, channel, ProtocolOptions::default()).unwrap();
        run(
            proto,
            AdversarySpec::failure_free(p),
            Box::new(NoOp),
            channel,
            p,
            t,
            7,
            None,
        )
        .unwrap()
    }

    #[test]
    fn two_lists_single_station_single_task() {
        let (trace, m) = run_plain(ProtocolKind::TwoLists, 1, 1);
        assert_eq!(
            m,
            Metrics {
                work: 3,
                time: 3,
                energy: 1
            }
        );
        assert_eq!(trace.outcome, Outcome::Solved);
        assert_eq!(compute_metrics(&trace).unwrap(), m);
    }

    #[test]
    fn failure_free_runs_are_reliable() {
        for kind in ProtocolKind::ALL {
            for (p, t) in [(1, 1), (3, 7), (8, 8), (16, 5), (5, 40)] {
                let (trace, m) = run_plain(kind, p, t);
                let report = verify_reliability(&trace, t);
                assert!(report.passed(), "{kind:?} p={p} t={t}: {report:?}");
                assert_eq!(compute_metrics(&trace).unwrap(), m);
            }
        }
    }

    #[test]
    fn doctored_trace_is_caught() {
        let (mut trace, _) = run_plain(ProtocolKind::TwoLists, 2, 4);
        for rec in &mut trace.rounds {
            rec.tasks_performed.retain(|(_, x)| *x != TaskId(3));
        }
        let report = verify_reliability(&trace, 4);
        assert!(report
            .violations
            .contains(&Violation::TaskUnperformed { task: TaskId(3) }));
    }

    #[test]
    fn oblivious_request_against_chain_is_rejected() {
        let p = 3;
        let spec = AdversarySpec::linearly_ordered(p, &[StationId(1), StationId(2)]).unwrap();
        let mut schedule = BTreeMap::new();
        schedule.insert(2, vec![StationId(2)]);
        let proto = build(
            ProtocolKind::TwoLists,
            p,
            6,
            ChannelKind::NoCollisionDetection,
            Default::default(),
        )
        .unwrap();
        let (trace, _) = run(
            proto,
            spec,
            Box::new(ObliviousSchedule { schedule }),
            ChannelKind::NoCollisionDetection,
            p,
            6,
            1,
            None,
        )
        .unwrap();
        assert_eq!(trace.rounds[1].rejected.len(), 1);
        assert!(trace.rounds.iter().all(|r| r.crashes_applied.is_empty()));
        assert_eq!(trace.ledger.rejected_requests, 1);
    }

    #[test]
    fn crashed_station_work_stops_at_crash_round() {
        let p = 2;
        let spec = AdversarySpec::strongly_adaptive(p, 1).unwrap();
        let mut schedule = BTreeMap::new();
        schedule.insert(2, vec![StationId(2)]);
        let proto = build(
            ProtocolKind::TwoLists,
            p,
            4,
            ChannelKind::NoCollisionDetection,
            Default::default(),
        )
        .unwrap();
        let (trace, m) = run(
            proto,
            spec,
            Box::new(ObliviousSchedule { schedule }),
            ChannelKind::NoCollisionDetection,
            p,
            4,
            1,
            None,
        )
        .unwrap();
        assert_eq!(m.work, m.time + 2);
        assert!(verify_reliability(&trace, 4).passed());
    }

    #[test]
    fn timeout_is_reported() {
        let proto = build(
            ProtocolKind::TwoLists,
            4,
            40,
            ChannelKind::NoCollisionDetection,
            Default::default(),
        )
        .unwrap();
        let (trace, _) = run(
            proto,
            AdversarySpec::failure_free(4),
            Box::new(NoOp),
            ChannelKind::NoCollisionDetection,
            4,
            40,
            1,
            Some(5),
        )
        .unwrap();
        assert_eq!(
            trace.outcome,
            Outcome::Violation {
                reason: Violation::Timeout { round_cap: 5 }
            }
        );
    }

    #[test]
    fn big_bang_leaves_one_survivor() {
        for kind in ProtocolKind::ALL {
            let p = 6;
            let t = 9;
            let channel = kind.native_channel();
            let proto = build(kind, p, t, channel, Default::default()).unwrap();
            let strategy = make_strategy(&StrategyConfig::named("BigBang")).unwrap();
            let (trace, _) = run(
                proto,
                AdversarySpec::strongly_adaptive(p, p - 1).unwrap(),
                strategy,
                channel,
                p,
                t,
                3,
                None,
            )
            .unwrap();
            assert_eq!(trace.rounds[0].crashes_applied.len(), p - 1);
            assert!(verify_reliability(&trace, t).passed(), "{kind:?}");
        }
    }

    #[test]
    fn summary_trace_agrees_with_full() {
        let build_sim = |level| {
            let proto = build(
                ProtocolKind::Gilet,
                8,
                16,
                ChannelKind::NoCollisionDetection,
                Default::default(),
            )
            .unwrap();
            let strategy = make_strategy(&StrategyConfig::named("LoneTransmitterKiller")).unwrap();
            Simulation::new(
                proto,
                AdversarySpec::delayed(8, 7, 1).unwrap(),
                strategy,
                ChannelKind::NoCollisionDetection,
                8,
                16,
                11,
            )
            .unwrap()
            .with_trace_level(level)
            .run()
            .unwrap()
        };
        let (full, m_full) = build_sim(TraceLevel::Full);
        let (summary, m_sum) = build_sim(TraceLevel::Summary);
        assert_eq!(m_full, m_sum);
        assert!(summary.rounds.is_empty());
        assert_eq!(full.ledger, summary.ledger);
        assert_eq!(
            verify_reliability(&full, 16),
            verify_reliability(&summary, 16)
        );
    }
}
