//! Crash adversaries: the legality envelope (budget, delay, order) and the
//! attack strategies that act inside it.

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::Feedback;
use crate::engine::RoundRecord;
use crate::ids::{all_stations, StationId};
use crate::math::{pick_index, strategy_rng, Prob};
use crate::poset::{Poset, PosetError};
use crate::protocols::RoundAction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdversaryLabel {
    StronglyAdaptive,
    WeaklyAdaptive,
    LinearlyOrdered,
    KChainOrdered(usize),
    KThickOrdered(usize),
    Oblivious,
    #[serde(rename = "cRD")]
    DelayedReaction(u64),
}

impl AdversaryLabel {
    pub fn name(&self) -> String {
        match self {
            AdversaryLabel::StronglyAdaptive => "StronglyAdaptive".into(),
            AdversaryLabel::WeaklyAdaptive => "WeaklyAdaptive".into(),
            AdversaryLabel::LinearlyOrdered => "LinearlyOrdered".into(),
            AdversaryLabel::KChainOrdered(k) => format!("KChainOrdered({k})"),
            AdversaryLabel::KThickOrdered(k) => format!("KThickOrdered({k})"),
            AdversaryLabel::Oblivious => "Oblivious".into(),
            AdversaryLabel::DelayedReaction(c) => format!("cRD({c})"),
        }
    }

    /// Labels whose fault-prone set is chosen online, modeled as an
    /// antichain over every station.
    pub fn chooses_online(&self) -> bool {
        matches!(
            self,
            AdversaryLabel::StronglyAdaptive
                | AdversaryLabel::Oblivious
                | AdversaryLabel::DelayedReaction(_)
        )
    }

    pub fn delay(&self) -> u64 {
        match self {
            AdversaryLabel::DelayedReaction(c) => *c,
            _ => 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("budget f={f} must be at most p-1={}", p.saturating_sub(1))]
    BudgetTooLarge { f: usize, p: usize },
    #[error("{0} is not a station")]
    UnknownStation(StationId),
    #[error("order has {size} fault-prone stations but the budget is {f}")]
    OrderTooLarge { size: usize, f: usize },
    #[error("{label} needs {expected}")]
    WrongShape { label: String, expected: String },
    #[error("{label} implies delay {expected}, got {got}")]
    DelayMismatch {
        label: String,
        expected: u64,
        got: u64,
    },
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("bad parameters for strategy `{name}`: {reason}")]
    BadParams { name: String, reason: String },
    #[error(transparent)]
    Poset(#[from] PosetError),
}

/// Legality envelope: budget, reaction delay and the order over the
/// fault-prone stations.
#[derive(Clone, Debug, PartialEq)]
pub struct AdversarySpec {
    pub label: AdversaryLabel,
    pub f: usize,
    pub delay: u64,
    pub order: Poset,
}

impl AdversarySpec {
    pub fn new(
        label: AdversaryLabel,
        f: usize,
        delay: u64,
        order: Poset,
        p: usize,
    ) -> Result<Self, AdversaryError> {
        if f + 1 > p.max(1) {
            return Err(AdversaryError::BudgetTooLarge { f, p });
        }
        if let Some(&s) = order
            .elements()
            .iter()
            .find(|s| s.0 == 0 || s.0 as usize > p)
        {
            return Err(AdversaryError::UnknownStation(s));
        }
        if delay != label.delay() {
            return Err(AdversaryError::DelayMismatch {
                label: label.name(),
                expected: label.delay(),
                got: delay,
            });
        }
        let shape = |expected: &str| AdversaryError::WrongShape {
            label: label.name(),
            expected: expected.to_string(),
        };
        if !label.chooses_online() && order.len() > f {
            return Err(AdversaryError::OrderTooLarge {
                size: order.len(),
                f,
            });
        }
        match label {
            AdversaryLabel::StronglyAdaptive
            | AdversaryLabel::Oblivious
            | AdversaryLabel::DelayedReaction(_)
            | AdversaryLabel::WeaklyAdaptive => {
                if !order.covers().is_empty() {
                    return Err(shape("an antichain order"));
                }
            }
            AdversaryLabel::LinearlyOrdered => {
                if order.thickness() > 1 {
                    return Err(shape("a chain order"));
                }
            }
            AdversaryLabel::KChainOrdered(k) => {
                if !is_disjoint_chains(&order) || order.thickness() > k {
                    return Err(shape(&format!("at most {k} disjoint chains")));
                }
            }
            AdversaryLabel::KThickOrdered(k) => {
                if order.thickness() > k {
                    return Err(shape(&format!("thickness at most {k}")));
                }
            }
        }
        Ok(AdversarySpec {
            label,
            f,
            delay,
            order,
        })
    }

    /// No crashes at all.
    pub fn failure_free(p: usize) -> Self {
        AdversarySpec {
            label: AdversaryLabel::StronglyAdaptive,
            f: 0,
            delay: 0,
            order: Poset::antichain_of(&all_stations(p)),
        }
    }

    pub fn strongly_adaptive(p: usize, f: usize) -> Result<Self, AdversaryError> {
        let order = Poset::antichain_of(&all_stations(p));
        AdversarySpec::new(AdversaryLabel::StronglyAdaptive, f, 0, order, p)
    }

    pub fn delayed(p: usize, f: usize, c: u64) -> Result<Self, AdversaryError> {
        let order = Poset::antichain_of(&all_stations(p));
        AdversarySpec::new(AdversaryLabel::DelayedReaction(c), f, c, order, p)
    }

    pub fn weakly_adaptive(p: usize, fault_prone: &[StationId]) -> Result<Self, AdversaryError> {
        let order = Poset::antichain_of(fault_prone);
        AdversarySpec::new(
            AdversaryLabel::WeaklyAdaptive,
            fault_prone.len(),
            0,
            order,
            p,
        )
    }

    pub fn linearly_ordered(p: usize, sequence: &[StationId]) -> Result<Self, AdversaryError> {
        let order = Poset::chain_of(sequence)?;
        AdversarySpec::new(AdversaryLabel::LinearlyOrdered, sequence.len(), 0, order, p)
    }

    pub fn is_fault_prone(&self, s: StationId) -> bool {
        self.order.contains(s)
    }
}

fn is_disjoint_chains(order: &Poset) -> bool {
    let mut preds = BTreeMap::new();
    let mut succs = BTreeMap::new();
    for &(a, b) in order.covers() {
        *succs.entry(a).or_insert(0) += 1;
        *preds.entry(b).or_insert(0) += 1;
    }
    preds.values().chain(succs.values()).all(|&n| n <= 1)
}

/// Uncrashed fault-prone stations whose predecessors are all crashed; empty
/// once the budget is spent.
pub fn legal_candidates(
    spec: &AdversarySpec,
    crashed_so_far: &BTreeSet<StationId>,
    budget_used: usize,
) -> Vec<StationId> {
    if budget_used >= spec.f {
        return Vec::new();
    }
    let order = &spec.order;
    let mut crashed = FixedBitSet::with_capacity(order.len());
    for s in crashed_so_far {
        if let Some(i) = order.index_of(*s) {
            crashed.insert(i);
        }
    }
    (0..order.len())
        .filter(|&i| !crashed.contains(i) && order.legal_by_index(&crashed, i))
        .map(|i| order.elements()[i])
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashRequest {
    pub target: StationId,
    pub submitted_round: u64,
    pub effective_round: u64,
}

/// What a strategy may see when deciding at `round`.
pub struct ObservableHistory<'a> {
    pub round: u64,
    pub delay: u64,
    /// Completed rounds, ascending, ending at `round - 1`. Only a recent
    /// window is kept.
    pub records: &'a [RoundRecord],
    /// Intents of the current round; present only without delay.
    pub current_intents: Option<&'a BTreeMap<StationId, RoundAction>>,
    /// The station the protocol depends on right now (e.g. the leader).
    pub focal_station: Option<StationId>,
    /// Crashed or already scheduled to crash.
    pub doomed: &'a BTreeSet<StationId>,
    pub budget_left: usize,
    pub order: &'a Poset,
}

impl<'a> ObservableHistory<'a> {
    /// Last round whose intents may be read.
    pub fn intent_visibility_horizon(&self) -> u64 {
        self.round.saturating_sub(self.delay)
    }

    pub fn intents_at(&self, r: u64) -> Option<&'a BTreeMap<StationId, RoundAction>> {
        if r > self.intent_visibility_horizon() {
            return None;
        }
        if r == self.round {
            return self.current_intents;
        }
        self.record(r).map(|rec| &rec.intents)
    }

    pub fn feedback_at(&self, r: u64) -> Option<Feedback> {
        self.record(r).map(|rec| rec.feedback)
    }

    fn record(&self, r: u64) -> Option<&'a RoundRecord> {
        let records: &'a [RoundRecord] = self.records;
        records.iter().rev().find(|rec| rec.round == r)
    }

    /// A request against `target` submitted now.
    pub fn request(&self, target: StationId) -> CrashRequest {
        CrashRequest {
            target,
            submitted_round: self.round,
            effective_round: self.round + self.delay,
        }
    }
}

pub trait Strategy: Send {
    fn name(&self) -> &'static str;

    /// Oblivious strategies fix their choices in advance; illegal requests
    /// from them are dropped instead of failing the run.
    fn oblivious(&self) -> bool {
        false
    }

    fn decide(
        &mut self,
        view: &ObservableHistory<'_>,
        candidates: &[StationId],
    ) -> Vec<CrashRequest>;
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
}

impl StrategyConfig {
    pub fn named(name: &str) -> Self {
        StrategyConfig {
            name: name.to_string(),
            params: serde_json::Value::Null,
            seed: 0,
        }
    }
}

pub struct NoOp;

impl Strategy for NoOp {
    fn name(&self) -> &'static str {
        "NoOp"
    }

    fn decide(&mut self, _: &ObservableHistory<'_>, _: &[StationId]) -> Vec<CrashRequest> {
        Vec::new()
    }
}

/// Fixed map from submission round to targets.
pub struct ObliviousSchedule {
    pub schedule: BTreeMap<u64, Vec<StationId>>,
}

impl Strategy for ObliviousSchedule {
    fn name(&self) -> &'static str {
        "ObliviousSchedule"
    }

    fn oblivious(&self) -> bool {
        true
    }

    fn decide(&mut self, view: &ObservableHistory<'_>, _: &[StationId]) -> Vec<CrashRequest> {
        self.schedule
            .get(&view.round)
            .map(|targets| targets.iter().map(|&s| view.request(s)).collect())
            .unwrap_or_default()
    }
}

/// Crashes any station about to transmit alone. With a delay it targets the
/// lone transmitter of the latest round whose intents it may read.
pub struct LoneTransmitterKiller;

impl Strategy for LoneTransmitterKiller {
    fn name(&self) -> &'static str {
        "LoneTransmitterKiller"
    }

    fn decide(
        &mut self,
        view: &ObservableHistory<'_>,
        candidates: &[StationId],
    ) -> Vec<CrashRequest> {
        let horizon = view.intent_visibility_horizon();
        let Some(intents) = view.intents_at(horizon) else {
            return Vec::new();
        };
        // In a past round, stations crashed that round never transmitted.
        let crashed_then = view
            .record(horizon)
            .map(|rec| rec.crashes_applied.as_slice())
            .unwrap_or(&[]);
        let mut transmitters = intents
            .iter()
            .filter(|(s, a)| a.payload().is_some() && !crashed_then.contains(s));
        match (transmitters.next(), transmitters.next()) {
            (Some((&s, _)), None) if candidates.contains(&s) && !view.doomed.contains(&s) => {
                vec![view.request(s)]
            }
            _ => Vec::new(),
        }
    }
}

/// Crashes the focal station (the leader), first crashing whatever still
/// precedes it in the order, all in one batch. Does nothing if the budget
/// cannot cover the whole batch.
pub struct LeaderHunter;

impl Strategy for LeaderHunter {
    fn name(&self) -> &'static str {
        "LeaderHunter"
    }

    fn decide(&mut self, view: &ObservableHistory<'_>, _: &[StationId]) -> Vec<CrashRequest> {
        let Some(leader) = view.focal_station else {
            return Vec::new();
        };
        if !view.order.contains(leader) || view.doomed.contains(&leader) {
            return Vec::new();
        }
        let mut batch: Vec<StationId> = view
            .order
            .predecessors(leader)
            .into_iter()
            .filter(|s| !view.doomed.contains(s))
            .collect();
        batch.push(leader);
        if batch.len() > view.budget_left {
            return Vec::new();
        }
        let rank: BTreeMap<StationId, usize> = view
            .order
            .topological_order()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        batch.sort_by_key(|s| rank[s]);
        batch.into_iter().map(|s| view.request(s)).collect()
    }
}

/// Each round, with probability `rate`, crashes one uniformly chosen
/// candidate.
pub struct FrontierRandom {
    rate: Prob,
    rng: ChaCha8Rng,
}

impl FrontierRandom {
    pub fn new(rate: f64, seed: u64) -> Self {
        let scale = 1u64 << 32;
        let num = (rate.clamp(0.0, 1.0) * scale as f64).round() as u64;
        FrontierRandom {
            rate: Prob::new(num, scale),
            rng: strategy_rng(seed),
        }
    }
}

impl Strategy for FrontierRandom {
    fn name(&self) -> &'static str {
        "FrontierRandom"
    }

    fn decide(
        &mut self,
        view: &ObservableHistory<'_>,
        candidates: &[StationId],
    ) -> Vec<CrashRequest> {
        let fire = self.rng.next_u64();
        let pick = self.rng.next_u64();
        let open: Vec<StationId> = candidates
            .iter()
            .copied()
            .filter(|s| !view.doomed.contains(s))
            .collect();
        if open.is_empty() || !self.rate.heads(fire) {
            return Vec::new();
        }
        vec![view.request(open[pick_index(pick, open.len())])]
    }
}

/// Spends the whole budget at once, at round `max(round, 1)`.
pub struct BigBang {
    pub round: u64,
    fired: bool,
}

impl BigBang {
    pub fn new(round: u64) -> Self {
        BigBang {
            round,
            fired: false,
        }
    }
}

impl Strategy for BigBang {
    fn name(&self) -> &'static str {
        "BigBang"
    }

    fn decide(&mut self, view: &ObservableHistory<'_>, _: &[StationId]) -> Vec<CrashRequest> {
        if self.fired || view.round < self.round.max(1) {
            return Vec::new();
        }
        self.fired = true;
        // A prefix of a linear extension is a legal batch.
        view.order
            .topological_order()
            .into_iter()
            .filter(|s| !view.doomed.contains(s))
            .take(view.budget_left)
            .map(|s| view.request(s))
            .collect()
    }
}

pub fn built_in_strategies() -> &'static [&'static str] {
    &[
        "NoOp",
        "ObliviousSchedule",
        "LoneTransmitterKiller",
        "LeaderHunter",
        "FrontierRandom",
        "BigBang",
    ]
}

#[derive(Deserialize)]
struct ScheduleParams {
    #[serde(default)]
    schedule: BTreeMap<u64, Vec<StationId>>,
}

#[derive(Deserialize)]
struct RateParams {
    #[serde(default = "default_rate")]
    rate: f64,
}

fn default_rate() -> f64 {
    0.1
}

#[derive(Deserialize)]
struct RoundParams {
    #[serde(default)]
    round: u64,
}

fn params<T: for<'de> Deserialize<'de>>(config: &StrategyConfig) -> Result<T, AdversaryError> {
    let value = match &config.params {
        serde_json::Value::Null => serde_json::Value::Object(Default::default()),
        v => v.clone(),
    };
    serde_json::from_value(value).map_err(|e| AdversaryError::BadParams {
        name: config.name.clone(),
        reason: e.to_string(),
    })
}

pub fn make_strategy(config: &StrategyConfig) -> Result<Box<dyn Strategy>, AdversaryError> {
    Ok(match config.name.as_str() {
        "NoOp" => Box::new(NoOp),
        "ObliviousSchedule" => {
            let ScheduleParams { schedule } = params(config)?;
            Box::new(ObliviousSchedule { schedule })
        }
        "LoneTransmitterKiller" => Box::new(LoneTransmitterKiller),
        "LeaderHunter" => Box::new(LeaderHunter),
        "FrontierRandom" => {
            let RateParams { rate } = params(config)?;
            Box::new(FrontierRandom::new(rate, config.seed))
        }
        "BigBang" => {
            let RoundParams { round } = params(config)?;
            Box::new(BigBang::new(round))
        }
        other => return Err(AdversaryError::UnknownStrategy(other.to_string())),
    })
}
