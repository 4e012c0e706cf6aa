//! JSON configuration for single runs and adversaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{
    make_strategy, AdversaryError, AdversaryLabel, AdversarySpec, Strategy, StrategyConfig,
};
use crate::channel::ChannelKind;
use crate::engine::{EngineError, ExecutionTrace, Metrics, Simulation, TraceLevel};
use crate::ids::{all_stations, StationId};
use crate::poset::{FamilyLiteral, Poset, PosetError, PosetFamily, PosetLiteral};
use crate::protocols::{build, ProtocolError, ProtocolKind, ProtocolOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Poset(#[from] PosetError),
}

/// Adversary label without its parameter; `k` and the delay are separate
/// fields of [`AdversaryConfig`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelName {
    StronglyAdaptive,
    WeaklyAdaptive,
    LinearlyOrdered,
    KChainOrdered,
    KThickOrdered,
    Oblivious,
    #[serde(rename = "cRD")]
    DelayedReaction,
}

fn noop() -> StrategyConfig {
    StrategyConfig::named("NoOp")
}

fn strongly_adaptive() -> LabelName {
    LabelName::StronglyAdaptive
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    #[serde(default = "strongly_adaptive")]
    pub label: LabelName,
    #[serde(default)]
    pub f: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<PosetLiteral>,
    /// Fault-prone stations for ordered adversaries; the lowest `f` ids if
    /// omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_prone: Option<Vec<StationId>>,
    #[serde(default = "noop")]
    pub strategy: StrategyConfig,
}

impl Default for AdversaryConfig {
    fn default() -> Self {
        AdversaryConfig {
            label: LabelName::StronglyAdaptive,
            f: 0,
            k: None,
            delay: None,
            order: None,
            fault_prone: None,
            strategy: noop(),
        }
    }
}

impl AdversaryConfig {
    pub fn new(label: LabelName, f: usize, strategy: &str) -> Self {
        AdversaryConfig {
            label,
            f,
            strategy: StrategyConfig::named(strategy),
            ..Default::default()
        }
    }

    pub fn label(&self) -> Result<AdversaryLabel, ConfigError> {
        let need_k = || {
            self.k
                .ok_or_else(|| ConfigError::Invalid(format!("{:?} needs k", self.label)))
        };
        Ok(match self.label {
            LabelName::StronglyAdaptive => AdversaryLabel::StronglyAdaptive,
            LabelName::WeaklyAdaptive => AdversaryLabel::WeaklyAdaptive,
            LabelName::LinearlyOrdered => AdversaryLabel::LinearlyOrdered,
            LabelName::KChainOrdered => AdversaryLabel::KChainOrdered(need_k()?),
            LabelName::KThickOrdered => AdversaryLabel::KThickOrdered(need_k()?),
            LabelName::Oblivious => AdversaryLabel::Oblivious,
            LabelName::DelayedReaction => AdversaryLabel::DelayedReaction(self.delay.unwrap_or(1)),
        })
    }

    /// Builds the legality envelope for `p` stations.
    pub fn spec(&self, p: usize) -> Result<AdversarySpec, ConfigError> {
        let label = self.label()?;
        let delay = self.delay.unwrap_or(label.delay());
        let order = if label.chooses_online() {
            match &self.order {
                Some(lit) => lit.resolve(&all_stations(p))?,
                None => Poset::antichain_of(&all_stations(p)),
            }
        } else {
            let fault_prone = match &self.fault_prone {
                Some(ids) => ids.clone(),
                None => all_stations(self.f.min(p)),
            };
            match &self.order {
                Some(lit) => lit.resolve(&fault_prone)?,
                None => {
                    let f = fault_prone.len();
                    let family = match label {
                        AdversaryLabel::LinearlyOrdered => PosetFamily::Chain { f },
                        AdversaryLabel::KChainOrdered(k) | AdversaryLabel::KThickOrdered(k) => {
                            PosetFamily::even_chains(f, k)
                        }
                        _ => PosetFamily::Antichain { f },
                    };
                    crate::poset::generate_over(&family, &fault_prone)?
                }
            }
        };
        Ok(AdversarySpec::new(label, self.f, delay, order, p)?)
    }

    pub fn strategy(&self) -> Result<Box<dyn Strategy>, ConfigError> {
        Ok(make_strategy(&self.strategy)?)
    }
}

/// One simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub protocol: ProtocolKind,
    /// Defaults to the protocol's own channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelKind>,
    pub p: usize,
    pub t: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub adversary: AdversaryConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_cap: Option<u64>,
    #[serde(default)]
    pub options: ProtocolOptions,
    #[serde(default)]
    pub trace: TraceLevel,
}

impl RunConfig {
    pub fn new(protocol: ProtocolKind, p: usize, t: usize, seed: u64) -> Self {
        RunConfig {
            protocol,
            channel: None,
            p,
            t,
            seed,
            adversary: AdversaryConfig::default(),
            round_cap: None,
            options: ProtocolOptions::default(),
            trace: TraceLevel::Full,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn channel(&self) -> ChannelKind {
        self.channel.unwrap_or(self.protocol.native_channel())
    }

    pub fn simulation(&self) -> Result<Simulation, ConfigError> {
        if self.p == 0 || self.t == 0 {
            return Err(ConfigError::Invalid(format!(
                "need p >= 1 and t >= 1, got p={}, t={}",
                self.p, self.t
            )));
        }
        let channel = self.channel();
        let protocol = build(self.protocol, self.p, self.t, channel, self.options)?;
        let spec = self.adversary.spec(self.p)?;
        let strategy = self.adversary.strategy()?;
        let mut sim =
            Simulation::new(protocol, spec, strategy, channel, self.p, self.t, self.seed)?
                .with_trace_level(self.trace);
        if let Some(cap) = self.round_cap {
            sim = sim.with_round_cap(cap)?;
        }
        Ok(sim)
    }

    pub fn run(&self) -> Result<(ExecutionTrace, Metrics), ConfigError> {
        Ok(self.simulation()?.run()?)
    }
}

/// Structural summary printed by `poset-check`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosetSummary {
    pub elements: usize,
    pub thickness: usize,
    pub chains: usize,
    pub max_antichain: Vec<StationId>,
    pub chain_cover: Vec<Vec<StationId>>,
}

impl PosetSummary {
    pub fn of(poset: &Poset) -> Result<Self, ConfigError> {
        let antichain = poset.max_antichain()?;
        let cover = poset.min_chain_cover()?;
        Ok(PosetSummary {
            elements: poset.len(),
            thickness: antichain.len(),
            chains: cover.len(),
            max_antichain: antichain.into_iter().collect(),
            chain_cover: cover.chains,
        })
    }
}

/// Reads a poset file: an explicit literal, or a family literal with a
/// `size` field giving the number of stations (ids `1..=size`).
pub fn parse_poset_file(text: &str) -> Result<Poset, ConfigError> {
    let mut value: serde_json::Value = serde_json::from_str(text)?;
    let size =
        match value.as_object_mut().and_then(|o| o.remove("size")) {
            Some(v) => Some(v.as_u64().ok_or_else(|| {
                ConfigError::Invalid("`size` must be a non-negative integer".into())
            })? as usize),
            None => None,
        };
    let literal: PosetLiteral = serde_json::from_value(value)?;
    let size = match (&literal, size) {
        (_, Some(size)) => size,
        (PosetLiteral::Explicit { .. }, None) => 0,
        (
            PosetLiteral::Family(FamilyLiteral::KChains {
                lengths: Some(l), ..
            }),
            None,
        ) => l.iter().sum(),
        (PosetLiteral::Family(_), None) => {
            return Err(ConfigError::Invalid(
                "family literals need a `size` field".into(),
            ))
        }
    };
    Ok(literal.resolve(&all_stations(size))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_schema() {
        let cfg = RunConfig::from_json(
            r#"{"protocol":"grubtech","p":8,"t":8,"seed":3,
                "adversary":{"label":"WeaklyAdaptive","f":4,"delay":0,
                  "order":{"family":"antichain"},
                  "strategy":{"name":"LeaderHunter","params":{},"seed":9}}}"#,
        )
        .unwrap();
        let spec = cfg.adversary.spec(8).unwrap();
        assert_eq!(spec.order.len(), 4);
        assert!(spec.is_fault_prone(StationId(1)));
        assert!(!spec.is_fault_prone(StationId(5)));
        let (trace, _) = cfg.run().unwrap();
        assert!(trace.outcome.is_success());
    }

    #[test]
    fn delayed_label_and_k_chains() {
        let mut adv = AdversaryConfig::new(LabelName::DelayedReaction, 3, "LoneTransmitterKiller");
        assert_eq!(adv.spec(4).unwrap().delay, 1);
        adv.delay = Some(2);
        assert_eq!(adv.spec(4).unwrap().delay, 2);
        let mut chains = AdversaryConfig::new(LabelName::KChainOrdered, 6, "LeaderHunter");
        assert!(matches!(chains.spec(8), Err(ConfigError::Invalid(_))));
        chains.k = Some(2);
        let spec = chains.spec(8).unwrap();
        assert_eq!(spec.order.thickness(), 2);
    }

    #[test]
    fn rejects_wrong_channel() {
        let mut cfg = RunConfig::new(ProtocolKind::GroupsTogether, 4, 4, 0);
        cfg.channel = Some(ChannelKind::NoCollisionDetection);
        assert!(matches!(cfg.run(), Err(ConfigError::Protocol(_))));
    }

    #[test]
    fn poset_files() {
        let chain = parse_poset_file(r#"{"family":"chain","size":5}"#).unwrap();
        let chains = parse_poset_file(r#"{"family":"k_chains","lengths":[3,2]}"#).unwrap();
        assert_eq!((chains.len(), chains.thickness()), (5, 2));
        let summary = PosetSummary::of(&chain).unwrap();
        assert_eq!((summary.thickness, summary.chains), (1, 1));
        let explicit = parse_poset_file(r#"{"elements":[1,2,3],"covers":[[1,3]]}"#).unwrap();
        assert_eq!(PosetSummary::of(&explicit).unwrap().thickness, 2);
        assert!(matches!(
            parse_poset_file(r#"{"family":"antichain"}"#),
            Err(ConfigError::Invalid(_))
        ));
    }
}
