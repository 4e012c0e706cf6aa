//! ROBAL: Two-Lists blocks interleaved with a randomized test that promotes
//! stations which are still alive to the front of STATIONS.

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::two_lists::{CoreStatus, TwoListsCore};
use super::{everyone, Confirmer, Protocol, ProtocolEvent, ProtocolKind, RoundAction, SharedView};
use crate::channel::{Feedback, Payload};
use crate::ids::{StationId, TaskId};
use crate::math::{ceil_log2, ceil_sqrt, CoinBank, Prob};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobalOptions {
    /// Go straight to the main loop even when `log2 p > e^(sqrt(t)/32)`.
    /// At simulable sizes that condition holds whenever `p^2 > t`, so this
    /// is the only way to exercise the main loop.
    pub skip_saturation: bool,
}

/// Rounds of one mix-and-test call: `ceil(sqrt t) * ceil(log2 p)`.
pub fn mix_and_test_trials(p: usize, t: usize) -> usize {
    (ceil_sqrt(t as u64) as usize * ceil_log2(p as u64) as usize).max(1)
}

#[derive(Clone, Debug)]
struct Mix {
    i: u32,
    rounds_left: usize,
    promoted: FixedBitSet,
    promotions: u64,
    heard: usize,
}

#[derive(Clone, Debug)]
enum Stage {
    TwoLists,
    Saturate { done: usize },
    Confirm { i: u32 },
    Mix(Mix),
    Block { i: u32 },
    Halting,
}

#[derive(Clone, Debug)]
pub struct Robal {
    p: usize,
    t: usize,
    core: TwoListsCore,
    stage: Stage,
    pending: Vec<ProtocolEvent>,
    halted: bool,
}

impl Robal {
    pub fn new(p: usize, t: usize, options: RobalOptions) -> Self {
        let mut robal = Robal {
            p,
            t,
            core: TwoListsCore::new(p, t),
            stage: Stage::TwoLists,
            pending: Vec::new(),
            halted: false,
        };
        let log_p = (p as f64).log2();
        let saturate = log_p > ((t as f64).sqrt() / 32.0).exp();
        if p * p <= t {
            let ev = robal.core.begin_epoch(None);
            robal.pending.push(ev);
        } else if saturate && !options.skip_saturation {
            robal.stage = Stage::Saturate { done: 0 };
        } else {
            robal.loop_head(0);
        }
        robal
    }

    fn sqrt_t(&self) -> usize {
        ceil_sqrt(self.t as u64) as usize
    }

    fn log_p(&self) -> u32 {
        ceil_log2(self.p as u64)
    }

    fn loop_head(&mut self, i: u32) {
        let p = self.p as u128;
        let few_left = p * p <= (self.t as u128) << (2 * i);
        if i >= self.log_p() || few_left {
            self.stage = Stage::TwoLists;
            let ev = self.core.begin_epoch(None);
            self.pending.push(ev);
        } else {
            self.stage = Stage::Mix(Mix {
                i,
                rounds_left: mix_and_test_trials(self.p, self.t),
                promoted: FixedBitSet::with_capacity(self.p),
                promotions: 0,
                heard: 0,
            });
        }
    }

    fn start_block(&mut self, i: u32) {
        self.stage = Stage::Block { i };
        let ev = self.core.begin_epoch(Some(self.sqrt_t()));
        self.pending.push(ev);
    }

    /// Which main-loop stage is running, for tests.
    pub fn stage_name(&self) -> &'static str {
        match self.stage {
            Stage::TwoLists => "two_lists",
            Stage::Saturate { .. } => "saturate",
            Stage::Confirm { .. } => "confirm_work",
            Stage::Mix(_) => "mix_and_test",
            Stage::Block { .. } => "block",
            Stage::Halting => "halting",
        }
    }
}

impl Protocol for Robal {
    fn kind(&self) -> ProtocolKind {
        ProtocolKind::Robal
    }

    fn intents(
        &mut self,
        round: u64,
        live: &[StationId],
        coins: &mut CoinBank,
    ) -> Vec<(StationId, RoundAction)> {
        match &self.stage {
            Stage::TwoLists | Stage::Block { .. } => self.core.intents(live),
            Stage::Saturate { done } => {
                everyone(live, RoundAction::PerformTask(TaskId::from_slot(*done)))
            }
            Stage::Confirm { i } => {
                let prob = Prob::new(1u64 << i, self.p as u64);
                live.iter()
                    .map(|&s| {
                        let action = if coins.toss(s, round, prob) {
                            RoundAction::Transmit(Payload::BIT)
                        } else {
                            RoundAction::Listen
                        };
                        (s, action)
                    })
                    .collect()
            }
            Stage::Mix(mix) => {
                let scale = 1u64 << mix.i;
                let coin = self.p as i128 - (mix.promotions * scale) as i128;
                let prob = Prob::inverse_of(coin, scale);
                let mut eligible = FixedBitSet::with_capacity(self.p);
                for s in &self.core.stations {
                    eligible.insert(s.slot());
                }
                eligible.difference_with(&mix.promoted);
                live.iter()
                    .map(|&s| {
                        let action = if eligible.contains(s.slot()) && coins.toss(s, round, prob) {
                            RoundAction::Transmit(Payload::station(s, self.p))
                        } else {
                            RoundAction::Listen
                        };
                        (s, action)
                    })
                    .collect()
            }
            Stage::Halting => everyone(live, RoundAction::Halt(None)),
        }
    }

    fn observe(&mut self, _round: u64, feedback: Feedback) -> Vec<ProtocolEvent> {
        let mut events = std::mem::take(&mut self.pending);
        match &mut self.stage {
            Stage::TwoLists => match self.core.observe(feedback, &mut events) {
                CoreStatus::EpochEnded { .. } => events.push(self.core.begin_epoch(None)),
                CoreStatus::Halted => self.halted = true,
                CoreStatus::Running => {}
            },
            Stage::Block { i } => {
                let i = *i;
                match self.core.observe(feedback, &mut events) {
                    CoreStatus::EpochEnded { heard } => {
                        events.push(ProtocolEvent::BlockEnd { heard });
                        if 16 * heard * heard < self.t {
                            self.loop_head(i + 1);
                        } else {
                            self.start_block(i);
                        }
                    }
                    CoreStatus::Halted => self.halted = true,
                    CoreStatus::Running => {}
                }
            }
            Stage::Saturate { done } => {
                *done += 1;
                if *done >= self.t {
                    self.stage = Stage::Confirm { i: 0 };
                }
            }
            Stage::Confirm { i } => {
                if feedback.is_noisy() {
                    let tasks = self.core.tasks.clear();
                    events.push(ProtocolEvent::Confirmed {
                        by: Confirmer::Everyone,
                        tasks,
                    });
                    self.stage = Stage::Halting;
                } else {
                    *i = (*i + 1) % (ceil_log2(self.p as u64) + 1);
                }
            }
            Stage::Mix(mix) => {
                if let Feedback::Single(m) = feedback {
                    let w = StationId(m.value);
                    if let Some(pos) = self.core.stations.iter().position(|&s| s == w) {
                        self.core.stations.remove(pos);
                        self.core.stations.insert(0, w);
                    }
                    mix.promoted.insert(w.slot());
                    mix.promotions += 1;
                    mix.heard += 1;
                    events.push(ProtocolEvent::Promoted { station: w });
                }
                mix.rounds_left -= 1;
                if mix.rounds_left == 0 {
                    let (i, heard) = (mix.i, mix.heard);
                    let passed = heard * heard >= self.t;
                    events.push(ProtocolEvent::MixAndTest { i, heard, passed });
                    if passed {
                        self.start_block(i);
                    } else {
                        self.loop_head(i + 1);
                    }
                }
            }
            Stage::Halting => {
                self.halted = true;
                events.push(ProtocolEvent::Halted);
            }
        }
        events
    }

    fn focal_station(&self) -> Option<StationId> {
        match self.stage {
            Stage::TwoLists | Stage::Block { .. } => self.core.scheduled(),
            _ => self.core.stations.first().copied(),
        }
    }

    fn shared_view(&self) -> SharedView {
        self.core.view()
    }

    fn halted(&self) -> bool {
        self.halted
    }
}
