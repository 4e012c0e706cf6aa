//! Deterministic Two-Lists: every station works on its own segment, then the
//! stations take turns confirming their progress with a one-bit message.

use fixedbitset::FixedBitSet;

use super::board::{segments, EpochCursor, TaskList};
use super::{everyone, Confirmer, Protocol, ProtocolEvent, ProtocolKind, RoundAction, SharedView};
use crate::channel::{Feedback, Payload};
use crate::ids::{all_stations, StationId, TaskId};
use crate::math::CoinBank;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Perform,
    Transmit,
    Update,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CoreStatus {
    Running,
    EpochEnded { heard: usize },
    Halted,
}

/// The Two-Lists phase machine, reusable inside ROBAL.
#[derive(Clone, Debug)]
pub(crate) struct TwoListsCore {
    pub stations: Vec<StationId>,
    pub tasks: TaskList,
    performed: Vec<FixedBitSet>,
    cursor: Vec<TaskId>,
    epoch: EpochCursor,
    order: Vec<StationId>,
    step: Step,
    plan: Vec<Option<TaskId>>,
    pub halted: bool,
}

impl TwoListsCore {
    pub fn new(p: usize, t: usize) -> Self {
        TwoListsCore {
            stations: all_stations(p),
            tasks: TaskList::full(t),
            performed: vec![FixedBitSet::with_capacity(t); p],
            cursor: vec![TaskId(1); p],
            epoch: EpochCursor::new(0, t, None),
            order: Vec::new(),
            step: Step::Perform,
            plan: vec![None; p],
            halted: false,
        }
    }

    /// Starts an epoch over the current lists, optionally capped at `limit`
    /// phases.
    pub fn begin_epoch(&mut self, limit: Option<usize>) -> ProtocolEvent {
        let m = self.tasks.len();
        self.order = self.stations.clone();
        self.epoch = EpochCursor::new(self.order.len(), m, limit);
        self.step = Step::Perform;
        if m > 0 {
            for (&s, (offset, _)) in self.order.iter().zip(segments(self.order.len(), m)) {
                self.cursor[s.slot()] = self.tasks.at(offset);
            }
        }
        ProtocolEvent::EpochStart {
            units: self.order.len(),
            tasks: m,
            dense: self.epoch.dense,
        }
    }

    pub fn scheduled(&self) -> Option<StationId> {
        self.order.get(self.epoch.slot).copied()
    }

    pub fn intents(&mut self, live: &[StationId]) -> Vec<(StationId, RoundAction)> {
        match self.step {
            Step::Perform => {
                for &s in &self.stations {
                    let done = &self.performed[s.slot()];
                    self.plan[s.slot()] = self
                        .tasks
                        .next_from(self.cursor[s.slot()], |x| done.contains(x.slot()));
                }
                live.iter()
                    .map(|&s| {
                        // Only stations still on STATIONS have a plan.
                        let action = match self.plan[s.slot()] {
                            Some(x) => RoundAction::PerformTask(x),
                            None => RoundAction::Listen,
                        };
                        (s, action)
                    })
                    .collect()
            }
            Step::Transmit => {
                let scheduled = self.scheduled();
                live.iter()
                    .map(|&s| {
                        let action = if Some(s) == scheduled {
                            RoundAction::Transmit(Payload::BIT)
                        } else {
                            RoundAction::Listen
                        };
                        (s, action)
                    })
                    .collect()
            }
            Step::Update if self.tasks.is_empty() => everyone(live, RoundAction::Halt(None)),
            Step::Update => everyone(live, RoundAction::Listen),
        }
    }

    pub fn observe(&mut self, feedback: Feedback, events: &mut Vec<ProtocolEvent>) -> CoreStatus {
        match self.step {
            Step::Perform => {
                for i in 0..self.stations.len() {
                    let s = self.stations[i];
                    if let Some(x) = self.plan[s.slot()].take() {
                        self.performed[s.slot()].insert(x.slot());
                        self.cursor[s.slot()] = self.tasks.successor(x);
                    }
                }
                self.step = Step::Transmit;
                CoreStatus::Running
            }
            Step::Transmit => {
                let Some(w) = self.scheduled() else {
                    self.step = Step::Update;
                    return CoreStatus::Running;
                };
                if feedback.is_noisy() {
                    self.epoch.heard += 1;
                    let done = self.performed[w.slot()].clone();
                    let tasks = self.tasks.remove_set(&done);
                    events.push(ProtocolEvent::Confirmed {
                        by: Confirmer::Station(w),
                        tasks,
                    });
                } else if let Some(pos) = self.stations.iter().position(|&s| s == w) {
                    self.stations.remove(pos);
                    events.push(ProtocolEvent::StationRemoved { station: w });
                }
                self.step = Step::Update;
                CoreStatus::Running
            }
            Step::Update => {
                self.step = Step::Perform;
                if self.tasks.is_empty() {
                    self.halted = true;
                    events.push(ProtocolEvent::Halted);
                    return CoreStatus::Halted;
                }
                if self.epoch.advance() {
                    CoreStatus::EpochEnded {
                        heard: self.epoch.heard,
                    }
                } else {
                    CoreStatus::Running
                }
            }
        }
    }

    pub fn view(&self) -> SharedView {
        SharedView {
            stations: self.stations.clone(),
            tasks: self.tasks.as_slice().to_vec(),
            groups: Vec::new(),
            leader: None,
        }
    }
}

/// Two-Lists running epochs until TASKS is empty.
#[derive(Clone, Debug)]
pub struct TwoLists {
    core: TwoListsCore,
    opening: Option<ProtocolEvent>,
}

impl TwoLists {
    pub fn new(p: usize, t: usize) -> Self {
        let mut core = TwoListsCore::new(p, t);
        let opening = Some(core.begin_epoch(None));
        TwoLists { core, opening }
    }

    /// Whether the running epoch is dense.
    pub fn epoch_is_dense(&self) -> bool {
        self.core.epoch.dense
    }
}

impl Protocol for TwoLists {
    fn kind(&self) -> ProtocolKind {
        ProtocolKind::TwoLists
    }

    fn intents(
        &mut self,
        _round: u64,
        live: &[StationId],
        _coins: &mut CoinBank,
    ) -> Vec<(StationId, RoundAction)> {
        self.core.intents(live)
    }

    fn observe(&mut self, _round: u64, feedback: Feedback) -> Vec<ProtocolEvent> {
        let mut events: Vec<ProtocolEvent> = self.opening.take().into_iter().collect();
        if let CoreStatus::EpochEnded { .. } = self.core.observe(feedback, &mut events) {
            events.push(self.core.begin_epoch(None));
        }
        events
    }

    fn focal_station(&self) -> Option<StationId> {
        self.core.scheduled()
    }

    fn shared_view(&self) -> SharedView {
        self.core.view()
    }

    fn halted(&self) -> bool {
        self.core.halted
    }
}
