//! Groups-Together: Two-Lists over groups of stations that work in lockstep
//! and confirm together. Needs a channel that tells one or more transmitters
//! apart from silence.

use super::board::GroupBoard;
use super::{everyone, Confirmer, Protocol, ProtocolEvent, ProtocolKind, RoundAction, SharedView};
use crate::channel::{Feedback, Payload};
use crate::ids::StationId;
use crate::math::{ceil_sqrt, CoinBank};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Perform,
    Transmit,
    Update,
}

#[derive(Clone, Debug)]
pub struct GroupsTogether {
    board: GroupBoard,
    step: Step,
    opening: Option<ProtocolEvent>,
    halted: bool,
}

impl GroupsTogether {
    pub fn new(p: usize, t: usize) -> Self {
        let g = (ceil_sqrt(t as u64) as usize).min(p);
        let mut board = GroupBoard::new(p, t, g);
        let (units, tasks, dense) = board.begin_epoch();
        GroupsTogether {
            board,
            step: Step::Perform,
            opening: Some(ProtocolEvent::EpochStart {
                units,
                tasks,
                dense,
            }),
            halted: false,
        }
    }
}

impl Protocol for GroupsTogether {
    fn kind(&self) -> ProtocolKind {
        ProtocolKind::GroupsTogether
    }

    fn intents(
        &mut self,
        _round: u64,
        live: &[StationId],
        _coins: &mut CoinBank,
    ) -> Vec<(StationId, RoundAction)> {
        match self.step {
            Step::Perform => {
                self.board.plan_perform();
                live.iter()
                    .map(|&s| {
                        let action = match self.board.planned_task_of(s) {
                            Some(x) => RoundAction::PerformTask(x),
                            None => RoundAction::Listen,
                        };
                        (s, action)
                    })
                    .collect()
            }
            Step::Transmit => {
                let scheduled = self.board.scheduled();
                live.iter()
                    .map(|&s| {
                        let mine = scheduled.is_some() && self.board.group_key_of(s) == scheduled;
                        let action = if mine {
                            RoundAction::Transmit(Payload::BIT)
                        } else {
                            RoundAction::Listen
                        };
                        (s, action)
                    })
                    .collect()
            }
            Step::Update if self.board.tasks.is_empty() => everyone(live, RoundAction::Halt(None)),
            Step::Update => everyone(live, RoundAction::Listen),
        }
    }

    fn observe(&mut self, _round: u64, feedback: Feedback) -> Vec<ProtocolEvent> {
        let mut events: Vec<ProtocolEvent> = self.opening.take().into_iter().collect();
        match self.step {
            Step::Perform => {
                self.board.apply_perform();
                self.step = Step::Transmit;
            }
            Step::Transmit => {
                if let Some(key) = self.board.scheduled() {
                    if feedback.is_noisy() {
                        let members = self.board.members_of(key).to_vec();
                        let tasks = self.board.confirm(key);
                        events.push(ProtocolEvent::Confirmed {
                            by: Confirmer::Group(members),
                            tasks,
                        });
                    } else {
                        let members = self.board.remove_group(key);
                        events.push(ProtocolEvent::GroupRemoved { members });
                    }
                }
                self.step = Step::Update;
            }
            Step::Update => {
                self.step = Step::Perform;
                if self.board.tasks.is_empty() {
                    self.halted = true;
                    events.push(ProtocolEvent::Halted);
                } else if self.board.epoch.advance() {
                    let stations = self.board.all_members();
                    self.board.regroup(&stations, 1);
                    let (units, tasks, dense) = self.board.begin_epoch();
                    events.push(ProtocolEvent::EpochStart {
                        units,
                        tasks,
                        dense,
                    });
                }
            }
        }
        events
    }

    fn focal_station(&self) -> Option<StationId> {
        let key = self.board.scheduled()?;
        self.board.members_of(key).first().copied()
    }

    fn shared_view(&self) -> SharedView {
        SharedView {
            stations: self.board.all_members(),
            tasks: self.board.tasks.as_slice().to_vec(),
            groups: self.board.view(),
            leader: None,
        }
    }

    fn halted(&self) -> bool {
        self.halted
    }
}
