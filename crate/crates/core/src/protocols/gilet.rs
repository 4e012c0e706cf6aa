//! GILET: groups confirm with a randomized back-off of geometrically growing
//! transmit probability. A group that stays silent through every repetition
//! makes all survivors finish the outstanding tasks on their own.

use super::board::GroupBoard;
use super::{everyone, Confirmer, Protocol, ProtocolEvent, ProtocolKind, RoundAction, SharedView};
use crate::channel::{Feedback, Payload};
use crate::ids::{StationId, TaskId};
use crate::math::{ceil_log2, ceil_sqrt, CoinBank, Prob};

/// What each survivor does in round `r` (0-based) of the final sweep over
/// `remaining`: perform the tasks in order, halting with the last one.
pub fn check_outstanding_plan(remaining: &[TaskId], r: usize) -> RoundAction {
    match remaining.len() {
        0 => RoundAction::Halt(None),
        n if r + 1 >= n => RoundAction::Halt(Some(remaining[n - 1])),
        _ => RoundAction::PerformTask(remaining[r]),
    }
}

#[derive(Clone, Debug)]
enum Stage {
    Perform,
    Confirm { rep: usize, j: u32 },
    Outstanding { remaining: Vec<TaskId>, r: usize },
    Halting,
}

#[derive(Clone, Debug)]
pub struct Gilet {
    p: usize,
    /// Initial group count; the coin scale is `k = p / g0`.
    g0: usize,
    window: u32,
    reps: usize,
    board: GroupBoard,
    stage: Stage,
    removed: Vec<StationId>,
    opening: Option<ProtocolEvent>,
    halted: bool,
}

impl Gilet {
    pub fn new(p: usize, t: usize) -> Self {
        let g0 = (ceil_sqrt(t as u64) as usize).min(p);
        let mut board = GroupBoard::new(p, t, g0);
        let (units, tasks, dense) = board.begin_epoch();
        Gilet {
            p,
            g0,
            window: confirm_window(p, g0),
            reps: 4 * (ceil_log2(p as u64) as usize).max(1),
            board,
            stage: Stage::Perform,
            removed: Vec::new(),
            opening: Some(ProtocolEvent::EpochStart {
                units,
                tasks,
                dense,
            }),
            halted: false,
        }
    }

    /// Stations given up on after a silent confirmation.
    pub fn removed(&self) -> &[StationId] {
        &self.removed
    }

    /// Transmit probability in window step `j`: `2^j / k`, at most 1.
    fn confirm_prob(&self, j: u32) -> Prob {
        Prob::new((self.g0 as u64) << j, self.p as u64)
    }

    fn next_phase(&mut self, events: &mut Vec<ProtocolEvent>) {
        if self.board.tasks.is_empty() {
            self.stage = Stage::Halting;
            return;
        }
        self.stage = Stage::Perform;
        if self.board.epoch.advance() {
            let stations = self.board.all_members();
            // Keep groups no larger than k so the coin range still fits.
            let min_groups = (stations.len() * self.g0).div_ceil(self.p);
            self.board.regroup(&stations, min_groups);
            let (units, tasks, dense) = self.board.begin_epoch();
            events.push(ProtocolEvent::EpochStart {
                units,
                tasks,
                dense,
            });
        }
    }
}

/// Window length `max(1, ceil(log2(p/g)))`.
fn confirm_window(p: usize, g: usize) -> u32 {
    let mut e = 0;
    while (g << e) < p {
        e += 1;
    }
    e.max(1)
}

impl Protocol for Gilet {
    fn kind(&self) -> ProtocolKind {
        ProtocolKind::Gilet
    }

    fn intents(
        &mut self,
        round: u64,
        live: &[StationId],
        coins: &mut CoinBank,
    ) -> Vec<(StationId, RoundAction)> {
        match &self.stage {
            Stage::Perform => {
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
            Stage::Confirm { j, .. } => {
                let prob = self.confirm_prob(*j);
                let key = self.board.scheduled();
                live.iter()
                    .map(|&s| {
                        let mine = key.is_some() && self.board.group_key_of(s) == key;
                        let action = if mine && coins.toss(s, round, prob) {
                            RoundAction::Transmit(Payload::BIT)
                        } else {
                            RoundAction::Listen
                        };
                        (s, action)
                    })
                    .collect()
            }
            Stage::Outstanding { remaining, r } => {
                everyone(live, check_outstanding_plan(remaining, *r))
            }
            Stage::Halting => everyone(live, RoundAction::Halt(None)),
        }
    }

    fn observe(&mut self, _round: u64, feedback: Feedback) -> Vec<ProtocolEvent> {
        let mut events: Vec<ProtocolEvent> = self.opening.take().into_iter().collect();
        match &mut self.stage {
            Stage::Perform => {
                self.board.apply_perform();
                self.stage = Stage::Confirm { rep: 0, j: 0 };
            }
            Stage::Confirm { rep, j } => {
                let key = self.board.scheduled();
                if feedback.is_single() {
                    if let Some(key) = key {
                        let members = self.board.members_of(key).to_vec();
                        let tasks = self.board.confirm(key);
                        events.push(ProtocolEvent::Confirmed {
                            by: Confirmer::Group(members),
                            tasks,
                        });
                    }
                    self.next_phase(&mut events);
                } else {
                    *j += 1;
                    if *j >= self.window {
                        *j = 0;
                        *rep += 1;
                    }
                    if *rep >= self.reps {
                        if let Some(key) = key {
                            let members = self.board.remove_group(key);
                            self.removed.extend(&members);
                            events.push(ProtocolEvent::GroupRemoved { members });
                        }
                        let remaining = self.board.tasks.as_slice().to_vec();
                        events.push(ProtocolEvent::CheckOutstanding {
                            tasks: remaining.len(),
                        });
                        self.stage = Stage::Outstanding { remaining, r: 0 };
                    }
                }
            }
            Stage::Outstanding { remaining, r } => {
                *r += 1;
                if *r >= remaining.len() {
                    let tasks = self.board.tasks.clear();
                    events.push(ProtocolEvent::Confirmed {
                        by: Confirmer::Everyone,
                        tasks,
                    });
                    self.halted = true;
                    events.push(ProtocolEvent::Halted);
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
