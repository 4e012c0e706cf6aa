//! GrubTEch: groups confirm their work through a leader using the two-round
//! Crash-Echo test; a silent echo triggers a new leader election.

use fixedbitset::FixedBitSet;

use super::board::GroupBoard;
use super::{everyone, Confirmer, Protocol, ProtocolEvent, ProtocolKind, RoundAction, SharedView};
use crate::channel::{
    classify_crash_echo_with, CrashEchoOutcome, CrashEchoSemantics, Feedback, Payload,
};
use crate::ids::StationId;
use crate::math::{ceil_sqrt, CoinBank, Prob};

/// The leader election subroutine. The counter of randomized rounds is
/// shared by all calls: once `p` of them have failed, elections fall back to
/// round-robin over the candidates.
#[derive(Clone, Debug)]
pub struct LeaderElection {
    p: usize,
    randomized_rounds: usize,
    candidates: Vec<StationId>,
    is_candidate: FixedBitSet,
    rr_pos: usize,
}

impl LeaderElection {
    pub fn new(p: usize) -> Self {
        LeaderElection {
            p,
            randomized_rounds: 0,
            candidates: Vec::new(),
            is_candidate: FixedBitSet::with_capacity(p),
            rr_pos: 0,
        }
    }

    /// Begins a call over the stations currently in groups.
    pub fn start(&mut self, candidates: Vec<StationId>) {
        self.is_candidate.clear();
        for s in &candidates {
            self.is_candidate.insert(s.slot());
        }
        self.candidates = candidates;
        self.rr_pos = 0;
    }

    pub fn randomized(&self) -> bool {
        self.randomized_rounds < self.p
    }

    pub fn intents(
        &self,
        round: u64,
        live: &[StationId],
        coins: &mut CoinBank,
    ) -> Vec<(StationId, RoundAction)> {
        let name = |s: StationId| RoundAction::Transmit(Payload::station(s, self.p));
        if self.randomized() {
            let prob = Prob::new(1, self.p as u64);
            live.iter()
                .map(|&s| {
                    let action =
                        if self.is_candidate.contains(s.slot()) && coins.toss(s, round, prob) {
                            name(s)
                        } else {
                            RoundAction::Listen
                        };
                    (s, action)
                })
                .collect()
        } else {
            let turn = self
                .candidates
                .get(self.rr_pos % self.candidates.len().max(1));
            live.iter()
                .map(|&s| {
                    let action = if Some(&s) == turn {
                        name(s)
                    } else {
                        RoundAction::Listen
                    };
                    (s, action)
                })
                .collect()
        }
    }

    /// The elected station, if this round produced one.
    pub fn observe(&mut self, feedback: Feedback) -> Option<StationId> {
        if let Feedback::Single(m) = feedback {
            return Some(StationId(m.value));
        }
        if self.randomized() {
            self.randomized_rounds += 1;
        } else {
            self.rr_pos += 1;
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Electing,
    Perform,
    EchoFirst,
    EchoSecond,
    Update,
}

#[derive(Clone, Debug)]
pub struct Grubtech {
    semantics: CrashEchoSemantics,
    board: GroupBoard,
    election: LeaderElection,
    leader: Option<StationId>,
    stage: Stage,
    first: Feedback,
    outcome: Option<CrashEchoOutcome>,
    opening: Option<ProtocolEvent>,
    halted: bool,
}

impl Grubtech {
    pub fn new(p: usize, t: usize, semantics: CrashEchoSemantics) -> Self {
        let g = (ceil_sqrt(t as u64) as usize).min(p);
        let mut board = GroupBoard::new(p, t, g);
        let (units, tasks, dense) = board.begin_epoch();
        let mut election = LeaderElection::new(p);
        election.start(board.all_members());
        Grubtech {
            semantics,
            board,
            election,
            leader: None,
            stage: Stage::Electing,
            first: Feedback::Silence,
            outcome: None,
            opening: Some(ProtocolEvent::EpochStart {
                units,
                tasks,
                dense,
            }),
            halted: false,
        }
    }

    pub fn leader(&self) -> Option<StationId> {
        self.leader
    }

    fn leader_in_scheduled(&self) -> bool {
        match (self.leader, self.board.scheduled()) {
            (Some(l), Some(key)) => self.board.group_key_of(l) == Some(key),
            _ => false,
        }
    }

    fn in_scheduled(&self, s: StationId) -> bool {
        let key = self.board.scheduled();
        key.is_some() && self.board.group_key_of(s) == key
    }

    fn end_of_phase(&mut self, events: &mut Vec<ProtocolEvent>) {
        if self.board.epoch.advance() {
            let mut stations = self.board.all_members();
            if let Some(l) = self.leader {
                if !stations.contains(&l) {
                    stations.push(l);
                    stations.sort();
                }
            }
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

impl Protocol for Grubtech {
    fn kind(&self) -> ProtocolKind {
        ProtocolKind::Grubtech
    }

    fn intents(
        &mut self,
        round: u64,
        live: &[StationId],
        coins: &mut CoinBank,
    ) -> Vec<(StationId, RoundAction)> {
        match self.stage {
            Stage::Electing => self.election.intents(round, live, coins),
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
            Stage::EchoFirst => live
                .iter()
                .map(|&s| {
                    let action = if self.in_scheduled(s) || Some(s) == self.leader {
                        RoundAction::Transmit(Payload::BIT)
                    } else {
                        RoundAction::Listen
                    };
                    (s, action)
                })
                .collect(),
            Stage::EchoSecond => live
                .iter()
                .map(|&s| {
                    let action = if Some(s) == self.leader {
                        RoundAction::Transmit(Payload::BIT)
                    } else {
                        RoundAction::Listen
                    };
                    (s, action)
                })
                .collect(),
            Stage::Update if self.board.tasks.is_empty() => everyone(live, RoundAction::Halt(None)),
            Stage::Update => everyone(live, RoundAction::Listen),
        }
    }

    fn observe(&mut self, _round: u64, feedback: Feedback) -> Vec<ProtocolEvent> {
        let mut events: Vec<ProtocolEvent> = self.opening.take().into_iter().collect();
        match self.stage {
            Stage::Electing => {
                if let Some(w) = self.election.observe(feedback) {
                    self.leader = Some(w);
                    events.push(ProtocolEvent::LeaderElected { leader: w });
                    self.stage = Stage::Perform;
                }
            }
            Stage::Perform => {
                self.board.apply_perform();
                self.stage = Stage::EchoFirst;
            }
            Stage::EchoFirst => {
                self.first = feedback;
                self.stage = Stage::EchoSecond;
            }
            Stage::EchoSecond => {
                let home = self.leader_in_scheduled();
                // A no-CD channel only produces silence or single messages.
                let outcome = classify_crash_echo_with(self.first, feedback, home, self.semantics)
                    .unwrap_or(CrashEchoOutcome::LeaderLost);
                let deviation = home
                    && self.first.is_single()
                    && feedback.is_single()
                    && outcome == CrashEchoOutcome::Progress;
                events.push(ProtocolEvent::CrashEcho {
                    first: self.first,
                    second: feedback,
                    outcome,
                    deviation,
                });
                match (outcome, self.board.scheduled()) {
                    (CrashEchoOutcome::Progress, Some(key)) => {
                        let members = self.board.members_of(key).to_vec();
                        let tasks = self.board.confirm(key);
                        events.push(ProtocolEvent::Confirmed {
                            by: Confirmer::Group(members),
                            tasks,
                        });
                    }
                    (CrashEchoOutcome::LeaderOnly, Some(key)) => {
                        let members = self.board.remove_group(key);
                        events.push(ProtocolEvent::GroupRemoved { members });
                    }
                    (CrashEchoOutcome::LeaderLost, _) => {
                        if let Some(l) = self.leader.take() {
                            self.board.remove_station(l);
                            events.push(ProtocolEvent::LeaderLost { leader: l });
                        }
                    }
                    _ => {}
                }
                self.outcome = Some(outcome);
                self.stage = Stage::Update;
            }
            Stage::Update => {
                if self.board.tasks.is_empty() {
                    self.halted = true;
                    events.push(ProtocolEvent::Halted);
                    return events;
                }
                match self.outcome.take() {
                    Some(CrashEchoOutcome::LeaderLost) => {
                        self.election.start(self.board.all_members());
                        self.stage = Stage::Electing;
                    }
                    _ => {
                        self.end_of_phase(&mut events);
                        self.stage = Stage::Perform;
                    }
                }
            }
        }
        events
    }

    fn focal_station(&self) -> Option<StationId> {
        self.leader
    }

    fn shared_view(&self) -> SharedView {
        let mut stations = self.board.all_members();
        if let Some(l) = self.leader {
            if !stations.contains(&l) {
                stations.push(l);
                stations.sort();
            }
        }
        SharedView {
            stations,
            tasks: self.board.tasks.as_slice().to_vec(),
            groups: self.board.view(),
            leader: self.leader,
        }
    }

    fn halted(&self) -> bool {
        self.halted
    }
}
