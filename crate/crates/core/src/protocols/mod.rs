//! Station automata for the five Do-All protocols.
//!
//! Every protocol here is written as one central state machine holding the
//! common-knowledge lists (STATIONS, TASKS, GROUPS) plus the per-station or
//! per-group task bookkeeping. Its state is a function of the public feedback
//! sequence only: [`Protocol::observe`] never sees which stations crashed, so
//! all live stations necessarily agree on the shared lists. The engine asks for
//! the actions of the live stations each round and records what was executed.

mod board;
mod gilet;
mod groups_together;
mod grubtech;
mod robal;
mod two_lists;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelKind, CrashEchoOutcome, CrashEchoSemantics, Feedback, Payload};
use crate::ids::{StationId, TaskId};
use crate::math::CoinBank;

pub use board::segments;
pub use gilet::{check_outstanding_plan, Gilet};
pub use groups_together::GroupsTogether;
pub use grubtech::{Grubtech, LeaderElection};
pub use robal::{mix_and_test_trials, Robal, RobalOptions};
pub use two_lists::TwoLists;

/// What a station does in one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "arg", rename_all = "snake_case")]
pub enum RoundAction {
    PerformTask(TaskId),
    Transmit(Payload),
    Listen,
    /// Stop after this round, optionally performing one last task in it.
    Halt(Option<TaskId>),
}

impl RoundAction {
    pub fn task(&self) -> Option<TaskId> {
        match self {
            RoundAction::PerformTask(t) | RoundAction::Halt(Some(t)) => Some(*t),
            _ => None,
        }
    }

    pub fn payload(&self) -> Option<Payload> {
        match self {
            RoundAction::Transmit(m) => Some(*m),
            _ => None,
        }
    }

    pub fn is_halt(&self) -> bool {
        matches!(self, RoundAction::Halt(_))
    }
}

/// Who confirmed a batch of tasks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confirmer {
    Station(StationId),
    Group(Vec<StationId>),
    Everyone,
}

/// Public protocol decisions, one list per round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ProtocolEvent {
    EpochStart {
        units: usize,
        tasks: usize,
        dense: bool,
    },
    Confirmed {
        by: Confirmer,
        tasks: Vec<TaskId>,
    },
    StationRemoved {
        station: StationId,
    },
    GroupRemoved {
        members: Vec<StationId>,
    },
    LeaderElected {
        leader: StationId,
    },
    LeaderLost {
        leader: StationId,
    },
    CrashEcho {
        first: Feedback,
        second: Feedback,
        outcome: CrashEchoOutcome,
        /// The home-group (loud, loud) pair was read as progress.
        deviation: bool,
    },
    Promoted {
        station: StationId,
    },
    MixAndTest {
        i: u32,
        heard: usize,
        passed: bool,
    },
    BlockEnd {
        heard: usize,
    },
    CheckOutstanding {
        tasks: usize,
    },
    Halted,
}

/// Snapshot of the common-knowledge lists.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedView {
    pub stations: Vec<StationId>,
    pub tasks: Vec<TaskId>,
    pub groups: Vec<Vec<StationId>>,
    pub leader: Option<StationId>,
}

pub trait Protocol: Send {
    fn kind(&self) -> ProtocolKind;

    /// Actions of the given live, unhalted stations for `round`. Coins are
    /// drawn only for these stations.
    fn intents(
        &mut self,
        round: u64,
        live: &[StationId],
        coins: &mut CoinBank,
    ) -> Vec<(StationId, RoundAction)>;

    /// Updates the shared state from the round's feedback.
    fn observe(&mut self, round: u64, feedback: Feedback) -> Vec<ProtocolEvent>;

    /// The station the protocol currently depends on: the leader if there is
    /// one, otherwise the next scheduled transmitter.
    fn focal_station(&self) -> Option<StationId>;

    fn shared_view(&self) -> SharedView;

    fn halted(&self) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    TwoLists,
    GroupsTogether,
    Robal,
    Grubtech,
    Gilet,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::TwoLists,
        ProtocolKind::GroupsTogether,
        ProtocolKind::Robal,
        ProtocolKind::Grubtech,
        ProtocolKind::Gilet,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ProtocolKind::TwoLists => "two_lists",
            ProtocolKind::GroupsTogether => "groups_together",
            ProtocolKind::Robal => "robal",
            ProtocolKind::Grubtech => "grubtech",
            ProtocolKind::Gilet => "gilet",
        }
    }

    /// The channel each protocol is designed for.
    pub fn native_channel(self) -> ChannelKind {
        match self {
            ProtocolKind::GroupsTogether => ChannelKind::CollisionDetection,
            _ => ChannelKind::NoCollisionDetection,
        }
    }
}

/// Knobs that select between readings of the pseudocode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolOptions {
    pub crash_echo: CrashEchoSemantics,
    pub robal: RobalOptions,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("{protocol:?} cannot run on the {channel:?} channel")]
    WrongChannel {
        protocol: ProtocolKind,
        channel: ChannelKind,
    },
    #[error("need p >= 1 and t >= 1, got p={p}, t={t}")]
    BadSize { p: usize, t: usize },
}

pub fn build(
    kind: ProtocolKind,
    p: usize,
    t: usize,
    channel: ChannelKind,
    options: ProtocolOptions,
) -> Result<Box<dyn Protocol>, ProtocolError> {
    if p == 0 || t == 0 {
        return Err(ProtocolError::BadSize { p, t });
    }
    let wrong = || ProtocolError::WrongChannel {
        protocol: kind,
        channel,
    };
    Ok(match kind {
        ProtocolKind::TwoLists => Box::new(TwoLists::new(p, t)),
        ProtocolKind::GroupsTogether => {
            if channel == ChannelKind::NoCollisionDetection {
                return Err(wrong());
            }
            Box::new(GroupsTogether::new(p, t))
        }
        ProtocolKind::Robal => Box::new(Robal::new(p, t, options.robal)),
        ProtocolKind::Grubtech => {
            if channel != ChannelKind::NoCollisionDetection {
                return Err(wrong());
            }
            Box::new(Grubtech::new(p, t, options.crash_echo))
        }
        ProtocolKind::Gilet => Box::new(Gilet::new(p, t)),
    })
}

pub fn two_lists(p: usize, t: usize) -> TwoLists {
    TwoLists::new(p, t)
}

pub fn groups_together(
    p: usize,
    t: usize,
    channel: ChannelKind,
) -> Result<GroupsTogether, ProtocolError> {
    if channel == ChannelKind::NoCollisionDetection {
        return Err(ProtocolError::WrongChannel {
            protocol: ProtocolKind::GroupsTogether,
            channel,
        });
    }
    Ok(GroupsTogether::new(p, t))
}

pub fn robal(p: usize, t: usize) -> Robal {
    Robal::new(p, t, RobalOptions::default())
}

pub fn grubtech(p: usize, t: usize) -> Grubtech {
    Grubtech::new(p, t, CrashEchoSemantics::Prose)
}

pub fn gilet(p: usize, t: usize) -> Gilet {
    Gilet::new(p, t)
}

/// Every live station gets the same action.
pub(crate) fn everyone(live: &[StationId], action: RoundAction) -> Vec<(StationId, RoundAction)> {
    live.iter().map(|&s| (s, action)).collect()
}
