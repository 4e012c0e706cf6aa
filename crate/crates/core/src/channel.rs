//! Round resolution on the shared channel and the Crash-Echo pair classifier.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::StationId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    #[serde(rename = "nocd")]
    NoCollisionDetection,
    #[serde(rename = "cd")]
    CollisionDetection,
    Beeping,
}

impl ChannelKind {
    pub fn label(self) -> &'static str {
        match self {
            ChannelKind::NoCollisionDetection => "nocd",
            ChannelKind::CollisionDetection => "cd",
            ChannelKind::Beeping => "beeping",
        }
    }
}

/// Message content. The simulator only compares payloads for equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Payload {
    pub value: u32,
    pub bits: u8,
}

impl Payload {
    /// The one-bit "I am alive and did my tasks" message.
    pub const BIT: Payload = Payload { value: 1, bits: 1 };

    /// A station name, `ceil(log2 p)` bits wide.
    pub fn station(id: StationId, p: usize) -> Self {
        Payload {
            value: id.0,
            bits: crate::math::ceil_log2(p.max(2) as u64) as u8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Feedback {
    Silence,
    Single(Payload),
    Collision,
    Beep,
}

impl Feedback {
    pub fn is_single(&self) -> bool {
        matches!(self, Feedback::Single(_))
    }

    /// Anything other than silence.
    pub fn is_noisy(&self) -> bool {
        !matches!(self, Feedback::Silence)
    }
}

/// Outcome of one channel slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Resolution {
    pub feedback: Feedback,
    /// The transmitter that got its message through, if any.
    pub acknowledged: Option<StationId>,
}

/// Resolves one round. Every operational station hears the same feedback.
pub fn resolve(kind: ChannelKind, transmissions: &[(StationId, Payload)]) -> Resolution {
    let feedback = match (transmissions.len(), kind) {
        (0, _) => Feedback::Silence,
        (_, ChannelKind::Beeping) => Feedback::Beep,
        (1, _) => Feedback::Single(transmissions[0].1),
        (_, ChannelKind::NoCollisionDetection) => Feedback::Silence,
        (_, ChannelKind::CollisionDetection) => Feedback::Collision,
    };
    let acknowledged = match (transmissions, feedback) {
        ([(s, _)], Feedback::Single(_) | Feedback::Beep) => Some(*s),
        _ => None,
    };
    Resolution {
        feedback,
        acknowledged,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrashEchoOutcome {
    /// The scheduled group's tasks are confirmed.
    Progress,
    /// Only the leader was heard: the scheduled group is gone.
    LeaderOnly,
    /// The leader did not echo: elect a new one.
    LeaderLost,
}

/// How a (loud, loud) pair on the leader's home group is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrashEchoSemantics {
    /// Home group counts as progress: the leader did its own tasks.
    #[default]
    Prose,
    /// Always remove the scheduled group, as in the listing.
    Algorithm,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChannelError {
    #[error("crash-echo pair needs no-CD feedback, got {0:?}")]
    InvalidPair(Feedback),
}

pub fn classify_crash_echo(
    first: Feedback,
    second: Feedback,
    leader_in_group: bool,
) -> Result<CrashEchoOutcome, ChannelError> {
    classify_crash_echo_with(first, second, leader_in_group, CrashEchoSemantics::Prose)
}

pub fn classify_crash_echo_with(
    first: Feedback,
    second: Feedback,
    leader_in_group: bool,
    semantics: CrashEchoSemantics,
) -> Result<CrashEchoOutcome, ChannelError> {
    for fb in [first, second] {
        if matches!(fb, Feedback::Collision | Feedback::Beep) {
            return Err(ChannelError::InvalidPair(fb));
        }
    }
    Ok(match (first.is_single(), second.is_single()) {
        (false, true) => CrashEchoOutcome::Progress,
        (true, true) => match (leader_in_group, semantics) {
            (true, CrashEchoSemantics::Prose) => CrashEchoOutcome::Progress,
            _ => CrashEchoOutcome::LeaderOnly,
        },
        (_, false) => CrashEchoOutcome::LeaderLost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx(ids: &[u32]) -> Vec<(StationId, Payload)> {
        ids.iter().map(|&i| (StationId(i), Payload::BIT)).collect()
    }

    #[test]
    fn signal_lists() {
        use ChannelKind::*;
        assert_eq!(
            resolve(NoCollisionDetection, &[]).feedback,
            Feedback::Silence
        );
        assert_eq!(
            resolve(NoCollisionDetection, &tx(&[3, 7])).feedback,
            Feedback::Silence
        );
        assert_eq!(
            resolve(CollisionDetection, &tx(&[3, 7])).feedback,
            Feedback::Collision
        );
        assert_eq!(resolve(Beeping, &tx(&[3, 7])).feedback, Feedback::Beep);
        assert_eq!(resolve(Beeping, &tx(&[3])).feedback, Feedback::Beep);
        let one = resolve(NoCollisionDetection, &tx(&[3]));
        assert_eq!(one.feedback, Feedback::Single(Payload::BIT));
        assert_eq!(one.acknowledged, Some(StationId(3)));
        assert_eq!(resolve(CollisionDetection, &tx(&[3, 4])).acknowledged, None);
    }

    #[test]
    fn crash_echo_pairs() {
        let loud = Feedback::Single(Payload::BIT);
        let quiet = Feedback::Silence;
        assert_eq!(
            classify_crash_echo(quiet, loud, false),
            Ok(CrashEchoOutcome::Progress)
        );
        assert_eq!(
            classify_crash_echo(quiet, quiet, true),
            Ok(CrashEchoOutcome::LeaderLost)
        );
        assert_eq!(
            classify_crash_echo(loud, quiet, true),
            Ok(CrashEchoOutcome::LeaderLost)
        );
        assert_eq!(
            classify_crash_echo(loud, loud, false),
            Ok(CrashEchoOutcome::LeaderOnly)
        );
        assert_eq!(
            classify_crash_echo(loud, loud, true),
            Ok(CrashEchoOutcome::Progress)
        );
        assert_eq!(
            classify_crash_echo_with(loud, loud, true, CrashEchoSemantics::Algorithm),
            Ok(CrashEchoOutcome::LeaderOnly)
        );
        assert_eq!(
            classify_crash_echo(Feedback::Collision, loud, true),
            Err(ChannelError::InvalidPair(Feedback::Collision))
        );
    }
}
