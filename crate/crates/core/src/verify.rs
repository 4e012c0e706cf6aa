//! Statistical checks of the protocols' probabilistic claims and an exhaustive work
//! oracle for tiny instances.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{all_stations, StationId};
use crate::math::{ceil_log2, CoinBank};
use crate::protocols::LeaderElection;

/// One-sided 99% normal quantile.
pub const Z_99: f64 = 2.326_347_874;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Pass iff `statistic <= bound + margin`.
    AtMost,
    /// Pass iff `statistic >= bound - margin`.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatCheck {
    pub name: String,
    pub trials: u64,
    pub statistic: f64,
    pub bound: f64,
    pub margin: f64,
    pub direction: Direction,
    pub passed: bool,
}

impl StatCheck {
    fn new(
        name: String,
        trials: u64,
        statistic: f64,
        bound: f64,
        margin: f64,
        direction: Direction,
    ) -> Self {
        let passed = match direction {
            Direction::AtMost => statistic <= bound + margin,
            Direction::AtLeast => statistic >= bound - margin,
        };
        StatCheck {
            name,
            trials,
            statistic,
            bound,
            margin,
            direction,
            passed,
        }
    }
}

/// Wilson score interval for `successes / n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let center = phat + z2 / (2.0 * n);
    let spread = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    let denom = 1.0 + z2 / n;
    (
        ((center - spread) / denom).max(0.0),
        ((center + spread) / denom).min(1.0),
    )
}

/// `(m/x)(1 - 1/x)^(m-1)`: chance that exactly one of `m` stations transmits
/// when each does so with probability `1/x`.
pub fn single_transmit_probability(x: u64, m: u64) -> f64 {
    let x = x as f64;
    (m as f64 / x) * (1.0 - 1.0 / x).powi(m as i32 - 1)
}

/// Minimum of [`single_transmit_probability`] over `x` in the range and
/// `m` in `(x/2, x]`, against `1/(2 sqrt e)`.
pub fn check_single_transmit_bound(xs: std::ops::RangeInclusive<u64>) -> StatCheck {
    let mut min = f64::INFINITY;
    let mut pairs = 0;
    for x in xs.clone() {
        for m in x / 2 + 1..=x {
            min = min.min(single_transmit_probability(x, m));
            pairs += 1;
        }
    }
    let bound = 1.0 / (2.0 * std::f64::consts::E.sqrt());
    StatCheck::new(
        format!("single_transmit_bound[x={}..={}]", xs.start(), xs.end()),
        pairs,
        min,
        bound,
        0.0,
        Direction::AtLeast,
    )
}

/// Draws `sqrt_t` leaders uniformly without replacement among `n` stations
/// in a linear crash order and counts how often at least `3/4` of them fall
/// into the first `n/2` positions. Compared against `e^(-sqrt_t/8)`.
pub fn check_leader_crash_tail(n: usize, sqrt_t: usize, trials: u64, seed: u64) -> StatCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let mut hits = 0u64;
    for _ in 0..trials {
        let early = sample(&mut rng, n, sqrt_t)
            .iter()
            .filter(|&i| i < half)
            .count();
        if 4 * early >= 3 * sqrt_t {
            hits += 1;
        }
    }
    let freq = hits as f64 / trials.max(1) as f64;
    let (lo, _) = wilson_interval(hits, trials, Z_99);
    StatCheck::new(
        format!("leader_crash_tail[n={n},sqrt_t={sqrt_t}]"),
        trials,
        freq,
        (-(sqrt_t as f64) / 8.0).exp(),
        freq - lo,
        Direction::AtMost,
    )
}

/// Rounds one leader election takes when every faulty winner (stations
/// `1..=f`) is crashed right after winning and the election restarts.
pub fn election_rounds(p: usize, f: usize, coins: &mut CoinBank) -> u64 {
    let mut election = LeaderElection::new(p);
    let mut alive: Vec<StationId> = all_stations(p);
    let mut round = 0u64;
    election.start(alive.clone());
    loop {
        round += 1;
        let intents = election.intents(round, &alive, coins);
        let senders: Vec<_> = intents
            .iter()
            .filter_map(|(s, a)| a.payload().map(|m| (*s, m)))
            .collect();
        let feedback =
            crate::channel::resolve(crate::channel::ChannelKind::NoCollisionDetection, &senders)
                .feedback;
        if let Some(w) = election.observe(feedback) {
            if (w.0 as usize) <= f {
                alive.retain(|&s| s != w);
                election.start(alive.clone());
            } else {
                return round;
            }
        }
    }
}

/// Frequency of elections finishing within `(4p/(p-f)) log2 p` rounds,
/// against `1 - 1/p` with a fixed margin of 0.05.
pub fn check_elect_leader_rounds(p: usize, f: usize, trials: u64, seed: u64) -> StatCheck {
    let limit = 4.0 * p as f64 / (p - f) as f64 * (ceil_log2(p as u64) as f64).max(1.0);
    let mut ok = 0u64;
    for trial in 0..trials {
        let mut coins = CoinBank::new(
            seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(trial),
            p,
        );
        if election_rounds(p, f, &mut coins) as f64 <= limit {
            ok += 1;
        }
    }
    StatCheck::new(
        format!("elect_leader_rounds[p={p},f={f}]"),
        trials,
        ok as f64 / trials.max(1) as f64,
        1.0 - 1.0 / p as f64,
        0.05,
        Direction::AtLeast,
    )
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("oracle handles p <= 3 and t <= 3, got p={p}, t={t}")]
    TooLarge { p: usize, t: usize },
    #[error("crash schedule has {got} entries for {p} stations")]
    ScheduleLength { got: usize, p: usize },
    #[error("no schedule completes the tasks")]
    Infeasible,
}

/// Minimum work of any schedule that performs all `t` tasks when station
/// `i + 1` crashes at the start of round `crash_rounds[i]` (never if
/// `None`). A station crashed in round `c` is charged `c` units; one that
/// halts in round `h` is charged `h`. A station may perform a task and halt
/// in the same round.
pub fn brute_force_doall_oracle(
    p: usize,
    t: usize,
    crash_rounds: &[Option<u64>],
) -> Result<u64, VerifyError> {
    if p > 3 || t > 3 || p == 0 {
        return Err(VerifyError::TooLarge { p, t });
    }
    if crash_rounds.len() != p {
        return Err(VerifyError::ScheduleLength {
            got: crash_rounds.len(),
            p,
        });
    }
    let last_crash = crash_rounds.iter().flatten().max().copied().unwrap_or(0);
    let horizon = last_crash + t as u64 + 1;
    let mut oracle = Oracle {
        p,
        full: (1u8 << t) - 1,
        t,
        crash: crash_rounds.to_vec(),
        horizon,
        memo: HashMap::new(),
    };
    let cost = oracle.best(1, 0, (1u8 << p) - 1);
    if cost >= INF {
        Err(VerifyError::Infeasible)
    } else {
        Ok(cost)
    }
}

const INF: u64 = u64::MAX / 4;

struct Oracle {
    p: usize,
    t: usize,
    full: u8,
    crash: Vec<Option<u64>>,
    horizon: u64,
    memo: HashMap<(u64, u8, u8), u64>,
}

impl Oracle {
    /// Least work from round `r` on, with tasks `done` performed and
    /// stations `active` neither halted nor crashed.
    fn best(&mut self, r: u64, done: u8, active: u8) -> u64 {
        if active == 0 {
            return if done == self.full { 0 } else { INF };
        }
        if r > self.horizon {
            return INF;
        }
        if let Some(&v) = self.memo.get(&(r, done, active)) {
            return v;
        }
        let charge = active.count_ones() as u64;
        let mut acting = Vec::new();
        let mut remaining = active;
        for i in 0..self.p {
            if active & (1 << i) != 0 && self.crash[i] == Some(r) {
                remaining &= !(1 << i);
            } else if active & (1 << i) != 0 {
                acting.push(i);
            }
        }
        // Each acting station picks a task (or none) and whether to halt.
        let choices = 2 * (self.t + 1);
        let combos = choices.pow(acting.len() as u32);
        let mut best = INF;
        for code in 0..combos {
            let mut c = code;
            let mut now_done = done;
            let mut next = remaining;
            for &i in &acting {
                let pick = c % choices;
                c /= choices;
                let (task, halt) = (pick / 2, pick % 2 == 1);
                if task > 0 {
                    now_done |= 1 << (task - 1);
                }
                if halt {
                    next &= !(1 << i);
                }
            }
            let rest = self.best(r + 1, now_done, next);
            best = best.min(rest.saturating_add(charge));
        }
        self.memo.insert((r, done, active), best);
        best
    }
}

/// The checks run by the `verify` subcommand at their acceptance sizes.
pub fn standard_suite(seed: u64) -> Vec<StatCheck> {
    let mut checks = vec![
        check_single_transmit_bound(2..=64),
        check_leader_crash_tail(400, 20, 10_000, seed),
    ];
    for f in [0, 32, 63] {
        checks.push(check_elect_leader_rounds(
            64,
            f,
            1_000,
            seed.wrapping_add(f as u64),
        ));
    }
    checks
}
