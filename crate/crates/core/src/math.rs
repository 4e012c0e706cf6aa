//! Integer helpers and the fixed-point coin used by every randomized step.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ids::StationId;

/// Smallest `e` with `2^e >= n` (0 for `n <= 1`).
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Smallest `r` with `r*r >= n`.
pub fn ceil_sqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

/// A probability `num/den`, clamped into `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prob {
    num: u64,
    den: u64,
}

impl Prob {
    pub const ONE: Prob = Prob { num: 1, den: 1 };
    pub const ZERO: Prob = Prob { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Self {
        if den == 0 || num >= den {
            Prob::ONE
        } else {
            Prob { num, den }
        }
    }

    /// `coin^-1` for a coin given as the rational `coin_num / coin_den`.
    /// Coins at or below 1 give probability 1.
    pub fn inverse_of(coin_num: i128, coin_den: u64) -> Self {
        if coin_num <= coin_den as i128 {
            Prob::ONE
        } else {
            Prob::new(coin_den, coin_num as u64)
        }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Heads iff `draw < floor(num * 2^64 / den)`; probability 1 always heads.
    pub fn heads(self, draw: u64) -> bool {
        if self.num >= self.den {
            return true;
        }
        let threshold = ((self.num as u128) << 64) / self.den as u128;
        (draw as u128) < threshold
    }
}

/// Uniform index in `0..len` from one 64-bit draw (multiply-shift).
pub fn pick_index(draw: u64, len: usize) -> usize {
    ((draw as u128 * len as u128) >> 64) as usize
}

fn keyed_rng(seed: u64, id: u32, domain: &[u8; 4]) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&id.to_le_bytes());
    key[12..16].copy_from_slice(domain);
    ChaCha8Rng::from_seed(key)
}

/// Independent generator for adversary strategies.
pub fn strategy_rng(seed: u64) -> ChaCha8Rng {
    keyed_rng(seed, 0, b"ADVS")
}

/// Per-station coin substreams keyed by (master seed, station id) with the
/// round number selecting the ChaCha stream, so any (station, round) pair
/// can be replayed in isolation.
#[derive(Clone, Debug)]
pub struct CoinBank {
    rngs: Vec<ChaCha8Rng>,
    positioned_at: Vec<Option<u64>>,
    perturb: Option<(u64, u64)>,
}

impl CoinBank {
    pub fn new(master_seed: u64, p: usize) -> Self {
        CoinBank {
            rngs: (1..=p as u32)
                .map(|id| keyed_rng(master_seed, id, b"STAT"))
                .collect(),
            positioned_at: vec![None; p],
            perturb: None,
        }
    }

    /// From round `from` on, every station draws from a different stream
    /// family selected by `salt`.
    pub fn with_perturbation(mut self, from: u64, salt: u64) -> Self {
        self.perturb = Some((from, salt));
        self
    }

    /// Next raw 64-bit draw for `station` in `round`.
    pub fn draw(&mut self, station: StationId, round: u64) -> u64 {
        let slot = station.slot();
        if self.positioned_at[slot] != Some(round) {
            let stream = match self.perturb {
                Some((from, salt)) if round >= from => round ^ (salt.wrapping_add(1) << 40),
                _ => round,
            };
            let rng = &mut self.rngs[slot];
            rng.set_stream(stream);
            rng.set_word_pos(0);
            self.positioned_at[slot] = Some(round);
        }
        self.rngs[slot].next_u64()
    }

    pub fn toss(&mut self, station: StationId, round: u64, prob: Prob) -> bool {
        if prob == Prob::ONE {
            return true;
        }
        if prob.num == 0 {
            return false;
        }
        prob.heads(self.draw(station, round))
    }
}
