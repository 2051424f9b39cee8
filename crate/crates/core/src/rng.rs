//! Counter-based random numbers (Philox4x32-10).
//!
//! Every uniform is a pure function of `(seed, replication, stream, player, draw)`,
//! so a replication produces the same draws no matter which thread runs it or
//! in what order replications are scheduled.

use crate::dist::UniformSource;

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = a as u64 * b as u64;
    ((p >> 32) as u32, p as u32)
}

/// The Philox4x32 bijection with 10 rounds.
#[inline]
pub fn philox4x32_10(mut ctr: [u32; 4], mut key: [u32; 2]) -> [u32; 4] {
    for round in 0..10 {
        if round > 0 {
            key[0] = key[0].wrapping_add(W0);
            key[1] = key[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, ctr[0]);
        let (hi1, lo1) = mulhilo(M1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
    }
    ctr
}

/// Independent substreams within a replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Stream {
    /// Search draws.
    Draws = 0,
    /// Uniform keys for breaking exact ties.
    TieBreak = 1,
    /// A second, independent copy of the draws (two-sample comparisons).
    Alternate = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: [u32; 2],
}

#[inline]
fn to_open_unit(x: u32, y: u32) -> f64 {
    let bits = ((x as u64) << 32 | y as u64) >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng {
            key: [seed as u32, (seed >> 32) as u32],
        }
    }

    /// Uniform on (0, 1) for the given coordinates. `player` must be below 2^24.
    #[inline]
    pub fn uniform(&self, replication: u64, stream: Stream, player: u32, draw: u32) -> f64 {
        debug_assert!(player < (1 << 24));
        let ctr = [
            draw >> 1,
            player | (stream as u32) << 24,
            replication as u32,
            (replication >> 32) as u32,
        ];
        let out = philox4x32_10(ctr, self.key);
        if draw & 1 == 0 {
            to_open_unit(out[0], out[1])
        } else {
            to_open_unit(out[2], out[3])
        }
    }

    /// Sequential view of one player's draws in one replication.
    pub fn player_stream(&self, replication: u64, stream: Stream, player: u32) -> PlayerStream {
        PlayerStream {
            rng: *self,
            replication,
            stream,
            player,
            next_draw: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlayerStream {
    rng: CounterRng,
    replication: u64,
    stream: Stream,
    player: u32,
    next_draw: u32,
}

impl PlayerStream {
    pub fn draws_taken(&self) -> u32 {
        self.next_draw
    }
}

impl UniformSource for PlayerStream {
    fn next_uniform(&mut self) -> f64 {
        let u = self.rng.uniform(self.replication, self.stream, self.player, self.next_draw);
        self.next_draw += 1;
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_answer_vectors() {
        assert_eq!(
            philox4x32_10([0; 4], [0; 2]),
            [0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8]
        );
        assert_eq!(
            philox4x32_10([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd]
        );
        assert_eq!(
            philox4x32_10([0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344], [0xa4093822, 0x299f31d0]),
            [0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1]
        );
    }

    #[test]
    fn coordinates_are_independent_of_call_order() {
        let rng = CounterRng::new(42);
        let a = rng.uniform(7, Stream::Draws, 1, 3);
        let mut s = rng.player_stream(7, Stream::Draws, 1);
        let seq: Vec<f64> = (0..4).map(|_| s.next_uniform()).collect();
        assert_eq!(seq[3], a);
        assert_ne!(rng.uniform(7, Stream::TieBreak, 1, 3), a);
        assert_ne!(CounterRng::new(43).uniform(7, Stream::Draws, 1, 3), a);
    }

    #[test]
    fn uniforms_are_in_open_interval_with_right_mean() {
        let rng = CounterRng::new(1);
        let n = 200_000;
        let mut sum = 0.0;
        for i in 0..n {
            let u = rng.uniform(i, Stream::Draws, 0, 0);
            assert!(u > 0.0 && u < 1.0);
            sum += u;
        }
        let mean = sum / n as f64;
        // sd of the mean is 1/sqrt(12 n) ~ 6.5e-4
        assert!((mean - 0.5).abs() < 3e-3, "{mean}");
    }
}
