//! Enumerable bases: the full 2^N space or a fixed-Σᶻ sector.
//!
//! Sector states are indexed by their colexicographic rank among bitstrings with the
//! same popcount (the combinatorial number system), which coincides with ascending
//! integer order.

use crate::error::{Error, Result};
use crate::pauli::SpinConfig;

/// Largest number of sites whose basis may be enumerated.
pub const MAX_ENUMERATION_SITES: usize = 30;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Basis {
    Full { n_sites: usize },
    Sector(SectorBasis),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorBasis {
    n_sites: usize,
    magnetization: i32,
    n_down: usize,
    binom: Vec<Vec<u64>>,
    dim: usize,
}

impl Basis {
    /// Full basis, or the Σᶻ sector when `magnetization` is given.
    pub fn new(n_sites: usize, magnetization: Option<i32>) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_ENUMERATION_SITES {
            return Err(Error::Capacity {
                what: "enumerable sites",
                size: n_sites,
                limit: MAX_ENUMERATION_SITES,
            });
        }
        match magnetization {
            None => Ok(Basis::Full { n_sites }),
            Some(m) => Ok(Basis::Sector(SectorBasis::new(n_sites, m)?)),
        }
    }

    pub fn n_sites(&self) -> usize {
        match self {
            Basis::Full { n_sites } => *n_sites,
            Basis::Sector(s) => s.n_sites,
        }
    }

    pub fn sector(&self) -> Option<i32> {
        match self {
            Basis::Full { .. } => None,
            Basis::Sector(s) => Some(s.magnetization),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Basis::Full { n_sites } => 1usize << n_sites,
            Basis::Sector(s) => s.dim,
        }
    }

    /// Integer encoding of the `index`-th basis state.
    #[inline]
    pub fn state(&self, index: usize) -> u64 {
        match self {
            Basis::Full { .. } => index as u64,
            Basis::Sector(s) => s.unrank(index),
        }
    }

    /// Position of an encoded state, or `None` when it lies outside the basis.
    #[inline]
    pub fn index_of(&self, state: u64) -> Option<usize> {
        match self {
            Basis::Full { n_sites } => ((state >> n_sites) == 0).then_some(state as usize),
            Basis::Sector(s) => s.rank(state),
        }
    }

    pub fn config(&self, index: usize) -> SpinConfig {
        SpinConfig::from_index(self.state(index), self.n_sites())
    }

    pub fn configs(&self) -> impl Iterator<Item = SpinConfig> + '_ {
        (0..self.dim()).map(move |i| self.config(i))
    }

    /// Checks that the basis dimension does not exceed `limit`.
    pub fn ensure_dim(&self, what: &'static str, limit: usize) -> Result<()> {
        if self.dim() > limit {
            return Err(Error::Capacity {
                what,
                size: self.dim(),
                limit,
            });
        }
        Ok(())
    }
}

impl SectorBasis {
    fn new(n_sites: usize, magnetization: i32) -> Result<Self> {
        let n = n_sites as i32;
        if magnetization.abs() > n || (n - magnetization) % 2 != 0 {
            return Err(Error::Domain(format!(
                "Σᶻ = {magnetization} is not reachable with {n_sites} spins"
            )));
        }
        let n_down = ((n - magnetization) / 2) as usize;
        let mut binom = vec![vec![0u64; n_down + 2]; n_sites + 1];
        for line in binom.iter_mut() {
            line[0] = 1;
        }
        for row in 1..=n_sites {
            for k in 1..=n_down + 1 {
                binom[row][k] = binom[row - 1][k - 1] + binom[row - 1][k];
            }
        }
        let dim = binom[n_sites][n_down] as usize;
        Ok(Self {
            n_sites,
            magnetization,
            n_down,
            binom,
            dim,
        })
    }

    #[inline]
    fn choose(&self, n: usize, k: usize) -> u64 {
        if k > n {
            0
        } else {
            self.binom[n][k]
        }
    }

    fn rank(&self, state: u64) -> Option<usize> {
        if (state >> self.n_sites) != 0 || state.count_ones() as usize != self.n_down {
            return None;
        }
        let mut rank = 0u64;
        let mut bits = state;
        let mut j = 1;
        while bits != 0 {
            let pos = bits.trailing_zeros() as usize;
            rank += self.choose(pos, j);
            bits &= bits - 1;
            j += 1;
        }
        Some(rank as usize)
    }

    fn unrank(&self, index: usize) -> u64 {
        let mut rank = index as u64;
        let mut state = 0u64;
        let mut pos = self.n_sites;
        for j in (1..=self.n_down).rev() {
            // largest pos with C(pos, j) <= rank
            pos -= 1;
            while self.choose(pos, j) > rank {
                pos -= 1;
            }
            rank -= self.choose(pos, j);
            state |= 1 << pos;
        }
        state
    }
}
