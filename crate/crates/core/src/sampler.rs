//! Metropolis sampling of spin configurations from |Φ(Ξ)|².

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::pauli::SpinConfig;
use crate::rbm::{LookupState, RbmParams};
use crate::scalar::Real;

/// Largest basis dimension accepted by full-enumeration oracles.
pub const MAX_EXACT_DIM: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    SingleFlip,
    /// Swaps one up and one down spin; conserves Σᶻ.
    PairExchange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_chains: usize,
    pub sweeps_per_sample: usize,
    pub warmup_sweeps: usize,
    pub move_kind: MoveKind,
    pub sector: Option<i32>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_chains: 4,
            sweeps_per_sample: 1,
            warmup_sweeps: 100,
            move_kind: MoveKind::SingleFlip,
            sector: None,
        }
    }
}

impl SamplerConfig {
    /// Sector-preserving configuration for Σᶻ = `sector`.
    pub fn in_sector(sector: i32) -> Self {
        Self {
            move_kind: MoveKind::PairExchange,
            sector: Some(sector),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::InvalidConfig(
                "at least one chain is required".into(),
            ));
        }
        if self.sweeps_per_sample == 0 {
            return Err(Error::InvalidConfig(
                "sweeps_per_sample must be positive".into(),
            ));
        }
        match (self.move_kind, self.sector) {
            (MoveKind::PairExchange, None) => Err(Error::InvalidConfig(
                "pair_exchange moves need a fixed Σᶻ sector".into(),
            )),
            (MoveKind::SingleFlip, Some(_)) => Err(Error::InvalidConfig(
                "single_flip moves cannot stay in a Σᶻ sector".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// One Markov chain: configuration, hidden-unit cache, private RNG stream and counters.
#[derive(Clone, Debug)]
pub struct ChainState<T> {
    lookup: LookupState<T>,
    rng: ChaCha8Rng,
    id: u64,
    proposed: u64,
    accepted: u64,
}

impl<T: Real> ChainState<T> {
    /// Chain `id` with a random initial configuration (inside `sector` when given).
    pub fn new(params: &RbmParams<T>, seed: u64, id: u64, sector: Option<i32>) -> Result<Self> {
        let n = params.n_visible();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        let spins = match sector {
            None => (0..n)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect(),
            Some(m) => {
                let ni = n as i32;
                if m.abs() > ni || (ni - m) % 2 != 0 {
                    return Err(Error::Domain(format!(
                        "Σᶻ = {m} is not reachable with {n} spins"
                    )));
                }
                let n_down = ((ni - m) / 2) as usize;
                let mut spins = vec![1i8; n];
                spins[..n_down].iter_mut().for_each(|s| *s = -1);
                for i in (1..n).rev() {
                    let j = rng.random_range(0..=i);
                    spins.swap(i, j);
                }
                spins
            }
        };
        Self::with_config(params, SpinConfig::new(spins)?, id, rng)
    }

    /// Chain starting from a given configuration.
    pub fn from_config(
        params: &RbmParams<T>,
        config: SpinConfig,
        seed: u64,
        id: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        Self::with_config(params, config, id, rng)
    }

    fn with_config(
        params: &RbmParams<T>,
        config: SpinConfig,
        id: u64,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        Ok(Self {
            lookup: LookupState::new(params, config)?,
            rng,
            id,
            proposed: 0,
            accepted: 0,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn config(&self) -> &SpinConfig {
        self.lookup.config()
    }

    pub fn lookup(&self) -> &LookupState<T> {
        &self.lookup
    }

    pub fn proposed(&self) -> u64 {
        self.proposed
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// Rebuilds the cache after the parameters changed.
    pub fn refresh(&mut self, params: &RbmParams<T>) -> Result<()> {
        self.lookup.refresh(params)
    }

    fn propose(&mut self, mv: MoveKind) -> Option<[usize; 2]> {
        let spins = self.lookup.config().as_slice();
        let n = spins.len();
        match mv {
            MoveKind::SingleFlip => {
                // k == n holds the state, which keeps the hypercube walk aperiodic
                let k = self.rng.random_range(0..=n);
                Some([k, usize::MAX])
            }
            MoveKind::PairExchange => {
                let m = self.lookup.config().magnetization();
                if m.unsigned_abs() as usize == n {
                    return None;
                }
                loop {
                    let i = self.rng.random_range(0..n);
                    let j = self.rng.random_range(0..n);
                    if spins[i] != spins[j] {
                        return Some([i, j]);
                    }
                }
            }
        }
    }

    /// One Metropolis proposal; returns whether it was accepted.
    pub fn metropolis_step(&mut self, params: &RbmParams<T>, mv: MoveKind) -> bool {
        self.proposed += 1;
        let Some(sites) = self.propose(mv) else {
            return false;
        };
        if sites[0] == self.lookup.config().len() {
            self.accepted += 1;
            return true;
        }
        let flips: &[usize] = if sites[1] == usize::MAX {
            &sites[..1]
        } else {
            &sites
        };
        let r = params.log_ratio_unchecked(&self.lookup, flips);
        let two = T::one() + T::one();
        let log_p = (two * r.re).as_f64();
        let u: f64 = self.rng.random();
        let accept = log_p >= 0.0 || u < log_p.exp();
        if accept {
            self.lookup.update(params, flips);
            self.accepted += 1;
        }
        accept
    }

    /// One sweep: N proposals.
    pub fn sweep(&mut self, params: &RbmParams<T>, mv: MoveKind) {
        for _ in 0..self.lookup.config().len() {
            self.metropolis_step(params, mv);
        }
    }

    /// Discards warmup sweeps, then calls `visit` on `n_samples` snapshots taken every
    /// `sweeps_per_sample` sweeps.
    pub fn run_with<F>(
        &mut self,
        params: &RbmParams<T>,
        cfg: &SamplerConfig,
        n_samples: usize,
        mut visit: F,
    ) where
        F: FnMut(&LookupState<T>),
    {
        if n_samples == 0 {
            return;
        }
        for _ in 0..cfg.warmup_sweeps {
            self.sweep(params, cfg.move_kind);
        }
        for _ in 0..n_samples {
            for _ in 0..cfg.sweeps_per_sample {
                self.sweep(params, cfg.move_kind);
            }
            visit(&self.lookup);
        }
    }
}

/// Runs one chain and returns its sample stream.
pub fn run_chain<T: Real>(
    params: &RbmParams<T>,
    chain: &mut ChainState<T>,
    cfg: &SamplerConfig,
    n_samples: usize,
) -> Vec<SpinConfig> {
    let mut out = Vec::with_capacity(n_samples);
    chain.run_with(params, cfg, n_samples, |l| out.push(l.config().clone()));
    out
}

/// Number of samples drawn by chain `c` when `total` samples are split over `n_chains`.
pub fn chain_share(total: usize, n_chains: usize, c: usize) -> usize {
    total / n_chains + usize::from(c < total % n_chains)
}

/// A set of chains run concurrently with results reduced in chain order.
#[derive(Clone, Debug)]
pub struct ChainSet<T> {
    chains: Vec<ChainState<T>>,
    config: SamplerConfig,
}

impl<T: Real> ChainSet<T> {
    pub fn new(params: &RbmParams<T>, config: SamplerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let chains = (0..config.n_chains as u64)
            .map(|id| ChainState::new(params, seed, id, config.sector))
            .collect::<Result<_>>()?;
        Ok(Self { chains, config })
    }

    pub fn chains(&self) -> &[ChainState<T>] {
        &self.chains
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// Draws `total` samples; `map` turns each snapshot into a record. Records are
    /// concatenated chain by chain, so the result does not depend on scheduling.
    pub fn sample<R, F>(&mut self, params: &RbmParams<T>, total: usize, map: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(&LookupState<T>) -> R + Sync,
    {
        let n_chains = self.chains.len();
        let cfg = &self.config;
        let per_chain: Vec<Vec<R>> = self
            .chains
            .par_iter_mut()
            .enumerate()
            .map(|(c, chain)| -> Result<Vec<R>> {
                chain.refresh(params)?;
                let share = chain_share(total, n_chains, c);
                let mut out = Vec::with_capacity(share);
                chain.run_with(params, cfg, share, |l| out.push(map(l)));
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok(per_chain.into_iter().flatten().collect())
    }

    /// Per-chain acceptance rates.
    pub fn acceptance_rates(&self) -> Vec<f64> {
        self.chains
            .iter()
            .map(ChainState::acceptance_rate)
            .collect()
    }
}

/// Normalized |Φ(Ξ)|² over every state of `basis`, in basis order.
pub fn exact_distribution<T: Real>(params: &RbmParams<T>, basis: &Basis) -> Result<Vec<T>> {
    if basis.n_sites() != params.n_visible() {
        return Err(Error::Shape("basis and network sizes differ".into()));
    }
    basis.ensure_dim("exact enumeration dimension", MAX_EXACT_DIM)?;
    let logs: Vec<T> = (0..basis.dim())
        .into_par_iter()
        .map(|i| params.log_amplitude(&basis.config(i)).map(|l| l.re))
        .collect::<Result<_>>()?;
    Ok(normalized_weights(&logs))
}

/// exp(2·l) normalized to unit sum, computed with a max shift.
pub(crate) fn normalized_weights<T: Real>(log_re: &[T]) -> Vec<T> {
    let two = T::one() + T::one();
    let max = log_re.iter().copied().fold(T::neg_infinity(), T::max);
    let mut w: Vec<T> = log_re.iter().map(|&l| (two * (l - max)).exp()).collect();
    let z: T = w.iter().copied().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w
}
