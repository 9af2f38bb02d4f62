//! Local estimators of operator expectations, blocking error bars and exact
//! full-enumeration expectations.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::pauli::{GroupedOperator, SpinConfig, WeightedPauliSum};
use crate::rbm::{LookupState, RbmParams};
use crate::sampler::{normalized_weights, MAX_EXACT_DIM};
use crate::scalar::{Real, C};

/// Fewer samples than this make the error bar unreliable.
pub const MIN_RELIABLE_SAMPLES: usize = 16;

/// Unnormalized wavefunction given through its log-amplitude.
pub trait Wavefunction<T: Real>: Sync {
    fn n_sites(&self) -> usize;

    /// log Φ(Ξ), or `None` where the amplitude vanishes.
    fn log_psi(&self, config: &SpinConfig) -> Option<C<T>>;

    /// E_loc(Ξ) = Σ_Ξ′ ⟨Ξ|H|Ξ′⟩ Φ(Ξ′)/Φ(Ξ); `None` where Φ(Ξ) = 0.
    fn local_energy(&self, op: &GroupedOperator<T>, config: &SpinConfig) -> Option<C<T>> {
        let own = self.log_psi(config)?;
        Some(local_energy_with(op, config.as_slice(), |flips| {
            self.log_psi(&config.with_flips(flips))
                .map(|l| (l - own).exp())
        }))
    }
}

impl<T: Real> Wavefunction<T> for RbmParams<T> {
    fn n_sites(&self) -> usize {
        self.n_visible()
    }

    fn log_psi(&self, config: &SpinConfig) -> Option<C<T>> {
        self.log_amplitude(config).ok()
    }

    fn local_energy(&self, op: &GroupedOperator<T>, config: &SpinConfig) -> Option<C<T>> {
        let lookup = LookupState::new(self, config.clone()).ok()?;
        Some(local_energy(op, self, &lookup))
    }
}

/// Amplitude table over an enumerable basis; states outside the basis have Φ = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct TableWavefunction<T> {
    basis: Basis,
    amplitudes: Vec<C<T>>,
}

impl<T: Real> TableWavefunction<T> {
    pub fn new(basis: Basis, amplitudes: Vec<C<T>>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::Shape(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }
}

impl<T: Real> Wavefunction<T> for TableWavefunction<T> {
    fn n_sites(&self) -> usize {
        self.basis.n_sites()
    }

    fn log_psi(&self, config: &SpinConfig) -> Option<C<T>> {
        let a = self.amplitudes[self.basis.index_of(config.to_index())?];
        (a.norm_sqr() > T::zero()).then(|| a.ln())
    }
}

/// Sums a grouped operator row given the ratio Φ(Ξ′)/Φ(Ξ) for each flip set.
fn local_energy_with<T: Real>(
    op: &GroupedOperator<T>,
    spins: &[i8],
    mut ratio: impl FnMut(&[usize]) -> Option<C<T>>,
) -> C<T> {
    let mut e = Complex::new(T::zero(), T::zero());
    for (c, p) in &op.diagonal {
        e.re += if p.phase_on(spins).quarter_turns() == 0 {
            *c
        } else {
            -*c
        };
    }
    for g in &op.groups {
        // ⟨Ξ|P|Ξ′⟩ = conj ⟨Ξ′|P|Ξ⟩ for Hermitian P
        let mut amp = Complex::new(T::zero(), T::zero());
        for (c, p) in &g.terms {
            amp += p.phase_on(spins).conj().rotate(Complex::new(*c, T::zero()));
        }
        if amp.norm_sqr() == T::zero() {
            continue;
        }
        if let Some(r) = ratio(&g.flips) {
            e += amp * r;
        }
    }
    e
}

/// E_loc for an RBM at the configuration cached in `lookup`, with ratios from the cache.
pub fn local_energy<T: Real>(
    op: &GroupedOperator<T>,
    params: &RbmParams<T>,
    lookup: &LookupState<T>,
) -> C<T> {
    local_energy_with(op, lookup.config().as_slice(), |flips| {
        Some(params.log_ratio_unchecked(lookup, flips).exp())
    })
}

/// E_loc for an ungrouped operator; see [`local_energy`].
pub fn local_estimator<T: Real>(
    op: &WeightedPauliSum<T>,
    params: &RbmParams<T>,
    lookup: &LookupState<T>,
) -> Result<C<T>> {
    if op.n_sites() != params.n_visible() {
        return Err(Error::Shape("operator and network sizes differ".into()));
    }
    Ok(local_energy(&GroupedOperator::new(op), params, lookup))
}

/// Sample statistics of Re E_loc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub mean: f64,
    /// Mean of Im E_loc; tends to zero for Hermitian operators.
    pub mean_imag: f64,
    pub stderr: f64,
    /// ⟨H²⟩ − ⟨H⟩² from the second moment of E_loc.
    pub variance: f64,
    pub n_samples: usize,
    /// False when there are too few samples for a blocking estimate.
    pub reliable: bool,
}

impl EstimateRecord {
    /// Variance clamped at zero for reporting.
    pub fn reported_variance(&self) -> f64 {
        self.variance.max(0.0)
    }
}

/// Standard error of the mean by blocking: block sizes double until the estimate changes
/// by less than 5%; without a plateau the largest estimate seen is returned.
pub fn blocking_stderr(x: &[f64]) -> f64 {
    let mut level: Vec<f64> = x.to_vec();
    let mut prev: Option<f64> = None;
    let mut largest = 0.0f64;
    while level.len() >= 2 {
        let n = level.len() as f64;
        let mean = level.iter().sum::<f64>() / n;
        let ss = level.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        let se = (ss / (n * (n - 1.0))).sqrt();
        if let Some(p) = prev {
            if (se - p).abs() <= 0.05 * p || (se == 0.0 && p == 0.0) {
                return p;
            }
        }
        largest = largest.max(se);
        prev = Some(se);
        if level.len() < 2 * MIN_RELIABLE_SAMPLES {
            break;
        }
        level = level.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
    }
    largest
}

/// Mean, blocking stderr and variance of a batch of local estimates.
pub fn batch_estimate<T: Real>(e_loc: &[C<T>]) -> Result<EstimateRecord> {
    if e_loc.is_empty() {
        return Err(Error::Numeric("no samples to estimate from".into()));
    }
    let n = e_loc.len() as f64;
    let re: Vec<f64> = e_loc.iter().map(|e| e.re.as_f64()).collect();
    let mean = re.iter().sum::<f64>() / n;
    let mean_imag = e_loc.iter().map(|e| e.im.as_f64()).sum::<f64>() / n;
    let second = e_loc.iter().map(|e| e.norm_sqr().as_f64()).sum::<f64>() / n;
    Ok(EstimateRecord {
        mean,
        mean_imag,
        stderr: blocking_stderr(&re),
        variance: second - mean * mean,
        n_samples: e_loc.len(),
        reliable: e_loc.len() >= MIN_RELIABLE_SAMPLES,
    })
}

/// Normalized |Φ|² weights and local energies over every state of `basis`.
pub fn exact_local_energies<T: Real, W: Wavefunction<T>>(
    op: &WeightedPauliSum<T>,
    psi: &W,
    basis: &Basis,
) -> Result<(Vec<T>, Vec<C<T>>)> {
    if op.n_sites() != psi.n_sites() || basis.n_sites() != psi.n_sites() {
        return Err(Error::Shape(
            "operator, wavefunction and basis sizes differ".into(),
        ));
    }
    basis.ensure_dim("exact enumeration dimension", MAX_EXACT_DIM)?;
    let grouped = GroupedOperator::new(op);
    let rows: Vec<(T, C<T>)> = (0..basis.dim())
        .into_par_iter()
        .map(|i| {
            let c = basis.config(i);
            match psi.log_psi(&c) {
                None => (T::neg_infinity(), Complex::new(T::zero(), T::zero())),
                Some(l) => (l.re, psi.local_energy(&grouped, &c).unwrap_or_default()),
            }
        })
        .collect();
    let logs: Vec<T> = rows.iter().map(|r| r.0).collect();
    if logs.iter().all(|l| *l == T::neg_infinity()) {
        return Err(Error::Numeric(
            "wavefunction vanishes on the whole basis".into(),
        ));
    }
    Ok((
        normalized_weights(&logs),
        rows.into_iter().map(|r| r.1).collect(),
    ))
}

/// Exact normalized expectation and variance of `op` in the state Φ restricted to `basis`.
pub fn exact_expectation<T: Real, W: Wavefunction<T>>(
    op: &WeightedPauliSum<T>,
    psi: &W,
    basis: &Basis,
) -> Result<(T, T)> {
    let (w, e) = exact_local_energies(op, psi, basis)?;
    let mean: T = w.iter().zip(&e).map(|(&p, x)| p * x.re).sum();
    let second: T = w.iter().zip(&e).map(|(&p, x)| p * x.norm_sqr()).sum();
    Ok((mean, second - mean * mean))
}
