//! Stochastic reconfiguration: natural-gradient minimization of ⟨Φ|H|Φ⟩/⟨Φ|Φ⟩.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::estimator::{batch_estimate, local_energy, EstimateRecord};
use crate::linalg::{cholesky_solve, conjugate_gradient};
use crate::pauli::{GroupedOperator, WeightedPauliSum};
use crate::rbm::{RbmParams, TyingScheme};
use crate::sampler::{ChainSet, SamplerConfig, MAX_EXACT_DIM};
use crate::scalar::{Real, C};

/// Free-parameter count above which [`SolverKind::Auto`] switches to the iterative solver.
pub const DENSE_SOLVER_LIMIT: usize = 4000;
pub const CG_TOLERANCE: f64 = 1e-8;
pub const CG_MAX_ITERATIONS: usize = 1000;
/// Floor applied to diag(S) by the relative shift.
pub const DIAGONAL_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Dense up to [`DENSE_SOLVER_LIMIT`] free parameters, iterative above.
    Auto,
    DenseDirect,
    IterativeMatrixFree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    /// S_kk + λ·max(S_kk, 1e−10)
    Relative,
    /// S_kk + λ
    Identity,
}

/// Where expectations come from during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Metropolis samples.
    Sampled,
    /// Full enumeration weighted by |Φ|² (small systems only).
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SrConfig {
    pub iterations: usize,
    pub samples_per_iteration: usize,
    pub eta0: f64,
    pub eta_decay: f64,
    pub lambda0: f64,
    pub lambda_decay: f64,
    pub lambda_min: f64,
    pub shift: ShiftKind,
    pub solver: SolverKind,
    pub expectation: Expectation,
    pub init_scale: f64,
    /// Start from the Marshall sign on top of the random init (see [`RbmParams::with_marshall_sign`]).
    pub marshall_sign: bool,
    pub seed: u64,
}

impl Default for SrConfig {
    fn default() -> Self {
        Self {
            iterations: 300,
            samples_per_iteration: 1000,
            eta0: 0.05,
            eta_decay: 0.995,
            lambda0: 100.0,
            lambda_decay: 0.9,
            lambda_min: 1e-4,
            shift: ShiftKind::Relative,
            solver: SolverKind::Auto,
            expectation: Expectation::Sampled,
            init_scale: 0.05,
            marshall_sign: false,
            seed: 1,
        }
    }
}

impl SrConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.expectation == Expectation::Sampled && self.samples_per_iteration < 2 {
            return bad("samples_per_iteration must be at least 2");
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad("eta0 must be positive");
        }
        if !(self.eta_decay > 0.0 && self.eta_decay <= 1.0) {
            return bad("eta_decay must lie in (0, 1]");
        }
        if !(self.lambda_min > 0.0 && self.lambda0 > 0.0 && self.lambda_decay > 0.0) {
            return bad("lambda0, lambda_decay and lambda_min must be positive");
        }
        if !(self.init_scale > 0.0) {
            return bad("init_scale must be positive");
        }
        Ok(())
    }

    /// η(p) = η₀·decay^p
    pub fn eta(&self, p: usize) -> f64 {
        self.eta0 * self.eta_decay.powi(p as i32)
    }

    /// λ(p) = max(λ₀·b^p, λ_min)
    pub fn lambda(&self, p: usize) -> f64 {
        (self.lambda0 * self.lambda_decay.powi(p as i32)).max(self.lambda_min)
    }
}

/// Local energies and variational derivatives of a batch, optionally weighted.
#[derive(Clone, Debug)]
pub struct SampleBatch<T> {
    n_free: usize,
    /// Normalized weights; `None` means uniform.
    weights: Option<Vec<T>>,
    /// Row-major `n_samples × n_free`.
    o: Vec<C<T>>,
    e_loc: Vec<C<T>>,
}

impl<T: Real> SampleBatch<T> {
    pub fn new(
        n_free: usize,
        o: Vec<C<T>>,
        e_loc: Vec<C<T>>,
        weights: Option<Vec<T>>,
    ) -> Result<Self> {
        let n = e_loc.len();
        if n == 0 || o.len() != n * n_free || weights.as_ref().is_some_and(|w| w.len() != n) {
            return Err(Error::Shape("inconsistent sample batch".into()));
        }
        let weights = weights.map(|mut w| {
            let z: T = w.iter().copied().sum();
            w.iter_mut().for_each(|x| *x /= z);
            w
        });
        Ok(Self {
            n_free,
            weights,
            o,
            e_loc,
        })
    }

    /// Draws samples from the chains and evaluates E_loc and O on each.
    pub fn sampled(
        op: &GroupedOperator<T>,
        params: &RbmParams<T>,
        chains: &mut ChainSet<T>,
        n_samples: usize,
    ) -> Result<Self> {
        let n_free = params.free().len();
        let rows = chains.sample(params, n_samples, |lookup| {
            let mut o = vec![Complex::new(T::zero(), T::zero()); n_free];
            params.derivatives_into(lookup.config().as_slice(), lookup.theta(), &mut o);
            (local_energy(op, params, lookup), o)
        })?;
        let mut e = Vec::with_capacity(rows.len());
        let mut o = Vec::with_capacity(rows.len() * n_free);
        for (el, ol) in rows {
            e.push(el);
            o.extend(ol);
        }
        Self::new(n_free, o, e, None)
    }

    /// Every state of `basis`, weighted by the normalized |Φ|².
    pub fn exact(op: &GroupedOperator<T>, params: &RbmParams<T>, basis: &Basis) -> Result<Self> {
        if basis.n_sites() != params.n_visible() || op.n_sites() != params.n_visible() {
            return Err(Error::Shape(
                "operator, network and basis sizes differ".into(),
            ));
        }
        basis.ensure_dim("exact enumeration dimension", MAX_EXACT_DIM)?;
        let n_free = params.free().len();
        let rows: Vec<(T, C<T>, Vec<C<T>>)> = (0..basis.dim())
            .into_par_iter()
            .map(|i| -> Result<_> {
                let lookup = crate::rbm::LookupState::new(params, basis.config(i))?;
                let log = params.log_amplitude(lookup.config())?;
                let mut o = vec![Complex::new(T::zero(), T::zero()); n_free];
                params.derivatives_into(lookup.config().as_slice(), lookup.theta(), &mut o);
                Ok((log.re, local_energy(op, params, &lookup), o))
            })
            .collect::<Result<_>>()?;
        let logs: Vec<T> = rows.iter().map(|r| r.0).collect();
        let w = crate::sampler::normalized_weights(&logs);
        let mut e = Vec::with_capacity(rows.len());
        let mut o = Vec::with_capacity(rows.len() * n_free);
        for (_, el, ol) in rows {
            e.push(el);
            o.extend(ol);
        }
        Self::new(n_free, o, e, Some(w))
    }

    pub fn n_samples(&self) -> usize {
        self.e_loc.len()
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn e_loc(&self) -> &[C<T>] {
        &self.e_loc
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    fn weight(&self, s: usize) -> T {
        match &self.weights {
            Some(w) => w[s],
            None => T::one() / T::from_f64(self.e_loc.len() as f64),
        }
    }

    fn row(&self, s: usize) -> &[C<T>] {
        &self.o[s * self.n_free..(s + 1) * self.n_free]
    }

    /// ⟨O_k⟩ for every free parameter.
    pub fn mean_o(&self) -> Vec<C<T>> {
        let mut m = vec![Complex::new(T::zero(), T::zero()); self.n_free];
        for s in 0..self.n_samples() {
            let w = self.weight(s);
            for (mk, ok) in m.iter_mut().zip(self.row(s)) {
                *mk += ok * w;
            }
        }
        m
    }

    /// ⟨Re E_loc⟩ under the batch weights.
    pub fn mean_energy(&self) -> C<T> {
        (0..self.n_samples())
            .map(|s| self.e_loc[s] * self.weight(s))
            .sum()
    }

    /// Estimate record; weighted batches are exact, so their error bar is zero.
    pub fn estimate(&self) -> Result<EstimateRecord> {
        if self.weights.is_none() {
            return batch_estimate(&self.e_loc);
        }
        let mean = self.mean_energy();
        let second: T = (0..self.n_samples())
            .map(|s| self.e_loc[s].norm_sqr() * self.weight(s))
            .sum();
        Ok(EstimateRecord {
            mean: mean.re.as_f64(),
            mean_imag: mean.im.as_f64(),
            stderr: 0.0,
            variance: (second - mean.re * mean.re).as_f64(),
            n_samples: self.n_samples(),
            reliable: true,
        })
    }
}

/// F_k = ⟨E_loc O_k*⟩ − ⟨E_loc⟩⟨O_k*⟩.
pub fn compute_forces<T: Real>(batch: &SampleBatch<T>) -> Vec<C<T>> {
    let e_mean = batch.mean_energy();
    let o_mean = batch.mean_o();
    let mut f = vec![Complex::new(T::zero(), T::zero()); batch.n_free];
    for s in 0..batch.n_samples() {
        let we = batch.e_loc[s] * batch.weight(s);
        for (fk, ok) in f.iter_mut().zip(batch.row(s)) {
            *fk += we * ok.conj();
        }
    }
    for (fk, mk) in f.iter_mut().zip(&o_mean) {
        *fk -= e_mean * mk.conj();
    }
    f
}

/// Covariance S_{kk′} = ⟨O_k* O_{k′}⟩ − ⟨O_k*⟩⟨O_{k′}⟩, dense or as an action.
#[derive(Clone, Debug)]
pub enum Metric<T> {
    Dense {
        n: usize,
        s: Vec<C<T>>,
    },
    /// Rows √w_s (O_s − ⟨O⟩), so that S = Xᴴ X.
    Implicit {
        n: usize,
        x: Vec<C<T>>,
    },
}

impl<T: Real> Metric<T> {
    pub fn dim(&self) -> usize {
        match self {
            Metric::Dense { n, .. } | Metric::Implicit { n, .. } => *n,
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        match self {
            Metric::Dense { n, s } => (0..*n).map(|k| s[k * n + k].re).collect(),
            Metric::Implicit { n, x } => {
                let mut d = vec![T::zero(); *n];
                for row in x.chunks_exact(*n) {
                    for (dk, xk) in d.iter_mut().zip(row) {
                        *dk += xk.norm_sqr();
                    }
                }
                d
            }
        }
    }

    /// `S v`
    pub fn apply(&self, v: &[C<T>]) -> Vec<C<T>> {
        match self {
            Metric::Dense { n, s } => s
                .par_chunks_exact(*n)
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect(),
            Metric::Implicit { n, x } => {
                let xv: Vec<C<T>> = x
                    .par_chunks_exact(*n)
                    .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                    .collect();
                let mut out = vec![Complex::new(T::zero(), T::zero()); *n];
                for (row, c) in x.chunks_exact(*n).zip(&xv) {
                    for (ok, xk) in out.iter_mut().zip(row) {
                        *ok += xk.conj() * c;
                    }
                }
                out
            }
        }
    }
}

/// Builds the metric; `dense` selects the explicit matrix.
pub fn compute_metric<T: Real>(batch: &SampleBatch<T>, dense: bool) -> Metric<T> {
    let n = batch.n_free;
    let mean = batch.mean_o();
    let mut x = Vec::with_capacity(batch.o.len());
    for s in 0..batch.n_samples() {
        let sw = batch.weight(s).sqrt();
        x.extend(batch.row(s).iter().zip(&mean).map(|(o, m)| (o - m) * sw));
    }
    if !dense {
        return Metric::Implicit { n, x };
    }
    let n_samples = batch.n_samples();
    // upper triangle row by row, then mirrored
    let mut s: Vec<C<T>> = (0..n)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut row = vec![Complex::new(T::zero(), T::zero()); n];
            for r in 0..n_samples {
                let xr = &x[r * n..(r + 1) * n];
                let a = xr[k].conj();
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for (j, xj) in xr.iter().enumerate().skip(k) {
                    row[j] += a * xj;
                }
            }
            row
        })
        .collect();
    for k in 0..n {
        for j in 0..k {
            s[k * n + j] = s[j * n + k].conj();
        }
    }
    Metric::Dense { n, s }
}

/// Details of one solved update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    /// Shift actually used (λ or 10λ after a failed first attempt).
    pub lambda: f64,
    pub solver_iterations: usize,
}

fn shifted_diagonal<T: Real>(diag: &[T], lambda: T, shift: ShiftKind) -> Vec<T> {
    let floor = T::from_f64(DIAGONAL_FLOOR);
    diag.iter()
        .map(|&d| match shift {
            ShiftKind::Relative => lambda * d.max(floor),
            ShiftKind::Identity => lambda,
        })
        .collect()
}

fn solve_once<T: Real>(
    metric: &Metric<T>,
    forces: &[C<T>],
    lambda: T,
    shift: ShiftKind,
) -> Result<(Vec<C<T>>, usize)> {
    let add = shifted_diagonal(&metric.diagonal(), lambda, shift);
    let delta = match metric {
        Metric::Dense { n, s } => {
            let mut a = s.clone();
            for k in 0..*n {
                a[k * n + k] += add[k];
            }
            let x = cholesky_solve(&mut a, *n, forces)
                .ok_or_else(|| Error::Numeric("shifted metric is not positive definite".into()))?;
            (x, 1)
        }
        Metric::Implicit { .. } => {
            let apply = |v: &[C<T>]| {
                let mut out = metric.apply(v);
                for ((o, vi), a) in out.iter_mut().zip(v).zip(&add) {
                    *o += vi * *a;
                }
                out
            };
            let jacobi: Vec<T> = metric
                .diagonal()
                .iter()
                .zip(&add)
                .map(|(&d, &a)| d + a)
                .collect();
            let sol = conjugate_gradient(
                apply,
                forces,
                Some(&jacobi),
                T::tolerance(CG_TOLERANCE),
                CG_MAX_ITERATIONS,
            )?;
            (sol.x, sol.iterations)
        }
    };
    if delta
        .0
        .iter()
        .any(|d| !(d.re.is_finite() && d.im.is_finite()))
    {
        return Err(Error::Numeric("non-finite update direction".into()));
    }
    Ok(delta)
}

/// Solves (S + shift)·δ = F and returns Ω − η·δ. A failed solve is retried once with 10λ.
pub fn sr_step<T: Real>(
    params: &RbmParams<T>,
    forces: &[C<T>],
    metric: &Metric<T>,
    eta: T,
    lambda: T,
    shift: ShiftKind,
) -> Result<(RbmParams<T>, StepInfo)> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidConfig(
            "the metric shift must be positive".into(),
        ));
    }
    if forces.len() != params.free().len() || metric.dim() != forces.len() {
        return Err(Error::Shape(
            "forces, metric and parameters disagree in size".into(),
        ));
    }
    let ten = T::from_f64(10.0);
    let (delta, lam, iters) = match solve_once(metric, forces, lambda, shift) {
        Ok((d, it)) => (d, lambda, it),
        Err(first) => match solve_once(metric, forces, lambda * ten, shift) {
            Ok((d, it)) => (d, lambda * ten, it),
            Err(second) => {
                return Err(Error::Numeric(format!(
                    "SR solve failed at λ = {lambda} ({first}) and at 10λ ({second})"
                )))
            }
        },
    };
    let next = params.stepped(&delta, eta)?;
    Ok((
        next,
        StepInfo {
            lambda: lam.as_f64(),
            solver_iterations: iters,
        },
    ))
}

/// One entry of a learning curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub iter: usize,
    pub qv: f64,
    pub stderr: f64,
    pub var: f64,
    pub eta: f64,
    pub lambda: f64,
    pub wall_ms: u64,
}

/// Per-iteration training history.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LearnCurve {
    pub records: Vec<CurveRecord>,
    pub estimates: Vec<EstimateRecord>,
}

impl LearnCurve {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&CurveRecord> {
        self.records.last()
    }

    /// One JSON object per line, LF-terminated.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.qv).collect()
    }
}

/// Iterative SR training with resampling at every step.
pub struct Trainer<T: Real> {
    op: GroupedOperator<T>,
    params: RbmParams<T>,
    sr: SrConfig,
    sampler: SamplerConfig,
    chains: Option<ChainSet<T>>,
    basis: Option<Basis>,
    iteration: usize,
    curve: LearnCurve,
    started: Instant,
}

impl<T: Real> Trainer<T> {
    /// Random initial network for `scheme`.
    pub fn new(
        op: &WeightedPauliSum<T>,
        scheme: Arc<TyingScheme>,
        sr: SrConfig,
        sampler: SamplerConfig,
    ) -> Result<Self> {
        sr.validate()?;
        let mut params = RbmParams::random_init(scheme, T::from_f64(sr.init_scale), sr.seed)?;
        if sr.marshall_sign {
            params = params.with_marshall_sign()?;
        }
        Self::with_params(op, params, sr, sampler)
    }

    /// Starts from given parameters.
    pub fn with_params(
        op: &WeightedPauliSum<T>,
        params: RbmParams<T>,
        sr: SrConfig,
        sampler: SamplerConfig,
    ) -> Result<Self> {
        sr.validate()?;
        sampler.validate()?;
        if op.n_sites() != params.n_visible() {
            return Err(Error::Shape(format!(
                "operator acts on {} sites, network has {}",
                op.n_sites(),
                params.n_visible()
            )));
        }
        let (chains, basis) = match sr.expectation {
            Expectation::Sampled => (
                Some(ChainSet::new(&params, sampler.clone(), sr.seed)?),
                None,
            ),
            Expectation::Exact => {
                let b = Basis::new(params.n_visible(), sampler.sector)?;
                b.ensure_dim("exact enumeration dimension", MAX_EXACT_DIM)?;
                (None, Some(b))
            }
        };
        Ok(Self {
            op: GroupedOperator::new(op),
            params,
            sr,
            sampler,
            chains,
            basis,
            iteration: 0,
            curve: LearnCurve::default(),
            started: Instant::now(),
        })
    }

    pub fn params(&self) -> &RbmParams<T> {
        &self.params
    }

    pub fn curve(&self) -> &LearnCurve {
        &self.curve
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_done(&self) -> bool {
        self.iteration >= self.sr.iterations
    }

    pub fn sampler_config(&self) -> &SamplerConfig {
        &self.sampler
    }

    pub fn acceptance_rates(&self) -> Vec<f64> {
        self.chains
            .as_ref()
            .map(ChainSet::acceptance_rates)
            .unwrap_or_default()
    }

    /// Current batch (sampled or enumerated) at the present parameters.
    pub fn batch(&mut self) -> Result<SampleBatch<T>> {
        match (&mut self.chains, &self.basis) {
            (Some(chains), _) => SampleBatch::sampled(
                &self.op,
                &self.params,
                chains,
                self.sr.samples_per_iteration,
            ),
            (None, Some(basis)) => SampleBatch::exact(&self.op, &self.params, basis),
            (None, None) => unreachable!("trainer always has chains or a basis"),
        }
    }

    /// Resample, estimate, and apply one SR update. Parameters are left untouched on error.
    pub fn step(&mut self) -> Result<CurveRecord> {
        let p = self.iteration;
        let batch = self.batch()?;
        let estimate = batch.estimate()?;
        if !estimate.mean.is_finite() || !estimate.variance.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite estimate at iteration {p}"
            )));
        }
        let forces = compute_forces(&batch);
        if forces
            .iter()
            .any(|f| !(f.re.is_finite() && f.im.is_finite()))
        {
            return Err(Error::Numeric(format!(
                "non-finite forces at iteration {p}"
            )));
        }
        let dense = match self.sr.solver {
            SolverKind::Auto => batch.n_free() <= DENSE_SOLVER_LIMIT,
            SolverKind::DenseDirect => true,
            SolverKind::IterativeMatrixFree => false,
        };
        let metric = compute_metric(&batch, dense);
        let eta = self.sr.eta(p);
        let lambda = self.sr.lambda(p);
        let (next, info) = sr_step(
            &self.params,
            &forces,
            &metric,
            T::from_f64(eta),
            T::from_f64(lambda),
            self.sr.shift,
        )?;
        self.params = next;
        self.iteration += 1;
        let record = CurveRecord {
            iter: p,
            qv: estimate.mean,
            stderr: estimate.stderr,
            var: estimate.reported_variance(),
            eta,
            lambda: info.lambda,
            wall_ms: self.started.elapsed().as_millis() as u64,
        };
        self.curve.records.push(record.clone());
        self.curve.estimates.push(estimate);
        Ok(record)
    }

    /// Runs the remaining iterations.
    pub fn run(&mut self) -> Result<()> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    /// Final parameters and curve.
    pub fn finish(self) -> (RbmParams<T>, LearnCurve) {
        (self.params, self.curve)
    }
}

/// Trains a fresh network for `op` and returns the final parameters and learning curve.
pub fn train<T: Real>(
    op: &WeightedPauliSum<T>,
    scheme: Arc<TyingScheme>,
    sr: SrConfig,
    sampler: SamplerConfig,
) -> Result<(RbmParams<T>, LearnCurve)> {
    let mut t = Trainer::new(op, scheme, sr, sampler)?;
    t.run()?;
    Ok(t.finish())
}
