//! Exact diagonalization: Lanczos minimum eigenpair over a bitmask Pauli matvec.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::estimator::TableWavefunction;
use crate::linalg::{axpy, dot, norm, tridiagonal_eigen};
use crate::pauli::WeightedPauliSum;
use crate::rbm::RbmParams;
use crate::sampler::MAX_EXACT_DIM;
use crate::scalar::{Real, C};

/// Largest Hilbert-space dimension handled by the Lanczos oracle.
pub const MAX_ED_DIM: usize = 1 << 20;
/// Dimensions up to this size use a Krylov space spanning the whole basis.
pub const FULL_KRYLOV_DIM: usize = 256;

/// Sparse operator on a basis, stored as flip masks with their diagonal sign patterns.
#[derive(Clone, Debug)]
pub struct SparseOperator<T> {
    basis: Basis,
    groups: Vec<(u64, Vec<(u64, u8, T)>)>,
    scale: T,
}

impl<T: Real> SparseOperator<T> {
    pub fn new(op: &WeightedPauliSum<T>, basis: Basis) -> Result<Self> {
        if op.n_sites() != basis.n_sites() {
            return Err(Error::Shape("operator and basis sizes differ".into()));
        }
        basis.ensure_dim("exact diagonalization dimension", MAX_ED_DIM)?;
        let mut groups: Vec<(u64, Vec<(u64, u8, T)>)> = Vec::new();
        for (c, p) in op.terms() {
            let (flip, sign, ny) = p.masks();
            match groups.iter_mut().find(|g| g.0 == flip) {
                Some(g) => g.1.push((sign, ny, *c)),
                None => groups.push((flip, vec![(sign, ny, *c)])),
            }
        }
        Ok(Self {
            basis,
            groups,
            scale: op.norm_bound().max(T::one()),
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Σ|cₛ|, an upper bound on the spectral norm (at least 1).
    pub fn scale(&self) -> T {
        self.scale
    }

    /// `out = H v`, row by row: ⟨s|P|s ⊕ f⟩ = conj(i^{n_y} (−1)^{|s ∧ sign|}).
    pub fn apply(&self, v: &[C<T>], out: &mut [C<T>]) {
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let s = self.basis.state(i);
            let mut acc = Complex::new(T::zero(), T::zero());
            for (flip, terms) in &self.groups {
                let mut coef = Complex::new(T::zero(), T::zero());
                for &(sign, ny, c) in terms {
                    let neg = (s & sign).count_ones() % 2 == 1;
                    let c = if neg { -c } else { c };
                    // conj(i^ny)
                    coef += match ny {
                        0 => Complex::new(c, T::zero()),
                        1 => Complex::new(T::zero(), -c),
                        2 => Complex::new(-c, T::zero()),
                        _ => Complex::new(T::zero(), c),
                    };
                }
                if coef.norm_sqr() == T::zero() {
                    continue;
                }
                if let Some(j) = self.basis.index_of(s ^ flip) {
                    acc += coef * v[j];
                }
            }
            *o = acc;
        });
    }

    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); v.len()];
        self.apply(v, &mut out);
        out
    }
}

/// Minimum eigenpair of an operator on a basis.
#[derive(Clone, Debug)]
pub struct EdResult<T> {
    pub min_eigenvalue: T,
    /// Normalized amplitudes in basis order.
    pub eigenvector: Vec<C<T>>,
    /// ‖Hv − Ev‖.
    pub residual: T,
    pub basis: Basis,
    pub matvecs: usize,
}

/// JSON summary of an [`EdResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdSummary {
    pub min_eigenvalue: f64,
    pub residual: f64,
    pub dim: usize,
    pub sector: Option<i32>,
}

/// Header written next to a binary eigenvector dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorHeader {
    pub dtype: String,
    pub byte_order: String,
    pub layout: String,
    pub length: usize,
    pub n_sites: usize,
    pub sector: Option<i32>,
    pub basis_order: String,
}

impl<T: Real> EdResult<T> {
    pub fn summary(&self) -> EdSummary {
        EdSummary {
            min_eigenvalue: self.min_eigenvalue.as_f64(),
            residual: self.residual.as_f64(),
            dim: self.basis.dim(),
            sector: self.basis.sector(),
        }
    }

    /// The eigenvector as a wavefunction.
    pub fn wavefunction(&self) -> TableWavefunction<T> {
        TableWavefunction::new(self.basis.clone(), self.eigenvector.clone())
            .expect("eigenvector matches its basis")
    }

    /// Writes the eigenvector as interleaved little-endian `f64` (re, im) pairs plus a JSON header.
    pub fn write_eigenvector(&self, data: &Path, header: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(16 * self.eigenvector.len());
        for a in &self.eigenvector {
            bytes.extend_from_slice(&a.re.as_f64().to_le_bytes());
            bytes.extend_from_slice(&a.im.as_f64().to_le_bytes());
        }
        fs::File::create(data)?.write_all(&bytes)?;
        let h = EigenvectorHeader {
            dtype: "float64".into(),
            byte_order: "little".into(),
            layout: "interleaved_complex".into(),
            length: self.eigenvector.len(),
            n_sites: self.basis.n_sites(),
            sector: self.basis.sector(),
            basis_order: "ascending_index_bit_k_set_means_down".into(),
        };
        fs::write(header, serde_json::to_string_pretty(&h)? + "\n")?;
        Ok(())
    }
}

/// Reads a dump written by [`EdResult::write_eigenvector`].
pub fn read_eigenvector(data: &Path, header: &Path) -> Result<(EigenvectorHeader, Vec<C<f64>>)> {
    let h: EigenvectorHeader = serde_json::from_str(&fs::read_to_string(header)?)?;
    let bytes = fs::read(data)?;
    if bytes.len() != 16 * h.length {
        return Err(Error::Shape(format!(
            "{} bytes for {} amplitudes",
            bytes.len(),
            h.length
        )));
    }
    let v = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex::new(re, im)
        })
        .collect();
    Ok((h, v))
}

/// Lanczos controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanczosOptions {
    /// Krylov vectors kept per cycle; capped by the basis dimension and a memory budget.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Target ‖Hv − Ev‖ relative to the operator scale Σ|cₛ|.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 120,
            max_restarts: 200,
            tolerance: 1e-10,
            seed: 0x5eed,
        }
    }
}

/// Smallest eigenvalue and eigenvector of `op`, in the full space or a Σᶻ sector.
pub fn min_eigenpair<T: Real>(
    op: &WeightedPauliSum<T>,
    sector: Option<i32>,
) -> Result<EdResult<T>> {
    min_eigenpair_with(op, sector, LanczosOptions::default())
}

pub fn min_eigenpair_with<T: Real>(
    op: &WeightedPauliSum<T>,
    sector: Option<i32>,
    opts: LanczosOptions,
) -> Result<EdResult<T>> {
    let basis = Basis::new(op.n_sites(), sector)?;
    let h = SparseOperator::new(op, basis)?;
    lanczos(&h, opts)
}

/// Restarted Lanczos with full reorthogonalization, restarting from the current Ritz vector.
pub fn lanczos<T: Real>(h: &SparseOperator<T>, opts: LanczosOptions) -> Result<EdResult<T>> {
    let dim = h.dim();
    let zero = Complex::new(T::zero(), T::zero());
    let memory_cap = ((1usize << 29) / (16 * dim)).max(8);
    let m_max = if dim <= FULL_KRYLOV_DIM {
        dim
    } else {
        opts.krylov_dim.min(dim).min(memory_cap).max(2)
    };
    let target = T::tolerance(opts.tolerance) * h.scale();
    let tiny = T::epsilon() * h.scale();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<C<T>> = (0..dim)
        .map(|_| {
            Complex::new(
                T::from_f64(rng.random::<f64>() - 0.5),
                T::from_f64(rng.random::<f64>() - 0.5),
            )
        })
        .collect();
    let mut matvecs = 0;
    let mut best: Option<(T, Vec<C<T>>, T)> = None;

    for _cycle in 0..=opts.max_restarts {
        let n0 = norm(&start);
        start.iter_mut().for_each(|x| *x /= n0);
        let mut vs: Vec<Vec<C<T>>> = vec![start.clone()];
        let mut alphas: Vec<T> = Vec::new();
        let mut betas: Vec<T> = Vec::new();
        let mut w = vec![zero; dim];
        loop {
            let j = vs.len() - 1;
            h.apply(&vs[j], &mut w);
            matvecs += 1;
            let a = dot(&vs[j], &w).re;
            alphas.push(a);
            // two passes of classical Gram–Schmidt against the whole basis
            for _ in 0..2 {
                for v in &vs {
                    let c = dot(v, &w);
                    axpy(-c, v, &mut w);
                }
            }
            let b = norm(&w);
            if vs.len() == m_max || b <= tiny {
                break;
            }
            betas.push(b);
            vs.push(w.iter().map(|x| *x / b).collect());
        }
        let (vals, vecs) = tridiagonal_eigen(&alphas, &betas)?;
        let k = alphas.len();
        let theta = vals[0];
        let mut x = vec![zero; dim];
        for (i, v) in vs.iter().enumerate() {
            axpy(Complex::new(vecs[i * k], T::zero()), v, &mut x);
        }
        let nx = norm(&x);
        x.iter_mut().for_each(|a| *a /= nx);
        let hx = h.matvec(&x);
        matvecs += 1;
        let residual = norm(
            &hx.iter()
                .zip(&x)
                .map(|(a, b)| a - *b * theta)
                .collect::<Vec<_>>(),
        );
        let better = best.as_ref().is_none_or(|b| residual < b.2);
        if better {
            best = Some((theta, x.clone(), residual));
        }
        if residual <= target || k == dim {
            return Ok(EdResult {
                min_eigenvalue: theta,
                eigenvector: x,
                residual,
                basis: h.basis.clone(),
                matvecs,
            });
        }
        start = x;
    }
    let residual = best.map_or(f64::INFINITY, |b| b.2.as_f64());
    Err(Error::NoConvergence {
        iterations: opts.max_restarts,
        residual,
    })
}

/// ⟨H²⟩ − ⟨H⟩² for a normalized state on `basis`, via two matvecs.
pub fn eigen_variance<T: Real>(
    op: &WeightedPauliSum<T>,
    basis: &Basis,
    state: &[C<T>],
) -> Result<T> {
    if state.len() != basis.dim() {
        return Err(Error::Shape(
            "state length differs from the basis dimension".into(),
        ));
    }
    let h = SparseOperator::new(op, basis.clone())?;
    let hv = h.matvec(state);
    let mean = dot(state, &hv).re;
    let second = dot(&hv, &hv).re;
    Ok(second - mean * mean)
}

/// |⟨v|Φ⟩|² / ⟨Φ|Φ⟩ for the RBM state over the eigenvector's basis.
pub fn rbm_overlap<T: Real>(params: &RbmParams<T>, ed: &EdResult<T>) -> Result<T> {
    let basis = &ed.basis;
    if basis.n_sites() != params.n_visible() {
        return Err(Error::Shape("network and eigenvector sizes differ".into()));
    }
    basis.ensure_dim("exact enumeration dimension", MAX_EXACT_DIM)?;
    let logs: Vec<C<T>> = (0..basis.dim())
        .into_par_iter()
        .map(|i| params.log_amplitude(&basis.config(i)))
        .collect::<Result<_>>()?;
    let max = logs.iter().map(|l| l.re).fold(T::neg_infinity(), T::max);
    let phi: Vec<C<T>> = logs.iter().map(|l| (l - max).exp()).collect();
    let num = dot(&ed.eigenvector, &phi).norm_sqr();
    let den = dot(&phi, &phi).re * dot(&ed.eigenvector, &ed.eigenvector).re;
    Ok(num / den)
}

/// |value − reference| / |reference|.
pub fn relative_error<T: Real>(value: T, reference: T) -> Result<T> {
    if reference == T::zero() {
        return Err(Error::Domain(
            "relative error against a zero reference".into(),
        ));
    }
    Ok((value - reference).abs() / reference.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{build_i1_hamiltonian, build_i3, compile, i3_settings};
    use crate::estimator::exact_expectation;
    use crate::pauli::{parse_operator, Axis, PauliString};
    use crate::rbm::{SchemeKind, TyingScheme};
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn random_op(n: usize, n_terms: usize, seed: u64) -> WeightedPauliSum<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axes = [Axis::X, Axis::Y, Axis::Z];
        let terms = (0..n_terms)
            .map(|_| {
                let mut factors = Vec::new();
                for site in 0..n {
                    if rng.random::<f64>() < 0.4 {
                        factors.push((site, axes[rng.random_range(0..3)]));
                    }
                }
                (
                    rng.random_range(-1.0..1.0),
                    PauliString::new(factors).unwrap(),
                )
            })
            .collect();
        WeightedPauliSum::new(n, terms).unwrap()
    }

    fn dense_min(op: &WeightedPauliSum<f64>) -> f64 {
        let m = op.to_dense().unwrap();
        let n = m.len();
        let flat: Vec<C<f64>> = m.into_iter().flatten().collect();
        let eig = DMatrix::from_row_slice(n, n, &flat).symmetric_eigen();
        eig.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn single_site_and_i1_pair() {
        let z = parse_operator::<f64>("1 Z@1", 1).unwrap();
        let r = min_eigenpair(&z, None).unwrap();
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
        let h = build_i1_hamiltonian::<f64>(2, 0.9, 2.0).unwrap();
        let r = min_eigenpair(&h, None).unwrap();
        let expected = -16.0 * 1.9 / 3f64.sqrt();
        assert!(
            (r.min_eigenvalue - expected).abs() < 1e-9,
            "{}",
            r.min_eigenvalue
        );
        assert!((r.min_eigenvalue - dense_min(&h)).abs() < 1e-10);
    }

    #[test]
    fn i3_tsirelson_value() {
        let op = compile(&build_i3::<f64>(4).unwrap(), &i3_settings(4, 0.0).unwrap()).unwrap();
        let r = min_eigenpair(&op, None).unwrap();
        assert!((r.min_eigenvalue + 2.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!(r.residual < 1e-8);
    }

    #[test]
    fn matches_dense_eigensolver_on_random_operators() {
        for seed in 0..6 {
            let n = 3 + (seed as usize % 4);
            let op = random_op(n, 10, seed);
            let r = min_eigenpair(&op, None).unwrap();
            assert!(
                (r.min_eigenvalue - dense_min(&op)).abs() < 1e-9,
                "seed {seed}"
            );
            let nrm: f64 = r.eigenvector.iter().map(|a| a.norm_sqr()).sum();
            assert!((nrm - 1.0).abs() < 1e-12);
            assert!(r.residual <= 1e-8 * op.norm_bound().max(1.0));
        }
    }

    #[test]
    fn restarted_lanczos_on_larger_space() {
        let op = random_op(10, 30, 77);
        let opts = LanczosOptions {
            krylov_dim: 20,
            ..LanczosOptions::default()
        };
        let r = min_eigenpair_with(&op, None, opts).unwrap();
        assert!((r.min_eigenvalue - dense_min(&op)).abs() < 1e-9);
        let again = min_eigenpair_with(&op, None, opts).unwrap();
        assert_eq!(r.min_eigenvalue, again.min_eigenvalue);
    }

    #[test]
    fn sector_minimum_equals_full_minimum_for_i1() {
        for n in [4usize, 6, 8, 10] {
            for (delta, big) in [(0.9, 0.5), (0.9, 2.0), (0.3, 1.0), (-0.5, 3.0)] {
                let h = build_i1_hamiltonian::<f64>(n, delta, big).unwrap();
                let full = min_eigenpair(&h, None).unwrap().min_eigenvalue;
                let sector = min_eigenpair(&h, Some(0)).unwrap().min_eigenvalue;
                assert!(
                    (full - sector).abs() < 1e-9,
                    "N={n} δ={delta} Δ={big}: {full} vs {sector}"
                );
            }
        }
    }

    #[test]
    fn variance_examples() {
        let basis = Basis::new(3, None).unwrap();
        let z = parse_operator::<f64>("1 Z@1", 3).unwrap();
        let u = Complex::new(1.0 / 8f64.sqrt(), 0.0);
        assert!((eigen_variance(&z, &basis, &[u; 8]).unwrap() - 1.0).abs() < 1e-14);
        let op = random_op(6, 12, 5);
        let r = min_eigenpair(&op, None).unwrap();
        assert!(eigen_variance(&op, &r.basis, &r.eigenvector).unwrap().abs() < 1e-10);

        // a random state against the dense matrix
        let b6 = Basis::new(6, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut v: Vec<C<f64>> = (0..64)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|a| *a /= nv);
        let m = op.to_dense().unwrap();
        let hv: Vec<C<f64>> = m
            .iter()
            .map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        let dense = dot(&hv, &hv).re - dot(&v, &hv).re.powi(2);
        assert!((eigen_variance(&op, &b6, &v).unwrap() - dense).abs() < 1e-10);
    }

    #[test]
    fn zero_variance_at_the_ed_state() {
        let h = build_i1_hamiltonian::<f64>(6, 0.9, 2.0).unwrap();
        let r = min_eigenpair(&h, Some(0)).unwrap();
        let psi = r.wavefunction();
        let (_, e) = crate::estimator::exact_local_energies(&h, &psi, &r.basis).unwrap();
        let support: Vec<_> = e
            .iter()
            .zip(&r.eigenvector)
            .filter(|(_, a)| a.norm() > 1e-6)
            .map(|(e, _)| *e)
            .collect();
        assert!(support
            .iter()
            .all(|x| (x.re - r.min_eigenvalue).abs() < 1e-8 && x.im.abs() < 1e-8));
        let (mean, var) = exact_expectation(&h, &psi, &r.basis).unwrap();
        assert!((mean - r.min_eigenvalue).abs() < 1e-9 && var.abs() < 1e-9);
    }

    #[test]
    fn overlap_and_relative_error() {
        let n = 4;
        let s = Arc::new(TyingScheme::new(SchemeKind::Dense { alpha: 1 }, n).unwrap());
        let p = RbmParams::<f64>::random_init(s.clone(), 0.3, 2).unwrap();
        let basis = Basis::new(n, None).unwrap();
        let amps: Vec<C<f64>> = basis
            .configs()
            .map(|c| p.log_amplitude(&c).unwrap().exp())
            .collect();
        let nrm = norm(&amps);
        let ed = EdResult {
            min_eigenvalue: 0.0,
            eigenvector: amps.iter().map(|a| a / nrm).collect(),
            residual: 0.0,
            basis: basis.clone(),
            matvecs: 0,
        };
        assert!((rbm_overlap(&p, &ed).unwrap() - 1.0).abs() < 1e-10);
        // uniform RBM against an antisymmetric vector
        let z = RbmParams::<f64>::zeros(s);
        let mut anti = vec![Complex::new(0.0, 0.0); 16];
        anti[0] = Complex::new(0.5f64.sqrt(), 0.0);
        anti[1] = Complex::new(-(0.5f64.sqrt()), 0.0);
        let ed = EdResult {
            eigenvector: anti,
            ..ed
        };
        assert!(rbm_overlap(&z, &ed).unwrap().abs() < 1e-15);

        assert_eq!(relative_error(3.0, 3.0).unwrap(), 0.0);
        assert!((relative_error(-159.0f64, -160.0).unwrap() - 0.00625).abs() < 1e-15);
        assert!(relative_error(1.0, 0.0).is_err());
    }

    #[test]
    fn eigenvector_dump_roundtrip() {
        let op = random_op(4, 8, 1);
        let r = min_eigenpair(&op, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (d, h) = (dir.path().join("v.bin"), dir.path().join("v.json"));
        r.write_eigenvector(&d, &h).unwrap();
        let (header, v) = read_eigenvector(&d, &h).unwrap();
        assert_eq!(header.length, 16);
        assert_eq!(v, r.eigenvector);
        let s = r.summary();
        assert_eq!((s.dim, s.sector), (16, None));
    }

    #[test]
    fn single_precision_converges() {
        let op = compile(
            &build_i3::<f32>(4).unwrap(),
            &i3_settings(4, 0.0f32).unwrap(),
        )
        .unwrap();
        let r = min_eigenpair(&op, None).unwrap();
        assert!((r.min_eigenvalue + 2.0 * 2f32.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn capacity_is_enforced() {
        let z =
            WeightedPauliSum::<f64>::new(21, vec![(1.0, PauliString::single(0, Axis::Z))]).unwrap();
        assert!(matches!(
            min_eigenpair(&z, None),
            Err(Error::Capacity { .. })
        ));
    }
}
