//! Oracles shared by the integration suites.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use nqs_bell::basis::Basis;
use nqs_bell::estimator::exact_expectation;
use nqs_bell::pauli::{GroupedOperator, WeightedPauliSum};
use nqs_bell::rbm::{LookupState, RbmParams};
use nqs_bell::sr::{compute_forces, SampleBatch};
use nqs_bell::{BellInequality, MeasurementAssignment, SchemeKind, SpinConfig, TyingScheme, C};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Matrix = DMatrix<Complex64>;

pub fn scheme(kind: SchemeKind, n: usize) -> Arc<TyingScheme> {
    Arc::new(TyingScheme::new(kind, n).unwrap())
}

pub fn all_schemes(n: usize) -> Vec<SchemeKind> {
    vec![
        SchemeKind::Dense { alpha: 1 },
        SchemeKind::ShortRange { alpha: 2, range: 1 },
        SchemeKind::PermSymmetric { n_hidden: 3 },
        SchemeKind::PartialSymmetric {
            n_hidden: n,
            free_first_site: false,
        },
        SchemeKind::PartialSymmetric {
            n_hidden: n,
            free_first_site: true,
        },
    ]
}

fn pauli() -> [Matrix; 3] {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let z = c(0.0, 0.0);
    [
        Matrix::from_row_slice(2, 2, &[z, c(1.0, 0.0), c(1.0, 0.0), z]),
        Matrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        Matrix::from_row_slice(2, 2, &[c(1.0, 0.0), z, z, c(-1.0, 0.0)]),
    ]
}

/// The Bell operator built by tensoring 2×2 observables, independent of the Pauli-string compiler.
/// Row/column index bit k is site k (set = spin down), so site 0 is the last Kronecker factor.
pub fn tensor_operator(
    ineq: &BellInequality<f64>,
    settings: &MeasurementAssignment<f64>,
) -> Matrix {
    let n = ineq.n_parties;
    let [x, y, z] = pauli();
    let mut total = Matrix::zeros(1 << n, 1 << n);
    for term in &ineq.terms {
        let mut factors = vec![Matrix::identity(2, 2); n];
        for &(party, setting) in &term.sites {
            let [nx, ny, nz] = settings
                .get(party, setting)
                .expect("complete settings")
                .bloch();
            factors[party] =
                &x * Complex64::from(nx) + &y * Complex64::from(ny) + &z * Complex64::from(nz);
        }
        let mut m = Matrix::identity(1, 1);
        for f in factors.iter().rev() {
            m = m.kronecker(f);
        }
        total += m * Complex64::from(term.coefficient);
    }
    total
}

pub fn dense(op: &WeightedPauliSum<f64>) -> Matrix {
    let rows = op.to_dense().unwrap();
    let dim = rows.len();
    Matrix::from_fn(dim, dim, |i, j| rows[i][j])
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest relative deviation (scaled by the largest force) between SR forces and central
/// finite differences of the exactly enumerated ⟨op⟩, over real and imaginary directions.
pub fn force_fd_error(kind: SchemeKind, op: &WeightedPauliSum<f64>, seed: u64) -> f64 {
    let n = op.n_sites();
    let p = RbmParams::<f64>::random_init(scheme(kind, n), 0.3, seed).unwrap();
    let basis = Basis::new(n, None).unwrap();
    let batch = SampleBatch::exact(&GroupedOperator::new(op), &p, &basis).unwrap();
    let f = compute_forces(&batch);
    let h = 1e-5;
    let energy = |free: Vec<C<f64>>| {
        let q = RbmParams::from_free(p.scheme().clone(), free).unwrap();
        exact_expectation(op, &q, &basis).unwrap().0
    };
    let scale = f.iter().map(|x| x.norm()).fold(1e-12, f64::max);
    let mut worst = 0.0f64;
    for k in 0..f.len() {
        for (dir, expected) in [
            (C::new(h, 0.0), 2.0 * f[k].re),
            (C::new(0.0, h), 2.0 * f[k].im),
        ] {
            let mut up = p.free().to_vec();
            let mut dn = p.free().to_vec();
            up[k] += dir;
            dn[k] -= dir;
            let fd = (energy(up) - energy(dn)) / (2.0 * h);
            worst = worst.max((fd - expected).abs() / scale);
        }
    }
    worst
}

/// Random two-body operator with a one-body field, on `n` sites.
pub fn random_operator(n: usize, seed: u64) -> WeightedPauliSum<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            for a in ["X", "Y", "Z"] {
                text += &format!("{} {a}@{i} {a}@{j}\n", rng.random_range(-1.0..1.0));
            }
        }
        text += &format!("{} X@{i}\n", rng.random_range(-1.0..1.0));
    }
    nqs_bell::pauli::parse_operator(&text, n).unwrap()
}

/// Largest θ-cache deviation seen over `steps` random single or pair flips.
pub fn lookup_drift(kind: SchemeKind, n: usize, scale: f64, steps: usize, seed: u64) -> f64 {
    let p = RbmParams::<f64>::random_init(scheme(kind, n), scale, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let start = SpinConfig::new(
        (0..n)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect(),
    )
    .unwrap();
    let mut lookup = LookupState::new(&p, start).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..steps {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let flips: Vec<usize> = if a == b { vec![a] } else { vec![a, b] };
        lookup.update(&p, &flips);
        worst = worst.max(lookup.drift(&p).unwrap());
    }
    worst
}

pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Expected TV distance of an i.i.d. histogram of `n` draws from `p`.
pub fn iid_tv_floor(p: &[f64], n: usize) -> f64 {
    0.5 * p
        .iter()
        .map(|&x| (2.0 * x * (1.0 - x) / (std::f64::consts::PI * n as f64)).sqrt())
        .sum::<f64>()
}

pub fn histogram(samples: &[SpinConfig], basis: &Basis) -> Vec<f64> {
    let mut h = vec![0.0; basis.dim()];
    for s in samples {
        h[basis.index_of(s.to_index()).unwrap()] += 1.0;
    }
    h.iter_mut().for_each(|x| *x /= samples.len() as f64);
    h
}

pub fn relative_error(value: f64, reference: f64) -> f64 {
    ((value - reference) / reference).abs()
}
