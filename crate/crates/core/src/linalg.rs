//! Small dense and iterative solvers over complex vectors.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

#[inline]
pub fn dot<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm<T: Real>(a: &[C<T>]) -> T {
    a.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
}

/// `y += alpha·x`
#[inline]
pub fn axpy<T: Real>(alpha: C<T>, x: &[C<T>], y: &mut [C<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solves `A x = b` for Hermitian positive-definite `A` (row-major, overwritten by its
/// Cholesky factor). Returns `None` when `A` is not numerically positive definite.
pub fn cholesky_solve<T: Real>(a: &mut [C<T>], n: usize, b: &[C<T>]) -> Option<Vec<C<T>>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    // lower factor L stored in the lower triangle, A = L L†
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = Complex::new(d, T::zero());
        let (upper, lower) = a.split_at_mut((j + 1) * n);
        let row_j = &upper[j * n..j * n + j];
        for i in (j + 1)..n {
            let row_i = &mut lower[(i - j - 1) * n..(i - j) * n];
            let mut s = row_i[j];
            for k in 0..j {
                s -= row_i[k] * row_j[k].conj();
            }
            row_i[j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= a[i * n + k] * y[k];
        }
        y[i] = s / a[i * n + i].re;
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= a[k * n + i].conj() * y[k];
        }
        y[i] = s / a[i * n + i].re;
    }
    Some(y)
}

/// Outcome of an iterative solve.
#[derive(Clone, Debug)]
pub struct CgSolution<T> {
    pub x: Vec<C<T>>,
    pub iterations: usize,
    /// ‖b − A x‖ / ‖b‖ at exit.
    pub relative_residual: T,
}

/// Conjugate gradients for Hermitian positive-(semi)definite `A` given only as an action.
///
/// With `diag`, the iteration is preconditioned by the positive diagonal `diag ≈ A_kk`
/// (Jacobi). Convergence is judged on the unpreconditioned residual ‖b − A x‖ / ‖b‖.
pub fn conjugate_gradient<T: Real, F>(
    apply: F,
    b: &[C<T>],
    diag: Option<&[T]>,
    tol: T,
    max_iter: usize,
) -> Result<CgSolution<T>>
where
    F: Fn(&[C<T>]) -> Vec<C<T>>,
{
    let n = b.len();
    let zero = Complex::new(T::zero(), T::zero());
    let bnorm = norm(b);
    if bnorm == T::zero() {
        return Ok(CgSolution {
            x: vec![zero; n],
            iterations: 0,
            relative_residual: T::zero(),
        });
    }
    let precondition = |r: &[C<T>]| -> Vec<C<T>> {
        match diag {
            Some(d) => r.iter().zip(d).map(|(ri, &di)| ri / di).collect(),
            None => r.to_vec(),
        }
    };
    let mut x = vec![zero; n];
    let mut r = b.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    let mut rel = T::one();
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap).re;
        if !(pap > T::zero()) || !pap.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: rel.as_f64(),
            });
        }
        let alpha = Complex::new(rz / pap, T::zero());
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        rel = norm(&r) / bnorm;
        if rel <= tol {
            return Ok(CgSolution {
                x,
                iterations: it,
                relative_residual: rel,
            });
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z).re;
        let beta = rz_new / rz;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = *zi + *pi * beta;
        }
        rz = rz_new;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: rel.as_f64(),
    })
}

/// Eigen-decomposition of a real symmetric tridiagonal matrix by implicit QL iterations.
///
/// `diag` has length n and `off` length n − 1 (sub-diagonal). Returns eigenvalues in
/// ascending order and the matching orthonormal eigenvectors as columns of a row-major
/// n×n matrix.
pub fn tridiagonal_eigen<T: Real>(diag: &[T], off: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::Shape(
            "tridiagonal matrix needs n diagonal and n − 1 off-diagonal entries".into(),
        ));
    }
    let mut d = diag.to_vec();
    let mut e: Vec<T> = off
        .iter()
        .copied()
        .chain(std::iter::once(T::zero()))
        .collect();
    let mut z = vec![T::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = T::one();
    }
    let two = T::one() + T::one();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence {
                    iterations: iter,
                    residual: e[l].abs().as_f64(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk1 = z[k * n + i + 1];
                    let zk = z[k * n + i];
                    z[k * n + i + 1] = s * zk + c * zk1;
                    z[k * n + i] = c * zk - s * zk1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + new] = z[k * n + old];
        }
    }
    Ok((values, vectors))
}
