//! Small dense complex linear algebra: cyclic Jacobi for Hermitian
//! eigenproblems and partial-pivot LU for linear solves.
//!
//! Matrices here are at most a few dozen rows, so plain O(n^3) kernels with
//! a fixed rotation order are fast and reproduce bit-for-bit.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) and matching unit eigenvectors (columns).
pub fn jacobi_eigh(h: &Array2<Complex64>, want_vectors: bool) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let n = h.nrows();
    let mut a = h.clone();
    let mut v = if want_vectors { Array2::eye(n) } else { Array2::zeros((0, 0)) };

    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok(finish(a, v, want_vectors));
    }
    // Off-diagonal Frobenius norm below this leaves eigenvalue errors at
    // the rounding level of the matrix itself.
    let target = f64::EPSILON * scale;

    for _ in 0..MAX_SWEEPS {
        let off = off_norm(&a);
        if off <= target {
            return Ok(finish(a, v, want_vectors));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE || mag <= target * 1e-3 {
                    continue;
                }
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;
                // Phase that makes the (p, q) element real and positive,
                // then the classic real symmetric rotation.
                let phase = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] acting on (p, q)
                let upp = Complex64::new(c, 0.0);
                let upq = Complex64::new(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;
                rotate(&mut a, p, q, upp, upq, uqp, uqq);
                if want_vectors {
                    rotate_columns(&mut v, p, q, upp, upq, uqp, uqq);
                }
                a[[p, q]] = Complex64::new(0.0, 0.0);
                a[[q, p]] = Complex64::new(0.0, 0.0);
                a[[p, p]] = Complex64::new(a[[p, p]].re, 0.0);
                a[[q, q]] = Complex64::new(a[[q, q]].re, 0.0);
            }
        }
    }
    let off = off_norm(&a);
    if off <= target * 1e3 {
        return Ok(finish(a, v, want_vectors));
    }
    Err(Error::NoConvergence { sweeps: MAX_SWEEPS, residual: off })
}

fn off_norm(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[[i, j]].norm_sqr();
            }
        }
    }
    s.sqrt()
}

#[inline]
fn rotate_columns(
    m: &mut Array2<Complex64>,
    p: usize,
    q: usize,
    upp: Complex64,
    upq: Complex64,
    uqp: Complex64,
    uqq: Complex64,
) {
    for k in 0..m.nrows() {
        let mp = m[[k, p]];
        let mq = m[[k, q]];
        m[[k, p]] = mp * upp + mq * uqp;
        m[[k, q]] = mp * upq + mq * uqq;
    }
}

/// `A <- U^H A U` restricted to rows/columns `p, q`.
fn rotate(
    a: &mut Array2<Complex64>,
    p: usize,
    q: usize,
    upp: Complex64,
    upq: Complex64,
    uqp: Complex64,
    uqq: Complex64,
) {
    rotate_columns(a, p, q, upp, upq, uqp, uqq);
    for k in 0..a.ncols() {
        let ap = a[[p, k]];
        let aq = a[[q, k]];
        a[[p, k]] = upp.conj() * ap + uqp.conj() * aq;
        a[[q, k]] = upq.conj() * ap + uqq.conj() * aq;
    }
}

fn finish(a: Array2<Complex64>, v: Array2<Complex64>, want_vectors: bool) -> (Array1<f64>, Array2<Complex64>) {
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their rotation order
    order.sort_by(|&i, &j| a[[i, i]].re.total_cmp(&a[[j, j]].re));
    let values = Array1::from_iter(order.iter().map(|&k| a[[k, k]].re));
    let vectors = if want_vectors {
        let mut out = Array2::zeros((n, n));
        for (dst, &src) in order.iter().enumerate() {
            out.column_mut(dst).assign(&v.column(src));
        }
        out
    } else {
        v
    };
    (values, vectors)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes.
pub fn lu_solve(a: &Array2<Complex64>, b: &Array1<Complex64>) -> Option<Array1<Complex64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let pivot =
            (col..n).max_by(|&i, &j| m[[i, col]].norm().total_cmp(&m[[j, col]].norm())).expect("non-empty range");
        if m[[pivot, col]].norm() == 0.0 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap([pivot, k], [col, k]);
            }
            x.swap(pivot, col);
        }
        let d = m[[col, col]];
        for row in col + 1..n {
            let f = m[[row, col]] / d;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in col..n {
                let t = m[[col, k]];
                m[[row, k]] -= f * t;
            }
            let t = x[col];
            x[row] -= f * t;
        }
    }
    for row in (0..n).rev() {
        let mut s = x[row];
        for k in row + 1..n {
            s -= m[[row, k]] * x[k];
        }
        x[row] = s / m[[row, row]];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> Array2<Complex64> {
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let k = (i * n + j) as u64;
                let re = crate::rng::centered_uniform(seed, 2 * k);
                let im = if i == j { 0.0 } else { crate::rng::centered_uniform(seed, 2 * k + 1) };
                m[[i, j]] = c(re, im);
                m[[j, i]] = c(re, -im);
            }
        }
        m
    }

    #[test]
    fn two_by_two_off_diagonal() {
        let t = 0.7;
        let m = ndarray::arr2(&[[c(0.0, 0.0), c(t, 0.0)], [c(t, 0.0), c(0.0, 0.0)]]);
        let (e, _) = jacobi_eigh(&m, true).unwrap();
        assert!((e[0] + t).abs() < 1e-15 && (e[1] - t).abs() < 1e-15);
    }

    #[test]
    fn complex_hermitian_residuals_and_orthonormality() {
        for seed in 0..10 {
            let m = random_hermitian(9, seed);
            let (e, v) = jacobi_eigh(&m, true).unwrap();
            for k in 0..9 {
                let col = v.column(k).to_owned();
                let r = m.dot(&col) - col.mapv(|z| z * e[k]);
                assert!(r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < 1e-13);
                if k > 0 {
                    assert!(e[k] >= e[k - 1]);
                }
            }
            let g = v.t().mapv(|z| z.conj()).dot(&v);
            for i in 0..9 {
                for j in 0..9 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g[[i, j]] - c(want, 0.0)).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn eigenvalues_only_match_full_solve() {
        let m = random_hermitian(7, 3);
        let (a, _) = jacobi_eigh(&m, true).unwrap();
        let (b, _) = jacobi_eigh(&m, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_is_preserved() {
        let m = random_hermitian(11, 8);
        let (e, _) = jacobi_eigh(&m, false).unwrap();
        let tr: f64 = (0..11).map(|k| m[[k, k]].re).sum();
        assert!((e.sum() - tr).abs() < 1e-13);
    }

    #[test]
    fn lu_solves_random_system() {
        let mut a = random_hermitian(8, 4);
        for k in 0..8 {
            a[[k, k]] += c(0.0, -0.3);
        }
        let b = Array1::from_iter((0..8).map(|k| c(k as f64, 1.0)));
        let x = lu_solve(&a, &b).unwrap();
        let r = a.dot(&x) - &b;
        assert!(r.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
    }

    #[test]
    fn lu_reports_singular() {
        let a = Array2::<Complex64>::zeros((3, 3));
        assert!(lu_solve(&a, &Array1::zeros(3)).is_none());
    }
}
