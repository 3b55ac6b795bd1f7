//! Small dense Hermitian linear algebra (d ≤ 8).

use nalgebra::DMatrix;
use num_complex::Complex64;

/// `max |H - H^†|` entrywise.
pub fn hermitian_residual(h: &DMatrix<Complex64>) -> f64 {
    let n = h.nrows();
    let mut r = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            r = r.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    r
}

/// `(H + H^†) / 2`.
pub fn symmetrize(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (h + h.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns ascending eigenvalues and the unitary whose columns are
/// the matching eigenvectors.
pub fn hermitian_eigen(h: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = h.nrows();
    let mut a = symmetrize(h);
    let mut v = DMatrix::<Complex64>::identity(n, n);
    let scale = a
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);

    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                // phase-align a_pq to the positive real axis, then a real rotation
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut u = DMatrix::<Complex64>::identity(n, n);
                u[(p, p)] = Complex64::new(c, 0.0);
                u[(p, q)] = Complex64::new(s, 0.0);
                u[(q, p)] = phase.conj() * (-s);
                u[(q, q)] = phase.conj() * c;
                a = u.adjoint() * &a * &u;
                v *= &u;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    hermitian_eigen(h).0
}

/// Cholesky factor `L` with `H = L L^†`, or `None` when `H` is not positive
/// definite.
pub fn cholesky(h: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    let n = h.nrows();
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let mut d = h[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solve `H x = b` given the Cholesky factor of `H`.
pub fn cholesky_solve(l: &DMatrix<Complex64>, b: &[Complex64]) -> Vec<Complex64> {
    let n = l.nrows();
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)].conj() * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_point, SeedStream};
    use nalgebra::SymmetricEigen;

    fn random_hermitian(seed: u64, n: usize) -> DMatrix<Complex64> {
        let mut rng = SeedStream::new(seed).rng();
        let cols: Vec<Vec<Complex64>> = (0..n).map(|_| gaussian_point(&mut rng, n)).collect();
        let m = DMatrix::from_fn(n, n, |r, c| cols[c][r]);
        symmetrize(&m)
    }

    /// Realification `[[Re, -Im], [Im, Re]]` has every eigenvalue of `H` twice.
    fn realified_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
        let n = h.nrows();
        let r = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let z = h[(i % n, j % n)];
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let mut ev: Vec<f64> = SymmetricEigen::new(r).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev.into_iter().step_by(2).collect()
    }

    #[test]
    fn jacobi_matches_realified_symmetric_solver() {
        for seed in 0..20 {
            for n in 1..=4 {
                let h = random_hermitian(seed, n);
                let ours = hermitian_eigenvalues(&h);
                let oracle = realified_eigenvalues(&h);
                for (a, b) in ours.iter().zip(&oracle) {
                    assert!(
                        (a - b).abs() < 1e-11,
                        "seed {seed} n {n}: {ours:?} vs {oracle:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn eigenvectors_diagonalize() {
        let h = random_hermitian(99, 4);
        let (vals, vecs) = hermitian_eigen(&h);
        let d = vecs.adjoint() * &h * &vecs;
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { vals[i] } else { 0.0 };
                assert!((d[(i, j)] - Complex64::new(expect, 0.0)).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn two_by_two_known_spectrum() {
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.1, 0.0),
                Complex64::new(0.1, 0.0),
                Complex64::new(0.1, 0.0),
                Complex64::new(1.1, 0.0),
            ],
        );
        let ev = hermitian_eigenvalues(&h);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 1.2).abs() < 1e-14);
    }

    #[test]
    fn cholesky_solves_and_detects_indefinite() {
        let mut h = random_hermitian(5, 3);
        for i in 0..3 {
            h[(i, i)] += Complex64::new(6.0, 0.0);
        }
        let l = cholesky(&h).expect("positive definite");
        let b = vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, 3.0),
        ];
        let x = cholesky_solve(&l, &b);
        let hx = crate::expr::mat_vec(&h, &x);
        for (u, v) in hx.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12);
        }
        let indefinite = DMatrix::from_diagonal_element(2, 2, Complex64::new(-1.0, 0.0));
        assert!(cholesky(&indefinite).is_none());
    }
}
