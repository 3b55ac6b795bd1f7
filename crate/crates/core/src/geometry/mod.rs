//! Complex gradients, Levi forms, real Hessians and strict
//! plurisubharmonicity.
//!
//! Conventions used throughout the crate:
//!
//! * complex gradient `∇u := 2 (∂u/∂z̄_1, ..., ∂u/∂z̄_d)`; split into
//!   `(Re, Im)` pairs it is the real gradient on `R^{2d}`;
//! * Levi matrix `H_jk := ∂²u/∂z_j∂z̄_k` (no factor 2 or 1/2), with Levi form
//!   `L_u(v) = Σ H_jk v_j conj(v_k)`;
//! * with these, `L_u(v) = ¼ Hess u(v, v) + ¼ Hess u(Jv, Jv)`.

pub mod linalg;

use crate::error::{Error, Result};
use crate::expr::PotentialField;
use crate::par;
use crate::point::{apply_j, norm, real_inner};
use crate::rng::{ball_point, SeedStream};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

pub use linalg::{hermitian_eigen, hermitian_eigenvalues, hermitian_residual};

/// Largest Levi asymmetry tolerated before a field is treated as non-real.
pub const LEVI_ASYMMETRY_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct WirtingerGradient {
    pub point: Vec<Complex64>,
    /// `∂u/∂z̄_j`
    pub components: Vec<Complex64>,
}

impl WirtingerGradient {
    /// `2 (∂u/∂z̄_j)_j`
    pub fn complex_gradient(&self) -> Vec<Complex64> {
        self.components.iter().map(|g| g * 2.0).collect()
    }

    /// Real gradient on `R^{2d}`.
    pub fn real_gradient(&self) -> Vec<f64> {
        crate::point::to_real(&self.complex_gradient())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeviForm {
    pub point: Vec<Complex64>,
    /// Hermitian-symmetrized matrix.
    pub matrix: DMatrix<Complex64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `max |H - H^†|` before symmetrization.
    pub asymmetry: f64,
}

impl LeviForm {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `L(v) = Σ H_jk v_j conj(v_k)`.
    pub fn evaluate(&self, v: &[Complex64]) -> f64 {
        let n = v.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                acc += self.matrix[(j, k)] * v[j] * v[k].conj();
            }
        }
        acc.re
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealHessian {
    pub point: Vec<Complex64>,
    /// Symmetric `2d × 2d`, coordinates ordered `(x_1, y_1, x_2, y_2, ...)`.
    pub matrix: DMatrix<f64>,
}

impl RealHessian {
    pub fn bilinear(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        let x = crate::point::to_real(a);
        let y = crate::point::to_real(b);
        let n = x.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += x[i] * self.matrix[(i, j)] * y[j];
            }
        }
        acc
    }
}

pub fn complex_gradient(f: &PotentialField, p: &[Complex64]) -> Result<WirtingerGradient> {
    Ok(WirtingerGradient {
        point: p.to_vec(),
        components: f.dbar(p)?,
    })
}

pub fn levi_form(f: &PotentialField, p: &[Complex64]) -> Result<LeviForm> {
    let raw = f.levi_matrix(p)?;
    let asymmetry = hermitian_residual(&raw);
    if asymmetry > LEVI_ASYMMETRY_LIMIT {
        return Err(Error::NotReal {
            max_imag: asymmetry,
            witness: p.to_vec(),
        });
    }
    let matrix = linalg::symmetrize(&raw);
    let eigenvalues = hermitian_eigenvalues(&matrix);
    Ok(LeviForm {
        point: p.to_vec(),
        matrix,
        eigenvalues,
        asymmetry,
    })
}

/// Real Hessian assembled from `L = (∂_j∂̄_k u)` and `P = (∂_j∂_k u)`:
/// `∂x_j∂x_k = 2Re(P+L)`, `∂y_j∂y_k = 2Re(L-P)`, `∂x_j∂y_k = 2Im(L-P)`.
pub fn real_hessian(f: &PotentialField, p: &[Complex64]) -> Result<RealHessian> {
    let l = f.levi_matrix(p)?;
    let q = f.holomorphic_hessian(p)?;
    let d = f.dim();
    let mut m = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for j in 0..d {
        for k in 0..d {
            let plus = q[(j, k)] + l[(j, k)];
            let minus = l[(j, k)] - q[(j, k)];
            m[(2 * j, 2 * k)] = 2.0 * plus.re;
            m[(2 * j + 1, 2 * k + 1)] = 2.0 * minus.re;
            m[(2 * j, 2 * k + 1)] = 2.0 * minus.im;
        }
    }
    // ∂y_j∂x_k is the transpose entry of ∂x_k∂y_j
    for j in 0..d {
        for k in 0..d {
            m[(2 * j + 1, 2 * k)] = m[(2 * k, 2 * j + 1)];
        }
    }
    let sym = (&m + m.transpose()) * 0.5;
    Ok(RealHessian {
        point: p.to_vec(),
        matrix: sym,
    })
}

/// Seeded uniform sampler of a ball in `C^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallSampler {
    pub radius: f64,
    pub count: usize,
    pub seed: u64,
}

impl BallSampler {
    pub const MIN_COUNT: usize = 100;

    pub fn points(&self, dim: usize) -> Vec<Vec<Complex64>> {
        let stream = SeedStream::new(self.seed).named("ball-sampler");
        (0..self.count)
            .map(|i| ball_point(&mut stream.index(i as u64).rng(), dim, self.radius))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PshCertificate {
    pub sampler: BallSampler,
    pub min_eigenvalue: f64,
    pub epsilon: f64,
    /// Point realizing `min_eigenvalue` (or the first failing point).
    pub witness: Vec<[f64; 2]>,
    pub failure: Option<String>,
    pub pass: bool,
}

/// Sampled certificate that `λ_min(Levi) > ε` on the sampler's ball.
pub fn check_strict_psh(
    f: &PotentialField,
    sampler: &BallSampler,
    epsilon: f64,
) -> Result<PshCertificate> {
    if sampler.count < BallSampler::MIN_COUNT {
        return Err(Error::Precondition(format!(
            "PSH certification needs at least {} samples, got {}",
            BallSampler::MIN_COUNT,
            sampler.count
        )));
    }
    let points = sampler.points(f.dim());
    let results = par::map_range(points.len(), |i| levi_form(f, &points[i]));
    let mut min = f64::INFINITY;
    let mut witness = Vec::new();
    let mut failure = None;
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(levi) => {
                if levi.min_eigenvalue() < min {
                    min = levi.min_eigenvalue();
                    if failure.is_none() {
                        witness = pack(p);
                    }
                }
            }
            Err(e) if failure.is_none() => {
                failure = Some(e.to_string());
                witness = pack(p);
                min = f64::NEG_INFINITY;
            }
            Err(_) => {}
        }
    }
    Ok(PshCertificate {
        sampler: *sampler,
        min_eigenvalue: min,
        epsilon,
        witness,
        pass: failure.is_none() && min > epsilon,
        failure,
    })
}

pub(crate) fn pack(p: &[Complex64]) -> Vec<[f64; 2]> {
    p.iter().map(|z| [z.re, z.im]).collect()
}

/// `|L_u(v) - ¼(H_u(v,v) + H_u(Jv,Jv))|` with both sides from symbolic
/// second derivatives.
pub fn levi_hessian_identity_residual(
    f: &PotentialField,
    p: &[Complex64],
    v: &[Complex64],
) -> Result<f64> {
    if norm(v) == 0.0 {
        return Err(Error::Precondition(
            "tangent vector must be non-zero".into(),
        ));
    }
    let levi = levi_form(f, p)?;
    let hess = real_hessian(f, p)?;
    let jv = apply_j(v);
    let rhs = 0.25 * (hess.bilinear(v, v) + hess.bilinear(&jv, &jv));
    Ok((levi.evaluate(v) - rhs).abs())
}

/// `<∇u(p), p>_R`, the radial derivative scaled by `|p|`.
pub fn radial_pairing(f: &PotentialField, p: &[Complex64]) -> Result<f64> {
    let g = complex_gradient(f, p)?.complex_gradient();
    Ok(real_inner(&g, p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialRow {
    pub r: f64,
    pub value: f64,
    pub derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub direction: Vec<[f64; 2]>,
    pub rows: Vec<RadialRow>,
    /// Radii where the derivative is not strictly positive.
    pub violations: Vec<f64>,
}

/// `r ↦ (u(ra), <∇u(ra), a>_R)` on `n` equally spaced radii in `(0, r_max]`.
pub fn radial_profile(
    f: &PotentialField,
    direction: &[Complex64],
    r_max: f64,
    n: usize,
) -> Result<RadialProfile> {
    if n < 2 {
        return Err(Error::Precondition("radial profile needs n >= 2".into()));
    }
    let len = norm(direction);
    if (len - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "direction must be a unit vector (|a| = {len})"
        )));
    }
    let mut rows = Vec::with_capacity(n);
    let mut violations = Vec::new();
    for k in 1..=n {
        let r = r_max * k as f64 / n as f64;
        let p: Vec<Complex64> = direction.iter().map(|a| a * r).collect();
        let g = complex_gradient(f, &p)?.complex_gradient();
        let derivative = real_inner(&g, direction);
        if !(derivative > 0.0) {
            violations.push(r);
        }
        rows.push(RadialRow {
            r,
            value: f.value(&p)?,
            derivative,
        });
    }
    Ok(RadialProfile {
        direction: pack(direction),
        rows,
        violations,
    })
}

/// Radial derivative `<∇u(p), p/|p|>_R`; zero at the origin.
pub fn radial_derivative(f: &PotentialField, p: &[Complex64]) -> Result<f64> {
    let r = norm(p);
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(radial_pairing(f, p)? / r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const FLAT: &str = "z1*cj(z1) + z2*cj(z2)";
    const QUARTIC: &str = "z1*cj(z1) + z2*cj(z2) + 0.1*z1*cj(z1)*z2*cj(z2)";
    const HARMONIC: &str = "0.5*z1^2 + 0.5*cj(z1)^2";

    #[test]
    fn gradient_of_flat_field() {
        let f = PotentialField::parse(FLAT, 2).unwrap();
        let g = complex_gradient(&f, &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(g.complex_gradient(), vec![c(2.0, 0.0), c(0.0, 2.0)]);
    }

    #[test]
    fn gradient_of_quartic_field() {
        let f = PotentialField::parse(QUARTIC, 2).unwrap();
        let g = complex_gradient(&f, &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        for z in g.complex_gradient() {
            assert!((z - c(2.2, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn gradient_of_holomorphic_free_field_vanishes() {
        let f = PotentialField::parse("z1^3 + 2", 1).unwrap();
        let g = complex_gradient(&f, &[c(0.4, -1.0)]).unwrap();
        assert_eq!(g.components, vec![c(0.0, 0.0)]);
    }

    #[test]
    fn levi_forms() {
        let f = PotentialField::parse(FLAT, 2).unwrap();
        let l = levi_form(&f, &[c(0.3, 1.0), c(-2.0, 0.1)]).unwrap();
        assert_eq!(l.matrix, DMatrix::identity(2, 2));
        assert_eq!(l.eigenvalues, vec![1.0, 1.0]);

        let f = PotentialField::parse(QUARTIC, 2).unwrap();
        let l = levi_form(&f, &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((l.matrix[(0, 0)] - c(1.1, 0.0)).norm() < 1e-14);
        assert!((l.matrix[(0, 1)] - c(0.1, 0.0)).norm() < 1e-14);
        assert!((l.eigenvalues[0] - 1.0).abs() < 1e-13);
        assert!((l.eigenvalues[1] - 1.2).abs() < 1e-13);

        let f = PotentialField::parse(HARMONIC, 1).unwrap();
        let l = levi_form(&f, &[c(0.7, 0.2)]).unwrap();
        assert_eq!(l.eigenvalues, vec![0.0]);
    }

    #[test]
    fn real_hessians() {
        let f = PotentialField::parse("z1*cj(z1)", 1).unwrap();
        let h = real_hessian(&f, &[c(0.5, 0.5)]).unwrap();
        assert_eq!(
            h.matrix,
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0])
        );
        let f = PotentialField::parse(HARMONIC, 1).unwrap();
        let h = real_hessian(&f, &[c(0.5, 0.5)]).unwrap();
        assert_eq!(
            h.matrix,
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -2.0])
        );
    }

    #[test]
    fn psh_certificates() {
        let sampler = BallSampler {
            radius: 1.0,
            count: 200,
            seed: 3,
        };
        let f = PotentialField::parse(FLAT, 2).unwrap();
        let cert = check_strict_psh(&f, &sampler, 0.5).unwrap();
        assert!(cert.pass);
        assert_eq!(cert.min_eigenvalue, 1.0);

        let f = PotentialField::parse(QUARTIC, 2).unwrap();
        let cert = check_strict_psh(&f, &sampler, 0.5).unwrap();
        assert!(cert.pass);
        assert!(cert.min_eigenvalue >= 1.0 - 1e-12);

        let f = PotentialField::parse(HARMONIC, 1).unwrap();
        let cert = check_strict_psh(&f, &sampler, 0.1).unwrap();
        assert!(!cert.pass);
        assert_eq!(cert.min_eigenvalue, 0.0);
        assert_eq!(cert.witness.len(), 1);

        let small = BallSampler {
            count: 10,
            ..sampler
        };
        assert!(check_strict_psh(&f, &small, 0.1).is_err());
    }

    #[test]
    fn identity_residual_trivial_cases() {
        let f = PotentialField::parse("z1*cj(z1)", 1).unwrap();
        let r = levi_hessian_identity_residual(&f, &[c(0.2, 0.1)], &[c(1.0, 0.0)]).unwrap();
        assert!(r < 1e-15);
        let f = PotentialField::parse(HARMONIC, 1).unwrap();
        let r = levi_hessian_identity_residual(&f, &[c(0.2, 0.1)], &[c(0.3, -1.7)]).unwrap();
        assert!(r < 1e-15);
    }

    #[test]
    fn radial_profiles() {
        let f = PotentialField::parse(FLAT, 2).unwrap();
        let prof = radial_profile(&f, &[c(1.0, 0.0), c(0.0, 0.0)], 2.0, 4).unwrap();
        let last = prof.rows.last().unwrap();
        assert_eq!(last.r, 2.0);
        assert_eq!(last.derivative, 4.0);
        assert!(prof.violations.is_empty());

        let f = PotentialField::parse("3 + 0*z1", 1).unwrap();
        let prof = radial_profile(&f, &[c(0.0, 1.0)], 1.0, 5).unwrap();
        assert_eq!(prof.violations.len(), 5);
        assert!(prof.rows.iter().all(|r| r.derivative == 0.0));

        assert!(radial_profile(&f, &[c(2.0, 0.0)], 1.0, 5).is_err());
        assert_eq!(radial_derivative(&f, &[c(0.0, 0.0)]).unwrap(), 0.0);
    }
}
