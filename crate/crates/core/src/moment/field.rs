use super::projective::QuotientPoint;
use crate::error::{Error, Result};
use crate::expr::PotentialField;
use crate::geometry::linalg::hermitian_eigenvalues;
use crate::geometry::{check_strict_psh, BallSampler, PshCertificate};
use crate::par::map_range;
use crate::point::{norm, real_inner};
use crate::rng::{ball_point, unit_sphere_point, SeedStream};
use crate::symmetry::{invariance_residual, GroupAction, QuadratureRule};
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;

/// Circle-invariance residual allowed at construction.
pub const INVARIANCE_LIMIT: f64 = 1e-10;
/// Normalized Hamiltonian residual allowed at construction.
pub const HAMILTONIAN_LIMIT: f64 = 1e-6;
/// Level-set points must satisfy `|μ(p) − b|` below this.
pub const LEVEL_TOLERANCE: f64 = 1e-10;

const HAMILTONIAN_SAMPLES: usize = 100;
const RAY_SCAN: usize = 64;

/// A circle-invariant strictly PSH potential on `C^2` with moment map
/// `μ(p) = ½⟨∇φ(p), p⟩`.
#[derive(Debug, Clone)]
pub struct MomentMapField {
    phi: PotentialField,
    /// Radius of the ball carrying the PSH certificate.
    radius: f64,
    pub invariance_residual: f64,
    pub hamiltonian_residual: f64,
    pub psh: PshCertificate,
}

impl MomentMapField {
    /// Checks dimension, circle invariance, strict plurisubharmonicity on the
    /// sampling ball, and the Hamiltonian identity for the closed form.
    pub fn new(phi: PotentialField, seed: u64) -> Result<Self> {
        if phi.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                got: phi.dim(),
            });
        }
        let circle = GroupAction::diagonal_circle(2);
        let q = QuadratureRule::default_for(&circle);
        let inv = invariance_residual(&phi, &circle, &q, 64, seed)?.residual;
        if inv > INVARIANCE_LIMIT {
            return Err(Error::Precondition(format!(
                "potential is not circle-invariant (residual {inv:.3e})"
            )));
        }
        let radius = phi.domain().sampling_radius();
        let psh = check_strict_psh(
            &phi,
            &BallSampler {
                radius,
                count: BallSampler::MIN_COUNT,
                seed,
            },
            0.0,
        )?;
        if !psh.pass {
            return Err(Error::Precondition(format!(
                "potential is not strictly PSH on the ball of radius {radius} (λ_min {:.3e})",
                psh.min_eigenvalue
            )));
        }
        let mut m = MomentMapField {
            phi,
            radius,
            invariance_residual: inv,
            hamiltonian_residual: 0.0,
            psh,
        };
        m.hamiltonian_residual = verify_hamiltonian(&m, HAMILTONIAN_SAMPLES, seed)?;
        if m.hamiltonian_residual > HAMILTONIAN_LIMIT {
            return Err(Error::Precondition(format!(
                "closed-form moment map fails the Hamiltonian check (residual {:.3e})",
                m.hamiltonian_residual
            )));
        }
        Ok(m)
    }

    pub fn potential(&self) -> &PotentialField {
        &self.phi
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Euclidean gradient `2∂̄φ`.
    pub fn gradient(&self, p: &[Complex64]) -> Result<Vec<Complex64>> {
        Ok(self.phi.dbar(p)?.iter().map(|z| z * 2.0).collect())
    }
}

/// `½ Re Σ (∇φ)_j conj(p_j)`.
pub fn moment_map(m: &MomentMapField, p: &[Complex64]) -> Result<f64> {
    Ok(0.5 * real_inner(&m.gradient(p)?, p))
}

/// Max over seeded points in the certified ball of
/// `|dμ(X) − ω(V, X)| / (‖p‖·λ_max(H))` over the real basis vectors `X`,
/// with `V = ip`, `ω(v, w) = 2 Im Σ H_jk v_j w̄_k` and `dμ` by central
/// differences.
pub fn verify_hamiltonian(m: &MomentMapField, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Precondition(
            "Hamiltonian check needs samples".into(),
        ));
    }
    let stream = SeedStream::new(seed).named("hamiltonian");
    let residuals = map_range(samples, |i| -> Result<f64> {
        let p = ball_point(&mut stream.index(i as u64).rng(), 2, m.radius);
        let h = m.phi.levi_matrix(&p)?;
        let lmax = *hermitian_eigenvalues(&h).last().unwrap();
        let v: Vec<Complex64> = p.iter().map(|z| z * Complex64::i()).collect();
        let step = 1e-5 * norm(&p).max(1.0);
        let mut worst = 0.0_f64;
        for k in 0..4 {
            let mut x = [0.0; 4];
            x[k] = 1.0;
            let xc = crate::point::from_real(&x);
            let shift =
                |s: f64| -> Vec<Complex64> { p.iter().zip(&xc).map(|(a, b)| a + b * s).collect() };
            let dmu = (moment_map(m, &shift(step))? - moment_map(m, &shift(-step))?) / (2.0 * step);
            let mut hvx = Complex64::new(0.0, 0.0);
            for j in 0..2 {
                for l in 0..2 {
                    hvx += h[(j, l)] * v[j] * xc[l].conj();
                }
            }
            worst = worst.max((dmu - 2.0 * hvx.im).abs());
        }
        let scale = norm(&p) * lmax;
        Ok(if scale > 0.0 { worst / scale } else { worst })
    });
    residuals
        .into_iter()
        .try_fold(0.0_f64, |acc, r| r.map(|r| acc.max(r)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelPoint {
    pub direction: Vec<[f64; 2]>,
    pub r: f64,
    pub point: Vec<[f64; 2]>,
    pub mu: f64,
    /// More than one crossing was seen on the ray; the smallest root is kept.
    pub flagged: bool,
}

impl LevelPoint {
    pub fn point(&self) -> Vec<Complex64> {
        self.point
            .iter()
            .map(|z| Complex64::new(z[0], z[1]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSet {
    pub level: f64,
    pub points: Vec<LevelPoint>,
    /// `(direction index, reason)` for rays without a usable root.
    pub skipped: Vec<(usize, String)>,
}

impl LevelSet {
    /// `re1,im1,re2,im2,r,mu,flagged` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["re1", "im1", "re2", "im2", "r", "mu", "flagged"])
            .map_err(io)?;
        for p in &self.points {
            w.write_record([
                format!("{:.17e}", p.point[0][0]),
                format!("{:.17e}", p.point[0][1]),
                format!("{:.17e}", p.point[1][0]),
                format!("{:.17e}", p.point[1][1]),
                format!("{:.17e}", p.r),
                format!("{:.17e}", p.mu),
                p.flagged.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Root of `μ(r·a) = b` on `(0, R]` for a unit direction `a`: the first
/// sign change of a uniform scan, refined by bisection.
pub fn solve_ray(m: &MomentMapField, a: &[Complex64], b: f64) -> Result<(f64, bool)> {
    let g = |r: f64| -> Result<f64> {
        let p: Vec<Complex64> = a.iter().map(|z| z * r).collect();
        Ok(moment_map(m, &p)? - b)
    };
    let mut crossings = Vec::new();
    let mut prev = (0.0, g(0.0)?);
    for k in 1..=RAY_SCAN {
        let r = m.radius * k as f64 / RAY_SCAN as f64;
        let cur = (r, g(r)?);
        if prev.1 < 0.0 && cur.1 >= 0.0 || prev.1 > 0.0 && cur.1 <= 0.0 {
            crossings.push((prev, cur));
        }
        prev = cur;
    }
    let Some(&((mut lo, mut glo), (mut hi, _))) = crossings.first() else {
        return Err(Error::Precondition(format!(
            "no crossing of level {b} within the certified radius {}",
            m.radius
        )));
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    let r = if g(lo)?.abs() <= g(hi)?.abs() { lo } else { hi };
    Ok((r, crossings.len() > 1))
}

/// Points of `μ^{-1}(b)` along `n` seeded unit directions.
pub fn sample_level_set(m: &MomentMapField, b: f64, n: usize, seed: u64) -> Result<LevelSet> {
    let mu0 = moment_map(m, &[Complex64::new(0.0, 0.0); 2])?;
    if !(b > mu0) {
        return Err(Error::Precondition(format!(
            "level {b} must exceed μ(0) = {mu0}"
        )));
    }
    let stream = SeedStream::new(seed).named("level-set");
    let results = map_range(n, |i| -> Result<std::result::Result<LevelPoint, String>> {
        let a = unit_sphere_point(&mut stream.index(i as u64).rng(), 2);
        level_point(m, &a, b)
    });
    let mut set = LevelSet {
        level: b,
        points: Vec::new(),
        skipped: Vec::new(),
    };
    for (i, r) in results.into_iter().enumerate() {
        match r? {
            Ok(p) => set.points.push(p),
            Err(reason) => set.skipped.push((i, reason)),
        }
    }
    Ok(set)
}

/// Level point on the ray through a unit direction; the inner error is the
/// reason a ray was skipped.
pub(crate) fn level_point(
    m: &MomentMapField,
    a: &[Complex64],
    b: f64,
) -> Result<std::result::Result<LevelPoint, String>> {
    let (r, flagged) = match solve_ray(m, a, b) {
        Ok(x) => x,
        Err(Error::Precondition(msg)) => return Ok(Err(msg)),
        Err(e) => return Err(e),
    };
    let p: Vec<Complex64> = a.iter().map(|z| z * r).collect();
    let mu = moment_map(m, &p)?;
    if (mu - b).abs() >= LEVEL_TOLERANCE {
        return Ok(Err(format!(
            "root refinement stalled at |μ − b| = {:.3e}",
            (mu - b).abs()
        )));
    }
    let pack = |v: &[Complex64]| v.iter().map(|z| [z.re, z.im]).collect();
    Ok(Ok(LevelPoint {
        direction: pack(a),
        r,
        point: pack(&p),
        mu,
        flagged,
    }))
}

/// `[∂̄_1φ(p) : ∂̄_2φ(p)]`.
pub fn induced_map(m: &MomentMapField, p: &[Complex64]) -> Result<QuotientPoint> {
    let g = m.phi.dbar(p)?;
    QuotientPoint::new(g[0], g[1]).ok_or_else(|| Error::domain("zero gradient", p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomotopyCertificate {
    pub level: f64,
    pub points: usize,
    pub s_values: usize,
    /// `min (1−s)⟨∇φ(a), a⟩ + s|a|²`.
    pub minimum: f64,
    pub witness: Vec<[f64; 2]>,
    pub witness_s: f64,
    pub pass: bool,
}

/// Positivity of `(1−s)⟨∇φ(a), a⟩ + s|a|²` over sampled level-set points and
/// `n_s` evenly spaced `s ∈ [0, 1]`.
pub fn homotopy_positivity(
    m: &MomentMapField,
    b: f64,
    n_points: usize,
    n_s: usize,
    seed: u64,
) -> Result<HomotopyCertificate> {
    if n_s < 2 {
        return Err(Error::Precondition("need at least two s-values".into()));
    }
    let set = sample_level_set(m, b, n_points, seed)?;
    if set.points.is_empty() {
        return Err(Error::Precondition(format!(
            "level set {b} produced no points"
        )));
    }
    let mut cert = HomotopyCertificate {
        level: b,
        points: set.points.len(),
        s_values: n_s,
        minimum: f64::INFINITY,
        witness: Vec::new(),
        witness_s: 0.0,
        pass: false,
    };
    for lp in &set.points {
        let a = lp.point();
        let radial = real_inner(&m.gradient(&a)?, &a);
        let sq = norm(&a).powi(2);
        for k in 0..n_s {
            let s = k as f64 / (n_s - 1) as f64;
            let v = (1.0 - s) * radial + s * sq;
            if v < cert.minimum {
                cert.minimum = v;
                cert.witness = lp.point.clone();
                cert.witness_s = s;
            }
        }
    }
    cert.pass = cert.minimum > 0.0;
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROUND: &str = "z1*cj(z1) + z2*cj(z2)";
    const QUARTIC: &str = "z1*cj(z1) + z2*cj(z2) + 0.1*z1*cj(z1)*z2*cj(z2)";

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn field(text: &str) -> MomentMapField {
        MomentMapField::new(PotentialField::parse(text, 2).unwrap(), 1).unwrap()
    }

    #[test]
    fn moment_map_examples() {
        let m = field(ROUND);
        assert!((moment_map(&m, &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(moment_map(&m, &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap(), 0.0);
        let q = field(QUARTIC);
        assert!((moment_map(&q, &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap() - 2.2).abs() < 1e-14);
    }

    #[test]
    fn hamiltonian_residuals_are_small() {
        assert!(field(ROUND).hamiltonian_residual < 1e-8);
        assert!(field(QUARTIC).hamiltonian_residual < 1e-6);
    }

    #[test]
    fn wrong_sign_two_form_fails_the_oracle() {
        // Oracle sanity: with V = −ip the contraction flips sign and the
        // closed form no longer matches.
        let m = field(ROUND);
        let p = [c(0.7, 0.1), c(-0.2, 0.4)];
        let h = m.potential().levi_matrix(&p).unwrap();
        let x = [c(1.0, 0.0), c(0.0, 0.0)];
        let v: Vec<Complex64> = p.iter().map(|z| -z * Complex64::i()).collect();
        let mut hvx = c(0.0, 0.0);
        for j in 0..2 {
            for l in 0..2 {
                hvx += h[(j, l)] * v[j] * x[l].conj();
            }
        }
        // dμ(e_1) = 2 Re p_1 = 1.4
        assert!((2.0 * hvx.im - 1.4).abs() > 1.0);
    }

    #[test]
    fn non_invariant_potentials_are_rejected() {
        let f = PotentialField::parse("z1*cj(z1) + z2*cj(z2) + 0.5*(z1 + cj(z1))", 2).unwrap();
        assert!(matches!(
            MomentMapField::new(f, 1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn round_level_set_is_the_sphere() {
        let set = sample_level_set(&field(ROUND), 1.0, 32, 5).unwrap();
        assert_eq!(set.points.len(), 32);
        for p in &set.points {
            assert!((p.r - 1.0).abs() < 1e-12);
            assert!((p.mu - 1.0).abs() < LEVEL_TOLERANCE);
        }
    }

    #[test]
    fn quartic_level_on_the_axis() {
        let (r, flagged) = solve_ray(&field(QUARTIC), &[c(1.0, 0.0), c(0.0, 0.0)], 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12 && !flagged);
    }

    #[test]
    fn negative_level_is_rejected() {
        assert!(matches!(
            sample_level_set(&field(ROUND), -1.0, 4, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn induced_map_examples() {
        let m = field(ROUND);
        let p = [c(0.3, 0.2), c(-0.5, 0.7)];
        let q = induced_map(&m, &p).unwrap();
        assert!(q.distance(&QuotientPoint::new(p[0], p[1]).unwrap()) < 1e-15);
        let m = field(QUARTIC);
        let q = induced_map(&m, &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(q, QuotientPoint::new(c(1.0, 0.0), c(1.0, 0.0)).unwrap());
        let ph = Complex64::from_polar(1.0, 1.3);
        let a = induced_map(&m, &p).unwrap();
        let b = induced_map(&m, &[p[0] * ph, p[1] * ph]).unwrap();
        assert!(a.distance(&b) < 1e-10);
    }

    #[test]
    fn homotopy_minimum_on_the_round_sphere() {
        let cert = homotopy_positivity(&field(ROUND), 0.5, 50, 11, 2).unwrap();
        // ⟨∇φ, a⟩ = 2|a|² = 2b at s = 0; |a|² = b at s = 1
        assert!((cert.minimum - 0.5).abs() < 1e-10);
        assert_eq!(cert.witness_s, 1.0);
        assert!(cert.pass);
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let set = sample_level_set(&field(ROUND), 1.0, 3, 5).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("re1,im1,re2,im2,r,mu,flagged"));
    }
}
