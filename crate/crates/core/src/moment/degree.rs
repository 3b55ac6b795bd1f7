use super::field::{homotopy_positivity, induced_map, level_point, MomentMapField};
use super::projective::{signed_spherical_area, Icosphere, QuotientPoint};
use crate::error::{Error, Result};
use crate::par::{map_range_with, Exec};
use crate::rng::{unit_sphere_point, SeedStream};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Targets whose smallest preimage Jacobian determinant falls below this are
/// treated as near-critical and resampled.
pub const JACOBIAN_FLOOR: f64 = 1e-6;
/// Chordal radius for merging preimages.
pub const PREIMAGE_CLUSTER: f64 = 1e-6;

const NEWTON_ITER: usize = 60;
const NEWTON_TOL: f64 = 1e-11;
const FD_STEP: f64 = 1e-7;
const SEED_RADIUS: f64 = 0.5;
const SEED_CAP: usize = 48;
const MAX_TARGET_DRAWS: usize = 40;
/// Area sums further than this from an integer are not rounded.
const AREA_SLACK: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeOptions {
    pub targets: usize,
    /// Icosphere refinement supplying Newton seeds.
    pub seed_level: u32,
    /// Icosphere refinement for the area method.
    pub area_level: u32,
    pub exec: Exec,
}

impl Default for DegreeOptions {
    fn default() -> Self {
        DegreeOptions {
            targets: 5,
            seed_level: 2,
            area_level: 4,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preimage {
    pub point: QuotientPoint,
    /// Real Jacobian determinant of the map in affine charts.
    pub jacobian: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetCount {
    pub target: QuotientPoint,
    pub preimages: Vec<Preimage>,
    /// Sum of the Jacobian signs.
    pub count: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeCertificate {
    pub targets: Vec<TargetCount>,
    /// Targets discarded as near-critical.
    pub resampled: usize,
    /// Common signed count, `None` when the targets disagree.
    pub degree: Option<i64>,
    /// Total signed image area over `4π`.
    pub area_total: f64,
    pub area_degree: Option<i64>,
    pub homotopy_pass: Option<bool>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl DegreeCertificate {
    fn finish(&mut self) {
        self.pass = self.degree.is_some() && self.degree == self.area_degree;
        if !self.pass {
            self.notes.push(format!(
                "methods disagree: preimage {} vs area {:.6}",
                self.degree.map_or("inconsistent".into(), |d| d.to_string()),
                self.area_total
            ));
        }
        if self.homotopy_pass == Some(false) {
            self.pass = false;
            self.notes.push("homotopy positivity failed".into());
        }
    }
}

/// Degree of a map `P^1 → P^1` by signed preimage counts over seeded regular
/// targets, cross-checked against the total signed area of the image of an
/// icosphere triangulation.
pub fn compute_degree<F>(map: F, seed: u64, opts: &DegreeOptions) -> Result<DegreeCertificate>
where
    F: Fn(&QuotientPoint) -> Result<QuotientPoint> + Sync + Send,
{
    if opts.targets == 0 {
        return Err(Error::Precondition(
            "degree needs at least one target".into(),
        ));
    }
    let grid = Icosphere::new(opts.seed_level);
    let seeds = map_sphere(&map, &grid.vertices, opts.exec)?;

    let stream = SeedStream::new(seed).named("degree-targets");
    let mut cert = DegreeCertificate {
        targets: Vec::new(),
        resampled: 0,
        degree: None,
        area_total: 0.0,
        area_degree: None,
        homotopy_pass: None,
        pass: false,
        notes: Vec::new(),
    };
    let mut draw = 0u64;
    while cert.targets.len() < opts.targets {
        if draw as usize >= MAX_TARGET_DRAWS {
            return Err(Error::Precondition(format!(
                "only {} regular targets in {MAX_TARGET_DRAWS} draws",
                cert.targets.len()
            )));
        }
        let v = unit_sphere_point(&mut stream.index(draw).rng(), 2);
        draw += 1;
        let q = QuotientPoint::new(v[0], v[1]).expect("unit vector");
        let tc = count_preimages(&map, &q, &seeds, opts.exec)?;
        if tc
            .preimages
            .iter()
            .any(|p| p.jacobian.abs() < JACOBIAN_FLOOR)
        {
            cert.resampled += 1;
            continue;
        }
        cert.targets.push(tc);
    }
    let first = cert.targets[0].count;
    cert.degree = cert
        .targets
        .iter()
        .all(|t| t.count == first)
        .then_some(first);

    cert.area_total = area_degree(&map, opts.area_level, opts.exec)?;
    let rounded = cert.area_total.round();
    cert.area_degree = ((cert.area_total - rounded).abs() < AREA_SLACK).then_some(rounded as i64);
    cert.finish();
    Ok(cert)
}

/// `Σ signed area(image face) / 4π` over an icosphere of the given level.
pub fn area_degree<F>(map: &F, level: u32, exec: Exec) -> Result<f64>
where
    F: Fn(&QuotientPoint) -> Result<QuotientPoint> + Sync + Send,
{
    let ico = Icosphere::new(level);
    let images: Vec<[f64; 3]> = map_sphere(map, &ico.vertices, exec)?
        .into_iter()
        .map(|(_, img)| img.to_sphere())
        .collect();
    let total: f64 = ico
        .faces
        .iter()
        .map(|f| signed_spherical_area(images[f[0]], images[f[1]], images[f[2]]))
        .sum();
    Ok(total / (4.0 * PI))
}

fn map_sphere<F>(
    map: &F,
    vertices: &[[f64; 3]],
    exec: Exec,
) -> Result<Vec<(QuotientPoint, QuotientPoint)>>
where
    F: Fn(&QuotientPoint) -> Result<QuotientPoint> + Sync + Send,
{
    map_range_with(exec, vertices.len(), |i| {
        let z = QuotientPoint::from_sphere(vertices[i]).expect("unit vertex");
        map(&z).map(|w| (z, w))
    })
    .into_iter()
    .collect()
}

/// Signed preimage count of `q`, seeding Newton from the grid points whose
/// images lie nearest to `q`.
pub fn count_preimages<F>(
    map: &F,
    q: &QuotientPoint,
    grid: &[(QuotientPoint, QuotientPoint)],
    exec: Exec,
) -> Result<TargetCount>
where
    F: Fn(&QuotientPoint) -> Result<QuotientPoint> + Sync + Send,
{
    let mut ranked: Vec<(f64, QuotientPoint)> =
        grid.iter().map(|(z, w)| (w.distance(q), *z)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let near = ranked.iter().take_while(|(d, _)| *d < SEED_RADIUS).count();
    let starts: Vec<QuotientPoint> = ranked
        .iter()
        .take(near.clamp(6, SEED_CAP))
        .map(|x| x.1)
        .collect();
    let solved = map_range_with(exec, starts.len(), |i| chart_newton(map, q, starts[i]));
    let mut preimages: Vec<Preimage> = Vec::new();
    for s in solved {
        if let Some(p) = s? {
            if !preimages
                .iter()
                .any(|o| o.point.distance(&p.point) <= PREIMAGE_CLUSTER)
            {
                preimages.push(p);
            }
        }
    }
    preimages.sort_by(|a, b| {
        a.point
            .to_sphere()
            .iter()
            .zip(b.point.to_sphere().iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let count = preimages.iter().map(|p| p.jacobian.signum() as i64).sum();
    Ok(TargetCount {
        target: *q,
        preimages,
        count,
    })
}

/// Residual of `map(z) = q` in `q`'s own chart, with `z` in chart `cd`.
fn chart_residual<F>(map: &F, q: &QuotientPoint, cd: u8, s: Complex64) -> Result<Option<Complex64>>
where
    F: Fn(&QuotientPoint) -> Result<QuotientPoint>,
{
    let Some(z) = QuotientPoint::from_chart(cd, s) else {
        return Ok(None);
    };
    let w = map(&z)?;
    Ok(w.in_chart(q.chart).map(|v| v - q.chart_coordinate()))
}

fn jacobian<F>(map: &F, q: &QuotientPoint, cd: u8, s: Complex64) -> Result<Option<[[f64; 2]; 2]>>
where
    F: Fn(&QuotientPoint) -> Result<QuotientPoint>,
{
    let h = FD_STEP;
    let mut cols = [[0.0; 2]; 2];
    for (k, dir) in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]
        .into_iter()
        .enumerate()
    {
        let (Some(a), Some(b)) = (
            chart_residual(map, q, cd, s + dir * h)?,
            chart_residual(map, q, cd, s - dir * h)?,
        ) else {
            return Ok(None);
        };
        let d = (a - b) / (2.0 * h);
        cols[k] = [d.re, d.im];
    }
    Ok(Some([[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]]))
}

/// Damped Newton on the 2×2 real chart system, re-anchoring the domain chart
/// to the one where the iterate has coordinate magnitude at most 1.
fn chart_newton<F>(map: &F, q: &QuotientPoint, start: QuotientPoint) -> Result<Option<Preimage>>
where
    F: Fn(&QuotientPoint) -> Result<QuotientPoint>,
{
    let mut z = start;
    for _ in 0..NEWTON_ITER {
        let cd = z.chart;
        let s = z.chart_coordinate();
        let Some(g) = chart_residual(map, q, cd, s)? else {
            return Ok(None);
        };
        let Some(j) = jacobian(map, q, cd, s)? else {
            return Ok(None);
        };
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if g.norm() < NEWTON_TOL {
            return Ok(Some(Preimage {
                point: z,
                jacobian: det,
            }));
        }
        if det == 0.0 || !det.is_finite() {
            return Ok(None);
        }
        let dx = -(j[1][1] * g.re - j[0][1] * g.im) / det;
        let dy = -(-j[1][0] * g.re + j[0][0] * g.im) / det;
        let mut step = Complex64::new(dx, dy);
        if step.norm() > 0.5 {
            step *= 0.5 / step.norm();
        }
        let mut moved = false;
        for _ in 0..30 {
            if let Some(gt) = chart_residual(map, q, cd, s + step)? {
                if gt.norm() < g.norm() {
                    z = QuotientPoint::from_chart(cd, s + step).expect("finite");
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            return Ok(None);
        }
    }
    Ok(None)
}

/// `ζ ↦ induced_map(level point on the ray through ζ)`, the reduced map
/// `μ^{-1}(b)/U(1) → P^1`.
pub fn reduced_map(m: &MomentMapField, b: f64, z: &QuotientPoint) -> Result<QuotientPoint> {
    let (a, c) = z.coords();
    let n = (a.norm_sqr() + c.norm_sqr()).sqrt();
    let dir = [a / n, c / n];
    match level_point(m, &dir, b)? {
        Ok(lp) => induced_map(m, &lp.point()),
        Err(reason) => Err(Error::Precondition(reason)),
    }
}

/// Degree of the reduced map at level `b`, with the homotopy-positivity
/// flag filled in from `homotopy_points` level-set samples.
pub fn moment_degree(
    m: &MomentMapField,
    b: f64,
    seed: u64,
    opts: &DegreeOptions,
    homotopy_points: usize,
) -> Result<DegreeCertificate> {
    let h = homotopy_positivity(m, b, homotopy_points, 11, seed)?;
    let mut cert = compute_degree(|z| reduced_map(m, b, z), seed, opts)?;
    cert.homotopy_pass = Some(h.pass);
    cert.notes.retain(|n| !n.starts_with("methods disagree"));
    cert.finish();
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::PotentialField;

    fn opts() -> DegreeOptions {
        DegreeOptions {
            area_level: 3,
            ..Default::default()
        }
    }

    #[test]
    fn identity_has_degree_one() {
        let cert = compute_degree(|z| Ok(*z), 3, &opts()).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert_eq!(cert.degree, Some(1));
        assert_eq!(cert.area_degree, Some(1));
        assert!(cert.targets.iter().all(|t| t.preimages.len() == 1));
    }

    #[test]
    fn squaring_has_degree_two() {
        let sq = |z: &QuotientPoint| {
            let (a, b) = z.coords();
            Ok(QuotientPoint::new(a * a, b * b).unwrap())
        };
        let cert = compute_degree(sq, 3, &opts()).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert_eq!(cert.degree, Some(2));
        for t in &cert.targets {
            assert_eq!(t.preimages.len(), 2);
            assert!(t.preimages.iter().all(|p| p.jacobian > 0.0));
        }
    }

    #[test]
    fn conjugation_has_degree_minus_one() {
        let cj = |z: &QuotientPoint| {
            let (a, b) = z.coords();
            Ok(QuotientPoint::new(a.conj(), b.conj()).unwrap())
        };
        let cert = compute_degree(cj, 3, &opts()).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert_eq!(cert.degree, Some(-1));
        assert_eq!(cert.area_degree, Some(-1));
    }

    #[test]
    fn constant_map_has_degree_zero() {
        let k = |_: &QuotientPoint| {
            Ok(QuotientPoint::new(Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.1)).unwrap())
        };
        assert!(area_degree(&k, 2, Exec::Sequential).unwrap().abs() < 1e-12);
    }

    #[test]
    fn round_moment_map_has_degree_one() {
        let f =
            PotentialField::parse("z1*cj(z1) + z2*cj(z2) + 0.1*z1*cj(z1)*z2*cj(z2)", 2).unwrap();
        let m = MomentMapField::new(f, 0).unwrap();
        let cert = moment_degree(&m, 1.0, 0, &opts(), 100).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert_eq!(cert.degree, Some(1));
        assert_eq!(cert.homotopy_pass, Some(true));
    }
}
