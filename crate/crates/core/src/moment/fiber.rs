use crate::error::{Error, Result};
use crate::expr::PotentialField;
use crate::geometry::{check_strict_psh, BallSampler};
use crate::par::{map_range_with, Exec};
use crate::point::distance;
use crate::rng::{unit_sphere_point, SeedStream};
use crate::solve::{cluster, multistart, newton_solve, MultistartConfig};
use num_complex::Complex64;
use serde::Serialize;

/// Clusters reported by the fiber experiment have `‖∇u − c‖` below this.
pub const FIBER_RESIDUAL: f64 = 1e-8;
/// Perturbation radius of the local-dimension probe.
pub const PROBE_SCALE: f64 = 1e-4;
pub const PROBE_COUNT: usize = 20;
/// A cluster is isolated when its probe spread is below this fraction of
/// the perturbation radius.
pub const ISOLATION_RATIO: f64 = 0.1;
/// Clusters whose values differ by more than this violate the phase
/// hypothesis for the field and target.
pub const PHASE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberCluster {
    pub center: Vec<[f64; 2]>,
    pub members: usize,
    pub residual: f64,
    pub value: f64,
    /// Max pairwise distance between re-solves from perturbed starts.
    pub spread: f64,
    /// Perturbed re-solves that converged.
    pub probe_converged: usize,
    pub isolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberReport {
    pub target: Vec<[f64; 2]>,
    pub starts: usize,
    pub converged: usize,
    pub non_converged: usize,
    /// Converged solutions rejected for residual above the fiber bound.
    pub loose: usize,
    pub clusters: Vec<FiberCluster>,
    pub phase_note: Option<String>,
    /// Every cluster isolated.
    pub pass: bool,
}

impl FiberReport {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }
}

/// Solutions of `∇f(z) = c` on `C^2` by multistart Newton, clustered and
/// probed for local dimension.
pub fn gradient_fiber(
    f: &PotentialField,
    c: &[Complex64],
    cfg: &MultistartConfig,
    exec: Exec,
) -> Result<FiberReport> {
    if f.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: f.dim(),
        });
    }
    let psh = check_strict_psh(
        f,
        &BallSampler {
            radius: cfg.radius,
            count: BallSampler::MIN_COUNT,
            seed: cfg.seed,
        },
        0.0,
    )?;
    if !psh.pass {
        return Err(Error::Precondition(format!(
            "field is not strictly PSH on the search ball (λ_min {:.3e})",
            psh.min_eigenvalue
        )));
    }
    let outcomes = multistart(f, c, cfg, exec)?;
    let converged: Vec<_> = outcomes.iter().filter(|o| o.converged).collect();
    let tight: Vec<(Vec<Complex64>, f64)> = converged
        .iter()
        .filter(|o| o.residual < FIBER_RESIDUAL)
        .map(|o| (o.point.clone(), o.residual))
        .collect();
    let clusters = cluster(&tight, cfg.cluster_radius);
    let probe_stream = SeedStream::new(cfg.seed).named("fiber-probe");
    let mut out = Vec::with_capacity(clusters.len());
    for (k, cl) in clusters.iter().enumerate() {
        let stream = probe_stream.index(k as u64);
        let solves = map_range_with(exec, PROBE_COUNT, |i| {
            let dir = unit_sphere_point(&mut stream.index(i as u64).rng(), 2);
            let x0: Vec<Complex64> = cl
                .center
                .iter()
                .zip(&dir)
                .map(|(z, d)| z + d * PROBE_SCALE)
                .collect();
            newton_solve(f, c, &x0, cfg.max_iter, cfg.tol)
        });
        let pts: Vec<&Vec<Complex64>> = solves
            .iter()
            .filter(|o| o.converged)
            .map(|o| &o.point)
            .collect();
        let mut spread = 0.0_f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                spread = spread.max(distance(pts[i], pts[j]));
            }
        }
        out.push(FiberCluster {
            center: cl.center.iter().map(|z| [z.re, z.im]).collect(),
            members: cl.members,
            residual: cl.residual,
            value: f.value(&cl.center)?,
            spread,
            probe_converged: pts.len(),
            isolated: !pts.is_empty() && spread < ISOLATION_RATIO * PROBE_SCALE,
        });
    }
    let phase_note = match out
        .iter()
        .map(|c| c.value)
        .fold(None, |acc: Option<(f64, f64)>, v| {
            Some(acc.map_or((v, v), |(lo, hi)| (lo.min(v), hi.max(v))))
        }) {
        Some((lo, hi)) if hi - lo > PHASE_TOLERANCE => Some(format!(
            "phase hypothesis fails for this field and target: cluster values differ by {:.3e}",
            hi - lo
        )),
        _ => None,
    };
    Ok(FiberReport {
        target: c.iter().map(|z| [z.re, z.im]).collect(),
        starts: cfg.starts,
        converged: converged.len(),
        non_converged: outcomes.len() - converged.len(),
        loose: converged.len() - tight.len(),
        pass: out.iter().all(|c| c.isolated),
        clusters: out,
        phase_note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg(starts: usize) -> MultistartConfig {
        MultistartConfig {
            starts,
            seed: 4,
            ..Default::default()
        }
    }

    #[test]
    fn round_fiber_is_a_single_point() {
        let f = PotentialField::parse("z1*cj(z1) + z2*cj(z2)", 2).unwrap();
        let r = gradient_fiber(&f, &[c(2.0, 0.0), c(0.0, 2.0)], &cfg(16), Exec::default()).unwrap();
        assert_eq!(r.cluster_count(), 1);
        let z = &r.clusters[0];
        assert!((z.center[0][0] - 1.0).abs() < 1e-9 && (z.center[1][1] - 1.0).abs() < 1e-9);
        assert!(z.isolated && r.pass);
        let r = gradient_fiber(&f, &[c(0.0, 0.0), c(0.0, 0.0)], &cfg(16), Exec::default()).unwrap();
        assert_eq!(r.cluster_count(), 1);
        assert!(r.clusters[0]
            .center
            .iter()
            .all(|z| z[0].abs() < 1e-9 && z[1].abs() < 1e-9));
    }

    #[test]
    fn quartic_fiber_contains_the_planted_point() {
        let f =
            PotentialField::parse("z1*cj(z1) + z2*cj(z2) + 0.1*z1*cj(z1)*z2*cj(z2)", 2).unwrap();
        let r = gradient_fiber(&f, &[c(2.2, 0.0), c(2.2, 0.0)], &cfg(64), Exec::default()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r
            .clusters
            .iter()
            .any(|z| (z.center[0][0] - 1.0).abs() < 1e-8 && (z.center[1][0] - 1.0).abs() < 1e-8));
        assert!(r.clusters.iter().all(|z| z.residual < FIBER_RESIDUAL));
    }

    #[test]
    fn planted_degenerate_fiber_is_flagged() {
        // |z1|² on C^2 ignores z2: the fiber over (2, 0) is the line z1 = 1.
        // The field is not strictly PSH, so the probe is exercised directly.
        let f = PotentialField::parse("z1*cj(z1)", 2).unwrap();
        assert!(gradient_fiber(&f, &[c(2.0, 0.0), c(0.0, 0.0)], &cfg(4), Exec::default()).is_err());
        let target = [c(2.0, 0.0), c(0.0, 0.0)];
        let x0 = [c(1.0, 0.0), c(0.3, 0.0)];
        let stream = SeedStream::new(0).named("probe");
        let pts: Vec<_> = (0..PROBE_COUNT)
            .map(|i| {
                let d = unit_sphere_point(&mut stream.index(i as u64).rng(), 2);
                let s: Vec<_> = x0
                    .iter()
                    .zip(&d)
                    .map(|(z, e)| z + e * PROBE_SCALE)
                    .collect();
                newton_solve(&f, &target, &s, 50, 1e-12).point
            })
            .collect();
        let spread = pts
            .iter()
            .flat_map(|a| pts.iter().map(move |b| distance(a, b)))
            .fold(0.0, f64::max);
        assert!(spread > ISOLATION_RATIO * PROBE_SCALE);
    }
}
