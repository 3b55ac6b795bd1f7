use super::action::GroupAction;
use super::orbit::{fixed_set_distance, invariance_residual, orbit_dimension};
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::expr::PotentialField;
use crate::geometry::{check_strict_psh, BallSampler, PshCertificate};
use crate::par::Exec;
use crate::rng::{ball_point, SeedStream};
use crate::solve::{cluster, multistart, MultistartConfig, NewtonOutcome};
use num_complex::Complex64;

pub const HYPOTHESIS_NOT_MET: &str = "hypothesis not met: orbit dimension ≤ n";
pub const NO_COUNTEREXAMPLE: &str = "no counterexample found";
pub const COUNTEREXAMPLE: &str = "counterexample: critical cluster off the fixed set";

/// Invariance residual allowed before the experiment refuses to run.
pub const INVARIANCE_LIMIT: f64 = 1e-8;
/// Points sampled to test the orbit-dimension hypothesis.
const HYPOTHESIS_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalCluster {
    pub center: Vec<Complex64>,
    pub members: usize,
    pub residual: f64,
    pub value: f64,
    pub orbit_dimension: usize,
    pub fixed_distance: f64,
    /// Within the clustering radius of the fixed-point set.
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfinementReport {
    pub action: String,
    pub invariance_residual: f64,
    pub psh: PshCertificate,
    /// Smallest orbit dimension seen off the fixed set.
    pub min_orbit_dimension: Option<usize>,
    pub hypothesis_met: bool,
    /// A point whose orbit has real dimension at most `d`.
    pub small_orbit_witness: Option<Vec<Complex64>>,
    pub clusters: Vec<CriticalCluster>,
    pub non_converged: Vec<NewtonOutcome>,
    pub label: &'static str,
    /// `None` when the hypothesis gate fails.
    pub pass: Option<bool>,
}

/// Multistart search for critical points of an invariant strictly PSH field
/// and a check that every cluster found sits on the fixed-point set.
pub fn critical_confinement_experiment(
    f: &PotentialField,
    a: &GroupAction,
    starts: &MultistartConfig,
    exec: Exec,
) -> Result<ConfinementReport> {
    let d = a.dim();
    if f.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: f.dim(),
        });
    }
    let q = QuadratureRule::default_for(a);
    let inv = invariance_residual(f, a, &q, 50, starts.seed)?;
    if inv.residual > INVARIANCE_LIMIT {
        return Err(Error::Precondition(format!(
            "field is not invariant under {} (residual {:.3e})",
            a.name(),
            inv.residual
        )));
    }
    let sampler = BallSampler {
        radius: starts.radius,
        count: BallSampler::MIN_COUNT,
        seed: starts.seed,
    };
    let psh = check_strict_psh(f, &sampler, 0.0)?;
    if !psh.pass {
        return Err(Error::Precondition(format!(
            "field is not strictly PSH on the search ball (λ_min {:.3e})",
            psh.min_eigenvalue
        )));
    }

    let stream = SeedStream::new(starts.seed).named("orbit-hypothesis");
    let mut min_rank: Option<usize> = None;
    let mut witness = orbit_dimension(a, &vec![Complex64::new(0.0, 0.0); d])
        .ok()
        .filter(|o| o.rank <= d)
        .map(|o| o.point);
    for i in 0..HYPOTHESIS_SAMPLES {
        let p = ball_point(&mut stream.index(i as u64).rng(), d, starts.radius);
        let info = orbit_dimension(a, &p)?;
        if info.rank <= d && witness.is_none() {
            witness = Some(p.clone());
        }
        if fixed_set_distance(a, &p)? > starts.cluster_radius {
            min_rank = Some(min_rank.map_or(info.rank, |r| r.min(info.rank)));
        }
    }
    let hypothesis_met = min_rank.is_some_and(|r| r > d);

    let zero = vec![Complex64::new(0.0, 0.0); d];
    let outcomes = multistart(f, &zero, starts, exec)?;
    let (converged, non_converged): (Vec<_>, Vec<_>) =
        outcomes.into_iter().partition(|o| o.converged);
    let points: Vec<(Vec<Complex64>, f64)> = converged
        .iter()
        .map(|o| (o.point.clone(), o.residual))
        .collect();
    let clusters = cluster(&points, starts.cluster_radius)
        .into_iter()
        .map(|c| {
            let fixed_distance = fixed_set_distance(a, &c.center)?;
            Ok(CriticalCluster {
                value: f.value(&c.center)?,
                orbit_dimension: orbit_dimension(a, &c.center)?.rank,
                fixed: fixed_distance <= starts.cluster_radius,
                fixed_distance,
                center: c.center,
                members: c.members,
                residual: c.residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let confined = clusters.iter().all(|c| c.fixed);
    let (label, pass) = if !hypothesis_met {
        (HYPOTHESIS_NOT_MET, None)
    } else if confined {
        (NO_COUNTEREXAMPLE, Some(true))
    } else {
        (COUNTEREXAMPLE, Some(false))
    };
    Ok(ConfinementReport {
        action: a.name(),
        invariance_residual: inv.residual,
        psh,
        min_orbit_dimension: min_rank,
        hypothesis_met,
        small_orbit_witness: witness,
        clusters,
        non_converged,
        label,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::haar_average;

    fn cfg(starts: usize) -> MultistartConfig {
        MultistartConfig {
            starts,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn averaged_linear_perturbation_is_confined() {
        let a = GroupAction::su2();
        let q = QuadratureRule::default_for(&a);
        let f = PotentialField::parse("z1*cj(z1) + z2*cj(z2) + 0.1*(z1 + cj(z1))", 2).unwrap();
        let avg = haar_average(&f, &a, &q).unwrap().field;
        let r = critical_confinement_experiment(&avg, &a, &cfg(16), Exec::default()).unwrap();
        assert!(r.hypothesis_met);
        assert_eq!(r.clusters.len(), 1);
        assert!(r.clusters[0].fixed);
        assert!(crate::point::norm(&r.clusters[0].center) < 1e-6);
        assert_eq!(r.pass, Some(true));
        assert_eq!(r.label, NO_COUNTEREXAMPLE);
    }

    #[test]
    fn norm_squared_has_one_cluster_at_origin() {
        let f = PotentialField::parse("z1*cj(z1) + z2*cj(z2)", 2).unwrap();
        let r = critical_confinement_experiment(&f, &GroupAction::su2(), &cfg(64), Exec::default())
            .unwrap();
        assert_eq!(r.clusters.len(), 1);
        assert_eq!(r.clusters[0].members, 64);
        assert!(r.non_converged.is_empty());
        assert!(r.small_orbit_witness.is_some());
    }

    #[test]
    fn small_orbits_fail_the_gate() {
        let a = GroupAction::circle(vec![1, 1]).unwrap();
        let f = PotentialField::parse("z1*cj(z1) + 2*z2*cj(z2)", 2).unwrap();
        let r = critical_confinement_experiment(&f, &a, &cfg(8), Exec::default()).unwrap();
        assert!(!r.hypothesis_met);
        assert_eq!(r.label, HYPOTHESIS_NOT_MET);
        assert_eq!(r.pass, None);
    }

    #[test]
    fn non_invariant_field_is_refused() {
        let a = GroupAction::su2();
        let f = PotentialField::parse("z1*cj(z1) + z2*cj(z2) + 0.5*(z1 + cj(z1))", 2).unwrap();
        assert!(matches!(
            critical_confinement_experiment(&f, &a, &cfg(4), Exec::default()),
            Err(Error::Precondition(_))
        ));
    }
}
