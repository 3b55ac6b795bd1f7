//! Built-in corpus and the invariant suite run over it.

use crate::error::Result;
use crate::expr::PotentialField;
use crate::flow::{
    convergence_report, estimate_lojasiewicz, integrate_flow, FlowConfig, FlowTrajectory, Metric,
};
use crate::geometry::{
    check_strict_psh, complex_gradient, levi_hessian_identity_residual, radial_pairing, BallSampler,
};
use crate::moment::{
    compute_degree, gradient_fiber, homotopy_positivity, induced_map, moment_map, reduced_map,
    sample_level_set, DegreeOptions, MomentMapField,
};
use crate::par::{map_range_with, Exec};
use crate::point::{from_real, norm, to_real};
use crate::rng::{ball_point, unit_sphere_point, SeedStream};
use crate::solve::MultistartConfig;
use crate::symmetry::{
    critical_confinement_experiment, haar_average, invariance_residual, orbit_dimension,
    GroupAction, QuadratureRule,
};
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone)]
pub struct CorpusField {
    pub name: String,
    pub field: PotentialField,
    /// Declared strictly PSH, with the Levi floor it is held to.
    pub levi_floor: Option<f64>,
}

impl CorpusField {
    fn new(name: &str, field: PotentialField, levi_floor: Option<f64>) -> Self {
        CorpusField {
            name: name.into(),
            field: field.with_label(name),
            levi_floor,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Well {
    pub name: String,
    pub field: PotentialField,
    pub x0: f64,
    /// Band the Łojasiewicz exponent must fall in.
    pub alpha: (f64, f64),
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub fields: Vec<CorpusField>,
    pub wells: Vec<Well>,
}

pub const ROUND: &str = "z1*cj(z1) + z2*cj(z2)";
pub const QUARTIC: &str = "z1*cj(z1) + z2*cj(z2) + 0.1*z1*cj(z1)*z2*cj(z2)";
pub const CROSS: &str = "z1*cj(z1) + z2*cj(z2) + 0.25*(z1*cj(z2) + cj(z1)*z2)";
pub const PERTURBED_A: &str = "z1*cj(z1) + z2*cj(z2) + 0.2*z1^2*cj(z1)^2";
pub const PERTURBED_B: &str =
    "z1*cj(z1) + z2*cj(z2) + 0.15*(z1*cj(z2) + cj(z1)*z2) + 0.1*z1*cj(z1)*z2*cj(z2) + 0.05*(z1^2 + cj(z1)^2)";
pub const HARMONIC: &str = "0.5*(z1^2 + cj(z1)^2)";

impl Corpus {
    pub fn empty() -> Corpus {
        Corpus::default()
    }

    pub fn builtin() -> Result<Corpus> {
        let su2 = GroupAction::su2();
        let rule = QuadratureRule::default_for(&su2);
        let averaged = |text: &str| -> Result<PotentialField> {
            Ok(haar_average(&PotentialField::validated(text, 2)?, &su2, &rule)?.field)
        };
        Ok(Corpus {
            fields: vec![
                CorpusField::new("round", PotentialField::validated(ROUND, 2)?, Some(1.0)),
                CorpusField::new("quartic", PotentialField::validated(QUARTIC, 2)?, Some(1.0)),
                CorpusField::new("cross", PotentialField::validated(CROSS, 2)?, Some(0.75)),
                CorpusField::new("su2-avg-a", averaged(PERTURBED_A)?, Some(1.0)),
                CorpusField::new("su2-avg-b", averaged(PERTURBED_B)?, Some(1.0)),
            ],
            wells: vec![
                Well {
                    name: "quadratic-well".into(),
                    field: PotentialField::validated("z1*cj(z1)", 1)?,
                    x0: 3.0,
                    alpha: (0.45, 0.55),
                },
                Well {
                    name: "quartic-well".into(),
                    field: PotentialField::validated("z1^2*cj(z1)^2", 1)?,
                    x0: 1.0,
                    alpha: (0.70, 0.80),
                },
            ],
        })
    }

    /// The built-in corpus with the harmonic `Re(z1²)` declared strictly PSH.
    pub fn with_planted_harmonic() -> Result<Corpus> {
        let mut c = Corpus::builtin()?;
        c.fields.push(CorpusField::new(
            "planted-harmonic",
            PotentialField::validated(HARMONIC, 2)?,
            Some(1.0),
        ));
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub invariant: String,
    pub subject: String,
    pub measured: f64,
    pub bound: f64,
    /// Distance to the bound, positive on the passing side.
    pub margin: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn below(invariant: &str, subject: &str, measured: f64, bound: f64) -> Check {
        Check {
            invariant: invariant.into(),
            subject: subject.into(),
            measured,
            bound,
            margin: bound - measured,
            pass: measured < bound,
            detail: String::new(),
        }
    }

    fn above(invariant: &str, subject: &str, measured: f64, bound: f64) -> Check {
        Check {
            invariant: invariant.into(),
            subject: subject.into(),
            measured,
            bound,
            margin: measured - bound,
            pass: measured > bound,
            detail: String::new(),
        }
    }

    fn equal(invariant: &str, subject: &str, measured: f64, expected: f64) -> Check {
        Check {
            invariant: invariant.into(),
            subject: subject.into(),
            measured,
            bound: expected,
            margin: 0.0 - (measured - expected).abs(),
            pass: measured == expected,
            detail: String::new(),
        }
    }

    fn failed(invariant: &str, subject: &str, err: impl std::fmt::Display) -> Check {
        Check {
            invariant: invariant.into(),
            subject: subject.into(),
            measured: f64::NAN,
            bound: f64::NAN,
            margin: f64::NAN,
            pass: false,
            detail: format!("error: {err}"),
        }
    }

    fn with(mut self, detail: impl Into<String>) -> Check {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Set when the corpus produced no checks at all.
    pub vacuous: bool,
    #[serde(skip)]
    pub trajectory: Option<FlowTrajectory>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        !self.vacuous && self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// `invariant,subject,measured,bound,margin,pass,detail` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| crate::Error::Io(e.to_string());
        w.write_record([
            "invariant",
            "subject",
            "measured",
            "bound",
            "margin",
            "pass",
            "detail",
        ])
        .map_err(io)?;
        for c in &self.checks {
            w.write_record([
                c.invariant.clone(),
                c.subject.clone(),
                format!("{:e}", c.measured),
                format!("{:e}", c.bound),
                format!("{:e}", c.margin),
                c.pass.to_string(),
                c.detail.clone(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sample counts used by the suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteSizes {
    pub gradient_points: usize,
    pub psh_points: usize,
    pub radial_points: usize,
    pub moment_points: usize,
    pub levels: &'static [f64],
    pub homotopy_points: usize,
    pub area_level: u32,
    pub fiber_targets: usize,
    pub starts: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        SuiteSizes {
            gradient_points: 100,
            psh_points: 1000,
            radial_points: 1000,
            moment_points: 100,
            levels: &[0.5, 1.0, 2.0],
            homotopy_points: 1000,
            area_level: 4,
            fiber_targets: 3,
            starts: 64,
        }
    }
}

/// Relative error of the symbolic gradient against central differences,
/// `max_k |g_k − g_fd,k| / max(‖g‖, 1)` over seeded points in the unit ball.
pub fn gradient_fd_error(f: &PotentialField, n: usize, seed: u64) -> Result<f64> {
    let stream = SeedStream::new(seed).named("gradient-fd");
    let mut worst = 0.0_f64;
    for i in 0..n {
        let p = ball_point(&mut stream.index(i as u64).rng(), f.dim(), 1.0);
        let g = complex_gradient(f, &p)?.real_gradient();
        let x = to_real(&p);
        let h = 1e-5;
        let mut err = 0.0_f64;
        for k in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (f.value(&from_real(&xp))? - f.value(&from_real(&xm))?) / (2.0 * h);
            err = err.max((fd - g[k]).abs());
        }
        let scale = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        worst = worst.max(err / scale);
    }
    Ok(worst)
}

/// Runs every invariant over the corpus. Failures are recorded as checks;
/// the suite itself does not stop on them.
pub fn verify_suite(corpus: &Corpus, seed: u64, sizes: &SuiteSizes, exec: Exec) -> SuiteReport {
    let mut checks = Vec::new();
    let stream = SeedStream::new(seed);
    let two_d: Vec<&CorpusField> = corpus
        .fields
        .iter()
        .filter(|c| c.field.dim() == 2)
        .collect();

    for c in &corpus.fields {
        checks.push(
            match gradient_fd_error(&c.field, sizes.gradient_points, seed) {
                Ok(e) => Check::below("gradient-fd", &c.name, e, 1e-6),
                Err(e) => Check::failed("gradient-fd", &c.name, e),
            },
        );
    }
    for c in &corpus.fields {
        let Some(floor) = c.levi_floor else { continue };
        let sampler = BallSampler {
            radius: 1.0,
            count: sizes.psh_points.max(BallSampler::MIN_COUNT),
            seed,
        };
        checks.push(match check_strict_psh(&c.field, &sampler, 0.0) {
            Ok(cert) => {
                let mut k = Check::above("strict-psh", &c.name, cert.min_eigenvalue, floor - 1e-9);
                k.pass = k.pass && cert.pass;
                k.margin = cert.min_eigenvalue - (floor - 1e-9);
                if !k.pass {
                    k.detail = format!("witness {:?}", cert.witness);
                }
                k
            }
            Err(e) => Check::failed("strict-psh", &c.name, e),
        });
    }
    for c in &corpus.fields {
        if c.levi_floor.is_none() {
            continue;
        }
        let s = stream.named("radial").named(&c.name);
        let vals = map_range_with(exec, sizes.radial_points, |i| {
            let mut rng = s.index(i as u64).rng();
            let p = ball_point(&mut rng, c.field.dim(), 2.0);
            if norm(&p) == 0.0 {
                return Ok(f64::INFINITY);
            }
            radial_pairing(&c.field, &p).map(|v| v / norm(&p).powi(2))
        });
        checks.push(match vals.into_iter().collect::<Result<Vec<f64>>>() {
            Ok(v) => {
                let min = v.iter().copied().fold(f64::INFINITY, f64::min);
                let bad = v.iter().filter(|x| !(**x > 0.0)).count();
                Check::above("radial-positivity", &c.name, min, 0.0)
                    .with(format!("{bad} violations of {}", v.len()))
            }
            Err(e) => Check::failed("radial-positivity", &c.name, e),
        });
    }
    for c in corpus.fields.iter().filter(|c| c.field.expr().is_some()) {
        let s = stream.named("levi-identity").named(&c.name);
        let mut worst = 0.0_f64;
        let mut err = None;
        for i in 0..20 {
            let mut rng = s.index(i).rng();
            let p = ball_point(&mut rng, c.field.dim(), 1.0);
            let v = unit_sphere_point(&mut rng, c.field.dim());
            match levi_hessian_identity_residual(&c.field, &p, &v) {
                Ok(r) => worst = worst.max(r),
                Err(e) => err = Some(e),
            }
        }
        checks.push(match err {
            None => Check::below("levi-hessian-identity", &c.name, worst, 1e-10),
            Some(e) => Check::failed("levi-hessian-identity", &c.name, e),
        });
    }

    haar_checks(corpus, seed, &mut checks);
    if !corpus.fields.is_empty() {
        orbit_checks(seed, &mut checks);
    }
    moment_checks(&two_d, seed, sizes, exec, &mut checks);
    fiber_checks(&two_d, seed, sizes, exec, &mut checks);
    confine_checks(&two_d, seed, sizes, exec, &mut checks);
    let trajectory = flow_checks(corpus, &two_d, seed, &mut checks);

    SuiteReport {
        seed,
        vacuous: checks.is_empty(),
        checks,
        trajectory,
    }
}

fn haar_checks(corpus: &Corpus, seed: u64, checks: &mut Vec<Check>) {
    let Ok(circle) = GroupAction::circle(vec![1, 2]) else {
        return;
    };
    let q = QuadratureRule::default_for(&circle);
    for c in corpus
        .fields
        .iter()
        .filter(|c| c.field.expr().is_some() && c.field.dim() == 2)
    {
        let result = (|| -> Result<(f64, f64)> {
            let avg = haar_average(&c.field, &circle, &q)?.field;
            let twice = haar_average(&avg, &circle, &q)?.field;
            let s = SeedStream::new(seed).named("idempotence").named(&c.name);
            let mut idem = 0.0_f64;
            for i in 0..32 {
                let p = ball_point(&mut s.index(i).rng(), 2, 2.0);
                idem = idem.max((avg.value(&p)? - twice.value(&p)?).abs());
            }
            let inv = invariance_residual(&avg, &circle, &q, 32, seed)?.residual;
            Ok((idem, inv))
        })();
        match result {
            Ok((idem, inv)) => {
                checks.push(Check::below("haar-idempotence", &c.name, idem, 1e-10));
                checks.push(Check::below("haar-invariance", &c.name, inv, 1e-10));
            }
            Err(e) => checks.push(Check::failed("haar-average", &c.name, e)),
        }
    }
}

fn orbit_checks(seed: u64, checks: &mut Vec<Check>) {
    let s = SeedStream::new(seed).named("orbit");
    let zero = [Complex64::new(0.0, 0.0); 2];
    for (name, action, generic) in [
        ("su2", GroupAction::su2(), 3usize),
        ("circle(1,1)", GroupAction::diagonal_circle(2), 1),
    ] {
        let mut worst = 0usize;
        let mut bad = 0usize;
        for i in 0..64 {
            let p = ball_point(&mut s.index(i).rng(), 2, 2.0);
            let r = orbit_dimension(&action, &p)
                .map(|o| o.rank)
                .unwrap_or(usize::MAX);
            if r != generic {
                bad += 1;
                worst = r;
            }
        }
        checks.push(
            Check::equal("orbit-dimension-generic", name, bad as f64, 0.0).with(if bad > 0 {
                format!("rank {worst} seen")
            } else {
                format!("rank {generic}")
            }),
        );
        let r0 = orbit_dimension(&action, &zero)
            .map(|o| o.rank as f64)
            .unwrap_or(f64::NAN);
        checks.push(Check::equal("orbit-dimension-origin", name, r0, 0.0));
    }
}

fn moment_checks(
    fields: &[&CorpusField],
    seed: u64,
    sizes: &SuiteSizes,
    exec: Exec,
    checks: &mut Vec<Check>,
) {
    for c in fields
        .iter()
        .filter(|c| c.levi_floor.is_some() && c.field.expr().is_some())
    {
        let m = match MomentMapField::new(c.field.clone(), seed) {
            Ok(m) => m,
            Err(e) => {
                checks.push(Check::failed("moment-field", &c.name, e));
                continue;
            }
        };
        checks.push(Check::below(
            "hamiltonian-residual",
            &c.name,
            m.hamiltonian_residual,
            1e-6,
        ));
        let s = SeedStream::new(seed)
            .named("moment-invariance")
            .named(&c.name);
        let mut inv = 0.0_f64;
        let mut quot = 0.0_f64;
        let mut err = None;
        for i in 0..sizes.moment_points {
            let mut rng = s.index(i as u64).rng();
            let p = ball_point(&mut rng, 2, 2.0);
            let t: f64 = rand::Rng::random_range(&mut rng, 0.0..std::f64::consts::TAU);
            let ph = Complex64::from_polar(1.0, t);
            let q: Vec<Complex64> = p.iter().map(|z| z * ph).collect();
            match (|| -> Result<(f64, f64)> {
                let dm = (moment_map(&m, &q)? - moment_map(&m, &p)?).abs();
                let dq = induced_map(&m, &q)?.distance(&induced_map(&m, &p)?);
                Ok((dm, dq))
            })() {
                Ok((dm, dq)) => {
                    inv = inv.max(dm);
                    quot = quot.max(dq);
                }
                Err(e) => err = Some(e),
            }
        }
        if let Some(e) = err {
            checks.push(Check::failed("moment-invariance", &c.name, e));
            continue;
        }
        checks.push(Check::below("moment-invariance", &c.name, inv, 1e-12));
        checks.push(Check::below("quotient-well-defined", &c.name, quot, 1e-10));

        let opts = DegreeOptions {
            area_level: sizes.area_level,
            exec,
            ..Default::default()
        };
        for &b in sizes.levels {
            let subject = format!("{} b={b}", c.name);
            match sample_level_set(&m, b, 64, seed) {
                Ok(set) => {
                    let worst = set
                        .points
                        .iter()
                        .map(|p| (p.mu - b).abs())
                        .fold(0.0, f64::max);
                    checks.push(
                        Check::below("level-set-residual", &subject, worst, 1e-10).with(format!(
                            "{} points, {} skipped",
                            set.points.len(),
                            set.skipped.len()
                        )),
                    );
                }
                Err(e) => checks.push(Check::failed("level-set-residual", &subject, e)),
            }
            match homotopy_positivity(&m, b, sizes.homotopy_points, 11, seed) {
                Ok(h) => checks.push(
                    Check::above("homotopy-positivity", &subject, h.minimum, 0.0)
                        .with(format!("{} points x {} s-values", h.points, h.s_values)),
                ),
                Err(e) => checks.push(Check::failed("homotopy-positivity", &subject, e)),
            }
            match compute_degree(|z| reduced_map(&m, b, z), seed, &opts) {
                Ok(cert) => {
                    let pre = cert.degree.map_or(f64::NAN, |d| d as f64);
                    checks.push(
                        Check::equal("degree-preimage", &subject, pre, 1.0).with(format!(
                            "counts {:?}",
                            cert.targets.iter().map(|t| t.count).collect::<Vec<_>>()
                        )),
                    );
                    let area = cert.area_degree.map_or(f64::NAN, |d| d as f64);
                    checks.push(
                        Check::equal("degree-area", &subject, area, 1.0)
                            .with(format!("area total {:.12}", cert.area_total)),
                    );
                    checks.push(Check::equal(
                        "degree-methods-agree",
                        &subject,
                        if cert.pass { 1.0 } else { 0.0 },
                        1.0,
                    ));
                }
                Err(e) => checks.push(Check::failed("degree", &subject, e)),
            }
        }
    }
}

/// Targets `c = ∇f(z*)` for seeded `z*` in the unit ball, so each fiber has
/// a known member.
pub fn planted_targets(
    f: &PotentialField,
    n: usize,
    seed: u64,
) -> Result<Vec<(Vec<Complex64>, Vec<Complex64>)>> {
    let s = SeedStream::new(seed).named("fiber-targets");
    (0..n)
        .map(|i| {
            let z = ball_point(&mut s.index(i as u64).rng(), f.dim(), 1.0);
            let c = complex_gradient(f, &z)?.complex_gradient();
            Ok((z, c))
        })
        .collect()
}

fn fiber_checks(
    fields: &[&CorpusField],
    seed: u64,
    sizes: &SuiteSizes,
    exec: Exec,
    checks: &mut Vec<Check>,
) {
    for c in fields.iter().filter(|c| c.levi_floor.is_some()) {
        let targets = match planted_targets(&c.field, sizes.fiber_targets, seed) {
            Ok(t) => t,
            Err(e) => {
                checks.push(Check::failed("fiber-isolation", &c.name, e));
                continue;
            }
        };
        let cfg = MultistartConfig {
            starts: sizes.starts,
            seed,
            ..Default::default()
        };
        for (k, (z, target)) in targets.iter().enumerate() {
            let subject = format!("{} target {k}", c.name);
            match gradient_fiber(&c.field, target, &cfg, exec) {
                Ok(r) => {
                    let spread = r.clusters.iter().map(|x| x.spread).fold(0.0, f64::max);
                    let found = r.clusters.iter().any(|x| {
                        let p: Vec<Complex64> = x
                            .center
                            .iter()
                            .map(|v| Complex64::new(v[0], v[1]))
                            .collect();
                        crate::point::distance(&p, z) < 1e-6
                    });
                    let mut k = Check::below(
                        "fiber-isolation",
                        &subject,
                        spread,
                        crate::moment::ISOLATION_RATIO * crate::moment::PROBE_SCALE,
                    )
                    .with(format!(
                        "{} clusters, {} non-converged{}",
                        r.cluster_count(),
                        r.non_converged,
                        r.phase_note
                            .as_deref()
                            .map(|n| format!("; {n}"))
                            .unwrap_or_default()
                    ));
                    k.pass = k.pass && r.pass && !r.clusters.is_empty();
                    checks.push(k);
                    checks.push(Check::equal(
                        "fiber-contains-planted-point",
                        &subject,
                        if found { 1.0 } else { 0.0 },
                        1.0,
                    ));
                }
                Err(e) => checks.push(Check::failed("fiber-isolation", &subject, e)),
            }
        }
    }
}

fn confine_checks(
    fields: &[&CorpusField],
    seed: u64,
    sizes: &SuiteSizes,
    exec: Exec,
    checks: &mut Vec<Check>,
) {
    let su2 = GroupAction::su2();
    let q = QuadratureRule::default_for(&su2);
    for c in fields.iter().filter(|c| c.levi_floor.is_some()) {
        // only fields that are already SU(2)-invariant
        match invariance_residual(&c.field, &su2, &q, 16, seed) {
            Ok(r) if r.residual <= crate::symmetry::INVARIANCE_LIMIT => {}
            _ => continue,
        }
        let cfg = MultistartConfig {
            starts: sizes.starts,
            seed,
            ..Default::default()
        };
        match critical_confinement_experiment(&c.field, &su2, &cfg, exec) {
            Ok(r) => {
                let at_origin = r.clusters.len() == 1 && r.clusters[0].fixed;
                let mut k = Check::equal(
                    "critical-confinement",
                    &c.name,
                    r.clusters.len() as f64,
                    1.0,
                )
                .with(r.label);
                k.pass = k.pass && at_origin && r.pass == Some(true);
                checks.push(k);
            }
            Err(e) => checks.push(Check::failed("critical-confinement", &c.name, e)),
        }
    }
}

fn flow_checks(
    corpus: &Corpus,
    fields: &[&CorpusField],
    seed: u64,
    checks: &mut Vec<Check>,
) -> Option<FlowTrajectory> {
    let mut first = None;
    for w in &corpus.wells {
        let x0 = [Complex64::new(w.x0, 0.0)];
        let traj = match integrate_flow(&w.field, &x0, &FlowConfig::default()) {
            Ok(t) => t,
            Err(e) => {
                checks.push(Check::failed("flow-convergence", &w.name, e));
                continue;
            }
        };
        match convergence_report(&traj, &w.field) {
            Ok(r) => checks.push(
                Check::equal(
                    "flow-convergence",
                    &w.name,
                    if r.pass { 1.0 } else { 0.0 },
                    1.0,
                )
                .with(r.reasons.join("; ")),
            ),
            Err(e) => checks.push(Check::failed("flow-convergence", &w.name, e)),
        }
        match estimate_lojasiewicz(&traj) {
            Ok(e) => {
                let (lo, hi) = w.alpha;
                let mut k = Check::below(
                    "lojasiewicz-band",
                    &w.name,
                    (e.alpha - 0.5 * (lo + hi)).abs(),
                    0.5 * (hi - lo),
                );
                k.pass = e.alpha >= lo && e.alpha <= hi;
                checks.push(k.with(format!("alpha {:.6} in [{lo}, {hi}]", e.alpha)));
            }
            Err(e) => checks.push(Check::failed("lojasiewicz-band", &w.name, e)),
        }
        if first.is_none() {
            first = Some(traj);
        }
    }
    let s = SeedStream::new(seed).named("corpus-flows");
    for c in fields.iter().filter(|c| c.levi_floor.is_some()) {
        let metrics: &[Metric] = if c.field.expr().is_some() {
            &[Metric::Euclidean, Metric::Kahler]
        } else {
            &[Metric::Euclidean]
        };
        let x0 = ball_point(&mut s.named(&c.name).rng(), 2, 1.0);
        for &metric in metrics {
            let subject = format!("{} {metric:?}", c.name).to_lowercase();
            let cfg = FlowConfig {
                metric,
                ..Default::default()
            };
            match integrate_flow(&c.field, &x0, &cfg) {
                Ok(t) => {
                    let over = t
                        .monotonicity_violations()
                        .iter()
                        .filter(|(k, dv)| *dv > t.step_tolerances[*k])
                        .count();
                    checks.push(
                        Check::equal("flow-monotonicity", &subject, over as f64, 0.0).with(
                            format!(
                                "{} steps, terminated by {}",
                                t.accepted().count() - 1,
                                t.termination
                            ),
                        ),
                    );
                }
                Err(e) => checks.push(Check::failed("flow-monotonicity", &subject, e)),
            }
        }
    }
    first
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SuiteSizes {
        SuiteSizes {
            gradient_points: 10,
            psh_points: 100,
            radial_points: 50,
            moment_points: 10,
            levels: &[1.0],
            homotopy_points: 20,
            area_level: 3,
            fiber_targets: 1,
            starts: 8,
        }
    }

    #[test]
    fn empty_corpus_is_vacuous() {
        let r = verify_suite(&Corpus::empty(), 1, &tiny(), Exec::default());
        assert!(r.vacuous && r.checks.is_empty() && !r.pass());
    }

    #[test]
    fn planted_harmonic_fails_with_witness() {
        let mut corpus = Corpus::empty();
        corpus.fields.push(CorpusField::new(
            "planted-harmonic",
            PotentialField::validated(HARMONIC, 2).unwrap(),
            Some(1.0),
        ));
        let r = verify_suite(&corpus, 1, &tiny(), Exec::default());
        let psh = r
            .checks
            .iter()
            .find(|c| c.invariant == "strict-psh")
            .unwrap();
        assert!(!psh.pass);
        assert!(psh.detail.starts_with("witness"));
        assert!(!r.pass());
    }

    #[test]
    fn gradient_oracle_matches_on_the_corpus() {
        for c in Corpus::builtin().unwrap().fields {
            assert!(
                gradient_fd_error(&c.field, 10, 3).unwrap() < 1e-6,
                "{}",
                c.name
            );
        }
    }
}
