//! Experiment dispatch and report artifacts.

use super::config::{Experiment, ExperimentConfig, ExperimentKind};
use super::svg::Plot;
use super::verify::{verify_suite, Corpus, SuiteSizes};
use crate::error::{Error, Result};
use crate::expr::PotentialField;
use crate::flow::{convergence_report, integrate_flow, FlowTrajectory};
use crate::geometry::{check_strict_psh, levi_form, BallSampler};
use crate::moment::{
    compute_degree, gradient_fiber, homotopy_positivity, reduced_map, sample_level_set,
    DegreeOptions, MomentMapField,
};
use crate::par::Exec;
use crate::point::norm;
use crate::rng::{ball_point, SeedStream};
use crate::symmetry::{
    critical_confinement_experiment, fixed_set_distance, haar_average, invariance_residual,
    orbit_dimension, ActionKind, GroupAction, QuadratureRule,
};
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// One invoked operation and the quantities it reported.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub operation: String,
    pub pass: bool,
    pub values: Vec<(String, String)>,
}

impl Entry {
    fn new(operation: impl Into<String>, pass: bool) -> Entry {
        Entry {
            operation: operation.into(),
            pass,
            values: Vec::new(),
        }
    }

    fn val(mut self, key: &str, v: impl std::fmt::Display) -> Entry {
        self.values.push((key.into(), v.to_string()));
        self
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config_hash: String,
    pub config_text: String,
    pub entries: Vec<Entry>,
    /// Runtime error that stopped the experiment.
    pub error: Option<String>,
    /// No checks were run; a vacuous run never passes.
    pub vacuous: bool,
    pub wall_time: f64,
    pub output: PathBuf,
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn pass(&self) -> bool {
        self.error.is_none() && !self.vacuous && self.entries.iter().all(|e| e.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            1
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pshlab report");
        let _ = writeln!(s, "kind: {}", self.kind.name());
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "config sha256: {}", self.config_hash);
        let status = if self.pass() { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "status: {status}");
        if self.vacuous {
            let _ = writeln!(s, "vacuous: no checks were run");
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error: {e}");
        }
        let passed = self.entries.iter().filter(|e| e.pass).count();
        let _ = writeln!(s, "operations: {passed}/{} pass", self.entries.len());
        let _ = writeln!(s, "wall time: {:.3} s", self.wall_time);
        let _ = writeln!(s);
        for e in &self.entries {
            let _ = writeln!(
                s,
                "[{}] {}",
                if e.pass { "PASS" } else { "FAIL" },
                e.operation
            );
            for (k, v) in &e.values {
                let _ = writeln!(s, "    {k} = {v}");
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "artifacts:");
        for a in &self.artifacts {
            let _ = writeln!(s, "    {a}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "config:");
        for line in self.config_text.lines() {
            let _ = writeln!(s, "    {line}");
        }
        s
    }

    /// `operation,key,value,pass` rows; every value in `report.txt` appears here.
    fn summary_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["operation", "key", "value", "pass"])
            .map_err(io)?;
        let pass = self.pass().to_string();
        let seed = self.seed.to_string();
        for (k, v) in [
            ("kind", self.kind.name()),
            ("seed", &seed),
            ("config_sha256", &self.config_hash),
        ] {
            w.write_record(["run", k, v, &pass]).map_err(io)?;
        }
        for e in &self.entries {
            if e.values.is_empty() {
                w.write_record([e.operation.as_str(), "", "", &e.pass.to_string()])
                    .map_err(io)?;
            }
            for (k, v) in &e.values {
                w.write_record([e.operation.as_str(), k, v, &e.pass.to_string()])
                    .map_err(io)?;
            }
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

struct Sink {
    dir: PathBuf,
    written: Vec<String>,
}

impl Sink {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)
            .map_err(|e| Error::Io(format!("{}: {e}", self.dir.join(name).display())))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }
}

/// Runs a validated experiment, writing artifacts under `output` (or the
/// configured directory). Runtime errors are captured in the report.
pub fn run(cfg: &ExperimentConfig, output: Option<&Path>, exec: Exec) -> Result<RunReport> {
    let dir = output.map_or_else(|| cfg.output.clone(), Path::to_path_buf);
    execute(cfg, dir, |sink, entries, vacuous| {
        dispatch(cfg, exec, sink, entries, vacuous)
    })
}

/// The verify suite over a given corpus as a run.
pub fn run_verify(corpus: &Corpus, seed: u64, output: &Path, exec: Exec) -> Result<RunReport> {
    let cfg = ExperimentConfig::parse(&format!("kind = \"verify\"\nseed = {seed}\n"))?;
    execute(&cfg, output.to_path_buf(), |sink, entries, vacuous| {
        verify_into(corpus, seed, exec, sink, entries, vacuous)
    })
}

fn execute<F>(cfg: &ExperimentConfig, dir: PathBuf, body: F) -> Result<RunReport>
where
    F: FnOnce(&mut Sink, &mut Vec<Entry>, &mut bool) -> Result<()>,
{
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut sink = Sink {
        dir: dir.clone(),
        written: Vec::new(),
    };
    let start = Instant::now();
    let mut entries = Vec::new();
    let mut vacuous = false;
    let result = body(&mut sink, &mut entries, &mut vacuous);
    let mut report = RunReport {
        kind: cfg.kind,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config_text: cfg.source.clone(),
        entries,
        error: result.err().map(|e| e.to_string()),
        vacuous,
        wall_time: start.elapsed().as_secs_f64(),
        output: dir,
        artifacts: Vec::new(),
    };
    sink.write("summary.csv", &report.summary_csv()?)?;
    sink.written.push("report.txt".into());
    sink.written.sort();
    report.artifacts = sink.written.clone();
    sink.write("report.txt", report.render().as_bytes())?;
    Ok(report)
}

fn field_of(cfg: &ExperimentConfig) -> Result<PotentialField> {
    cfg.field
        .as_ref()
        .ok_or_else(|| Error::Config {
            path: "field".into(),
            msg: "required but missing".into(),
        })?
        .build()
}

fn action_of(cfg: &ExperimentConfig) -> Result<GroupAction> {
    let spec = cfg.action.as_ref().ok_or_else(|| Error::Config {
        path: "action".into(),
        msg: "required but missing".into(),
    })?;
    GroupAction::from_spec(spec)
}

fn fmt_point(p: &[Complex64]) -> String {
    let parts: Vec<String> = p
        .iter()
        .map(|z| format!("({:e}, {:e})", z.re, z.im))
        .collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_packed(p: &[[f64; 2]]) -> String {
    let parts: Vec<String> = p
        .iter()
        .map(|z| format!("({:e}, {:e})", z[0], z[1]))
        .collect();
    format!("[{}]", parts.join(", "))
}

fn dispatch(
    cfg: &ExperimentConfig,
    exec: Exec,
    sink: &mut Sink,
    entries: &mut Vec<Entry>,
    vacuous: &mut bool,
) -> Result<()> {
    match &cfg.experiment {
        Experiment::CheckPsh(p) => {
            let f = field_of(cfg)?;
            let sampler = BallSampler {
                radius: p.radius,
                count: p.count,
                seed: cfg.seed,
            };
            let cert = check_strict_psh(&f, &sampler, p.epsilon)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(["index", "point", "min_eigenvalue"])
                .map_err(io)?;
            for (i, pt) in sampler.points(f.dim()).iter().enumerate() {
                let lam = levi_form(&f, pt).map(|l| format!("{:e}", l.min_eigenvalue()));
                w.write_record([
                    i.to_string(),
                    fmt_point(pt),
                    lam.unwrap_or_else(|e| e.to_string()),
                ])
                .map_err(io)?;
            }
            sink.write(
                "samples.csv",
                &w.into_inner().map_err(|e| Error::Io(e.to_string()))?,
            )?;
            let mut e = Entry::new("check_strict_psh", cert.pass)
                .val("radius", p.radius)
                .val("samples", p.count)
                .val("epsilon", format!("{:e}", p.epsilon))
                .val("min_eigenvalue", format!("{:e}", cert.min_eigenvalue))
                .val("witness", fmt_packed(&cert.witness));
            if let Some(fail) = &cert.failure {
                e = e.val("failure", fail);
            }
            entries.push(e);
        }
        Experiment::Flow { x0, config } => {
            let f = field_of(cfg)?;
            let traj = integrate_flow(&f, x0, config)?;
            let mut buf = Vec::new();
            traj.write_jsonl(&mut buf)?;
            sink.write("trajectory.jsonl", &buf)?;
            flow_plots(&traj, sink)?;
            let last = traj.last();
            entries.push(
                Entry::new("integrate_flow", true)
                    .val("metric", format!("{:?}", config.metric).to_lowercase())
                    .val("termination", traj.termination)
                    .val("steps", traj.accepted().count() - 1)
                    .val("rejected_steps", traj.rejected_steps)
                    .val("t_final", format!("{:e}", last.t))
                    .val("u_final", format!("{:e}", last.u))
                    .val("grad_norm_final", format!("{:e}", last.grad_norm))
                    .val("arc_length", format!("{:e}", traj.arc_length))
                    .val("limit", fmt_packed(&last.point)),
            );
            let r = convergence_report(&traj, &f)?;
            let mut e = Entry::new("convergence_report", r.pass)
                .val("violations", r.violations)
                .val("worst_violation", format!("{:e}", r.worst_violation))
                .val(
                    "tail_ratio",
                    r.tail_ratio
                        .map_or("undefined".into(), |x| format!("{x:e}")),
                );
            match &r.lojasiewicz {
                Some(l) => {
                    e = e
                        .val("lojasiewicz_alpha", format!("{:e}", l.alpha))
                        .val("lojasiewicz_c", format!("{:e}", l.c))
                        .val(
                            "lojasiewicz_window",
                            format!("{}..{}", l.window.0, l.window.1),
                        );
                    lojasiewicz_plot(&traj, l, sink)?;
                }
                None => {
                    e = e.val(
                        "lojasiewicz",
                        r.lojasiewicz_note.clone().unwrap_or_default(),
                    )
                }
            }
            for reason in &r.reasons {
                e = e.val("reason", reason);
            }
            entries.push(e);
        }
        Experiment::Degree(p) => {
            let f = field_of(cfg)?;
            let m = MomentMapField::new(f, cfg.seed)?;
            entries.push(
                Entry::new("verify_hamiltonian", true)
                    .val("residual", format!("{:e}", m.hamiltonian_residual))
                    .val(
                        "invariance_residual",
                        format!("{:e}", m.invariance_residual),
                    ),
            );
            let opts = DegreeOptions {
                targets: p.targets,
                seed_level: p.seed_level,
                area_level: p.area_level,
                exec,
            };
            let mut deg = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(e.to_string());
            deg.write_record([
                "level",
                "target",
                "target_alpha",
                "target_beta",
                "count",
                "preimages",
                "min_abs_jacobian",
            ])
            .map_err(io)?;
            for &b in &p.levels {
                let set = sample_level_set(&m, b, p.level_directions, cfg.seed)?;
                let name = format!("levelset_b{b}");
                let mut buf = Vec::new();
                set.write_csv(&mut buf)?;
                sink.write(&format!("{name}.csv"), &buf)?;
                let pts: Vec<(f64, f64)> = set
                    .points
                    .iter()
                    .map(|lp| (norm(&lp.point()[..1]), norm(&lp.point()[1..])))
                    .collect();
                sink.write(
                    &format!("{name}.svg"),
                    Plot::new(&format!("level set b = {b}"), "|z1|", "|z2|")
                        .scatter("level-set points", pts)
                        .render()
                        .as_bytes(),
                )?;
                entries.push(
                    Entry::new(format!("sample_level_set b={b}"), !set.points.is_empty())
                        .val("points", set.points.len())
                        .val("skipped", set.skipped.len())
                        .val("flagged", set.points.iter().filter(|x| x.flagged).count()),
                );
                let h = homotopy_positivity(&m, b, p.homotopy_points, p.homotopy_s, cfg.seed)?;
                entries.push(
                    Entry::new(format!("homotopy_positivity b={b}"), h.pass)
                        .val("minimum", format!("{:e}", h.minimum))
                        .val("witness", fmt_packed(&h.witness))
                        .val("witness_s", h.witness_s),
                );
                let mut cert = compute_degree(|z| reduced_map(&m, b, z), cfg.seed, &opts)?;
                cert.homotopy_pass = Some(h.pass);
                let pass = cert.pass && h.pass;
                for (i, t) in cert.targets.iter().enumerate() {
                    let minj = t
                        .preimages
                        .iter()
                        .map(|x| x.jacobian.abs())
                        .fold(f64::INFINITY, f64::min);
                    deg.write_record([
                        b.to_string(),
                        i.to_string(),
                        format!("({:e}, {:e})", t.target.alpha[0], t.target.alpha[1]),
                        format!("({:e}, {:e})", t.target.beta[0], t.target.beta[1]),
                        t.count.to_string(),
                        t.preimages.len().to_string(),
                        format!("{minj:e}"),
                    ])
                    .map_err(io)?;
                }
                let mut e = Entry::new(format!("compute_degree b={b}"), pass)
                    .val(
                        "degree_preimage",
                        cert.degree.map_or("inconsistent".into(), |d| d.to_string()),
                    )
                    .val(
                        "degree_area",
                        cert.area_degree
                            .map_or("non-integer".into(), |d| d.to_string()),
                    )
                    .val("area_total", format!("{:e}", cert.area_total))
                    .val("targets", cert.targets.len())
                    .val("resampled", cert.resampled)
                    .val("homotopy_pass", h.pass);
                for n in &cert.notes {
                    e = e.val("note", n);
                }
                entries.push(e);
            }
            sink.write(
                "degree.csv",
                &deg.into_inner().map_err(|e| Error::Io(e.to_string()))?,
            )?;
        }
        Experiment::Fibers { targets, search } => {
            let f = field_of(cfg)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(e.to_string());
            w.write_record([
                "target", "cluster", "center", "members", "residual", "value", "spread", "isolated",
            ])
            .map_err(io)?;
            let mut scatter = Vec::new();
            for (i, c) in targets.iter().enumerate() {
                let r = gradient_fiber(&f, c, search, exec)?;
                for (k, cl) in r.clusters.iter().enumerate() {
                    scatter.push((cl.center[0][0], cl.center[1][0]));
                    w.write_record([
                        i.to_string(),
                        k.to_string(),
                        fmt_packed(&cl.center),
                        cl.members.to_string(),
                        format!("{:e}", cl.residual),
                        format!("{:e}", cl.value),
                        format!("{:e}", cl.spread),
                        cl.isolated.to_string(),
                    ])
                    .map_err(io)?;
                }
                let mut e = Entry::new(format!("gradient_fiber target {i}"), r.pass)
                    .val("target", fmt_point(c))
                    .val("starts", r.starts)
                    .val("clusters", r.cluster_count())
                    .val("non_converged", r.non_converged)
                    .val("loose", r.loose)
                    .val(
                        "max_spread",
                        format!(
                            "{:e}",
                            r.clusters.iter().map(|x| x.spread).fold(0.0, f64::max)
                        ),
                    );
                if let Some(n) = &r.phase_note {
                    e = e.val("note", n);
                }
                entries.push(e);
            }
            sink.write(
                "fibers.csv",
                &w.into_inner().map_err(|e| Error::Io(e.to_string()))?,
            )?;
            sink.write(
                "fibers.svg",
                Plot::new("fiber clusters", "Re z1", "Re z2")
                    .scatter("cluster centers", scatter)
                    .render()
                    .as_bytes(),
            )?;
        }
        Experiment::Average(p) => {
            let f = field_of(cfg)?;
            let a = action_of(cfg)?;
            let q = match (&p.nodes, a.kind()) {
                (None, _) => QuadratureRule::default_for(&a),
                (Some(n), ActionKind::Circle { .. }) if n.len() == 1 => {
                    QuadratureRule::circle(&a, n[0])?
                }
                (Some(n), ActionKind::Torus { .. }) if n.len() == 1 => {
                    QuadratureRule::torus(&a, n[0])?
                }
                (Some(n), ActionKind::Su2) if n.len() == 3 => {
                    QuadratureRule::su2_euler(&a, (n[0], n[1], n[2]))?
                }
                (Some(_), _) => {
                    return Err(Error::Config {
                        path: "average.nodes".into(),
                        msg: "one count for circle/torus, three for su2, none for finite".into(),
                    })
                }
            };
            let avg = haar_average(&f, &a, &q)?;
            let twice = haar_average(&avg.field, &a, &q)?;
            let s = SeedStream::new(cfg.seed).named("idempotence");
            let mut idem = 0.0_f64;
            for i in 0..p.samples {
                let x = ball_point(
                    &mut s.index(i as u64).rng(),
                    f.dim(),
                    f.domain().sampling_radius(),
                );
                idem = idem.max((avg.field.value(&x)? - twice.field.value(&x)?).abs());
            }
            let inv = invariance_residual(&avg.field, &a, &q, p.samples, cfg.seed)?;
            let mut e = Entry::new("haar_average", inv.residual < 1e-10 && idem < 1e-10)
                .val("action", a.name())
                .val("nodes", q.len())
                .val(
                    "exactness",
                    q.exactness.map_or("unknown".into(), |d| d.to_string()),
                )
                .val("invariance_residual", format!("{:e}", inv.residual))
                .val("idempotence_residual", format!("{idem:e}"));
            if let Some(expr) = avg.field.expr() {
                e = e.val("averaged", expr);
            }
            for w in &avg.warnings {
                e = e.val("warning", w);
            }
            entries.push(e);
        }
        Experiment::OrbitDim(p) => {
            let a = action_of(cfg)?;
            let points: Vec<Vec<Complex64>> = if p.points.is_empty() {
                let s = SeedStream::new(cfg.seed).named("orbit-points");
                (0..p.samples)
                    .map(|i| ball_point(&mut s.index(i as u64).rng(), a.dim(), p.radius))
                    .collect()
            } else {
                p.points
                    .iter()
                    .map(|v| v.iter().map(|z| Complex64::new(z[0], z[1])).collect())
                    .collect()
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(["index", "point", "rank", "fixed", "fixed_distance"])
                .map_err(io)?;
            let mut ranks = Vec::new();
            for (i, pt) in points.iter().enumerate() {
                let o = orbit_dimension(&a, pt)?;
                let d = fixed_set_distance(&a, pt)?;
                ranks.push(o.rank);
                w.write_record([
                    i.to_string(),
                    fmt_point(pt),
                    o.rank.to_string(),
                    o.fixed.to_string(),
                    format!("{d:e}"),
                ])
                .map_err(io)?;
            }
            sink.write(
                "orbits.csv",
                &w.into_inner().map_err(|e| Error::Io(e.to_string()))?,
            )?;
            entries.push(
                Entry::new("orbit_dimension", true)
                    .val("action", a.name())
                    .val("points", points.len())
                    .val("min_rank", ranks.iter().min().copied().unwrap_or(0))
                    .val("max_rank", ranks.iter().max().copied().unwrap_or(0)),
            );
        }
        Experiment::Confine(search) => {
            let f = field_of(cfg)?;
            let a = action_of(cfg)?;
            let r = critical_confinement_experiment(&f, &a, search, exec)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(e.to_string());
            w.write_record([
                "cluster",
                "center",
                "members",
                "residual",
                "value",
                "orbit_dimension",
                "fixed_distance",
                "fixed",
            ])
            .map_err(io)?;
            for (k, c) in r.clusters.iter().enumerate() {
                w.write_record([
                    k.to_string(),
                    fmt_point(&c.center),
                    c.members.to_string(),
                    format!("{:e}", c.residual),
                    format!("{:e}", c.value),
                    c.orbit_dimension.to_string(),
                    format!("{:e}", c.fixed_distance),
                    c.fixed.to_string(),
                ])
                .map_err(io)?;
            }
            sink.write(
                "clusters.csv",
                &w.into_inner().map_err(|e| Error::Io(e.to_string()))?,
            )?;
            entries.push(
                Entry::new("critical_confinement_experiment", r.pass == Some(true))
                    .val("action", &r.action)
                    .val(
                        "invariance_residual",
                        format!("{:e}", r.invariance_residual),
                    )
                    .val("hypothesis_met", r.hypothesis_met)
                    .val(
                        "min_orbit_dimension",
                        r.min_orbit_dimension
                            .map_or("none".into(), |d| d.to_string()),
                    )
                    .val("clusters", r.clusters.len())
                    .val("non_converged", r.non_converged.len())
                    .val("verdict", r.label),
            );
        }
        Experiment::Verify => {
            let corpus = Corpus::builtin()?;
            verify_into(&corpus, cfg.seed, exec, sink, entries, vacuous)?;
        }
    }
    Ok(())
}

fn verify_into(
    corpus: &Corpus,
    seed: u64,
    exec: Exec,
    sink: &mut Sink,
    entries: &mut Vec<Entry>,
    vacuous: &mut bool,
) -> Result<()> {
    let suite = verify_suite(corpus, seed, &SuiteSizes::default(), exec);
    let mut buf = Vec::new();
    suite.write_csv(&mut buf)?;
    sink.write("checks.csv", &buf)?;
    if let Some(t) = &suite.trajectory {
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf)?;
        sink.write("trajectory.jsonl", &buf)?;
        flow_plots(t, sink)?;
    }
    *vacuous = suite.vacuous;
    for c in &suite.checks {
        let mut e = Entry::new(format!("{} [{}]", c.invariant, c.subject), c.pass)
            .val("measured", format!("{:e}", c.measured))
            .val("bound", format!("{:e}", c.bound))
            .val("margin", format!("{:e}", c.margin));
        if !c.detail.is_empty() {
            e = e.val("detail", &c.detail);
        }
        entries.push(e);
    }
    Ok(())
}

fn flow_plots(traj: &FlowTrajectory, sink: &mut Sink) -> Result<()> {
    let s = traj.accepted_samples();
    let u_inf = s.last().map_or(0.0, |x| x.u);
    let u: Vec<(f64, f64)> = s.iter().map(|x| (x.t, x.u - u_inf)).collect();
    let g: Vec<(f64, f64)> = s.iter().map(|x| (x.t, x.grad_norm)).collect();
    sink.write(
        "flow_u.svg",
        Plot::new("u(t) − u(t_final)", "t", "u − u_final")
            .log_y()
            .line("u", u)
            .render()
            .as_bytes(),
    )?;
    sink.write(
        "flow_grad.svg",
        Plot::new("gradient norm along the flow", "t", "|grad u|")
            .log_y()
            .line("|grad u|", g)
            .render()
            .as_bytes(),
    )
}

fn lojasiewicz_plot(
    traj: &FlowTrajectory,
    fit: &crate::flow::LojasiewiczEstimate,
    sink: &mut Sink,
) -> Result<()> {
    let s = traj.accepted_samples();
    let tail: Vec<(f64, f64)> = s[fit.window.0..fit.window.1]
        .iter()
        .map(|x| (x.u - fit.u_inf, x.grad_norm))
        .filter(|(d, _)| *d > 0.0)
        .collect();
    let line: Vec<(f64, f64)> = tail
        .iter()
        .map(|(d, _)| (*d, d.powf(fit.alpha) / fit.c))
        .collect();
    sink.write(
        "lojasiewicz.svg",
        Plot::new(
            &format!("Lojasiewicz fit, alpha = {:.4}", fit.alpha),
            "u − u_inf",
            "|grad u|",
        )
        .log_x()
        .log_y()
        .scatter("tail samples", tail)
        .line("fit", line)
        .render()
        .as_bytes(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::parse(
            "kind = \"flow\"\nseed = 7\n[field]\nexpr = \"z1*cj(z1)\"\ndim = 1\n[flow]\nx0 = [[3.0, 0.0]]\n",
        )
        .unwrap();
        let r = run(&cfg, Some(dir.path()), Exec::default()).unwrap();
        assert!(r.pass(), "{}", r.render());
        for a in [
            "report.txt",
            "summary.csv",
            "trajectory.jsonl",
            "flow_u.svg",
            "flow_grad.svg",
            "lojasiewicz.svg",
        ] {
            assert!(r.artifacts.iter().any(|x| x == a), "{a}");
            assert!(dir.path().join(a).exists(), "{a}");
        }
        let arc = r.entries[0]
            .values
            .iter()
            .find(|(k, _)| k == "arc_length")
            .unwrap();
        assert!((arc.1.parse::<f64>().unwrap() - 3.0).abs() < 1e-4);
    }

    #[test]
    fn runtime_errors_land_in_the_report() {
        let dir = tempfile::tempdir().unwrap();
        // |z1|² is not circle-invariant after the shift, so the moment field is refused
        let cfg = ExperimentConfig::parse(
            "kind = \"degree\"\nseed = 1\n[field]\nexpr = \"z1*cj(z1) + z2*cj(z2) + 0.5*(z1 + cj(z1))\"\ndim = 2\n",
        )
        .unwrap();
        let r = run(&cfg, Some(dir.path()), Exec::default()).unwrap();
        assert!(!r.pass() && r.exit_code() != 0);
        assert!(r.error.as_deref().unwrap().contains("circle-invariant"));
        assert!(std::fs::read_to_string(dir.path().join("report.txt"))
            .unwrap()
            .contains("status: FAIL"));
    }
}
