use crate::error::{Error, Result};
use crate::expr::PotentialField;
use crate::geometry::linalg::{cholesky, cholesky_solve, hermitian_eigenvalues};
use crate::geometry::{check_strict_psh, BallSampler};
use crate::point::{from_real, norm, to_real};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Smallest Levi eigenvalue accepted by the Kähler metric solve.
pub const KAHLER_MIN_EIGENVALUE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Kahler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub metric: Metric,
    pub initial_step: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Stop once the gradient norm in the active metric drops below this.
    pub stop_threshold: f64,
    pub max_time: f64,
    pub max_steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            metric: Metric::Euclidean,
            initial_step: 1e-2,
            rtol: 1e-8,
            atol: 1e-10,
            stop_threshold: 1e-8,
            max_time: 1e7,
            max_steps: 200_000,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("initial_step", self.initial_step),
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("stop_threshold", self.stop_threshold),
            ("max_time", self.max_time),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config {
                    path: format!("flow.{name}"),
                    msg: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Config {
                path: "flow.max_steps".into(),
                msg: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Velocity of the flow at a point together with the quantities the
/// integrator needs for its energy bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity {
    /// `ẋ`, realified.
    pub velocity: Vec<f64>,
    /// Euclidean gradient `2∂̄u`, realified.
    pub gradient: Vec<f64>,
    /// `du/dt = ⟨ẋ, ∇u⟩`.
    pub power: f64,
    /// `‖∇u‖` in the active metric, `sqrt(-power)`.
    pub grad_norm: f64,
}

/// `−2∂̄u` (Euclidean) or `−(H^T)^{-1} 2∂̄u` (Kähler), where `H = (∂_j∂̄_k u)`
/// and the metric is `Re Σ H_jk v_j w̄_k`.
pub fn velocity(f: &PotentialField, p: &[Complex64], metric: Metric) -> Result<Velocity> {
    let g: Vec<Complex64> = f.dbar(p)?.iter().map(|z| z * 2.0).collect();
    let v: Vec<Complex64> = match metric {
        Metric::Euclidean => g.iter().map(|z| -z).collect(),
        Metric::Kahler => {
            let h = f.levi_matrix(p)?;
            let ht = (&h + h.adjoint()).transpose() * Complex64::new(0.5, 0.0);
            let lmin = hermitian_eigenvalues(&ht)[0];
            let singular = || Error::SingularMetric {
                eigenvalue: lmin,
                point: p.to_vec(),
            };
            if lmin <= KAHLER_MIN_EIGENVALUE {
                return Err(singular());
            }
            let l = cholesky(&ht).ok_or_else(singular)?;
            cholesky_solve(&l, &g).iter().map(|z| -z).collect()
        }
    };
    let velocity = to_real(&v);
    let gradient = to_real(&g);
    let power: f64 = velocity.iter().zip(&gradient).map(|(a, b)| a * b).sum();
    Ok(Velocity {
        grad_norm: (-power).max(0.0).sqrt(),
        velocity,
        gradient,
        power,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSample {
    pub t: f64,
    pub point: Vec<[f64; 2]>,
    pub u: f64,
    pub grad_norm: f64,
    pub arc_length: f64,
    pub accepted: bool,
}

impl FlowSample {
    pub fn point(&self) -> Vec<Complex64> {
        self.point
            .iter()
            .map(|z| Complex64::new(z[0], z[1]))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GradientStop,
    MaxTime,
    MaxSteps,
    StepFailure,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::GradientStop => "gradient-stop",
            Termination::MaxTime => "max-time",
            Termination::MaxSteps => "max-steps",
            Termination::StepFailure => "step-failure",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowTrajectory {
    pub config: FlowConfig,
    /// Accepted samples, interleaved with rejected attempts (`accepted = false`).
    pub samples: Vec<FlowSample>,
    pub arc_length: f64,
    pub termination: Termination,
    pub rejected_steps: usize,
    /// Per accepted step: `|Δu − ∫ du/dt|` by the trapezoid rule.
    pub energy_residuals: Vec<f64>,
    /// Per accepted step: the tolerance the step was held to.
    pub step_tolerances: Vec<f64>,
}

impl FlowTrajectory {
    pub fn accepted(&self) -> impl Iterator<Item = &FlowSample> {
        self.samples.iter().filter(|s| s.accepted)
    }

    pub fn accepted_samples(&self) -> Vec<&FlowSample> {
        self.accepted().collect()
    }

    pub fn last(&self) -> &FlowSample {
        self.accepted()
            .last()
            .expect("trajectory has its initial sample")
    }

    /// Accepted steps where `u` went up, as `(step index, increase)`.
    pub fn monotonicity_violations(&self) -> Vec<(usize, f64)> {
        let s = self.accepted_samples();
        s.windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].u > w[0].u)
            .map(|(k, w)| (k, w[1].u - w[0].u))
            .collect()
    }

    /// One JSON object per accepted sample, then a summary object.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for s in self.accepted() {
            let line = serde_json::json!({
                "t": s.t,
                "point": s.point,
                "u": s.u,
                "gradNorm": s.grad_norm,
                "arcLength": s.arc_length,
            });
            writeln!(out, "{line}")?;
        }
        let last = self.last();
        let summary = serde_json::json!({
            "summary": {
                "termination": self.termination.to_string(),
                "steps": self.accepted().count().saturating_sub(1),
                "rejected": self.rejected_steps,
                "arcLength": self.arc_length,
                "finalU": last.u,
                "finalGradNorm": last.grad_norm,
                "finalPoint": last.point,
            }
        });
        writeln!(out, "{summary}")?;
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B_HAT: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct State {
    x: Vec<f64>,
    u: f64,
    vel: Velocity,
}

fn evaluate(f: &PotentialField, x: &[f64], metric: Metric) -> Result<State> {
    let p = from_real(x);
    if !f.domain().contains(&p) {
        return Err(Error::domain("flow left the domain", &p));
    }
    Ok(State {
        u: f.value(&p)?,
        vel: velocity(f, &p, metric)?,
        x: x.to_vec(),
    })
}

fn vnorm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Adaptive Dormand–Prince integration of the gradient flow from `x0`.
///
/// A step is accepted when the embedded error estimate is within
/// `atol + rtol·|x|` componentwise (RMS) and the trapezoid energy residual
/// `|Δu − ½h(u̇_k + u̇_{k+1})|` is within ten times `atol + rtol·|u|`; on
/// rejection the step shrinks. A step is also rejected when the proposed
/// point leaves the domain.
pub fn integrate_flow(
    f: &PotentialField,
    x0: &[Complex64],
    cfg: &FlowConfig,
) -> Result<FlowTrajectory> {
    cfg.validate()?;
    if x0.len() != f.dim() {
        return Err(Error::Dimension {
            expected: f.dim(),
            got: x0.len(),
        });
    }
    if !f.domain().contains(x0) {
        return Err(Error::domain("initial point outside the domain", x0));
    }
    if cfg.metric == Metric::Kahler {
        let sampler = BallSampler {
            radius: f.domain().sampling_radius().max(norm(x0)),
            count: BallSampler::MIN_COUNT,
            seed: 0,
        };
        let cert = check_strict_psh(f, &sampler, KAHLER_MIN_EIGENVALUE)?;
        if !cert.pass {
            return Err(Error::SingularMetric {
                eigenvalue: cert.min_eigenvalue,
                point: cert
                    .witness
                    .iter()
                    .map(|z| Complex64::new(z[0], z[1]))
                    .collect(),
            });
        }
    }

    let n = 2 * f.dim();
    let mut state = evaluate(f, &to_real(x0), cfg.metric)?;
    let mut t = 0.0;
    let mut arc = 0.0;
    let sample = |t: f64, s: &State, arc: f64, accepted: bool| FlowSample {
        t,
        point: from_real(&s.x).iter().map(|z| [z.re, z.im]).collect(),
        u: s.u,
        grad_norm: s.vel.grad_norm,
        arc_length: arc,
        accepted,
    };
    let mut traj = FlowTrajectory {
        config: cfg.clone(),
        samples: vec![sample(0.0, &state, 0.0, true)],
        arc_length: 0.0,
        termination: Termination::MaxSteps,
        rejected_steps: 0,
        energy_residuals: Vec::new(),
        step_tolerances: Vec::new(),
    };
    let mut h = cfg.initial_step.min(cfg.max_time);
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;

    let termination = loop {
        if state.vel.grad_norm < cfg.stop_threshold {
            break Termination::GradientStop;
        }
        if t >= cfg.max_time {
            break Termination::MaxTime;
        }
        if steps >= cfg.max_steps {
            break Termination::MaxSteps;
        }
        if h < 1e-14 * t.max(1.0) {
            break Termination::StepFailure;
        }
        let h_try = h.min(cfg.max_time - t);

        // stages
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(state.vel.velocity.clone());
        let mut last: Option<State> = None;
        let mut failed = false;
        for s in 1..7 {
            let xs: Vec<f64> = (0..n)
                .map(|i| state.x[i] + h_try * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>())
                .collect();
            match evaluate(f, &xs, cfg.metric) {
                Ok(st) => {
                    k.push(st.vel.velocity.clone());
                    if s == 6 {
                        last = Some(st);
                    }
                }
                Err(Error::Domain { .. }) => {
                    failed = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let new = match (failed, last) {
            (false, Some(st)) => st,
            _ => {
                traj.rejected_steps += 1;
                h = h_try * 0.25;
                continue;
            }
        };
        // the seventh stage sits at x + h Σ b_j k_j, the fifth-order solution
        let err = {
            let mut acc = 0.0;
            for i in 0..n {
                let e: f64 = h_try * (0..7).map(|j| (B[j] - B_HAT[j]) * k[j][i]).sum::<f64>();
                let sc = cfg.atol + cfg.rtol * state.x[i].abs().max(new.x[i].abs());
                acc += (e / sc).powi(2);
            }
            (acc / n as f64).sqrt()
        };
        let energy = (new.u - state.u - 0.5 * h_try * (state.vel.power + new.vel.power)).abs();
        let energy_tol = 10.0 * (cfg.atol + cfg.rtol * state.u.abs().max(new.u.abs()));
        let energy_ratio = energy / energy_tol;

        if err <= 1.0 && energy_ratio <= 1.0 {
            steps += 1;
            arc += 0.5 * h_try * (vnorm(&state.vel.velocity) + vnorm(&new.vel.velocity));
            t += h_try;
            traj.energy_residuals.push(energy);
            traj.step_tolerances.push(energy_tol / 10.0);
            traj.samples.push(sample(t, &new, arc, true));
            state = new;
            // PI controller on the local error, capped by the energy residual
            let e = err.max(1e-10);
            let mut factor = 0.9 * e.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            if energy_ratio > 0.0 {
                factor = factor.min(0.9 * energy_ratio.powf(-1.0 / 3.0));
            }
            h = h_try * factor.clamp(0.2, 5.0);
            err_prev = e;
        } else {
            traj.rejected_steps += 1;
            traj.samples.push(sample(t + h_try, &new, arc, false));
            let by_err = 0.9 * err.max(1e-10).powf(-1.0 / 5.0);
            let by_energy = 0.9 * energy_ratio.max(1e-10).powf(-1.0 / 3.0);
            h = h_try * by_err.min(by_energy).clamp(0.1, 0.9);
        }
    };
    traj.arc_length = arc;
    traj.termination = termination;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn velocity_examples() {
        let f = PotentialField::parse("z1*cj(z1)", 1).unwrap();
        let e = velocity(&f, &[c(3.0, 0.0)], Metric::Euclidean).unwrap();
        assert_eq!(e.velocity, vec![-6.0, 0.0]);
        let k = velocity(&f, &[c(3.0, 0.0)], Metric::Kahler).unwrap();
        assert!((k.velocity[0] + 6.0).abs() < 1e-14 && k.velocity[1].abs() < 1e-14);
        let harmonic = PotentialField::parse("0.5*(z1^2 + cj(z1)^2)", 1).unwrap();
        assert!(matches!(
            velocity(&harmonic, &[c(0.3, 0.1)], Metric::Kahler),
            Err(Error::SingularMetric { .. })
        ));
    }

    #[test]
    fn kahler_velocity_is_the_metric_gradient() {
        // Oracle: Re(v^T H conj(w)) = du(v) for every v, checked on the real basis.
        let f = PotentialField::parse(
            "z1*cj(z1) + z2*cj(z2) + 0.5*z1*cj(z1)*z2*cj(z2) + 0.3*(z1*cj(z2) + z2*cj(z1))",
            2,
        )
        .unwrap();
        let p = [c(0.4, -0.2), c(0.7, 0.5)];
        let vel = velocity(&f, &p, Metric::Kahler).unwrap();
        let w: Vec<Complex64> = from_real(&vel.velocity).iter().map(|z| -z).collect();
        let h = f.levi_matrix(&p).unwrap();
        let g = f.dbar(&p).unwrap();
        for basis in 0..4 {
            let mut e = vec![0.0; 4];
            e[basis] = 1.0;
            let v = from_real(&e);
            let mut lhs = Complex64::new(0.0, 0.0);
            for j in 0..2 {
                for k in 0..2 {
                    lhs += v[j] * h[(j, k)] * w[k].conj();
                }
            }
            let du: f64 = (0..2).map(|j| 2.0 * (v[j] * g[j].conj()).re).sum();
            assert!((lhs.re - du).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_well_matches_closed_form() {
        let f = PotentialField::parse("z1*cj(z1)", 1).unwrap();
        let cfg = FlowConfig {
            max_time: 1.0,
            ..Default::default()
        };
        let traj = integrate_flow(&f, &[c(3.0, 0.0)], &cfg).unwrap();
        assert_eq!(traj.termination, Termination::MaxTime);
        let end = traj.last();
        assert!((end.t - 1.0).abs() < 1e-15);
        assert!((end.point[0][0] - 3.0 * (-2.0f64).exp()).abs() < 1e-6);

        let full = integrate_flow(&f, &[c(3.0, 0.0)], &FlowConfig::default()).unwrap();
        assert_eq!(full.termination, Termination::GradientStop);
        assert!((full.arc_length - 3.0).abs() < 1e-4, "{}", full.arc_length);
        assert!(full.monotonicity_violations().is_empty());
    }

    #[test]
    fn critical_start_stops_immediately() {
        let f = PotentialField::parse("z1*cj(z1)", 1).unwrap();
        let traj = integrate_flow(&f, &[c(0.0, 0.0)], &FlowConfig::default()).unwrap();
        assert_eq!(traj.termination, Termination::GradientStop);
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.arc_length, 0.0);
    }

    #[test]
    fn jsonl_has_one_line_per_accepted_sample_plus_summary() {
        let f = PotentialField::parse("z1*cj(z1)", 1).unwrap();
        let cfg = FlowConfig {
            max_time: 0.5,
            ..Default::default()
        };
        let traj = integrate_flow(&f, &[c(1.0, 0.0)], &cfg).unwrap();
        let mut buf = Vec::new();
        traj.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), traj.accepted().count() + 1);
        let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(first["t"], 0.0);
        assert!(lines.last().unwrap().contains("\"summary\""));
    }

    #[test]
    fn invalid_config_names_the_field() {
        let f = PotentialField::parse("z1*cj(z1)", 1).unwrap();
        let cfg = FlowConfig {
            rtol: 0.0,
            ..Default::default()
        };
        match integrate_flow(&f, &[c(1.0, 0.0)], &cfg) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "flow.rtol"),
            other => panic!("{other:?}"),
        }
    }
}
