use super::integrate::{velocity, FlowTrajectory, Termination};
use crate::error::{Error, Result};
use crate::expr::PotentialField;
use serde::Serialize;

/// Minimum number of usable tail samples for the exponent fit.
pub const TAIL_MIN: usize = 20;
/// Arc-length increments examined by the ratio test.
pub const RATIO_WINDOW: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LojasiewiczEstimate {
    /// Fitted exponent in `(u − u_∞)^α ≤ C ‖∇u‖`.
    pub alpha: f64,
    pub c: f64,
    pub u_inf: f64,
    /// Half-open range of accepted-sample indices used by the fit.
    pub window: (usize, usize),
    pub samples: usize,
    /// RMS residual of the log-log regression.
    pub residual: f64,
}

/// Least-squares fit of `log‖∇u‖ = α log(u − u_∞) − log C` over the second
/// half of the samples that clear the floor `10·ε·|u_∞|`, with `u_∞` the
/// final sampled value.
pub fn estimate_lojasiewicz(traj: &FlowTrajectory) -> Result<LojasiewiczEstimate> {
    if traj.termination != Termination::GradientStop {
        return Err(Error::Precondition(format!(
            "exponent fit needs a gradient-stop trajectory, got {}",
            traj.termination
        )));
    }
    let s = traj.accepted_samples();
    let u_inf = s.last().map(|x| x.u).unwrap_or(0.0);
    let floor = 10.0 * f64::EPSILON * u_inf.abs();
    let usable: Vec<usize> = (0..s.len())
        .filter(|&k| s[k].u - u_inf > floor && s[k].grad_norm > 0.0)
        .collect();
    let tail = &usable[usable.len() / 2..];
    if tail.len() < TAIL_MIN {
        return Err(Error::InsufficientTail {
            have: tail.len(),
            need: TAIL_MIN,
        });
    }
    let xs: Vec<f64> = tail.iter().map(|&k| (s[k].u - u_inf).ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|&k| s[k].grad_norm.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Precondition("degenerate tail: u is constant".into()));
    }
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - alpha * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!(
            "fitted exponent {alpha} is outside (0, 1)"
        )));
    }
    Ok(LojasiewiczEstimate {
        alpha,
        c: (-intercept).exp(),
        u_inf,
        window: (tail[0], tail[tail.len() - 1] + 1),
        samples: tail.len(),
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub limit: Vec<[f64; 2]>,
    /// `‖∇u‖` at the limit, re-evaluated from the field.
    pub final_grad_norm: f64,
    pub arc_length: f64,
    pub termination: Termination,
    pub violations: usize,
    pub worst_violation: f64,
    /// Geometric mean of successive arc-length increment ratios over the tail.
    pub tail_ratio: Option<f64>,
    pub lojasiewicz: Option<LojasiewiczEstimate>,
    /// Why the exponent fit was skipped, when it was.
    pub lojasiewicz_note: Option<String>,
    pub pass: bool,
    pub reasons: Vec<String>,
}

/// Pass when the flow stopped on the gradient threshold, every increase of
/// `u` stayed within its step tolerance, and the tail arc-length increments
/// shrink geometrically.
pub fn convergence_report(traj: &FlowTrajectory, f: &PotentialField) -> Result<ConvergenceReport> {
    let last = traj.last();
    let final_grad_norm = velocity(f, &last.point(), traj.config.metric)?.grad_norm;
    let mut reasons = Vec::new();
    if traj.termination != Termination::GradientStop {
        reasons.push(format!("terminated by {}", traj.termination));
    }
    let violations = traj.monotonicity_violations();
    let worst = violations.iter().map(|v| v.1).fold(0.0, f64::max);
    let over: Vec<_> = violations
        .iter()
        .filter(|(k, dv)| *dv > traj.step_tolerances[*k])
        .collect();
    if !over.is_empty() {
        reasons.push(format!(
            "{} monotonicity violations above step tolerance (worst {worst:.3e})",
            over.len()
        ));
    }

    let s = traj.accepted_samples();
    let inc: Vec<f64> = s
        .windows(2)
        .map(|w| w[1].arc_length - w[0].arc_length)
        .collect();
    let window = &inc[inc.len().saturating_sub(RATIO_WINDOW)..];
    let tail_ratio = match window {
        [first, .., last] if *first > 0.0 => {
            Some((last / first).powf(1.0 / (window.len() - 1) as f64))
        }
        _ => None,
    };
    if let Some(r) = tail_ratio {
        if !(r < 1.0) {
            reasons.push(format!("tail increments not decaying (ratio {r:.4})"));
        }
    } else if window.len() >= 2 {
        reasons.push("ratio test undefined: zero increment at window start".into());
    }
    if !final_grad_norm.is_finite() || final_grad_norm >= traj.config.stop_threshold {
        if traj.termination == Termination::GradientStop {
            reasons.push(format!(
                "re-evaluated gradient norm {final_grad_norm:.3e} above threshold"
            ));
        }
    }

    let (lojasiewicz, lojasiewicz_note) = match estimate_lojasiewicz(traj) {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ConvergenceReport {
        limit: last.point.clone(),
        final_grad_norm,
        arc_length: traj.arc_length,
        termination: traj.termination,
        violations: violations.len(),
        worst_violation: worst,
        tail_ratio,
        lojasiewicz,
        lojasiewicz_note,
        pass: reasons.is_empty(),
        reasons,
    })
}
