//! Damped Newton search for points where the gradient hits a target, with
//! seeded multistart and clustering of the converged points.

use crate::error::{Error, Result};
use crate::expr::PotentialField;
use crate::geometry::{complex_gradient, real_hessian};
use crate::par::{map_range_with, Exec};
use crate::point::{distance, from_real, to_real};
use crate::rng::{ball_point, SeedStream};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultistartConfig {
    pub starts: usize,
    /// Starts are drawn uniformly from the ball of this radius.
    pub radius: f64,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence when `‖∇f(x) − c‖ ≤ tol · max(1, ‖c‖)`.
    pub tol: f64,
    pub cluster_radius: f64,
}

impl Default for MultistartConfig {
    fn default() -> Self {
        MultistartConfig {
            starts: 64,
            radius: 2.0,
            seed: 0,
            max_iter: 100,
            tol: 1e-10,
            cluster_radius: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub start: Vec<Complex64>,
    pub point: Vec<Complex64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the iteration stopped early (evaluation error, divergence).
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Mean of the member points.
    pub center: Vec<Complex64>,
    pub members: usize,
    /// Worst residual over members.
    pub residual: f64,
}

fn residual_vec(f: &PotentialField, x: &[Complex64], target: &[f64]) -> Result<Vec<f64>> {
    let g = complex_gradient(f, x)?.real_gradient();
    Ok(g.iter().zip(target).map(|(a, b)| a - b).collect())
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Solve `∇f(x) = c` from `x0` by Newton steps with the real Hessian
/// (SVD pseudo-inverse) and backtracking on `‖∇f − c‖`. When the Newton
/// direction does not decrease the residual, a steepest-descent step on
/// `‖∇f − c‖²` is tried instead.
pub fn newton_solve(
    f: &PotentialField,
    target: &[Complex64],
    x0: &[Complex64],
    max_iter: usize,
    tol: f64,
) -> NewtonOutcome {
    let c = to_real(target);
    let scale = tol * norm2(&c).max(1.0);
    let mut x = to_real(x0);
    let mut out = NewtonOutcome {
        start: x0.to_vec(),
        point: x0.to_vec(),
        residual: f64::INFINITY,
        iterations: 0,
        converged: false,
        note: None,
    };
    let blow_up = 1e6 * (1.0 + norm2(&x));
    let mut r = match residual_vec(f, &from_real(&x), &c) {
        Ok(r) => r,
        Err(e) => {
            out.note = Some(e.to_string());
            return out;
        }
    };
    let mut rn = norm2(&r);
    for it in 0..max_iter {
        out.iterations = it;
        if rn <= scale {
            break;
        }
        let h = match real_hessian(f, &from_real(&x)) {
            Ok(h) => h.matrix,
            Err(e) => {
                out.note = Some(e.to_string());
                break;
            }
        };
        let newton = pseudo_solve(&h, &r);
        let descent: Vec<f64> = (h.transpose() * DVector::from_column_slice(&r))
            .iter()
            .map(|v| *v)
            .collect();
        let mut accepted = false;
        for dir in [newton, descent] {
            let mut alpha = 1.0;
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a - alpha * d).collect();
                if let Ok(rt) = residual_vec(f, &from_real(&trial), &c) {
                    let tn = norm2(&rt);
                    if tn < rn * (1.0 - 1e-4 * alpha) || tn <= scale {
                        x = trial;
                        r = rt;
                        rn = tn;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            out.note = Some("line search stalled".into());
            break;
        }
        if norm2(&x) > blow_up {
            out.note = Some("iterate diverged".into());
            break;
        }
        out.iterations = it + 1;
    }
    out.point = from_real(&x);
    out.residual = rn;
    out.converged = rn <= scale;
    out
}

fn pseudo_solve(h: &DMatrix<f64>, r: &[f64]) -> Vec<f64> {
    let svd = h.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = 1e-12 * smax.max(f64::MIN_POSITIVE);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let b = DVector::from_column_slice(r);
    let ub = u.transpose() * b;
    let y = DVector::from_iterator(
        ub.len(),
        ub.iter()
            .zip(svd.singular_values.iter())
            .map(|(v, s)| if *s > cut { v / s } else { 0.0 }),
    );
    (vt.transpose() * y).iter().copied().collect()
}

/// Newton from `cfg.starts` seeded starts in the ball; one independent seed
/// stream per start, so the outcome list does not depend on `exec`.
pub fn multistart(
    f: &PotentialField,
    target: &[Complex64],
    cfg: &MultistartConfig,
    exec: Exec,
) -> Result<Vec<NewtonOutcome>> {
    if target.len() != f.dim() {
        return Err(Error::Dimension {
            expected: f.dim(),
            got: target.len(),
        });
    }
    if cfg.starts == 0 || !(cfg.radius > 0.0) || !(cfg.tol > 0.0) {
        return Err(Error::Precondition(
            "multistart needs starts ≥ 1, radius > 0 and tol > 0".into(),
        ));
    }
    let stream = SeedStream::new(cfg.seed).named("multistart");
    Ok(map_range_with(exec, cfg.starts, |i| {
        let x0 = ball_point(&mut stream.index(i as u64).rng(), f.dim(), cfg.radius);
        newton_solve(f, target, &x0, cfg.max_iter, cfg.tol)
    }))
}

/// Greedy clustering after a lexicographic sort of the realified points, so
/// the result does not depend on input order.
pub fn cluster(points: &[(Vec<Complex64>, f64)], radius: f64) -> Vec<Cluster> {
    let mut sorted: Vec<&(Vec<Complex64>, f64)> = points.iter().collect();
    sorted.sort_by(|a, b| lex(&to_real(&a.0), &to_real(&b.0)));
    let mut groups: Vec<(Vec<Complex64>, Vec<&(Vec<Complex64>, f64)>)> = Vec::new();
    for p in sorted {
        match groups
            .iter_mut()
            .find(|(rep, _)| distance(rep, &p.0) <= radius)
        {
            Some((_, members)) => members.push(p),
            None => groups.push((p.0.clone(), vec![p])),
        }
    }
    let mut out: Vec<Cluster> = groups
        .into_iter()
        .map(|(_, members)| {
            let d = members[0].0.len();
            let n = members.len() as f64;
            let mut center = vec![Complex64::new(0.0, 0.0); d];
            for m in &members {
                for (c, z) in center.iter_mut().zip(&m.0) {
                    *c += z / n;
                }
            }
            Cluster {
                center,
                members: members.len(),
                residual: members.iter().map(|m| m.1).fold(0.0, f64::max),
            }
        })
        .collect();
    out.sort_by(|a, b| lex(&to_real(&a.center), &to_real(&b.center)));
    out
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn newton_finds_the_gradient_preimage() {
        // ∇(|z|² + |w|²) = 2p, so ∇f = (2, 2i) at (1, i)
        let f = PotentialField::parse("z1*cj(z1) + z2*cj(z2)", 2).unwrap();
        let out = newton_solve(
            &f,
            &[c(2.0, 0.0), c(0.0, 2.0)],
            &[c(5.0, 1.0), c(-1.0, 0.0)],
            50,
            1e-12,
        );
        assert!(out.converged);
        assert!(distance(&out.point, &[c(1.0, 0.0), c(0.0, 1.0)]) < 1e-10);
    }

    #[test]
    fn non_linear_gradient_root() {
        // u = |z|^4 / 2 + |z|^2 has ∇u = 2(|z|^2 + 1) z, equal to 4 at z = 1
        let f = PotentialField::parse("0.5*z1^2*cj(z1)^2 + z1*cj(z1)", 1).unwrap();
        let out = newton_solve(&f, &[c(4.0, 0.0)], &[c(0.3, 0.4)], 100, 1e-12);
        assert!(out.converged, "{out:?}");
        assert!(distance(&out.point, &[c(1.0, 0.0)]) < 1e-10);
    }

    #[test]
    fn clustering_is_order_independent() {
        let pts = vec![
            (vec![c(1.0, 0.0)], 1e-12),
            (vec![c(0.0, 0.0)], 1e-13),
            (vec![c(1.0 + 1e-8, 0.0)], 1e-12),
            (vec![c(1e-9, 0.0)], 1e-12),
        ];
        let mut rev = pts.clone();
        rev.reverse();
        let a = cluster(&pts, 1e-6);
        let b = cluster(&rev, 1e-6);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].members, 2);
    }

    #[test]
    fn multistart_is_exec_independent() {
        let f = PotentialField::parse("z1*cj(z1) + z2*cj(z2)", 2).unwrap();
        let cfg = MultistartConfig {
            starts: 8,
            ..Default::default()
        };
        let zero = [c(0.0, 0.0), c(0.0, 0.0)];
        let a = multistart(&f, &zero, &cfg, Exec::Sequential).unwrap();
        let b = multistart(&f, &zero, &cfg, Exec::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|o| o.converged));
    }
}
