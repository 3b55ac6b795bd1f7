//! Quadrature rules standing in for normalized Haar measure.

use super::action::{phase_diag, su2_euler, ActionKind, CMatrix, GroupAction, GroupElement};
use crate::error::{Error, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureNode {
    pub element: GroupElement,
    pub matrix: CMatrix,
    pub weight: f64,
}

/// Nodes and positive weights summing to one.
///
/// `exactness` is the largest degree integrated exactly: net weight for
/// circle and torus rules, total degree in matrix coefficients and their
/// conjugates for SU(2); `None` means exact for every integrand (finite
/// groups).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<QuadratureNode>,
    pub exactness: Option<u32>,
    /// Uniform node count per circle factor, when the rule is a uniform grid.
    pub(crate) uniform_count: Option<usize>,
}

impl QuadratureRule {
    /// Default rule for an action: 8 nodes per circle factor, the full
    /// element list for finite groups, and the (8, 8, 8) Euler grid for SU(2).
    pub fn default_for(action: &GroupAction) -> QuadratureRule {
        match action.kind() {
            ActionKind::Circle { .. } => Self::circle(action, 8).unwrap(),
            ActionKind::Torus { .. } => Self::torus(action, 8).unwrap(),
            ActionKind::Finite { .. } => Self::finite(action).unwrap(),
            ActionKind::Su2 => Self::su2_euler(action, (8, 8, 8)).unwrap(),
        }
    }

    /// `n` equally spaced angles `2πk/n`; exact for net weight `|w| < n`.
    pub fn circle(action: &GroupAction, n: usize) -> Result<QuadratureRule> {
        let ActionKind::Circle { weights } = action.kind() else {
            return Err(Error::InvalidAction(
                "circle rule needs a circle action".into(),
            ));
        };
        if n == 0 {
            return Err(Error::Precondition(
                "quadrature needs at least one node".into(),
            ));
        }
        let nodes = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                QuadratureNode {
                    element: GroupElement::Angle(t),
                    matrix: phase_diag(weights, t),
                    weight: 1.0 / n as f64,
                }
            })
            .collect();
        Ok(QuadratureRule {
            nodes,
            exactness: Some(n as u32 - 1),
            uniform_count: Some(n),
        })
    }

    /// Product of uniform `n`-point circle rules over every torus factor.
    pub fn torus(action: &GroupAction, n: usize) -> Result<QuadratureRule> {
        let ActionKind::Torus { weights } = action.kind() else {
            return Err(Error::InvalidAction(
                "torus rule needs a torus action".into(),
            ));
        };
        if n == 0 {
            return Err(Error::Precondition(
                "quadrature needs at least one node".into(),
            ));
        }
        let m = weights.len();
        let total = n.pow(m as u32);
        let w = 1.0 / total as f64;
        let nodes = (0..total)
            .map(|mut idx| {
                let mut angles = Vec::with_capacity(m);
                for _ in 0..m {
                    angles.push(2.0 * PI * (idx % n) as f64 / n as f64);
                    idx /= n;
                }
                let element = GroupElement::Angles(angles);
                QuadratureNode {
                    matrix: action.element_matrix(&element).unwrap(),
                    element,
                    weight: w,
                }
            })
            .collect();
        Ok(QuadratureRule {
            nodes,
            exactness: Some(n as u32 - 1),
            uniform_count: Some(n),
        })
    }

    /// Equal weights over the element list.
    pub fn finite(action: &GroupAction) -> Result<QuadratureRule> {
        let ActionKind::Finite { elements } = action.kind() else {
            return Err(Error::InvalidAction(
                "finite rule needs a finite action".into(),
            ));
        };
        let w = 1.0 / elements.len() as f64;
        Ok(QuadratureRule {
            nodes: elements
                .iter()
                .enumerate()
                .map(|(k, m)| QuadratureNode {
                    element: GroupElement::Index(k),
                    matrix: m.clone(),
                    weight: w,
                })
                .collect(),
            exactness: None,
            uniform_count: None,
        })
    }

    /// Euler-angle product rule on SU(2): uniform α ∈ [0, 2π), Gauss–Legendre
    /// in cos β, uniform γ ∈ [0, 4π). Haar density is `sin β dα dβ dγ / 16π²`.
    pub fn su2_euler(
        action: &GroupAction,
        counts: (usize, usize, usize),
    ) -> Result<QuadratureRule> {
        if !matches!(action.kind(), ActionKind::Su2) {
            return Err(Error::InvalidAction(
                "Euler rule needs the SU(2) action".into(),
            ));
        }
        let (na, nb, ng) = counts;
        if na == 0 || nb == 0 || ng == 0 {
            return Err(Error::Precondition(
                "quadrature needs at least one node".into(),
            ));
        }
        let (xs, ws) = gauss_legendre(nb);
        let mut nodes = Vec::with_capacity(na * nb * ng);
        for ia in 0..na {
            let alpha = 2.0 * PI * ia as f64 / na as f64;
            for (x, wb) in xs.iter().zip(&ws) {
                let beta = x.clamp(-1.0, 1.0).acos();
                for ig in 0..ng {
                    let gamma = 4.0 * PI * ig as f64 / ng as f64;
                    nodes.push(QuadratureNode {
                        element: GroupElement::Euler { alpha, beta, gamma },
                        matrix: su2_euler(alpha, beta, gamma),
                        weight: wb / 2.0 / (na * ng) as f64,
                    });
                }
            }
        }
        let exact = (2 * na - 1).min(ng - 1).min(2 * (2 * nb - 1));
        Ok(QuadratureRule {
            nodes,
            exactness: Some(exact as u32),
            uniform_count: None,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    pub(crate) fn weighted_matrices(&self) -> Vec<(CMatrix, f64)> {
        self.nodes
            .iter()
            .map(|n| (n.matrix.clone(), n.weight))
            .collect()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[n - 1 - i] = x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (xs, ws) = gauss_legendre(8);
        for deg in 0..16 {
            let approx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            assert!((approx - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for a in [
            GroupAction::su2(),
            GroupAction::circle(vec![1, 1]).unwrap(),
            GroupAction::torus(vec![vec![1, 0], vec![0, 1]]).unwrap(),
            GroupAction::finite(vec![CMatrix::identity(2, 2), -CMatrix::identity(2, 2)]).unwrap(),
        ] {
            let q = QuadratureRule::default_for(&a);
            assert!((q.weight_sum() - 1.0).abs() < 1e-14);
            assert!(q.nodes.iter().all(|n| n.weight > 0.0));
        }
    }

    #[test]
    fn su2_rule_reproduces_sphere_moments() {
        // For unit p, g·p is uniform on S^3: E|a|^2 = 1/2, E|a|^4 = 1/3, E|a|^2|b|^2 = 1/6.
        let q = QuadratureRule::default_for(&GroupAction::su2());
        let (mut m2, mut m4, mut mix) = (0.0, 0.0, 0.0);
        for n in &q.nodes {
            let a = n.matrix[(0, 0)];
            let b = n.matrix[(1, 0)];
            m2 += n.weight * a.norm_sqr();
            m4 += n.weight * a.norm_sqr().powi(2);
            mix += n.weight * a.norm_sqr() * b.norm_sqr();
        }
        assert!((m2 - 0.5).abs() < 1e-14);
        assert!((m4 - 1.0 / 3.0).abs() < 1e-14);
        assert!((mix - 1.0 / 6.0).abs() < 1e-14);
    }
}
