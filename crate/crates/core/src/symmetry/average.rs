use super::action::{max_abs, ActionKind, CMatrix, GroupAction};
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::expr::{Expr, Poly, PotentialField};
use num_complex::Complex64;

/// Relative cutoff for coefficients left over from floating cancellation
/// when group elements are substituted into the expression.
const CHOP: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct AveragedField {
    pub field: PotentialField,
    /// Set when some part of the integrand exceeds the rule's exactness.
    pub warnings: Vec<String>,
}

/// `x ↦ Σ w_i f(g_i x)`.
///
/// Circle, torus and finite actions are substituted into the expression and
/// collected in closed form. Coordinate monomials under a uniform circle or
/// torus rule keep their coefficient exactly when every net weight is
/// divisible by the node count and vanish otherwise. Transcendental terms
/// are summed node by node. SU(2) polynomials within the rule's exactness
/// are substituted node by node and collected. Any other SU(2) integrand,
/// and any field without an expression, is wrapped as a quadrature sum.
pub fn haar_average(
    f: &PotentialField,
    a: &GroupAction,
    q: &QuadratureRule,
) -> Result<AveragedField> {
    if f.dim() != a.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: f.dim(),
        });
    }
    if q.is_empty() {
        return Err(Error::Precondition("empty quadrature rule".into()));
    }
    for (i, node) in q.nodes.iter().enumerate() {
        let m = a.element_matrix(&node.element)?;
        if max_abs(&(m - &node.matrix)) > 1e-10 {
            return Err(Error::InvalidAction(format!(
                "quadrature node {i} does not belong to {}",
                a.name()
            )));
        }
    }
    let label = format!("avg[{}]({})", a.name(), f.label());
    let mut warnings = Vec::new();

    let exact_su2 = match (a.kind(), f.expr(), q.exactness) {
        (ActionKind::Su2, Some(e), Some(deg)) => polynomial_degree(e).is_some_and(|d| d <= deg),
        _ => false,
    };
    let expr = match (a.kind(), f.expr()) {
        (ActionKind::Su2, Some(e)) if exact_su2 => node_sum(e, q),
        (ActionKind::Su2, _) | (_, None) => {
            if let (Some(deg), Some(e)) = (q.exactness, f.expr()) {
                if let Some(d) = polynomial_degree(e) {
                    if d > deg {
                        warnings.push(format!("integrand degree {d} exceeds rule exactness {deg}"));
                    }
                } else {
                    warnings.push("non-polynomial integrand; quadrature is not exact".into());
                }
            }
            let field = PotentialField::averaged(f.clone(), q.weighted_matrices(), label);
            return Ok(AveragedField { field, warnings });
        }
        (ActionKind::Finite { .. }, Some(e)) => node_sum(e, q),
        (ActionKind::Circle { weights }, Some(e)) => {
            average_torus(e, &[weights.clone()], q, &mut warnings)
        }
        (ActionKind::Torus { weights }, Some(e)) => average_torus(e, weights, q, &mut warnings),
    };
    warnings.sort();
    warnings.dedup();
    let field = PotentialField::from_expr(expr, f.dim(), f.domain())?.with_label(label);
    Ok(AveragedField { field, warnings })
}

fn average_torus(
    e: &Expr,
    weights: &[Vec<i32>],
    q: &QuadratureRule,
    warnings: &mut Vec<String>,
) -> Expr {
    let mut kept = Vec::new();
    let mut transcendental = false;
    for (coords, coeff, term) in Poly::from_expr(e).coordinate_terms() {
        match coords {
            Some(coords) => {
                let net: Vec<i64> = weights
                    .iter()
                    .map(|row| {
                        coords
                            .iter()
                            .map(|&(j, conj, p)| {
                                let w = row[j] as i64 * p as i64;
                                if conj {
                                    -w
                                } else {
                                    w
                                }
                            })
                            .sum()
                    })
                    .collect();
                let factor = match q.uniform_count {
                    Some(n) => {
                        let n = n as i64;
                        if net.iter().any(|w| *w != 0) && net.iter().all(|w| w % n == 0) {
                            warnings.push(format!(
                                "net weight {net:?} is aliased by the {n}-node rule"
                            ));
                        }
                        if net.iter().all(|w| w % n == 0) {
                            Complex64::new(1.0, 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    }
                    None => node_factor(&net, q),
                };
                if factor.norm() > 0.0 {
                    kept.push(Expr::product(vec![Expr::Const(coeff * factor), term]));
                }
            }
            None => {
                transcendental = true;
                for n in &q.nodes {
                    kept.push(Expr::product(vec![
                        Expr::Const(coeff * n.weight),
                        act(&term, &n.matrix),
                    ]));
                }
            }
        }
    }
    if transcendental {
        warnings.push("transcendental terms averaged node by node; not exact".into());
    }
    let poly = Poly::from_expr(&Expr::Sum(kept));
    if transcendental {
        poly.chop(CHOP).to_expr()
    } else {
        poly.to_expr()
    }
}

/// `Σ w_i e(g_i z)` expanded and collected.
fn node_sum(e: &Expr, q: &QuadratureRule) -> Expr {
    let parts = q
        .nodes
        .iter()
        .map(|n| Expr::product(vec![Expr::real(n.weight), act(e, &n.matrix)]))
        .collect();
    Poly::from_expr(&Expr::Sum(parts)).chop(CHOP).to_expr()
}

fn node_factor(net: &[i64], q: &QuadratureRule) -> Complex64 {
    q.nodes
        .iter()
        .map(|n| {
            let phase: f64 = match &n.element {
                super::GroupElement::Angle(t) => net[0] as f64 * t,
                super::GroupElement::Angles(ts) => {
                    net.iter().zip(ts).map(|(w, t)| *w as f64 * t).sum()
                }
                _ => 0.0,
            };
            Complex64::from_polar(n.weight, phase)
        })
        .sum()
}

/// Substitute `z ↦ g z`, `z̄ ↦ ḡ z̄`.
fn act(e: &Expr, g: &CMatrix) -> Expr {
    let d = g.nrows();
    let row = |j: usize, conj: bool| {
        Expr::sum(
            (0..d)
                .filter(|&k| g[(j, k)].norm() > 0.0)
                .map(|k| {
                    if conj {
                        Expr::product(vec![Expr::Const(g[(j, k)].conj()), Expr::ConjVar(k)])
                    } else {
                        Expr::product(vec![Expr::Const(g[(j, k)]), Expr::Var(k)])
                    }
                })
                .collect(),
        )
    };
    let holo: Vec<Expr> = (0..d).map(|j| row(j, false)).collect();
    let anti: Vec<Expr> = (0..d).map(|j| row(j, true)).collect();
    e.substitute(&holo, &anti)
}

/// Total degree in the coordinates and conjugates, or `None` when the
/// expression is not a polynomial.
fn polynomial_degree(e: &Expr) -> Option<u32> {
    Poly::from_expr(e)
        .coordinate_terms()
        .into_iter()
        .map(|(coords, _, _)| {
            coords.and_then(|cs| {
                cs.iter()
                    .map(|&(_, _, p)| u32::try_from(p).ok())
                    .sum::<Option<u32>>()
            })
        })
        .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::eval;
    use crate::rng::{gaussian_point, SeedStream};

    fn field(text: &str, d: usize) -> PotentialField {
        PotentialField::parse(text, d).unwrap()
    }

    #[test]
    fn weight_one_terms_vanish() {
        let a = GroupAction::circle(vec![1]).unwrap();
        let q = QuadratureRule::circle(&a, 4).unwrap();
        let f = field("0.5*(z1 + cj(z1))", 1);
        let avg = haar_average(&f, &a, &q).unwrap();
        assert!(avg.field.expr().unwrap().is_zero());
        assert!(avg.warnings.is_empty());
    }

    #[test]
    fn invariant_field_is_unchanged() {
        let a = GroupAction::circle(vec![1]).unwrap();
        let q = QuadratureRule::circle(&a, 8).unwrap();
        let f = field("z1*cj(z1)", 1);
        let avg = haar_average(&f, &a, &q).unwrap();
        assert_eq!(avg.field.expr(), f.expr());
    }

    #[test]
    fn net_weight_one_cubic_vanishes() {
        let a = GroupAction::circle(vec![1, 1]).unwrap();
        let q = QuadratureRule::circle(&a, 4).unwrap();
        let f = field("0.5*(z1^2*cj(z2) + cj(z1)^2*z2)", 2);
        let avg = haar_average(&f, &a, &q).unwrap();
        assert!(avg.field.expr().unwrap().is_zero());
    }

    #[test]
    fn aliasing_is_flagged() {
        let a = GroupAction::circle(vec![1]).unwrap();
        let q = QuadratureRule::circle(&a, 4).unwrap();
        let avg = haar_average(&field("z1^4 + cj(z1)^4", 1), &a, &q).unwrap();
        assert!(!avg.warnings.is_empty());
    }

    #[test]
    fn finite_average_symmetrizes() {
        let id = CMatrix::identity(1, 1);
        let a = GroupAction::finite(vec![id.clone(), -id]).unwrap();
        let q = QuadratureRule::finite(&a).unwrap();
        let avg = haar_average(&field("z1 + z1*cj(z1) + 3*z1^3", 1), &a, &q).unwrap();
        assert_eq!(avg.field.expr().unwrap().to_string(), "z1*cj(z1)");
    }

    #[test]
    fn symbolic_average_matches_node_sum() {
        // Oracle: evaluate the original expression at every rotated point.
        let a = GroupAction::torus(vec![vec![1, 0], vec![1, 2]]).unwrap();
        let q = QuadratureRule::torus(&a, 5).unwrap();
        let f = field(
            "exp(z1*cj(z1)) + z1^2*cj(z2) + z1*cj(z1)*z2*cj(z2) + cj(z1)^2*z2",
            2,
        );
        let avg = haar_average(&f, &a, &q).unwrap();
        let mut rng = SeedStream::new(4).rng();
        for _ in 0..20 {
            let p = gaussian_point(&mut rng, 2);
            let direct: Complex64 = q
                .nodes
                .iter()
                .map(|n| {
                    let gp = crate::expr::mat_vec(&n.matrix, &p);
                    eval(f.expr().unwrap(), &gp).unwrap() * n.weight
                })
                .sum();
            let got = avg.field.value_complex(&p).unwrap();
            assert!((got - direct).norm() < 1e-11 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn su2_polynomial_average_is_collected() {
        let a = GroupAction::su2();
        let q = QuadratureRule::default_for(&a);
        let f = field(
            "z1*cj(z1) + z2*cj(z2) + 0.1*(z1 + cj(z1)) + z1^2*cj(z1)^2",
            2,
        );
        let avg = haar_average(&f, &a, &q).unwrap();
        assert!(avg.warnings.is_empty(), "{:?}", avg.warnings);
        // Haar oracle: E|u1|⁴ = 1/3 for u uniform on S³, so ⟨|z1|⁴⟩ = |z|⁴/3
        let p = [Complex64::new(0.3, -0.4), Complex64::new(1.0, 0.5)];
        let r2 = crate::point::norm(&p).powi(2);
        let expect = r2 + r2 * r2 / 3.0;
        assert!((avg.field.value(&p).unwrap() - expect).abs() < 1e-12);
        let e = avg.field.expr().expect("collected in closed form");
        assert!(e.size() < 40, "{e}");
    }

    #[test]
    fn su2_transcendental_average_is_numeric() {
        let a = GroupAction::su2();
        let q = QuadratureRule::default_for(&a);
        let f = field("exp(z1*cj(z1) + z2*cj(z2))", 2);
        let avg = haar_average(&f, &a, &q).unwrap();
        assert!(avg.field.expr().is_none());
        let p = [Complex64::new(0.3, -0.4), Complex64::new(1.0, 0.5)];
        let expect = crate::point::norm(&p).powi(2).exp();
        assert!((avg.field.value(&p).unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = GroupAction::circle(vec![1, 1]).unwrap();
        let q = QuadratureRule::default_for(&a);
        assert!(haar_average(&field("z1*cj(z1)", 1), &a, &q).is_err());
    }
}
