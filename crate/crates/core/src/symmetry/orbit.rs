use super::action::{CMatrix, GroupAction, GroupElement};
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::expr::{mat_vec, PotentialField};
use crate::geometry::complex_gradient;
use crate::point::{distance, norm, to_real};
use crate::rng::{ball_point, SeedStream};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Relative rank threshold for orbit tangent vectors.
pub const RANK_TOLERANCE: f64 = 1e-9;
/// Absolute floor under [`RANK_TOLERANCE`]`·‖p‖`.
pub const RANK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitInfo {
    pub point: Vec<Complex64>,
    /// `A_k p` realified, one per generator.
    pub vectors: Vec<Vec<f64>>,
    pub rank: usize,
    pub fixed: bool,
}

/// Real rank of the infinitesimal orbit `span{A_k p}` by pivoted
/// Gram–Schmidt with threshold `max(1e-9·‖p‖, 1e-12)`. Finite groups have
/// rank 0 and are fixed when every element maps `p` to itself.
pub fn orbit_dimension(a: &GroupAction, p: &[Complex64]) -> Result<OrbitInfo> {
    if p.len() != a.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: p.len(),
        });
    }
    let vectors: Vec<Vec<f64>> = a
        .generators()
        .iter()
        .map(|g| to_real(&mat_vec(g, p)))
        .collect();
    let threshold = (RANK_TOLERANCE * norm(p)).max(RANK_FLOOR);
    let rank = pivoted_rank(&vectors, threshold);
    let fixed = match a.kind() {
        super::ActionKind::Finite { elements } => {
            let tol = 1e-10 * norm(p).max(1.0);
            elements.iter().all(|g| distance(&mat_vec(g, p), p) <= tol)
        }
        _ => rank == 0,
    };
    Ok(OrbitInfo {
        point: p.to_vec(),
        vectors,
        rank,
        fixed,
    })
}

fn pivoted_rank(vectors: &[Vec<f64>], threshold: f64) -> usize {
    let mut rest: Vec<Vec<f64>> = vectors.to_vec();
    let mut rank = 0;
    while !rest.is_empty() {
        let (k, best) = rest
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.iter().map(|x| x * x).sum::<f64>().sqrt()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if best <= threshold {
            break;
        }
        let pivot: Vec<f64> = rest.swap_remove(k).iter().map(|x| x / best).collect();
        for v in rest.iter_mut() {
            let c: f64 = v.iter().zip(&pivot).map(|(a, b)| a * b).sum();
            for (x, e) in v.iter_mut().zip(&pivot) {
                *x -= c * e;
            }
        }
        rank += 1;
    }
    rank
}

/// Euclidean distance from `p` to the linear subspace fixed by the whole
/// group.
pub fn fixed_set_distance(a: &GroupAction, p: &[Complex64]) -> Result<f64> {
    if p.len() != a.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: p.len(),
        });
    }
    let d = a.dim();
    // the fixed set is the common kernel of the generators (Lie kinds) or of
    // g − I (finite kinds)
    let blocks: Vec<CMatrix> = match a.kind() {
        super::ActionKind::Finite { elements } => elements
            .iter()
            .map(|g| g - CMatrix::identity(d, d))
            .collect(),
        _ => a.generators().to_vec(),
    };
    if blocks.is_empty() {
        return Ok(0.0);
    }
    let stacked = DMatrix::<f64>::from_fn(2 * d * blocks.len(), 2 * d, |r, c| {
        let (b, r) = (r / (2 * d), r % (2 * d));
        let z = blocks[b][(r / 2, c / 2)];
        // realified complex multiplication on (re, im) pairs
        match (r % 2, c % 2) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    });
    let svd = stacked.svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    let x = DVector::from_vec(to_real(p));
    let mut proj_sq = 0.0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= 1e-10 * smax.max(1.0) {
            let v = vt.row(i).transpose();
            proj_sq += v.dot(&x).powi(2);
        }
    }
    Ok((x.norm_squared() - proj_sq).max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub residual: f64,
    /// Point and element realizing the maximum.
    pub witness: Option<(Vec<Complex64>, CMatrix)>,
}

/// `max |f(g·p) − f(p)|` over `n` seeded points in the sampling ball, each
/// paired with a Haar-random element and with one rule node in turn.
pub fn invariance_residual(
    f: &PotentialField,
    a: &GroupAction,
    q: &QuadratureRule,
    n: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    if n == 0 {
        return Err(Error::Precondition("invariance check needs n ≥ 1".into()));
    }
    if f.dim() != a.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: f.dim(),
        });
    }
    let stream = SeedStream::new(seed).named("invariance");
    let radius = f.domain().sampling_radius();
    let mut report = InvarianceReport {
        residual: 0.0,
        witness: None,
    };
    for i in 0..n {
        let mut rng = stream.index(i as u64).rng();
        let p = ball_point(&mut rng, f.dim(), radius);
        let fp = f.value(&p)?;
        let random = a.element_matrix(&a.random_element(&mut rng))?;
        let mut elements = vec![random];
        if !q.is_empty() {
            elements.push(q.nodes[i % q.len()].matrix.clone());
        }
        for g in elements {
            let r = (f.value(&mat_vec(&g, &p))? - fp).abs();
            if r > report.residual || report.witness.is_none() {
                report.residual = report.residual.max(r);
                report.witness = Some((p.clone(), g));
            }
        }
    }
    Ok(report)
}

/// `max_t ‖∇φ(e^{it}p) − e^{it}∇φ(p)‖` after confirming invariance under the
/// diagonal circle action.
pub fn equivariance_check(f: &PotentialField, p: &[Complex64], angles: &[f64]) -> Result<f64> {
    let a = GroupAction::diagonal_circle(f.dim());
    let q = QuadratureRule::circle(&a, 8)?;
    let inv = invariance_residual(f, &a, &q, 32, 0)?;
    if inv.residual > 1e-8 {
        return Err(Error::Precondition(format!(
            "field is not invariant under the diagonal circle action (residual {:.3e})",
            inv.residual
        )));
    }
    let g0 = complex_gradient(f, p)?.complex_gradient();
    let mut worst = 0.0_f64;
    for &t in angles {
        let phase = Complex64::from_polar(1.0, t);
        let rotated = a.apply(&GroupElement::Angle(t), p)?;
        let gt = complex_gradient(f, &rotated)?.complex_gradient();
        let expect: Vec<Complex64> = g0.iter().map(|z| z * phase).collect();
        worst = worst.max(distance(&gt, &expect));
    }
    Ok(worst)
}
