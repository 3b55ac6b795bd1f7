use crate::error::{Error, Result};
use crate::expr::mat_vec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance for unitarity, closure and anti-Hermitian checks.
pub const ACTION_TOLERANCE: f64 = 1e-10;

/// Action as written in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActionSpec {
    Circle {
        weights: Vec<i32>,
    },
    Torus {
        weights: Vec<Vec<i32>>,
    },
    /// Each element is a row-major list of `[re, im]` entries.
    Finite {
        elements: Vec<Vec<Vec<[f64; 2]>>>,
    },
    Su2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionKind {
    Circle { weights: Vec<i32> },
    Torus { weights: Vec<Vec<i32>> },
    Finite { elements: Vec<CMatrix> },
    Su2,
}

/// A compact group acting linearly and unitarily on `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAction {
    dim: usize,
    kind: ActionKind,
    generators: Vec<CMatrix>,
}

/// A group element in the parameterization of its action.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    Angle(f64),
    Angles(Vec<f64>),
    /// Index into a finite group's element list.
    Index(usize),
    /// `Rz(α) Ry(β) Rz(γ)` with `Rz(θ) = diag(e^{-iθ/2}, e^{iθ/2})`.
    Euler {
        alpha: f64,
        beta: f64,
        gamma: f64,
    },
    Matrix(CMatrix),
}

impl GroupAction {
    pub fn circle(weights: Vec<i32>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidAction("circle action needs weights".into()));
        }
        let generators = vec![diag_i(&weights)];
        Ok(GroupAction {
            dim: weights.len(),
            kind: ActionKind::Circle { weights },
            generators,
        })
    }

    /// The diagonal action `z ↦ e^{it} z` on `C^dim`.
    pub fn diagonal_circle(dim: usize) -> Self {
        Self::circle(vec![1; dim]).expect("non-empty weights")
    }

    pub fn torus(weights: Vec<Vec<i32>>) -> Result<Self> {
        let dim = weights.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || weights.iter().any(|row| row.len() != dim) {
            return Err(Error::InvalidAction(
                "torus weights must be a non-empty m × d matrix".into(),
            ));
        }
        let generators = weights.iter().map(|row| diag_i(row)).collect();
        Ok(GroupAction {
            dim,
            kind: ActionKind::Torus { weights },
            generators,
        })
    }

    /// Finite group from an explicit element list, checked for unitarity,
    /// identity, inverses and closure.
    pub fn finite(elements: Vec<CMatrix>) -> Result<Self> {
        let dim = elements.first().map(|m| m.nrows()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidAction("finite group needs elements".into()));
        }
        for (i, g) in elements.iter().enumerate() {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(Error::InvalidAction(format!(
                    "element {i} is not {dim}×{dim}"
                )));
            }
            let defect = max_abs(&(g.adjoint() * g - CMatrix::identity(dim, dim)));
            if defect > ACTION_TOLERANCE {
                return Err(Error::InvalidAction(format!(
                    "element {i} is not unitary (defect {defect:e})"
                )));
            }
        }
        let find = |m: &CMatrix| {
            elements
                .iter()
                .position(|g| max_abs(&(g - m)) <= ACTION_TOLERANCE)
        };
        if find(&CMatrix::identity(dim, dim)).is_none() {
            return Err(Error::InvalidAction(
                "finite group must contain the identity".into(),
            ));
        }
        for (i, g) in elements.iter().enumerate() {
            if find(&g.adjoint()).is_none() {
                return Err(Error::InvalidAction(format!(
                    "inverse of element {i} missing"
                )));
            }
            for (j, h) in elements.iter().enumerate() {
                if find(&(g * h)).is_none() {
                    return Err(Error::InvalidAction(format!(
                        "product of elements {i} and {j} missing"
                    )));
                }
            }
        }
        Ok(GroupAction {
            dim,
            kind: ActionKind::Finite { elements },
            generators: Vec::new(),
        })
    }

    /// Fundamental representation of SU(2) on `C^2`, generated by `iσ_1, iσ_2, iσ_3`.
    pub fn su2() -> Self {
        let c = Complex64::new;
        let i = Complex64::i();
        let sx = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let sy = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
        let sz = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
        GroupAction {
            dim: 2,
            kind: ActionKind::Su2,
            generators: vec![sx * i, sy * i, sz * i],
        }
    }

    pub fn from_spec(spec: &ActionSpec) -> Result<Self> {
        match spec {
            ActionSpec::Circle { weights } => Self::circle(weights.clone()),
            ActionSpec::Torus { weights } => Self::torus(weights.clone()),
            ActionSpec::Su2 => Ok(Self::su2()),
            ActionSpec::Finite { elements } => {
                let mats = elements
                    .iter()
                    .enumerate()
                    .map(|(k, rows)| {
                        let n = rows.len();
                        if rows.iter().any(|r| r.len() != n) {
                            return Err(Error::InvalidAction(format!(
                                "finite element {k} is not square"
                            )));
                        }
                        Ok(CMatrix::from_fn(n, n, |r, c| {
                            Complex64::new(rows[r][c][0], rows[r][c][1])
                        }))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::finite(mats)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ActionKind {
        &self.kind
    }

    /// Anti-Hermitian matrices spanning the infinitesimal action (empty for
    /// finite groups).
    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, ActionKind::Finite { .. })
    }

    /// Dimension of the acting group.
    pub fn group_dimension(&self) -> usize {
        self.generators.len()
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ActionKind::Circle { weights } => format!("circle{weights:?}"),
            ActionKind::Torus { weights } => format!("torus{weights:?}"),
            ActionKind::Finite { elements } => format!("finite(order {})", elements.len()),
            ActionKind::Su2 => "su2".into(),
        }
    }

    /// Unitary matrix of a group element.
    pub fn element_matrix(&self, g: &GroupElement) -> Result<CMatrix> {
        let bad = |what: &str| Err(Error::InvalidAction(format!("{what} for {}", self.name())));
        match (&self.kind, g) {
            (ActionKind::Circle { weights }, GroupElement::Angle(t)) => Ok(phase_diag(weights, *t)),
            (ActionKind::Torus { weights }, GroupElement::Angles(ts)) => {
                if ts.len() != weights.len() {
                    return bad("wrong number of torus angles");
                }
                let mut m = CMatrix::identity(self.dim, self.dim);
                for (row, t) in weights.iter().zip(ts) {
                    m *= phase_diag(row, *t);
                }
                Ok(m)
            }
            (ActionKind::Finite { elements }, GroupElement::Index(k)) => match elements.get(*k) {
                Some(m) => Ok(m.clone()),
                None => bad("element index out of range"),
            },
            (ActionKind::Finite { elements }, GroupElement::Matrix(m)) => {
                if elements
                    .iter()
                    .any(|g| max_abs(&(g - m)) <= ACTION_TOLERANCE)
                {
                    Ok(m.clone())
                } else {
                    bad("matrix is not a group element")
                }
            }
            (ActionKind::Su2, GroupElement::Euler { alpha, beta, gamma }) => {
                Ok(su2_euler(*alpha, *beta, *gamma))
            }
            (ActionKind::Su2, GroupElement::Matrix(m)) => {
                let unitary = m.nrows() == 2
                    && m.ncols() == 2
                    && max_abs(&(m.adjoint() * m - CMatrix::identity(2, 2))) <= ACTION_TOLERANCE;
                let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
                if unitary && (det - Complex64::new(1.0, 0.0)).norm() <= ACTION_TOLERANCE {
                    Ok(m.clone())
                } else {
                    bad("matrix is not in SU(2)")
                }
            }
            _ => bad("element parameterization does not match the action"),
        }
    }

    pub fn apply(&self, g: &GroupElement, p: &[Complex64]) -> Result<Vec<Complex64>> {
        if p.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: p.len(),
            });
        }
        Ok(mat_vec(&self.element_matrix(g)?, p))
    }

    /// Haar-random group element.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        match &self.kind {
            ActionKind::Circle { .. } => GroupElement::Angle(rng.random::<f64>() * 2.0 * PI),
            ActionKind::Torus { weights } => GroupElement::Angles(
                (0..weights.len())
                    .map(|_| rng.random::<f64>() * 2.0 * PI)
                    .collect(),
            ),
            ActionKind::Finite { elements } => {
                GroupElement::Index(rng.random_range(0..elements.len()))
            }
            ActionKind::Su2 => {
                // a uniform unit quaternion is Haar on SU(2)
                let q = crate::rng::unit_sphere_point(rng, 2);
                let (a, b) = (q[0], q[1]);
                GroupElement::Matrix(CMatrix::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()]))
            }
        }
    }
}

fn diag_i(weights: &[i32]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        weights.len(),
        weights.iter().map(|&k| Complex64::new(0.0, k as f64)),
    ))
}

pub(crate) fn phase_diag(weights: &[i32], t: f64) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        weights.len(),
        weights
            .iter()
            .map(|&k| Complex64::from_polar(1.0, k as f64 * t)),
    ))
}

pub(crate) fn su2_euler(alpha: f64, beta: f64, gamma: f64) -> CMatrix {
    let (s, c) = (beta / 2.0).sin_cos();
    let e = |theta: f64| Complex64::from_polar(1.0, theta);
    CMatrix::from_row_slice(
        2,
        2,
        &[
            e(-(alpha + gamma) / 2.0) * c,
            -e(-(alpha - gamma) / 2.0) * s,
            e((alpha - gamma) / 2.0) * s,
            e((alpha + gamma) / 2.0) * c,
        ],
    )
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::norm;
    use crate::rng::{gaussian_point, SeedStream};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64]) -> bool {
        crate::point::distance(a, b) < 1e-12
    }

    #[test]
    fn circle_quarter_turn() {
        let a = GroupAction::circle(vec![1, 1]).unwrap();
        let q = a
            .apply(&GroupElement::Angle(PI / 2.0), &[c(1.0, 0.0), c(0.0, 1.0)])
            .unwrap();
        assert!(close(&q, &[c(0.0, 1.0), c(-1.0, 0.0)]));
    }

    #[test]
    fn finite_sign_group() {
        let id = CMatrix::identity(2, 2);
        let minus = -id.clone();
        let a = GroupAction::finite(vec![id, minus.clone()]).unwrap();
        let q = a
            .apply(&GroupElement::Matrix(minus), &[c(1.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert!(close(&q, &[c(-1.0, 0.0), c(0.0, 0.0)]));
    }

    #[test]
    fn su2_diagonal_element() {
        let a = GroupAction::su2();
        let theta = 0.37;
        let g = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::from_polar(1.0, theta),
                c(0.0, 0.0),
                c(0.0, 0.0),
                Complex64::from_polar(1.0, -theta),
            ],
        );
        let q = a
            .apply(&GroupElement::Matrix(g), &[c(1.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        assert!(close(
            &q,
            &[
                Complex64::from_polar(1.0, theta),
                Complex64::from_polar(1.0, -theta)
            ]
        ));
        // same element through Euler angles: α + γ = -2θ, β = 0
        let e = a
            .apply(
                &GroupElement::Euler {
                    alpha: -theta,
                    beta: 0.0,
                    gamma: -theta,
                },
                &[c(1.0, 0.0), c(1.0, 0.0)],
            )
            .unwrap();
        assert!(close(&q, &e));
    }

    #[test]
    fn finite_group_validation() {
        let id = CMatrix::identity(1, 1);
        let i = CMatrix::from_element(1, 1, c(0.0, 1.0));
        // {1, i} is not closed
        assert!(GroupAction::finite(vec![id.clone(), i.clone()]).is_err());
        let minus = -id.clone();
        let mi = -i.clone();
        assert!(GroupAction::finite(vec![id.clone(), i, minus, mi]).is_ok());
        let not_unitary = CMatrix::from_element(1, 1, c(2.0, 0.0));
        assert!(GroupAction::finite(vec![id, not_unitary]).is_err());
    }

    #[test]
    fn generators_are_anti_hermitian() {
        for a in [
            GroupAction::su2(),
            GroupAction::circle(vec![1, -2, 3]).unwrap(),
            GroupAction::torus(vec![vec![1, 0], vec![0, 2]]).unwrap(),
        ] {
            for g in a.generators() {
                assert!(max_abs(&(g + g.adjoint())) <= ACTION_TOLERANCE);
            }
        }
    }

    #[test]
    fn actions_preserve_the_norm() {
        let mut rng = SeedStream::new(11).rng();
        for a in [
            GroupAction::su2(),
            GroupAction::circle(vec![2, -1]).unwrap(),
            GroupAction::torus(vec![vec![1, 0], vec![1, 3]]).unwrap(),
        ] {
            for _ in 0..100 {
                let p = gaussian_point(&mut rng, 2);
                let g = a.random_element(&mut rng);
                let q = a.apply(&g, &p).unwrap();
                assert!((norm(&q) - norm(&p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mismatched_parameters_are_rejected() {
        let a = GroupAction::su2();
        assert!(a
            .apply(&GroupElement::Angle(1.0), &[c(1.0, 0.0), c(0.0, 0.0)])
            .is_err());
        let not_su2 = CMatrix::from_diagonal_element(2, 2, c(0.0, 1.0));
        assert!(a.element_matrix(&GroupElement::Matrix(not_su2)).is_err());
        let t = GroupAction::torus(vec![vec![1, 1]]).unwrap();
        assert!(t
            .element_matrix(&GroupElement::Angles(vec![0.1, 0.2]))
            .is_err());
    }

    #[test]
    fn action_round_trips_through_toml() {
        let spec: ActionSpec = toml::from_str("kind = \"circle\"\nweights = [1, 1]").unwrap();
        assert_eq!(
            spec,
            ActionSpec::Circle {
                weights: vec![1, 1]
            }
        );
        let spec: ActionSpec = toml::from_str("kind = \"su2\"").unwrap();
        assert_eq!(GroupAction::from_spec(&spec).unwrap().group_dimension(), 3);
    }
}
