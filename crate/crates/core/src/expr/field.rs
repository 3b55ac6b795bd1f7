use super::{eval, parse_expression, wirtinger_diff, Expr};
use crate::error::{Error, Result};
use crate::rng::{ball_point, SeedStream};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// Maximum `|Im u|` a real-valued field may show on samples.
pub const REALNESS_TOLERANCE: f64 = 1e-10;

/// Radius used to sample fields declared on all of `C^d`.
pub const DEFAULT_SAMPLING_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Domain {
    Whole,
    Ball(f64),
}

impl Domain {
    pub fn contains(&self, p: &[Complex64]) -> bool {
        match self {
            Domain::Whole => true,
            Domain::Ball(r) => crate::point::norm(p) <= *r,
        }
    }

    pub fn sampling_radius(&self) -> f64 {
        match self {
            Domain::Whole => DEFAULT_SAMPLING_RADIUS,
            Domain::Ball(r) => *r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealnessCertificate {
    pub samples: usize,
    pub seed: u64,
    pub max_imag: f64,
    pub witness: Option<Vec<[f64; 2]>>,
    pub pass: bool,
}

/// A scalar field on `C^d` with cached Wirtinger derivatives.
///
/// Symbolic fields keep their expression and every first and second
/// derivative as normal-form expressions. Quadrature-averaged fields
/// (`x ↦ Σ w_i f(g_i x)` for unitary `g_i`) evaluate derivatives as
/// quadrature sums of the base field's derivatives.
#[derive(Debug, Clone)]
pub struct PotentialField {
    dim: usize,
    domain: Domain,
    label: String,
    repr: Repr,
    realness: Option<RealnessCertificate>,
}

#[derive(Debug, Clone)]
enum Repr {
    Symbolic(Arc<Symbolic>),
    Averaged(Arc<Averaged>),
}

#[derive(Debug)]
struct Symbolic {
    expr: Expr,
    d: Vec<Expr>,
    dbar: Vec<Expr>,
    /// `levi[j][k] = ∂_j ∂̄_k u`
    levi: Vec<Vec<Expr>>,
    /// `holo[j][k] = ∂_j ∂_k u`
    holo: Vec<Vec<Expr>>,
}

#[derive(Debug)]
struct Averaged {
    base: PotentialField,
    nodes: Vec<(DMatrix<Complex64>, f64)>,
}

impl PotentialField {
    /// Build a symbolic field. Realness is not checked here; see
    /// [`PotentialField::certify_real`] and [`PotentialField::validated`].
    pub fn from_expr(expr: Expr, dim: usize, domain: Domain) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Precondition("dimension must be positive".into()));
        }
        let used = expr.min_dimension();
        if used > dim {
            return Err(Error::VariableIndex { index: used, dim });
        }
        let d: Vec<Expr> = (0..dim).map(|j| wirtinger_diff(&expr, j, false)).collect();
        let dbar: Vec<Expr> = (0..dim).map(|j| wirtinger_diff(&expr, j, true)).collect();
        let levi = (0..dim)
            .map(|j| dbar.iter().map(|g| wirtinger_diff(g, j, false)).collect())
            .collect();
        let holo = (0..dim)
            .map(|j| d.iter().map(|g| wirtinger_diff(g, j, false)).collect())
            .collect();
        Ok(PotentialField {
            dim,
            domain,
            label: expr.to_string(),
            repr: Repr::Symbolic(Arc::new(Symbolic {
                expr,
                d,
                dbar,
                levi,
                holo,
            })),
            realness: None,
        })
    }

    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        Self::from_expr(parse_expression(text, dim)?, dim, Domain::Whole)
    }

    /// Parse and certify realness with the default sampling budget.
    pub fn validated(text: &str, dim: usize) -> Result<Self> {
        let f = Self::parse(text, dim)?.certify_real(64, 0)?;
        match f.realness() {
            Some(c) if c.pass => Ok(f),
            Some(c) => Err(Error::NotReal {
                max_imag: c.max_imag,
                witness: c
                    .witness
                    .as_ref()
                    .map(|w| w.iter().map(|z| Complex64::new(z[0], z[1])).collect())
                    .unwrap_or_default(),
            }),
            None => unreachable!(),
        }
    }

    /// Field `x ↦ Σ w_i base(g_i x)`. The caller guarantees unitary nodes.
    pub(crate) fn averaged(
        base: PotentialField,
        nodes: Vec<(DMatrix<Complex64>, f64)>,
        label: String,
    ) -> Self {
        PotentialField {
            dim: base.dim,
            domain: base.domain,
            label,
            repr: Repr::Averaged(Arc::new(Averaged { base, nodes })),
            realness: None,
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The defining expression, for symbolic fields.
    pub fn expr(&self) -> Option<&Expr> {
        match &self.repr {
            Repr::Symbolic(s) => Some(&s.expr),
            Repr::Averaged(_) => None,
        }
    }

    pub fn realness(&self) -> Option<&RealnessCertificate> {
        self.realness.as_ref()
    }

    fn check_dim(&self, p: &[Complex64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: p.len(),
            });
        }
        Ok(())
    }

    /// Complex value (imaginary part is evaluation noise for real fields).
    pub fn value_complex(&self, p: &[Complex64]) -> Result<Complex64> {
        self.check_dim(p)?;
        match &self.repr {
            Repr::Symbolic(s) => eval(&s.expr, p),
            Repr::Averaged(a) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (g, w) in &a.nodes {
                    acc += a.base.value_complex(&mat_vec(g, p))? * *w;
                }
                Ok(acc)
            }
        }
    }

    pub fn value(&self, p: &[Complex64]) -> Result<f64> {
        Ok(self.value_complex(p)?.re)
    }

    /// `(∂u/∂z̄_1, ..., ∂u/∂z̄_d)`.
    pub fn dbar(&self, p: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_dim(p)?;
        match &self.repr {
            Repr::Symbolic(s) => s.dbar.iter().map(|e| eval(e, p)).collect(),
            Repr::Averaged(a) => {
                let mut acc = vec![Complex64::new(0.0, 0.0); self.dim];
                for (g, w) in &a.nodes {
                    let inner = a.base.dbar(&mat_vec(g, p))?;
                    // (g^† v)_l = Σ_k conj(g_kl) v_k
                    for (l, slot) in acc.iter_mut().enumerate() {
                        for (k, v) in inner.iter().enumerate() {
                            *slot += g[(k, l)].conj() * v * *w;
                        }
                    }
                }
                Ok(acc)
            }
        }
    }

    /// `(∂u/∂z_1, ..., ∂u/∂z_d)`.
    pub fn d(&self, p: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_dim(p)?;
        match &self.repr {
            Repr::Symbolic(s) => s.d.iter().map(|e| eval(e, p)).collect(),
            Repr::Averaged(a) => {
                let mut acc = vec![Complex64::new(0.0, 0.0); self.dim];
                for (g, w) in &a.nodes {
                    let inner = a.base.d(&mat_vec(g, p))?;
                    for (l, slot) in acc.iter_mut().enumerate() {
                        for (k, v) in inner.iter().enumerate() {
                            *slot += g[(k, l)] * v * *w;
                        }
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Raw Levi matrix `H_jk = ∂²u/∂z_j∂z̄_k` (not symmetrized).
    pub fn levi_matrix(&self, p: &[Complex64]) -> Result<DMatrix<Complex64>> {
        self.check_dim(p)?;
        match &self.repr {
            Repr::Symbolic(s) => second_derivatives(&s.levi, p),
            Repr::Averaged(a) => {
                let mut acc = DMatrix::zeros(self.dim, self.dim);
                for (g, w) in &a.nodes {
                    let inner = a.base.levi_matrix(&mat_vec(g, p))?;
                    let gc = g.map(|z| z.conj());
                    acc += (g.transpose() * inner * gc) * Complex64::new(*w, 0.0);
                }
                Ok(acc)
            }
        }
    }

    /// Holomorphic second derivatives `P_jk = ∂²u/∂z_j∂z_k`.
    pub fn holomorphic_hessian(&self, p: &[Complex64]) -> Result<DMatrix<Complex64>> {
        self.check_dim(p)?;
        match &self.repr {
            Repr::Symbolic(s) => second_derivatives(&s.holo, p),
            Repr::Averaged(a) => {
                let mut acc = DMatrix::zeros(self.dim, self.dim);
                for (g, w) in &a.nodes {
                    let inner = a.base.holomorphic_hessian(&mat_vec(g, p))?;
                    acc += (g.transpose() * inner * g) * Complex64::new(*w, 0.0);
                }
                Ok(acc)
            }
        }
    }

    /// Sample `n` domain points and record the largest `|Im u|`.
    pub fn certify_real(mut self, n: usize, seed: u64) -> Result<Self> {
        self.realness = Some(is_real_valued(&self, n, seed)?);
        Ok(self)
    }
}

fn second_derivatives(table: &[Vec<Expr>], p: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let n = table.len();
    let mut m = DMatrix::zeros(n, n);
    for (j, row) in table.iter().enumerate() {
        for (k, e) in row.iter().enumerate() {
            m[(j, k)] = eval(e, p)?;
        }
    }
    Ok(m)
}

pub(crate) fn mat_vec(g: &DMatrix<Complex64>, p: &[Complex64]) -> Vec<Complex64> {
    (0..g.nrows())
        .map(|r| (0..g.ncols()).map(|c| g[(r, c)] * p[c]).sum())
        .collect()
}

/// Realness certificate from `n` seeded samples of the field's domain.
///
/// Evaluation errors propagate with the offending point attached.
pub fn is_real_valued(f: &PotentialField, n: usize, seed: u64) -> Result<RealnessCertificate> {
    if n == 0 {
        return Err(Error::Precondition("realness check needs n >= 1".into()));
    }
    let stream = SeedStream::new(seed).named("realness");
    let mut rng = stream.rng();
    let radius = f.domain().sampling_radius();
    let mut max_imag = 0.0_f64;
    let mut witness = None;
    for _ in 0..n {
        let p = ball_point(&mut rng, f.dim(), radius);
        let v = f.value_complex(&p)?;
        if v.im.abs() > max_imag {
            max_imag = v.im.abs();
            witness = Some(p);
        }
    }
    let pass = max_imag < REALNESS_TOLERANCE;
    Ok(RealnessCertificate {
        samples: n,
        seed,
        max_imag,
        witness: if pass {
            None
        } else {
            witness.map(|w| w.iter().map(|z| [z.re, z.im]).collect())
        },
        pass,
    })
}
