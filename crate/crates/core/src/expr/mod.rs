//! Expression trees over complex coordinates `z_j` and their conjugates.
//!
//! A potential on `C^d` is written as a polynomial-exponential expression in
//! the independent symbols `z_j` and `cj(z_j)`. Derivatives are taken
//! symbolically with the Wirtinger rules (`z_j` and `cj(z_j)` independent)
//! and brought to a flattened sum-of-products normal form.
//!
//! Variable indices are zero-based in the API and one-based in text
//! (`z1` is `Expr::Var(0)`).

mod diff;
mod eval;
mod field;
mod normal;
mod parse;
mod print;

pub use diff::wirtinger_diff;
pub use eval::eval;
pub(crate) use field::mat_vec;
pub use field::{
    is_real_valued, Domain, PotentialField, RealnessCertificate, DEFAULT_SAMPLING_RADIUS,
    REALNESS_TOLERANCE,
};
pub use normal::normalize;
pub(crate) use normal::Poly;
pub use parse::parse_expression;

use num_complex::Complex64;

/// Expression node. Children are owned; trees are small at desk scale.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Var(usize),
    ConjVar(usize),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    /// Integer power. Negative exponents fail at evaluation on a zero base.
    Pow(Box<Expr>, i32),
    Neg(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
}

impl Expr {
    pub fn zero() -> Self {
        Expr::Const(Complex64::new(0.0, 0.0))
    }

    pub fn one() -> Self {
        Expr::Const(Complex64::new(1.0, 0.0))
    }

    pub fn real(x: f64) -> Self {
        Expr::Const(Complex64::new(x, 0.0))
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.re == 0.0 && c.im == 0.0)
    }

    // The constructors below fold a node into a constant only when every
    // child is already constant. The parser builds trees exclusively through
    // them, which is what makes printing and re-parsing an identity.

    pub fn sum(children: Vec<Expr>) -> Expr {
        if let Some(cs) = all_const(&children) {
            return Expr::Const(cs.into_iter().sum());
        }
        match children.len() {
            1 => children.into_iter().next().unwrap(),
            _ => Expr::Sum(children),
        }
    }

    pub fn product(children: Vec<Expr>) -> Expr {
        if let Some(cs) = all_const(&children) {
            return Expr::Const(cs.into_iter().product());
        }
        match children.len() {
            1 => children.into_iter().next().unwrap(),
            _ => Expr::Product(children),
        }
    }

    pub fn pow(base: Expr, n: i32) -> Expr {
        match base {
            Expr::Const(c) => Expr::Const(c.powi(n)),
            b => Expr::Pow(Box::new(b), n),
        }
    }

    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Const(c) => Expr::Const(-c),
            e => Expr::Neg(Box::new(e)),
        }
    }

    pub fn exp(e: Expr) -> Expr {
        match e {
            Expr::Const(c) => Expr::Const(c.exp()),
            e => Expr::Exp(Box::new(e)),
        }
    }

    pub fn log(e: Expr) -> Expr {
        match e {
            Expr::Const(c) if c.norm() > 0.0 => Expr::Const(c.ln()),
            e => Expr::Log(Box::new(e)),
        }
    }

    /// Complex conjugate, pushed to the leaves.
    ///
    /// `log` uses the principal branch, so `conj(log w) = log(conj w)` holds
    /// off the negative real axis.
    pub fn conj(&self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(c.conj()),
            Expr::Var(j) => Expr::ConjVar(*j),
            Expr::ConjVar(j) => Expr::Var(*j),
            Expr::Sum(cs) => Expr::Sum(cs.iter().map(Expr::conj).collect()),
            Expr::Product(cs) => Expr::Product(cs.iter().map(Expr::conj).collect()),
            Expr::Pow(b, n) => Expr::Pow(Box::new(b.conj()), *n),
            Expr::Neg(e) => Expr::Neg(Box::new(e.conj())),
            Expr::Exp(e) => Expr::Exp(Box::new(e.conj())),
            Expr::Log(e) => Expr::Log(Box::new(e.conj())),
        }
    }

    /// Largest variable index used, plus one (0 for constant expressions).
    pub fn min_dimension(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(j) | Expr::ConjVar(j) => j + 1,
            Expr::Sum(cs) | Expr::Product(cs) => {
                cs.iter().map(Expr::min_dimension).max().unwrap_or(0)
            }
            Expr::Pow(e, _) | Expr::Neg(e) | Expr::Exp(e) | Expr::Log(e) => e.min_dimension(),
        }
    }

    /// Replace `z_j` and `cj(z_j)` by arbitrary expressions.
    pub fn substitute(&self, holo: &[Expr], anti: &[Expr]) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(j) => holo[*j].clone(),
            Expr::ConjVar(j) => anti[*j].clone(),
            Expr::Sum(cs) => Expr::Sum(cs.iter().map(|c| c.substitute(holo, anti)).collect()),
            Expr::Product(cs) => {
                Expr::Product(cs.iter().map(|c| c.substitute(holo, anti)).collect())
            }
            Expr::Pow(b, n) => Expr::Pow(Box::new(b.substitute(holo, anti)), *n),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(holo, anti))),
            Expr::Exp(e) => Expr::Exp(Box::new(e.substitute(holo, anti))),
            Expr::Log(e) => Expr::Log(Box::new(e.substitute(holo, anti))),
        }
    }

    /// Node count, used for budget checks and benches.
    pub fn size(&self) -> usize {
        1 + match self {
            Expr::Const(_) | Expr::Var(_) | Expr::ConjVar(_) => 0,
            Expr::Sum(cs) | Expr::Product(cs) => cs.iter().map(Expr::size).sum(),
            Expr::Pow(e, _) | Expr::Neg(e) | Expr::Exp(e) | Expr::Log(e) => e.size(),
        }
    }
}

fn all_const(children: &[Expr]) -> Option<Vec<Complex64>> {
    children.iter().map(Expr::as_const).collect()
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, rhs])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Product(vec![self, rhs])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conj_is_an_involution() {
        let e = parse_expression("exp(z1*cj(z2)) + i*z2^3 - log(z1 + 2)", 2).unwrap();
        assert_eq!(e.conj().conj(), e);
    }

    #[test]
    fn min_dimension_tracks_largest_index() {
        let e = parse_expression("z1*cj(z3)", 3).unwrap();
        assert_eq!(e.min_dimension(), 3);
        assert_eq!(Expr::real(2.0).min_dimension(), 0);
    }
}
