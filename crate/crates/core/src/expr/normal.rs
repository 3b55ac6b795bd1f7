//! Sum-of-products normal form.
//!
//! Every expression is expanded into `Σ c_m · m` where each monomial `m` is a
//! product of atoms raised to integer powers. Atoms are the coordinates,
//! their conjugates, `exp(·)`/`log(·)` of normalized arguments, and
//! multi-term sums appearing under a negative power. Like monomials are
//! merged and exact zeros dropped; nothing is factored.

use super::Expr;
use num_complex::Complex64;
use std::collections::BTreeMap;

type Monomial = BTreeMap<String, i32>;

#[derive(Debug, Clone, Default)]
pub(crate) struct Poly {
    terms: BTreeMap<Monomial, Complex64>,
    atoms: BTreeMap<String, Expr>,
}

/// Bring `e` to normal form.
pub fn normalize(e: &Expr) -> Expr {
    Poly::from_expr(e).to_expr()
}

impl Poly {
    fn constant(c: Complex64) -> Self {
        let mut p = Poly::default();
        if c != Complex64::new(0.0, 0.0) {
            p.terms.insert(Monomial::new(), c);
        }
        p
    }

    fn atom(key: String, expr: Expr, power: i32) -> Self {
        let mut p = Poly::default();
        let mut m = Monomial::new();
        m.insert(key.clone(), power);
        p.terms.insert(m, Complex64::new(1.0, 0.0));
        p.atoms.insert(key, expr);
        p
    }

    pub(crate) fn from_expr(e: &Expr) -> Poly {
        match e {
            Expr::Const(c) => Poly::constant(*c),
            Expr::Var(j) => Poly::atom(var_key(*j, false), Expr::Var(*j), 1),
            Expr::ConjVar(j) => Poly::atom(var_key(*j, true), Expr::ConjVar(*j), 1),
            Expr::Sum(cs) => cs
                .iter()
                .fold(Poly::default(), |acc, c| acc.add(&Poly::from_expr(c))),
            Expr::Product(cs) => cs
                .iter()
                .fold(Poly::constant(Complex64::new(1.0, 0.0)), |acc, c| {
                    acc.mul(&Poly::from_expr(c))
                }),
            Expr::Neg(a) => Poly::from_expr(a).scale(Complex64::new(-1.0, 0.0)),
            Expr::Pow(b, n) => Poly::from_expr(b).powi(*n),
            Expr::Exp(a) => {
                let arg = Poly::from_expr(a).to_expr();
                match arg.as_const() {
                    Some(c) => Poly::constant(c.exp()),
                    None => Poly::atom(format!("x:{arg}"), Expr::Exp(Box::new(arg)), 1),
                }
            }
            Expr::Log(a) => {
                let arg = Poly::from_expr(a).to_expr();
                match arg.as_const() {
                    Some(c) if c.norm() > 0.0 => Poly::constant(c.ln()),
                    _ => Poly::atom(format!("y:{arg}"), Expr::Log(Box::new(arg)), 1),
                }
            }
        }
    }

    fn add(mut self, other: &Poly) -> Poly {
        for (m, c) in &other.terms {
            let slot = self
                .terms
                .entry(m.clone())
                .or_insert(Complex64::new(0.0, 0.0));
            *slot += c;
            if *slot == Complex64::new(0.0, 0.0) {
                self.terms.remove(m);
            }
        }
        self.atoms
            .extend(other.atoms.iter().map(|(k, v)| (k.clone(), v.clone())));
        self
    }

    fn scale(mut self, s: Complex64) -> Poly {
        for c in self.terms.values_mut() {
            *c *= s;
        }
        self.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        self
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (k, e) in m2 {
                    let slot = m.entry(k.clone()).or_insert(0);
                    *slot += e;
                    if *slot == 0 {
                        m.remove(k);
                    }
                }
                let slot = out.terms.entry(m).or_insert(Complex64::new(0.0, 0.0));
                *slot += c1 * c2;
            }
        }
        out.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        out.atoms = self.atoms.clone();
        out.atoms
            .extend(other.atoms.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    fn powi(self, n: i32) -> Poly {
        if n >= 0 {
            let mut acc = Poly::constant(Complex64::new(1.0, 0.0));
            let mut base = self;
            let mut k = n as u32;
            while k > 0 {
                if k & 1 == 1 {
                    acc = acc.mul(&base);
                }
                k >>= 1;
                if k > 0 {
                    base = base.mul(&base);
                }
            }
            return acc;
        }
        if self.terms.len() == 1 {
            // a single monomial inverts exponent-wise
            let (m, c) = self.terms.into_iter().next().unwrap();
            let mut p = Poly::default();
            let m: Monomial = m.into_iter().map(|(k, e)| (k, e * n)).collect();
            p.terms.insert(m, c.powi(n));
            p.atoms = self.atoms;
            return p;
        }
        let base = self.to_expr();
        Poly::atom(format!("w:{base}"), base, n)
    }

    /// Drop terms whose coefficient is below `rel` times the largest one and
    /// zero out real or imaginary parts below the same cutoff.
    pub(crate) fn chop(mut self, rel: f64) -> Poly {
        let cut = rel * self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        self.terms.retain(|_, c| c.norm() > cut);
        for c in self.terms.values_mut() {
            if c.re.abs() <= cut {
                c.re = 0.0;
            }
            if c.im.abs() <= cut {
                c.im = 0.0;
            }
        }
        self
    }

    pub(crate) fn to_expr(&self) -> Expr {
        let mut terms: Vec<Expr> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut factors: Vec<Expr> = m
                    .iter()
                    .map(|(k, e)| {
                        let atom = self.atoms[k].clone();
                        if *e == 1 {
                            atom
                        } else {
                            Expr::Pow(Box::new(atom), *e)
                        }
                    })
                    .collect();
                if factors.is_empty() {
                    return Expr::Const(*c);
                }
                if *c == Complex64::new(-1.0, 0.0) {
                    let inner = if factors.len() == 1 {
                        factors.pop().unwrap()
                    } else {
                        Expr::Product(factors)
                    };
                    return Expr::Neg(Box::new(inner));
                }
                if *c != Complex64::new(1.0, 0.0) {
                    factors.insert(0, Expr::Const(*c));
                }
                if factors.len() == 1 {
                    factors.pop().unwrap()
                } else {
                    Expr::Product(factors)
                }
            })
            .collect();
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.pop().unwrap(),
            _ => Expr::Sum(terms),
        }
    }

    /// Monomial terms with their coefficients, exposing the exponent of each
    /// coordinate. Terms containing transcendental atoms report `None`.
    pub(crate) fn coordinate_terms(
        &self,
    ) -> Vec<(Option<Vec<(usize, bool, i32)>>, Complex64, Expr)> {
        self.terms
            .iter()
            .map(|(m, c)| {
                let coords: Option<Vec<_>> = m
                    .iter()
                    .map(|(k, e)| match &self.atoms[k] {
                        Expr::Var(j) => Some((*j, false, *e)),
                        Expr::ConjVar(j) => Some((*j, true, *e)),
                        _ => None,
                    })
                    .collect();
                let mut single = Poly::default();
                single.terms.insert(m.clone(), Complex64::new(1.0, 0.0));
                single.atoms = self.atoms.clone();
                (coords, *c, single.to_expr())
            })
            .collect()
    }
}

fn var_key(j: usize, conj: bool) -> String {
    format!("v{j:03}{}", u8::from(conj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    #[test]
    fn collects_like_terms() {
        let e = parse_expression("z1*cj(z1) + cj(z1)*z1 - 2*z1*cj(z1)", 1).unwrap();
        assert!(normalize(&e).is_zero());
    }

    #[test]
    fn expands_integer_powers() {
        let e = parse_expression("(z1 + cj(z1))^2", 1).unwrap();
        let expected = parse_expression("z1^2 + 2*z1*cj(z1) + cj(z1)^2", 1).unwrap();
        assert_eq!(normalize(&e), normalize(&expected));
    }

    #[test]
    fn absorbs_zero_and_one() {
        let e = parse_expression("1*z1 + 0*z2", 2).unwrap();
        assert_eq!(normalize(&e), Expr::Var(0));
    }

    #[test]
    fn normal_form_is_a_fixpoint() {
        let e = parse_expression(
            "exp(z1*(1 + cj(z1)))*(z1 - 2)^3 + log(z1 + z1)*(1 + z1*cj(z1))^-2",
            1,
        )
        .unwrap();
        let n = normalize(&e);
        assert_eq!(normalize(&n), n);
    }
}
