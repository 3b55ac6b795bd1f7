use super::Expr;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Evaluate `e` at `p`; `cj(z_j)` evaluates to `conj(p_j)`.
pub fn eval(e: &Expr, p: &[Complex64]) -> Result<Complex64> {
    Ok(match e {
        Expr::Const(c) => *c,
        Expr::Var(j) => *p.get(*j).ok_or(Error::Dimension {
            expected: j + 1,
            got: p.len(),
        })?,
        Expr::ConjVar(j) => p
            .get(*j)
            .ok_or(Error::Dimension {
                expected: j + 1,
                got: p.len(),
            })?
            .conj(),
        Expr::Sum(cs) => {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in cs {
                acc += eval(c, p)?;
            }
            acc
        }
        Expr::Product(cs) => {
            let mut acc = Complex64::new(1.0, 0.0);
            for c in cs {
                acc *= eval(c, p)?;
            }
            acc
        }
        Expr::Pow(b, n) => {
            let v = eval(b, p)?;
            if *n < 0 && v.norm_sqr() == 0.0 {
                return Err(Error::domain("negative power of zero", p));
            }
            v.powi(*n)
        }
        Expr::Neg(a) => -eval(a, p)?,
        Expr::Exp(a) => eval(a, p)?.exp(),
        Expr::Log(a) => {
            let v = eval(a, p)?;
            if v.norm_sqr() == 0.0 {
                return Err(Error::domain("log of zero", p));
            }
            v.ln()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norm_squared_at_one_i() {
        let e = parse_expression("z1*cj(z1) + z2*cj(z2)", 2).unwrap();
        assert_eq!(eval(&e, &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap(), c(2.0, 0.0));
    }

    #[test]
    fn conjugated_variable() {
        let e = parse_expression("z1*cj(z2)", 2).unwrap();
        assert_eq!(eval(&e, &[c(2.0, 0.0), c(0.0, 1.0)]).unwrap(), c(0.0, -2.0));
    }

    #[test]
    fn log_of_zero_is_domain_error() {
        let e = parse_expression("log(z1)", 1).unwrap();
        assert!(matches!(
            eval(&e, &[c(0.0, 0.0)]),
            Err(Error::Domain { .. })
        ));
        let e = parse_expression("z1^-1", 1).unwrap();
        assert!(matches!(
            eval(&e, &[c(0.0, 0.0)]),
            Err(Error::Domain { .. })
        ));
    }
}
