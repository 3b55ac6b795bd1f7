use super::Expr;
use num_complex::Complex64;
use std::fmt::{self, Write};

// The printer parenthesizes every compound child so that re-parsing yields
// the same tree: a parenthesized group is a primary and keeps its own node.

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f)
    }
}

fn write_expr(e: &Expr, f: &mut impl Write) -> fmt::Result {
    match e {
        Expr::Sum(cs) => {
            for (k, c) in cs.iter().enumerate() {
                match c {
                    Expr::Neg(inner) if k > 0 => {
                        f.write_str(" - ")?;
                        write_term_operand(inner, f)?;
                    }
                    _ => {
                        if k > 0 {
                            f.write_str(" + ")?;
                        }
                        write_term_operand(c, f)?;
                    }
                }
            }
            Ok(())
        }
        _ => write_term_operand(e, f),
    }
}

/// Something that may stand as a whole term of a sum.
fn write_term_operand(e: &Expr, f: &mut impl Write) -> fmt::Result {
    match e {
        Expr::Product(cs) => {
            for (k, c) in cs.iter().enumerate() {
                if k > 0 {
                    f.write_char('*')?;
                }
                write_factor(c, f)?;
            }
            Ok(())
        }
        _ => write_factor(e, f),
    }
}

/// Something that may stand as a factor of a product.
fn write_factor(e: &Expr, f: &mut impl Write) -> fmt::Result {
    match e {
        Expr::Sum(_) | Expr::Product(_) => {
            f.write_char('(')?;
            write_expr(e, f)?;
            f.write_char(')')
        }
        Expr::Neg(inner) => {
            f.write_str("(-")?;
            write_factor(inner, f)?;
            f.write_char(')')
        }
        Expr::Pow(b, n) => {
            write_primary(b, f)?;
            write!(f, "^{n}")
        }
        _ => write_primary(e, f),
    }
}

fn write_primary(e: &Expr, f: &mut impl Write) -> fmt::Result {
    match e {
        Expr::Const(c) => write_const(*c, f),
        Expr::Var(j) => write!(f, "z{}", j + 1),
        Expr::ConjVar(j) => write!(f, "cj(z{})", j + 1),
        Expr::Exp(a) => {
            f.write_str("exp(")?;
            write_expr(a, f)?;
            f.write_char(')')
        }
        Expr::Log(a) => {
            f.write_str("log(")?;
            write_expr(a, f)?;
            f.write_char(')')
        }
        _ => {
            f.write_char('(')?;
            write_expr(e, f)?;
            f.write_char(')')
        }
    }
}

fn write_const(c: Complex64, f: &mut impl Write) -> fmt::Result {
    // `{}` on f64 prints the shortest decimal that round-trips.
    let real = |x: f64, f: &mut dyn Write| -> fmt::Result {
        if x.is_sign_negative() && x != 0.0 {
            write!(f, "(-{})", -x)
        } else {
            write!(f, "{}", x.abs())
        }
    };
    if c.im == 0.0 {
        return real(c.re, f);
    }
    if c.re == 0.0 && c.im == 1.0 {
        return f.write_char('i');
    }
    f.write_char('(')?;
    if c.re != 0.0 {
        if c.re < 0.0 {
            write!(f, "-{} ", -c.re)?;
        } else {
            write!(f, "{} ", c.re)?;
        }
        f.write_str(if c.im < 0.0 { "- " } else { "+ " })?;
        write!(f, "{}*i", c.im.abs())?;
    } else if c.im < 0.0 {
        write!(f, "-{}*i", -c.im)?;
    } else {
        write!(f, "{}*i", c.im)?;
    }
    f.write_char(')')
}

#[cfg(test)]
mod tests {
    use super::super::parse_expression;

    #[test]
    fn prints_readable_text() {
        let e = parse_expression("z1*cj(z1) - 0.5*exp(z2)^2", 2).unwrap();
        assert_eq!(e.to_string(), "z1*cj(z1) - 0.5*exp(z2)^2");
    }
}
