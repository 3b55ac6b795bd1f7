use super::Expr;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Parse an expression in the potential grammar.
///
/// Grammar (whitespace insignificant):
///
/// ```text
/// sum     := term (('+' | '-') term)*
/// term    := unary ('*' unary)*
/// unary   := '-' unary | power
/// power   := primary ('^' '-'? integer)?
/// primary := number | 'i' | 'z'[1-9] | ('cj' | 'exp' | 'log') '(' sum ')' | '(' sum ')'
/// ```
///
/// `cj(...)` of a compound expression is pushed down to the leaves. Positions
/// in syntax errors are zero-based byte offsets into `text`.
pub fn parse_expression(text: &str, dim: usize) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        dim,
    };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                let t = self.term()?;
                terms.push(Expr::neg(t));
            } else {
                break;
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut factors = vec![self.unary()?];
        while self.eat(b'*') {
            factors.push(self.unary()?);
        }
        Ok(Expr::product(factors))
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            let u = self.unary()?;
            return Ok(Expr::neg(u));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let negative = self.eat(b'-');
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected integer exponent"));
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let n: i32 = digits.parse().map_err(|_| Error::Syntax {
                pos: start,
                msg: "exponent out of range".into(),
            })?;
            return Ok(Expr::pow(base, if negative { -n } else { n }));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let c = match self.peek() {
            Some(c) => c,
            None => return Err(self.err("unexpected end of input")),
        };
        match c {
            b'(' => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            b'0'..=b'9' | b'.' => self.number(),
            b'a'..=b'z' => self.word(),
            _ => Err(self.err(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // optional exponent, e.g. 1e-20
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len()
                && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            let digits_start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits_start == self.pos {
                // `e` belonged to a following word such as `exp`; not valid here anyway
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let x: f64 = text.parse().map_err(|_| Error::Syntax {
            pos: start,
            msg: format!("invalid number `{text}`"),
        })?;
        Ok(Expr::real(x))
    }

    fn word(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let w = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match w {
            "i" => Ok(Expr::Const(Complex64::new(0.0, 1.0))),
            "cj" | "exp" | "log" => {
                self.expect(b'(')?;
                let arg = self.sum()?;
                self.expect(b')')?;
                Ok(match w {
                    "cj" => fold_conj(arg),
                    "exp" => Expr::exp(arg),
                    _ => Expr::log(arg),
                })
            }
            _ if w.len() == 2
                && w.as_bytes()[0] == b'z'
                && (b'1'..=b'9').contains(&w.as_bytes()[1]) =>
            {
                let index = (w.as_bytes()[1] - b'0') as usize;
                if index > self.dim {
                    return Err(Error::VariableIndex {
                        index,
                        dim: self.dim,
                    });
                }
                Ok(Expr::Var(index - 1))
            }
            _ => Err(Error::Syntax {
                pos: start,
                msg: format!("unknown identifier `{w}`"),
            }),
        }
    }
}

fn fold_conj(e: Expr) -> Expr {
    e.conj()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_norm_squared() {
        let e = parse_expression("z1*cj(z1) + z2*cj(z2)", 2).unwrap();
        assert_eq!(
            e,
            Expr::Sum(vec![
                Expr::Product(vec![Expr::Var(0), Expr::ConjVar(0)]),
                Expr::Product(vec![Expr::Var(1), Expr::ConjVar(1)]),
            ])
        );
    }

    #[test]
    fn dangling_operator_reports_position() {
        let err = parse_expression("z1 + ", 1).unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                pos: 5,
                msg: "unexpected end of input".into()
            }
        );
    }

    #[test]
    fn five_factor_product() {
        let e = parse_expression("0.1*z1*cj(z1)*z2*cj(z2)", 2).unwrap();
        match e {
            Expr::Product(fs) => assert_eq!(fs.len(), 5),
            other => panic!("expected product, got {other:?}"),
        }
    }

    #[test]
    fn variable_beyond_dimension() {
        assert_eq!(
            parse_expression("z1 + z3", 2).unwrap_err(),
            Error::VariableIndex { index: 3, dim: 2 }
        );
    }

    #[test]
    fn conj_pushed_to_leaves() {
        let e = parse_expression("cj(2*i*z1^2)", 1).unwrap();
        assert_eq!(
            e,
            Expr::Product(vec![
                Expr::real(2.0),
                Expr::Const(Complex64::new(0.0, -1.0)),
                Expr::Pow(Box::new(Expr::ConjVar(0)), 2),
            ])
        );
    }

    #[test]
    fn rejects_unknown_words_and_garbage() {
        assert!(matches!(
            parse_expression("sin(z1)", 1),
            Err(Error::Syntax { pos: 0, .. })
        ));
        assert!(matches!(
            parse_expression("z1 $", 1),
            Err(Error::Syntax { pos: 3, .. })
        ));
        assert!(matches!(
            parse_expression("z1^", 1),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_expression("(z1", 1),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn constants_fold_and_exponents_parse() {
        assert_eq!(parse_expression("2*3 - 1", 0).unwrap(), Expr::real(5.0));
        assert_eq!(parse_expression("1e-3", 0).unwrap(), Expr::real(1e-3));
        assert_eq!(
            parse_expression("z1^-2", 1).unwrap(),
            Expr::Pow(Box::new(Expr::Var(0)), -2)
        );
    }
}
