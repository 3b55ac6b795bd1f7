use super::{normalize, Expr};

/// Symbolic Wirtinger derivative `∂e/∂z_j` (`conjugate = false`) or
/// `∂e/∂cj(z_j)` (`conjugate = true`), in normal form.
pub fn wirtinger_diff(e: &Expr, j: usize, conjugate: bool) -> Expr {
    normalize(&raw_diff(e, j, conjugate))
}

fn raw_diff(e: &Expr, j: usize, conjugate: bool) -> Expr {
    match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Var(k) => indicator(!conjugate && *k == j),
        Expr::ConjVar(k) => indicator(conjugate && *k == j),
        Expr::Sum(cs) => Expr::Sum(cs.iter().map(|c| raw_diff(c, j, conjugate)).collect()),
        Expr::Product(cs) => {
            // Leibniz: sum over the differentiated factor
            let terms = (0..cs.len())
                .map(|k| {
                    let mut fs = cs.clone();
                    fs[k] = raw_diff(&cs[k], j, conjugate);
                    Expr::Product(fs)
                })
                .collect();
            Expr::Sum(terms)
        }
        Expr::Pow(b, n) => {
            if *n == 0 {
                return Expr::zero();
            }
            Expr::Product(vec![
                Expr::real(*n as f64),
                Expr::Pow(b.clone(), n - 1),
                raw_diff(b, j, conjugate),
            ])
        }
        Expr::Neg(a) => Expr::Neg(Box::new(raw_diff(a, j, conjugate))),
        Expr::Exp(a) => Expr::Product(vec![e.clone(), raw_diff(a, j, conjugate)]),
        Expr::Log(a) => Expr::Product(vec![Expr::Pow(a.clone(), -1), raw_diff(a, j, conjugate)]),
    }
}

fn indicator(on: bool) -> Expr {
    if on {
        Expr::one()
    } else {
        Expr::zero()
    }
}
