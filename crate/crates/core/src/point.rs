//! Points and tangent vectors of `C^d`, with the realification
//! `C^d ≅ R^{2d}` ordered as `(Re z_1, Im z_1, Re z_2, Im z_2, ...)`.
//!
//! The real inner product is `<a, b> = Re Σ a_j conj(b_j)` and the complex
//! structure is `J v = i v`.

use num_complex::Complex64;

pub fn real_inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// The complex structure `J`.
pub fn apply_j(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|z| z * Complex64::i()).collect()
}

pub fn to_real(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn from_real(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect()
}

pub fn scale(v: &[Complex64], s: Complex64) -> Vec<Complex64> {
    v.iter().map(|z| z * s).collect()
}
