//! The projective line as max-norm-normalized pairs, its sphere model and a
//! geodesic triangulation of the sphere.

use num_complex::Complex64;
use serde::Serialize;

/// `[α : β]` with the larger-magnitude coordinate scaled to exactly 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuotientPoint {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    /// 0 when the representative has `α = 1`, 1 when `β = 1`.
    pub chart: u8,
}

impl QuotientPoint {
    /// `None` for `(0, 0)` or non-finite input.
    pub fn new(alpha: Complex64, beta: Complex64) -> Option<Self> {
        if !(alpha.is_finite() && beta.is_finite()) || (alpha.norm() == 0.0 && beta.norm() == 0.0) {
            return None;
        }
        let (a, b, chart) = if alpha.norm() >= beta.norm() {
            (Complex64::new(1.0, 0.0), beta / alpha, 0)
        } else {
            (alpha / beta, Complex64::new(1.0, 0.0), 1)
        };
        Some(QuotientPoint {
            alpha: [a.re, a.im],
            beta: [b.re, b.im],
            chart,
        })
    }

    pub fn coords(&self) -> (Complex64, Complex64) {
        (
            Complex64::new(self.alpha[0], self.alpha[1]),
            Complex64::new(self.beta[0], self.beta[1]),
        )
    }

    /// Affine coordinate in the recorded chart: `β/α` for chart 0, `α/β`
    /// for chart 1. Its magnitude is at most 1.
    pub fn chart_coordinate(&self) -> Complex64 {
        let (a, b) = self.coords();
        if self.chart == 0 {
            b
        } else {
            a
        }
    }

    /// Affine coordinate in a given chart, `None` on that chart's pole.
    pub fn in_chart(&self, chart: u8) -> Option<Complex64> {
        let (a, b) = self.coords();
        let (num, den) = if chart == 0 { (b, a) } else { (a, b) };
        (den.norm() > 0.0).then(|| num / den)
    }

    pub fn from_chart(chart: u8, s: Complex64) -> Option<Self> {
        let one = Complex64::new(1.0, 0.0);
        if chart == 0 {
            Self::new(one, s)
        } else {
            Self::new(s, one)
        }
    }

    /// Chordal distance `|α₁β₂ − α₂β₁| / (‖·‖‖·‖)`, in `[0, 1]`.
    pub fn distance(&self, other: &QuotientPoint) -> f64 {
        let (a1, b1) = self.coords();
        let (a2, b2) = other.coords();
        let n1 = (a1.norm_sqr() + b1.norm_sqr()).sqrt();
        let n2 = (a2.norm_sqr() + b2.norm_sqr()).sqrt();
        (a1 * b2 - a2 * b1).norm() / (n1 * n2)
    }

    /// Unit-sphere model `(2 Re αβ̄, 2 Im αβ̄, |α|² − |β|²) / (|α|² + |β|²)`.
    pub fn to_sphere(&self) -> [f64; 3] {
        let (a, b) = self.coords();
        let n = a.norm_sqr() + b.norm_sqr();
        let ab = a * b.conj();
        [
            2.0 * ab.re / n,
            2.0 * ab.im / n,
            (a.norm_sqr() - b.norm_sqr()) / n,
        ]
    }

    pub fn from_sphere(x: [f64; 3]) -> Option<Self> {
        let [x0, y0, z0] = x;
        let r = (x0 * x0 + y0 * y0 + z0 * z0).sqrt();
        if !(r > 0.0) {
            return None;
        }
        let (x0, y0, z0) = (x0 / r, y0 / r, z0 / r);
        if z0 >= 0.0 {
            let a = ((1.0 + z0) / 2.0).sqrt();
            Self::new(Complex64::new(a, 0.0), Complex64::new(x0, -y0) / (2.0 * a))
        } else {
            let b = ((1.0 - z0) / 2.0).sqrt();
            Self::new(Complex64::new(x0, y0) / (2.0 * b), Complex64::new(b, 0.0))
        }
    }
}

/// Geodesic sphere: subdivided icosahedron with outward-oriented faces.
#[derive(Debug, Clone)]
pub struct Icosphere {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

impl Icosphere {
    pub fn new(level: u32) -> Icosphere {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<[f64; 3]> = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ]
        .iter()
        .map(|v| unit(*v))
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut cache = std::collections::HashMap::new();
            let mut mid = |a: usize, b: usize, vs: &mut Vec<[f64; 3]>| {
                *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    let (p, q) = (vs[a], vs[b]);
                    vs.push(unit([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                    vs.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        Icosphere { vertices, faces }
    }
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Signed area of the geodesic triangle with unit vertices `a, b, c`
/// (Van Oosterom–Strackee), positive for counter-clockwise seen from outside.
pub fn signed_spherical_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let num = dot(a, cross(b, c));
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}
