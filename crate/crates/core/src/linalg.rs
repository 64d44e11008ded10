//! 2×2 linear algebra on the punctured plane.
//!
//! Vectors carry the sup-norm `|v| = max(|x|, |y|)`. Matrices carry one of
//! three norms; the default [`MatrixNorm::MaxEntry`] makes the star product
//! `v ⋆ u` equal to `|v|·|u|` exactly.
//!
//! The section `psi` lifts a plane point to a group element with
//! `psi(v)·(1,0) = v`, and the cocycle `c_u(g)` is read off the unipotent
//! matrix `psi(g u)^{-1} g psi(u)`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerance for pure 2×2 linear algebra.
pub const LINALG_TOL: f64 = 1e-12;
/// Tolerance for identities composed of several matrix products.
pub const COMPOSED_TOL: f64 = 1e-9;
/// Plane points with sup-norm below this are treated as the origin.
pub const DEGENERATE_NORM: f64 = 1e-300;

/// The base point `u₀ = (1, 0)` whose stabilizer is the unipotent group `{h_s}`.
pub const U0: Vec2 = Vec2 { x: 1.0, y: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Sup-norm `max(|x|, |y|)`.
    #[inline]
    pub fn sup_norm(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }

    #[inline]
    pub fn euclid_norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn scale(self, c: f64) -> Self {
        Vec2::new(c * self.x, c * self.y)
    }

    pub fn is_degenerate(self) -> bool {
        self.sup_norm() < DEGENERATE_NORM
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v.scale(self)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, c: f64) -> Vec2 {
        Vec2::new(self.x / c, self.y / c)
    }
}

/// Sup-norm of a plane vector.
#[inline]
pub fn sup_norm(v: Vec2) -> f64 {
    v.sup_norm()
}

/// Real 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);
    /// The nilpotent `[[0, 1], [0, 0]]`.
    pub const NILPOTENT: Mat2 = Mat2::new(0.0, 1.0, 0.0, 0.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Inverse of a general invertible matrix.
    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return domain("singular matrix");
        }
        Ok(Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    /// Inverse assuming `det = 1` (adjugate).
    #[inline]
    pub fn inverse_sl2(&self) -> Mat2 {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    #[inline]
    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(s * self.a, s * self.b, s * self.c, s * self.d)
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        (self.a - o.a)
            .abs()
            .max((self.b - o.b).abs())
            .max((self.c - o.c).abs())
            .max((self.d - o.d).abs())
    }

    pub fn norm(&self, kind: MatrixNorm) -> f64 {
        mat_norm(self, kind)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        self.apply(v)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

/// Choice of norm on M₂(ℝ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixNorm {
    /// `max |m_ij|`
    #[default]
    MaxEntry,
    /// `sqrt(Σ m_ij²)`
    Frobenius,
    /// Largest singular value.
    Operator2,
}

impl MatrixNorm {
    pub const ALL: [MatrixNorm; 3] = [MatrixNorm::MaxEntry, MatrixNorm::Frobenius, MatrixNorm::Operator2];

    pub fn name(self) -> &'static str {
        match self {
            MatrixNorm::MaxEntry => "max_entry",
            MatrixNorm::Frobenius => "frobenius",
            MatrixNorm::Operator2 => "operator2",
        }
    }

    /// Constant `K` with `‖AB‖ ≤ K ‖A‖ ‖B‖`.
    pub fn submultiplicative_constant(self) -> f64 {
        match self {
            MatrixNorm::MaxEntry => 2.0,
            MatrixNorm::Frobenius | MatrixNorm::Operator2 => 1.0,
        }
    }
}

impl std::str::FromStr for MatrixNorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_entry" | "max" | "maxentry" => Ok(MatrixNorm::MaxEntry),
            "frobenius" | "l2" => Ok(MatrixNorm::Frobenius),
            "operator2" | "operator" | "spectral" => Ok(MatrixNorm::Operator2),
            other => domain(format!("unknown matrix norm `{other}`")),
        }
    }
}

pub fn mat_norm(m: &Mat2, kind: MatrixNorm) -> f64 {
    match kind {
        MatrixNorm::MaxEntry => m.a.abs().max(m.b.abs()).max(m.c.abs()).max(m.d.abs()),
        MatrixNorm::Frobenius => m.a.hypot(m.b).hypot(m.c.hypot(m.d)),
        MatrixNorm::Operator2 => {
            // σ_max = (|(a+d, c−b)| + |(a−d, c+b)|) / 2
            let p = (m.a + m.d).hypot(m.c - m.b);
            let q = (m.a - m.d).hypot(m.c + m.b);
            0.5 * (p + q)
        }
    }
}

/// The star product `v ⋆ u = ‖[[−u₂v₁, u₁v₁], [−u₂v₂, u₁v₂]]‖`.
#[inline]
pub fn star(v: Vec2, u: Vec2, norm: MatrixNorm) -> f64 {
    match norm {
        // rank one: max-entry norm is the product of sup-norms
        MatrixNorm::MaxEntry => v.sup_norm() * u.sup_norm(),
        _ => mat_norm(&star_matrix(v, u), norm),
    }
}

pub fn star_matrix(v: Vec2, u: Vec2) -> Mat2 {
    Mat2::new(-u.y * v.x, u.x * v.x, -u.y * v.y, u.x * v.y)
}

/// The section `Ψ(x, y) = [[x, −y/(x²+y²)], [y, x/(x²+y²)]]`.
pub fn psi(v: Vec2) -> Result<Mat2> {
    if v.is_degenerate() || !v.x.is_finite() || !v.y.is_finite() {
        return domain("psi is undefined at the origin");
    }
    Ok(psi_unchecked(v))
}

#[inline]
pub(crate) fn psi_unchecked(v: Vec2) -> Mat2 {
    let n = v.x * v.x + v.y * v.y;
    Mat2::new(v.x, -v.y / n, v.y, v.x / n)
}

/// Inverse of `Ψ(v)` without forming `Ψ(v)` first.
#[inline]
pub(crate) fn psi_inv_unchecked(v: Vec2) -> Mat2 {
    let n = v.x * v.x + v.y * v.y;
    Mat2::new(v.x / n, v.y / n, -v.y, v.x)
}

/// Unipotent `h_s = [[1, s], [0, 1]]`.
pub fn horocycle(s: f64) -> Mat2 {
    Mat2::new(1.0, s, 0.0, 1.0)
}

/// Diagonal `a_t = diag(e^{t/2}, e^{-t/2})`.
pub fn geodesic(t: f64) -> Mat2 {
    let e = (0.5 * t).exp();
    Mat2::new(e, 0.0, 0.0, 1.0 / e)
}

/// Rotation `r_θ`.
pub fn rotation(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// One-parameter subgroups of SL(2,ℝ).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Horocycle,
    Geodesic,
    Rotation,
}

pub fn flow_matrix(flow: Flow, s: f64) -> Mat2 {
    match flow {
        Flow::Horocycle => horocycle(s),
        Flow::Geodesic => geodesic(s),
        Flow::Rotation => rotation(s),
    }
}

/// The unipotent matrix `Ψ(g u)^{-1} g Ψ(u)`.
pub fn cocycle_matrix(u: Vec2, g: &Mat2) -> Result<Mat2> {
    if u.is_degenerate() {
        return domain("cocycle base point is the origin");
    }
    let gu = g.apply(u);
    if gu.is_degenerate() {
        return domain("g·u is the origin");
    }
    Ok(psi_inv_unchecked(gu) * *g * psi_unchecked(u))
}

/// The cocycle `c_u(g)`: the upper-right entry of `Ψ(g u)^{-1} g Ψ(u)`,
/// after checking that matrix is upper unipotent.
pub fn cocycle(u: Vec2, g: &Mat2) -> Result<f64> {
    let m = cocycle_matrix(u, g)?;
    let gu = g.apply(u);
    let scale = mat_norm(&psi_inv_unchecked(gu), MatrixNorm::MaxEntry)
        * mat_norm(g, MatrixNorm::MaxEntry)
        * mat_norm(&psi_unchecked(u), MatrixNorm::MaxEntry);
    let deviation = (m.a - 1.0).abs().max((m.d - 1.0).abs()).max(m.c.abs());
    if deviation > COMPOSED_TOL * scale.max(1.0) {
        return Err(Error::NotUnipotent { deviation });
    }
    Ok(m.b)
}

/// `‖g‖ − |c_u(g)|·(g u ⋆ u)`; bounded in absolute value by `D(u, f)`
/// whenever `g u ∈ supp f`.
pub fn norm_estimate_gap(u: Vec2, g: &Mat2, norm: MatrixNorm) -> Result<f64> {
    let c = cocycle(u, g)?;
    Ok(mat_norm(g, norm) - c.abs() * star(g.apply(u), u, norm))
}
