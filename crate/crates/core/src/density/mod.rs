//! Test functions on the punctured plane and the quantities built from them:
//! support radii, the density integral `∫ f(v)/(v⋆u) dv`, `D₀`, `D`, `B`,
//! and a sampled Hölder norm.
//!
//! Integrals are taken in sup-norm shell coordinates: every `v ≠ 0` is
//! `ρ·e(s)` with `ρ = |v|` and `e(s)` running along one of the four sides of
//! the unit square, so `dv = ρ dρ ds`.

mod lift;
mod partition;

pub use lift::{bar_f_eval, boundary_lemma_check, boundary_lemma_check_with, lift_eval, Bump, BoundaryReport, BUMP_MASS};
pub use partition::{build_partition, kappa, PartitionPiece, PartitionReport};

use std::cell::RefCell;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{mat_norm, psi_inv_unchecked, psi_unchecked, star, MatrixNorm, Vec2};
use crate::quadrature::{integrate, QuadOptions};
use crate::report::{fmt_f64, Table};

/// A function on the punctured plane with support bounded away from the
/// origin and star-shaped along rays (each ray meets it in one interval).
pub trait PlaneFunction: Sync {
    fn eval(&self, v: Vec2) -> f64;

    /// Closure of `{ρ > 0 : f(ρ·dir) ≠ 0}`, or `None` if the ray misses the
    /// support.
    fn radial_extent(&self, dir: Vec2) -> Option<(f64, f64)>;

    /// Radii along `dir` where `ρ ↦ f(ρ·dir)` is not smooth.
    fn radial_breaks(&self, _dir: Vec2) -> Vec<f64> {
        Vec::new()
    }

    /// Directions across which the radial extent is not smooth.
    fn direction_breaks(&self) -> Vec<Vec2> {
        Vec::new()
    }
}

/// One side of the unit sup-norm square, parametrised by `s ∈ [−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Top,
    Left,
    Bottom,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Right, Side::Top, Side::Left, Side::Bottom];

    /// Point of the unit square: `(1, s)`, `(−s, 1)`, `(−1, −s)`, `(s, −1)`.
    pub fn dir(self, s: f64) -> Vec2 {
        match self {
            Side::Right => Vec2::new(1.0, s),
            Side::Top => Vec2::new(-s, 1.0),
            Side::Left => Vec2::new(-1.0, -s),
            Side::Bottom => Vec2::new(s, -1.0),
        }
    }

    /// Parameter of `w`'s direction on this side, if the ray through `w`
    /// crosses it.
    pub fn param(self, w: Vec2) -> Option<f64> {
        let s = match self {
            Side::Right if w.x > 0.0 => w.y / w.x,
            Side::Top if w.y > 0.0 => -w.x / w.y,
            Side::Left if w.x < 0.0 => w.y / w.x,
            Side::Bottom if w.y < 0.0 => -w.x / w.y,
            _ => return None,
        };
        (-1.0..=1.0).contains(&s).then_some(s)
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
            Side::Bottom => "bottom",
        }
    }
}

/// Shape of a test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionKind {
    /// Indicator of `inner ≤ |v| ≤ outer`.
    IndicatorAnnulus { inner: f64, outer: f64 },
    /// Indicator of `[x0, x1] × [y0, y1]`.
    IndicatorBox { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// `exp(1 − 1/(1 − s²))` with `s = |v − center|₂ / radius`.
    SmoothBump { center: Vec2, radius: f64 },
    /// Tent in `log|v|` on `[inner, outer]`, peaking at `√(inner·outer)`.
    RadialHat { inner: f64, outer: f64 },
}

fn one() -> f64 {
    1.0
}

/// `v ↦ amplitude · shape(dilation · v)`, with a Hölder exponent `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunction {
    pub kind: FunctionKind,
    #[serde(default = "one")]
    pub theta: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub dilation: f64,
}

impl TestFunction {
    pub fn new(kind: FunctionKind) -> Result<Self> {
        let f = TestFunction { kind, theta: 1.0, amplitude: 1.0, dilation: 1.0 };
        f.validate()?;
        Ok(f)
    }

    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        Self::new(FunctionKind::IndicatorAnnulus { inner, outer })
    }

    pub fn indicator_box(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        Self::new(FunctionKind::IndicatorBox { x0, x1, y0, y1 })
    }

    pub fn bump(center: Vec2, radius: f64) -> Result<Self> {
        Self::new(FunctionKind::SmoothBump { center, radius })
    }

    pub fn hat(inner: f64, outer: f64) -> Result<Self> {
        Self::new(FunctionKind::RadialHat { inner, outer })
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        self.theta = theta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_amplitude(mut self, a: f64) -> Result<Self> {
        self.amplitude = a;
        self.validate()?;
        Ok(self)
    }

    /// `v ↦ f(λ v)`.
    pub fn dilated(mut self, lambda: f64) -> Result<Self> {
        self.dilation *= lambda;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64| x.is_finite();
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return domain(format!("theta must lie in (0, 1], got {}", self.theta));
        }
        if !finite(self.amplitude) {
            return domain("amplitude must be finite");
        }
        if !(self.dilation > 0.0 && finite(self.dilation)) {
            return domain("dilation must be positive");
        }
        match self.kind {
            FunctionKind::IndicatorAnnulus { inner, outer } | FunctionKind::RadialHat { inner, outer } => {
                if !(inner > 0.0 && outer > inner && finite(outer)) {
                    return domain(format!("need 0 < inner < outer, got [{inner}, {outer}]"));
                }
            }
            FunctionKind::IndicatorBox { x0, x1, y0, y1 } => {
                if !(x0 < x1 && y0 < y1 && [x0, x1, y0, y1].into_iter().all(finite)) {
                    return domain("box needs x0 < x1 and y0 < y1");
                }
                if x0 <= 0.0 && 0.0 <= x1 && y0 <= 0.0 && 0.0 <= y1 {
                    return domain("box support must exclude the origin");
                }
            }
            FunctionKind::SmoothBump { center, radius } => {
                if !(radius > 0.0 && finite(center.x) && finite(center.y)) {
                    return domain("bump needs a positive radius");
                }
                if center.euclid_norm() <= radius {
                    return domain("bump support must exclude the origin");
                }
            }
        }
        Ok(())
    }

    /// Indicators are not Hölder; they are admitted with a formal exponent.
    pub fn is_holder(&self) -> bool {
        matches!(self.kind, FunctionKind::SmoothBump { .. } | FunctionKind::RadialHat { .. })
    }

    fn shape(&self, w: Vec2) -> f64 {
        match self.kind {
            FunctionKind::IndicatorAnnulus { inner, outer } => {
                let n = w.sup_norm();
                f64::from(u8::from(inner <= n && n <= outer))
            }
            FunctionKind::IndicatorBox { x0, x1, y0, y1 } => f64::from(u8::from(x0 <= w.x && w.x <= x1 && y0 <= w.y && w.y <= y1)),
            FunctionKind::SmoothBump { center, radius } => bump_profile((w - center).euclid_norm() / radius),
            FunctionKind::RadialHat { inner, outer } => {
                let h = 0.5 * (outer / inner).ln();
                let m = inner.ln() + h;
                let n = w.sup_norm();
                if n <= 0.0 {
                    return 0.0;
                }
                (1.0 - (n.ln() - m).abs() / h).max(0.0)
            }
        }
    }

    /// `(r(f), R(f))`: inner and outer sup-norm radii of the support.
    pub fn support_radii(&self) -> (f64, f64) {
        let (r, big_r) = match self.kind {
            FunctionKind::IndicatorAnnulus { inner, outer } | FunctionKind::RadialHat { inner, outer } => (inner, outer),
            FunctionKind::IndicatorBox { x0, x1, y0, y1 } => {
                let near = |a: f64, b: f64| if a <= 0.0 && 0.0 <= b { 0.0 } else { a.abs().min(b.abs()) };
                (near(x0, x1).max(near(y0, y1)), x0.abs().max(x1.abs()).max(y0.abs()).max(y1.abs()))
            }
            FunctionKind::SmoothBump { center, radius } => {
                let big = center.x.abs().max(center.y.abs()) + radius;
                // smallest s whose square [−s, s]² meets the disc
                let dist = |s: f64| Vec2::new((center.x.abs() - s).max(0.0), (center.y.abs() - s).max(0.0)).euclid_norm();
                let (mut lo, mut hi) = (0.0, center.sup_norm());
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if dist(mid) <= radius {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                (hi, big)
            }
        };
        (r / self.dilation, big_r / self.dilation)
    }

    /// `v(f) = R(f)/r(f)`.
    pub fn spread(&self) -> f64 {
        let (r, big_r) = self.support_radii();
        big_r / r
    }

    /// Analytic upper bound for the θ-Hölder norm
    /// `sup|f| + (∫ f²/|v|²)^{1/2} + sup_{0<|x−y|≤|x|/2} |x|^θ|f(x)−f(y)|/|x−y|^θ`;
    /// infinite for indicators.
    pub fn holder_norm_bound(&self) -> f64 {
        let a = self.amplitude.abs();
        if a == 0.0 {
            return 0.0;
        }
        let th = self.theta;
        match self.kind {
            FunctionKind::IndicatorAnnulus { .. } | FunctionKind::IndicatorBox { .. } => f64::INFINITY,
            FunctionKind::RadialHat { inner, outer } => {
                // |f(x) − f(y)| ≤ min(A, 2A|x−y|/(h|x|)) when |x − y| ≤ |x|/2
                let h = 0.5 * (outer / inner).ln();
                a * (1.0 + (8.0 * (outer / inner).ln()).sqrt() + (2.0 / h).powf(th))
            }
            FunctionKind::SmoothBump { center, radius } => {
                // the bound is invariant under dilation, so use the undilated shape
                let undilated = TestFunction { dilation: 1.0, ..self.clone() };
                let (r, big_r) = undilated.support_radii();
                let _ = center;
                let l2 = a * std::f64::consts::PI.sqrt() * radius / r;
                // Euclidean Lipschitz constant, and |·|₂ ≤ √2 |·|
                let lip = 2f64.sqrt() * a * bump_profile_lipschitz() / radius;
                a + l2 + (2.0 * big_r).powf(th) * a.powf(1.0 - th) * lip.powf(th)
            }
        }
    }
}

impl PlaneFunction for TestFunction {
    fn eval(&self, v: Vec2) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.amplitude * self.shape(v.scale(self.dilation))
    }

    fn radial_extent(&self, dir: Vec2) -> Option<(f64, f64)> {
        if self.amplitude == 0.0 || dir.is_degenerate() {
            return None;
        }
        let (lo, hi) = match self.kind {
            FunctionKind::IndicatorAnnulus { inner, outer } | FunctionKind::RadialHat { inner, outer } => {
                let n = dir.sup_norm();
                (inner / n, outer / n)
            }
            FunctionKind::IndicatorBox { x0, x1, y0, y1 } => {
                let mut lo = 0.0f64;
                let mut hi = f64::INFINITY;
                for (d, a, b) in [(dir.x, x0, x1), (dir.y, y0, y1)] {
                    if d == 0.0 {
                        if !(a <= 0.0 && 0.0 <= b) {
                            return None;
                        }
                    } else {
                        let (t0, t1) = if d > 0.0 { (a / d, b / d) } else { (b / d, a / d) };
                        lo = lo.max(t0);
                        hi = hi.min(t1);
                    }
                }
                if lo > hi {
                    return None;
                }
                (lo, hi)
            }
            FunctionKind::SmoothBump { center, radius } => {
                // |ρ e − c|₂² = radius²
                let ee = dir.x * dir.x + dir.y * dir.y;
                let ec = dir.x * center.x + dir.y * center.y;
                let cc = center.x * center.x + center.y * center.y;
                let disc = ec * ec - ee * (cc - radius * radius);
                if disc <= 0.0 || ec <= 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                // stable pair of roots
                let hi = (ec + sq) / ee;
                let lo = (cc - radius * radius) / (ee * hi);
                (lo, hi)
            }
        };
        Some((lo / self.dilation, hi / self.dilation))
    }

    fn radial_breaks(&self, dir: Vec2) -> Vec<f64> {
        match self.kind {
            FunctionKind::RadialHat { inner, outer } => vec![(inner * outer).sqrt() / dir.sup_norm() / self.dilation],
            _ => Vec::new(),
        }
    }

    fn direction_breaks(&self) -> Vec<Vec2> {
        match self.kind {
            FunctionKind::IndicatorBox { x0, x1, y0, y1 } => {
                vec![Vec2::new(x0, y0), Vec2::new(x0, y1), Vec2::new(x1, y0), Vec2::new(x1, y1)]
            }
            FunctionKind::SmoothBump { center, radius } => {
                let n = center.euclid_norm();
                let phi = center.y.atan2(center.x);
                let w = (radius / n).asin();
                vec![
                    Vec2::new((phi - w).cos(), (phi - w).sin()),
                    Vec2::new((phi + w).cos(), (phi + w).sin()),
                    center,
                ]
            }
            _ => Vec::new(),
        }
    }
}

/// `exp(1 − 1/(1 − s²))` on `|s| < 1`, zero elsewhere; peak value 1.
pub fn bump_profile(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        return 0.0;
    }
    (1.0 - 1.0 / (1.0 - s * s)).exp()
}

/// `max |d/ds exp(1 − 1/(1 − s²))|`, found by golden-section search.
pub fn bump_profile_lipschitz() -> f64 {
    static L: OnceLock<f64> = OnceLock::new();
    *L.get_or_init(|| {
        let deriv = |s: f64| {
            let w = 1.0 - s * s;
            2.0 * s / (w * w) * bump_profile(s)
        };
        let best = (1..10_000).map(|i| i as f64 / 10_000.0).max_by(|a, b| deriv(*a).total_cmp(&deriv(*b))).unwrap();
        let (a, b) = golden_max(&deriv, best - 1e-4, best + 1e-4);
        deriv(0.5 * (a + b)) * (1.0 + 1e-9)
    })
}

/// Shrinks `[a, b]` around a maximum of a unimodal `h`.
fn golden_max(h: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut hc, mut hd) = (h(c), h(d));
    for _ in 0..80 {
        if hc >= hd {
            b = d;
            d = c;
            hd = hc;
            c = b - g * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + g * (b - a);
            hd = h(d);
        }
    }
    (a, b)
}

/// Where the shell integration parameter `s` should be split on `side`.
fn side_breaks<F: PlaneFunction + ?Sized>(f: &F, side: Side) -> Vec<f64> {
    let mut b: Vec<f64> = f.direction_breaks().into_iter().filter_map(|w| side.param(w)).filter(|s| s.abs() < 1.0).collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// One leaf of the outer (angular) quadrature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub side: Side,
    pub s0: f64,
    pub s1: f64,
    pub estimate: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneIntegral {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub regions: Vec<Region>,
}

impl PlaneIntegral {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["side", "s0", "s1", "estimate", "error"]);
        for r in &self.regions {
            t.push(vec![r.side.name().into(), fmt_f64(r.s0), fmt_f64(r.s1), fmt_f64(r.estimate), fmt_f64(r.error)]);
        }
        t
    }
}

/// `∫ g(v) dv` over the support of `f`, in shell coordinates. `g` is
/// usually built from `f`; it is only evaluated where `f`'s radial extent
/// says the support lies.
pub fn plane_integral<F, G>(f: &F, g: G, tol: f64) -> Result<PlaneIntegral>
where
    F: PlaneFunction + ?Sized,
    G: Fn(Vec2) -> f64 + Sync,
{
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    let outer_tol = tol / 8.0;
    let inner_tol = tol / 100.0;
    let per_side: Vec<Result<(f64, f64, Vec<Region>)>> = Side::ALL
        .par_iter()
        .map(|&side| {
            let inner_err = RefCell::new(0.0f64);
            let inner_fail = RefCell::new(None::<Error>);
            let radial = |s: f64| -> f64 {
                let e = side.dir(s);
                let Some((lo, hi)) = f.radial_extent(e) else { return 0.0 };
                if !(hi > lo) {
                    return 0.0;
                }
                let breaks: Vec<f64> = f.radial_breaks(e).into_iter().filter(|b| *b > lo && *b < hi).collect();
                let opts = QuadOptions::abs(inner_tol);
                match integrate(|rho| g(e.scale(rho)) * rho, lo, hi, &breaks, &opts) {
                    Ok(r) => {
                        let mut m = inner_err.borrow_mut();
                        *m = m.max(r.error);
                        r.value
                    }
                    Err(err) => {
                        if let Error::QuadratureNotConverged { estimate, error, .. } = &err {
                            let mut m = inner_err.borrow_mut();
                            *m = m.max(*error);
                            inner_fail.borrow_mut().get_or_insert(err.clone());
                            return *estimate;
                        }
                        inner_fail.borrow_mut().get_or_insert(err);
                        0.0
                    }
                }
            };
            let breaks = side_breaks(f, side);
            let res = integrate(radial, -1.0, 1.0, &breaks, &QuadOptions::abs(outer_tol));
            if let Some(e) = inner_fail.into_inner() {
                return Err(e);
            }
            let res = res?;
            let regions = res
                .leaves
                .iter()
                .map(|&(a, b, est, err)| Region { side, s0: a, s1: b, estimate: est, error: err })
                .collect();
            Ok((res.value, res.error + 2.0 * inner_err.into_inner(), regions))
        })
        .collect();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut regions = Vec::new();
    for r in per_side {
        let (v, e, reg) = r?;
        value += v;
        error += e;
        regions.extend(reg);
    }
    if error > tol {
        return Err(Error::QuadratureNotConverged { estimate: value, error, tol });
    }
    Ok(PlaneIntegral { value, error, regions })
}

/// `∫ f(v)/(v⋆u) dv`.
pub fn density_integral<F: PlaneFunction + ?Sized>(f: &F, u: Vec2, norm: MatrixNorm, tol: f64) -> Result<PlaneIntegral> {
    if u.is_degenerate() {
        return domain("u must be nonzero");
    }
    plane_integral(f, |v| f.eval(v) / star(v, u, norm), tol)
}

/// Number of sample directions per side used by boundary searches.
const BOUNDARY_SAMPLES: usize = 1024;

/// Minimum and maximum of `h` over the boundary points `ρ_lo·e`, `ρ_hi·e`
/// of the support, sampled along each side and refined by golden-section
/// search around the best samples.
pub fn boundary_extremes<F, H>(f: &F, h: H) -> Result<(f64, f64)>
where
    F: PlaneFunction + ?Sized,
    H: Fn(Vec2) -> f64 + Sync,
{
    // value of h at either extent endpoint, as a function of (side, s)
    let endpoint = |side: Side, s: f64, upper: bool| -> Option<f64> {
        let e = side.dir(s);
        f.radial_extent(e).map(|(lo, hi)| h(e.scale(if upper { hi } else { lo })))
    };
    let per_side: Vec<(f64, f64)> = Side::ALL
        .par_iter()
        .map(|&side| {
            let mut ss: Vec<f64> = (0..=BOUNDARY_SAMPLES).map(|i| -1.0 + 2.0 * i as f64 / BOUNDARY_SAMPLES as f64).collect();
            ss.extend(side_breaks(f, side));
            ss.sort_by(f64::total_cmp);
            let mut best_min = f64::INFINITY;
            let mut best_max = f64::NEG_INFINITY;
            let step = 2.0 / BOUNDARY_SAMPLES as f64;
            let mut samples: Vec<(f64, bool, f64)> = Vec::new();
            for &s in &ss {
                for upper in [false, true] {
                    if let Some(v) = endpoint(side, s, upper) {
                        samples.push((s, upper, v));
                        best_min = best_min.min(v);
                        best_max = best_max.max(v);
                    }
                }
            }
            // refine around the eight best candidates each way
            let mut by_val = samples.clone();
            by_val.sort_by(|a, b| b.2.total_cmp(&a.2));
            for &(s, upper, _) in by_val.iter().take(8) {
                let hh = |t: f64| endpoint(side, t, upper).unwrap_or(f64::NEG_INFINITY);
                let (a, b) = golden_max(&hh, (s - step).max(-1.0), (s + step).min(1.0));
                best_max = best_max.max(hh(0.5 * (a + b)));
            }
            for &(s, upper, _) in by_val.iter().rev().take(8) {
                let hh = |t: f64| endpoint(side, t, upper).map_or(f64::NEG_INFINITY, |v| -v);
                let (a, b) = golden_max(&hh, (s - step).max(-1.0), (s + step).min(1.0));
                best_min = best_min.min(-hh(0.5 * (a + b)));
            }
            (best_min, best_max)
        })
        .collect();
    let lo = per_side.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = per_side.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return domain("function has empty support");
    }
    Ok((lo, hi))
}

/// `D(u, f) = sup_{x ∈ supp f} ‖Ψ(x)Ψ(u)⁻¹‖`.
pub fn distortion<F: PlaneFunction + ?Sized>(f: &F, u: Vec2, norm: MatrixNorm) -> Result<f64> {
    if u.is_degenerate() {
        return domain("u must be nonzero");
    }
    let pu_inv = psi_inv_unchecked(u);
    Ok(boundary_extremes(f, |x| mat_norm(&(psi_unchecked(x) * pu_inv), norm))?.1)
}

/// `(r^{(u)}(f), R^{(u)}(f))`: extremes of `v ⋆ u` over the support.
pub fn star_radii<F: PlaneFunction + ?Sized>(f: &F, u: Vec2, norm: MatrixNorm) -> Result<(f64, f64)> {
    if u.is_degenerate() {
        return domain("u must be nonzero");
    }
    boundary_extremes(f, |v| star(v, u, norm))
}

/// Default `δ₀` used when forming `B`.
pub const DEFAULT_DELTA0: f64 = 1.0 / 48.0;

/// Support quantities of `f` relative to `u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportMeta {
    pub r_f: f64,
    pub big_r_f: f64,
    pub r_u: f64,
    pub big_r_u: f64,
    /// `R^{(u)}/r^{(u)}`.
    pub v_u: f64,
    /// `max(R(f)/|u|, |u|/r(f))`.
    pub d0: f64,
    pub d: f64,
    /// `(R(f)/|u|)^{−θδ₀}(log v(f) + 1)`.
    pub b: f64,
    pub theta: f64,
    pub delta0: f64,
}

impl SupportMeta {
    pub fn d_over_d0(&self) -> f64 {
        self.d / self.d0
    }
}

pub fn compute_support_meta(f: &TestFunction, u: Vec2, norm: MatrixNorm, delta0: f64) -> Result<SupportMeta> {
    if u.is_degenerate() {
        return domain("u must be nonzero");
    }
    if f.amplitude == 0.0 {
        return domain("function has empty support");
    }
    let (r_f, big_r_f) = f.support_radii();
    let (r_u, big_r_u) = star_radii(f, u, norm)?;
    let d = distortion(f, u, norm)?;
    let nu = u.sup_norm();
    let d0 = (big_r_f / nu).max(nu / r_f);
    let b = (big_r_f / nu).powf(-f.theta * delta0) * ((big_r_f / r_f).ln() + 1.0);
    Ok(SupportMeta { r_f, big_r_f, r_u, big_r_u, v_u: big_r_u / r_u, d0, d, b, theta: f.theta, delta0 })
}

/// Sampled lower estimate of the θ-Hölder norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub sup: f64,
    pub l2: f64,
    pub seminorm: f64,
    pub total: f64,
    pub bound: f64,
}

/// Monte-Carlo lower estimate of
/// `sup|f| + (∫ f²/|v|²)^{1/2} + sup_{0<|x−y|≤|x|/2} |x|^θ|f(x)−f(y)|/|x−y|^θ`,
/// the supremum taken over the whole plane. Pairs are drawn with
/// `|x − y|` log-uniform down to `|x|/(2·samples)`.
pub fn holder_norm_estimate(f: &TestFunction, samples: usize, seed: u64) -> Result<HolderEstimate> {
    let bound = f.holder_norm_bound();
    if f.amplitude == 0.0 {
        return Ok(HolderEstimate { sup: 0.0, l2: 0.0, seminorm: 0.0, total: 0.0, bound });
    }
    let th = f.theta;
    let (r_f, big_r_f) = f.support_radii();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_dir = |rng: &mut ChaCha8Rng| Side::ALL[rng.gen_range(0..4)].dir(rng.gen_range(-1.0..=1.0));
    // sup |f| over a polar grid of the support
    let mut sup = 0.0f64;
    for side in Side::ALL {
        for i in 0..=256 {
            let e = side.dir(-1.0 + i as f64 / 128.0);
            if let Some((lo, hi)) = f.radial_extent(e) {
                for j in 0..=64 {
                    sup = sup.max(f.eval(e.scale(lo + (hi - lo) * j as f64 / 64.0)).abs());
                }
            }
        }
    }
    let l2 = plane_integral(f, |v| f.eval(v).powi(2) / v.sup_norm().powi(2), 1e-8)?.value.sqrt();
    let (x_lo, x_hi) = (r_f * 2.0 / 3.0, 2.0 * big_r_f);
    let log_n = (samples.max(2) as f64).ln();
    let mut seminorm = 0.0f64;
    for _ in 0..samples {
        let e = random_dir(&mut rng);
        let x = e.scale(x_lo * (x_hi / x_lo).powf(rng.gen::<f64>()));
        let nx = x.sup_norm();
        let d = 0.5 * nx * (-rng.gen::<f64>() * log_n).exp();
        let y = x + random_dir(&mut rng).scale(d);
        let dist = (x - y).sup_norm();
        if dist == 0.0 || dist > 0.5 * nx {
            continue;
        }
        let q = nx.powf(th) * (f.eval(x) - f.eval(y)).abs() / dist.powf(th);
        seminorm = seminorm.max(q);
    }
    let total = sup + l2 + seminorm;
    Ok(HolderEstimate { sup, l2, seminorm, total, bound })
}
