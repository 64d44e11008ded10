//! Lifts of plane functions to `SL(2,ℝ)`: `f̃(g) = f(g·u₀)·φ(c_{u₀}(g))` and
//! the `Γ`-periodisation `f̄(g) = Σ_γ f̃(γg)`.

use std::sync::OnceLock;

use serde::Serialize;

use super::{distortion, star_radii, PlaneFunction};
use crate::error::{domain, Result};
use crate::lattice::{LatticeElement, LatticeSpec, NormBall};
use crate::linalg::{cocycle, horocycle, mat_norm, psi, Mat2, MatrixNorm, Vec2, U0};
use crate::quadrature::{integrate, QuadOptions};

/// `∫_{−1}^{1} exp(−1/(1−x²)) dx`.
pub const BUMP_MASS: f64 = 0.443_993_816_168_079_4;

/// The bump `φ(x) = exp(−1/(1−x²))/BUMP_MASS` on `(−1, 1)`, with an
/// optional multiplicative error for fault injection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    mass: f64,
    factor: f64,
}

impl Bump {
    pub fn standard() -> Self {
        static MASS: OnceLock<f64> = OnceLock::new();
        let mass = *MASS.get_or_init(|| {
            let g = |x: f64| if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 };
            integrate(g, -1.0, 1.0, &[0.0], &QuadOptions { abs_tol: 1e-15, rel_tol: 0.0, ..Default::default() })
                .map(|r| r.value)
                .unwrap_or(BUMP_MASS)
        });
        Bump { mass, factor: 1.0 }
    }

    /// A bump whose normalisation is off by `factor`.
    pub fn corrupted(factor: f64) -> Self {
        Bump { factor, ..Self::standard() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        self.factor * (-1.0 / (1.0 - x * x)).exp() / self.mass
    }
}

/// `f̃(g) = f(g·u₀)·φ(c_{u₀}(g))`.
pub fn lift_eval<F: PlaneFunction + ?Sized>(f: &F, g: &Mat2, bump: &Bump) -> Result<f64> {
    let v = g.apply(U0);
    let fv = f.eval(v);
    if fv == 0.0 {
        return Ok(0.0);
    }
    Ok(fv * bump.eval(cocycle(U0, g)?))
}

/// `f̄(g) = Σ_{γ∈Γ} f̃(γg)`, summing over the `γ` that can contribute:
/// `f̃(γg) ≠ 0` forces `γg = Ψ(w)h_c` with `w ∈ supp f`, `|c| ≤ 1`, which
/// bounds `‖γ‖`.
pub fn bar_f_eval<F: PlaneFunction + ?Sized>(f: &F, r_f: f64, big_r_f: f64, spec: LatticeSpec, g: &Mat2, bump: &Bump) -> Result<f64> {
    let g_inv = g.inverse()?;
    // ‖Ψ(w)‖_max ≤ max(R, 1/r), ‖h_c‖_max ≤ 1, and ‖AB‖_max ≤ 2‖A‖‖B‖
    let psi_bound = big_r_f.max(1.0 / r_f);
    let max_entry = 4.0 * psi_bound * mat_norm(&g_inv, MatrixNorm::MaxEntry);
    // every supported norm is at most twice the max-entry norm
    let t = (2.0 * max_entry).max(1.0);
    let ball = NormBall::new(spec, t)?;
    let terms = ball.par_map_rows(|row| {
        let mut acc = 0.0;
        for gamma in row {
            acc += lift_eval(f, &(gamma.matrix() * *g), bump).unwrap_or(0.0);
        }
        acc
    });
    Ok(terms.iter().sum())
}

/// Outcome of checking both windows of the boundary lemma for one `(γ, T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub gamma_norm: f64,
    pub t: f64,
    pub f_gamma_u: f64,
    /// `‖γ‖ ≤ T`: `∫_{|s| ≤ 1+(T+D)/r} f̃(γũh_s) ds − f(γu)`.
    pub outer_residual: Option<f64>,
    /// `‖γ‖ ≥ T`: `∫_{|s| ≤ (T−D)/R − 1} f̃(γũh_s) ds`.
    pub inner_residual: Option<f64>,
}

impl BoundaryReport {
    pub fn max_residual(&self) -> f64 {
        self.outer_residual.unwrap_or(0.0).abs().max(self.inner_residual.unwrap_or(0.0).abs())
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_residual() < tol
    }
}

/// Integrates `s ↦ f̃(γ Ψ(u) h_s)` over the windows of the boundary lemma
/// with `r = r^{(u)}(f)`, `R = R^{(u)}(f)` and `D = D(u, f)`.
pub fn boundary_lemma_check<F: PlaneFunction + ?Sized>(
    f: &F,
    u: Vec2,
    gamma: &LatticeElement,
    t: f64,
    norm: MatrixNorm,
    bump: &Bump,
) -> Result<BoundaryReport> {
    let (r, big_r) = star_radii(f, u, norm)?;
    let d = distortion(f, u, norm)?;
    boundary_lemma_check_with(f, u, gamma, t, norm, bump, (r, big_r, d))
}

/// As [`boundary_lemma_check`] with precomputed `(r, R, D)`.
pub fn boundary_lemma_check_with<F: PlaneFunction + ?Sized>(
    f: &F,
    u: Vec2,
    gamma: &LatticeElement,
    t: f64,
    norm: MatrixNorm,
    bump: &Bump,
    (r, big_r, d): (f64, f64, f64),
) -> Result<BoundaryReport> {
    if !(t > 0.0) {
        return domain("T must be positive");
    }
    let gm = gamma.matrix();
    let base = gm * psi(u)?;
    let gamma_norm = mat_norm(&gm, norm);
    let f_gamma_u = f.eval(gm.apply(u));
    let window = |half: f64| -> Result<f64> {
        if half <= 0.0 {
            return Ok(0.0);
        }
        let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 0.0, max_intervals: 200_000, max_initial_width: 0.25 };
        let res = integrate(|s| lift_eval(f, &(base * horocycle(s)), bump).unwrap_or(f64::NAN), -half, half, &[], &opts)?;
        Ok(res.value)
    };
    let outer_residual = if gamma_norm <= t { Some(window(1.0 + (t + d) / r)? - f_gamma_u) } else { None };
    let inner_residual = if gamma_norm >= t { Some(window((t - d) / big_r - 1.0)?) } else { None };
    Ok(BoundaryReport { gamma_norm, t, f_gamma_u, outer_residual, inner_residual })
}
