//! Radial partition of unity: `f(v) = Σ_ℓ f_ℓ(e^{ℓ/α} v)` with
//! `f_ℓ(w) = f(e^{−ℓ/α} w)·κ(α log((w⋆u)/|u|))`.

use serde::Serialize;

use super::{star_radii, PlaneFunction};
use crate::error::{domain, Result};
use crate::linalg::{star, MatrixNorm, Vec2};

/// The tent `κ(x) = max(0, 1 − |x|)`; its integer translates sum to one.
pub fn kappa(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

/// One summand `f_ℓ` of the radial partition.
#[derive(Debug, Clone)]
pub struct PartitionPiece<'a, F: PlaneFunction + ?Sized> {
    f: &'a F,
    pub u: Vec2,
    pub norm: MatrixNorm,
    pub alpha: f64,
    pub ell: i64,
}

impl<F: PlaneFunction + ?Sized> PartitionPiece<'_, F> {
    fn scale(&self) -> f64 {
        (self.ell as f64 / self.alpha).exp()
    }

    /// `r_ℓ = e^{(ℓ−1)/α}|u|`.
    pub fn r_ell(&self) -> f64 {
        ((self.ell as f64 - 1.0) / self.alpha).exp() * self.u.sup_norm()
    }

    /// `R_ℓ = e^{(ℓ+1)/α}|u|`.
    pub fn big_r_ell(&self) -> f64 {
        ((self.ell as f64 + 1.0) / self.alpha).exp() * self.u.sup_norm()
    }

    /// `f_ℓ(e^{ℓ/α} v)`, the term that enters the reconstruction of `f(v)`.
    pub fn term(&self, v: Vec2) -> f64 {
        self.eval(v.scale(self.scale()))
    }

    /// The κ-band `{ρ : e^{−1/α}|u| ≤ ρe⋆u ≤ e^{1/α}|u|}` along `dir`.
    fn band(&self, dir: Vec2) -> (f64, f64) {
        let s = star(dir, self.u, self.norm);
        let nu = self.u.sup_norm();
        ((-1.0 / self.alpha).exp() * nu / s, (1.0 / self.alpha).exp() * nu / s)
    }
}

impl<F: PlaneFunction + ?Sized> PlaneFunction for PartitionPiece<'_, F> {
    fn eval(&self, w: Vec2) -> f64 {
        let k = kappa(self.alpha * (star(w, self.u, self.norm) / self.u.sup_norm()).ln());
        if k == 0.0 {
            return 0.0;
        }
        self.f.eval(w.scale(1.0 / self.scale())) * k
    }

    fn radial_extent(&self, dir: Vec2) -> Option<(f64, f64)> {
        let (lo, hi) = self.f.radial_extent(dir)?;
        let c = self.scale();
        let (blo, bhi) = self.band(dir);
        let (lo, hi) = ((lo * c).max(blo), (hi * c).min(bhi));
        (lo < hi).then_some((lo, hi))
    }

    fn radial_breaks(&self, dir: Vec2) -> Vec<f64> {
        let c = self.scale();
        let peak = self.u.sup_norm() / star(dir, self.u, self.norm);
        let mut b: Vec<f64> = self.f.radial_breaks(dir).into_iter().map(|r| r * c).collect();
        b.push(peak);
        b
    }

    fn direction_breaks(&self) -> Vec<Vec2> {
        self.f.direction_breaks()
    }
}

/// Pieces with nonempty support, in increasing `ℓ`.
#[derive(Debug, Clone)]
pub struct PartitionReport<'a, F: PlaneFunction + ?Sized> {
    pub pieces: Vec<PartitionPiece<'a, F>>,
    pub r_u: f64,
    pub big_r_u: f64,
    /// `α log v^{(u)}(f) + 2`.
    pub count_bound: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PieceSummary {
    pub ell: i64,
    pub r_ell: f64,
    pub big_r_ell: f64,
}

impl<F: PlaneFunction + ?Sized> PartitionReport<'_, F> {
    pub fn reconstruct(&self, v: Vec2) -> f64 {
        self.pieces.iter().map(|p| p.term(v)).sum()
    }

    pub fn summaries(&self) -> Vec<PieceSummary> {
        self.pieces.iter().map(|p| PieceSummary { ell: p.ell, r_ell: p.r_ell(), big_r_ell: p.big_r_ell() }).collect()
    }
}

/// Builds the pieces `f_ℓ` whose support is nonempty: `ℓ` ranges over the
/// integers of `(−1 − α log(R^{(u)}/|u|), 1 − α log(r^{(u)}/|u|))`.
pub fn build_partition<F: PlaneFunction + ?Sized>(f: &F, u: Vec2, norm: MatrixNorm, alpha: f64) -> Result<PartitionReport<'_, F>> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return domain(format!("alpha must be at least 1, got {alpha}"));
    }
    let (r_u, big_r_u) = star_radii(f, u, norm)?;
    let nu = u.sup_norm();
    let lo = -1.0 - alpha * (big_r_u / nu).ln();
    let hi = 1.0 - alpha * (r_u / nu).ln();
    let first = lo.floor() as i64 + 1;
    let last = hi.ceil() as i64 - 1;
    let pieces = (first..=last).map(|ell| PartitionPiece { f, u, norm, alpha, ell }).collect();
    Ok(PartitionReport { pieces, r_u, big_r_u, count_bound: alpha * (big_r_u / r_u).ln() + 2.0 })
}
