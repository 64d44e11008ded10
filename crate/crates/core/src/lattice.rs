//! Exact enumeration of norm balls `Γ_T = {γ ∈ Γ : ‖γ‖ ≤ T}`.
//!
//! Two lattices are supported:
//!
//! * `SL(2,ℤ)`, with elements stored as their integer entries `(a, b, c, d)`;
//! * the cocompact unit group of the (2,3) quaternion order, with elements
//!   `(x, y, z, t) ∈ ℤ⁴`, `x² − 2y² − 3z² + 6t² = 1`, embedded as
//!   `[[x + √2y, z + √2t], [3(z − √2t), x − √2y]]`.
//!
//! Membership is decided exactly: every entry lives in ℤ[√2] and the norm
//! bound is compared against the exact rational value of `T`.
//!
//! Balls are produced row by row, a row being all elements sharing the first
//! integer coordinate. Rows are independent, so they are generated in
//! parallel; within a row elements are sorted, which makes the overall order
//! lexicographic on the integer quadruple regardless of worker count.

use std::fmt;
use std::io::{Read, Write};

use num_integer::Integer;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{Mat2, MatrixNorm};
use crate::zsqrt2::{Threshold, ZSqrt2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    #[serde(alias = "sl2z")]
    Sl2Z,
    #[serde(alias = "quaternion23", alias = "quaternion_d23")]
    QuaternionD23,
}

impl LatticeKind {
    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Sl2Z => "sl2z",
            LatticeKind::QuaternionD23 => "quaternion23",
        }
    }

    pub fn is_cocompact(self) -> bool {
        matches!(self, LatticeKind::QuaternionD23)
    }

    fn code(self) -> u8 {
        match self {
            LatticeKind::Sl2Z => 0,
            LatticeKind::QuaternionD23 => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(LatticeKind::Sl2Z),
            1 => Ok(LatticeKind::QuaternionD23),
            _ => Err(Error::Cache(format!("unknown lattice code {c}"))),
        }
    }
}

impl std::str::FromStr for LatticeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sl2z" | "sl2_z" | "SL2Z" => Ok(LatticeKind::Sl2Z),
            "quaternion23" | "quaternion_d23" | "QuaternionD23" => Ok(LatticeKind::QuaternionD23),
            other => domain(format!("unknown lattice `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    #[serde(default)]
    pub norm: MatrixNorm,
}

impl LatticeSpec {
    pub fn new(kind: LatticeKind, norm: MatrixNorm) -> Self {
        LatticeSpec { kind, norm }
    }

    pub fn sl2z() -> Self {
        LatticeSpec::new(LatticeKind::Sl2Z, MatrixNorm::MaxEntry)
    }

    pub fn quaternion() -> Self {
        LatticeSpec::new(LatticeKind::QuaternionD23, MatrixNorm::MaxEntry)
    }
}

/// A lattice element, stored exactly by its integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeElement {
    kind: LatticeKindOrd,
    coords: [i64; 4],
}

// Ord helper so elements sort by coordinates only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum LatticeKindOrd {
    Sl2Z,
    QuaternionD23,
}

impl From<LatticeKind> for LatticeKindOrd {
    fn from(k: LatticeKind) -> Self {
        match k {
            LatticeKind::Sl2Z => LatticeKindOrd::Sl2Z,
            LatticeKind::QuaternionD23 => LatticeKindOrd::QuaternionD23,
        }
    }
}

impl LatticeElement {
    /// Builds an element, checking the defining equation.
    pub fn new(kind: LatticeKind, coords: [i64; 4]) -> Result<Self> {
        let e = LatticeElement { kind: kind.into(), coords };
        if !e.satisfies_defining_equation() {
            return domain(format!("{coords:?} is not an element of {}", kind.name()));
        }
        Ok(e)
    }

    pub(crate) fn new_unchecked(kind: LatticeKind, coords: [i64; 4]) -> Self {
        LatticeElement { kind: kind.into(), coords }
    }

    pub fn identity(kind: LatticeKind) -> Self {
        match kind {
            LatticeKind::Sl2Z => Self::new_unchecked(kind, [1, 0, 0, 1]),
            LatticeKind::QuaternionD23 => Self::new_unchecked(kind, [1, 0, 0, 0]),
        }
    }

    pub fn kind(&self) -> LatticeKind {
        match self.kind {
            LatticeKindOrd::Sl2Z => LatticeKind::Sl2Z,
            LatticeKindOrd::QuaternionD23 => LatticeKind::QuaternionD23,
        }
    }

    /// `(a, b, c, d)` for SL(2,ℤ), `(x, y, z, t)` for the quaternion lattice.
    pub fn coords(&self) -> [i64; 4] {
        self.coords
    }

    /// Matrix entries `[m11, m12, m21, m22]` in ℤ[√2].
    pub fn entries(&self) -> [ZSqrt2; 4] {
        let [p, q, r, s] = self.coords;
        match self.kind() {
            LatticeKind::Sl2Z => [ZSqrt2::from_int(p), ZSqrt2::from_int(q), ZSqrt2::from_int(r), ZSqrt2::from_int(s)],
            LatticeKind::QuaternionD23 => {
                let (x, y, z, t) = (p, q, r, s);
                [ZSqrt2::new(x, y), ZSqrt2::new(z, t), ZSqrt2::new(3 * z, -3 * t), ZSqrt2::new(x, -y)]
            }
        }
    }

    pub fn matrix(&self) -> Mat2 {
        let [a, b, c, d] = self.entries();
        Mat2::new(a.to_f64(), b.to_f64(), c.to_f64(), d.to_f64())
    }

    /// Exact determinant in ℤ[√2].
    pub fn det_exact(&self) -> ZSqrt2 {
        let [a, b, c, d] = self.entries();
        a * d - b * c
    }

    pub fn satisfies_defining_equation(&self) -> bool {
        let [p, q, r, s] = self.coords.map(|v| v as i128);
        match self.kind() {
            LatticeKind::Sl2Z => p * s - q * r == 1,
            LatticeKind::QuaternionD23 => p * p - 2 * q * q - 3 * r * r + 6 * s * s == 1,
        }
    }

    pub fn neg(&self) -> Self {
        Self::new_unchecked(self.kind(), self.coords.map(|v| -v))
    }

    pub fn inverse(&self) -> Self {
        let [p, q, r, s] = self.coords;
        match self.kind() {
            LatticeKind::Sl2Z => Self::new_unchecked(LatticeKind::Sl2Z, [s, -q, -r, p]),
            // α ↦ ᾱ, β ↦ −β
            LatticeKind::QuaternionD23 => Self::new_unchecked(LatticeKind::QuaternionD23, [p, -q, -r, -s]),
        }
    }

    /// Exact product; `None` on integer overflow or mismatched lattices.
    pub fn mul(&self, o: &Self) -> Option<Self> {
        if self.kind != o.kind {
            return None;
        }
        match self.kind() {
            LatticeKind::Sl2Z => {
                let [a, b, c, d] = self.coords;
                let [e, f, g, h] = o.coords;
                let m = |x: i64, y: i64, z: i64, w: i64| x.checked_mul(y)?.checked_add(z.checked_mul(w)?);
                Some(Self::new_unchecked(
                    LatticeKind::Sl2Z,
                    [m(a, e, b, g)?, m(a, f, b, h)?, m(c, e, d, g)?, m(c, f, d, h)?],
                ))
            }
            LatticeKind::QuaternionD23 => {
                // [[α, β], [3β̄, ᾱ]]·[[γ, δ], [3δ̄, γ̄]] = [[αγ + 3βδ̄, αδ + βγ̄], …]
                let [x1, y1, z1, t1] = self.coords;
                let [x2, y2, z2, t2] = o.coords;
                let (al, be) = (ZSqrt2::new(x1, y1), ZSqrt2::new(z1, t1));
                let (ga, de) = (ZSqrt2::new(x2, y2), ZSqrt2::new(z2, t2));
                let na = al.checked_mul(ga)?;
                let nb = be.checked_mul(de.conj())?;
                let alpha = ZSqrt2::new(na.a.checked_add(nb.a.checked_mul(3)?)?, na.b.checked_add(nb.b.checked_mul(3)?)?);
                let m1 = al.checked_mul(de)?;
                let m2 = be.checked_mul(ga.conj())?;
                let beta = ZSqrt2::new(m1.a.checked_add(m2.a)?, m1.b.checked_add(m2.b)?);
                Some(Self::new_unchecked(LatticeKind::QuaternionD23, [alpha.a, alpha.b, beta.a, beta.b]))
            }
        }
    }
}

impl fmt::Display for LatticeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [p, q, r, s] = self.coords;
        write!(f, "{}({p}, {q}, {r}, {s})", self.kind().name())
    }
}

/// Exact membership test for `‖γ‖ ≤ T`.
#[derive(Debug, Clone)]
pub struct NormBall {
    spec: LatticeSpec,
    t: f64,
    /// `T` itself for max-entry, `T²` for Frobenius, `T² + T⁻²` for operator.
    bound: Threshold,
    /// `floor(bound)`, for integer entries.
    bound_floor: i128,
    /// `floor(T)`: every entry is bounded by this for all three norms.
    entry_floor: i64,
}

impl NormBall {
    pub fn new(spec: LatticeSpec, t: f64) -> Result<Self> {
        if !(t >= 1.0) || !t.is_finite() {
            return domain(format!("norm-ball radius must be a finite number ≥ 1, got {t}"));
        }
        let bound = match spec.norm {
            MatrixNorm::MaxEntry => Threshold::from_f64(t),
            MatrixNorm::Frobenius => Threshold::square_of(t),
            MatrixNorm::Operator2 => Threshold::square_plus_inverse_square_of(t),
        };
        let bound_floor = bound.floor_i128();
        let entry_floor = t.floor() as i64;
        Ok(NormBall { spec, t, bound, bound_floor, entry_floor })
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn radius(&self) -> f64 {
        self.t
    }

    pub fn contains(&self, g: &LatticeElement) -> bool {
        match g.kind() {
            LatticeKind::Sl2Z => self.contains_int(g.coords),
            LatticeKind::QuaternionD23 => self.contains_surd(g.entries()),
        }
    }

    fn contains_int(&self, [a, b, c, d]: [i64; 4]) -> bool {
        match self.spec.norm {
            MatrixNorm::MaxEntry => {
                let n = self.entry_floor;
                a.abs() <= n && b.abs() <= n && c.abs() <= n && d.abs() <= n
            }
            MatrixNorm::Frobenius | MatrixNorm::Operator2 => {
                let s = [a, b, c, d].iter().map(|&v| (v as i128) * (v as i128)).sum::<i128>();
                s <= self.bound_floor
            }
        }
    }

    fn contains_surd(&self, entries: [ZSqrt2; 4]) -> bool {
        match self.spec.norm {
            MatrixNorm::MaxEntry => entries.iter().all(|&e| self.bound.admits_abs(e)),
            MatrixNorm::Frobenius | MatrixNorm::Operator2 => {
                let s = entries.iter().fold(ZSqrt2::ZERO, |acc, &e| acc + e * e);
                self.bound.admits(s)
            }
        }
    }

    /// Keys of the rows (first coordinates) that may be nonempty.
    pub fn row_keys(&self) -> std::ops::RangeInclusive<i64> {
        -self.entry_floor..=self.entry_floor
    }

    /// All elements whose first coordinate equals `key`, sorted.
    pub fn row(&self, key: i64) -> Vec<LatticeElement> {
        let mut out = match self.spec.kind {
            LatticeKind::Sl2Z => self.sl2z_row(key),
            LatticeKind::QuaternionD23 => self.quaternion_row(key),
        };
        out.sort_unstable();
        out
    }

    fn sl2z_row(&self, a: i64) -> Vec<LatticeElement> {
        let n = self.entry_floor;
        let mut out = Vec::new();
        let frob = !matches!(self.spec.norm, MatrixNorm::MaxEntry);
        for c in -n..=n {
            if a.gcd(&c) != 1 {
                continue;
            }
            if frob && (a as i128).pow(2) + (c as i128).pow(2) > self.bound_floor {
                continue;
            }
            // a·d0 − b0·c = 1
            let eg = a.extended_gcd(&c);
            let (d0, b0) = if eg.gcd == 1 { (eg.x, -eg.y) } else { (-eg.x, eg.y) };
            debug_assert_eq!(a as i128 * d0 as i128 - b0 as i128 * c as i128, 1);
            let emit = |k: i64, out: &mut Vec<LatticeElement>| {
                let b = b0 + k * a;
                let d = d0 + k * c;
                let coords = [a, b, c, d];
                if self.contains_int(coords) {
                    out.push(LatticeElement::new_unchecked(LatticeKind::Sl2Z, coords));
                }
            };
            if frob {
                // (b0 + k a)² + (d0 + k c)² ≤ bound − a² − c²
                let m = (self.bound_floor - (a as i128).pow(2) - (c as i128).pow(2)) as f64;
                let qa = (a * a + c * c) as f64;
                let qb = (a * b0 + c * d0) as f64;
                let qc = (b0 * b0 + d0 * d0) as f64 - m;
                let disc = qb * qb - qa * qc;
                if disc < -1.0 {
                    continue;
                }
                let r = disc.max(0.0).sqrt();
                let lo = ((-qb - r) / qa).floor() as i64 - 1;
                let hi = ((-qb + r) / qa).ceil() as i64 + 1;
                for k in lo..=hi {
                    emit(k, &mut out);
                }
            } else {
                let Some((lo, hi)) = intersect(k_range(b0, a, n), k_range(d0, c, n)) else {
                    continue;
                };
                for k in lo..=hi {
                    emit(k, &mut out);
                }
            }
        }
        out
    }

    fn quaternion_row(&self, x: i64) -> Vec<LatticeElement> {
        let t_real = self.t;
        let s2 = std::f64::consts::SQRT_2;
        let mut out = Vec::new();
        // |z + √2t| ≤ T and 3|z − √2t| ≤ T imply |√2 t| ≤ 2T/3.
        let t_max = (2.0 * t_real / (3.0 * s2)).floor() as i64 + 1;
        let xx = (x as i128) * (x as i128);
        for t in -t_max..=t_max {
            let rt = s2 * t as f64;
            let z_lo = (-t_real - rt).max(rt - t_real / 3.0).floor() as i64 - 1;
            let z_hi = (t_real - rt).min(rt + t_real / 3.0).ceil() as i64 + 1;
            for z in z_lo..=z_hi {
                // 2y² = x² − 3z² + 6t² − 1
                let n = xx - 1 - 3 * (z as i128) * (z as i128) + 6 * (t as i128) * (t as i128);
                if n < 0 || n & 1 == 1 {
                    continue;
                }
                let m = n / 2;
                let Some(y) = isqrt_exact(m) else { continue };
                let ys: &[i64] = if y == 0 { &[0] } else { &[-y, y] };
                for &y in ys {
                    let e = LatticeElement::new_unchecked(LatticeKind::QuaternionD23, [x, y, z, t]);
                    if self.contains(&e) {
                        out.push(e);
                    }
                }
            }
        }
        out
    }

    /// Maps every row through `map`, in parallel, returning results in row order.
    pub fn par_map_rows<R, F>(&self, map: F) -> Vec<R>
    where
        R: Send,
        F: Fn(&[LatticeElement]) -> R + Sync + Send,
    {
        self.row_keys().into_par_iter().map(|k| map(&self.row(k))).collect()
    }

    /// Sequential stream over the ball in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = LatticeElement> + '_ {
        self.row_keys().flat_map(move |k| self.row(k))
    }

    pub fn collect(&self) -> Vec<LatticeElement> {
        self.par_map_rows(|r| r.to_vec()).into_iter().flatten().collect()
    }

    pub fn count(&self) -> u64 {
        self.par_map_rows(|r| r.len() as u64).into_iter().sum()
    }
}

fn k_range(x0: i64, step: i64, n: i64) -> Option<(i64, i64)> {
    // {k : |x0 + k·step| ≤ n}; None = unconstrained
    if step == 0 {
        return if x0.abs() <= n { None } else { Some((1, 0)) };
    }
    let (lo, hi) = if step > 0 {
        (Integer::div_ceil(&(-n - x0), &step), Integer::div_floor(&(n - x0), &step))
    } else {
        (Integer::div_ceil(&(n - x0), &step), Integer::div_floor(&(-n - x0), &step))
    };
    Some((lo, hi))
}

fn intersect(a: Option<(i64, i64)>, b: Option<(i64, i64)>) -> Option<(i64, i64)> {
    match (a, b) {
        (Some((l1, h1)), Some((l2, h2))) => {
            let (l, h) = (l1.max(l2), h1.min(h2));
            (l <= h).then_some((l, h))
        }
        (Some((l, h)), None) | (None, Some((l, h))) => (l <= h).then_some((l, h)),
        // both unconstrained cannot happen: a and c are not both zero
        (None, None) => None,
    }
}

fn isqrt_exact(m: i128) -> Option<i64> {
    if m < 0 {
        return None;
    }
    let mut r = (m as f64).sqrt() as i128;
    while r * r > m {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= m {
        r += 1;
    }
    (r * r == m).then_some(r as i64)
}

/// All elements of `Γ_T` in canonical (lexicographic) order.
pub fn enumerate(spec: LatticeSpec, t: f64) -> Result<Vec<LatticeElement>> {
    Ok(NormBall::new(spec, t)?.collect())
}

/// `#Γ_T`.
pub fn count(spec: LatticeSpec, t: f64) -> Result<u64> {
    Ok(NormBall::new(spec, t)?.count())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GroupAxiomReport {
    pub ball_size: usize,
    pub pairs_checked: usize,
    pub closure_failures: usize,
    pub inverse_failures: usize,
    pub identity_failures: usize,
    pub determinant_failures: usize,
}

impl GroupAxiomReport {
    pub fn passed(&self) -> bool {
        self.closure_failures == 0 && self.inverse_failures == 0 && self.identity_failures == 0 && self.determinant_failures == 0
    }
}

/// Checks closure under products and inverses on sampled pairs from `Γ_T`.
pub fn verify_group_axioms(spec: LatticeSpec, t_small: f64, samples: usize, seed: u64) -> Result<GroupAxiomReport> {
    if t_small > 20.0 {
        return domain("verify_group_axioms expects T ≤ 20");
    }
    let ball = enumerate(spec, t_small)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = GroupAxiomReport { ball_size: ball.len(), ..Default::default() };
    let id = LatticeElement::identity(spec.kind);
    for _ in 0..samples {
        let g1 = ball.choose(&mut rng).expect("ball contains the identity");
        let g2 = ball.choose(&mut rng).expect("ball contains the identity");
        rep.pairs_checked += 1;
        match g1.mul(g2) {
            Some(p) if p.satisfies_defining_equation() && p.det_exact() == ZSqrt2::ONE => {}
            _ => rep.closure_failures += 1,
        }
        let inv = g1.inverse();
        if !inv.satisfies_defining_equation() {
            rep.inverse_failures += 1;
        }
        if g1.mul(&inv) != Some(id) || inv.mul(g1) != Some(id) {
            rep.identity_failures += 1;
        }
        if g1.det_exact() != ZSqrt2::ONE || (g1.matrix().det() - 1.0).abs() > 1e-10 * g1.matrix().norm(MatrixNorm::MaxEntry).powi(2).max(1.0) {
            rep.determinant_failures += 1;
        }
    }
    Ok(rep)
}

const CACHE_MAGIC: &[u8; 8] = b"PLORBALL";
const CACHE_VERSION: u32 = 1;

fn norm_code(n: MatrixNorm) -> u8 {
    match n {
        MatrixNorm::MaxEntry => 0,
        MatrixNorm::Frobenius => 1,
        MatrixNorm::Operator2 => 2,
    }
}

fn norm_from_code(c: u8) -> Result<MatrixNorm> {
    match c {
        0 => Ok(MatrixNorm::MaxEntry),
        1 => Ok(MatrixNorm::Frobenius),
        2 => Ok(MatrixNorm::Operator2),
        _ => Err(Error::Cache(format!("unknown norm code {c}"))),
    }
}

/// Writes a ball cache: an 8-byte magic, version (u32), lattice kind (u8),
/// norm (u8), two padding bytes, `T` (f64), count (u64), then `count`
/// records of four little-endian i64 coordinates.
pub fn write_cache<W: Write>(mut w: W, spec: LatticeSpec, t: f64, elems: &[LatticeElement]) -> Result<()> {
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&[spec.kind.code(), norm_code(spec.norm), 0, 0])?;
    w.write_all(&t.to_le_bytes())?;
    w.write_all(&(elems.len() as u64).to_le_bytes())?;
    for e in elems {
        for c in e.coords {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_cache<R: Read>(mut r: R) -> Result<(LatticeSpec, f64, Vec<LatticeElement>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != CACHE_VERSION {
        return Err(Error::Cache("unsupported version".into()));
    }
    r.read_exact(&mut b4)?;
    let spec = LatticeSpec::new(LatticeKind::from_code(b4[0])?, norm_from_code(b4[1])?);
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let t = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut out = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        let mut coords = [0i64; 4];
        for c in coords.iter_mut() {
            r.read_exact(&mut b8)?;
            *c = i64::from_le_bytes(b8);
        }
        let e = LatticeElement::new(spec.kind, coords).map_err(|e| Error::Cache(e.to_string()))?;
        out.push(e);
    }
    Ok((spec, t, out))
}
