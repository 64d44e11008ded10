//! Continued fractions, the window quantity `ξ̂(z, τ₁, τ₂)`, and excursion
//! heights of the geodesic `z + i e^{-t}` into the cusp of the modular
//! surface.
//!
//! Expansions are computed exactly: rationals by the Euclidean algorithm,
//! quadratic surds `(P + √D)/Q` by the periodic surd recurrence, and floats
//! by expanding the exact dyadic value of the `f64` (cut off once `q_k²`
//! exceeds the inverse machine epsilon).

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::Vec2;
use crate::report::{fmt_f64, Table};

/// `z = (p + √d) / q` with `d` not a perfect square and `q > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticSurd {
    pub p: i64,
    pub d: u64,
    pub q: i64,
}

impl QuadraticSurd {
    pub const GOLDEN: QuadraticSurd = QuadraticSurd { p: -1, d: 5, q: 2 };
    pub const SQRT2_MINUS_1: QuadraticSurd = QuadraticSurd { p: -1, d: 2, q: 1 };

    pub fn new(p: i64, d: u64, q: i64) -> Result<Self> {
        let s = isqrt_u128(d as u128);
        if s * s == d as u128 {
            return domain(format!("{d} is a perfect square"));
        }
        if q <= 0 {
            return domain("surd denominator must be positive");
        }
        Ok(QuadraticSurd { p, d, q })
    }

    pub fn value(&self) -> f64 {
        (self.p as f64 + (self.d as f64).sqrt()) / self.q as f64
    }
}

/// What to expand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfInput {
    Rational { p: i128, q: i128 },
    Surd(QuadraticSurd),
    Float(f64),
    /// `[0; a₁, a₂, …]`, evaluated to the rational it denotes.
    Quotients(Vec<u64>),
}

impl CfInput {
    pub fn golden() -> Self {
        CfInput::Surd(QuadraticSurd::GOLDEN)
    }

    pub fn value(&self) -> f64 {
        match self {
            CfInput::Rational { p, q } => *p as f64 / *q as f64,
            CfInput::Surd(s) => s.value(),
            CfInput::Float(x) => *x,
            CfInput::Quotients(a) => {
                let (p, q) = eval_quotients_big(a);
                BigRational::new(p, q).to_f64().unwrap_or(f64::NAN)
            }
        }
    }
}

/// Evaluates `[0; a₁, …, a_n]` exactly as `p/q`; `None` if either does not
/// fit in an `i128`.
pub fn eval_quotients(a: &[u64]) -> Option<(i128, i128)> {
    let (p, q) = eval_quotients_big(a);
    Some((p.to_i128()?, q.to_i128()?))
}

fn eval_quotients_big(a: &[u64]) -> (BigInt, BigInt) {
    let (mut p, mut q) = (BigInt::zero(), BigInt::one());
    let (mut pp, mut qp) = (BigInt::one(), BigInt::zero());
    for &ak in a {
        let ak = BigInt::from(ak);
        let pn = &ak * &p + &pp;
        let qn = &ak * &q + &qp;
        (pp, qp) = (std::mem::replace(&mut p, pn), std::mem::replace(&mut q, qn));
    }
    (p, q)
}

/// A continued fraction `z = [0; a₁, a₂, …]` with its convergents and the
/// approximation exponents `t_k = −log|z − p_k/q_k|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfExpansion {
    pub z: f64,
    /// `a₁, a₂, …` (`partial_quotients[k-1] = a_k`).
    pub partial_quotients: Vec<u64>,
    /// `(p_k, q_k)` for `k = 0..=n`.
    pub convergents: Vec<(i128, i128)>,
    /// `t_k` for `k = 0..=n`; `+∞` at the terminal convergent of a rational.
    pub t_values: Vec<f64>,
    /// `z` is rational and the expansion ran to completion.
    pub finite: bool,
    /// Stopped early because of the input's floating-point precision or
    /// integer range.
    pub precision_limited: bool,
    source: Source,
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Rational { p: BigInt, q: BigInt },
    Surd { p: i128, d: i128, q: i128 },
}

impl CfExpansion {
    /// `k₀` for rational `z`.
    pub fn k0(&self) -> Option<usize> {
        self.finite.then(|| self.partial_quotients.len())
    }

    pub fn depth(&self) -> usize {
        self.partial_quotients.len()
    }

    /// `a_k`, `k ≥ 1`.
    pub fn a(&self, k: usize) -> Option<u64> {
        k.checked_sub(1).and_then(|i| self.partial_quotients.get(i).copied())
    }

    /// `t_k` with `t_{-1} = 0`; `+∞` past the end of a finite expansion.
    pub fn t(&self, k: isize) -> Option<f64> {
        if k < 0 {
            return Some(0.0);
        }
        match self.t_values.get(k as usize) {
            Some(&t) => Some(t),
            None if self.finite => Some(f64::INFINITY),
            None => None,
        }
    }

    /// Exact check of `a_{k+1} q_k² ≤ e^{t_k} ≤ (a_{k+1} + 2) q_k²`.
    pub fn tk_bounds_exact(&self, k: usize) -> Option<bool> {
        let a = self.a(k + 1)? as i128;
        let (p, q) = *self.convergents.get(k)?;
        match &self.source {
            Source::Rational { p: zp, q: zq } => {
                // e^{t_k} = q·Q / |qP − pQ|
                let x = (BigInt::from(q) * zp - BigInt::from(p) * zq).abs();
                let lhs = BigInt::from(a) * BigInt::from(q) * &x;
                let rhs = BigInt::from(a + 2) * BigInt::from(q) * &x;
                Some(lhs <= *zq && rhs >= *zq)
            }
            Source::Surd { p: sp, d, q: sq } => {
                // z − p/q = (X + q√D)/(q·Q) with X = q·P − p·Q
                let x = BigInt::from(q) * BigInt::from(*sp) - BigInt::from(p) * BigInt::from(*sq);
                let qb = BigInt::from(q);
                let d = BigInt::from(*d);
                let s = match sign_sqrt_big(&x, &qb, &d) {
                    Ordering::Less => BigInt::from(-1),
                    _ => BigInt::one(),
                };
                // |X + q√D| = s·X + s·q·√D
                let qq = BigInt::from(*sq);
                let lower = {
                    // a·q·|…| ≤ Q  ⇔  (Q − a q s X) − a q s q √D ≥ 0
                    let c = BigInt::from(a) * &qb * &s;
                    sign_sqrt_big(&(&qq - &c * &x), &(-(&c * &qb)), &d) != Ordering::Less
                };
                let upper = {
                    let c = BigInt::from(a + 2) * &qb * &s;
                    sign_sqrt_big(&(&c * &x - &qq), &(&c * &qb), &d) != Ordering::Less
                };
                Some(lower && upper)
            }
        }
    }

    /// Closed-form peak heights `e^{t_k} / (2 q_k²)` of the cusp excursions.
    pub fn peak_heights(&self) -> Vec<(f64, f64)> {
        self.convergents
            .iter()
            .zip(&self.t_values)
            .filter(|(_, t)| t.is_finite())
            .map(|(&(_, q), &t)| (t, (t - 2.0 * (q as f64).ln()).exp() / 2.0))
            .collect()
    }

    /// `(k, a_k, p_k, q_k, t_k)` rows.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["k", "a_k", "p_k", "q_k", "t_k"]);
        for (k, (&(p, q), &tk)) in self.convergents.iter().zip(&self.t_values).enumerate() {
            let a = if k == 0 { 0 } else { self.partial_quotients[k - 1] };
            t.push(vec![k.to_string(), a.to_string(), p.to_string(), q.to_string(), fmt_f64(tk)]);
        }
        t
    }
}

/// Exact sign of `a + b√d`.
fn sign_sqrt_big(a: &BigInt, b: &BigInt, d: &BigInt) -> Ordering {
    let sa = a.sign();
    let sb = b.sign();
    use num_bigint::Sign::*;
    match (sa, sb) {
        (NoSign, NoSign) => Ordering::Equal,
        (NoSign, Plus) | (Plus, NoSign) | (Plus, Plus) => Ordering::Greater,
        (NoSign, Minus) | (Minus, NoSign) | (Minus, Minus) => Ordering::Less,
        (Plus, Minus) => (a * a).cmp(&(b * b * d)),
        (Minus, Plus) => (b * b * d).cmp(&(a * a)),
    }
}

fn isqrt_u128(n: u128) -> u128 {
    let mut r = (n as f64).sqrt() as u128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().expect("finite").ln();
    }
    let shift = bits - 60;
    let top: BigInt = x >> shift;
    top.to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
}

/// Expands `z ∈ [0, 1)` to at most `depth` partial quotients.
pub fn cf_expand(input: &CfInput, depth: usize) -> Result<CfExpansion> {
    if depth == 0 {
        return domain("depth must be at least 1");
    }
    match input {
        CfInput::Rational { p, q } => {
            if *q <= 0 || *p < 0 || p >= q {
                return domain(format!("{p}/{q} is not in [0, 1)"));
            }
            expand_rational(BigInt::from(*p), BigInt::from(*q), depth, None)
        }
        CfInput::Quotients(a) => {
            if a.iter().any(|&x| x == 0) {
                return domain("partial quotients must be positive");
            }
            let (p, q) = eval_quotients_big(a);
            expand_rational(p, q, depth, None)
        }
        CfInput::Float(x) => {
            if !(0.0..1.0).contains(x) {
                return domain(format!("{x} is not in [0, 1)"));
            }
            let r = BigRational::from_f64(*x).expect("finite float");
            let q_cap = (1.0 / f64::EPSILON).sqrt();
            expand_rational(r.numer().clone(), r.denom().clone(), depth, Some(q_cap))
        }
        CfInput::Surd(s) => expand_surd(s, depth),
    }
}

fn expand_rational(p: BigInt, q: BigInt, depth: usize, q_cap: Option<f64>) -> Result<CfExpansion> {
    let z = BigRational::new(p.clone(), q.clone()).to_f64().unwrap_or(0.0);
    let g = p.gcd(&q);
    let (zp, zq) = (&p / &g, &q / &g);
    let mut quotients = Vec::new();
    let mut convergents = vec![(0i128, 1i128)];
    let mut t_values = vec![];
    let (mut num, mut den) = (zp.clone(), zq.clone());
    // after a₀ = 0 the remainder is num/den; next quotient is den/num
    let (mut pp, mut qp) = (1i128, 0i128);
    let (mut pk, mut qk) = (0i128, 1i128);
    let mut finite = false;
    let mut precision_limited = false;
    loop {
        if num.is_zero() {
            finite = true;
            break;
        }
        if quotients.len() >= depth {
            break;
        }
        let (a, r) = den.div_rem(&num);
        let Some(a) = a.to_u64() else {
            precision_limited = true;
            break;
        };
        let next = (|| {
            let pn = (a as i128).checked_mul(pk)?.checked_add(pp)?;
            let qn = (a as i128).checked_mul(qk)?.checked_add(qp)?;
            Some((pn, qn))
        })();
        let Some((pn, qn)) = next else {
            precision_limited = true;
            break;
        };
        if let Some(cap) = q_cap {
            if qn as f64 > cap {
                precision_limited = true;
                break;
            }
        }
        quotients.push(a);
        (pp, qp, pk, qk) = (pk, qk, pn, qn);
        convergents.push((pk, qk));
        den = num;
        num = r;
    }
    for &(p, q) in &convergents {
        // e^{t} = q·Q / |qP − pQ|
        let x = (BigInt::from(q) * &zp - BigInt::from(p) * &zq).abs();
        let t = if x.is_zero() { f64::INFINITY } else { big_ln(&(BigInt::from(q) * &zq)) - big_ln(&x) };
        t_values.push(t);
    }
    Ok(CfExpansion {
        z,
        partial_quotients: quotients,
        convergents,
        t_values,
        finite,
        precision_limited,
        source: Source::Rational { p: zp, q: zq },
    })
}

fn expand_surd(s: &QuadraticSurd, depth: usize) -> Result<CfExpansion> {
    let s = QuadraticSurd::new(s.p, s.d, s.q)?;
    let (mut p, mut d, mut q) = (s.p as i128, s.d as i128, s.q as i128);
    // normalise so that Q | D − P²
    if (d - p * p) % q != 0 {
        p *= q;
        d *= q * q;
        q *= q;
    }
    let (sp, sd, sq) = (p, d, q);
    let root = isqrt_u128(d as u128) as i128;
    let floor_of = |p: i128, q: i128| -> i128 {
        if q > 0 {
            Integer::div_floor(&(p + root), &q)
        } else {
            Integer::div_floor(&(p + root + 1), &q)
        }
    };
    if floor_of(p, q) != 0 {
        return domain(format!("surd {} is not in [0, 1)", s.value()));
    }
    // step past a₀ = 0: x₁ = 1/z
    let mut quotients = Vec::new();
    let mut convergents = vec![(0i128, 1i128)];
    let (mut pp, mut qp) = (1i128, 0i128);
    let (mut pk, mut qk) = (0i128, 1i128);
    let mut precision_limited = false;
    // x₀ = z with a₀ = 0: P₁ = −P, Q₁ = (D − P₁²)/Q
    let mut cp = -p;
    let mut cq = (d - cp * cp) / q;
    while quotients.len() < depth {
        let a = floor_of(cp, cq);
        let next = (|| {
            let pn = a.checked_mul(pk)?.checked_add(pp)?;
            let qn = a.checked_mul(qk)?.checked_add(qp)?;
            // keep headroom for the exact bound checks
            (qn < (1i128 << 60)).then_some((pn, qn))
        })();
        let Some((pn, qn)) = next else {
            precision_limited = true;
            break;
        };
        quotients.push(a as u64);
        (pp, qp, pk, qk) = (pk, qk, pn, qn);
        convergents.push((pk, qk));
        let np = a * cq - cp;
        let nq = (d - np * np) / cq;
        cp = np;
        cq = nq;
    }
    let t_values = convergents
        .iter()
        .map(|&(pk, qk)| {
            // |z − p/q| = |X + q√D| / (q Q) with X = qP − pQ; use the conjugate
            // to avoid cancellation: |X + q√D| = |X² − q²D| / |X − q√D|
            let x = BigInt::from(qk) * BigInt::from(sp) - BigInt::from(pk) * BigInt::from(sq);
            let qb = BigInt::from(qk);
            let num = (&x * &x - &qb * &qb * BigInt::from(sd)).abs();
            let xf = x.to_f64().unwrap();
            let conj = (xf - qk as f64 * (sd as f64).sqrt()).abs();
            let dist = num.to_f64().unwrap() / conj / (qk as f64 * sq as f64);
            -dist.ln()
        })
        .collect();
    Ok(CfExpansion {
        z: s.value(),
        partial_quotients: quotients,
        convergents,
        t_values,
        finite: false,
        precision_limited,
        source: Source::Surd { p: sp, d: sd, q: sq },
    })
}

/// Expands until `t_k` exceeds `tau`, growing the depth as needed.
pub fn cf_expand_until(input: &CfInput, tau: f64) -> Result<CfExpansion> {
    let mut depth = 32;
    loop {
        let e = cf_expand(input, depth)?;
        let covered = e.t_values.last().is_some_and(|&t| t > tau);
        if covered || e.finite || e.precision_limited || depth > 4096 {
            return Ok(e);
        }
        depth *= 2;
    }
}

/// `ξ̂(z, τ₁, τ₂)`: the largest partial quotient `a_k` with
/// `τ₁ ≤ t_{k+1}` and `t_{k−1} ≤ τ₂` (`t_{−1} = 0`), or `e^{τ₂}` when no
/// index qualifies. Rational `z` past its last convergent uses
/// `min(e^{τ₂}, max(max{a_k : τ₁ ≤ t_{k+1}}, e^{τ₂}/q_{k₀}²))`.
pub fn xi_hat(exp: &CfExpansion, tau1: f64, tau2: f64) -> Result<f64> {
    if !(tau1 >= 0.0) || !(tau2 >= tau1) {
        return domain(format!("xi_hat needs 0 ≤ τ₁ ≤ τ₂, got ({tau1}, {tau2})"));
    }
    let e2 = tau2.exp();
    if let Some(k0) = exp.k0() {
        let t_before_end = exp.t(k0 as isize - 1).expect("finite expansion");
        if tau2 > t_before_end {
            let q_k0 = exp.convergents[k0].1 as f64;
            let best = (1..=k0)
                .filter(|&k| tau1 <= exp.t(k as isize + 1).unwrap())
                .map(|k| exp.a(k).unwrap() as f64)
                .fold(f64::NEG_INFINITY, f64::max);
            return Ok(e2.min(best.max(e2 / (q_k0 * q_k0))));
        }
    }
    // indices k with t_{k−1} ≤ τ₂ form a prefix 1..=K
    let mut best: Option<u64> = None;
    let mut k = 1usize;
    loop {
        let Some(t_prev) = exp.t(k as isize - 1) else {
            return Err(Error::InsufficientDepth { needed: tau2, available: *exp.t_values.last().unwrap_or(&0.0) });
        };
        if t_prev > tau2 {
            break;
        }
        let Some(a) = exp.a(k) else {
            if exp.finite {
                break;
            }
            return Err(Error::InsufficientDepth { needed: tau2, available: *exp.t_values.last().unwrap_or(&0.0) });
        };
        // t_{k+1} ≥ t_k, and an unknown t_{k+1} only occurs once t_k > τ₂ ≥ τ₁
        let t_next = exp.t(k as isize + 1).unwrap_or(f64::INFINITY);
        if tau1 <= t_next {
            best = Some(best.map_or(a, |b| b.max(a)));
        }
        k += 1;
    }
    Ok(best.map_or(e2, |b| b as f64))
}

/// The slope of `u` in `[0, 1]`: the unique member of
/// `{u_x/u_y, u_x/u_y + 1, −u_y/u_x, −u_y/u_x + 1} ∩ [0, 1]`, ties resolved
/// toward the smaller candidate.
pub fn slope_of(u: Vec2) -> Result<f64> {
    if u.is_degenerate() {
        return domain("slope of the zero vector");
    }
    let r1 = u.x / u.y;
    let r2 = -u.y / u.x;
    [r1, r1 + 1.0, r2, r2 + 1.0]
        .into_iter()
        .filter(|c| c.is_finite() && (0.0..=1.0).contains(c))
        .map(|c| if c == 0.0 { 0.0 } else { c })
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Domain(format!("no slope candidate in [0, 1] for {u:?}")))
}

/// Sup over the grid of `ξ̂(z, 0, τ₂)·e^{−(β−2)τ₂/β}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaReport {
    pub beta: f64,
    pub rows: Vec<(f64, f64, f64)>,
    pub supremum: f64,
    pub argmax_tau2: f64,
    /// Grid points where the normalised value jumps at least tenfold over the
    /// previous grid point.
    pub spikes: Vec<f64>,
}

pub fn beta_bound_check(exp: &CfExpansion, beta: f64, tau2_grid: &[f64]) -> Result<BetaReport> {
    if !(beta >= 2.0) {
        return domain("beta must be at least 2");
    }
    let expo = if beta.is_infinite() { 1.0 } else { (beta - 2.0) / beta };
    let mut rows = Vec::with_capacity(tau2_grid.len());
    for &t2 in tau2_grid {
        let xi = xi_hat(exp, 0.0, t2)?;
        rows.push((t2, xi, xi * (-expo * t2).exp()));
    }
    let (supremum, argmax_tau2) = rows
        .iter()
        .map(|r| (r.2, r.0))
        .fold((f64::NEG_INFINITY, f64::NAN), |a, b| if b.0 > a.0 { b } else { a });
    let spikes = rows.windows(2).filter(|w| w[1].2 >= 10.0 * w[0].2).map(|w| w[1].0).collect();
    Ok(BetaReport { beta, rows, supremum, argmax_tau2, spikes })
}

/// Word `[[a, b], [c, d]] ∈ SL(2,ℤ)` and reduced point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduction {
    pub x: f64,
    pub y: f64,
    /// `γ` with `γ·z_in = z_out`, row-major.
    pub word: [i64; 4],
    pub steps: usize,
}

/// Reduces `x + iy` into `{|z| ≥ 1, Re z ∈ [−1/2, 1/2)}`.
pub fn gauss_reduce(mut x: f64, mut y: f64) -> Result<Reduction> {
    if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
        return domain("point is not in the upper half plane");
    }
    let mut w = [1i64, 0, 0, 1];
    let mut steps = 0;
    loop {
        let n = (x + 0.5).floor();
        if n != 0.0 {
            x -= n;
            let n = n as i64;
            // T^{−n}·w
            w = [w[0] - n * w[2], w[1] - n * w[3], w[2], w[3]];
        }
        let r2 = x * x + y * y;
        if r2 >= 1.0 {
            break;
        }
        x = -x / r2;
        y /= r2;
        // S·w with S = [[0, −1], [1, 0]]
        w = [-w[2], -w[3], w[0], w[1]];
        steps += 1;
        if steps > 100_000 {
            return domain("Gauss reduction did not terminate");
        }
    }
    Ok(Reduction { x, y, word: w, steps })
}

/// `Im(γ z) = y / |c z + d|²`.
pub fn mobius_im(word: [i64; 4], x: f64, y: f64) -> f64 {
    let (c, d) = (word[2] as f64, word[3] as f64);
    let re = c.mul_add(x, d);
    let im = c * y;
    y / (re * re + im * im)
}

/// Möbius action on `x + iy`.
pub fn mobius(word: [i64; 4], x: f64, y: f64) -> (f64, f64) {
    let [a, b, c, d] = word.map(|v| v as f64);
    let (nr, ni) = (a * x + b, a * y);
    let (dr, di) = (c * x + d, c * y);
    let den = dr * dr + di * di;
    ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
}

/// Height of the reduced representative of `z + i e^{−t}`.
pub fn reduced_height(z: f64, t: f64) -> f64 {
    let y = (-t).exp();
    let r = gauss_reduce(z, y).expect("upper half plane");
    mobius_im(r.word, z, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionResult {
    pub height: f64,
    pub argmax: f64,
    /// `(t, reduced height)` samples in increasing `t`.
    pub trace: Vec<(f64, f64)>,
}

impl ExcursionResult {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["t", "reduced_im"]);
        for &(s, h) in &self.trace {
            t.push(vec![fmt_f64(s), fmt_f64(h)]);
        }
        t
    }
}

const REFINE_LEVELS: usize = 3;

/// Maximum over `t ∈ [s₁, s₂]` of the cusp height of `z + i e^{−t}` for
/// the slope of `u`.
pub fn excursion_height(u: Vec2, s1: f64, s2: f64, grid_per_unit: usize) -> Result<ExcursionResult> {
    excursion_height_for_slope(slope_of(u)?, s1, s2, grid_per_unit)
}

/// As [`excursion_height`], for a slope given directly. The grid is refined
/// by bisection around each local maximum.
pub fn excursion_height_for_slope(z: f64, s1: f64, s2: f64, grid_per_unit: usize) -> Result<ExcursionResult> {
    if !(s1 >= 0.0) || !(s2 >= s1) {
        return domain(format!("excursion window needs 0 ≤ s₁ ≤ s₂, got ({s1}, {s2})"));
    }
    let n = (((s2 - s1) * grid_per_unit.max(1) as f64).ceil() as usize).max(1);
    let h = (s2 - s1) / n as f64;
    let mut trace: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let t = if i == n { s2 } else { s1 + h * i as f64 };
            (t, reduced_height(z, t))
        })
        .collect();
    let mut extra = Vec::new();
    for i in 0..trace.len() {
        let left = if i > 0 { trace[i - 1].1 } else { f64::NEG_INFINITY };
        let right = trace.get(i + 1).map_or(f64::NEG_INFINITY, |p| p.1);
        if trace[i].1 >= left && trace[i].1 >= right && n > 1 {
            let (mut tc, mut hc) = trace[i];
            let mut step = h;
            for _ in 0..REFINE_LEVELS {
                step *= 0.5;
                for cand in [tc - step, tc + step] {
                    if cand < s1 || cand > s2 {
                        continue;
                    }
                    let hv = reduced_height(z, cand);
                    extra.push((cand, hv));
                    if hv > hc {
                        (tc, hc) = (cand, hv);
                    }
                }
            }
        }
    }
    trace.extend(extra);
    trace.sort_by(|a, b| a.0.total_cmp(&b.0));
    trace.dedup_by(|a, b| a.0 == b.0);
    let (argmax, height) = trace.iter().copied().fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok(ExcursionResult { height, argmax, trace })
}

/// Named slopes used for the excursion comparison: quadratic irrationals,
/// transcendental floats and rationals.
pub fn slope_bank() -> Vec<(&'static str, CfInput)> {
    let surd = |p, d, q| CfInput::Surd(QuadraticSurd { p, d, q });
    vec![
        ("golden", surd(-1, 5, 2)),
        ("sqrt2-1", surd(-1, 2, 1)),
        ("sqrt3-1", surd(-1, 3, 1)),
        ("(sqrt3-1)/2", surd(-1, 3, 2)),
        ("sqrt5-2", surd(-2, 5, 1)),
        ("sqrt6-2", surd(-2, 6, 1)),
        ("sqrt7-2", surd(-2, 7, 1)),
        ("sqrt10-3", surd(-3, 10, 1)),
        ("(sqrt13-3)/2", surd(-3, 13, 2)),
        ("sqrt2/2", surd(0, 2, 2)),
        ("sqrt11-3", surd(-3, 11, 1)),
        ("e-2", CfInput::Float(std::f64::consts::E - 2.0)),
        ("pi-3", CfInput::Float(std::f64::consts::PI - 3.0)),
        ("1/e", CfInput::Float(1.0 / std::f64::consts::E)),
        ("ln2", CfInput::Float(std::f64::consts::LN_2)),
        ("euler_gamma", CfInput::Float(0.577_215_664_901_532_9)),
        ("0", CfInput::Rational { p: 0, q: 1 }),
        ("2/5", CfInput::Rational { p: 2, q: 5 }),
        ("3/7", CfInput::Rational { p: 3, q: 7 }),
        ("13/21", CfInput::Rational { p: 13, q: 21 }),
    ]
}
