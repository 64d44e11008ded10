//! Orbit sums `S_{f,u}(T) = Σ_{γ∈Γ_T} f(γu)` and the studies built on them:
//! convergence of `S/(T·I)`, scaling sweeps, shrinking targets and point
//! clouds.

use serde::{Deserialize, Serialize};

use crate::density::{compute_support_meta, density_integral, PlaneFunction, SupportMeta, TestFunction, DEFAULT_DELTA0};
use crate::diophantine::{cf_expand, cf_expand_until, slope_of, xi_hat, CfExpansion, CfInput};
use crate::error::{domain, Result};
use crate::lattice::{LatticeElement, LatticeKind, LatticeSpec, NormBall};
use crate::linalg::{norm_estimate_gap, Vec2};
use crate::report::{fmt_f64, Table};
use crate::sum::NeumaierSum;

fn zero() -> f64 {
    0.0
}

fn default_tol() -> f64 {
    1e-8
}

fn default_admissibility() -> f64 {
    4.0
}

fn default_delta0() -> f64 {
    DEFAULT_DELTA0
}

/// One experiment: a lattice, an initial vector, a test function and a grid
/// of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeSpec,
    pub u: Vec2,
    pub f: TestFunction,
    pub t_grid: Vec<f64>,
    /// Scaling exponent: the sum is taken at `u/T^alpha`.
    #[serde(default = "zero")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    /// Absolute tolerance for the density integral.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// The constant `c` in the admissibility thresholds `T ≥ c·D₀` and
    /// `T ≥ c|u|ξ̂/R(f)`.
    #[serde(default = "default_admissibility")]
    pub admissibility_c: f64,
    /// `δ₀` used when forming `B`.
    #[serde(default = "default_delta0")]
    pub delta0: f64,
}

impl ExperimentConfig {
    pub fn new(lattice: LatticeSpec, u: Vec2, f: TestFunction, t_grid: Vec<f64>) -> Self {
        ExperimentConfig {
            lattice,
            u,
            f,
            t_grid,
            alpha: 0.0,
            seed: 0,
            tol: default_tol(),
            admissibility_c: default_admissibility(),
            delta0: DEFAULT_DELTA0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.f.validate()?;
        if self.u.is_degenerate() || !self.u.x.is_finite() || !self.u.y.is_finite() {
            return domain("u must be a finite nonzero vector");
        }
        validate_grid(&self.t_grid)?;
        if !(self.alpha > -1.0 && self.alpha < 1.0) {
            return domain(format!("alpha must lie in (−1, 1), got {}", self.alpha));
        }
        if !(self.tol > 0.0) {
            return domain("tol must be positive");
        }
        Ok(())
    }
}

fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return domain("T grid is empty");
    }
    if t_grid.iter().any(|t| !(*t >= 1.0 && t.is_finite())) {
        return domain("every T must be finite and at least 1");
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("T grid must be strictly increasing");
    }
    Ok(())
}

/// Orbit sums of several functions over a grid of radii, from one pass over
/// the largest ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitSums {
    pub t_grid: Vec<f64>,
    /// `sums[i][j] = S_{f_i,u}(T_j)`.
    pub sums: Vec<Vec<f64>>,
    /// Number of nonzero terms, same layout.
    pub terms: Vec<Vec<u64>>,
    /// Contributing `γ` with `|‖γ‖ − |c_u(γ)|(γu⋆u)| > D(u, f_i)`.
    pub norm_estimate_violations: Vec<u64>,
    /// Largest `|‖γ‖ − |c_u(γ)|(γu⋆u)| / D(u, f_i)` seen.
    pub norm_estimate_max_ratio: Vec<f64>,
}

/// Relative slack on the norm-estimate filter, for rounding in `c_u(γ)`.
const NORM_ESTIMATE_SLACK: f64 = 1e-6;

/// `S_{f_i,u}(T_j)` for every function and radius. With `distortions`
/// given, each contributing term is also checked against the norm estimate
/// `|‖γ‖ − |c_u(γ)|(γu⋆u)| ≤ D(u, f_i)`.
pub fn orbit_sums<F: PlaneFunction>(spec: LatticeSpec, u: Vec2, fs: &[F], t_grid: &[f64], distortions: Option<&[f64]>) -> Result<OrbitSums> {
    validate_grid(t_grid)?;
    if u.is_degenerate() {
        return domain("u must be nonzero");
    }
    if let Some(d) = distortions {
        if d.len() != fs.len() {
            return domain("one distortion per function is required");
        }
    }
    let balls: Vec<NormBall> = t_grid.iter().map(|&t| NormBall::new(spec, t)).collect::<Result<_>>()?;
    let outer = balls.last().expect("grid is nonempty");
    let nf = fs.len();
    let nt = t_grid.len();
    struct RowAcc {
        buckets: Vec<Vec<NeumaierSum>>,
        counts: Vec<Vec<u64>>,
        violations: Vec<u64>,
        max_ratio: Vec<f64>,
    }
    let rows = outer.par_map_rows(|row| {
        let mut acc = RowAcc {
            buckets: vec![vec![NeumaierSum::new(); nt]; nf],
            counts: vec![vec![0; nt]; nf],
            violations: vec![0; nf],
            max_ratio: vec![0.0; nf],
        };
        for gamma in row {
            let m = gamma.matrix();
            let w = m.apply(u);
            let mut bucket = None;
            for (i, f) in fs.iter().enumerate() {
                let val = f.eval(w);
                if val == 0.0 {
                    continue;
                }
                let b = *bucket.get_or_insert_with(|| balls.iter().position(|ball| ball.contains(gamma)).unwrap_or(nt - 1));
                acc.buckets[i][b].add(val);
                acc.counts[i][b] += 1;
                if let Some(ds) = distortions {
                    let gap = norm_estimate_gap(u, &m, spec.norm).map(f64::abs).unwrap_or(f64::INFINITY);
                    acc.max_ratio[i] = acc.max_ratio[i].max(gap / ds[i]);
                    if gap > ds[i] * (1.0 + NORM_ESTIMATE_SLACK) {
                        acc.violations[i] += 1;
                    }
                }
            }
        }
        acc
    });
    let mut buckets = vec![vec![NeumaierSum::new(); nt]; nf];
    let mut counts = vec![vec![0u64; nt]; nf];
    let mut violations = vec![0u64; nf];
    let mut max_ratio = vec![0.0f64; nf];
    for r in &rows {
        for i in 0..nf {
            for j in 0..nt {
                buckets[i][j].merge(&r.buckets[i][j]);
                counts[i][j] += r.counts[i][j];
            }
            violations[i] += r.violations[i];
            max_ratio[i] = max_ratio[i].max(r.max_ratio[i]);
        }
    }
    // cumulative over the grid: Γ_{T_j} is the union of buckets 0..=j
    let mut sums = vec![vec![0.0; nt]; nf];
    let mut terms = vec![vec![0u64; nt]; nf];
    for i in 0..nf {
        let mut run = NeumaierSum::new();
        let mut cnt = 0;
        for j in 0..nt {
            run.merge(&buckets[i][j]);
            cnt += counts[i][j];
            sums[i][j] = run.value();
            terms[i][j] = cnt;
        }
    }
    Ok(OrbitSums { t_grid: t_grid.to_vec(), sums, terms, norm_estimate_violations: violations, norm_estimate_max_ratio: max_ratio })
}

/// `S_{f,u}(T)` at the configuration's `u` (no scaling).
pub fn orbit_sum(cfg: &ExperimentConfig, t: f64) -> Result<f64> {
    Ok(orbit_sums(cfg.lattice, cfg.u, std::slice::from_ref(&cfg.f), &[t], None)?.sums[0][0])
}

/// Least-squares slope of `log y` against `log x` over the positive pairs.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// A non-fatal condition attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Warning {
    pub code: String,
    pub message: String,
}

/// Largest denominator for which a terminating slope expansion is treated as
/// a genuinely rational (discrete-orbit) slope.
const DISCRETE_ORBIT_MAX_Q: i128 = 1_000_000;

/// For SL(2,ℤ), warns when the slope of `u` is rational with a small
/// denominator: such orbits are discrete.
pub fn discrete_orbit_warning(spec: LatticeSpec, u: Vec2) -> Result<Option<Warning>> {
    if spec.kind != LatticeKind::Sl2Z {
        return Ok(None);
    }
    let z = slope_of(u)?;
    let z = if z == 1.0 { 0.0 } else { z };
    let e = cf_expand(&CfInput::Float(z), 64)?;
    if let Some(k0) = e.k0() {
        let q = e.convergents[k0].1;
        if q <= DISCRETE_ORBIT_MAX_Q {
            return Ok(Some(Warning {
                code: "discrete_orbit".into(),
                message: format!("slope {} = {}/{} is rational; the orbit of u is discrete", z, e.convergents[k0].0, q),
            }));
        }
    }
    Ok(None)
}

/// `ξ̂(u, log(T|u|/R(f)), log(T|u|/r(f)))`, with the window clamped at 0.
pub fn xi_hat_for_run(r_f: f64, big_r_f: f64, t: f64, u: Vec2, exp: &CfExpansion) -> Result<f64> {
    if !(t >= 1.0) {
        return domain("T must be at least 1");
    }
    let nu = u.sup_norm();
    let tau2 = (t * nu / r_f).ln().max(0.0);
    let tau1 = (t * nu / big_r_f).ln().max(0.0).min(tau2);
    xi_hat(exp, tau1, tau2)
}

/// The slope expansion used for `ξ̂` in a run: exact surds are not
/// recoverable from a float, so the float's own expansion is used.
pub fn slope_expansion(u: Vec2, tau: f64) -> Result<CfExpansion> {
    let z = slope_of(u)?;
    let z = if z == 1.0 { 0.0 } else { z };
    cf_expand_until(&CfInput::Float(z), tau)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub s: f64,
    pub terms: u64,
    pub integral: f64,
    /// `S/(T·I)`.
    pub ratio: f64,
    /// `|S − 2T·I/μ̂|`.
    pub err: f64,
    /// `T ≥ c·D₀`.
    pub admissible_d0: bool,
    /// `ξ̂(u, …)` for SL(2,ℤ); `None` for cocompact lattices.
    pub xi_hat: Option<f64>,
    /// `T ≥ c|u|ξ̂/R(f)` for SL(2,ℤ).
    pub admissible_xi: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub integral: f64,
    pub integral_error: f64,
    /// `2/slope` of the least-squares line through the origin of `S`
    /// against `T·I`.
    pub mu_hat: f64,
    /// Log-log slope of `|ratio(T) − ratio(T_max)|` over the rows before the
    /// last.
    pub error_exponent: Option<f64>,
    pub meta: SupportMeta,
    pub norm_estimate_violations: u64,
    pub norm_estimate_max_ratio: f64,
    pub warnings: Vec<Warning>,
}

impl ConvergenceReport {
    pub fn final_ratio(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.ratio)
    }

    /// `|ratio(T) − ratio(T_max)|` for every row.
    pub fn ratio_gaps(&self) -> Vec<f64> {
        let last = self.final_ratio();
        self.rows.iter().map(|r| (r.ratio - last).abs()).collect()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["T", "S", "terms", "I", "ratio", "err", "admissible_d0", "xi_hat"]);
        for r in &self.rows {
            t.push(vec![
                fmt_f64(r.t),
                fmt_f64(r.s),
                r.terms.to_string(),
                fmt_f64(r.integral),
                fmt_f64(r.ratio),
                fmt_f64(r.err),
                r.admissible_d0.to_string(),
                r.xi_hat.map_or_else(String::new, fmt_f64),
            ]);
        }
        t
    }
}

/// Convergence of `S_{f,u}(T)/(T·∫ f/(v⋆u))` along the grid.
pub fn convergence_study(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let norm = cfg.lattice.norm;
    let mut warnings = Vec::new();
    if let Some(w) = discrete_orbit_warning(cfg.lattice, cfg.u)? {
        warnings.push(w);
    }
    let meta = compute_support_meta(&cfg.f, cfg.u, norm, cfg.delta0)?;
    let integral = density_integral(&cfg.f, cfg.u, norm, cfg.tol)?;
    let sums = orbit_sums(cfg.lattice, cfg.u, std::slice::from_ref(&cfg.f), &cfg.t_grid, Some(&[meta.d]))?;
    let i = integral.value;
    let x: Vec<f64> = cfg.t_grid.iter().map(|t| t * i).collect();
    let s = &sums.sums[0];
    let slope = x.iter().zip(s).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
    let mu_hat = 2.0 / slope;
    let t_max = *cfg.t_grid.last().expect("nonempty");
    let exp = if cfg.lattice.kind == LatticeKind::Sl2Z {
        Some(slope_expansion(cfg.u, (t_max * cfg.u.sup_norm() / meta.r_f).ln().max(0.0))?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(cfg.t_grid.len());
    for (j, &t) in cfg.t_grid.iter().enumerate() {
        let xi = match &exp {
            Some(e) => Some(xi_hat_for_run(meta.r_f, meta.big_r_f, t, cfg.u, e)?),
            None => None,
        };
        rows.push(ConvergenceRow {
            t,
            s: s[j],
            terms: sums.terms[0][j],
            integral: i,
            ratio: s[j] / (t * i),
            err: (s[j] - slope * t * i).abs(),
            admissible_d0: t >= cfg.admissibility_c * meta.d0,
            xi_hat: xi,
            admissible_xi: xi.map(|xi| t >= cfg.admissibility_c * cfg.u.sup_norm() * xi / meta.big_r_f),
        });
    }
    let last = rows.last().map_or(f64::NAN, |r| r.ratio);
    let n = rows.len().saturating_sub(1);
    let ts: Vec<f64> = rows[..n].iter().map(|r| r.t).collect();
    let gaps: Vec<f64> = rows[..n].iter().map(|r| (r.ratio - last).abs()).collect();
    let error_exponent = loglog_slope(&ts, &gaps);
    Ok(ConvergenceReport {
        rows,
        integral: i,
        integral_error: integral.error,
        mu_hat,
        error_exponent,
        meta,
        norm_estimate_violations: sums.norm_estimate_violations[0],
        norm_estimate_max_ratio: sums.norm_estimate_max_ratio[0],
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub t: f64,
    /// `T^{−(1+α)} Σ_{γ∈Γ_T} f(γu/T^α)`.
    pub normalized: f64,
    /// `normalized / ∫ f/(v⋆u)`.
    pub ratio: f64,
    pub terms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub alpha: f64,
    pub integral: f64,
    pub rows: Vec<ScalingRow>,
    /// Log-log slope of `|ratio(T) − ratio(T_max)|`.
    pub error_exponent: Option<f64>,
    /// `min(1 − |α|, θδ₀(1 + α))`.
    pub predicted_delta: f64,
    /// Set when `1 − |α|` is small enough that convergence is expected to
    /// be slow.
    pub slow_convergence: bool,
    pub warnings: Vec<Warning>,
}

impl ScalingReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["T", "normalized", "ratio", "terms"]);
        for r in &self.rows {
            t.push(vec![fmt_f64(r.t), fmt_f64(r.normalized), fmt_f64(r.ratio), r.terms.to_string()]);
        }
        t
    }
}

/// Below this value of `1 − |α|` a scaling run is flagged as slow.
const SLOW_SCALING_MARGIN: f64 = 0.05;

/// `T^{−(1+α)} Σ_{γ∈Γ_T} f(γu/T^α)` along the grid, compared with
/// `∫ f/(v⋆u)`.
pub fn scaling_sweep(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    let norm = cfg.lattice.norm;
    let integral = density_integral(&cfg.f, cfg.u, norm, cfg.tol)?.value;
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for &t in &cfg.t_grid {
        let u_t = cfg.u.scale(t.powf(-cfg.alpha));
        if let Some(w) = discrete_orbit_warning(cfg.lattice, u_t)? {
            if warnings.is_empty() {
                warnings.push(w);
            }
        }
        let s = orbit_sums(cfg.lattice, u_t, std::slice::from_ref(&cfg.f), &[t], None)?;
        let normalized = s.sums[0][0] / t.powf(1.0 + cfg.alpha);
        rows.push(ScalingRow { t, normalized, ratio: normalized / integral, terms: s.terms[0][0] });
    }
    let last = rows.last().map_or(f64::NAN, |r| r.ratio);
    let n = rows.len().saturating_sub(1);
    let error_exponent = loglog_slope(
        &rows[..n].iter().map(|r| r.t).collect::<Vec<_>>(),
        &rows[..n].iter().map(|r| (r.ratio - last).abs()).collect::<Vec<_>>(),
    );
    let predicted_delta = (1.0 - cfg.alpha.abs()).min(cfg.f.theta * cfg.delta0 * (1.0 + cfg.alpha));
    Ok(ScalingReport {
        alpha: cfg.alpha,
        integral,
        rows,
        error_exponent,
        predicted_delta,
        slow_convergence: 1.0 - cfg.alpha.abs() < SLOW_SCALING_MARGIN,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetRow {
    pub t: f64,
    pub distance: f64,
    pub gamma: [i64; 4],
    pub point: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetReport {
    pub target: Vec2,
    pub rows: Vec<TargetRow>,
    /// Log-log slope of the minimal distance against `T`.
    pub fitted_exponent: Option<f64>,
}

impl TargetReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["T", "distance", "g11", "g12", "g21", "g22", "x", "y"]);
        for r in &self.rows {
            let mut row = vec![fmt_f64(r.t), fmt_f64(r.distance)];
            row.extend(r.gamma.iter().map(|c| c.to_string()));
            row.extend([fmt_f64(r.point.x), fmt_f64(r.point.y)]);
            t.push(row);
        }
        t
    }
}

/// For each `T`, the `γ ∈ Γ_T` minimising `|γu − v|` (sup norm); ties go to
/// the canonically smaller `γ`.
pub fn shrinking_target_search(spec: LatticeSpec, u: Vec2, v: Vec2, t_grid: &[f64]) -> Result<TargetReport> {
    validate_grid(t_grid)?;
    if u.is_degenerate() {
        return domain("u must be nonzero");
    }
    let balls: Vec<NormBall> = t_grid.iter().map(|&t| NormBall::new(spec, t)).collect::<Result<_>>()?;
    let outer = balls.last().expect("nonempty");
    let nt = t_grid.len();
    type Best = Option<(f64, LatticeElement)>;
    let better = |a: &Best, d: f64, g: &LatticeElement| match a {
        None => true,
        Some((bd, bg)) => d < *bd || (d == *bd && g < bg),
    };
    let per_row: Vec<Vec<Best>> = outer.par_map_rows(|row| {
        let mut best: Vec<Best> = vec![None; nt];
        for g in row {
            let d = (g.matrix().apply(u) - v).sup_norm();
            // only candidates that can improve some bucket need the exact test
            if !(0..nt).any(|j| better(&best[j], d, g)) {
                continue;
            }
            let b = balls.iter().position(|ball| ball.contains(g)).unwrap_or(nt - 1);
            if better(&best[b], d, g) {
                best[b] = Some((d, *g));
            }
        }
        best
    });
    let mut rows = Vec::with_capacity(nt);
    let mut running: Best = None;
    for j in 0..nt {
        for r in &per_row {
            if let Some((d, g)) = &r[j] {
                if better(&running, *d, g) {
                    running = Some((*d, *g));
                }
            }
        }
        let (d, g) = running.ok_or_else(|| crate::error::Error::Domain("empty ball".into()))?;
        rows.push(TargetRow { t: t_grid[j], distance: d, gamma: g.coords(), point: g.matrix().apply(u) });
    }
    let fitted_exponent = loglog_slope(&rows.iter().map(|r| r.t).collect::<Vec<_>>(), &rows.iter().map(|r| r.distance).collect::<Vec<_>>());
    Ok(TargetReport { target: v, rows, fitted_exponent })
}

/// Axis-aligned view window `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn centered(half: f64) -> Self {
        Window { x0: -half, x1: half, y0: -half, y1: half }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.x0 <= p.x && p.x <= self.x1 && self.y0 <= p.y && p.y <= self.y1
    }
}

/// Points `γu`, `γ ∈ Γ_T`, inside the window, in canonical order of `γ`.
pub fn cloud_export(spec: LatticeSpec, u: Vec2, t: f64, window: Window) -> Result<Vec<Vec2>> {
    let ball = NormBall::new(spec, t)?;
    let rows = ball.par_map_rows(|row| row.iter().map(|g| g.matrix().apply(u)).filter(|p| window.contains(*p)).collect::<Vec<_>>());
    Ok(rows.into_iter().flatten().collect())
}

pub fn cloud_table(points: &[Vec2]) -> Table {
    let mut t = Table::new(&["x", "y"]);
    for p in points {
        t.push(vec![fmt_f64(p.x), fmt_f64(p.y)]);
    }
    t
}
