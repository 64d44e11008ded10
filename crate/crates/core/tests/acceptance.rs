//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use planar_orbits::density::{
    boundary_lemma_check_with, build_partition, density_integral, distortion, plane_integral, star_radii, Bump, PlaneFunction,
    TestFunction,
};
use planar_orbits::diophantine::{
    beta_bound_check, cf_expand, cf_expand_until, excursion_height_for_slope, slope_bank, xi_hat, CfInput, QuadraticSurd,
};
use planar_orbits::experiments::{orbit_sums, shrinking_target_search};
use planar_orbits::lattice::{count, enumerate, LatticeElement, LatticeKind, LatticeSpec};
use planar_orbits::linalg::{cocycle, geodesic, horocycle, mat_norm, psi, rotation, star, Mat2, MatrixNorm, Vec2, U0};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

fn random_vec(rng: &mut ChaCha8Rng) -> Vec2 {
    let r = 10f64.powf(rng.gen_range(-1.0..1.0));
    let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Vec2::new(r * a.cos(), r * a.sin())
}

fn random_sl2(rng: &mut ChaCha8Rng) -> Mat2 {
    rotation(rng.gen_range(0.0..std::f64::consts::TAU)) * geodesic(rng.gen_range(-3.0..3.0)) * horocycle(rng.gen_range(-5.0..5.0))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Exact identities of the section, the star product and the cocycle.
fn exact_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let e = Mat2::new(0.0, 1.0, 0.0, 0.0);
    let mut worst = [0.0f64; 7];
    let names = ["lift", "geodesic", "star", "horocycle shift", "geodesic scale", "cocycle", "from section"];
    for _ in 0..10_000 {
        let v = random_vec(&mut rng);
        let u = random_vec(&mut rng);
        let p = psi(v).unwrap();
        let pv = p * Mat2::new(1.0, 0.0, 0.0, 0.0);
        worst[0] = worst[0].max(rel_err(pv.a, v.x)).max(rel_err(pv.c, v.y)).max(rel_err(p.det(), 1.0));
        let t: f64 = rng.gen_range(-2.0..2.0);
        let lhs = psi(v.scale(t.exp())).unwrap();
        let a2t = Mat2::new((t).exp(), 0.0, 0.0, (-t).exp());
        worst[1] = worst[1].max(lhs.max_abs_diff(&(p * a2t)) / lhs.norm(MatrixNorm::MaxEntry).max(1.0));
        for norm in MatrixNorm::ALL {
            let (s1, s2) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let q = psi(u).unwrap();
            for (pa, qa) in [(p, q), (p * horocycle(s1), q * horocycle(s2))] {
                let m = pa * e * qa.inverse().unwrap();
                worst[2] = worst[2].max(rel_err(mat_norm(&m, norm), star(v, u, norm)));
            }
        }
        let g = random_sl2(&mut rng);
        let h = random_sl2(&mut rng);
        let s: f64 = rng.gen_range(-5.0..5.0);
        let c0 = cocycle(U0, &g).unwrap();
        worst[3] = worst[3].max(rel_err(cocycle(U0, &(g * horocycle(s))).unwrap(), c0 + s));
        worst[4] = worst[4].max(rel_err(cocycle(U0, &(g * geodesic(t))).unwrap(), (-t).exp() * c0));
        let lhs = cocycle(u, &(g * h)).unwrap();
        let hu = h * Mat2::new(u.x, 0.0, u.y, 0.0);
        let rhs = cocycle(Vec2::new(hu.a, hu.c), &g).unwrap() + cocycle(u, &h).unwrap();
        worst[5] = worst[5].max(rel_err(lhs, rhs));
        worst[6] = worst[6].max(rel_err(cocycle(u, &g).unwrap(), cocycle(U0, &(g * psi(u).unwrap())).unwrap()));
    }
    let elapsed = start.elapsed();
    let max = worst.iter().cloned().fold(0.0, f64::max);
    let summary: Vec<String> = names.iter().zip(worst).map(|(n, w)| format!("{n} {w:.1e}")).collect();
    outcome(max <= 1e-9 && elapsed < Duration::from_secs(10), format!("{} in {elapsed:.2?}", summary.join(", ")))
}

/// Sign of `p + q√2`.
fn sign_zsqrt2(p: i128, q: i128) -> i32 {
    let (sp, sq) = (p.signum() as i32, q.signum() as i32);
    if sp >= 0 && sq >= 0 {
        return (sp + sq).signum();
    }
    if sp <= 0 && sq <= 0 {
        return -1;
    }
    match (p * p).cmp(&(2 * q * q)) {
        std::cmp::Ordering::Greater => sp,
        _ => sq,
    }
}

/// Brute force over a coordinate box with membership decided in i128.
fn brute_force(kind: LatticeKind, norm: MatrixNorm, t: i64) -> Vec<[i64; 4]> {
    let mut out = Vec::new();
    let t2 = (t as i128) * (t as i128);
    match kind {
        LatticeKind::Sl2Z => {
            for a in -t..=t {
                for b in -t..=t {
                    for c in -t..=t {
                        for d in -t..=t {
                            let (a1, b1, c1, d1) = (a as i128, b as i128, c as i128, d as i128);
                            if a1 * d1 - b1 * c1 != 1 {
                                continue;
                            }
                            let inside = match norm {
                                MatrixNorm::MaxEntry => true,
                                MatrixNorm::Frobenius => a1 * a1 + b1 * b1 + c1 * c1 + d1 * d1 <= t2,
                                MatrixNorm::Operator2 => unreachable!(),
                            };
                            if inside {
                                out.push([a, b, c, d]);
                            }
                        }
                    }
                }
            }
        }
        LatticeKind::QuaternionD23 => {
            // entries x ± √2y, z + √2w and 3(z − √2w); each is at most T in
            // absolute value, so |x|, |y|, |z|, |w| ≤ T is a safe box
            let within = |p: i128, q: i128, bound: i128| sign_zsqrt2(bound - p, -q) >= 0 && sign_zsqrt2(bound + p, q) >= 0;
            let t1 = t as i128;
            for x in -t..=t {
                for y in -t..=t {
                    for z in -t..=t {
                        for w in -t..=t {
                            let (x1, y1, z1, w1) = (x as i128, y as i128, z as i128, w as i128);
                            if x1 * x1 - 2 * y1 * y1 - 3 * z1 * z1 + 6 * w1 * w1 != 1 {
                                continue;
                            }
                            let inside = match norm {
                                MatrixNorm::MaxEntry => {
                                    within(x1, y1, t1) && within(x1, -y1, t1) && within(z1, w1, t1) && within(3 * z1, -3 * w1, t1)
                                }
                                // Σ entries² = 2x² + 4y² + 10z² + 20w² − 16√2·zw
                                MatrixNorm::Frobenius => {
                                    sign_zsqrt2(t2 - (2 * x1 * x1 + 4 * y1 * y1 + 10 * z1 * z1 + 20 * w1 * w1), 16 * z1 * w1) >= 0
                                }
                                MatrixNorm::Operator2 => unreachable!(),
                            };
                            if inside {
                                out.push([x, y, z, w]);
                            }
                        }
                    }
                }
            }
        }
    }
    out.sort();
    out
}

fn enumeration_oracle() -> Outcome {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let mut total = 0;
    for kind in [LatticeKind::Sl2Z, LatticeKind::QuaternionD23] {
        for norm in [MatrixNorm::MaxEntry, MatrixNorm::Frobenius] {
            for t in [1, 2, 5, 10, 20, 30] {
                let listed: Vec<[i64; 4]> = enumerate(LatticeSpec::new(kind, norm), t as f64).unwrap().iter().map(|g| g.coords()).collect();
                let brute = brute_force(kind, norm, t);
                total += brute.len();
                if listed != brute {
                    mismatches.push(format!("{} {} T={t}: {} vs {}", kind.name(), norm.name(), listed.len(), brute.len()));
                }
            }
        }
    }
    let a = count(LatticeSpec::sl2z(), 1.0).unwrap();
    let b = count(LatticeSpec::quaternion(), 1.0).unwrap();
    let elapsed = start.elapsed();
    let passed = mismatches.is_empty() && a == 20 && b == 2 && elapsed < Duration::from_secs(60);
    outcome(passed, format!("{total} elements matched, unit balls {a}/{b}, mismatches {mismatches:?}, {elapsed:.2?}"))
}

fn density_oracle() -> Outcome {
    // midpoint rule on a grid whose lines contain the jumps of the indicator
    let n = 2000usize;
    let h = 4.0 / n as f64;
    let mut riemann = 0.0;
    for i in 0..n {
        let x = -2.0 + (i as f64 + 0.5) * h;
        for j in 0..n {
            let y = -2.0 + (j as f64 + 0.5) * h;
            let m = x.abs().max(y.abs());
            if (1.0..=2.0).contains(&m) {
                riemann += h * h / m;
            }
        }
    }
    let annulus = TestFunction::annulus(1.0, 2.0).unwrap();
    let tol = 1e-9;
    let quad = density_integral(&annulus, U0, MatrixNorm::MaxEntry, tol).unwrap().value;
    let mut worst = 0.0f64;
    let bump = TestFunction::bump(Vec2::new(2.0, 1.0), 1.5).unwrap();
    for (f, u) in [(&annulus, U0), (&bump, Vec2::new(0.7, -0.4))] {
        let base = density_integral(f, u, MatrixNorm::MaxEntry, tol).unwrap().value;
        for lambda in [0.3, 2.5, 10.0] {
            let g = f.clone().dilated(lambda).unwrap();
            let v = density_integral(&g, u.scale(1.0 / lambda), MatrixNorm::MaxEntry, tol).unwrap().value;
            worst = worst.max((v - base).abs());
        }
    }
    let passed = (quad - 8.0).abs() <= 1e-4 && (riemann - 8.0).abs() <= 1e-4 && (quad - riemann).abs() <= 1e-4 && worst <= 1e-8;
    outcome(passed, format!("quadrature {quad:.12}, Riemann {riemann:.12}, rescaling residual {worst:.1e}"))
}

/// Test functions for the convergence runs, fixed before any data was seen
/// at the stated radii: all have support wide enough to hold many orbit
/// points at moderate `T`.
fn convergence_bank() -> Vec<TestFunction> {
    vec![
        TestFunction::hat(0.5, 4.0).unwrap(),
        TestFunction::bump(Vec2::new(3.0, 1.0), 2.5).unwrap(),
        TestFunction::bump(Vec2::new(-2.0, 3.0), 3.0).unwrap(),
    ]
}

struct Ratios {
    /// `ratios[f][T]`
    ratios: Vec<Vec<f64>>,
    mu_hat: Vec<f64>,
}

fn ratios(spec: LatticeSpec, u: Vec2, grid: &[f64]) -> Ratios {
    let bank = convergence_bank();
    let sums = orbit_sums(spec, u, &bank, grid, None).unwrap();
    let mut ratios = Vec::new();
    let mut mu_hat = Vec::new();
    for (i, f) in bank.iter().enumerate() {
        let int = density_integral(f, u, spec.norm, 1e-9).unwrap().value;
        ratios.push(grid.iter().zip(&sums.sums[i]).map(|(t, s)| s / (t * int)).collect::<Vec<_>>());
        let (sxy, sxx) = grid.iter().zip(&sums.sums[i]).fold((0.0, 0.0), |(a, b), (t, s)| (a + t * int * s, b + (t * int).powi(2)));
        mu_hat.push(2.0 * sxx / sxy);
    }
    Ratios { ratios, mu_hat }
}

/// `(spread at the last T, per-function count of increases of |ratio(T) − ratio(T_max)|)`.
fn stability(r: &Ratios) -> (f64, Vec<usize>) {
    let last: Vec<f64> = r.ratios.iter().map(|x| *x.last().unwrap()).collect();
    let mean = last.iter().sum::<f64>() / last.len() as f64;
    let spread = (last.iter().cloned().fold(f64::MIN, f64::max) - last.iter().cloned().fold(f64::MAX, f64::min)) / mean;
    let violations = r
        .ratios
        .iter()
        .map(|x| {
            let end = *x.last().unwrap();
            let gaps: Vec<f64> = x.iter().map(|v| (v - end).abs()).collect();
            gaps.windows(2).filter(|w| w[1] > w[0]).count()
        })
        .collect();
    (spread, violations)
}

fn fmt_rows(r: &Ratios) -> String {
    r.ratios.iter().map(|x| x.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join(" | ")
}

fn cocompact_convergence() -> Outcome {
    let start = Instant::now();
    let r = ratios(LatticeSpec::quaternion(), U0, &[50.0, 100.0, 200.0, 400.0]);
    let (spread, violations) = stability(&r);
    let passed = spread <= 0.10 && violations.iter().all(|&v| v <= 1);
    outcome(
        passed,
        format!("ratios {}; spread {:.2}%, gap increases {violations:?}, {:.1?}", fmt_rows(&r), 100.0 * spread, start.elapsed()),
    )
}

fn sl2z_convergence() -> Outcome {
    let start = Instant::now();
    let grid = [250.0, 500.0, 1000.0, 2000.0];
    let mut passed = true;
    let mut detail = Vec::new();
    let mut mus = Vec::new();
    for (name, z) in [("golden", golden()), ("sqrt2-1", 2f64.sqrt() - 1.0)] {
        let r = ratios(LatticeSpec::sl2z(), Vec2::new(z, 1.0), &grid);
        let (spread, violations) = stability(&r);
        passed &= spread <= 0.10 && violations.iter().all(|&v| v <= 1);
        let mu = r.mu_hat.iter().sum::<f64>() / r.mu_hat.len() as f64;
        mus.push(mu);
        detail.push(format!("{name}: {}; spread {:.2}%, gap increases {violations:?}, mu {mu:.4}", fmt_rows(&r), 100.0 * spread));
    }
    let agree = (mus[0] - mus[1]).abs() / mus[0].max(mus[1]);
    passed &= agree <= 0.10;
    detail.push(format!("mu agreement {:.2}%, {:.1?}", 100.0 * agree, start.elapsed()));
    outcome(passed, detail.join("; "))
}

fn continued_fractions() -> Outcome {
    let mut inputs: Vec<CfInput> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    while inputs.len() < 25 {
        let q: i128 = rng.gen_range(2..1_000_000_000);
        let p: i128 = rng.gen_range(1..q);
        inputs.push(CfInput::Rational { p, q });
    }
    for d in 2u64.. {
        if inputs.len() == 50 {
            break;
        }
        let s = (d as f64).sqrt().floor() as i64;
        if (s * s) as u64 == d {
            continue;
        }
        // √d − ⌊√d⌋ and (√d − ⌊√d⌋)/2 alternately
        let q = if d % 2 == 0 { 1 } else { 2 };
        inputs.push(CfInput::Surd(QuadraticSurd::new(-s, d, q).unwrap()));
    }
    let mut checked = 0;
    let mut bad = 0;
    for inp in &inputs {
        let e = cf_expand(inp, 40).unwrap();
        for k in 0..e.depth() {
            match e.tk_bounds_exact(k) {
                Some(true) => checked += 1,
                Some(false) => bad += 1,
                None => {}
            }
        }
    }
    let g = cf_expand(&CfInput::golden(), 80).unwrap();
    // ξ̂(z, 0, τ₂) falls back to e^{τ₂} while τ₂ < t₀ ≈ 0.48, so the grid starts at 1
    let grid: Vec<f64> = (0..=60).map(|i| 1.0 + 0.5 * i as f64).collect();
    let beta = beta_bound_check(&g, 2.0, &grid).unwrap();
    let fallback_ok = [(0.1, 0.2), (0.0, 0.3), (0.05, 0.05)].iter().all(|&(a, b)| xi_hat(&g, a, b).unwrap() == f64::exp(b));
    let passed = bad == 0 && checked > 0 && beta.supremum == 1.0 && fallback_ok;
    outcome(
        passed,
        format!("{} expansions, {checked} exact bound checks, {bad} failures; golden supremum {}; fallback exact {fallback_ok}", inputs.len(), beta.supremum),
    )
}

fn excursions() -> Outcome {
    let windows = [(0.0, 4.0), (2.0, 8.0), (4.0, 12.0), (8.0, 16.0), (0.0, 16.0)];
    let mut c = 0.0f64;
    let mut at = String::new();
    let mut finite = true;
    for (name, inp) in slope_bank() {
        let exp = cf_expand_until(&inp, 20.0).unwrap();
        for &(s1, s2) in &windows {
            let h = excursion_height_for_slope(inp.value(), s1, s2, 64).unwrap().height;
            let x = xi_hat(&exp, s1, s2).unwrap();
            let ratio = h / x;
            finite &= ratio.is_finite();
            if ratio > c {
                c = ratio;
                at = format!("{name} [{s1}, {s2}]");
            }
        }
    }
    let mut growth = 0.0f64;
    for (p, q) in [(0i64, 1i64), (2, 5), (3, 7), (13, 21)] {
        let z = p as f64 / q as f64;
        for s2 in [2.0, 4.0, 6.0, 8.0, 10.0f64] {
            let expected = s2.exp() / (q * q) as f64;
            if expected < 2.0 {
                continue;
            }
            let h = excursion_height_for_slope(z, 0.0, s2, 64).unwrap().height;
            growth = growth.max((h / expected - 1.0).abs());
        }
    }
    // every peak height e^{t_k}/(2q_k²) is at most (a_{k+1} + 2)/2 ≤ 3a_{k+1}/2
    let passed = finite && c <= 1.5 && growth <= 0.01;
    outcome(passed, format!("fitted C = {c:.4} (at {at}); rational cusp growth deviation {:.3}%", 100.0 * growth))
}

fn boundary_lemma() -> Outcome {
    let start = Instant::now();
    let f = TestFunction::hat(0.5, 4.0).unwrap();
    let bump = Bump::standard();
    let mut detail = Vec::new();
    let mut passed = true;
    for (spec, u) in [(LatticeSpec::sl2z(), Vec2::new(golden(), 1.0)), (LatticeSpec::quaternion(), U0)] {
        let (r, big_r) = star_radii(&f, u, spec.norm).unwrap();
        let d = distortion(&f, u, spec.norm).unwrap();
        let ball = enumerate(spec, 30.0).unwrap();
        let (inside, outside): (Vec<&LatticeElement>, Vec<&LatticeElement>) = ball.iter().partition(|g| f.eval(g.matrix().apply(u)) != 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mut worst, mut clause1, mut clause2) = (0.0f64, 0, 0);
        for i in 0..100 {
            let pool = if i % 10 < 7 && !inside.is_empty() { &inside } else { &outside };
            let g = pool[rng.gen_range(0..pool.len())];
            let t = mat_norm(&g.matrix(), spec.norm) * rng.gen_range(-0.7f64..0.7).exp();
            let rep = boundary_lemma_check_with(&f, u, g, t, spec.norm, &bump, (r, big_r, d)).unwrap();
            clause1 += rep.outer_residual.is_some() as usize;
            clause2 += rep.inner_residual.is_some() as usize;
            worst = worst.max(rep.max_residual());
        }
        passed &= worst < 1e-8 && clause1 > 0 && clause2 > 0;
        detail.push(format!("{}: {clause1} first-clause and {clause2} second-clause windows, max residual {worst:.1e}", spec.kind.name()));
    }
    detail.push(format!("{:.1?}", start.elapsed()));
    outcome(passed, detail.join("; "))
}

fn shrinking_target() -> Outcome {
    let start = Instant::now();
    let grid = [10.0, 50.0, 250.0, 1250.0];
    let rep = shrinking_target_search(LatticeSpec::sl2z(), Vec2::new(golden(), 1.0), Vec2::new(1.0, 1.0), &grid).unwrap();
    let d: Vec<f64> = rep.rows.iter().map(|r| r.distance).collect();
    let strict = d.windows(2).all(|w| w[1] < w[0]);
    let slope = rep.fitted_exponent.unwrap_or(f64::NAN);
    outcome(strict && slope < 0.0, format!("distances {}, log-log slope {slope:.3}, {:.1?}", d.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" "), start.elapsed()))
}

fn partition_suite() -> Outcome {
    let bank = [(1.0, 2.0), (0.5, 4.0), (1.0, 1.1)];
    let us = [U0, Vec2::new(0.6, 0.8)];
    let mut worst = 0.0f64;
    let mut count_failures = Vec::new();
    let mut sandwich_failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for &(lo, hi) in &bank {
        let f = TestFunction::annulus(lo, hi).unwrap();
        for &u in &us {
            let full = density_integral(&f, u, MatrixNorm::MaxEntry, 1e-10).unwrap().value;
            for alpha in [1.0, 4.0, 16.0] {
                let p = build_partition(&f, u, MatrixNorm::MaxEntry, alpha).unwrap();
                if p.pieces.len() as f64 > p.count_bound {
                    count_failures.push(format!("[{lo},{hi}] u=({},{}) α={alpha}: {} > {:.3}", u.x, u.y, p.pieces.len(), p.count_bound));
                }
                for _ in 0..1000 {
                    let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let v = Vec2::new(a.cos(), a.sin()).scale(rng.gen_range(0.8 * lo..1.2 * hi));
                    worst = worst.max((p.reconstruct(v) - f.eval(v)).abs());
                }
                let (mut up, mut low) = (0.0, 0.0);
                for piece in &p.pieces {
                    let mass = plane_integral(piece, |v| piece.eval(v), 1e-10).unwrap().value;
                    up += mass / piece.r_ell();
                    low += mass / piece.big_r_ell();
                }
                if up > (2.0 / alpha).exp() * full + 1e-8 || low < (-2.0 / alpha).exp() * full - 1e-8 {
                    sandwich_failures.push(format!("[{lo},{hi}] α={alpha}"));
                }
            }
        }
    }
    let passed = worst < 1e-9 && count_failures.is_empty() && sandwich_failures.is_empty();
    outcome(
        passed,
        format!("reconstruction residual {worst:.1e}; count bound exceeded {count_failures:?}; sandwich failures {sandwich_failures:?}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact identities", exact_identities),
        ("enumeration oracle", enumeration_oracle),
        ("density integral oracle", density_oracle),
        ("cocompact convergence", cocompact_convergence),
        ("SL(2,Z) convergence", sl2z_convergence),
        ("continued fractions", continued_fractions),
        ("excursion comparison", excursions),
        ("boundary lemma", boundary_lemma),
        ("shrinking target", shrinking_target),
        ("partition of unity", partition_suite),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|n| n != i + 1) {
            continue;
        }
        let res = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        if !res.passed {
            failed += 1;
        }
        println!("criterion {:>2} {:<26} {}  {}", i + 1, name, if res.passed { "PASS" } else { "FAIL" }, res.detail);
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
