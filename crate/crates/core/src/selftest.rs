//! A small-scale run of every invariant the library relies on, for quick
//! health checks of a build.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::density::{
    boundary_lemma_check, build_partition, density_integral, holder_norm_estimate, kappa, plane_integral, Bump, PlaneFunction,
    TestFunction,
};
use crate::diophantine::{cf_expand, slope_bank, xi_hat, CfInput};
use crate::error::Result;
use crate::experiments::{orbit_sums, ExperimentConfig, orbit_sum};
use crate::lattice::{count, enumerate, verify_group_axioms, LatticeKind, LatticeSpec, NormBall};
use crate::linalg::{cocycle, geodesic, horocycle, mat_norm, psi, rotation, star, Mat2, MatrixNorm, Vec2, U0};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub norm: MatrixNorm,
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SelftestOptions {
    pub norm: MatrixNorm,
    pub bump: Bump,
    pub seed: u64,
    pub samples: usize,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions { norm: MatrixNorm::MaxEntry, bump: Bump::standard(), seed: 1, samples: 2000 }
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub(crate) fn random_vec(rng: &mut ChaCha8Rng) -> Vec2 {
    let r = 10f64.powf(rng.gen_range(-1.0..1.0));
    let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Vec2::new(r * a.cos(), r * a.sin())
}

pub(crate) fn random_sl2(rng: &mut ChaCha8Rng) -> Mat2 {
    rotation(rng.gen_range(0.0..std::f64::consts::TAU)) * geodesic(rng.gen_range(-3.0..3.0)) * horocycle(rng.gen_range(-5.0..5.0))
}

struct Tally {
    name: &'static str,
    failures: usize,
    total: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, failures: 0, total: 0, worst: 0.0 }
    }

    fn record(&mut self, a: f64, b: f64, tol: f64) {
        self.total += 1;
        let err = (a - b).abs() / a.abs().max(b.abs()).max(1.0);
        self.worst = self.worst.max(if err.is_nan() { f64::INFINITY } else { err });
        if !rel_close(a, b, tol) {
            self.failures += 1;
        }
    }

    fn finish(self) -> Check {
        Check {
            name: self.name,
            passed: self.failures == 0 && self.total > 0,
            detail: format!("{} of {} failed, worst relative error {:.3e}", self.failures, self.total, self.worst),
        }
    }
}

fn identity_checks(opts: &SelftestOptions, out: &mut Vec<Check>) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let tol = 1e-9;
    let mut lift = Tally::new("section_lifts_base_point");
    let mut resc = Tally::new("section_intertwines_geodesic");
    let mut nilp = Tally::new("star_equals_conjugated_nilpotent_norm");
    let mut star_t = Tally::new(if opts.norm == MatrixNorm::MaxEntry { "star_is_product_of_norms" } else { "star_sandwiched_by_norms" });
    let mut shift = Tally::new("cocycle_shifts_along_horocycle");
    let mut scale = Tally::new("cocycle_scales_along_geodesic");
    let mut coc = Tally::new("cocycle_identity");
    let mut sect = Tally::new("cocycle_from_section");
    for _ in 0..opts.samples {
        let v = random_vec(&mut rng);
        let u = random_vec(&mut rng);
        let p = psi(v)?;
        let pv = p.apply(U0);
        lift.record(pv.x, v.x, tol);
        lift.record(pv.y, v.y, tol);
        lift.record(p.det(), 1.0, tol);
        let t: f64 = rng.gen_range(-2.0..2.0);
        let lhs = psi(v.scale(t.exp()))?;
        let rhs = p * geodesic(2.0 * t);
        for (a, b) in lhs.entries().into_iter().zip(rhs.entries()) {
            resc.record(a, b, tol);
        }
        let conj = p * Mat2::NILPOTENT * psi(u)?.inverse_sl2();
        nilp.record(mat_norm(&conj, opts.norm), star(v, u, opts.norm), tol);
        // any other section differs by a horocycle on the right
        let (s1, s2) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let other = p * horocycle(s1) * Mat2::NILPOTENT * (psi(u)? * horocycle(s2)).inverse_sl2();
        nilp.record(mat_norm(&other, opts.norm), star(v, u, opts.norm), tol);
        let prod = v.sup_norm() * u.sup_norm();
        let st = star(v, u, opts.norm);
        if opts.norm == MatrixNorm::MaxEntry {
            star_t.record(st, prod, 0.0);
        } else {
            // |v||u| ≤ v⋆u ≤ 2|v||u| for Frobenius and operator norms
            star_t.total += 1;
            if !(st >= prod * (1.0 - 1e-12) && st <= 2.0 * prod * (1.0 + 1e-12)) {
                star_t.failures += 1;
            }
        }
        let g = random_sl2(&mut rng);
        let h = random_sl2(&mut rng);
        let s: f64 = rng.gen_range(-5.0..5.0);
        let c0 = cocycle(U0, &g)?;
        shift.record(cocycle(U0, &(g * horocycle(s)))?, c0 + s, tol);
        scale.record(cocycle(U0, &(g * geodesic(t)))?, (-t).exp() * c0, tol);
        coc.record(cocycle(u, &(g * h))?, cocycle(h.apply(u), &g)? + cocycle(u, &h)?, tol);
        sect.record(cocycle(u, &g)?, cocycle(U0, &(g * psi(u)?))?, tol);
    }
    out.extend([lift, resc, nilp, star_t, shift, scale, coc, sect].into_iter().map(Tally::finish));
    Ok(())
}

fn lattice_checks(opts: &SelftestOptions, out: &mut Vec<Check>) -> Result<()> {
    for kind in [LatticeKind::Sl2Z, LatticeKind::QuaternionD23] {
        let spec = LatticeSpec::new(kind, opts.norm);
        let t = 8.0;
        let listed = enumerate(spec, t)?;
        // brute force over the coordinate box with the exact membership test
        let ball = NormBall::new(spec, t)?;
        let n = 8i64;
        let mut brute = Vec::new();
        for a in -n..=n {
            for b in -n..=n {
                for c in -n..=n {
                    for d in -n..=n {
                        if let Ok(e) = crate::lattice::LatticeElement::new(kind, [a, b, c, d]) {
                            if ball.contains(&e) {
                                brute.push(e);
                            }
                        }
                    }
                }
            }
        }
        brute.sort();
        out.push(Check {
            name: if kind == LatticeKind::Sl2Z { "sl2z_enumeration_matches_brute_force" } else { "quaternion_enumeration_matches_brute_force" },
            passed: brute == listed,
            detail: format!("{} enumerated, {} by brute force at T = {t}", listed.len(), brute.len()),
        });
        let rep = verify_group_axioms(spec, 10.0, 200, opts.seed)?;
        out.push(Check {
            name: if kind == LatticeKind::Sl2Z { "sl2z_group_axioms" } else { "quaternion_group_axioms" },
            passed: rep.passed(),
            detail: format!("{rep:?}"),
        });
    }
    if opts.norm == MatrixNorm::MaxEntry {
        let a = count(LatticeSpec::sl2z(), 1.0)?;
        let b = count(LatticeSpec::quaternion(), 1.0)?;
        out.push(Check { name: "unit_ball_counts", passed: a == 20 && b == 2, detail: format!("SL(2,Z): {a}, quaternion: {b}") });
    }
    Ok(())
}

fn density_checks(opts: &SelftestOptions, out: &mut Vec<Check>) -> Result<()> {
    let annulus = TestFunction::annulus(1.0, 2.0)?;
    let u0 = Vec2::new(1.0, 0.0);
    if opts.norm == MatrixNorm::MaxEntry {
        let i = density_integral(&annulus, u0, opts.norm, 1e-9)?.value;
        out.push(Check { name: "annulus_density_integral", passed: (i - 8.0).abs() < 1e-6, detail: format!("{i}") });
    }
    let bump = TestFunction::bump(Vec2::new(2.0, 1.0), 1.5)?;
    let u = Vec2::new(0.7, -0.4);
    let base = density_integral(&bump, u, opts.norm, 1e-9)?.value;
    let scaled = density_integral(&bump.clone().dilated(2.5)?, u.scale(0.4), opts.norm, 1e-9)?.value;
    out.push(Check {
        name: "density_integral_rescaling",
        passed: (base - scaled).abs() < 1e-7,
        detail: format!("{base} vs {scaled}"),
    });
    let est = holder_norm_estimate(&bump, 5000, opts.seed)?;
    out.push(Check { name: "holder_estimate_below_bound", passed: est.total <= est.bound, detail: format!("{} ≤ {}", est.total, est.bound) });
    // partition of unity
    let mut worst = 0.0f64;
    let mut sandwich = true;
    let full = density_integral(&annulus, u0, opts.norm, 1e-9)?.value;
    for alpha in [1.0, 4.0] {
        let p = build_partition(&annulus, u0, opts.norm, alpha)?;
        for i in 0..200 {
            let a = i as f64 * 0.0314;
            let v = Vec2::new(a.cos(), a.sin()).scale(0.9 + 1.3 * i as f64 / 200.0);
            worst = worst.max((p.reconstruct(v) - annulus.eval(v)).abs());
        }
        let (mut up, mut low) = (0.0, 0.0);
        for piece in &p.pieces {
            let m = plane_integral(piece, |v| piece.eval(v), 1e-9)?.value;
            up += m / piece.r_ell();
            low += m / piece.big_r_ell();
        }
        sandwich &= up <= (2.0 / alpha).exp() * full + 1e-7 && low >= (-2.0 / alpha).exp() * full - 1e-7;
    }
    let tent = (-20..=20).all(|i| {
        let x = i as f64 / 10.0;
        (-3..=3).map(|l| kappa(x + l as f64)).sum::<f64>() == 1.0
    });
    out.push(Check { name: "tent_partition_of_unity", passed: tent, detail: String::new() });
    out.push(Check { name: "partition_reconstruction", passed: worst < 1e-9, detail: format!("max residual {worst:.3e}") });
    out.push(Check { name: "partition_integral_sandwich", passed: sandwich, detail: String::new() });
    Ok(())
}

fn boundary_checks(opts: &SelftestOptions, out: &mut Vec<Check>) -> Result<()> {
    let f = TestFunction::hat(0.5, 4.0)?;
    let u = Vec2::new(0.618_033_988_749_894_9, 1.0);
    let spec = LatticeSpec::new(LatticeKind::Sl2Z, opts.norm);
    let elems = enumerate(spec, 6.0)?;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for g in elems.iter().filter(|g| f.eval(g.matrix().apply(u)) != 0.0).take(6) {
        for t in [3.0, 6.0] {
            let rep = boundary_lemma_check(&f, u, g, t, opts.norm, &opts.bump)?;
            worst = worst.max(rep.max_residual());
            checked += 1;
        }
    }
    out.push(Check {
        name: "boundary_lemma_windows",
        passed: checked > 0 && worst < 1e-8,
        detail: format!("{checked} windows, max residual {worst:.3e}"),
    });
    Ok(())
}

fn diophantine_checks(out: &mut Vec<Check>) -> Result<()> {
    let mut ok = true;
    let mut n = 0;
    for (_, inp) in slope_bank() {
        let e = cf_expand(&inp, 20)?;
        for k in 0..e.depth() {
            n += 1;
            ok &= e.tk_bounds_exact(k) == Some(true);
        }
    }
    out.push(Check { name: "convergent_exponent_bounds", passed: ok, detail: format!("{n} indices") });
    let g = cf_expand(&CfInput::golden(), 60)?;
    let golden = (0..40).all(|i| xi_hat(&g, 0.0, 1.0 + 0.5 * i as f64).map(|v| v == 1.0).unwrap_or(false));
    out.push(Check { name: "golden_xi_hat_is_one", passed: golden, detail: String::new() });
    let fallback = xi_hat(&g, 0.2, 0.3)?;
    out.push(Check {
        name: "xi_hat_empty_set_fallback",
        passed: fallback == 0.3f64.exp(),
        detail: format!("{fallback}"),
    });
    Ok(())
}

fn experiment_checks(opts: &SelftestOptions, out: &mut Vec<Check>) -> Result<()> {
    let spec = LatticeSpec::new(LatticeKind::Sl2Z, opts.norm);
    let f = TestFunction::hat(0.5, 4.0)?;
    let u = Vec2::new(0.618_033_988_749_894_9, 1.0);
    let a = orbit_sum(&ExperimentConfig::new(spec, u, f.clone(), vec![30.0]), 30.0)?;
    let b = orbit_sum(&ExperimentConfig::new(spec, u.scale(0.5), f.clone().dilated(2.0)?, vec![30.0]), 30.0)?;
    out.push(Check { name: "orbit_sum_rescaling_exact", passed: a == b, detail: format!("{a} vs {b}") });
    let meta = crate::density::compute_support_meta(&f, u, opts.norm, crate::density::DEFAULT_DELTA0)?;
    let sums = orbit_sums(spec, u, &[f], &[10.0, 20.0, 40.0], Some(&[meta.d]))?;
    let monotone = sums.sums[0].windows(2).all(|w| w[1] >= w[0]);
    out.push(Check { name: "orbit_sum_monotone", passed: monotone, detail: format!("{:?}", sums.sums[0]) });
    out.push(Check {
        name: "norm_estimate_filter",
        passed: sums.norm_estimate_violations[0] == 0,
        detail: format!("{} violations, max ratio {:.3}", sums.norm_estimate_violations[0], sums.norm_estimate_max_ratio[0]),
    });
    Ok(())
}

/// Runs every check; errors inside a group are reported as a failed check
/// named after the group.
pub fn selftest(opts: &SelftestOptions) -> SelftestReport {
    let mut checks = Vec::new();
    type Group = fn(&SelftestOptions, &mut Vec<Check>) -> Result<()>;
    let groups: [(&'static str, Group); 6] = [
        ("identities", identity_checks),
        ("lattice", lattice_checks),
        ("density", density_checks),
        ("boundary_lemma_windows", boundary_checks),
        ("diophantine", |_, out| diophantine_checks(out)),
        ("experiments", experiment_checks),
    ];
    for (name, run) in groups {
        if let Err(e) = run(opts, &mut checks) {
            checks.push(Check { name, passed: false, detail: e.to_string() });
        }
    }
    SelftestReport { norm: opts.norm, checks }
}
