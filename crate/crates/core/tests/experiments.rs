use planar_orbits::density::{PlaneFunction, TestFunction};
use planar_orbits::experiments::{
    cloud_export, convergence_study, orbit_sum, orbit_sums, scaling_sweep, shrinking_target_search, ExperimentConfig, Window,
};
use planar_orbits::lattice::{LatticeElement, LatticeKind, LatticeSpec};
use planar_orbits::{Mat2, Vec2};

#[test]
fn unit_ball_sum_matches_brute_force() {
    let u = Vec2::new(0.5f64.sqrt(), 1.0);
    let f = TestFunction::annulus(0.5, 1.5).unwrap();
    let mut brute = 0.0;
    let mut n = 0;
    for a in -1..=1i64 {
        for b in -1..=1i64 {
            for c in -1..=1i64 {
                for d in -1..=1i64 {
                    if a * d - b * c == 1 {
                        n += 1;
                        brute += f.eval(Mat2::new(a as f64, b as f64, c as f64, d as f64).apply(u));
                    }
                }
            }
        }
    }
    assert_eq!(n, 20);
    let cfg = ExperimentConfig::new(LatticeSpec::sl2z(), u, f, vec![1.0]);
    assert_eq!(orbit_sum(&cfg, 1.0).unwrap(), brute);
}

#[test]
fn discrete_orbit_warns_and_misses_off_lattice_support() {
    let f = TestFunction::bump(Vec2::new(0.5, 0.5), 0.4).unwrap();
    let cfg = ExperimentConfig::new(LatticeSpec::sl2z(), Vec2::new(1.0, 0.0), f, vec![10.0, 40.0]);
    let rep = convergence_study(&cfg).unwrap();
    assert_eq!(rep.warnings.len(), 1);
    assert!(rep.rows.iter().all(|r| r.s == 0.0));
    let golden = ExperimentConfig { u: Vec2::new((5f64.sqrt() - 1.0) / 2.0, 1.0), ..cfg };
    assert!(convergence_study(&golden).unwrap().warnings.is_empty());
}

#[test]
fn sums_do_not_depend_on_worker_count() {
    let bank = vec![TestFunction::hat(0.5, 4.0).unwrap(), TestFunction::bump(Vec2::new(3.0, 1.0), 2.5).unwrap()];
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| orbit_sums(LatticeSpec::quaternion(), Vec2::new(1.0, 0.0), &bank, &[20.0, 80.0], None).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn zero_scaling_reduces_to_convergence() {
    let f = TestFunction::hat(0.5, 4.0).unwrap();
    let cfg = ExperimentConfig::new(LatticeSpec::quaternion(), Vec2::new(1.0, 0.0), f, vec![20.0, 40.0]);
    let conv = convergence_study(&cfg).unwrap();
    let scal = scaling_sweep(&cfg).unwrap();
    for (a, b) in conv.rows.iter().zip(&scal.rows) {
        assert_eq!(a.s / a.t, b.normalized);
    }
    assert!(!scal.slow_convergence);
    let slow = scaling_sweep(&ExperimentConfig { alpha: 0.99, ..cfg }).unwrap();
    assert!(slow.slow_convergence);
    assert!(slow.predicted_delta <= 0.01 + 1e-12);
}

#[test]
fn quaternion_scaling_limit_is_close_to_the_integral() {
    let f = TestFunction::hat(0.5, 4.0).unwrap();
    let mut cfg = ExperimentConfig::new(LatticeSpec::quaternion(), Vec2::new(1.0, 0.0), f.clone(), vec![400.0]);
    cfg.alpha = 0.5;
    let scal = scaling_sweep(&cfg).unwrap();
    let conv = convergence_study(&ExperimentConfig { alpha: 0.0, t_grid: vec![400.0], ..cfg }).unwrap();
    // both ratios estimate the same constant 2/μ
    let (a, b) = (scal.rows[0].ratio, conv.rows[0].ratio);
    assert!((a - b).abs() / b < 0.15, "{a} vs {b}");
}

#[test]
fn exact_orbit_point_is_hit() {
    let u = Vec2::new((5f64.sqrt() - 1.0) / 2.0, 1.0);
    let g0 = LatticeElement::new(LatticeKind::Sl2Z, [2, 1, 3, 2]).unwrap();
    let v = g0.matrix().apply(u);
    let rep = shrinking_target_search(LatticeSpec::sl2z(), u, v, &[2.0, 3.0, 10.0]).unwrap();
    assert!(rep.rows[0].distance > 0.0);
    assert_eq!(rep.rows[1].distance, 0.0);
    assert_eq!(rep.rows[1].gamma, [2, 1, 3, 2]);
    assert!(rep.rows.windows(2).all(|w| w[1].distance <= w[0].distance));
}

#[test]
fn cloud_counts_scale_with_window_area() {
    // the expected count is about T·area/(|v||u|) times a lattice constant,
    // so T·h² fixed keeps it near 200 points
    let spec = LatticeSpec::sl2z();
    let u = Vec2::new((5f64.sqrt() - 1.0) / 2.0, 1.0);
    let counts: Vec<usize> = [(50.0, 1.6), (200.0, 0.8), (800.0, 0.4)]
        .iter()
        .map(|&(t, h)| {
            let w = Window { x0: 3.0 - h, x1: 3.0 + h, y0: 2.0 - h, y1: 2.0 + h };
            cloud_export(spec, u, t, w).unwrap().len()
        })
        .collect();
    let mean = counts.iter().sum::<usize>() as f64 / 3.0;
    assert!(counts.iter().all(|&c| (c as f64 - mean).abs() <= 0.25 * mean), "{counts:?}");
    let q = LatticeSpec::quaternion();
    assert!(cloud_export(q, Vec2::new(1.0, 0.0), 100.0, Window::centered(4.0)).unwrap().len() > 50);
    let far = Window { x0: 1e6, x1: 1e6 + 1.0, y0: 0.0, y1: 1.0 };
    assert!(cloud_export(q, Vec2::new(1.0, 0.0), 100.0, far).unwrap().is_empty());
}

#[test]
fn bad_configs_are_rejected() {
    let f = TestFunction::hat(0.5, 4.0).unwrap();
    let mut cfg = ExperimentConfig::new(LatticeSpec::sl2z(), Vec2::new(0.0, 0.0), f.clone(), vec![10.0]);
    assert!(convergence_study(&cfg).is_err());
    cfg.u = Vec2::new(1.0, 0.3);
    cfg.t_grid = vec![20.0, 10.0];
    assert!(convergence_study(&cfg).is_err());
    cfg.t_grid = vec![10.0];
    cfg.alpha = 1.0;
    assert!(scaling_sweep(&cfg).is_err());
    let json = r#"{"lattice": {"kind": "sl2z", "norm": "max_entry"}, "u": {"x": 1, "y": 0.3}, "f": {"kind": {"radial_hat": {"inner": 0.5, "outer": 4}}}, "t_grid": [10], "speed": 3}"#;
    assert!(serde_json::from_str::<ExperimentConfig>(json).is_err());
}
