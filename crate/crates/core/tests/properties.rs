use proptest::prelude::*;

use planar_orbits::density::kappa;
use planar_orbits::diophantine::{cf_expand, eval_quotients, gauss_reduce, slope_of, xi_hat, CfInput};
use planar_orbits::lattice::{LatticeElement, LatticeKind, LatticeSpec, NormBall};
use planar_orbits::linalg::{cocycle, geodesic, horocycle, psi, rotation, star, Mat2, MatrixNorm, Vec2, U0};

fn vec2() -> impl Strategy<Value = Vec2> {
    (-1.0f64..1.0, 0.0..std::f64::consts::TAU).prop_map(|(e, a)| {
        let r = 10f64.powf(e);
        Vec2::new(r * a.cos(), r * a.sin())
    })
}

fn sl2() -> impl Strategy<Value = Mat2> {
    (0.0..std::f64::consts::TAU, -3.0f64..3.0, -5.0f64..5.0).prop_map(|(th, t, s)| rotation(th) * geodesic(t) * horocycle(s))
}

fn norm() -> impl Strategy<Value = MatrixNorm> {
    prop_oneof![Just(MatrixNorm::MaxEntry), Just(MatrixNorm::Frobenius), Just(MatrixNorm::Operator2)]
}

proptest! {
    #[test]
    fn star_is_absolutely_homogeneous(v in vec2(), u in vec2(), c in -5.0f64..5.0, n in norm()) {
        let base = star(v, u, n);
        prop_assert!((star(v.scale(c), u, n) - c.abs() * base).abs() <= 1e-12 * base.max(1.0) * c.abs().max(1.0));
        prop_assert!((star(v, u.scale(c), n) - c.abs() * base).abs() <= 1e-12 * base.max(1.0) * c.abs().max(1.0));
    }

    #[test]
    fn star_sandwich(v in vec2(), u in vec2(), n in norm()) {
        let p = v.sup_norm() * u.sup_norm();
        let s = star(v, u, n);
        prop_assert!(s >= p * (1.0 - 1e-12) && s <= 2.0 * p * (1.0 + 1e-12));
    }

    #[test]
    fn section_has_unit_determinant(v in vec2()) {
        prop_assert!((psi(v).unwrap().det() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn cocycle_identity(u in vec2(), g in sl2(), h in sl2()) {
        let lhs = cocycle(u, &(g * h)).unwrap();
        let rhs = cocycle(h.apply(u), &g).unwrap() + cocycle(u, &h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn cocycle_along_horocycle(g in sl2(), s in -10.0f64..10.0) {
        let c = cocycle(U0, &g).unwrap();
        prop_assert!((cocycle(U0, &(g * horocycle(s))).unwrap() - c - s).abs() <= 1e-9 * (c.abs() + s.abs()).max(1.0));
    }

    #[test]
    fn tent_translates_sum_to_one(x in -50.0f64..50.0) {
        let k = x.floor() as i64;
        let total: f64 = (k - 2..=k + 2).map(|l| kappa(x - l as f64)).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rational_expansion_reconstructs(q in 2i128..1_000_000_000_000, p0 in 1i128..1_000_000_000_000) {
        let p = p0 % q;
        prop_assume!(p > 0);
        let e = cf_expand(&CfInput::Rational { p, q }, 200).unwrap();
        prop_assert!(e.finite);
        let g = num_integer::gcd(p, q);
        prop_assert_eq!(eval_quotients(&e.partial_quotients), Some((p / g, q / g)));
        for k in 0..e.depth() {
            prop_assert_eq!(e.tk_bounds_exact(k), Some(true));
        }
    }

    #[test]
    fn xi_hat_is_monotone_and_at_least_one(a in prop::collection::vec(1u64..50, 30), t1 in 0.0f64..10.0, d1 in 0.0f64..10.0, d2 in 0.0f64..10.0) {
        let e = cf_expand(&CfInput::Quotients(a), 30).unwrap();
        let lo = xi_hat(&e, t1, t1 + d1);
        let hi = xi_hat(&e, t1, t1 + d1 + d2);
        if let (Ok(lo), Ok(hi)) = (lo, hi) {
            prop_assert!(lo >= 1.0);
            // larger τ₂ only enlarges the index set, unless the smaller window fell back to e^{τ₂}
            if lo != (t1 + d1).exp() {
                prop_assert!(hi >= lo);
            }
        }
    }

    #[test]
    fn reduction_is_idempotent(x in -100.0f64..100.0, e in -6.0f64..2.0) {
        let r = gauss_reduce(x, 10f64.powf(e)).unwrap();
        let again = gauss_reduce(r.x, r.y).unwrap();
        prop_assert_eq!(again.word, [1, 0, 0, 1]);
        prop_assert_eq!((again.x, again.y), (r.x, r.y));
    }

    #[test]
    fn slope_lies_in_the_unit_interval(u in vec2()) {
        let z = slope_of(u).unwrap();
        prop_assert!((0.0..=1.0).contains(&z));
    }

    #[test]
    fn membership_is_symmetric_under_inversion(k in -6i64..6, m in -6i64..6, n in -6i64..6, t in 1.0f64..60.0, nm in norm()) {
        let el = |c| LatticeElement::new(LatticeKind::Sl2Z, c).unwrap();
        let g = el([1, k, 0, 1]).mul(&el([1, 0, m, 1])).unwrap().mul(&el([1, n, 0, 1])).unwrap();
        let ball = NormBall::new(LatticeSpec::new(LatticeKind::Sl2Z, nm), t).unwrap();
        prop_assert_eq!(ball.contains(&g), ball.contains(&g.inverse()));
        let gn = g.matrix().norm(nm);
        if (gn - t).abs() > 1e-9 {
            prop_assert_eq!(ball.contains(&g), gn <= t);
        }
    }
}
