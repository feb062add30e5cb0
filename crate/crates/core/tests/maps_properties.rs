use proptest::prelude::*;

use intermingle_core::maps::{Coord, PointA, PointT, SkewPoint, TorusBase};
use intermingle_core::{Phase, SkewSystem};

fn a_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(4.0), Just(32.0), 1.5f64..100.0]
}

fn circle_distance(u: f64, v: f64) -> f64 {
    let d = (u - v).rem_euclid(1.0);
    d.min(1.0 - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn annulus_commutes_with_the_half_turn(a in a_value(), k in any::<u64>(), z in 0.0f64..=1.0) {
        let s = SkewSystem::annulus(a).unwrap();
        let p = PointA::exact(Phase(k), z);
        let lhs = s.apply(p.reflect());
        let rhs = s.apply(p).reflect();
        prop_assert_eq!(lhs.base, rhs.base);
        prop_assert!((lhs.z - rhs.z).abs() <= 1e-15);
    }

    #[test]
    fn torus_commutes_with_the_half_turn(a in a_value(), kx in any::<u64>(), ky in any::<u64>(), z in 0.0f64..=1.0) {
        let s = SkewSystem::torus(a).unwrap();
        let p = PointT::exact(Phase(kx), Phase(ky), z);
        let lhs = s.apply(p.reflect());
        let rhs = s.apply(p).reflect();
        prop_assert_eq!(lhs.base, rhs.base);
        prop_assert!((lhs.z - rhs.z).abs() <= 1e-15);
    }

    #[test]
    fn equal_x_stays_equal_x(a in a_value(), k in any::<u64>(), z0 in 0.0f64..=1.0, z1 in 0.0f64..=1.0, n in 0u64..50) {
        let s = SkewSystem::annulus(a).unwrap();
        let p = s.iterate(PointA::exact(Phase(k), z0), n);
        let q = s.iterate(PointA::exact(Phase(k), z1), n);
        prop_assert_eq!(p.base, q.base);
    }

    #[test]
    fn fiber_map_is_increasing(a in a_value(), x in 0.0f64..1.0, z0 in 0.0f64..=1.0, z1 in 0.0f64..=1.0) {
        let s = SkewSystem::annulus(a).unwrap();
        let (lo, hi) = if z0 < z1 { (z0, z1) } else { (z1, z0) };
        prop_assume!(hi - lo > 1e-12);
        let base = Coord::Float(x);
        prop_assert!(s.fiber_value(&base, lo) < s.fiber_value(&base, hi));
        prop_assert!(s.fiber_derivative(&base, lo) > 0.0);
    }

    #[test]
    fn fiber_map_stays_in_the_annulus(a in a_value(), x in 0.0f64..1.0, z in 0.0f64..=1.0) {
        let s = SkewSystem::annulus(a).unwrap();
        let w = s.fiber_value(&Coord::Float(x), z);
        prop_assert!((0.0..=1.0).contains(&w));
    }

    #[test]
    fn boundaries_are_invariant(a in a_value(), kx in any::<u64>(), ky in any::<u64>(), n in 0u64..200) {
        let s = SkewSystem::torus(a).unwrap();
        for z in [0.0, 1.0] {
            prop_assert_eq!(s.iterate(PointT::exact(Phase(kx), Phase(ky), z), n).z, z);
        }
    }

    #[test]
    fn inverse_branches_round_trip(a in a_value(), k in any::<u64>(), z in 0.0f64..=1.0, branch in 0u8..3) {
        let s = SkewSystem::annulus(a).unwrap();
        let p = PointA::exact(Phase(k), z);
        let pre = s.inverse_branch(branch, p).unwrap();
        let x = pre.x();
        prop_assert!(x >= branch as f64 / 3.0 - 1e-15 && x <= (branch as f64 + 1.0) / 3.0 + 1e-15);
        let back = s.apply(pre);
        prop_assert!(circle_distance(back.x(), p.x()) <= 1e-12);
        prop_assert!((back.z - p.z).abs() <= 1e-12);
    }

    #[test]
    fn iterate_composes(a in a_value(), k in any::<u64>(), z in 0.0f64..=1.0, n in 0u64..40, m in 0u64..40) {
        let s = SkewSystem::annulus(a).unwrap();
        let p = PointA::exact(Phase(k), z);
        prop_assert_eq!(s.iterate(s.iterate(p, n), m), s.iterate(p, n + m));
        let orbit = s.orbit(p, n);
        prop_assert_eq!(orbit.len() as u64, n + 1);
        prop_assert_eq!(*orbit.last().unwrap(), s.iterate(p, n));
    }

    #[test]
    fn jacobian_matches_the_chain_rule_in_z(a in a_value(), x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.01f64..0.99) {
        let s = SkewSystem::torus(a).unwrap();
        let p: SkewPoint<TorusBase> = PointT::float(x, y, z);
        let j = s.jacobian(p);
        prop_assert_eq!(j.size(), 3);
        prop_assert!(j.is_lower_triangular_in_z());
        let h = 1e-6;
        let up = s.apply(SkewPoint { z: z + h, ..p }).z;
        let down = s.apply(SkewPoint { z: z - h, ..p }).z;
        let fd = (up - down) / (2.0 * h);
        prop_assert!((fd - j.dz_fz()).abs() <= 1e-6 * j.dz_fz().abs().max(1.0));
    }
}

#[test]
fn fixed_points_are_the_saddles_and_sinks_on_both_boundaries() {
    let s = SkewSystem::annulus(32.0).unwrap();
    let pts = s.fixed_points::<Coord>().unwrap();
    assert_eq!(pts.len(), 4);
    for p in &pts {
        assert_eq!(s.apply(*p), *p);
        let j = s.jacobian(*p);
        // on A the fiber contracts at x = 1/2 and expands at x = 0; on B the roles swap
        let expanding = j.dz_fz() > 1.0;
        let at_zero = p.x() == 0.0;
        assert_eq!(expanding, at_zero == (p.z == 0.0));
    }
    let t = SkewSystem::torus(4.0).unwrap();
    for p in t.fixed_points::<TorusBase>().unwrap() {
        assert_eq!(t.apply(p), p);
    }
}
