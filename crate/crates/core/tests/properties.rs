use nfhcb::transform::{relocate_region, rotate_region};
use nfhcb::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn small_array() -> ArrayConfig {
    ArrayConfig::new(32, 40e9).unwrap()
}

fn beam(phases: &[f64], amps: &[f64]) -> BeamVector {
    BeamVector::from_weights(
        phases
            .iter()
            .zip(amps)
            .map(|(&p, &a)| Complex64::from_polar(a, p))
            .collect(),
    )
}

fn beam_strategy(n: usize) -> impl Strategy<Value = BeamVector> {
    (
        prop::collection::vec(-3.2f64..3.2, n),
        prop::collection::vec(0.05f64..1.0, n),
    )
        .prop_map(|(p, a)| beam(&p, &a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fresnel_is_odd_and_bounded(x in -60.0f64..60.0) {
        let e = fresnel(x);
        let m = fresnel(-x);
        prop_assert_eq!(e, -m);
        prop_assert!(e.re.abs() < 0.78 && e.im.abs() < 0.72);
    }

    #[test]
    fn fresnel_derivative(x in 0.05f64..8.0) {
        let h = 1e-5;
        let d = (fresnel(x + h) - fresnel(x - h)) / (2.0 * h);
        let p = std::f64::consts::FRAC_PI_2 * x * x;
        prop_assert!((d.re - p.cos()).abs() < 1e-6);
        prop_assert!((d.im - p.sin()).abs() < 1e-6);
    }

    #[test]
    fn grids_tile_their_domain(n_angles in 1usize..80, n_rings in 1usize..9) {
        let cfg = ArrayConfig::reference();
        let cb = LowerCodebook::with_grid(&cfg, 0.5, n_angles, n_rings).unwrap();
        let rep = check_partition(&cb.grid().regions(), &cb.grid().domain());
        prop_assert!(rep.is_exact(), "{:?}", rep);
    }

    #[test]
    fn every_domain_point_has_one_cell(theta in -1.0f64..1.0, frac in 0.0f64..1.0, n_angles in 1usize..40, n_rings in 1usize..6) {
        let cfg = ArrayConfig::reference();
        let cb = LowerCodebook::with_grid(&cfg, 0.5, n_angles, n_rings).unwrap();
        let c = Coord::new(theta, frac * cfg.max_curvature());
        let hits = cb.grid().regions().iter().filter(|r| r.contains(c)).count();
        prop_assert_eq!(hits, 1);
        let (r, a) = cb.grid().locate(c).unwrap();
        prop_assert!(cb.coverage_region(r, a).unwrap().contains(c));
    }

    #[test]
    fn steering_gain_bounded_and_peaked(t1 in -1.0f64..1.0, t2 in -1.0f64..1.0, f1 in 0.0f64..1.0, f2 in 0.0f64..1.0) {
        let cfg = ArrayConfig::reference();
        let k = cfg.max_curvature();
        let p = Coord::new(t1, f1 * k);
        let q = Coord::new(t2, f2 * k);
        let g = fresnel_steering_gain(&cfg, p, q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&g));
        prop_assert!((g - fresnel_steering_gain(&cfg, q, p)).abs() < 1e-12);
        prop_assert!((fresnel_steering_gain(&cfg, p, p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_translates_pattern(w in beam_strategy(32), theta in -0.9f64..0.9, dt in -0.9f64..0.9, kappa in 0.0f64..20.0) {
        let cfg = small_array();
        let rotated = rotate(&cfg, &w, dt).unwrap();
        let at = Coord::new(theta, kappa);
        let src = Coord::new(theta - dt, kappa);
        prop_assert!((quadratic_gain(&cfg, &rotated, at) - quadratic_gain(&cfg, &w, src)).abs() < 1e-10);
    }

    #[test]
    fn relocation_translates_pattern(w in beam_strategy(32), theta in -0.9f64..0.9, kappa in 0.0f64..20.0, shift in -20.0f64..20.0) {
        let cfg = small_array();
        let moved = relocate_curvature(&cfg, &w, shift).unwrap();
        let at = Coord::new(theta, kappa);
        let src = Coord::new(theta, kappa - shift);
        prop_assert!((quadratic_gain(&cfg, &moved, at) - quadratic_gain(&cfg, &w, src)).abs() < 1e-10);
    }

    #[test]
    fn transforms_compose_and_keep_amplitude(w in beam_strategy(32), a in -1.0f64..1.0, b in -1.0f64..1.0, r1 in 1.0f64..50.0, r2 in -50.0f64..-1.0) {
        let cfg = small_array();
        let two = rotate(&cfg, &rotate(&cfg, &w, a).unwrap(), b).unwrap();
        let one = rotate(&cfg, &w, a + b).unwrap();
        for (x, y) in two.weights().iter().zip(one.weights()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
        let twice = relocate(&cfg, &relocate(&cfg, &w, r1).unwrap(), r2).unwrap();
        let once = relocate_curvature(&cfg, &w, 1.0 / r1 + 1.0 / r2).unwrap();
        for (x, y) in twice.weights().iter().zip(once.weights()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
        for (x, y) in twice.weights().iter().zip(w.weights()) {
            prop_assert!((x.norm() - y.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn region_transport_matches_point_maps(theta in -0.5f64..0.5, r in 6.0f64..50.0, dt in -0.4f64..0.4) {
        let p = PolarPoint::from_range(theta, r).unwrap();
        let cell = CoverageRegion { theta_lo: -0.6, theta_hi: 0.6, kappa_lo: 0.0, kappa_hi: 0.2 };
        let moved = rotate_region(&cell, dt);
        // a point lies in the moved cell exactly when its preimage lies in the original
        let pre = map_point_rotation(&p, dt).coord;
        prop_assert_eq!(moved.contains(p.coord()), cell.contains(pre));
        let shifted = relocate_region(&cell, 0.05);
        let pre = map_point_relocation(&p, 20.0).unwrap().coord;
        prop_assert_eq!(shifted.contains(p.coord()), cell.contains(pre));
    }

    #[test]
    fn curvature_round_trip(theta in -0.999f64..0.999, r in 0.1f64..1e4) {
        let p = PolarPoint::from_range(theta, r).unwrap();
        let q = PolarPoint::from_curvature(theta, p.kappa()).unwrap();
        prop_assert!((q.range().unwrap() - r).abs() <= 1e-9 * r);
    }

    #[test]
    fn boundary_kappa_is_harmonic(theta in -0.9f64..0.9, r1 in 6.0f64..100.0, r2 in 6.0f64..100.0) {
        let p1 = PolarPoint::from_range(theta, r1).unwrap();
        let p2 = PolarPoint::from_range(theta, r2).unwrap();
        let k = boundary_kappa(&p1, &p2).unwrap();
        let expected = (1.0 - theta * theta) / 2.0 * (1.0 / r1 + 1.0 / r2);
        prop_assert!((k - expected).abs() < 1e-14);
    }
}

mod search_props {
    use super::*;
    use std::sync::OnceLock;

    fn hierarchy() -> &'static HierarchicalCodebook {
        static H: OnceLock<HierarchicalCodebook> = OnceLock::new();
        H.get_or_init(|| {
            let cfg = ArrayConfig::new(64, 40e9).unwrap();
            let lower = build_lower_codebook(&cfg, 0.64).unwrap();
            build_hierarchy(&cfg, &HierarchyConfig::new(7, PatternKind::Deact), lower).unwrap()
        })
    }

    struct Counting<'a> {
        inner: ChannelProbe<'a>,
        calls: usize,
    }

    impl Probe for Counting<'_> {
        fn measure(&mut self, w: &BeamVector) -> f64 {
            self.calls += 1;
            self.inner.measure(w)
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn hierarchical_never_beats_exhaustive(theta in -1.0f64..1.0, frac in 0.0f64..1.0, extra in 0.0f64..0.5) {
            let h = hierarchy();
            let cfg = h.cfg();
            let r = cfg.fresnel_distance() / (1.0 - frac * 0.99) + extra;
            let p = PolarPoint::from_range(theta, r).unwrap();
            let ch = synthesize_channel(cfg, &ChannelRealization::line_of_sight(p)).unwrap();
            let ex = exhaustive_search(h.lower(), &ch).unwrap();
            let hi = hierarchical_search(h, &ch).unwrap();
            prop_assert!(hi.achieved_gain <= ex.achieved_gain);
            prop_assert!(hi.steps >= 1 && hi.steps > hi.upper_steps);
            prop_assert_eq!(hi.trace.len(), h.n_levels());
            prop_assert_eq!(hierarchical_search(h, &ch).unwrap(), hi.clone());

            let mut probe = Counting { inner: ChannelProbe::new(&ch), calls: 0 };
            let again = nfhcb::search::hierarchical_search_with(h, &mut probe).unwrap();
            prop_assert_eq!(again.steps, probe.calls);
            prop_assert_eq!(probe.inner.count(), probe.calls);
        }
    }
}
