use std::collections::HashSet;
use std::f64::consts::{PI, TAU};

use favlab_core::counting::{avoidance_count, h2_length_bound};
use favlab_core::expr::Expr;
use favlab_core::favard::{favard_sweep, level_projection_length, LevelCover};
use favlab_core::geometry::{circular_distance, project};
use favlab_core::hull::ConvexBody;
use favlab_core::ifs::DEFAULT_LEVEL_CAP;
use favlab_core::interval::IntervalSet;
use favlab_core::projection::{level_measure, visibility_estimate};
use favlab_core::relclose::{find_pair, power_family, verify_certificate};
use favlab_core::rotation::{diophantine_profile, epsilon_net, pigeonhole_approx, steering_suffix};
use favlab_core::{presets, Ifs, Orientation, Point, Similitude, TailWord, Word};
use proptest::prelude::*;

mod common;
use common::raster_length;

fn mixed() -> Ifs {
    Ifs::new(vec![
        Similitude::new(0.4, 1.0, Orientation::Preserving, Point::ORIGIN).unwrap(),
        Similitude::new(0.3, 0.7, Orientation::Reversing, Point::new(0.5, 0.1)).unwrap(),
        Similitude::new(0.35, 2.0, Orientation::Preserving, Point::new(0.2, 0.6)).unwrap(),
    ])
    .unwrap()
}

fn word(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0u8..3, 0..=max_len).prop_map(Word::from_indices)
}

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn composition_is_a_homomorphism(u in word(12), v in word(12)) {
        let ifs = mixed();
        let guv = ifs.compose(&u.concat(&v)).unwrap();
        let gu = ifs.compose(&u).unwrap();
        let gv = ifs.compose(&v).unwrap();
        let prod = gu.then(&gv);
        prop_assert!((guv.log_ratio - prod.log_ratio).abs() < 1e-9);
        prop_assert!(circular_distance(guv.angle, prod.angle) < 1e-9);
        prop_assert_eq!(guv.orientation, prod.orientation);
        prop_assert!(guv.translation.dist(prod.translation) < 1e-9);
        let m = mat_mul(gu.matrix(), gv.matrix());
        let g = guv.matrix();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((g[i][j] - m[i][j]).abs() < 1e-9);
            }
        }
        let p = Point::new(0.3, -0.2);
        prop_assert!(guv.apply(p).dist(gu.apply(gv.apply(p))) < 1e-9);
    }

    #[test]
    fn preserving_prefix_keeps_angle_differences(a in word(8), u in word(8), v in word(8)) {
        let ifs = mixed();
        prop_assume!(ifs.compose(&a).unwrap().orientation == Orientation::Preserving);
        let t = |w: &Word| ifs.compose(w).unwrap().angle;
        let before = circular_distance(t(&u), t(&v));
        let after = circular_distance(t(&a.concat(&u)), t(&a.concat(&v)));
        prop_assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn measure_is_additive(u in word(10)) {
        let ifs = mixed();
        let parts: f64 = (0..3).map(|i| {
            let mut w = u.clone();
            w.push(i);
            ifs.mu_mass(&w).unwrap()
        }).sum();
        prop_assert!((parts - ifs.mu_mass(&u).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn project_is_lipschitz(x in -3.0f64..3.0, y in -3.0f64..3.0, dx in -1.0f64..1.0, dy in -1.0f64..1.0,
                            t in 0.0f64..TAU, dt in -1.0f64..1.0) {
        let p = Point::new(x, y);
        let q = Point::new(x + dx, y + dy);
        prop_assert!((project(p, t) - project(q, t)).abs() <= p.dist(q) + 1e-12);
        prop_assert!((project(p, t) - project(p, t + dt)).abs() <= p.norm() * dt.abs() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_sequence_meets_the_mass_band(seq in prop::collection::vec(0u8..3, 64), r in 0.001f64..0.5) {
        let ifs = mixed();
        let band: HashSet<Word> = ifs.mass_band(r).unwrap().into_iter().collect();
        let hit = (0..=seq.len()).any(|k| band.contains(&Word::from_indices(seq[..k].to_vec())));
        prop_assert!(hit);
    }

    #[test]
    fn pi_point_matches_deep_iteration(u in word(10), period in prop::collection::vec(0u8..3, 1..4)) {
        let ifs = mixed();
        let anchor = TailWord::periodic(&Word::from_indices(period.clone())).unwrap();
        let (p, err) = ifs.pi_point(&u, &anchor).unwrap();
        let mut deep = u.clone();
        while deep.len() < u.len() + 64 {
            deep = deep.concat(&Word::from_indices(period.clone()));
        }
        let q = ifs.compose(&deep).unwrap().apply(Point::new(0.1, 0.2));
        prop_assert!(p.dist(q) <= err + 1e-12, "{} > {}", p.dist(q), err);
    }

    #[test]
    fn steering_suffix_reverifies(base in word(8), phi in 0.0f64..TAU, eps in 0.05f64..1.0) {
        let ifs = presets::figure_one();
        let a = favlab_core::rotation::small_rotation_word(&ifs, eps, 10_000).unwrap();
        let base = Word::from_indices(base.indices().iter().map(|&s| s % 3).collect());
        let t = steering_suffix(&ifs, &base, phi, eps, &a).unwrap();
        let g = ifs.compose(&base.concat(&t)).unwrap();
        prop_assert_eq!(g.orientation, Orientation::Preserving);
        prop_assert!(circular_distance(g.angle, phi) < eps);
    }

    #[test]
    fn net_self_verifies(alpha in 0.01f64..0.99, eps in 0.05f64..0.5) {
        prop_assume!((alpha * 1000.0).fract().abs() > 1e-6);
        let theta1 = alpha * TAU;
        if let Ok(net) = epsilon_net(theta1, eps, 100_000) {
            let mut pts: Vec<f64> = (1..=net.p).map(|k| (k as f64 * theta1).rem_euclid(TAU)).collect();
            pts.sort_by(f64::total_cmp);
            let wrap = pts[0] + TAU - pts[pts.len() - 1];
            let gap = pts.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max);
            prop_assert!(gap < eps);
        }
    }

    #[test]
    fn random_interval_unions_match_raster(raw in prop::collection::vec((-10.0f64..10.0, 0.0f64..2.0), 1..60)) {
        let raw: Vec<(f64, f64)> = raw.into_iter().map(|(a, w)| (a, a + w)).collect();
        let set = IntervalSet::from_unsorted(raw.clone());
        let (len, cell) = raster_length(&raw, 1 << 20);
        prop_assert!((set.total_length() - len).abs() <= 2.0 * cell);
        for w in set.intervals().windows(2) {
            prop_assert!(w[0].1 < w[1].0);
        }
    }

    #[test]
    fn rotation_equivariance(beta in 0.0f64..TAU, theta in 0.0f64..PI, n in 0usize..6) {
        for ifs in [presets::figure_one(), mixed()] {
            let (a, _) = level_projection_length(&ifs, n, theta).unwrap();
            let (b, _) = level_projection_length(&ifs.rotated(beta), n, theta + beta).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn avoidance_chain(m in 2u32..6, s in 1u32..8, blocks in 1u32..20) {
        let c = avoidance_count(m, s, blocks).unwrap();
        prop_assert!(c.exact <= c.bound);
        prop_assert!(c.relaxation_holds);
        let h = h2_length_bound(m, s, m.pow(s) * s, 1.0 / m as f64).unwrap();
        prop_assert!(h.holds);
    }
}

#[test]
fn level_sweeps_match_raster() {
    let ifs = presets::figure_one();
    let body = ConvexBody::Disk(ifs.disk());
    for n in 0..=6 {
        let cover = LevelCover::new(&ifs, n, &body, DEFAULT_LEVEL_CAP).unwrap();
        for j in 0..8 {
            let theta = (j as f64 + 0.5) * PI / 8.0;
            let raw = cover.intervals(theta);
            let (len, cell) = raster_length(&raw, 1 << 20);
            assert!((cover.length(theta) - len).abs() <= 2.0 * cell, "n={n} θ={theta}");
        }
    }
}

#[test]
fn lengths_nest_for_every_level() {
    let ifs = presets::figure_one();
    let body = ConvexBody::Disk(ifs.disk());
    let mut prev: Option<Vec<f64>> = None;
    for n in 0..=9 {
        let r = favard_sweep(&ifs, n, 32, &body, None).unwrap();
        if let Some(p) = prev {
            for (a, b) in p.iter().zip(&r.lengths) {
                assert!(*b <= a + 1e-9);
            }
        }
        prev = Some(r.lengths);
    }
}

#[test]
fn level_measures_are_probability_measures() {
    let ifs = mixed();
    for n in 0..8 {
        let mu = level_measure(&ifs, 0.9, n).unwrap();
        assert!((mu.total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn visibility_sums_do_not_grow() {
    let ifs = presets::figure_one();
    for a in [Point::new(3.0, 1.0), Point::new(0.5, 0.3)] {
        let sums: Vec<f64> = (2..=8).map(|n| visibility_estimate(&ifs, a, 1.0, n, 0.05).unwrap().sum).collect();
        assert!(sums.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{sums:?}");
    }
}

#[test]
fn constructed_certificates_pass_the_verifier() {
    let ifs = presets::figure_one();
    let mut certs = vec![find_pair(&ifs, 1.0, &|t| t, 12).unwrap()];
    for (u, v) in [("2", "3"), ("22", "33"), ("23", "32")] {
        certs.push(power_family(&ifs, &u.parse().unwrap(), &v.parse().unwrap(), 3).unwrap());
    }
    for cert in &certs {
        let reports = verify_certificate(&ifs, cert).unwrap();
        assert_eq!(reports.len(), cert.len() * (cert.len() - 1) / 2);
        assert!(reports.iter().all(|r| r.pass));
        if cert.eps < -ifs.r_min().ln() {
            for (i, a) in cert.words.iter().enumerate() {
                for (j, b) in cert.words.iter().enumerate() {
                    assert!(i == j || !a.is_prefix_of(b));
                }
            }
        }
    }
}

#[test]
fn pigeonhole_sandwich() {
    let alpha = Expr::parse("(sqrt(5)-1)/2").unwrap();
    let prof = diophantine_profile(&alpha.eval_rational().unwrap(), 1_000_000, 1.0).unwrap();
    assert!(prof.c_hat > 0.0);
    let a = alpha.value().unwrap();
    for k in [3u32, 10, 50, 200, 1000, 10_000, 100_000] {
        let eps = 1.0 / k as f64;
        let r = pigeonhole_approx(a, eps).unwrap().residual;
        assert!(r > prof.c_hat * eps.powf(prof.d) && r < eps, "k={k}: {r}");
    }
}
