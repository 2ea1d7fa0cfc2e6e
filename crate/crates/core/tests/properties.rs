use proptest::prelude::*;
use sonority::classify::GaussianClassifier;
use sonority::corpus::SonorantClass;
use sonority::fusion::{compute_weights, kld_symmetric};
use sonority::supra::{f7_correlation, ncc, F7Config, NccDenominator, PitchCycleSet};
use sonority::vts::NormStats;
use sonority::ztw::{envelope_of_sequence, hngd_at_epoch};

fn cycles(max_len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 10..max_len), 4..14)
}

proptest! {
    #[test]
    fn kld_symmetric_and_nonnegative(m1 in -50.0..50.0f64, s1 in 1e-3..20.0f64, m2 in -50.0..50.0f64, s2 in 1e-3..20.0f64) {
        let ab = kld_symmetric((m1, s1), (m2, s2)).unwrap();
        let ba = kld_symmetric((m2, s2), (m1, s1)).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
    }

    #[test]
    fn weights_scale_invariant(k in prop::collection::vec(0.01..10.0f64, 7), c in 0.01..100.0f64) {
        let a = compute_weights(&k).unwrap();
        let scaled: Vec<f64> = k.iter().map(|v| v * c).collect();
        let b = compute_weights(&scaled).unwrap();
        for (x, y) in a.w.iter().zip(&b.w) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!((a.w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn normalization_bounded_and_idempotent(rows in prop::collection::vec(prop::collection::vec(-100.0..100.0f64, 3), 2..30), probe in prop::collection::vec(-500.0..500.0f64, 3)) {
        let Ok(stats) = NormStats::fit(&rows) else { return Ok(()); };
        let once = stats.apply(&probe);
        prop_assert!(once.values.iter().all(|v| (0.0..=1.0).contains(v)));
        let unit = NormStats::unit(3);
        let twice = unit.apply(&once.values);
        prop_assert_eq!(&twice.values, &once.values);
        prop_assert!(!twice.clamped);
        for row in &rows {
            prop_assert!(!stats.apply(row).clamped);
        }
    }

    #[test]
    fn ncc_bounded(a in prop::collection::vec(-1.0..1.0f64, 1..80), b in prop::collection::vec(-1.0..1.0f64, 1..80)) {
        if let Some(v) = ncc(&a, &b, NccDenominator::Normalized) {
            prop_assert!((-1.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn f7_amplitude_invariant(c in cycles(60), gains in prop::collection::vec(0.01..100.0f64, 14)) {
        let scaled: Vec<Vec<f64>> = c.iter().zip(&gains).map(|(x, g)| x.iter().map(|v| v * g).collect()).collect();
        let set = |cy: Vec<Vec<f64>>| PitchCycleSet { starts: vec![0; cy.len()], cycles: cy };
        let cfg = F7Config::default();
        let a = f7_correlation(&set(c.clone()), &cfg).unwrap();
        let b = f7_correlation(&set(scaled), &cfg).unwrap();
        for (x, y) in a.per_cycle.iter().zip(&b.per_cycle) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn hngd_scales_quadratically(x in prop::collection::vec(-1.0..1.0f64, 120), a in 0.05..20.0f64) {
        let scaled: Vec<f64> = x.iter().map(|v| v * a).collect();
        let s1 = hngd_at_epoch(&x, 8000, 10).unwrap();
        let s2 = hngd_at_epoch(&scaled, 8000, 10).unwrap();
        let peak = s1.magnitudes.iter().fold(0.0f64, |m, &v| m.max(v));
        for (p, q) in s1.magnitudes.iter().zip(&s2.magnitudes) {
            prop_assert!((q - a * a * p).abs() <= 1e-9 * a * a * peak.max(1e-300));
        }
    }

    #[test]
    fn envelope_dominates_sequence(d in prop::collection::vec(-10.0..10.0f64, 2..200)) {
        let e = envelope_of_sequence(&d);
        for (env, v) in e.iter().zip(&d) {
            prop_assert!(*env + 1e-9 >= v.abs());
        }
    }

    #[test]
    fn decisions_invariant_to_uniform_weight_scaling(seed in 0u64..1000, exp in -4i32..5) {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let classes = [SonorantClass::LowVowel, SonorantClass::Glide, SonorantClass::Nasal];
        let rows: Vec<(SonorantClass, Vec<f64>)> = (0..60)
            .map(|i| {
                let c = classes[i % 3];
                let centre = (i % 3) as f64;
                (c, (0..7).map(|_| centre + rng.random_range(-0.8..0.8)).collect())
            })
            .collect();
        let c = 2f64.powi(exp);
        let scaled: Vec<(SonorantClass, Vec<f64>)> =
            rows.iter().map(|(k, r)| (*k, r.iter().map(|v| v * c).collect())).collect();
        let a = GaussianClassifier::fit(&rows).unwrap();
        let b = GaussianClassifier::fit(&scaled).unwrap();
        for ((_, r), (_, s)) in rows.iter().zip(&scaled) {
            prop_assert_eq!(a.predict(r), b.predict(s));
        }
    }
}
