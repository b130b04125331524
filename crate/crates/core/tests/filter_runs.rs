use gtphd::filter::{FilterVariant, TphdFilter};
use gtphd::scenario::ScenarioConfig;
use gtphd::sim::{generate_measurements, generate_truth};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scans(cfg: &ScenarioConfig, seed: u64) -> Vec<Vec<nalgebra::DVector<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = generate_truth(cfg, &mut rng).unwrap();
    generate_measurements(&truth, cfg, &mut rng).unwrap()
}

#[test]
fn prediction_conserves_mass_on_every_step() {
    let cfg = ScenarioConfig::default();
    let z = scans(&cfg, 2);
    let reports = TphdFilter::new(cfg.filter_params(FilterVariant::GTphd).unwrap())
        .unwrap()
        .run(&z)
        .unwrap();
    let ps = cfg.motion.p_survival;
    for r in &reports {
        let expected = ps * r.prior_mass + r.birth_mass;
        assert!(
            (r.predicted_mass - expected).abs() <= 1e-12 * expected,
            "step {}: {} vs {expected}",
            r.time,
            r.predicted_mass
        );
    }
}

#[test]
fn long_window_equals_untruncated_filter() {
    let cfg = ScenarioConfig::default();
    let z = scans(&cfg, 3);
    let mut long = cfg.filter_params(FilterVariant::GTphd).unwrap();
    long.lscan = Some(100);
    let mut whole = long.clone();
    whole.lscan = None;
    let a = TphdFilter::new(long).unwrap().run(&z).unwrap();
    let b = TphdFilter::new(whole).unwrap().run(&z).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.estimates, y.estimates, "step {}", x.time);
    }
}

#[test]
fn degenerate_variants_only_report_their_class() {
    let cfg = ScenarioConfig::default();
    let z = scans(&cfg, 4);
    for (variant, class) in [
        (FilterVariant::PTphd, gtphd::TargetClass::Point),
        (FilterVariant::ETphd, gtphd::TargetClass::Extended),
    ] {
        let reports = TphdFilter::new(cfg.filter_params(variant).unwrap())
            .unwrap()
            .run(&z)
            .unwrap();
        assert!(reports
            .iter()
            .flat_map(|r| &r.estimates)
            .all(|e| e.class == class));
    }
}
