mod common;

use common::default_link;
use noma_shield::channel::{sample_fading_matrix, sample_population, DistancePins, SystemConfig};
use noma_shield::experiments::trial_rng;
use noma_shield::linalg::{CVector, C64};
use noma_shield::{
    alignment_vectors, build_precoder, optimal_eve_sinr, path_loss, secrecy_capacity, sinr_with_detector,
    EffectiveChannel,
};
use proptest::prelude::*;

fn eve_channel(seed: u64, l: f64, rho: f64) -> EffectiveChannel {
    let cfg = SystemConfig::with_antennas(7, 5);
    let mut rng = trial_rng(seed, 2, 0);
    let pop = sample_population(&cfg, &DistancePins::none(), &mut rng).unwrap();
    let pre = build_precoder(&pop).unwrap();
    let k = sample_fading_matrix(5, 7, &mut rng);
    EffectiveChannel::eavesdropper(&k, &pre.p, 0, l, default_link(rho)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn path_loss_is_monotone(a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let cfg = SystemConfig::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(path_loss(lo, &cfg).unwrap() <= path_loss(hi, &cfg).unwrap());
    }

    #[test]
    fn path_loss_is_flat_inside_reference_radius(d in 0.0f64..=1.0) {
        let cfg = SystemConfig::default();
        prop_assert_eq!(path_loss(d, &cfg).unwrap(), cfg.r0);
    }

    #[test]
    fn sampled_distances_stay_in_rings(seed in any::<u64>()) {
        let cfg = SystemConfig::default();
        let pop = sample_population(&cfg, &DistancePins::none(), &mut trial_rng(seed, 0, 0)).unwrap();
        for p in &pop.pairs {
            prop_assert!(p.d_near >= cfg.r0 && p.d_near <= cfg.r1);
            prop_assert!(p.d_far > cfg.r1 && p.d_far <= cfg.r2);
        }
    }

    #[test]
    fn population_is_seed_deterministic(seed in any::<u64>()) {
        let cfg = SystemConfig::with_antennas(4, 3);
        let a = sample_population(&cfg, &DistancePins::none(), &mut trial_rng(seed, 0, 0)).unwrap();
        let b = sample_population(&cfg, &DistancePins::none(), &mut trial_rng(seed, 0, 0)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn secrecy_without_eavesdropper_is_link_capacity(s in 0.0f64..1e6) {
        prop_assert_eq!(secrecy_capacity(s, 0.0).unwrap(), (1.0 + s).log2());
    }

    #[test]
    fn secrecy_is_monotone(m in 0.0f64..100.0, e in 0.0f64..100.0, dm in 0.0f64..10.0, de in 0.0f64..10.0) {
        let c = secrecy_capacity(m, e).unwrap();
        prop_assert!(c >= 0.0);
        prop_assert!(secrecy_capacity(m + dm, e).unwrap() >= c);
        prop_assert!(secrecy_capacity(m, e + de).unwrap() <= c);
    }

    #[test]
    fn detector_sinr_is_scale_invariant(seed in 0u64..1000, re in -10.0f64..10.0, im in -10.0f64..10.0) {
        prop_assume!(re.hypot(im) > 1e-3);
        let ch = eve_channel(seed, 25.0, 5.0);
        let u: CVector = sample_fading_matrix(5, 1, &mut trial_rng(seed, 3, 0)).column(0).into_owned();
        let scaled = &u * C64::new(re, im);
        let a = sinr_with_detector(&u, &ch).unwrap();
        let b = sinr_with_detector(&scaled, &ch).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(b));
    }

    #[test]
    fn optimal_sinr_falls_with_path_loss(seed in 0u64..1000, l in 1.0f64..500.0, dl in 0.0f64..500.0) {
        let near = optimal_eve_sinr(&eve_channel(seed, l, 5.0)).unwrap().sinr;
        let far = optimal_eve_sinr(&eve_channel(seed, l + dl, 5.0)).unwrap().sinr;
        prop_assert!(far <= near * (1.0 + 1e-12));
    }

    #[test]
    fn optimal_sinr_below_power_split_ceiling(seed in 0u64..1000, l in 1e-6f64..10.0, rho in 0.1f64..1e4) {
        let ch = eve_channel(seed, l, rho);
        let s = optimal_eve_sinr(&ch).unwrap().sinr;
        let link = ch.link();
        prop_assert!(s > 0.0);
        prop_assert!(s < link.alpha_far.powi(2) / link.alpha_near.powi(2));
    }

    #[test]
    fn optimal_detector_dominates(seed in 0u64..1000, dseed in any::<u64>()) {
        let ch = eve_channel(seed, 30.0, 5.0);
        let opt = optimal_eve_sinr(&ch).unwrap();
        let u = sample_fading_matrix(5, 1, &mut trial_rng(dseed, 4, 0)).column(0).into_owned();
        prop_assert!(sinr_with_detector(&u, &ch).unwrap() <= opt.sinr * (1.0 + 1e-12));
    }

    #[test]
    fn alignment_survives_common_scaling(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = trial_rng(seed, 5, 0);
        let gn = sample_fading_matrix(5, 7, &mut rng);
        let gf = sample_fading_matrix(5, 7, &mut rng);
        let (gn_s, gf_s) = (&gn * C64::new(c, 0.0), &gf * C64::new(c, 0.0));
        let a = alignment_vectors(&gn_s, &gf_s).unwrap();
        let scale = c * (a.v_near.norm() + a.v_far.norm());
        prop_assert!(a.residual(&gn_s, &gf_s) / scale <= 1e-9);
        prop_assert!(a.residual(&gn, &gf) / (a.v_near.norm() + a.v_far.norm()) <= 1e-9);
    }
}
