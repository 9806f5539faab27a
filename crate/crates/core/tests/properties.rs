use proptest::prelude::*;

use specshape::channel::ChannelProfile;
use specshape::crb::fim_joint;
use specshape::estimators::{estimate_doa_single, estimate_report, theta_from_zeta};
use specshape::exec::map_indexed;
use specshape::synth::{add_noise, shaper_zeta, synthesize, tx_pair_harmonics};
use specshape::zeta::ZetaOptions;
use specshape::{
    nyquist_lag, Execution, FrequencyGrid, ObservedSpectrum, Path, Scenario, ZetaSpectrum,
};

fn channel() -> impl Strategy<Value = ChannelProfile> {
    prop_oneof![
        Just(ChannelProfile::flat()),
        (1.0..2000.0f64).prop_map(ChannelProfile::dry),
        (1.0..2000.0f64, 0.0..20.0f64).prop_map(|(r, v)| ChannelProfile::humid(r, v)),
    ]
}

fn scenario() -> impl Strategy<Value = Scenario> {
    (
        0.0..=180.0f64,
        1e-4..2e-2f64,
        prop::collection::vec((0.0..=180.0f64, 0.0..3.0f64, 0.01..1.0f64), 0..3),
        channel(),
        -20.0..40.0f64,
        any::<u64>(),
    )
        .prop_map(|(theta, d, extra, ch, snr, seed)| {
            let mut sc = Scenario::los(theta, d);
            sc.paths
                .extend(extra.into_iter().map(|(t, l, g)| Path::new(t, l, g)));
            sc.channel = ch;
            sc.snr_db = snr;
            sc.seed = seed;
            sc
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scenario_json_round_trip(sc in scenario()) {
        let back = Scenario::from_json(&sc.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, sc);
    }

    #[test]
    fn nyquist_lag_matches_fft_axis(df in 0.05e9..5e9f64, n in 16usize..2000) {
        let grid = FrequencyGrid::with_spacing(100e9, 100e9 + (n - 1) as f64 * df * (1.0 + 1e-12), df);
        let zs = ZetaSpectrum::from_samples(&vec![1.0; grid.n_samples], grid.spacing(), ZetaOptions::raw());
        let last = *zs.zeta_s.last().unwrap();
        let nyq = nyquist_lag(&grid);
        prop_assert!((nyq * 2.0 * grid.spacing() - 1.0).abs() < 1e-12);
        prop_assert!(last <= nyq * (1.0 + 1e-9));
        prop_assert!(nyq - last <= zs.bin_s() * (1.0 + 1e-9));
    }

    #[test]
    fn tx_pair_lag_ordering(ti in 0.0..=180.0f64, td in 0.0..=180.0f64, d in 1e-4..2e-2f64) {
        let [doa, aod, sum, diff] = tx_pair_harmonics(ti, td, d);
        let eps = 1e-12 * sum;
        prop_assert!(sum + eps >= aod);
        prop_assert!(aod + eps >= doa.max(diff));
        prop_assert!(doa.min(diff) >= -eps);
    }

    #[test]
    fn shaper_lag_inverts(theta in 0.0..=180.0f64, d in 1e-4..2e-2f64) {
        let back = theta_from_zeta(shaper_zeta(theta, d), d);
        prop_assert!((back - theta).abs() < 1e-5);
    }

    #[test]
    fn single_path_estimate_in_range(theta in 0.0..=180.0f64, d in 5e-4..1e-2f64, snr in -5.0..30.0f64, seed in any::<u64>()) {
        let sc = Scenario::los(theta, d);
        let obs = add_noise(&synthesize(&sc).unwrap(), snr, seed);
        if let Ok(e) = estimate_doa_single(&obs, d) {
            prop_assert!((0.0..=180.0).contains(&e.theta_deg));
        }
    }

    #[test]
    fn report_invariants(sc in scenario()) {
        let obs = add_noise(&synthesize(&sc).unwrap(), sc.snr_db, sc.seed);
        if let Ok(r) = estimate_report(&obs, &sc) {
            prop_assert!(r.doas_deg.iter().all(|t| (0.0..=180.0).contains(t)));
            prop_assert!(r.rel_distances_m.iter().all(|d| *d >= 0.0));
            prop_assert!(r.powers_db.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn equal_coincident_paths_double_magnitude(theta in 0.0..=180.0f64, d in 1e-4..2e-2f64) {
        let one = Scenario::los(theta, d);
        let mut two = one.clone();
        two.paths.push(Path::los(theta));
        let a = ObservedSpectrum::noise_free(synthesize(&one).unwrap());
        let b = ObservedSpectrum::noise_free(synthesize(&two).unwrap());
        for (x, y) in a.z.iter().zip(&b.z) {
            prop_assert!((2.0 * x - y).abs() <= 1e-12 * (1.0 + y));
        }
    }

    #[test]
    fn indexed_map_is_schedule_independent(n in 0usize..500) {
        let f = |i: usize| (i as f64).sqrt().sin();
        prop_assert_eq!(map_indexed(n, Execution::Sequential, f), map_indexed(n, Execution::Parallel, f));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn joint_fisher_symmetric_psd(ti in 1.0..179.0f64, td in 0.0..=180.0f64, snr in -10.0..30.0f64) {
        let mut sc = Scenario::tx_pair(ti, td, 5e-3);
        sc.snr_db = snr;
        let j = fim_joint(&sc, ti, td).unwrap().j;
        let scale = j[0][0].abs().max(j[1][1].abs());
        prop_assert!((j[0][1] - j[1][0]).abs() <= 1e-10 * scale);
        let tr = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        prop_assert!(0.5 * tr - disc >= -1e-10 * scale);
    }
}
