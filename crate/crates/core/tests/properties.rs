use proptest::prelude::*;
use suptrap_core::atom::{expected_leakage, run_protocol, AtomTrapConfig};
use suptrap_core::collapse::{apply_model_density, CollapseModel};
use suptrap_core::inference::{geometric_mle, rate_from_percycle, EstimateOptions, IntervalMethod};
use suptrap_core::pathsum::{
    enumerate_paths, propagate, through_point_amplitude, HoppingKernel, SpacetimePoint,
};
use suptrap_core::quantum::{random_unitary, DensityMatrix, PureState};
use suptrap_core::wavefield::{gaussian_packet, CrankNicolson, Grid1D, Potential};
use suptrap_core::{RngStream, C64};

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_filter("non-degenerate", |v| {
            v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3
        })
        .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

fn model(kind: u8, rate: f64) -> CollapseModel {
    match kind % 4 {
        0 => CollapseModel::none(),
        1 => CollapseModel::dephasing(rate).unwrap(),
        2 => CollapseModel::projective(rate).unwrap(),
        _ => CollapseModel::csl_like(rate, 2.0, 0.8).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitaries_preserve_norm(amps in amplitudes(4), seed in any::<u64>()) {
        let names = labels(4);
        let psi = PureState::normalized(names.clone(), amps).unwrap();
        let u = random_unitary(4, &mut RngStream::new(seed, 0));
        let targets: Vec<&str> = names.iter().map(String::as_str).collect();
        let out = psi.apply_unitary(&u, &targets).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collapse_channels_keep_a_valid_density_matrix(
        amps in amplitudes(3), kind in 0u8..4, rate in 0.0f64..5.0, duration in 0.0f64..3.0,
    ) {
        let rho = DensityMatrix::from_pure(&PureState::normalized(labels(3), amps).unwrap());
        let out = apply_model_density(&rho, &model(kind, rate), duration).unwrap();
        out.validate().unwrap();
        for i in 0..3 {
            prop_assert!((out.matrix()[(i, i)] - rho.matrix()[(i, i)]).norm() < 1e-15);
            for j in 0..3 {
                prop_assert!(out.matrix()[(i, j)].norm() <= rho.matrix()[(i, j)].norm() + 1e-15);
            }
        }
    }

    #[test]
    fn crank_nicolson_conserves_norm(x0 in -5.0f64..5.0, sigma in 1.0f64..4.0, k0 in -2.0f64..2.0, depth in 0.0f64..2.0) {
        let grid = Grid1D::spanning(-30.0, 30.0, 400).unwrap();
        let v = Potential::from_fn(&grid, |x| depth * (x / 10.0).powi(2)).unwrap();
        let cn = CrankNicolson::new(grid, &v, 1.0, 0.01).unwrap();
        let mut psi = gaussian_packet(grid, 1.0, x0, sigma, k0).unwrap();
        for _ in 0..50 {
            cn.step_in_place(&mut psi).unwrap();
        }
        prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn path_sum_factorizes(sites in 2usize..5, steps in 2usize..7, seed in any::<u64>(), pick in any::<(usize, usize, usize)>()) {
        let k = HoppingKernel::random(sites, &mut RngStream::new(seed, 1)).unwrap();
        let a = SpacetimePoint::new(pick.0 % sites, 0);
        let c = SpacetimePoint::new(pick.1 % sites, steps);
        let b = SpacetimePoint::new(pick.2 % sites, steps / 2);
        let brute = enumerate_paths(&k, a, c).unwrap();
        let mut psi0 = vec![C64::new(0.0, 0.0); sites];
        psi0[a.site] = C64::new(1.0, 0.0);
        let matrix = propagate(&k, &psi0, steps).unwrap()[c.site];
        prop_assert!((brute - matrix).norm() < 1e-12);
        let through = through_point_amplitude(&k, a, b, c).unwrap();
        let split = enumerate_paths(&k, a, b).unwrap() * enumerate_paths(&k, b, c).unwrap();
        prop_assert!((through - split).norm() < 1e-12);
    }

    #[test]
    fn geometric_estimate_is_order_invariant(
        mut samples in prop::collection::vec(1u64..30, 1..200), censored in 0u64..50, profile in any::<bool>(), seed in any::<u64>(),
    ) {
        let method = if profile { IntervalMethod::ProfileLikelihood } else { IntervalMethod::Wald };
        let o = EstimateOptions { method, ..Default::default() };
        let before = geometric_mle(&samples, censored, 30, &o).unwrap();
        let mut rng = RngStream::new(seed, 0);
        for i in (1..samples.len()).rev() {
            let j = (rng.uniform() * (i + 1) as f64) as usize;
            samples.swap(i, j.min(i));
        }
        let after = geometric_mle(&samples, censored, 30, &o).unwrap();
        prop_assert_eq!(before.q_hat.to_bits(), after.q_hat.to_bits());
        prop_assert_eq!(before.ci_low.to_bits(), after.ci_low.to_bits());
        prop_assert_eq!(before.ci_high.to_bits(), after.ci_high.to_bits());
        prop_assert!(before.ci_low <= before.q_hat && before.q_hat <= before.ci_high);
    }

    #[test]
    fn rate_inverts_collapse_probability(lambda in 0.0f64..4.0, tau in 0.01f64..1.0) {
        let p = CollapseModel::projective(lambda).unwrap().collapse_probability(tau);
        prop_assert!((rate_from_percycle(p, tau).unwrap() - lambda).abs() < 1e-12);
    }

    #[test]
    fn leakage_law_sums_to_at_most_n0(p in 0.0f64..1.0, cycles in 1usize..200) {
        let total: f64 = (1..=cycles).map(|k| expected_leakage(p, 1e5, k)).sum();
        let closed = 1e5 * (1.0 - (1.0 - p / 2.0).powi(cycles as i32));
        prop_assert!(total <= 1e5 * (1.0 + 1e-12));
        prop_assert!((total - closed).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn protocol_bookkeeping_is_exact(
        kind in 0u8..4, rate in 0.0f64..1.0, eta in 0.0f64..=1.0, fidelity in 0.5f64..=1.0, seed in any::<u64>(),
    ) {
        let mut cfg = AtomTrapConfig::new(model(kind, rate), 1.0, 20, seed).unwrap();
        cfg.push_efficiency = eta;
        cfg.pulse_fidelity = fidelity;
        let series = run_protocol(&cfg, 500).unwrap();
        series.check_bookkeeping().unwrap();
        let remaining = series.records.last().unwrap().n_remaining;
        prop_assert_eq!(remaining + series.total_removed(), 500);
        prop_assert!(series.records.windows(2).all(|w| w[1].n_remaining <= w[0].n_remaining));
    }
}
