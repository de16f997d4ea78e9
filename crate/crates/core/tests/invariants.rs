use cqbl_core::codesim::{pgm_decoder, product_state};
use cqbl_core::entropic::{measured_renyi, rel_entropy, renyi_rel_entropy, vn_entropy, MeasuredRenyiOptions};
use cqbl_core::operator::{alt_check, apply_channel_state, partial_trace, tensor_states, DensityMatrix, HermitianOperator};
use cqbl_core::random::{random_channel, random_density, random_faithful_density, random_positive, random_psd, rng};
use cqbl_core::semigroup::{heisenberg_apply, schrodinger_apply, weighted_lp_norm, Gqds};
use proptest::prelude::*;

fn cfg() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn alt_holds_on_random_psd(seed in any::<u64>(), d in 2usize..=5, r in 0.0f64..=1.0) {
        let mut g = rng(seed);
        let a = random_psd(&mut g, d, d);
        let b = random_psd(&mut g, d, 1 + d / 2);
        let (lhs, rhs) = alt_check(&a, &b, r).unwrap();
        prop_assert!(lhs <= rhs + 1e-9 * rhs.abs().max(1.0), "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn relative_entropy_contracts_under_channels(seed in any::<u64>(), d in 2usize..=4, k in 1usize..=3) {
        let mut g = rng(seed);
        let rho = random_density(&mut g, d, d);
        let sigma = random_faithful_density(&mut g, d);
        let n = random_channel(&mut g, d, d, k);
        let before = rel_entropy(&rho, sigma.as_operator()).unwrap();
        let after = rel_entropy(
            &apply_channel_state(&n, &rho).unwrap(),
            apply_channel_state(&n, &sigma).unwrap().as_operator(),
        )
        .unwrap();
        prop_assert!(after <= before + 1e-9);
        prop_assert!(after >= -1e-12);
    }

    #[test]
    fn renyi_orders_between_measured_and_umegaki(seed in any::<u64>(), d in 2usize..=3, alpha in 0.2f64..0.9) {
        let mut g = rng(seed);
        let rho = random_faithful_density(&mut g, d);
        let sigma = random_faithful_density(&mut g, d);
        let petz = renyi_rel_entropy(&rho, sigma.as_operator(), alpha).unwrap();
        let umegaki = rel_entropy(&rho, sigma.as_operator()).unwrap();
        let opts = MeasuredRenyiOptions { seed, restarts: 4, ..Default::default() };
        let measured = measured_renyi(&rho, &sigma, alpha, &opts).unwrap().value;
        prop_assert!(petz <= umegaki + 1e-9);
        prop_assert!(measured <= petz + 1e-6, "measured {measured} petz {petz}");
    }

    #[test]
    fn depolarizing_semigroup_is_unital_and_trace_preserving(seed in any::<u64>(), d in 2usize..=4, t in 0.0f64..5.0) {
        let mut g = rng(seed);
        let gq = Gqds::new(random_faithful_density(&mut g, d));
        let id = HermitianOperator::identity(d);
        prop_assert!(heisenberg_apply(&gq, t, &id).unwrap().max_abs_diff(&id) < 1e-12);
        let rho = random_density(&mut g, d, 2);
        let out = schrodinger_apply(&gq, t, &rho).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
        // duality Tr[Φ*(ρ) X] = Tr[ρ Φ(X)]
        let x = random_positive(&mut g, d);
        let lhs = out.trace_product(&x);
        let rhs = rho.trace_product(&heisenberg_apply(&gq, t, &x).unwrap());
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn weighted_norm_is_monotone_in_p(seed in any::<u64>(), d in 2usize..=4, p in 1.0f64..3.0) {
        let mut g = rng(seed);
        let sigma = random_faithful_density(&mut g, d);
        let x = random_positive(&mut g, d);
        let lo = weighted_lp_norm(&x, &sigma, p).unwrap();
        let hi = weighted_lp_norm(&x, &sigma, p + 0.5).unwrap();
        prop_assert!(lo <= hi + 1e-10);
    }

    #[test]
    fn pgm_is_complete_and_psd(seed in any::<u64>(), d in 2usize..=4, m in 2usize..=5) {
        let mut g = rng(seed);
        let states: Vec<DensityMatrix> = (0..m).map(|_| random_density(&mut g, d, 1)).collect();
        let w = vec![1.0 / m as f64; m];
        let povm = pgm_decoder(&states, &w).unwrap();
        let mut sum = HermitianOperator::zeros(d);
        for e in povm.elements() {
            prop_assert!(e.is_psd(1e-10));
            sum = sum.add(e);
        }
        prop_assert!(sum.max_abs_diff(&HermitianOperator::identity(d)) < 1e-9);
    }

    #[test]
    fn entropy_is_additive_on_products(seed in any::<u64>(), d in 2usize..=3) {
        let mut g = rng(seed);
        let a = random_density(&mut g, d, d);
        let b = random_density(&mut g, d, 2);
        let ab = tensor_states(&a, &b);
        prop_assert!((vn_entropy(&ab) - vn_entropy(&a) - vn_entropy(&b)).abs() < 1e-10);
        let back = partial_trace(ab.as_operator(), &[d, d], &[0]).unwrap();
        prop_assert!(back.max_abs_diff(a.as_operator()) < 1e-12);
        let word = product_state(&[a.clone(), b.clone()], &[1, 0]);
        prop_assert!((vn_entropy(&word) - vn_entropy(&ab)).abs() < 1e-10);
    }
}
