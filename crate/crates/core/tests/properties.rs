//! Algebraic and probabilistic invariants over random parameters.

use arrivals::lattice_walk::StepLaw;
use arrivals::montecarlo::{stopped_histograms, SimConfig};
use arrivals::renewal::{count_moments, state_table};
use arrivals::stopped::{geometric_stop_asymptotics, stopped_pmf_table, stopped_state_poly, DbpStopsBernoulli, StoppedSpec};
use arrivals::{CoeffSeries, WaitingLaw};
use num_complex::Complex64;
use proptest::prelude::*;

fn series(horizon: usize) -> impl Strategy<Value = CoeffSeries> {
    prop::collection::vec(-1.0f64..1.0, horizon + 1).prop_map(|c| CoeffSeries::new(c).unwrap())
}

fn unit() -> impl Strategy<Value = f64> {
    0.02f64..0.98
}

fn waiting_law() -> impl Strategy<Value = WaitingLaw> {
    prop_oneof![
        unit().prop_map(|p| WaitingLaw::geometric(p).unwrap()),
        unit().prop_map(|mu| WaitingLaw::sibuya(mu).unwrap()),
        (0.0f64..4.0).prop_map(|l| WaitingLaw::shifted_poisson(l).unwrap()),
        prop::collection::vec(0.0f64..1.0, 2..6).prop_filter_map("non-zero", |mut w| {
            w[0] = 0.0;
            let s: f64 = w.iter().sum();
            (s > 1e-3).then(|| WaitingLaw::tabulated(w.iter().map(|x| x / s).collect()).unwrap())
        }),
    ]
}

fn stop_law() -> impl Strategy<Value = WaitingLaw> {
    prop_oneof![
        waiting_law(),
        (0.0f64..=1.0, unit()).prop_map(|(m, p)| WaitingLaw::defective_geometric(m, p).unwrap()),
        (0.0f64..=1.0, unit()).prop_map(|(m, mu)| WaitingLaw::defective_sibuya(m, mu).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_is_commutative_and_associative(a in series(12), b in series(12), c in series(12)) {
        let ab = a.convolve(&b).unwrap();
        prop_assert!(ab.max_abs_diff(&b.convolve(&a).unwrap()).unwrap() < 1e-12);
        let left = ab.convolve(&c).unwrap();
        let right = a.convolve(&b.convolve(&c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-10);
    }

    #[test]
    fn reciprocal_inverts(mut c in prop::collection::vec(-0.5f64..0.5, 16)) {
        c[0] = 1.0;
        let a = CoeffSeries::new(c).unwrap();
        let prod = a.convolve(&a.reciprocal().unwrap()).unwrap();
        prop_assert!(prod.max_abs_diff(&CoeffSeries::delta(15)).unwrap() < 1e-9);
    }

    #[test]
    fn conv_power_is_repeated_convolution(a in series(10), n in 0u64..6) {
        let mut expect = CoeffSeries::delta(10);
        for _ in 0..n {
            expect = expect.convolve(&a).unwrap();
        }
        prop_assert!(a.conv_power(n).max_abs_diff(&expect).unwrap() < 1e-10);
    }

    #[test]
    fn partial_sums_divide_by_one_minus_u(a in series(20)) {
        let ones = CoeffSeries::from_fn(20, |_| 1.0).unwrap();
        prop_assert!(a.partial_sums().max_abs_diff(&a.convolve(&ones).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn waiting_law_pmf_survival_and_gf_agree(law in stop_law()) {
        let pmf = law.pmf_vector(200);
        prop_assert!(pmf.is_subprobability(1e-12));
        prop_assert_eq!(pmf.get(0), 0.0);
        for t in [0u64, 1, 7, 50, 200] {
            let head: f64 = pmf.coeffs()[..=t as usize].iter().sum();
            prop_assert!((law.survival(t) - (1.0 - head)).abs() < 1e-10);
        }
        prop_assert!((law.gf(1.0).unwrap() - law.defect_mass()).abs() < 1e-9);
        prop_assert!((law.gf(0.5).unwrap() - pmf.eval(0.5)).abs() < 1e-12);
    }

    #[test]
    fn waiting_law_text_round_trips(law in stop_law()) {
        let back: WaitingLaw = law.to_string().parse().unwrap();
        prop_assert_eq!(back, law);
    }

    #[test]
    fn renewal_columns_are_distributions(law in waiting_law()) {
        let table = state_table(&law, 60);
        for (t, s) in table.column_sums().iter().enumerate() {
            prop_assert!((s - 1.0).abs() < 1e-10, "t={} sum={}", t, s);
        }
        for row in table.rows() {
            prop_assert!(row.iter().all(|&p| p >= -1e-14));
        }
        prop_assert!(count_moments(&law, 60).is_ok());
    }

    #[test]
    fn stopped_columns_are_distributions(inner in waiting_law(), stop in stop_law()) {
        let spec = StoppedSpec::new(inner, stop, 60).unwrap();
        let table = stopped_pmf_table(&spec);
        for s in table.column_sums() {
            prop_assert!((s - 1.0).abs() < 1e-10);
        }
        let poly = stopped_state_poly(&table, Complex64::new(1.0, 0.0));
        prop_assert!(poly.iter().all(|p| (p.re - 1.0).abs() < 1e-10));
        // M(t) <= t
        for (m, row) in table.rows().iter().enumerate() {
            for (t, &p) in row.iter().enumerate() {
                if m > t {
                    prop_assert!(p.abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn geometric_stop_limit_has_mass_q_s(inner in waiting_law(), q in unit(), mass in 0.0f64..=1.0) {
        let asym = geometric_stop_asymptotics(&inner, q, mass).unwrap();
        prop_assert!((asym.total_mass() - mass).abs() < 1e-9);
        prop_assert!(asym.p_inf.iter().all(|&p| p >= -1e-15));
        prop_assert!((asym.never_stop_prob - (1.0 - mass)).abs() < 1e-15);
    }

    #[test]
    fn dbp_state_polynomial_matches_table(p0 in unit(), q in unit(), mass in 0.0f64..=1.0, vr in -1.0f64..1.0, vi in -1.0f64..1.0) {
        let model = DbpStopsBernoulli::new(p0, q, mass).unwrap();
        let table = stopped_pmf_table(&model.spec(40).unwrap());
        let v = Complex64::new(vr, vi);
        let poly = stopped_state_poly(&table, v);
        for t in [0u64, 1, 2, 5, 17, 40] {
            prop_assert!((poly[t as usize] - model.state_poly(v, t)).norm() < 1e-10);
            let mean: f64 = table.column(t as usize).iter().enumerate().map(|(m, p)| m as f64 * p).sum();
            prop_assert!((mean - model.mean(t)).abs() < 1e-9);
        }
    }

    #[test]
    fn characteristic_function_is_bounded_and_hermitian(phi in prop::collection::vec(-4.0f64..4.0, 2)) {
        for step in [StepLaw::nearest_neighbour(2).unwrap(), StepLaw::triangular_biased(), StepLaw::triangular_unbiased()] {
            let c = step.char_fn(&phi);
            prop_assert!(c.norm() <= 1.0 + 1e-12);
            let minus: Vec<f64> = phi.iter().map(|x| -x).collect();
            prop_assert!((step.char_fn(&minus) - c.conj()).norm() < 1e-12);
            prop_assert!((step.char_fn(&[0.0, 0.0]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulation_ignores_worker_count(seed in any::<u64>(), workers in 2usize..6) {
        let spec = StoppedSpec::new(
            WaitingLaw::sibuya(0.5).unwrap(),
            WaitingLaw::defective_geometric(0.5, 0.1).unwrap(),
            30,
        )
        .unwrap();
        let cfg = SimConfig::new(seed, 2000, 30);
        let one = stopped_histograms(&spec, &cfg.with_workers(1), &[3, 30]).unwrap();
        let many = stopped_histograms(&spec, &cfg.with_workers(workers), &[3, 30]).unwrap();
        prop_assert_eq!(one, many);
    }
}
