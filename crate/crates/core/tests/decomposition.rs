use proptest::prelude::*;
use stationize_core::decomposition::{
    basis_decompose, greedy_subfunction, moment_decompose, sequence_decay_bound, sequence_decay_direct,
    GreedyParams, StopReason,
};
use stationize_core::function::Lcf;
use stationize_core::measure::{
    convolve, integrate, max_cell_difference, pushforward, radon_nikodym, uniform_ps_measure, BoundaryMeasure,
    GroupMeasure,
};
use stationize_core::partition::Partition;
use stationize_core::scalar::{q, qi};
use stationize_core::spikes::make_spike;
use stationize_core::stationarity::verify_stationarity;
use stationize_core::{Rate, VisualParams, WeightedFreeGroup, Word, Q};

fn setup<S: stationize_core::Scalar>() -> (WeightedFreeGroup, VisualParams, BoundaryMeasure<S>) {
    let g = WeightedFreeGroup::unit(2).unwrap();
    let log3 = Rate::parse("log 3").unwrap();
    let p = VisualParams::new(log3.clone(), log3);
    let nu = uniform_ps_measure::<S>(&g, &p).unwrap();
    (g, p, nu)
}

#[test]
fn derivative_target_has_a_dirac_fixed_point() {
    let (g, _, nu) = setup::<Q>();
    let a_inv = g.parse_word("a^-1").unwrap();
    let target = pushforward(&a_inv, &nu);
    let r = verify_stationarity(&GroupMeasure::dirac(a_inv), &nu, &target, 4).unwrap();
    assert!(r.exact);
}

#[test]
fn derivative_target_is_reconstructed() {
    let (g, p, nu) = setup::<f64>();
    let a_inv = g.parse_word("a^-1").unwrap();
    let f = radon_nikodym(&a_inv, &nu).unwrap();
    let r = basis_decompose(&f, &nu, &GreedyParams::new(p)).unwrap();
    assert_eq!(r.stop, StopReason::Tolerance);
    let (err, _) = max_cell_difference(&convolve(&r.coefficients, &nu), &pushforward(&a_inv, &nu), 4);
    assert!(err <= 1e-6, "error {err}");
    assert!(r.rate_ok);
}

#[test]
fn exact_mass_balance() {
    // μ(Γ) + ‖R‖₁ = ‖F‖₁ exactly in every round.
    let (_, p, nu) = setup::<Q>();
    let f = Lcf::new(Partition::uniform(2, 1), vec![qi(2), qi(1), qi(1), qi(1)]).unwrap();
    let mut params = GreedyParams::new(p);
    params.max_rounds = 4;
    params.tolerance = 0.0;
    let r = basis_decompose(&f, &nu, &params).unwrap();
    assert_eq!(r.stop, StopReason::MaxRounds);
    assert_eq!(r.coefficients.total() + r.residual_trace.last().unwrap().clone(), integrate(&f, &nu));
    assert_eq!(r.residual_trace.len(), 5);
    assert!(r.residual_trace.windows(2).all(|w| w[1] < w[0]));
    let conv = convolve(&r.coefficients, &nu);
    let rebuilt = conv.add(&nu.weighted(&r.residual)).unwrap();
    let (err, _) = max_cell_difference(&rebuilt, &nu.weighted(&f), 5);
    assert_eq!(err, qi(0));
}

#[test]
fn moment_functionals_within_reported_bound() {
    let (_, p, nu) = setup::<f64>();
    let r = moment_decompose(&Lcf::constant(2, 1.0), &nu, &GreedyParams::new(p)).unwrap();
    let env = r.envelope.as_ref().unwrap();
    assert!(r.functionals.finite());
    assert!(r.functionals.moment <= env.moment_bound);
    assert!(r.functionals.entropy <= env.entropy_bound);
    assert!(env.a_moment.is_finite() && env.a_entropy.is_finite());
    assert!(env.ok);
}

#[test]
fn invalid_parameters_are_rejected() {
    let (_, p, nu) = setup::<f64>();
    let one = Lcf::constant(2, 1.0);
    let mut params = GreedyParams::new(p.clone());
    params.tolerance = 0.0;
    assert!(basis_decompose(&one, &nu, &params).is_err());
    let mut params = GreedyParams::new(p.clone());
    params.s = q(5, 2);
    assert!(basis_decompose(&one, &nu, &params).is_err());
    let mut params = GreedyParams::new(p);
    params.beta = qi(1);
    assert!(basis_decompose(&one, &nu, &params).is_err());
    assert!(basis_decompose(&Lcf::constant(2, 0.0), &nu, &GreedyParams::new(nu_params())).is_err());
}

fn nu_params() -> VisualParams {
    let log3 = Rate::parse("log 3").unwrap();
    VisualParams::new(log3.clone(), log3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn greedy_stays_below_target(values in prop::collection::vec(1i64..8, 4)) {
        let (g, p, nu) = setup::<Q>();
        let f = Lcf::new(Partition::uniform(2, 1), values.iter().map(|v| qi(*v)).collect()).unwrap();
        let spikes: Vec<_> = g.sphere(3).iter().map(|w| make_spike(&w.inverse(), &nu, &p, &qi(0)).unwrap()).collect();
        let mut params = GreedyParams::new(p);
        params.l_nu = Some(1.0 / 24.75);
        let out = greedy_subfunction(&f, &spikes, &[Word::identity()], &g, &params).unwrap();
        prop_assert!(out.h.le(&f));
        prop_assert!(out.lambdas.iter().all(|l| *l >= qi(0)));
        prop_assert!(integrate(&out.h, &nu) > qi(0));
    }

    #[test]
    fn sequence_decay_closed_form(
        schedule in prop::collection::vec((0.0f64..=1.0, 0.0f64..5.0), 1..80),
        a1 in 0.0f64..5.0,
    ) {
        let (d, e): (Vec<f64>, Vec<f64>) = schedule.into_iter().unzip();
        let closed = sequence_decay_bound(&d, &e, &a1).unwrap();
        let direct = sequence_decay_direct(&d, &e, &a1);
        for (c, x) in closed.iter().zip(&direct) {
            prop_assert!((c - x).abs() <= 1e-12);
        }
    }

    #[test]
    fn sequence_decay_exact(schedule in prop::collection::vec((0i64..=6, 0i64..9), 1..20), a1 in 0i64..9) {
        let d: Vec<Q> = schedule.iter().map(|(x, _)| q(*x, 6)).collect();
        let e: Vec<Q> = schedule.iter().map(|(_, y)| qi(*y)).collect();
        prop_assert_eq!(sequence_decay_bound(&d, &e, &qi(a1)).unwrap(), sequence_decay_direct(&d, &e, &qi(a1)));
    }
}
