use proptest::prelude::*;
use stationize_core::function::Lcf;
use stationize_core::measure::{
    convolve, critical_exponent, integrate, l1_distance, max_cell_difference, poincare_series, pushforward,
    radon_nikodym, uniform_ps_measure, BoundaryMeasure, GroupMeasure,
};
use stationize_core::partition::Partition;
use stationize_core::scalar::{q, qi};
use stationize_core::stationarity::mix;
use stationize_core::{Letter, Rate, VisualParams, WeightedFreeGroup, Word, Q};

fn word(rank: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0..rank, any::<bool>()), 0..=max_len).prop_map(|ls| {
        Word::reduce(ls.into_iter().map(|(i, inv)| if inv { Letter::gen_inv(i) } else { Letter::gen(i) }))
    })
}

fn f2() -> (WeightedFreeGroup, BoundaryMeasure<Q>) {
    let g = WeightedFreeGroup::unit(2).unwrap();
    let log3 = Rate::parse("log 3").unwrap();
    let nu = uniform_ps_measure::<Q>(&g, &VisualParams::new(log3.clone(), log3)).unwrap();
    (g, nu)
}

fn group_measure(max_len: usize) -> impl Strategy<Value = GroupMeasure<Q>> {
    prop::collection::vec((word(2, max_len), 1i64..20), 1..5).prop_map(|atoms| {
        let total: i64 = atoms.iter().map(|(_, m)| m).sum();
        let mut mu = GroupMeasure::new();
        for (w, m) in atoms {
            mu.add(w, q(m, total));
        }
        mu
    })
}

#[test]
fn uniform_cylinder_masses() {
    let (g, nu) = f2();
    // ν(C(w)) = 1/(4·3^{n-1}) for |w| = n.
    for n in 1..=4 {
        for w in g.sphere(n) {
            assert_eq!(nu.mass_of(&w), q(1, 4 * 3i64.pow(n as u32 - 1)));
        }
    }
    assert_eq!(nu.total(), qi(1));
}

#[test]
fn derivative_of_a_inverse() {
    let (g, nu) = f2();
    let f = radon_nikodym(&g.parse_word("a^-1").unwrap(), &nu).unwrap();
    assert_eq!(*f.at_ray(&g.parse_word("a").unwrap()), qi(3));
    for c in ["a^-1", "b", "b^-1"] {
        assert_eq!(*f.at_ray(&g.parse_word(c).unwrap()), q(1, 3));
    }
    assert_eq!(integrate(&f, &nu), qi(1));
    let e = radon_nikodym(&Word::identity(), &nu).unwrap();
    assert!(e.values().iter().all(|v| *v == qi(1)));
}

#[test]
fn pushforward_of_a_inverse() {
    let (g, nu) = f2();
    let p = pushforward(&g.parse_word("a^-1").unwrap(), &nu);
    assert_eq!(p.mass_of(&g.parse_word("a").unwrap()), q(3, 4));
    assert_eq!(pushforward(&Word::identity(), &nu).mass_of(&g.parse_word("b a").unwrap()), q(1, 12));
}

#[test]
fn symmetric_dirac_convolution() {
    // Brute force: (½δ_a + ½δ_{a⁻¹})⋆ν(C(b)) = ½ν(aC(b)) + ½ν(a⁻¹C(b)) = ½(1/12) + ½(1/12).
    let (g, nu) = f2();
    let a = g.parse_word("a").unwrap();
    let mu = GroupMeasure::from_atoms([(a.clone(), q(1, 2)), (a.inverse(), q(1, 2))]).unwrap();
    let b = g.parse_word("b").unwrap();
    assert_eq!(convolve(&mu, &nu).mass_of(&b), q(1, 12));
    // Off the axis of a the two pushforwards differ.
    assert_eq!(pushforward(&a, &nu).mass_of(&a), q(1, 12));
    assert_eq!(pushforward(&a.inverse(), &nu).mass_of(&a), q(3, 4));
}

#[test]
fn integrate_and_l1() {
    let (_, nu) = f2();
    assert_eq!(integrate(&Lcf::constant(2, qi(1)), &nu), qi(1));
    let p = Partition::uniform(2, 1);
    let f = Lcf::new(p.clone(), vec![qi(1), qi(0), qi(2), qi(0)]).unwrap();
    let h = Lcf::new(p, vec![qi(0), qi(0), qi(1), qi(1)]).unwrap();
    // |f - h| = (1, 0, 1, 1) on four cells of mass 1/4.
    assert_eq!(l1_distance(&f, &h, &nu), q(3, 4));
}

#[test]
fn critical_exponent_closed_form() {
    let g = WeightedFreeGroup::unit(2).unwrap();
    let c = critical_exponent(&g, 12);
    assert!((c.value - 3f64.ln()).abs() < 1e-15);
    assert!((c.growth_estimate - 3f64.ln()).abs() < 1e-12);
    let s = poincare_series(&g, 2.0 * 3f64.ln(), 8);
    assert!(!s.divergent);
    assert!(poincare_series(&g, 3f64.ln(), 8).divergent);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cocycle(gamma in word(2, 3), eta in word(2, 3)) {
        let (_, nu) = f2();
        let f_prod = radon_nikodym(&gamma.mul(&eta), &nu).unwrap();
        let f_g = radon_nikodym(&gamma, &nu).unwrap();
        let f_e = radon_nikodym(&eta, &nu).unwrap();
        for c in Partition::uniform(2, gamma.len() + eta.len() + 1).cells() {
            let z = c.ray(c.len() + eta.len() + 2);
            prop_assert_eq!(f_prod.at_ray(c).clone(), f_g.at_ray(&eta.mul(&z)).clone() * f_e.at_ray(c).clone());
        }
    }

    #[test]
    fn pushforward_matches_derivative(gamma in word(2, 3)) {
        let (_, nu) = f2();
        let p = pushforward(&gamma, &nu);
        let f = radon_nikodym(&gamma, &nu).unwrap();
        prop_assert_eq!(p.total(), qi(1));
        for c in Partition::uniform(2, 3).cells() {
            let weighted = nu.weighted(&f);
            prop_assert_eq!(p.mass_of(c), weighted.mass_of(c));
        }
    }

    #[test]
    fn convolution_conserves_mass(mu in group_measure(4)) {
        let (_, nu) = f2();
        prop_assert_eq!(convolve(&mu, &nu).total(), mu.total() * nu.total());
    }

    #[test]
    fn convolution_is_linear(m1 in group_measure(3), m2 in group_measure(3), t in 0i64..=8) {
        let (_, nu) = f2();
        let t = q(t, 8);
        let one = qi(1);
        let mixed = mix(&[(m1.clone(), t.clone()), (m2.clone(), one.clone() - t.clone())]).unwrap();
        let lhs = convolve(&mixed, &nu);
        let rhs = convolve(&m1, &nu).scale(&t).add(&convolve(&m2, &nu).scale(&(one - t))).unwrap();
        let (err, _) = max_cell_difference(&lhs, &rhs, 6);
        prop_assert_eq!(err, qi(0));
    }

    #[test]
    fn integral_is_refinement_invariant(values in prop::collection::vec(0i64..50, 12), depth in 2usize..5) {
        let (_, nu) = f2();
        let f = Lcf::new(Partition::uniform(2, 2), values.iter().map(|v| qi(*v)).collect()).unwrap();
        let finer = f.refine_to(&Partition::uniform(2, depth)).unwrap();
        prop_assert_eq!(integrate(&finer, &nu), integrate(&f, &nu));
        prop_assert!(finer.coarsen().same_function(&f));
    }
}
