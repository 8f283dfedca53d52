use stationize_core::io::{group_measure_from_json, group_measure_to_json};
use stationize_core::measure::{uniform_ps_measure, BoundaryMeasure, GroupMeasure};
use stationize_core::scalar::{q, qi};
use stationize_core::stationarity::{default_depth, functionals, mix, sphere_uniform, symmetrize, verify_stationarity};
use stationize_core::{Rate, VisualParams, WeightedFreeGroup, Q};

fn uniform(rank: usize) -> (WeightedFreeGroup, BoundaryMeasure<Q>) {
    let g = WeightedFreeGroup::unit(rank).unwrap();
    let alpha = Rate::log_of(qi(2 * rank as i64 - 1)).unwrap();
    let nu = uniform_ps_measure::<Q>(&g, &VisualParams::new(alpha.clone(), alpha)).unwrap();
    (g, nu)
}

#[test]
fn spheres_are_exactly_stationary() {
    for (rank, max_radius, max_depth) in [(2, 4, 6), (3, 3, 5)] {
        let (g, nu) = uniform(rank);
        for radius in 1..=max_radius {
            let mu = sphere_uniform::<Q>(&g, radius).unwrap();
            let r = verify_stationarity(&mu, &nu, &nu, max_depth).unwrap();
            assert!(r.exact, "F_{rank} sphere {radius}");
        }
    }
}

#[test]
fn functionals_of_spheres_and_diracs() {
    let (g, _) = uniform(2);
    let f = functionals(&sphere_uniform::<Q>(&g, 1).unwrap(), &g);
    assert_eq!(f.moment, 1.0);
    assert!((f.entropy - 4f64.ln()).abs() < 1e-15);
    let f = functionals(&sphere_uniform::<Q>(&g, 2).unwrap(), &g);
    assert_eq!(f.moment, 2.0);
    assert!((f.entropy - 12f64.ln()).abs() < 1e-14);
    let f = functionals(&GroupMeasure::<Q>::dirac(g.parse_word("a").unwrap()), &g);
    assert_eq!((f.moment, f.entropy, f.log_moment), (1.0, 0.0, 0.0));
}

#[test]
fn perturbed_sphere_is_detected() {
    let (g, nu) = uniform(2);
    let mut mu = sphere_uniform::<Q>(&g, 1).unwrap();
    mu.add(g.parse_word("a").unwrap(), q(1, 100));
    let mu = mu.normalized().unwrap();
    let r = verify_stationarity(&mu, &nu, &nu, default_depth(&mu)).unwrap();
    assert!(!r.exact);
    assert!(r.max_cell_error > qi(0));
    assert_eq!(default_depth(&mu), 3);
}

#[test]
fn mixtures_and_symmetrization_stay_stationary() {
    let (g, nu) = uniform(2);
    let parts: Vec<(GroupMeasure<Q>, Q)> =
        (1..=3).map(|r| (sphere_uniform::<Q>(&g, r).unwrap(), q(1, 3))).collect();
    let m = mix(&parts).unwrap();
    assert!(verify_stationarity(&m, &nu, &nu, 5).unwrap().exact);
    let sym = symmetrize(&m);
    assert_eq!(sym, m);
    assert!(verify_stationarity(&sym, &nu, &nu, 5).unwrap().exact);
}

#[test]
fn measure_json_round_trip() {
    let (g, _) = uniform(2);
    let mu = sphere_uniform::<Q>(&g, 2).unwrap();
    let v = group_measure_to_json(&mu, &g);
    assert_eq!(group_measure_from_json::<Q>(&v, &g).unwrap(), mu);
}
