use ising_tau::asymptotics::{
    c_of_nu, psi_small_t, psi_small_t_critical, tau_large_t, tau_large_t_minus_excess,
};
use ising_tau::fixtures::Fixtures;
use ising_tau::solver::{hamiltonian_h1, hamiltonian_h2, solve_family, BmtwParams, SolverConfig};
use ising_tau::specfn::bc_integral;
use ising_tau::tau::{
    nu_action_terms, tau_nu, tau_nu_on, Branch, NuRoute, PiiiIndex, Route, DEFAULT_LAMBDA_NODES,
};

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn product_equals_direct_route() {
    let p = BmtwParams::new(0.5, 0.25).unwrap();
    for branch in [Branch::Plus, Branch::Minus] {
        let a = tau_nu(1.0, &p, branch, NuRoute::G1Direct, &cfg()).unwrap();
        let b = tau_nu(1.0, &p, branch, NuRoute::G10Product, &cfg()).unwrap();
        assert_eq!(b.route, Route::NuProduct);
        assert!((a.value / b.value - 1.0).abs() <= 1e-7);
    }
}

#[test]
fn same_point_reading_of_the_action_identity() {
    let p = BmtwParams::new(0.5, 0.25).unwrap();
    for j in [PiiiIndex::One, PiiiIndex::Two] {
        let terms = nu_action_terms(1.0, &p, j, DEFAULT_LAMBDA_NODES, &cfg()).unwrap();
        assert_eq!(terms.x, 0.5);
        assert!(terms.residual().abs() <= 1e-6);
        assert!(terms.residual_mixed().abs() > 1e-5);
    }
}

#[test]
fn momenta_reach_their_limits() {
    let p = BmtwParams::new(0.5, 0.25).unwrap();
    let traj = solve_family(&p, &cfg()).unwrap();
    let st = traj.piii_at(14.0).unwrap();
    assert!((st.v1 + 0.75).abs() <= 1e-6);
    assert!((st.v2 + 0.25).abs() <= 1e-6);
    assert!((st.h1 - hamiltonian_h1(st.u, st.v1, st.x, 0.25)).abs() < 1e-12);
    assert!((st.h2 - hamiltonian_h2(st.u, st.v2, st.x, 0.25)).abs() < 1e-12);
}

#[test]
fn eliminated_forms_along_an_orbit() {
    let nu = 0.25;
    let traj = solve_family(&BmtwParams::new(0.5, nu).unwrap(), &cfg()).unwrap();
    for t in [0.1, 1.0, 4.0] {
        let st = traj.piii_at(t).unwrap();
        let x = st.x;
        let u = st.u;
        let e1 = x / (4.0 * u * u) * (st.du * st.du - (1.0 - u * u).powi(2))
            - (2.0 * nu + 1.0) / (2.0 * u) * (1.0 - u).powi(2);
        let e2 = x / (4.0 * u * u) * (st.du * st.du - (1.0 - u * u).powi(2))
            - (2.0 * nu - 1.0) / (2.0 * u) * (1.0 - u).powi(2);
        assert!(
            (st.h1 - e1).abs() <= 1e-9 * (1.0 + e1.abs()),
            "t {t}: {} vs {e1}",
            st.h1
        );
        assert!(
            (st.h2 - e2).abs() <= 1e-9 * (1.0 + e2.abs()),
            "t {t}: {} vs {e2}",
            st.h2
        );
    }
}

#[test]
fn reduction_to_the_ising_member() {
    let traj = solve_family(&BmtwParams::ising(0.5).unwrap(), &cfg()).unwrap();
    for t in [0.1, 1.0, 5.0] {
        for branch in [Branch::Plus, Branch::Minus] {
            let h = ising_tau::tau::tau_hamiltonian(&traj, t, branch)
                .unwrap()
                .value;
            for route in [NuRoute::G1Direct, NuRoute::G10Product] {
                assert!(
                    (tau_nu_on(&traj, t, branch, route).unwrap().value / h - 1.0).abs() <= 1e-8
                );
            }
        }
    }
}

#[test]
fn continuity_in_nu() {
    let a = solve_family(&BmtwParams::new(0.5, 1e-6).unwrap(), &cfg()).unwrap();
    let b = solve_family(&BmtwParams::ising(0.5).unwrap(), &cfg()).unwrap();
    for t in [0.01, 0.1, 1.0, 10.0] {
        assert!((a.at(t).unwrap().q - b.at(t).unwrap().q).abs() < 1e-4);
    }
}

#[test]
fn boundary_integral_large_t() {
    let (t, nu): (f64, f64) = (40.0, 0.25);
    let i = bc_integral(t, nu, false).unwrap().0;
    let lead = ising_tau::specfn::ln_gamma(nu + 0.5).unwrap().exp()
        * (2.0 * t).powf(-nu - 0.5)
        * (-t).exp();
    assert!((i / lead - 1.0).abs() < 1e-2);
}

#[test]
fn large_t_plus_law_with_nu() {
    let p = BmtwParams::new(0.5, 0.25).unwrap();
    let traj = solve_family(&p, &cfg()).unwrap();
    let ratio = |t: f64| {
        tau_nu_on(&traj, t, Branch::Plus, NuRoute::G1Direct)
            .unwrap()
            .value
            / tau_large_t(t, &p, Branch::Plus).unwrap()
    };
    let fixture = Fixtures::embedded()
        .value("large_t_plus_ratio_t8_nu_0_25")
        .unwrap();
    assert!((ratio(8.0) / fixture - 1.0).abs() < 1e-6);
    assert!((ratio(8.0) - 1.0).abs() < 5e-2);
    assert!(ratio(8.0) < ratio(12.0));
}

#[test]
fn minus_display_vanishes_with_nu() {
    let small = tau_large_t_minus_excess(8.0, &BmtwParams::new(0.5, 1e-9).unwrap()).unwrap();
    let zero = tau_large_t_minus_excess(8.0, &BmtwParams::ising(0.5).unwrap()).unwrap();
    assert!(small.abs() < 1e-6 * zero);
    assert!(zero > 0.0);
}

#[test]
fn critical_nu_law() {
    let p = BmtwParams::new(1.0, 0.5).unwrap();
    let t: f64 = 1e-3;
    let c = c_of_nu(0.5).unwrap();
    let lt = t.ln();
    let expect = -(0.5 * t * (0.5 * lt * lt - c * lt + (c * c - 1.0) / 2.0)).ln();
    assert!((psi_small_t(t, &p).unwrap() - expect).abs() < 1e-12);
    let traj = solve_family(
        &p,
        &SolverConfig {
            rel_tol: 1e-13,
            abs_tol: 1e-15,
            t_min: 1e-5,
            ..cfg()
        },
    )
    .unwrap();
    let res: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&t| (traj.at(t).unwrap().q - psi_small_t(t, &p).unwrap()).abs())
        .collect();
    assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
    let at_zero_nu = psi_small_t(t, &BmtwParams::ising(1.0).unwrap()).unwrap();
    assert!((at_zero_nu - psi_small_t_critical(t)).abs() < 1e-14);
}
