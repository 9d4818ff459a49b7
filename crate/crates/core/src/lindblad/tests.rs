use super::*;
use crate::nonmarkovian::reduced_population;
use crate::units::HBAR_MEV_PS;

fn blockade_like() -> ReducedSystem {
    let omega0 = 2020.0 + 1.735;
    ReducedSystem {
        wc_mev: omega0 - 220.0,
        omega0_mev: omega0,
        g0_mev: 57.5,
        w0p_mev: 9.02,
        gamma_c_mev: 25.0,
        gamma_x_mev: 4.0,
        gamma_xp_mev: 4.008,
        gamma_res_mev: 0.3,
        f_mev: 1.5,
        wd_mev: omega0 + 13.0,
    }
}

fn opts(n: usize) -> SteadyOptions {
    SteadyOptions { nc: n, nx: n, adaptive: false, ..SteadyOptions::default() }
}

#[test]
fn steady_state_is_a_density_matrix() {
    let r = analyze(&blockade_like(), &opts(5)).unwrap();
    assert!(matches!(r.solver, SolverMethod::Gmres { .. }));
    assert!(r.trace_error < 1e-12);
    assert!(r.hermiticity_error < 1e-10);
    assert!(r.min_eigenvalue > -1e-10);
    assert!(r.residual < 1e-10);
    assert!(r.g2_zero < 1.0 && r.g2_zero > 0.0, "g2 {}", r.g2_zero);
}

#[test]
fn gmres_matches_dense() {
    let sys = blockade_like();
    let fock = FockSpace::new(5, 5);
    let l = build_liouvillian(&sys, &fock, 40_000).unwrap();
    let it = steady_state(&l, 1e-12).unwrap();
    let de = steady_state_dense(&l).unwrap();
    assert!((&it.rho - &de.rho).norm() < 1e-11);
    let (g_it, g_de) = (g2_zero(&it.rho, &fock).unwrap(), g2_zero(&de.rho, &fock).unwrap());
    assert!((g_it - g_de).abs() < 1e-8 * g_de, "{g_it} vs {g_de}");
}

#[test]
fn single_kerr_mode_weak_drive() {
    let (delta, w, gamma, f) = (0.7, 2.0, 1.0, 1e-3);
    let fock = FockSpace::new(0, 6);
    let b = fock.b();
    let bd = b.adjoint();
    let n = &bd * &b;
    let re = |x: f64| C::new(x, 0.0);
    let h = &n * re(delta) + (&bd * &bd * &b * &b) * re(w);
    let hf = (&b + &bd) * re(f);
    let l = Liouvillian::from_parts(&h, Some(&hf), &[Jump { rate_mev: 2.0 * gamma, op: b.clone() }], 1000).unwrap();
    let rho = steady_state(&l, 1e-13).unwrap().rho;
    let num = (&bd * &bd * &b * &b * &rho).trace().re;
    let den = (&n * &rho).trace().re;
    let got = num / (den * den);
    let kappa = 2.0 * gamma;
    let want = (delta * delta + kappa * kappa / 4.0) / ((delta + w).powi(2) + kappa * kappa / 4.0);
    assert!((got - want).abs() < 1e-4 * want, "{got} vs {want}");
}

#[test]
fn linear_limit_reproduces_two_mode_amplitudes() {
    let sys = ReducedSystem {
        wc_mev: 2000.0,
        omega0_mev: 2010.0,
        g0_mev: 20.0,
        w0p_mev: 0.0,
        gamma_c_mev: 5.0,
        gamma_x_mev: 0.0,
        gamma_xp_mev: 0.0,
        gamma_res_mev: 3.0,
        f_mev: 0.0,
        wd_mev: 2000.0,
    };
    let fock = FockSpace::new(1, 1);
    let l = build_liouvillian(&sys, &fock, 1000).unwrap();
    let mut rho0 = DMatrix::<C>::zeros(4, 4);
    let i = fock.index(1, 0);
    rho0[(i, i)] = C::new(1.0, 0.0);
    let t: Vec<f64> = (0..=40).map(|k| 0.025 * k as f64).collect();
    let states = propagate(&l, &rho0, &t).unwrap();
    let want = reduced_population(20.0, 10.0, 5.0, 3.0, &t);
    for (s, w) in states.iter().zip(&want) {
        let got = occupations(s, &fock).0;
        assert!((got - w).abs() < 1e-8, "{got} vs {w}");
    }
}

#[test]
fn one_excitation_splitting() {
    let (g, dc, dx) = (7.0, 3.0, -2.0);
    let sys = ReducedSystem {
        wc_mev: dc,
        omega0_mev: dx,
        g0_mev: g,
        w0p_mev: 0.0,
        gamma_c_mev: 0.0,
        gamma_x_mev: 0.0,
        gamma_xp_mev: 0.0,
        gamma_res_mev: 0.0,
        f_mev: 0.0,
        wd_mev: 0.0,
    };
    let l = build_liouvillian(&sys, &FockSpace::new(1, 1), 1000).unwrap();
    let ev = l.to_dense().schur().eigenvalues().unwrap();
    let want = (4.0 * g * g + (dc - dx).powi(2)).sqrt() / HBAR_MEV_PS;
    let best = ev.iter().map(|e| (e - C::new(0.0, want)).norm()).fold(f64::INFINITY, f64::min);
    assert!(best < 1e-9 * want, "closest eigenvalue off by {best}");
}

#[test]
fn cavity_coherence_decays_at_gamma_c() {
    let sys = ReducedSystem {
        wc_mev: 0.0,
        omega0_mev: 0.0,
        g0_mev: 0.0,
        w0p_mev: 0.0,
        gamma_c_mev: 2.0,
        gamma_x_mev: 0.0,
        gamma_xp_mev: 0.0,
        gamma_res_mev: 0.0,
        f_mev: 0.0,
        wd_mev: 0.0,
    };
    let fock = FockSpace::new(2, 1);
    let l = build_liouvillian(&sys, &fock, 1000).unwrap();
    let mut psi = nalgebra::DVector::<C>::zeros(fock.dim());
    psi[fock.index(0, 0)] = C::new(0.5f64.sqrt(), 0.0);
    psi[fock.index(1, 0)] = C::new(0.5f64.sqrt(), 0.0);
    let rho0 = &psi * psi.adjoint();
    let t = 1.3;
    let rho = propagate(&l, &rho0, &[t]).unwrap().pop().unwrap();
    let amp = (fock.a() * rho).trace();
    let want = 0.5 * (-2.0 * t / HBAR_MEV_PS).exp();
    assert!((amp.re - want).abs() < 1e-10 && amp.im.abs() < 1e-12, "{amp} vs {want}");
}

#[test]
fn undriven_system_relaxes_to_vacuum() {
    let mut sys = blockade_like();
    sys.f_mev = 0.0;
    let res = solve_steady(&sys, &opts(5)).unwrap();
    assert!((res.state.rho[(0, 0)].re - 1.0).abs() < 1e-14);
    assert!(matches!(g2_zero(&res.state.rho, &res.fock), Err(Error::UndefinedCorrelation(_))));
}

#[test]
fn lossless_system_is_singular() {
    let mut sys = blockade_like();
    sys.gamma_c_mev = 0.0;
    sys.gamma_x_mev = 0.0;
    sys.gamma_xp_mev = 0.0;
    sys.gamma_res_mev = 0.0;
    for n in [2, 5] {
        assert!(matches!(solve_steady(&sys, &opts(n)), Err(Error::Singular(_))), "N={n}");
    }
}

#[test]
fn propagation_keeps_trace_and_hermiticity() {
    let sys = blockade_like();
    let fock = FockSpace::new(3, 3);
    let l = build_liouvillian(&sys, &fock, 1000).unwrap();
    let d = fock.dim();
    let m = DMatrix::<C>::from_fn(d, d, |r, c| C::new(((r * 3 + c) % 5) as f64, ((r + 2 * c) % 3) as f64 - 1.0));
    let mut rho0 = &m * m.adjoint();
    rho0 /= rho0.trace();
    let t: Vec<f64> = (1..=10).map(|k| k as f64).collect();
    for rho in propagate(&l, &rho0, &t).unwrap() {
        assert!((rho.trace() - C::new(1.0, 0.0)).norm() < 1e-9);
        assert!((&rho - rho.adjoint()).norm() < 1e-9);
        assert!(smallest_eigenvalue(&rho) > -1e-9);
    }
}

#[test]
fn truncation_grows_under_strong_drive() {
    let mut sys = blockade_like();
    sys.wd_mev = sys.wc_mev;
    sys.g0_mev = 0.0;
    sys.f_mev = 25.0;
    let o = SteadyOptions { nc: 2, nx: 2, adaptive: true, max_fock: 12, ..SteadyOptions::default() };
    let res = solve_steady(&sys, &o).unwrap();
    assert!(res.fock.nc > 2);
    assert!(res.truncation_converged);
    assert!(res.top_population.0 < TRUNCATION_TOL);
    let capped = SteadyOptions { max_dim: 100, ..o };
    assert!(matches!(solve_steady(&sys, &capped), Err(Error::Resource(_))));
}

#[test]
fn g2_tau_starts_at_g2_zero_and_decorrelates() {
    let tr = g2_tau(&blockade_like(), &opts(4), 2.0, 41).unwrap();
    assert!((tr.g2[0] - tr.steady.g2_zero).abs() < 1e-9);
    assert!((tr.g2.last().unwrap() - 1.0).abs() < 1e-6, "{:?}", tr.g2.last());
}

#[test]
fn detuning_family_matches_direct_build() {
    let base = blockade_like();
    let fam = DetuningFamily::new(&base, FockSpace::new(3, 3), 40_000).unwrap();
    for (wc, wd, gr) in [(1900.0, 2030.0, 0.1), (2050.0, 2010.0, 2.5)] {
        let sys = ReducedSystem { gamma_res_mev: gr, ..base.with_frequencies(wc, wd) };
        let want = build_liouvillian(&sys, &FockSpace::new(3, 3), 40_000).unwrap().to_dense();
        let got = fam.at(wc, wd, gr).to_dense();
        assert!((got - &want).norm() < 1e-12 * want.norm());
    }
}


#[test]
fn identity_is_a_left_null_vector() {
    let fock = FockSpace::new(5, 5);
    let l = build_liouvillian(&blockade_like(), &fock, 40_000).unwrap().full();
    let id = Liouvillian::vectorize(&DMatrix::<C>::identity(fock.dim(), fock.dim()));
    let r = l.adjoint_matvec(&id);
    let norm = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    assert!(norm < 1e-12, "‖L†(1)‖ = {norm:e}");
}

#[test]
fn coherent_linear_response() {
    let mut sys = blockade_like();
    sys.w0p_mev = 0.0;
    sys.gamma_xp_mev = 0.0;
    sys.wd_mev = sys.omega0_mev - 40.0;
    let r = analyze(&sys, &opts(4)).unwrap();
    // Mean-field amplitudes of the two driven damped oscillators.
    let dc = C::new(sys.gamma_c_mev, sys.wc_mev - sys.wd_mev);
    let dx = C::new(sys.gamma_x_mev + 0.5 * sys.gamma_res_mev, sys.omega0_mev - sys.wd_mev);
    let i = C::i();
    let g = sys.g0_mev;
    let alpha = -i * sys.f_mev / (dc + g * g / dx);
    let want = alpha.norm_sqr();
    assert!((r.n_cavity - want).abs() < 1e-6 * want, "{} vs {want}", r.n_cavity);
    assert!((r.g2_zero - 1.0).abs() < 1e-6);
}

#[test]
fn strongly_nonlinear_driven_exciton_antibunches() {
    let fock = FockSpace::new(0, 2);
    let b = fock.b();
    let bd = b.adjoint();
    let re = |x: f64| C::new(x, 0.0);
    let h = (&bd * &bd * &b * &b) * re(1e5);
    let hf = (&b + &bd) * re(0.5);
    let l = Liouvillian::from_parts(&h, Some(&hf), &[Jump { rate_mev: 2.0, op: b.clone() }], 100).unwrap();
    let rho = steady_state(&l, 1e-13).unwrap().rho;
    // A single mode indexed by n is the cavity axis of a (2, 0) space.
    let g2 = g2_zero(&rho, &FockSpace::new(2, 0)).unwrap();
    assert!(g2 < 1e-6, "g2 {g2}");
}

#[test]
fn g2_tau_is_nonnegative() {
    let tr = g2_tau(&blockade_like(), &opts(4), 5.0, 101).unwrap();
    assert!(tr.g2.iter().all(|&g| g >= 0.0));
}
