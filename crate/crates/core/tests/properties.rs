use proptest::prelude::*;

use rcpolariton::field::{collective_coupling, kerr_shift, upper_bound_g0, GaussianProfile, Profile};
use rcpolariton::lindblad::{analyze, ReducedSystem, SteadyOptions};
use rcpolariton::materials::MaterialParams;
use rcpolariton::spectral::SpectralModel;
use rcpolariton::units::HBAR_MEV_PS;

fn small_steady() -> SteadyOptions {
    SteadyOptions { nc: 3, nx: 3, adaptive: false, ..SteadyOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coupling_bounded_and_scaling(l in 1.0f64..100.0, lz in 10.0f64..500.0, rho in 0.01f64..1.0, wc in 1800.0f64..2300.0) {
        let m = MaterialParams::ws2_defaults();
        let s = collective_coupling(&Profile::Gaussian(GaussianProfile::new(l, lz, rho, 1.0).unwrap()), &m, wc).unwrap();
        prop_assert!(s.g0_mev <= s.g0_max_mev * (1.0 + 1e-14));
        let ratio = upper_bound_g0(&m, wc, 4.0 * lz).unwrap() / s.g0_max_mev;
        prop_assert!((ratio - 0.5).abs() < 1e-12);
        prop_assert!(s.omega0_mev > m.exciton_energy_mev);
    }

    #[test]
    fn kerr_shift_scales_as_inverse_area(l in 1.0f64..200.0, eta in 0.5f64..=1.0) {
        let m = MaterialParams::ws2_defaults();
        let w = kerr_shift(&Profile::Gaussian(GaussianProfile::new(l, 50.0, 0.75, eta).unwrap()), &m).unwrap();
        let w2 = kerr_shift(&Profile::Gaussian(GaussianProfile::new(2.0 * l, 50.0, 0.75, eta).unwrap()), &m).unwrap();
        prop_assert!((w / w2 - 4.0).abs() < 1e-12);
        prop_assert!(w > 0.0);
    }

    #[test]
    fn spectral_densities_nonnegative(xi in 0.5f64..100.0, g0 in 1.0f64..80.0, x in 0.01f64..30.0) {
        let s = SpectralModel::gaussian(2020.0, xi, g0).unwrap();
        let e = 2020.0 + x * xi;
        prop_assert!(s.j_exciton(e).unwrap() >= 0.0);
        prop_assert!(s.j_residual(e).unwrap() >= 0.0);
        prop_assert!(s.j_exciton(2019.0).unwrap() == 0.0);
    }

    #[test]
    fn kernel_bounded_by_sum_rule(xi in 0.5f64..100.0, g0 in 1.0f64..80.0, tau in 0.0f64..5.0, wc in 1900.0f64..2100.0) {
        let s = SpectralModel::gaussian(2020.0, xi, g0).unwrap();
        let k = s.memory_kernel(wc, tau).unwrap().norm();
        prop_assert!(k <= (g0 / HBAR_MEV_PS).powi(2) * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steady_state_is_a_density_matrix(
        dc in -100.0f64..100.0,
        dd in -100.0f64..100.0,
        g in 0.0f64..60.0,
        w in 0.0f64..20.0,
        gc in 1.0f64..30.0,
        gx in 0.5f64..10.0,
        gxp in 0.0f64..10.0,
    ) {
        let sys = ReducedSystem {
            wc_mev: 2020.0 + dc,
            omega0_mev: 2020.0,
            g0_mev: g,
            w0p_mev: w,
            gamma_c_mev: gc,
            gamma_x_mev: gx,
            gamma_xp_mev: gxp,
            gamma_res_mev: 0.1,
            f_mev: 1.0,
            wd_mev: 2020.0 + dd,
        };
        let r = analyze(&sys, &small_steady()).unwrap();
        prop_assert!(r.trace_error < 1e-10);
        prop_assert!(r.hermiticity_error < 1e-10);
        prop_assert!(r.min_eigenvalue > -1e-8);
        prop_assert!(r.g2_zero >= 0.0);
    }

    #[test]
    fn only_detunings_matter(shift in -500.0f64..500.0, dc in -50.0f64..50.0, dd in -50.0f64..50.0) {
        let base = ReducedSystem {
            wc_mev: 2020.0 + dc,
            omega0_mev: 2020.0,
            g0_mev: 30.0,
            w0p_mev: 5.0,
            gamma_c_mev: 10.0,
            gamma_x_mev: 2.0,
            gamma_xp_mev: 1.0,
            gamma_res_mev: 0.0,
            f_mev: 1.0,
            wd_mev: 2020.0 + dd,
        };
        let moved = ReducedSystem {
            wc_mev: base.wc_mev + shift,
            omega0_mev: base.omega0_mev + shift,
            wd_mev: base.wd_mev + shift,
            ..base
        };
        let a = analyze(&base, &small_steady()).unwrap().g2_zero;
        let b = analyze(&moved, &small_steady()).unwrap().g2_zero;
        prop_assert!((a - b).abs() < 1e-8 * a.max(1.0));
    }
}
