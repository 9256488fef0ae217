use proptest::prelude::*;

use orbitflag::hamiltonian::{decompose_control, ControlBasis};
use orbitflag::linalg::{self, fro, C64};
use orbitflag::model::{self, apply_dissipator, apply_lindblad, hermitian_decompose, trace_distance_raw};
use orbitflag::orbit::{compute_w, integrate_lambda, project_field};
use orbitflag::simplex::{build_projection, weyl_chamber};
use orbitflag::slc::{b_map, build_field_set, compute_a_iota};
use orbitflag::{CMatrix, Flag, FlagPath, RMatrix, RVector, SeededRng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_identities(n in 2usize..=8) {
        let p = build_projection(n).unwrap();
        let pi = p.matrix();
        prop_assert!((pi * p.iota()).amax() < 1e-12);
        prop_assert!((pi * pi.transpose() - RMatrix::identity(n - 1, n - 1)).amax() < 1e-12);
        let ones = RMatrix::from_element(n, n, 1.0 / n as f64);
        prop_assert!((pi.transpose() * pi - (RMatrix::identity(n, n) - ones)).amax() < 1e-12);
    }

    #[test]
    fn projection_is_an_isometry(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = SeededRng::new(seed);
        let p = build_projection(n).unwrap();
        let a = r.simplex_point(n);
        let b = r.simplex_point(n);
        let xa = p.project(&a).unwrap().x;
        let xb = p.project(&b).unwrap().x;
        prop_assert!(((xa.clone() - &xb).norm() - (&a - &b).norm()).abs() < 1e-12);
        prop_assert!((p.lift(&xa) - a).amax() < 1e-12);
    }

    #[test]
    fn rate_matrix_invariants(seed in any::<u64>(), n in 2usize..=5, count in 0usize..4) {
        let mut r = SeededRng::new(seed);
        let sys = r.gaussian_system(n, count, 1.0);
        let u = r.unitary(n);
        let om = compute_w(&sys, &Flag::new(u.clone()).unwrap()).unwrap();
        prop_assert!(om.max_column_sum() < 1e-12 * (1.0 + om.w.amax()));
        prop_assert!(om.w.iter().all(|&v| v >= 0.0));
        for j in 0..n {
            prop_assert_eq!(om.w[(j, j)], 0.0);
        }
        prop_assert!(om.spectral_abscissa() <= 1e-12 * (1.0 + om.w.amax()));
        // column phases do not change the rates
        let mut phased = u.clone();
        for j in 0..n {
            let ph = C64::from_polar(1.0, r.uniform_in(-3.0, 3.0));
            let mut col = phased.column_mut(j);
            col *= ph;
        }
        let om2 = compute_w(&sys, &Flag::new(phased).unwrap()).unwrap();
        prop_assert!((om2.w - &om.w).amax() < 1e-12 * (1.0 + om.w.amax()));
        let map = build_projection(n).unwrap();
        let f = project_field(&map, &om).unwrap();
        prop_assert!((&f.b - map.matrix() * (&om.omega * map.iota())).amax() < 1e-12);
    }

    #[test]
    fn dissipator_is_traceless_hermitian(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = SeededRng::new(seed);
        let sys = r.gaussian_system(n, 3, 1.0);
        let rho = r.density_matrix(n);
        let d = apply_dissipator(&sys, &rho).unwrap();
        prop_assert!(linalg::trace(&d).norm() < 1e-12);
        prop_assert!(linalg::hermitian_residual(&d) < 1e-12);
        let h = r.hermitian(n, 1.0);
        let full = apply_lindblad(&sys, &h, &rho).unwrap();
        prop_assert!(linalg::trace(&full).norm() < 1e-12);
    }

    #[test]
    fn decomposition_round_trip(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = SeededRng::new(seed);
        let rho = r.density_matrix(n);
        let d = hermitian_decompose(&rho, 1e-9).unwrap();
        prop_assert!(fro(&(d.reassemble() - &rho)) < 1e-12);
        prop_assert!(linalg::unitarity_residual(&d.frame) < 1e-12);
        prop_assert!(d.lambda.as_slice().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(weyl_chamber(&d.lambda).is_identity());
    }

    #[test]
    fn trace_distance_is_a_contraction(seed in any::<u64>()) {
        let mut r = SeededRng::new(seed);
        let sys = r.gaussian_system(3, 2, 0.5);
        let a = r.density_matrix(3);
        let b = r.density_matrix(3);
        let d0 = trace_distance_raw(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d0));
        prop_assert!((d0 - trace_distance_raw(&b, &a).unwrap()).abs() < 1e-14);
        let run = |rho: &CMatrix| {
            let s = model::validate_density(rho, 1e-9).unwrap();
            orbitflag::hamiltonian::simulate_full(&sys, |_| Ok(CMatrix::zeros(3, 3)), &s, (0.0, 0.5), 1e-2)
                .unwrap()
                .final_state()
                .clone()
        };
        prop_assert!(trace_distance_raw(&run(&a), &run(&b)).unwrap() <= d0 + 1e-10);
    }

    #[test]
    fn simplex_is_preserved(seed in any::<u64>()) {
        let mut r = SeededRng::new(seed);
        let sys = r.gaussian_system(4, 3, 0.7);
        let path = FlagPath::geodesic(Flag::new(r.unitary(4)).unwrap(), r.anti_hermitian(4, 1.0), 1.0).unwrap();
        let traj = integrate_lambda(&sys, &path, &r.simplex_point(4), (0.0, 1.0), 1e-3).unwrap();
        for l in &traj.lambdas {
            prop_assert!((l.sum() - 1.0).abs() < 1e-9);
            prop_assert!(l.min() >= -1e-9);
        }
    }

    #[test]
    fn control_decomposition_round_trip(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = SeededRng::new(seed);
        let basis = ControlBasis::new(n).unwrap();
        let h = r.hermitian(n, 2.0);
        let (u, off) = decompose_control(&h, &basis).unwrap();
        prop_assert!(fro(&(basis.reassemble(&u, off) - h)) < 1e-12);
    }

    #[test]
    fn b_vertices_are_fixed_points(seed in any::<u64>()) {
        let mut r = SeededRng::new(seed);
        let sys = r.gaussian_system(3, 2, 1.0);
        let set = compute_a_iota(&sys).unwrap();
        let fields = build_field_set(&sys, &set.flags, true).unwrap();
        let usable = fields.invertible();
        prop_assume!(usable.len() >= 3);
        let subset = &usable[..3];
        for k in 0..3 {
            let mut s = RVector::zeros(3);
            s[k] = 1.0;
            let x = b_map(&fields, subset, &s).unwrap();
            let f = &fields.entries[subset[k]].field;
            prop_assert!((&f.b + &f.a * &x).norm() < 1e-12 * (1.0 + fields.scale));
        }
    }
}
