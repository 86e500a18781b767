use dfrc_core::array_beam::sidelobe_grid;
use dfrc_core::linalg::{hermitian_defect, kron, min_eigenvalue, trace_re};
use dfrc_core::waveform::{shifted_waveform, ShiftFamily};
use dfrc_core::{
    beampattern, steering_vector, ArrayGeometry, CMat, CVec, Complex64, DataCube, DopplerGrid, FilterModel,
    PowerPrior,
};
use proptest::prelude::*;

fn cvec(len: usize) -> impl Strategy<Value = CVec> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|v| CVec::from_iterator(v.len(), v.into_iter().map(|(a, b)| Complex64::new(a, b))))
}

fn model_case() -> impl Strategy<Value = (CVec, CMat, usize, Vec<f64>, f64, f64)> {
    (2usize..6, 1usize..4, 1usize..4, 0usize..3).prop_flat_map(|(n, p, q, nc)| {
        (
            cvec(n),
            cvec(nc * p).prop_map(move |g| CMat::from_column_slice(nc, p, g.as_slice())),
            Just(q),
            proptest::collection::vec(0.0f64..4.0, 3 * q),
            0.0f64..2.0,
            0.01f64..2.0,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn steering_entries_are_unit_modulus(m in 2usize..16, spacing in 0.1f64..1.0, theta in -90.0f64..90.0) {
        let a = steering_vector(&ArrayGeometry::new(m, spacing).unwrap(), theta).unwrap();
        prop_assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        prop_assert_eq!(a[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn beampattern_is_linear_in_weights(w1 in cvec(6), w2 in cvec(6), c in (-2.0f64..2.0, -2.0f64..2.0), theta in -90.0f64..90.0) {
        let g = ArrayGeometry::new(6, 0.5).unwrap();
        let c = Complex64::new(c.0, c.1);
        let lhs = beampattern(&(&w1 + &w2 * c), &g, &[theta]).unwrap()[0];
        let rhs = beampattern(&w1, &g, &[theta]).unwrap()[0] + c.conj() * beampattern(&w2, &g, &[theta]).unwrap()[0];
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn sidelobe_grid_stays_inside_region(lo in -90.0f64..0.0, width in 0.0f64..60.0, step in 0.1f64..5.0) {
        let grid = sidelobe_grid(&[(lo, lo + width)], step).unwrap();
        prop_assert_eq!(grid[0], lo);
        prop_assert!((grid[grid.len() - 1] - (lo + width)).abs() < 1e-9);
        prop_assert!(grid.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= step + 1e-9));
    }

    #[test]
    fn shift_support_count(s in (1usize..30).prop_flat_map(cvec), n in -40isize..40) {
        let nonzero_in = s.iter().filter(|z| z.norm() > 0.0).count();
        prop_assume!(nonzero_in == s.len());
        let shifted = shifted_waveform(&s, n);
        prop_assert_eq!(shifted.len(), s.len());
        prop_assert_eq!(shifted.iter().filter(|z| z.norm() > 0.0).count(), s.len().saturating_sub(n.unsigned_abs()));
        let back = shifted_waveform(&shifted, -n);
        for i in 0..s.len() {
            let kept = (0..s.len() as isize).contains(&(i as isize + n));
            prop_assert_eq!(back[i], if kept { s[i] } else { Complex64::new(0.0, 0.0) });
        }
    }

    #[test]
    fn shift_family_sums_match_explicit_outer_products(s in (2usize..7).prop_flat_map(cvec), seed in any::<u64>()) {
        let family = ShiftFamily::new(&s);
        let weights: Vec<f64> = (0..family.num_shifts()).map(|i| ((seed >> (i % 60)) & 7) as f64).collect();
        let mut dense = CMat::zeros(s.len(), s.len());
        for (k, n) in family.shifts().enumerate() {
            let sn = shifted_waveform(&s, n);
            dense += &sn * sn.adjoint() * Complex64::new(weights[k], 0.0);
        }
        let fast = family.weighted_outer_sum(&weights);
        prop_assert!((fast - &dense).norm() <= 1e-12 * (1.0 + dense.norm()));
    }

    #[test]
    fn kronecker_stacking(n in 2usize..7, p in 1usize..5, l in 1usize..5, seed in any::<u64>()) {
        let samples: Vec<Complex64> = (0..p * (l + n - 1))
            .map(|i| Complex64::new(((seed.wrapping_mul(i as u64 + 1) >> 11) % 97) as f64 - 48.0, (i % 7) as f64))
            .collect();
        let cube = DataCube::from_samples(p, l, n, 2, 1, samples).unwrap();
        let u = CVec::from_fn(n, |i, _| Complex64::new(i as f64 + 1.0, -((seed % 5) as f64)));
        let v = CVec::from_fn(p, |i, _| Complex64::new(0.5, i as f64));
        for ell in 1..=l {
            let y = cube.stacked(ell);
            let lhs = kron(&v.map(|z| z.conj()), &u).dotc(&y);
            let rhs = u.dotc(&(cube.matrix(ell) * &v));
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + u.norm() * v.norm() * y.norm()));
        }
    }

    #[test]
    fn cube_binary_round_trip(p in 1usize..4, l in 1usize..6, n in 2usize..5, seed in any::<u64>()) {
        let samples = (0..p * (l + n - 1)).map(|i| Complex64::new(seed as f64 * 1e-9, i as f64)).collect();
        let cube = DataCube::from_samples(p, l, n, 3, 4, samples).unwrap();
        let mut bytes = Vec::new();
        cube.write_binary(&mut bytes).unwrap();
        prop_assert_eq!(DataCube::read_binary(bytes.as_slice()).unwrap(), cube);
    }

    #[test]
    fn covariances_are_hermitian_psd((s, g, q, prior, sc, sn) in model_case(), u_seed in any::<u64>()) {
        let model = FilterModel::new(&s, DopplerGrid::new(q).unwrap(), g, sc, sn).unwrap();
        let prior = PowerPrior::from_values(3, q, prior).unwrap();
        let u = CVec::from_fn(s.len(), |i, _| Complex64::from_polar(1.0, (u_seed % 13) as f64 * i as f64));
        for ell in 1..=3 {
            let agg = model.range_aggregates(ell, &prior).unwrap();
            for m in [model.covariance(&agg), model.assemble_rt(&agg), model.assemble_rc(), model.range_projected_target(&agg, &u)] {
                let scale = trace_re(&m).max(1e-300);
                prop_assert!(hermitian_defect(&m) <= 1e-12 * scale);
                prop_assert!(min_eigenvalue(&m) >= -1e-10 * scale);
            }
        }
    }

    #[test]
    fn prior_is_zero_outside_window(l in 1usize..6, q in 1usize..4, off in 1isize..5) {
        let prior = PowerPrior::from_values(l, q, vec![1.0; l * q]).unwrap();
        for c in 0..q {
            prop_assert_eq!(prior.get(1 - off, c), 0.0);
            prop_assert_eq!(prior.get(l as isize + off, c), 0.0);
            prop_assert_eq!(prior.get(1, c), 1.0);
        }
    }
}
