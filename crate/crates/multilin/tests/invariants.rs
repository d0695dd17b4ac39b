use multilin::grid::{forward_ft, inverse_ft, Field, Grid, Space, Symbol};
use multilin::io::{decode_field, encode_field, Precision};
use multilin::kernels::{h_kernel_eval, submultiplicative_constant, HKernelParams};
use multilin::multiplier_op::apply_multiplier;
use multilin::region::{check_sufficiency, gamma_membership, hull_membership, IndexTuple, Status};
use num_complex::Complex64;
use proptest::prelude::*;

fn field_from(values: &[(f64, f64)], g: Grid) -> Field {
    Field::from_values(g, Space::Physical, values.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_roundtrip(values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64)) {
        let g = Grid::new(1, 64, 8.0).unwrap();
        let f = field_from(&values, g);
        let back = inverse_ft(&forward_ft(&f).unwrap()).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            prop_assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn serialized_fields_roundtrip(values in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 64)) {
        let g = Grid::new(2, 8, 3.0).unwrap();
        let f = field_from(&values, g);
        prop_assert_eq!(decode_field(&encode_field(&f, Precision::Complex128).unwrap()).unwrap(), f);
    }

    #[test]
    fn multiplier_is_symmetric_under_swapping_inputs(values in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 32)) {
        let g = Grid::new(1, 16, 4.0).unwrap();
        let f1 = field_from(&values[..16], g);
        let f2 = field_from(&values[16..], g);
        let sigma = Symbol::from_fn(g, 2, &[0.0, 0.0], |xi| Complex64::new((-(xi[0] * xi[0] + xi[1] * xi[1])).exp(), 0.0)).unwrap();
        let a = apply_multiplier(&sigma, &[f1.clone(), f2.clone()]).unwrap();
        let b = apply_multiplier(&sigma, &[f2, f1]).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn kernel_bounded_by_one_and_corrected_law(x in -20.0f64..20.0, y in -20.0f64..20.0, z in -20.0f64..20.0, t in 0.1f64..3.0, g in 0.1f64..4.0) {
        let p = HKernelParams::new(t, g, 2).unwrap();
        let (u, v) = ([x, y], [z, -x]);
        let d = [u[0] - v[0], u[1] - v[1]];
        prop_assert!(h_kernel_eval(&u, &p) <= 1.0);
        let rhs = submultiplicative_constant(&p) * h_kernel_eval(&u, &p) * h_kernel_eval(&v, &p);
        prop_assert!(rhs <= h_kernel_eval(&d, &p) * (1.0 + 1e-15));
    }

    #[test]
    fn bounded_implies_gamma_and_hull(s1 in 0.0f64..6.0, s2 in 0.0f64..6.0) {
        let idx = IndexTuple::from_f64(1, 2.0, &[1.0, 1.0], &[s1, s2]).unwrap();
        if check_sufficiency(&idx).status == Status::Bounded {
            prop_assert!(gamma_membership(&idx));
            prop_assert!(hull_membership(&idx, 10.0).unwrap());
        }
        if hull_membership(&idx, 10.0).unwrap() {
            prop_assert!(gamma_membership(&idx));
        }
    }
}
