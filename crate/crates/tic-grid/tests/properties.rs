use nalgebra::DMatrix;
use proptest::prelude::*;
use tic_grid::{
    extract_diagonal, time_reflect, weighted_holder_norm, FlowField, NormForm, Orientation, SlicePlane, SpatialGrid,
    TriTimeGrid, WeightSpec,
};

const FORMS: [NormForm; 4] = [NormForm::Plain, NormForm::Form1, NormForm::Form2, NormForm::Form3];

fn grid(orientation: Orientation) -> TriTimeGrid {
    TriTimeGrid::new(1.0, 5, &[(-1.5, 1.5)], 9, orientation).unwrap()
}

/// Values on 3 s-nodes times 17 y-nodes of `[-2, 2]`.
fn plane_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 3 * 17)
}

fn norm(values: &[f64], form: NormForm, order: f64) -> f64 {
    let space = SpatialGrid::new(&[(-2.0, 2.0)], 17).unwrap();
    let s = [0.0, 0.1, 0.2];
    let spec = WeightSpec::new(DMatrix::identity(1, 1) * 0.5, 1.0, 0.5).unwrap();
    weighted_holder_norm(SlicePlane { space: &space, s_nodes: &s, m: 1, values }, form, &spec, order).unwrap()
}

proptest! {
    #[test]
    fn reflection_is_a_bitwise_involution(values in prop::collection::vec(-1e3f64..1e3, 21 * 9 * 2), backward in any::<bool>()) {
        let o = if backward { Orientation::Backward } else { Orientation::Forward };
        let u = FlowField::from_values(&grid(o), 2, values).unwrap();
        let r = time_reflect(&u);
        prop_assert_eq!(r.grid().orientation(), o.flipped());
        prop_assert_eq!(time_reflect(&r), u);
    }

    #[test]
    fn diagonal_commutes_with_reflection(values in prop::collection::vec(-1.0f64..1.0, 21 * 9)) {
        let u = FlowField::from_values(&grid(Orientation::Forward), 1, values).unwrap();
        let (d, dr) = (extract_diagonal(&u), extract_diagonal(&time_reflect(&u)));
        let n = u.grid().steps();
        for k in 0..=n {
            prop_assert_eq!(d.at(k), dr.at(n - k));
        }
    }

    #[test]
    fn norms_are_homogeneous(values in plane_values(), c in -10.0f64..10.0) {
        let scaled: Vec<f64> = values.iter().map(|v| c * v).collect();
        for form in FORMS {
            for order in [0.5, 2.5] {
                let (a, b) = (norm(&scaled, form, order), c.abs() * norm(&values, form, order));
                prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "{form:?} {order}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn norms_satisfy_the_triangle_inequality(u in plane_values(), v in plane_values()) {
        let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        for form in FORMS {
            for order in [0.5, 2.5] {
                let (lhs, rhs) = (norm(&sum, form, order), norm(&u, form, order) + norm(&v, form, order));
                prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{form:?} {order}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn weighted_forms_are_equivalent(values in plane_values()) {
        let spec = WeightSpec::new(DMatrix::identity(1, 1) * 0.5, 1.0, 0.5).unwrap();
        let c = 1.0 + spec.equivalence_constant();
        let a = [norm(&values, NormForm::Form1, 0.5), norm(&values, NormForm::Form2, 0.5), norm(&values, NormForm::Form3, 0.5)];
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!(a[i] <= c * a[j] * (1.0 + 1e-12), "{i} vs {j}: {a:?}");
            }
        }
        let (f2, f3) = (norm(&values, NormForm::Form2, 2.5), norm(&values, NormForm::Form3, 2.5));
        prop_assert!(f2 <= c * f3 * (1.0 + 1e-12) && f3 <= c * f2 * (1.0 + 1e-12), "{f2} {f3}");
    }
}
