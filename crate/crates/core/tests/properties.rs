use gcrlab::dec::{self, TorusMesh};
use gcrlab::geometry;
use gcrlab::realize;
use gcrlab::weakconv::{self, Rational};
use gcrlab::{Chart, ChartField, Cochain, ConnectionForm, ImmersionField, MetricField, Preset};
use nalgebra::{DMatrix, Rotation3, Vector3};
use proptest::prelude::*;

/// Tori with power-of-two spacings, so integer cochains stay exact under `d`.
fn mesh_strategy() -> impl Strategy<Value = TorusMesh> {
    let h = |k: i32| 2f64.powi(k);
    prop_oneof![
        (4usize..12, 4usize..12, -3i32..3, -3i32..3)
            .prop_map(move |(a, b, i, j)| TorusMesh::new(&[a, b], &[a as f64 * h(i), b as f64 * h(j)]).unwrap()),
        (4usize..6, -2i32..2).prop_map(move |(a, i)| {
            let c = [a, a + 1, a + 2];
            TorusMesh::new(&c, &c.map(|x| x as f64 * h(i))).unwrap()
        }),
    ]
}

fn cochain(mesh: &TorusMesh, q: usize, seed: &[i32]) -> Cochain {
    let len = mesh.num_vertices() * mesh.axis_sets(q).len();
    let values = (0..len).map(|i| seed[i % seed.len()] as f64 + (i % 7) as f64).collect();
    Cochain::from_values(mesh, q, false, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chart_field_text_roundtrip(values in prop::collection::vec(-1e6f64..1e6, 24), h in 0.01f64..2.0) {
        let chart = Chart::new(&[4, 3], &[h, 0.5 * h], &[0.0, -1.0]).unwrap();
        let f = ChartField::from_values(&chart, &[2], values).unwrap();
        let back = ChartField::from_text(&f.to_text()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn dd_vanishes_on_integer_data(mesh in mesh_strategy(), seed in prop::collection::vec(-40i32..40, 1..9)) {
        for q in 0..mesh.dim() - 1 {
            let c = cochain(&mesh, q, &seed);
            let dd = dec::d(&dec::d(&c).unwrap()).unwrap();
            prop_assert!(dd.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn double_star_is_signed_identity(mesh in mesh_strategy(), seed in prop::collection::vec(-40i32..40, 1..9)) {
        let n = mesh.dim();
        for q in 0..=n {
            let c = cochain(&mesh, q, &seed);
            let back = dec::hodge_star(&dec::hodge_star(&c));
            let sign = if (q * (n - q)) % 2 == 0 { 1.0 } else { -1.0 };
            let want = c.scale(sign);
            prop_assert_eq!(back.values(), want.values());
            prop_assert_eq!(back.is_dual(), c.is_dual());
        }
    }

    #[test]
    fn codifferential_is_adjoint(mesh in mesh_strategy(), a in prop::collection::vec(-9i32..9, 1..6), b in prop::collection::vec(-9i32..9, 1..6)) {
        for q in 0..mesh.dim() {
            let x = cochain(&mesh, q, &a);
            let y = cochain(&mesh, q + 1, &b);
            let lhs = dec::d(&x).unwrap().inner(&y).unwrap();
            let rhs = x.inner(&dec::delta(&y).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn constant_metric_has_no_christoffel_symbols(a in 0.5f64..3.0, b in -0.4f64..0.4, c in 0.5f64..3.0) {
        let chart = Chart::from_box(&[0.0, 0.0], &[1.0, 1.0], &[6, 6]).unwrap();
        let g = MetricField::from_fn(&chart, |_, g| g.copy_from_slice(&[a, b, b, c])).unwrap();
        prop_assert_eq!(geometry::christoffel(&g).unwrap().max_abs(), 0.0);
        prop_assert_eq!(geometry::riemann(&g).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn first_form_is_invariant_under_rigid_motions(axis in prop::array::uniform3(-1.0f64..1.0), angle in 0.0f64..6.0, shift in prop::array::uniform3(-5.0f64..5.0)) {
        prop_assume!(Vector3::from(axis).norm() > 0.1);
        let chart = Preset::Sphere.chart(17).unwrap();
        let f = Preset::Sphere.immersion(&chart).unwrap();
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::from(axis)), angle);
        let moved = ImmersionField::from_fn(&chart, 3, |x, out| {
            let mut p = [0.0; 3];
            Preset::Sphere.point(x, &mut p);
            let q = rot * Vector3::from(p) + Vector3::from(shift);
            out.copy_from_slice(q.as_slice());
        }).unwrap();
        let g0 = geometry::extract_first_form(&f).unwrap();
        let g1 = geometry::extract_first_form(&moved).unwrap();
        let diff = g0.field().axpby(1.0, g1.field(), -1.0).unwrap().max_abs();
        prop_assert!(diff < 1e-12);

        let al = realize::rigid_align(&moved, &f).unwrap();
        prop_assert!(al.rmse < 1e-12);
    }

    #[test]
    fn edge_transport_is_orthogonal(entries in prop::collection::vec(-3.0f64..3.0, 9)) {
        let chart = Chart::from_box(&[0.0, 0.0], &[1.0, 1.0], &[5, 5]).unwrap();
        let m = DMatrix::from_row_slice(3, 3, &entries);
        let skew = &m - m.transpose();
        let w = ConnectionForm::constant(&chart, &[skew.clone(), skew]).unwrap();
        let t = realize::edge_transport(&w, 6, 0).unwrap();
        let defect = (t.transpose() * &t - DMatrix::identity(3, 3)).amax();
        prop_assert!(defect < 1e-12);
    }

    #[test]
    fn fakir_pairing_is_exact(m in 2u64..100_000) {
        prop_assert_eq!(weakconv::fakir_pairing_exact(m).unwrap(), Rational::new(m as u128 - 1, m as u128));
        let p = weakconv::fakir_pairing(m).unwrap();
        prop_assert!((0.5..1.0).contains(&p));
    }

    #[test]
    fn constant_sequences_have_their_value_as_weak_limit(v in prop::collection::vec(-2.0f64..2.0, 1..6), k in 3usize..6) {
        let eps: Vec<f64> = (0..k).map(|i| 0.5f64.powi(i as i32 + 1)).collect();
        let wl = weakconv::weak_limit_estimate(&eps, vec![v.clone(); k], 1e-12);
        prop_assert!(wl.is_declared());
        prop_assert_eq!(wl.limit.unwrap(), v);
        prop_assert_eq!(wl.tail_spread, 0.0);
    }
}
