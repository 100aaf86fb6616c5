use std::f64::consts::TAU;

use gcrlab::dec::{self, TorusMesh};
use gcrlab::gcr::{self, NORM_MARGIN};
use gcrlab::realize::{self, RealizeOptions};
use gcrlab::weakconv::{self, SequenceKind, SequenceSpec, Tolerances};
use gcrlab::{
    io, ChartField, Cochain, DataSource, Equation, GeometricData, MetricField, NormalConnField, Preset,
    SecondFormField,
};
use nalgebra::DMatrix;

fn text_roundtrip(data: &GeometricData) -> GeometricData {
    let g = ChartField::from_text(&data.g.field().to_text()).unwrap();
    let h = ChartField::from_text(&data.h.field().to_text()).unwrap();
    let k = ChartField::from_text(&data.kappa.field().to_text()).unwrap();
    GeometricData::new(
        MetricField::new(g).unwrap(),
        SecondFormField::new(h).unwrap(),
        NormalConnField::new(k).unwrap(),
    )
    .unwrap()
}

#[test]
fn sphere_data_survive_files_and_realize() {
    let chart = Preset::Sphere.chart(65).unwrap();
    let data = Preset::Sphere.data(&chart, DataSource::Analytic).unwrap();
    let loaded = text_roundtrip(&data);
    assert_eq!(loaded.g, data.g);
    assert_eq!(loaded.h, data.h);

    let res = realize::realize(&loaded, &RealizeOptions::default()).unwrap();
    let al = realize::rigid_align(&res.f, &Preset::Sphere.immersion(&chart).unwrap()).unwrap();
    assert!(al.rmse < 1e-4, "{}", al.rmse);
    // every realized point sits on a unit sphere about some center
    let c = -(&al.rotation.transpose() * &al.translation);
    let radius_err = (0..chart.num_nodes())
        .map(|p| {
            let x = nalgebra::DVector::from_column_slice(res.f.point(p));
            ((x - &c).norm() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    assert!(radius_err < 1e-3, "{radius_err}");

    let obj = io::obj_string(&res.f, [0, 1, 2]).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 2 * 64 * 64);
}

#[test]
fn rotating_plane_realizes_a_flat_plane() {
    let chart = Preset::RotatingPlane.chart(33).unwrap();
    let data = Preset::RotatingPlane.data(&chart, DataSource::Analytic).unwrap();
    let res = realize::realize(&data, &RealizeOptions::default()).unwrap();
    let al = realize::rigid_align(&res.f, &Preset::RotatingPlane.immersion(&chart).unwrap()).unwrap();
    assert!(al.rmse < 1e-12, "{}", al.rmse);
    assert!(res.holonomy < 1e-12);
    // the normal pair turns by the chart width in x
    let normals = res.normals();
    let last = chart.node_index(&[32, 0]);
    let n0 = normals.node(last);
    let turn = n0[3].atan2(n0[2]);
    assert!((turn.abs() - 1.0).abs() < 1e-10, "{turn}");
}

#[test]
fn residuals_ignore_the_normal_frame() {
    let p = Preset::ComplexParabola;
    let chart = p.chart(33).unwrap();
    let data = p.data(&chart, DataSource::Extracted).unwrap();
    let (c, s) = (0.6f64.cos(), 0.6f64.sin());
    let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let rotated = data.rotate_normals(&q).unwrap();
    let (a, b) = (gcr::gcr_residual(&data).unwrap(), gcr::gcr_residual(&rotated).unwrap());
    let gauss = a.field(Equation::Gauss).axpby(1.0, b.field(Equation::Gauss), -1.0).unwrap();
    assert!(gauss.max_abs() < 1e-12);
    // Codazzi rotates in its normal slot, Ricci by conjugation
    let m = 8;
    let mut worst: f64 = 0.0;
    for p in 0..chart.num_nodes() {
        let (ca, cb) = (a.field(Equation::Codazzi).node(p), b.field(Equation::Codazzi).node(p));
        for al in 0..2 {
            for r in 0..m {
                let want = q[(al, 0)] * ca[r] + q[(al, 1)] * ca[m + r];
                worst = worst.max((cb[al * m + r] - want).abs());
            }
        }
        let (ra, rb) = (a.field(Equation::Ricci).node(p), b.field(Equation::Ricci).node(p));
        for kl in 0..4 {
            let ra_m = DMatrix::from_fn(2, 2, |i, j| ra[(i * 2 + j) * 4 + kl]);
            let want = &q * ra_m * q.transpose();
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max((rb[(i * 2 + j) * 4 + kl] - want[(i, j)]).abs());
                }
            }
        }
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn residual_csv_lists_every_grid() {
    let rows: Vec<_> = [17, 33]
        .iter()
        .map(|&n| {
            let chart = Preset::Sphere.chart(n).unwrap();
            (n, gcr::gcr_residual(&Preset::Sphere.data(&chart, DataSource::Analytic).unwrap()).unwrap())
        })
        .collect();
    let csv = io::residual_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "equation,norm_inf,norm_l2,grid");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1].starts_with("gauss,") && lines[1].ends_with(",17"));
    assert!(lines[6].starts_with("ricci,") && lines[6].ends_with(",33"));
}

#[test]
fn exact_forms_decompose_to_themselves() {
    let mesh = TorusMesh::square(32, 1.0).unwrap();
    let f = Cochain::sample(&mesh, 0, false, |x, _| (TAU * x[0]).sin() * (TAU * x[1]).cos()).unwrap();
    let df = dec::d(&f).unwrap();
    let parts = dec::hodge_decompose(&df).unwrap();
    let rel = parts.exact.lin(1.0, &df, -1.0).unwrap().norm() / df.norm();
    assert!(rel < 1e-9, "{rel}");
    assert!(parts.coexact.norm() < 1e-9 * df.norm());
    assert!(parts.harmonic.norm() < 1e-12);
    let text = df.to_text();
    assert!(text.starts_with("torus n=2 N=32,32"));
    assert_eq!(Cochain::from_text(&text).unwrap(), df);
}

#[test]
fn corrugation_metrics_converge_while_curvature_oscillates() {
    let eps = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0];
    let spec = SequenceSpec::new(SequenceKind::CorrugationFamily, &eps).unwrap();
    let chart = spec.kind.chart(513).unwrap();
    let mut prev = f64::INFINITY;
    for &e in &eps {
        let data = weakconv::family_data(&spec, e, &chart).unwrap();
        let dev = data.g.field().zip_map(MetricField::identity(&chart).field(), |a, b| a - b).unwrap();
        let d = dev.max_abs_inner(NORM_MARGIN);
        assert!(d < prev);
        prev = d;
        assert!(data.h.field().max_abs_inner(NORM_MARGIN) > 0.5);
    }
    let report = weakconv::rigidity_experiment(&spec, 513, weakconv::DEFAULT_P, Tolerances::default()).unwrap();
    assert!(report.lp_ratio <= weakconv::LP_RATIO_MAX);
    assert_eq!(report.limit_residual, 0.0);
}
