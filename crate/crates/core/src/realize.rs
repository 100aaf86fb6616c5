//! Reconstruction of an immersion from `(g, h, κ)`: integrate the frame
//! system `∂_k A = W_k A`, then the position system `∂_k f = w_k A`.

use nalgebra::{DMatrix, DVector};

use crate::cartan::{self, CanonicalForm, ConnectionForm};
use crate::error::{Error, Result};
use crate::gcr::{gcr_residual, NORM_MARGIN};
use crate::geometry::{self, GeometricData, ImmersionField, MetricField};
use crate::grid::{Chart, ChartField};
use crate::linalg::{dot, node_matrix, orthogonality_defect, polar_orthogonal, store_matrix};

/// Steps with `‖W‖_F h` above this are rejected.
pub const MAX_STEP_NORM: f64 = 10.0;
/// The default gate is `GATE_FACTOR · h_max²`, ten times the residual floor
/// `h_max²` observed on the shipped presets.
pub const GATE_FACTOR: f64 = 10.0;

/// `exp(h · (W_axis(p) + W_axis(p + e_axis)) / 2)`, the transport along the
/// edge from `p` to `p + e_axis`.
pub fn edge_transport(w: &ConnectionForm, p: usize, axis: usize) -> Result<DMatrix<f64>> {
    let chart = w.field().chart();
    let q = p + chart.stride(axis);
    let mid = (w.at(p, axis) + w.at(q, axis)) * (0.5 * chart.spacing()[axis]);
    let norm = mid.norm();
    if norm > MAX_STEP_NORM {
        return Err(Error::StepTooLarge(norm));
    }
    Ok(mid.exp())
}

/// Solve `∂_k A = W_k A` from `A(base) = a0` along [`Chart::canonical_path`],
/// one midpoint-exponential step per edge followed by polar re-projection.
pub fn pfaff_integrate(w: &ConnectionForm, a0: &DMatrix<f64>, base: usize) -> Result<ChartField> {
    let chart = w.field().chart();
    let m = w.ambient_dim();
    if a0.shape() != (m, m) {
        return Err(Error::ShapeMismatch(format!("initial frame must be {m}x{m}")));
    }
    let defect = orthogonality_defect(a0);
    if defect > 1e-10 {
        return Err(Error::NotOrthogonal(defect));
    }
    if base >= chart.num_nodes() {
        return Err(Error::IndexOutOfRange(format!("base node {base}")));
    }
    let mut a = ChartField::zeros(chart, &[m, m]);
    for step in chart.canonical_path(base) {
        let next = match step.parent {
            None => a0.clone(),
            Some((parent, axis, dir)) => {
                let prev = node_matrix(&a, parent, 0, m, m);
                let t = if dir > 0.0 {
                    edge_transport(w, parent, axis)?
                } else {
                    edge_transport(w, step.node, axis)?.transpose()
                };
                polar_orthogonal(&(t * prev))?
            }
        };
        store_matrix(&mut a, step.node, 0, &next);
    }
    Ok(a)
}

/// Max over elementary plaquettes of `‖T₄T₃T₂T₁ − I‖_F`, the frame
/// transported once around the plaquette.
pub fn holonomy_residual(w: &ConnectionForm) -> Result<f64> {
    let chart = w.field().chart();
    let n = chart.dim();
    let m = w.ambient_dim();
    let eye = DMatrix::<f64>::identity(m, m);
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let (sa, sb) = (chart.stride(a), chart.stride(b));
            for p in 0..chart.num_nodes() {
                let idx = chart.multi_index(p);
                if idx[a] + 1 >= chart.counts()[a] || idx[b] + 1 >= chart.counts()[b] {
                    continue;
                }
                let t1 = edge_transport(w, p, a)?;
                let t2 = edge_transport(w, p + sa, b)?;
                let t3 = edge_transport(w, p + sb, a)?.transpose();
                let t4 = edge_transport(w, p, b)?.transpose();
                let loop_ = t4 * t3 * t2 * t1;
                worst = worst.max((loop_ - &eye).norm());
            }
        }
    }
    Ok(worst)
}

/// Path-integrated field and its closedness defect.
#[derive(Clone, Debug, PartialEq)]
pub struct PoincareResult {
    pub f: ChartField,
    /// Max over plaquettes of the Euclidean norm of the trapezoid loop integral.
    pub loop_defect: f64,
}

/// Integrate `∂_k f = φ_k` for `φ` of shape `[n, N]` with the trapezoid rule
/// along [`Chart::canonical_path`], starting from `f(base) = f0`.
pub fn poincare_integrate(one_form: &ChartField, f0: &[f64], base: usize) -> Result<PoincareResult> {
    let chart = one_form.chart();
    let n = chart.dim();
    let sh = one_form.shape();
    if sh.len() != 2 || sh[0] != n {
        return Err(Error::ShapeMismatch(format!("integrand needs shape [{n}, N], got {sh:?}")));
    }
    let m = sh[1];
    if f0.len() != m {
        return Err(Error::ShapeMismatch(format!("base value needs {m} components")));
    }
    if base >= chart.num_nodes() {
        return Err(Error::IndexOutOfRange(format!("base node {base}")));
    }
    let phi = |p: usize, axis: usize| &one_form.node(p)[axis * m..(axis + 1) * m];
    let mut f = ChartField::zeros(chart, &[m]);
    for step in chart.canonical_path(base) {
        let val: Vec<f64> = match step.parent {
            None => f0.to_vec(),
            Some((parent, axis, dir)) => {
                let h = chart.spacing()[axis];
                let (u, v) = (phi(parent, axis), phi(step.node, axis));
                let prev = f.node(parent);
                (0..m).map(|c| prev[c] + dir * 0.5 * h * (u[c] + v[c])).collect()
            }
        };
        f.node_mut(step.node).copy_from_slice(&val);
    }

    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let (sa, sb) = (chart.stride(a), chart.stride(b));
            let (ha, hb) = (chart.spacing()[a], chart.spacing()[b]);
            for p in 0..chart.num_nodes() {
                let idx = chart.multi_index(p);
                if idx[a] + 1 >= chart.counts()[a] || idx[b] + 1 >= chart.counts()[b] {
                    continue;
                }
                let s: f64 = (0..m)
                    .map(|c| {
                        let e1 = 0.5 * ha * (phi(p, a)[c] + phi(p + sa, a)[c]);
                        let e2 = 0.5 * hb * (phi(p + sa, b)[c] + phi(p + sa + sb, b)[c]);
                        let e3 = 0.5 * ha * (phi(p + sb, a)[c] + phi(p + sa + sb, a)[c]);
                        let e4 = 0.5 * hb * (phi(p, b)[c] + phi(p + sb, b)[c]);
                        (e1 + e2 - e3 - e4).powi(2)
                    })
                    .sum();
                worst = worst.max(s.sqrt());
            }
        }
    }
    Ok(PoincareResult { f, loop_defect: worst })
}

/// Max over `(i, j)` of `|∂_i f · ∂_j f − g_ij|`, over the nodes at least
/// [`NORM_MARGIN`] away from the boundary.
pub fn isometry_defect(f: &ImmersionField, g: &MetricField) -> Result<f64> {
    f.field().same_chart(g.field())?;
    let chart = f.chart();
    let n = chart.dim();
    let df = f.field().gradient()?;
    let mut worst: f64 = 0.0;
    for p in chart.inner_nodes(NORM_MARGIN) {
        for i in 0..n {
            for j in 0..n {
                let v = dot(df[i].node(p), df[j].node(p)) - g.field().node(p)[i * n + j];
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Options for [`realize`].
#[derive(Clone, Debug, Default)]
pub struct RealizeOptions {
    /// Largest GCR residual accepted; `None` selects `GATE_FACTOR · h_max²`.
    pub gate: Option<f64>,
    /// Proceed past a failed gate instead of returning an error.
    pub allow_gate_violation: bool,
    pub base: usize,
    /// Frame at the base node; identity when `None`.
    pub a0: Option<DMatrix<f64>>,
    /// Position of the base node; origin when `None`.
    pub f0: Option<Vec<f64>>,
}

impl RealizeOptions {
    pub fn default_gate(chart: &Chart) -> f64 {
        GATE_FACTOR * chart.h_max().powi(2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizationResult {
    /// Frame field `A`, rows `E_i`-images then normals, shape `[N, N]`.
    pub frame: ChartField,
    pub f: ImmersionField,
    /// Adapted frame: rows `df(∂_i)` followed by the normal rows of `A`.
    pub adapted_frame: ChartField,
    pub holonomy: f64,
    pub isometry_defect: f64,
    /// Closedness defect of `w A` along plaquettes.
    pub path_defect: f64,
    /// Max over nodes of `|AᵀA − I|`.
    pub orthogonality_defect: f64,
    pub gcr_max: f64,
    pub gate: f64,
    pub gate_violated: bool,
}

impl RealizationResult {
    /// Normal rows of `A`, shape `[k, N]`.
    pub fn normals(&self) -> ChartField {
        let chart = self.frame.chart();
        let m = self.frame.shape()[0];
        let n = chart.dim();
        let k = m - n;
        let mut out = ChartField::zeros(chart, &[k, m]);
        for p in 0..chart.num_nodes() {
            out.node_mut(p).copy_from_slice(&self.frame.node(p)[n * m..]);
        }
        out
    }

    /// Re-extract `(g, h, κ)` from the realized immersion, taking the normal
    /// frame from the normal rows of `A`.
    pub fn reextract(&self) -> Result<GeometricData> {
        let frame = geometry::normal_frame_from_guides(&self.f, &self.normals())?;
        GeometricData::new(
            geometry::extract_first_form(&self.f)?,
            geometry::extract_second_form(&self.f, &frame)?,
            geometry::extract_normal_connection(&self.f, &frame)?,
        )
    }
}

/// `w_k A` at every node, shape `[n, N]`.
fn tangent_images(w: &CanonicalForm, a: &ChartField) -> ChartField {
    let chart = a.chart();
    let n = chart.dim();
    let m = w.ambient_dim();
    let mut phi = ChartField::zeros(chart, &[n, m]);
    for p in 0..chart.num_nodes() {
        let ap = a.node(p);
        for k in 0..n {
            let wk = w.at(p, k);
            for c in 0..m {
                let v: f64 = (0..m).map(|r| wk[r] * ap[r * m + c]).sum();
                phi.node_mut(p)[k * m + c] = v;
            }
        }
    }
    phi
}

/// Gate on the GCR residuals, then build the frames, integrate `A` and `f`
/// and collect the diagnostics.
pub fn realize(data: &GeometricData, opts: &RealizeOptions) -> Result<RealizationResult> {
    let chart = data.chart();
    let (n, m) = (data.dim(), data.dim() + data.codim());
    let gate = opts.gate.unwrap_or_else(|| RealizeOptions::default_gate(chart));
    let gcr_max = gcr_residual(data)?.max_inf();
    let gate_violated = !(gcr_max <= gate);
    if gate_violated && !opts.allow_gate_violation {
        return Err(Error::GateViolation { residual: gcr_max, gate });
    }

    let (_, w, big_w) = cartan::cartan_data(data)?;
    let a0 = opts.a0.clone().unwrap_or_else(|| DMatrix::identity(m, m));
    let a = pfaff_integrate(&big_w, &a0, opts.base)?;
    let phi = tangent_images(&w, &a);
    let f0 = opts.f0.clone().unwrap_or_else(|| vec![0.0; m]);
    let PoincareResult { f, loop_defect } = poincare_integrate(&phi, &f0, opts.base)?;
    let f = ImmersionField::new(f)?;

    let mut adapted = ChartField::zeros(chart, &[m, m]);
    let mut orth: f64 = 0.0;
    for p in 0..chart.num_nodes() {
        let slot = adapted.node_mut(p);
        slot[..n * m].copy_from_slice(phi.node(p));
        slot[n * m..].copy_from_slice(&a.node(p)[n * m..]);
        orth = orth.max(orthogonality_defect(&node_matrix(&a, p, 0, m, m)));
    }

    Ok(RealizationResult {
        isometry_defect: isometry_defect(&f, &data.g)?,
        holonomy: holonomy_residual(&big_w)?,
        frame: a,
        f,
        adapted_frame: adapted,
        path_defect: loop_defect,
        orthogonality_defect: orth,
        gcr_max,
        gate,
        gate_violated,
    })
}

/// Optimal rigid motion `x ↦ Q x + b` taking `f` onto `f_ref`.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub rotation: DMatrix<f64>,
    pub translation: DVector<f64>,
    pub rmse: f64,
    /// The cross-covariance was rank deficient, so `Q` is not unique.
    pub degenerate: bool,
}

/// Orthogonal Procrustes: remove centroids, take the orthogonal factor of
/// the cross-covariance by SVD. Reflections are allowed.
pub fn rigid_align(f: &ImmersionField, f_ref: &ImmersionField) -> Result<Alignment> {
    f.field().same_chart(f_ref.field())?;
    let m = f.ambient_dim();
    if m != f_ref.ambient_dim() {
        return Err(Error::ShapeMismatch(format!(
            "ambient dimensions differ: {m} and {}",
            f_ref.ambient_dim()
        )));
    }
    let np = f.chart().num_nodes();
    let x = DMatrix::from_row_slice(np, m, f.field().values());
    let y = DMatrix::from_row_slice(np, m, f_ref.field().values());
    let cx = x.row_mean();
    let cy = y.row_mean();
    let xc = DMatrix::from_fn(np, m, |i, j| x[(i, j)] - cx[j]);
    let yc = DMatrix::from_fn(np, m, |i, j| y[(i, j)] - cy[j]);
    let cov = xc.transpose() * &yc;
    let svd = cov.svd(true, true);
    let s = &svd.singular_values;
    let smax = s.max();
    let degenerate = s.min() < 1e-12 * smax || smax == 0.0;
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v_t requested").transpose();
    let q = v * u.transpose();
    let b = cy.transpose() - &q * cx.transpose();
    let mapped = &xc * q.transpose();
    let sq: f64 = (0..np)
        .map(|i| (0..m).map(|j| (mapped[(i, j)] - yc[(i, j)]).powi(2)).sum::<f64>())
        .sum();
    Ok(Alignment {
        rotation: q,
        translation: b,
        rmse: (sq / np as f64).sqrt(),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{DataSource, Preset};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn square(n: usize) -> Chart {
        Chart::from_box(&[0.0, 0.0], &[1.0, 1.0], &[n, n]).unwrap()
    }

    fn gen3(a: f64, b: f64, c: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0.0, a, b, -a, 0.0, c, -b, -c, 0.0])
    }

    #[test]
    fn pfaff_zero_and_constant() {
        let chart = square(9);
        let z = ConnectionForm::constant(&chart, &[DMatrix::zeros(3, 3), DMatrix::zeros(3, 3)]).unwrap();
        let a0 = gen3(0.3, -0.2, 0.5).exp();
        let a = pfaff_integrate(&z, &a0, 0).unwrap();
        for p in 0..chart.num_nodes() {
            assert!((node_matrix(&a, p, 0, 3, 3) - &a0).amax() < 1e-14);
        }
        let j = gen3(1.0, 0.5, -0.3);
        let w = ConnectionForm::constant(&chart, &[j.clone(), DMatrix::zeros(3, 3)]).unwrap();
        let a = pfaff_integrate(&w, &a0, 0).unwrap();
        for p in 0..chart.num_nodes() {
            let x = chart.coords(p)[0];
            let want = (&j * x).exp() * &a0;
            assert!((node_matrix(&a, p, 0, 3, 3) - want).amax() < 1e-12);
        }
        assert!(pfaff_integrate(&w, &(a0 * 2.0), 0).is_err());
    }

    #[test]
    fn cylinder_frame_returns_after_full_turn() {
        let chart = Chart::from_box(&[0.0, 0.0], &[2.0 * PI, 1.0], &[65, 5]).unwrap();
        let data = Preset::Cylinder.analytic_data(&chart).unwrap().unwrap();
        let (_, _, w) = cartan::cartan_data(&data).unwrap();
        let a = pfaff_integrate(&w, &DMatrix::identity(3, 3), 0).unwrap();
        let end = chart.node_index(&[64, 0]);
        assert!((node_matrix(&a, end, 0, 3, 3) - DMatrix::identity(3, 3)).amax() < 1e-12);
        let quarter = chart.node_index(&[16, 0]);
        let aq = node_matrix(&a, quarter, 0, 3, 3);
        // the tangent row E_1 has turned by π/2 into the old normal
        assert_abs_diff_eq!(aq[(0, 2)], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn holonomy_examples() {
        let chart = square(9);
        let z = ConnectionForm::constant(&chart, &[DMatrix::zeros(3, 3), DMatrix::zeros(3, 3)]).unwrap();
        assert_eq!(holonomy_residual(&z).unwrap(), 0.0);
        let (j, k) = (gen3(1.0, 0.0, 0.0), gen3(0.0, 1.0, 0.0));
        let comm = (&j * &k - &k * &j).norm();
        for n in [9, 17, 33] {
            let chart = square(n);
            let w = ConnectionForm::constant(&chart, &[j.clone(), k.clone()]).unwrap();
            let h = chart.h_max();
            let r = holonomy_residual(&w).unwrap() / (h * h);
            assert!((r - comm).abs() < 0.2 * comm, "{r} vs {comm}");
        }
        let big = ConnectionForm::constant(&chart, &[gen3(200.0, 0.0, 0.0), DMatrix::zeros(3, 3)]).unwrap();
        assert!(matches!(holonomy_residual(&big), Err(Error::StepTooLarge(_))));
    }

    #[test]
    fn poincare_examples() {
        let chart = square(33);
        let exact = ChartField::from_fn(&chart, &[2, 1], |x, v| {
            v[0] = 2.0 * x[0];
            v[1] = 1.0;
        });
        let r = poincare_integrate(&exact, &[0.0], 0).unwrap();
        for p in 0..chart.num_nodes() {
            let x = chart.coords(p);
            assert_abs_diff_eq!(r.f.node(p)[0], x[0] * x[0] + x[1], epsilon = 1e-12);
        }
        assert!(r.loop_defect < 1e-14);

        let zero = ChartField::zeros(&chart, &[2, 3]);
        let r = poincare_integrate(&zero, &[1.0, 2.0, 3.0], 5).unwrap();
        assert!((0..chart.num_nodes()).all(|p| r.f.node(p) == [1.0, 2.0, 3.0]));

        let rot = ChartField::from_fn(&chart, &[2, 1], |x, v| {
            v[0] = -x[1];
            v[1] = x[0];
        });
        let r = poincare_integrate(&rot, &[0.0], 0).unwrap();
        let h = chart.spacing();
        assert_abs_diff_eq!(r.loop_defect, 2.0 * h[0] * h[1], epsilon = 1e-15);
    }

    #[test]
    fn isometry_defect_examples() {
        let chart = square(9);
        let plane = Preset::Plane.immersion(&chart).unwrap();
        assert!(isometry_defect(&plane, &MetricField::identity(&chart)).unwrap() < 1e-12);
        let g4 = MetricField::from_fn(&chart, |_, g| {
            g[0] = 1.0;
            g[3] = 4.0;
        })
        .unwrap();
        assert_abs_diff_eq!(isometry_defect(&plane, &g4).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn rigid_align_examples() {
        let chart = square(17);
        let cyl = Preset::Cylinder.immersion(&chart).unwrap();
        let q = gen3(0.4, -1.1, 0.7).exp();
        let moved = ChartField::from_fn(&chart, &[3], |x, v| {
            let mut y = [0.0; 3];
            Preset::Cylinder.point(x, &mut y);
            for r in 0..3 {
                v[r] = (0..3).map(|c| q[(r, c)] * y[c]).sum::<f64>() + [1.0, -2.0, 0.5][r];
            }
        });
        let al = rigid_align(&cyl, &ImmersionField::new(moved).unwrap()).unwrap();
        assert!(al.rmse < 1e-10);
        assert!((al.rotation - q).amax() < 1e-10);
        assert!(!al.degenerate);

        // noise floor
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut noisy = cyl.field().clone();
        noisy.values_mut().iter_mut().for_each(|v| *v += rng.random_range(-1e-3..1e-3));
        let al = rigid_align(&ImmersionField::new(noisy).unwrap(), &cyl).unwrap();
        assert!(al.rmse <= 1e-3, "{}", al.rmse);

        let chart = Preset::Cylinder.chart(64).unwrap();
        let cyl = Preset::Cylinder.immersion(&chart).unwrap();
        let plane = Preset::Plane.immersion(&chart).unwrap();
        let al = rigid_align(&plane, &cyl).unwrap();
        assert!(al.rmse >= 0.1, "{}", al.rmse);
        assert!(al.degenerate);
    }

    #[test]
    fn realize_flat_plane() {
        let chart = square(17);
        let data = Preset::Plane.analytic_data(&chart).unwrap().unwrap();
        let r = realize(&data, &RealizeOptions::default()).unwrap();
        assert!(r.isometry_defect <= 1e-10);
        assert_eq!(r.holonomy, 0.0);
        assert_eq!(r.f.point(0), &[0.0, 0.0, 0.0]);
        let p = chart.node_index(&[16, 8]);
        assert_abs_diff_eq!(r.f.point(p)[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.f.point(p)[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn realize_gate() {
        let chart = square(17);
        let mut data = Preset::Plane.analytic_data(&chart).unwrap().unwrap();
        data.h = crate::geometry::SecondFormField::from_fn(&chart, 1, |_, h| {
            h[0] = 1.0;
            h[3] = 1.0;
        })
        .unwrap();
        let err = realize(&data, &RealizeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::GateViolation { .. }));
        assert!(err.is_numerical());
        let opts = RealizeOptions {
            allow_gate_violation: true,
            ..Default::default()
        };
        let r = realize(&data, &opts).unwrap();
        assert!(r.gate_violated);
        assert!(r.holonomy > 0.0);
    }

    #[test]
    fn realize_cylinder_roundtrip() {
        let chart = Preset::Cylinder.chart(48).unwrap();
        let data = Preset::Cylinder.data(&chart, DataSource::Analytic).unwrap();
        let r = realize(&data, &RealizeOptions::default()).unwrap();
        let reference = Preset::Cylinder.immersion(&chart).unwrap();
        let al = rigid_align(&r.f, &reference).unwrap();
        assert!(al.rmse < 1e-3, "{}", al.rmse);
        assert!(r.orthogonality_defect < 1e-12);
        let back = r.reextract().unwrap();
        let dh = back.h.field().axpby(1.0, data.h.field(), -1.0).unwrap().max_abs_interior();
        assert!(dh < 1e-2, "{dh}");
    }
}
