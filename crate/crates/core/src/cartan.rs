//! Moving frames: the orthonormal coframe of a metric, the connection form
//! `W` and canonical form `w`, and the two structure-equation residuals.
//!
//! Rows of the ambient frame are `e_i = df(E_i)` for `i < n` followed by the
//! normals `η_α`. `W[k][a][b] = ⟨∂_k e_a, e_b⟩`, so a frame field `A` whose
//! rows are the `e_a` obeys `∂_k A = W_k A`, and `df(∂_k) = w_k A` where
//! `w_k = (ω¹(∂_k), …, ωⁿ(∂_k), 0, …, 0)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{self, antisymmetrize_block, GeometricData, MetricField};
use crate::grid::ChartField;
use crate::linalg::{gram_schmidt_frame, node_matrix, store_matrix};

/// Orthonormal tangent frame `E_i` (row `i` holds the coordinate
/// coefficients of `E_i`) and its dual coframe `ω^i(∂_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FramePackage {
    pub frame: ChartField,
    pub coframe: ChartField,
}

impl FramePackage {
    pub fn frame_at(&self, p: usize) -> DMatrix<f64> {
        let n = self.frame.chart().dim();
        node_matrix(&self.frame, p, 0, n, n)
    }

    pub fn coframe_at(&self, p: usize) -> DMatrix<f64> {
        let n = self.frame.chart().dim();
        node_matrix(&self.coframe, p, 0, n, n)
    }
}

/// `W(∂_k)` for each coordinate direction, shape `[n, N, N]`, antisymmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionForm(ChartField);

impl ConnectionForm {
    /// Wrap an `[n, N, N]` field, enforcing antisymmetry of each block.
    pub fn new(mut field: ChartField) -> Result<Self> {
        let n = field.chart().dim();
        let sh = field.shape().to_vec();
        if sh.len() != 3 || sh[0] != n || sh[1] != sh[2] || sh[1] <= n {
            return Err(Error::ShapeMismatch(format!(
                "connection form needs shape [{n}, N, N] with N > {n}, got {sh:?}"
            )));
        }
        let m = sh[1];
        for p in 0..field.chart().num_nodes() {
            for blk in field.node_mut(p).chunks_mut(m * m) {
                antisymmetrize_block(blk, m);
            }
        }
        Ok(Self(field))
    }

    /// Constant `W(∂_k) = mats[k]`.
    pub fn constant(chart: &crate::grid::Chart, mats: &[DMatrix<f64>]) -> Result<Self> {
        let n = chart.dim();
        if mats.len() != n {
            return Err(Error::ShapeMismatch(format!("need {n} matrices, got {}", mats.len())));
        }
        let m = mats[0].nrows();
        let mut f = ChartField::zeros(chart, &[n, m, m]);
        for p in 0..chart.num_nodes() {
            for (k, w) in mats.iter().enumerate() {
                if w.shape() != (m, m) {
                    return Err(Error::ShapeMismatch("matrices must share one square shape".into()));
                }
                store_matrix(&mut f, p, k * m * m, w);
            }
        }
        Self::new(f)
    }

    pub fn field(&self) -> &ChartField {
        &self.0
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.shape()[1]
    }

    pub fn at(&self, p: usize, axis: usize) -> DMatrix<f64> {
        let m = self.ambient_dim();
        node_matrix(&self.0, p, axis * m * m, m, m)
    }
}

/// `w(∂_k)`, shape `[n, N]`, with the last `N − n` components zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalForm(ChartField);

impl CanonicalForm {
    pub fn new(field: ChartField) -> Result<Self> {
        let n = field.chart().dim();
        let sh = field.shape().to_vec();
        if sh.len() != 2 || sh[0] != n || sh[1] < n {
            return Err(Error::ShapeMismatch(format!(
                "canonical form needs shape [{n}, N], got {sh:?}"
            )));
        }
        Ok(Self(field))
    }

    pub fn field(&self) -> &ChartField {
        &self.0
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.shape()[1]
    }

    /// Row vector `w(∂_axis)` at node `p`.
    pub fn at(&self, p: usize, axis: usize) -> &[f64] {
        let m = self.ambient_dim();
        &self.0.node(p)[axis * m..(axis + 1) * m]
    }
}

/// Gram–Schmidt of the coordinate basis in index order; `ω = E^{-T}`.
pub fn orthonormal_coframe(g: &MetricField) -> Result<FramePackage> {
    let chart = g.chart();
    let n = chart.dim();
    let mut frame = ChartField::zeros(chart, &[n, n]);
    let mut coframe = ChartField::zeros(chart, &[n, n]);
    for p in 0..chart.num_nodes() {
        let e = gram_schmidt_frame(&g.at(p)).ok_or(Error::SingularMetric {
            node: p,
            eigenvalue: 0.0,
        })?;
        let w = e
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMetric {
                node: p,
                eigenvalue: 0.0,
            })?
            .transpose();
        store_matrix(&mut frame, p, 0, &e);
        store_matrix(&mut coframe, p, 0, &w);
    }
    Ok(FramePackage { frame, coframe })
}

/// Canonical form padded with `codim` zero components.
pub fn canonical_form(frames: &FramePackage, codim: usize) -> CanonicalForm {
    let chart = frames.coframe.chart();
    let n = chart.dim();
    let m = n + codim;
    let mut w = ChartField::zeros(chart, &[n, m]);
    for p in 0..chart.num_nodes() {
        let om = frames.coframe.node(p);
        let slot = w.node_mut(p);
        for k in 0..n {
            for i in 0..n {
                slot[k * m + i] = om[i * n + k];
            }
        }
    }
    CanonicalForm(w)
}

/// Connection form of `(g, h, κ)` in the frame `E`:
///
/// * tangent block `⟨∇_{∂_k} E_i, E_j⟩` from `∂_k E` and the Christoffels
/// * mixed block `W[k][i][n+α] = h^α(E_i, ∂_k) = −W[k][n+α][i]`
/// * normal block `W[k][n+α][n+β] = κ(∂_k)_{αβ}`
pub fn connection_form(data: &GeometricData, frames: &FramePackage) -> Result<ConnectionForm> {
    data.g.field().same_chart(&frames.frame)?;
    let chart = data.chart();
    let (n, k) = (data.dim(), data.codim());
    let m = n + k;
    let gamma = geometry::christoffel(&data.g)?;
    let de = frames.frame.gradient()?;
    let mut w = ChartField::zeros(chart, &[n, m, m]);
    for p in 0..chart.num_nodes() {
        let e = frames.frame.node(p);
        let gm = data.g.field().node(p);
        let gp = gamma.node(p);
        let hp = data.h.field().node(p);
        let kp = data.kappa.field().node(p);
        let slot = w.node_mut(p);
        for kk in 0..n {
            let blk = &mut slot[kk * m * m..(kk + 1) * m * m];
            // covariant derivative of E_i along ∂_k, coordinate components
            for i in 0..n {
                let mut nab = vec![0.0; n];
                for (c, v) in nab.iter_mut().enumerate() {
                    *v = de[kk].node(p)[i * n + c];
                    for q in 0..n {
                        *v += e[i * n + q] * gp[(c * n + kk) * n + q];
                    }
                }
                for j in 0..n {
                    let mut s = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            s += nab[a] * gm[a * n + b] * e[j * n + b];
                        }
                    }
                    blk[i * m + j] = s;
                }
                for al in 0..k {
                    let s: f64 = (0..n).map(|q| e[i * n + q] * hp[(al * n + q) * n + kk]).sum();
                    blk[i * m + n + al] = s;
                    blk[(n + al) * m + i] = -s;
                }
            }
            for al in 0..k {
                for be in 0..k {
                    blk[(n + al) * m + n + be] = kp[(kk * k + al) * k + be];
                }
            }
        }
    }
    ConnectionForm::new(w)
}

/// Frames, canonical form and connection form of one dataset.
pub fn cartan_data(data: &GeometricData) -> Result<(FramePackage, CanonicalForm, ConnectionForm)> {
    let frames = orthonormal_coframe(&data.g)?;
    let w = canonical_form(&frames, data.codim());
    let big_w = connection_form(data, &frames)?;
    Ok((frames, w, big_w))
}

/// `(dw − w∧W)(∂_k, ∂_l) = ∂_k w_l − ∂_l w_k − (w_k W_l − w_l W_k)`, shape `[n, n, N]`.
pub fn first_structure_residual(w: &CanonicalForm, big_w: &ConnectionForm) -> Result<ChartField> {
    w.field().same_chart(big_w.field())?;
    let m = w.ambient_dim();
    if m != big_w.ambient_dim() {
        return Err(Error::ShapeMismatch(format!(
            "canonical form has {m} components but connection form {}",
            big_w.ambient_dim()
        )));
    }
    let chart = w.field().chart();
    let n = chart.dim();
    let dw = w.field().gradient()?;
    let mut out = ChartField::zeros(chart, &[n, n, m]);
    for p in 0..chart.num_nodes() {
        let wp = w.field().node(p);
        let bw = big_w.field().node(p);
        let slot = out.node_mut(p);
        for kk in 0..n {
            for l in kk + 1..n {
                for c in 0..m {
                    let mut v = dw[kk].node(p)[l * m + c] - dw[l].node(p)[kk * m + c];
                    for a in 0..m {
                        v -= wp[kk * m + a] * bw[(l * m + a) * m + c] - wp[l * m + a] * bw[(kk * m + a) * m + c];
                    }
                    slot[(kk * n + l) * m + c] = v;
                    slot[(l * n + kk) * m + c] = -v;
                }
            }
        }
    }
    Ok(out)
}

/// `(W∧W − dW)(∂_k, ∂_l) = [W_k, W_l] − (∂_k W_l − ∂_l W_k)`, shape `[n, n, N, N]`.
///
/// This is the flatness condition `∂_k W_l − ∂_l W_k = [W_k, W_l]` of the
/// system `∂_k A = W_k A`, and it reduces to `[J, K]` for constant `W`.
pub fn second_structure_residual(big_w: &ConnectionForm) -> Result<ChartField> {
    let chart = big_w.field().chart();
    let n = chart.dim();
    let m = big_w.ambient_dim();
    let dw = big_w.field().gradient()?;
    let mut out = ChartField::zeros(chart, &[n, n, m, m]);
    for p in 0..chart.num_nodes() {
        for kk in 0..n {
            for l in kk + 1..n {
                let wk = big_w.at(p, kk);
                let wl = big_w.at(p, l);
                let dkl = node_matrix(&dw[kk], p, l * m * m, m, m);
                let dlk = node_matrix(&dw[l], p, kk * m * m, m, m);
                let r = &wk * &wl - &wl * &wk - (dkl - dlk);
                store_matrix(&mut out, p, (kk * n + l) * m * m, &r);
                store_matrix(&mut out, p, (l * n + kk) * m * m, &(-r));
            }
        }
    }
    Ok(out)
}
