//! Intrinsic geometry of a metric and extrinsic data of an immersion.
//!
//! Index conventions used throughout the crate:
//!
//! * metric `g[i][j]`, shape `[n, n]`
//! * Christoffel symbols `Γ[k][i][j] = Γ^k_ij`, shape `[n, n, n]`
//! * Riemann tensor `R[i][j][k][l] = ⟨R(∂_i, ∂_j)∂_l, ∂_k⟩`, so that a unit
//!   sphere has `R_1212 = det g`
//! * second fundamental form `h[α][i][j] = ∂_i∂_j f · η_α`, shape `[k, n, n]`
//! * normal connection `κ[i][α][β] = ∂_i η_α · η_β`, shape `[n, k, k]`
//! * normal frame `η[α][c]`, shape `[k, n + k]`

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{Chart, ChartField};
use crate::linalg::{self, best_rotation, dot, node_matrix, orthogonalize};

/// Smallest singular value of `df` accepted as full rank.
pub const RANK_TOL: f64 = 1e-8;
/// Seed candidates whose projection residual falls below this are skipped.
pub const SEED_SKIP_TOL: f64 = 1e-6;

/// Symmetric positive-definite metric `g_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField(ChartField);

impl MetricField {
    pub fn new(field: ChartField) -> Result<Self> {
        let n = field.chart().dim();
        if field.shape() != [n, n] {
            return Err(Error::ShapeMismatch(format!(
                "metric must have shape [{n}, {n}], got {:?}",
                field.shape()
            )));
        }
        for p in 0..field.chart().num_nodes() {
            let m = node_matrix(&field, p, 0, n, n);
            if m != m.transpose() {
                return Err(Error::AsymmetricMetric { node: p });
            }
            let lmin = m.symmetric_eigenvalues().min();
            if !(lmin > 0.0) {
                return Err(Error::SingularMetric { node: p, eigenvalue: lmin });
            }
        }
        Ok(Self(field))
    }

    /// Build from a closure returning the metric at a point; the result is
    /// symmetrized before validation.
    pub fn from_fn<F>(chart: &Chart, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let n = chart.dim();
        let field = ChartField::from_fn(chart, &[n, n], |x, out| {
            f(x, out);
            symmetrize_block(out, n);
        });
        Self::new(field)
    }

    pub fn identity(chart: &Chart) -> Self {
        let n = chart.dim();
        Self(ChartField::from_fn(chart, &[n, n], |_, out| {
            for i in 0..n {
                out[i * n + i] = 1.0;
            }
        }))
    }

    pub fn field(&self) -> &ChartField {
        &self.0
    }

    pub fn into_inner(self) -> ChartField {
        self.0
    }

    pub fn chart(&self) -> &Chart {
        self.0.chart()
    }

    pub fn dim(&self) -> usize {
        self.chart().dim()
    }

    pub fn at(&self, p: usize) -> DMatrix<f64> {
        let n = self.dim();
        node_matrix(&self.0, p, 0, n, n)
    }

    /// Pointwise inverse `g^{ij}`.
    pub fn inverse(&self) -> ChartField {
        let n = self.dim();
        let mut out = ChartField::zeros(self.chart(), &[n, n]);
        for p in 0..self.chart().num_nodes() {
            // validated positive definite on construction
            let inv = self.at(p).try_inverse().expect("positive-definite metric");
            linalg::store_matrix(&mut out, p, 0, &inv);
        }
        out
    }

    /// Volume density `sqrt(det g)`.
    pub fn volume_density(&self) -> ChartField {
        let data = (0..self.chart().num_nodes())
            .map(|p| self.at(p).determinant().sqrt())
            .collect();
        ChartField::from_values(self.chart(), &[], data).expect("finite determinant")
    }
}

/// Immersion `f: U -> R^{n+k}` with a full-rank differential.
#[derive(Clone, Debug, PartialEq)]
pub struct ImmersionField(ChartField);

impl ImmersionField {
    pub fn new(field: ChartField) -> Result<Self> {
        let n = field.chart().dim();
        if field.shape().len() != 1 || field.shape()[0] <= n {
            return Err(Error::ShapeMismatch(format!(
                "immersion of a {n}-chart needs shape [N] with N > {n}, got {:?}",
                field.shape()
            )));
        }
        let out = Self(field);
        first_form_unchecked(&out)?;
        Ok(out)
    }

    pub fn from_fn<F: Fn(&[f64], &mut [f64])>(chart: &Chart, ambient: usize, f: F) -> Result<Self> {
        Self::new(ChartField::from_fn(chart, &[ambient], f))
    }

    pub fn field(&self) -> &ChartField {
        &self.0
    }

    pub fn into_inner(self) -> ChartField {
        self.0
    }

    pub fn chart(&self) -> &Chart {
        self.0.chart()
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.shape()[0]
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.chart().dim()
    }

    pub fn point(&self, p: usize) -> &[f64] {
        self.0.node(p)
    }
}

/// Second fundamental form coefficients `h^α_ij`, symmetric in `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondFormField(ChartField);

impl SecondFormField {
    /// Wrap a `[k, n, n]` field, enforcing symmetry in the last two slots.
    pub fn new(mut field: ChartField) -> Result<Self> {
        let n = field.chart().dim();
        let sh = field.shape().to_vec();
        if sh.len() != 3 || sh[1] != n || sh[2] != n || sh[0] == 0 {
            return Err(Error::ShapeMismatch(format!(
                "second form needs shape [k, {n}, {n}], got {sh:?}"
            )));
        }
        for p in 0..field.chart().num_nodes() {
            for blk in field.node_mut(p).chunks_mut(n * n) {
                symmetrize_block(blk, n);
            }
        }
        Ok(Self(field))
    }

    pub fn zeros(chart: &Chart, codim: usize) -> Self {
        let n = chart.dim();
        Self(ChartField::zeros(chart, &[codim, n, n]))
    }

    pub fn from_fn<F: Fn(&[f64], &mut [f64])>(chart: &Chart, codim: usize, f: F) -> Result<Self> {
        let n = chart.dim();
        Self::new(ChartField::from_fn(chart, &[codim, n, n], f))
    }

    pub fn field(&self) -> &ChartField {
        &self.0
    }

    pub fn into_inner(self) -> ChartField {
        self.0
    }

    pub fn codim(&self) -> usize {
        self.0.shape()[0]
    }

    pub fn at(&self, p: usize, alpha: usize) -> DMatrix<f64> {
        let n = self.0.chart().dim();
        node_matrix(&self.0, p, alpha * n * n, n, n)
    }
}

/// Normal connection coefficients `κ(∂_i)_{αβ}`, antisymmetric in `(α, β)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalConnField(ChartField);

impl NormalConnField {
    /// Wrap an `[n, k, k]` field, enforcing antisymmetry in the last two slots.
    pub fn new(mut field: ChartField) -> Result<Self> {
        let n = field.chart().dim();
        let sh = field.shape().to_vec();
        if sh.len() != 3 || sh[0] != n || sh[1] != sh[2] || sh[1] == 0 {
            return Err(Error::ShapeMismatch(format!(
                "normal connection needs shape [{n}, k, k], got {sh:?}"
            )));
        }
        let k = sh[1];
        for p in 0..field.chart().num_nodes() {
            for blk in field.node_mut(p).chunks_mut(k * k) {
                antisymmetrize_block(blk, k);
            }
        }
        Ok(Self(field))
    }

    pub fn zeros(chart: &Chart, codim: usize) -> Self {
        let n = chart.dim();
        Self(ChartField::zeros(chart, &[n, codim, codim]))
    }

    pub fn from_fn<F: Fn(&[f64], &mut [f64])>(chart: &Chart, codim: usize, f: F) -> Result<Self> {
        let n = chart.dim();
        Self::new(ChartField::from_fn(chart, &[n, codim, codim], f))
    }

    pub fn field(&self) -> &ChartField {
        &self.0
    }

    pub fn into_inner(self) -> ChartField {
        self.0
    }

    pub fn codim(&self) -> usize {
        self.0.shape()[1]
    }

    pub fn at(&self, p: usize, axis: usize) -> DMatrix<f64> {
        let k = self.codim();
        node_matrix(&self.0, p, axis * k * k, k, k)
    }
}

/// Orthonormal normal vectors `η_α` in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalFrameField(ChartField);

impl NormalFrameField {
    pub fn field(&self) -> &ChartField {
        &self.0
    }

    pub fn into_inner(self) -> ChartField {
        self.0
    }

    pub fn codim(&self) -> usize {
        self.0.shape()[0]
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.shape()[1]
    }

    pub fn normal(&self, p: usize, alpha: usize) -> &[f64] {
        let m = self.ambient_dim();
        &self.0.node(p)[alpha * m..(alpha + 1) * m]
    }

    /// Wrap a `[k, N]` field after checking orthonormality and normality to `df`.
    pub fn new(field: ChartField, f: &ImmersionField) -> Result<Self> {
        field.same_chart(f.field())?;
        let (k, m) = (f.codim(), f.ambient_dim());
        if field.shape() != [k, m] {
            return Err(Error::ShapeMismatch(format!(
                "normal frame needs shape [{k}, {m}], got {:?}",
                field.shape()
            )));
        }
        let df = f.field().gradient()?;
        for p in 0..field.chart().num_nodes() {
            let eta = field.node(p);
            for a in 0..k {
                let ea = &eta[a * m..(a + 1) * m];
                for b in 0..k {
                    let want = if a == b { 1.0 } else { 0.0 };
                    if (dot(ea, &eta[b * m..(b + 1) * m]) - want).abs() > 1e-10 {
                        return Err(Error::FrameConstruction { node: p, wanted: k });
                    }
                }
                for d in &df {
                    let t = d.node(p);
                    if dot(ea, t).abs() > 1e-10 * dot(t, t).sqrt().max(1.0) {
                        return Err(Error::FrameConstruction { node: p, wanted: k });
                    }
                }
            }
        }
        Ok(Self(field))
    }
}

/// Metric, second fundamental form and normal connection on one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricData {
    pub g: MetricField,
    pub h: SecondFormField,
    pub kappa: NormalConnField,
}

impl GeometricData {
    pub fn new(g: MetricField, h: SecondFormField, kappa: NormalConnField) -> Result<Self> {
        g.field().same_chart(h.field())?;
        g.field().same_chart(kappa.field())?;
        if h.codim() != kappa.codim() {
            return Err(Error::ShapeMismatch(format!(
                "second form has codimension {} but normal connection {}",
                h.codim(),
                kappa.codim()
            )));
        }
        Ok(Self { g, h, kappa })
    }

    pub fn chart(&self) -> &Chart {
        self.g.chart()
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn codim(&self) -> usize {
        self.h.codim()
    }

    /// Express `h` and `κ` against the rotated normal frame `η' = Q η` for a
    /// constant orthogonal `Q`.
    pub fn rotate_normals(&self, q: &DMatrix<f64>) -> Result<Self> {
        let (n, k) = (self.dim(), self.codim());
        if q.shape() != (k, k) {
            return Err(Error::ShapeMismatch(format!("rotation must be {k}x{k}")));
        }
        let chart = self.chart();
        let mut h = ChartField::zeros(chart, &[k, n, n]);
        let mut kap = ChartField::zeros(chart, &[n, k, k]);
        for p in 0..chart.num_nodes() {
            let hs: Vec<DMatrix<f64>> = (0..k).map(|a| self.h.at(p, a)).collect();
            for a in 0..k {
                let mut acc = DMatrix::zeros(n, n);
                for b in 0..k {
                    acc += &hs[b] * q[(a, b)];
                }
                linalg::store_matrix(&mut h, p, a * n * n, &acc);
            }
            for i in 0..n {
                let r = q * self.kappa.at(p, i) * q.transpose();
                linalg::store_matrix(&mut kap, p, i * k * k, &r);
            }
        }
        Ok(Self {
            g: self.g.clone(),
            h: SecondFormField::new(h)?,
            kappa: NormalConnField::new(kap)?,
        })
    }
}

pub(crate) fn symmetrize_block(b: &mut [f64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (b[i * n + j] + b[j * n + i]);
            b[i * n + j] = s;
            b[j * n + i] = s;
        }
    }
}

pub(crate) fn antisymmetrize_block(b: &mut [f64], n: usize) {
    for i in 0..n {
        b[i * n + i] = 0.0;
        for j in i + 1..n {
            let s = 0.5 * (b[i * n + j] - b[j * n + i]);
            b[i * n + j] = s;
            b[j * n + i] = -s;
        }
    }
}

/// Christoffel symbols `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn christoffel(g: &MetricField) -> Result<ChartField> {
    let n = g.dim();
    let dg = g.field().gradient()?;
    let ginv = g.inverse();
    let chart = g.chart();
    let mut out = ChartField::zeros(chart, &[n, n, n]);
    for p in 0..chart.num_nodes() {
        let gi = ginv.node(p);
        let d = |l: usize, i: usize, j: usize| dg[l].node(p)[i * n + j];
        let slot = out.node_mut(p);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += gi[k * n + l] * (d(i, j, l) + d(j, i, l) - d(l, i, j));
                    }
                    slot[(k * n + i) * n + j] = 0.5 * s;
                    slot[(k * n + j) * n + i] = 0.5 * s;
                }
            }
        }
    }
    Ok(out)
}

/// Riemann tensor `R_ijkl = g_km R^m_lij` with
/// `R^m_lij = ∂_iΓ^m_jl − ∂_jΓ^m_il + Γ^m_ip Γ^p_jl − Γ^m_jp Γ^p_il`.
///
/// The output is exactly antisymmetric in `(i, j)` and in `(k, l)`; the
/// latter is enforced by averaging the two orderings.
pub fn riemann(g: &MetricField) -> Result<ChartField> {
    let gamma = christoffel(g)?;
    riemann_from_christoffel(g, &gamma)
}

pub(crate) fn riemann_from_christoffel(g: &MetricField, gamma: &ChartField) -> Result<ChartField> {
    let n = g.dim();
    let dgam = gamma.gradient()?;
    let chart = g.chart();
    let mut out = ChartField::zeros(chart, &[n, n, n, n]);
    let idx4 = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
    let mut up = vec![0.0; n * n * n * n]; // R^m_lij at [m][l][i][j]
    for p in 0..chart.num_nodes() {
        let gam = gamma.node(p);
        let gm = g.field().node(p);
        let gi = |k: usize, i: usize, j: usize| gam[(k * n + i) * n + j];
        let dg = |a: usize, k: usize, i: usize, j: usize| dgam[a].node(p)[(k * n + i) * n + j];
        for m in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        let t = dg(i, m, j, l) - dg(j, m, i, l);
                        let mut s = 0.0;
                        for q in 0..n {
                            s += gi(m, i, q) * gi(q, j, l) - gi(m, j, q) * gi(q, i, l);
                        }
                        up[idx4(m, l, i, j)] = t + s;
                    }
                }
            }
        }
        let slot = out.node_mut(p);
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    for l in k + 1..n {
                        let mut a = 0.0;
                        let mut b = 0.0;
                        for m in 0..n {
                            a += gm[k * n + m] * up[idx4(m, l, i, j)];
                            b += gm[l * n + m] * up[idx4(m, k, i, j)];
                        }
                        let v = 0.5 * (a - b);
                        slot[idx4(i, j, k, l)] = v;
                        slot[idx4(j, i, k, l)] = -v;
                        slot[idx4(i, j, l, k)] = -v;
                        slot[idx4(j, i, l, k)] = v;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn first_form_unchecked(f: &ImmersionField) -> Result<ChartField> {
    let chart = f.chart();
    let n = chart.dim();
    let df = f.field().gradient()?;
    let mut g = ChartField::zeros(chart, &[n, n]);
    for p in 0..chart.num_nodes() {
        let slot = g.node_mut(p);
        for i in 0..n {
            for j in i..n {
                let v = dot(df[i].node(p), df[j].node(p));
                slot[i * n + j] = v;
                slot[j * n + i] = v;
            }
        }
        let m = node_matrix(&g, p, 0, n, n);
        let lmin = m.symmetric_eigenvalues().min();
        let sigma = lmin.max(0.0).sqrt();
        if !(sigma > RANK_TOL) {
            return Err(Error::RankDeficient { node: p, sigma });
        }
    }
    Ok(g)
}

/// Induced metric `g_ij = ∂_i f · ∂_j f`.
pub fn extract_first_form(f: &ImmersionField) -> Result<MetricField> {
    MetricField::new(first_form_unchecked(f)?)
}

/// Orthonormal normals at one node: orthonormalize the tangent columns,
/// then Gram–Schmidt the seed vectors against them in order, skipping
/// candidates whose residual is below [`SEED_SKIP_TOL`].
fn normals_at(tangents: &[&[f64]], seeds: impl Iterator<Item = Vec<f64>>, k: usize) -> Option<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for t in tangents {
        let mut v = t.to_vec();
        let r = orthogonalize(&mut v, &basis);
        if r <= RANK_TOL {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= r);
        basis.push(v);
    }
    let mut normals = Vec::with_capacity(k);
    for mut s in seeds {
        if normals.len() == k {
            break;
        }
        let r = orthogonalize(&mut s, &basis);
        if r < SEED_SKIP_TOL {
            continue;
        }
        s.iter_mut().for_each(|x| *x /= r);
        basis.push(s.clone());
        normals.push(s);
    }
    (normals.len() == k).then_some(normals)
}

fn standard_seeds(m: usize) -> impl Iterator<Item = Vec<f64>> {
    (0..m).map(move |c| {
        let mut e = vec![0.0; m];
        e[c] = 1.0;
        e
    })
}

/// Orthonormal normal frame by the seed rule: Gram–Schmidt of the standard
/// basis of `R^{n+k}` in index order against the columns of `df`.
///
/// The seed rule is applied as-is at the base node (node 0). Elsewhere it is
/// followed by the rotation in `O(k)` that best aligns the frame with the
/// frame at the parent node along [`Chart::canonical_path`], which keeps the
/// frame continuous where the per-node rule would switch seeds or signs.
pub fn extract_normal_frame(f: &ImmersionField) -> Result<NormalFrameField> {
    let chart = f.chart();
    let (k, m) = (f.codim(), f.ambient_dim());
    let df = f.field().gradient()?;
    let mut out = ChartField::zeros(chart, &[k, m]);
    for step in chart.canonical_path(0) {
        let p = step.node;
        let tangents: Vec<&[f64]> = df.iter().map(|d| d.node(p)).collect();
        let normals = normals_at(&tangents, standard_seeds(m), k)
            .ok_or(Error::FrameConstruction { node: p, wanted: k })?;
        let aligned = match step.parent {
            None => normals,
            Some((parent, _, _)) => {
                let prev = out.node(parent);
                let c = DMatrix::from_fn(k, k, |a, b| dot(&normals[a], &prev[b * m..(b + 1) * m]));
                let q = best_rotation(&c);
                (0..k)
                    .map(|a| {
                        (0..m)
                            .map(|c| (0..k).map(|b| q[(a, b)] * normals[b][c]).sum())
                            .collect()
                    })
                    .collect()
            }
        };
        let slot = out.node_mut(p);
        for (a, v) in aligned.iter().enumerate() {
            slot[a * m..(a + 1) * m].copy_from_slice(v);
        }
    }
    Ok(NormalFrameField(out))
}

/// Normal frame obtained by projecting guide vectors (shape `[k, N]`, e.g.
/// the normal rows of a realized frame) onto the normal space of `f` and
/// orthonormalizing them in order. Falls back to standard seeds when a guide
/// is degenerate.
pub fn normal_frame_from_guides(f: &ImmersionField, guides: &ChartField) -> Result<NormalFrameField> {
    let chart = f.chart();
    let (k, m) = (f.codim(), f.ambient_dim());
    guides.same_chart(f.field())?;
    if guides.shape() != [k, m] {
        return Err(Error::ShapeMismatch(format!(
            "guides need shape [{k}, {m}], got {:?}",
            guides.shape()
        )));
    }
    let df = f.field().gradient()?;
    let mut out = ChartField::zeros(chart, &[k, m]);
    for p in 0..chart.num_nodes() {
        let tangents: Vec<&[f64]> = df.iter().map(|d| d.node(p)).collect();
        let g = guides.node(p);
        let seeds = (0..k).map(|a| g[a * m..(a + 1) * m].to_vec()).chain(standard_seeds(m));
        let normals = normals_at(&tangents, seeds, k).ok_or(Error::FrameConstruction { node: p, wanted: k })?;
        let slot = out.node_mut(p);
        for (a, v) in normals.iter().enumerate() {
            slot[a * m..(a + 1) * m].copy_from_slice(v);
        }
    }
    Ok(NormalFrameField(out))
}

fn check_frame(f: &ImmersionField, frame: &NormalFrameField) -> Result<()> {
    frame.field().same_chart(f.field())?;
    if frame.codim() != f.codim() || frame.ambient_dim() != f.ambient_dim() {
        return Err(Error::ShapeMismatch("normal frame does not match the immersion".into()));
    }
    Ok(())
}

/// `h^α_ij = ∂_i∂_j f · η_α`, symmetrized over `(i, j)`.
pub fn extract_second_form(f: &ImmersionField, frame: &NormalFrameField) -> Result<SecondFormField> {
    check_frame(f, frame)?;
    let chart = f.chart();
    let (n, k, m) = (chart.dim(), f.codim(), f.ambient_dim());
    let df = f.field().gradient()?;
    let ddf: Vec<Vec<ChartField>> = df.iter().map(|d| d.gradient()).collect::<Result<_>>()?;
    let mut h = ChartField::zeros(chart, &[k, n, n]);
    for p in 0..chart.num_nodes() {
        let slot = h.node_mut(p);
        for a in 0..k {
            let eta = frame.normal(p, a);
            for i in 0..n {
                for j in i..n {
                    let dij = ddf[i][j].node(p);
                    let dji = ddf[j][i].node(p);
                    let v: f64 = (0..m).map(|c| 0.5 * (dij[c] + dji[c]) * eta[c]).sum();
                    slot[(a * n + i) * n + j] = v;
                    slot[(a * n + j) * n + i] = v;
                }
            }
        }
    }
    SecondFormField::new(h)
}

/// `κ(∂_i)_{αβ} = ∂_i η_α · η_β`, antisymmetrized over `(α, β)`.
pub fn extract_normal_connection(f: &ImmersionField, frame: &NormalFrameField) -> Result<NormalConnField> {
    check_frame(f, frame)?;
    let chart = f.chart();
    let (n, k, m) = (chart.dim(), f.codim(), f.ambient_dim());
    let deta = frame.field().gradient()?;
    let mut kap = ChartField::zeros(chart, &[n, k, k]);
    for p in 0..chart.num_nodes() {
        for i in 0..n {
            let d = deta[i].node(p);
            for a in 0..k {
                for b in 0..k {
                    let v = dot(&d[a * m..(a + 1) * m], frame.normal(p, b));
                    kap.set(p, &[i, a, b], v);
                }
            }
        }
    }
    NormalConnField::new(kap)
}

/// Pre-antisymmetrization defect `max |κ_αβ + κ_βα|`, a check on frame orthonormality.
pub fn normal_connection_defect(f: &ImmersionField, frame: &NormalFrameField) -> Result<f64> {
    check_frame(f, frame)?;
    let chart = f.chart();
    let (n, k, m) = (chart.dim(), f.codim(), f.ambient_dim());
    let deta = frame.field().gradient()?;
    let mut worst: f64 = 0.0;
    for p in chart.interior_nodes() {
        for i in 0..n {
            let d = deta[i].node(p);
            for a in 0..k {
                for b in 0..k {
                    let ab = dot(&d[a * m..(a + 1) * m], frame.normal(p, b));
                    let ba = dot(&d[b * m..(b + 1) * m], frame.normal(p, a));
                    worst = worst.max((ab + ba).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Metric, second form and normal connection of an immersion, together with
/// the normal frame they are expressed in.
pub fn extract_all(f: &ImmersionField) -> Result<(GeometricData, NormalFrameField)> {
    let frame = extract_normal_frame(f)?;
    let data = GeometricData::new(
        extract_first_form(f)?,
        extract_second_form(f, &frame)?,
        extract_normal_connection(f, &frame)?,
    )?;
    Ok((data, frame))
}

/// Shape operator `(S_α)^i_j = g^{ik} h^α_kj`.
pub fn shape_operator(h: &SecondFormField, g: &MetricField, alpha: usize) -> Result<ChartField> {
    h.field().same_chart(g.field())?;
    if alpha >= h.codim() {
        return Err(Error::IndexOutOfRange(format!(
            "normal index {alpha} >= codimension {}",
            h.codim()
        )));
    }
    let n = g.dim();
    let ginv = g.inverse();
    let mut out = ChartField::zeros(g.chart(), &[n, n]);
    for p in 0..g.chart().num_nodes() {
        let s = node_matrix(&ginv, p, 0, n, n) * h.at(p, alpha);
        linalg::store_matrix(&mut out, p, 0, &s);
    }
    Ok(out)
}
