//! Gauss, Codazzi and Ricci residuals in local coordinates, and the same
//! equations rewritten through the div-curl pairs `(V, Ω)`.
//!
//! Layouts: Gauss `[n, n, n, n]` indexed `(i, j, k, l)`; Codazzi
//! `[k, n, n, n]` indexed `(α, k, l, j)`; Ricci `[k, k, n, n]` indexed
//! `(α, β, k, l)`. Residual norms skip the [`NORM_MARGIN`] outermost node
//! rings: the residuals nest two derivatives, and a central difference taken
//! next to a one-sided boundary value is only first order.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{self, GeometricData, MetricField, NormalConnField, SecondFormField};
use crate::grid::ChartField;
use crate::linalg::gram_schmidt_frame;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Equation {
    Gauss,
    Codazzi,
    Ricci,
}

impl Equation {
    pub const ALL: [Equation; 3] = [Equation::Gauss, Equation::Codazzi, Equation::Ricci];

    pub fn name(self) -> &'static str {
        match self {
            Equation::Gauss => "gauss",
            Equation::Codazzi => "codazzi",
            Equation::Ricci => "ricci",
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Node rings next to the boundary left out of residual norms.
pub const NORM_MARGIN: usize = 2;

/// Max and L² norms of a residual away from the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub inf: f64,
    pub l2: f64,
}

impl Norms {
    pub fn of(field: &ChartField) -> Self {
        Self {
            inf: field.max_abs_inner(NORM_MARGIN),
            l2: field.l2_inner(NORM_MARGIN),
        }
    }
}

/// Observed convergence order from errors on two grids whose spacings
/// differ by `ratio = h_coarse / h_fine`.
pub fn observed_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

/// The three residual fields with their interior norms.
#[derive(Clone, Debug, PartialEq)]
pub struct GcrResidual {
    pub gauss: ChartField,
    pub codazzi: ChartField,
    pub ricci: ChartField,
    norms: [Norms; 3],
}

impl GcrResidual {
    pub fn new(gauss: ChartField, codazzi: ChartField, ricci: ChartField) -> Self {
        let norms = [Norms::of(&gauss), Norms::of(&codazzi), Norms::of(&ricci)];
        Self {
            gauss,
            codazzi,
            ricci,
            norms,
        }
    }

    pub fn field(&self, eq: Equation) -> &ChartField {
        match eq {
            Equation::Gauss => &self.gauss,
            Equation::Codazzi => &self.codazzi,
            Equation::Ricci => &self.ricci,
        }
    }

    pub fn norms(&self, eq: Equation) -> Norms {
        self.norms[eq as usize]
    }

    /// Largest of the three interior max norms.
    pub fn max_inf(&self) -> f64 {
        self.norms.iter().map(|n| n.inf).fold(0.0, f64::max)
    }
}

fn check_data(g: &MetricField, h: &SecondFormField, kappa: Option<&NormalConnField>) -> Result<()> {
    g.field().same_chart(h.field())?;
    if let Some(k) = kappa {
        g.field().same_chart(k.field())?;
        if k.codim() != h.codim() {
            return Err(Error::ShapeMismatch(format!(
                "second form has codimension {} but normal connection {}",
                h.codim(),
                k.codim()
            )));
        }
    }
    Ok(())
}

/// `Σ_α (h^α_ik h^α_jl − h^α_il h^α_jk) − R_ijkl`.
pub fn gauss_residual(g: &MetricField, h: &SecondFormField) -> Result<ChartField> {
    check_data(g, h, None)?;
    let r = geometry::riemann(g)?;
    Ok(gauss_from_riemann(h, &r))
}

fn gauss_from_riemann(h: &SecondFormField, r: &ChartField) -> ChartField {
    let chart = r.chart();
    let (n, k) = (chart.dim(), h.codim());
    let idx4 = |i: usize, j: usize, a: usize, b: usize| ((i * n + j) * n + a) * n + b;
    let mut out = ChartField::zeros(chart, &[n, n, n, n]);
    for p in 0..chart.num_nodes() {
        let hp = h.field().node(p);
        let hv = |a: usize, i: usize, j: usize| hp[(a * n + i) * n + j];
        let rp = r.node(p);
        let slot = out.node_mut(p);
        for i in 0..n {
            for j in i + 1..n {
                for a in 0..n {
                    for b in a + 1..n {
                        let mut s = 0.0;
                        for al in 0..k {
                            s += hv(al, i, a) * hv(al, j, b) - hv(al, i, b) * hv(al, j, a);
                        }
                        let v = s - rp[idx4(i, j, a, b)];
                        slot[idx4(i, j, a, b)] = v;
                        slot[idx4(j, i, a, b)] = -v;
                        slot[idx4(i, j, b, a)] = -v;
                        slot[idx4(j, i, b, a)] = v;
                    }
                }
            }
        }
    }
    out
}

/// `∂_k h^α_lj − ∂_l h^α_kj + Γ^m_lj h^α_km − Γ^m_kj h^α_lm + κ^α_kβ h^β_lj − κ^α_lβ h^β_kj`
/// with `κ^α_kβ = κ(∂_k)_{βα}`.
pub fn codazzi_residual(g: &MetricField, h: &SecondFormField, kappa: &NormalConnField) -> Result<ChartField> {
    check_data(g, h, Some(kappa))?;
    let gamma = geometry::christoffel(g)?;
    let dh = h.field().gradient()?;
    let chart = g.chart();
    let (n, k) = (chart.dim(), h.codim());
    let mut out = ChartField::zeros(chart, &[k, n, n, n]);
    for p in 0..chart.num_nodes() {
        let hp = h.field().node(p);
        let hv = |a: usize, i: usize, j: usize| hp[(a * n + i) * n + j];
        let gp = gamma.node(p);
        let gm = |m: usize, i: usize, j: usize| gp[(m * n + i) * n + j];
        let kp = kappa.field().node(p);
        let kv = |i: usize, a: usize, b: usize| kp[(i * k + a) * k + b];
        let slot = out.node_mut(p);
        for al in 0..k {
            for kk in 0..n {
                for l in kk + 1..n {
                    for j in 0..n {
                        let mut v = dh[kk].node(p)[(al * n + l) * n + j] - dh[l].node(p)[(al * n + kk) * n + j];
                        for m in 0..n {
                            v += gm(m, l, j) * hv(al, kk, m) - gm(m, kk, j) * hv(al, l, m);
                        }
                        for be in 0..k {
                            v += kv(kk, be, al) * hv(be, l, j) - kv(l, be, al) * hv(be, kk, j);
                        }
                        slot[((al * n + kk) * n + l) * n + j] = v;
                        slot[((al * n + l) * n + kk) * n + j] = -v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `∂_kκ^α_lβ − ∂_lκ^α_kβ + κ^α_kγ κ^γ_lβ − κ^α_lγ κ^γ_kβ + g^{mn}(h^α_lm h^β_kn − h^α_km h^β_ln)`
/// with `κ^α_kβ = κ(∂_k)_{βα}`.
pub fn ricci_residual(g: &MetricField, h: &SecondFormField, kappa: &NormalConnField) -> Result<ChartField> {
    check_data(g, h, Some(kappa))?;
    let ginv = g.inverse();
    let dk = kappa.field().gradient()?;
    let chart = g.chart();
    let (n, k) = (chart.dim(), h.codim());
    let mut out = ChartField::zeros(chart, &[k, k, n, n]);
    if k == 1 {
        return Ok(out);
    }
    for p in 0..chart.num_nodes() {
        let hp = h.field().node(p);
        let hv = |a: usize, i: usize, j: usize| hp[(a * n + i) * n + j];
        let gi = ginv.node(p);
        let kp = kappa.field().node(p);
        // κ^α_iβ
        let ku = |a: usize, i: usize, b: usize| kp[(i * k + b) * k + a];
        let dku = |d: usize, a: usize, i: usize, b: usize| dk[d].node(p)[(i * k + b) * k + a];
        let slot = out.node_mut(p);
        for al in 0..k {
            for be in 0..k {
                for kk in 0..n {
                    for l in kk + 1..n {
                        let mut v = dku(kk, al, l, be) - dku(l, al, kk, be);
                        for ga in 0..k {
                            v += ku(al, kk, ga) * ku(ga, l, be) - ku(al, l, ga) * ku(ga, kk, be);
                        }
                        for m in 0..n {
                            for q in 0..n {
                                v += gi[m * n + q] * (hv(al, l, m) * hv(be, kk, q) - hv(al, kk, m) * hv(be, l, q));
                            }
                        }
                        slot[((al * k + be) * n + kk) * n + l] = v;
                        slot[((al * k + be) * n + l) * n + kk] = -v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// All three residuals of the local-coordinate equations.
pub fn gcr_residual(data: &GeometricData) -> Result<GcrResidual> {
    Ok(GcrResidual::new(
        gauss_residual(&data.g, &data.h)?,
        codazzi_residual(&data.g, &data.h, &data.kappa)?,
        ricci_residual(&data.g, &data.h, &data.kappa)?,
    ))
}

/// Which div-curl pair a [`DivCurlPair`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    /// `V^(B)_{Z,η}(X,Y)` and `Ω^(B)_{Z,η}`.
    SecondForm { eta: usize },
    /// `V^(∇⊥)_{ξ,η}(X,Y)` and `Ω^(∇⊥)_{ξ,η}`.
    NormalConnection { xi: usize, eta: usize },
}

/// A vector field `V` and a 1-form `Ω` on the same chart, both of shape `[n]`
/// in coordinate components.
#[derive(Clone, Debug, PartialEq)]
pub struct DivCurlPair {
    pub kind: PairKind,
    pub v: ChartField,
    pub omega: ChartField,
}

/// Div-curl pairs for constant-coefficient vector fields `X, Y, Z` and the
/// normal index `eta`:
///
/// * `V^(B)_{Z,η}(X,Y) = B(X,Z,η)Y − B(Y,Z,η)X`, `Ω^(B)_{Z,η} = −B(·,Z,η)`
/// * `V^(∇⊥)_{ξ,η}(X,Y) = ⟨∇⊥_Y ξ,η⟩X − ⟨∇⊥_X ξ,η⟩Y`, `Ω^(∇⊥)_{ξ,η} = ⟨∇⊥_· ξ,η⟩`
///
/// The first entry is the second-form pair; one normal-connection pair
/// follows for every `ξ`.
pub fn build_divcurl_pairs(
    h: &SecondFormField,
    kappa: &NormalConnField,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    eta: usize,
) -> Result<Vec<DivCurlPair>> {
    h.field().same_chart(kappa.field())?;
    let chart = h.field().chart();
    let (n, k) = (chart.dim(), h.codim());
    if x.len() != n || y.len() != n || z.len() != n {
        return Err(Error::ShapeMismatch(format!("tangent vectors must have {n} components")));
    }
    if eta >= k || kappa.codim() != k {
        return Err(Error::IndexOutOfRange(format!("normal index {eta} with codimension {k}")));
    }
    let bilinear = |p: usize, a: usize, u: &[f64], w: &[f64]| -> f64 {
        let hp = &h.field().node(p)[a * n * n..(a + 1) * n * n];
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += u[i] * hp[i * n + j] * w[j];
            }
        }
        s
    };
    let conn = |p: usize, u: &[f64], xi: usize, e: usize| -> f64 {
        (0..n).map(|i| u[i] * kappa.field().get(p, &[i, xi, e])).sum()
    };
    let mut vb = ChartField::zeros(chart, &[n]);
    let mut ob = ChartField::zeros(chart, &[n]);
    for p in 0..chart.num_nodes() {
        let (bx, by) = (bilinear(p, eta, x, z), bilinear(p, eta, y, z));
        for m in 0..n {
            vb.node_mut(p)[m] = bx * y[m] - by * x[m];
            let mut e = vec![0.0; n];
            e[m] = 1.0;
            ob.node_mut(p)[m] = -bilinear(p, eta, &e, z);
        }
    }
    let mut out = vec![DivCurlPair {
        kind: PairKind::SecondForm { eta },
        v: vb,
        omega: ob,
    }];
    for xi in 0..k {
        let mut v = ChartField::zeros(chart, &[n]);
        let mut o = ChartField::zeros(chart, &[n]);
        for p in 0..chart.num_nodes() {
            let (cy, cx) = (conn(p, y, xi, eta), conn(p, x, xi, eta));
            for m in 0..n {
                v.node_mut(p)[m] = cy * x[m] - cx * y[m];
                o.node_mut(p)[m] = kappa.field().get(p, &[m, xi, eta]);
            }
        }
        out.push(DivCurlPair {
            kind: PairKind::NormalConnection { xi, eta },
            v,
            omega: o,
        });
    }
    Ok(out)
}

/// `d(Ω)(∂_k, ∂_l) = ∂_k Ω_l − ∂_l Ω_k` for a 1-form of shape `[.., n]`
/// (the last slot is the form slot). Returns shape `[.., n, n]`.
fn exterior_d(omega: &ChartField) -> Result<ChartField> {
    let chart = omega.chart();
    let n = chart.dim();
    let lead: usize = omega.ncomp() / n;
    let grad = omega.gradient()?;
    let mut shape = omega.shape().to_vec();
    shape.push(n);
    let mut out = ChartField::zeros(chart, &shape);
    for p in 0..chart.num_nodes() {
        let slot = out.node_mut(p);
        for c in 0..lead {
            for kk in 0..n {
                for l in 0..n {
                    slot[(c * n + kk) * n + l] = grad[kk].node(p)[c * n + l] - grad[l].node(p)[c * n + kk];
                }
            }
        }
    }
    Ok(out)
}

/// The three equations in div-curl form, with coordinate fields for
/// `X, Y, Z, W`, the extracted orthonormal normals for the normal sums and a
/// Gram–Schmidt orthonormal tangent frame for the sum over `Z`.
///
/// Each residual is reported in the orientation of [`gcr_residual`] so the
/// two can be compared slot by slot: Gauss `−(Σ_η⟨V^(B)_{Z,η}, Ω^(B)_{W,η}⟩ + R)`,
/// Codazzi `−(dΩ^(B)_{Z,η} + Σ_β⟨V^(∇⊥)_{η,β}, Ω^(B)_{Z,β}⟩ + E(B))`,
/// Ricci with `ξ = η_β`, `η = η_α` as written.
pub fn second_formulation_residual(
    g: &MetricField,
    h: &SecondFormField,
    kappa: &NormalConnField,
) -> Result<GcrResidual> {
    check_data(g, h, Some(kappa))?;
    let chart = g.chart();
    let (n, k) = (chart.dim(), h.codim());
    let r = geometry::riemann(g)?;
    let gamma = geometry::christoffel(g)?;
    let unit = |i: usize| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    };

    // Ω^(B)_{∂_j,η} stored as [η, j, m] and Ω^(∇⊥)_{ξ,η} as [ξ, η, m].
    let mut omega_b = ChartField::zeros(chart, &[k, n, n]);
    let mut omega_n = ChartField::zeros(chart, &[k, k, n]);
    for eta in 0..k {
        for j in 0..n {
            let pairs = build_divcurl_pairs(h, kappa, &unit(0), &unit(1 % n), &unit(j), eta)?;
            for p in 0..chart.num_nodes() {
                omega_b.node_mut(p)[(eta * n + j) * n..(eta * n + j + 1) * n].copy_from_slice(pairs[0].omega.node(p));
                if j == 0 {
                    for pair in &pairs[1..] {
                        if let PairKind::NormalConnection { xi, .. } = pair.kind {
                            omega_n.node_mut(p)[(xi * k + eta) * n..(xi * k + eta + 1) * n]
                                .copy_from_slice(pair.omega.node(p));
                        }
                    }
                }
            }
        }
    }
    let d_omega_b = exterior_d(&omega_b)?; // [η, j, k, l]
    let d_omega_n = exterior_d(&omega_n)?; // [ξ, η, k, l]

    let mut gauss = ChartField::zeros(chart, &[n, n, n, n]);
    let mut codazzi = ChartField::zeros(chart, &[k, n, n, n]);
    let mut ricci = ChartField::zeros(chart, &[k, k, n, n]);
    for p in 0..chart.num_nodes() {
        let hp = h.field().node(p);
        let hv = |a: usize, i: usize, j: usize| hp[(a * n + i) * n + j];
        let kp = kappa.field().node(p);
        let kv = |i: usize, a: usize, b: usize| kp[(i * k + a) * k + b];
        let ob = omega_b.node(p);
        // Ω^(B)_{u,η}(v) for coordinate-component vectors u, v
        let omega_bv = |eta: usize, u: &[f64], v: &[f64]| -> f64 {
            let mut s = 0.0;
            for j in 0..n {
                for m in 0..n {
                    s += u[j] * ob[(eta * n + j) * n + m] * v[m];
                }
            }
            s
        };
        let on = omega_n.node(p);
        let gp = gamma.node(p);
        let rp = r.node(p);
        let frame = gram_schmidt_frame(&g.at(p)).ok_or(Error::SingularMetric {
            node: p,
            eigenvalue: 0.0,
        })?;

        // V^(B)_{u,η}(∂_x, ∂_y) in coordinate components
        let v_b = |eta: usize, u: &[f64], x: usize, y: usize| -> Vec<f64> {
            let bx: f64 = (0..n).map(|j| u[j] * hv(eta, x, j)).sum();
            let by: f64 = (0..n).map(|j| u[j] * hv(eta, y, j)).sum();
            let mut v = vec![0.0; n];
            v[y] += bx;
            v[x] -= by;
            v
        };
        // V^(∇⊥)_{ξ,η}(∂_x, ∂_y)
        let v_n = |xi: usize, eta: usize, x: usize, y: usize| -> Vec<f64> {
            let mut v = vec![0.0; n];
            v[x] += kv(y, xi, eta);
            v[y] -= kv(x, xi, eta);
            v
        };

        let gslot = gauss.node_mut(p);
        for i in 0..n {
            for j in 0..n {
                for kk in 0..n {
                    for l in 0..n {
                        let mut s = 0.0;
                        for eta in 0..k {
                            let v = v_b(eta, &unit(kk), i, j);
                            s += omega_bv(eta, &unit(l), &v);
                        }
                        gslot[((i * n + j) * n + kk) * n + l] = -(s + rp[((i * n + j) * n + kk) * n + l]);
                    }
                }
            }
        }

        let dob = d_omega_b.node(p);
        let cslot = codazzi.node_mut(p);
        for eta in 0..k {
            for kk in 0..n {
                for l in 0..n {
                    for j in 0..n {
                        let z = unit(j);
                        let mut s = dob[((eta * n + j) * n + kk) * n + l];
                        for be in 0..k {
                            s += omega_bv(be, &z, &v_n(eta, be, kk, l));
                        }
                        // E(B) = B(Y, ∇_X Z, η) − B(X, ∇_Y Z, η)
                        for m in 0..n {
                            s += gp[(m * n + kk) * n + j] * hv(eta, l, m) - gp[(m * n + l) * n + j] * hv(eta, kk, m);
                        }
                        cslot[((eta * n + kk) * n + l) * n + j] = -s;
                    }
                }
            }
        }

        let don = d_omega_n.node(p);
        let rslot = ricci.node_mut(p);
        for al in 0..k {
            for be in 0..k {
                let (xi, eta) = (be, al);
                for kk in 0..n {
                    for l in 0..n {
                        let mut s = don[((xi * k + eta) * n + kk) * n + l];
                        for b2 in 0..k {
                            let v = v_n(eta, b2, kk, l);
                            s += (0..n).map(|m| v[m] * on[(xi * k + b2) * n + m]).sum::<f64>();
                        }
                        for a in 0..n {
                            let z: Vec<f64> = (0..n).map(|c| frame[(a, c)]).collect();
                            s -= omega_bv(eta, &z, &v_b(xi, &z, kk, l));
                        }
                        rslot[((al * k + be) * n + kk) * n + l] = s;
                    }
                }
            }
        }
    }
    Ok(GcrResidual::new(gauss, codazzi, ricci))
}
