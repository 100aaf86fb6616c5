//! Discrete exterior calculus on flat periodic tori.
//!
//! Cochain values are form components (not integrals over cells), so `d` is
//! a signed difference quotient and the Hodge star is a signed permutation of
//! components. A primal `q`-cell is the box `v + [0, h]^S` spanned by the
//! axis set `S`; its dual is the `(n − q)`-cell through the same center
//! spanning the complementary axes. Both are indexed by the base vertex `v`,
//! so `∗` maps a primal cochain onto a dual one index by index. Primal `d`
//! uses forward differences and dual `d` backward ones, which makes `δ` the
//! exact algebraic adjoint of `d`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::parse_header;

/// Relative residual at which the Green solver stops.
pub const CG_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TorusMesh {
    counts: Vec<usize>,
    periods: Vec<f64>,
}

impl TorusMesh {
    pub fn new(counts: &[usize], periods: &[f64]) -> Result<Self> {
        let n = counts.len();
        if !(2..=3).contains(&n) || periods.len() != n {
            return Err(Error::InvalidChart(format!(
                "torus needs 2 or 3 axes with one period each, got {} counts and {} periods",
                n,
                periods.len()
            )));
        }
        if let Some(c) = counts.iter().find(|&&c| c < 4) {
            return Err(Error::InvalidChart(format!("torus resolution {c} < 4")));
        }
        if periods.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidChart("torus periods must be positive".into()));
        }
        Ok(Self {
            counts: counts.to_vec(),
            periods: periods.to_vec(),
        })
    }

    /// `N × N` torus with both periods `l`.
    pub fn square(n: usize, l: f64) -> Result<Self> {
        Self::new(&[n, n], &[l, l])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.periods[axis] / self.counts[axis] as f64
    }

    pub fn num_vertices(&self) -> usize {
        self.counts.iter().product()
    }

    /// Measure of one top-dimensional cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.periods.iter().product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.counts[axis + 1..].iter().product()
    }

    pub fn multi_index(&self, mut v: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dim()).rev() {
            out[axis] = v % self.counts[axis];
            v /= self.counts[axis];
        }
        out
    }

    pub fn vertex_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &c)| acc * c + i % c)
    }

    /// Neighbor of `v` one step along `axis`, wrapping around.
    pub fn shifted(&self, v: usize, axis: usize, forward: bool) -> usize {
        let c = self.counts[axis];
        let s = self.stride(axis);
        let i = (v / s) % c;
        let j = if forward { (i + 1) % c } else { (i + c - 1) % c };
        v - i * s + j * s
    }

    pub fn vertex_coords(&self, v: usize) -> [f64; 3] {
        let m = self.multi_index(v);
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = m[a] as f64 * self.spacing(a);
        }
        x
    }

    /// Axis sets of size `q` as bitmasks, in lexicographic order of their
    /// sorted elements.
    pub fn axis_sets(&self, q: usize) -> Vec<u8> {
        let n = self.dim();
        let mut sets: Vec<u8> = (0u8..1 << n).filter(|m| m.count_ones() as usize == q).collect();
        sets.sort_by_key(|&m| bits(m).collect::<Vec<_>>());
        sets
    }

    pub fn num_cells(&self, q: usize) -> usize {
        self.num_vertices() * self.axis_sets(q).len()
    }

    /// Center of cell `(v, set)`. Primal cells extend forward along `set`;
    /// dual cells are centered on `v` along `set` and offset by half a step
    /// along the other axes.
    pub fn cell_center(&self, v: usize, set: u8, dual: bool) -> [f64; 3] {
        let mut x = self.vertex_coords(v);
        for a in 0..self.dim() {
            let along = set & (1 << a) != 0;
            if along != dual {
                x[a] += 0.5 * self.spacing(a);
            }
        }
        x
    }

    fn full_set(&self) -> u8 {
        (1u8 << self.dim()) - 1
    }
}

fn bits(m: u8) -> impl Iterator<Item = usize> {
    (0..8).filter(move |i| m & (1 << i) != 0)
}

/// Sign of the permutation sorting the concatenation `(S, T)`.
fn concat_sign(s: u8, t: u8) -> f64 {
    let inversions: u32 = bits(s).map(|a| bits(t).filter(|&b| b < a).count() as u32).sum();
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Position of each mask in `sets`.
fn positions(sets: &[u8]) -> [usize; 8] {
    let mut pos = [usize::MAX; 8];
    for (i, &s) in sets.iter().enumerate() {
        pos[s as usize] = i;
    }
    pos
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    mesh: TorusMesh,
    degree: usize,
    dual: bool,
    values: Vec<f64>,
}

impl Cochain {
    pub fn zeros(mesh: &TorusMesh, degree: usize, dual: bool) -> Result<Self> {
        if degree > mesh.dim() {
            return Err(Error::Degree { degree, dim: mesh.dim() });
        }
        Ok(Self {
            mesh: mesh.clone(),
            degree,
            dual,
            values: vec![0.0; mesh.num_cells(degree)],
        })
    }

    pub fn from_values(mesh: &TorusMesh, degree: usize, dual: bool, values: Vec<f64>) -> Result<Self> {
        let mut c = Self::zeros(mesh, degree, dual)?;
        if values.len() != c.values.len() {
            return Err(Error::ShapeMismatch(format!(
                "degree-{degree} cochain needs {} values, got {}",
                c.values.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        c.values = values;
        Ok(c)
    }

    /// Sample `f(center, set_index)` at every cell center.
    pub fn sample(
        mesh: &TorusMesh,
        degree: usize,
        dual: bool,
        f: impl Fn(&[f64], usize) -> f64,
    ) -> Result<Self> {
        let mut c = Self::zeros(mesh, degree, dual)?;
        let sets = mesh.axis_sets(degree);
        let ns = sets.len();
        for v in 0..mesh.num_vertices() {
            for (si, &s) in sets.iter().enumerate() {
                let x = mesh.cell_center(v, s, dual);
                c.values[v * ns + si] = f(&x[..mesh.dim()], si);
            }
        }
        Ok(c)
    }

    /// Cochain equal to `per_set[s]` on every cell of axis set `s`.
    pub fn constant(mesh: &TorusMesh, degree: usize, dual: bool, per_set: &[f64]) -> Result<Self> {
        let ns = mesh.axis_sets(degree.min(mesh.dim())).len();
        if per_set.len() != ns {
            return Err(Error::ShapeMismatch(format!("expected {ns} per-set values")));
        }
        Self::sample(mesh, degree, dual, |_, s| per_set[s])
    }

    pub fn mesh(&self) -> &TorusMesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_dual(&self) -> bool {
        self.dual
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn num_sets(&self) -> usize {
        self.values.len() / self.mesh.num_vertices()
    }

    pub fn get(&self, v: usize, set_index: usize) -> f64 {
        self.values[v * self.num_sets() + set_index]
    }

    fn compatible(&self, other: &Cochain) -> Result<()> {
        if self.mesh != other.mesh || self.degree != other.degree || self.dual != other.dual {
            return Err(Error::ShapeMismatch(format!(
                "cochains differ: degree {} ({}) vs degree {} ({})",
                self.degree,
                if self.dual { "dual" } else { "primal" },
                other.degree,
                if other.dual { "dual" } else { "primal" },
            )));
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn lin(&self, a: f64, other: &Cochain, b: f64) -> Result<Cochain> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (o, &y) in out.values.iter_mut().zip(&other.values) {
            *o = a * *o + b * y;
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Cochain {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Star-weighted inner product: cell volume times the Euclidean sum.
    pub fn inner(&self, other: &Cochain) -> Result<f64> {
        self.compatible(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.mesh.cell_volume())
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).expect("self-compatible").sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Serialize with header `torus n= N= L= q=` (plus `complex=dual`), then
    /// one line per vertex listing its cells in axis-set order.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut s = format!(
            "torus n={} N={} L={} q={}",
            self.mesh.dim(),
            join(self.mesh.counts.iter().map(|c| c.to_string()).collect()),
            join(self.mesh.periods.iter().map(|l| format!("{l:e}")).collect()),
            self.degree
        );
        if self.dual {
            s.push_str(" complex=dual");
        }
        s.push('\n');
        let ns = self.num_sets();
        for row in self.values.chunks(ns) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Cochain> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let hdr = parse_header(header, "torus", 1)?;
        let n: usize = hdr.get_one("n", 1)?;
        let counts: Vec<usize> = hdr.get_list("N", 1)?;
        let periods: Vec<f64> = hdr.get_list("L", 1)?;
        let q: usize = hdr.get_one("q", 1)?;
        let dual = match hdr.raw("complex") {
            None | Some("primal") => false,
            Some("dual") => true,
            Some(other) => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("unknown complex {other:?}"),
                })
            }
        };
        if counts.len() != n {
            return Err(Error::Parse {
                line: 1,
                msg: format!("n={n} but N has {} entries", counts.len()),
            });
        }
        let mesh = TorusMesh::new(&counts, &periods)?;
        if q > n {
            return Err(Error::Degree { degree: q, dim: n });
        }
        let ns = mesh.axis_sets(q).len();
        let mut values = Vec::with_capacity(mesh.num_cells(q));
        for (lineno, line) in lines {
            let before = values.len();
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    msg: format!("{tok:?}: {e}"),
                })?);
            }
            if values.len() - before != ns {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected {ns} values, found {}", values.len() - before),
                });
            }
        }
        Cochain::from_values(&mesh, q, dual, values)
    }
}

/// Exterior derivative: the signed coboundary divided by the spacings.
pub fn d(c: &Cochain) -> Result<Cochain> {
    let mesh = &c.mesh;
    let (n, q) = (mesh.dim(), c.degree);
    if q >= n {
        return Err(Error::Degree { degree: q, dim: n });
    }
    let lo = mesh.axis_sets(q);
    let hi = mesh.axis_sets(q + 1);
    let pos = positions(&lo);
    let (nlo, nhi) = (lo.len(), hi.len());
    let inv_h: Vec<f64> = (0..n).map(|a| 1.0 / mesh.spacing(a)).collect();
    // (axis, lower set index, positive orientation) for each boundary term
    let terms: Vec<Vec<(usize, usize, bool)>> = hi
        .iter()
        .map(|&t| {
            bits(t)
                .map(|i| {
                    let s = t & !(1 << i);
                    (i, pos[s as usize], bits(s).filter(|&j| j < i).count() % 2 == 0)
                })
                .collect()
        })
        .collect();
    let mut out = Cochain::zeros(mesh, q + 1, c.dual)?;
    for v in 0..mesh.num_vertices() {
        for (ti, tt) in terms.iter().enumerate() {
            let mut acc = 0.0;
            for &(i, si, positive) in tt {
                let (a, b) = if c.dual {
                    (c.values[v * nlo + si], c.values[mesh.shifted(v, i, false) * nlo + si])
                } else {
                    (c.values[mesh.shifted(v, i, true) * nlo + si], c.values[v * nlo + si])
                };
                let term = (a - b) * inv_h[i];
                if positive {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            out.values[v * nhi + ti] = acc;
        }
    }
    Ok(out)
}

/// Diagonal Hodge star; swaps the primal and dual complexes.
pub fn hodge_star(c: &Cochain) -> Cochain {
    let mesh = &c.mesh;
    let (n, q) = (mesh.dim(), c.degree);
    let from = mesh.axis_sets(q);
    let to = mesh.axis_sets(n - q);
    let pos = positions(&to);
    let full = mesh.full_set();
    let map: Vec<(usize, f64)> = from
        .iter()
        .map(|&s| (pos[(full & !s) as usize], concat_sign(s, full & !s)))
        .collect();
    let (nf, nt) = (from.len(), to.len());
    let mut values = vec![0.0; mesh.num_vertices() * nt];
    for v in 0..mesh.num_vertices() {
        for (si, &(ti, sign)) in map.iter().enumerate() {
            values[v * nt + ti] = sign * c.values[v * nf + si];
        }
    }
    Cochain {
        mesh: mesh.clone(),
        degree: n - q,
        dual: !c.dual,
        values,
    }
}

/// Codifferential `(−1)^{n(q+1)+1} ∗d∗`.
pub fn delta(c: &Cochain) -> Result<Cochain> {
    let (n, q) = (c.mesh.dim(), c.degree);
    if q == 0 {
        return Err(Error::Degree { degree: q, dim: n });
    }
    let out = hodge_star(&d(&hodge_star(c))?);
    Ok(if (n * (q + 1) + 1) % 2 == 0 { out } else { out.scale(-1.0) })
}

/// `dδ + δd`.
pub fn laplace(c: &Cochain) -> Result<Cochain> {
    let (n, q) = (c.mesh.dim(), c.degree);
    let down = if q > 0 { Some(d(&delta(c)?)?) } else { None };
    let up = if q < n { Some(delta(&d(c)?)?) } else { None };
    match (down, up) {
        (Some(a), Some(b)) => a.lin(1.0, &b, 1.0),
        (Some(a), None) | (None, Some(a)) => Ok(a),
        (None, None) => unreachable!("degree is always below or above something"),
    }
}

/// `∗d∗` on a 1-cochain: the divergence of the dual vector field.
pub fn div(c: &Cochain) -> Result<Cochain> {
    if c.degree != 1 {
        return Err(Error::Degree { degree: c.degree, dim: c.mesh.dim() });
    }
    Ok(hodge_star(&d(&hodge_star(c))?))
}

/// `d` on a 1-cochain: the generalized curl.
pub fn curl(c: &Cochain) -> Result<Cochain> {
    if c.degree != 1 {
        return Err(Error::Degree { degree: c.degree, dim: c.mesh.dim() });
    }
    d(c)
}

/// Constant cochains, one per axis set: a basis of the harmonic space.
pub fn harmonic_basis(mesh: &TorusMesh, degree: usize, dual: bool) -> Result<Vec<Cochain>> {
    let ns = mesh.axis_sets(degree).len();
    (0..ns)
        .map(|s| {
            let mut e = vec![0.0; ns];
            e[s] = 1.0;
            Cochain::constant(mesh, degree, dual, &e)
        })
        .collect()
}

/// Orthogonal projection onto the harmonic space (per-set means).
pub fn harmonic_projection(c: &Cochain) -> Cochain {
    let ns = c.num_sets();
    let nv = c.mesh.num_vertices() as f64;
    let mut means = vec![0.0; ns];
    for row in c.values.chunks(ns) {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= nv);
    let mut out = c.clone();
    for row in out.values.chunks_mut(ns) {
        row.copy_from_slice(&means);
    }
    out
}

/// Outcome of a Green solve.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenSolve {
    pub solution: Cochain,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients for `Δu = c − π_H c` on the complement of the
/// harmonic space, projecting out harmonic drift every iteration.
pub fn green_solve(c: &Cochain, tol: f64) -> Result<GreenSolve> {
    let b = c.lin(1.0, &harmonic_projection(c), -1.0)?;
    let bnorm = b.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = Cochain::zeros(&c.mesh, c.degree, c.dual)?;
    if bnorm == 0.0 {
        return Ok(GreenSolve {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let dot = |a: &Cochain, b: &Cochain| a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>();
    let cap = 10 * c.values.len();
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    for it in 1..=cap {
        let mut ap = laplace(&p)?;
        ap = ap.lin(1.0, &harmonic_projection(&ap), -1.0)?;
        let alpha = rs / dot(&p, &ap);
        for ((xv, rv), (pv, av)) in x.values.iter_mut().zip(r.values.iter_mut()).zip(p.values.iter().zip(&ap.values)) {
            *xv += alpha * pv;
            *rv -= alpha * av;
        }
        let rs_new = dot(&r, &r);
        let rel = rs_new.sqrt() / bnorm;
        if rel <= tol {
            let x = x.lin(1.0, &harmonic_projection(&x), -1.0)?;
            return Ok(GreenSolve {
                solution: x,
                iterations: it,
                relative_residual: rel,
            });
        }
        let beta = rs_new / rs;
        for (pv, rv) in p.values.iter_mut().zip(&r.values) {
            *pv = rv + beta * *pv;
        }
        rs = rs_new;
    }
    Err(Error::CgNonConvergence {
        iterations: cap,
        residual: rs.sqrt() / bnorm,
    })
}

/// Green operator `G c = Δ⁻¹(c − π_H c)`, solved to [`CG_TOL`].
pub fn green(c: &Cochain) -> Result<Cochain> {
    Ok(green_solve(c, CG_TOL)?.solution)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HodgeParts {
    pub harmonic: Cochain,
    pub exact: Cochain,
    pub coexact: Cochain,
}

/// `c = π_H c + dδGc + δdGc`.
pub fn hodge_decompose(c: &Cochain) -> Result<HodgeParts> {
    let (n, q) = (c.mesh.dim(), c.degree);
    let g = green(c)?;
    let zero = Cochain::zeros(&c.mesh, q, c.dual)?;
    let exact = if q > 0 { d(&delta(&g)?)? } else { zero.clone() };
    let coexact = if q < n { delta(&d(&g)?)? } else { zero };
    Ok(HodgeParts {
        harmonic: harmonic_projection(c),
        exact,
        coexact,
    })
}

/// `⟨c − π_H c, G c⟩^{1/2} + ‖π_H c‖`.
pub fn hminus1_norm(c: &Cochain) -> Result<f64> {
    let h = harmonic_projection(c);
    let rest = c.lin(1.0, &h, -1.0)?;
    let g = green(c)?;
    Ok(rest.inner(&g)?.max(0.0).sqrt() + h.norm())
}

/// `∫ ⟨a, b⟩ ψ`, with the product taken cell by cell and `ψ` evaluated at
/// cell centers.
pub fn weighted_pairing(a: &Cochain, b: &Cochain, psi: impl Fn(&[f64]) -> f64) -> Result<f64> {
    a.compatible(b)?;
    let mesh = &a.mesh;
    let sets = mesh.axis_sets(a.degree);
    let ns = sets.len();
    let mut sum = 0.0;
    for v in 0..mesh.num_vertices() {
        for (si, &s) in sets.iter().enumerate() {
            let i = v * ns + si;
            let x = mesh.cell_center(v, s, a.dual);
            sum += a.values[i] * b.values[i] * psi(&x[..mesh.dim()]);
        }
    }
    Ok(sum * mesh.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random(mesh: &TorusMesh, q: usize, dual: bool, seed: u64) -> Cochain {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..mesh.num_cells(q)).map(|_| rng.random_range(-1.0..1.0)).collect();
        Cochain::from_values(mesh, q, dual, vals).unwrap()
    }

    #[test]
    fn axis_set_order() {
        let m3 = TorusMesh::new(&[4, 4, 4], &[1.0; 3]).unwrap();
        assert_eq!(m3.axis_sets(1), vec![0b001, 0b010, 0b100]);
        assert_eq!(m3.axis_sets(2), vec![0b011, 0b101, 0b110]);
        assert_eq!(m3.num_cells(3), 64);
        assert!(TorusMesh::new(&[3, 4], &[1.0, 1.0]).is_err());
        assert!(TorusMesh::new(&[4], &[1.0]).is_err());
    }

    #[test]
    fn d_examples() {
        let mesh = TorusMesh::square(32, 2.0).unwrap();
        let one = Cochain::constant(&mesh, 0, false, &[1.0]).unwrap();
        assert_eq!(d(&one).unwrap().max_abs(), 0.0);
        let k = 2.0 * PI / 2.0;
        let s = Cochain::sample(&mesh, 0, false, |x, _| (k * x[0]).sin()).unwrap();
        let ds = d(&s).unwrap();
        let want = Cochain::sample(&mesh, 1, false, |x, i| if i == 0 { k * (k * x[0]).cos() } else { 0.0 }).unwrap();
        let err = ds.lin(1.0, &want, -1.0).unwrap().max_abs();
        let h = mesh.spacing(0);
        assert!(err < k.powi(3) * h * h / 24.0 * 1.01, "{err}");
        assert!(d(&Cochain::zeros(&mesh, 2, false).unwrap()).is_err());
    }

    #[test]
    fn dd_vanishes_bit_exactly_on_integer_data() {
        for mesh in [
            TorusMesh::square(64, 1.0).unwrap(),
            TorusMesh::new(&[8, 16, 4], &[1.0, 2.0, 0.5]).unwrap(),
        ] {
            for q in 0..mesh.dim() - 1 {
                for dual in [false, true] {
                    let mut rng = ChaCha8Rng::seed_from_u64(q as u64);
                    let vals = (0..mesh.num_cells(q)).map(|_| rng.random_range(-50..50) as f64).collect();
                    let c = Cochain::from_values(&mesh, q, dual, vals).unwrap();
                    let dd = d(&d(&c).unwrap()).unwrap();
                    assert!(dd.values().iter().all(|&v| v == 0.0));
                }
            }
        }
    }

    #[test]
    fn star_sign_law() {
        for mesh in [TorusMesh::square(6, 1.0).unwrap(), TorusMesh::new(&[4, 5, 6], &[1.0, 2.0, 3.0]).unwrap()] {
            let n = mesh.dim();
            for q in 0..=n {
                let c = random(&mesh, q, false, 3);
                let ss = hodge_star(&hodge_star(&c));
                let sign = if (q * (n - q)) % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(ss, c.scale(sign));
            }
        }
        let mesh = TorusMesh::square(6, 1.0).unwrap();
        let one = Cochain::constant(&mesh, 0, false, &[1.0]).unwrap();
        let vol = hodge_star(&one);
        assert_eq!((vol.degree(), vol.is_dual()), (2, true));
        assert!(vol.values().iter().all(|&v| v == 1.0));
        assert_eq!(hodge_star(&vol), one);
        // ∗dx = dy, ∗dy = −dx
        let dx = Cochain::constant(&mesh, 1, false, &[1.0, 0.0]).unwrap();
        let dy = Cochain::constant(&mesh, 1, true, &[0.0, 1.0]).unwrap();
        assert_eq!(hodge_star(&dx), dy);
    }

    #[test]
    fn delta_examples() {
        let mesh = TorusMesh::square(64, 1.0).unwrap();
        let c = Cochain::constant(&mesh, 1, false, &[1.0, -2.0]).unwrap();
        assert_eq!(delta(&c).unwrap().max_abs(), 0.0);
        let k = 2.0 * PI;
        let s = Cochain::sample(&mesh, 0, false, |x, _| (k * x[0]).sin()).unwrap();
        let lap = delta(&d(&s).unwrap()).unwrap();
        let err = lap.lin(1.0, &s, -k * k).unwrap().max_abs();
        assert!(err < k.powi(4) * mesh.spacing(0).powi(2) / 12.0 * 1.01, "{err}");
        assert!(delta(&s).is_err());
    }

    #[test]
    fn adjointness() {
        for mesh in [TorusMesh::new(&[16, 12], &[1.0, 3.0]).unwrap(), TorusMesh::new(&[6, 5, 4], &[1.0, 1.5, 2.0]).unwrap()] {
            for q in 1..=mesh.dim() {
                for dual in [false, true] {
                    let a = random(&mesh, q, dual, 10 + q as u64);
                    let b = random(&mesh, q - 1, dual, 20 + q as u64);
                    let lhs = delta(&a).unwrap().inner(&b).unwrap();
                    let rhs = a.inner(&d(&b).unwrap()).unwrap();
                    assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{q} {dual}: {lhs} {rhs}");
                }
            }
        }
    }

    #[test]
    fn laplace_symbol_and_harmonics() {
        let mesh = TorusMesh::square(32, 1.0).unwrap();
        let h = mesh.spacing(0);
        for k in [1.0, 3.0] {
            let c = Cochain::sample(&mesh, 0, false, |x, _| (2.0 * PI * k * x[0]).cos()).unwrap();
            let lam = 2.0 / (h * h) * (1.0 - (2.0 * PI * k * h).cos());
            let err = laplace(&c).unwrap().lin(1.0, &c, -lam).unwrap().max_abs();
            assert!(err < 1e-9 * lam, "{err}");
        }
        let dx = Cochain::constant(&mesh, 1, false, &[1.0, 0.0]).unwrap();
        assert_eq!(laplace(&dx).unwrap().max_abs(), 0.0);
        assert_eq!(harmonic_projection(&dx), dx);
        let s = Cochain::sample(&mesh, 0, false, |x, _| (2.0 * PI * x[1]).sin() + x[0].cos()).unwrap();
        assert!(harmonic_projection(&d(&s).unwrap()).max_abs() < 1e-14);
        let c = random(&mesh, 1, false, 5);
        let p = harmonic_projection(&c);
        assert!(harmonic_projection(&p).lin(1.0, &p, -1.0).unwrap().max_abs() < 1e-15);
        for e in harmonic_basis(&mesh, 1, false).unwrap() {
            assert!(c.lin(1.0, &p, -1.0).unwrap().inner(&e).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn green_examples() {
        let mesh = TorusMesh::square(32, 1.0).unwrap();
        let dx = Cochain::constant(&mesh, 1, false, &[1.0, 0.5]).unwrap();
        assert_eq!(green(&dx).unwrap().max_abs(), 0.0);
        let c = Cochain::sample(&mesh, 0, false, |x, _| (2.0 * PI * x[0]).cos()).unwrap();
        let h = mesh.spacing(0);
        let lam = 2.0 / (h * h) * (1.0 - (2.0 * PI * h).cos());
        let g = green(&c).unwrap();
        assert!(g.lin(1.0, &c, -1.0 / lam).unwrap().max_abs() < 1e-12);

        let a = random(&mesh, 0, false, 9);
        let lhs = d(&green(&a).unwrap()).unwrap();
        let rhs = green(&d(&a).unwrap()).unwrap();
        assert!(lhs.lin(1.0, &rhs, -1.0).unwrap().max_abs() < 1e-8);
        let sol = green_solve(&a, 1e-10).unwrap();
        assert!(sol.relative_residual <= 1e-10);
        let back = laplace(&sol.solution).unwrap();
        let target = a.lin(1.0, &harmonic_projection(&a), -1.0).unwrap();
        let rel = back.lin(1.0, &target, -1.0).unwrap().norm() / target.norm();
        assert!(rel < 1e-9, "{rel}");
    }

    #[test]
    fn decomposition_by_parts() {
        let mesh = TorusMesh::square(32, 1.0).unwrap();
        let k = 2.0 * PI;
        let harm = Cochain::constant(&mesh, 1, false, &[1.0, 0.0]).unwrap();
        let exact = d(&Cochain::sample(&mesh, 0, false, |x, _| (k * x[0]).sin() * (k * x[1]).cos()).unwrap()).unwrap();
        let face = Cochain::sample(&mesh, 2, false, |x, _| (k * x[0]).cos() + (2.0 * k * x[1]).sin()).unwrap();
        let coexact = delta(&face).unwrap();
        let c = harm.lin(1.0, &exact, 1.0).unwrap().lin(1.0, &coexact, 1.0).unwrap();
        let parts = hodge_decompose(&c).unwrap();
        assert!(parts.harmonic.lin(1.0, &harm, -1.0).unwrap().max_abs() < 1e-8);
        assert!(parts.exact.lin(1.0, &exact, -1.0).unwrap().max_abs() < 1e-8);
        assert!(parts.coexact.lin(1.0, &coexact, -1.0).unwrap().max_abs() < 1e-8);
        let total = c.norm().powi(2);
        let sum = parts.harmonic.norm().powi(2) + parts.exact.norm().powi(2) + parts.coexact.norm().powi(2);
        assert!((total - sum).abs() < 1e-8 * total);
    }

    #[test]
    fn hminus1_examples() {
        let mesh = TorusMesh::square(64, 1.0).unwrap();
        assert_eq!(hminus1_norm(&Cochain::zeros(&mesh, 0, false).unwrap()).unwrap(), 0.0);
        let h = mesh.spacing(0);
        for k in [1.0, 4.0] {
            let c = Cochain::sample(&mesh, 0, false, |x, _| (2.0 * PI * k * x[0]).cos()).unwrap();
            let lam = 2.0 / (h * h) * (1.0 - (2.0 * PI * k * h).cos());
            assert_abs_diff_eq!(hminus1_norm(&c).unwrap(), 0.5f64.sqrt() / lam.sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn text_roundtrip() {
        let mesh = TorusMesh::new(&[4, 5], &[1.0, 2.5]).unwrap();
        for dual in [false, true] {
            let c = random(&mesh, 1, dual, 1);
            let t = c.to_text();
            assert!(t.starts_with("torus n=2 N=4,5 L=1e0,2.5e0 q=1"));
            assert_eq!(Cochain::from_text(&t).unwrap(), c);
        }
        assert!(Cochain::from_text("torus n=2 N=4,4 L=1,1 q=3\n").is_err());
    }
}
