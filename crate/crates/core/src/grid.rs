//! Rectangular chart domains and tensor-valued fields sampled on them.
//!
//! Nodes are stored row-major with axis 0 slowest. A [`ChartField`] keeps
//! one contiguous block of components per node, so `data[node * ncomp + c]`
//! is component `c` at `node`. Components themselves are flattened row-major
//! over the field's component shape (e.g. `[n, n]` for a metric).

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// A rectangular grid chart in 2 or 3 dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    counts: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
}

impl Chart {
    pub fn new(counts: &[usize], spacing: &[f64], origin: &[f64]) -> Result<Self> {
        let n = counts.len();
        if !(2..=3).contains(&n) {
            return Err(Error::InvalidChart(format!("dimension {n} not in 2..=3")));
        }
        if spacing.len() != n || origin.len() != n {
            return Err(Error::InvalidChart(
                "counts, spacing and origin must have the same length".into(),
            ));
        }
        if let Some(c) = counts.iter().find(|&&c| c < 2) {
            return Err(Error::InvalidChart(format!("node count {c} < 2")));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidChart("spacings must be positive and finite".into()));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidChart("origin must be finite".into()));
        }
        Ok(Self {
            counts: counts.to_vec(),
            spacing: spacing.to_vec(),
            origin: origin.to_vec(),
        })
    }

    /// Chart covering the box `[lo, hi]` with `counts[i]` nodes along axis `i`,
    /// endpoints included.
    pub fn from_box(lo: &[f64], hi: &[f64], counts: &[usize]) -> Result<Self> {
        if lo.len() != counts.len() || hi.len() != counts.len() {
            return Err(Error::InvalidChart("box corners and counts disagree in length".into()));
        }
        let spacing: Vec<f64> = lo
            .iter()
            .zip(hi)
            .zip(counts)
            .map(|((a, b), &c)| (b - a) / (c.max(2) - 1) as f64)
            .collect();
        Self::new(counts, &spacing, lo)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn num_nodes(&self) -> usize {
        self.counts.iter().product()
    }

    /// Largest grid spacing.
    pub fn h_max(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    /// Product of the side lengths.
    pub fn volume(&self) -> f64 {
        self.counts
            .iter()
            .zip(&self.spacing)
            .map(|(&c, &h)| (c - 1) as f64 * h)
            .product()
    }

    /// Stride of `axis` in the flat node numbering.
    pub fn stride(&self, axis: usize) -> usize {
        self.counts[axis + 1..].iter().product()
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn multi_index(&self, mut node: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.dim()).rev() {
            out[axis] = node % self.counts[axis];
            node /= self.counts[axis];
        }
        out
    }

    pub fn coords(&self, node: usize) -> [f64; 3] {
        let m = self.multi_index(node);
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = self.origin[a] + m[a] as f64 * self.spacing[a];
        }
        x
    }

    /// True when the node is not on the outer ring of the chart.
    pub fn is_interior(&self, node: usize) -> bool {
        self.is_inner(node, 1)
    }

    /// True when the node is at least `margin` nodes away from every face.
    pub fn is_inner(&self, node: usize, margin: usize) -> bool {
        let m = self.multi_index(node);
        (0..self.dim()).all(|a| m[a] >= margin && m[a] + margin < self.counts[a])
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.inner_nodes(1)
    }

    pub fn inner_nodes(&self, margin: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes()).filter(move |&p| self.is_inner(p, margin))
    }

    /// Tensor-product trapezoid weight of a node.
    pub fn trapezoid_weight(&self, node: usize) -> f64 {
        let m = self.multi_index(node);
        (0..self.dim())
            .map(|a| {
                let end = m[a] == 0 || m[a] + 1 == self.counts[a];
                if end {
                    0.5 * self.spacing[a]
                } else {
                    self.spacing[a]
                }
            })
            .product()
    }

    /// Spanning tree of the node grid rooted at `base`: walk along axis 0
    /// from the base, then sweep axis 1 from every node reached so far, then
    /// axis 2. Parents always precede children in the returned order.
    pub fn canonical_path(&self, base: usize) -> Vec<PathStep> {
        let mut steps = vec![PathStep {
            node: base,
            parent: None,
        }];
        for axis in 0..self.dim() {
            let stride = self.stride(axis);
            let m = self.counts[axis];
            let reached = steps.len();
            for s in 0..reached {
                let start = steps[s].node;
                let i0 = self.multi_index(start)[axis];
                let mut prev = start;
                for _ in i0 + 1..m {
                    let node = prev + stride;
                    steps.push(PathStep {
                        node,
                        parent: Some((prev, axis, 1.0)),
                    });
                    prev = node;
                }
                let mut prev = start;
                for _ in (0..i0).rev() {
                    let node = prev - stride;
                    steps.push(PathStep {
                        node,
                        parent: Some((prev, axis, -1.0)),
                    });
                    prev = node;
                }
            }
        }
        steps
    }

    /// Same chart with every axis refined to `count` nodes over the same box.
    pub fn with_counts(&self, counts: &[usize]) -> Result<Self> {
        let hi: Vec<f64> = (0..self.dim())
            .map(|a| self.origin[a] + (self.counts[a] - 1) as f64 * self.spacing[a])
            .collect();
        Self::from_box(&self.origin, &hi, counts)
    }
}

/// One node of [`Chart::canonical_path`]: the node and, except for the root,
/// its parent, the axis of the connecting edge and the direction (+1 when
/// `node = parent + e_axis`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathStep {
    pub node: usize,
    pub parent: Option<(usize, usize, f64)>,
}

/// Tensor-valued samples on a [`Chart`].
#[derive(Clone, Debug, PartialEq)]
pub struct ChartField {
    chart: Chart,
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl ChartField {
    pub fn zeros(chart: &Chart, shape: &[usize]) -> Self {
        let ncomp: usize = shape.iter().product();
        Self {
            chart: chart.clone(),
            shape: shape.to_vec(),
            data: vec![0.0; ncomp * chart.num_nodes()],
        }
    }

    pub fn from_values(chart: &Chart, shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let ncomp: usize = shape.iter().product();
        if data.len() != ncomp * chart.num_nodes() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} nodes x {} components",
                data.len(),
                chart.num_nodes(),
                ncomp
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            chart: chart.clone(),
            shape: shape.to_vec(),
            data,
        })
    }

    /// Sample a closure at every node. The closure receives the node
    /// coordinates and fills the component slice.
    pub fn from_fn<F>(chart: &Chart, shape: &[usize], mut f: F) -> Self
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut out = Self::zeros(chart, shape);
        let nc = out.ncomp();
        let dim = chart.dim();
        for p in 0..chart.num_nodes() {
            let x = chart.coords(p);
            f(&x[..dim], &mut out.data[p * nc..(p + 1) * nc]);
        }
        out
    }

    pub fn scalar_fn<F: Fn(&[f64]) -> f64>(chart: &Chart, f: F) -> Self {
        Self::from_fn(chart, &[], |x, out| out[0] = f(x))
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ncomp(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn node(&self, p: usize) -> &[f64] {
        let nc = self.ncomp();
        &self.data[p * nc..(p + 1) * nc]
    }

    pub fn node_mut(&mut self, p: usize) -> &mut [f64] {
        let nc = self.ncomp();
        &mut self.data[p * nc..(p + 1) * nc]
    }

    /// Flat component offset of a multi-index into the component shape.
    pub fn comp_offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &s)| acc * s + i)
    }

    pub fn get(&self, p: usize, idx: &[usize]) -> f64 {
        self.data[p * self.ncomp() + self.comp_offset(idx)]
    }

    pub fn set(&mut self, p: usize, idx: &[usize], v: f64) {
        let o = p * self.ncomp() + self.comp_offset(idx);
        self.data[o] = v;
    }

    pub fn is_scalar(&self) -> bool {
        self.shape.is_empty()
    }

    /// Extract one flat component as a scalar field.
    pub fn component(&self, c: usize) -> ChartField {
        let nc = self.ncomp();
        let data = (0..self.chart.num_nodes()).map(|p| self.data[p * nc + c]).collect();
        ChartField {
            chart: self.chart.clone(),
            shape: vec![],
            data,
        }
    }

    pub fn same_chart(&self, other: &ChartField) -> Result<()> {
        if self.chart != other.chart {
            return Err(Error::ShapeMismatch("fields live on different charts".into()));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ChartField {
        ChartField {
            chart: self.chart.clone(),
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ChartField, f: impl Fn(f64, f64) -> f64) -> Result<ChartField> {
        self.same_chart(other)?;
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "component shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(ChartField {
            chart: self.chart.clone(),
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &ChartField, b: f64) -> Result<ChartField> {
        self.zip_map(other, |x, y| a * x + b * y)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max norm over interior nodes (boundary ring excluded).
    pub fn max_abs_interior(&self) -> f64 {
        self.max_abs_inner(1)
    }

    /// Max norm over nodes at least `margin` away from the boundary.
    pub fn max_abs_inner(&self, margin: usize) -> f64 {
        let nc = self.ncomp();
        self.chart
            .inner_nodes(margin)
            .flat_map(|p| self.data[p * nc..(p + 1) * nc].iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L² norm over interior nodes, each node weighted by its cell volume.
    pub fn l2_interior(&self) -> f64 {
        self.l2_inner(1)
    }

    pub fn l2_inner(&self, margin: usize) -> f64 {
        let nc = self.ncomp();
        let cell: f64 = self.chart.spacing.iter().product();
        let s: f64 = self
            .chart
            .inner_nodes(margin)
            .map(|p| self.data[p * nc..(p + 1) * nc].iter().map(|v| v * v).sum::<f64>())
            .sum();
        (s * cell).sqrt()
    }

    /// Derivative along `axis`: second-order central differences inside,
    /// three-point one-sided stencils on the boundary.
    pub fn partial(&self, axis: usize) -> Result<ChartField> {
        let dim = self.chart.dim();
        if axis >= dim {
            return Err(Error::AxisOutOfRange { axis, dim });
        }
        let nc = self.ncomp();
        let m = self.chart.counts[axis];
        let h = self.chart.spacing[axis];
        let stride = self.chart.stride(axis) * nc;
        let mut out = vec![0.0; self.data.len()];
        for p in 0..self.chart.num_nodes() {
            let i = self.chart.multi_index(p)[axis];
            let base = p * nc;
            for c in 0..nc {
                let at = |k: isize| self.data[(base as isize + k * stride as isize) as usize + c];
                out[base + c] = if m == 2 {
                    if i == 0 {
                        (at(1) - at(0)) / h
                    } else {
                        (at(0) - at(-1)) / h
                    }
                } else if i == 0 {
                    (4.0 * (at(1) - at(0)) - (at(2) - at(0))) / (2.0 * h)
                } else if i + 1 == m {
                    ((at(-2) - at(0)) - 4.0 * (at(-1) - at(0))) / (2.0 * h)
                } else {
                    (at(1) - at(-1)) / (2.0 * h)
                };
            }
        }
        Ok(ChartField {
            chart: self.chart.clone(),
            shape: self.shape.clone(),
            data: out,
        })
    }

    /// Partials along every axis, in axis order.
    pub fn gradient(&self) -> Result<Vec<ChartField>> {
        (0..self.chart.dim()).map(|a| self.partial(a)).collect()
    }

    /// Tensor-product trapezoid rule of a scalar field, optionally times a
    /// scalar weight such as the Riemannian volume density.
    pub fn integrate(&self, weight: Option<&ChartField>) -> Result<f64> {
        if !self.is_scalar() {
            return Err(Error::ShapeMismatch(format!(
                "integrate needs a scalar field, got shape {:?}",
                self.shape
            )));
        }
        if let Some(w) = weight {
            self.same_chart(w)?;
            if !w.is_scalar() {
                return Err(Error::ShapeMismatch("integration weight must be scalar".into()));
            }
        }
        let mut sum = 0.0;
        for p in 0..self.chart.num_nodes() {
            let w = weight.map_or(1.0, |w| w.data[p]);
            sum += self.chart.trapezoid_weight(p) * self.data[p] * w;
        }
        Ok(sum)
    }

    /// Serialize to the line-oriented text format.
    pub fn to_text(&self) -> String {
        let join_usize = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let join_f64 = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        let mut s = format!(
            "chart n={} shape={} spacing={} comps={}",
            self.chart.dim(),
            join_usize(&self.chart.counts),
            join_f64(&self.chart.spacing),
            join_usize(&self.shape)
        );
        if self.chart.origin.iter().any(|&o| o != 0.0) {
            let _ = write!(s, " origin={}", join_f64(&self.chart.origin));
        }
        s.push('\n');
        let nc = self.ncomp();
        for p in 0..self.chart.num_nodes() {
            let row: Vec<String> = self.data[p * nc..(p + 1) * nc]
                .iter()
                .map(|v| format!("{v:e}"))
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<ChartField> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let hdr = parse_header(header, "chart", 1)?;
        let n: usize = hdr.get_one("n", 1)?;
        let counts: Vec<usize> = hdr.get_list("shape", 1)?;
        let spacing: Vec<f64> = hdr.get_list("spacing", 1)?;
        let comps: Vec<usize> = hdr.get_list("comps", 1)?;
        let origin: Vec<f64> = match hdr.raw("origin") {
            Some(_) => hdr.get_list("origin", 1)?,
            None => vec![0.0; n],
        };
        if counts.len() != n {
            return Err(Error::Parse {
                line: 1,
                msg: format!("n={n} but shape has {} entries", counts.len()),
            });
        }
        let chart = Chart::new(&counts, &spacing, &origin)?;
        let nc: usize = comps.iter().product();
        let mut data = Vec::with_capacity(nc * chart.num_nodes());
        for (lineno, line) in lines {
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    msg: format!("{tok:?}: {e}"),
                })?);
            }
            if data.len() - before != nc {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected {nc} components, found {}", data.len() - before),
                });
            }
        }
        ChartField::from_values(&chart, &comps, data)
    }
}

/// `key=value` tokens following a leading keyword.
pub(crate) struct Header<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

pub(crate) fn parse_header<'a>(line: &'a str, keyword: &str, lineno: usize) -> Result<Header<'a>> {
    let mut toks = line.split_whitespace();
    if toks.next() != Some(keyword) {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("header must start with `{keyword}`"),
        });
    }
    let mut pairs = Vec::new();
    for t in toks {
        let (k, v) = t.split_once('=').ok_or(Error::Parse {
            line: lineno,
            msg: format!("malformed header token {t:?}"),
        })?;
        pairs.push((k, v));
    }
    Ok(Header { pairs })
}

impl<'a> Header<'a> {
    pub(crate) fn raw(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    pub(crate) fn get_one<T: std::str::FromStr>(&self, key: &str, line: usize) -> Result<T> {
        let v = self.raw(key).ok_or(Error::Parse {
            line,
            msg: format!("missing `{key}`"),
        })?;
        v.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad value for `{key}`: {v:?}"),
        })
    }

    pub(crate) fn get_list<T: std::str::FromStr>(&self, key: &str, line: usize) -> Result<Vec<T>> {
        let v = self.raw(key).ok_or(Error::Parse {
            line,
            msg: format!("missing `{key}`"),
        })?;
        if v.is_empty() {
            return Ok(vec![]);
        }
        v.split(',')
            .map(|s| {
                s.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad entry {s:?} in `{key}`"),
                })
            })
            .collect()
    }
}
