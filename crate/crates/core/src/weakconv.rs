//! Sequence generators and convergence diagnostics for compensated
//! compactness: the div-curl pairing, the Fakir's carpet concentration
//! example, equi-integrability, and weak rigidity of `(g, h, κ)` along
//! families of immersions.
//!
//! Weak convergence is certified against a fixed finite dictionary: a family
//! converges weakly when its dictionary coefficients form a Cauchy tail over
//! the last three ε and agree with those of the family's declared limit.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dec::{self, Cochain, TorusMesh};
use crate::error::{Error, Result};
use crate::gcr::{gcr_residual, Equation, NORM_MARGIN};
use crate::geometry::{self, GeometricData, ImmersionField, MetricField, SecondFormField};
use crate::grid::{Chart, ChartField};
use crate::presets::Preset;

/// Oscillations need at least this many cells per period.
pub const MIN_CELLS_PER_PERIOD: f64 = 8.0;
/// Exponent of the uniform `L^p` bound checked along immersion families.
pub const DEFAULT_P: f64 = 4.0;
/// Largest accepted max/min ratio of the `L^p` norms across a family.
pub const LP_RATIO_MAX: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SequenceKind {
    OscillationPair,
    Fakir,
    CylinderFamily,
    CorrugationFamily,
    PerturbedGcr,
}

impl SequenceKind {
    pub const NAMES: [&'static str; 5] = [
        "oscillation_pair",
        "fakir",
        "cylinder_family",
        "corrugation_family",
        "perturbed_gcr",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SequenceKind::OscillationPair => "oscillation_pair",
            SequenceKind::Fakir => "fakir",
            SequenceKind::CylinderFamily => "cylinder_family",
            SequenceKind::CorrugationFamily => "corrugation_family",
            SequenceKind::PerturbedGcr => "perturbed_gcr",
        }
    }

    pub fn is_immersion_family(&self) -> bool {
        matches!(self, SequenceKind::CylinderFamily | SequenceKind::CorrugationFamily)
    }

    /// Chart used by the rigidity experiment with `nodes` nodes along the
    /// resolved axes.
    pub fn chart(&self, nodes: usize) -> Result<Chart> {
        match self {
            SequenceKind::CylinderFamily => Chart::from_box(&[0.0, 0.0], &[1.0, 1.0], &[nodes, nodes]),
            SequenceKind::CorrugationFamily => Preset::Corrugation { epsilon: 1.0 }.chart(nodes),
            SequenceKind::PerturbedGcr => Preset::Sphere.chart(nodes),
            _ => Err(Error::InvalidArgument(format!("{} has no chart", self.name()))),
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = match s.replace('-', "_").as_str() {
            "oscillation" => "oscillation_pair".to_string(),
            "cylinder" => "cylinder_family".to_string(),
            "corrugation" => "corrugation_family".to_string(),
            "perturbed" => "perturbed_gcr".to_string(),
            other => other.to_string(),
        };
        Self::NAMES
            .iter()
            .position(|n| *n == norm)
            .map(|i| {
                [
                    SequenceKind::OscillationPair,
                    SequenceKind::Fakir,
                    SequenceKind::CylinderFamily,
                    SequenceKind::CorrugationFamily,
                    SequenceKind::PerturbedGcr,
                ][i]
            })
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown sequence kind '{s}' (expected one of {})",
                    Self::NAMES.join(", ")
                ))
            })
    }
}

/// An ε-indexed family and its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    /// Strictly decreasing, positive. For the Fakir family `ε = 1/m`.
    pub epsilons: Vec<f64>,
    /// Oscillation pair only: use `ω = τ = cos(x/ε) dx`.
    pub negative_control: bool,
    /// Limit radius of the cylinder family.
    pub radius: f64,
    /// Forcing amplitude of the perturbed family.
    pub amplitude: f64,
    pub seed: u64,
    /// Dictionary Fourier cutoff.
    pub modes: usize,
}

impl SequenceSpec {
    pub fn new(kind: SequenceKind, epsilons: &[f64]) -> Result<Self> {
        let spec = Self {
            kind,
            epsilons: epsilons.to_vec(),
            negative_control: false,
            radius: 1.0,
            amplitude: 1.0,
            seed: 0,
            modes: 2,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// ε = 1/m for each `m`.
    pub fn fakir(ms: &[u64]) -> Result<Self> {
        Self::new(SequenceKind::Fakir, &ms.iter().map(|&m| 1.0 / m as f64).collect::<Vec<_>>())
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::InvalidArgument("empty epsilon list".into()));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument("epsilons must be positive".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("epsilons must be strictly decreasing".into()));
        }
        if self.kind == SequenceKind::Fakir && self.fakir_ms().iter().any(|&m| m < 2) {
            return Err(Error::InvalidArgument("fakir needs m >= 2".into()));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidArgument("radius must be positive".into()));
        }
        Ok(())
    }

    pub fn fakir_ms(&self) -> Vec<u64> {
        self.epsilons.iter().map(|e| (1.0 / e).round() as u64).collect()
    }

    pub fn finest(&self) -> f64 {
        *self.epsilons.last().expect("validated")
    }
}

/// Outcome label of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Converges,
    Fails,
    Rigid,
    RigidApproximate,
    NotRigid,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Converges => "converges",
            Verdict::Fails => "fails",
            Verdict::Rigid => "rigid",
            Verdict::RigidApproximate => "rigid (approximate)",
            Verdict::NotRigid => "not rigid",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub epsilon: f64,
    pub diagnostic: String,
    pub value: f64,
}

/// Rows of `(ε, diagnostic, value)` plus free-form metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<TableRow>,
    pub metadata: Vec<(String, String)>,
}

impl ConvergenceTable {
    pub fn push(&mut self, epsilon: f64, diagnostic: impl Into<String>, value: f64) {
        self.rows.push(TableRow {
            epsilon,
            diagnostic: diagnostic.into(),
            value,
        });
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.metadata.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.metadata.push((key, value)),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get(&self, epsilon: f64, diagnostic: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.epsilon == epsilon && r.diagnostic == diagnostic)
            .map(|r| r.value)
    }

    /// `(ε, value)` pairs of one diagnostic, in row order.
    pub fn series(&self, diagnostic: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.diagnostic == diagnostic)
            .map(|r| (r.epsilon, r.value))
            .collect()
    }

    /// Rows whose diagnostic starts with `prefix`.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a TableRow> + 'a {
        self.rows.iter().filter(move |r| r.diagnostic.starts_with(prefix))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,diagnostic,value\n");
        for r in &self.rows {
            s.push_str(&format!("{:.14e},{},{:.14e}\n", r.epsilon, r.diagnostic, r.value));
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Dictionary

/// Tensor Fourier modes up to a cutoff plus polynomials of degree 1 and 2,
/// in coordinates normalized to `[0, 1]` over a 2D box. Every entry has sup
/// norm 1 on the box.
#[derive(Clone, Debug, PartialEq)]
pub struct Dictionary {
    lo: [f64; 2],
    hi: [f64; 2],
    cutoff: usize,
    entries: Vec<DictEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum DictEntry {
    /// `(mode, is_sine)` per axis.
    Fourier([(usize, bool); 2]),
    /// Exponents of `ξ` and `η`.
    Monomial([u32; 2]),
}

impl Dictionary {
    pub fn new(lo: [f64; 2], hi: [f64; 2], cutoff: usize) -> Self {
        let axis_modes: Vec<(usize, bool)> = (0..=cutoff)
            .flat_map(|a| if a == 0 { vec![(0, false)] } else { vec![(a, false), (a, true)] })
            .collect();
        let mut entries = Vec::new();
        for &mx in &axis_modes {
            for &my in &axis_modes {
                entries.push(DictEntry::Fourier([mx, my]));
            }
        }
        for e in [[1, 0], [0, 1], [2, 0], [1, 1], [0, 2]] {
            entries.push(DictEntry::Monomial(e));
        }
        Self { lo, hi, cutoff, entries }
    }

    pub fn for_chart(chart: &Chart, cutoff: usize) -> Self {
        let (o, s, c) = (chart.origin(), chart.spacing(), chart.counts());
        Self::new(
            [o[0], o[1]],
            [o[0] + (c[0] - 1) as f64 * s[0], o[1] + (c[1] - 1) as f64 * s[1]],
            cutoff,
        )
    }

    pub fn for_torus(mesh: &TorusMesh, cutoff: usize) -> Self {
        let l = mesh.periods();
        Self::new([0.0, 0.0], [l[0], l[1]], cutoff)
    }

    pub fn id(&self) -> String {
        format!("fourier{}+poly2", self.cutoff)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, m: usize) -> String {
        match self.entries[m] {
            DictEntry::Fourier(modes) => {
                let part = |(a, sine): (usize, bool)| format!("{}{}", if sine { "sin" } else { "cos" }, a);
                format!("{}*{}", part(modes[0]), part(modes[1]))
            }
            DictEntry::Monomial([a, b]) => format!("xi^{a}*eta^{b}"),
        }
    }

    /// Factor of entry `m` along `axis` at coordinate `x`; entries are
    /// products of their two factors.
    pub fn factor(&self, m: usize, axis: usize, x: f64) -> f64 {
        let t = (x - self.lo[axis]) / (self.hi[axis] - self.lo[axis]);
        match self.entries[m] {
            DictEntry::Fourier(modes) => {
                let (a, sine) = modes[axis];
                let arg = TAU * a as f64 * t;
                if sine {
                    arg.sin()
                } else {
                    arg.cos()
                }
            }
            DictEntry::Monomial(e) => t.powi(e[axis] as i32),
        }
    }

    pub fn eval(&self, m: usize, x: &[f64]) -> f64 {
        self.factor(m, 0, x[0]) * self.factor(m, 1, x[1])
    }
}

/// `∫ f_c ψ_m` over the chart for every component `c` and dictionary entry
/// `m`, component-major. Trapezoid rule in coordinate measure.
pub fn chart_coefficients(field: &ChartField, dict: &Dictionary) -> Vec<f64> {
    let chart = field.chart();
    let nc = field.ncomp();
    let mut out = vec![0.0; nc * dict.len()];
    for p in 0..chart.num_nodes() {
        let w = chart.trapezoid_weight(p);
        let x = chart.coords(p);
        let vals = field.node(p);
        for m in 0..dict.len() {
            let psi = w * dict.eval(m, &x);
            for c in 0..nc {
                out[c * dict.len() + m] += vals[c] * psi;
            }
        }
    }
    out
}

/// `∫ c_S ψ_m` for every axis set `S` and dictionary entry `m`, set-major.
/// The dictionary only sees the first two coordinates.
pub fn cochain_coefficients(c: &Cochain, dict: &Dictionary) -> Vec<f64> {
    let mesh = c.mesh();
    let sets = mesh.axis_sets(c.degree());
    let ns = sets.len();
    let nd = dict.len();
    let mut out = vec![0.0; ns * nd];
    if mesh.dim() == 2 {
        // separable sums: Σ_i F_x(x_i) Σ_j c_ij F_y(y_j)
        let (nx, ny) = (mesh.counts()[0], mesh.counts()[1]);
        for (si, &s) in sets.iter().enumerate() {
            let o = mesh.cell_center(0, s, c.is_dual());
            let xs: Vec<f64> = (0..nx).map(|i| o[0] + i as f64 * mesh.spacing(0)).collect();
            let ys: Vec<f64> = (0..ny).map(|j| o[1] + j as f64 * mesh.spacing(1)).collect();
            for m in 0..nd {
                let fy: Vec<f64> = ys.iter().map(|&y| dict.factor(m, 1, y)).collect();
                let mut total = 0.0;
                for (i, &x) in xs.iter().enumerate() {
                    let row: f64 = (0..ny).map(|j| c.get(i * ny + j, si) * fy[j]).sum();
                    total += dict.factor(m, 0, x) * row;
                }
                out[si * nd + m] = total;
            }
        }
    } else {
        for v in 0..mesh.num_vertices() {
            for (si, &s) in sets.iter().enumerate() {
                let val = c.get(v, si);
                if val == 0.0 {
                    continue;
                }
                let x = mesh.cell_center(v, s, c.is_dual());
                for m in 0..nd {
                    out[si * nd + m] += val * dict.eval(m, &x);
                }
            }
        }
    }
    let vol = mesh.cell_volume();
    out.iter_mut().for_each(|v| *v *= vol);
    out
}

/// Per-ε coefficient vectors and the declared limit, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakLimit {
    pub epsilons: Vec<f64>,
    pub coefficients: Vec<Vec<f64>>,
    /// Largest pairwise difference over the tail.
    pub tail_spread: f64,
    /// Coefficients at the finest ε when the tail is Cauchy within `tol`.
    pub limit: Option<Vec<f64>>,
}

impl WeakLimit {
    pub fn is_declared(&self) -> bool {
        self.limit.is_some()
    }

    /// Max distance between the declared limit and `target`.
    pub fn distance_to(&self, target: &[f64]) -> Option<f64> {
        self.limit
            .as_ref()
            .map(|l| l.iter().zip(target).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs())))
    }
}

/// Tail Cauchy test over the last three ε (all of them when fewer).
pub fn weak_limit_estimate(epsilons: &[f64], coefficients: Vec<Vec<f64>>, tol: f64) -> WeakLimit {
    let start = coefficients.len().saturating_sub(3);
    let tail = &coefficients[start..];
    let mut spread: f64 = 0.0;
    for (i, a) in tail.iter().enumerate() {
        for b in &tail[i + 1..] {
            for (x, y) in a.iter().zip(b) {
                spread = spread.max((x - y).abs());
            }
        }
    }
    let limit = (spread <= tol).then(|| coefficients.last().cloned()).flatten();
    WeakLimit {
        epsilons: epsilons.to_vec(),
        coefficients,
        tail_spread: spread,
        limit,
    }
}

// ---------------------------------------------------------------------------
// Fakir's carpet

/// Nonnegative rational number in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    pub num: u128,
    pub den: u128,
}

impl Rational {
    pub fn new(num: u128, den: u128) -> Self {
        fn gcd(a: u128, b: u128) -> u128 {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(num, den).max(1);
        Self { num: num / g, den: den / g }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Support intervals `[j/m, j/m + 1/m²] ∩ (0, 1)` in units of `1/m²`.
fn fakir_intervals(m: u64) -> impl Iterator<Item = (u128, u128)> {
    let (m, m2) = (m as u128, (m as u128) * (m as u128));
    (1..=m).filter_map(move |j| {
        let (a, b) = (j * m, (j * m + 1).min(m2));
        (b > a).then_some((a, b))
    })
}

fn check_m(m: u64) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("fakir needs m >= 2, got {m}")));
    }
    Ok(())
}

/// `∫⟨u, v⟩` over the unit cube as an exact rational.
pub fn fakir_pairing_exact(m: u64) -> Result<Rational> {
    check_m(m)?;
    // ⟨u, v⟩ = m on the support; the total length is counted in units of 1/m²
    let len: u128 = fakir_intervals(m).map(|(a, b)| b - a).sum();
    Ok(Rational::new(len * m as u128, (m as u128).pow(2)))
}

pub fn fakir_pairing(m: u64) -> Result<f64> {
    Ok(fakir_pairing_exact(m)?.value())
}

/// Polynomial test functions on the unit cube with closed-form norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestPolynomial {
    /// `1`.
    Constant,
    /// `x₁`.
    Linear,
    /// `x₁(1 − x₁)`.
    Bump,
    /// `x₁² x₂`.
    Cubic,
}

impl TestPolynomial {
    pub const NONCONSTANT: [TestPolynomial; 3] = [TestPolynomial::Linear, TestPolynomial::Bump, TestPolynomial::Cubic];

    pub fn name(&self) -> &'static str {
        match self {
            TestPolynomial::Constant => "one",
            TestPolynomial::Linear => "x1",
            TestPolynomial::Bump => "x1(1-x1)",
            TestPolynomial::Cubic => "x1^2*x2",
        }
    }

    /// `sup|ψ| + sup|∇ψ|` on the unit cube.
    pub fn w1inf_norm(&self) -> f64 {
        match self {
            TestPolynomial::Constant => 1.0,
            TestPolynomial::Linear => 2.0,
            TestPolynomial::Bump => 1.25,
            TestPolynomial::Cubic => 1.0 + 5f64.sqrt(),
        }
    }

    /// `∫∫ ψ(x₁, x₂, x₃) dx₂ dx₃`.
    fn profile(&self, x: f64) -> f64 {
        match self {
            TestPolynomial::Constant => 1.0,
            TestPolynomial::Linear => x,
            TestPolynomial::Bump => x * (1.0 - x),
            TestPolynomial::Cubic => 0.5 * x * x,
        }
    }
}

/// Exactly evaluated `|∫ u·∇ψ|` and the bound `‖ψ‖_{W^{1,∞}} m^{-1/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FakirBound {
    pub value: f64,
    pub bound: f64,
}

impl FakirBound {
    pub fn ratio(&self) -> f64 {
        self.value / self.bound
    }
}

pub fn fakir_div_bound(m: u64, psi: TestPolynomial) -> Result<FakirBound> {
    check_m(m)?;
    let m2 = (m as f64).powi(2);
    let sum: f64 = fakir_intervals(m)
        .map(|(a, b)| psi.profile(b as f64 / m2) - psi.profile(a as f64 / m2))
        .sum();
    let sm = (m as f64).sqrt();
    Ok(FakirBound {
        value: (sm * sum).abs(),
        bound: psi.w1inf_norm() / sm,
    })
}

/// Coefficients `∫ u₁ ψ` of the first component against `cos(2πa x₁)` and
/// `sin(2πa x₁)` for `a ≤ cutoff` (other axes integrate to zero except for
/// their constant mode). Order: `cos0, cos1, sin1, cos2, sin2, ...`.
pub fn fakir_coefficients(m: u64, cutoff: usize) -> Result<Vec<f64>> {
    check_m(m)?;
    let m2 = (m as f64).powi(2);
    let sm = (m as f64).sqrt();
    let ivs: Vec<(f64, f64)> = fakir_intervals(m).map(|(a, b)| (a as f64 / m2, b as f64 / m2)).collect();
    let mut out = Vec::with_capacity(2 * cutoff + 1);
    out.push(sm * ivs.iter().map(|(a, b)| b - a).sum::<f64>());
    for a in 1..=cutoff {
        let k = TAU * a as f64;
        // product forms avoid cancellation on the short intervals
        let (mut c, mut s) = (0.0, 0.0);
        for &(lo, hi) in &ivs {
            let half = (0.5 * k * (hi - lo)).sin();
            let mid = 0.5 * k * (hi + lo);
            c += 2.0 * mid.cos() * half / k;
            s += 2.0 * mid.sin() * half / k;
        }
        out.push(sm * c);
        out.push(sm * s);
    }
    Ok(out)
}

/// `∫_{|f|>λ} |f|` of the pointwise product `⟨u, v⟩ = m Σχ`.
pub fn fakir_tail_mass(m: u64, lambda: f64) -> Result<f64> {
    let full = fakir_pairing(m)?;
    Ok(if (m as f64) > lambda { full } else { 0.0 })
}

// ---------------------------------------------------------------------------
// Equi-integrability and L^p

/// `∫_{|f|>λ} |f|` for each `λ`, from values and quadrature weights.
pub fn tail_mass(values: &[f64], weights: &[f64], lambdas: &[f64]) -> Vec<f64> {
    lambdas
        .iter()
        .map(|&l| {
            values
                .iter()
                .zip(weights)
                .filter(|(v, _)| v.abs() > l)
                .map(|(v, w)| v.abs() * w)
                .sum()
        })
        .collect()
}

/// Tail masses of a scalar chart field under the trapezoid rule.
pub fn equiintegrability_index(field: &ChartField, lambdas: &[f64]) -> Result<Vec<f64>> {
    if !field.is_scalar() {
        return Err(Error::ShapeMismatch("equi-integrability needs a scalar field".into()));
    }
    let chart = field.chart();
    let w: Vec<f64> = (0..chart.num_nodes()).map(|p| chart.trapezoid_weight(p)).collect();
    Ok(tail_mass(field.values(), &w, lambdas))
}

/// `(∫ |f|^p dV)^{1/p}`, with `|f|` the Euclidean norm over components and
/// `dV = √det g` when a metric is given.
pub fn lp_norm(field: &ChartField, p: f64, metric: Option<&MetricField>) -> Result<f64> {
    let vol = match metric {
        Some(g) => {
            field.same_chart(g.field())?;
            Some(g.volume_density())
        }
        None => None,
    };
    let chart = field.chart();
    let mut sum = 0.0;
    for q in 0..chart.num_nodes() {
        let mag = field.node(q).iter().map(|v| v * v).sum::<f64>().sqrt();
        let dv = vol.as_ref().map_or(1.0, |v| v.node(q)[0]);
        sum += chart.trapezoid_weight(q) * dv * mag.powf(p);
    }
    Ok(sum.powf(1.0 / p))
}

// ---------------------------------------------------------------------------
// Div-curl

/// Test functions for pairings on a 2D torus, in normalized coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFunction {
    /// `1`.
    One,
    /// `sin(πξ) sin(πη)`: continuous and periodic but not smooth.
    Bump,
    /// `16 ξ(1 − ξ) η(1 − η)`.
    Parabolic,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [TestFunction::One, TestFunction::Bump, TestFunction::Parabolic];

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::One => "one",
            TestFunction::Bump => "bump",
            TestFunction::Parabolic => "parabolic",
        }
    }

    pub fn eval(&self, mesh: &TorusMesh, x: &[f64]) -> f64 {
        let l = mesh.periods();
        let (xi, eta) = (x[0] / l[0], x[1] / l[1]);
        match self {
            TestFunction::One => 1.0,
            TestFunction::Bump => (PI * xi).sin() * (PI * eta).sin(),
            TestFunction::Parabolic => 16.0 * xi * (1.0 - xi) * eta * (1.0 - eta),
        }
    }

    /// Exact `∫ψ` over the torus.
    pub fn integral(&self, mesh: &TorusMesh) -> f64 {
        let vol = mesh.volume();
        match self {
            TestFunction::One => vol,
            TestFunction::Bump => vol * 4.0 / (PI * PI),
            TestFunction::Parabolic => vol * 4.0 / 9.0,
        }
    }
}

/// Fails unless `cos(·/ε)` has at least [`MIN_CELLS_PER_PERIOD`] cells per
/// period along every axis and fits the torus periodically.
pub fn check_oscillation(mesh: &TorusMesh, epsilon: f64) -> Result<()> {
    for a in 0..mesh.dim() {
        let cells = TAU * epsilon / mesh.spacing(a);
        if cells < MIN_CELLS_PER_PERIOD - 1e-9 {
            return Err(Error::UnresolvedOscillation {
                epsilon,
                cells_per_period: cells,
                required: MIN_CELLS_PER_PERIOD,
            });
        }
        let waves = mesh.periods()[a] / (TAU * epsilon);
        if (waves - waves.round()).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "cos(x/{epsilon}) is not periodic on a torus of period {}",
                mesh.periods()[a]
            )));
        }
    }
    Ok(())
}

/// Torus of period `2π` resolving every ε of `spec` by at least
/// [`MIN_CELLS_PER_PERIOD`] cells per period (at least 64 cells).
pub fn oscillation_mesh(spec: &SequenceSpec) -> Result<TorusMesh> {
    let n = ((MIN_CELLS_PER_PERIOD / spec.finest()).ceil() as usize).max(64);
    TorusMesh::square(n, TAU)
}

/// `ω = cos(x/ε) dx` (closed) and `τ = cos(y/ε) dx` (coclosed). The negative
/// control uses `τ = ω`.
pub fn oscillation_pair(mesh: &TorusMesh, epsilon: f64, negative: bool) -> Result<(Cochain, Cochain)> {
    if mesh.dim() != 2 {
        return Err(Error::InvalidArgument("oscillation pairs live on a 2-torus".into()));
    }
    check_oscillation(mesh, epsilon)?;
    let omega = Cochain::sample(mesh, 1, false, |x, s| if s == 0 { (x[0] / epsilon).cos() } else { 0.0 })?;
    let tau = if negative {
        omega.clone()
    } else {
        Cochain::sample(mesh, 1, false, |x, s| if s == 0 { (x[1] / epsilon).cos() } else { 0.0 })?
    };
    Ok((omega, tau))
}

/// Tolerances of the convergence experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Tail Cauchy and limit-agreement tolerance on dictionary coefficients.
    pub weak: f64,
    /// Pairing defect accepted as convergence.
    pub pairing: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            weak: 0.05,
            pairing: 1e-3,
        }
    }
}

/// Div-curl diagnostics for explicit members `(ω^ε, τ^ε)` and candidate weak
/// limits `(ω̄, τ̄)`. The verdict compares the pairing at the finest ε with
/// the pairing of the limits.
pub fn divcurl_from_pairs(
    epsilons: &[f64],
    pairs: &[(Cochain, Cochain)],
    limits: &(Cochain, Cochain),
    tests: &[TestFunction],
    tol: Tolerances,
) -> Result<(ConvergenceTable, Verdict)> {
    if pairs.len() != epsilons.len() || pairs.is_empty() {
        return Err(Error::ShapeMismatch("one pair per epsilon required".into()));
    }
    let mesh = pairs[0].0.mesh().clone();
    let dict = Dictionary::for_torus(&mesh, 2);
    let limit_pairings: Vec<f64> = tests
        .iter()
        .map(|t| dec::weighted_pairing(&limits.0, &limits.1, |x| t.eval(&mesh, x)))
        .collect::<Result<_>>()?;

    struct Member {
        pairings: Vec<f64>,
        hm_d_omega: f64,
        hm_delta_tau: f64,
        coef_omega: Vec<f64>,
        coef_tau: Vec<f64>,
    }
    let members: Vec<Member> = pairs
        .par_iter()
        .map(|(omega, tau)| -> Result<Member> {
            let pairings = tests
                .iter()
                .map(|t| dec::weighted_pairing(omega, tau, |x| t.eval(&mesh, x)))
                .collect::<Result<_>>()?;
            let d_omega = if omega.degree() < mesh.dim() {
                dec::hminus1_norm(&dec::d(omega)?)?
            } else {
                0.0
            };
            let delta_tau = if tau.degree() > 0 {
                dec::hminus1_norm(&dec::delta(tau)?)?
            } else {
                0.0
            };
            Ok(Member {
                pairings,
                hm_d_omega: d_omega,
                hm_delta_tau: delta_tau,
                coef_omega: cochain_coefficients(omega, &dict),
                coef_tau: cochain_coefficients(tau, &dict),
            })
        })
        .collect::<Result<_>>()?;

    let mut table = ConvergenceTable::default();
    let set_names = ["dx", "dy", "dz"];
    let coef_name = |field: &str, i: usize| {
        let (s, m) = (i / dict.len(), i % dict.len());
        format!("coef_{field}[{},{}]", set_names.get(s).copied().unwrap_or("set"), dict.name(m))
    };
    let mut defects = Vec::with_capacity(members.len());
    for (&eps, mem) in epsilons.iter().zip(&members) {
        let mut defect: f64 = 0.0;
        for ((t, &p), &lp) in tests.iter().zip(&mem.pairings).zip(&limit_pairings) {
            table.push(eps, format!("pairing[{}]", t.name()), p);
            defect = defect.max((p - lp).abs());
        }
        table.push(eps, "pairing_defect", defect);
        table.push(eps, "hminus1_d_omega", mem.hm_d_omega);
        table.push(eps, "hminus1_delta_tau", mem.hm_delta_tau);
        for (i, &c) in mem.coef_omega.iter().enumerate() {
            table.push(eps, coef_name("omega", i), c);
        }
        for (i, &c) in mem.coef_tau.iter().enumerate() {
            table.push(eps, coef_name("tau", i), c);
        }
        defects.push(defect);
    }

    let wl_omega = weak_limit_estimate(epsilons, members.iter().map(|m| m.coef_omega.clone()).collect(), tol.weak);
    let wl_tau = weak_limit_estimate(epsilons, members.iter().map(|m| m.coef_tau.clone()).collect(), tol.weak);
    let agree = |wl: &WeakLimit, lim: &Cochain| {
        wl.distance_to(&cochain_coefficients(lim, &dict)).is_some_and(|d| d <= tol.weak)
    };
    let finest = members.last().expect("nonempty");
    let verdict = if !(agree(&wl_omega, &limits.0) && agree(&wl_tau, &limits.1)) {
        Verdict::Inconclusive
    } else if defects.last().copied().unwrap_or(f64::INFINITY) <= tol.pairing {
        Verdict::Converges
    } else {
        Verdict::Fails
    };
    table.set_meta("dictionary", dict.id());
    table.set_meta("grid", format!("{:?}", mesh.counts()));
    table.set_meta("tail_spread_omega", wl_omega.tail_spread);
    table.set_meta("tail_spread_tau", wl_tau.tail_spread);
    for ((t, p), lp) in tests.iter().zip(&finest.pairings).zip(&limit_pairings) {
        table.set_meta(format!("offset[{}]", t.name()), p - lp);
    }
    table.set_meta("verdict", verdict);
    Ok((table, verdict))
}

/// Div-curl experiment for oscillation pairs (on `mesh`, or the default
/// oscillation mesh) and for the Fakir's carpet (closed form).
pub fn divcurl_experiment(
    spec: &SequenceSpec,
    mesh: Option<&TorusMesh>,
    tests: &[TestFunction],
    tol: Tolerances,
) -> Result<(ConvergenceTable, Verdict)> {
    spec.validate()?;
    match spec.kind {
        SequenceKind::OscillationPair => {
            let mesh = match mesh {
                Some(m) => m.clone(),
                None => oscillation_mesh(spec)?,
            };
            let pairs: Vec<(Cochain, Cochain)> = spec
                .epsilons
                .par_iter()
                .map(|&e| oscillation_pair(&mesh, e, spec.negative_control))
                .collect::<Result<_>>()?;
            let zero = Cochain::zeros(&mesh, 1, false)?;
            let (mut table, verdict) =
                divcurl_from_pairs(&spec.epsilons, &pairs, &(zero.clone(), zero), tests, tol)?;
            table.set_meta("spec", spec_summary(spec));
            Ok((table, verdict))
        }
        SequenceKind::Fakir => fakir_experiment(spec, tol),
        other => Err(Error::InvalidArgument(format!("divcurl does not accept {other}"))),
    }
}

fn spec_summary(spec: &SequenceSpec) -> String {
    format!(
        "{}{} eps={:?} seed={}",
        spec.kind,
        if spec.negative_control { " (negative control)" } else { "" },
        spec.epsilons,
        spec.seed
    )
}

/// The weak limit of `u^ε` is declared against a Cauchy tolerance from the
/// closed-form rate `2 m^{-1/2}`, taken at the first tail member.
fn fakir_experiment(spec: &SequenceSpec, tol: Tolerances) -> Result<(ConvergenceTable, Verdict)> {
    let ms = spec.fakir_ms();
    let mut table = ConvergenceTable::default();
    let mut coefs = Vec::new();
    let mut pairings = Vec::new();
    for (&eps, &m) in spec.epsilons.iter().zip(&ms) {
        let p = fakir_pairing(m)?;
        table.push(eps, "pairing", p);
        for psi in TestPolynomial::NONCONSTANT {
            let b = fakir_div_bound(m, psi)?;
            table.push(eps, format!("div_value[{}]", psi.name()), b.value);
            table.push(eps, format!("div_bound[{}]", psi.name()), b.bound);
        }
        let c = fakir_coefficients(m, spec.modes)?;
        for (i, &v) in c.iter().enumerate() {
            let name = if i == 0 {
                "cos0".to_string()
            } else {
                format!("{}{}", if i % 2 == 1 { "cos" } else { "sin" }, i.div_ceil(2))
            };
            table.push(eps, format!("coef_u[{name}]"), v);
        }
        table.push(eps, "tail_mass[m/2]", fakir_tail_mass(m, m as f64 / 2.0)?);
        coefs.push(c);
        pairings.push(p);
    }
    let tail_start = ms[ms.len().saturating_sub(3)];
    let weak_tol = 4.0 / (tail_start as f64).sqrt();
    let wl = weak_limit_estimate(&spec.epsilons, coefs, weak_tol);
    let zeros = vec![0.0; 2 * spec.modes + 1];
    // u and v coincide, both with weak limit 0; their pairing is 0
    let verdict = match wl.distance_to(&zeros) {
        Some(d) if d <= weak_tol => {
            if pairings.last().expect("nonempty").abs() <= tol.pairing {
                Verdict::Converges
            } else {
                Verdict::Fails
            }
        }
        _ => Verdict::Inconclusive,
    };
    table.set_meta("spec", spec_summary(spec));
    table.set_meta("dictionary", format!("fourier{}-x1", spec.modes));
    table.set_meta("tail_spread_u", wl.tail_spread);
    table.set_meta("offset[one]", pairings.last().expect("nonempty"));
    table.set_meta("verdict", verdict);
    Ok((table, verdict))
}

// ---------------------------------------------------------------------------
// Immersion families and rigidity

/// Member `f^ε` of an immersion family on `chart`, with its induced metric.
/// `ε = 0` gives the limit immersion.
pub fn immersion_family(spec: &SequenceSpec, epsilon: f64, chart: &Chart) -> Result<(ImmersionField, MetricField)> {
    let f = match spec.kind {
        SequenceKind::CylinderFamily => {
            let r = spec.radius * (1.0 + epsilon);
            ImmersionField::from_fn(chart, 3, |x, out| {
                out[0] = r * (x[0] / r).sin();
                out[1] = x[1];
                out[2] = r * (x[0] / r).cos();
            })?
        }
        SequenceKind::CorrugationFamily => {
            if epsilon > 0.0 {
                let cells = TAU * epsilon / chart.spacing()[0];
                if cells < MIN_CELLS_PER_PERIOD - 1e-9 {
                    return Err(Error::UnresolvedOscillation {
                        epsilon,
                        cells_per_period: cells,
                        required: MIN_CELLS_PER_PERIOD,
                    });
                }
            }
            ImmersionField::from_fn(chart, 3, |x, out| {
                out[0] = x[0];
                out[1] = x[1];
                out[2] = if epsilon > 0.0 {
                    epsilon * epsilon * (x[0] / epsilon).sin()
                } else {
                    0.0
                };
            })?
        }
        other => return Err(Error::InvalidArgument(format!("{other} is not an immersion family"))),
    };
    let g = geometry::extract_first_form(&f)?;
    Ok((f, g))
}

/// Smooth seeded field with sup norm at most 1: a normalized sum of low
/// cosine modes with random amplitudes and phases.
fn seeded_modes(rng: &mut ChaCha8Rng) -> impl Fn(&[f64]) -> f64 {
    let terms: Vec<(f64, f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(-1.0..1.0),
                rng.random_range(0..3) as f64,
                rng.random_range(0..3) as f64,
                rng.random_range(0.0..TAU),
                rng.random_range(0.0..TAU),
            )
        })
        .collect();
    let total: f64 = terms.iter().map(|t| t.0.abs()).sum::<f64>().max(1e-12);
    move |x: &[f64]| {
        terms
            .iter()
            .map(|&(a, kx, ky, px, py)| a * (kx * x[0] + px).cos() * (ky * x[1] + py).cos())
            .sum::<f64>()
            / total
    }
}

/// Sphere data with `h` perturbed by `ε · amplitude · P`, where `P` is a
/// seeded smooth symmetric field. `ε = 0` gives the unperturbed data.
pub fn perturbed_gcr(spec: &SequenceSpec, epsilon: f64, chart: &Chart) -> Result<GeometricData> {
    let base = Preset::Sphere
        .analytic_data(chart)?
        .expect("sphere ships closed-form data");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = chart.dim();
    let k = base.codim();
    let mut fields = Vec::new();
    for _ in 0..k {
        for i in 0..n {
            for j in i..n {
                fields.push(((i, j), seeded_modes(&mut rng)));
            }
        }
    }
    let scale = epsilon * spec.amplitude;
    let mut h = base.h.field().clone();
    for p in 0..chart.num_nodes() {
        let x = chart.coords(p);
        let slot = h.node_mut(p);
        for (idx, ((i, j), f)) in fields.iter().enumerate() {
            let alpha = idx / (n * (n + 1) / 2);
            let v = scale * f(&x);
            slot[alpha * n * n + i * n + j] += v;
            if i != j {
                slot[alpha * n * n + j * n + i] += v;
            }
        }
    }
    GeometricData::new(base.g, SecondFormField::new(h)?, base.kappa)
}

/// `(g, h, κ)` of the member at `epsilon` (`0` for the declared limit).
pub fn family_data(spec: &SequenceSpec, epsilon: f64, chart: &Chart) -> Result<GeometricData> {
    match spec.kind {
        SequenceKind::PerturbedGcr => perturbed_gcr(spec, epsilon, chart),
        _ => {
            let (f, _) = immersion_family(spec, epsilon, chart)?;
            Ok(geometry::extract_all(&f)?.0)
        }
    }
}

/// Rigidity experiment output.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidityReport {
    pub table: ConvergenceTable,
    pub verdict: Verdict,
    pub weak_limit: WeakLimit,
    /// Max GCR residual of the declared limit.
    pub limit_residual: f64,
    /// Threshold the limit residual is compared against.
    pub residual_tolerance: f64,
    /// Max/min ratio of `‖h^ε‖_{L^p}` across ε.
    pub lp_ratio: f64,
}

/// Extract `(g^ε, h^ε, κ^ε)` per ε, check the uniform `L^p` bound, estimate
/// weak limits of `h` and `κ`, and evaluate the GCR residual of the limit.
pub fn rigidity_experiment(spec: &SequenceSpec, nodes: usize, p: f64, tol: Tolerances) -> Result<RigidityReport> {
    spec.validate()?;
    if !(p > 2.0) {
        return Err(Error::InvalidArgument(format!("rigidity needs p > 2, got {p}")));
    }
    let chart = spec.kind.chart(nodes)?;
    let dict = Dictionary::for_chart(&chart, spec.modes);
    let limit = family_data(spec, 0.0, &chart)?;
    let coefs_of = |d: &GeometricData| {
        let mut c = chart_coefficients(d.h.field(), &dict);
        c.extend(chart_coefficients(d.kappa.field(), &dict));
        c
    };

    struct Member {
        lp: f64,
        residuals: [f64; 3],
        metric_deviation: f64,
        metric_gradient: f64,
        coefs: Vec<f64>,
    }
    let members: Vec<Member> = spec
        .epsilons
        .par_iter()
        .map(|&eps| -> Result<Member> {
            let data = family_data(spec, eps, &chart)?;
            let res = gcr_residual(&data)?;
            let dev = data.g.field().axpby(1.0, limit.g.field(), -1.0)?.max_abs();
            let grad = data
                .g
                .field()
                .gradient()?
                .iter()
                .fold(0.0_f64, |m, d| m.max(d.max_abs_interior()));
            Ok(Member {
                lp: lp_norm(data.h.field(), p, Some(&data.g))?,
                residuals: Equation::ALL.map(|e| res.norms(e).inf),
                metric_deviation: dev,
                metric_gradient: grad,
                coefs: coefs_of(&data),
            })
        })
        .collect::<Result<_>>()?;

    let mut table = ConvergenceTable::default();
    let ncomp_h = limit.h.field().ncomp();
    let coef_name = |i: usize| {
        let (c, m) = (i / dict.len(), i % dict.len());
        if c < ncomp_h {
            format!("coef_h[{c},{}]", dict.name(m))
        } else {
            format!("coef_kappa[{},{}]", c - ncomp_h, dict.name(m))
        }
    };
    for (&eps, m) in spec.epsilons.iter().zip(&members) {
        table.push(eps, format!("lp_norm_h[p={p}]"), m.lp);
        for (e, r) in Equation::ALL.iter().zip(m.residuals) {
            table.push(eps, format!("gcr_{}_inf", e.name()), r);
        }
        table.push(eps, "forcing", m.residuals.iter().cloned().fold(0.0, f64::max));
        table.push(eps, "metric_deviation", m.metric_deviation);
        table.push(eps, "metric_gradient", m.metric_gradient);
        for (i, &c) in m.coefs.iter().enumerate() {
            table.push(eps, coef_name(i), c);
        }
    }

    let lps: Vec<f64> = members.iter().map(|m| m.lp).collect();
    let (lo, hi) = lps.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &v| (a.min(v), b.max(v)));
    let lp_ratio = if lo > 0.0 { hi / lo } else if hi == 0.0 { 1.0 } else { f64::INFINITY };

    let limit_coefs = coefs_of(&limit);
    let weak = weak_limit_estimate(&spec.epsilons, members.iter().map(|m| m.coefs.clone()).collect(), tol.weak);
    let limit_res = gcr_residual(&limit)?;
    let limit_residual = limit_res.max_inf();
    for (e, r) in Equation::ALL.iter().zip(Equation::ALL.map(|e| limit_res.norms(e).inf)) {
        table.push(0.0, format!("limit_gcr_{}_inf", e.name()), r);
    }
    for (i, &c) in limit_coefs.iter().enumerate() {
        table.push(0.0, coef_name(i), c);
    }

    let floor = 10.0 * chart.h_max().powi(2);
    let approximate = spec.kind == SequenceKind::PerturbedGcr;
    let residual_tolerance = if approximate {
        floor + members.last().map_or(0.0, |m| m.residuals.iter().cloned().fold(0.0, f64::max))
    } else {
        floor
    };
    let matches_limit = weak.distance_to(&limit_coefs).is_some_and(|d| d <= tol.weak);
    let verdict = if !matches_limit || lp_ratio > LP_RATIO_MAX {
        Verdict::Inconclusive
    } else if limit_residual <= residual_tolerance {
        if approximate {
            Verdict::RigidApproximate
        } else {
            Verdict::Rigid
        }
    } else {
        Verdict::NotRigid
    };

    table.set_meta("spec", spec_summary(spec));
    table.set_meta("grid", format!("{:?}", chart.counts()));
    table.set_meta("dictionary", dict.id());
    table.set_meta("norm_margin", NORM_MARGIN);
    table.set_meta("lp_ratio", lp_ratio);
    table.set_meta("tail_spread", weak.tail_spread);
    table.set_meta("limit_residual", limit_residual);
    table.set_meta("verdict", verdict);
    Ok(RigidityReport {
        table,
        verdict,
        weak_limit: weak,
        limit_residual,
        residual_tolerance,
        lp_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spec_validation() {
        assert!(SequenceSpec::new(SequenceKind::OscillationPair, &[0.1, 0.05]).is_ok());
        assert!(SequenceSpec::new(SequenceKind::OscillationPair, &[0.05, 0.1]).is_err());
        assert!(SequenceSpec::new(SequenceKind::OscillationPair, &[0.1, 0.1]).is_err());
        assert!(SequenceSpec::new(SequenceKind::OscillationPair, &[]).is_err());
        assert!(SequenceSpec::fakir(&[1]).is_err());
        assert_eq!("corrugation-family".parse::<SequenceKind>().unwrap(), SequenceKind::CorrugationFamily);
    }

    #[test]
    fn fakir_pairing_closed_form() {
        for (m, want) in [(10, 0.9), (100, 0.99), (1000, 0.999)] {
            let r = fakir_pairing_exact(m).unwrap();
            assert_eq!(r, Rational::new(m as u128 - 1, m as u128));
            assert_eq!(fakir_pairing(m).unwrap(), want);
        }
        assert!(fakir_pairing(1).is_err());
    }

    #[test]
    fn fakir_div_bound_examples() {
        assert_eq!(fakir_div_bound(100, TestPolynomial::Constant).unwrap().value, 0.0);
        for m in [25, 100, 400] {
            for psi in TestPolynomial::NONCONSTANT {
                let b = fakir_div_bound(m, psi).unwrap();
                assert!(b.ratio() <= 1.0, "{m} {:?}: {}", psi, b.ratio());
            }
        }
        let b = fakir_div_bound(100, TestPolynomial::Bump).unwrap();
        assert!(b.value <= 0.1 * TestPolynomial::Bump.w1inf_norm());
    }

    #[test]
    fn fakir_coefficients_decay() {
        let c: Vec<Vec<f64>> = [25, 100, 400].iter().map(|&m| fakir_coefficients(m, 2).unwrap()).collect();
        for (m, row) in [25.0f64, 100.0, 400.0].iter().zip(&c) {
            assert!(row.iter().all(|v| v.abs() <= 2.0 / m.sqrt()));
        }
        let maxes: Vec<f64> = c.iter().map(|r| r.iter().fold(0.0, |a: f64, v| a.max(v.abs()))).collect();
        let order = (maxes[0] / maxes[2]).ln() / 16f64.ln();
        assert!((order - 0.5).abs() < 0.1, "{order}");
    }

    #[test]
    fn tail_masses() {
        assert_eq!(fakir_tail_mass(10, 5.0).unwrap(), 0.9);
        assert_eq!(fakir_tail_mass(10, 20.0).unwrap(), 0.0);
        let chart = Chart::from_box(&[0.0, 0.0], &[1.0, 1.0], &[17, 17]).unwrap();
        let f = ChartField::scalar_fn(&chart, |x| (7.0 * x[0]).sin());
        assert_eq!(equiintegrability_index(&f, &[2.0]).unwrap(), vec![0.0]);
        let t = equiintegrability_index(&f, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        assert!(t.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn dictionary_shape() {
        let d = Dictionary::new([0.0, 0.0], [1.0, 2.0], 2);
        assert_eq!(d.len(), 30);
        assert_eq!(d.name(0), "cos0*cos0");
        assert_abs_diff_eq!(d.eval(0, &[0.3, 0.7]), 1.0);
        assert_abs_diff_eq!(d.eval(d.len() - 1, &[0.0, 1.0]), 0.25);
    }

    #[test]
    fn weak_limit_tail() {
        let eps = [0.4, 0.2, 0.1, 0.05];
        let w = weak_limit_estimate(&eps, eps.iter().map(|&e| vec![1.0, e]).collect(), 0.2);
        assert!(w.is_declared());
        assert_abs_diff_eq!(w.distance_to(&[1.0, 0.0]).unwrap(), 0.05);
        let w = weak_limit_estimate(&eps, eps.iter().map(|&e| vec![1.0 / e]).collect(), 0.2);
        assert!(!w.is_declared());
        let w = weak_limit_estimate(&eps, vec![vec![3.0]; 4], 0.0);
        assert_eq!(w.limit, Some(vec![3.0]));
    }

    #[test]
    fn oscillation_pair_structure() {
        let mesh = TorusMesh::square(128, TAU).unwrap();
        let (w, t) = oscillation_pair(&mesh, 1.0 / 8.0, false).unwrap();
        assert!(dec::d(&w).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(dec::delta(&t).unwrap().values().iter().all(|&v| v == 0.0));
        let p = dec::weighted_pairing(&w, &t, |_| 1.0).unwrap();
        assert!(p.abs() < 1e-12);
        assert!(matches!(
            oscillation_pair(&mesh, 1.0 / 32.0, false),
            Err(Error::UnresolvedOscillation { .. })
        ));
        let (w, t) = oscillation_pair(&mesh, 1.0 / 8.0, true).unwrap();
        let p = dec::weighted_pairing(&w, &t, |_| 1.0).unwrap();
        assert_abs_diff_eq!(p, 0.5 * mesh.volume(), epsilon = 1e-10);
    }

    #[test]
    fn family_members() {
        let spec = SequenceSpec::new(SequenceKind::CylinderFamily, &[0.5, 0.25]).unwrap();
        let chart = spec.kind.chart(33).unwrap();
        for eps in [0.5, 0.0] {
            let (f, _) = immersion_family(&spec, eps, &chart).unwrap();
            let iso = crate::realize::isometry_defect(&f, &MetricField::identity(&chart)).unwrap();
            assert!(iso < 1e-3, "{iso}");
        }
        let spec = SequenceSpec::new(SequenceKind::CorrugationFamily, &[1.0 / 16.0]).unwrap();
        let chart = spec.kind.chart(129).unwrap();
        let (_, g) = immersion_family(&spec, 1.0 / 16.0, &chart).unwrap();
        let dev = g.field().axpby(1.0, MetricField::identity(&chart).field(), -1.0).unwrap().max_abs();
        assert!(dev <= (1.0f64 / 16.0).powi(2) * 1.05, "{dev}");
        let data = family_data(&spec, 1.0 / 16.0, &chart).unwrap();
        let l2 = lp_norm(&data.h.field().component(0), 2.0, None).unwrap();
        let want = (0.5 * chart.volume()).sqrt();
        assert!((l2 / want - 1.0).abs() < 0.02, "{l2} {want}");
        assert!(matches!(
            immersion_family(&spec, 1.0 / 128.0, &chart),
            Err(Error::UnresolvedOscillation { .. })
        ));
    }

    #[test]
    fn perturbed_is_deterministic_and_linear() {
        let mut spec = SequenceSpec::new(SequenceKind::PerturbedGcr, &[0.1]).unwrap();
        spec.seed = 11;
        let chart = spec.kind.chart(17).unwrap();
        let a = perturbed_gcr(&spec, 0.1, &chart).unwrap();
        let b = perturbed_gcr(&spec, 0.1, &chart).unwrap();
        assert_eq!(a.h, b.h);
        let c = perturbed_gcr(&spec, 0.2, &chart).unwrap();
        let base = perturbed_gcr(&spec, 0.0, &chart).unwrap();
        let d1 = a.h.field().axpby(1.0, base.h.field(), -1.0).unwrap();
        let d2 = c.h.field().axpby(1.0, base.h.field(), -1.0).unwrap();
        assert!(d2.axpby(1.0, &d1, -2.0).unwrap().max_abs() < 1e-12);
        assert!(d1.max_abs() > 0.0 && d1.max_abs() <= 0.1 + 1e-12);
    }
}
