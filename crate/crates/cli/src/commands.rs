//! Subcommand implementations. Each returns the one-line summary and the
//! artifacts to write.

use std::f64::consts::TAU;
use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use gcrlab::dec::{self, TorusMesh};
use gcrlab::gcr::{self, observed_order};
use gcrlab::weakconv::{self, Tolerances};
use gcrlab::{
    geometry, io, realize, Chart, ChartField, Cochain, DataSource, Equation, Error, GcrResidual, GeometricData,
    MetricField, NormalConnField, Preset, RealizeOptions, Result, SecondFormField, SequenceKind, SequenceSpec,
};

/// Residuals below this are reported as exact.
const EXACT_FLOOR: f64 = 1e-10;
/// Smallest observed order accepted as second-order convergence.
const MIN_ORDER: f64 = 1.8;
const MIN_NODES: usize = 8;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Christoffel symbols of a metric.
    Christoffel(ChristoffelArgs),
    /// GCR residual table across grid refinements.
    GcrCheck(GcrCheckArgs),
    /// Integrate (g, h, κ) to an immersion and report the defects.
    Realize(RealizeArgs),
    /// Hodge decomposition of a cochain on a flat torus.
    Hodge(HodgeArgs),
    /// Div-curl experiment on oscillating one-forms.
    Divcurl(DivcurlArgs),
    /// Fakir's carpet pairings and bounds.
    Fakir(FakirArgs),
    /// Weak rigidity experiment on an ε-family.
    Rigidity(RigidityArgs),
    /// Small deterministic run of every experiment.
    Demo(DemoArgs),
}

impl Command {
    pub fn run(&self) -> Result<Output> {
        match self {
            Command::Christoffel(a) => christoffel(a),
            Command::GcrCheck(a) => gcr_check(a),
            Command::Realize(a) => realize_cmd(a),
            Command::Hodge(a) => hodge(a),
            Command::Divcurl(a) => divcurl(a),
            Command::Fakir(a) => fakir(a),
            Command::Rigidity(a) => rigidity(a),
            Command::Demo(a) => demo(a),
        }
    }
}

/// Files produced by a run plus its summary line.
#[derive(Debug, Default)]
pub struct Output {
    pub summary: String,
    pub files: Vec<(String, String)>,
    /// Written to stdout when no output directory was given.
    pub primary: Option<usize>,
}

impl Output {
    fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    fn add_primary(&mut self, name: impl Into<String>, contents: String) {
        self.primary = Some(self.files.len());
        self.add(name, contents);
    }

    fn merge(&mut self, other: Output) {
        self.files.extend(other.files);
        if !other.summary.is_empty() {
            self.summary.push_str(&other.summary);
            self.summary.push('\n');
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Analytic,
    Extracted,
}

impl From<Source> for DataSource {
    fn from(s: Source) -> Self {
        match s {
            Source::Analytic => DataSource::Analytic,
            Source::Extracted => DataSource::Extracted,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Formulation {
    First,
    Second,
}

/// Geometric data from a preset or from field files.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Built-in immersion.
    #[arg(long, default_value = "sphere", value_parser = parse_preset)]
    pub preset: Preset,
    /// Where preset data come from.
    #[arg(long, value_enum, default_value = "analytic")]
    pub source: Source,
    /// Metric field file; replaces the preset.
    #[arg(long, requires = "second_form")]
    pub metric: Option<PathBuf>,
    /// Second fundamental form file.
    #[arg(long, requires = "metric")]
    pub second_form: Option<PathBuf>,
    /// Normal connection field file; zero when omitted.
    #[arg(long, requires = "metric")]
    pub normal_connection: Option<PathBuf>,
}

impl DataArgs {
    fn name(&self) -> String {
        if self.metric.is_some() {
            "custom".into()
        } else {
            self.preset.name().into()
        }
    }

    fn load(&self, nodes: usize) -> Result<GeometricData> {
        let (Some(gp), Some(hp)) = (&self.metric, &self.second_form) else {
            check_nodes(nodes)?;
            return self.preset.data(&self.preset.chart(nodes)?, self.source.into());
        };
        let g = MetricField::new(read_field(gp)?)?;
        let h = SecondFormField::new(read_field(hp)?)?;
        let kappa = match &self.normal_connection {
            Some(p) => NormalConnField::new(read_field(p)?)?,
            None => NormalConnField::zeros(g.chart(), h.codim()),
        };
        GeometricData::new(g, h, kappa)
    }
}

#[derive(Debug, Args)]
pub struct ChristoffelArgs {
    #[arg(long, default_value = "sphere", value_parser = parse_preset)]
    pub preset: Preset,
    /// Nodes per axis of the preset chart.
    #[arg(long, default_value_t = 33)]
    pub n: usize,
    /// Metric field file; replaces the preset.
    #[arg(long)]
    pub metric: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GcrCheckArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Nodes per axis, one grid per entry.
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    pub n: Vec<usize>,
    #[arg(long, value_enum, default_value = "first")]
    pub formulation: Formulation,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RealizeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    /// GCR gate; defaults to 10 h_max².
    #[arg(long, value_parser = parse_positive)]
    pub gate: Option<f64>,
    /// Integrate even when the GCR residual exceeds the gate.
    #[arg(long)]
    pub override_gate: bool,
    /// Ambient coordinates written to the OBJ file.
    #[arg(long, default_value = "0,1,2", value_parser = parse_axes)]
    pub project: [usize; 3],
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HodgeArgs {
    /// Vertices per axis of the square torus.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Torus period.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub length: f64,
    /// Cochain file; a sampled one-form when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// CG relative tolerance of the Green solve.
    #[arg(long, default_value_t = dec::CG_TOL, value_parser = parse_positive)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DivcurlArgs {
    /// Oscillation scales, decreasing; fractions like 1/16 are accepted.
    #[arg(long, value_delimiter = ',', value_parser = parse_epsilon, default_value = "1/16,1/32,1/64,1/128")]
    pub eps: Vec<f64>,
    /// Use the pair whose product has a nonzero weak limit.
    #[arg(long)]
    pub negative: bool,
    /// Vertices per axis; chosen from the finest ε when omitted.
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub tol: TolArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TolArgs {
    /// Tolerance on dictionary coefficients of the weak limits.
    #[arg(long, default_value_t = Tolerances::default().weak, value_parser = parse_positive)]
    pub weak_tol: f64,
    /// Pairing defect accepted as convergence.
    #[arg(long, default_value_t = Tolerances::default().pairing, value_parser = parse_positive)]
    pub pairing_tol: f64,
}

impl TolArgs {
    fn get(&self) -> Tolerances {
        Tolerances {
            weak: self.weak_tol,
            pairing: self.pairing_tol,
        }
    }
}

#[derive(Debug, Args)]
pub struct FakirArgs {
    /// Carpet sizes.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    pub m: Vec<u64>,
    /// Fourier cutoff of the coefficient dictionary.
    #[arg(long, default_value_t = 2)]
    pub modes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RigidityArgs {
    #[arg(long, default_value = "corrugation-family", value_parser = parse_family)]
    pub family: SequenceKind,
    #[arg(long, value_delimiter = ',', value_parser = parse_epsilon, default_value = "1/16,1/32,1/64,1/128")]
    pub eps: Vec<f64>,
    /// Nodes per axis; 1025 for the corrugation family and 65 otherwise.
    #[arg(long)]
    pub n: Option<usize>,
    /// Exponent of the uniform bound on h.
    #[arg(long, default_value_t = weakconv::DEFAULT_P)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Forcing amplitude of the perturbed family.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Limit radius of the cylinder family.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub radius: f64,
    #[arg(long, default_value_t = 2)]
    pub modes: usize,
    #[command(flatten)]
    pub tol: TolArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = "demo")]
    pub out: PathBuf,
}

pub fn out_dir(cmd: &Command) -> Option<&PathBuf> {
    match cmd {
        Command::Christoffel(a) => a.out.as_ref(),
        Command::GcrCheck(a) => a.out.as_ref(),
        Command::Realize(a) => a.out.as_ref(),
        Command::Hodge(a) => a.out.as_ref(),
        Command::Divcurl(a) => a.out.as_ref(),
        Command::Fakir(a) => a.out.as_ref(),
        Command::Rigidity(a) => a.out.as_ref(),
        Command::Demo(a) => Some(&a.out),
    }
}

// ---------------------------------------------------------------------------
// Value parsers

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_family(s: &str) -> std::result::Result<SequenceKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_axes(s: &str) -> std::result::Result<[usize; 3], String> {
    io::parse_axes(s).map_err(|e| e.to_string())
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s}"))
    }
}

/// `0.0625` or `1/16`.
fn parse_epsilon(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => parse_positive(a)? / parse_positive(b)?,
        None => s.parse().map_err(|e| format!("{e}"))?,
    };
    parse_positive(&v.to_string())
}

fn check_nodes(n: usize) -> Result<()> {
    if n < MIN_NODES {
        return Err(Error::InvalidArgument(format!("resolution {n} below the minimum {MIN_NODES}")));
    }
    Ok(())
}

fn read_field(path: &PathBuf) -> Result<ChartField> {
    ChartField::from_text(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Geometry

fn christoffel(a: &ChristoffelArgs) -> Result<Output> {
    let (g, name) = match &a.metric {
        Some(p) => (MetricField::new(read_field(p)?)?, "custom"),
        None => {
            check_nodes(a.n)?;
            let chart = a.preset.chart(a.n)?;
            (a.preset.data(&chart, DataSource::Analytic)?.g, a.preset.name())
        }
    };
    let gamma = geometry::christoffel(&g)?;
    let mut out = Output {
        summary: format!("christoffel {name}: max |Γ| = {:.6e}", gamma.max_abs_interior()),
        ..Default::default()
    };
    out.add_primary(format!("{name}_christoffel.txt"), gamma.to_text());
    Ok(out)
}

fn residual_for(data: &GeometricData, formulation: Formulation) -> Result<GcrResidual> {
    match formulation {
        Formulation::First => gcr::gcr_residual(data),
        Formulation::Second => gcr::second_formulation_residual(&data.g, &data.h, &data.kappa),
    }
}

/// Smallest observed order over equations and consecutive grids, ignoring
/// equations already at the roundoff floor.
fn min_order(rows: &[(Chart, GcrResidual)]) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for w in rows.windows(2) {
        let ratio = w[0].0.h_max() / w[1].0.h_max();
        for eq in Equation::ALL {
            let (c, f) = (w[0].1.norms(eq).inf, w[1].1.norms(eq).inf);
            if f <= EXACT_FLOOR {
                continue;
            }
            let o = observed_order(c, f, ratio);
            worst = Some(worst.map_or(o, |x: f64| x.min(o)));
        }
    }
    worst
}

fn gcr_check(a: &GcrCheckArgs) -> Result<Output> {
    if a.n.is_empty() {
        return Err(Error::InvalidArgument("no grid sizes given".into()));
    }
    let grids: Vec<usize> = if a.data.metric.is_some() { vec![0] } else { a.n.clone() };
    let rows = grids
        .iter()
        .map(|&n| {
            let data = a.data.load(n)?;
            Ok((data.chart().clone(), residual_for(&data, a.formulation)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let csv_rows: Vec<(usize, GcrResidual)> = rows.iter().map(|(c, r)| (c.counts()[0], r.clone())).collect();
    let finest = rows.last().expect("nonempty").1.max_inf();
    let summary = if finest <= EXACT_FLOOR {
        format!("exact (max residual {finest:.3e})")
    } else {
        match min_order(&rows) {
            Some(o) if o >= MIN_ORDER => format!("converges (observed order {o:.2}, finest max {finest:.3e})"),
            Some(o) => format!("does not converge (observed order {o:.2}, finest max {finest:.3e})"),
            None => format!("single grid (max residual {finest:.3e})"),
        }
    };
    let name = a.data.name();
    let mut out = Output {
        summary: format!("gcr-check {name}: {summary}"),
        ..Default::default()
    };
    out.add_primary(format!("gcr_{name}.csv"), io::residual_csv(&csv_rows));
    Ok(out)
}

fn realize_cmd(a: &RealizeArgs) -> Result<Output> {
    let data = a.data.load(a.n)?;
    let opts = RealizeOptions {
        gate: a.gate,
        allow_gate_violation: a.override_gate,
        ..Default::default()
    };
    let res = realize::realize(&data, &opts)?;
    let back = res.reextract()?;
    let err = |x: &ChartField, y: &ChartField| -> Result<f64> { Ok(x.axpby(1.0, y, -1.0)?.max_abs_inner(gcr::NORM_MARGIN)) };
    let mut defects = vec![
        ("holonomy", res.holonomy),
        ("isometry_defect", res.isometry_defect),
        ("path_defect", res.path_defect),
        ("orthogonality_defect", res.orthogonality_defect),
        ("gcr_max", res.gcr_max),
        ("gate", res.gate),
        ("gate_violated", if res.gate_violated { 1.0 } else { 0.0 }),
        ("reextract_g", err(back.g.field(), data.g.field())?),
        ("reextract_h", err(back.h.field(), data.h.field())?),
        ("reextract_kappa", err(back.kappa.field(), data.kappa.field())?),
    ];
    let name = a.data.name();
    let mut summary = format!(
        "realize {name}: isometry defect {:.3e}, holonomy {:.3e}",
        res.isometry_defect, res.holonomy
    );
    if a.data.metric.is_none() {
        let reference = a.data.preset.immersion(data.chart())?;
        let al = realize::rigid_align(&res.f, &reference)?;
        defects.push(("rmse", al.rmse));
        summary.push_str(&format!(", rmse {:.3e}", al.rmse));
    }
    if res.gate_violated {
        summary.push_str(&format!(" (gate {:.3e} overridden)", res.gate));
    }
    let mut out = Output {
        summary,
        ..Default::default()
    };
    if data.dim() == 2 && res.f.ambient_dim() >= 3 {
        out.add(format!("{name}.obj"), io::obj_string(&res.f, a.project)?);
    }
    out.add_primary(format!("{name}_defects.csv"), io::key_value_csv(&defects));
    out.add(format!("{name}_immersion.txt"), res.f.field().to_text());
    Ok(out)
}

// ---------------------------------------------------------------------------
// Hodge theory

/// A one-form with nonzero harmonic, exact and coexact parts.
fn sample_one_form(mesh: &TorusMesh) -> Result<Cochain> {
    let l = mesh.periods()[0];
    let k = TAU / l;
    Cochain::sample(mesh, 1, false, |x, s| {
        let (u, v) = (k * x[0], k * x[1]);
        match s {
            0 => 0.3 + (u + 2.0 * v).sin() + (2.0 * v).cos(),
            _ => -0.2 + u.cos() * v.sin() + 0.5 * (3.0 * u).cos(),
        }
    })
}

fn hodge(a: &HodgeArgs) -> Result<Output> {
    let c = match &a.input {
        Some(p) => Cochain::from_text(&std::fs::read_to_string(p)?)?,
        None => {
            check_nodes(a.n)?;
            sample_one_form(&TorusMesh::square(a.n, a.length)?)?
        }
    };
    let solve = dec::green_solve(&c, a.tol)?;
    let parts = dec::hodge_decompose(&c)?;
    let sum = parts.harmonic.lin(1.0, &parts.exact, 1.0)?.lin(1.0, &parts.coexact, 1.0)?;
    let norm2 = c.inner(&c)?.max(f64::MIN_POSITIVE);
    let reconstruction = sum.lin(1.0, &c, -1.0)?.norm() / norm2.sqrt();
    let ps = [&parts.harmonic, &parts.exact, &parts.coexact];
    let mut orth: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            orth = orth.max(ps[i].inner(ps[j])?.abs() / norm2);
        }
    }
    let mesh = c.mesh();
    let q = c.degree();
    let mut rows = vec![
        ("degree", q as f64),
        ("cg_iterations", solve.iterations as f64),
        ("cg_relative_residual", solve.relative_residual),
        ("reconstruction", reconstruction),
        ("orthogonality", orth),
        ("norm_harmonic", parts.harmonic.norm()),
        ("norm_exact", parts.exact.norm()),
        ("norm_coexact", parts.coexact.norm()),
    ];
    if q + 2 <= mesh.dim() {
        rows.push(("dd_max", dec::d(&dec::d(&c)?)?.max_abs()));
    }
    let mut out = Output {
        summary: format!(
            "hodge: degree {q} decomposed in {} CG iterations, reconstruction {reconstruction:.3e}, orthogonality {orth:.3e}",
            solve.iterations
        ),
        ..Default::default()
    };
    out.add_primary("hodge.csv", io::key_value_csv(&rows));
    out.add("hodge_harmonic.txt", parts.harmonic.to_text());
    out.add("hodge_exact.txt", parts.exact.to_text());
    out.add("hodge_coexact.txt", parts.coexact.to_text());
    Ok(out)
}

// ---------------------------------------------------------------------------
// Weak convergence

fn table_output(name: &str, table: &weakconv::ConvergenceTable, summary: String) -> Output {
    let mut out = Output {
        summary,
        ..Default::default()
    };
    out.add_primary(format!("{name}.csv"), table.to_csv());
    let meta: String = table.metadata.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    out.add(format!("{name}_summary.txt"), meta);
    out
}

fn divcurl(a: &DivcurlArgs) -> Result<Output> {
    let mut spec = SequenceSpec::new(SequenceKind::OscillationPair, &a.eps)?;
    spec.negative_control = a.negative;
    let mesh = match a.grid {
        Some(n) => {
            check_nodes(n)?;
            Some(TorusMesh::square(n, TAU)?)
        }
        None => None,
    };
    let (table, verdict) =
        weakconv::divcurl_experiment(&spec, mesh.as_ref(), &weakconv::TestFunction::ALL, a.tol.get())?;
    let defect = table.series("pairing_defect").last().map_or(f64::NAN, |r| r.1);
    let name = if a.negative { "divcurl_negative" } else { "divcurl" };
    Ok(table_output(
        name,
        &table,
        format!("divcurl{}: {verdict} (pairing defect {defect:.3e} at finest ε)", if a.negative { " negative control" } else { "" }),
    ))
}

fn fakir(a: &FakirArgs) -> Result<Output> {
    let mut spec = SequenceSpec::fakir(&a.m)?;
    spec.modes = a.modes;
    let (table, verdict) = weakconv::divcurl_experiment(&spec, None, &[], Tolerances::default())?;
    let last = table.series("pairing").last().map_or(f64::NAN, |r| r.1);
    Ok(table_output(
        "fakir",
        &table,
        format!("fakir: {verdict} (pairing {last:.6} at m = {})", a.m.last().copied().unwrap_or(0)),
    ))
}

fn rigidity(a: &RigidityArgs) -> Result<Output> {
    let mut spec = SequenceSpec::new(a.family, &a.eps)?;
    spec.seed = a.seed;
    spec.amplitude = a.amplitude;
    spec.radius = a.radius;
    spec.modes = a.modes;
    spec.validate()?;
    let nodes = a.n.unwrap_or(match a.family {
        SequenceKind::CorrugationFamily => 1025,
        _ => 65,
    });
    check_nodes(nodes)?;
    let report = weakconv::rigidity_experiment(&spec, nodes, a.p, a.tol.get())?;
    Ok(table_output(
        &format!("rigidity_{}", a.family.name()),
        &report.table,
        format!(
            "rigidity {}: {} (limit residual {:.3e}, L^p ratio {:.3})",
            a.family.name(),
            report.verdict,
            report.limit_residual,
            report.lp_ratio
        ),
    ))
}

fn demo(a: &DemoArgs) -> Result<Output> {
    let mut out = Output::default();
    out.merge(fakir(&FakirArgs {
        m: vec![10, 100, 1000],
        modes: 2,
        out: None,
    })?);
    out.merge(gcr_check(&GcrCheckArgs {
        data: demo_data(Preset::Sphere),
        n: vec![17, 33],
        formulation: Formulation::First,
        out: None,
    })?);
    out.merge(realize_cmd(&RealizeArgs {
        data: demo_data(Preset::Cylinder),
        n: 33,
        gate: None,
        override_gate: false,
        project: [0, 1, 2],
        out: None,
    })?);
    out.merge(hodge(&HodgeArgs {
        n: 16,
        length: 1.0,
        input: None,
        tol: dec::CG_TOL,
        out: None,
    })?);
    out.merge(divcurl(&DivcurlArgs {
        eps: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
        negative: false,
        grid: None,
        tol: TolArgs {
            weak_tol: Tolerances::default().weak,
            pairing_tol: Tolerances::default().pairing,
        },
        out: None,
    })?);
    out.merge(rigidity(&RigidityArgs {
        family: SequenceKind::PerturbedGcr,
        eps: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
        n: Some(65),
        p: weakconv::DEFAULT_P,
        seed: a.seed,
        amplitude: 1.0,
        radius: 1.0,
        modes: 2,
        tol: TolArgs {
            weak_tol: Tolerances::default().weak,
            pairing_tol: Tolerances::default().pairing,
        },
        out: None,
    })?);
    out.summary = format!("demo (seed {}): {} artifacts\n{}", a.seed, out.files.len(), out.summary.trim_end());
    out.primary = None;
    Ok(out)
}

fn demo_data(preset: Preset) -> DataArgs {
    DataArgs {
        preset,
        source: Source::Analytic,
        metric: None,
        second_form: None,
        normal_connection: None,
    }
}
