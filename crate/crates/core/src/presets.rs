//! Built-in immersions with known geometry, used by tests, the CLI and the
//! experiments.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{self, GeometricData, ImmersionField, MetricField, NormalConnField, SecondFormField};
use crate::grid::Chart;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    /// `(x, y, 0)`.
    Plane,
    /// `(cos x, sin x, y)`.
    Cylinder,
    /// Unit sphere in colatitude/longitude on `θ ∈ [π/4, 3π/4]`.
    Sphere,
    /// `(x, y, 0, 0)` with normal frame rotating at unit rate in `x`.
    RotatingPlane,
    /// `(x, y, ε² sin(x/ε))`.
    Corrugation { epsilon: f64 },
    /// `(x, y, (x² − y²)/2, xy)`, the graph of `z²/2` over `C`.
    ComplexParabola,
}

/// Where a preset's `(g, h, κ)` come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataSource {
    /// Closed-form fields sampled on the chart (falls back to extraction
    /// when no closed form is shipped).
    Analytic,
    /// Finite-difference extraction from the sampled immersion.
    Extracted,
}

impl Preset {
    pub const NAMES: [&'static str; 6] = [
        "plane",
        "cylinder",
        "sphere",
        "rotating-plane",
        "corrugation",
        "complex-parabola",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Plane => "plane",
            Preset::Cylinder => "cylinder",
            Preset::Sphere => "sphere",
            Preset::RotatingPlane => "rotating-plane",
            Preset::Corrugation { .. } => "corrugation",
            Preset::ComplexParabola => "complex-parabola",
        }
    }

    pub fn dim(&self) -> usize {
        2
    }

    pub fn codim(&self) -> usize {
        match self {
            Preset::RotatingPlane | Preset::ComplexParabola => 2,
            _ => 1,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim() + self.codim()
    }

    /// Coordinate box `(lo, hi)` of the default chart.
    pub fn domain(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Preset::Plane | Preset::RotatingPlane => ([0.0, 0.0], [1.0, 1.0]),
            Preset::Cylinder => ([0.0, 0.0], [2.0, 1.0]),
            Preset::Sphere => ([FRAC_PI_4, 0.0], [3.0 * FRAC_PI_4, 1.0]),
            Preset::Corrugation { .. } => ([0.0, 0.0], [1.0, 0.25]),
            Preset::ComplexParabola => ([-0.5, -0.5], [0.5, 0.5]),
        }
    }

    /// Default chart with `nodes` nodes per axis. The corrugation chart is
    /// resolved along `x` only: its geometry does not vary in `y`.
    pub fn chart(&self, nodes: usize) -> Result<Chart> {
        let (lo, hi) = self.domain();
        let counts = match self {
            Preset::Corrugation { .. } => [nodes, 5],
            _ => [nodes, nodes],
        };
        Chart::from_box(&lo, &hi, &counts)
    }

    pub fn point(&self, x: &[f64], out: &mut [f64]) {
        let (u, v) = (x[0], x[1]);
        match *self {
            Preset::Plane | Preset::RotatingPlane => {
                out[0] = u;
                out[1] = v;
            }
            Preset::Cylinder => {
                out[0] = u.cos();
                out[1] = u.sin();
                out[2] = v;
            }
            Preset::Sphere => {
                out[0] = u.sin() * v.cos();
                out[1] = u.sin() * v.sin();
                out[2] = u.cos();
            }
            Preset::Corrugation { epsilon } => {
                out[0] = u;
                out[1] = v;
                out[2] = epsilon * epsilon * (u / epsilon).sin();
            }
            Preset::ComplexParabola => {
                out[0] = u;
                out[1] = v;
                out[2] = 0.5 * (u * u - v * v);
                out[3] = u * v;
            }
        }
    }

    pub fn immersion(&self, chart: &Chart) -> Result<ImmersionField> {
        let m = self.ambient_dim();
        ImmersionField::from_fn(chart, m, |x, out| {
            out.iter_mut().for_each(|v| *v = 0.0);
            self.point(x, out)
        })
    }

    /// Closed-form `(g, h, κ)` in the normal frame the seed rule would pick,
    /// when one is shipped.
    pub fn analytic_data(&self, chart: &Chart) -> Result<Option<GeometricData>> {
        let k = self.codim();
        let data = match self {
            Preset::Plane => GeometricData::new(
                MetricField::identity(chart),
                SecondFormField::zeros(chart, k),
                NormalConnField::zeros(chart, k),
            )?,
            Preset::Cylinder => GeometricData::new(
                MetricField::identity(chart),
                SecondFormField::from_fn(chart, k, |_, h| h[0] = -1.0)?,
                NormalConnField::zeros(chart, k),
            )?,
            Preset::Sphere => {
                let g = MetricField::from_fn(chart, |x, g| {
                    g[0] = 1.0;
                    g[3] = x[0].sin().powi(2);
                })?;
                let h = SecondFormField::from_fn(chart, k, |x, h| {
                    h[0] = -1.0;
                    h[3] = -x[0].sin().powi(2);
                })?;
                GeometricData::new(g, h, NormalConnField::zeros(chart, k))?
            }
            Preset::RotatingPlane => GeometricData::new(
                MetricField::identity(chart),
                SecondFormField::zeros(chart, k),
                NormalConnField::from_fn(chart, k, |_, kap| {
                    kap[1] = 1.0;
                    kap[2] = -1.0;
                })?,
            )?,
            Preset::Corrugation { .. } | Preset::ComplexParabola => return Ok(None),
        };
        Ok(Some(data))
    }

    pub fn data(&self, chart: &Chart, source: DataSource) -> Result<GeometricData> {
        if source == DataSource::Analytic {
            if let Some(d) = self.analytic_data(chart)? {
                return Ok(d);
            }
        }
        Ok(geometry::extract_all(&self.immersion(chart)?)?.0)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "plane" => Preset::Plane,
            "cylinder" => Preset::Cylinder,
            "sphere" => Preset::Sphere,
            "rotating-plane" | "plane4" => Preset::RotatingPlane,
            "corrugation" => Preset::Corrugation { epsilon: 1.0 / 16.0 },
            "complex-parabola" => Preset::ComplexParabola,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown preset '{s}' (expected one of {})",
                    Preset::NAMES.join(", ")
                )))
            }
        })
    }
}
