//! Fixtures shared by the kernel benchmarks.

use std::f64::consts::TAU;

use gcrlab::dec::TorusMesh;
use gcrlab::{Cochain, DataSource, GeometricData, Preset, Result};

/// Closed-form preset data on the default chart.
pub fn preset_data(preset: Preset, nodes: usize) -> Result<GeometricData> {
    preset.data(&preset.chart(nodes)?, DataSource::Analytic)
}

/// Smooth primal one-form on the unit square torus with all three Hodge parts.
pub fn smooth_one_form(n: usize) -> Result<Cochain> {
    let mesh = TorusMesh::square(n, 1.0)?;
    Cochain::sample(&mesh, 1, false, |x, s| {
        let (u, v) = (TAU * x[0], TAU * x[1]);
        if s == 0 {
            0.3 + (u + 2.0 * v).sin()
        } else {
            -0.2 + u.cos() * v.sin()
        }
    })
}
