//! Artifact writers: OBJ meshes and CSV tables.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gcr::{Equation, GcrResidual};
use crate::geometry::ImmersionField;

/// Wavefront OBJ of a 2D immersion: one `v` line per node in node order
/// (the ambient coordinates listed in `axes`), then two triangles per grid
/// quad with 1-based indices.
pub fn obj_string(f: &ImmersionField, axes: [usize; 3]) -> Result<String> {
    let chart = f.chart();
    if chart.dim() != 2 {
        return Err(Error::InvalidArgument("OBJ export needs a 2D chart".into()));
    }
    let m = f.ambient_dim();
    if let Some(&a) = axes.iter().find(|&&a| a >= m) {
        return Err(Error::AxisOutOfRange { axis: a, dim: m });
    }
    let mut s = String::new();
    for p in 0..chart.num_nodes() {
        let x = f.point(p);
        let _ = writeln!(s, "v {:.12e} {:.12e} {:.12e}", x[axes[0]], x[axes[1]], x[axes[2]]);
    }
    let (nx, ny) = (chart.counts()[0], chart.counts()[1]);
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let a = i * ny + j + 1;
            let (b, c, d) = (a + ny, a + ny + 1, a + 1);
            let _ = writeln!(s, "f {a} {b} {c}");
            let _ = writeln!(s, "f {a} {c} {d}");
        }
    }
    Ok(s)
}

/// Parse a `--project` list such as `0,1,3`.
pub fn parse_axes(text: &str) -> Result<[usize; 3]> {
    let v: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidArgument(format!("bad projection {text:?}: {e}")))?;
    v.try_into()
        .map_err(|_| Error::InvalidArgument(format!("projection needs three axes, got {text:?}")))
}

/// `equation,norm_inf,norm_l2,grid` rows, one per equation and grid.
pub fn residual_csv(rows: &[(usize, GcrResidual)]) -> String {
    let mut s = String::from("equation,norm_inf,norm_l2,grid\n");
    for (grid, res) in rows {
        for eq in Equation::ALL {
            let n = res.norms(eq);
            let _ = writeln!(s, "{},{:.14e},{:.14e},{}", eq.name(), n.inf, n.l2, grid);
        }
    }
    s
}

/// `diagnostic,value` rows.
pub fn key_value_csv(rows: &[(&str, f64)]) -> String {
    let mut s = String::from("diagnostic,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v:.14e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Chart;
    use crate::presets::Preset;

    #[test]
    fn obj_layout() {
        let chart = Chart::from_box(&[0.0, 0.0], &[1.0, 1.0], &[3, 4]).unwrap();
        let f = Preset::Plane.immersion(&chart).unwrap();
        let s = obj_string(&f, [0, 1, 2]).unwrap();
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 12);
        let faces: Vec<&str> = s.lines().filter(|l| l.starts_with("f ")).collect();
        assert_eq!(faces.len(), 2 * 2 * 3);
        assert_eq!(faces[0], "f 1 5 6");
        assert!(obj_string(&f, [0, 1, 3]).is_err());
    }

    #[test]
    fn axes_parse() {
        assert_eq!(parse_axes("0, 1,3").unwrap(), [0, 1, 3]);
        assert!(parse_axes("0,1").is_err());
        assert!(parse_axes("a,b,c").is_err());
    }
}
