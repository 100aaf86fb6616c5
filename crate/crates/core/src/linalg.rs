//! Small dense helpers shared by the per-node kernels.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::ChartField;

/// Read a `rows x cols` block stored row-major at `offset` within node `p`.
pub fn node_matrix(field: &ChartField, p: usize, offset: usize, rows: usize, cols: usize) -> DMatrix<f64> {
    let v = &field.node(p)[offset..offset + rows * cols];
    DMatrix::from_row_slice(rows, cols, v)
}

/// Write a matrix row-major at `offset` within node `p`.
pub fn store_matrix(field: &mut ChartField, p: usize, offset: usize, m: &DMatrix<f64>) {
    let (r, c) = m.shape();
    let out = &mut field.node_mut(p)[offset..offset + r * c];
    for i in 0..r {
        for j in 0..c {
            out[i * c + j] = m[(i, j)];
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Max entry of `|AᵀA − I|`.
pub fn orthogonality_defect(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let ata = a.transpose() * a;
    (ata - DMatrix::<f64>::identity(n, n)).amax()
}

/// Orthogonal polar factor by the Newton iteration `A <- (A + A^{-T}) / 2`.
pub fn polar_orthogonal(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut x = a.clone();
    for _ in 0..60 {
        let inv_t = x
            .clone()
            .try_inverse()
            .ok_or(Error::NotOrthogonal(f64::INFINITY))?
            .transpose();
        let next = (&x + inv_t) * 0.5;
        let step = (&next - &x).amax();
        x = next;
        if step <= 1e-14 {
            return Ok(x);
        }
    }
    if orthogonality_defect(&x) < 1e-12 {
        Ok(x)
    } else {
        Err(Error::NotOrthogonal(orthogonality_defect(&x)))
    }
}

/// Orthogonal matrix `Q` maximizing `tr(Q C)`, i.e. the rotation that best
/// maps the rows of one frame onto another when `C[a][b] = u_a · v_b`.
pub fn best_rotation(c: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = c.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    (u * v_t).transpose()
}

/// Rows `E_i` of an orthonormal frame obtained by Gram–Schmidt of the
/// coordinate basis, in index order, with respect to the metric `g`.
/// Row `i` holds the coordinate coefficients of `E_i`.
pub fn gram_schmidt_frame(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = g.nrows();
    let inner = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += a[i] * g[(i, j)] * b[j];
            }
        }
        s
    };
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for e in &rows {
            let c = inner(&v, e);
            for (vk, ek) in v.iter_mut().zip(e) {
                *vk -= c * ek;
            }
        }
        let norm2 = inner(&v, &v);
        if !(norm2 > 0.0) {
            return None;
        }
        let norm = norm2.sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        rows.push(v);
    }
    Some(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Subtract from `v` its projection on each orthonormal vector in `basis`,
/// twice for stability. Returns the remaining norm.
pub fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_of_perturbed_rotation() {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let noisy = &r + DMatrix::from_row_slice(2, 2, &[1e-4, 2e-4, -1e-4, 3e-4]);
        let q = polar_orthogonal(&noisy).unwrap();
        assert!(orthogonality_defect(&q) < 1e-14);
        assert!((q - r).amax() < 1e-3);
    }

    #[test]
    fn gram_schmidt_examples() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let e = gram_schmidt_frame(&g).unwrap();
        assert_eq!(e, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]));
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let e = gram_schmidt_frame(&g).unwrap();
        let gram = &e * &g * e.transpose();
        assert!((gram - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn best_rotation_recovers_sign() {
        let c = DMatrix::from_row_slice(1, 1, &[-0.7]);
        assert_eq!(best_rotation(&c)[(0, 0)], -1.0);
    }
}
