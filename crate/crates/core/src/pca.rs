//! Full-rank PCA used as a decorrelating transform.
//!
//! The basis comes from a one-sided Jacobi (Hestenes) singular value
//! decomposition of the mean-centered training matrix: plane rotations
//! orthogonalize the data columns while the accumulated rotations build
//! the right singular vectors. No dimensionality is dropped; the point is
//! only that the transformed training features are mutually uncorrelated.
//!
//! Centering uses the training mean for both training and test data. The
//! uncentered literal variant is available through [`PcaOptions`], in
//! which case decorrelation is only with respect to raw second moments.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PcaOptions {
    /// Subtract the training mean before rotating. Default true.
    pub center: bool,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions { center: true }
    }
}

/// Training mean plus orthonormal basis, columns ordered by descending
/// variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// d x d; column j is the j-th principal direction.
    pub basis: Matrix,
    /// Variance along each basis column, descending.
    pub variances: Vec<f64>,
}

impl PcaBasis {
    pub fn dim(&self) -> usize {
        self.basis.rows()
    }
}

/// Rotation threshold: a column pair counts as orthogonal when the
/// normalized dot product drops below this.
const JACOBI_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 64;

pub fn fit(x: &Matrix) -> Result<PcaBasis> {
    fit_with(x, &PcaOptions::default())
}

pub fn fit_with(x: &Matrix, opts: &PcaOptions) -> Result<PcaBasis> {
    let n = x.rows();
    let d = x.cols();
    if n < 2 {
        return Err(Error::Invalid(format!(
            "PCA needs at least 2 rows, got {n}"
        )));
    }
    if d == 0 {
        return Err(Error::Invalid("PCA needs at least one column".into()));
    }
    if !x.all_finite() {
        return Err(Error::Invalid("PCA input contains non-finite values".into()));
    }

    let mean = if opts.center {
        x.column_means()
    } else {
        vec![0.0; d]
    };

    // Column-major working copy of the (centered) data.
    let mut cols: Vec<Vec<f64>> = (0..d)
        .map(|j| x.iter_rows().map(|row| row[j] - mean[j]).collect())
        .collect();

    // Accumulated right singular vectors, also column-major.
    let mut v: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut a = 0.0;
                    let mut b = 0.0;
                    let mut g = 0.0;
                    for (x, y) in cp.iter().zip(cq) {
                        a += x * x;
                        b += y * y;
                        g += x * y;
                    }
                    (a, b, g)
                };
                if gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;

                let (left, right) = cols.split_at_mut(q);
                let cp = &mut left[p];
                let cq = &mut right[0];
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let xp = *x;
                    *x = c * xp - s * *y;
                    *y = s * xp + c * *y;
                }
                let (left, right) = v.split_at_mut(q);
                let vp = &mut left[p];
                let vq = &mut right[0];
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let xp = *x;
                    *x = c * xp - s * *y;
                    *y = s * xp + c * *y;
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }

    // Variance along each rotated column; stable sort keeps original
    // column order on ties.
    let denom = (n - 1) as f64;
    let mut order: Vec<usize> = (0..d).collect();
    let variances: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>() / denom)
        .collect();
    order.sort_by(|&a, &b| variances[b].partial_cmp(&variances[a]).unwrap());

    let mut basis = Matrix::zeros(d, d);
    let mut sorted_vars = Vec::with_capacity(d);
    for (out_col, &src) in order.iter().enumerate() {
        // Deterministic sign: the entry of largest magnitude ends positive.
        let mut best = 0;
        for i in 1..d {
            if v[src][i].abs() > v[src][best].abs() {
                best = i;
            }
        }
        let flip = if v[src][best] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            basis.set(i, out_col, flip * v[src][i]);
        }
        sorted_vars.push(variances[src]);
    }

    Ok(PcaBasis {
        mean,
        basis,
        variances: sorted_vars,
    })
}

/// Project rows onto the basis: `Z = (X - mean) * basis`.
pub fn transform(x: &Matrix, basis: &PcaBasis) -> Result<Matrix> {
    let d = basis.dim();
    if x.cols() != d {
        return Err(Error::Invalid(format!(
            "data has {} columns, basis expects {d}",
            x.cols()
        )));
    }
    let mut out = Matrix::zeros(x.rows(), d);
    let mut centered = vec![0.0; d];
    for i in 0..x.rows() {
        let row = x.row(i);
        for (k, c) in centered.iter_mut().enumerate() {
            *c = row[k] - basis.mean[k];
        }
        let out_row = out.row_mut(i);
        for (j, o) in out_row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, c) in centered.iter().enumerate() {
                acc += c * basis.basis.get(k, j);
            }
            *o = acc;
        }
    }
    Ok(out)
}
