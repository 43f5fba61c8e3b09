//! Small dense linear algebra for the regression layer.
//!
//! Design matrices in this crate have at most seven columns, so everything
//! here is written for tall-thin problems: Householder QR for least squares,
//! triangular inversion for the `(X'X)^-1` bread of sandwich covariances, and
//! cyclic Jacobi for eigenvalues of small symmetric matrices.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("design matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Least-squares solution of `X b = y` together with `(X'X)^-1`.
#[derive(Debug, Clone)]
pub struct Lstsq {
    /// Coefficient vector, length `k`.
    pub beta: Vec<f64>,
    /// `(X'X)^-1`, row-major `k x k`.
    pub xtx_inv: Vec<f64>,
}

/// Solves the least-squares problem via Householder QR without pivoting.
///
/// `x` is row-major `n x k`. A near-zero diagonal entry of `R` signals that
/// the corresponding column is linearly dependent on the ones before it.
pub fn lstsq(x: &[f64], y: &[f64], n: usize, k: usize) -> Result<Lstsq, LinalgError> {
    if x.len() != n * k || y.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "x is {} elements (expected {n}*{k}), y is {} (expected {n})",
            x.len(),
            y.len()
        )));
    }
    if n < k {
        return Err(LinalgError::DimensionMismatch(format!(
            "underdetermined system: {n} rows < {k} columns"
        )));
    }

    // Column norms of the original matrix set the rank tolerance scale.
    let mut col_scale = vec![0.0_f64; k];
    for (j, scale) in col_scale.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..n {
            s += x[i * k + j] * x[i * k + j];
        }
        *scale = s.sqrt();
    }

    let mut a = x.to_vec();
    let mut rhs = y.to_vec();
    let mut v = vec![0.0_f64; n];

    for j in 0..k {
        // Householder vector for column j, rows j..n.
        let mut norm = 0.0;
        for i in j..n {
            norm += a[i * k + j] * a[i * k + j];
        }
        let norm = norm.sqrt();
        if norm <= 1e-12 * col_scale[j].max(1.0) {
            return Err(LinalgError::RankDeficient { column: j });
        }
        let alpha = if a[j * k + j] >= 0.0 { -norm } else { norm };
        let mut vnorm2 = 0.0;
        for i in j..n {
            v[i] = a[i * k + j];
            if i == j {
                v[i] -= alpha;
            }
            vnorm2 += v[i] * v[i];
        }
        if vnorm2 <= 0.0 {
            return Err(LinalgError::RankDeficient { column: j });
        }

        // Apply H = I - 2 v v'/v'v to the remaining columns and to the rhs.
        for c in j..k {
            let mut dot = 0.0;
            for i in j..n {
                dot += v[i] * a[i * k + c];
            }
            let f = 2.0 * dot / vnorm2;
            for i in j..n {
                a[i * k + c] -= f * v[i];
            }
        }
        let mut dot = 0.0;
        for i in j..n {
            dot += v[i] * rhs[i];
        }
        let f = 2.0 * dot / vnorm2;
        for i in j..n {
            rhs[i] -= f * v[i];
        }

        // Rank check against the original column scale.
        if a[j * k + j].abs() <= 1e-10 * col_scale[j].max(1.0) {
            return Err(LinalgError::RankDeficient { column: j });
        }
    }

    // Back-substitution: R beta = rhs[..k].
    let mut beta = vec![0.0_f64; k];
    for j in (0..k).rev() {
        let mut s = rhs[j];
        for c in j + 1..k {
            s -= a[j * k + c] * beta[c];
        }
        beta[j] = s / a[j * k + j];
    }

    // (X'X)^-1 = R^-1 R^-T from the upper-triangular factor.
    let rinv = invert_upper_triangular(&a, k);
    let mut xtx_inv = vec![0.0_f64; k * k];
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for m in i.max(j)..k {
                s += rinv[i * k + m] * rinv[j * k + m];
            }
            xtx_inv[i * k + j] = s;
        }
    }

    Ok(Lstsq { beta, xtx_inv })
}

/// Inverts the upper-triangular `k x k` block stored row-major in `r`
/// (entries below the diagonal are ignored).
fn invert_upper_triangular(r: &[f64], k: usize) -> Vec<f64> {
    let mut inv = vec![0.0_f64; k * k];
    for j in (0..k).rev() {
        inv[j * k + j] = 1.0 / r[j * k + j];
        for i in (0..j).rev() {
            let mut s = 0.0;
            for m in i + 1..=j {
                s += r[i * k + m] * inv[m * k + j];
            }
            inv[i * k + j] = -s / r[i * k + i];
        }
    }
    inv
}

/// Eigenvalues of a symmetric `k x k` matrix by cyclic Jacobi rotations,
/// returned in ascending order.
pub fn symmetric_eigenvalues(a: &[f64], k: usize) -> Vec<f64> {
    assert_eq!(a.len(), k * k, "matrix must be k x k");
    let mut m = a.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..k {
            for j in i + 1..k {
                off += m[i * k + j] * m[i * k + j];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius_norm(&m, k)) {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = m[p * k + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * k + p];
                let aqq = m[q * k + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..k {
                    let aip = m[i * k + p];
                    let aiq = m[i * k + q];
                    m[i * k + p] = c * aip - s * aiq;
                    m[i * k + q] = s * aip + c * aiq;
                }
                for i in 0..k {
                    let api = m[p * k + i];
                    let aqi = m[q * k + i];
                    m[p * k + i] = c * api - s * aqi;
                    m[q * k + i] = s * api + c * aqi;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..k).map(|i| m[i * k + i]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

fn frobenius_norm(a: &[f64], k: usize) -> f64 {
    a.iter().take(k * k).map(|v| v * v).sum::<f64>().sqrt()
}
