//! Dense factorizations used by TT-SVD and rounding sweeps.
//!
//! QR comes from nalgebra; the SVD engine is faer because nalgebra's SVD can
//! silently return an invalid factorization on exactly rank-deficient
//! unfoldings, which separable functions produce all the time. Truncation rule
//! used everywhere in this workspace: given a Frobenius error budget `delta`,
//! discard the largest trailing set of singular values whose squared sum
//! stays within `delta^2`, and always drop values below `sigma_max * 1e-15`
//! so numerically rank-deficient unfoldings never produce noise ranks.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, ArrayView2};

/// Relative noise floor applied to every singular spectrum.
pub const SVD_NOISE_FLOOR: f64 = 1e-15;

/// Thin QR: `a = q * r` with `q: (m, k)`, `r: (k, n)`, `k = min(m, n)`.
pub fn qr_thin(a: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = a.qr();
    (qr.q(), qr.r())
}

/// Thin LQ: `a = l * q` with `l: (m, k)`, `q: (k, n)`, `k = min(m, n)`.
/// Computed as the transposed QR of `a^T`.
pub fn lq_thin(a: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = a.transpose().qr();
    (qr.r().transpose(), qr.q().transpose())
}

/// Rank-truncated SVD factors of an unfolding.
pub struct TruncatedSvd {
    /// `(m, rank)` left factor with orthonormal columns.
    pub u: DMatrix<f64>,
    /// Retained singular values, descending.
    pub sigma: DVector<f64>,
    /// `(rank, n)` right factor with orthonormal rows.
    pub vt: DMatrix<f64>,
    pub rank: usize,
}

impl TruncatedSvd {
    /// `diag(sigma) * vt`, the carry matrix pushed into the next core.
    pub fn sigma_vt(&self) -> DMatrix<f64> {
        let mut m = self.vt.clone();
        for i in 0..self.rank {
            m.row_mut(i).scale_mut(self.sigma[i]);
        }
        m
    }
}

/// SVD of `a` truncated so the discarded tail satisfies
/// `sum(sigma_i^2) <= frob_budget^2`, with the noise floor applied first and
/// an optional hard rank cap. At least one singular value is always kept.
pub fn svd_truncated(a: DMatrix<f64>, frob_budget: f64, max_rank: Option<usize>) -> TruncatedSvd {
    let (m, n) = (a.nrows(), a.ncols());
    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let svd = fa.svd().expect("svd convergence on finite input");
    let (fu, fs, fv) = (svd.U(), svd.S(), svd.V());

    let p = m.min(n);
    let u = DMatrix::from_fn(m, p, |i, k| fu[(i, k)]);
    let vt = DMatrix::from_fn(p, n, |k, j| fv[(j, k)]);
    let sigma = DVector::from_fn(p, |k, _| fs[k]);

    let sigma_max = if p > 0 { sigma[0] } else { 0.0 };
    let floor = sigma_max * SVD_NOISE_FLOOR;

    let mut rank = p;
    while rank > 1 && sigma[rank - 1] <= floor {
        rank -= 1;
    }
    let budget2 = frob_budget * frob_budget;
    let mut tail = 0.0;
    while rank > 1 {
        let next = tail + sigma[rank - 1] * sigma[rank - 1];
        if next > budget2 {
            break;
        }
        tail = next;
        rank -= 1;
    }
    if let Some(cap) = max_rank {
        rank = rank.min(cap.max(1));
    }

    TruncatedSvd {
        u: u.columns(0, rank).into_owned(),
        sigma: sigma.rows(0, rank).into_owned(),
        vt: vt.rows(0, rank).into_owned(),
        rank,
    }
}

/// Copy a 2-D ndarray view into a nalgebra matrix.
pub fn mat_from_view(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_row_iterator(a.nrows(), a.ncols(), a.iter().copied())
}

/// Unfold a core `(r, n, r2)` as the `(r * n, r2)` matrix.
pub fn unfold_left(core: &Array3<f64>) -> DMatrix<f64> {
    let (r, n, r2) = core.dim();
    DMatrix::from_row_iterator(r * n, r2, core.iter().copied())
}

/// Unfold a core `(r, n, r2)` as the `(r, n * r2)` matrix.
pub fn unfold_right(core: &Array3<f64>) -> DMatrix<f64> {
    let (r, n, r2) = core.dim();
    DMatrix::from_row_iterator(r, n * r2, core.iter().copied())
}

/// Fold a `(r * n, k)` matrix back into a core `(r, n, k)`.
pub fn fold_left(m: &DMatrix<f64>, r: usize, n: usize) -> Array3<f64> {
    let k = m.ncols();
    Array3::from_shape_fn((r, n, k), |(a, i, b)| m[(a * n + i, b)])
}

/// Fold a `(k, n * r2)` matrix back into a core `(k, n, r2)`.
pub fn fold_right(m: &DMatrix<f64>, n: usize, r2: usize) -> Array3<f64> {
    let k = m.nrows();
    Array3::from_shape_fn((k, n, r2), |(a, i, b)| m[(a, i * r2 + b)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_reconstructs() {
        let a = DMatrix::from_fn(7, 4, |i, j| ((i * 31 + j * 17) % 13) as f64 - 6.0);
        let (q, r) = qr_thin(a.clone());
        let diff = (&q * &r - &a).norm();
        assert!(diff < 1e-12, "qr residual {diff}");
        let qtq = q.transpose() * &q;
        let eye = DMatrix::<f64>::identity(4, 4);
        assert!((qtq - eye).norm() < 1e-12);
    }

    #[test]
    fn lq_reconstructs() {
        let a = DMatrix::from_fn(3, 9, |i, j| (i as f64 + 1.0) / (j as f64 + 2.0));
        let (l, q) = lq_thin(a.clone());
        assert!(((&l * &q) - &a).norm() < 1e-12);
        let qqt = &q * q.transpose();
        let eye = DMatrix::<f64>::identity(3, 3);
        assert!((qqt - eye).norm() < 1e-12);
    }

    #[test]
    fn svd_truncation_respects_budget() {
        // Rank-2 matrix plus a tiny rank-1 tail.
        let u = DMatrix::from_column_slice(4, 1, &[0.5, 0.5, 0.5, 0.5]);
        let v = DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]);
        let w = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 0.0, 0.0]);
        let a = 3.0 * &u * v.transpose() + 1e-9 * &u.clone_owned() * w.transpose();
        let t = svd_truncated(a, 1e-6, None);
        assert_eq!(t.rank, 1);

        let b = DMatrix::from_fn(5, 5, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        let t = svd_truncated(b, 0.0, None);
        assert_eq!(t.rank, 5);
    }

    #[test]
    fn exact_rank_one_outer_product() {
        // Separable samples produce exactly rank-deficient unfoldings; the
        // factorization must still reconstruct and report rank 1.
        let n = 32;
        let s: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin())
            .collect();
        let a = DMatrix::from_fn(n, n, |i, j| s[i] * (-(j as f64) / n as f64).exp());
        let t = svd_truncated(a.clone(), 0.0, None);
        assert_eq!(t.rank, 1);
        assert!((t.sigma[0] - a.norm()).abs() < 1e-12 * a.norm());
        let recon = &t.u * t.sigma_vt();
        assert!((recon - a).norm() < 1e-13 * 15.0);
    }
}
