//! Tensor-train container and algebra.

use crate::error::{Error, Result};
use crate::linalg::{
    fold_left, fold_right, lq_thin, mat_from_view, qr_thin, svd_truncated, unfold_left,
    unfold_right,
};
use nalgebra::DMatrix;
use ndarray::{Array2, Array3, ArrayD, ArrayViewD, IxDyn};

/// Hard limit on dense intermediates, in elements (1 GiB of f64).
pub const DENSE_CAPACITY: usize = 1 << 27;

/// Truncation control for TT-SVD and rounding.
///
/// `relative` is a bound on the Frobenius error of the whole train relative
/// to its norm; it is split evenly across bonds. `relative = 0` keeps every
/// singular value above the machine noise floor, which recompresses exactly
/// rank-deficient trains without introducing approximation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub relative: f64,
    pub max_rank: Option<usize>,
}

impl Tolerance {
    pub fn exact() -> Self {
        Tolerance { relative: 0.0, max_rank: None }
    }

    pub fn relative(eps: f64) -> Self {
        Tolerance { relative: eps, max_rank: None }
    }

    pub fn with_max_rank(mut self, r: usize) -> Self {
        self.max_rank = Some(r);
        self
    }
}

/// A tensor train: a chain of cores `G_k : (r_{k-1}, n_k, r_k)`.
///
/// Boundary ranks are usually 1 ("closed"); open boundaries are permitted so
/// Tucker factor chains can carry a dangling mode leg on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorTrain {
    cores: Vec<Array3<f64>>,
}

impl TensorTrain {
    /// Build from cores, validating the rank chain.
    pub fn new(cores: Vec<Array3<f64>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::config("tensor train needs at least one core"));
        }
        for k in 0..cores.len() {
            let (r, n, _) = cores[k].dim();
            if n == 0 || r == 0 || cores[k].dim().2 == 0 {
                return Err(Error::config(format!("core {k} has a zero dimension")));
            }
            if k > 0 && cores[k - 1].dim().2 != r {
                return Err(Error::config(format!(
                    "rank mismatch between cores {} and {k}: {} vs {r}",
                    k - 1,
                    cores[k - 1].dim().2
                )));
            }
        }
        Ok(TensorTrain { cores })
    }

    /// Rank-1 train of zeros with the given physical dimensions.
    pub fn zeros(dims: &[usize]) -> Self {
        let cores = dims.iter().map(|&n| Array3::zeros((1, n, 1))).collect();
        TensorTrain { cores }
    }

    /// Rank-1 train with every entry equal to `value`.
    pub fn constant(dims: &[usize], value: f64) -> Self {
        let mut cores: Vec<Array3<f64>> =
            dims.iter().map(|&n| Array3::from_elem((1, n, 1), 1.0)).collect();
        let last = cores.len() - 1;
        cores[last].mapv_inplace(|x| x * value);
        TensorTrain { cores }
    }

    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dim().1).collect()
    }

    /// All `d + 1` bond ranks, boundaries included.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = vec![self.cores[0].dim().0];
        r.extend(self.cores.iter().map(|c| c.dim().2));
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Total number of stored core entries.
    pub fn param_count(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }

    pub fn is_closed(&self) -> bool {
        self.cores[0].dim().0 == 1 && self.cores[self.cores.len() - 1].dim().2 == 1
    }

    pub fn core(&self, k: usize) -> &Array3<f64> {
        &self.cores[k]
    }

    pub fn core_mut(&mut self, k: usize) -> &mut Array3<f64> {
        &mut self.cores[k]
    }

    pub fn cores(&self) -> &[Array3<f64>] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<Array3<f64>> {
        self.cores
    }

    /// Evaluate a closed train at one multi-index.
    pub fn eval(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.cores.len());
        debug_assert!(self.is_closed());
        let mut v: Vec<f64> = vec![1.0];
        let mut next: Vec<f64> = Vec::new();
        for (core, &i) in self.cores.iter().zip(idx) {
            let (r, _, r2) = core.dim();
            next.clear();
            next.resize(r2, 0.0);
            let slice = core.index_axis(ndarray::Axis(1), i);
            for a in 0..r {
                let va = v[a];
                if va != 0.0 {
                    for b in 0..r2 {
                        next[b] += va * slice[(a, b)];
                    }
                }
            }
            std::mem::swap(&mut v, &mut next);
        }
        v[0]
    }

    /// Evaluate an open train at one multi-index, returning the
    /// `(r_0, r_d)` boundary matrix.
    pub fn eval_open(&self, idx: &[usize]) -> Array2<f64> {
        debug_assert_eq!(idx.len(), self.cores.len());
        let r0 = self.cores[0].dim().0;
        let mut m = Array2::from_shape_fn((r0, r0), |(i, j)| if i == j { 1.0 } else { 0.0 });
        for (core, &i) in self.cores.iter().zip(idx) {
            let slice = core.index_axis(ndarray::Axis(1), i);
            m = m.dot(&slice);
        }
        m
    }

    /// Contract a closed train to a dense array. Guarded by
    /// [`DENSE_CAPACITY`].
    pub fn to_dense(&self) -> Result<ArrayD<f64>> {
        if !self.is_closed() {
            return Err(Error::config("to_dense requires a closed train"));
        }
        let dims = self.dims();
        let total: usize = dims.iter().try_fold(1usize, |acc, &n| {
            acc.checked_mul(n).filter(|&t| t <= DENSE_CAPACITY)
        }).ok_or_else(|| {
            Error::capacity(format!("dense size of {dims:?} exceeds {DENSE_CAPACITY} elements"))
        })?;

        // acc: (prefix, r) matrix, prefix enumerated row-major over consumed dims.
        let mut acc = Array2::from_elem((1, 1), 1.0);
        for core in &self.cores {
            let (r, n, r2) = core.dim();
            let core_mat = core.view().into_shape_with_order((r, n * r2)).unwrap().to_owned();
            let next = acc.dot(&core_mat);
            let rows = next.len() / r2;
            acc = next.into_shape_with_order((rows, r2)).unwrap();
        }
        debug_assert_eq!(acc.dim(), (total, 1));
        let flat = acc.into_shape_with_order(total).unwrap().to_vec();
        Ok(ArrayD::from_shape_vec(IxDyn(&dims), flat).unwrap())
    }

    /// TT-SVD of a dense array.
    ///
    /// The per-bond truncation budget is `tol.relative * |A|_F / sqrt(d-1)`,
    /// so the total relative Frobenius error is at most `tol.relative`.
    pub fn from_dense(a: ArrayViewD<'_, f64>, tol: &Tolerance) -> Result<Self> {
        let dims: Vec<usize> = a.shape().to_vec();
        if dims.is_empty() {
            return Err(Error::config("from_dense needs at least one axis"));
        }
        if a.len() > DENSE_CAPACITY {
            return Err(Error::capacity("input exceeds dense capacity".to_string()));
        }
        let d = dims.len();
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let delta = if d > 1 { tol.relative * norm / ((d - 1) as f64).sqrt() } else { 0.0 };

        let flat: Vec<f64> = a.iter().copied().collect();
        let mut rest: usize = flat.len();
        let mut carry = DMatrix::from_row_slice(1, rest, &flat);
        let mut r = 1usize;
        let mut cores: Vec<Array3<f64>> = Vec::with_capacity(d);

        for (k, &n) in dims.iter().enumerate() {
            rest /= n;
            if k + 1 == d {
                let core = Array3::from_shape_fn((r, n, 1), |(a0, i, _)| carry[(a0, i)]);
                cores.push(core);
                break;
            }
            // carry: (r, n * rest) with row-major logical layout; regroup to (r * n, rest).
            let grouped = DMatrix::from_fn(r * n, rest, |row, col| {
                let a0 = row / n;
                let i = row % n;
                carry[(a0, i * rest + col)]
            });
            let t = svd_truncated(grouped, delta, tol.max_rank);
            cores.push(fold_left(&t.u, r, n));
            r = t.rank;
            carry = t.sigma_vt();
        }
        TensorTrain::new(cores)
    }

    /// Frobenius norm, computed by contracting the train with itself.
    pub fn norm2(&self) -> f64 {
        self.dot(self).max(0.0).sqrt()
    }

    /// Inner product of two closed trains with equal dimensions.
    pub fn dot(&self, other: &TensorTrain) -> f64 {
        debug_assert_eq!(self.dims(), other.dims());
        debug_assert!(self.is_closed() && other.is_closed());
        // env: (ra, rb) boundary environment.
        let mut env = Array2::from_elem((1, 1), 1.0);
        for (ca, cb) in self.cores.iter().zip(&other.cores) {
            let (ra, n, ra2) = ca.dim();
            let (_, _, rb2) = cb.dim();
            let mut next = Array2::zeros((ra2, rb2));
            for i in 0..n {
                let sa = ca.index_axis(ndarray::Axis(1), i);
                let sb = cb.index_axis(ndarray::Axis(1), i);
                // next += sa^T * env * sb
                let mut tmp = Array2::zeros((ra2, env.dim().1));
                for a2 in 0..ra2 {
                    for b in 0..env.dim().1 {
                        let mut s = 0.0;
                        for a in 0..ra {
                            s += sa[(a, a2)] * env[(a, b)];
                        }
                        tmp[(a2, b)] = s;
                    }
                }
                next = next + tmp.dot(&sb);
            }
            env = next;
        }
        env[(0, 0)]
    }

    /// Multiply by a scalar (applied to the last core).
    pub fn scale(&mut self, c: f64) {
        let last = self.cores.len() - 1;
        self.cores[last].mapv_inplace(|x| x * c);
    }

    /// Sum of two trains with equal dimensions and boundary ranks.
    /// Interior ranks add; no rounding is performed.
    pub fn add(&self, other: &TensorTrain) -> Result<TensorTrain> {
        if self.dims() != other.dims() {
            return Err(Error::config("add: dimension mismatch"));
        }
        let d = self.cores.len();
        let (ra0, rb0) = (self.cores[0].dim().0, other.cores[0].dim().0);
        let (rad, rbd) = (self.cores[d - 1].dim().2, other.cores[d - 1].dim().2);
        if ra0 != rb0 || rad != rbd {
            return Err(Error::config("add: boundary rank mismatch"));
        }
        let mut cores = Vec::with_capacity(d);
        for k in 0..d {
            let a = &self.cores[k];
            let b = &other.cores[k];
            let (ra, n, ra2) = a.dim();
            let (rb, _, rb2) = b.dim();
            let left_joined = k > 0;
            let right_joined = k + 1 < d;
            let rl = if left_joined { ra + rb } else { ra };
            let rr = if right_joined { ra2 + rb2 } else { ra2 };
            let mut c = Array3::zeros((rl, n, rr));
            for i in 0..n {
                for x in 0..ra {
                    for y in 0..ra2 {
                        c[(x, i, y)] += a[(x, i, y)];
                    }
                }
                let ox = if left_joined { ra } else { 0 };
                let oy = if right_joined { ra2 } else { 0 };
                for x in 0..rb {
                    for y in 0..rb2 {
                        c[(ox + x, i, oy + y)] += b[(x, i, y)];
                    }
                }
            }
            cores.push(c);
        }
        TensorTrain::new(cores)
    }

    /// Elementwise (Hadamard) product; ranks multiply.
    pub fn hadamard(&self, other: &TensorTrain) -> Result<TensorTrain> {
        if self.dims() != other.dims() {
            return Err(Error::config("hadamard: dimension mismatch"));
        }
        let mut cores = Vec::with_capacity(self.cores.len());
        for (a, b) in self.cores.iter().zip(&other.cores) {
            let (ra, n, ra2) = a.dim();
            let (rb, _, rb2) = b.dim();
            let mut c = Array3::zeros((ra * rb, n, ra2 * rb2));
            for i in 0..n {
                for x in 0..ra {
                    for y in 0..ra2 {
                        let v = a[(x, i, y)];
                        if v == 0.0 {
                            continue;
                        }
                        for u in 0..rb {
                            for w in 0..rb2 {
                                c[(x * rb + u, i, y * rb2 + w)] = v * b[(u, i, w)];
                            }
                        }
                    }
                }
            }
            cores.push(c);
        }
        TensorTrain::new(cores)
    }

    /// Deterministic SVD rounding.
    ///
    /// Right-to-left orthogonalization followed by a left-to-right truncation
    /// sweep; afterwards every core except the last is left-orthogonal and
    /// the relative Frobenius error is at most `tol.relative`.
    pub fn round(&mut self, tol: &Tolerance) {
        let d = self.cores.len();
        if d == 1 {
            return;
        }
        self.orthogonalize_right();
        let norm = self.cores[0].iter().map(|x| x * x).sum::<f64>().sqrt();
        let delta = tol.relative * norm / ((d - 1) as f64).sqrt();
        self.truncate_left_to_right(delta, tol.max_rank, d - 1);
    }

    /// Rounding restricted to the first `max_bond` bonds (1-indexed bonds
    /// `1..=max_bond`); later bonds are only gauge-transformed. Used when a
    /// refinement must leave interpolation tails untouched.
    pub fn round_bonds(&mut self, tol: &Tolerance, max_bond: usize) {
        let d = self.cores.len();
        if d == 1 || max_bond == 0 {
            return;
        }
        let max_bond = max_bond.min(d - 1);
        self.orthogonalize_right();
        let norm = self.cores[0].iter().map(|x| x * x).sum::<f64>().sqrt();
        let delta = tol.relative * norm / (max_bond as f64).sqrt();
        self.truncate_left_to_right(delta, tol.max_rank, max_bond);
    }

    /// Make cores `1..d` right-orthogonal via LQ sweeps (exact; ranks can
    /// only shrink to their dimensional minimum).
    fn orthogonalize_right(&mut self) {
        let d = self.cores.len();
        for k in (1..d).rev() {
            let core = &self.cores[k];
            let (r, n, r2) = core.dim();
            let m = unfold_right(core);
            let (l, q) = lq_thin(m);
            let rho = q.nrows();
            self.cores[k] = fold_right(&q, n, r2);
            let prev = &self.cores[k - 1];
            let (rp, np, _) = prev.dim();
            let prev_mat = mat_from_view(
                prev.view().into_shape_with_order((rp * np, r)).unwrap(),
            );
            let merged = prev_mat * &l;
            self.cores[k - 1] = fold_left(&merged, rp, np);
            debug_assert_eq!(self.cores[k - 1].dim().2, rho);
        }
    }

    /// Left-to-right SVD truncation of bonds `1..=limit`; assumes the chain
    /// is right-orthogonal past the working site.
    fn truncate_left_to_right(&mut self, delta: f64, max_rank: Option<usize>, limit: usize) {
        for k in 0..limit {
            let core = &self.cores[k];
            let (r, n, _) = core.dim();
            let t = svd_truncated(unfold_left(core), delta, max_rank);
            self.cores[k] = fold_left(&t.u, r, n);
            let carry = t.sigma_vt();
            let next = &self.cores[k + 1];
            let (rn, nn, rn2) = next.dim();
            let next_mat = mat_from_view(
                next.view().into_shape_with_order((rn, nn * rn2)).unwrap(),
            );
            let merged = carry * next_mat;
            self.cores[k + 1] = fold_right(&merged, nn, rn2);
        }
    }

    /// Left-orthogonalize every core except the last (QR sweep, exact).
    pub fn orthogonalize_left(&mut self) {
        let d = self.cores.len();
        for k in 0..d - 1 {
            let core = &self.cores[k];
            let (r, n, _) = core.dim();
            let (q, rmat) = qr_thin(unfold_left(core));
            self.cores[k] = fold_left(&q, r, n);
            let next = &self.cores[k + 1];
            let (rn, nn, rn2) = next.dim();
            let next_mat = mat_from_view(
                next.view().into_shape_with_order((rn, nn * rn2)).unwrap(),
            );
            let merged = rmat * next_mat;
            self.cores[k + 1] = fold_right(&merged, nn, rn2);
        }
    }

    /// Largest deviation of cores `0..d-1` from left-orthogonality,
    /// `max_k |G_k^T G_k - I|_max`. Diagnostic for tests.
    pub fn left_orthogonality_defect(&self) -> f64 {
        let d = self.cores.len();
        let mut worst = 0.0_f64;
        for core in &self.cores[..d.saturating_sub(1)] {
            let m = unfold_left(core);
            let g = m.transpose() * &m;
            let k = g.nrows();
            for i in 0..k {
                for j in 0..k {
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((g[(i, j)] - target).abs());
                }
            }
        }
        worst
    }
}
