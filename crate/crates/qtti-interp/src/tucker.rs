//! Tucker-format fields whose factor matrices are themselves dyadic trains.
//!
//! A d-dimensional field is stored as a small Tucker core (kept as a closed
//! d-core train with physical dimensions gamma_m) plus one factor chain per
//! dimension. Factor chains are open on the left: the first core carries the
//! dangling gamma_m leg, the remaining cores are ordinary bit cores, and the
//! right boundary rank is 1. Column gamma of the chain is the gamma-th
//! orthonormal factor column sampled on the dyadic grid.

use crate::Result;
use nalgebra::DMatrix;
use ndarray::{Array2, Array3, ArrayD, ArrayView2, ArrayViewD, IxDyn};
use qtti_core::linalg::svd_truncated;
use qtti_core::tt::DENSE_CAPACITY;
use qtti_core::{Error, TensorTrain, Tolerance};

#[derive(Debug, Clone)]
pub struct TuckerTT {
    core: TensorTrain,
    factors: Vec<TensorTrain>,
}

impl TuckerTT {
    pub fn new(core: TensorTrain, factors: Vec<TensorTrain>) -> Result<Self> {
        if core.len() != factors.len() {
            return Err(Error::config("one factor chain per core mode is required"));
        }
        if !core.is_closed() {
            return Err(Error::config("the Tucker core train must be closed"));
        }
        for (m, f) in factors.iter().enumerate() {
            let ranks = f.ranks();
            if ranks[ranks.len() - 1] != 1 {
                return Err(Error::config(format!("factor {m} must have right rank 1")));
            }
            if ranks[0] != core.dims()[m] {
                return Err(Error::config(format!(
                    "factor {m} left rank {} does not match core mode {}",
                    ranks[0],
                    core.dims()[m]
                )));
            }
            if f.dims().iter().any(|&n| n != 2) {
                return Err(Error::config(format!("factor {m} must have binary cores")));
            }
        }
        Ok(TuckerTT { core, factors })
    }

    pub fn dims(&self) -> usize {
        self.factors.len()
    }

    /// Per-mode Tucker ranks gamma_m.
    pub fn tucker_ranks(&self) -> Vec<usize> {
        self.core.dims()
    }

    /// Bit-scale count of each factor chain.
    pub fn scales(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.len()).collect()
    }

    pub fn core(&self) -> &TensorTrain {
        &self.core
    }

    pub fn factor(&self, m: usize) -> &TensorTrain {
        &self.factors[m]
    }

    pub fn factors(&self) -> &[TensorTrain] {
        &self.factors
    }

    /// Replace factor chain `m`, revalidating the boundary ranks.
    pub fn with_factor(mut self, m: usize, factor: TensorTrain) -> Result<Self> {
        self.factors[m] = factor;
        TuckerTT::new(self.core, self.factors)
    }

    pub fn param_count(&self) -> usize {
        self.core.param_count() + self.factors.iter().map(|f| f.param_count()).sum::<usize>()
    }

    pub fn max_rank(&self) -> usize {
        self.factors
            .iter()
            .map(|f| f.max_rank())
            .chain(std::iter::once(self.core.max_rank()))
            .max()
            .unwrap_or(1)
    }

    /// Factor chain `m` contracted to its dense `(2^{N_m}, gamma_m)` matrix.
    pub fn factor_matrix(&self, m: usize) -> Result<Array2<f64>> {
        let f = &self.factors[m];
        let gamma = f.ranks()[0];
        let pts = 1usize << f.len();
        // Close the chain with an identity core so the dangling leg becomes
        // a physical axis, then contract.
        let mut cores = Vec::with_capacity(f.len() + 1);
        cores.push(Array3::from_shape_fn((1, gamma, gamma), |(_, i, j)| {
            if i == j {
                1.0
            } else {
                0.0
            }
        }));
        cores.extend(f.cores().iter().cloned());
        let closed = TensorTrain::new(cores)?;
        let dense = closed.to_dense()?;
        let flat: Vec<f64> = dense.iter().copied().collect();
        let by_col = Array2::from_shape_vec((gamma, pts), flat).unwrap();
        Ok(by_col.t().to_owned())
    }

    /// Evaluate at one per-dimension dyadic index tuple.
    pub fn eval(&self, indices: &[u64]) -> f64 {
        debug_assert_eq!(indices.len(), self.dims());
        let weights: Vec<Vec<f64>> = self
            .factors
            .iter()
            .zip(indices)
            .map(|(f, &idx)| {
                let n = f.len();
                let bits: Vec<usize> =
                    (0..n).map(|k| ((idx >> (n - 1 - k)) & 1) as usize).collect();
                let col = f.eval_open(&bits);
                col.column(0).to_vec()
            })
            .collect();
        let mut v = vec![1.0f64];
        for (k, core) in self.core.cores().iter().enumerate() {
            let (r, g, r2) = core.dim();
            let w = &weights[k];
            let mut next = vec![0.0f64; r2];
            for a in 0..r {
                if v[a] == 0.0 {
                    continue;
                }
                for gi in 0..g {
                    let vw = v[a] * w[gi];
                    if vw == 0.0 {
                        continue;
                    }
                    for b in 0..r2 {
                        next[b] += vw * core[(a, gi, b)];
                    }
                }
            }
            v = next;
        }
        v[0]
    }

    /// Contract the Tucker structure into a closed plain-layout train: the
    /// bit cores of each dimension appear consecutively, the Tucker core is
    /// absorbed into the first core of its block, and the core bond threads
    /// through the rest of the block to reach the next dimension.
    pub fn to_plain_train(&self) -> Result<TensorTrain> {
        let mut cores: Vec<Array3<f64>> = Vec::new();
        for mu in 0..self.dims() {
            let c = &self.core.cores()[mu];
            let (c_prev, gamma, c_next) = c.dim();
            let f = self.factors[mu].cores();
            let f0 = &f[0];
            let r1 = f0.dim().2;
            let mut first = Array3::zeros((c_prev, 2, c_next * r1));
            for a in 0..c_prev {
                for i in 0..2 {
                    for b in 0..c_next {
                        for r in 0..r1 {
                            let mut v = 0.0;
                            for g in 0..gamma {
                                v += c[(a, g, b)] * f0[(g, i, r)];
                            }
                            first[(a, i, b * r1 + r)] = v;
                        }
                    }
                }
            }
            cores.push(first);
            for fj in &f[1..] {
                let (rx, _, ry) = fj.dim();
                let mut out = Array3::zeros((c_next * rx, 2, c_next * ry));
                for e in 0..c_next {
                    for x in 0..rx {
                        for i in 0..2 {
                            for y in 0..ry {
                                out[(e * rx + x, i, e * ry + y)] = fj[(x, i, y)];
                            }
                        }
                    }
                }
                cores.push(out);
            }
        }
        TensorTrain::new(cores)
    }

    /// Contract the whole field to a dense array. Capacity-guarded.
    pub fn to_dense(&self) -> Result<ArrayD<f64>> {
        let shape: Vec<usize> = self.scales().iter().map(|&n| 1usize << n).collect();
        shape
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n).filter(|&t| t <= DENSE_CAPACITY))
            .ok_or_else(|| Error::capacity("Tucker field too large to densify".to_string()))?;
        let mut out = self.core.to_dense()?;
        for m in 0..self.dims() {
            let u = self.factor_matrix(m)?;
            out = mode_multiply(&out, u.view(), m);
        }
        Ok(out)
    }
}

/// Multiply mode `mode` of `a` by `mat`, contracting over `mat`'s columns:
/// `out[.., i, ..] = sum_j mat[i, j] a[.., j, ..]`.
pub fn mode_multiply(a: &ArrayD<f64>, mat: ArrayView2<'_, f64>, mode: usize) -> ArrayD<f64> {
    let d = a.ndim();
    let (new_dim, old_dim) = mat.dim();
    assert_eq!(a.shape()[mode], old_dim, "mode dimension mismatch");

    let mut order: Vec<usize> = Vec::with_capacity(d);
    order.push(mode);
    order.extend((0..d).filter(|&ax| ax != mode));
    let moved: Vec<f64> = a.view().permuted_axes(IxDyn(&order)).iter().copied().collect();
    let rest = a.len() / old_dim;
    let m_in = DMatrix::from_row_slice(old_dim, rest, &moved);
    let m_mat = DMatrix::from_row_iterator(new_dim, old_dim, mat.iter().copied());
    let prod = m_mat * m_in;

    let mut shape_front: Vec<usize> = Vec::with_capacity(d);
    shape_front.push(new_dim);
    shape_front.extend((0..d).filter(|&ax| ax != mode).map(|ax| a.shape()[ax]));
    let flat: Vec<f64> =
        (0..new_dim * rest).map(|i| prod[(i / rest, i % rest)]).collect();
    let front = ArrayD::from_shape_vec(IxDyn(&shape_front), flat).unwrap();

    let mut inv = vec![0usize; d];
    for (pos, &ax) in order.iter().enumerate() {
        inv[ax] = pos;
    }
    let back: Vec<f64> = front.view().permuted_axes(IxDyn(&inv)).iter().copied().collect();
    let mut out_shape = a.shape().to_vec();
    out_shape[mode] = new_dim;
    ArrayD::from_shape_vec(IxDyn(&out_shape), back).unwrap()
}

/// Exact open-left train of a `(gamma, 2^N)` matrix: the gamma leg stays as
/// the left boundary rank and each bit becomes one core.
pub fn open_left_train(u_t: ArrayView2<'_, f64>) -> Result<TensorTrain> {
    let (gamma, pts) = u_t.dim();
    let n = pts.trailing_zeros() as usize;
    if pts < 2 || pts != 1usize << n {
        return Err(Error::config("factor length must be a power of two of at least 2"));
    }
    let mut shape = vec![gamma];
    shape.extend(std::iter::repeat(2).take(n));
    // iter() walks logical row-major order even on transposed views.
    let flat: Vec<f64> = u_t.iter().copied().collect();
    let dense = ArrayD::from_shape_vec(IxDyn(&shape), flat).unwrap();
    let tt = TensorTrain::from_dense(dense.view(), &Tolerance::exact())?;
    let mut cores = tt.into_cores();

    // Absorb the leading (1, gamma, r1) core into its neighbour so gamma
    // becomes the left boundary rank.
    let first = cores.remove(0);
    let r1 = first.dim().2;
    let second = &cores[0];
    let (_, _, r2) = second.dim();
    let mut merged = Array3::zeros((gamma, 2, r2));
    for g in 0..gamma {
        for i in 0..2 {
            for b in 0..r2 {
                let mut v = 0.0;
                for a in 0..r1 {
                    v += first[(0, g, a)] * second[(a, i, b)];
                }
                merged[(g, i, b)] = v;
            }
        }
    }
    cores[0] = merged;
    TensorTrain::new(cores)
}

/// Higher-order SVD of a dense array into Tucker form.
///
/// Each mode's truncation budget is `(tol/2) |A| / sqrt(d)` and the core
/// train is compressed at `tol/2`, so the total relative error stays within
/// `tol.relative`.
pub fn to_tucker(a: ArrayViewD<'_, f64>, tol: &Tolerance) -> Result<TuckerTT> {
    let d = a.ndim();
    if d == 0 {
        return Err(Error::config("to_tucker needs at least one axis"));
    }
    if a.len() > DENSE_CAPACITY {
        return Err(Error::capacity("input exceeds dense capacity".to_string()));
    }
    for (m, &n) in a.shape().iter().enumerate() {
        if n < 2 || n & (n - 1) != 0 {
            return Err(Error::config(format!("axis {m} length {n} is not a power of two")));
        }
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mode_budget = 0.5 * tol.relative * norm / (d as f64).sqrt();

    let mut core: ArrayD<f64> = a.to_owned();
    let mut factor_mats: Vec<Array2<f64>> = Vec::with_capacity(d);
    for m in 0..d {
        let n_m = a.shape()[m];
        let mut order: Vec<usize> = Vec::with_capacity(d);
        order.push(m);
        order.extend((0..d).filter(|&ax| ax != m));
        let moved: Vec<f64> = a.view().permuted_axes(IxDyn(&order)).iter().copied().collect();
        let unf = DMatrix::from_row_slice(n_m, a.len() / n_m, &moved);
        let t = svd_truncated(unf, mode_budget, tol.max_rank);
        let u = Array2::from_shape_fn((n_m, t.rank), |(i, j)| t.u[(i, j)]);
        // Project this mode down to its Tucker rank.
        core = mode_multiply(&core, u.t(), m);
        factor_mats.push(u);
    }

    let core_tol = Tolerance { relative: 0.5 * tol.relative, max_rank: tol.max_rank };
    let core_tt = TensorTrain::from_dense(core.view(), &core_tol)?;
    let factors = factor_mats
        .iter()
        .map(|u| open_left_train(u.t()))
        .collect::<Result<Vec<_>>>()?;
    TuckerTT::new(core_tt, factors)
}
