//! Matrix-product operators acting on tensor trains.

use crate::error::{Error, Result};
use crate::tt::{TensorTrain, Tolerance, DENSE_CAPACITY};
use ndarray::{Array2, Array3, Array4};

/// An operator in train form: cores `O_k : (r_{k-1}, m_k, n_k, r_k)` where
/// `m_k` indexes output rows and `n_k` input columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TtOperator {
    cores: Vec<Array4<f64>>,
}

impl TtOperator {
    pub fn new(cores: Vec<Array4<f64>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::config("operator needs at least one core"));
        }
        for k in 0..cores.len() {
            let (r, m, n, r2) = cores[k].dim();
            if r == 0 || m == 0 || n == 0 || r2 == 0 {
                return Err(Error::config(format!("operator core {k} has a zero dimension")));
            }
            if k > 0 && cores[k - 1].dim().3 != r {
                return Err(Error::config(format!(
                    "operator rank mismatch between cores {} and {k}",
                    k - 1
                )));
            }
        }
        Ok(TtOperator { cores })
    }

    /// Identity operator on the given mode sizes.
    pub fn identity(dims: &[usize]) -> Self {
        let cores = dims
            .iter()
            .map(|&n| {
                Array4::from_shape_fn((1, n, n, 1), |(_, i, j, _)| if i == j { 1.0 } else { 0.0 })
            })
            .collect();
        TtOperator { cores }
    }

    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }

    pub fn row_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dim().1).collect()
    }

    pub fn col_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dim().2).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = vec![self.cores[0].dim().0];
        r.extend(self.cores.iter().map(|c| c.dim().3));
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    pub fn core(&self, k: usize) -> &Array4<f64> {
        &self.cores[k]
    }

    pub fn core_mut(&mut self, k: usize) -> &mut Array4<f64> {
        &mut self.cores[k]
    }

    pub fn cores(&self) -> &[Array4<f64>] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<Array4<f64>> {
        self.cores
    }

    pub fn scale(&mut self, c: f64) {
        let last = self.cores.len() - 1;
        self.cores[last].mapv_inplace(|x| x * c);
    }

    /// Swap row and column legs on every core.
    pub fn transpose(&self) -> TtOperator {
        let cores = self
            .cores
            .iter()
            .map(|c| {
                let (r, m, n, r2) = c.dim();
                Array4::from_shape_fn((r, n, m, r2), |(a, j, i, b)| c[(a, i, j, b)])
            })
            .collect();
        TtOperator { cores }
    }

    /// Apply to a train core by core; bond ranks multiply and no rounding is
    /// performed. The input must be closed with dims equal to `col_dims`.
    pub fn apply(&self, x: &TensorTrain) -> Result<TensorTrain> {
        if x.dims() != self.col_dims() {
            return Err(Error::config("apply: operand dimensions do not match operator columns"));
        }
        let mut cores = Vec::with_capacity(self.cores.len());
        for (oc, xc) in self.cores.iter().zip(x.cores()) {
            cores.push(apply_core(oc, xc));
        }
        TensorTrain::new(cores)
    }

    /// Operator product `self * other` (apply `other` first); ranks multiply.
    pub fn compose(&self, other: &TtOperator) -> Result<TtOperator> {
        if self.col_dims() != other.row_dims() {
            return Err(Error::config("compose: inner dimensions do not match"));
        }
        let mut cores = Vec::with_capacity(self.cores.len());
        for (a, b) in self.cores.iter().zip(&other.cores) {
            let (ra, m, k, ra2) = a.dim();
            let (rb, _, n, rb2) = b.dim();
            let mut c = Array4::zeros((ra * rb, m, n, ra2 * rb2));
            for i in 0..m {
                for j in 0..n {
                    for s in 0..k {
                        for x in 0..ra {
                            for y in 0..ra2 {
                                let va = a[(x, i, s, y)];
                                if va == 0.0 {
                                    continue;
                                }
                                for u in 0..rb {
                                    for w in 0..rb2 {
                                        c[(x * rb + u, i, j, y * rb2 + w)] +=
                                            va * b[(u, s, j, w)];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            cores.push(c);
        }
        TtOperator::new(cores)
    }

    /// Sum of two operators; interior ranks add.
    pub fn add(&self, other: &TtOperator) -> Result<TtOperator> {
        if self.row_dims() != other.row_dims() || self.col_dims() != other.col_dims() {
            return Err(Error::config("add: operator dimensions do not match"));
        }
        let a = self.as_tt();
        let b = other.as_tt();
        let sum = a.add(&b)?;
        Ok(TtOperator::from_tt(sum, &self.row_dims(), &self.col_dims()))
    }

    /// Round in the fused-leg representation.
    pub fn round(&mut self, tol: &Tolerance) {
        let rows = self.row_dims();
        let cols = self.col_dims();
        let mut tt = self.clone().into_tt();
        tt.round(tol);
        *self = TtOperator::from_tt(tt, &rows, &cols);
    }

    /// View with row and column legs fused into one physical leg of size
    /// `m_k * n_k` (row-major: `i * n + j`).
    pub fn as_tt(&self) -> TensorTrain {
        self.clone().into_tt()
    }

    pub fn into_tt(self) -> TensorTrain {
        let cores = self
            .cores
            .into_iter()
            .map(|c| {
                let (r, m, n, r2) = c.dim();
                c.into_shape_with_order((r, m * n, r2)).unwrap()
            })
            .collect();
        TensorTrain::new(cores).unwrap()
    }

    /// Inverse of [`as_tt`](Self::as_tt); `rows[k] * cols[k]` must equal the
    /// fused physical dimension of core `k`.
    pub fn from_tt(tt: TensorTrain, rows: &[usize], cols: &[usize]) -> TtOperator {
        let cores = tt
            .into_cores()
            .into_iter()
            .zip(rows.iter().zip(cols))
            .map(|(c, (&m, &n))| {
                let (r, mn, r2) = c.dim();
                assert_eq!(mn, m * n, "fused leg size mismatch");
                c.into_shape_with_order((r, m, n, r2)).unwrap()
            })
            .collect();
        TtOperator { cores }
    }

    /// Dense matrix, row-major over the row and column multi-indices.
    pub fn to_dense(&self) -> Result<Array2<f64>> {
        let nrows: usize = self.row_dims().iter().product();
        let ncols: usize = self.col_dims().iter().product();
        if nrows.checked_mul(ncols).map_or(true, |t| t > DENSE_CAPACITY) {
            return Err(Error::capacity("dense operator exceeds capacity".to_string()));
        }
        let r0 = self.cores[0].dim().0;
        let rd = self.cores[self.cores.len() - 1].dim().3;
        if r0 != 1 || rd != 1 {
            return Err(Error::config("to_dense requires a closed operator"));
        }
        // acc rows enumerate (row_prefix, col_prefix) pairs row-major.
        let mut acc = Array2::from_elem((1, 1), 1.0);
        let mut prefix = 1usize;
        for core in &self.cores {
            let (r, m, n, r2) = core.dim();
            let core_mat = core.view().into_shape_with_order((r, m * n * r2)).unwrap().to_owned();
            let next = acc.dot(&core_mat);
            prefix *= m * n;
            acc = next.into_shape_with_order((prefix, r2)).unwrap();
        }
        let flat = acc.into_shape_with_order(prefix).unwrap();
        // Unscramble interleaved (i1, j1, i2, j2, ...) into (rows, cols).
        let rows = self.row_dims();
        let cols = self.col_dims();
        let mut out = Array2::zeros((nrows, ncols));
        let mut idx = vec![0usize; self.cores.len() * 2];
        for (pos, &v) in flat.iter().enumerate() {
            // Decode pos into interleaved digits.
            let mut rem = pos;
            for k in (0..self.cores.len()).rev() {
                idx[2 * k + 1] = rem % cols[k];
                rem /= cols[k];
                idx[2 * k] = rem % rows[k];
                rem /= rows[k];
            }
            let mut ri = 0usize;
            let mut ci = 0usize;
            for k in 0..self.cores.len() {
                ri = ri * rows[k] + idx[2 * k];
                ci = ci * cols[k] + idx[2 * k + 1];
            }
            out[(ri, ci)] = v;
        }
        Ok(out)
    }
}

/// Contract one operator core with one train core.
pub fn apply_core(oc: &Array4<f64>, xc: &Array3<f64>) -> Array3<f64> {
    let (ro, m, n, ro2) = oc.dim();
    let (rx, _, rx2) = xc.dim();
    let mut out = Array3::zeros((ro * rx, m, ro2 * rx2));
    for i in 0..m {
        for j in 0..n {
            for a in 0..ro {
                for b in 0..ro2 {
                    let v = oc[(a, i, j, b)];
                    if v == 0.0 {
                        continue;
                    }
                    for x in 0..rx {
                        for y in 0..rx2 {
                            out[(a * rx + x, i, b * rx2 + y)] += v * xc[(x, j, y)];
                        }
                    }
                }
            }
        }
    }
    out
}
