//! Shared helpers for the refinement integration tests: a plain dense
//! convolution oracle written from first principles, plus QTT encode/decode
//! shims so every test compares full grids elementwise.

use ndarray::{ArrayD, IxDyn};
use qtti_interp::kernels::StencilSet;
use qtti_interp::{BoundaryMode, TensorTrain, Tolerance};

/// Deterministic pseudo-random samples in [-1, 1].
pub fn lcg_samples(seed: u64, count: usize) -> Vec<f64> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
    (0..count)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

fn resolve(idx: i64, size: i64, boundary: BoundaryMode) -> Option<usize> {
    if (0..size).contains(&idx) {
        return Some(idx as usize);
    }
    match boundary {
        BoundaryMode::Periodic => Some(idx.rem_euclid(size) as usize),
        BoundaryMode::Clamped => Some(idx.clamp(0, size - 1) as usize),
        BoundaryMode::Reflect => {
            // Fold about the boundary samples with period 2(size - 1).
            let r = idx.rem_euclid(2 * (size - 1));
            Some(if r >= size { 2 * (size - 1) - r } else { r } as usize)
        }
        BoundaryMode::Zero => None,
    }
}

/// Reference refinement: for every fine index `j = a * 2^m + s` evaluate the
/// stencil at `t = s / 2^m` against the coarse neighbours of cell `a`,
/// resolving out-of-range neighbours per the boundary mode. Derivative
/// stencils are rescaled by the coarse grid spacing on the unit domain.
pub fn dense_refine(
    coarse: &[f64],
    st: &StencilSet,
    m: usize,
    boundary: BoundaryMode,
) -> Vec<f64> {
    let size = coarse.len() as i64;
    let sub = 1usize << m;
    let scale = (coarse.len() as f64).powi(st.derivative() as i32);
    (0..coarse.len() * sub)
        .map(|j| {
            let a = (j / sub) as i64;
            let t = (j % sub) as f64 / sub as f64;
            let weights = st.weights_at(t);
            let mut acc = 0.0;
            for (&k, w) in st.offsets().iter().zip(&weights) {
                if let Some(src) = resolve(a + k as i64, size, boundary) {
                    acc += w * coarse[src];
                }
            }
            acc * scale
        })
        .collect()
}

/// Refine one axis of a dense multi-dimensional array with the oracle above.
pub fn dense_refine_axis(
    a: &ArrayD<f64>,
    axis: usize,
    st: &StencilSet,
    m: usize,
    boundary: BoundaryMode,
) -> ArrayD<f64> {
    let mut shape: Vec<usize> = a.shape().to_vec();
    let old = shape[axis];
    shape[axis] = old << m;
    let mut out = ArrayD::zeros(IxDyn(&shape));
    // Enumerate lanes along `axis` by iterating the complementary indices.
    let lanes: usize = a.len() / old;
    let mut index = vec![0usize; a.ndim()];
    for lane in 0..lanes {
        let mut rem = lane;
        for ax in (0..a.ndim()).rev() {
            if ax == axis {
                continue;
            }
            index[ax] = rem % a.shape()[ax];
            rem /= a.shape()[ax];
        }
        let line: Vec<f64> = (0..old)
            .map(|i| {
                index[axis] = i;
                a[IxDyn(&index)]
            })
            .collect();
        let fine = dense_refine(&line, st, m, boundary);
        for (i, v) in fine.iter().enumerate() {
            index[axis] = i;
            out[IxDyn(&index)] = *v;
        }
    }
    out
}

/// Encode a plain value vector of length 2^n as an n-core QTT train.
pub fn qtt(values: &[f64]) -> TensorTrain {
    let n = values.len().trailing_zeros() as usize;
    assert_eq!(values.len(), 1 << n, "length must be a power of two");
    let dense = ArrayD::from_shape_vec(IxDyn(&vec![2; n]), values.to_vec()).unwrap();
    TensorTrain::from_dense(dense.view(), &Tolerance::exact()).unwrap()
}

/// Decode an n-core binary train back to its 2^n values in index order.
pub fn flatten(tt: &TensorTrain) -> Vec<f64> {
    tt.to_dense().unwrap().iter().copied().collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}
