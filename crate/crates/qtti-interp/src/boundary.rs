//! Edge handling for non-periodic refinement.
//!
//! With one-sided shift operators, cells whose stencil reaches past the grid
//! simply lose those contributions. The repair is a short sum of rank-1
//! delta terms: for every (cell, offset) pair that lands out of range, add
//! the stencil polynomial weighted by a substitute in-range sample (the edge
//! value for clamping, the mirrored value for reflection, nothing for zero
//! padding).

use crate::kernels::{stencils, Kernel, StencilSet};
use crate::poly::{polynomial_qtt_cores, PolyBasis};
use ndarray::Array3;
use qtti_core::{Error, Result, TensorTrain, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    Periodic,
    Clamped,
    Reflect,
    Zero,
}

impl BoundaryMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryMode::Periodic => "periodic",
            BoundaryMode::Clamped => "clamped",
            BoundaryMode::Reflect => "reflect",
            BoundaryMode::Zero => "zero",
        }
    }

    pub fn parse(s: &str) -> Result<BoundaryMode> {
        match s {
            "periodic" => Ok(BoundaryMode::Periodic),
            "clamped" => Ok(BoundaryMode::Clamped),
            "reflect" => Ok(BoundaryMode::Reflect),
            "zero" => Ok(BoundaryMode::Zero),
            other => Err(Error::config(format!("unknown boundary mode: {other}"))),
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, BoundaryMode::Periodic)
    }
}

/// Ghost index resolved to its in-range substitute, or `None` when the mode
/// contributes nothing (zero padding) or needs no fix (periodic).
pub fn resolve_ghost(ghost: i64, size: i64, mode: BoundaryMode) -> Option<i64> {
    debug_assert!(ghost < 0 || ghost >= size);
    match mode {
        BoundaryMode::Periodic | BoundaryMode::Zero => None,
        BoundaryMode::Clamped => Some(if ghost < 0 { 0 } else { size - 1 }),
        BoundaryMode::Reflect => {
            // Mirror about the boundary samples: f(-i) = f(i),
            // f(size-1+i) = f(size-1-i).
            let m = if ghost < 0 { -ghost } else { 2 * (size - 1) - ghost };
            Some(m.clamp(0, size - 1))
        }
    }
}

/// All (output cell, offset, substitute cell) triples where offset `k`
/// pushes cell `a` past the edge of a grid of 2^n cells.
pub fn correction_pairs(
    offsets: &[isize],
    n: usize,
    mode: BoundaryMode,
) -> Vec<(u64, isize, u64)> {
    let size = 1i64 << n;
    let mut out = Vec::new();
    for &k in offsets {
        let k64 = k as i64;
        let cells: Box<dyn Iterator<Item = i64>> = if k64 < 0 {
            Box::new(0..(-k64).min(size))
        } else if k64 > 0 {
            Box::new((size - k64).max(0)..size)
        } else {
            continue;
        };
        for a in cells {
            if let Some(src) = resolve_ghost(a + k64, size, mode) {
                out.push((a as u64, k, src as u64));
            }
        }
    }
    out
}

/// Rank-1 indicator train: 1 at index `a`, 0 elsewhere.
pub fn delta_train(a: u64, n: usize) -> TensorTrain {
    let cores = (0..n)
        .map(|j| {
            let bit = ((a >> (n - 1 - j)) & 1) as usize;
            let mut c = Array3::zeros((1, 2, 1));
            c[(0, bit, 0)] = 1.0;
            c
        })
        .collect();
    TensorTrain::new(cores).unwrap()
}

/// Fused operator-train cores of the rank-1 map e_out e_src^T (row index
/// fused major over the output bit).
fn pair_op_cores(out_cell: u64, src_cell: u64, n: usize) -> Vec<Array3<f64>> {
    (0..n)
        .map(|j| {
            let bo = ((out_cell >> (n - 1 - j)) & 1) as usize;
            let bs = ((src_cell >> (n - 1 - j)) & 1) as usize;
            let mut c = Array3::zeros((1, 4, 1));
            c[(0, bo * 2 + bs, 0)] = 1.0;
            c
        })
        .collect()
}

/// Correction terms in fused operator form (n cores of physical dim 4, then
/// m polynomial cores of dim 2), ready to block-add onto the one-sided base
/// operator before exact compression.
pub fn correction_operator_terms(
    st: &StencilSet,
    n: usize,
    m: usize,
    mode: BoundaryMode,
) -> Result<Vec<TensorTrain>> {
    let mut terms = Vec::new();
    for (a, k, src) in correction_pairs(st.offsets(), n, mode) {
        let idx = st.offsets().iter().position(|&o| o == k).unwrap();
        let poly = &st.polys()[idx];
        if poly.is_zero() {
            continue;
        }
        let mut cores = pair_op_cores(a, src, n);
        cores.extend(polynomial_qtt_cores(poly, m, PolyBasis::Monomial)?);
        terms.push(TensorTrain::new(cores)?);
    }
    Ok(terms)
}

/// Correction train for refining `f` with non-periodic edges: the sum over
/// out-of-range (cell, offset) pairs of the substitute sample times the
/// stencil polynomial, supported on the edge cells only. Adding it to the
/// one-sided refinement reproduces dense edge-handled interpolation.
/// Coarse ranks of the result stay within q.
pub fn boundary_correction(
    f: &TensorTrain,
    kernel: &Kernel,
    m: usize,
    derivative: usize,
    mode: BoundaryMode,
) -> Result<TensorTrain> {
    let n = f.len();
    if !f.is_closed() || f.dims().iter().any(|&d| d != 2) {
        return Err(Error::config("correction input must be a closed binary train"));
    }
    if m == 0 {
        return Err(Error::config("need at least one extra scale"));
    }
    let st = stencils(kernel, derivative)?;
    let mut sum: Option<TensorTrain> = None;
    for (a, k, src) in correction_pairs(st.offsets(), n, mode) {
        let idx = st.offsets().iter().position(|&o| o == k).unwrap();
        let poly = &st.polys()[idx];
        if poly.is_zero() {
            continue;
        }
        let bits: Vec<usize> = (0..n).map(|j| ((src >> (n - 1 - j)) & 1) as usize).collect();
        let weight = f.eval(&bits);
        let mut cores = delta_train(a, n).into_cores();
        cores.extend(polynomial_qtt_cores(poly, m, PolyBasis::Monomial)?);
        let mut term = TensorTrain::new(cores)?;
        term.scale(weight);
        sum = Some(match sum {
            Some(s) => s.add(&term)?,
            None => term,
        });
    }
    let mut out = match sum {
        Some(s) => s,
        None => TensorTrain::zeros(&vec![2; n + m]),
    };
    out.round(&Tolerance::exact());
    if derivative > 0 {
        out.scale(2f64.powi((n * derivative) as i32));
    }
    let q = st.len();
    let ranks = out.ranks();
    for (i, &r) in ranks.iter().enumerate().take(n + 1).skip(1) {
        assert!(r <= q, "correction coarse bond {i} rank {r} exceeds {q}");
    }
    Ok(out)
}

/// Edge-replicating correction for clamped refinement (no derivative).
pub fn clamped_boundary_correction(
    f: &TensorTrain,
    kernel: &Kernel,
    m: usize,
) -> Result<TensorTrain> {
    boundary_correction(f, kernel, m, 0, BoundaryMode::Clamped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::keys_cubic;

    #[test]
    fn periodic_needs_no_pairs() {
        let k = keys_cubic();
        assert!(correction_pairs(&k.offsets(), 4, BoundaryMode::Periodic).is_empty());
        assert!(correction_pairs(&k.offsets(), 4, BoundaryMode::Zero).is_empty());
    }

    #[test]
    fn keys_clamped_pair_census() {
        // Offsets {-1, 0, 1, 2}: one cell spills left (a=0, k=-1) and three
        // spill right (a=15 with k=1; a in {14, 15} with k=2).
        let k = keys_cubic();
        let pairs = correction_pairs(&k.offsets(), 4, BoundaryMode::Clamped);
        assert_eq!(pairs.len(), 4);
        assert!(pairs.contains(&(0, -1, 0)));
        assert!(pairs.contains(&(15, 1, 15)));
        assert!(pairs.contains(&(14, 2, 15)));
        assert!(pairs.contains(&(15, 2, 15)));
    }

    #[test]
    fn reflect_mirrors_about_edges() {
        assert_eq!(resolve_ghost(-1, 16, BoundaryMode::Reflect), Some(1));
        assert_eq!(resolve_ghost(-2, 16, BoundaryMode::Reflect), Some(2));
        assert_eq!(resolve_ghost(16, 16, BoundaryMode::Reflect), Some(14));
        assert_eq!(resolve_ghost(17, 16, BoundaryMode::Reflect), Some(13));
    }

    #[test]
    fn delta_train_is_an_indicator() {
        let t = delta_train(5, 4);
        for i in 0..16usize {
            let bits: Vec<usize> = (0..4).map(|j| (i >> (3 - j)) & 1).collect();
            let want = if i == 5 { 1.0 } else { 0.0 };
            assert_eq!(t.eval(&bits), want);
        }
    }

    #[test]
    fn periodic_correction_is_zero() {
        let f = TensorTrain::constant(&[2, 2, 2, 2], 1.0);
        let c = boundary_correction(&f, &keys_cubic(), 2, 0, BoundaryMode::Periodic).unwrap();
        assert!(c.norm2().sqrt() < 1e-300);
        assert_eq!(c.len(), 6);
    }
}
