//! Shift matrices on dyadic grids as rank-2 operator trains.
//!
//! The shifted index a + k is computed bitwise. With MSB-first cores, the
//! carry of binary addition propagates right to left, so the 2-dimensional
//! operator bond holds the carry bit: core m (weight 2^{N-m}) pairs the
//! matching bit of k with the transition
//!     a_m + k_m + c_in = a'_m + 2 c_out,
//! where c_in enters from the less significant side (right bond) and c_out
//! leaves toward the more significant side (left bond). The boundary rows
//! select the variant: summing over the final carry closes the cycle
//! (periodic S), forcing it to zero forbids overflow (one-sided L), and
//! transposition turns L into R.

use ndarray::Array4;
use qtti_core::{Error, Result, TtOperator};

/// Shift variant: cyclic wrap, or one-sided with zero fill.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    /// S^{(k)}: (Sx)_a = x_{(a+k) mod 2^N}.
    Cyclic,
    /// R^{(k)}: (Rx)_a = x_{a-k}, zero for a < k.
    Right,
    /// L^{(k)}: (Lx)_a = x_{a+k}, zero for a+k ≥ 2^N.
    Left,
}

/// Carry-transition core for one bit of k: [c_out, a, a', c_in].
fn carry_core(k_bit: usize) -> Array4<f64> {
    Array4::from_shape_fn((2, 2, 2, 2), |(c_out, a, a_in, c_in)| {
        if a + k_bit + c_in == a_in + 2 * c_out {
            1.0
        } else {
            0.0
        }
    })
}

/// Shift operator on 2^N indices as an operator train with bond ranks ≤ 2.
pub fn shift_mpo(kind: ShiftKind, k: u64, n_scales: usize) -> Result<TtOperator> {
    if n_scales == 0 || n_scales > 62 {
        return Err(Error::config("shift needs 1..=62 scales"));
    }
    if k >> n_scales != 0 {
        return Err(Error::config(format!("shift {k} out of range for {n_scales} scales")));
    }
    let base_left = match kind {
        ShiftKind::Cyclic => [1.0, 1.0],
        ShiftKind::Right | ShiftKind::Left => [1.0, 0.0],
    };
    let mut cores: Vec<Array4<f64>> = Vec::with_capacity(n_scales);
    for m in 1..=n_scales {
        let k_bit = ((k >> (n_scales - m)) & 1) as usize;
        let mut core = carry_core(k_bit);
        if m == n_scales {
            // No carry enters the least significant bit.
            let full = core;
            core = Array4::from_shape_fn((2, 2, 2, 1), |(c, a, b, _)| full[(c, a, b, 0)]);
        }
        if m == 1 {
            // Collapse the outgoing carry of the most significant bit.
            let full = core;
            let r = full.dim().3;
            core = Array4::from_shape_fn((1, 2, 2, r), |(_, a, b, c_in)| {
                base_left[0] * full[(0, a, b, c_in)] + base_left[1] * full[(1, a, b, c_in)]
            });
        }
        cores.push(core);
    }
    let op = TtOperator::new(cores)?;
    match kind {
        ShiftKind::Cyclic | ShiftKind::Left => Ok(op),
        ShiftKind::Right => Ok(op.transpose()),
    }
}

/// Central difference D = (S^{(1)} - S^{(-1)}) / 2h on the periodic grid.
/// Returned unrounded; bond ranks are ≤ 4.
pub fn derivative_mpo(n_scales: usize, h: f64) -> Result<TtOperator> {
    if n_scales < 2 {
        return Err(Error::config("derivative needs at least 2 scales"));
    }
    let fwd = shift_mpo(ShiftKind::Cyclic, 1, n_scales)?;
    let mut bwd = shift_mpo(ShiftKind::Cyclic, (1u64 << n_scales) - 1, n_scales)?;
    bwd.scale(-1.0);
    let mut d = fwd.add(&bwd)?;
    d.scale(1.0 / (2.0 * h));
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn dense_shift(kind: ShiftKind, k: u64, n: usize) -> Array2<f64> {
        let size = 1usize << n;
        Array2::from_shape_fn((size, size), |(a, a_in)| {
            let hit = match kind {
                ShiftKind::Cyclic => (a + k as usize) % size == a_in,
                ShiftKind::Right => a_in + (k as usize) == a,
                ShiftKind::Left => a + (k as usize) == a_in,
            };
            if hit {
                1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn exhaustive_dense_match_small_scales() {
        for n in 1..=6usize {
            for k in 0..(1u64 << n) {
                for kind in [ShiftKind::Cyclic, ShiftKind::Right, ShiftKind::Left] {
                    let op = shift_mpo(kind, k, n).unwrap();
                    assert!(op.max_rank() <= 2, "rank {} for {kind:?} k={k} n={n}", op.max_rank());
                    let got = op.to_dense().unwrap();
                    let want = dense_shift(kind, k, n);
                    let err = (&got - &want).iter().map(|x| x.abs()).fold(0.0, f64::max);
                    assert!(err == 0.0, "{kind:?} k={k} n={n}: max err {err}");
                }
            }
        }
    }

    #[test]
    fn zero_shift_is_identity() {
        let op = shift_mpo(ShiftKind::Cyclic, 0, 4).unwrap();
        let id = TtOperator::identity(&[2, 2, 2, 2]);
        let err = (&op.to_dense().unwrap() - &id.to_dense().unwrap())
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn cyclic_shifts_compose_additively() {
        let n = 6;
        for (k1, k2) in [(1u64, 2u64), (5, 9), (17, 30)] {
            let a = shift_mpo(ShiftKind::Cyclic, k1, n).unwrap();
            let b = shift_mpo(ShiftKind::Cyclic, k2, n).unwrap();
            let ab = a.compose(&b).unwrap().to_dense().unwrap();
            let want = shift_mpo(ShiftKind::Cyclic, k1 + k2, n).unwrap().to_dense().unwrap();
            let err = (&ab - &want).iter().map(|x| x.abs()).fold(0.0, f64::max);
            assert!(err < 1e-12, "k1={k1} k2={k2}");
        }
    }

    #[test]
    fn left_is_right_transposed() {
        for k in [0u64, 1, 3, 7, 12] {
            let l = shift_mpo(ShiftKind::Left, k, 4).unwrap().to_dense().unwrap();
            let r = shift_mpo(ShiftKind::Right, k, 4).unwrap().to_dense().unwrap();
            let err = (&l - &r.t().to_owned()).iter().map(|x| x.abs()).fold(0.0, f64::max);
            assert_eq!(err, 0.0, "k={k}");
        }
    }

    #[test]
    fn out_of_range_shift_is_rejected() {
        assert!(shift_mpo(ShiftKind::Cyclic, 16, 4).is_err());
        assert!(shift_mpo(ShiftKind::Cyclic, 15, 4).is_ok());
    }

    #[test]
    fn derivative_is_central_difference() {
        use qtti_core::tt::{TensorTrain, Tolerance};
        let n = 8;
        let h = 1.0 / 256.0;
        let d = derivative_mpo(n, h).unwrap();
        assert!(d.max_rank() <= 4);

        // Constant field → zero derivative.
        let c = TensorTrain::constant(&vec![2; n], 3.0);
        let dc = d.apply(&c).unwrap();
        let mut dc = dc;
        dc.round(&Tolerance::exact());
        assert!(dc.norm2() < 1e-10);

        // sin samples → cos within O(h²), periodic so every point is interior.
        let xs: Vec<f64> = (0..256).map(|i| i as f64 / 256.0).collect();
        let f = ndarray::ArrayD::from_shape_vec(
            ndarray::IxDyn(&vec![2; n]),
            xs.iter().map(|&x| (2.0 * std::f64::consts::PI * x).sin()).collect(),
        )
        .unwrap();
        let ft = TensorTrain::from_dense(f.view(), &Tolerance::exact()).unwrap();
        let dft = d.apply(&ft).unwrap().to_dense().unwrap();
        let flat: Vec<f64> = dft.iter().copied().collect();
        for (i, &x) in xs.iter().enumerate() {
            let want = 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).cos();
            assert!(
                (flat[i] - want).abs() < 0.02 * want.abs().max(1.0),
                "i={i}: {} vs {want}",
                flat[i]
            );
        }
    }
}
