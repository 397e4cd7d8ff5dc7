//! Dyadic grid descriptors and the mapping between dense arrays and the
//! plain, interleaved, and Tucker train layouts.
//!
//! Indices are binary MSB-first: a = Σ a_k 2^{N-k}, so core 1 is the
//! coarsest scale. The interleaved layout orders cores scale-major
//! (a_{1,1}, a_{2,1}, .., a_{d,1}, a_{1,2}, ..): all dimensions' bits at one
//! scale sit next to each other.

use crate::tucker::{to_tucker, TuckerTT};
use ndarray::{ArrayD, ArrayViewD, IxDyn};
use qtti_core::tt::DENSE_CAPACITY;
use qtti_core::{Error, Result, TensorTrain, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Plain,
    Interleaved,
    Tucker,
}

impl Layout {
    pub fn as_str(&self) -> &'static str {
        match self {
            Layout::Plain => "plain",
            Layout::Interleaved => "interleaved",
            Layout::Tucker => "tucker",
        }
    }

    pub fn parse(s: &str) -> Result<Layout> {
        match s {
            "plain" => Ok(Layout::Plain),
            "interleaved" => Ok(Layout::Interleaved),
            "tucker" => Ok(Layout::Tucker),
            other => Err(Error::format(format!("unknown layout: {other}"))),
        }
    }
}

/// A d-dimensional dyadic grid: 2^{N_m} points per dimension on half-open
/// intervals [a_m, b_m), points at x_i = a + i h.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDescriptor {
    pub scales: Vec<usize>,
    pub domain: Vec<(f64, f64)>,
    pub layout: Layout,
    pub periodic: Vec<bool>,
}

impl GridDescriptor {
    pub fn new(
        scales: Vec<usize>,
        domain: Vec<(f64, f64)>,
        layout: Layout,
        periodic: Vec<bool>,
    ) -> Result<Self> {
        let d = scales.len();
        if d == 0 || domain.len() != d || periodic.len() != d {
            return Err(Error::config("grid descriptor field lengths disagree"));
        }
        if scales.iter().any(|&n| n == 0 || n > 60) {
            return Err(Error::config("per-dimension scales must be in 1..=60"));
        }
        if domain.iter().any(|&(a, b)| !(b > a) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::config("domain intervals must be finite with b > a"));
        }
        Ok(GridDescriptor { scales, domain, layout, periodic })
    }

    /// 1D grid on [a, b).
    pub fn line(n: usize, domain: (f64, f64), periodic: bool) -> Self {
        GridDescriptor::new(vec![n], vec![domain], Layout::Plain, vec![periodic]).unwrap()
    }

    /// d-dimensional cube with equal scales and a shared interval.
    pub fn cube(d: usize, n: usize, domain: (f64, f64), layout: Layout, periodic: bool) -> Self {
        GridDescriptor::new(vec![n; d], vec![domain; d], layout, vec![periodic; d]).unwrap()
    }

    pub fn dims(&self) -> usize {
        self.scales.len()
    }

    pub fn points(&self, dim: usize) -> usize {
        1usize << self.scales[dim]
    }

    pub fn spacing(&self, dim: usize) -> f64 {
        let (a, b) = self.domain[dim];
        (b - a) / self.points(dim) as f64
    }

    pub fn coordinate(&self, dim: usize, index: usize) -> f64 {
        self.domain[dim].0 + index as f64 * self.spacing(dim)
    }

    /// Total grid points across all dimensions, capacity-checked.
    pub fn total_points(&self) -> Result<usize> {
        (0..self.dims())
            .try_fold(1usize, |acc, m| acc.checked_mul(self.points(m)))
            .filter(|&t| t <= DENSE_CAPACITY)
            .ok_or_else(|| Error::capacity("grid too large to sample densely".to_string()))
    }

    /// True when all dimensions share one scale count (required for the
    /// interleaved layout).
    pub fn uniform_scale(&self) -> Option<usize> {
        let n = self.scales[0];
        if self.scales.iter().all(|&s| s == n) {
            Some(n)
        } else {
            None
        }
    }

    pub fn to_text(&self) -> String {
        let scales: Vec<String> = self.scales.iter().map(|n| n.to_string()).collect();
        let domain: Vec<String> =
            self.domain.iter().map(|(a, b)| format!("{a}:{b}")).collect();
        let periodic: Vec<String> =
            self.periodic.iter().map(|&p| if p { "1" } else { "0" }.to_string()).collect();
        format!(
            "grid v1\nscales={}\ndomain={}\nlayout={}\nperiodic={}\n",
            scales.join(","),
            domain.join(","),
            self.layout.as_str(),
            periodic.join(",")
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("grid v1") {
            return Err(Error::format("missing grid header"));
        }
        let mut scales = None;
        let mut domain = None;
        let mut layout = None;
        let mut periodic = None;
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(format!("bad grid line: {line}")))?;
            match key {
                "scales" => {
                    scales = Some(
                        value
                            .split(',')
                            .map(|s| {
                                s.trim()
                                    .parse::<usize>()
                                    .map_err(|_| Error::format(format!("bad scale: {s}")))
                            })
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "domain" => {
                    domain = Some(
                        value
                            .split(',')
                            .map(|pair| {
                                let (a, b) = pair
                                    .split_once(':')
                                    .ok_or_else(|| Error::format(format!("bad interval: {pair}")))?;
                                let a = a.trim().parse::<f64>();
                                let b = b.trim().parse::<f64>();
                                match (a, b) {
                                    (Ok(a), Ok(b)) => Ok((a, b)),
                                    _ => Err(Error::format(format!("bad interval: {pair}"))),
                                }
                            })
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "layout" => layout = Some(Layout::parse(value.trim())?),
                "periodic" => {
                    periodic = Some(
                        value
                            .split(',')
                            .map(|s| match s.trim() {
                                "1" => Ok(true),
                                "0" => Ok(false),
                                other => Err(Error::format(format!("bad periodic flag: {other}"))),
                            })
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                other => return Err(Error::format(format!("unknown grid key: {other}"))),
            }
        }
        match (scales, domain, layout, periodic) {
            (Some(s), Some(d), Some(l), Some(p)) => GridDescriptor::new(s, d, l, p),
            _ => Err(Error::format("incomplete grid descriptor")),
        }
    }
}

/// A field encoded per the grid's layout.
#[derive(Debug, Clone)]
pub enum Encoded {
    Train(TensorTrain),
    Tucker(TuckerTT),
}

impl Encoded {
    pub fn expect_train(self) -> TensorTrain {
        match self {
            Encoded::Train(t) => t,
            Encoded::Tucker(_) => panic!("expected a plain/interleaved train"),
        }
    }

    pub fn expect_tucker(self) -> TuckerTT {
        match self {
            Encoded::Tucker(t) => t,
            Encoded::Train(_) => panic!("expected a Tucker encoding"),
        }
    }
}

/// Sample `f` at every grid point and compress per the grid's layout.
pub fn encode_function(
    f: impl Fn(&[f64]) -> f64,
    grid: &GridDescriptor,
    tol: &Tolerance,
) -> Result<Encoded> {
    let d = grid.dims();
    grid.total_points()?;
    let shape: Vec<usize> = (0..d).map(|m| grid.points(m)).collect();
    let mut coord = vec![0.0; d];
    let dense = ArrayD::from_shape_fn(IxDyn(&shape), |ix| {
        for m in 0..d {
            coord[m] = grid.coordinate(m, ix[m]);
        }
        f(&coord)
    });
    encode_dense(dense.view(), grid, tol)
}

/// Encode an already-sampled dense array per the grid's layout.
pub fn encode_dense(
    dense: ArrayViewD<'_, f64>,
    grid: &GridDescriptor,
    tol: &Tolerance,
) -> Result<Encoded> {
    let d = grid.dims();
    let expected: Vec<usize> = (0..d).map(|m| grid.points(m)).collect();
    if dense.shape() != expected.as_slice() {
        return Err(Error::config(format!(
            "dense shape {:?} does not match grid {expected:?}",
            dense.shape()
        )));
    }
    match grid.layout {
        Layout::Plain => {
            let bits: Vec<usize> = vec![2; grid.scales.iter().sum()];
            let reshaped = reshape_logical(dense, &bits);
            Ok(Encoded::Train(TensorTrain::from_dense(reshaped.view(), tol)?))
        }
        Layout::Interleaved => Ok(Encoded::Train(interleave(dense, grid, tol)?)),
        Layout::Tucker => Ok(Encoded::Tucker(to_tucker(dense, tol)?)),
    }
}

/// Copy a view into a freshly shaped standard-layout array, walking the
/// view's logical (row-major) order regardless of its memory layout.
fn reshape_logical(view: ArrayViewD<'_, f64>, shape: &[usize]) -> ArrayD<f64> {
    let flat: Vec<f64> = view.iter().copied().collect();
    ArrayD::from_shape_vec(IxDyn(shape), flat).unwrap()
}

/// Axis order that turns dim-major bit axes into scale-major ones.
/// Entry `i` is the old axis that lands at new position `i`.
pub fn interleave_axis_order(d: usize, n: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(d * n);
    for k in 0..n {
        for m in 0..d {
            order.push(m * n + k);
        }
    }
    order
}

/// Inverse of [`interleave_axis_order`].
pub fn deinterleave_axis_order(d: usize, n: usize) -> Vec<usize> {
    let fwd = interleave_axis_order(d, n);
    let mut inv = vec![0usize; fwd.len()];
    for (new_pos, &old_axis) in fwd.iter().enumerate() {
        inv[old_axis] = new_pos;
    }
    inv
}

/// Weave per-dimension indices into the combined scale-major index.
pub fn interleave_index(indices: &[u64], n_scales: usize) -> u64 {
    let mut out = 0u64;
    for k in 0..n_scales {
        for &idx in indices {
            let bit = (idx >> (n_scales - 1 - k)) & 1;
            out = (out << 1) | bit;
        }
    }
    out
}

/// Split a combined scale-major index back into per-dimension indices.
pub fn deinterleave_index(combined: u64, d: usize, n_scales: usize) -> Vec<u64> {
    let mut out = vec![0u64; d];
    let total = d * n_scales;
    for pos in 0..total {
        let bit = (combined >> (total - 1 - pos)) & 1;
        let m = pos % d;
        out[m] = (out[m] << 1) | bit;
    }
    out
}

/// Compress a dense d-way array into the scale-major interleaved train.
pub fn interleave(
    dense: ArrayViewD<'_, f64>,
    grid: &GridDescriptor,
    tol: &Tolerance,
) -> Result<TensorTrain> {
    let d = grid.dims();
    let n = grid
        .uniform_scale()
        .ok_or_else(|| Error::config("interleaved layout needs equal scales per dimension"))?;
    let bits: Vec<usize> = vec![2; d * n];
    let bit_tensor = reshape_logical(dense, &bits);
    let permuted = bit_tensor.view().permuted_axes(IxDyn(&interleave_axis_order(d, n)));
    TensorTrain::from_dense(permuted, tol)
}

/// Contract an interleaved train back to a dense d-way array.
pub fn deinterleave(tt: &TensorTrain, grid: &GridDescriptor) -> Result<ArrayD<f64>> {
    let d = grid.dims();
    let n = grid
        .uniform_scale()
        .ok_or_else(|| Error::config("interleaved layout needs equal scales per dimension"))?;
    if tt.len() != d * n {
        return Err(Error::config(format!(
            "train has {} cores; interleaved grid needs {}",
            tt.len(),
            d * n
        )));
    }
    let bit_tensor = tt.to_dense()?;
    let unpermuted = bit_tensor.view().permuted_axes(IxDyn(&deinterleave_axis_order(d, n)));
    let shape: Vec<usize> = (0..d).map(|m| grid.points(m)).collect();
    let contiguous: Vec<f64> = unpermuted.iter().copied().collect();
    Ok(ArrayD::from_shape_vec(IxDyn(&shape), contiguous).unwrap())
}

/// Merge each run of d consecutive cores into one core with a bundled 2^d
/// physical leg (first dimension's bit most significant).
pub fn merge_scale_groups(tt: &TensorTrain, d: usize) -> Result<TensorTrain> {
    if d == 0 || tt.len() % d != 0 {
        return Err(Error::config("core count is not a multiple of the group size"));
    }
    let mut cores = Vec::with_capacity(tt.len() / d);
    for group in tt.cores().chunks(d) {
        let mut acc = group[0].clone();
        for next in &group[1..] {
            let (r, a, s) = acc.dim();
            let (_, b, s2) = next.dim();
            let mut merged = ndarray::Array3::zeros((r, a * b, s2));
            for x in 0..r {
                for i in 0..a {
                    for j in 0..b {
                        for y in 0..s2 {
                            let mut v = 0.0;
                            for t in 0..s {
                                v += acc[(x, i, t)] * next[(t, j, y)];
                            }
                            merged[(x, i * b + j, y)] = v;
                        }
                    }
                }
            }
            acc = merged;
        }
        cores.push(acc);
    }
    TensorTrain::new(cores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn descriptor_text_roundtrip() {
        let g = GridDescriptor::new(
            vec![7, 7],
            vec![(0.0, 1.0), (-2.0, 3.5)],
            Layout::Interleaved,
            vec![true, false],
        )
        .unwrap();
        let text = g.to_text();
        let back = GridDescriptor::from_text(&text).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn corrupt_descriptor_is_rejected() {
        assert!(GridDescriptor::from_text("nope").is_err());
        assert!(GridDescriptor::from_text("grid v1\nscales=3\n").is_err());
        assert!(GridDescriptor::from_text(
            "grid v1\nscales=3\ndomain=0:1\nlayout=weird\nperiodic=1\n"
        )
        .is_err());
    }

    #[test]
    fn index_weaving_is_involutive() {
        let d = 3;
        let n = 4;
        for combined in 0..(1u64 << (d * n)) {
            let parts = deinterleave_index(combined, d, n);
            assert_eq!(interleave_index(&parts, n), combined);
        }
    }

    #[test]
    fn two_by_two_interleave_order() {
        // [[a,b],[c,d]] must flatten to (a,b,c,d) under (a_{1,1}, a_{2,1}).
        let g = GridDescriptor::cube(2, 1, (0.0, 1.0), Layout::Interleaved, true);
        let dense = ArrayD::from_shape_vec(IxDyn(&[2, 2]), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let tt = interleave(dense.view(), &g, &Tolerance::exact()).unwrap();
        assert_eq!(tt.len(), 2);
        let flat = tt.to_dense().unwrap();
        for (got, want) in flat.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn interleave_roundtrip_random() {
        let g = GridDescriptor::cube(2, 3, (0.0, 1.0), Layout::Interleaved, true);
        let dense = ArrayD::from_shape_fn(IxDyn(&[8, 8]), |ix| {
            ((ix[0] * 13 + ix[1] * 7) % 11) as f64 - 5.0
        });
        let tt = interleave(dense.view(), &g, &Tolerance::exact()).unwrap();
        let back = deinterleave(&tt, &g).unwrap();
        let err = (&back - &dense).iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn interleaved_values_match_index_weaving() {
        let g = GridDescriptor::cube(2, 3, (0.0, 1.0), Layout::Interleaved, true);
        let dense = ArrayD::from_shape_fn(IxDyn(&[8, 8]), |ix| (ix[0] * 8 + ix[1]) as f64);
        let tt = interleave(dense.view(), &g, &Tolerance::exact()).unwrap();
        for i in 0..8u64 {
            for j in 0..8u64 {
                let combined = interleave_index(&[i, j], 3);
                let idx: Vec<usize> = (0..6).map(|b| ((combined >> (5 - b)) & 1) as usize).collect();
                assert!((tt.eval(&idx) - (i * 8 + j) as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn separable_interleave_rank_bound() {
        // f(x)g(y) with rank-2 f and rank-1 g: interleaved interior ranks
        // stay within rank(f)*rank(g).
        let n = 4;
        let pts = 1 << n;
        let f = |i: usize| 1.0 + (i as f64) / pts as f64;
        let g = |j: usize| (-(j as f64) / pts as f64).exp();
        let dense =
            ArrayD::from_shape_fn(IxDyn(&[pts, pts]), |ix| f(ix[0]) * g(ix[1]));
        let grid = GridDescriptor::cube(2, n, (0.0, 1.0), Layout::Interleaved, true);
        let tt = interleave(dense.view(), &grid, &Tolerance::relative(1e-13)).unwrap();
        assert!(tt.max_rank() <= 2, "rank {}", tt.max_rank());
    }

    #[test]
    fn plain_encoding_msb_convention() {
        let g = GridDescriptor::line(5, (0.0, 1.0), true);
        let enc = encode_function(|x| x[0], &g, &Tolerance::exact()).unwrap().expect_train();
        // Leading bit set, rest zero = midpoint of the domain.
        assert!((enc.eval(&[1, 0, 0, 0, 0]) - 0.5).abs() < 1e-14);
        assert!(enc.max_rank() <= 2);
    }

    #[test]
    fn exp_is_rank_one() {
        let g = GridDescriptor::line(8, (0.0, 1.0), false);
        let enc = encode_function(|x| x[0].exp(), &g, &Tolerance::relative(1e-10))
            .unwrap()
            .expect_train();
        assert_eq!(enc.max_rank(), 1);
    }

    #[test]
    fn merge_groups_matches_dense() {
        let g = GridDescriptor::cube(2, 2, (0.0, 1.0), Layout::Interleaved, true);
        let dense = ArrayD::from_shape_fn(IxDyn(&[4, 4]), |ix| (ix[0] * 4 + ix[1]) as f64 * 0.5);
        let tt = interleave(dense.view(), &g, &Tolerance::exact()).unwrap();
        let merged = merge_scale_groups(&tt, 2).unwrap();
        assert_eq!(merged.dims(), vec![4, 4]);
        let md = merged.to_dense().unwrap();
        let md2 = Array2::from_shape_fn((4, 4), |(a, b)| md[[a, b]]);
        // Bundled index (a1_k, a2_k) per scale: scale-major pairs.
        for i in 0..4u64 {
            for j in 0..4u64 {
                let combined = interleave_index(&[i, j], 2) as usize;
                let hi = combined >> 2;
                let lo = combined & 3;
                assert!((md2[(hi, lo)] - dense[[i as usize, j as usize]]).abs() < 1e-12);
            }
        }
    }
}
