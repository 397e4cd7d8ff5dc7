//! Compactly supported piecewise-polynomial interpolation kernels and the
//! per-cell stencil polynomials they induce.
//!
//! A kernel φ lives on [lo, hi) with one polynomial piece per unit interval,
//! stored in the global variable (not piece-local), so evaluation is a table
//! lookup. For a fine point x = (i + t)h with t in [0,1), the refinement
//! F(x) = Σ_j f_j φ(x/h - j) collapses to Σ_k f_{i+k} P^{(k)}(t) where
//! P^{(k)}(t) = φ(t - k); the nonzero offsets are k in {1-hi, .., -lo}.

use crate::poly::Polynomial;
use qtti_core::{Error, Result};

/// Smoothness class and related metadata travel with the pieces so stencil
/// extraction can refuse derivative orders the kernel does not support.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    name: String,
    lo: isize,
    pieces: Vec<Polynomial>,
    degree: usize,
    smoothness: usize,
    interpolating: bool,
}

impl Kernel {
    fn new(
        name: impl Into<String>,
        lo: isize,
        pieces: Vec<Polynomial>,
        degree: usize,
        smoothness: usize,
        interpolating: bool,
    ) -> Self {
        Kernel { name: name.into(), lo, pieces, degree, smoothness, interpolating }
    }

    /// Build an even kernel from its pieces on [0, s); negative intervals
    /// come from reflection.
    fn even(
        name: impl Into<String>,
        nonneg: Vec<Polynomial>,
        degree: usize,
        smoothness: usize,
        interpolating: bool,
    ) -> Self {
        let s = nonneg.len();
        let mut pieces = Vec::with_capacity(2 * s);
        for j in (0..s).rev() {
            pieces.push(nonneg[j].reflected());
        }
        pieces.extend(nonneg);
        Kernel::new(name, -(s as isize), pieces, degree, smoothness, interpolating)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Support interval [lo, hi).
    pub fn support(&self) -> (isize, isize) {
        (self.lo, self.lo + self.pieces.len() as isize)
    }

    /// Number of coarse points each fine point depends on (q).
    pub fn support_points(&self) -> usize {
        self.pieces.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of continuous derivatives (0 = C⁰).
    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn is_interpolating(&self) -> bool {
        self.interpolating
    }

    /// Stencil offsets for t in [0,1), ascending.
    pub fn offsets(&self) -> Vec<isize> {
        let (lo, hi) = self.support();
        (1 - hi..=-lo).collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_derivative(x, 0)
    }

    /// d^order φ / dx^order at x; 0 outside the support.
    pub fn eval_derivative(&self, x: f64, order: usize) -> f64 {
        let j = x.floor() as isize;
        let (lo, hi) = self.support();
        if j < lo || j >= hi {
            return 0.0;
        }
        self.pieces[(j - lo) as usize].nth_derivative(order).eval(x)
    }

    pub fn piece(&self, j: isize) -> Option<&Polynomial> {
        let (lo, hi) = self.support();
        if j < lo || j >= hi {
            None
        } else {
            Some(&self.pieces[(j - lo) as usize])
        }
    }
}

/// Hat function: C⁰, two-point, exact for degree ≤ 1.
pub fn linear_kernel() -> Kernel {
    Kernel::even("linear", vec![Polynomial::new(vec![1.0, -1.0])], 1, 0, true)
}

/// Four-point cubic convolution kernel (C¹, interpolating, O(h³)).
pub fn keys_cubic() -> Kernel {
    Kernel::even(
        "keys",
        vec![
            Polynomial::new(vec![1.0, 0.0, -2.5, 1.5]),
            Polynomial::new(vec![2.0, -4.0, 2.5, -0.5]),
        ],
        3,
        1,
        true,
    )
}

/// Centered cubic B-spline β₃ (C², quasi-interpolating, O(h²) without
/// prefiltering).
pub fn bspline_cubic() -> Kernel {
    Kernel::even(
        "bspline3",
        vec![
            Polynomial::new(vec![2.0 / 3.0, 0.0, -1.0, 0.5]),
            Polynomial::new(vec![4.0 / 3.0, -2.0, 1.0, -1.0 / 6.0]),
        ],
        3,
        2,
        false,
    )
}

/// Six-point cubic kernel (C¹, interpolating, O(h⁴)).
pub fn cubic_sixpoint() -> Kernel {
    Kernel::even(
        "cubic6",
        vec![
            Polynomial::new(vec![1.0, 0.0, -7.0 / 3.0, 4.0 / 3.0]),
            Polynomial::new(vec![5.0 / 2.0, -59.0 / 12.0, 3.0, -7.0 / 12.0]),
            Polynomial::new(vec![-3.0 / 2.0, 7.0 / 4.0, -2.0 / 3.0, 1.0 / 12.0]),
        ],
        3,
        1,
        true,
    )
}

/// Degree-m Lagrange interpolation through the m+1 nearest coarse nodes.
/// For even m the node set is asymmetric about the cell, so the cardinal
/// function is stored without the even-symmetry shortcut.
pub fn lagrange_kernel(m: usize) -> Kernel {
    assert!(m >= 1, "lagrange degree must be at least 1");
    let q = m + 1;
    let k_lo = -((q - 1) as isize / 2);
    let k_hi = (q / 2) as isize;
    let nodes: Vec<isize> = (k_lo..=k_hi).collect();
    // Cardinal basis L_k(t) = Π_{j≠k} (t-j)/(k-j); piece on [-k, 1-k) is
    // L_k shifted into the global variable.
    let lo = -k_hi;
    let mut pieces = Vec::with_capacity(q);
    for k in (k_lo..=k_hi).rev() {
        let mut l = Polynomial::constant(1.0);
        for &j in &nodes {
            if j != k {
                l = l.mul(&Polynomial::new(vec![-j as f64, 1.0]).scale(1.0 / (k - j) as f64));
            }
        }
        pieces.push(l.shifted(k as f64));
    }
    Kernel::new(format!("lagrange:{m}"), lo, pieces, m, 0, true)
}

/// Two-parameter cubic family; (1,0) is β₃ and (0,1/2) is the Keys kernel.
pub fn mitchell_netravali(b: f64, c: f64) -> Kernel {
    let p0 = Polynomial::new(vec![
        (6.0 - 2.0 * b) / 6.0,
        0.0,
        (-18.0 + 12.0 * b + 6.0 * c) / 6.0,
        (12.0 - 9.0 * b - 6.0 * c) / 6.0,
    ]);
    let p1 = Polynomial::new(vec![
        (8.0 * b + 24.0 * c) / 6.0,
        (-12.0 * b - 48.0 * c) / 6.0,
        (6.0 * b + 30.0 * c) / 6.0,
        (-b - 6.0 * c) / 6.0,
    ]);
    let smoothness = if (b - 1.0).abs() < 1e-12 && c.abs() < 1e-12 { 2 } else { 1 };
    Kernel::even(format!("mn:{b},{c}"), vec![p0, p1], 3, smoothness, b.abs() < 1e-12)
}

/// Smooth ramp selection for gradient-noise blending.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fade {
    Cubic,
    Quintic,
}

/// f3(t) = 3t² - 2t³ or f5(t) = 6t⁵ - 15t⁴ + 10t³ on [0,1].
pub fn fade(kind: Fade) -> Polynomial {
    match kind {
        Fade::Cubic => Polynomial::new(vec![0.0, 0.0, 3.0, -2.0]),
        Fade::Quintic => Polynomial::new(vec![0.0, 0.0, 0.0, 10.0, -15.0, 6.0]),
    }
}

/// Per-offset polynomials P^{(k)} (or a derivative) restricted to the unit
/// cell. Derivative stencils are exact polynomial derivatives; the caller
/// supplies the h^{-derivative} scale.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilSet {
    offsets: Vec<isize>,
    polys: Vec<Polynomial>,
    derivative: usize,
}

impl StencilSet {
    pub fn from_parts(offsets: Vec<isize>, polys: Vec<Polynomial>, derivative: usize) -> Self {
        assert_eq!(offsets.len(), polys.len());
        StencilSet { offsets, polys, derivative }
    }

    pub fn offsets(&self) -> &[isize] {
        &self.offsets
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn derivative(&self) -> usize {
        self.derivative
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// All stencil weights at one cell coordinate.
    pub fn weights_at(&self, t: f64) -> Vec<f64> {
        self.polys.iter().map(|p| p.eval(t)).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.polys.iter().map(|p| p.degree()).max().unwrap_or(0)
    }
}

/// Extract P^{(k)}(t) = φ^{(derivative)}(t - k) for t in [0,1).
pub fn stencils(kernel: &Kernel, derivative: usize) -> Result<StencilSet> {
    if derivative > kernel.smoothness() {
        return Err(Error::config(format!(
            "kernel {} is C{}; derivative order {derivative} is not defined",
            kernel.name(),
            kernel.smoothness()
        )));
    }
    let offsets = kernel.offsets();
    let polys = offsets
        .iter()
        .map(|&k| {
            kernel
                .piece(-k)
                .expect("offset range mirrors piece range")
                .nth_derivative(derivative)
                .shifted(-(k as f64))
        })
        .collect();
    Ok(StencilSet { offsets, polys, derivative })
}

/// Resolve a kernel from its CLI/config name: "linear", "keys", "bspline3",
/// "cubic6", "mn:B,C", "lagrange:m".
pub fn kernel_by_name(name: &str) -> Result<Kernel> {
    match name {
        "linear" => return Ok(linear_kernel()),
        "keys" => return Ok(keys_cubic()),
        "bspline3" => return Ok(bspline_cubic()),
        "cubic6" => return Ok(cubic_sixpoint()),
        _ => {}
    }
    if let Some(rest) = name.strip_prefix("mn:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() == 2 {
            let b = parts[0].trim().parse::<f64>();
            let c = parts[1].trim().parse::<f64>();
            if let (Ok(b), Ok(c)) = (b, c) {
                return Ok(mitchell_netravali(b, c));
            }
        }
        return Err(Error::config(format!("bad mitchell-netravali spec: {name}")));
    }
    if let Some(rest) = name.strip_prefix("lagrange:") {
        if let Ok(m) = rest.trim().parse::<usize>() {
            if m >= 1 && m <= 12 {
                return Ok(lagrange_kernel(m));
            }
        }
        return Err(Error::config(format!("bad lagrange degree: {name}")));
    }
    Err(Error::config(format!("unknown kernel: {name}")))
}
