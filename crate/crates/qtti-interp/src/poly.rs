//! Dense polynomial arithmetic and closed-form polynomial QTTs.
//!
//! A degree-p polynomial sampled on the dyadic grid x_i = i/2^N admits an
//! exact train with every rank ≤ p+1. The construction telescopes over the
//! binary digits: with t_m = a_m 2^{-m}, partial sums enter each core through
//! the shifted-basis functions φ_s, and any basis satisfying the binomial
//! identity B_n(x+y) = Σ_k C(n,k) B_k(x) B_{n-k}(y) works. We ship the
//! monomial basis and the Abel basis A_n(x) = x(x - an)^{n-1}, whose
//! parameter a = 2^{-N} - 1 counteracts the exponential shrinkage of
//! high-degree entries in the deepest cores.

use ndarray::Array3;
use qtti_core::{Error, Result, TensorTrain};

/// Dense polynomial in the monomial basis, lowest coefficient first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Trailing zero coefficients are trimmed; the zero polynomial keeps a
    /// single 0 entry.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn identity() -> Self {
        Polynomial { coeffs: vec![0.0, 1.0] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of x^i (0 beyond the stored degree).
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::zero();
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, &c)| c * (i + 1) as f64)
            .collect();
        Polynomial::new(coeffs)
    }

    pub fn nth_derivative(&self, order: usize) -> Polynomial {
        let mut p = self.clone();
        for _ in 0..order {
            p = p.derivative();
        }
        p
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        Polynomial::new(coeffs)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) - other.coeff(i)).collect();
        Polynomial::new(coeffs)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial::new(coeffs)
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// `p(t + c)` as a polynomial in t.
    pub fn shifted(&self, c: f64) -> Polynomial {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            // (t + c)^i expanded by binomials.
            for j in 0..=i {
                out[j] += a * binomial(i, j) * c.powi((i - j) as i32);
            }
        }
        Polynomial::new(out)
    }

    /// `p(-t)`.
    pub fn reflected(&self) -> Polynomial {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if i % 2 == 1 { -c } else { c })
            .collect();
        Polynomial::new(coeffs)
    }
}

/// Binomial coefficient by the Pascal recurrence, exact in f64 for the
/// small degrees used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Polynomial basis for the closed-form train construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyBasis {
    Monomial,
    Abel,
}

/// Abel polynomial A_n(x) = x (x - a n)^{n-1} expanded in monomials; A_0 = 1.
pub fn abel_polynomial(n: usize, a: f64) -> Polynomial {
    if n == 0 {
        return Polynomial::constant(1.0);
    }
    let shift = Polynomial::new(vec![-a * n as f64, 1.0]);
    let mut acc = Polynomial::constant(1.0);
    for _ in 0..n - 1 {
        acc = acc.mul(&shift);
    }
    Polynomial::identity().mul(&acc)
}

/// Coefficients of `poly` in the Abel basis with parameter `a`.
///
/// A_n is monic of degree n, so the change of basis is unit-triangular and
/// solved by back substitution from the top degree down.
pub fn abel_coefficients(poly: &Polynomial, a: f64) -> Vec<f64> {
    let p = poly.degree();
    let mut residual = poly.clone();
    let mut out = vec![0.0; p + 1];
    for n in (0..=p).rev() {
        let c = residual.coeff(n);
        out[n] = c;
        if c != 0.0 {
            residual = residual.sub(&abel_polynomial(n, a).scale(c));
        }
    }
    out
}

/// Exact train of `poly` sampled at x_i = i/2^N, i in binary MSB-first.
///
/// Every rank equals p+1 structurally. `basis` selects the expansion basis;
/// values agree, but the distribution of magnitude across cores differs.
pub fn polynomial_qtt(poly: &Polynomial, n_scales: usize, basis: PolyBasis) -> Result<TensorTrain> {
    if n_scales < 2 {
        return Err(Error::config("polynomial train needs at least 2 scales"));
    }
    let p = poly.degree();
    let a_param = match basis {
        PolyBasis::Monomial => 0.0,
        PolyBasis::Abel => 2f64.powi(-(n_scales as i32)) - 1.0,
    };
    // Basis values B_n(t) for t = a 2^{-k}, a in {0,1}.
    let basis_val = |n: usize, t: f64| -> f64 {
        match basis {
            PolyBasis::Monomial => t.powi(n as i32),
            PolyBasis::Abel => {
                if n == 0 {
                    1.0
                } else {
                    t * (t - a_param * n as f64).powi(n as i32 - 1)
                }
            }
        }
    };
    let coeffs: Vec<f64> = match basis {
        PolyBasis::Monomial => (0..=p).map(|i| poly.coeff(i)).collect(),
        PolyBasis::Abel => abel_coefficients(poly, a_param),
    };
    // Shifted-basis functions φ_s(x) = Σ_{k≥s} c_k C(k,s) B_{k-s}(x).
    let phi = |s: usize, x: f64| -> f64 {
        (s..=p).map(|k| coeffs[k] * binomial(k, s) * basis_val(k - s, x)).sum()
    };

    let r = p + 1;
    let mut cores: Vec<Array3<f64>> = Vec::with_capacity(n_scales);
    let t_at = |scale: usize, bit: usize| bit as f64 * 2f64.powi(-(scale as i32));

    let first = Array3::from_shape_fn((1, 2, r), |(_, a, s)| phi(s, t_at(1, a)));
    cores.push(first);
    for k in 2..n_scales {
        let core = Array3::from_shape_fn((r, 2, r), |(i, a, j)| {
            if i >= j {
                binomial(i, i - j) * basis_val(i - j, t_at(k, a))
            } else {
                0.0
            }
        });
        cores.push(core);
    }
    let last = Array3::from_shape_fn((r, 2, 1), |(i, a, _)| basis_val(i, t_at(n_scales, a)));
    cores.push(last);
    TensorTrain::new(cores)
}

/// Core list of `poly` sampled on `n_scales` binary-fraction scales.
/// Degenerates to a single two-point evaluation core when one scale is
/// enough, where the closed-form construction does not apply.
pub fn polynomial_qtt_cores(
    poly: &Polynomial,
    n_scales: usize,
    basis: PolyBasis,
) -> Result<Vec<Array3<f64>>> {
    match n_scales {
        0 => Err(Error::config("polynomial chain needs at least 1 scale")),
        1 => {
            let mut core = Array3::zeros((1, 2, 1));
            core[(0, 0, 0)] = poly.eval(0.0);
            core[(0, 1, 0)] = poly.eval(0.5);
            Ok(vec![core])
        }
        _ => Ok(polynomial_qtt(poly, n_scales, basis)?.into_cores()),
    }
}

/// Largest magnitude among last-core entries that carry degree ≥ 1 content
/// (the degree-0 row is identically 1 in either basis). Diagnostic for the
/// basis-conditioning comparison.
pub fn last_core_content_magnitude(tt: &TensorTrain) -> f64 {
    let last = tt.core(tt.len() - 1);
    let (r, n, _) = last.dim();
    let mut best = 0.0f64;
    for i in 1..r {
        for a in 0..n {
            best = best.max(last[(i, a, 0)].abs());
        }
    }
    best
}
