//! Divergence-free multiscale velocity synthesis.
//!
//! The velocity is a superposition of curls of per-scale vector stream
//! functions: for each contribution scale m, three random components G_j
//! live on the 2^m-per-axis lattice, their C² cubic B-spline
//! quasi-interpolants are differentiated and refined to the target scale by
//! derivative refinement operators, and v_k accumulates ω_m ε_{kij} ∂_i G_j
//! with ω_m = 2^{-4m/3} by default. One G_j is drawn per (m, j) — stream
//! `cascade/m{m}/A{j}` — and shared by both of its transverse derivatives;
//! that sharing is what makes the discrete divergence inherit the exact
//! analytic cancellation ε_{kij} ∂_k ∂_i G_j = 0.

use ndarray::Array3;
use rand::Rng;

use qtti_core::parallel::map_indexed;
use qtti_core::{Error, Result, TensorTrain, Tolerance};
use qtti_interp::grid::Layout;
use qtti_interp::kernels::bspline_cubic;
use qtti_interp::tti::{apply_tti_tucker, build_tti_1d, interleaved_legs, refine_dim, LegOrder};
use qtti_interp::tucker::TuckerTT;
use qtti_interp::BoundaryMode;

use crate::noise::{normal_core, random_qtt};
use crate::stream::{derive_seed, labeled};

/// Parameters of the turbulence cascade.
#[derive(Debug, Clone)]
pub struct CascadeSpec {
    /// Base seed for all stream-function draws.
    pub seed: u64,
    /// Target scales per axis: the velocity lives on a (2^scales)³ grid.
    pub scales: usize,
    /// Bond rank of the random stream functions.
    pub chi: usize,
    /// Per-scale weights are 2^(weight_exponent·m); -4/3 gives the
    /// Kolmogorov scaling.
    pub weight_exponent: f64,
    /// Relative rounding tolerance applied while accumulating.
    pub round_tol: f64,
}

impl Default for CascadeSpec {
    fn default() -> Self {
        CascadeSpec {
            seed: 0,
            scales: 5,
            chi: 5,
            weight_exponent: -4.0 / 3.0,
            round_tol: 1e-10,
        }
    }
}

impl CascadeSpec {
    /// Weight of contribution scale m.
    pub fn weight(&self, m: usize) -> f64 {
        (self.weight_exponent * m as f64).exp2()
    }
}

/// Storage layout of the per-scale stream functions. This also fixes the
/// leg order of the velocity components the cascade returns: interleaved
/// stream functions stay interleaved (scale-major), while Tucker stream
/// functions are contracted to plain dimension-major trains for
/// accumulation — see [`CascadeLayout::data_layout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeLayout {
    /// Interleaved quantized train per component.
    Interleaved,
    /// Tucker form: a shared random core with per-dimension factor chains;
    /// refinement touches only the factors. Output is converted to plain
    /// trains for accumulation.
    Tucker,
}

impl CascadeLayout {
    pub fn parse(s: &str) -> Result<CascadeLayout> {
        match s {
            "interleaved" => Ok(CascadeLayout::Interleaved),
            "tucker" => Ok(CascadeLayout::Tucker),
            _ => Err(Error::config(format!("unknown cascade layout {s:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CascadeLayout::Interleaved => "interleaved",
            CascadeLayout::Tucker => "tucker",
        }
    }

    /// Leg order of the velocity trains produced under this layout; pass it
    /// to the grid and metric helpers when densifying or analyzing.
    pub fn data_layout(&self) -> Layout {
        match self {
            CascadeLayout::Interleaved => Layout::Interleaved,
            CascadeLayout::Tucker => Layout::Plain,
        }
    }
}

fn levi_civita(k: usize, i: usize, j: usize) -> f64 {
    match (k, i, j) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

enum Stream {
    Train(TensorTrain),
    Tucker(TuckerTT),
}

fn draw_stream(spec: &CascadeSpec, layout: CascadeLayout, m: usize, j: usize) -> Result<Stream> {
    let seed = derive_seed(spec.seed, &format!("cascade/m{m}/A{j}"));
    match layout {
        CascadeLayout::Interleaved => Ok(Stream::Train(random_qtt(3 * m, spec.chi, seed)?)),
        CascadeLayout::Tucker => Ok(Stream::Tucker(random_tucker_stream(m, spec.chi, seed)?)),
    }
}

/// Random Tucker stream function over an m-scale cube: a closed 3-mode core
/// train with physical dimension chi and random per-dimension factor
/// chains, calibrated to unit sampled variance like [`random_qtt`].
/// Exposed so dense reference implementations can replay the same field.
pub fn random_tucker_stream(m: usize, chi: usize, seed: u64) -> Result<TuckerTT> {
    if m == 0 || chi == 0 {
        return Err(Error::config("tucker stream needs m >= 1 and chi >= 1"));
    }
    let gamma = chi;
    let mut rng = labeled(seed, "tucker/core");
    let core_cores = vec![
        normal_core(&mut rng, (1, gamma, gamma)),
        normal_core(&mut rng, (gamma, gamma, gamma)),
        normal_core(&mut rng, (gamma, gamma, 1)),
    ];
    let mut core = TensorTrain::new(core_cores)?;
    let mut factors = Vec::with_capacity(3);
    for mu in 0..3 {
        let mut rng_f = labeled(seed, &format!("tucker/factor{mu}"));
        let bond = |t: usize| -> usize {
            if t == 0 {
                gamma
            } else if t == m {
                1
            } else {
                chi.min(1usize << (m - t).min(60))
            }
        };
        let chain: Vec<Array3<f64>> = (0..m)
            .map(|t| normal_core(&mut rng_f, (bond(t), 2, bond(t + 1))))
            .collect();
        factors.push(TensorTrain::new(chain)?);
    }
    let probe = TuckerTT::new(core.clone(), factors.clone())?;
    let mut cal = labeled(seed, "tucker/calibrate");
    let mask = if m >= 64 { u64::MAX } else { (1u64 << m) - 1 };
    let samples = 4096usize;
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let idx = [
            cal.gen::<u64>() & mask,
            cal.gen::<u64>() & mask,
            cal.gen::<u64>() & mask,
        ];
        let v = probe.eval(&idx);
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sum2 / samples as f64 - mean * mean).max(0.0);
    if var > 0.0 {
        core.scale(1.0 / var.sqrt());
    }
    TuckerTT::new(core, factors)
}

/// Mixed derivative of the refined stream function: one derivative per axis
/// listed in `deriv_axes`, refined from m to `scales` scales (periodic).
fn stream_term(
    g: &Stream,
    m: usize,
    scales: usize,
    deriv_axes: &[usize],
    tol: &Tolerance,
) -> Result<TensorTrain> {
    let kernel = bspline_cubic();
    let mut flags = [0usize; 3];
    for &ax in deriv_axes {
        flags[ax] += 1;
    }
    match g {
        Stream::Train(train) => {
            let mut cur = train.clone();
            let mut legs = interleaved_legs(3, m);
            for (axis, &flag) in flags.iter().enumerate() {
                let op = build_tti_1d(&kernel, m, scales - m, flag, BoundaryMode::Periodic)?;
                let (next, next_legs) =
                    refine_dim(&cur, &legs, &op, axis, LegOrder::ScaleMajor, tol)?;
                cur = next;
                legs = next_legs;
            }
            Ok(cur)
        }
        Stream::Tucker(t) => {
            let refined = apply_tti_tucker(t, &kernel, &[scales - m; 3], &flags, tol)?;
            refined.to_plain_train()
        }
    }
}

fn validate_range(spec: &CascadeSpec, lo: usize, hi: usize) -> Result<()> {
    if spec.chi == 0 {
        return Err(Error::config("stream bond rank must be at least 1"));
    }
    if !(spec.round_tol > 0.0) {
        return Err(Error::config("round_tol must be positive"));
    }
    if lo < 2 {
        return Err(Error::config("cubic stream functions need at least 2 scales"));
    }
    if lo > hi {
        return Err(Error::config("empty contribution range"));
    }
    if hi >= spec.scales {
        return Err(Error::config(
            "contribution scales must stay below the target scale",
        ));
    }
    Ok(())
}

/// The six (j, i) pairs of one contribution scale in accumulation order:
/// stream component j ascending, derivative axis i ascending within j.
/// Pairs 2t and 2t+1 share the stream component.
fn pair(t: usize) -> (usize, usize) {
    let j = t / 2;
    let mut others = (0..3).filter(|&x| x != j);
    let first = others.next().expect("two transverse axes");
    let second = others.next().expect("two transverse axes");
    (j, if t % 2 == 0 { first } else { second })
}

/// Full cascade velocity (v_x, v_y, v_z): contributions m = 2..scales-1.
pub fn turbulence_cascade(
    spec: &CascadeSpec,
    layout: CascadeLayout,
) -> Result<[TensorTrain; 3]> {
    if spec.scales < 4 {
        return Err(Error::config(
            "the cascade needs scales >= 4 (contributions run m = 2..scales-1)",
        ));
    }
    turbulence_cascade_range(spec, layout, 2, spec.scales - 1)
}

/// Velocity restricted to contribution scales m ∈ [lo, hi]. The six terms
/// of a scale are generated concurrently but accumulated in the fixed
/// [`pair`] order, so the result does not depend on scheduling.
pub fn turbulence_cascade_range(
    spec: &CascadeSpec,
    layout: CascadeLayout,
    lo: usize,
    hi: usize,
) -> Result<[TensorTrain; 3]> {
    validate_range(spec, lo, hi)?;
    let tol = Tolerance::relative(spec.round_tol);
    let mut v: [Option<TensorTrain>; 3] = [None, None, None];
    for m in lo..=hi {
        let w = spec.weight(m);
        let streams: Vec<Stream> = (0..3)
            .map(|j| draw_stream(spec, layout, m, j))
            .collect::<Result<_>>()?;
        let terms = map_indexed(6, |t| -> Result<(usize, f64, TensorTrain)> {
            let (j, i) = pair(t);
            let k = 3 - i - j;
            let term = stream_term(&streams[j], m, spec.scales, &[i], &tol)?;
            Ok((k, levi_civita(k, i, j) * w, term))
        });
        for entry in terms {
            let (k, coeff, mut term) = entry?;
            term.scale(coeff);
            v[k] = Some(match v[k].take() {
                None => term,
                Some(prev) => {
                    let mut s = prev.add(&term)?;
                    s.round(&tol);
                    s
                }
            });
        }
    }
    Ok(v.map(|c| c.expect("every component receives terms")))
}

/// Divergence Σ_k ∂_k v_k assembled from the same stream draws as
/// [`turbulence_cascade`], with the outer derivative applied analytically to
/// each term (∂_k ∂_i of the spline quasi-interpolant). Every contribution
/// appears twice with opposite Levi-Civita signs and an identical mixed
/// derivative, so the exact field is zero; what remains measures rounding.
pub fn divergence_cascade(spec: &CascadeSpec, layout: CascadeLayout) -> Result<TensorTrain> {
    if spec.scales < 4 {
        return Err(Error::config(
            "the cascade needs scales >= 4 (contributions run m = 2..scales-1)",
        ));
    }
    divergence_cascade_range(spec, layout, 2, spec.scales - 1)
}

/// Divergence restricted to contribution scales m ∈ [lo, hi].
pub fn divergence_cascade_range(
    spec: &CascadeSpec,
    layout: CascadeLayout,
    lo: usize,
    hi: usize,
) -> Result<TensorTrain> {
    validate_range(spec, lo, hi)?;
    let tol = Tolerance::relative(spec.round_tol);
    let mut acc: Option<TensorTrain> = None;
    for m in lo..=hi {
        let w = spec.weight(m);
        let streams: Vec<Stream> = (0..3)
            .map(|j| draw_stream(spec, layout, m, j))
            .collect::<Result<_>>()?;
        let terms = map_indexed(6, |t| -> Result<(f64, TensorTrain)> {
            let (j, i) = pair(t);
            let k = 3 - i - j;
            let term = stream_term(&streams[j], m, spec.scales, &[i, k], &tol)?;
            Ok((levi_civita(k, i, j) * w, term))
        });
        // round only once both members of a canceling pair are in, so the
        // cancellation happens before any truncation can disturb it
        for (t, entry) in terms.into_iter().enumerate() {
            let (coeff, mut term) = entry?;
            term.scale(coeff);
            acc = Some(match acc.take() {
                None => term,
                Some(prev) => prev.add(&term)?,
            });
            if t % 2 == 1 {
                if let Some(a) = acc.as_mut() {
                    a.round(&tol);
                }
            }
        }
    }
    Ok(acc.expect("at least one contribution scale"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_law_matches_the_kolmogorov_exponent() {
        let spec = CascadeSpec::default();
        assert!((spec.weight(3) - 0.0625).abs() < 1e-15);
        assert!((spec.weight(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pairs_enumerate_each_component_twice() {
        let pairs: Vec<(usize, usize)> = (0..6).map(pair).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]);
        for t in 0..6 {
            let (j, i) = pairs[t];
            assert_ne!(i, j);
            let k = 3 - i - j;
            assert_ne!(levi_civita(k, i, j), 0.0);
        }
    }

    #[test]
    fn cascade_rejects_short_grids_and_bad_ranges() {
        let spec = CascadeSpec {
            scales: 3,
            ..CascadeSpec::default()
        };
        assert!(turbulence_cascade(&spec, CascadeLayout::Interleaved).is_err());
        let spec = CascadeSpec {
            scales: 6,
            ..CascadeSpec::default()
        };
        assert!(turbulence_cascade_range(&spec, CascadeLayout::Interleaved, 2, 6).is_err());
        assert!(turbulence_cascade_range(&spec, CascadeLayout::Interleaved, 1, 3).is_err());
    }

    #[test]
    fn cascade_is_deterministic() {
        let spec = CascadeSpec {
            seed: 5,
            scales: 4,
            ..CascadeSpec::default()
        };
        let a = turbulence_cascade(&spec, CascadeLayout::Interleaved).unwrap();
        let b = turbulence_cascade(&spec, CascadeLayout::Interleaved).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let dx = x.to_dense().unwrap();
            let dy = y.to_dense().unwrap();
            assert_eq!(
                dx.iter().collect::<Vec<_>>(),
                dy.iter().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn divergence_is_negligible_relative_to_velocity() {
        for layout in [CascadeLayout::Interleaved, CascadeLayout::Tucker] {
            let spec = CascadeSpec {
                seed: 11,
                scales: 4,
                ..CascadeSpec::default()
            };
            let v = turbulence_cascade(&spec, layout).unwrap();
            let div = divergence_cascade(&spec, layout).unwrap();
            let vnorm = v.iter().map(|c| c.norm2().powi(2)).sum::<f64>().sqrt();
            assert!(
                div.norm2() <= 1e-8 * vnorm,
                "{} divergence {} vs velocity {}",
                layout.as_str(),
                div.norm2(),
                vnorm
            );
        }
    }
}
