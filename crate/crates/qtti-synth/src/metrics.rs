//! Field statistics: sampled errors, energy spectra, increment flatness,
//! rank accounting, and convergence-order fits.

use ndarray::{ArrayD, IxDyn};
use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use qtti_core::{Error, Result, TensorTrain, Tolerance};
use qtti_interp::grid::{deinterleave, GridDescriptor, Layout};
use qtti_interp::kernels::Kernel;
use qtti_interp::tti::refine_1d;
use qtti_interp::BoundaryMode;

use crate::stream::labeled;

/// RMS deviation between the train and a reference over `samples` uniformly
/// drawn multi-indices; deterministic per seed.
pub fn rmse_sampled(
    tt: &TensorTrain,
    reference: impl Fn(&[usize]) -> f64,
    samples: usize,
    seed: u64,
) -> f64 {
    assert!(samples >= 1, "rmse_sampled needs at least one sample");
    let dims = tt.dims();
    let mut rng = labeled(seed, "rmse/sample");
    let mut idx = vec![0usize; dims.len()];
    let mut sum = 0.0;
    for _ in 0..samples {
        for (slot, &n) in idx.iter_mut().zip(&dims) {
            *slot = rng.gen_range(0..n);
        }
        let d = tt.eval(&idx) - reference(&idx);
        sum += d * d;
    }
    (sum / samples as f64).sqrt()
}

/// Densify a train over a hypercube of `scales` scales per axis into a
/// standard-layout array shaped `[2^scales; d]` with `d = len / scales`.
fn densify(tt: &TensorTrain, layout: Layout, scales: usize) -> Result<ArrayD<f64>> {
    if scales == 0 || tt.len() % scales != 0 {
        return Err(Error::config(
            "core count is not a multiple of the scale count",
        ));
    }
    let d = tt.len() / scales;
    let side = 1usize << scales;
    let raw = match layout {
        Layout::Interleaved => {
            let grid = GridDescriptor::cube(d, scales, (0.0, 1.0), Layout::Interleaved, true);
            deinterleave(tt, &grid)?
        }
        Layout::Plain => tt.to_dense()?,
        Layout::Tucker => {
            return Err(Error::config("densify expects plain or interleaved trains"))
        }
    };
    let flat: Vec<f64> = raw.iter().copied().collect();
    ArrayD::from_shape_vec(IxDyn(&vec![side; d]), flat)
        .map_err(|_| Error::config("train does not fill the requested hypercube"))
}

/// In-place multi-dimensional FFT of row-major data.
fn fft_axes(data: &mut [Complex<f64>], shape: &[usize]) {
    let mut planner = FftPlanner::new();
    let total: usize = shape.iter().product();
    for axis in 0..shape.len() {
        let n = shape[axis];
        let fft = planner.plan_fft_forward(n);
        let stride: usize = shape[axis + 1..].iter().product();
        let block = stride * n;
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (t, slot) in buf.iter_mut().enumerate() {
                    *slot = data[base + t * stride];
                }
                fft.process(&mut buf);
                for (t, slot) in buf.iter().enumerate() {
                    data[base + t * stride] = *slot;
                }
            }
        }
    }
}

/// Shell-averaged kinetic energy spectrum of a field snapshot.
///
/// Densifies each component on the `(2^scales)^d` grid, Fourier transforms,
/// and bins ½|v̂|²/N² into integer shells [k−½, k+½) on the signed
/// wavenumber magnitude. Every shell is returned, including 0 and the
/// corner shells above 2^{scales−1}, so the series sums exactly to half the
/// mean square of the field (Parseval); plots and slope fits normally
/// restrict to 1 ≤ k ≤ 2^{scales−1}.
pub fn energy_spectrum(
    v: &[TensorTrain],
    layout: Layout,
    scales: usize,
) -> Result<Vec<(usize, f64)>> {
    if v.is_empty() {
        return Err(Error::config("energy spectrum needs at least one component"));
    }
    let mut shells: Vec<f64> = Vec::new();
    let mut shape: Option<Vec<usize>> = None;
    for tt in v {
        let dense = densify(tt, layout, scales)?;
        match &shape {
            Some(s) if s.as_slice() != dense.shape() => {
                return Err(Error::config("components live on different grids"))
            }
            None => shape = Some(dense.shape().to_vec()),
            _ => {}
        }
        let dims = dense.shape().to_vec();
        let total: usize = dims.iter().product();
        let mut data: Vec<Complex<f64>> =
            dense.iter().map(|&x| Complex::new(x, 0.0)).collect();
        fft_axes(&mut data, &dims);
        let norm = total as f64 * total as f64;
        for (lin, val) in data.iter().enumerate() {
            let mut rem = lin;
            let mut k2 = 0.0;
            for &n in dims.iter().rev() {
                let idx = rem % n;
                rem /= n;
                let signed = if idx > n / 2 {
                    idx as f64 - n as f64
                } else {
                    idx as f64
                };
                k2 += signed * signed;
            }
            let shell = k2.sqrt().round() as usize;
            if shell >= shells.len() {
                shells.resize(shell + 1, 0.0);
            }
            shells[shell] += 0.5 * val.norm_sqr() / norm;
        }
    }
    Ok(shells.into_iter().enumerate().collect())
}

/// Least-squares slope of ln(y) versus ln(x), ignoring non-positive points.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, y)| x > 0.0 && y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return f64::NAN;
    }
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Spectrum slope over the shells k ∈ [k_lo, k_hi].
pub fn spectrum_slope(series: &[(usize, f64)], k_lo: usize, k_hi: usize) -> f64 {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|&&(k, e)| k >= k_lo && k <= k_hi && e > 0.0)
        .map(|&(k, e)| (k as f64, e))
        .collect();
    fit_loglog_slope(&pts)
}

/// Direction handling for increment statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncrementKind {
    /// Increment of the component aligned with the separation axis; pools
    /// all components when their count differs from the grid dimension.
    Longitudinal,
    /// Pool every component along every axis.
    FullVector,
}

/// Flatness F(r) = S₄(r)/S₂(r)² of field increments at the given
/// separations (in grid cells), averaged over positions and axes.
/// Increments never wrap around the domain, so a linear profile gives
/// exactly 1. Separations with no valid increments or zero S₂ yield NaN.
pub fn flatness(
    v: &[TensorTrain],
    layout: Layout,
    scales: usize,
    separations: &[usize],
    kind: IncrementKind,
) -> Result<Vec<(usize, f64)>> {
    if v.is_empty() {
        return Err(Error::config("flatness needs at least one component"));
    }
    let fields: Vec<ArrayD<f64>> = v
        .iter()
        .map(|tt| densify(tt, layout, scales))
        .collect::<Result<_>>()?;
    let shape = fields[0].shape().to_vec();
    if fields.iter().any(|f| f.shape() != shape.as_slice()) {
        return Err(Error::config("components live on different grids"));
    }
    let d = shape.len();
    let total: usize = shape.iter().product();
    let longitudinal = kind == IncrementKind::Longitudinal && v.len() == d;
    let mut out = Vec::with_capacity(separations.len());
    for &r in separations {
        let mut s2 = 0.0;
        let mut s4 = 0.0;
        let mut count = 0usize;
        for axis in 0..d {
            let n = shape[axis];
            if r == 0 || r >= n {
                continue;
            }
            let stride: usize = shape[axis + 1..].iter().product();
            for (c, field) in fields.iter().enumerate() {
                if longitudinal && c != axis {
                    continue;
                }
                let data = field.as_slice().expect("densify returns standard layout");
                for (lin, &base) in data.iter().enumerate().take(total) {
                    if (lin / stride) % n + r >= n {
                        continue;
                    }
                    let delta = data[lin + r * stride] - base;
                    let d2 = delta * delta;
                    s2 += d2;
                    s4 += d2 * d2;
                    count += 1;
                }
            }
        }
        let f = if count == 0 || s2 == 0.0 {
            f64::NAN
        } else {
            let m2 = s2 / count as f64;
            let m4 = s4 / count as f64;
            m4 / (m2 * m2)
        };
        out.push((r, f));
    }
    Ok(out)
}

/// Rank and storage accounting of one train.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankStats {
    pub max_rank: usize,
    pub parameter_count: usize,
    /// TT parameters divided by dense grid points.
    pub compression_ratio: f64,
}

pub fn rank_stats(tt: &TensorTrain) -> RankStats {
    let parameter_count = tt.param_count();
    let points: f64 = tt.dims().iter().map(|&n| n as f64).product();
    RankStats {
        max_rank: tt.max_rank(),
        parameter_count,
        compression_ratio: parameter_count as f64 / points,
    }
}

/// Fit the convergence order of a kernel on a smooth periodic profile: for
/// each coarse scale n, encode samples of `f` on the unit circle, refine by
/// `refine_by` scales, and measure the RMSE against `f` on the fine grid.
/// Returns the least-squares slope of log error versus log coarse spacing.
pub fn convergence_study(
    kernel: &Kernel,
    f: impl Fn(f64) -> f64,
    coarse_scales: &[usize],
    refine_by: usize,
    tol: &Tolerance,
) -> Result<f64> {
    if coarse_scales.len() < 2 {
        return Err(Error::config("need at least two coarse scales to fit a slope"));
    }
    let mut points = Vec::with_capacity(coarse_scales.len());
    for &n in coarse_scales {
        let len = 1usize << n;
        let samples: Vec<f64> = (0..len).map(|j| f(j as f64 / len as f64)).collect();
        let arr = ArrayD::from_shape_vec(IxDyn(&vec![2; n]), samples)
            .map_err(|_| Error::config("coarse grid shape"))?;
        let train = TensorTrain::from_dense(arr.view(), &Tolerance::exact())?;
        let fine = refine_1d(&train, kernel, refine_by, 0, BoundaryMode::Periodic, tol)?;
        let total = 1usize << (n + refine_by);
        let dense = fine.to_dense()?;
        let mut sum = 0.0;
        for (j, v) in dense.iter().enumerate() {
            let d = v - f(j as f64 / total as f64);
            sum += d * d;
        }
        points.push((1.0 / len as f64, (sum / total as f64).sqrt()));
    }
    Ok(fit_loglog_slope(&points))
}

fn float_csv(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::from("nan")
    }
}

fn float_json(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::from("null")
    }
}

/// Named scalar and series results of one analysis pass, emitted as CSV
/// (one header row, comma separators, '.' decimal) plus a JSON-style scalar
/// summary.
#[derive(Debug, Clone, Default)]
pub struct MetricReport {
    pub name: String,
    pub scalars: Vec<(String, f64)>,
    pub series_header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl MetricReport {
    pub fn new(name: impl Into<String>) -> Self {
        MetricReport {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn push_scalar(&mut self, key: impl Into<String>, value: f64) {
        self.scalars.push((key.into(), value));
    }

    /// Series block: header row, then one row per entry.
    pub fn series_csv(&self) -> String {
        let mut out = self.series_header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| float_csv(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Scalar block with a `metric,value` header.
    pub fn scalars_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (k, v) in &self.scalars {
            out.push_str(k);
            out.push(',');
            out.push_str(&float_csv(*v));
            out.push('\n');
        }
        out
    }

    /// JSON object of the scalar summary.
    pub fn scalars_json(&self) -> String {
        let mut body: Vec<String> = vec![format!("  \"name\": \"{}\"", self.name)];
        body.extend(
            self.scalars
                .iter()
                .map(|(k, v)| format!("  \"{k}\": {}", float_json(*v))),
        );
        format!("{{\n{}\n}}\n", body.join(",\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::random_qtt;
    use rand_distr::StandardNormal;

    #[test]
    fn rmse_of_a_train_against_itself_is_zero_and_offsets_survive() {
        let tt = random_qtt(8, 3, 3).unwrap();
        let dense = tt.to_dense().unwrap();
        let flat: Vec<f64> = dense.iter().copied().collect();
        let lookup = |idx: &[usize]| {
            let lin = idx.iter().fold(0usize, |acc, &b| acc * 2 + b);
            flat[lin]
        };
        assert!(rmse_sampled(&tt, lookup, 2000, 1) <= 1e-12);
        let shifted = |idx: &[usize]| lookup(idx) + 0.25;
        let r = rmse_sampled(&tt, shifted, 2000, 1);
        assert!((r - 0.25).abs() <= 1e-12, "rmse {r}");
    }

    #[test]
    fn single_mode_concentrates_in_its_shell() {
        let n = 16usize;
        let mut values = Vec::with_capacity(n * n * n);
        for x in 0..n {
            for _y in 0..n {
                for _z in 0..n {
                    values.push((2.0 * std::f64::consts::PI * 3.0 * x as f64 / n as f64).sin());
                }
            }
        }
        let arr = ArrayD::from_shape_vec(IxDyn(&vec![2; 12]), values).unwrap();
        let tt = TensorTrain::from_dense(arr.view(), &Tolerance::relative(1e-13)).unwrap();
        let spectrum = energy_spectrum(&[tt], Layout::Plain, 4).unwrap();
        let total: f64 = spectrum.iter().map(|(_, e)| e).sum();
        let in_shell = spectrum[3].1;
        assert!(in_shell > 0.99 * total, "shell 3 holds {in_shell} of {total}");
        // Parseval: the field has mean square 1/2, so total energy is 1/4
        assert!((total - 0.25).abs() <= 1e-10, "total {total}");
    }

    #[test]
    fn spectrum_satisfies_parseval_for_a_generic_field() {
        let comps: Vec<TensorTrain> = (0..3)
            .map(|c| random_qtt(9, 3, 100 + c as u64).unwrap())
            .collect();
        let spectrum = energy_spectrum(&comps, Layout::Plain, 3).unwrap();
        let total: f64 = spectrum.iter().map(|(_, e)| e).sum();
        let mean_sq: f64 = comps
            .iter()
            .map(|tt| {
                let d = tt.to_dense().unwrap();
                d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64
            })
            .sum();
        assert!(
            (total - 0.5 * mean_sq).abs() <= 1e-10 * mean_sq.max(1.0),
            "total {total} vs half mean square {}",
            0.5 * mean_sq
        );
        assert!(spectrum.iter().all(|&(_, e)| e >= 0.0));
    }

    #[test]
    fn linear_profile_has_unit_flatness() {
        let n = 6;
        let values: Vec<f64> = (0..1 << n).map(|j| j as f64 / (1 << n) as f64).collect();
        let arr = ArrayD::from_shape_vec(IxDyn(&vec![2; n]), values).unwrap();
        let tt = TensorTrain::from_dense(arr.view(), &Tolerance::exact()).unwrap();
        let f = flatness(&[tt], Layout::Plain, n, &[1, 2, 4], IncrementKind::Longitudinal).unwrap();
        for (r, value) in f {
            assert!((value - 1.0).abs() <= 1e-10, "r={r} flatness={value}");
        }
    }

    #[test]
    fn uncorrelated_gaussian_field_has_flatness_near_three() {
        use rand::Rng;
        let mut rng = labeled(42, "flatness-gaussian");
        let n = 32usize;
        let values: Vec<f64> = (0..n * n * n).map(|_| rng.sample(StandardNormal)).collect();
        let arr = ArrayD::from_shape_vec(IxDyn(&vec![2; 15]), values).unwrap();
        let tt = TensorTrain::from_dense(arr.view(), &Tolerance::relative(1e-13)).unwrap();
        let f = flatness(&[tt], Layout::Plain, 5, &[1], IncrementKind::FullVector).unwrap();
        let (_, value) = f[0];
        assert!((value - 3.0).abs() <= 0.3, "flatness {value}");
    }

    #[test]
    fn rank_stats_count_parameters_exactly() {
        let ones = TensorTrain::constant(&[2; 20], 1.0);
        let stats = rank_stats(&ones);
        assert_eq!(stats.max_rank, 1);
        assert_eq!(stats.parameter_count, 40);
        let expect = 40.0 / (1u64 << 20) as f64;
        assert!((stats.compression_ratio - expect).abs() <= 1e-18);
    }

    #[test]
    fn loglog_fit_recovers_exact_power_laws() {
        let pts: Vec<(f64, f64)> = (1..6).map(|k| (k as f64, 7.0 * (k as f64).powi(3))).collect();
        assert!((fit_loglog_slope(&pts) - 3.0).abs() <= 1e-12);
        let series: Vec<(usize, f64)> = (1..20).map(|k| (k, (k as f64).powf(-5.0 / 3.0))).collect();
        assert!((spectrum_slope(&series, 2, 16) + 5.0 / 3.0).abs() <= 1e-12);
    }

    #[test]
    fn keys_convergence_order_is_cubic() {
        let kernel = qtti_interp::kernels::keys_cubic();
        let slope = convergence_study(
            &kernel,
            |x| (2.0 * std::f64::consts::PI * x).sin(),
            &[5, 6, 7],
            3,
            &Tolerance::relative(1e-13),
        )
        .unwrap();
        assert!((slope - 3.0).abs() <= 0.3, "slope {slope}");
    }

    #[test]
    fn report_emits_header_rows_and_json() {
        let mut rep = MetricReport::new("demo");
        rep.push_scalar("rmse", 0.5);
        rep.push_scalar("max_rank", 7.0);
        rep.series_header = vec!["k".into(), "energy".into()];
        rep.rows = vec![vec![1.0, 0.25], vec![2.0, 0.125]];
        let csv = rep.series_csv();
        assert!(csv.starts_with("k,energy\n"));
        assert!(csv.contains("2,0.125"));
        let scalars = rep.scalars_csv();
        assert!(scalars.starts_with("metric,value\n"));
        assert!(scalars.contains("rmse,0.5"));
        let json = rep.scalars_json();
        assert!(json.contains("\"name\": \"demo\""));
        assert!(json.contains("\"max_rank\": 7"));
    }
}
