//! Subcommand implementations and the helpers they share.

pub mod analyze;
pub mod encode;
pub mod noise;
pub mod refine;
pub mod superres;
pub mod turbulence;

use std::path::Path;
use std::time::Instant;

use rand::Rng;

use qtti_core::{Error, Result, Tolerance};
use qtti_interp::grid::{GridDescriptor, Layout};
use qtti_synth::labeled;

use crate::io::Stored;

/// Wall-clock stage reporting, printed as `runtime_<stage>_ms=` lines when
/// enabled. Purely descriptive output; nothing parses it.
pub struct Runtime {
    enabled: bool,
    last: Instant,
}

impl Runtime {
    pub fn new(enabled: bool) -> Self {
        Runtime {
            enabled,
            last: Instant::now(),
        }
    }

    /// Close the current stage under `name` and start the next one.
    pub fn stage(&mut self, name: &str) {
        let now = Instant::now();
        if self.enabled {
            let ms = now.duration_since(self.last).as_secs_f64() * 1e3;
            println!("runtime_{name}_ms={ms:.3}");
        }
        self.last = now;
    }
}

/// Map a CLI tolerance to the rounding policy; 0 keeps everything.
pub fn tol_of(tol: f64) -> Result<Tolerance> {
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::config("tolerance must be a finite non-negative number"));
    }
    Ok(if tol == 0.0 {
        Tolerance::exact()
    } else {
        Tolerance::relative(tol)
    })
}

/// "auto" keeps the source-dependent default; anything else must name a
/// concrete layout.
pub fn parse_layout(s: &str) -> Result<Option<Layout>> {
    if s == "auto" {
        Ok(None)
    } else {
        Layout::parse(s).map(Some)
    }
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| Error::config(format!("expected an integer, got {part:?}")))
        })
        .collect()
}

/// Per-dimension grid indices of one train entry, given the per-core bit
/// choices in storage order.
pub fn bits_to_indices(grid: &GridDescriptor, bits: &[usize]) -> Result<Vec<usize>> {
    let d = grid.dims();
    let expected: usize = grid.scales.iter().sum();
    if bits.len() != expected {
        return Err(Error::config("bit count does not match the grid"));
    }
    let mut idx = vec![0usize; d];
    match grid.layout {
        // Dimension-major: all bits of dim 0 (coarse to fine), then dim 1, ...
        Layout::Plain | Layout::Tucker => {
            let mut pos = 0;
            for (m, &n) in grid.scales.iter().enumerate() {
                for _ in 0..n {
                    idx[m] = (idx[m] << 1) | bits[pos];
                    pos += 1;
                }
            }
        }
        // Scale-major: one bit per dimension at each scale.
        Layout::Interleaved => {
            let n = grid
                .uniform_scale()
                .ok_or_else(|| Error::config("interleaved grids need a uniform scale"))?;
            for s in 0..n {
                for m in 0..d {
                    idx[m] = (idx[m] << 1) | bits[s * d + m];
                }
            }
        }
    }
    Ok(idx)
}

/// Physical coordinates of one grid multi-index.
pub fn coords_of(grid: &GridDescriptor, idx: &[usize]) -> Vec<f64> {
    idx.iter()
        .enumerate()
        .map(|(m, &i)| grid.coordinate(m, i))
        .collect()
}

/// Sampled deviation of a stored field from an index-wise reference:
/// returns (rmse, max abs error) over `samples` uniform grid points drawn
/// from a deterministic stream.
pub fn sampled_error(
    field: &Stored,
    grid: &GridDescriptor,
    reference: impl Fn(&[usize]) -> f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::config("need at least one error sample"));
    }
    let mut rng = labeled(seed, "cli/error-sample");
    let mut sum = 0.0;
    let mut max = 0.0f64;
    match field {
        Stored::Train(tt) => {
            let dims = tt.dims();
            let mut bits = vec![0usize; dims.len()];
            for _ in 0..samples {
                for (slot, &n) in bits.iter_mut().zip(&dims) {
                    *slot = rng.gen_range(0..n);
                }
                let idx = bits_to_indices(grid, &bits)?;
                let d = tt.eval(&bits) - reference(&idx);
                sum += d * d;
                max = max.max(d.abs());
            }
        }
        Stored::Tucker(t) => {
            let d = grid.dims();
            let mut idx = vec![0u64; d];
            let mut usz = vec![0usize; d];
            for _ in 0..samples {
                for m in 0..d {
                    let i = rng.gen_range(0..grid.points(m));
                    idx[m] = i as u64;
                    usz[m] = i;
                }
                let e = t.eval(&idx) - reference(&usz);
                sum += e * e;
                max = max.max(e.abs());
            }
        }
    }
    Ok(((sum / samples as f64).sqrt(), max))
}

/// Print the shared `key=value` storage summary of a field.
pub fn print_stats(field: &Stored, grid: &GridDescriptor) {
    let params = field.param_count();
    let points: f64 = (0..grid.dims()).map(|m| grid.points(m) as f64).product();
    println!("max_rank={}", field.max_rank());
    println!("parameter_count={params}");
    println!("compression_ratio={}", params as f64 / points);
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
