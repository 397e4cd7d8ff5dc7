//! `qtti turbulence`: synthetic incompressible 3D velocity ensembles with
//! spectrum, increment-flatness, and divergence diagnostics.

use std::path::{Path, PathBuf};

use clap::Args;

use qtti_core::{parallel, Error, Result, TensorTrain};
use qtti_interp::grid::GridDescriptor;
use qtti_synth::{
    divergence_cascade_range, energy_spectrum, flatness, spectrum_slope,
    turbulence_cascade_range, CascadeLayout, CascadeSpec, IncrementKind,
};

use crate::commands::{mean_std, parse_usize_list, Runtime};
use crate::io::{write_tt, Stored, TtFile};

#[derive(Debug, Args)]
pub struct TurbulenceArgs {
    /// Scales per axis: the velocity lives on a (2^scales)^3 grid.
    #[arg(long)]
    pub scales: usize,

    /// Ensemble size: consecutive seeds starting at --seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,

    /// Base seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Bond rank of the random stream functions.
    #[arg(long, default_value_t = 5)]
    pub chi: usize,

    /// Per-scale weights are 2^(exponent * m); the default gives the
    /// Kolmogorov 5/3 cascade.
    #[arg(long, default_value_t = -4.0 / 3.0, allow_hyphen_values = true)]
    pub weight_exponent: f64,

    /// Relative rounding tolerance while accumulating scales.
    #[arg(long, default_value_t = 1e-10)]
    pub round_tol: f64,

    /// Velocity representation: interleaved or tucker.
    #[arg(long, default_value = "interleaved")]
    pub layout: String,

    /// Coarsest contribution scale (default 2).
    #[arg(long)]
    pub lo: Option<usize>,

    /// Finest contribution scale (default scales - 1).
    #[arg(long)]
    pub hi: Option<usize>,

    /// Output directory; each seed gets a subdirectory.
    #[arg(long)]
    pub out_dir: PathBuf,

    /// Write per-seed energy spectra and fit their slopes.
    #[arg(long)]
    pub spectrum: bool,

    /// Lower shell of the slope fit (default 2).
    #[arg(long)]
    pub fit_lo: Option<usize>,

    /// Upper shell of the slope fit (default 2^(scales-2)).
    #[arg(long)]
    pub fit_hi: Option<usize>,

    /// Comma-separated separations (grid cells) for longitudinal increment
    /// flatness.
    #[arg(long)]
    pub flatness: Option<String>,

    /// Report the relative divergence of each field.
    #[arg(long)]
    pub divergence: bool,
}

struct SeedResult {
    seed: u64,
    velocity: [TensorTrain; 3],
    divergence: Option<TensorTrain>,
}

fn csv_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::from("nan")
    }
}

fn write_series(path: &Path, header: &str, rows: &[(usize, f64)]) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for &(k, v) in rows {
        text.push_str(&format!("{k},{}\n", csv_f64(v)));
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn run(args: &TurbulenceArgs, runtime: bool) -> Result<()> {
    let mut clock = Runtime::new(runtime);
    let layout = CascadeLayout::parse(&args.layout)?;
    let lo = args.lo.unwrap_or(2);
    let hi = args.hi.unwrap_or(args.scales.saturating_sub(1));
    if args.seeds == 0 {
        return Err(Error::config("the ensemble needs at least one seed"));
    }
    let separations = args
        .flatness
        .as_deref()
        .map(parse_usize_list)
        .transpose()?;

    let spec_for = |seed: u64| CascadeSpec {
        seed,
        scales: args.scales,
        chi: args.chi,
        weight_exponent: args.weight_exponent,
        round_tol: args.round_tol,
    };
    let want_divergence = args.divergence;
    let results: Vec<Result<SeedResult>> = parallel::map_indexed(args.seeds, |i| {
        let seed = args.seed + i as u64;
        let spec = spec_for(seed);
        let velocity = turbulence_cascade_range(&spec, layout, lo, hi)?;
        let divergence = if want_divergence {
            Some(divergence_cascade_range(&spec, layout, lo, hi)?)
        } else {
            None
        };
        Ok(SeedResult { seed, velocity, divergence })
    });
    clock.stage("generate");

    let data_layout = layout.data_layout();
    let grid = GridDescriptor::cube(3, args.scales, (0.0, 1.0), data_layout, true);
    let fit_lo = args.fit_lo.unwrap_or(2);
    let fit_hi = args.fit_hi.unwrap_or((1usize << args.scales) / 4);

    let mut header = vec!["seed".to_string(), "max_rank".to_string()];
    if args.spectrum {
        header.push("slope".to_string());
    }
    if let Some(seps) = &separations {
        for &r in seps {
            header.push(format!("flatness_r{r}"));
        }
    }
    if want_divergence {
        header.push("divergence_rel".to_string());
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(args.seeds);
    let mut row_seeds: Vec<u64> = Vec::with_capacity(args.seeds);
    for result in results {
        let SeedResult { seed, velocity, divergence } = result?;
        let dir = args.out_dir.join(format!("seed{seed}"));
        std::fs::create_dir_all(&dir)?;
        for (name, component) in ["vx", "vy", "vz"].iter().zip(&velocity) {
            write_tt(
                &dir.join(format!("{name}.tt")),
                &TtFile { grid: grid.clone(), field: Stored::Train(component.clone()) },
            )?;
        }
        let max_rank = velocity.iter().map(|v| v.max_rank()).max().unwrap_or(0);
        let mut row = vec![max_rank as f64];
        if args.spectrum {
            let spectrum = energy_spectrum(&velocity, data_layout, args.scales)?;
            write_series(&dir.join("spectrum.csv"), "k,energy", &spectrum)?;
            row.push(spectrum_slope(&spectrum, fit_lo, fit_hi));
        }
        if let Some(seps) = &separations {
            let flat = flatness(
                &velocity,
                data_layout,
                args.scales,
                seps,
                IncrementKind::Longitudinal,
            )?;
            write_series(&dir.join("flatness.csv"), "r,flatness", &flat)?;
            row.extend(flat.iter().map(|&(_, f)| f));
        }
        if let Some(div) = divergence {
            let vmax = velocity.iter().map(|v| v.norm2()).fold(0.0f64, f64::max);
            let rel = if vmax > 0.0 { div.norm2() / vmax } else { f64::NAN };
            row.push(rel);
        }
        row_seeds.push(seed);
        rows.push(row);
    }

    // Aggregate after every per-seed artifact exists.
    let mut csv = header.join(",");
    csv.push('\n');
    for (seed, row) in row_seeds.iter().zip(&rows) {
        let cells: Vec<String> = std::iter::once(seed.to_string())
            .chain(row.iter().map(|&v| csv_f64(v)))
            .collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    let aggregate = args.out_dir.join("aggregate.csv");
    std::fs::write(&aggregate, csv)?;
    clock.stage("write");

    println!("seeds={}", args.seeds);
    println!("aggregate={}", aggregate.display());
    for (col, name) in header.iter().enumerate().skip(1) {
        let values: Vec<f64> = rows
            .iter()
            .map(|row| row[col - 1])
            .filter(|v| v.is_finite())
            .collect();
        let (mean, std) = mean_std(&values);
        println!("{name}_mean={mean}");
        println!("{name}_std={std}");
    }
    clock.stage("metrics");
    Ok(())
}
