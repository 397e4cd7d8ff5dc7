//! `qtti analyze`: inspect a train file — storage stats, sampled errors,
//! and dense/image exports.

use std::path::PathBuf;

use clap::Args;

use qtti_core::{Error, Result};

use crate::commands::{coords_of, print_stats, sampled_error, Runtime};
use crate::fixtures::Fixture;
use crate::io::{densify, read_tt, write_dense, write_pgm, Image};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Input train file.
    #[arg(short, long)]
    pub input: PathBuf,

    /// Fixture to sample the field against.
    #[arg(long)]
    pub rmse_fixture: Option<String>,

    /// Factor applied to the reference fixture before comparing.
    #[arg(long, default_value_t = 1.0)]
    pub rmse_scale: f64,

    /// Transition width when the reference fixture is a soft mask.
    #[arg(long)]
    pub mask_width: Option<f64>,

    /// Sample count of the error report.
    #[arg(long, default_value_t = 10_000)]
    pub rmse_samples: usize,

    /// Seed of the error-sampling stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Write the dense field (capacity permitting).
    #[arg(long)]
    pub dense_out: Option<PathBuf>,

    /// Write a grayscale PGM of a 2D field; values are clamped to
    /// [0, --pgm-max] and rounded.
    #[arg(long)]
    pub pgm_out: Option<PathBuf>,

    /// Maximum sample value of the PGM export.
    #[arg(long, default_value_t = 255)]
    pub pgm_max: u16,

    /// Factor applied to field values before quantizing to PGM samples
    /// (use 255 for unit-range fields).
    #[arg(long, default_value_t = 1.0)]
    pub pgm_scale: f64,
}

pub fn run(args: &AnalyzeArgs, runtime: bool) -> Result<()> {
    let mut clock = Runtime::new(runtime);
    let file = read_tt(&args.input)?;
    let grid = &file.grid;
    clock.stage("load");

    println!("dims={}", grid.dims());
    println!(
        "scales={}",
        grid.scales.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
    );
    println!("layout={}", grid.layout.as_str());
    println!(
        "periodic={}",
        grid.periodic
            .iter()
            .map(|&p| if p { "1" } else { "0" })
            .collect::<Vec<_>>()
            .join(",")
    );
    print_stats(&file.field, grid);

    if let Some(name) = &args.rmse_fixture {
        let fixture = Fixture::parse(name, args.mask_width)?;
        if fixture.dims() != grid.dims() {
            return Err(Error::config(format!(
                "fixture {name} is {}-dimensional but the field has {} dimensions",
                fixture.dims(),
                grid.dims()
            )));
        }
        let g = grid.clone();
        let scale = args.rmse_scale;
        let (rmse, max) = sampled_error(
            &file.field,
            grid,
            move |idx| scale * fixture.eval(&coords_of(&g, idx)),
            args.rmse_samples,
            args.seed,
        )?;
        println!("rmse={rmse}");
        println!("max_err={max}");
        clock.stage("metrics");
    }

    if args.dense_out.is_some() || args.pgm_out.is_some() {
        grid.total_points()?;
        let dense = densify(&file)?;
        if let Some(path) = &args.dense_out {
            write_dense(path, &dense)?;
        }
        if let Some(path) = &args.pgm_out {
            if dense.ndim() != 2 {
                return Err(Error::config("--pgm-out needs a two-dimensional field"));
            }
            if args.pgm_max == 0 {
                return Err(Error::config("--pgm-max must be positive"));
            }
            let (h, w) = (dense.shape()[0], dense.shape()[1]);
            write_pgm(
                path,
                &Image {
                    width: w,
                    height: h,
                    maxval: args.pgm_max,
                    pixels: dense.iter().map(|&v| v * args.pgm_scale).collect(),
                },
            )?;
        }
        clock.stage("export");
    }
    Ok(())
}
