//! `qtti encode`: compress a fixture, image, or dense field into a train file.

use std::path::PathBuf;

use clap::Args;
use ndarray::{ArrayD, IxDyn};

use qtti_core::{Error, Result};
use qtti_interp::grid::{encode_dense, encode_function, Encoded, GridDescriptor, Layout};

use crate::commands::{parse_layout, print_stats, sampled_error, tol_of, Runtime};
use crate::fixtures::Fixture;
use crate::io::{read_dense, read_pgm, write_tt, Stored, TtFile};

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Built-in analytic field to sample (eqg1, sin, cos, exp, poly, ones,
    /// gauss2d, circle, airfoil, gradient2d).
    #[arg(long, conflicts_with_all = ["image", "dense_in"])]
    pub fixture: Option<String>,

    /// Grayscale binary PGM image to encode.
    #[arg(long, conflicts_with = "dense_in")]
    pub image: Option<PathBuf>,

    /// Raw dense field file to encode.
    #[arg(long)]
    pub dense_in: Option<PathBuf>,

    /// Scales per dimension (2^n points per axis). Required for fixtures;
    /// checked against the data for --image/--dense-in.
    #[arg(long)]
    pub scales: Option<usize>,

    /// Train layout: auto, plain, interleaved, or tucker. Auto picks plain
    /// in 1D and interleaved otherwise.
    #[arg(long, default_value = "auto")]
    pub layout: String,

    /// Relative compression tolerance; 0 keeps every singular value.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    /// Transition width of the soft-mask fixtures.
    #[arg(long)]
    pub mask_width: Option<f64>,

    /// Mark every axis periodic (only meaningful for --dense-in sources;
    /// fixtures and images carry their own convention).
    #[arg(long)]
    pub periodic: bool,

    /// Sample count for the reported fit error; 0 skips the report.
    #[arg(long, default_value_t = 0)]
    pub rmse_samples: usize,

    /// Seed of the error-sampling stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output train file.
    #[arg(short, long)]
    pub out: PathBuf,
}

fn pow2_scale(len: usize, what: &str) -> Result<usize> {
    if len.is_power_of_two() && len > 1 {
        Ok(len.trailing_zeros() as usize)
    } else {
        Err(Error::config(format!(
            "{what} must be a power of two with at least 2 points, got {len}"
        )))
    }
}

fn check_scales(requested: Option<usize>, inferred: &[usize]) -> Result<()> {
    if let Some(n) = requested {
        if inferred.iter().any(|&s| s != n) {
            return Err(Error::config(format!(
                "--scales {n} disagrees with the data ({inferred:?} scales per axis)"
            )));
        }
    }
    Ok(())
}

/// Layout for a source of dimension d with the given per-axis scales.
fn resolve_layout(choice: Option<Layout>, scales: &[usize]) -> Result<Layout> {
    let layout = choice.unwrap_or(if scales.len() == 1 {
        Layout::Plain
    } else {
        Layout::Interleaved
    });
    if layout == Layout::Interleaved && scales.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::config(
            "the interleaved layout needs the same scale count on every axis",
        ));
    }
    Ok(layout)
}

pub fn run(args: &EncodeArgs, runtime: bool) -> Result<()> {
    let mut clock = Runtime::new(runtime);
    let tol = tol_of(args.tol)?;
    let layout_choice = parse_layout(&args.layout)?;

    // Sample or load the source, producing the grid, the encoded field, and
    // an index-wise reference for the optional error report.
    let (grid, encoded, reference): (GridDescriptor, Encoded, Box<dyn Fn(&[usize]) -> f64>) =
        if let Some(name) = &args.fixture {
            let fixture = Fixture::parse(name, args.mask_width)?;
            let n = args
                .scales
                .ok_or_else(|| Error::config("--fixture sources need --scales"))?;
            let layout = resolve_layout(layout_choice, &vec![n; fixture.dims()])?;
            let grid = fixture.grid(n, layout)?;
            let encoded = encode_function(|x| fixture.eval(x), &grid, &tol)?;
            let g = grid.clone();
            (
                grid,
                encoded,
                Box::new(move |idx| fixture.eval(&crate::commands::coords_of(&g, idx))),
            )
        } else if let Some(path) = &args.image {
            let image = read_pgm(path)?;
            let scales = vec![
                pow2_scale(image.height, "image height")?,
                pow2_scale(image.width, "image width")?,
            ];
            check_scales(args.scales, &scales)?;
            let layout = resolve_layout(layout_choice, &scales)?;
            let grid = GridDescriptor::new(
                scales,
                vec![(0.0, 1.0); 2],
                layout,
                vec![false; 2],
            )?;
            let dense = ArrayD::from_shape_vec(
                IxDyn(&[image.height, image.width]),
                image.pixels.clone(),
            )
            .expect("image buffer matches its header");
            let encoded = encode_dense(dense.view(), &grid, &tol)?;
            (
                grid,
                encoded,
                Box::new(move |idx: &[usize]| dense[IxDyn(idx)]),
            )
        } else if let Some(path) = &args.dense_in {
            let dense = read_dense(path)?;
            let scales: Vec<usize> = dense
                .shape()
                .iter()
                .map(|&len| pow2_scale(len, "axis length"))
                .collect::<Result<_>>()?;
            check_scales(args.scales, &scales)?;
            let layout = resolve_layout(layout_choice, &scales)?;
            let d = scales.len();
            let grid =
                GridDescriptor::new(scales, vec![(0.0, 1.0); d], layout, vec![args.periodic; d])?;
            let encoded = encode_dense(dense.view(), &grid, &tol)?;
            (
                grid,
                encoded,
                Box::new(move |idx: &[usize]| dense[IxDyn(idx)]),
            )
        } else {
            return Err(Error::config(
                "pick a source: --fixture, --image, or --dense-in",
            ));
        };
    clock.stage("encode");

    let field = match encoded {
        Encoded::Train(t) => Stored::Train(t),
        Encoded::Tucker(t) => Stored::Tucker(t),
    };
    write_tt(&args.out, &TtFile { grid: grid.clone(), field: field.clone() })?;
    clock.stage("write");

    let scale_list: Vec<String> = grid.scales.iter().map(|n| n.to_string()).collect();
    println!("layout={}", grid.layout.as_str());
    println!("scales={}", scale_list.join(","));
    print_stats(&field, &grid);
    if args.rmse_samples > 0 {
        let (rmse, max) = sampled_error(&field, &grid, reference, args.rmse_samples, args.seed)?;
        println!("rmse={rmse}");
        println!("max_err={max}");
        clock.stage("metrics");
    }
    Ok(())
}
