//! `qtti refine`: extend a train file by extra dyadic scales per dimension,
//! optionally taking derivatives along the way.

use std::path::PathBuf;

use clap::Args;

use qtti_core::{Error, Result};
use qtti_interp::grid::{GridDescriptor, Layout};
use qtti_interp::kernels::kernel_by_name;
use qtti_interp::{apply_tti_tucker, refine_1d, refine_interleaved, BoundaryMode};

use crate::commands::{
    coords_of, parse_usize_list, print_stats, sampled_error, tol_of, Runtime,
};
use crate::fixtures::Fixture;
use crate::io::{read_tt, write_tt, Stored, TtFile};

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Input train file.
    #[arg(short, long)]
    pub input: PathBuf,

    /// Interpolation kernel: linear, keys, bspline3, or cubic6.
    #[arg(long, default_value = "keys")]
    pub kernel: String,

    /// Scales to add per dimension.
    #[arg(long)]
    pub extra: usize,

    /// Derivative order per dimension, comma separated; a single value
    /// applies to every dimension. Derivatives are with respect to the
    /// physical coordinates of the grid's domain.
    #[arg(long, default_value = "0")]
    pub derivative: String,

    /// Boundary handling: auto, periodic, clamped, reflect, or zero. Auto
    /// follows the grid's periodicity (clamped when non-periodic).
    #[arg(long, default_value = "auto")]
    pub boundary: String,

    /// Relative rounding tolerance of the refined train.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    /// Output train file.
    #[arg(short, long)]
    pub out: PathBuf,

    /// Fixture to sample the refined field against.
    #[arg(long)]
    pub rmse_fixture: Option<String>,

    /// Factor applied to the reference fixture before comparing (e.g. a
    /// derivative's chain-rule constant).
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
}

fn resolve_boundary(choice: &str, grid: &GridDescriptor) -> Result<BoundaryMode> {
    if choice != "auto" {
        return BoundaryMode::parse(choice);
    }
    let all_periodic = grid.periodic.iter().all(|&p| p);
    let none_periodic = grid.periodic.iter().all(|&p| !p);
    if all_periodic {
        Ok(BoundaryMode::Periodic)
    } else if none_periodic {
        Ok(BoundaryMode::Clamped)
    } else {
        Err(Error::config(
            "axes disagree on periodicity; pick a boundary mode explicitly",
        ))
    }
}

pub fn run(args: &RefineArgs, runtime: bool) -> Result<()> {
    let mut clock = Runtime::new(runtime);
    let file = read_tt(&args.input)?;
    let grid = &file.grid;
    let d = grid.dims();
    let kernel = kernel_by_name(&args.kernel)?;
    let tol = tol_of(args.tol)?;

    let mut derivative = parse_usize_list(&args.derivative)?;
    if derivative.len() == 1 && d > 1 {
        derivative = vec![derivative[0]; d];
    }
    if derivative.len() != d {
        return Err(Error::config(format!(
            "--derivative needs one order (broadcast) or {d} comma-separated orders"
        )));
    }
    let boundary = resolve_boundary(&args.boundary, grid)?;
    clock.stage("load");

    let refined = match &file.field {
        Stored::Train(tt) => match grid.layout {
            Layout::Plain if d == 1 => {
                Stored::Train(refine_1d(tt, &kernel, args.extra, derivative[0], boundary, &tol)?)
            }
            Layout::Plain => {
                return Err(Error::config(
                    "multi-dimensional plain trains cannot be refined; encode with the \
                     interleaved or tucker layout",
                ))
            }
            Layout::Interleaved => Stored::Train(refine_interleaved(
                tt,
                d,
                &kernel,
                args.extra,
                &derivative,
                boundary,
                &tol,
            )?),
            Layout::Tucker => {
                return Err(Error::format(
                    "the file stores a plain train but its grid claims the tucker layout",
                ))
            }
        },
        Stored::Tucker(t) => {
            if boundary != BoundaryMode::Periodic {
                return Err(Error::config(
                    "tucker refinement supports the periodic boundary only",
                ));
            }
            Stored::Tucker(apply_tti_tucker(
                t,
                &kernel,
                &vec![args.extra; d],
                &derivative,
                &tol,
            )?)
        }
    };

    // The refinement operator differentiates in grid-normalized coordinates;
    // rescale so the output is the derivative in physical units.
    let phys_factor: f64 = (0..d)
        .map(|m| {
            let (a, b) = grid.domain[m];
            (b - a).powi(-(derivative[m] as i32))
        })
        .product();
    let refined = if phys_factor != 1.0 {
        match refined {
            Stored::Train(mut t) => {
                t.scale(phys_factor);
                Stored::Train(t)
            }
            Stored::Tucker(t) => {
                let mut core = t.core().clone();
                core.scale(phys_factor);
                Stored::Tucker(qtti_interp::TuckerTT::new(core, t.factors().to_vec())?)
            }
        }
    } else {
        refined
    };
    clock.stage("refine");

    let fine_grid = GridDescriptor::new(
        grid.scales.iter().map(|n| n + args.extra).collect(),
        grid.domain.clone(),
        grid.layout,
        grid.periodic.clone(),
    )?;
    write_tt(&args.out, &TtFile { grid: fine_grid.clone(), field: refined.clone() })?;
    clock.stage("write");

    println!("scales={}", fine_grid.scales.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    print_stats(&refined, &fine_grid);

    if let Some(name) = &args.rmse_fixture {
        let fixture = Fixture::parse(name, args.mask_width)?;
        if fixture.dims() != d {
            return Err(Error::config(format!(
                "fixture {name} is {}-dimensional but the field has {d} dimensions",
                fixture.dims()
            )));
        }
        let g = fine_grid.clone();
        let scale = args.rmse_scale;
        let (rmse, max) = sampled_error(
            &refined,
            &fine_grid,
            move |idx| scale * fixture.eval(&coords_of(&g, idx)),
            args.rmse_samples,
            args.seed,
        )?;
        println!("rmse={rmse}");
        println!("max_err={max}");
        clock.stage("metrics");
    }
    Ok(())
}
