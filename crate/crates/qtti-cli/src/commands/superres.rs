//! `qtti superres`: upscale a grayscale image on a dyadic grid by exact
//! train encoding plus clamped kernel refinement.

use std::path::PathBuf;

use clap::Args;
use ndarray::{ArrayD, IxDyn};

use qtti_core::{Error, Result, Tolerance};
use qtti_interp::grid::{encode_dense, GridDescriptor, Layout};
use qtti_interp::kernels::kernel_by_name;
use qtti_interp::{refine_interleaved, BoundaryMode};

use crate::commands::{tol_of, Runtime};
use crate::io::{densify, read_pgm, write_dense, write_pgm, Image, Stored, TtFile};

#[derive(Debug, Args)]
pub struct SuperresArgs {
    /// Input binary PGM image.
    #[arg(short, long)]
    pub input: PathBuf,

    /// Scales of the output grid: the result has 2^target per axis.
    #[arg(long)]
    pub target_scales: usize,

    /// Interpolation kernel used for the refinement.
    #[arg(long, default_value = "keys")]
    pub kernel: String,

    /// Relative rounding tolerance of the refinement (the initial encoding
    /// is always exact).
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    /// Output PGM image.
    #[arg(short, long)]
    pub out: PathBuf,

    /// Also write the raw refined field (before quantization).
    #[arg(long)]
    pub dense_out: Option<PathBuf>,

    /// Edge-replicate the input up to the next power-of-two square instead
    /// of rejecting non-dyadic sizes; the output is cropped back.
    #[arg(long)]
    pub pad: bool,

    /// Reference PGM of the output size; reports the relative l2 deviation
    /// in percent.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

pub fn run(args: &SuperresArgs, runtime: bool) -> Result<()> {
    let mut clock = Runtime::new(runtime);
    let image = read_pgm(&args.input)?;
    let (w, h) = (image.width, image.height);

    let square_pow2 = w == h && w.is_power_of_two() && w > 1;
    let (side, padded) = if square_pow2 {
        (w, false)
    } else if args.pad {
        let side = w.max(h).max(2).next_power_of_two();
        (side, true)
    } else {
        return Err(Error::config(format!(
            "input is {w}x{h}, not a power-of-two square; pass --pad to edge-replicate"
        )));
    };
    let n0 = side.trailing_zeros() as usize;
    let m = args.target_scales.checked_sub(n0).ok_or_else(|| {
        Error::config(format!(
            "--target-scales {} is below the input's {n0} scales",
            args.target_scales
        ))
    })?;

    let mut canvas = ArrayD::zeros(IxDyn(&[side, side]));
    for y in 0..side {
        for x in 0..side {
            canvas[IxDyn(&[y, x])] = image.pixels[y.min(h - 1) * w + x.min(w - 1)];
        }
    }
    clock.stage("load");

    let grid = GridDescriptor::cube(2, n0, (0.0, 1.0), Layout::Interleaved, false);
    let coarse = encode_dense(canvas.view(), &grid, &Tolerance::exact())?.expect_train();
    clock.stage("encode");

    let kernel = kernel_by_name(&args.kernel)?;
    let tol = tol_of(args.tol)?;
    let fine = if m == 0 {
        coarse
    } else {
        refine_interleaved(&coarse, 2, &kernel, m, &[0, 0], BoundaryMode::Clamped, &tol)?
    };
    clock.stage("refine");

    let fine_grid = GridDescriptor::cube(2, n0 + m, (0.0, 1.0), Layout::Interleaved, false);
    let file = TtFile { grid: fine_grid.clone(), field: Stored::Train(fine.clone()) };
    let full = densify(&file)?;
    // Padding extends down and right, so the real content is the top-left block.
    let (out_h, out_w) = (h << m, w << m);
    let mut raw = Vec::with_capacity(out_h * out_w);
    for y in 0..out_h {
        for x in 0..out_w {
            raw.push(full[IxDyn(&[y, x])]);
        }
    }
    clock.stage("densify");

    write_pgm(
        &args.out,
        &Image { width: out_w, height: out_h, maxval: image.maxval, pixels: raw.clone() },
    )?;
    if let Some(path) = &args.dense_out {
        let arr = ArrayD::from_shape_vec(IxDyn(&[out_h, out_w]), raw.clone())
            .expect("crop buffer matches its shape");
        write_dense(path, &arr)?;
    }
    clock.stage("write");

    println!("input_size={w}x{h}");
    println!("output_size={out_w}x{out_h}");
    if padded {
        println!("padded_to={side}x{side}");
    }
    println!("max_rank={}", fine.max_rank());
    println!("parameter_count={}", fine.param_count());
    // Ratio against the (possibly padded) grid the train actually spans.
    let points = ((side << m) as f64) * ((side << m) as f64);
    println!("compression_ratio={}", fine.param_count() as f64 / points);

    if let Some(path) = &args.reference {
        let reference = read_pgm(path)?;
        if reference.width != out_w || reference.height != out_h {
            return Err(Error::config(format!(
                "reference is {}x{}, output is {out_w}x{out_h}",
                reference.width, reference.height
            )));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in raw.iter().zip(&reference.pixels) {
            num += (a - b) * (a - b);
            den += b * b;
        }
        let rel = if den > 0.0 { (num / den).sqrt() * 100.0 } else { f64::NAN };
        println!("rel_l2_percent={rel}");
        clock.stage("metrics");
    }
    Ok(())
}
