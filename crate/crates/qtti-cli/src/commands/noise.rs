//! `qtti noise`: compressed procedural noise fields, single draws or
//! deterministic ensembles.

use std::path::PathBuf;

use clap::Args;

use qtti_core::{parallel, Error, Result, TensorTrain, Tolerance};
use qtti_interp::grid::{GridDescriptor, Layout};
use qtti_interp::kernels::Fade;
use qtti_synth::{
    fractal_tt, midpoint_displacement_tt, perlin_tt, random_qtt, rank_stats, value_noise_tt,
    NoiseSpec,
};

use crate::commands::{print_stats, tol_of, Runtime};
use crate::io::{densify, write_dense, write_tt, Stored, TtFile};

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Generator: random, midpoint, value, perlin, or fractal.
    #[arg(long)]
    pub algo: String,

    /// Generator parameters as `key=value` pairs separated by commas or
    /// newlines, or `@path` to read them from a file. Individual flags
    /// below override entries given here.
    #[arg(long)]
    pub spec: Option<String>,

    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub scales: Option<usize>,
    #[arg(long)]
    pub base_scales: Option<usize>,
    #[arg(long)]
    pub octaves: Option<usize>,
    #[arg(long)]
    pub persistence: Option<f64>,
    #[arg(long)]
    pub roughness: Option<f64>,
    #[arg(long)]
    pub decay: Option<f64>,
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub fade: Option<String>,
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub unit_gradients: bool,

    /// Relative rounding tolerance of the generated trains.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    /// Output train file (single draw).
    #[arg(short, long, conflicts_with_all = ["seeds", "out_dir"])]
    pub out: Option<PathBuf>,

    /// Ensemble size: consecutive seeds starting at the base seed, written
    /// into --out-dir as seed<i>.tt plus an aggregate.csv.
    #[arg(long, requires = "out_dir")]
    pub seeds: Option<usize>,

    /// Ensemble output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Also write the dense field (single draw, capacity permitting).
    #[arg(long)]
    pub dense_out: Option<PathBuf>,
}

fn build_spec(args: &NoiseArgs) -> Result<NoiseSpec> {
    let mut spec = match &args.spec {
        None => NoiseSpec::default(),
        Some(text) => {
            let body = if let Some(path) = text.strip_prefix('@') {
                std::fs::read_to_string(path)?
            } else {
                text.clone()
            };
            NoiseSpec::parse(&body)?
        }
    };
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = args.scales {
        spec.scales = v;
    }
    if let Some(v) = args.base_scales {
        spec.base_scales = v;
    }
    if let Some(v) = args.octaves {
        spec.octaves = v;
    }
    if let Some(v) = args.persistence {
        spec.persistence = v;
    }
    if let Some(v) = args.roughness {
        spec.roughness = v;
    }
    if let Some(v) = args.decay {
        spec.decay = v;
    }
    if let Some(v) = &args.kernel {
        spec.kernel = v.clone();
    }
    if let Some(v) = &args.fade {
        spec.fade = match v.as_str() {
            "cubic" | "f3" => Fade::Cubic,
            "quintic" | "f5" => Fade::Quintic,
            other => return Err(Error::config(format!("unknown fade {other:?}"))),
        };
    }
    if let Some(v) = args.dims {
        spec.dims = v;
    }
    if let Some(v) = args.rank {
        spec.rank = v;
    }
    if args.unit_gradients {
        spec.unit_gradients = true;
    }
    spec.validate()?;
    Ok(spec)
}

fn generate(algo: &str, spec: &NoiseSpec, tol: &Tolerance) -> Result<TensorTrain> {
    match algo {
        "random" => random_qtt(spec.dims * spec.scales, spec.rank, spec.seed),
        "midpoint" => midpoint_displacement_tt(spec, tol),
        "value" => value_noise_tt(spec, tol),
        "perlin" => perlin_tt(spec, tol),
        "fractal" => {
            let base = value_noise_tt(spec, tol)?;
            fractal_tt(&base, spec, tol)
        }
        other => Err(Error::config(format!(
            "unknown generator '{other}' (expected random, midpoint, value, perlin, or fractal)"
        ))),
    }
}

fn noise_grid(spec: &NoiseSpec) -> GridDescriptor {
    let layout = if spec.dims == 1 { Layout::Plain } else { Layout::Interleaved };
    GridDescriptor::cube(spec.dims, spec.scales, (0.0, 1.0), layout, true)
}

pub fn run(args: &NoiseArgs, runtime: bool) -> Result<()> {
    let mut clock = Runtime::new(runtime);
    let spec = build_spec(args)?;
    let tol = tol_of(args.tol)?;
    let grid = noise_grid(&spec);

    if let Some(count) = args.seeds {
        if count == 0 {
            return Err(Error::config("the ensemble needs at least one seed"));
        }
        let dir = args.out_dir.as_ref().expect("clap enforces --out-dir with --seeds");
        std::fs::create_dir_all(dir)?;
        let base = spec.seed;
        let draws: Vec<Result<TensorTrain>> = parallel::map_indexed(count, |i| {
            let mut s = spec.clone();
            s.seed = base + i as u64;
            generate(&args.algo, &s, &tol)
        });
        clock.stage("generate");
        let mut rows = Vec::with_capacity(count);
        for (i, draw) in draws.into_iter().enumerate() {
            let seed = base + i as u64;
            let tt = draw?;
            let stats = rank_stats(&tt);
            write_tt(
                &dir.join(format!("seed{seed}.tt")),
                &TtFile { grid: grid.clone(), field: Stored::Train(tt) },
            )?;
            rows.push(format!(
                "{seed},{},{},{}",
                stats.max_rank, stats.parameter_count, stats.compression_ratio
            ));
        }
        // Per-seed files land before the aggregate so partial runs are obvious.
        let csv = format!(
            "seed,max_rank,parameter_count,compression_ratio\n{}\n",
            rows.join("\n")
        );
        let aggregate = dir.join("aggregate.csv");
        std::fs::write(&aggregate, csv)?;
        clock.stage("write");
        println!("seeds={count}");
        println!("aggregate={}", aggregate.display());
        return Ok(());
    }

    let out = args
        .out
        .as_ref()
        .ok_or_else(|| Error::config("pass -o for a single draw or --seeds with --out-dir"))?;
    let tt = generate(&args.algo, &spec, &tol)?;
    clock.stage("generate");
    let field = Stored::Train(tt);
    let file = TtFile { grid: grid.clone(), field };
    write_tt(out, &file)?;
    if let Some(path) = &args.dense_out {
        file.grid.total_points()?;
        write_dense(path, &densify(&file)?)?;
    }
    clock.stage("write");
    println!("algo={}", args.algo);
    println!("seed={}", spec.seed);
    print_stats(&file.field, &grid);
    Ok(())
}
