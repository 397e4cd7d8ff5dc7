//! Stochastic grid functions assembled directly in tensor-train form.
//!
//! Each generator builds its field scale by scale in compressed form, yet
//! agrees point-for-point with a classical dense construction replaying the
//! same draws. Draw streams are named (see [`crate::stream`]) so a dense
//! reference can consume identical numbers:
//!
//! - `random-qtt/cores`, `random-qtt/calibrate` inside [`random_qtt`]
//! - `midpoint/level{l}` per displacement level
//! - `value/lattice` for the value-noise lattice
//! - `perlin/grad{c}` per gradient component

use ndarray::{s, Array3, ArrayD, IxDyn};
use rand::Rng;
use rand_distr::StandardNormal;

use qtti_core::tt::DENSE_CAPACITY;
use qtti_core::{Error, Result, TensorTrain, Tolerance};
use qtti_interp::grid::{encode_dense, GridDescriptor, Layout};
use qtti_interp::kernels::{fade, kernel_by_name, linear_kernel, Fade, StencilSet};
use qtti_interp::poly::Polynomial;
use qtti_interp::tti::{
    apply_tti, build_tti_from_stencils, interleaved_legs, refine_1d, refine_dim,
    refine_interleaved, LegOrder,
};
use qtti_interp::BoundaryMode;

use crate::stream::{derive_seed, labeled};

/// Parameters shared by the noise generators. Each generator reads the
/// subset it needs and validates its own preconditions on top of the common
/// invariants checked by [`NoiseSpec::validate`].
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    /// Base seed; every draw stream is derived from it.
    pub seed: u64,
    /// Fine scales per dimension: the output grid has `2^scales` points per axis.
    pub scales: usize,
    /// Coarse lattice scales per dimension for the lattice-based generators.
    pub base_scales: usize,
    /// Number of self-similar octaves summed by [`fractal_tt`].
    pub octaves: usize,
    /// Per-octave amplitude factor, in (0, 1).
    pub persistence: f64,
    /// Overall amplitude of the midpoint-displacement perturbations.
    pub roughness: f64,
    /// Per-level amplitude factor of midpoint displacement, in (0, 1).
    pub decay: f64,
    /// Interpolation kernel name for value noise.
    pub kernel: String,
    /// Blend ramp for gradient noise.
    pub fade: Fade,
    /// Spatial dimension.
    pub dims: usize,
    /// Bond-rank cap of the random lattice trains.
    pub rank: usize,
    /// Normalize gradient vectors to the unit sphere before encoding.
    pub unit_gradients: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            seed: 0,
            scales: 8,
            base_scales: 3,
            octaves: 1,
            persistence: 0.5,
            roughness: 1.0,
            decay: 0.5,
            kernel: "keys".into(),
            fade: Fade::Quintic,
            dims: 1,
            rank: 4,
            unit_gradients: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("invalid value {value:?} for {key}")))
}

impl NoiseSpec {
    /// Parse `key=value` pairs separated by newlines, commas, or semicolons.
    /// Unknown keys are rejected; omitted keys keep their defaults.
    pub fn parse(text: &str) -> Result<NoiseSpec> {
        let mut spec = NoiseSpec::default();
        for raw in text.split(|c: char| c == ',' || c == '\n' || c == ';') {
            let pair = raw.trim();
            if pair.is_empty() || pair.starts_with('#') {
                continue;
            }
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::config(format!("expected key=value, got {pair:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "seed" => spec.seed = parse_num(key, value)?,
                "scales" => spec.scales = parse_num(key, value)?,
                "base_scales" => spec.base_scales = parse_num(key, value)?,
                "octaves" => spec.octaves = parse_num(key, value)?,
                "persistence" => spec.persistence = parse_num(key, value)?,
                "roughness" => spec.roughness = parse_num(key, value)?,
                "decay" => spec.decay = parse_num(key, value)?,
                "kernel" => spec.kernel = value.to_string(),
                "fade" => {
                    spec.fade = match value {
                        "cubic" | "f3" => Fade::Cubic,
                        "quintic" | "f5" => Fade::Quintic,
                        _ => return Err(Error::config(format!("unknown fade {value:?}"))),
                    }
                }
                "dims" => spec.dims = parse_num(key, value)?,
                "rank" => spec.rank = parse_num(key, value)?,
                "unit_gradients" => {
                    spec.unit_gradients = value.parse().map_err(|_| {
                        Error::config(format!("unit_gradients must be true/false, got {value:?}"))
                    })?
                }
                _ => return Err(Error::config(format!("unknown noise key {key:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Invariants: 1 ≤ base_scales, 1 ≤ octaves ≤ scales − base_scales,
    /// persistence and decay in (0,1), roughness ≥ 0, dims ≥ 1, rank ≥ 1.
    pub fn validate(&self) -> Result<()> {
        if self.scales == 0 {
            return Err(Error::config("scales must be at least 1"));
        }
        if self.base_scales == 0 {
            return Err(Error::config("base_scales must be at least 1"));
        }
        if self.octaves == 0 || self.base_scales + self.octaves > self.scales {
            return Err(Error::config(
                "octaves must satisfy 1 <= octaves <= scales - base_scales",
            ));
        }
        if !(self.persistence > 0.0 && self.persistence < 1.0) {
            return Err(Error::config("persistence must lie in (0, 1)"));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::config("decay must lie in (0, 1)"));
        }
        if !self.roughness.is_finite() || self.roughness < 0.0 {
            return Err(Error::config("roughness must be finite and non-negative"));
        }
        if self.dims == 0 {
            return Err(Error::config("dims must be at least 1"));
        }
        if self.rank == 0 {
            return Err(Error::config("rank must be at least 1"));
        }
        Ok(())
    }
}

/// Core filled with independent standard-normal entries in row-major order.
pub(crate) fn normal_core(rng: &mut impl Rng, shape: (usize, usize, usize)) -> Array3<f64> {
    let mut core = Array3::zeros(shape);
    for a in 0..shape.0 {
        for i in 0..shape.1 {
            for b in 0..shape.2 {
                core[(a, i, b)] = rng.sample(StandardNormal);
            }
        }
    }
    core
}

/// Random tensor train over `scales` binary legs with bond ranks capped at
/// `rank`, calibrated so the represented field has unit empirical variance
/// (sampled estimate over 4096 points). Deterministic per seed.
pub fn random_qtt(scales: usize, rank: usize, seed: u64) -> Result<TensorTrain> {
    if scales == 0 {
        return Err(Error::config("random_qtt needs at least one scale"));
    }
    if rank == 0 {
        return Err(Error::config("random_qtt needs rank at least 1"));
    }
    let bond = |k: usize| -> usize {
        let left = 1usize.checked_shl(k.min(60) as u32).unwrap_or(usize::MAX);
        let right = 1usize.checked_shl((scales - k).min(60) as u32).unwrap_or(usize::MAX);
        rank.min(left).min(right)
    };
    let mut rng = labeled(seed, "random-qtt/cores");
    let mut cores = Vec::with_capacity(scales);
    for k in 0..scales {
        cores.push(normal_core(&mut rng, (bond(k), 2, bond(k + 1))));
    }
    let mut train = TensorTrain::new(cores)?;
    let mut cal = labeled(seed, "random-qtt/calibrate");
    let samples = 4096usize;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut idx = vec![0usize; scales];
    for _ in 0..samples {
        for b in idx.iter_mut() {
            *b = (cal.gen::<u64>() & 1) as usize;
        }
        let v = train.eval(&idx);
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sum2 / samples as f64 - mean * mean).max(0.0);
    if var > 0.0 {
        train.scale(1.0 / var.sqrt());
    }
    Ok(train)
}

/// Zero the even-site slice of the last core, leaving a field supported on
/// odd fine-grid sites only.
fn mask_odd_sites(train: TensorTrain) -> TensorTrain {
    let mut cores = train.into_cores();
    let last = cores.last_mut().expect("train has at least one core");
    last.slice_mut(s![.., 0, ..]).fill(0.0);
    TensorTrain::new(cores).expect("masking preserves core shapes")
}

/// Midpoint-displacement profile on the dyadic ring of `2^scales` points.
///
/// Level l contributes a level-l random train masked to odd sites, linearly
/// interpolated up to the fine grid, and scaled by `roughness * decay^l`;
/// the output is the rounded superposition of all levels. Equivalent to the
/// classical even-copy / odd-neighbor-average subdivision recursion fed the
/// same per-level perturbations, because linear refinement composes exactly
/// across stages. Uses `scales`, `roughness`, `decay`, `rank`.
pub fn midpoint_displacement_tt(spec: &NoiseSpec, tol: &Tolerance) -> Result<TensorTrain> {
    spec.validate()?;
    if spec.dims != 1 {
        return Err(Error::config("midpoint displacement is one-dimensional"));
    }
    if spec.scales < 2 {
        return Err(Error::config("midpoint displacement needs at least 2 scales"));
    }
    let hat = linear_kernel();
    let mut acc: Option<TensorTrain> = None;
    for level in 1..=spec.scales {
        let seed = derive_seed(spec.seed, &format!("midpoint/level{level}"));
        let noise = mask_odd_sites(random_qtt(level, spec.rank, seed)?);
        let mut term = if level < spec.scales {
            refine_1d(&noise, &hat, spec.scales - level, 0, BoundaryMode::Periodic, tol)?
        } else {
            noise
        };
        term.scale(spec.roughness * spec.decay.powi(level as i32));
        acc = Some(match acc {
            None => term,
            Some(prev) => {
                let mut s = prev.add(&term)?;
                s.round(tol);
                s
            }
        });
    }
    Ok(acc.expect("at least one level"))
}

/// Value noise: random lattice values at `base_scales` scales per axis,
/// refined to `scales` with the chosen 4-point cubic kernel (periodic).
/// Uses `scales`, `base_scales`, `kernel`, `dims`, `rank`.
pub fn value_noise_tt(spec: &NoiseSpec, tol: &Tolerance) -> Result<TensorTrain> {
    spec.validate()?;
    let kernel = kernel_by_name(&spec.kernel)?;
    if kernel.support_points() != 4 {
        return Err(Error::config(format!(
            "value noise expects a 4-point cubic kernel, {} spans {} points",
            kernel.name(),
            kernel.support_points()
        )));
    }
    let lattice = random_qtt(
        spec.dims * spec.base_scales,
        spec.rank,
        derive_seed(spec.seed, "value/lattice"),
    )?;
    let m = spec.scales - spec.base_scales;
    if spec.dims == 1 {
        refine_1d(&lattice, &kernel, m, 0, BoundaryMode::Periodic, tol)
    } else {
        refine_interleaved(
            &lattice,
            spec.dims,
            &kernel,
            m,
            &vec![0; spec.dims],
            BoundaryMode::Periodic,
            tol,
        )
    }
}

/// Per-cell stencils of gradient noise over the unit cell t in [0,1):
/// the gradient axis uses (t(1-f), (t-1)f) so corner gradients are dotted
/// with the offset to the query point, the remaining axes blend with
/// (1-f, f). Both vanish nowhere except the gradient pair at t=0, which
/// pins the field to exactly zero on lattice points.
fn perlin_stencils(kind: Fade) -> (StencilSet, StencilSet) {
    let f = fade(kind);
    let t = Polynomial::identity();
    let one = Polynomial::constant(1.0);
    let w0 = one.sub(&f);
    let grad = StencilSet::from_parts(vec![0, 1], vec![t.mul(&w0), t.sub(&one).mul(&f)], 0);
    let blend = StencilSet::from_parts(vec![0, 1], vec![w0, f], 0);
    (grad, blend)
}

/// Dense gradient tables on the coarse lattice, exactly the draws consumed
/// by [`perlin_tt`]; exposed so dense reference implementations can share
/// them. One table per component, each shaped `[2^base_scales; dims]`.
pub fn perlin_gradient_tables(spec: &NoiseSpec) -> Result<Vec<ArrayD<f64>>> {
    spec.validate()?;
    let d = spec.dims;
    if d != 1 && d != 3 {
        return Err(Error::config("gradient noise supports dims = 1 or dims = 3"));
    }
    let side = 1usize << spec.base_scales;
    let total = (0..d)
        .try_fold(1usize, |acc, _| {
            acc.checked_mul(side).filter(|&t| t <= DENSE_CAPACITY)
        })
        .ok_or_else(|| Error::capacity("gradient lattice exceeds the dense capacity"))?;
    let shape = vec![side; d];
    let mut tables = Vec::with_capacity(d);
    for c in 0..d {
        let mut rng = labeled(spec.seed, &format!("perlin/grad{c}"));
        let values: Vec<f64> = (0..total).map(|_| rng.sample(StandardNormal)).collect();
        tables.push(ArrayD::from_shape_vec(IxDyn(&shape), values).expect("shape matches draw count"));
    }
    if spec.unit_gradients {
        for site in 0..total {
            let norm: f64 = tables
                .iter()
                .map(|t| {
                    let v = t.as_slice().expect("standard layout")[site];
                    v * v
                })
                .sum::<f64>()
                .sqrt();
            if norm > 0.0 {
                for t in tables.iter_mut() {
                    t.as_slice_mut().expect("standard layout")[site] /= norm;
                }
            }
        }
    }
    Ok(tables)
}

/// Gradient (Perlin) noise in 1 or 3 dimensions on the periodic unit cube.
///
/// Gradients live on the `2^base_scales` lattice; each component's table is
/// refined to `scales` with the gradient stencil on its own axis and the
/// blend stencil on the others, and the component fields are summed. Uses
/// `scales`, `base_scales`, `fade`, `dims`, `unit_gradients`.
pub fn perlin_tt(spec: &NoiseSpec, tol: &Tolerance) -> Result<TensorTrain> {
    spec.validate()?;
    let d = spec.dims;
    if d != 1 && d != 3 {
        return Err(Error::config("gradient noise supports dims = 1 or dims = 3"));
    }
    let n0 = spec.base_scales;
    let m = spec.scales - n0;
    let (grad_st, blend_st) = perlin_stencils(spec.fade);
    let tables = perlin_gradient_tables(spec)?;
    let layout = if d == 1 { Layout::Plain } else { Layout::Interleaved };
    let grid = GridDescriptor::cube(d, n0, (0.0, 1.0), layout, true);
    let encode = |table: &ArrayD<f64>| -> Result<TensorTrain> {
        Ok(encode_dense(table.view(), &grid, &Tolerance::exact())?.expect_train())
    };
    if d == 1 {
        let g = encode(&tables[0])?;
        let op = build_tti_from_stencils(&grad_st, "gradient-cell", n0, m, BoundaryMode::Periodic)?;
        return apply_tti(&op, &g, tol);
    }
    let mut acc: Option<TensorTrain> = None;
    for mu in 0..d {
        let mut train = encode(&tables[mu])?;
        let mut legs = interleaved_legs(d, n0);
        for axis in 0..d {
            let st = if axis == mu { &grad_st } else { &blend_st };
            let op =
                build_tti_from_stencils(st, "gradient-cell", n0, m, BoundaryMode::Periodic)?;
            let (next, next_legs) = refine_dim(&train, &legs, &op, axis, LegOrder::ScaleMajor, tol)?;
            train = next;
            legs = next_legs;
        }
        acc = Some(match acc {
            None => train,
            Some(prev) => {
                let mut s = prev.add(&train)?;
                s.round(tol);
                s
            }
        });
    }
    Ok(acc.expect("three components"))
}

/// Contract the last `cut_count` cores at physical index 0 and prepend as
/// many all-ones rank-1 cores: the result evaluates the base field at
/// 2^k-fold frequency under periodic tiling when `cut_count = k * dims`.
fn octave_shift(base: &TensorTrain, cut_count: usize) -> Result<TensorTrain> {
    let len = base.len();
    if cut_count == 0 || cut_count >= len {
        return Err(Error::config("octave shift must keep at least one core"));
    }
    let cut = len - cut_count;
    let cores = base.cores();
    let mut w: Vec<f64> = vec![1.0];
    for core in cores[cut..].iter().rev() {
        let (r0, _, r1) = core.dim();
        let mut next = vec![0.0; r0];
        for (a, slot) in next.iter_mut().enumerate() {
            *slot = (0..r1).map(|b| core[(a, 0, b)] * w[b]).sum();
        }
        w = next;
    }
    let tail = &cores[cut - 1];
    let (r0, p, r1) = tail.dim();
    let mut absorbed = Array3::zeros((r0, p, 1));
    for a in 0..r0 {
        for i in 0..p {
            absorbed[(a, i, 0)] = (0..r1).map(|b| tail[(a, i, b)] * w[b]).sum();
        }
    }
    let ones = Array3::from_elem((1, 2, 1), 1.0);
    let mut new_cores = Vec::with_capacity(len);
    for _ in 0..cut_count {
        new_cores.push(ones.clone());
    }
    new_cores.extend(cores[..cut - 1].iter().cloned());
    new_cores.push(absorbed);
    TensorTrain::new(new_cores)
}

/// Octave superposition f = Σ_{k<octaves} persistence^k · base(2^k x) with
/// periodic tiling, built without leaving TT form: octave k drops the last
/// `k * dims` cores at index 0 and prepends as many all-ones cores. Uses
/// `octaves`, `persistence`, `dims` from the spec; the base train must hold
/// `dims` interleaved (or 1-D plain) binary dimensions.
pub fn fractal_tt(base: &TensorTrain, spec: &NoiseSpec, tol: &Tolerance) -> Result<TensorTrain> {
    spec.validate()?;
    let d = spec.dims;
    if base.len() % d != 0 {
        return Err(Error::config("core count is not a multiple of the dimension count"));
    }
    if base.dims().iter().any(|&n| n != 2) {
        return Err(Error::config("fractal octaves need binary cores"));
    }
    let scales = base.len() / d;
    if spec.octaves > scales {
        return Err(Error::config("more octaves than scales in the base train"));
    }
    let mut acc = base.clone();
    for k in 1..spec.octaves {
        let mut oct = octave_shift(base, k * d)?;
        oct.scale(spec.persistence.powi(k as i32));
        acc = acc.add(&oct)?;
        acc.round(tol);
    }
    Ok(acc)
}
