//! Dense reference implementations of the noise generators.
//!
//! Every test replays the generator's random draws through the shared,
//! labeled streams, runs an independently written dense version of the
//! construction (ring subdivision, periodic convolution, per-cell gradient
//! blending, octave superposition), and compares the full fine grid.

use qtti_core::{TensorTrain, Tolerance};
use qtti_interp::grid::{deinterleave, GridDescriptor, Layout};
use qtti_interp::kernels::{kernel_by_name, Fade, Kernel};
use qtti_synth::{
    derive_seed, fractal_tt, midpoint_displacement_tt, perlin_gradient_tables, perlin_tt,
    random_qtt, value_noise_tt, NoiseSpec,
};

fn flat(tt: &TensorTrain) -> Vec<f64> {
    tt.to_dense()
        .expect("train fits in dense memory")
        .iter()
        .copied()
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "grids must match");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Dense periodic refinement by `extra` scales: fine point j sits at offset
/// t = frac(j / 2^extra) inside coarse cell a = j >> extra, and collects
/// kernel weights K(t - k) over the kernel's stencil offsets.
fn dense_refine_periodic(coarse: &[f64], kernel: &Kernel, extra: usize) -> Vec<f64> {
    let n = coarse.len();
    let step = 1usize << extra;
    (0..n * step)
        .map(|j| {
            let a = (j / step) as isize;
            let t = (j % step) as f64 / step as f64;
            kernel
                .offsets()
                .into_iter()
                .map(|k| {
                    let idx = (a + k).rem_euclid(n as isize) as usize;
                    kernel.eval(t - k as f64) * coarse[idx]
                })
                .sum()
        })
        .collect()
}

/// Classical midpoint displacement on a periodic ring: copy even sites,
/// average the two neighbours at odd sites and add the level perturbation,
/// feeding each level the same calibrated random train the generator draws.
fn dense_midpoint(spec: &NoiseSpec) -> Vec<f64> {
    let mut h = vec![0.0f64];
    for level in 1..=spec.scales {
        let seed = derive_seed(spec.seed, &format!("midpoint/level{level}"));
        let draws = flat(&random_qtt(level, spec.rank, seed).expect("valid draw"));
        let amp = spec.roughness * spec.decay.powi(level as i32);
        let n = h.len();
        let mut next = vec![0.0; 2 * n];
        for j in 0..n {
            next[2 * j] = h[j];
            next[2 * j + 1] = 0.5 * (h[j] + h[(j + 1) % n]) + amp * draws[2 * j + 1];
        }
        h = next;
    }
    h
}

#[test]
fn midpoint_matches_the_dense_ring_recursion() {
    for (scales, seed) in [(4usize, 11u64), (8, 3)] {
        let spec = NoiseSpec {
            seed,
            scales,
            roughness: 1.25,
            decay: 0.5,
            base_scales: 1,
            ..NoiseSpec::default()
        };
        let tt = midpoint_displacement_tt(&spec, &Tolerance::relative(1e-13))
            .expect("midpoint profile");
        let got = flat(&tt);
        let want = dense_midpoint(&spec);
        let err = max_abs_diff(&got, &want);
        assert!(
            err <= 1e-10,
            "scales {scales}: ring recursion disagrees by {err:.3e}"
        );
    }
}

#[test]
fn value_noise_matches_the_dense_convolution() {
    for (kernel_name, scales, seed) in [("keys", 7usize, 5u64), ("bspline3", 8, 9)] {
        let spec = NoiseSpec {
            seed,
            scales,
            base_scales: 3,
            kernel: kernel_name.into(),
            ..NoiseSpec::default()
        };
        let tt = value_noise_tt(&spec, &Tolerance::relative(1e-13)).expect("value noise");
        let got = flat(&tt);

        let lattice = flat(
            &random_qtt(spec.base_scales, spec.rank, derive_seed(seed, "value/lattice"))
                .expect("lattice draw"),
        );
        let kernel = kernel_by_name(kernel_name).expect("shipped kernel");
        let want = dense_refine_periodic(&lattice, &kernel, scales - spec.base_scales);
        let err = max_abs_diff(&got, &want);
        assert!(
            err <= 1e-10,
            "{kernel_name} at {scales} scales: dense convolution disagrees by {err:.3e}"
        );
    }
}

fn fade_fn(kind: Fade) -> fn(f64) -> f64 {
    match kind {
        Fade::Cubic => |t| t * t * (3.0 - 2.0 * t),
        Fade::Quintic => |t| t * t * t * (10.0 + t * (-15.0 + 6.0 * t)),
    }
}

#[test]
fn gradient_noise_1d_matches_the_cell_formula() {
    for fade in [Fade::Cubic, Fade::Quintic] {
        let spec = NoiseSpec {
            seed: 21,
            scales: 8,
            base_scales: 3,
            fade,
            dims: 1,
            ..NoiseSpec::default()
        };
        let tt = perlin_tt(&spec, &Tolerance::relative(1e-13)).expect("gradient noise");
        let got = flat(&tt);

        let table = &perlin_gradient_tables(&spec).expect("tables")[0];
        let g: Vec<f64> = table.iter().copied().collect();
        let lattice = g.len();
        let step = 1usize << (spec.scales - spec.base_scales);
        let f = fade_fn(fade);
        let want: Vec<f64> = (0..lattice * step)
            .map(|j| {
                let a = j / step;
                let t = (j % step) as f64 / step as f64;
                let s = f(t);
                (1.0 - s) * t * g[a] + s * (t - 1.0) * g[(a + 1) % lattice]
            })
            .collect();
        let err = max_abs_diff(&got, &want);
        assert!(
            err <= 1e-10,
            "{fade:?}: 1d gradient noise disagrees by {err:.3e}"
        );
    }
}

#[test]
fn gradient_noise_3d_matches_the_corner_dot_formula() {
    let spec = NoiseSpec {
        seed: 4,
        scales: 4,
        base_scales: 2,
        dims: 3,
        fade: Fade::Quintic,
        ..NoiseSpec::default()
    };
    let tt = perlin_tt(&spec, &Tolerance::relative(1e-13)).expect("gradient noise");
    let grid = GridDescriptor::cube(3, spec.scales, (0.0, 1.0), Layout::Interleaved, true);
    let got = deinterleave(&tt, &grid).expect("dense cube");

    let tables = perlin_gradient_tables(&spec).expect("tables");
    let lattice = 1usize << spec.base_scales;
    let side = 1usize << spec.scales;
    let step = side / lattice;
    let f = fade_fn(spec.fade);

    let mut worst = 0.0f64;
    for jx in 0..side {
        for jy in 0..side {
            for jz in 0..side {
                let j = [jx, jy, jz];
                let cell: Vec<usize> = j.iter().map(|&v| v / step).collect();
                let t: Vec<f64> = j.iter().map(|&v| (v % step) as f64 / step as f64).collect();
                let s: Vec<f64> = t.iter().map(|&u| f(u)).collect();
                let mut value = 0.0;
                for corner in 0..8usize {
                    let c: Vec<usize> = (0..3).map(|ax| (corner >> ax) & 1).collect();
                    let site: Vec<usize> =
                        (0..3).map(|ax| (cell[ax] + c[ax]) % lattice).collect();
                    let blend: f64 = (0..3)
                        .map(|ax| if c[ax] == 0 { 1.0 - s[ax] } else { s[ax] })
                        .product();
                    let dot: f64 = (0..3)
                        .map(|ax| {
                            tables[ax][site.as_slice()] * (t[ax] - c[ax] as f64)
                        })
                        .sum();
                    value += blend * dot;
                }
                worst = worst.max((got[[jx, jy, jz]] - value).abs());
            }
        }
    }
    assert!(
        worst <= 1e-10,
        "3d gradient noise disagrees with the corner formula by {worst:.3e}"
    );
}

#[test]
fn fractal_octaves_match_direct_superposition() {
    let spec = NoiseSpec {
        seed: 17,
        scales: 6,
        base_scales: 2,
        octaves: 3,
        persistence: 0.5,
        kernel: "keys".into(),
        ..NoiseSpec::default()
    };
    let base = value_noise_tt(&spec, &Tolerance::relative(1e-13)).expect("base noise");
    let tt = fractal_tt(&base, &spec, &Tolerance::relative(1e-13)).expect("fractal sum");
    let got = flat(&tt);

    let base_dense = flat(&base);
    let n = base_dense.len();
    let want: Vec<f64> = (0..n)
        .map(|j| {
            (0..spec.octaves)
                .map(|k| spec.persistence.powi(k as i32) * base_dense[(j << k) % n])
                .sum()
        })
        .collect();
    let err = max_abs_diff(&got, &want);
    assert!(
        err <= 1e-10,
        "octave superposition disagrees by {err:.3e}"
    );
}

#[test]
fn generators_are_bit_identical_across_runs() {
    let spec = NoiseSpec {
        seed: 42,
        scales: 6,
        base_scales: 2,
        octaves: 2,
        dims: 1,
        ..NoiseSpec::default()
    };
    let tol = Tolerance::relative(1e-12);

    let runs = |spec: &NoiseSpec| -> Vec<Vec<f64>> {
        let base = value_noise_tt(spec, &tol).expect("value noise");
        vec![
            flat(&midpoint_displacement_tt(spec, &tol).expect("midpoint")),
            flat(&base),
            flat(&perlin_tt(spec, &tol).expect("gradient noise")),
            flat(&fractal_tt(&base, spec, &tol).expect("fractal")),
        ]
    };
    assert_eq!(runs(&spec), runs(&spec), "same seed must replay identically");

    let other = NoiseSpec { seed: 43, ..spec.clone() };
    assert_ne!(runs(&spec), runs(&other), "different seeds must differ");
}

/// The residual at an odd site of the lattice at level l — the value minus
/// the average of its two even neighbours — isolates exactly the level-l
/// perturbation: coarser levels are linear across the triple and finer
/// levels vanish on all three points. Its ensemble variance must therefore
/// follow the squared amplitude law decay^(2 l).
#[test]
fn displacement_variance_follows_the_squared_decay_law() {
    let scales = 6usize;
    let n = 1usize << scales;
    let levels = [3usize, 4, 5];
    let mut sums = [0.0f64; 3];
    let mut counts = [0usize; 3];
    for seed in 0..200u64 {
        let spec = NoiseSpec {
            seed,
            scales,
            base_scales: 1,
            decay: 0.5,
            ..NoiseSpec::default()
        };
        let h = flat(&midpoint_displacement_tt(&spec, &Tolerance::relative(1e-12)).unwrap());
        for (slot, &level) in levels.iter().enumerate() {
            let stride = n >> level;
            for j in 0..(1usize << (level - 1)) {
                let mid = (2 * j + 1) * stride;
                let left = 2 * j * stride;
                let right = ((2 * j + 2) * stride) % n;
                let d = h[mid] - 0.5 * (h[left] + h[right]);
                sums[slot] += d * d;
                counts[slot] += 1;
            }
        }
    }
    let var: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    for pair in var.windows(2) {
        let ratio = pair[1] / pair[0];
        assert!(
            (0.2..=0.3125).contains(&ratio),
            "variance ratio {ratio:.4} strays from decay^2 = 0.25 by more than 20%"
        );
    }
}

/// Slope mismatch across lattice joints shrinks linearly with the fine grid
/// spacing, the sampled signature of a C1 kernel.
#[test]
fn keys_value_noise_is_c1_at_the_lattice_joints() {
    let joint_jump = |scales: usize| -> f64 {
        let spec = NoiseSpec {
            seed: 8,
            scales,
            base_scales: 3,
            kernel: "keys".into(),
            ..NoiseSpec::default()
        };
        let f = flat(&value_noise_tt(&spec, &Tolerance::relative(1e-13)).unwrap());
        let n = f.len();
        let h = 1.0 / n as f64;
        let mut worst = 0.0f64;
        for a in 0..1usize << spec.base_scales {
            let x = a * (n >> spec.base_scales);
            let left = (f[x] - f[(x + n - 1) % n]) / h;
            let right = (f[(x + 1) % n] - f[x]) / h;
            worst = worst.max((right - left).abs());
        }
        worst
    };
    let coarse = joint_jump(9);
    let fine = joint_jump(11);
    assert!(coarse > 0.0, "generic draw cannot be slope-free at joints");
    let ratio = fine / coarse;
    assert!(
        ratio <= 0.35,
        "slope jump shrank by {ratio:.3} per 4x spacing cut; a C1 joint needs ~0.25"
    );
}
