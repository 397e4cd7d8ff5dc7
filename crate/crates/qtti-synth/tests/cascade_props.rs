//! Dense reference implementation of the divergence-free cascade.
//!
//! The single-scale velocity (one contribution scale, 16³ target grid) is
//! rebuilt densely: the stream draws are replayed through their labeled
//! streams, each component is refined axis by axis with an independently
//! written periodic convolution, and the curl is assembled pointwise.

use ndarray::{ArrayD, IxDyn};
use qtti_core::TensorTrain;
use qtti_interp::grid::{deinterleave, GridDescriptor, Layout};
use qtti_interp::kernels::{bspline_cubic, Kernel};
use qtti_synth::{
    derive_seed, divergence_cascade, divergence_cascade_range, random_qtt, random_tucker_stream,
    turbulence_cascade, turbulence_cascade_range, CascadeLayout, CascadeSpec,
};

const LAYOUTS: [CascadeLayout; 2] = [CascadeLayout::Interleaved, CascadeLayout::Tucker];

fn levi(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn max_abs(a: &ArrayD<f64>) -> f64 {
    a.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

/// Dense values of stream component j at contribution scale m, replaying
/// the cascade's draw stream for the requested layout.
fn dense_stream(spec: &CascadeSpec, layout: CascadeLayout, m: usize, j: usize) -> ArrayD<f64> {
    let seed = derive_seed(spec.seed, &format!("cascade/m{m}/A{j}"));
    match layout {
        CascadeLayout::Interleaved => {
            let tt = random_qtt(3 * m, spec.chi, seed).expect("stream draw");
            let grid = GridDescriptor::cube(3, m, (0.0, 1.0), Layout::Interleaved, true);
            deinterleave(&tt, &grid).expect("dense stream")
        }
        CascadeLayout::Tucker => random_tucker_stream(m, spec.chi, seed)
            .expect("stream draw")
            .to_dense()
            .expect("dense stream"),
    }
}

/// Periodic dense refinement of one axis by `extra` scales with `deriv`
/// derivatives; derivatives are taken on the unit domain, hence the
/// (coarse points)^deriv factor.
fn refine_axis(
    a: &ArrayD<f64>,
    axis: usize,
    kernel: &Kernel,
    extra: usize,
    deriv: usize,
) -> ArrayD<f64> {
    let n_c = a.shape()[axis];
    let step = 1usize << extra;
    let scale = (n_c as f64).powi(deriv as i32);
    let mut shape = a.shape().to_vec();
    shape[axis] = n_c * step;
    ArrayD::from_shape_fn(IxDyn(&shape), |ix| {
        let j = ix[axis];
        let cell = (j / step) as isize;
        let t = (j % step) as f64 / step as f64;
        let mut src = ix.clone();
        let mut sum = 0.0;
        for k in kernel.offsets() {
            src[axis] = (cell + k).rem_euclid(n_c as isize) as usize;
            sum += kernel.eval_derivative(t - k as f64, deriv) * a[&src];
        }
        sum * scale
    })
}

/// One refined mixed derivative: `flags[ax]` derivatives along each axis.
fn dense_term(g: &ArrayD<f64>, kernel: &Kernel, extra: usize, flags: [usize; 3]) -> ArrayD<f64> {
    let mut out = g.clone();
    for ax in 0..3 {
        out = refine_axis(&out, ax, kernel, extra, flags[ax]);
    }
    out
}

fn dense_velocity(spec: &CascadeSpec, layout: CascadeLayout, m: usize) -> [ArrayD<f64>; 3] {
    let kernel = bspline_cubic();
    let side = 1usize << spec.scales;
    let zero = ArrayD::<f64>::zeros(IxDyn(&[side; 3]));
    let mut v = [zero.clone(), zero.clone(), zero];
    let w = spec.weight(m);
    for j in 0..3 {
        let g = dense_stream(spec, layout, m, j);
        for i in 0..3 {
            if i == j {
                continue;
            }
            let k = 3 - i - j;
            let mut flags = [0usize; 3];
            flags[i] = 1;
            let term = dense_term(&g, &kernel, spec.scales - m, flags);
            let coeff = levi(k, i, j) * w;
            v[k].zip_mut_with(&term, |acc, &t| *acc += coeff * t);
        }
    }
    v
}

fn dense_divergence(spec: &CascadeSpec, layout: CascadeLayout, m: usize) -> ArrayD<f64> {
    let kernel = bspline_cubic();
    let side = 1usize << spec.scales;
    let mut div = ArrayD::<f64>::zeros(IxDyn(&[side; 3]));
    let w = spec.weight(m);
    for j in 0..3 {
        let g = dense_stream(spec, layout, m, j);
        for i in 0..3 {
            if i == j {
                continue;
            }
            let k = 3 - i - j;
            let mut flags = [0usize; 3];
            flags[i] += 1;
            flags[k] += 1;
            let term = dense_term(&g, &kernel, spec.scales - m, flags);
            let coeff = levi(k, i, j) * w;
            div.zip_mut_with(&term, |acc, &t| *acc += coeff * t);
        }
    }
    div
}

fn densify(component: &TensorTrain, layout: CascadeLayout, scales: usize) -> ArrayD<f64> {
    let side = 1usize << scales;
    match layout.data_layout() {
        Layout::Interleaved => {
            let grid = GridDescriptor::cube(3, scales, (0.0, 1.0), Layout::Interleaved, true);
            deinterleave(component, &grid).expect("dense component")
        }
        _ => {
            let flat: Vec<f64> = component
                .to_dense()
                .expect("dense component")
                .iter()
                .copied()
                .collect();
            ArrayD::from_shape_vec(IxDyn(&[side; 3]), flat).expect("cube shape")
        }
    }
}

#[test]
fn single_scale_velocity_matches_the_dense_curl() {
    for layout in LAYOUTS {
        let spec = CascadeSpec {
            seed: 13,
            scales: 4,
            round_tol: 1e-12,
            ..CascadeSpec::default()
        };
        let v = turbulence_cascade_range(&spec, layout, 2, 2).expect("velocity");
        let want = dense_velocity(&spec, layout, 2);
        for k in 0..3 {
            let got = densify(&v[k], layout, spec.scales);
            let err = got
                .iter()
                .zip(want[k].iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let magnitude = max_abs(&want[k]).max(1.0);
            assert!(
                err <= 1e-10 * magnitude,
                "{layout:?} component {k}: curl oracle disagrees by {err:.3e}"
            );
        }
    }
}

#[test]
fn single_scale_dense_divergence_vanishes_pointwise() {
    for layout in LAYOUTS {
        let spec = CascadeSpec {
            seed: 13,
            scales: 4,
            ..CascadeSpec::default()
        };
        let div = dense_divergence(&spec, layout, 2);
        let worst = max_abs(&div);
        assert!(
            worst <= 1e-10,
            "{layout:?}: dense divergence reaches {worst:.3e} on the 16³ grid"
        );
    }
}

#[test]
fn single_scale_tt_divergence_is_tiny_pointwise() {
    for layout in LAYOUTS {
        let spec = CascadeSpec {
            seed: 13,
            scales: 4,
            round_tol: 1e-12,
            ..CascadeSpec::default()
        };
        let v = turbulence_cascade_range(&spec, layout, 2, 2).expect("velocity");
        let vmax = v
            .iter()
            .map(|c| max_abs(&densify(c, layout, spec.scales)))
            .fold(1.0f64, f64::max);
        let div = divergence_cascade_range(&spec, layout, 2, 2).expect("divergence");
        let worst = max_abs(&densify(&div, layout, spec.scales));
        assert!(
            worst <= 1e-10 * vmax,
            "{layout:?}: compressed divergence reaches {worst:.3e} against peak speed {vmax:.3e}"
        );
    }
}

#[test]
fn multiscale_divergence_stays_negligible() {
    for layout in LAYOUTS {
        let spec = CascadeSpec {
            seed: 3,
            scales: 5,
            ..CascadeSpec::default()
        };
        let v = turbulence_cascade(&spec, layout).expect("velocity");
        let vnorm = v.iter().map(TensorTrain::norm2).fold(0.0f64, f64::max);
        let div = divergence_cascade(&spec, layout).expect("divergence");
        assert!(
            div.norm2() <= 1e-8 * vnorm,
            "{layout:?}: divergence norm {:.3e} vs velocity norm {vnorm:.3e}",
            div.norm2()
        );
    }
}
