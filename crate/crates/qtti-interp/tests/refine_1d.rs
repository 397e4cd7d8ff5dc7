//! End-to-end checks of 1-D refinement against a dense convolution oracle,
//! plus the analytic properties the operators must preserve: node
//! reproduction, composition, polynomial reproduction, and derivative
//! convergence.

mod common;

use common::{dense_refine, flatten, lcg_samples, max_abs_diff, qtt, rmse};
use qtti_interp::kernels::{
    bspline_cubic, cubic_sixpoint, keys_cubic, lagrange_kernel, linear_kernel,
};
use qtti_interp::{
    apply_tti, build_tti_1d, refine_1d, stencils, BoundaryMode, Kernel, Tolerance,
};

fn kernels_under_test() -> Vec<Kernel> {
    vec![linear_kernel(), keys_cubic(), bspline_cubic(), cubic_sixpoint()]
}

#[test]
fn periodic_refinement_matches_dense_convolution() {
    for kernel in kernels_under_test() {
        let st = stencils(&kernel, 0).unwrap();
        for n in [4usize, 5] {
            let coarse = lcg_samples(0x51e ^ n as u64, 1 << n);
            let f = qtt(&coarse);
            for m in [1usize, 2, 3] {
                let op = build_tti_1d(&kernel, n, m, 0, BoundaryMode::Periodic).unwrap();
                let fine = apply_tti(&op, &f, &Tolerance::exact()).unwrap();
                let got = flatten(&fine);
                let want = dense_refine(&coarse, &st, m, BoundaryMode::Periodic);
                let err = max_abs_diff(&got, &want);
                assert!(
                    err <= 1e-12,
                    "{} n={n} m={m}: max deviation {err:.3e}",
                    kernel.name()
                );
            }
        }
    }
}

#[test]
fn edge_modes_match_dense_convolution() {
    for kernel in [keys_cubic(), bspline_cubic(), cubic_sixpoint()] {
        let st = stencils(&kernel, 0).unwrap();
        let n = 4;
        let coarse: Vec<f64> = (0..1 << n)
            .map(|i| {
                let x = i as f64 / (1 << n) as f64;
                0.3 + x + 0.4 * x * x - 0.7 * x * x * x
            })
            .collect();
        let f = qtt(&coarse);
        for boundary in [BoundaryMode::Clamped, BoundaryMode::Reflect, BoundaryMode::Zero] {
            for m in [1usize, 2] {
                let fine = refine_1d(&f, &kernel, m, 0, boundary, &Tolerance::exact()).unwrap();
                let got = flatten(&fine);
                let want = dense_refine(&coarse, &st, m, boundary);
                let err = max_abs_diff(&got, &want);
                assert!(
                    err <= 1e-12,
                    "{} {boundary:?} m={m}: max deviation {err:.3e}",
                    kernel.name()
                );
            }
        }
    }
}

#[test]
fn interpolating_kernels_keep_coarse_nodes() {
    let n = 5;
    let m = 2;
    let coarse = lcg_samples(7, 1 << n);
    let f = qtt(&coarse);
    for kernel in [linear_kernel(), keys_cubic(), cubic_sixpoint(), lagrange_kernel(3)] {
        let op = build_tti_1d(&kernel, n, m, 0, BoundaryMode::Periodic).unwrap();
        let fine = flatten(&apply_tti(&op, &f, &Tolerance::exact()).unwrap());
        for (a, &v) in coarse.iter().enumerate() {
            let d = (fine[a << m] - v).abs();
            assert!(d <= 1e-13, "{} node {a}: {d:.3e}", kernel.name());
        }
    }
}

#[test]
fn linear_kernel_produces_midpoints() {
    let n = 4;
    let coarse = lcg_samples(11, 1 << n);
    let f = qtt(&coarse);
    let op = build_tti_1d(&linear_kernel(), n, 1, 0, BoundaryMode::Periodic).unwrap();
    let fine = flatten(&apply_tti(&op, &f, &Tolerance::exact()).unwrap());
    let size = 1 << n;
    for a in 0..size {
        let mid = 0.5 * (coarse[a] + coarse[(a + 1) % size]);
        assert!((fine[2 * a] - coarse[a]).abs() <= 1e-13);
        assert!((fine[2 * a + 1] - mid).abs() <= 1e-13);
    }
}

#[test]
fn linear_refinement_composes_across_stages() {
    // Piecewise-linear interpolation of a piecewise-linear function is exact,
    // so refining twice must equal one combined refinement.
    let kernel = linear_kernel();
    let n = 4;
    let coarse = lcg_samples(23, 1 << n);
    let f = qtt(&coarse);
    let tol = Tolerance::exact();

    let once = {
        let op = build_tti_1d(&kernel, n, 3, 0, BoundaryMode::Periodic).unwrap();
        flatten(&apply_tti(&op, &f, &tol).unwrap())
    };
    let staged = {
        let op1 = build_tti_1d(&kernel, n, 1, 0, BoundaryMode::Periodic).unwrap();
        let mid = apply_tti(&op1, &f, &tol).unwrap();
        let op2 = build_tti_1d(&kernel, n + 1, 2, 0, BoundaryMode::Periodic).unwrap();
        flatten(&apply_tti(&op2, &mid, &tol).unwrap())
    };
    assert!(max_abs_diff(&once, &staged) <= 1e-12);
}

#[test]
fn kernels_reproduce_polynomials_of_their_order() {
    let n = 5;
    let m = 3;
    let size = 1usize << n;
    let quadratic = |x: f64| {
        let u = x - 0.31;
        1.5 * u * u - 0.2 * u + 0.05
    };
    let cubic = |x: f64| {
        let u = x - 0.31;
        u * u * u + 1.5 * u * u - 0.2 * u + 0.05
    };
    // Third-order kernels reproduce quadratics, fourth-order ones cubics.
    let cases: Vec<(Kernel, Box<dyn Fn(f64) -> f64>)> = vec![
        (keys_cubic(), Box::new(quadratic)),
        (lagrange_kernel(3), Box::new(cubic)),
        (cubic_sixpoint(), Box::new(cubic)),
    ];
    for (kernel, poly) in cases {
        let coarse: Vec<f64> = (0..size).map(|i| poly(i as f64 / size as f64)).collect();
        let f = qtt(&coarse);
        let fine = flatten(
            &refine_1d(&f, &kernel, m, 0, BoundaryMode::Clamped, &Tolerance::exact()).unwrap(),
        );
        let fine_size = size << m;
        // Skip fine points whose stencil reaches a clamped ghost cell.
        let margin = 3usize << m;
        for j in margin..fine_size - margin {
            let x = j as f64 / fine_size as f64;
            let d = (fine[j] - poly(x)).abs();
            assert!(d <= 1e-12, "{} at {x}: {d:.3e}", kernel.name());
        }
    }
}

#[test]
fn derivative_refinement_converges_quadratically() {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut errs = Vec::new();
    for n in [6usize, 8] {
        let size = 1usize << n;
        let coarse: Vec<f64> = (0..size).map(|i| (two_pi * i as f64 / size as f64).sin()).collect();
        let f = qtt(&coarse);
        let m = 2;
        let op = build_tti_1d(&keys_cubic(), n, m, 1, BoundaryMode::Periodic).unwrap();
        let fine = flatten(&apply_tti(&op, &f, &Tolerance::exact()).unwrap());
        let want: Vec<f64> = (0..size << m)
            .map(|j| two_pi * (two_pi * j as f64 / (size << m) as f64).cos())
            .collect();
        errs.push(rmse(&fine, &want));
    }
    // Halving h twice should cut the error about 16x; allow generous slack.
    assert!(
        errs[0] / errs[1] > 8.0,
        "derivative error ratio {:.2} (errs {:?})",
        errs[0] / errs[1],
        errs
    );
}

#[test]
fn derivative_matches_dense_oracle_exactly() {
    let n = 5;
    let coarse = lcg_samples(31, 1 << n);
    let f = qtt(&coarse);
    for kernel in [keys_cubic(), bspline_cubic()] {
        let st = stencils(&kernel, 1).unwrap();
        let op = build_tti_1d(&kernel, n, 2, 1, BoundaryMode::Periodic).unwrap();
        let fine = flatten(&apply_tti(&op, &f, &Tolerance::exact()).unwrap());
        let want = dense_refine(&coarse, &st, 2, BoundaryMode::Periodic);
        assert!(max_abs_diff(&fine, &want) <= 1e-10 * (1 << n) as f64);
    }
}

#[test]
fn operator_bonds_stay_structural() {
    for (kernel, q) in [
        (linear_kernel(), 2usize),
        (keys_cubic(), 4),
        (bspline_cubic(), 4),
        (cubic_sixpoint(), 6),
    ] {
        let st = stencils(&kernel, 0).unwrap();
        assert_eq!(st.len(), q);
        let p = st.max_degree();
        let n = 6;
        let m = 3;
        let op = build_tti_1d(&kernel, n, m, 0, BoundaryMode::Periodic).unwrap();
        let ranks = op.rank_chain();
        assert_eq!(ranks.len(), n + m + 1);
        for (pos, &r) in ranks.iter().enumerate() {
            if pos == 0 || pos == n + m {
                assert_eq!(r, 1);
            } else if pos < n {
                assert!(r <= q + 1, "{} coarse bond {pos}: {r} > {}", kernel.name(), q + 1);
            } else {
                assert!(r <= p + 1, "{} fine bond {pos}: {r} > {}", kernel.name(), p + 1);
            }
        }
    }
}

#[test]
fn invalid_requests_are_rejected() {
    // Derivative order above the kernel's smoothness has no stencil.
    assert!(stencils(&linear_kernel(), 1).is_err());
    assert!(stencils(&keys_cubic(), 2).is_err());
    assert!(stencils(&bspline_cubic(), 3).is_err());

    // The coarse grid must cover the stencil support.
    assert!(build_tti_1d(&keys_cubic(), 1, 1, 0, BoundaryMode::Periodic).is_err());

    // Applying to a train with the wrong core count fails.
    let op = build_tti_1d(&keys_cubic(), 4, 1, 0, BoundaryMode::Periodic).unwrap();
    let f = qtt(&lcg_samples(3, 32));
    assert!(apply_tti(&op, &f, &Tolerance::exact()).is_err());
}
