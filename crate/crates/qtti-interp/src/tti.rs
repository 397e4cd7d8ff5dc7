//! Refinement operators that interpolate a coarse dyadic train onto extra
//! fine scales in one pass.
//!
//! The operator is a sum over stencil offsets k of (shift by k on the coarse
//! bits) tensored with (the stencil polynomial P_k sampled on the fine
//! bits). Assembled by block-adding one train per offset and compressing
//! exactly, the coarse bonds stay within q+1 and the fine tail within p+1,
//! where q is the number of offsets and p the stencil degree. Applying the
//! operator to an n-core train appends the fine cores verbatim, so the tail
//! bound survives any later rounding of the coarse bonds.

use crate::boundary::{correction_operator_terms, BoundaryMode};
use crate::kernels::{stencils, Kernel, StencilSet};
use crate::poly::{polynomial_qtt_cores, PolyBasis};
use crate::shift::{shift_mpo, ShiftKind};
use crate::tucker::TuckerTT;
use ndarray::{Array3, Array4};
use qtti_core::operator::{apply_core, TtOperator};
use qtti_core::parallel::map_indexed;
use qtti_core::{Error, Result, TensorTrain, Tolerance};

/// A built refinement operator: `d * n` coarse operator cores (physical
/// 2-in, 2-out) followed by `d * m` fine vector cores (physical 2).
#[derive(Debug, Clone)]
pub struct TtiOperator {
    coarse: Vec<Array4<f64>>,
    fine: Vec<Array3<f64>>,
    label: String,
    q: usize,
    p: usize,
    dims: usize,
    n: usize,
    m: usize,
    derivative: Vec<usize>,
    boundary: BoundaryMode,
}

impl TtiOperator {
    pub fn kernel_label(&self) -> &str {
        &self.label
    }

    /// Number of spatial dimensions the operator acts on.
    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Coarse scales per dimension.
    pub fn coarse_scales(&self) -> usize {
        self.n
    }

    /// Extra fine scales per dimension.
    pub fn fine_scales(&self) -> usize {
        self.m
    }

    pub fn derivative(&self) -> &[usize] {
        &self.derivative
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    /// Stencil width q (offsets per dimension).
    pub fn support_points(&self) -> usize {
        self.q
    }

    /// Largest stencil polynomial degree p.
    pub fn tail_degree(&self) -> usize {
        self.p
    }

    pub fn coarse_cores(&self) -> &[Array4<f64>] {
        &self.coarse
    }

    pub fn fine_cores(&self) -> &[Array3<f64>] {
        &self.fine
    }

    /// Bond ranks r_0 ..= r_{dn+dm} across the whole chain.
    pub fn rank_chain(&self) -> Vec<usize> {
        let mut r = vec![self.coarse[0].dim().0];
        r.extend(self.coarse.iter().map(|c| c.dim().3));
        r.extend(self.fine.iter().map(|c| c.dim().2));
        r
    }

    pub fn max_rank(&self) -> usize {
        self.rank_chain().into_iter().max().unwrap_or(1)
    }

    /// Derivative normalization on the unit domain: each dimension's
    /// polynomial lives on a coarse cell of width 2^-n.
    fn unit_scale(&self) -> f64 {
        self.derivative
            .iter()
            .map(|&dv| 2f64.powi((self.n * dv) as i32))
            .product()
    }
}

/// Sampled polynomial chain for the fine bits of one stencil offset.
fn fine_chain(poly: &crate::poly::Polynomial, m: usize) -> Result<Vec<Array3<f64>>> {
    polynomial_qtt_cores(poly, m, PolyBasis::Monomial)
}

/// Shift operator matching the boundary handling: cyclic for periodic grids,
/// one-sided (out-of-range reads as zero) otherwise.
fn coarse_shift(offset: isize, n: usize, boundary: BoundaryMode) -> Result<TtOperator> {
    let size = 1i64 << n;
    match boundary {
        BoundaryMode::Periodic => {
            let k = (offset as i64).rem_euclid(size) as u64;
            shift_mpo(ShiftKind::Cyclic, k, n)
        }
        _ => {
            if offset >= 0 {
                shift_mpo(ShiftKind::Left, offset as u64, n)
            } else {
                shift_mpo(ShiftKind::Right, (-offset) as u64, n)
            }
        }
    }
}

/// One fused train per stencil offset: shift cores (dim 4) then the
/// polynomial chain (dim 2).
fn stencil_terms(
    st: &StencilSet,
    n: usize,
    m: usize,
    boundary: BoundaryMode,
) -> Result<Vec<TensorTrain>> {
    let mut terms = Vec::with_capacity(st.len());
    for (poly, &k) in st.polys().iter().zip(st.offsets()) {
        if poly.is_zero() {
            continue;
        }
        let mut cores = coarse_shift(k, n, boundary)?.into_tt().into_cores();
        cores.extend(fine_chain(poly, m)?);
        terms.push(TensorTrain::new(cores)?);
    }
    Ok(terms)
}

/// Block-add fused terms, compress exactly, split back into operator and
/// vector cores, and check the structural rank bounds.
fn assemble(
    terms: Vec<TensorTrain>,
    label: &str,
    st: &StencilSet,
    n: usize,
    m: usize,
    boundary: BoundaryMode,
    check_coarse: bool,
) -> Result<TtiOperator> {
    let mut it = terms.into_iter();
    let mut fused = it
        .next()
        .ok_or_else(|| Error::config("stencil set has no nonzero polynomials"))?;
    for t in it {
        fused = fused.add(&t)?;
    }
    fused.round(&Tolerance::exact());

    let q = st.len();
    let p = st.max_degree();
    let ranks = fused.ranks();
    if check_coarse {
        for (i, &r) in ranks.iter().enumerate().take(n).skip(1) {
            assert!(r <= q + 1, "coarse bond {i} rank {r} exceeds q+1 = {}", q + 1);
        }
    }
    for (i, &r) in ranks.iter().enumerate().take(n + m).skip(n) {
        assert!(r <= p + 1, "fine bond {i} rank {r} exceeds p+1 = {}", p + 1);
    }

    let cores = fused.into_cores();
    let mut coarse = Vec::with_capacity(n);
    for core in &cores[..n] {
        let (r, four, r2) = core.dim();
        debug_assert_eq!(four, 4);
        coarse.push(Array4::from_shape_fn((r, 2, 2, r2), |(a, i, j, b)| {
            core[(a, i * 2 + j, b)]
        }));
    }
    let fine = cores[n..].to_vec();

    Ok(TtiOperator {
        coarse,
        fine,
        label: label.to_string(),
        q,
        p,
        dims: 1,
        n,
        m,
        derivative: vec![st.derivative()],
        boundary,
    })
}

fn check_build_args(st: &StencilSet, n: usize, m: usize) -> Result<()> {
    if n == 0 || n > 60 {
        return Err(Error::config("coarse scales must be in 1..=60"));
    }
    if m == 0 {
        return Err(Error::config("need at least one extra scale"));
    }
    if (1usize << n) < st.len() {
        return Err(Error::config("kernel support exceeds the coarse grid"));
    }
    Ok(())
}

/// Build a 1-D refinement operator from an explicit stencil set. For
/// non-periodic boundaries the shifts are one-sided and edge corrections are
/// the caller's responsibility (see [`crate::boundary`]).
pub fn build_tti_from_stencils(
    st: &StencilSet,
    label: &str,
    n: usize,
    m: usize,
    boundary: BoundaryMode,
) -> Result<TtiOperator> {
    check_build_args(st, n, m)?;
    let terms = stencil_terms(st, n, m, boundary)?;
    assemble(terms, label, st, n, m, boundary, true)
}

/// Build the 1-D refinement operator for a kernel.
pub fn build_tti_1d(
    kernel: &Kernel,
    n: usize,
    m: usize,
    derivative: usize,
    boundary: BoundaryMode,
) -> Result<TtiOperator> {
    let st = stencils(kernel, derivative)?;
    build_tti_from_stencils(&st, kernel.name(), n, m, boundary)
}

/// Build a 1-D operator with the edge corrections fused in, so one
/// application handles the boundary cells too. Coarse bonds may exceed q+1
/// (base plus correction blocks); the fine tail bound still holds.
pub fn build_tti_1d_corrected(
    kernel: &Kernel,
    n: usize,
    m: usize,
    derivative: usize,
    boundary: BoundaryMode,
) -> Result<TtiOperator> {
    let st = stencils(kernel, derivative)?;
    check_build_args(&st, n, m)?;
    let mut terms = stencil_terms(&st, n, m, boundary)?;
    terms.extend(correction_operator_terms(&st, n, m, boundary)?);
    assemble(terms, kernel.name(), &st, n, m, boundary, false)
}

/// Pad an operator core with identity bonds on both sides (Kronecker
/// `I_a (x) core (x) I_b` in bond space).
fn pad_op_core(core: &Array4<f64>, a: usize, b: usize) -> Array4<f64> {
    let (r1, _, _, r2) = core.dim();
    let mut out = Array4::zeros((a * r1 * b, 2, 2, a * r2 * b));
    for ai in 0..a {
        for x in 0..r1 {
            for y in 0..r2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let v = core[(x, i, j, y)];
                        if v == 0.0 {
                            continue;
                        }
                        for bi in 0..b {
                            out[(ai * r1 * b + x * b + bi, i, j, ai * r2 * b + y * b + bi)] = v;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Pad a vector core with identity bonds on both sides.
fn pad_vec_core(core: &Array3<f64>, a: usize, b: usize) -> Array3<f64> {
    let (r1, _, r2) = core.dim();
    let mut out = Array3::zeros((a * r1 * b, 2, a * r2 * b));
    for ai in 0..a {
        for x in 0..r1 {
            for y in 0..r2 {
                for i in 0..2 {
                    let v = core[(x, i, y)];
                    if v == 0.0 {
                        continue;
                    }
                    for bi in 0..b {
                        out[(ai * r1 * b + x * b + bi, i, ai * r2 * b + y * b + bi)] = v;
                    }
                }
            }
        }
    }
    out
}

/// Build the d-dimensional operator on an interleaved (scale-major) layout
/// by padding each dimension's 1-D cores with identities on the other
/// dimensions' bonds. Exactly equals composing the d one-dimensional
/// operators; fine bonds are bounded by products of the per-dimension tails.
pub fn build_tti_multidim_interleaved(
    kernel: &Kernel,
    d: usize,
    n: usize,
    m: usize,
    derivative: &[usize],
    boundary: BoundaryMode,
) -> Result<TtiOperator> {
    if d == 0 || derivative.len() != d {
        return Err(Error::config("need one derivative order per dimension"));
    }
    let ops: Vec<TtiOperator> = derivative
        .iter()
        .map(|&dv| build_tti_1d(kernel, n, m, dv, boundary))
        .collect::<Result<_>>()?;
    if d == 1 {
        return Ok(ops.into_iter().next().unwrap());
    }
    let chains: Vec<Vec<usize>> = ops.iter().map(|o| o.rank_chain()).collect();

    let mut coarse = Vec::with_capacity(d * n);
    for k in 0..n {
        for mu in 0..d {
            let a: usize = (0..mu).map(|nu| chains[nu][k + 1]).product();
            let b: usize = (mu + 1..d).map(|nu| chains[nu][k]).product();
            coarse.push(pad_op_core(&ops[mu].coarse[k], a, b));
        }
    }
    let mut fine = Vec::with_capacity(d * m);
    for k in 0..m {
        for mu in 0..d {
            let a: usize = (0..mu).map(|nu| chains[nu][n + k + 1]).product();
            let b: usize = (mu + 1..d).map(|nu| chains[nu][n + k]).product();
            fine.push(pad_vec_core(&ops[mu].fine[k], a, b));
        }
    }

    Ok(TtiOperator {
        coarse,
        fine,
        label: kernel.name().to_string(),
        q: ops[0].q,
        p: ops[0].p,
        dims: d,
        n,
        m,
        derivative: derivative.to_vec(),
        boundary,
    })
}

/// Apply the operator: contract every coarse core against the input, append
/// the fine cores verbatim, scale by the derivative normalization, then
/// round the coarse bonds (and the junction) once at `tol`. Fine bonds are
/// only gauge-transformed, preserving the structural tail bound.
///
/// The input may be open on the left (a dangling Tucker leg); its right
/// boundary rank must be 1.
pub fn apply_tti(op: &TtiOperator, f: &TensorTrain, tol: &Tolerance) -> Result<TensorTrain> {
    let nc = op.coarse.len();
    if f.len() != nc {
        return Err(Error::config(format!(
            "operator expects {nc} coarse cores, input has {}",
            f.len()
        )));
    }
    if f.dims().iter().any(|&d| d != 2) {
        return Err(Error::config("input must have binary cores"));
    }
    if f.ranks()[f.len()] != 1 {
        return Err(Error::config("input must have right boundary rank 1"));
    }
    let mut cores = map_indexed(nc, |k| apply_core(&op.coarse[k], f.core(k)));
    cores.extend(op.fine.iter().cloned());
    let mut out = TensorTrain::new(cores)?;
    let s = op.unit_scale();
    if s != 1.0 {
        out.scale(s);
    }
    out.round_bonds(tol, nc);
    Ok(out)
}

/// [`apply_tti`] with explicit per-dimension coarse spacings instead of the
/// unit-domain default, for grids on scaled intervals.
pub fn apply_tti_with_spacing(
    op: &TtiOperator,
    f: &TensorTrain,
    tol: &Tolerance,
    spacing: &[f64],
) -> Result<TensorTrain> {
    if spacing.len() != op.dims {
        return Err(Error::config("need one spacing per dimension"));
    }
    let mut out = apply_tti(op, f, tol)?;
    let fix: f64 = op
        .derivative
        .iter()
        .zip(spacing)
        .map(|(&dv, &h)| (2f64.powi(-(op.n as i32)) / h).powi(dv as i32))
        .product();
    if fix != 1.0 {
        out.scale(fix);
    }
    Ok(out)
}

/// Refine each Tucker factor chain independently; the core train is
/// untouched. Fine tails stay within p+1 per dimension regardless of d.
pub fn apply_tti_tucker(
    t: &TuckerTT,
    kernel: &Kernel,
    m: &[usize],
    derivative: &[usize],
    tol: &Tolerance,
) -> Result<TuckerTT> {
    let d = t.dims();
    if m.len() != d || derivative.len() != d {
        return Err(Error::config("need one m and one derivative per dimension"));
    }
    let mut factors = Vec::with_capacity(d);
    for mu in 0..d {
        let n_mu = t.factor(mu).len();
        let op = build_tti_1d(kernel, n_mu, m[mu], derivative[mu], BoundaryMode::Periodic)?;
        factors.push(apply_tti(&op, t.factor(mu), tol)?);
    }
    TuckerTT::new(t.core().clone(), factors)
}

/// One leg of a multi-dimensional train: which dimension it belongs to and
/// its 1-based scale within that dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Leg {
    pub dim: usize,
    pub scale: usize,
}

/// Canonical leg orders: scale-major is the interleaved layout, dim-major
/// the plain one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegOrder {
    ScaleMajor,
    DimMajor,
}

fn leg_key(leg: &Leg, order: LegOrder) -> (usize, usize) {
    match order {
        LegOrder::ScaleMajor => (leg.scale, leg.dim),
        LegOrder::DimMajor => (leg.dim, leg.scale),
    }
}

/// Leg list of a d-dimensional interleaved train with n scales per dim.
pub fn interleaved_legs(d: usize, n: usize) -> Vec<Leg> {
    let mut legs = Vec::with_capacity(d * n);
    for k in 1..=n {
        for mu in 0..d {
            legs.push(Leg { dim: mu, scale: k });
        }
    }
    legs
}

/// `I_rho (x) core` in bond space: thread an operator bond of size rho
/// through a leg the operator does not act on.
fn bond_kron(rho: usize, core: &Array3<f64>) -> Array3<f64> {
    let (rx, nphys, rx2) = core.dim();
    let mut out = Array3::zeros((rho * rx, nphys, rho * rx2));
    for e in 0..rho {
        for x in 0..rx {
            for i in 0..nphys {
                for y in 0..rx2 {
                    out[(e * rx + x, i, e * rx2 + y)] = core[(x, i, y)];
                }
            }
        }
    }
    out
}

/// `fine_core (x) I_beta`: insert a new fine leg mid-train, threading the
/// train bond of size beta through unchanged.
fn insert_kron(fc: &Array3<f64>, beta: usize) -> Array3<f64> {
    let (r1, nphys, r2) = fc.dim();
    let mut out = Array3::zeros((r1 * beta, nphys, r2 * beta));
    for e in 0..r1 {
        for i in 0..nphys {
            for e2 in 0..r2 {
                let v = fc[(e, i, e2)];
                if v == 0.0 {
                    continue;
                }
                for b in 0..beta {
                    out[(e * beta + b, i, e2 * beta + b)] = v;
                }
            }
        }
    }
    out
}

/// Apply a 1-D operator to one dimension of a multi-dimensional train,
/// walking the legs in their canonical order: the target dimension's coarse
/// legs are contracted with the operator cores, other legs pass through with
/// the operator bond threaded alongside, and the fine cores are inserted at
/// their sorted positions. Returns the refined train and its new leg list.
///
/// Bonds up to the last all-coarse position are rounded at `tol`; fine-tail
/// bonds are left structural.
pub fn refine_dim(
    f: &TensorTrain,
    legs: &[Leg],
    op: &TtiOperator,
    dim: usize,
    order: LegOrder,
    tol: &Tolerance,
) -> Result<(TensorTrain, Vec<Leg>)> {
    if op.dims != 1 {
        return Err(Error::config("refine_dim needs a one-dimensional operator"));
    }
    if legs.len() != f.len() {
        return Err(Error::config("leg metadata does not match the train"));
    }
    let n = op.n;
    let m = op.m;
    let have: Vec<usize> = legs.iter().filter(|l| l.dim == dim).map(|l| l.scale).collect();
    if have != (1..=n).collect::<Vec<usize>>() {
        return Err(Error::config(format!(
            "dimension {dim} must carry exactly scales 1..={n} before refinement"
        )));
    }
    for w in legs.windows(2) {
        if leg_key(&w[0], order) >= leg_key(&w[1], order) {
            return Err(Error::config("input legs are not in canonical order"));
        }
    }

    let mut out_legs: Vec<Leg> = legs.to_vec();
    out_legs.extend((n + 1..=n + m).map(|scale| Leg { dim, scale }));
    out_legs.sort_by_key(|l| leg_key(l, order));

    let op_chain = op.rank_chain();
    let mut cores_out: Vec<Array3<f64>> = Vec::with_capacity(out_legs.len());
    let mut in_pos = 0usize;
    let mut op_pos = 0usize;
    for leg in &out_legs {
        if leg.dim == dim && leg.scale <= n {
            debug_assert_eq!(legs[in_pos], *leg);
            cores_out.push(apply_core(&op.coarse[leg.scale - 1], f.core(in_pos)));
            in_pos += 1;
            op_pos += 1;
        } else if leg.dim == dim {
            let beta = if in_pos == 0 { f.ranks()[0] } else { f.core(in_pos - 1).dim().2 };
            cores_out.push(insert_kron(&op.fine[leg.scale - n - 1], beta));
            op_pos += 1;
        } else {
            let rho = op_chain[op_pos];
            cores_out.push(bond_kron(rho, f.core(in_pos)));
            in_pos += 1;
        }
    }
    debug_assert_eq!(in_pos, f.len());

    let mut out = TensorTrain::new(cores_out)?;
    let s = op.unit_scale();
    if s != 1.0 {
        out.scale(s);
    }
    let first_fine = out_legs
        .iter()
        .position(|l| l.scale > n)
        .unwrap_or(out_legs.len());
    out.round_bonds(tol, first_fine);
    Ok((out, out_legs))
}

/// Refine every dimension of an interleaved train sequentially. Each pass
/// rounds coarse bonds at `tol`, so the total error is at most d times the
/// per-pass budget. Boundary corrections are fused per dimension for
/// non-periodic modes.
pub fn refine_interleaved(
    f: &TensorTrain,
    d: usize,
    kernel: &Kernel,
    m: usize,
    derivative: &[usize],
    boundary: BoundaryMode,
    tol: &Tolerance,
) -> Result<TensorTrain> {
    if d == 0 || derivative.len() != d {
        return Err(Error::config("need one derivative order per dimension"));
    }
    if f.len() % d != 0 {
        return Err(Error::config("core count is not a multiple of the dimension count"));
    }
    let n = f.len() / d;
    let mut train = f.clone();
    let mut legs = interleaved_legs(d, n);
    for mu in 0..d {
        let op = if boundary.is_periodic() || matches!(boundary, BoundaryMode::Zero) {
            build_tti_1d(kernel, n, m, derivative[mu], boundary)?
        } else {
            build_tti_1d_corrected(kernel, n, m, derivative[mu], boundary)?
        };
        let (next, next_legs) = refine_dim(&train, &legs, &op, mu, LegOrder::ScaleMajor, tol)?;
        train = next;
        legs = next_legs;
    }
    Ok(train)
}

/// Refine a 1-D train by n -> n+m scales, fusing edge corrections when the
/// boundary is not periodic.
pub fn refine_1d(
    f: &TensorTrain,
    kernel: &Kernel,
    m: usize,
    derivative: usize,
    boundary: BoundaryMode,
    tol: &Tolerance,
) -> Result<TensorTrain> {
    let n = f.len();
    match boundary {
        BoundaryMode::Periodic | BoundaryMode::Zero => {
            let op = build_tti_1d(kernel, n, m, derivative, boundary)?;
            apply_tti(&op, f, tol)
        }
        _ => {
            let op = build_tti_1d_corrected(kernel, n, m, derivative, boundary)?;
            apply_tti(&op, f, tol)
        }
    }
}
