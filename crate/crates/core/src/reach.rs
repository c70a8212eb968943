//! Reachable-set machinery: exact control Jacobians by dual-number
//! propagation, regular pairs and interior certificates at the zero control,
//! Newton steering onto nearby targets, deterministic sampling of reachable
//! points (grid and seeded Monte Carlo, order-stable across worker counts),
//! CSV export, and the composition and time-reversal identities used as
//! cross-checks.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::lie::{AlgebraElement, GroupSpec, LieError};
use crate::linalg::{least_squares, matrix_inverse, numerical_rank, LinalgError, Matrix};
use crate::system::{ControlSequence, SystemError, SystemSpec};

/// Hard cap on sampling budgets; larger requests are refused.
pub const SAMPLE_BUDGET: usize = 10_000_000;

/// Default rank tolerance for regularity certificates.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Tolerance at which the constructive identity checks pass.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error)]
pub enum ReachError {
    #[error("sample budget {requested} exceeds the cap of {cap}")]
    Refusal { requested: usize, cap: usize },
    #[error(
        "horizon search start {k_min} is below {required}, the smallest horizon \
         whose endpoint Jacobian can reach full rank"
    )]
    HorizonTooShort { k_min: usize, required: usize },
    #[error("control sequence must be nonempty")]
    EmptySequence,
    #[error("control sequence leaves the control box")]
    OutsideBox,
    #[error("control sequence is not strictly interior to the box")]
    NotInterior,
    #[error("steering did not converge (last residual {residual:.3e})")]
    NoConvergence { residual: f64 },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Matrix of dual numbers, stored as a value matrix plus one gradient matrix
/// per control variable. Products follow the rule
/// (AB)' = A'B + AB' componentwise in the gradient slots.
#[derive(Clone)]
struct DualMatrix {
    val: Matrix,
    grads: Vec<Matrix>,
}

impl DualMatrix {
    fn constant(val: Matrix, grad_dim: usize) -> Self {
        let (r, c) = (val.rows(), val.cols());
        DualMatrix { val, grads: vec![Matrix::zeros(r, c); grad_dim] }
    }

    fn matmul(&self, other: &DualMatrix) -> DualMatrix {
        let val = self.val.matmul(&other.val);
        let grads = self
            .grads
            .iter()
            .zip(&other.grads)
            .map(|(ga, gb)| ga.matmul(&other.val).add(&self.val.matmul(gb)))
            .collect();
        DualMatrix { val, grads }
    }
}

/// The control factor at step `t` as a dual matrix over all `m * k`
/// variables: entry gradients from the expression evaluator land in the
/// step's own variable block, every other block is zero.
fn dual_control_factor(
    sys: &SystemSpec,
    u: &[f64],
    step: usize,
    steps_total: usize,
) -> Result<DualMatrix, ReachError> {
    let n = sys.group.n;
    let m = sys.control_dim;
    let grad_dim = m * steps_total;
    let mut val = Matrix::zeros(n, n);
    let mut grads = vec![Matrix::zeros(n, n); grad_dim];
    for i in 0..n {
        for j in 0..n {
            let d = crate::expr::evaluate_dual(&sys.b_entries[i][j], u)
                .map_err(SystemError::Eval)?;
            val.set(i, j, d.value);
            for (c, &g) in d.deriv.iter().enumerate() {
                grads[step * m + c].set(i, j, g);
            }
        }
    }
    Ok(DualMatrix { val, grads })
}

fn endpoint_and_jacobian(
    sys: &SystemSpec,
    g: &Matrix,
    u: &ControlSequence,
) -> Result<(Matrix, Matrix), ReachError> {
    if u.is_empty() {
        return Err(ReachError::EmptySequence);
    }
    if !u.inside(&sys.control_box) {
        return Err(ReachError::OutsideBox);
    }
    let k = u.len();
    let m = sys.control_dim;
    let grad_dim = m * k;
    let h_inv = matrix_inverse(&sys.h)?;
    let mut state = DualMatrix::constant(g.clone(), grad_dim);
    for t in 0..k {
        // Conjugation by the constant h passes straight into the gradients.
        let drifted = DualMatrix {
            val: sys.h.matmul(&state.val).matmul(&h_inv),
            grads: state
                .grads
                .iter()
                .map(|gr| sys.h.matmul(gr).matmul(&h_inv))
                .collect(),
        };
        let b = dual_control_factor(sys, u.get(t), t, k)?;
        state = b.matmul(&drifted);
    }
    // Left-translate the endpoint variations back to the identity and read
    // them in algebra coordinates: column l is coords(E^-1 dE/du_l).
    let endpoint = state.val.clone();
    let endpoint_inv = matrix_inverse(&endpoint)?;
    let dim = sys.group.dim();
    let mut jac = Matrix::zeros(dim, grad_dim);
    for (l, grad) in state.grads.iter().enumerate() {
        let v = endpoint_inv.matmul(grad);
        let elem = AlgebraElement::from_matrix(sys.group, v)?;
        for (row, &c) in elem.coords.iter().enumerate() {
            jac.set(row, l, c);
        }
    }
    Ok((endpoint, jac))
}

/// Jacobian of the endpoint map u -> solve(k, g, u) at `u`, pulled back to
/// algebra coordinates at the endpoint. Shape: dim G rows, m*k columns in
/// time order (step 0 first, components within a step in order).
pub fn control_jacobian(
    sys: &SystemSpec,
    g: &Matrix,
    u: &ControlSequence,
) -> Result<Matrix, ReachError> {
    endpoint_and_jacobian(sys, g, u).map(|(_, j)| j)
}

/// A pair (g, u) is regular when the endpoint map has full rank dim G at a
/// strictly interior control: the reachable set from g then has nonempty
/// interior around the endpoint.
pub fn is_regular_pair(
    sys: &SystemSpec,
    g: &Matrix,
    u: &ControlSequence,
    tol_rank: f64,
) -> Result<bool, ReachError> {
    if !u.strictly_inside(&sys.control_box) {
        return Err(ReachError::NotInterior);
    }
    let jac = control_jacobian(sys, g, u)?;
    Ok(numerical_rank(&jac, tol_rank) == sys.group.dim())
}

/// Witness that the identity is interior to the reachable set: the zero
/// control of length `k` is strictly interior, its endpoint is the identity,
/// and the endpoint Jacobian has full rank.
#[derive(Debug, Clone)]
pub struct RegularityCertificate {
    pub k: usize,
    pub u_star: ControlSequence,
    pub endpoint: Matrix,
    pub jacobian: Matrix,
    pub rank: usize,
}

/// Smallest horizon at which the endpoint Jacobian (dim G rows, m·k columns)
/// can possibly have full rank.
pub fn minimal_horizon(sys: &SystemSpec) -> usize {
    sys.group.dim().div_ceil(sys.control_dim).max(1)
}

/// Searches horizons `k_min..=k_max` for a certificate at the zero control
/// (whose endpoint is the identity because b(0) = e). `k_min` must be at
/// least `minimal_horizon`: below it the Jacobian has fewer columns than
/// rows and cannot have full rank. `None` means no certificate up to
/// `k_max`, which is inconclusive, not a disproof.
pub fn interior_certificate(
    sys: &SystemSpec,
    k_min: usize,
    k_max: usize,
    tol_rank: f64,
) -> Result<Option<RegularityCertificate>, ReachError> {
    let dim = sys.group.dim();
    let m = sys.control_dim;
    let required = minimal_horizon(sys);
    if k_min < required {
        return Err(ReachError::HorizonTooShort { k_min, required });
    }
    for k in k_min..=k_max {
        let u_star = ControlSequence::zeros(k, m);
        let (endpoint, jacobian) = endpoint_and_jacobian(sys, &Matrix::identity(sys.group.n), &u_star)?;
        let rank = numerical_rank(&jacobian, tol_rank);
        if rank == dim {
            return Ok(Some(RegularityCertificate { k, u_star, endpoint, jacobian, rank }));
        }
    }
    Ok(None)
}

/// Newton steering from the zero control onto a nearby target: solves
/// solve(k, e, u) = target for u, staying inside the control box. Returns
/// the control window and the final endpoint defect norm.
pub fn steer_to_target(
    sys: &SystemSpec,
    k: usize,
    target: &Matrix,
    tol: f64,
    max_iter: usize,
) -> Result<(ControlSequence, f64), ReachError> {
    let n = sys.group.n;
    let m = sys.control_dim;
    let mut u = ControlSequence::zeros(k, m);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let (endpoint, jac) = endpoint_and_jacobian(sys, &Matrix::identity(n), &u)?;
        let mut defect = matrix_inverse(&endpoint)?.matmul(target);
        for i in 0..n {
            defect.set(i, i, defect.get(i, i) - 1.0);
        }
        residual = defect.frobenius_norm();
        if residual <= tol {
            return Ok((u, residual));
        }
        // For determinant-one groups the defect trace is second order
        // (both factors have unit determinant), so dropping it keeps the
        // Newton direction intact while landing in the algebra.
        if matches!(sys.group.kind, crate::lie::GroupKind::SL) {
            let tr = (0..n).map(|i| defect.get(i, i)).sum::<f64>() / n as f64;
            for i in 0..n {
                defect.set(i, i, defect.get(i, i) - tr);
            }
        }
        let rhs = AlgebraElement::from_matrix(sys.group, defect)?.coords;
        let (delta, _) = least_squares(&jac, &rhs);
        let steps: Vec<Vec<f64>> = (0..k)
            .map(|t| {
                (0..m)
                    .map(|c| u.get(t)[c] + delta[t * m + c])
                    .collect()
            })
            .collect();
        let candidate = ControlSequence::new(steps, m).expect("same shape");
        if !candidate.inside(&sys.control_box) {
            return Err(ReachError::NoConvergence { residual });
        }
        u = candidate;
    }
    Err(ReachError::NoConvergence { residual })
}

/// How reachable points are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStrategy {
    /// Per-axis equispaced points (including 0 and the box endpoints), all
    /// combinations in lexicographic order, truncated to the budget.
    Grid,
    /// Seeded uniform draws from the box.
    MonteCarlo,
}

impl SampleStrategy {
    pub fn name(self) -> &'static str {
        match self {
            SampleStrategy::Grid => "grid",
            SampleStrategy::MonteCarlo => "monte-carlo",
        }
    }
}

/// Reachable points at a fixed horizon together with the controls that
/// generated them. `generators[i]` drives the system from the identity to
/// `points[i]`; the all-zero window is always present, so the identity is
/// always among the points.
#[derive(Debug, Clone)]
pub struct ReachSample {
    pub group: GroupSpec,
    pub k: usize,
    pub strategy: SampleStrategy,
    pub seed: u64,
    pub generators: Vec<ControlSequence>,
    pub points: Vec<Matrix>,
}

fn grid_axis_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect();
    if !pts.iter().any(|&p| p.abs() <= 1e-12) {
        pts.push(0.0);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    pts
}

fn grid_generators(sys: &SystemSpec, k: usize, samples: usize) -> Vec<ControlSequence> {
    let m = sys.control_dim;
    let axes = m * k;
    // Smallest odd per-axis count >= 3 whose power covers the budget.
    let mut per_axis = (samples as f64).powf(1.0 / axes as f64).ceil() as usize;
    per_axis = per_axis.max(3);
    if per_axis % 2 == 0 {
        per_axis += 1;
    }
    let axis_points: Vec<Vec<f64>> = (0..axes)
        .map(|a| {
            let c = a % m;
            grid_axis_points(sys.control_box.lo()[c], sys.control_box.hi()[c], per_axis)
        })
        .collect();
    let mut out = Vec::with_capacity(samples);
    let mut idx = vec![0usize; axes];
    'outer: loop {
        let steps: Vec<Vec<f64>> = (0..k)
            .map(|t| (0..m).map(|c| axis_points[t * m + c][idx[t * m + c]]).collect())
            .collect();
        out.push(ControlSequence::new(steps, m).expect("grid step shape"));
        if out.len() == samples {
            break;
        }
        // Lexicographic increment, last axis fastest.
        let mut a = axes;
        loop {
            if a == 0 {
                break 'outer;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < axis_points[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
    let zero = ControlSequence::zeros(k, m);
    if !out.iter().any(|s| s == &zero) {
        let last = out.len() - 1;
        out[last] = zero;
    }
    out
}

fn monte_carlo_generators(
    sys: &SystemSpec,
    k: usize,
    samples: usize,
    seed: u64,
) -> Vec<ControlSequence> {
    let m = sys.control_dim;
    let mut rng = crate::catalog::rng(seed);
    let mut out: Vec<ControlSequence> = (0..samples)
        .map(|_| {
            let steps = (0..k).map(|_| sys.control_box.sample(&mut rng)).collect();
            ControlSequence::new(steps, m).expect("sampled step shape")
        })
        .collect();
    let zero = ControlSequence::zeros(k, m);
    if !out.iter().any(|s| s == &zero) {
        let last = out.len() - 1;
        out[last] = zero;
    }
    out
}

/// Samples the reachable set at horizon `k` from the identity. Generation is
/// fully deterministic in (strategy, samples, seed); evaluation is split
/// across `workers` threads over disjoint index ranges and merged back in
/// index order, so the result is identical for every worker count.
pub fn sample_reachable(
    sys: &SystemSpec,
    k: usize,
    strategy: SampleStrategy,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<ReachSample, ReachError> {
    if samples > SAMPLE_BUDGET {
        return Err(ReachError::Refusal { requested: samples, cap: SAMPLE_BUDGET });
    }
    if samples == 0 || k == 0 {
        return Err(ReachError::EmptySequence);
    }
    let generators = match strategy {
        SampleStrategy::Grid => grid_generators(sys, k, samples),
        SampleStrategy::MonteCarlo => monte_carlo_generators(sys, k, samples, seed),
    };
    let workers = workers.max(1).min(generators.len().max(1));
    let e = Matrix::identity(sys.group.n);
    let mut points: Vec<Option<Matrix>> = vec![None; generators.len()];
    let chunk = generators.len().div_ceil(workers);
    let mut first_err: Option<ReachError> = None;
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (slot_chunk, gen_chunk) in points.chunks_mut(chunk).zip(generators.chunks(chunk)) {
            let e = &e;
            handles.push(scope.spawn(move || -> Result<(), ReachError> {
                for (slot, g) in slot_chunk.iter_mut().zip(gen_chunk) {
                    *slot = Some(sys.solve(g.len() as i64, e, g)?);
                }
                Ok(())
            }));
        }
        for h in handles {
            if let Err(err) = h.join().expect("sampling worker panicked") {
                if first_err.is_none() {
                    first_err = Some(err);
                }
            }
        }
    });
    if let Some(err) = first_err {
        return Err(err);
    }
    let points = points.into_iter().map(|p| p.expect("all slots filled")).collect();
    Ok(ReachSample { group: sys.group, k, strategy, seed, generators, points })
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV rendering: header `k,seq,g11,...,gnn`, one row per sample. The seq
/// field joins each control vector with commas and the vectors with
/// semicolons, and is double-quoted when it contains a comma (m > 1). All
/// floats carry 17 significant digits, so equal samples give equal bytes.
pub fn reach_csv(sample: &ReachSample) -> String {
    let n = sample.group.n;
    let mut out = String::new();
    out.push_str("k,seq");
    for i in 1..=n {
        for j in 1..=n {
            let _ = write!(out, ",g{i}{j}");
        }
    }
    out.push('\n');
    for (g, p) in sample.generators.iter().zip(&sample.points) {
        let seq = g
            .steps()
            .iter()
            .map(|step| step.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join(";");
        let seq = if seq.contains(',') { format!("\"{seq}\"") } else { seq };
        let _ = write!(out, "{},{}", sample.k, seq);
        for &v in p.as_slice() {
            let _ = write!(out, ",{}", fmt_float(v));
        }
        out.push('\n');
    }
    out
}

/// Outcome of a constructive identity check: the worst residual over the
/// sampled control windows, the verdict at the built-in tolerance, and the
/// control construction that produced the witnesses.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub samples: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub passed: bool,
    pub construction: &'static str,
}

impl CheckReport {
    fn new(name: &'static str, samples: usize, max_residual: f64, construction: &'static str) -> Self {
        CheckReport {
            name,
            samples,
            max_residual,
            tol: CHECK_TOL,
            passed: max_residual <= CHECK_TOL,
            construction,
        }
    }
}

/// Checks the composition identity
/// solve(k1+k2, e, v ++ u) = solve(k1, e, u) * h^k1 solve(k2, e, v) h^-k1
/// over seeded random control windows, plus the monotonicity construction:
/// zero-padding a horizon-k1 window to length k1+k2 reaches the same point.
pub fn semigroup_check(
    sys: &SystemSpec,
    k1: usize,
    k2: usize,
    samples: usize,
    seed: u64,
) -> Result<CheckReport, ReachError> {
    let mut rng = crate::catalog::rng(seed);
    let e = Matrix::identity(sys.group.n);
    let h_inv = matrix_inverse(&sys.h)?;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let u = random_window(sys, k1, &mut rng);
        let v = random_window(sys, k2, &mut rng);
        let w = v.concat(&u);
        let lhs = sys.solve((k1 + k2) as i64, &e, &w)?;
        let head = sys.solve(k1 as i64, &e, &u)?;
        let mut inner = sys.solve(k2 as i64, &e, &v)?;
        for _ in 0..k1 {
            inner = sys.h.matmul(&inner).matmul(&h_inv);
        }
        worst = worst.max(lhs.max_abs_diff(&head.matmul(&inner)));
        let padded = ControlSequence::zeros(k2, sys.control_dim).concat(&u);
        let lifted = sys.solve((k1 + k2) as i64, &e, &padded)?;
        worst = worst.max(lifted.max_abs_diff(&head));
    }
    Ok(CheckReport::new(
        "composition",
        samples,
        worst,
        "window concatenation and zero padding",
    ))
}

/// Checks the time-reversal identity
/// solve_reversed(k, e, reverse(u)) = h^-k (solve(k, e, u))^-1 h^k
/// over seeded random control windows.
pub fn duality_check(
    sys: &SystemSpec,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<CheckReport, ReachError> {
    let mut rng = crate::catalog::rng(seed);
    let e = Matrix::identity(sys.group.n);
    let h_inv = matrix_inverse(&sys.h)?;
    let rev = sys.reversed();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let u = random_window(sys, k, &mut rng);
        let lhs = rev.solve(k as i64, &e, &u.reversed())?;
        let mut rhs = matrix_inverse(&sys.solve(k as i64, &e, &u)?)?;
        for _ in 0..k {
            rhs = h_inv.matmul(&rhs).matmul(&sys.h);
        }
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    Ok(CheckReport::new(
        "duality",
        samples,
        worst,
        "controls mapped by sequence reversal",
    ))
}

fn random_window(sys: &SystemSpec, k: usize, rng: &mut impl Rng) -> ControlSequence {
    let steps = (0..k).map(|_| sys.control_box.sample(rng)).collect();
    ControlSequence::new(steps, sys.control_dim).expect("sampled window shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::lie::{adjoint_matrix, group_membership};

    #[test]
    fn jacobian_of_unipotent_example_at_zero() {
        // Oracle: at u* = 0 the column for step t is Ad(h^(k-1-t)) applied
        // to the coordinates of b'(0) = H - E + F, by the product formula.
        // With Ad(h) acting as H -> H - 2E, E -> E, F -> H - E + F this
        // gives the columns (3,-9,1), (2,-4,1), (1,-1,1) in time order.
        let sys = catalog::unipotent_example();
        let u = ControlSequence::zeros(3, 1);
        let jac = control_jacobian(&sys, &Matrix::identity(2), &u).unwrap();
        let expected = Matrix::from_rows(&[
            vec![3.0, 2.0, 1.0],
            vec![-9.0, -4.0, -1.0],
            vec![1.0, 1.0, 1.0],
        ]);
        assert!(jac.approx_eq(&expected, 1e-12), "{:?}", jac.to_rows());
        assert_eq!(numerical_rank(&jac, DEFAULT_RANK_TOL), 3);
    }

    #[test]
    fn jacobian_columns_match_adjoint_oracle_on_random_systems() {
        let mut rng = catalog::rng(23);
        for _ in 0..20 {
            let sys = catalog::random_sl2_system(&mut rng);
            let k = 3;
            let u = ControlSequence::zeros(k, 1);
            let jac = control_jacobian(&sys, &Matrix::identity(2), &u).unwrap();
            // b'(0) in algebra coordinates via finite differences of b.
            let hstep = 1e-7;
            let bp = sys.b_matrix(&[hstep]).unwrap();
            let bm = sys.b_matrix(&[-hstep]).unwrap();
            let x = bp.sub(&bm).scale(1.0 / (2.0 * hstep));
            let x = AlgebraElement::from_matrix(sys.group, x).unwrap();
            let ad = adjoint_matrix(&sys.group, &sys.h).unwrap();
            let mut cols: Vec<Vec<f64>> = Vec::new();
            let mut v = x.coords.clone();
            cols.push(v.clone()); // step k-1
            for _ in 0..k - 1 {
                v = ad.apply(&v);
                cols.push(v.clone());
            }
            cols.reverse(); // time order
            for (c, col) in cols.iter().enumerate() {
                for r in 0..3 {
                    assert!(
                        (jac.get(r, c) - col[r]).abs() <= 1e-5 * (1.0 + col[r].abs()),
                        "column {c} row {r}: {} vs {}",
                        jac.get(r, c),
                        col[r]
                    );
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences_away_from_zero() {
        let mut rng = catalog::rng(31);
        for _ in 0..20 {
            let sys = catalog::random_sl2_system(&mut rng);
            let k = rng.gen_range(1..=4usize);
            let u = catalog::random_sequence(&sys, k, &mut rng);
            let g = catalog::random_group_element(&sys.group, &mut rng);
            let jac = control_jacobian(&sys, &g, &u).unwrap();
            let (endpoint, _) = endpoint_and_jacobian(&sys, &g, &u).unwrap();
            let e_inv = matrix_inverse(&endpoint).unwrap();
            let hstep = 1e-6;
            for l in 0..k {
                let mut up = u.steps().to_vec();
                let mut dn = u.steps().to_vec();
                up[l][0] += hstep;
                dn[l][0] -= hstep;
                let pu = sys
                    .solve(k as i64, &g, &ControlSequence::new(up, 1).unwrap())
                    .unwrap();
                let pd = sys
                    .solve(k as i64, &g, &ControlSequence::new(dn, 1).unwrap())
                    .unwrap();
                let mut fd = e_inv.matmul(&pu.sub(&pd).scale(1.0 / (2.0 * hstep)));
                // FD truncation leaves a tiny trace; project it off before
                // reading algebra coordinates.
                let tr = (fd.get(0, 0) + fd.get(1, 1)) / 2.0;
                fd.set(0, 0, fd.get(0, 0) - tr);
                fd.set(1, 1, fd.get(1, 1) - tr);
                let fd = AlgebraElement::from_matrix(sys.group, fd).unwrap();
                for r in 0..3 {
                    assert!(
                        (jac.get(r, l) - fd.coords[r]).abs() <= 1e-5 * (1.0 + fd.coords[r].abs()),
                        "step {l} row {r}: dual {} vs fd {}",
                        jac.get(r, l),
                        fd.coords[r]
                    );
                }
            }
        }
    }

    #[test]
    fn certificates_for_the_named_examples() {
        for sys in [catalog::unipotent_example(), catalog::trig_example_corrected()] {
            let k_min = minimal_horizon(&sys);
            assert_eq!(k_min, 3);
            let cert = interior_certificate(&sys, k_min, 8, DEFAULT_RANK_TOL).unwrap().unwrap();
            assert_eq!(cert.k, 3);
            assert_eq!(cert.rank, 3);
            assert!(cert.u_star.strictly_inside(&sys.control_box));
            assert!(cert.endpoint.approx_eq(&Matrix::identity(2), 1e-12));
        }
        // The hyperbolic drift mixes all three eigendirections into b'(0),
        // so it certifies at the same horizon.
        let cert = interior_certificate(&catalog::hyperbolic_example(), 3, 8, DEFAULT_RANK_TOL)
            .unwrap()
            .unwrap();
        assert_eq!(cert.k, 3);
    }

    #[test]
    fn horizon_search_below_the_dimension_count_is_rejected() {
        // Three algebra directions from one control per step need at least
        // three steps; asking for fewer is a caller error, not a quiet no.
        let sys = catalog::unipotent_example();
        assert!(matches!(
            interior_certificate(&sys, 2, 8, DEFAULT_RANK_TOL),
            Err(ReachError::HorizonTooShort { k_min: 2, required: 3 })
        ));
    }

    #[test]
    fn no_certificate_is_inconclusive_not_an_error() {
        // Shear-only control factor moves a single algebra direction while
        // the drift is trivial: rank never exceeds 1.
        let sys = crate::system::SystemSpec::new(
            GroupSpec::new(crate::lie::GroupKind::SL, 2).unwrap(),
            Matrix::identity(2),
            vec![
                vec![
                    crate::expr::parse_expression("1", 1).unwrap(),
                    crate::expr::parse_expression("u1", 1).unwrap(),
                ],
                vec![
                    crate::expr::parse_expression("0", 1).unwrap(),
                    crate::expr::parse_expression("1", 1).unwrap(),
                ],
            ],
            crate::system::ControlBox::symmetric(0.5, 1),
        )
        .unwrap();
        assert!(interior_certificate(&sys, 3, 6, DEFAULT_RANK_TOL).unwrap().is_none());
    }

    #[test]
    fn constant_control_factor_is_completely_degenerate() {
        // b(u) = e for every u: the endpoint never moves, the Jacobian is
        // identically zero, and no horizon certifies anything.
        let sys = crate::system::SystemSpec::new(
            GroupSpec::new(crate::lie::GroupKind::SL, 2).unwrap(),
            Matrix::identity(2),
            vec![
                vec![
                    crate::expr::parse_expression("1", 1).unwrap(),
                    crate::expr::parse_expression("0", 1).unwrap(),
                ],
                vec![
                    crate::expr::parse_expression("0", 1).unwrap(),
                    crate::expr::parse_expression("1", 1).unwrap(),
                ],
            ],
            crate::system::ControlBox::symmetric(0.5, 1),
        )
        .unwrap();
        let u = ControlSequence::zeros(3, 1);
        let jac = control_jacobian(&sys, &Matrix::identity(2), &u).unwrap();
        assert_eq!(jac.frobenius_norm(), 0.0);
        assert_eq!(numerical_rank(&jac, DEFAULT_RANK_TOL), 0);
        assert!(!is_regular_pair(&sys, &Matrix::identity(2), &u, DEFAULT_RANK_TOL).unwrap());
        assert!(interior_certificate(&sys, 3, 6, DEFAULT_RANK_TOL).unwrap().is_none());
    }

    #[test]
    fn regular_pair_demands_interior_controls() {
        let sys = catalog::unipotent_example();
        let boundary = ControlSequence::new(vec![vec![0.5], vec![0.0], vec![0.0]], 1).unwrap();
        assert!(matches!(
            is_regular_pair(&sys, &Matrix::identity(2), &boundary, DEFAULT_RANK_TOL),
            Err(ReachError::NotInterior)
        ));
        let interior = ControlSequence::new(vec![vec![0.1], vec![-0.2], vec![0.3]], 1).unwrap();
        assert!(is_regular_pair(&sys, &Matrix::identity(2), &interior, DEFAULT_RANK_TOL).unwrap());
        // One step of one control cannot span a three-dimensional algebra.
        let single = ControlSequence::new(vec![vec![0.1]], 1).unwrap();
        assert!(!is_regular_pair(&sys, &Matrix::identity(2), &single, DEFAULT_RANK_TOL).unwrap());
    }

    #[test]
    fn steering_reaches_nearby_targets() {
        let sys = catalog::unipotent_example();
        let mut rng = catalog::rng(99);
        for _ in 0..50 {
            let coords: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = AlgebraElement::from_coords(sys.group, &coords);
            let target = crate::linalg::matrix_exponential(&x.mat.scale(1e-4 / x.norm().max(1e-12)));
            let (u, residual) = steer_to_target(&sys, 3, &target, 1e-10, 50).unwrap();
            assert!(residual <= 1e-8);
            let reached = sys.solve(3, &Matrix::identity(2), &u).unwrap();
            assert!(reached.max_abs_diff(&target) <= 1e-8);
        }
    }

    #[test]
    fn grid_with_three_points_is_the_spec_example() {
        // k = 1, 3 samples: controls -1/2, 0, 1/2 in order, so the points
        // are b(-1/2), e, b(1/2).
        let sys = catalog::unipotent_example();
        let sample = sample_reachable(&sys, 1, SampleStrategy::Grid, 3, 0, 1).unwrap();
        assert_eq!(sample.generators.len(), 3);
        assert_eq!(sample.generators[0].get(0), &[-0.5]);
        assert_eq!(sample.generators[1].get(0), &[0.0]);
        assert_eq!(sample.generators[2].get(0), &[0.5]);
        assert!(sample.points[1].approx_eq(&Matrix::identity(2), 1e-15));
        let b = sys.b_matrix(&[-0.5]).unwrap();
        assert!(sample.points[0].approx_eq(&b, 1e-15));
    }

    #[test]
    fn truncated_grid_still_contains_the_identity() {
        let sys = catalog::unipotent_example();
        // 3 axes, budget 7: lexicographic truncation would drop the middle
        // all-zero tuple, so it must be forced back in.
        let sample = sample_reachable(&sys, 3, SampleStrategy::Grid, 7, 0, 1).unwrap();
        let zero = ControlSequence::zeros(3, 1);
        assert!(sample.generators.iter().any(|g| g == &zero));
        assert!(sample
            .points
            .iter()
            .any(|p| p.approx_eq(&Matrix::identity(2), 1e-12)));
    }

    #[test]
    fn sampling_budget_is_enforced() {
        let sys = catalog::unipotent_example();
        assert!(matches!(
            sample_reachable(&sys, 2, SampleStrategy::Grid, SAMPLE_BUDGET + 1, 0, 1),
            Err(ReachError::Refusal { .. })
        ));
    }

    #[test]
    fn monte_carlo_is_seed_deterministic_and_worker_stable() {
        let sys = catalog::unipotent_example();
        let a = sample_reachable(&sys, 3, SampleStrategy::MonteCarlo, 64, 12, 1).unwrap();
        let b = sample_reachable(&sys, 3, SampleStrategy::MonteCarlo, 64, 12, 4).unwrap();
        let c = sample_reachable(&sys, 3, SampleStrategy::MonteCarlo, 64, 12, 3).unwrap();
        assert_eq!(reach_csv(&a), reach_csv(&b));
        assert_eq!(reach_csv(&a), reach_csv(&c));
        let other_seed = sample_reachable(&sys, 3, SampleStrategy::MonteCarlo, 64, 13, 1).unwrap();
        assert_ne!(reach_csv(&a), reach_csv(&other_seed));
        for p in &a.points {
            assert!(group_membership(&sys.group, p) <= 1e-7);
        }
    }

    #[test]
    fn csv_shape_and_quoting() {
        let sys = catalog::unipotent_example();
        let sample = sample_reachable(&sys, 2, SampleStrategy::Grid, 4, 0, 1).unwrap();
        let csv = reach_csv(&sample);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "k,seq,g11,g12,g21,g22");
        let first = lines.next().unwrap();
        assert!(first.starts_with("2,"));
        // m = 1: no comma inside the seq field, so no quoting.
        assert!(!first.contains('"'));
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert!(fields[1].contains(';'));
        // 17 significant digits everywhere.
        assert!(fields[2].contains('e'));
    }

    #[test]
    fn composition_and_duality_residuals_are_tiny() {
        let sys = catalog::unipotent_example();
        let comp = semigroup_check(&sys, 2, 3, 32, 5).unwrap();
        assert!(comp.passed, "max residual {}", comp.max_residual);
        assert_eq!(comp.name, "composition");
        assert_eq!(comp.samples, 32);
        let dual = duality_check(&sys, 4, 32, 5).unwrap();
        assert!(dual.passed, "max residual {}", dual.max_residual);
        assert!(dual.construction.contains("reversal"));
        let hyp = catalog::hyperbolic_example();
        assert!(semigroup_check(&hyp, 3, 2, 32, 5).unwrap().passed);
        assert!(duality_check(&hyp, 3, 32, 5).unwrap().passed);
    }
}
