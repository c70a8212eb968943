//! The controlled dynamics. A system on a matrix group G is the step map
//!
//! ```text
//! g  ->  b(u) * h * g * h^-1
//! ```
//!
//! with a fixed invertible conjugator `h` (the drift automorphism is
//! conjugation by `h`) and a control-dependent factor `b(u)` given entrywise
//! by expressions with `b(0) = e`. Multi-step solving, the inverse step, and
//! the time-reversed system all live here.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{evaluate, EvalError, Expr};
use crate::lie::{group_membership, GroupSpec, LieError};
use crate::linalg::{matrix_inverse, LinalgError, Matrix};

/// b(0) must reproduce the identity to this tolerance.
pub const B0_TOL: f64 = 1e-9;

/// Sampled membership residual allowed for b(u) during validation.
pub const VALIDATION_MEMBERSHIP_TOL: f64 = 1e-9;

/// Membership drift after a single step that marks a system ill-posed.
pub const STEP_DRIFT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Error)]
pub enum SystemError {
    #[error("control vector has length {got}, expected {expected}")]
    ControlDim { got: usize, expected: usize },
    #[error("control lies outside the control box")]
    OutsideBox,
    #[error("control sequence too short: need {need} steps, have {have}")]
    SequenceTooShort { need: usize, have: usize },
    #[error("membership drift after step: residual {residual:.3e}")]
    MembershipDrift { residual: f64 },
    #[error("control box bounds must satisfy lo < 0 < hi componentwise")]
    BadBox,
    #[error("b entries must form an {n}x{n} grid")]
    BadGrid { n: usize },
    #[error("state matrix must be {n}x{n}")]
    BadState { n: usize },
    #[error("expression evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Compact box of admissible controls; every component range straddles zero
/// so the uncontrolled step is always admissible.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl ControlBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, SystemError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(SystemError::BadBox);
        }
        if lo.iter().zip(&hi).any(|(&l, &h)| !(l < 0.0 && 0.0 < h)) {
            return Err(SystemError::BadBox);
        }
        Ok(ControlBox { lo, hi })
    }

    /// Symmetric box [-r, r]^dim.
    pub fn symmetric(r: f64, dim: usize) -> Self {
        ControlBox::new(vec![-r; dim], vec![r; dim]).expect("r > 0")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&x, (&l, &h))| l <= x && x <= h)
    }

    pub fn strictly_contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&x, (&l, &h))| l < x && x < h)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| rng.gen_range(l..=h))
            .collect()
    }
}

/// Finite window of controls; index 0 is applied first.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence {
    steps: Vec<Vec<f64>>,
    dim: usize,
}

impl ControlSequence {
    pub fn new(steps: Vec<Vec<f64>>, dim: usize) -> Result<Self, SystemError> {
        for s in &steps {
            if s.len() != dim {
                return Err(SystemError::ControlDim { got: s.len(), expected: dim });
            }
        }
        Ok(ControlSequence { steps, dim })
    }

    pub fn zeros(len: usize, dim: usize) -> Self {
        ControlSequence { steps: vec![vec![0.0; dim]; len], dim }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, t: usize) -> &[f64] {
        &self.steps[t]
    }

    pub fn steps(&self) -> &[Vec<f64>] {
        &self.steps
    }

    /// Same controls in the opposite order.
    pub fn reversed(&self) -> Self {
        let mut steps = self.steps.clone();
        steps.reverse();
        ControlSequence { steps, dim: self.dim }
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &ControlSequence) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut steps = self.steps.clone();
        steps.extend(other.steps.iter().cloned());
        ControlSequence { steps, dim: self.dim }
    }

    pub fn inside(&self, b: &ControlBox) -> bool {
        self.steps.iter().all(|u| b.contains(u))
    }

    pub fn strictly_inside(&self, b: &ControlBox) -> bool {
        self.steps.iter().all(|u| b.strictly_contains(u))
    }
}

/// One validation finding; a failed check is data, not an error.
#[derive(Debug, Clone)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
    pub detail: String,
}

/// Outcome of `SystemSpec::validate`.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
    pub samples: usize,
    pub seed: u64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// A discrete-time linear system on a matrix group.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub group: GroupSpec,
    pub h: Matrix,
    pub b_entries: Vec<Vec<Expr>>,
    pub control_box: ControlBox,
    pub control_dim: usize,
}

impl SystemSpec {
    /// Shape-level construction checks. Whether the system is well posed
    /// (b(0) = e, membership, invertible h) is `validate`'s job, so that a
    /// defective description can still be loaded and diagnosed.
    pub fn new(
        group: GroupSpec,
        h: Matrix,
        b_entries: Vec<Vec<Expr>>,
        control_box: ControlBox,
    ) -> Result<Self, SystemError> {
        let n = group.n;
        if !h.is_square() || h.rows() != n {
            return Err(SystemError::BadState { n });
        }
        if b_entries.len() != n || b_entries.iter().any(|row| row.len() != n) {
            return Err(SystemError::BadGrid { n });
        }
        let control_dim = control_box.dim();
        Ok(SystemSpec { group, h, b_entries, control_box, control_dim })
    }

    /// Evaluates the control factor b(u).
    pub fn b_matrix(&self, u: &[f64]) -> Result<Matrix, SystemError> {
        if u.len() != self.control_dim {
            return Err(SystemError::ControlDim { got: u.len(), expected: self.control_dim });
        }
        let n = self.group.n;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, evaluate(&self.b_entries[i][j], u)?);
            }
        }
        Ok(out)
    }

    /// Drift automorphism g -> h g h^-1.
    pub fn drift(&self, g: &Matrix) -> Result<Matrix, SystemError> {
        let h_inv = matrix_inverse(&self.h)?;
        Ok(self.h.matmul(g).matmul(&h_inv))
    }

    /// Checks b(0) = e, sampled membership of b(u), and invertibility of h.
    /// Every failure is a report entry; the report never errors.
    pub fn validate(&self, samples: usize, seed: u64) -> ValidationReport {
        let n = self.group.n;
        let mut checks = Vec::new();

        let zero = vec![0.0; self.control_dim];
        match self.b_matrix(&zero) {
            Ok(b0) => {
                let residual = b0.max_abs_diff(&Matrix::identity(n));
                checks.push(ValidationCheck {
                    name: "b0_identity",
                    passed: residual <= B0_TOL,
                    residual,
                    detail: if residual <= B0_TOL {
                        "b(0) reproduces the identity".into()
                    } else {
                        format!(
                            "b(0) differs from the identity by {residual:.3e}; b(0) = {:?}",
                            b0.to_rows()
                        )
                    },
                });
            }
            Err(e) => checks.push(ValidationCheck {
                name: "b0_identity",
                passed: false,
                residual: f64::INFINITY,
                detail: format!("b(0) could not be evaluated: {e}"),
            }),
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut max_residual: f64 = 0.0;
        let mut failures = Vec::new();
        for _ in 0..samples {
            let u = self.control_box.sample(&mut rng);
            match self.b_matrix(&u) {
                Ok(b) => {
                    let r = group_membership(&self.group, &b);
                    if r > max_residual {
                        max_residual = r;
                    }
                }
                Err(e) => failures.push(format!("b({u:?}) failed: {e}")),
            }
        }
        checks.push(ValidationCheck {
            name: "b_membership",
            passed: failures.is_empty() && max_residual <= VALIDATION_MEMBERSHIP_TOL,
            residual: max_residual,
            detail: if failures.is_empty() {
                format!("max membership residual {max_residual:.3e} over {samples} samples")
            } else {
                failures.join("; ")
            },
        });

        let (h_ok, h_det) = match matrix_inverse(&self.h) {
            Ok(_) => (true, self.h.determinant().abs()),
            Err(_) => (false, self.h.determinant().abs()),
        };
        checks.push(ValidationCheck {
            name: "h_invertible",
            passed: h_ok,
            residual: h_det,
            detail: format!("|det h| = {h_det:.3e}"),
        });

        ValidationReport { checks, samples, seed }
    }

    /// One forward step b(u) * h * g * h^-1. The control must lie in the
    /// box; membership drift beyond 1e-6 signals an ill-posed description
    /// and is an error.
    pub fn step(&self, g: &Matrix, u: &[f64]) -> Result<Matrix, SystemError> {
        if !self.control_box.contains(u) {
            return Err(SystemError::OutsideBox);
        }
        let next = self.b_matrix(u)?.matmul(&self.drift(g)?);
        let residual = group_membership(&self.group, &next);
        if residual > STEP_DRIFT_TOL {
            return Err(SystemError::MembershipDrift { residual });
        }
        Ok(next)
    }

    /// One inverse step h^-1 * (b(u)^-1 * g) * h, undoing `step` with the
    /// same control.
    pub fn step_inverse(&self, g: &Matrix, u: &[f64]) -> Result<Matrix, SystemError> {
        if !self.control_box.contains(u) {
            return Err(SystemError::OutsideBox);
        }
        let b_inv = matrix_inverse(&self.b_matrix(u)?)?;
        let h_inv = matrix_inverse(&self.h)?;
        let next = h_inv.matmul(&b_inv.matmul(g)).matmul(&self.h);
        let residual = group_membership(&self.group, &next);
        if residual > STEP_DRIFT_TOL {
            return Err(SystemError::MembershipDrift { residual });
        }
        Ok(next)
    }

    /// Multi-step solution from `g`.
    ///
    /// * `k > 0`: applies `step` with `u[0], ..., u[k-1]` in order.
    /// * `k = 0`: returns `g`.
    /// * `k < 0`: applies `step_inverse` walking the window from its end,
    ///   i.e. the last |k| entries are read as the controls at times
    ///   -1, -2, ..., k (window position i is time index i - len). With the
    ///   same window, `solve(-k, solve(k, g, u), u) = g`.
    pub fn solve(&self, k: i64, g: &Matrix, u: &ControlSequence) -> Result<Matrix, SystemError> {
        if !g.is_square() || g.rows() != self.group.n {
            return Err(SystemError::BadState { n: self.group.n });
        }
        if k == 0 {
            return Ok(g.clone());
        }
        let need = k.unsigned_abs() as usize;
        if u.len() < need {
            return Err(SystemError::SequenceTooShort { need, have: u.len() });
        }
        let mut state = g.clone();
        if k > 0 {
            for t in 0..need {
                state = self.step(&state, u.get(t))?;
            }
        } else {
            for t in (u.len() - need..u.len()).rev() {
                state = self.step_inverse(&state, u.get(t))?;
            }
        }
        Ok(state)
    }

    /// The time-reversed system.
    pub fn reversed(&self) -> ReversedSystem<'_> {
        ReversedSystem { base: self }
    }
}

/// Time reversal of a system: step map g -> h^-1 (b(u)^-1 g) h, whose drift
/// automorphism is conjugation by h^-1. Its forward step is exactly the
/// base system's inverse step, so reachability of the reversed system is
/// controllability-to-identity of the original.
#[derive(Debug, Clone, Copy)]
pub struct ReversedSystem<'a> {
    base: &'a SystemSpec,
}

impl ReversedSystem<'_> {
    pub fn base(&self) -> &SystemSpec {
        self.base
    }

    /// Control factor of the reversed system: h^-1 b(u)^-1 h.
    pub fn b_matrix(&self, u: &[f64]) -> Result<Matrix, SystemError> {
        let b_inv = matrix_inverse(&self.base.b_matrix(u)?)?;
        let h_inv = matrix_inverse(&self.base.h)?;
        Ok(h_inv.matmul(&b_inv).matmul(&self.base.h))
    }

    pub fn step(&self, g: &Matrix, u: &[f64]) -> Result<Matrix, SystemError> {
        self.base.step_inverse(g, u)
    }

    pub fn step_inverse(&self, g: &Matrix, u: &[f64]) -> Result<Matrix, SystemError> {
        self.base.step(g, u)
    }

    /// Same three-case convention as `SystemSpec::solve`, with the reversed
    /// step map.
    pub fn solve(&self, k: i64, g: &Matrix, u: &ControlSequence) -> Result<Matrix, SystemError> {
        if !g.is_square() || g.rows() != self.base.group.n {
            return Err(SystemError::BadState { n: self.base.group.n });
        }
        if k == 0 {
            return Ok(g.clone());
        }
        let need = k.unsigned_abs() as usize;
        if u.len() < need {
            return Err(SystemError::SequenceTooShort { need, have: u.len() });
        }
        let mut state = g.clone();
        if k > 0 {
            for t in 0..need {
                state = self.step(&state, u.get(t))?;
            }
        } else {
            for t in (u.len() - need..u.len()).rev() {
                state = self.step_inverse(&state, u.get(t))?;
            }
        }
        Ok(state)
    }
}
