//! Matrix Lie groups SL(n) and GL+(n), their algebras, and the two linear
//! representations of conjugation used everywhere downstream: the adjoint
//! action on the algebra in a fixed basis, and the ambient action on all of
//! gl(n) in row-major coordinates.
//!
//! Basis orders are fixed so reports are reproducible bit for bit:
//! sl(n) uses the diagonal differences H_k = E_kk - E_(k+1)(k+1) for
//! k = 1..n-1 followed by the off-diagonal units E_ij in row-major order
//! (for n = 2 that is H, E, F); gl(n) uses all E_ij in row-major order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{matrix_inverse, LinalgError, Matrix};

/// Default determinant tolerance for SL membership.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Trace tolerance accepted when reading a matrix into sl(n).
pub const TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Error)]
pub enum LieError {
    #[error("group dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("matrix is not in the group (membership residual {residual:.3e})")]
    NotInGroup { residual: f64 },
    #[error("matrix is not in the algebra (trace residual {residual:.3e})")]
    NotInAlgebra { residual: f64 },
    #[error("matrix has wrong shape: expected {expected}x{expected}")]
    WrongShape { expected: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    /// Special linear group: determinant one.
    SL,
    /// Orientation-preserving general linear group: positive determinant.
    GLplus,
}

/// Which matrix group a system lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupSpec {
    pub kind: GroupKind,
    pub n: usize,
}

impl GroupSpec {
    pub fn new(kind: GroupKind, n: usize) -> Result<Self, LieError> {
        if n < 2 {
            return Err(LieError::InvalidDimension(n));
        }
        Ok(GroupSpec { kind, n })
    }

    /// Dimension of the group (and its algebra).
    pub fn dim(&self) -> usize {
        match self.kind {
            GroupKind::SL => self.n * self.n - 1,
            GroupKind::GLplus => self.n * self.n,
        }
    }
}

/// Membership residual of `mat` in the group: |det - 1| for SL, zero for
/// GL+ when det > 0 and a value >= 1 otherwise (there is no meaningful
/// distance once the orientation flips).
pub fn group_membership(spec: &GroupSpec, mat: &Matrix) -> f64 {
    if !mat.is_square() || mat.rows() != spec.n {
        return f64::INFINITY;
    }
    let det = mat.determinant();
    match spec.kind {
        GroupKind::SL => (det - 1.0).abs(),
        GroupKind::GLplus => {
            if det > 0.0 {
                0.0
            } else {
                1.0 + det.abs()
            }
        }
    }
}

/// A group element: the matrix plus the spec it was checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub group: GroupSpec,
    pub mat: Matrix,
}

impl GroupElement {
    pub fn new(group: GroupSpec, mat: Matrix) -> Result<Self, LieError> {
        if !mat.is_square() || mat.rows() != group.n {
            return Err(LieError::WrongShape { expected: group.n });
        }
        let residual = group_membership(&group, &mat);
        if residual > MEMBERSHIP_TOL {
            return Err(LieError::NotInGroup { residual });
        }
        Ok(GroupElement { group, mat })
    }

    pub fn identity(group: GroupSpec) -> Self {
        GroupElement { group, mat: Matrix::identity(group.n) }
    }
}

/// An algebra element: the (projected) matrix plus its coordinates in the
/// module's fixed basis. Construction from a matrix tolerates a trace
/// residual up to 1e-10 for sl(n) and stores the traceless projection, so
/// coordinates and matrix agree to machine precision.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub group: GroupSpec,
    pub mat: Matrix,
    pub coords: Vec<f64>,
}

impl AlgebraElement {
    pub fn from_matrix(group: GroupSpec, mat: Matrix) -> Result<Self, LieError> {
        if !mat.is_square() || mat.rows() != group.n {
            return Err(LieError::WrongShape { expected: group.n });
        }
        if let GroupKind::SL = group.kind {
            let residual = mat.trace().abs();
            if residual > TRACE_TOL {
                return Err(LieError::NotInAlgebra { residual });
            }
        }
        let projected = project_to_algebra(&group, &mat);
        let coords = coords_unchecked(&group, &projected);
        Ok(AlgebraElement { group, mat: projected, coords })
    }

    pub fn from_coords(group: GroupSpec, coords: &[f64]) -> Self {
        assert_eq!(coords.len(), group.dim(), "coordinate length mismatch");
        let basis = algebra_basis(&group);
        let mut mat = Matrix::zeros(group.n, group.n);
        for (c, b) in coords.iter().zip(&basis) {
            mat = mat.add(&b.scale(*c));
        }
        AlgebraElement { group, mat, coords: coords.to_vec() }
    }

    pub fn norm(&self) -> f64 {
        self.mat.frobenius_norm()
    }
}

/// Removes the trace component for sl(n); identity for gl(n).
fn project_to_algebra(spec: &GroupSpec, mat: &Matrix) -> Matrix {
    match spec.kind {
        GroupKind::SL => {
            let shift = mat.trace() / spec.n as f64;
            let mut out = mat.clone();
            for i in 0..spec.n {
                out.set(i, i, out.get(i, i) - shift);
            }
            out
        }
        GroupKind::GLplus => mat.clone(),
    }
}

/// Coordinates of a matrix already known to lie in the algebra. Off-diagonal
/// coordinates are the entries themselves; for sl(n) the diagonal-difference
/// coordinates are the prefix sums of the diagonal, which is exact.
fn coords_unchecked(spec: &GroupSpec, mat: &Matrix) -> Vec<f64> {
    let n = spec.n;
    let mut coords = Vec::with_capacity(spec.dim());
    match spec.kind {
        GroupKind::SL => {
            let mut prefix = 0.0;
            for k in 0..n - 1 {
                prefix += mat.get(k, k);
                coords.push(prefix);
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        coords.push(mat.get(i, j));
                    }
                }
            }
        }
        GroupKind::GLplus => coords.extend_from_slice(mat.as_slice()),
    }
    coords
}

/// The fixed ordered basis of the algebra.
pub fn algebra_basis(spec: &GroupSpec) -> Vec<Matrix> {
    let n = spec.n;
    let mut basis = Vec::with_capacity(spec.dim());
    match spec.kind {
        GroupKind::SL => {
            for k in 0..n - 1 {
                let mut h = Matrix::zeros(n, n);
                h.set(k, k, 1.0);
                h.set(k + 1, k + 1, -1.0);
                basis.push(h);
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let mut e = Matrix::zeros(n, n);
                        e.set(i, j, 1.0);
                        basis.push(e);
                    }
                }
            }
        }
        GroupKind::GLplus => {
            for i in 0..n {
                for j in 0..n {
                    let mut e = Matrix::zeros(n, n);
                    e.set(i, j, 1.0);
                    basis.push(e);
                }
            }
        }
    }
    basis
}

/// Lie bracket [a, b] = ab - ba in the same algebra.
pub fn bracket(a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
    assert_eq!(a.group, b.group, "bracket needs a common algebra");
    let m = a.mat.matmul(&b.mat).sub(&b.mat.matmul(&a.mat));
    let projected = project_to_algebra(&a.group, &m);
    let coords = coords_unchecked(&a.group, &projected);
    AlgebraElement { group: a.group, mat: projected, coords }
}

/// Matrix of X -> h X h^-1 on the algebra, in the fixed basis. `h` needs to
/// be invertible but not itself a group element; conjugation preserves the
/// trace, so the action stays inside sl(n).
pub fn adjoint_matrix(spec: &GroupSpec, h: &Matrix) -> Result<Matrix, LieError> {
    if !h.is_square() || h.rows() != spec.n {
        return Err(LieError::WrongShape { expected: spec.n });
    }
    let h_inv = matrix_inverse(h)?;
    let basis = algebra_basis(spec);
    let dim = spec.dim();
    let mut out = Matrix::zeros(dim, dim);
    for (col, b) in basis.iter().enumerate() {
        let image = h.matmul(b).matmul(&h_inv);
        let projected = project_to_algebra(spec, &image);
        let coords = coords_unchecked(spec, &projected);
        for (row, &c) in coords.iter().enumerate() {
            out.set(row, col, c);
        }
    }
    Ok(out)
}

/// Matrix of ad_X = [X, -] on the algebra, in the fixed basis.
pub fn ad_matrix(x: &AlgebraElement) -> Matrix {
    let spec = x.group;
    let basis = algebra_basis(&spec);
    let dim = spec.dim();
    let mut out = Matrix::zeros(dim, dim);
    for (col, b) in basis.iter().enumerate() {
        let m = x.mat.matmul(b).sub(&b.matmul(&x.mat));
        let projected = project_to_algebra(&spec, &m);
        let coords = coords_unchecked(&spec, &projected);
        for (row, &c) in coords.iter().enumerate() {
            out.set(row, col, c);
        }
    }
    out
}

/// Matrix of X -> h X h^-1 on all of gl(n), in row-major E_ij coordinates.
/// This is the ambient differential of the drift automorphism at the
/// identity; its determinant is always 1.
pub fn ambient_differential(spec: &GroupSpec, h: &Matrix) -> Result<Matrix, LieError> {
    if !h.is_square() || h.rows() != spec.n {
        return Err(LieError::WrongShape { expected: spec.n });
    }
    let n = spec.n;
    let h_inv = matrix_inverse(h)?;
    let mut out = Matrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let col = i * n + j;
            let mut e = Matrix::zeros(n, n);
            e.set(i, j, 1.0);
            let image = h.matmul(&e).matmul(&h_inv);
            for (row, &v) in image.as_slice().iter().enumerate() {
                out.set(row, col, v);
            }
        }
    }
    Ok(out)
}
