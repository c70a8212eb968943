//! Spectral analysis of the drift differential. The conjugation drift acts
//! linearly on the algebra (adjoint representation) and on all of gl(n)
//! (ambient representation); its eigenvalues split the algebra into the
//! expanding, unimodular and contracting generalized eigenspaces
//!
//! ```text
//! g = g+ (|lambda| > 1)  +  g0 (|lambda| = 1)  +  g- (|lambda| < 1)
//! ```
//!
//! which drive the controllability verdict. Also here: the closed-form
//! eigenvalues of the 2x2 ambient action, the inner/outer factorization of
//! the drift through exp(ad_W), and exponential sampling of the subgroups
//! attached to each part.

use rand::Rng;
use thiserror::Error;

use crate::lie::{
    ad_matrix, adjoint_matrix, algebra_basis, ambient_differential, AlgebraElement, GroupElement,
    GroupKind, GroupSpec, LieError,
};
use crate::linalg::{
    characteristic_polynomial, least_squares, matrix_exponential, matrix_inverse, matrix_log,
    kernel_basis, polynomial_roots, ComplexScalar, LinalgError, Matrix,
};
use crate::system::SystemSpec;

/// Default tolerance around |lambda| = 1 for the unimodular tag.
pub const DEFAULT_UNIMODULAR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Error)]
pub enum SpectralError {
    #[error("closed-form eigenvalues require an invertible 2x2 conjugator")]
    NotTwoByTwo,
    #[error("drift differential has an eigenvalue on the closed negative real axis")]
    NegativeRealAxis,
    #[error("subgroup sampling needs an algebra-representation report")]
    RepresentationMismatch,
    #[error("the requested spectral part is empty")]
    EmptyPart,
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Which linear action of the drift the report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// On all of gl(n), row-major coordinates; dimension n^2.
    Ambient,
    /// On the group's algebra in its fixed basis.
    Algebra,
}

impl Representation {
    pub fn name(self) -> &'static str {
        match self {
            Representation::Ambient => "ambient",
            Representation::Algebra => "algebra",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralClass {
    Expanding,
    Unimodular,
    Contracting,
}

impl SpectralClass {
    pub fn name(self) -> &'static str {
        match self {
            SpectralClass::Expanding => "expanding",
            SpectralClass::Unimodular => "unimodular",
            SpectralClass::Contracting => "contracting",
        }
    }
}

/// One eigenvalue with its algebraic multiplicity and modulus tag.
#[derive(Debug, Clone)]
pub struct SpectralEigenvalue {
    pub value: ComplexScalar,
    pub multiplicity: usize,
    pub class: SpectralClass,
}

/// Eigen-decomposition of the drift differential in one representation.
/// Part bases are generalized eigenspace bases (orthonormal per eigenvalue
/// group), concatenated in eigenvalue order inside each part.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub representation: Representation,
    /// Carrier of the basis elements: the group's own algebra for the
    /// algebra representation, gl(n) for the ambient one.
    pub carrier: GroupSpec,
    pub tol_unimodular: f64,
    pub dfo_matrix: Matrix,
    pub eigenvalues: Vec<SpectralEigenvalue>,
    pub basis_plus: Vec<AlgebraElement>,
    pub basis_zero: Vec<AlgebraElement>,
    pub basis_minus: Vec<AlgebraElement>,
}

impl SpectralReport {
    pub fn part(&self, class: SpectralClass) -> &[AlgebraElement] {
        match class {
            SpectralClass::Expanding => &self.basis_plus,
            SpectralClass::Unimodular => &self.basis_zero,
            SpectralClass::Contracting => &self.basis_minus,
        }
    }

    /// Worst deviation of the spectrum from the unit circle.
    pub fn unimodular_margin(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| (e.value.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn all_unimodular(&self) -> bool {
        self.eigenvalues
            .iter()
            .all(|e| e.class == SpectralClass::Unimodular)
    }

    /// Block matrix M of the drift on a part and the invariance residual
    /// |dfo B - B M|_F, where B stacks the part basis coordinates as
    /// columns. Empty parts have no block.
    pub fn part_block(&self, class: SpectralClass) -> Option<(Matrix, f64)> {
        let part = self.part(class);
        if part.is_empty() {
            return None;
        }
        let dim = self.dfo_matrix.rows();
        let d = part.len();
        let b = Matrix::from_fn(dim, d, |i, j| part[j].coords[i]);
        let image = self.dfo_matrix.matmul(&b);
        let mut m = Matrix::zeros(d, d);
        for j in 0..d {
            let (col, _) = least_squares(&b, &image.column(j));
            m.set_column(j, &col);
        }
        let residual = image.sub(&b.matmul(&m)).frobenius_norm();
        Some((m, residual))
    }
}

/// The drift differential matrix for a representation.
pub fn drift_differential(
    group: &GroupSpec,
    h: &Matrix,
    representation: Representation,
) -> Result<Matrix, SpectralError> {
    let m = match representation {
        Representation::Ambient => ambient_differential(group, h)?,
        Representation::Algebra => adjoint_matrix(group, h)?,
    };
    Ok(m)
}

/// Full spectral report for a system's drift.
pub fn spectral_report(
    sys: &SystemSpec,
    representation: Representation,
    tol_unimodular: f64,
) -> Result<SpectralReport, SpectralError> {
    spectral_report_of(&sys.group, &sys.h, representation, tol_unimodular)
}

/// Full spectral report for conjugation by `h` on the chosen representation.
pub fn spectral_report_of(
    group: &GroupSpec,
    h: &Matrix,
    representation: Representation,
    tol_unimodular: f64,
) -> Result<SpectralReport, SpectralError> {
    let dfo = drift_differential(group, h, representation)?;
    let carrier = match representation {
        Representation::Algebra => *group,
        Representation::Ambient => GroupSpec::new(GroupKind::GLplus, group.n).expect("n >= 2"),
    };
    let dim = dfo.rows();
    let roots = polynomial_roots(&characteristic_polynomial(&dfo)?)?;
    let groups = group_roots(&roots);

    let mut eigenvalues = Vec::new();
    let mut basis_plus = Vec::new();
    let mut basis_zero = Vec::new();
    let mut basis_minus = Vec::new();

    for g in &groups {
        let class = classify(g.value.norm(), tol_unimodular);
        // Real quadratic (or linear) factor of this eigenvalue group,
        // iterated to full algebraic multiplicity: its kernel is the
        // generalized eigenspace.
        let factor = if g.value.im == 0.0 {
            let mut f = dfo.clone();
            for i in 0..dim {
                f.set(i, i, f.get(i, i) - g.value.re);
            }
            f
        } else {
            let mut f = dfo.matmul(&dfo);
            let two_re = 2.0 * g.value.re;
            let sq = g.value.norm_sqr();
            for i in 0..dim {
                for j in 0..dim {
                    let mut v = f.get(i, j) - two_re * dfo.get(i, j);
                    if i == j {
                        v += sq;
                    }
                    f.set(i, j, v);
                }
            }
            f
        };
        let space_dim = if g.value.im == 0.0 { g.count } else { 2 * g.count };
        let mut power = factor.clone();
        for _ in 1..g.count {
            power = power.matmul(&factor);
            let scale = power.max_abs();
            if scale > 0.0 {
                power = power.scale(1.0 / scale);
            }
        }
        let kernel = kernel_basis(&power, space_dim);
        let elems: Vec<AlgebraElement> = kernel
            .iter()
            .map(|v| AlgebraElement::from_coords(carrier, v))
            .collect();
        match class {
            SpectralClass::Expanding => basis_plus.extend(elems),
            SpectralClass::Unimodular => basis_zero.extend(elems),
            SpectralClass::Contracting => basis_minus.extend(elems),
        }
        eigenvalues.push(SpectralEigenvalue {
            value: g.value,
            multiplicity: g.count,
            class,
        });
        if g.value.im != 0.0 {
            eigenvalues.push(SpectralEigenvalue {
                value: g.value.conj(),
                multiplicity: g.count,
                class,
            });
        }
    }

    Ok(SpectralReport {
        representation,
        carrier,
        tol_unimodular,
        dfo_matrix: dfo,
        eigenvalues,
        basis_plus,
        basis_zero,
        basis_minus,
    })
}

fn classify(modulus: f64, tol: f64) -> SpectralClass {
    if (modulus - 1.0).abs() <= tol {
        SpectralClass::Unimodular
    } else if modulus > 1.0 {
        SpectralClass::Expanding
    } else {
        SpectralClass::Contracting
    }
}

struct RootGroup {
    value: ComplexScalar,
    /// Copies of `value` itself (a conjugate pair counts once here).
    count: usize,
}

/// Collapses the sorted root list into distinct values with multiplicity,
/// keeping only the upper-half-plane member of each conjugate pair.
fn group_roots(roots: &[ComplexScalar]) -> Vec<RootGroup> {
    let scale = 1.0 + roots.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut groups: Vec<RootGroup> = Vec::new();
    for &r in roots {
        if r.im < 0.0 {
            continue; // covered by its conjugate partner
        }
        match groups
            .iter_mut()
            .find(|g| (g.value - r).norm() <= 1e-8 * scale)
        {
            Some(g) => g.count += 1,
            None => groups.push(RootGroup { value: r, count: 1 }),
        }
    }
    groups
}

/// Closed-form eigenvalues of the ambient 2x2 action besides the double
/// eigenvalue 1, ordered (smaller, larger) by real part then modulus. Their
/// product is 1 for every invertible h.
pub fn lambda_formulas(h: &Matrix) -> Result<(ComplexScalar, ComplexScalar), SpectralError> {
    if !h.is_square() || h.rows() != 2 {
        return Err(SpectralError::NotTwoByTwo);
    }
    let (a, b, c, d) = (h.get(0, 0), h.get(0, 1), h.get(1, 0), h.get(1, 1));
    let det = a * d - b * c;
    if det.abs() < 1e-12 {
        return Err(SpectralError::Lie(LieError::Linalg(LinalgError::Singular {
            abs_det: det.abs(),
        })));
    }
    let disc = a * a - 2.0 * a * d + 4.0 * b * c + d * d;
    let sq = if disc >= 0.0 {
        ComplexScalar::new(disc.sqrt(), 0.0)
    } else {
        ComplexScalar::new(0.0, (-disc).sqrt())
    };
    let trace = a + d;
    let base = ComplexScalar::new(a * a + 2.0 * b * c + d * d, 0.0);
    let den = 2.0 * det;
    let l1 = (base - sq * trace) / den;
    let l2 = (base + sq * trace) / den;
    // Deterministic order: ascending real part, then modulus.
    if (l2.re, l2.norm()) < (l1.re, l1.norm()) {
        Ok((l2, l1))
    } else {
        Ok((l1, l2))
    }
}

/// Inner/outer factorization data for the drift on the algebra: W with
/// ad_W matching log(dfo) in the least-squares sense, the inner factor
/// exp(ad_W), and what is left over.
#[derive(Debug, Clone)]
pub struct MurakamiFactor {
    pub w: AlgebraElement,
    /// exp(ad_W) on the algebra.
    pub inner_matrix: Matrix,
    /// dfo * exp(ad_W)^-1.
    pub residual_outer: Matrix,
    /// Distance of the outer factor from the identity.
    pub residual_norm: f64,
    /// Set when the least-squares fit of ad_W to log(dfo) leaves a residual
    /// above 1e-6: the drift is then not (numerically) inner.
    pub degraded: bool,
}

/// Factors the algebra drift through an inner automorphism: takes the
/// principal log of the adjoint action (which requires its spectrum off the
/// closed negative real axis), fits W with ad_W = log by least squares over
/// the basis, and reports exp(ad_W) together with the leftover outer factor.
pub fn murakami_factor(group: &GroupSpec, h: &Matrix) -> Result<MurakamiFactor, SpectralError> {
    let dfo = adjoint_matrix(group, h)?;
    let roots = polynomial_roots(&characteristic_polynomial(&dfo)?)?;
    let scale = 1.0 + roots.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if roots
        .iter()
        .any(|z| z.im.abs() <= 1e-9 * scale && z.re <= 1e-12 * scale)
    {
        return Err(SpectralError::NegativeRealAxis);
    }
    let log = matrix_log(&dfo)?;
    let dim = group.dim();
    let basis = algebra_basis(group);
    // Columns: vectorized ad matrices of the basis elements.
    let mut s = Matrix::zeros(dim * dim, dim);
    for (col, b) in basis.iter().enumerate() {
        let elem = AlgebraElement::from_matrix(*group, b.clone()).expect("basis is in the algebra");
        let ad = ad_matrix(&elem);
        for (row, &v) in ad.as_slice().iter().enumerate() {
            s.set(row, col, v);
        }
    }
    let (w_coords, fit_residual) = least_squares(&s, log.as_slice());
    let degraded = fit_residual > 1e-6;
    let w = AlgebraElement::from_coords(*group, &w_coords);
    let inner_matrix = matrix_exponential(&ad_matrix(&w));
    let residual_outer = dfo.matmul(&matrix_inverse(&inner_matrix)?);
    let residual_norm = residual_outer
        .sub(&Matrix::identity(dim))
        .frobenius_norm();
    Ok(MurakamiFactor { w, inner_matrix, residual_outer, residual_norm, degraded })
}

/// Exponentials of seeded random elements in the span of a part's basis.
/// Only meaningful for algebra-representation reports, where exp lands in
/// the group; the requested part must be nonempty.
pub fn subgroup_samples(
    report: &SpectralReport,
    class: SpectralClass,
    count: usize,
    seed: u64,
) -> Result<Vec<GroupElement>, SpectralError> {
    if report.representation != Representation::Algebra {
        return Err(SpectralError::RepresentationMismatch);
    }
    let part = report.part(class);
    if part.is_empty() {
        return Err(SpectralError::EmptyPart);
    }
    let mut rng = crate::catalog::rng(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut x = Matrix::zeros(report.carrier.n, report.carrier.n);
        for b in part {
            x = x.add(&b.mat.scale(rng.gen_range(-0.75..0.75)));
        }
        let g = matrix_exponential(&x);
        out.push(GroupElement::new(report.carrier, g)?);
    }
    Ok(out)
}
