//! Top-level controllability analysis: validates the system, classifies the
//! drift spectrum, searches for an interior certificate, and combines the
//! two into a verdict with human-readable notes and a canonical JSON report.

use serde_json::{json, Value};
use thiserror::Error;

use crate::jsonfmt::to_canonical_string;
use crate::lie::LieError;
use crate::linalg::{LinalgError, Matrix};
use crate::reach::{interior_certificate, minimal_horizon, ReachError, RegularityCertificate};
use crate::spectral::{spectral_report, Representation, SpectralClass, SpectralError, SpectralReport};
use crate::system::{SystemError, SystemSpec, ValidationReport};

/// Random validation draws before analysis starts.
const VALIDATION_SAMPLES: usize = 128;
const VALIDATION_SEED: u64 = 0;

/// A margin above this is a genuine spectral gap: calling it unimodular
/// means the tolerance, not the spectrum, made the call.
const SUSPICIOUS_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Error)]
pub enum VerdictError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictStatus {
    /// Unimodular spectrum plus an interior certificate: the sufficient
    /// test passes and the system is controllable.
    Controllable,
    /// The drift has eigenvalues off the unit circle, so the sufficient
    /// test cannot pass at this tolerance.
    CriterionNotMet,
    /// Spectrum is fine but no full-rank certificate was found up to the
    /// horizon limit; inconclusive rather than negative.
    CertificateNotFound,
    /// The system failed validation; nothing further was attempted.
    InvalidSystem,
}

impl VerdictStatus {
    pub fn name(self) -> &'static str {
        match self {
            VerdictStatus::Controllable => "controllable",
            VerdictStatus::CriterionNotMet => "criterion-not-met",
            VerdictStatus::CertificateNotFound => "certificate-not-found",
            VerdictStatus::InvalidSystem => "invalid-system",
        }
    }
}

/// Outcome of `analyze`: the status, the evidence behind it, and notes that
/// spell out the reasoning in words.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub status: VerdictStatus,
    /// Worst deviation of the drift spectrum from the unit circle, absent
    /// only when the spectrum itself is not computable (singular conjugator).
    pub unimodular_margin: Option<f64>,
    pub certificate: Option<RegularityCertificate>,
    pub spectral: Option<SpectralReport>,
    pub validation: ValidationReport,
    pub notes: Vec<String>,
}

fn fmt_eigenvalue(v: crate::linalg::ComplexScalar) -> String {
    if v.im == 0.0 {
        format!("{}", v.re)
    } else if v.im > 0.0 {
        format!("{}+{}i", v.re, v.im)
    } else {
        format!("{}-{}i", v.re, -v.im)
    }
}

/// Runs the full controllability analysis on a system.
///
/// Steps: seeded validation; spectral classification of the drift on the
/// algebra at `tol_unimodular`; certificate search at the zero control up to
/// `k_max` with rank tolerance `tol_rank`. Controllable means both the
/// eigenvalue test and the certificate succeed.
pub fn analyze(
    sys: &SystemSpec,
    k_max: usize,
    tol_unimodular: f64,
    tol_rank: f64,
) -> Result<Verdict, VerdictError> {
    let validation = sys.validate(VALIDATION_SAMPLES, VALIDATION_SEED);
    if !validation.passed() {
        let notes = validation
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("validation check '{}' failed: {}", c.name, c.detail))
            .collect();
        // Still attach the drift spectrum when it is computable: validation
        // can fail for reasons unrelated to the conjugator (e.g. b(0) != e),
        // and the spectral picture remains meaningful evidence.
        let spectral = spectral_report(sys, Representation::Algebra, tol_unimodular).ok();
        let unimodular_margin = spectral.as_ref().map(|s| s.unimodular_margin());
        return Ok(Verdict {
            status: VerdictStatus::InvalidSystem,
            unimodular_margin,
            certificate: None,
            spectral,
            validation,
            notes,
        });
    }

    let spectral = spectral_report(sys, Representation::Algebra, tol_unimodular)?;
    let margin = spectral.unimodular_margin();
    let certificate = interior_certificate(sys, minimal_horizon(sys), k_max, tol_rank)?;
    let mut notes = Vec::new();

    let status = if !spectral.all_unimodular() {
        let offending: Vec<String> = spectral
            .eigenvalues
            .iter()
            .filter(|e| e.class != SpectralClass::Unimodular)
            .map(|e| fmt_eigenvalue(e.value))
            .collect();
        notes.push(format!(
            "drift eigenvalues off the unit circle: {}; worst deviation {margin:.6e} exceeds the tolerance {tol_unimodular:.1e}",
            offending.join(", ")
        ));
        notes.push(format!(
            "the spectrum splits the algebra into expanding/unimodular/contracting parts of dimensions {}/{}/{}; the sufficient controllability test needs the whole spectrum on the unit circle, so it fails here",
            spectral.basis_plus.len(),
            spectral.basis_zero.len(),
            spectral.basis_minus.len()
        ));
        if let Some(cert) = &certificate {
            notes.push(format!(
                "the identity is still interior to the reachable set at horizon {}, so the partial conclusions survive: the subgroup of the non-contracting spectral part (dimension {}) stays inside the forward reachable set, and the subgroup of the non-expanding part (dimension {}) inside the controllable set; only the full-group conclusion is blocked by the eigenvalue condition",
                cert.k,
                spectral.basis_plus.len() + spectral.basis_zero.len(),
                spectral.basis_zero.len() + spectral.basis_minus.len()
            ));
        }
        VerdictStatus::CriterionNotMet
    } else if let Some(cert) = &certificate {
        notes.push(format!(
            "all drift eigenvalues are unimodular within {tol_unimodular:.1e} (worst deviation {margin:.6e}) and the zero control of length {} gives a rank-{} endpoint map, so the identity is interior to the reachable set and the system is controllable",
            cert.k, cert.rank
        ));
        if margin > SUSPICIOUS_MARGIN {
            notes.push(format!(
                "caution: the worst spectral deviation {margin:.6e} is far above rounding scale, so unimodularity here is forced by the generous tolerance {tol_unimodular:.1e} rather than by the spectrum"
            ));
        }
        VerdictStatus::Controllable
    } else {
        notes.push(format!(
            "all drift eigenvalues are unimodular within {tol_unimodular:.1e}, but no full-rank certificate was found at the zero control up to horizon {k_max}; the result is inconclusive at this horizon"
        ));
        VerdictStatus::CertificateNotFound
    };

    Ok(Verdict {
        status,
        unimodular_margin: Some(margin),
        certificate,
        spectral: Some(spectral),
        validation,
        notes,
    })
}

fn matrix_value(m: &Matrix) -> Value {
    Value::Array(
        m.to_rows()
            .into_iter()
            .map(|row| Value::Array(row.into_iter().map(|x| json!(x)).collect()))
            .collect(),
    )
}

impl Verdict {
    fn to_value(&self) -> Value {
        let certificate = self.certificate.as_ref().map(|c| {
            json!({
                "k": c.k,
                "rank": c.rank,
                "u_star": c.u_star.steps(),
                "endpoint": matrix_value(&c.endpoint),
                "jacobian": matrix_value(&c.jacobian),
            })
        });
        let spectral = self.spectral.as_ref().map(|s| {
            let part_dims = json!({
                "expanding": s.basis_plus.len(),
                "unimodular": s.basis_zero.len(),
                "contracting": s.basis_minus.len(),
            });
            json!({
                "representation": s.representation.name(),
                "tol_unimodular": s.tol_unimodular,
                "eigenvalues": s.eigenvalues.iter().map(|e| json!({
                    "re": e.value.re,
                    "im": e.value.im,
                    "multiplicity": e.multiplicity,
                    "class": e.class.name(),
                })).collect::<Vec<_>>(),
                "part_dims": part_dims,
            })
        });
        json!({
            "status": self.status.name(),
            "unimodular_margin": self.unimodular_margin,
            "certificate": certificate,
            "spectral": spectral,
            "validation": {
                "passed": self.validation.passed(),
                "samples": self.validation.samples,
                "seed": self.validation.seed,
                "checks": self.validation.checks.iter().map(|c| json!({
                    "name": c.name,
                    "passed": c.passed,
                    "residual": c.residual,
                    "detail": c.detail,
                })).collect::<Vec<_>>(),
            },
            "notes": self.notes,
        })
    }

    /// Canonical JSON report: sorted keys, floats at 17 significant digits,
    /// byte-identical across repeated runs.
    pub fn report_json(&self) -> String {
        to_canonical_string(&self.to_value()).expect("verdict serializes")
    }
}
