//! On-disk system description: a strict JSON schema with the group, the
//! conjugating matrix, the control box, and the control-to-group map as
//! expression strings, convertible both ways to a runnable system.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_expression, ParseError};
use crate::jsonfmt::to_canonical_string;
use crate::lie::{GroupKind, GroupSpec, LieError};
use crate::linalg::Matrix;
use crate::system::{ControlBox, SystemError, SystemSpec};

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("descriptor JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported automorphism kind '{0}' (only 'conjugation')")]
    UnsupportedAutomorphism(String),
    #[error("h must be a {expected}x{expected} matrix")]
    BadConjugatorShape { expected: usize },
    #[error("entry ({row},{col}) of b: {source}")]
    Entry {
        row: usize,
        col: usize,
        source: ParseError,
    },
    #[error("b must be a {expected}x{expected} grid of expressions")]
    BadEntryShape { expected: usize },
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDescriptor {
    pub kind: GroupKind,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomorphismDescriptor {
    /// Only "conjugation" is understood; the field names the family so the
    /// format can grow without breaking old files.
    pub kind: String,
    pub h: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDescriptor {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Serializable description of a system. Unknown fields are rejected so a
/// typo fails loudly instead of silently changing the system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescriptor {
    pub group: GroupDescriptor,
    pub automorphism: AutomorphismDescriptor,
    pub control_dim: usize,
    pub control_box: BoxDescriptor,
    pub b_entries: Vec<Vec<String>>,
}

impl SystemDescriptor {
    pub fn from_json(s: &str) -> Result<Self, DescriptorError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        to_canonical_string(self).expect("descriptor serializes")
    }

    /// Builds the runnable system, parsing every entry expression against
    /// the declared control dimension.
    pub fn to_system(&self) -> Result<SystemSpec, DescriptorError> {
        if self.automorphism.kind != "conjugation" {
            return Err(DescriptorError::UnsupportedAutomorphism(
                self.automorphism.kind.clone(),
            ));
        }
        let group = GroupSpec::new(self.group.kind, self.group.n)?;
        let n = group.n;
        if self.automorphism.h.len() != n || self.automorphism.h.iter().any(|r| r.len() != n) {
            return Err(DescriptorError::BadConjugatorShape { expected: n });
        }
        let h = Matrix::from_rows(&self.automorphism.h);
        if self.b_entries.len() != n || self.b_entries.iter().any(|r| r.len() != n) {
            return Err(DescriptorError::BadEntryShape { expected: n });
        }
        let mut entries = Vec::with_capacity(n);
        for (i, row) in self.b_entries.iter().enumerate() {
            let mut out = Vec::with_capacity(n);
            for (j, src) in row.iter().enumerate() {
                let e = parse_expression(src, self.control_dim).map_err(|source| {
                    DescriptorError::Entry { row: i + 1, col: j + 1, source }
                })?;
                out.push(e);
            }
            entries.push(out);
        }
        let control_box = ControlBox::new(self.control_box.lo.clone(), self.control_box.hi.clone())?;
        Ok(SystemSpec::new(group, h, entries, control_box)?)
    }

    /// The descriptor of a system, with entry expressions printed back to
    /// strings.
    pub fn from_system(sys: &SystemSpec) -> Self {
        SystemDescriptor {
            group: GroupDescriptor { kind: sys.group.kind, n: sys.group.n },
            automorphism: AutomorphismDescriptor {
                kind: "conjugation".to_string(),
                h: sys.h.to_rows(),
            },
            control_dim: sys.control_dim,
            control_box: BoxDescriptor {
                lo: sys.control_box.lo().to_vec(),
                hi: sys.control_box.hi().to_vec(),
            },
            b_entries: sys
                .b_entries
                .iter()
                .map(|row| row.iter().map(|e| e.to_string()).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn fixture(name: &str) -> String {
        let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path}: {e}"))
    }

    #[test]
    fn roundtrip_through_json_preserves_the_system() {
        for sys in [
            catalog::unipotent_example(),
            catalog::trig_example_corrected(),
            catalog::hyperbolic_example(),
        ] {
            let d = SystemDescriptor::from_system(&sys);
            let json = d.to_json();
            let d2 = SystemDescriptor::from_json(&json).unwrap();
            let sys2 = d2.to_system().unwrap();
            assert_eq!(sys.group, sys2.group);
            assert!(sys.h.approx_eq(&sys2.h, 0.0));
            // The reparsed map agrees pointwise on a control sweep.
            for t in [-0.4, -0.1, 0.0, 0.2, 0.5] {
                let a = sys.b_matrix(&[t]).unwrap();
                let b = sys2.b_matrix(&[t]).unwrap();
                assert!(a.approx_eq(&b, 0.0));
            }
            // And a second rendering is canonical.
            assert_eq!(json, SystemDescriptor::from_system(&sys2).to_json());
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&SystemDescriptor::from_system(&catalog::unipotent_example()).to_json())
                .unwrap();
        v["surprise"] = serde_json::json!(1);
        let err = SystemDescriptor::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("surprise"));
    }

    #[test]
    fn out_of_range_control_variable_reports_the_entry() {
        let mut d = SystemDescriptor::from_system(&catalog::unipotent_example());
        d.b_entries[1][0] = "u2".to_string();
        let err = d.to_system().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2,1)"), "{msg}");
        assert!(msg.contains("u2"), "{msg}");
    }

    #[test]
    fn only_conjugation_automorphisms_are_accepted() {
        let mut d = SystemDescriptor::from_system(&catalog::unipotent_example());
        d.automorphism.kind = "translation".to_string();
        assert!(matches!(
            d.to_system().unwrap_err(),
            DescriptorError::UnsupportedAutomorphism(k) if k == "translation"
        ));
    }

    #[test]
    fn bundled_fixture_files_load_and_validate_as_expected() {
        for name in [
            "sl2_unipotent.json",
            "sl2_trig_corrected.json",
            "sl2_hyperbolic.json",
        ] {
            let sys = SystemDescriptor::from_json(&fixture(name))
                .unwrap()
                .to_system()
                .unwrap();
            assert!(sys.validate(64, 0).passed(), "{name} should validate");
        }
        let broken = SystemDescriptor::from_json(&fixture("sl2_trig_printed.json"))
            .unwrap()
            .to_system()
            .unwrap();
        let report = broken.validate(64, 0);
        assert!(!report.passed());
        let b0 = report.checks.iter().find(|c| c.name == "b0_identity").unwrap();
        assert!(!b0.passed);
    }
}
