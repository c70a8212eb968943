//! Numerical toolkit for discrete-time linear control systems on matrix Lie
//! groups.
//!
//! A system is a step map `g -> b(u) * h * g * h^-1` on SL(n) or GL+(n): the
//! drift is conjugation by a fixed invertible `h`, the control enters through
//! a matrix `b(u)` of expressions with `b(0) = e`. The crate simulates such
//! systems, computes the spectral decomposition of the drift differential,
//! searches for interior regularity certificates of the reachable set, and
//! combines both into a controllability verdict.

pub mod catalog;
pub mod descriptor;
pub mod expr;
pub mod jsonfmt;
pub mod lie;
pub mod linalg;
pub mod reach;
pub mod spectral;
pub mod system;
pub mod verdict;

pub use descriptor::SystemDescriptor;
pub use expr::{evaluate, evaluate_dual, parse_expression, DualScalar, Expr};
pub use lie::{AlgebraElement, GroupElement, GroupKind, GroupSpec};
pub use linalg::{ComplexScalar, Matrix, Polynomial};
pub use reach::{CheckReport, ReachSample, RegularityCertificate, SampleStrategy};
pub use spectral::{MurakamiFactor, SpectralClass, SpectralReport};
pub use system::{ControlBox, ControlSequence, SystemSpec, ValidationReport};
pub use verdict::{analyze, Verdict, VerdictStatus};
