//! Numerical tools for deciding whether a function on a domain swept by a
//! one-parameter family of circles is holomorphic, given that its restriction
//! to every circle extends holomorphically into the disc.

pub mod cauchy;
pub mod continuation;
pub mod critical;
pub mod error;
pub mod expr;
pub mod extension;
pub mod family;
pub mod fiber;
pub mod function;
pub mod jet;
pub mod roots;
pub mod sphere;
pub mod spline;
pub mod svg;
pub mod verify;

pub use continuation::{ContinuationTrace, SeparatingLine, TrackingController};
pub use critical::CriticalSet;
pub use error::{Error, Result};
pub use extension::{BoundaryTrace, ExtensionSource, TraceExtensions, TraceSampler};
pub use family::{CircleFamily, FamilyJet, FamilySpec, Side, ValidationReport};
pub use fiber::{FiberCurve, IncidenceSet, Loop, SamplingController};
pub use function::FunctionSpec;
pub use sphere::{Chart, SpherePoint};
pub use verify::{Verdict, VerdictReport, VerificationConfig};

pub use num_complex::Complex64;
