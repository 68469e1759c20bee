//! Crate-wide error type.
//!
//! One enum keeps error plumbing flat: parsers, builders and the solver all
//! return `Result<_, Error>` and callers match on the variant they care about.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A case document is structurally malformed (missing or duplicate field).
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    /// A case document violates a data invariant.
    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    /// A numeric field is NaN or infinite after unit conversion.
    #[error("units error at `{path}`: non-finite value {value}")]
    Units { path: String, value: f64 },

    /// Row/column names cannot be made unique within the export format limits.
    #[error("name collision in export: `{name}`")]
    NameCollision { name: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Box support with `xi_min >= xi_max` in some component.
    #[error("empty box support in component {component}: [{lo}, {hi}]")]
    EmptyBox { component: usize, lo: f64, hi: f64 },

    /// Sampling requested on a polytope without box structure.
    #[error("sampling is only supported on box supports")]
    UnsupportedSupport,

    /// Vertex enumeration guard (2^K blow-up).
    #[error("uncertainty dimension {dim} too large for enumeration (limit {limit})")]
    DimensionTooLarge { dim: usize, limit: usize },

    /// A scenario handed to a builder lies outside the support polytope.
    #[error("scenario {index} violates the support polytope by {violation:.3e}")]
    ScenarioOutsideSupport { index: usize, violation: f64 },

    /// The support polytope has no interior point.
    #[error("support polytope is not full-dimensional")]
    NotFullDimensional,

    /// Dual-LDR construction needs second moments on the polytope.
    #[error("second moments missing from the uncertainty polytope")]
    MissingMoments,

    /// The supplied second-moment matrix is not consistent (covariance not PSD).
    #[error("second-moment matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    /// Exhaustive MILP enumeration would exceed the work guard.
    #[error("enumeration of {count} switching patterns exceeds the limit {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    /// Pivoting broke down; carries condition diagnostics.
    #[error("numerical failure in solver: {message}")]
    Numerical { message: String },

    /// Generic invariant violation inside program construction.
    #[error("program construction error: {0}")]
    Program(String),
}

pub type Result<T> = std::result::Result<T, Error>;
