use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = DwError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DwError {
    #[error("indeterminate value 0/0 at {at}")]
    IndeterminateValue { at: Complex64 },

    #[error("composed degree {degree} exceeds the cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },

    #[error("root finder did not converge for a degree {degree} polynomial after {sweeps} sweeps")]
    RootFindingDivergence { degree: usize, sweeps: usize },

    #[error("map is not a disk automorphism (boundary residual {residual:e})")]
    NotDiskAutomorphism { residual: f64 },

    #[error("no repelling fixed point or period-2 point found to seed inverse iteration")]
    NoRepellingFixedPoint,

    #[error("raster bounds are degenerate")]
    DegenerateBounds,

    #[error("denominator is the zero polynomial")]
    ZeroDenominator,

    #[error("coefficients must be finite")]
    NonFinite,

    #[error("generator set is empty")]
    EmptyGeneratorSet,

    #[error("generator {index} has degree {degree}; semigroup generators need degree >= 2")]
    GeneratorDegree { index: usize, degree: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
