use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is not positive definite (eigenvalue ratio {ratio:.3e})")]
    NotPositiveDefinite { ratio: f64 },
    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("matrix is numerically singular (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("invalid g-frame: {0}")]
    InvalidFrame(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("family is not a g-frame (lower bound {lower:.3e}, upper bound {upper:.3e})")]
    NotAFrame { lower: f64, upper: f64 },

    #[error("family is a g-Riesz basis; its dual is unique")]
    IsRieszBasis,
    #[error("probe vector is zero")]
    ZeroProbe,
    #[error("family is not a dual of the given g-frame (deviation {deviation:.3e})")]
    NotADual { deviation: f64 },

    #[error("perturbed family has a singular frame operator; no finite constant exists")]
    DegenerateTheta,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("premise refuted: excess {excess:.3e} at witness vector")]
    PremiseNotVerifiable { excess: f64, witness: Vec<[f64; 2]> },

    #[error("family is not a g-orthonormal basis")]
    NotOnBasis,
    #[error("family is not a g-Riesz basis")]
    NotRieszBasis,
    #[error("blocks do not share a common row dimension")]
    NonUniformBlocks,
    #[error(
        "truncation too severe: defect {defect:.3e} exceeds {limit:.3e}; \
         need K >= {required_k}, L >= {required_l}"
    )]
    TruncationTooSevere {
        defect: f64,
        limit: f64,
        required_k: usize,
        required_l: usize,
    },
    #[error("insufficient quadrature nodes: need radial >= {required_radial}, angular >= {required_angular}")]
    InsufficientNodes {
        required_radial: usize,
        required_angular: usize,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite => "NonFinite",
            Error::NotSquare { .. } => "NotSquare",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::Singular { .. } => "Singular",
            Error::InvalidFrame(_) => "InvalidFrame",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NotAFrame { .. } => "NotAFrame",
            Error::IsRieszBasis => "IsRieszBasis",
            Error::ZeroProbe => "ZeroProbe",
            Error::NotADual { .. } => "NotADual",
            Error::DegenerateTheta => "DegenerateTheta",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::PremiseNotVerifiable { .. } => "PremiseNotVerifiable",
            Error::NotOnBasis => "NotOnBasis",
            Error::NotRieszBasis => "NotRieszBasis",
            Error::NonUniformBlocks => "NonUniformBlocks",
            Error::TruncationTooSevere { .. } => "TruncationTooSevere",
            Error::InsufficientNodes { .. } => "InsufficientNodes",
            Error::Parse { .. } => "ParseError",
            Error::Schema { .. } => "SchemaError",
        }
    }
}
