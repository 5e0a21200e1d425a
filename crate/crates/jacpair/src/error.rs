use thiserror::Error;

/// Every failure a library operation can report. `code()` gives the stable
/// upper-case tag used in reports.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operands live in different spaces ({0} vs {1})")]
    SpaceMismatch(String, String),
    #[error("exponent denominator {0} exceeds the cap {1}")]
    NOverflow(u64, u64),
    #[error("no invertible leading monomial")]
    NotInvertible,
    #[error("leading term not extractable: {0}")]
    BadLeading(String),
    #[error("support is floor-truncated; polygon would be a guess")]
    InfiniteSupport,
    #[error("prime degree {found} exceeds requested {requested}")]
    PrimeDegreeExceeded { found: String, requested: String },
    #[error("not a polynomial in y: {0}")]
    NotPolynomial(String),
    #[error("edge not on the polygon")]
    EdgeNotFound,
    #[error("coefficient at ({x}, {y}) lies below the floor")]
    BelowFloor { x: String, y: String },
    #[error("generator outside the admissible shape: {0}")]
    BadGenerator(String),
    #[error("b-bar_{0} has an x^-1 term; no antiderivative")]
    Obstruction(usize),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("leading y-coefficient is not a monic monomial")]
    Nonmonic,
    #[error("degenerate exponent (m = -k)")]
    Degenerate,
    #[error("bracket is not a nonzero constant")]
    NotQjPair,
    #[error("p = -m0/m, mu undefined")]
    MuDegenerate,
    #[error("edge parts satisfy neither relation: {0}")]
    NoRelation(String),
    #[error("needed root is not rational: {0}")]
    IrrationalRoot(String),
    #[error("vertex not admissible: {0}")]
    VertexInvalid(String),
    #[error("step limit {0} reached")]
    StepLimit(usize),
    #[error("level {0} still carries a tail")]
    LevelNotClean(usize),
    #[error("depth too small to fix alpha: {0}")]
    DepthInsufficient(String),
    #[error("H = x and K = y, nothing to decompose")]
    NoTail,
    #[error("Coeff(K, x^-1) normalization failed: {0}")]
    NormalizationAmbiguous(String),
    #[error("scalar of the 0-th components is not pinned: {0}")]
    UnnormalizedScalar(String),
    #[error("Weyl operands use different representations")]
    RepresentationMismatch,
    #[error("bad exponent: {0}")]
    BadExponent(String),
    #[error("fractional u-exponent cannot be written in w-form")]
    FractionalUInWForm,
    #[error("singular vertex system")]
    SingularSystem,
    #[error("no derivative rule for atom {0}")]
    UnknownAtom(String),
    #[error("divisor has {0} terms")]
    NonmonomialDivisor(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::SpaceMismatch(..) => "SPACE_MISMATCH",
            Error::NOverflow(..) => "N_OVERFLOW",
            Error::NotInvertible => "NOT_INVERTIBLE",
            Error::BadLeading(_) => "BAD_LEADING",
            Error::InfiniteSupport => "INFINITE_SUPPORT",
            Error::PrimeDegreeExceeded { .. } => "PRIME_DEGREE_EXCEEDED",
            Error::NotPolynomial(_) => "NOT_POLYNOMIAL",
            Error::EdgeNotFound => "EDGE_NOT_FOUND",
            Error::BelowFloor { .. } => "BELOW_FLOOR",
            Error::BadGenerator(_) => "BAD_GENERATOR",
            Error::Obstruction(_) => "OBSTRUCTION",
            Error::PreconditionFailed(_) => "PRECONDITION_FAILED",
            Error::Nonmonic => "NONMONIC",
            Error::Degenerate => "DEGENERATE",
            Error::NotQjPair => "NOT_QJ_PAIR",
            Error::MuDegenerate => "MU_DEGENERATE",
            Error::NoRelation(_) => "NO_RELATION",
            Error::IrrationalRoot(_) => "IRRATIONAL_ROOT",
            Error::VertexInvalid(_) => "VERTEX_INVALID",
            Error::StepLimit(_) => "STEP_LIMIT",
            Error::LevelNotClean(_) => "LEVEL_NOT_CLEAN",
            Error::DepthInsufficient(_) => "DEPTH_INSUFFICIENT",
            Error::NoTail => "NO_TAIL",
            Error::NormalizationAmbiguous(_) => "NORMALIZATION_AMBIGUOUS",
            Error::UnnormalizedScalar(_) => "UNNORMALIZED_SCALAR",
            Error::RepresentationMismatch => "REPRESENTATION_MISMATCH",
            Error::BadExponent(_) => "BAD_EXPONENT",
            Error::FractionalUInWForm => "FRACTIONAL_U_IN_W_FORM",
            Error::SingularSystem => "SINGULAR_SYSTEM",
            Error::UnknownAtom(_) => "UNKNOWN_ATOM",
            Error::NonmonomialDivisor(_) => "NONMONOMIAL_DIVISOR",
            Error::Parse(_) => "PARSE",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
