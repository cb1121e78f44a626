use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular or non-finite (|det| = {0})")]
    Singular(f64),
    #[error("map is the identity; fixed points are undefined")]
    IdentityMap,
    #[error("map has a fixed point at infinity (c = 0); zeta/eta are undefined")]
    InfiniteFixedPoint,
    #[error("map has a fixed point at infinity")]
    FixedPointAtInfinity,
    #[error("map is not loxodromic")]
    NotLoxodromic,
    #[error("geodesic endpoints coincide")]
    DegenerateGeodesic,
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("malformed marking: {0}")]
    MalformedMarking(String),
    #[error("first generator must have fixed points 0 and infinity")]
    NeedStandardPosition,
    #[error("word count {count} exceeds budget {budget}")]
    CapExceeded { count: u128, budget: u64 },
    #[error("{needed} words needed for {shells} shells, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64, shells: usize },
    #[error("displacement {0} is not positive")]
    NonpositiveDisplacement(f64),
    #[error("exp(D d) = {0} is too close to 1")]
    DegenerateDenominator(f64),
    #[error("multiplier modulus {0} is too close to 1 for an annulus")]
    DegenerateModulus(f64),
    #[error("scales must number at least 4 and span a decade")]
    DegenerateScales,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("generator index {index} out of range for rank {rank}")]
    IndexOutOfRange { index: usize, rank: usize },
    #[error("composed word is not loxodromic")]
    NonLoxodromicIntermediate,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
