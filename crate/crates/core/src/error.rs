use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown perturbation symbol `{0}`")]
    UnknownQChoice(String),

    #[error("({e}, {g}) is not a regular value in range of the momentum map")]
    NotRegular { e: f64, g: f64 },

    #[error("value ({e}, {g}) lies too close to the singular set (distance {dist:.3e})")]
    TooCloseToSingular { e: f64, g: f64, dist: f64 },

    #[error("point ({0}, {1}) lies outside the chart domain")]
    OutsideDomain(f64, f64),

    #[error("adaptive quadrature did not reach tolerance (estimate {estimate:.3e}, error {error:.3e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("newton iteration failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("the perturbation average is degenerate: (p, <q>) is not a local diffeomorphism")]
    DegenerateAverage,

    #[error("empty grid")]
    EmptyGrid,

    #[error("value ({0}, {1}) is not a good value")]
    NotGood(f64, f64),

    #[error("chart domain too small to cover the rectangle preimage")]
    ChartTooSmall,

    #[error("invalid normal form coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("degenerate cloud: fewer than two independent difference clusters")]
    DegenerateCloud,

    #[error("lattice basis rejected: condition number {0:.2} exceeds limit")]
    IllConditionedBasis(f64),

    #[error("label conflict at point {index}: {existing:?} vs {proposed:?}")]
    LabelConflict {
        index: usize,
        existing: [i64; 2],
        proposed: [i64; 2],
    },

    #[error("{unlabeled} of {total} points could not be labeled")]
    Unlabeled { unlabeled: usize, total: usize },

    #[error("normal equations are rank deficient")]
    RankDeficient,

    #[error("h-chart rejected: max residual {0:.3e} (in units of h) exceeds the acceptance threshold")]
    ChartRejected(f64),

    #[error("transition {i}->{j}: rounding error {rounding_error:.3} exceeds threshold")]
    TransitionRounding { i: usize, j: usize, rounding_error: f64 },

    #[error("transition {i}->{j}: determinant {det} is not +-1")]
    TransitionDeterminant { i: usize, j: usize, det: i64 },

    #[error("charts {0} and {1} do not overlap")]
    NoOverlap(usize, usize),

    #[error("loop has a gap between charts {0} and {1}")]
    LoopGap(usize, usize),

    #[error("malformed table: {0}")]
    Table(String),
}
