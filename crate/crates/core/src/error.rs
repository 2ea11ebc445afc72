use thiserror::Error;

/// Errors raised anywhere in the geometry pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("model parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("hopping #{index} with dR = ({dx}, {dy}) has no Hermitian partner: {reason}")]
    HermiticityPair {
        index: usize,
        dx: i64,
        dy: i64,
        reason: String,
    },

    #[error("invalid band selection: {0}")]
    BandSelection(String),

    #[error(
        "near-degeneracy: gap {gap:e} between selected and unselected bands is below {threshold:e}"
    )]
    NearDegeneracy { gap: f64, threshold: f64 },

    #[error("numerical breakdown: |trace K| = {value:e} below {threshold:e}")]
    TraceBreakdown { value: f64, threshold: f64 },

    #[error("band ordering changes across the finite-difference stencil at k = ({kx}, {ky})")]
    StencilCrossing { kx: f64, ky: f64 },

    #[error("finite-difference step {0:e} outside [1e-6, 1e-3]")]
    StencilStep(f64),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("imaginary residue {residue:e} in {quantity} exceeds tolerance")]
    HermiticityViolation {
        quantity: &'static str,
        residue: f64,
    },

    #[error("tangent dPx vanishes: rank-0 point")]
    RankZero,

    #[error("partial frame: {got} matrices, expected {expected}")]
    PartialFrame { got: usize, expected: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular metric: det g = {det_g:e}")]
    SingularMetric { det_g: f64 },

    #[error("grid contains non-finite values at {} samples (first: {:?})", .indices.len(), .indices.first())]
    PoisonedGrid { indices: Vec<(usize, usize)> },

    #[error("grid size {0} too small")]
    GridTooSmall(usize),

    #[error(
        "Chern integral not converged: residual {residual:e} (raw {raw}); increase the grid size"
    )]
    ChernNotConverged { raw: f64, residual: f64 },

    #[error(
        "Chern number from density ({density}) disagrees with lattice-gauge value ({lattice})"
    )]
    ChernMismatch { density: i64, lattice: i64 },

    #[error("integration inconsistency: unsigned volume {unsigned} < |signed volume| {signed}")]
    IntegrationInconsistency { unsigned: f64, signed: f64 },

    #[error("no sign change of the signed area density along the ray at theta = {theta}")]
    TopologyMismatch { theta: f64 },

    #[error("root refinement stagnated at theta = {theta} with |lambda_bar| = {residual:e}")]
    RootRefinement { theta: f64, residual: f64 },

    #[error("k = ({kx}, {ky}) is within {distance:e} of a cusp preimage")]
    CuspProximity { kx: f64, ky: f64, distance: f64 },

    #[error("degenerate denominator: |lambda_bar_v| = {0:e}")]
    DegenerateDenominator(f64),

    #[error("malformed curve: {0}")]
    MalformedCurve(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
