use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("map produced a non-finite image at atom {index}")]
    NonFiniteImage { index: usize },

    #[error("operation supports dimension {expected} only, got {got}")]
    UnsupportedDimension { expected: usize, got: usize },

    #[error("flux is not convex on [{lo}, {hi}] (second difference {second_difference:e})")]
    NonconvexFlux {
        lo: f64,
        hi: f64,
        second_difference: f64,
    },

    #[error("empty or degenerate interval [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("Hopf-Lax minimization failed at x = {x:?}, sigma = {sigma}")]
    MinimizationFailed { x: Vec<f64>, sigma: f64 },

    #[error("sensitivity matrix I + t D2H D2g is singular")]
    SingularSensitivity,

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("at atom {index}: {source}")]
    AtAtom {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("scan grid needs at least 3 points, got {0}")]
    BadScan(usize),

    #[error("no equilibrium exists at t = {t}")]
    NoEquilibrium { t: f64 },

    #[error("{count} equilibria found; an explicit root index is required")]
    RootSelectionRequired { count: usize },

    #[error("root index {index} out of range ({count} roots)")]
    RootIndexOutOfRange { index: usize, count: usize },

    #[error("finite-difference stencil crosses a point without a unique equilibrium")]
    StencilCrossesSingularity,

    #[error("sigma_0 is not differentiable (step profile)")]
    NonDifferentiableSigma0,

    #[error("operation requires a {0} preset")]
    PresetRequired(&'static str),

    #[error("bad input: {0}")]
    BadInput(String),

    #[error("profile construction failed: {0}")]
    ProfileConstructionFailed(String),

    #[error("front detection is ambiguous near x = {x} at t = {t}; refine the grid")]
    RefineGrid { t: f64, x: f64 },

    #[error("time step {dt:e} too small for the grid (epsilon too large)")]
    StiffnessError { dt: f64 },

    #[error("operation requires the reduced regime (linear terminal cost, mean-profile sigma_0, reduced flux)")]
    ReducedRegimeRequired,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_atom(index: usize, err: Error) -> Self {
        Error::AtAtom {
            index,
            source: Box::new(err),
        }
    }

    /// Stable short identifier, used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMeasure(_) => "InvalidMeasure",
            Error::NonFiniteImage { .. } => "NonFiniteImage",
            Error::UnsupportedDimension { .. } => "UnsupportedDimension",
            Error::NonconvexFlux { .. } => "NonconvexFlux",
            Error::EmptyInterval { .. } => "EmptyInterval",
            Error::MinimizationFailed { .. } => "MinimizationFailed",
            Error::SingularSensitivity => "SingularSensitivity",
            Error::NewtonDiverged { .. } => "NewtonDiverged",
            Error::AtAtom { source, .. } => source.kind(),
            Error::BadScan(_) => "BadScan",
            Error::NoEquilibrium { .. } => "NoEquilibrium",
            Error::RootSelectionRequired { .. } => "RootSelectionRequired",
            Error::RootIndexOutOfRange { .. } => "RootIndexOutOfRange",
            Error::StencilCrossesSingularity => "StencilCrossesSingularity",
            Error::NonDifferentiableSigma0 => "NonDifferentiableSigma0",
            Error::PresetRequired(_) => "PresetRequired",
            Error::BadInput(_) => "BadInput",
            Error::ProfileConstructionFailed(_) => "ProfileConstructionFailed",
            Error::RefineGrid { .. } => "RefineGrid",
            Error::StiffnessError { .. } => "StiffnessError",
            Error::ReducedRegimeRequired => "ReducedRegimeRequired",
            Error::InvalidModel(_) => "InvalidModel",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }
}
