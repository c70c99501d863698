use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("vector {id}: endpoint ({x:.6e}, {y:.6e}) m lies outside the grid")]
    OutOfBounds { id: usize, x: f64, y: f64 },

    #[error("layer order: {0}")]
    LayerOrder(String),

    #[error("no occupancy recorded for layer {0}")]
    MissingOccupancy(usize),

    #[error("time step {dt:.6e} s exceeds the forward-Euler stability bound {bound:.6e} s")]
    UnstableTimeStep { dt: f64, bound: f64 },

    #[error("melt pool undefined: T_b = {t_b:.3} K is not at least 1 K below T_m = {t_m:.3} K")]
    MeltPoolDomain { t_b: f64, t_m: f64 },

    #[error("numerical failure at step {step}: {msg}")]
    Numerical { step: usize, msg: String },

    #[error("layer {layer}, vector {vector}: {source}")]
    Vector {
        layer: usize,
        vector: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numerical { .. } | Error::MeltPoolDomain { .. } => true,
            Error::Vector { source, .. } => source.is_numeric(),
            _ => false,
        }
    }

    pub(crate) fn at_vector(self, layer: usize, vector: usize) -> Self {
        Error::Vector {
            layer,
            vector,
            source: Box::new(self),
        }
    }
}
