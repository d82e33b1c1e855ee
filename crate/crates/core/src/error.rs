use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// More interferers requested for cancellation than the array can null.
    #[error("infeasible partial zero-forcing: {0}")]
    InfeasiblePzf(String),

    #[error("canceled interferer channels are numerically rank deficient (column {column})")]
    RankDeficient { column: usize },

    #[error("training length {t_c} is shorter than the {needed} pilot sequences required")]
    InfeasibleTraining { t_c: usize, needed: usize },

    #[error("infeasible bound: {0}")]
    InfeasibleBound(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("spectral efficiency needs at least one SINR sample")]
    EmptySamples,

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown preset `{name}` (valid presets: {valid})")]
    UnknownPreset { name: String, valid: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by user input rather than a runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::UnknownPreset { .. })
    }
}
