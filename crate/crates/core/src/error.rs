use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the mathematical domain of a conversion.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("characterization error for `{config_id}`: {reason}")]
    Characterization { config_id: String, reason: String },

    #[error("OSNR {osnr_db:.3} dB outside characterized range [{min:.3}, {max:.3}] dB")]
    Extrapolation { osnr_db: f64, min: f64, max: f64 },

    #[error("Q {q_db:.3} dB outside curve image [{min:.3}, {max:.3}] dB")]
    Inversion { q_db: f64, min: f64, max: f64 },

    #[error("catalog error: {0}")]
    Catalog(String),

    /// Structural problem in a link description. `pointer` is a JSON pointer
    /// into the link document.
    #[error("invalid link at {pointer}: {reason}")]
    InvalidLink { pointer: String, reason: String },

    #[error("power budget exceeded at element {element}: {power_dbm:.2} dBm > {limit_dbm:.2} dBm")]
    PowerBudget { element: usize, power_dbm: f64, limit_dbm: f64 },

    #[error("measurement source error for `{config_id}` ({mode}): {reason}")]
    Source { config_id: String, mode: String, reason: String },

    #[error("engine error: {0}")]
    Engine(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("schema error at {pointer}: {reason}")]
    Schema { pointer: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
