use thiserror::Error;

pub type Result<T> = std::result::Result<T, AncError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AncError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("scaling factor out of bounds at layer {layer}, node {node}: {beta} > {beta_max}")]
    BetaOutOfBounds {
        layer: usize,
        node: usize,
        beta: f64,
        beta_max: f64,
    },

    #[error("invalid snoop set: {0}")]
    InvalidSnoop(String),

    #[error("degenerate network: {0}")]
    Degenerate(String),

    #[error("{what} requires an ECGAL network: {reason}")]
    NotEcgal { what: &'static str, reason: String },

    #[error("too many relays for exhaustive subset search: {nodes} > {max}")]
    TooManyNodes { nodes: usize, max: usize },

    #[error("network is not in the high-SNR regime at layer {layer}: SNR {snr:.6e} < 1/delta = {required:.6e}")]
    RegimeViolation {
        layer: usize,
        snr: f64,
        required: f64,
    },

    #[error("delta must be finite and nonnegative, got {0}")]
    InvalidDelta(f64),

    #[error("gap bound is vacuous: L*delta = {0} >= 1")]
    VacuousGapBound(f64),

    #[error("unknown strategy `{name}` (available: {available})")]
    UnknownStrategy { name: String, available: String },
}

impl AncError {
    pub fn is_regime_violation(&self) -> bool {
        matches!(self, AncError::RegimeViolation { .. })
    }
}
