use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum KineticError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("boundary decay violated: outer-row ratio {ratio:.3e} exceeds tolerance {tol:.1e}")]
    DecayViolation { ratio: f64, tol: f64 },

    #[error("velocity escape: |V| = {speed:.6} left the certified band (v_cut = {v_cut})")]
    VelocityEscape { speed: f64, v_cut: f64 },

    #[error("not a diffeomorphism: {0}")]
    NotDiffeomorphism(String),

    #[error("characteristic crossing (shock) at t = {time:.6}")]
    Shock { time: f64 },

    #[error("horizon error: {0}")]
    Horizon(String),

    #[error("Picard iteration did not converge after {} sweeps (ratios {ratios:?})", .distances.len())]
    NonConvergence {
        ratios: Vec<f64>,
        distances: Vec<f64>,
    },

    #[error("outside the validity range: {0}")]
    Validity(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl KineticError {
    /// True for errors that signal a too-long time horizon rather than bad input.
    pub fn is_horizon(&self) -> bool {
        matches!(
            self,
            KineticError::VelocityEscape { .. }
                | KineticError::NotDiffeomorphism(_)
                | KineticError::Shock { .. }
                | KineticError::Horizon(_)
                | KineticError::NonConvergence { .. }
        )
    }
}

impl From<std::io::Error> for KineticError {
    fn from(e: std::io::Error) -> Self {
        KineticError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, KineticError>;
