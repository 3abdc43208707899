use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An exponentially weighted claim moment is infinite.
    #[error("E[Z^{order} e^(cZ)] diverges at c = {c} ({reason})")]
    DivergentMoment { c: f64, order: u32, reason: String },

    #[error("quadrature did not reach relative tolerance {tolerance:e} within {budget} subintervals (estimate {estimate}, error {error:e})")]
    QuadratureFailure {
        tolerance: f64,
        budget: usize,
        estimate: f64,
        error: f64,
    },

    #[error("non-finite {what} at t = {t}")]
    NonFiniteState { what: &'static str, t: f64 },

    /// Thinning proposal intensity above the cell majorant; the grid is too coarse.
    #[error("intensity {intensity} exceeds thinning majorant {majorant} at t = {t}")]
    MajorantBreach {
        t: f64,
        intensity: f64,
        majorant: f64,
    },

    #[error("insufficient replications: {reason}")]
    InsufficientReplications { reason: String },

    #[error("Ψ^u is not concave at t = {t}, y = {y}, u = {u}")]
    ConcavityViolated { t: f64, y: f64, u: f64 },

    #[error("first-order condition not bracketed on [0, 1] at t = {t}, y = {y} (g(0) = {at_zero}, g(1) = {at_one})")]
    RootBracketFailure {
        t: f64,
        y: f64,
        at_zero: f64,
        at_one: f64,
    },

    #[error("closed form requires zeta/eta > e^(RT): {ratio} <= {bound}")]
    GuardViolated { ratio: f64, bound: f64 },

    #[error("volatility {sigma:e} below 1e-8 at t = {t}, p = {p}")]
    DegenerateVolatility { t: f64, p: f64, sigma: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
