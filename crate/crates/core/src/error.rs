use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("integrand singular/overflow on path at parameter t = {t}")]
    NonFinite { t: f64 },

    #[error("outside convergence region: {predicate} fails for w = {re}{im:+}i, theta = {theta}")]
    OutsideRegion {
        predicate: &'static str,
        re: f64,
        im: f64,
        theta: f64,
    },

    #[error(
        "continuation hypothesis violated: |theta1 - theta2| = {gap} is not below pi/d = {limit}"
    )]
    ContinuationViolated { gap: f64, limit: f64 },

    #[error(
        "contour inadmissible: (theta, theta', phi) = ({theta}, {theta_prime}, {phi}) for d = {d}"
    )]
    Inadmissible {
        theta: f64,
        theta_prime: f64,
        phi: f64,
        d: u32,
    },

    #[error("z = {re}{im:+}i lies outside the convergence domain of the ray at angle {phi}")]
    OutsideDomain { re: f64, im: f64, phi: f64 },

    #[error("no decay on chosen ray: integrand magnitude non-decreasing over {panels} consecutive panels")]
    NoDecay { panels: usize },

    #[error("formula undefined at origin")]
    Origin,

    #[error("oracle singular at origin")]
    OracleOrigin,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid CDF: value {value} at x = {x}")]
    InvalidCdf { x: f64, value: f64 },

    #[error("empty sample")]
    EmptySample,
}
