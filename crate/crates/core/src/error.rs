use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("order {order} / argument {arg} outside the supported range")]
    Range { order: u32, arg: f64 },

    #[error("coordinate map is singular at the origin")]
    SingularPoint,

    #[error("point with radius {radius} lies outside the domain ({what})")]
    Domain { radius: f64, what: &'static str },

    #[error("material parameters are singular on the cloaking surface |x| = 1")]
    SingularSurface,

    #[error("Jacobian is singular")]
    DegenerateJacobian,

    #[error("mode {n}: common denominator D_n vanished ({value:e})")]
    DegenerateDenominator { n: i32, value: f64 },

    #[error("mode {n}: frequency is a transmission eigenvalue (|J + s H| = {margin:e})")]
    TransmissionEigenvalue { n: i32, margin: f64 },

    #[error("mode {n}: linear system is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned {
        n: i32,
        condition: f64,
        coeffs: crate::mode_solver::ModeCoefficients,
    },

    #[error("mode {n}: linear system is singular")]
    SingularSystem { n: i32 },

    #[error("mode {n}: interior gain denominator B_n vanished")]
    ResonanceSingular { n: i32 },

    #[error("mode {n}: frequency is resonant for the non-local boundary problem (|g_n| = {margin:e})")]
    ResonantFrequency { n: i32, margin: f64 },

    #[error("field evaluation at the source singularity (r = {radius:e})")]
    OriginSingular { radius: f64 },

    #[error("mode {n}: 3ω is a Dirichlet eigenvalue of the vacuum disc")]
    VacuumDirichletEigenvalue { n: i32 },

    #[error("mode {n}: finite-difference system is singular (near resonance)")]
    OracleSingular { n: i32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sweep step k = {k}: {source}")]
    AtSweepStep { k: u32, source: Box<Error> },
}
