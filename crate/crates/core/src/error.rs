use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coupling eta = {0} outside [-{max}, {max}]", max = crate::sbs::ETA_MAX)]
    EtaOutOfRange(f64),
    #[error("excitation index {0} exceeds N_MAX = {max}", max = crate::sbs::N_MAX)]
    ExcitationTooHigh(u32),
    #[error("states carry different couplings ({0} vs {1})")]
    CouplingMismatch(f64, f64),
    #[error("monomial degree {0} exceeds the moment engine cap {max}", max = crate::moments::MAX_DEGREE)]
    DegreeCap(u32),
    #[error("state is not normalized: <f,f> = {0}")]
    NotNormalized(f64),
    #[error("quadratic form is not positive definite")]
    NotPositiveDefinite,
    #[error("Gauss-Hermite order {0} outside [1, 200]")]
    OrderOutOfRange(usize),
    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),
    #[error("imaginary residue {0:e} in |P|^2 expansion")]
    ImaginaryResidue(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
