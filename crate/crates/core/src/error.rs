use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    InvalidPrime(i64),
    #[error("chromatic level must be 0, 1 or 2 (got {0})")]
    InvalidChromatic(u32),
    #[error(
        "chromatic level 2 requires p >= 5 (V(1) is not a ring spectrum below 5), got p = {0}"
    )]
    ChromaticPrime(i64),
    #[error("a virtual representation needs at least one dimension")]
    EmptyRep,
    #[error("weights must be nonzero")]
    ZeroWeight,
    #[error("dimension sequence too short: need {needed} entries, have {len}")]
    RepTooShort { needed: usize, len: usize },
    #[error("the prime operation needs at least two dimensions")]
    PrimeOfLengthOne,
    #[error("r(n)/p is only defined for chromatic level 2")]
    OverPRequiresC2,
    #[error("level must be at least {min} (got {got})")]
    LevelTooSmall { min: u32, got: u32 },
    #[error("degree window [{lo}, {hi}] is empty")]
    EmptyWindow { lo: i64, hi: i64 },
    #[error("{0}")]
    WrongContext(String),
    #[error("tower is not of divisible type: {0}")]
    NotDivisible(String),
    #[error("class or level mismatch: {0}")]
    Mismatch(String),
    #[error("degree window too small: {0}")]
    WindowTooSmall(String),
    #[error("mod p^l lengths have not stabilized at l = {l} in degree {q}")]
    NotStabilized { q: i64, l: u32 },
    #[error("inconsistent length system in degree {q}: {reason}")]
    Inconsistent { q: i64, reason: String },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Errors that point at a bug in the spectral sequence machinery rather
    /// than at bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::Invariant(_)
                | Error::Inconsistent { .. }
                | Error::NotStabilized { .. }
                | Error::WindowTooSmall(_)
        )
    }
}
