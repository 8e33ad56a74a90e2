use num_complex::Complex64;
use thiserror::Error;

/// Errors for kernel evaluation, grid calculus and evolution runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("branch cut: {0} lies on the closed negative real axis")]
    BranchCut(Complex64),
    #[error("singular point: |x| = {0:.3e} is inside the coincidence guard")]
    SingularPoint(f64),
    #[error("resolvent pole: |Gamma| = {0:.3e} at lambda = {1}")]
    ResolventPole(f64, Complex64),
    #[error("resolvent set violation: min |s(k)+lambda| = {0:.3e}")]
    ResolventSet(f64),
    #[error("interaction strength is decoupled where a finite alpha is required")]
    DecoupledStrength,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("degenerate coupling: Gamma + G_d vanishes at the calibration point")]
    DegenerateCoupling,
    #[error("box too small: tail bound {0:.3e} exceeds {1:.3e}")]
    BoxTooSmall(f64, f64),
    #[error("state mismatch: {0}")]
    StateMismatch(String),
    #[error("mollifier width {0} under-resolved, need at least {1}")]
    UnderResolvedMollifier(f64, f64),
    #[error("charge fit ill-conditioned: {0}")]
    IllConditionedFit(String),
    #[error("time {0} is not aligned with the step lattice (dt = {1})")]
    MisalignedTime(f64, f64),
    #[error("dense materialization limited to n <= {0}, got n = {1}")]
    DenseTooLarge(usize, usize),
    #[error("spectral parameter {0} below the form lower bound {1}")]
    BelowFormBound(f64, f64),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code for the CLI: 2 for configuration problems, 3 for numerical guards.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }

    /// Short stable name of the guard that tripped, for report files.
    pub fn guard_name(&self) -> &'static str {
        match self {
            Error::BranchCut(_) => "branch_cut",
            Error::SingularPoint(_) => "singular_point",
            Error::ResolventPole(_, _) => "resolvent_pole",
            Error::ResolventSet(_) => "resolvent_set",
            Error::DecoupledStrength => "decoupled_strength",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::DegenerateCoupling => "degenerate_coupling",
            Error::BoxTooSmall(_, _) => "box_too_small",
            Error::StateMismatch(_) => "state_mismatch",
            Error::UnderResolvedMollifier(_, _) => "under_resolved_mollifier",
            Error::IllConditionedFit(_) => "ill_conditioned_fit",
            Error::MisalignedTime(_, _) => "misaligned_time",
            Error::DenseTooLarge(_, _) => "dense_too_large",
            Error::BelowFormBound(_, _) => "below_form_bound",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
