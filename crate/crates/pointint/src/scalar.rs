//! Closed-form scalar kernels: branch square roots, the Gamma functions,
//! free and drifted Green functions, and the rank-one resolvent kernel.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::types::{dot, norm, sub, InteractionStrength, SpectralParameter, Vec3, Velocity};

pub const FOUR_PI: f64 = 4.0 * PI;

/// Distance below which kernel evaluation is treated as a coincidence of
/// arguments and refused.
pub const COINCIDENCE_GUARD: f64 = 1e-12;

/// Modulus below which Gamma counts as a resolvent pole.
pub const POLE_GUARD: f64 = 1e-12;

/// Principal square root with positive real part off the negative real axis.
///
/// For z real and nonnegative this is the usual nonnegative root; the closed
/// negative real axis is rejected because no root with Re > 0 exists there.
pub fn branch_sqrt(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re < 0.0 {
        return Err(Error::BranchCut(z));
    }
    let w = z.sqrt();
    debug_assert!(w.re >= 0.0);
    Ok(w)
}

/// Gamma_alpha(lambda) = alpha + sqrt(lambda)/(4 pi).
pub fn gamma_alpha(alpha: InteractionStrength, lambda: SpectralParameter) -> Result<Complex64> {
    let a = alpha.alpha()?;
    Ok(branch_sqrt(lambda.value())? / FOUR_PI + a)
}

/// Gamma_{v,alpha}(lambda) = alpha + sqrt(lambda - |v|^2/4)/(4 pi).
pub fn gamma_v_alpha(
    alpha: InteractionStrength,
    v: Velocity,
    lambda: SpectralParameter,
) -> Result<Complex64> {
    let a = alpha.alpha()?;
    let shifted = lambda.value() - v.norm_sq() / 4.0;
    Ok(branch_sqrt(shifted)? / FOUR_PI + a)
}

/// Free Green function G_lambda(x) = exp(-sqrt(lambda)|x|) / (4 pi |x|).
pub fn green_free(lambda: SpectralParameter, x: Vec3) -> Result<Complex64> {
    let r = norm(x);
    if r < COINCIDENCE_GUARD {
        return Err(Error::SingularPoint(r));
    }
    let kappa = branch_sqrt(lambda.value())?;
    Ok((-kappa * r).exp() / (FOUR_PI * r))
}

/// Drifted Green function
/// G^v_lambda(x) = exp(-sqrt(lambda - |v|^2/4)|x|) / (4 pi |x|) * exp(i v.x / 2).
pub fn green_drift(lambda: SpectralParameter, v: Velocity, x: Vec3) -> Result<Complex64> {
    let r = norm(x);
    if r < COINCIDENCE_GUARD {
        return Err(Error::SingularPoint(r));
    }
    let kappa = branch_sqrt(lambda.value() - v.norm_sq() / 4.0)?;
    let phase = Complex64::new(0.0, dot(v.components(), x) / 2.0).exp();
    Ok((-kappa * r).exp() / (FOUR_PI * r) * phase)
}

/// Resolvent kernel of the drifted point interaction at center 0:
/// G^v(x1-x2) + Gamma^{-1} G^v(x1) G^{-v}(x2). The decoupled sentinel drops
/// the rank-one term.
pub fn resolvent_kernel_point(
    alpha: InteractionStrength,
    v: Velocity,
    lambda: SpectralParameter,
    x1: Vec3,
    x2: Vec3,
) -> Result<Complex64> {
    let free_part = green_drift(lambda, v, sub(x1, x2))?;
    if alpha.is_decoupled() {
        return Ok(free_part);
    }
    let gamma = gamma_v_alpha(alpha, v, lambda)?;
    if gamma.norm() <= POLE_GUARD {
        return Err(Error::ResolventPole(gamma.norm(), lambda.value()));
    }
    let g1 = green_drift(lambda, v, x1)?;
    let g2 = green_drift(lambda, v.reversed(), x2)?;
    Ok(free_part + g1 * g2 / gamma)
}
