//! Spectral claims: bound-state energy and eigenfunction, the Gamma root,
//! the residue structure of the resolvent at its pole, and the norm-resolvent
//! gap between the drifting and resting operators.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{random_state, GridSpec, WaveField};
use crate::hamiltonian::PointInteractionOperator;
use crate::scalar::FOUR_PI;
use crate::types::Velocity;

/// Tail bound required of the box: e^{-kappa L/2} below this, so the periodic
/// images of the bound state do not pollute its samples.
pub const TAIL_BOUND: f64 = 1e-8;

/// Fixed power-iteration length for operator-norm estimates.
pub const POWER_ITERATIONS: usize = 30;

/// Deltas used for the approach to the resolvent pole.
pub const RESIDUE_DELTAS: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    /// Bottom of the essential spectrum, -|v|^2/4.
    pub essential_edge: f64,
    /// The single negative eigenvalue, present iff alpha < 0.
    pub point_spectrum: Option<f64>,
    /// Root of Gamma_{v,alpha}; point_spectrum = -gamma_root when present.
    pub gamma_root: Option<f64>,
    /// Normalized eigenfunction sample, when a grid was supplied and alpha < 0.
    /// Skipped in JSON output (use the binary field format for snapshots).
    #[serde(skip)]
    pub eigenfunction: Option<WaveField>,
}

/// Root of Gamma_{v,alpha}(lambda) = alpha + sqrt(lambda - |v|^2/4)/(4 pi) on
/// the real half-line, by bracketed bisection. None for alpha >= 0: Gamma is
/// then positive wherever the square root is real.
pub fn gamma_root(alpha: f64, v: Velocity) -> Option<f64> {
    if alpha >= 0.0 {
        return None;
    }
    let edge = v.norm_sq() / 4.0;
    let f = |lambda: f64| alpha + ((lambda - edge).max(0.0)).sqrt() / FOUR_PI;
    let mut lo = edge;
    let mut hi = edge + 4.0 * (FOUR_PI * alpha).powi(2);
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// The single point eigenvalue -(4 pi alpha)^2 - |v|^2/4, present iff alpha < 0.
pub fn bound_state_energy(alpha: f64, v: Velocity) -> Option<f64> {
    gamma_root(alpha, v).map(|l| -l)
}

/// Sampled eigenfunction G^v_{lambda0}, normalized to unit grid norm. The box
/// must hold the exponential tail: e^{-kappa L/2} < 1e-8 with kappa = -4 pi alpha.
pub fn bound_state_field(alpha: f64, v: Velocity, grid: GridSpec) -> Result<WaveField> {
    if alpha >= 0.0 {
        return Err(Error::Config(
            "no bound state for alpha >= 0".into(),
        ));
    }
    let kappa = -FOUR_PI * alpha;
    let needed = 2.0 * (-TAIL_BOUND.ln()) / kappa;
    if (-kappa * grid.length() / 2.0).exp() >= TAIL_BOUND {
        return Err(Error::BoxTooSmall(grid.length(), needed));
    }
    let lambda0 = gamma_root(alpha, v).expect("alpha < 0 has a root");
    let g = crate::forms::sampled_green(
        grid,
        Complex64::new(lambda0, 0.0),
        crate::forms::GreenFlavor::Drift(v),
    )?;
    Ok(g.normalized())
}

/// Full spectral summary; the eigenfunction is sampled when a grid is given.
pub fn spectrum_report(alpha: f64, v: Velocity, grid: Option<GridSpec>) -> Result<SpectrumReport> {
    let root = gamma_root(alpha, v);
    let eigenfunction = match (root, grid) {
        (Some(_), Some(g)) => Some(bound_state_field(alpha, v, g)?),
        _ => None,
    };
    Ok(SpectrumReport {
        essential_edge: -v.norm_sq() / 4.0,
        point_spectrum: root.map(|l| -l),
        gamma_root: root,
        eigenfunction,
    })
}

/// Diagnostics from the approach to the resolvent pole.
#[derive(Clone, Debug)]
pub struct ResidueCheck {
    /// || delta K(lambda0 + delta) f - phi <phi, f> || / ||f|| per delta.
    pub projection_defects: Vec<f64>,
    /// |trace of the limiting rank-one map - 1|, Richardson-extrapolated.
    pub trace_defect: f64,
    /// Relative leakage of the limit map on a vector orthogonal to the
    /// bound state, Richardson-extrapolated.
    pub orthogonal_defect: f64,
}

impl ResidueCheck {
    pub fn final_defect(&self) -> f64 {
        *self.projection_defects.last().expect("nonempty deltas")
    }
}

/// Verifies that (lambda - lambda0) K(lambda) converges to the rank-one
/// projection onto the discrete bound state as lambda approaches the pole
/// lambda0 from above. Requires the coupling calibrated at lambda* = lambda0
/// so the discrete pole sits exactly there.
pub fn residue_projection_check(
    p: &PointInteractionOperator,
    lambda0: f64,
    seed: u64,
) -> Result<ResidueCheck> {
    let grid = p.base().grid();
    let phi = p.base().green_field(Complex64::new(lambda0, 0.0))?.normalized();
    let f = random_state(grid, seed).normalized();

    let scaled_resolvent = |delta: f64, x: &WaveField| -> Result<WaveField> {
        let r = p.resolvent(Complex64::new(lambda0 + delta, 0.0), x, true)?;
        Ok(r.scaled(Complex64::new(delta, 0.0)))
    };

    let overlap = phi.inner(&f)?;
    let mut projection_defects = Vec::with_capacity(RESIDUE_DELTAS.len());
    for &delta in &RESIDUE_DELTAS {
        let m = scaled_resolvent(delta, &f)?;
        let defect = m.sub(&phi.scaled(overlap))?.norm();
        projection_defects.push(defect);
    }

    // Richardson over the last two deltas (ratio 10): kills the O(delta)
    // contamination from the rest of the spectrum.
    let richardson = |coarse: &WaveField, fine: &WaveField| -> Result<WaveField> {
        fine.scaled(Complex64::new(10.0 / 9.0, 0.0))
            .axpy(Complex64::new(-1.0 / 9.0, 0.0), coarse)
    };

    let t1 = phi.inner(&scaled_resolvent(RESIDUE_DELTAS[1], &phi)?)?;
    let t2 = phi.inner(&scaled_resolvent(RESIDUE_DELTAS[2], &phi)?)?;
    let trace = (10.0 * t2 - t1) / 9.0;
    let trace_defect = (trace - 1.0).norm();

    let mut perp = f.axpy(-overlap, &phi)?;
    perp = perp.normalized();
    let m1 = scaled_resolvent(RESIDUE_DELTAS[1], &perp)?;
    let m2 = scaled_resolvent(RESIDUE_DELTAS[2], &perp)?;
    let orthogonal_defect = richardson(&m1, &m2)?.norm();

    Ok(ResidueCheck {
        projection_defects,
        trace_defect,
        orthogonal_defect,
    })
}

/// Power-iteration estimate of || K_v(lambda) - K_0(lambda) ||. Both operators
/// carry the default coupling calibration for their own velocity. The
/// difference of two self-adjoint resolvents at real lambda is self-adjoint,
/// so straight power iteration converges to the operator norm.
pub fn norm_resolvent_gap(
    alpha: f64,
    v: Velocity,
    lambda: f64,
    grid: GridSpec,
    seed: u64,
) -> Result<f64> {
    let moving = PointInteractionOperator::with_default_calibration(grid, v, alpha)?;
    let resting = PointInteractionOperator::with_default_calibration(grid, Velocity::zero(), alpha)?;
    let lam = Complex64::new(lambda, 0.0);
    let diff = |x: &WaveField| -> Result<WaveField> {
        moving
            .resolvent(lam, x, false)?
            .sub(&resting.resolvent(lam, x, false)?)
    };
    let mut b = random_state(grid, seed).normalized();
    let mut sigma = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let db = diff(&b)?;
        sigma = db.norm();
        if sigma == 0.0 {
            return Ok(0.0);
        }
        b = db.scaled(Complex64::new(1.0 / sigma, 0.0));
    }
    Ok(sigma)
}
