use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real 3-vector used for positions, momenta and velocities.
pub type Vec3 = [f64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm_sq(a: Vec3) -> f64 {
    dot(a, a)
}

pub fn norm(a: Vec3) -> f64 {
    norm_sq(a).sqrt()
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: Vec3, c: f64) -> Vec3 {
    [a[0] * c, a[1] * c, a[2] * c]
}

pub fn neg(a: Vec3) -> Vec3 {
    [-a[0], -a[1], -a[2]]
}

/// Complex spectral shift lambda. All closed forms are continued off the
/// real axis through the principal square root; the closed negative real
/// axis of lambda - |v|^2/4 stays excluded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParameter(pub Complex64);

impl SpectralParameter {
    pub fn real(lambda: f64) -> Self {
        SpectralParameter(Complex64::new(lambda, 0.0))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

impl From<f64> for SpectralParameter {
    fn from(x: f64) -> Self {
        SpectralParameter::real(x)
    }
}

impl From<Complex64> for SpectralParameter {
    fn from(z: Complex64) -> Self {
        SpectralParameter(z)
    }
}

/// Extension parameter alpha, with a sentinel for the free (decoupled)
/// comparison dynamics where the rank-one term is absent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InteractionStrength {
    Coupled(f64),
    Decoupled,
}

impl InteractionStrength {
    pub fn alpha(self) -> Result<f64> {
        match self {
            InteractionStrength::Coupled(a) if a.is_finite() => Ok(a),
            InteractionStrength::Coupled(_) => Err(Error::Config(
                "interaction strength must be finite".into(),
            )),
            InteractionStrength::Decoupled => Err(Error::DecoupledStrength),
        }
    }

    pub fn is_decoupled(self) -> bool {
        matches!(self, InteractionStrength::Decoupled)
    }
}

/// Drift velocity vector v.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Velocity(pub Vec3);

impl Velocity {
    pub fn zero() -> Self {
        Velocity([0.0; 3])
    }

    pub fn components(self) -> Vec3 {
        self.0
    }

    pub fn norm_sq(self) -> f64 {
        norm_sq(self.0)
    }

    pub fn norm(self) -> f64 {
        norm(self.0)
    }

    pub fn dot(self, x: Vec3) -> f64 {
        dot(self.0, x)
    }

    pub fn reversed(self) -> Self {
        Velocity(neg(self.0))
    }
}
