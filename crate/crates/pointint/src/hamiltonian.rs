//! The drifted Hamiltonian H_v = -Laplacian + i v.grad as a spectral
//! multiplier, and the grid point interaction as a rank-one perturbation
//! H_v + g delta x delta with an h-dependent renormalized coupling.
//!
//! Every resolvent here is exactly the resolvent of one self-adjoint matrix,
//! so unitarity and the resolvent identities hold to machine precision; the
//! continuum limit is a convergence statement that the tests measure.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{spectral_forward, spectral_inverse, FourierField, GridSpec, WaveField};
use crate::par;
use crate::scalar::{gamma_v_alpha, POLE_GUARD};
use crate::types::{norm_sq, InteractionStrength, Velocity};

/// Modulus below which s(k) + lambda counts as a resolvent-set violation.
pub const RESOLVENT_GUARD: f64 = 1e-12;

/// Largest per-axis grid size for dense materialization.
pub const DENSE_LIMIT: usize = 12;

/// H_v as the real spectral symbol s(k) = |k|^2 - v.k per grid mode.
#[derive(Clone, Debug)]
pub struct DriftHamiltonian {
    grid: GridSpec,
    v: Velocity,
    symbol: Vec<f64>,
}

impl DriftHamiltonian {
    pub fn new(grid: GridSpec, v: Velocity) -> Self {
        let mut symbol = vec![0.0; grid.size()];
        for (i, s) in symbol.iter_mut().enumerate() {
            let k = grid.wavevector(i);
            *s = norm_sq(k) - v.dot(k);
        }
        DriftHamiltonian { grid, v, symbol }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn velocity(&self) -> Velocity {
        self.v
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// Multiplication by s(k) in the spectral domain.
    pub fn apply(&self, f: &WaveField) -> Result<WaveField> {
        self.check_grid(f)?;
        let mut hat = spectral_forward(f);
        let sym = &self.symbol;
        par::map_indexed(&mut hat.values, |i, v| v * sym[i]);
        Ok(spectral_inverse(&hat))
    }

    fn check_grid(&self, f: &WaveField) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", f.grid, self.grid)));
        }
        Ok(())
    }

    fn check_resolvent_set(&self, lambda: Complex64) -> Result<()> {
        let min = self
            .symbol
            .iter()
            .map(|&s| (s + lambda).norm())
            .fold(f64::INFINITY, f64::min);
        if min <= RESOLVENT_GUARD {
            return Err(Error::ResolventSet(min));
        }
        Ok(())
    }

    /// (H_v + lambda)^{-1} f via the multiplier 1/(s(k) + lambda).
    pub fn resolvent(&self, lambda: Complex64, f: &WaveField) -> Result<WaveField> {
        self.check_grid(f)?;
        self.check_resolvent_set(lambda)?;
        let mut hat = spectral_forward(f);
        let sym = &self.symbol;
        par::map_indexed(&mut hat.values, |i, v| v / (sym[i] + lambda));
        Ok(spectral_inverse(&hat))
    }

    /// Discrete Green value at the origin, G_d(lambda; 0) = L^-3 sum_k 1/(s(k)+lambda).
    pub fn green_origin(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_resolvent_set(lambda)?;
        let sym = &self.symbol;
        let sum = par::sum_indexed(sym.len(), |i| 1.0 / (sym[i] + lambda));
        Ok(sum / self.grid.length().powi(3))
    }

    /// Discrete Green field G_d(lambda; .) = (H_v + lambda)^{-1} delta.
    pub fn green_field(&self, lambda: Complex64) -> Result<WaveField> {
        self.check_resolvent_set(lambda)?;
        let c = 1.0 / ((self.grid.n() as f64).powf(1.5) * self.grid.cell_volume());
        let mut hat = FourierField::zeros(self.grid);
        let sym = &self.symbol;
        par::fill_indexed(&mut hat.values, |i| c / (sym[i] + lambda));
        Ok(spectral_inverse(&hat))
    }
}

/// Default calibration point: pins the bound state for alpha < 0, a unit
/// shift above the form bound otherwise.
pub fn default_lambda_star(alpha: f64, v: Velocity) -> f64 {
    if alpha < 0.0 {
        (4.0 * std::f64::consts::PI * alpha).powi(2) + v.norm_sq() / 4.0
    } else {
        1.0 + v.norm_sq() / 4.0
    }
}

/// Solves -1/g = Gamma_{v,alpha}(lambda*) + G_d(lambda*; 0) so the discrete
/// Gamma_d(lambda) = -1/g - G_d(lambda; 0) matches the continuum Gamma
/// exactly at the calibration point.
pub fn renormalize_coupling(
    alpha: f64,
    v: Velocity,
    grid: GridSpec,
    lambda_star: f64,
) -> Result<f64> {
    let base = DriftHamiltonian::new(grid, v);
    renormalize_coupling_with(&base, alpha, lambda_star)
}

fn renormalize_coupling_with(base: &DriftHamiltonian, alpha: f64, lambda_star: f64) -> Result<f64> {
    let gamma = gamma_v_alpha(
        InteractionStrength::Coupled(alpha),
        base.velocity(),
        lambda_star.into(),
    )?;
    let gd = base.green_origin(lambda_star.into())?;
    let denom = gamma + gd;
    if denom.norm() <= 1e-14 * gd.norm().max(1.0) {
        return Err(Error::DegenerateCoupling);
    }
    let g = -1.0 / denom;
    debug_assert!(g.im.abs() <= 1e-10 * g.re.abs().max(1.0));
    Ok(g.re)
}

/// The drifted point interaction on the grid: H_v + g delta x delta.
#[derive(Clone, Debug)]
pub struct PointInteractionOperator {
    base: DriftHamiltonian,
    alpha: InteractionStrength,
    coupling: Option<f64>,
    lambda_star: Option<f64>,
}

impl PointInteractionOperator {
    /// Coupled operator, calibrated so Gamma_d(lambda*) = Gamma_{v,alpha}(lambda*).
    pub fn calibrated(grid: GridSpec, v: Velocity, alpha: f64, lambda_star: f64) -> Result<Self> {
        let base = DriftHamiltonian::new(grid, v);
        let g = renormalize_coupling_with(&base, alpha, lambda_star)?;
        Ok(PointInteractionOperator {
            base,
            alpha: InteractionStrength::Coupled(alpha),
            coupling: Some(g),
            lambda_star: Some(lambda_star),
        })
    }

    /// Coupled operator with the default calibration rule.
    pub fn with_default_calibration(grid: GridSpec, v: Velocity, alpha: f64) -> Result<Self> {
        Self::calibrated(grid, v, alpha, default_lambda_star(alpha, v))
    }

    /// Free comparison dynamics: no rank-one term.
    pub fn decoupled(grid: GridSpec, v: Velocity) -> Self {
        PointInteractionOperator {
            base: DriftHamiltonian::new(grid, v),
            alpha: InteractionStrength::Decoupled,
            coupling: None,
            lambda_star: None,
        }
    }

    pub fn base(&self) -> &DriftHamiltonian {
        &self.base
    }

    pub fn alpha(&self) -> InteractionStrength {
        self.alpha
    }

    pub fn coupling(&self) -> Option<f64> {
        self.coupling
    }

    pub fn lambda_star(&self) -> Option<f64> {
        self.lambda_star
    }

    /// Discrete Gamma function Gamma_d(lambda) = -1/g - G_d(lambda; 0).
    pub fn gamma_d(&self, lambda: Complex64) -> Result<Complex64> {
        let g = self.coupling.ok_or(Error::DecoupledStrength)?;
        Ok(-1.0 / g - self.base.green_origin(lambda)?)
    }

    /// (H_v + g delta x delta) f.
    pub fn apply(&self, f: &WaveField) -> Result<WaveField> {
        let mut out = self.base.apply(f)?;
        if let Some(g) = self.coupling {
            out.values[0] += g / self.base.grid().cell_volume() * f.values[0];
        }
        Ok(out)
    }

    /// Krein / Sherman-Morrison resolvent:
    /// K(lambda) f = R0 f + Gamma_d(lambda)^{-1} (R0 f)(0) R0 delta.
    pub fn resolvent(&self, lambda: Complex64, f: &WaveField, allow_pole: bool) -> Result<WaveField> {
        let r0 = self.base.resolvent(lambda, f)?;
        if self.coupling.is_none() {
            return Ok(r0);
        }
        let gamma_d = self.gamma_d(lambda)?;
        if !allow_pole && gamma_d.norm() <= POLE_GUARD {
            return Err(Error::ResolventPole(gamma_d.norm(), lambda));
        }
        let green = self.base.green_field(lambda)?;
        r0.axpy(r0.value_at_origin() / gamma_d, &green)
    }

    fn check_dense(&self) -> Result<()> {
        let n = self.base.grid().n();
        if n > DENSE_LIMIT {
            return Err(Error::DenseTooLarge(DENSE_LIMIT, n));
        }
        Ok(())
    }

    /// Explicit matrix of the perturbed operator in the position basis.
    /// Tiny grids only; this is the brute-force oracle.
    pub fn dense_hamiltonian(&self) -> Result<DMatrix<Complex64>> {
        self.check_dense()?;
        let grid = self.base.grid();
        let size = grid.size();
        let mut mat = DMatrix::<Complex64>::zeros(size, size);
        for j in 0..size {
            let mut basis = WaveField::zeros(grid);
            basis.values[j] = Complex64::new(1.0, 0.0);
            let col = self.apply(&basis)?;
            for i in 0..size {
                mat[(i, j)] = col.values[i];
            }
        }
        Ok(mat)
    }

    /// Dense (H + lambda)^{-1} by LU inversion, for equivalence tests.
    pub fn dense_resolvent(&self, lambda: Complex64) -> Result<DMatrix<Complex64>> {
        let mut mat = self.dense_hamiltonian()?;
        let size = mat.nrows();
        for i in 0..size {
            mat[(i, i)] += lambda;
        }
        mat.lu()
            .try_inverse()
            .ok_or(Error::ResolventSet(0.0))
    }

    /// Sorted real eigenvalues of the dense materialization.
    pub fn dense_eigenvalues(&self) -> Result<Vec<f64>> {
        let mat = self.dense_hamiltonian()?;
        let eig = mat.symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(vals)
    }
}

/// Applies i L_v = i v.grad, the skew part of the drifted generator, as the
/// real spectral multiplier -v.k.
pub fn apply_i_lv(f: &WaveField, v: Velocity) -> WaveField {
    let grid = f.grid;
    let mut hat = spectral_forward(f);
    par::map_indexed(&mut hat.values, |i, c| c * -v.dot(grid.wavevector(i)));
    spectral_inverse(&hat)
}
