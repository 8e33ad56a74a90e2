//! Periodic-box discretization: complex fields on an n^3 grid, a unitary
//! spectral transform, translations and gauge phases, and test states.
//!
//! Coordinates are centered, x in [-L/2, L/2)^3, with the origin at grid
//! index (0,0,0). Wave numbers are k = 2 pi m / L over the symmetric integer
//! range. The point interaction acquires periodic images whose effect decays
//! like exp(-Re sqrt(lambda - |v|^2/4) L); the box must be chosen so that
//! monitored states keep their boundary tails below the leakage threshold.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::par;
use crate::types::{dot, sub, Vec3, Velocity};

/// Relative boundary tail above which a state is flagged as leaking.
pub const TAIL_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    n: usize,
    length: f64,
}

impl GridSpec {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n must be even and at least 4, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        Ok(GridSpec { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of grid points n^3.
    pub fn size(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Signed coordinate of 1D index i, in [-L/2, L/2).
    pub fn coord_1d(&self, i: usize) -> f64 {
        let m = if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        };
        m as f64 * self.spacing()
    }

    /// Wave number 2 pi m / L for the symmetric integer m of index i.
    pub fn wavenumber_1d(&self, i: usize) -> f64 {
        let m = if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        };
        2.0 * std::f64::consts::PI * m as f64 / self.length
    }

    pub fn index_of(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        [flat / (n * n), (flat / n) % n, flat % n]
    }

    pub fn point(&self, flat: usize) -> Vec3 {
        let [ix, iy, iz] = self.unflatten(flat);
        [self.coord_1d(ix), self.coord_1d(iy), self.coord_1d(iz)]
    }

    pub fn wavevector(&self, flat: usize) -> Vec3 {
        let [ix, iy, iz] = self.unflatten(flat);
        [
            self.wavenumber_1d(ix),
            self.wavenumber_1d(iy),
            self.wavenumber_1d(iz),
        ]
    }

    fn check_match(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Complex field sampled on the grid, physical-space representation.
#[derive(Clone, Debug)]
pub struct WaveField {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

/// Spectral-side counterpart of `WaveField`; same layout, coefficients
/// indexed by wave vector.
#[derive(Clone, Debug)]
pub struct FourierField {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl WaveField {
    pub fn zeros(grid: GridSpec) -> Self {
        WaveField {
            grid,
            values: vec![Complex64::default(); grid.size()],
        }
    }

    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn(Vec3) -> Complex64 + Sync,
    {
        let mut field = WaveField::zeros(grid);
        par::fill_indexed(&mut field.values, |i| f(grid.point(i)));
        field
    }

    /// Unit-mass lattice delta: 1/h^3 at the origin node so that
    /// <delta, f> = f(0).
    pub fn delta(grid: GridSpec) -> Self {
        let mut field = WaveField::zeros(grid);
        field.values[0] = Complex64::new(1.0 / grid.cell_volume(), 0.0);
        field
    }

    pub fn norm_sq(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        self.grid.cell_volume() * s
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product conjugating the first argument.
    pub fn inner(&self, other: &WaveField) -> Result<Complex64> {
        self.grid.check_match(&other.grid)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn value_at_origin(&self) -> Complex64 {
        self.values[0]
    }

    pub fn scale_mut(&mut self, c: Complex64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: Complex64) -> WaveField {
        let mut out = self.clone();
        out.scale_mut(c);
        out
    }

    pub fn add(&self, other: &WaveField) -> Result<WaveField> {
        self.grid.check_match(&other.grid)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &WaveField) -> Result<WaveField> {
        self.grid.check_match(&other.grid)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        Ok(out)
    }

    /// self + c * other.
    pub fn axpy(&self, c: Complex64, other: &WaveField) -> Result<WaveField> {
        self.grid.check_match(&other.grid)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(out)
    }

    pub fn normalized(&self) -> WaveField {
        self.scaled(Complex64::new(1.0 / self.norm(), 0.0))
    }
}

impl FourierField {
    pub fn zeros(grid: GridSpec) -> Self {
        FourierField {
            grid,
            values: vec![Complex64::default(); grid.size()],
        }
    }

    pub fn norm_sq(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        self.grid.cell_volume() * s
    }

    pub fn inner(&self, other: &FourierField) -> Result<Complex64> {
        self.grid.check_match(&other.grid)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell_volume())
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().unwrap();
    if forward {
        p.plan_fft_forward(n)
    } else {
        p.plan_fft_inverse(n)
    }
}

fn chunks<T, F>(parallel: bool, data: &mut [T], size: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    if parallel {
        par::for_each_chunk_mut(data, size, f);
    } else {
        par::for_each_chunk_mut_seq(data, size, f);
    }
}

/// In-place 3D FFT over all three axes, unnormalized.
fn fft3(values: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>, parallel: bool) {
    let n2 = n * n;
    // z axis: contiguous lines.
    chunks(parallel, values, n, |_, line| fft.process(line));
    // y axis: stride-n lines inside each contiguous x-slab.
    chunks(parallel, values, n2, |_, slab| {
        let mut line = vec![Complex64::default(); n];
        for iz in 0..n {
            for (iy, l) in line.iter_mut().enumerate() {
                *l = slab[iy * n + iz];
            }
            fft.process(&mut line);
            for (iy, l) in line.iter().enumerate() {
                slab[iy * n + iz] = *l;
            }
        }
    });
    // x axis: stride n^2. Gather into an x-contiguous scratch, transform,
    // scatter back.
    let mut scratch = vec![Complex64::default(); values.len()];
    {
        let src = &*values;
        chunks(parallel, &mut scratch, n, |c, row| {
            let (iy, iz) = (c / n, c % n);
            for (ix, r) in row.iter_mut().enumerate() {
                *r = src[(ix * n + iy) * n + iz];
            }
            fft.process(row);
        });
    }
    let src = &scratch;
    chunks(parallel, values, n2, |ix, slab| {
        for iy in 0..n {
            for iz in 0..n {
                slab[iy * n + iz] = src[(iy * n + iz) * n + ix];
            }
        }
    });
}

fn forward_impl(f: &WaveField, parallel: bool) -> FourierField {
    let n = f.grid.n();
    let fft = plan(n, true);
    let mut values = f.values.clone();
    fft3(&mut values, n, &fft, parallel);
    let scale = 1.0 / (n as f64).powf(1.5);
    for v in &mut values {
        *v *= scale;
    }
    FourierField {
        grid: f.grid,
        values,
    }
}

fn inverse_impl(f: &FourierField, parallel: bool) -> WaveField {
    let n = f.grid.n();
    let fft = plan(n, false);
    let mut values = f.values.clone();
    fft3(&mut values, n, &fft, parallel);
    let scale = 1.0 / (n as f64).powf(1.5);
    for v in &mut values {
        *v *= scale;
    }
    WaveField {
        grid: f.grid,
        values,
    }
}

/// Unitary spectral transform (forward).
pub fn spectral_forward(f: &WaveField) -> FourierField {
    forward_impl(f, cfg!(feature = "parallel"))
}

/// Unitary spectral transform (inverse of `spectral_forward`).
pub fn spectral_inverse(f: &FourierField) -> WaveField {
    inverse_impl(f, cfg!(feature = "parallel"))
}

/// Forced-sequential forward transform, for benchmarking against the
/// parallel path.
pub fn spectral_forward_seq(f: &WaveField) -> FourierField {
    forward_impl(f, false)
}

/// Forced-sequential inverse transform.
pub fn spectral_inverse_seq(f: &FourierField) -> WaveField {
    inverse_impl(f, false)
}

/// Applies a spectral multiplier: forward transform, multiply coefficient of
/// wave vector k by m(flat_index, k), inverse transform.
pub fn apply_spectral_multiplier<F>(f: &WaveField, m: F) -> WaveField
where
    F: Fn(usize, Vec3) -> Complex64 + Sync,
{
    let grid = f.grid;
    let mut hat = spectral_forward(f);
    par::map_indexed(&mut hat.values, |i, v| v * m(i, grid.wavevector(i)));
    spectral_inverse(&hat)
}

/// Translation psi(.) -> psi(. + y), realized as a spectral phase. Exactly
/// unitary for any y, grid-aligned or not.
pub fn translate(f: &WaveField, y: Vec3) -> WaveField {
    apply_spectral_multiplier(f, |_, k| Complex64::new(0.0, dot(k, y)).exp())
}

/// Gauge phase psi -> exp(i v.x/2) psi with the centered coordinate x.
pub fn phase_v(f: &WaveField, v: Velocity) -> WaveField {
    let grid = f.grid;
    let mut out = f.clone();
    par::map_indexed(&mut out.values, |i, val| {
        val * Complex64::new(0.0, v.dot(grid.point(i)) / 2.0).exp()
    });
    out
}

/// Normalized Gaussian wave packet exp(-|x-c|^2/(4 w^2)) exp(i p.x).
///
/// Logs a warning when the boundary tail exceeds `TAIL_THRESHOLD` relative
/// to the peak.
pub fn gaussian_state(grid: GridSpec, center: Vec3, width: f64, momentum: Vec3) -> Result<WaveField> {
    if !(width > 0.0) {
        return Err(Error::Config(format!("gaussian width must be positive, got {width}")));
    }
    let field = WaveField::from_fn(grid, |x| {
        let d = sub(x, center);
        let r2 = dot(d, d);
        Complex64::new(-r2 / (4.0 * width * width), dot(momentum, x)).exp()
    });
    let peak = field.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tail = boundary_max(&field) / peak;
    if tail > TAIL_THRESHOLD {
        log::warn!(
            "gaussian_state: boundary tail {tail:.3e} exceeds {TAIL_THRESHOLD:.0e}; \
             the box is too small for this state"
        );
    }
    Ok(field.normalized())
}

/// Largest |psi| on the three seam faces x_i = -L/2.
pub fn boundary_max(f: &WaveField) -> f64 {
    let n = f.grid.n();
    let half = n / 2;
    let mut m: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            m = m.max(f.values[f.grid.index_of(half, a, b)].norm());
            m = m.max(f.values[f.grid.index_of(a, half, b)].norm());
            m = m.max(f.values[f.grid.index_of(a, b, half)].norm());
        }
    }
    m
}

/// Writes a field as flat binary: u32 n, f64 L (little-endian), then
/// interleaved re/im doubles in index order.
pub fn write_field_binary<P: AsRef<Path>>(f: &WaveField, path: P) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&(f.grid.n() as u32).to_le_bytes())?;
    w.write_all(&f.grid.length().to_le_bytes())?;
    for v in &f.values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_binary<P: AsRef<Path>>(path: P) -> Result<WaveField> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let length = f64::from_le_bytes(b8);
    let grid = GridSpec::new(n, length)?;
    let mut field = WaveField::zeros(grid);
    for v in &mut field.values {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        *v = Complex64::new(re, im);
    }
    Ok(field)
}

/// Coordinate plane through the origin for slice exports.
/// Seeded complex white noise on the grid, unnormalized. Used by the audit
/// commands and the spectral estimators.
pub fn random_state(grid: GridSpec, seed: u64) -> WaveField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut f = WaveField::zeros(grid);
    for v in &mut f.values {
        *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    f
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlicePlane {
    Xy,
    Xz,
    Yz,
}

/// Writes |psi| on a coordinate plane through the origin as a grayscale PNG.
pub fn write_slice_png<P: AsRef<Path>>(f: &WaveField, plane: SlicePlane, path: P) -> Result<()> {
    let n = f.grid.n();
    let mut img = image::GrayImage::new(n as u32, n as u32);
    let mut vals = vec![0.0f64; n * n];
    for a in 0..n {
        for b in 0..n {
            let idx = match plane {
                SlicePlane::Xy => f.grid.index_of(a, b, 0),
                SlicePlane::Xz => f.grid.index_of(a, 0, b),
                SlicePlane::Yz => f.grid.index_of(0, a, b),
            };
            vals[a * n + b] = f.values[idx].norm();
        }
    }
    let max = vals.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for a in 0..n {
        for b in 0..n {
            let g = (vals[a * n + b] / max * 255.0).round() as u8;
            img.put_pixel(b as u32, a as u32, image::Luma([g]));
        }
    }
    img.save(path)
        .map_err(|e| Error::Config(format!("png write failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_field;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid16() -> GridSpec {
        GridSpec::new(16, 8.0).unwrap()
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(GridSpec::new(3, 1.0).is_err());
        assert!(GridSpec::new(5, 1.0).is_err());
        assert!(GridSpec::new(8, 0.0).is_err());
        assert!(GridSpec::new(8, -1.0).is_err());
    }

    #[test]
    fn coordinates_are_centered_with_origin_node() {
        let g = grid16();
        assert_eq!(g.coord_1d(0), 0.0);
        assert_eq!(g.coord_1d(8), -4.0);
        assert_eq!(g.coord_1d(15), -0.5);
        assert_eq!(g.coord_1d(7), 3.5);
        assert_eq!(g.point(0), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn constant_field_transforms_to_zero_mode() {
        let g = grid16();
        let f = WaveField::from_fn(g, |_| Complex64::new(1.0, 0.0));
        let hat = spectral_forward(&f);
        let n3 = g.size() as f64;
        assert_relative_eq!(hat.values[0].re, n3.sqrt(), max_relative = 1e-13);
        for (i, v) in hat.values.iter().enumerate().skip(1) {
            assert!(v.norm() < 1e-11, "mode {i} leaked: {v}");
        }
    }

    #[test]
    fn plane_wave_is_single_coefficient() {
        let g = grid16();
        let k0 = [g.wavenumber_1d(3), g.wavenumber_1d(14), g.wavenumber_1d(5)];
        let f = WaveField::from_fn(g, |x| Complex64::new(0.0, dot(k0, x)).exp());
        let hat = spectral_forward(&f);
        let target = g.index_of(3, 14, 5);
        for (i, v) in hat.values.iter().enumerate() {
            if i == target {
                assert_relative_eq!(v.norm(), (g.size() as f64).sqrt(), max_relative = 1e-12);
            } else {
                assert!(v.norm() < 1e-10, "mode {i} leaked: {v}");
            }
        }
    }

    #[test]
    fn roundtrip_identity() {
        let g = grid16();
        let f = random_field(g, 7);
        let back = spectral_inverse(&spectral_forward(&f));
        let diff: f64 = f
            .values
            .iter()
            .zip(&back.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-13, "roundtrip deviation {diff}");
    }

    #[test]
    fn sequential_path_matches_parallel() {
        let g = grid16();
        let f = random_field(g, 3);
        let a = spectral_forward(&f);
        let b = spectral_forward_seq(&f);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(x, y);
        }
        let ia = spectral_inverse(&a);
        let ib = spectral_inverse_seq(&a);
        for (x, y) in ia.values.iter().zip(&ib.values) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn translate_grid_aligned_is_lattice_shift() {
        let g = grid16();
        let f = random_field(g, 11);
        let shifted = translate(&f, [g.spacing(), 0.0, 0.0]);
        let n = g.n();
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let expect = f.values[g.index_of((ix + 1) % n, iy, iz)];
                    let got = shifted.values[g.index_of(ix, iy, iz)];
                    assert!((expect - got).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn translate_zero_is_identity_and_inverts() {
        let g = grid16();
        let f = random_field(g, 13);
        let id = translate(&f, [0.0; 3]);
        for (a, b) in f.values.iter().zip(&id.values) {
            assert!((a - b).norm() < 1e-13);
        }
        let y = [0.371, -1.24, 0.05];
        let back = translate(&translate(&f, y), crate::types::neg(y));
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).norm() < 1e-13);
        }
        assert_relative_eq!(translate(&f, y).norm(), f.norm(), max_relative = 1e-13);
    }

    #[test]
    fn phase_v_properties() {
        let g = grid16();
        let f = random_field(g, 17);
        let v = Velocity([0.7, -0.3, 1.1]);
        let p = phase_v(&f, v);
        for (a, b) in f.values.iter().zip(&p.values) {
            assert_relative_eq!(a.norm(), b.norm(), max_relative = 1e-14);
        }
        let back = phase_v(&p, v.reversed());
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).norm() < 1e-14);
        }
        let id = phase_v(&f, Velocity::zero());
        for (a, b) in f.values.iter().zip(&id.values) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn gaussian_state_norm_and_reality() {
        let g = GridSpec::new(32, 16.0).unwrap();
        let f = gaussian_state(g, [0.5, -0.3, 0.0], 1.2, [0.0; 3]).unwrap();
        assert_relative_eq!(f.norm(), 1.0, max_relative = 1e-12);
        let max_im = f.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(max_im < 1e-14);
    }

    #[test]
    fn gaussian_state_momentum_peak() {
        // Spectral content must peak at the nearest grid momentum: argmax
        // oracle over all coefficients.
        let g = GridSpec::new(32, 16.0).unwrap();
        let p = [g.wavenumber_1d(4), 0.0, g.wavenumber_1d(30)];
        let f = gaussian_state(g, [0.0; 3], 1.0, p).unwrap();
        let hat = spectral_forward(&f);
        let (argmax, _) = hat
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap();
        assert_eq!(g.unflatten(argmax), [4, 0, 30]);
    }

    #[test]
    fn delta_pairs_to_point_value() {
        let g = grid16();
        let f = random_field(g, 23);
        let d = WaveField::delta(g);
        let paired = d.inner(&f).unwrap();
        assert!((paired - f.value_at_origin()).norm() < 1e-12);
    }

    #[test]
    fn binary_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.bin");
        let f = random_field(grid16(), 29);
        write_field_binary(&f, &path).unwrap();
        let back = read_field_binary(&path).unwrap();
        assert_eq!(f.grid, back.grid);
        assert_eq!(f.values, back.values);
    }

    #[test]
    fn png_slice_writes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slice.png");
        let g = GridSpec::new(16, 8.0).unwrap();
        let f = gaussian_state(g, [0.0; 3], 1.0, [0.0; 3]).unwrap();
        write_slice_png(&f, SlicePlane::Xy, &path).unwrap();
        assert!(path.exists());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn parseval(seed in 0u64..1000) {
            let g = grid16();
            let f = random_field(g, seed);
            let h = random_field(g, seed.wrapping_add(9999));
            let space = f.inner(&h).unwrap();
            let spec = spectral_forward(&f).inner(&spectral_forward(&h)).unwrap();
            prop_assert!((space - spec).norm() <= 1e-12 * space.norm().max(1.0));
        }

        #[test]
        fn translation_composes_additively(
            ax in -2.0f64..2.0, ay in -2.0f64..2.0, az in -2.0f64..2.0,
            bx in -2.0f64..2.0, by in -2.0f64..2.0, bz in -2.0f64..2.0,
        ) {
            let g = grid16();
            let f = random_field(g, 42);
            let a = [ax, ay, az];
            let b = [bx, by, bz];
            let two_step = translate(&translate(&f, a), b);
            let one_step = translate(&f, crate::types::add(a, b));
            let diff: f64 = two_step.values.iter().zip(&one_step.values)
                .map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            prop_assert!(diff <= 1e-12);
        }
    }
}
