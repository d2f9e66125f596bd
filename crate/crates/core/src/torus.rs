//! Grids on the torus `(R / 2piZ)^d`, Fourier coefficient fields and the
//! spectral helpers everything else is built on.
//!
//! Coefficients use the symmetric normalisation
//! `u(x) = (2pi)^{-d/2} sum_j u_j e^{i j.x}`, so `sum |u_j|^2` is the
//! squared L2 norm on the torus.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest dimension the grid code handles. Modes are stored as `[i64; 3]`.
pub const MAX_DIM: usize = 3;

pub type Mode = [i64; MAX_DIM];

struct Plan {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Frequency box `|j|_inf <= N` plus an oversampled physical grid of `M^d` points.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    cutoff: usize,
    points: usize,
    modes: Arc<Vec<Mode>>,
    plan: Arc<Plan>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("cutoff", &self.cutoff)
            .field("points", &self.points)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.cutoff == other.cutoff && self.points == other.points
    }
}

impl Eq for Grid {}

impl Grid {
    pub fn new(dim: usize, cutoff: usize, points: usize) -> Result<Grid> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid("grid.dim", format!("{dim} is outside 1..={MAX_DIM}")));
        }
        if cutoff < 4 {
            return Err(Error::invalid("grid.cutoff", format!("{cutoff} is below the minimum 4")));
        }
        if points % 2 != 0 || points < 2 * (2 * cutoff + 1) {
            return Err(Error::invalid(
                "grid.points",
                format!("{points} must be even and at least 2(2N+1) = {}", 2 * (2 * cutoff + 1)),
            ));
        }
        let mut planner = FftPlanner::new();
        let plan = Plan { fwd: planner.plan_fft_forward(points), inv: planner.plan_fft_inverse(points) };
        let n = cutoff as i64;
        let side = 2 * cutoff + 1;
        let len = side.pow(dim as u32);
        let mut modes = Vec::with_capacity(len);
        for idx in 0..len {
            let mut m = [0i64; MAX_DIM];
            let mut rest = idx;
            for a in (0..dim).rev() {
                m[a] = (rest % side) as i64 - n;
                rest /= side;
            }
            modes.push(m);
        }
        Ok(Grid { dim, cutoff, points, modes: Arc::new(modes), plan: Arc::new(plan) })
    }

    /// Grid with the minimal dealiasing oversampling `M = 2(2N+1)`.
    pub fn standard(dim: usize, cutoff: usize) -> Result<Grid> {
        Grid::new(dim, cutoff, 2 * (2 * cutoff + 1))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn side(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Number of retained Fourier modes.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Number of physical sample points.
    pub fn npts(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, idx: usize) -> Mode {
        self.modes[idx]
    }

    pub fn index_of(&self, j: &[i64]) -> Option<usize> {
        let n = self.cutoff as i64;
        let side = self.side();
        let mut idx = 0usize;
        for a in 0..self.dim {
            let c = j.get(a).copied().unwrap_or(0);
            if c.abs() > n {
                return None;
            }
            idx = idx * side + (c + n) as usize;
        }
        Some(idx)
    }

    /// Index of `-j` for the mode stored at `idx`.
    pub fn reflected_index(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    /// Same grid with a different frequency cutoff, keeping the dealiasing ratio.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Grid> {
        Grid::standard(self.dim, cutoff)
    }

    /// Physical coordinates of sample point `p`.
    pub fn point(&self, p: usize) -> Mode {
        let mut out = [0i64; MAX_DIM];
        let mut rest = p;
        for a in (0..self.dim).rev() {
            out[a] = (rest % self.points) as i64;
            rest /= self.points;
        }
        out
    }

    pub fn coordinates(&self, p: usize) -> [f64; MAX_DIM] {
        let m = self.point(p);
        let h = 2.0 * PI / self.points as f64;
        [m[0] as f64 * h, m[1] as f64 * h, m[2] as f64 * h]
    }

    /// Flat index in the physical FFT buffer holding frequency `j`.
    pub fn bin_index(&self, j: &Mode) -> usize {
        let m = self.points as i64;
        let mut idx = 0usize;
        for a in 0..self.dim {
            idx = idx * self.points + j[a].rem_euclid(m) as usize;
        }
        idx
    }

    /// Signed frequency of FFT bin `b` along one axis; the Nyquist bin maps to 0
    /// for differentiation purposes.
    pub fn signed_bin(&self, b: usize) -> i64 {
        let m = self.points;
        if 2 * b == m {
            0
        } else if b > m / 2 {
            b as i64 - m as i64
        } else {
            b as i64
        }
    }

    pub fn fourier_scale(&self) -> f64 {
        (2.0 * PI).powf(self.dim as f64 / 2.0)
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    fn transform(&self, data: &mut [C64], fft: &Arc<dyn Fft<f64>>) {
        let m = self.points;
        debug_assert_eq!(data.len(), self.npts());
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..self.dim {
            let stride = m.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = m * stride;
            let mut buf = vec![C64::new(0.0, 0.0); block];
            for start in (0..data.len()).step_by(block) {
                let chunk = &mut data[start..start + block];
                for i in 0..stride {
                    for k in 0..m {
                        buf[i * m + k] = chunk[k * stride + i];
                    }
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for i in 0..stride {
                    for k in 0..m {
                        chunk[k * stride + i] = buf[i * m + k];
                    }
                }
            }
        }
    }

    /// Unnormalised forward DFT `sum_x u(x) e^{-i k.x}` over all axes.
    pub fn fft_forward(&self, data: &mut [C64]) {
        self.transform(data, &self.plan.fwd.clone());
    }

    /// Unnormalised inverse DFT `sum_k c_k e^{i k.x}` over all axes.
    pub fn fft_inverse(&self, data: &mut [C64]) {
        self.transform(data, &self.plan.inv.clone());
    }

    /// Mean-normalised x-Fourier coefficients `M^{-d} sum_x a(x) e^{-i k.x}` of samples.
    pub fn mean_coefficients(&self, samples: &[C64]) -> Vec<C64> {
        let mut buf = samples.to_vec();
        self.fft_forward(&mut buf);
        let scale = 1.0 / self.npts() as f64;
        for v in &mut buf {
            *v *= scale;
        }
        buf
    }

    /// Spectral derivative `d^alpha` of physical samples using the full FFT band.
    pub fn diff_samples(&self, samples: &[C64], alpha: &[usize]) -> Vec<C64> {
        if alpha.iter().all(|&a| a == 0) {
            return samples.to_vec();
        }
        let mut buf = samples.to_vec();
        self.fft_forward(&mut buf);
        let scale = 1.0 / self.npts() as f64;
        for (b, v) in buf.iter_mut().enumerate() {
            let p = self.point(b);
            let mut factor = C64::new(scale, 0.0);
            for a in 0..self.dim {
                let order = alpha.get(a).copied().unwrap_or(0);
                if order > 0 {
                    let k = self.signed_bin(p[a] as usize) as f64;
                    factor *= C64::new(0.0, k).powu(order as u32);
                }
            }
            *v *= factor;
        }
        self.fft_inverse(&mut buf);
        buf
    }

    /// Trigonometric interpolation of samples from `self` onto `target`.
    /// Exact when the samples are band-limited below both Nyquist limits.
    pub fn resample(&self, samples: &[C64], target: &Grid) -> Vec<C64> {
        if self == target {
            return samples.to_vec();
        }
        let coeffs = self.mean_coefficients(samples);
        let half = (self.points.min(target.points) / 2) as i64;
        let mut out = vec![C64::new(0.0, 0.0); target.npts()];
        for (b, c) in coeffs.iter().enumerate() {
            let p = self.point(b);
            let mut k = [0i64; MAX_DIM];
            let mut keep = true;
            for a in 0..self.dim {
                let raw = p[a];
                let m = self.points as i64;
                let s = if raw > m / 2 { raw - m } else { raw };
                if s.abs() >= half {
                    keep = false;
                }
                k[a] = s;
            }
            if keep {
                out[target.bin_index(&k)] = *c;
            }
        }
        target.fft_inverse(&mut out);
        out
    }
}

/// A function on the torus stored as its retained Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    coeffs: Vec<C64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Field {
        Field { grid: grid.clone(), coeffs: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<C64>) -> Result<Field> {
        if coeffs.len() != grid.len() {
            return Err(Error::invalid(
                "coeffs",
                format!("expected {} coefficients, got {}", grid.len(), coeffs.len()),
            ));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("field coefficients".into()));
        }
        Ok(Field { grid: grid.clone(), coeffs })
    }

    pub(crate) fn from_raw(grid: &Grid, coeffs: Vec<C64>) -> Field {
        debug_assert_eq!(coeffs.len(), grid.len());
        Field { grid: grid.clone(), coeffs }
    }

    /// `amplitude * e^{i j.x}`.
    pub fn mode(grid: &Grid, j: &[i64], amplitude: C64) -> Result<Field> {
        let idx = grid
            .index_of(j)
            .ok_or_else(|| Error::invalid("mode", format!("{j:?} lies outside the retained box")))?;
        let mut f = Field::zeros(grid);
        f.coeffs[idx] = amplitude * grid.fourier_scale();
        Ok(f)
    }

    /// Samples `f` on the physical grid and keeps the retained modes.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> C64) -> Field {
        let samples: Vec<C64> = (0..grid.npts()).map(|p| f(&grid.coordinates(p)[..grid.dim()])).collect();
        Field::from_physical(grid, &samples)
    }

    /// Projection of physical samples onto the retained modes.
    pub fn from_physical(grid: &Grid, samples: &[C64]) -> Field {
        let c = grid.mean_coefficients(samples);
        let scale = grid.fourier_scale();
        let coeffs = grid.modes().iter().map(|j| c[grid.bin_index(j)] * scale).collect();
        Field { grid: grid.clone(), coeffs }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn coeff(&self, j: &[i64]) -> C64 {
        self.grid.index_of(j).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    pub fn to_physical(&self) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.grid.npts()];
        let scale = 1.0 / self.grid.fourier_scale();
        for (j, c) in self.grid.modes().iter().zip(&self.coeffs) {
            buf[self.grid.bin_index(j)] = c * scale;
        }
        self.grid.fft_inverse(&mut buf);
        buf
    }

    /// `(sum <j>^{2s} |u_j|^2)^{1/2}` with `<j> = sqrt(1 + |j|^2)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.grid
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(j, c)| japanese(j).powf(2.0 * s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `int u conj(v) dx`.
    pub fn inner(&self, other: &Field) -> C64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum()
    }

    /// Keeps modes with Euclidean `|k| <= radius`.
    pub fn project_low(&self, radius: usize) -> Field {
        let r2 = (radius * radius) as i64;
        let coeffs = self
            .grid
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(j, c)| if norm_sq(j) <= r2 { *c } else { C64::new(0.0, 0.0) })
            .collect();
        Field { grid: self.grid.clone(), coeffs }
    }

    /// `d/dx_axis` with a 0-based axis.
    pub fn derivative(&self, axis: usize) -> Field {
        let coeffs = self
            .grid
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(j, c)| c * C64::new(0.0, j[axis] as f64))
            .collect();
        Field { grid: self.grid.clone(), coeffs }
    }

    pub fn multiply_dealiased(&self, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        let a = self.to_physical();
        let b = other.to_physical();
        let prod: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Ok(Field::from_physical(&self.grid, &prod))
    }

    /// Coefficients of the complex conjugate function: `j -> conj(u_{-j})`.
    pub fn conj_field(&self) -> Field {
        let n = self.coeffs.len();
        let coeffs = (0..n).map(|i| self.coeffs[n - 1 - i].conj()).collect();
        Field { grid: self.grid.clone(), coeffs }
    }

    /// Multiplies each coefficient by `f(j)`.
    pub fn map_modes(&self, f: impl Fn(&Mode) -> C64) -> Field {
        let coeffs = self.grid.modes().iter().zip(&self.coeffs).map(|(j, c)| c * f(j)).collect();
        Field { grid: self.grid.clone(), coeffs }
    }

    pub fn scale(&self, k: C64) -> Field {
        Field { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    pub fn axpy(&mut self, k: C64, other: &Field) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += k * b;
        }
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Copies the coefficients into a grid with a different cutoff, dropping
    /// modes that do not fit.
    pub fn regrid(&self, target: &Grid) -> Field {
        let mut out = Field::zeros(target);
        for (j, c) in self.grid.modes().iter().zip(&self.coeffs) {
            if let Some(i) = target.index_of(&j[..target.dim()]) {
                out.coeffs[i] = *c;
            }
        }
        out
    }

    /// Random field with coefficients of size `<j>^{-decay}`.
    pub fn random<R: Rng + ?Sized>(grid: &Grid, rng: &mut R, decay: f64) -> Field {
        let coeffs = grid
            .modes()
            .iter()
            .map(|j| {
                let w = japanese(j).powf(-decay);
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * w
            })
            .collect();
        Field { grid: grid.clone(), coeffs }
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        Field { grid: self.grid.clone(), coeffs }
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        Field { grid: self.grid.clone(), coeffs }
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul<C64> for &Field {
    type Output = Field;
    fn mul(self, k: C64) -> Field {
        self.scale(k)
    }
}

/// The pair `(u+, u-)`; on the real subspace `u- = conj(u+)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairField {
    pub plus: Field,
    pub minus: Field,
}

impl PairField {
    pub fn zeros(grid: &Grid) -> PairField {
        PairField { plus: Field::zeros(grid), minus: Field::zeros(grid) }
    }

    pub fn from_u(u: &Field) -> PairField {
        PairField { plus: u.clone(), minus: u.conj_field() }
    }

    pub fn grid(&self) -> &Grid {
        self.plus.grid()
    }

    /// Largest deviation from `minus = conj(plus)`.
    pub fn u_residual(&self) -> f64 {
        self.minus.max_abs_diff(&self.plus.conj_field())
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.plus.sobolev_norm(s) + self.minus.sobolev_norm(s)
    }

    pub fn l2_norm(&self) -> f64 {
        (self.plus.l2_norm().powi(2) + self.minus.l2_norm().powi(2)).sqrt()
    }

    pub fn inner(&self, other: &PairField) -> C64 {
        self.plus.inner(&other.plus) + self.minus.inner(&other.minus)
    }

    pub fn scale(&self, k: C64) -> PairField {
        PairField { plus: self.plus.scale(k), minus: self.minus.scale(k) }
    }

    pub fn axpy(&mut self, k: C64, other: &PairField) {
        self.plus.axpy(k, &other.plus);
        self.minus.axpy(k, &other.minus);
    }

    pub fn is_zero(&self) -> bool {
        self.plus.coeffs().iter().chain(self.minus.coeffs()).all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn regrid(&self, target: &Grid) -> PairField {
        PairField { plus: self.plus.regrid(target), minus: self.minus.regrid(target) }
    }

    /// `iE` applied componentwise: `(i u+, -i u-)`.
    pub fn times_ie(&self) -> PairField {
        PairField { plus: self.plus.scale(C64::new(0.0, 1.0)), minus: self.minus.scale(C64::new(0.0, -1.0)) }
    }
}

impl Add for &PairField {
    type Output = PairField;
    fn add(self, rhs: &PairField) -> PairField {
        PairField { plus: &self.plus + &rhs.plus, minus: &self.minus + &rhs.minus }
    }
}

impl Sub for &PairField {
    type Output = PairField;
    fn sub(self, rhs: &PairField) -> PairField {
        PairField { plus: &self.plus - &rhs.plus, minus: &self.minus - &rhs.minus }
    }
}

pub fn norm_sq(j: &Mode) -> i64 {
    j.iter().map(|c| c * c).sum()
}

/// `<j> = sqrt(1 + |j|^2)`.
pub fn japanese(j: &Mode) -> f64 {
    (1.0 + norm_sq(j) as f64).sqrt()
}

pub fn japanese_f(xi: &[f64]) -> f64 {
    (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid1(n: usize) -> Grid {
        Grid::standard(1, n).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1, 8, 33).is_err());
        assert!(Grid::new(1, 8, 32).is_err());
        assert!(Grid::new(4, 8, 34).is_err());
        assert!(Grid::new(2, 3, 14).is_err());
    }

    #[test]
    fn constant_mode_is_one() {
        let g = Grid::standard(2, 4).unwrap();
        let f = Field::mode(&g, &[0, 0], C64::new(1.0, 0.0)).unwrap();
        for v in f.to_physical() {
            assert!((v - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn single_mode_samples() {
        let g = grid1(6);
        let f = Field::mode(&g, &[1], C64::new(1.0, 0.0)).unwrap();
        let s = f.to_physical();
        for (p, v) in s.iter().enumerate() {
            let x = g.coordinates(p)[0];
            assert!((v - C64::from_polar(1.0, x)).norm() < 1e-13);
        }
    }

    #[test]
    fn round_trip_2d() {
        let g = Grid::standard(2, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Field::random(&g, &mut rng, 0.0);
        let back = Field::from_physical(&g, &f.to_physical());
        assert!(back.max_abs_diff(&f) < 1e-13);
    }

    #[test]
    fn parseval_against_quadrature() {
        let g = Grid::standard(2, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = Field::random(&g, &mut rng, 1.0);
        let h = (2.0 * PI / g.points() as f64).powi(2);
        let quad: f64 = f.to_physical().iter().map(|v| v.norm_sqr()).sum::<f64>() * h;
        let l2 = f.sobolev_norm(0.0);
        assert!((quad - l2 * l2).abs() <= 1e-12 * quad);
    }

    #[test]
    fn sobolev_of_unit_mode() {
        let g = Grid::standard(2, 4).unwrap();
        let mut f = Field::zeros(&g);
        let i = g.index_of(&[1, 0]).unwrap();
        f.coeffs_mut()[i] = C64::new(1.0, 0.0);
        assert!((f.sobolev_norm(1.0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(Field::zeros(&g).sobolev_norm(3.0), 0.0);
    }

    #[test]
    fn projection_tail_bound() {
        let g = grid1(16);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = Field::random(&g, &mut rng, 0.5);
        for k in [1usize, 3, 8] {
            let tail = &f - &f.project_low(k);
            assert!(tail.sobolev_norm(1.0) <= f.sobolev_norm(3.0) / (k * k) as f64);
        }
        assert_eq!(f.project_low(16), f);
        let mean = f.project_low(0);
        assert_eq!(mean.coeffs().iter().filter(|c| c.norm() > 0.0).count(), 1);
    }

    #[test]
    fn dealiased_product_matches_convolution() {
        let g = grid1(8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = Field::random(&g, &mut rng, 0.0);
        let h = Field::random(&g, &mut rng, 0.0);
        let prod = f.multiply_dealiased(&h).unwrap();
        let n = 8i64;
        let scale = 1.0 / g.fourier_scale();
        for j in -n..=n {
            let mut acc = C64::new(0.0, 0.0);
            for k in -n..=n {
                if (j - k).abs() <= n {
                    acc += f.coeff(&[k]) * h.coeff(&[j - k]);
                }
            }
            assert!((prod.coeff(&[j]) - acc * scale).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_mode() {
        let g = grid1(4);
        let f = Field::mode(&g, &[1], C64::new(1.0, 0.0)).unwrap();
        let df = f.derivative(0);
        let expect = Field::mode(&g, &[1], C64::new(0.0, 1.0)).unwrap();
        assert!(df.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn resample_is_exact_for_band_limited() {
        let g = grid1(6);
        let fine = Grid::standard(1, 12).unwrap();
        let f = Field::mode(&g, &[3], C64::new(0.3, -0.1)).unwrap();
        let up = g.resample(&f.to_physical(), &fine);
        let direct = Field::mode(&fine, &[3], C64::new(0.3, -0.1)).unwrap().to_physical();
        let err = up.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }

    #[test]
    fn conj_field_is_conjugate_function() {
        let g = Grid::standard(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = Field::random(&g, &mut rng, 0.0);
        let a = f.to_physical();
        let b = f.conj_field().to_physical();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.conj() - y).norm() < 1e-13);
        }
    }
}
