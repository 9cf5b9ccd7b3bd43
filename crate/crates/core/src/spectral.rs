//! Fourier-spectral fields on the torus `[0, 2π)`.
//!
//! A [`SpectralField`] stores the coefficients `c(n)` for `|n| <= K`, where
//! `K = M/2 - 1` for an `M`-point [`Grid`]. The Nyquist mode is never stored.
//! Coefficients follow `c(n) = (1/M) Σ_j f(x_j) e^{-i n x_j}` and the `2π`
//! measure factor is carried by norms and integrals, so discrete functionals
//! approximate their continuum values independently of `M`.
//!
//! Products are computed on a zero-padded grid of `2M` points, which makes
//! products of up to three band-limited factors alias-free after truncation
//! back to `|n| <= K`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    forward_padded: Arc<dyn Fft<f64>>,
    inverse_padded: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid of `M` points on `[0, 2π)`.
///
/// Cloning is cheap; FFT plans are shared and immutable, so a grid may be used
/// from several threads at once.
#[derive(Clone)]
pub struct Grid {
    m: usize,
    plans: Arc<Plans>,
}

impl Grid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 8 || !m.is_multiple_of(2) {
            return Err(LabError::InvalidGrid { m });
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
            forward_padded: planner.plan_fft_forward(2 * m),
            inverse_padded: planner.plan_fft_inverse(2 * m),
        };
        Ok(Self {
            m,
            plans: Arc::new(plans),
        })
    }

    /// Number of physical grid points `M`.
    pub fn points(&self) -> usize {
        self.m
    }

    /// Largest active frequency `K = M/2 - 1`.
    pub fn k_max(&self) -> i64 {
        (self.m / 2 - 1) as i64
    }

    /// Number of stored modes, `2K + 1`.
    pub fn mode_count(&self) -> usize {
        self.m - 1
    }

    /// Active frequencies `-K..=K`.
    pub fn modes(&self) -> std::ops::RangeInclusive<i64> {
        -self.k_max()..=self.k_max()
    }

    /// Grid abscissae `x_j = 2πj/M`.
    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.m)
            .map(|j| 2.0 * PI * j as f64 / self.m as f64)
            .collect()
    }

    fn index(&self, n: i64) -> usize {
        (n + self.k_max()) as usize
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("m", &self.m).finish()
    }
}

/// A periodic function represented by its truncated Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralField {
    pub fn zeros(grid: &Grid, real: bool) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![ZERO; grid.mode_count()],
            real,
        }
    }

    /// Constant real field.
    pub fn constant(grid: &Grid, value: f64) -> Self {
        let mut f = Self::zeros(grid, true);
        f.coeffs[grid.index(0)] = Complex64::new(value, 0.0);
        f
    }

    /// Builds a field from a coefficient rule `n -> c(n)`.
    ///
    /// For `real = true` only `n >= 0` is queried and the negative modes are
    /// filled by Hermitian reflection.
    pub fn from_modes(grid: &Grid, real: bool, mut rule: impl FnMut(i64) -> Complex64) -> Self {
        let mut f = Self::zeros(grid, real);
        if real {
            for n in 0..=grid.k_max() {
                f.coeffs[grid.index(n)] = rule(n);
            }
            f.enforce_hermitian();
        } else {
            for n in grid.modes() {
                f.coeffs[grid.index(n)] = rule(n);
            }
        }
        f
    }

    /// Single complex exponential `amplitude · e^{i n x}`.
    pub fn mode(grid: &Grid, n: i64, amplitude: Complex64) -> Self {
        let mut f = Self::zeros(grid, false);
        f.set_coeff(n, amplitude);
        f
    }

    /// Transforms `M` complex samples to coefficients. The Nyquist component is dropped.
    pub fn forward_transform(grid: &Grid, samples: &[Complex64]) -> Result<Self> {
        if samples.len() != grid.m {
            return Err(LabError::SizeMismatch {
                expected: grid.m,
                actual: samples.len(),
            });
        }
        let mut buf = samples.to_vec();
        grid.plans.forward.process(&mut buf);
        let scale = 1.0 / grid.m as f64;
        let mut f = Self::zeros(grid, false);
        for n in grid.modes() {
            let src = n.rem_euclid(grid.m as i64) as usize;
            f.coeffs[grid.index(n)] = buf[src] * scale;
        }
        Ok(f)
    }

    /// Transforms real samples and tags the result as real.
    pub fn from_real_samples(grid: &Grid, samples: &[f64]) -> Result<Self> {
        let complex: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        let mut f = Self::forward_transform(grid, &complex)?;
        f.real = true;
        f.enforce_hermitian();
        Ok(f)
    }

    /// Point values `f(x_j) = Σ_n c(n) e^{i n x_j}`.
    pub fn inverse_transform(&self) -> Vec<Complex64> {
        let m = self.grid.m;
        let mut buf = vec![ZERO; m];
        for n in self.grid.modes() {
            buf[n.rem_euclid(m as i64) as usize] = self.coeffs[self.grid.index(n)];
        }
        self.grid.plans.inverse.process(&mut buf);
        buf
    }

    /// Real parts of [`Self::inverse_transform`].
    pub fn real_samples(&self) -> Vec<f64> {
        self.inverse_transform().into_iter().map(|z| z.re).collect()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficients ordered from `n = -K` to `n = K`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `n`; zero outside the active band.
    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.abs() > self.grid.k_max() {
            ZERO
        } else {
            self.coeffs[self.grid.index(n)]
        }
    }

    /// Sets one coefficient. Clears the reality tag; call
    /// [`Self::into_real`] afterwards to re-impose symmetry.
    pub fn set_coeff(&mut self, n: i64, value: Complex64) {
        assert!(
            n.abs() <= self.grid.k_max(),
            "mode {n} outside the active band"
        );
        let i = self.grid.index(n);
        self.coeffs[i] = value;
        self.real = false;
    }

    /// Tags the field as real, symmetrising from the non-negative modes.
    pub fn into_real(mut self) -> Self {
        self.real = true;
        self.enforce_hermitian();
        self
    }

    /// Whether `c(-n) = conj(c(n))` holds to `tol` in absolute terms.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.grid
            .modes()
            .all(|n| (self.coeff(-n) - self.coeff(n).conj()).norm() <= tol)
    }

    fn enforce_hermitian(&mut self) {
        let k = self.grid.k_max();
        let c0 = self.coeffs[self.grid.index(0)];
        self.coeffs[self.grid.index(0)] = Complex64::new(c0.re, 0.0);
        for n in 1..=k {
            let c = self.coeffs[self.grid.index(n)];
            self.coeffs[self.grid.index(-n)] = c.conj();
        }
    }

    /// Applies an even/odd-agnostic diagonal multiplier `c(n) <- w(n) c(n)`.
    ///
    /// `keeps_real` must only be set when `w(-n) = conj(w(n))`; the negative
    /// half is then rebuilt by reflection so realness holds bit-for-bit.
    pub fn map_modes(&self, keeps_real: bool, mut w: impl FnMut(i64) -> Complex64) -> Self {
        let real = self.real && keeps_real;
        let mut out = self.clone();
        out.real = real;
        if real {
            for n in 0..=self.grid.k_max() {
                let i = self.grid.index(n);
                out.coeffs[i] = w(n) * self.coeffs[i];
            }
            out.enforce_hermitian();
        } else {
            for n in self.grid.modes() {
                let i = self.grid.index(n);
                out.coeffs[i] = w(n) * self.coeffs[i];
            }
        }
        out
    }

    /// `∂_x^order f`, i.e. `c(n) <- (i n)^order c(n)`.
    pub fn derivative(&self, order: u32) -> Self {
        self.map_modes(true, |n| derivative_multiplier(n, order))
    }

    /// Pointwise complex conjugate: `c(n) <- conj(c(-n))`.
    pub fn conj(&self) -> Self {
        if self.real {
            return self.clone();
        }
        let mut out = self.clone();
        for n in self.grid.modes() {
            out.coeffs[self.grid.index(n)] = self.coeff(-n).conj();
        }
        out
    }

    /// Real part `(f + conj f)/2`, tagged real.
    pub fn re(&self) -> Self {
        if self.real {
            return self.clone();
        }
        let c = self.conj();
        Self::from_modes(&self.grid, true, |n| 0.5 * (self.coeff(n) + c.coeff(n)))
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    /// Multiplication by a complex constant; clears the reality tag unless the
    /// constant is real.
    pub fn scale_complex(&self, factor: Complex64) -> Self {
        if factor.im == 0.0 {
            return self.scale(factor.re);
        }
        let mut out = self.clone();
        out.real = false;
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    /// Spatial translation `f(x) -> f(x - shift)`.
    pub fn translate(&self, shift: f64) -> Self {
        self.map_modes(true, |n| Complex64::from_polar(1.0, -(n as f64) * shift))
    }

    /// Alias-free product of two or three fields, truncated to `|n| <= K`.
    pub fn dealiased_product(fields: &[&SpectralField]) -> Result<SpectralField> {
        let first = match fields.first() {
            Some(f) => *f,
            None => return Err(LabError::Config("empty product".into())),
        };
        if fields.len() > 3 {
            return Err(LabError::Config(format!(
                "dealiased_product takes at most 3 factors, got {}",
                fields.len()
            )));
        }
        for f in &fields[1..] {
            first.check_grid(f)?;
        }
        let mut acc = first.to_padded();
        for f in &fields[1..] {
            let p = f.to_padded();
            acc.iter_mut().zip(&p).for_each(|(a, b)| *a *= b);
        }
        let real = fields.iter().all(|f| f.real);
        Ok(SpectralField::from_padded(&first.grid, acc, real))
    }

    /// `(2π Σ_n ⟨n⟩^{2s} |c(n)|²)^{1/2}` with `⟨n⟩ = 1 + |n|`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let sum: f64 = self
            .grid
            .modes()
            .map(|n| bracket(n as f64).powf(2.0 * s) * self.coeff(n).norm_sqr())
            .sum();
        (2.0 * PI * sum).sqrt()
    }

    /// `‖f‖_{L²}`.
    pub fn l2_norm(&self) -> f64 {
        (2.0 * PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `∫_𝕋 f dx = 2π c(0)`.
    pub fn integral(&self) -> Complex64 {
        2.0 * PI * self.coeff(0)
    }

    pub fn project_zero_mean(&self) -> Self {
        let mut out = self.clone();
        let i = self.grid.index(0);
        out.coeffs[i] = ZERO;
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub(crate) fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch {
                left: self.grid.m,
                right: other.grid.m,
            });
        }
        Ok(())
    }

    /// Point values on the `2M`-point padded grid.
    pub(crate) fn to_padded(&self) -> Vec<Complex64> {
        let p = 2 * self.grid.m;
        let mut buf = vec![ZERO; p];
        for n in self.grid.modes() {
            buf[n.rem_euclid(p as i64) as usize] = self.coeffs[self.grid.index(n)];
        }
        self.grid.plans.inverse_padded.process(&mut buf);
        buf
    }

    /// Inverse of [`Self::to_padded`] followed by truncation to `|n| <= K`.
    pub(crate) fn from_padded(grid: &Grid, mut buf: Vec<Complex64>, real: bool) -> Self {
        let p = 2 * grid.m;
        debug_assert_eq!(buf.len(), p);
        grid.plans.forward_padded.process(&mut buf);
        let scale = 1.0 / p as f64;
        let mut f = Self::zeros(grid, real);
        for n in grid.modes() {
            f.coeffs[grid.index(n)] = buf[n.rem_euclid(p as i64) as usize] * scale;
        }
        if real {
            f.enforce_hermitian();
        }
        f
    }
}

/// Exact `∫_𝕋 f g dx` for band-limited `f`, `g` (no conjugation).
pub fn integral_of_pair(f: &SpectralField, g: &SpectralField) -> Complex64 {
    let sum: Complex64 = f.grid.modes().map(|n| f.coeff(n) * g.coeff(-n)).sum();
    2.0 * PI * sum
}

/// Exact `∫_𝕋 f_1 ⋯ f_q dx` for `q <= 4` band-limited factors.
///
/// The first `q - 1` factors are multiplied alias-free and the result is paired
/// with the last; only modes `|n| <= K` of the partial product are needed.
pub fn integral_of_product(fields: &[&SpectralField]) -> Result<Complex64> {
    match fields.len() {
        0 => Err(LabError::Config("empty integrand".into())),
        1 => Ok(fields[0].integral()),
        q if q <= 4 => {
            let (last, head) = fields.split_last().expect("nonempty");
            let partial = if head.len() == 1 {
                head[0].clone()
            } else {
                SpectralField::dealiased_product(head)?
            };
            partial.check_grid(last)?;
            Ok(integral_of_pair(&partial, last))
        }
        q => Err(LabError::Config(format!(
            "integral_of_product takes at most 4 factors, got {q}"
        ))),
    }
}

/// Japanese bracket in the convention `⟨x⟩ = 1 + |x|`.
pub fn bracket(x: f64) -> f64 {
    1.0 + x.abs()
}

fn derivative_multiplier(n: i64, order: u32) -> Complex64 {
    let p = (n as f64).powi(order as i32);
    match order % 4 {
        0 => Complex64::new(p, 0.0),
        1 => Complex64::new(0.0, p),
        2 => Complex64::new(-p, 0.0),
        _ => Complex64::new(0.0, -p),
    }
}

fn combine(a: &SpectralField, b: &SpectralField, op: impl Fn(Complex64, Complex64) -> Complex64) -> SpectralField {
    assert_eq!(a.grid, b.grid, "arithmetic on fields from different grids");
    SpectralField {
        grid: a.grid.clone(),
        coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| op(*x, *y)).collect(),
        real: a.real && b.real,
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: Self) -> SpectralField {
        combine(self, rhs, |x, y| x + y)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: Self) -> SpectralField {
        combine(self, rhs, |x, y| x - y)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}
