//! Discrete Bourgain-type space-time norms and randomized checks of the
//! bilinear, trilinear, Strichartz and time-localization estimates.
//!
//! A [`SpaceTimeField`] holds samples on an `M × M_t` lattice over
//! `𝕋 × [−T_w/2, T_w/2)`, read as a trigonometric polynomial in both variables.
//! Its coefficients are
//!
//! ```text
//! c(n, k) = (1/(M M_t)) Σ_j Σ_l f(x_j, t_l) e^{−i(n x_j + τ_k t_l)},   τ_k = 2πk/T_w,
//! ```
//!
//! over the full FFT index ranges, and `‖f‖²_{L²_{xt}} = 2π T_w Σ |c(n, k)|²`.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::bracket;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Space-time sampling lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub m: usize,
    pub m_t: usize,
    /// Window length `T_w`.
    #[serde(default = "default_window")]
    pub window: f64,
}

fn default_window() -> f64 {
    1.0
}

impl Lattice {
    pub fn new(m: usize, m_t: usize) -> Result<Self> {
        Self::with_window(m, m_t, 1.0)
    }

    pub fn with_window(m: usize, m_t: usize, window: f64) -> Result<Self> {
        let lattice = Self { m, m_t, window };
        lattice.validate()?;
        Ok(lattice)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 8 || !self.m.is_multiple_of(2) {
            return Err(LabError::InvalidGrid { m: self.m });
        }
        if self.m_t < 8 || !self.m_t.is_multiple_of(2) {
            return Err(LabError::Config(format!("time samples must be even and >= 8, got {}", self.m_t)));
        }
        if !(self.window > 0.0) || !self.window.is_finite() {
            return Err(LabError::Config(format!("time window must be positive, got {}", self.window)));
        }
        Ok(())
    }

    /// Both dimensions doubled.
    pub fn refined(&self) -> Self {
        Self { m: 2 * self.m, m_t: 2 * self.m_t, window: self.window }
    }

    fn len(&self) -> usize {
        self.m * self.m_t
    }

    pub fn x(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.m as f64
    }

    pub fn t(&self, l: usize) -> f64 {
        self.window * (l as f64 / self.m_t as f64 - 0.5)
    }

    pub fn tau(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.window
    }

    fn index(&self, j: usize, l: usize) -> usize {
        l * self.m + j
    }
}

/// Signed frequency of FFT slot `i` out of `len`.
fn freq(i: usize, len: usize) -> i64 {
    if i < len / 2 {
        i as i64
    } else {
        i as i64 - len as i64
    }
}

fn slot(n: i64, len: usize) -> Option<usize> {
    let half = (len / 2) as i64;
    if n < -half || n >= half {
        None
    } else {
        Some(n.rem_euclid(len as i64) as usize)
    }
}

/// In-place 2-D transform of row-major `buf` (`m_t` rows of length `m`).
fn fft2(buf: &mut [Complex64], m: usize, m_t: usize, inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let (fx, ft) = if inverse {
            (p.plan_fft_inverse(m), p.plan_fft_inverse(m_t))
        } else {
            (p.plan_fft_forward(m), p.plan_fft_forward(m_t))
        };
        fx.process(buf);
        let mut col = vec![ZERO; m_t];
        for j in 0..m {
            for l in 0..m_t {
                col[l] = buf[l * m + j];
            }
            ft.process(&mut col);
            for l in 0..m_t {
                buf[l * m + j] = col[l];
            }
        }
    });
}

/// Dispersion relation attached to a field; selects the modulation weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    /// Weight `⟨τ + n²⟩`.
    Schrodinger,
    /// Weight `⟨τ − n³⟩`.
    Airy,
    None,
}

impl Dispersion {
    /// Modulation `τ + n²` or `τ − n³`; plain `τ` without a tag.
    pub fn modulation(&self, n: i64, tau: f64) -> f64 {
        let n = n as f64;
        match self {
            Dispersion::Schrodinger => tau + n * n,
            Dispersion::Airy => tau - n * n * n,
            Dispersion::None => tau,
        }
    }
}

/// Smooth time cutoff `ψ_δ(t) = ψ(t/δ)` with `ψ = 1` on `[−1, 1]` and
/// `supp ψ ⊂ [−2, 2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub delta: f64,
}

impl CutoffProfile {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(LabError::Config(format!("cutoff scale must be positive, got {delta}")));
        }
        Ok(Self { delta })
    }

    /// The widest cutoff whose support fits the lattice window.
    pub fn for_window(lattice: &Lattice) -> Self {
        Self { delta: lattice.window / 4.0 }
    }

    pub fn psi(t: f64) -> f64 {
        let a = t.abs();
        if a <= 1.0 {
            1.0
        } else if a >= 2.0 {
            0.0
        } else {
            smooth_step(2.0 - a)
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        Self::psi(t / self.delta)
    }
}

/// C^∞ transition from 0 at `x = 0` to 1 at `x = 1`.
fn smooth_step(x: f64) -> f64 {
    let g = |y: f64| if y <= 0.0 { 0.0 } else { (-1.0 / y).exp() };
    let a = g(x);
    a / (a + g(1.0 - x))
}

/// Samples of a complex function on a space-time lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    lattice: Lattice,
    samples: Vec<Complex64>,
    dispersion: Dispersion,
}

impl SpaceTimeField {
    pub fn from_fn(lattice: Lattice, dispersion: Dispersion, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut samples = vec![ZERO; lattice.len()];
        for l in 0..lattice.m_t {
            for j in 0..lattice.m {
                samples[lattice.index(j, l)] = f(lattice.x(j), lattice.t(l));
            }
        }
        Self { lattice, samples, dispersion }
    }

    pub fn from_samples(lattice: Lattice, dispersion: Dispersion, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != lattice.len() {
            return Err(LabError::SizeMismatch { expected: lattice.len(), actual: samples.len() });
        }
        Ok(Self { lattice, samples, dispersion })
    }

    /// Field with coefficients `c(n, k) = coeff(n, k)`.
    pub fn from_coefficients(
        lattice: Lattice,
        dispersion: Dispersion,
        mut coeff: impl FnMut(i64, i64) -> Complex64,
    ) -> Self {
        let (m, m_t) = (lattice.m, lattice.m_t);
        let mut buf = vec![ZERO; lattice.len()];
        for l in 0..m_t {
            let k = freq(l, m_t);
            // undo the phase of the centred time origin
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for j in 0..m {
                buf[l * m + j] = coeff(freq(j, m), k) * sign;
            }
        }
        fft2(&mut buf, m, m_t, true);
        Self { lattice, samples: buf, dispersion }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dispersion(&self) -> Dispersion {
        self.dispersion
    }

    pub fn with_dispersion(mut self, dispersion: Dispersion) -> Self {
        self.dispersion = dispersion;
        self
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Coefficients in FFT order, row-major by time frequency.
    fn coefficient_buffer(&self) -> Vec<Complex64> {
        let (m, m_t) = (self.lattice.m, self.lattice.m_t);
        let mut buf = self.samples.clone();
        fft2(&mut buf, m, m_t, false);
        let norm = 1.0 / self.lattice.len() as f64;
        for l in 0..m_t {
            let sign = if freq(l, m_t) % 2 == 0 { norm } else { -norm };
            for c in &mut buf[l * m..(l + 1) * m] {
                *c *= sign;
            }
        }
        buf
    }

    /// All coefficients as `(n, k, c(n, k))`.
    pub fn coefficients(&self) -> Vec<(i64, i64, Complex64)> {
        let (m, m_t) = (self.lattice.m, self.lattice.m_t);
        let buf = self.coefficient_buffer();
        let mut out = Vec::with_capacity(buf.len());
        for l in 0..m_t {
            for j in 0..m {
                out.push((freq(j, m), freq(l, m_t), buf[l * m + j]));
            }
        }
        out
    }

    pub fn coefficient(&self, n: i64, k: i64) -> Complex64 {
        match (slot(n, self.lattice.m), slot(k, self.lattice.m_t)) {
            (Some(j), Some(l)) => self.coefficient_buffer()[l * self.lattice.m + j],
            _ => ZERO,
        }
    }

    fn map_coefficients(&self, f: impl Fn(i64, i64, Complex64) -> Complex64) -> Self {
        let (m, m_t) = (self.lattice.m, self.lattice.m_t);
        let mut buf = self.coefficient_buffer();
        for l in 0..m_t {
            let k = freq(l, m_t);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for j in 0..m {
                let i = l * m + j;
                // back to the raw FFT phase convention for the inverse transform
                buf[i] = f(freq(j, m), k, buf[i]) * sign;
            }
        }
        fft2(&mut buf, m, m_t, true);
        Self { lattice: self.lattice, samples: buf, dispersion: self.dispersion }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|z| z * a).collect(),
            ..self.clone()
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            samples: self.samples.iter().map(|z| z.conj()).collect(),
            ..self.clone()
        }
    }

    /// `∂_x f`.
    pub fn derivative_x(&self) -> Self {
        self.map_coefficients(|n, _, c| c * Complex64::new(0.0, n as f64))
    }

    /// Removes the `n = 0` mode at every time.
    pub fn project_zero_mean(&self) -> Self {
        self.map_coefficients(|n, _, c| if n == 0 { ZERO } else { c })
    }

    /// Keeps modes with `|n| <= n_max` and `|k| <= k_max`.
    pub fn band_limit(&self, n_max: i64, k_max: i64) -> Self {
        self.map_coefficients(|n, k, c| if n.abs() <= n_max && k.abs() <= k_max { c } else { ZERO })
    }

    /// `ψ_δ(t) f(x, t)` on the lattice.
    pub fn localize(&self, cutoff: &CutoffProfile) -> Self {
        let mut out = self.clone();
        for l in 0..self.lattice.m_t {
            let w = cutoff.eval(self.lattice.t(l));
            for j in 0..self.lattice.m {
                out.samples[self.lattice.index(j, l)] *= w;
            }
        }
        out
    }

    /// Pointwise product of lattice samples; tagged with `dispersion`.
    pub fn product(factors: &[&SpaceTimeField], dispersion: Dispersion) -> Result<Self> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| LabError::Config("empty product".into()))?;
        let mut samples = first.samples.clone();
        for f in rest {
            if f.lattice != first.lattice {
                return Err(LabError::GridMismatch { left: first.lattice.m, right: f.lattice.m });
            }
            for (a, b) in samples.iter_mut().zip(&f.samples) {
                *a *= b;
            }
        }
        Ok(Self { lattice: first.lattice, samples, dispersion })
    }

    /// Discrete `L²_{xt}` norm.
    pub fn l2_norm(&self) -> f64 {
        let cell = 2.0 * PI * self.lattice.window / self.lattice.len() as f64;
        (cell * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `‖f‖_{L⁴_{xt}}` of the trigonometric polynomial, exact via 2× zero padding.
    pub fn l4_norm(&self) -> f64 {
        let (m, m_t) = (self.lattice.m, self.lattice.m_t);
        let (pm, pt) = (2 * m, 2 * m_t);
        let src = self.coefficient_buffer();
        let mut buf = vec![ZERO; pm * pt];
        for l in 0..m_t {
            let k = freq(l, m_t);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let pl = k.rem_euclid(pt as i64) as usize;
            for j in 0..m {
                let pj = freq(j, m).rem_euclid(pm as i64) as usize;
                buf[pl * pm + pj] = src[l * m + j] * sign;
            }
        }
        fft2(&mut buf, pm, pt, true);
        let cell = 2.0 * PI * self.lattice.window / (pm * pt) as f64;
        (cell * buf.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>()).powf(0.25)
    }
}

fn require_tag(f: &SpaceTimeField) -> Result<()> {
    if f.dispersion == Dispersion::None {
        return Err(LabError::Config("space-time norm needs a dispersion tag".into()));
    }
    Ok(())
}

fn weighted_sum(f: &SpaceTimeField, weight: impl Fn(i64, f64) -> f64) -> f64 {
    let lat = f.lattice;
    f.coefficients()
        .into_iter()
        .map(|(n, k, c)| weight(n, lat.tau(k)) * c.norm_sqr())
        .sum()
}

/// `‖f‖_{X^{reg,b}}` or `‖f‖_{Y^{reg,b}}`, according to the dispersion tag.
pub fn xt_norm(f: &SpaceTimeField, reg: f64, b: f64) -> Result<f64> {
    require_tag(f)?;
    let d = f.dispersion;
    let sum = weighted_sum(f, |n, tau| {
        bracket(n as f64).powf(2.0 * reg) * bracket(d.modulation(n, tau)).powf(2.0 * b)
    });
    Ok((2.0 * PI * f.lattice.window * sum).sqrt())
}

/// Companion space of a Bourgain norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompanionSpace {
    /// Schrödinger weight.
    Z,
    /// Airy weight.
    W,
}

impl CompanionSpace {
    fn dispersion(&self) -> Dispersion {
        match self {
            CompanionSpace::Z => Dispersion::Schrodinger,
            CompanionSpace::W => Dispersion::Airy,
        }
    }
}

/// `‖f‖_{X^{reg,−1/2}} + ‖⟨n⟩^{reg} c(n, ·)/⟨modulation⟩‖_{ℓ²_n ℓ¹_k}`.
///
/// The second part is normalised like `L^∞_t L²_x`: it is
/// `(2π Σ_n ⟨n⟩^{2 reg} (Σ_k |c(n, k)|/⟨modulation⟩)²)^{1/2}`.
pub fn companion_norm(f: &SpaceTimeField, reg: f64, space: CompanionSpace) -> Result<f64> {
    require_tag(f)?;
    let d = space.dispersion();
    if f.dispersion != d {
        return Err(LabError::Config(format!("{space:?} norm requested for a {:?} field", f.dispersion)));
    }
    let lat = f.lattice;
    let coeffs = f.coefficients();
    let mut neg_half = 0.0;
    let mut per_mode = vec![0.0; lat.m];
    for &(n, k, c) in &coeffs {
        let w = bracket(d.modulation(n, lat.tau(k)));
        neg_half += bracket(n as f64).powf(2.0 * reg) / w * c.norm_sqr();
        per_mode[n.rem_euclid(lat.m as i64) as usize] += c.norm() / w;
    }
    let l1: f64 = per_mode
        .iter()
        .enumerate()
        .map(|(j, s)| bracket(freq(j, lat.m) as f64).powf(2.0 * reg) * s * s)
        .sum();
    Ok((2.0 * PI * lat.window * neg_half).sqrt() + (2.0 * PI * l1).sqrt())
}

/// Random field with `|c(n, k)| = ⟨n⟩^{−a} ⟨modulation⟩^{−c}` and uniform phases;
/// `a` and `c` are drawn from `[0.6, 1.5]`.
pub fn random_spacetime_field(lattice: Lattice, dispersion: Dispersion, rng: &mut ChaCha8Rng) -> SpaceTimeField {
    let a: f64 = rng.gen_range(0.6..=1.5);
    let c: f64 = rng.gen_range(0.6..=1.5);
    let phases: Vec<f64> = (0..lattice.len()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let (m, m_t) = (lattice.m as i64, lattice.m_t as i64);
    SpaceTimeField::from_coefficients(lattice, dispersion, |n, k| {
        let i = (k.rem_euclid(m_t) * m + n.rem_euclid(m)) as usize;
        let w = bracket(n as f64).powf(-a) * bracket(dispersion.modulation(n, lattice.tau(k))).powf(-c);
        Complex64::from_polar(w, phases[i])
    })
}

/// Summary of an ensemble of LHS/RHS ratios.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioStats {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
    pub mean: f64,
}

impl RatioStats {
    pub fn from_ratios(ratios: &[f64]) -> Result<Self> {
        if ratios.is_empty() {
            return Err(LabError::Config("no ratios to summarise".into()));
        }
        if ratios.iter().any(|r| !r.is_finite()) {
            return Err(LabError::Domain("non-finite estimate ratio".into()));
        }
        let mut sorted = ratios.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = |q: f64| sorted[((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1];
        Ok(Self {
            count: sorted.len(),
            min: sorted[0],
            median: rank(0.5),
            p90: rank(0.9),
            max: sorted[sorted.len() - 1],
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        })
    }
}

fn draw_rng(seed: u64, draw: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(draw as u64))
}

fn ensemble<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if count == 0 {
        return Err(LabError::Config("sample count must be at least 1".into()));
    }
    (0..count).into_par_iter().map(f).collect()
}

/// Ratios `‖ψf‖_{L⁴}/‖f‖_{X^{0,3/8}}` and `‖ψg‖_{L⁴}/‖g‖_{Y^{0,1/3}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StrichartzStats {
    pub schrodinger: RatioStats,
    pub airy: RatioStats,
}

pub fn strichartz_ratio(sample_count: usize, lattice: Lattice, seed: u64) -> Result<StrichartzStats> {
    lattice.validate()?;
    let cutoff = CutoffProfile::for_window(&lattice);
    let ratio = |d: Dispersion, b: f64, salt: u64| {
        ensemble(sample_count, |i| {
            let mut rng = draw_rng(seed ^ salt, i);
            let f = random_spacetime_field(lattice, d, &mut rng);
            Ok(f.localize(&cutoff).l4_norm() / xt_norm(&f, 0.0, b)?)
        })
    };
    Ok(StrichartzStats {
        schrodinger: RatioStats::from_ratios(&ratio(Dispersion::Schrodinger, 3.0 / 8.0, 0)?)?,
        airy: RatioStats::from_ratios(&ratio(Dispersion::Airy, 1.0 / 3.0, 0x5eed)?)?,
    })
}

/// Estimate tested by [`estimate_ratio`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaId {
    /// `‖u v w̄‖_{Z^k} ≲ ‖u‖_{X^{k,3/8}} ‖v‖_{X^{k,3/8}} ‖w‖_{X^{k,3/8}}`, `k ≥ 0`.
    U2u,
    /// `‖∂_x(v₁v₂)‖_{W^s} ≲ ‖v₁‖_{Y^{s,1/3}}‖v₂‖_{Y^{s,1/2}} + (1 ↔ 2)`, `s ≥ −1/2`, zero-mean inputs.
    Dv2,
    /// `‖uv‖_{Z^k} ≲ ‖u‖_{X^{k,3/8}}‖v‖_{Y^{s,1/2}} + ‖u‖_{X^{k,1/2}}‖v‖_{Y^{s,1/3}}`,
    /// `s ≥ 0`, `k − s ≤ 3/2`.
    Uv,
    /// `‖∂_x(u₁ū₂)‖_{W^s} ≲ ‖u₁‖_{X^{k,3/8}}‖u₂‖_{X^{k,1/2}} + (1 ↔ 2)`,
    /// `1 + s ≤ 4k`, `k − s ≥ −1/2`.
    Du2,
    /// `‖ψ_T f‖_{X^{s,b′}} ≲ T^{b−b′} ‖f‖_{X^{s,b}}`, `−1/2 < b′ ≤ b ≤ 1/2`.
    TimeLoc,
}

/// Exponents for [`estimate_ratio`]; unused entries are ignored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub b_prime: f64,
}

impl LemmaParams {
    fn check(&self, lemma: LemmaId) -> Result<()> {
        let LemmaParams { k, s, b, b_prime } = *self;
        let fail = |what: String| Err(LabError::Hypothesis(format!("{lemma:?}: {what}")));
        if [k, s, b, b_prime].iter().any(|x| !x.is_finite()) {
            return fail("exponents must be finite".into());
        }
        match lemma {
            LemmaId::U2u if k < 0.0 => fail(format!("requires k >= 0, got k = {k}")),
            LemmaId::Dv2 if s < -0.5 => fail(format!("requires s >= -1/2, got s = {s}")),
            LemmaId::Uv if s < 0.0 => fail(format!("requires s >= 0, got s = {s}")),
            LemmaId::Uv if k - s > 1.5 => fail(format!("violates k - s <= 3/2 (k - s = {})", k - s)),
            LemmaId::Du2 if 1.0 + s > 4.0 * k => fail(format!("violates 1 + s <= 4k (1 + s = {}, 4k = {})", 1.0 + s, 4.0 * k)),
            LemmaId::Du2 if k - s < -0.5 => fail(format!("violates k - s >= -1/2 (k - s = {})", k - s)),
            LemmaId::TimeLoc if !(b_prime > -0.5) => fail(format!("requires b' > -1/2, got b' = {b_prime}")),
            LemmaId::TimeLoc if b_prime > b => fail(format!("requires b' <= b, got b' = {b_prime} > b = {b}")),
            LemmaId::TimeLoc if b > 0.5 => fail(format!("requires b <= 1/2, got b = {b}")),
            _ => Ok(()),
        }
    }
}

/// Scales `T` of the time-localization sweep.
pub const TIME_SCALES: [f64; 6] = [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625];

/// Maxima of the time-localization ratio per scale and the fitted exponent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeSweep {
    pub scales: Vec<f64>,
    pub maxima: Vec<f64>,
    /// Least-squares slope of `log max` against `log T`.
    pub exponent: f64,
    /// Smallest acceptable exponent, `(b − b′) − 0.1`.
    pub floor: f64,
}

impl TimeSweep {
    pub fn passes(&self) -> bool {
        self.exponent >= self.floor
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub lemma: LemmaId,
    pub params: LemmaParams,
    /// Statistics at the largest scale for the time-localization sweep.
    pub stats: RatioStats,
    pub sweep: Option<TimeSweep>,
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Largest band `|n| <= n_max`, `|k| <= k_max` whose `factors`-fold products stay alias-free.
fn product_band(lattice: &Lattice, factors: i64) -> (i64, i64) {
    let half = |len: usize| (len / 2) as i64 - 1;
    (half(lattice.m) / factors, half(lattice.m_t) / factors)
}

fn lemma_ratio(lemma: LemmaId, p: &LemmaParams, lattice: Lattice, rng: &mut ChaCha8Rng) -> Result<f64> {
    use Dispersion::{Airy, Schrodinger};
    let draw = |d: Dispersion, factors: i64, rng: &mut ChaCha8Rng| {
        let (nb, kb) = product_band(&lattice, factors);
        random_spacetime_field(lattice, d, rng).band_limit(nb, kb)
    };
    let LemmaParams { k, s, .. } = *p;
    match lemma {
        LemmaId::U2u => {
            let (u, v, w) = (draw(Schrodinger, 3, rng), draw(Schrodinger, 3, rng), draw(Schrodinger, 3, rng));
            let lhs = companion_norm(&SpaceTimeField::product(&[&u, &v, &w.conj()], Schrodinger)?, k, CompanionSpace::Z)?;
            Ok(lhs / (xt_norm(&u, k, 0.375)? * xt_norm(&v, k, 0.375)? * xt_norm(&w, k, 0.375)?))
        }
        LemmaId::Dv2 => {
            let v1 = draw(Airy, 2, rng).project_zero_mean();
            let v2 = draw(Airy, 2, rng).project_zero_mean();
            let lhs = companion_norm(&SpaceTimeField::product(&[&v1, &v2], Airy)?.derivative_x(), s, CompanionSpace::W)?;
            let rhs = xt_norm(&v1, s, 1.0 / 3.0)? * xt_norm(&v2, s, 0.5)? + xt_norm(&v1, s, 0.5)? * xt_norm(&v2, s, 1.0 / 3.0)?;
            Ok(lhs / rhs)
        }
        LemmaId::Uv => {
            let u = draw(Schrodinger, 2, rng);
            let v = draw(Airy, 2, rng);
            let lhs = companion_norm(&SpaceTimeField::product(&[&u, &v], Schrodinger)?, k, CompanionSpace::Z)?;
            let rhs = xt_norm(&u, k, 0.375)? * xt_norm(&v, s, 0.5)? + xt_norm(&u, k, 0.5)? * xt_norm(&v, s, 1.0 / 3.0)?;
            Ok(lhs / rhs)
        }
        LemmaId::Du2 => {
            let u1 = draw(Schrodinger, 2, rng);
            let u2 = draw(Schrodinger, 2, rng);
            let lhs = companion_norm(&SpaceTimeField::product(&[&u1, &u2.conj()], Airy)?.derivative_x(), s, CompanionSpace::W)?;
            let rhs = xt_norm(&u1, k, 0.375)? * xt_norm(&u2, k, 0.5)? + xt_norm(&u1, k, 0.5)? * xt_norm(&u2, k, 0.375)?;
            Ok(lhs / rhs)
        }
        LemmaId::TimeLoc => unreachable!("handled by the sweep"),
    }
}

/// Empirical LHS/RHS statistics of one estimate over `sample_count` random draws.
///
/// Parameters outside the estimate's hypotheses are rejected. Draw `i` uses the
/// stream `seed + i`, so results do not depend on the thread count.
pub fn estimate_ratio(
    lemma: LemmaId,
    params: LemmaParams,
    lattice: Lattice,
    sample_count: usize,
    seed: u64,
) -> Result<RatioReport> {
    params.check(lemma)?;
    lattice.validate()?;
    if lemma != LemmaId::TimeLoc {
        let ratios = ensemble(sample_count, |i| lemma_ratio(lemma, &params, lattice, &mut draw_rng(seed, i)))?;
        return Ok(RatioReport { lemma, params, stats: RatioStats::from_ratios(&ratios)?, sweep: None });
    }

    let LemmaParams { s, b, b_prime, .. } = params;
    let per_draw: Vec<Vec<f64>> = ensemble(sample_count, |i| {
        let f = random_spacetime_field(lattice, Dispersion::Schrodinger, &mut draw_rng(seed, i));
        let rhs = xt_norm(&f, s, b)?;
        TIME_SCALES
            .iter()
            .map(|&t| Ok(xt_norm(&f.localize(&CutoffProfile::new(t * lattice.window / 4.0)?), s, b_prime)? / rhs))
            .collect()
    })?;
    let table: Vec<Vec<f64>> = (0..TIME_SCALES.len())
        .map(|j| per_draw.iter().map(|row| row[j]).collect())
        .collect();
    let maxima: Vec<f64> = table.iter().map(|row| row.iter().cloned().fold(0.0, f64::max)).collect();
    let logs_t: Vec<f64> = TIME_SCALES.iter().map(|t| t.ln()).collect();
    let logs_r: Vec<f64> = maxima.iter().map(|r| r.ln()).collect();
    let sweep = TimeSweep {
        scales: TIME_SCALES.to_vec(),
        exponent: fit_slope(&logs_t, &logs_r),
        maxima,
        floor: (b - b_prime) - 0.1,
    };
    Ok(RatioReport { lemma, params, stats: RatioStats::from_ratios(&table[0])?, sweep: Some(sweep) })
}
