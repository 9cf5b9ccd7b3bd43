//! Seeded random initial data.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{bracket, Grid, SpectralField};

/// Spectral envelope of a random field; phases are uniform and moduli carry
/// a uniform `[0.5, 1]` jitter on top of the envelope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// `e^{-rate·|n|}`, real-analytic data.
    Exponential { rate: f64 },
    /// `⟨n⟩^{-exponent}`.
    PowerLaw { exponent: f64 },
}

impl Envelope {
    fn weight(&self, n: i64) -> f64 {
        match *self {
            Envelope::Exponential { rate } => (-rate * n.abs() as f64).exp(),
            Envelope::PowerLaw { exponent } => bracket(n as f64).powf(-exponent),
        }
    }
}

/// Draws a random field with the given envelope, up to mode `cutoff`.
pub fn random_field(grid: &Grid, envelope: Envelope, real: bool, cutoff: Option<i64>, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = cutoff.map_or(grid.k_max(), |c| c.min(grid.k_max()));
    SpectralField::from_modes(grid, real, |n| {
        // draw for every visited mode so the stream does not depend on the cutoff
        let r: f64 = rng.gen_range(0.5..1.0);
        let theta: f64 = rng.gen_range(0.0..2.0 * PI);
        if n.abs() > k {
            return Complex64::new(0.0, 0.0);
        }
        let w = envelope.weight(n) * r;
        if real && n == 0 {
            Complex64::new(w * theta.cos(), 0.0)
        } else {
            Complex64::from_polar(w, theta)
        }
    })
}

/// Rescales `f` so that `‖f‖_{H^s} = target`.
pub fn normalize(f: &SpectralField, s: f64, target: f64) -> Result<SpectralField> {
    let norm = f.sobolev_norm(s);
    if norm == 0.0 {
        return Err(LabError::Domain("cannot normalise the zero field".into()));
    }
    Ok(f.scale(target / norm))
}

/// Initial data `(u₀, v₀)` description; `v₀` is real and projected to zero mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub envelope: Envelope,
    /// Sobolev index used for normalisation.
    #[serde(default)]
    pub norm_index: f64,
    pub u_norm: f64,
    pub v_norm: f64,
    #[serde(default)]
    pub cutoff: Option<i64>,
}

impl DataSpec {
    /// Generates `(u₀, v₀)`. The two fields use independent substreams of `seed`.
    pub fn generate(&self, grid: &Grid, seed: u64) -> Result<(SpectralField, SpectralField)> {
        let u = random_field(grid, self.envelope, false, self.cutoff, seed.wrapping_mul(2).wrapping_add(1));
        let v = random_field(grid, self.envelope, true, self.cutoff, seed.wrapping_mul(2).wrapping_add(2))
            .project_zero_mean();
        let u = if self.u_norm == 0.0 {
            SpectralField::zeros(grid, false)
        } else {
            normalize(&u, self.norm_index, self.u_norm)?
        };
        let v = if self.v_norm == 0.0 {
            SpectralField::zeros(grid, true)
        } else {
            normalize(&v, self.norm_index, self.v_norm)?
        };
        Ok((u, v))
    }
}
