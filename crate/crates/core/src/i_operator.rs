//! The smoothing multiplier `I_N^α` with symbol `m(ξ/N)^α`.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::SpectralField;

/// Shape of `m` on the transition band `1 < |ξ| < 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolVariant {
    /// C¹ cubic Hermite blend of the exponent in log-log coordinates.
    #[default]
    Smooth,
    /// `min(1, |ξ|^{-1})`.
    Sharp,
}

/// `m(ξ)`: 1 on `|ξ| <= 1`, `|ξ|^{-1}` on `|ξ| >= 2`, even and nonincreasing in `|ξ|`.
pub fn symbol_m(xi: f64, variant: SymbolVariant) -> f64 {
    let a = xi.abs();
    if a <= 1.0 {
        return 1.0;
    }
    match variant {
        SymbolVariant::Sharp => 1.0 / a,
        SymbolVariant::Smooth if a >= 2.0 => 1.0 / a,
        SymbolVariant::Smooth => {
            let l = a.ln();
            let t = l / LN_2;
            let h = t * t * (3.0 - 2.0 * t);
            (-h * l).exp()
        }
    }
}

/// Parameters of `I_N^α`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IOperatorSpec {
    pub n: f64,
    pub alpha: f64,
    #[serde(default)]
    pub variant: SymbolVariant,
}

impl IOperatorSpec {
    pub fn new(n: f64, alpha: f64, variant: SymbolVariant) -> Result<Self> {
        if !(n >= 1.0) || !n.is_finite() {
            return Err(LabError::Config(format!("I-operator needs N >= 1, got {n}")));
        }
        if !alpha.is_finite() {
            return Err(LabError::Config("I-operator exponent must be finite".into()));
        }
        Ok(Self { n, alpha, variant })
    }

    /// The operator `I = I_N^{1-s}` used at regularity `s`.
    pub fn for_regularity(n: f64, s: f64, variant: SymbolVariant) -> Result<Self> {
        Self::new(n, 1.0 - s, variant)
    }

    /// Negative exponents are allowed but lie outside the smoothing regime.
    pub fn is_flagged(&self) -> bool {
        self.alpha < 0.0
    }

    /// Multiplier applied to mode `n`.
    pub fn multiplier(&self, n: i64) -> f64 {
        if self.alpha == 0.0 {
            return 1.0;
        }
        symbol_m(n as f64 / self.n, self.variant).powf(self.alpha)
    }

    /// Whether the operator acts as the identity on every mode `|n| <= k_max`.
    pub fn is_identity_up_to(&self, k_max: i64) -> bool {
        self.alpha == 0.0 || k_max as f64 <= self.n
    }
}

/// `I f`, coefficient-wise `c(n) <- m(n/N)^α c(n)`.
pub fn apply_i(f: &SpectralField, spec: &IOperatorSpec) -> SpectralField {
    if spec.is_identity_up_to(f.grid().k_max()) {
        return f.clone();
    }
    f.map_modes(true, |n| Complex64::new(spec.multiplier(n), 0.0))
}
