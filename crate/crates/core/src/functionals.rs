//! Mass, momentum-type functional `L`, energy `E`, their I-modified versions,
//! and the a-priori comparison ratios between them.
//!
//! ```text
//! M(u)    = ‖u‖_{L²}
//! L(u, v) = α‖v‖²_{L²} + 2γ ∫ Im(u ū_x)
//! E(u, v) = αγ ∫ v|u|² + γ‖u_x‖² + (α/2)‖v_x‖² − (α/6) ∫ v³ + (βγ/2) ∫ |u|⁴
//! ```
//!
//! All integrals of products are evaluated exactly for band-limited fields.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::i_operator::{apply_i, IOperatorSpec};
use crate::solver::{SystemParams, SystemState};
use crate::spectral::{integral_of_pair, integral_of_product, SpectralField};

pub fn mass(u: &SpectralField) -> f64 {
    u.sobolev_norm(0.0)
}

/// `∫ Im(u ū_x) dx`.
pub fn momentum_density_integral(u: &SpectralField) -> f64 {
    integral_of_pair(u, &u.derivative(1).conj()).im
}

pub fn momentum_l(u: &SpectralField, v: &SpectralField, params: &SystemParams) -> f64 {
    params.alpha * v.l2_norm().powi(2) + 2.0 * params.gamma * momentum_density_integral(u)
}

/// The energy before discarding the imaginary rounding residue.
pub fn energy_e_complex(u: &SpectralField, v: &SpectralField, params: &SystemParams) -> Result<Complex64> {
    let SystemParams { alpha, beta, gamma } = *params;
    let ub = u.conj();
    let coupling = integral_of_product(&[v, u, &ub])?;
    let cubic = integral_of_product(&[v, v, v])?;
    let quartic = integral_of_product(&[u, &ub, u, &ub])?;
    let kinetic = gamma * u.derivative(1).l2_norm().powi(2) + 0.5 * alpha * v.derivative(1).l2_norm().powi(2);
    Ok(alpha * gamma * coupling + kinetic - alpha / 6.0 * cubic + 0.5 * beta * gamma * quartic)
}

pub fn energy_e(u: &SpectralField, v: &SpectralField, params: &SystemParams) -> Result<f64> {
    Ok(energy_e_complex(u, v, params)?.re)
}

/// `(L(Iu, Iv), E(Iu, Iv))`.
pub fn modified_functionals(
    u: &SpectralField,
    v: &SpectralField,
    spec: &IOperatorSpec,
    params: &SystemParams,
) -> Result<(f64, f64)> {
    let iu = apply_i(u, spec);
    let iv = apply_i(v, spec);
    Ok((momentum_l(&iu, &iv, params), energy_e(&iu, &iv, params)?))
}

/// Conserved and modified quantities at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub t: f64,
    pub mass: f64,
    pub momentum_l: f64,
    pub energy_e: f64,
    pub modified_l: f64,
    pub modified_e: f64,
    /// `(‖Iu‖_{H¹}, ‖Iv‖_{H¹})`.
    pub h1_norms: (f64, f64),
}

impl FunctionalReport {
    pub fn compute(state: &SystemState, spec: &IOperatorSpec, params: &SystemParams) -> Result<Self> {
        let (u, v) = (&state.u, &state.v);
        let (modified_l, modified_e) = modified_functionals(u, v, spec, params)?;
        let report = Self {
            t: state.t,
            mass: mass(u),
            momentum_l: momentum_l(u, v, params),
            energy_e: energy_e(u, v, params)?,
            modified_l,
            modified_e,
            h1_norms: (apply_i(u, spec).sobolev_norm(1.0), apply_i(v, spec).sobolev_norm(1.0)),
        };
        let all = [
            report.mass,
            report.momentum_l,
            report.energy_e,
            report.modified_l,
            report.modified_e,
            report.h1_norms.0,
            report.h1_norms.1,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(LabError::Instability { t: state.t });
        }
        Ok(report)
    }
}

/// LHS/RHS of the a-priori comparisons between `M`, `L`, `E` and Sobolev norms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AprioriRatios {
    /// `|L| ≲ ‖v‖² + M‖u_x‖`
    pub l1: f64,
    /// `‖v‖² ≲ |L| + M‖u_x‖`
    pub l2: f64,
    /// `‖u_x‖² + ‖v_x‖² ≲ |E| + |L|^{5/3} + M⁸ + 1`
    pub e1: f64,
    /// `|E| ≲ ‖u_x‖² + ‖v_x‖² + |L|^{5/3} + M⁸ + 1`
    pub e2: f64,
    /// `|E| ≲ ‖u_x‖² + ‖v_x‖² + ‖v‖^{10/3} + M¹⁰ + 1`
    pub e3: f64,
    /// `‖v‖² ≲ |L| + M|E|^{1/2} + M⁶ + 1`
    pub e4: f64,
    /// `‖u‖²_{H¹} + ‖v‖²_{H¹} ≲ |E| + |L|^{5/3} + M⁸ + 1`
    pub e5: f64,
}

impl AprioriRatios {
    pub fn as_array(&self) -> [f64; 7] {
        [self.l1, self.l2, self.e1, self.e2, self.e3, self.e4, self.e5]
    }

    pub const NAMES: [&'static str; 7] = ["L1", "L2", "E1", "E2", "E3", "E4", "E5"];

    /// Componentwise maximum.
    pub fn max(&self, other: &Self) -> Self {
        let a = self.as_array();
        let b = other.as_array();
        let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        Self { l1: m[0], l2: m[1], e1: m[2], e2: m[3], e3: m[4], e4: m[5], e5: m[6] }
    }

    /// Whether every ratio is at most the matching fitted constant.
    pub fn within(&self, constants: &Self) -> bool {
        self.as_array().iter().zip(constants.as_array()).all(|(r, c)| *r <= c)
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

pub fn apriori_ratios(u: &SpectralField, v: &SpectralField, params: &SystemParams) -> Result<AprioriRatios> {
    if !params.is_energy_coercive() {
        return Err(LabError::Hypothesis(format!(
            "a-priori bounds need αγ > 0, got α = {}, γ = {}",
            params.alpha, params.gamma
        )));
    }
    let m = mass(u);
    let l = momentum_l(u, v, params).abs();
    let e = energy_e(u, v, params)?.abs();
    let v2 = v.l2_norm().powi(2);
    let ux = u.derivative(1).l2_norm();
    let grad2 = ux * ux + v.derivative(1).l2_norm().powi(2);
    let h1 = u.sobolev_norm(1.0).powi(2) + v.sobolev_norm(1.0).powi(2);
    let energy_side = e + l.powf(5.0 / 3.0) + m.powi(8) + 1.0;
    Ok(AprioriRatios {
        l1: ratio(l, v2 + m * ux),
        l2: ratio(v2, l + m * ux),
        e1: ratio(grad2, energy_side),
        e2: ratio(e, grad2 + l.powf(5.0 / 3.0) + m.powi(8) + 1.0),
        e3: ratio(e, grad2 + v.l2_norm().powf(10.0 / 3.0) + m.powi(10) + 1.0),
        e4: ratio(v2, l + m * e.sqrt() + m.powi(6) + 1.0),
        e5: ratio(h1, energy_side),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{random_field, Envelope};
    use crate::i_operator::SymbolVariant;
    use crate::solver::{linear_propagate, SystemState};
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    fn cos_field(g: &Grid) -> SpectralField {
        SpectralField::from_real_samples(g, &g.abscissae().iter().map(|x| x.cos()).collect::<Vec<_>>()).unwrap()
    }

    fn random_pair(g: &Grid, seed: u64) -> (SpectralField, SpectralField) {
        let e = Envelope::PowerLaw { exponent: 1.6 };
        (
            random_field(g, e, false, None, 2 * seed),
            random_field(g, e, true, None, 2 * seed + 1).project_zero_mean(),
        )
    }

    #[test]
    fn mass_examples() {
        let g = Grid::new(16).unwrap();
        assert_eq!(mass(&SpectralField::zeros(&g, false)), 0.0);
        let e1 = SpectralField::mode(&g, 1, Complex64::new(1.0, 0.0));
        assert!((mass(&e1) - (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((mass(&e1) - 2.506628).abs() < 1e-6);
        let (u, v) = random_pair(&g, 3);
        let s = SystemState::new(0.0, u, v).unwrap();
        let p = linear_propagate(&s, 0.7);
        assert!((mass(&p.u) - mass(&s.u)).abs() <= 1e-14 * mass(&s.u));
    }

    #[test]
    fn momentum_examples() {
        let g = Grid::new(16).unwrap();
        let zero = SpectralField::zeros(&g, false);
        let p = SystemParams::new(1.0, 0.0, 1.0);
        assert!((momentum_l(&zero, &cos_field(&g), &p) - PI).abs() < 1e-14);
        let e1 = SpectralField::mode(&g, 1, Complex64::new(1.0, 0.0));
        assert!((momentum_l(&e1, &SpectralField::zeros(&g, true), &p) + 4.0 * PI).abs() < 1e-14);
        let (u, _) = random_pair(&g, 1);
        assert!(momentum_l(&u.re(), &SpectralField::zeros(&g, true), &p).abs() < 1e-14);
    }

    #[test]
    fn energy_examples() {
        let g = Grid::new(16).unwrap();
        let zero_u = SpectralField::zeros(&g, false);
        let zero_v = SpectralField::zeros(&g, true);
        let p = SystemParams::new(1.0, 0.0, 1.0);
        assert!((energy_e(&zero_u, &cos_field(&g), &p).unwrap() - PI / 2.0).abs() < 1e-14);
        let e1 = SpectralField::mode(&g, 1, Complex64::new(1.0, 0.0));
        assert!((energy_e(&e1, &zero_v, &p).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert_eq!(energy_e(&zero_u, &zero_v, &SystemParams::new(1.0, 1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn quartic_term_of_plane_wave() {
        // |e^{ix}|⁴ = 1, so the β term contributes βγ/2 · 2π
        let g = Grid::new(16).unwrap();
        let e1 = SpectralField::mode(&g, 1, Complex64::new(1.0, 0.0));
        let p = SystemParams::new(0.0, 1.0, 1.0);
        let e = energy_e(&e1, &SpectralField::zeros(&g, true), &p).unwrap();
        assert!((e - (2.0 * PI + PI)).abs() < 1e-13);
    }

    #[test]
    fn energy_is_real() {
        let g = Grid::new(64).unwrap();
        let p = SystemParams::new(1.3, -0.7, 0.4);
        for seed in 0..10 {
            let (u, v) = random_pair(&g, seed);
            let e = energy_e_complex(&u, &v, &p).unwrap();
            assert!(e.im.abs() <= 1e-12 * e.re.abs().max(1.0), "{e}");
        }
    }

    #[test]
    fn translation_invariance() {
        let g = Grid::new(32).unwrap();
        let p = SystemParams::new(1.0, 0.5, 2.0);
        let (u, v) = random_pair(&g, 7);
        let l0 = momentum_l(&u, &v, &p);
        let e0 = energy_e(&u, &v, &p).unwrap();
        for k in 1..5 {
            let shift = 2.0 * PI * k as f64 / 32.0;
            let (us, vs) = (u.translate(shift), v.translate(shift));
            assert!((momentum_l(&us, &vs, &p) - l0).abs() <= 1e-12 * l0.abs().max(1.0));
            assert!((energy_e(&us, &vs, &p).unwrap() - e0).abs() <= 1e-12 * e0.abs().max(1.0));
        }
    }

    #[test]
    fn modified_identity_regimes() {
        let g = Grid::new(32).unwrap();
        let p = SystemParams::new(1.0, 1.0, 1.0);
        let (u, v) = random_pair(&g, 2);
        let plain = (momentum_l(&u, &v, &p), energy_e(&u, &v, &p).unwrap());
        let wide = IOperatorSpec::for_regularity(20.0, 0.6, SymbolVariant::Smooth).unwrap();
        assert_eq!(modified_functionals(&u, &v, &wide, &p).unwrap(), plain);
        let s_one = IOperatorSpec::for_regularity(2.0, 1.0, SymbolVariant::Smooth).unwrap();
        assert_eq!(modified_functionals(&u, &v, &s_one, &p).unwrap(), plain);
    }

    #[test]
    fn ratios_of_zero_state() {
        let g = Grid::new(16).unwrap();
        let r = apriori_ratios(&SpectralField::zeros(&g, false), &SpectralField::zeros(&g, true), &SystemParams::new(1.0, 0.0, 1.0))
            .unwrap();
        assert_eq!(r.as_array(), [0.0; 7]);
    }

    #[test]
    fn ratios_require_coercive_regime() {
        let g = Grid::new(16).unwrap();
        let (u, v) = random_pair(&g, 0);
        let err = apriori_ratios(&u, &v, &SystemParams::new(1.0, 0.0, -1.0)).unwrap_err();
        assert!(matches!(err, LabError::Hypothesis(_)));
    }

    #[test]
    fn ratios_bounded_under_scaling() {
        let g = Grid::new(32).unwrap();
        let p = SystemParams::new(1.0, 0.0, 1.0);
        let u = SpectralField::mode(&g, 3, Complex64::new(1.0, 0.0));
        let v = SpectralField::from_modes(&g, true, |n| if n == 2 { Complex64::new(0.5, 0.0) } else { Complex64::new(0.0, 0.0) });
        for lambda in [1.0, 2.0, 4.0, 8.0] {
            let r = apriori_ratios(&u.scale(lambda), &v.scale(lambda), &p).unwrap();
            assert!(r.as_array().iter().all(|x| x.is_finite() && *x < 10.0), "λ = {lambda}: {r:?}");
        }
    }
}
