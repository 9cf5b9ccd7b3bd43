//! Exact decompositions of `d/dt L(Iu, Iv)` into four commutator integrals and
//! of `d/dt E(Iu, Iv)` into twelve, plus the finite-difference residual that
//! certifies them along computed trajectories.
//!
//! Every integrand is a product of band-limited fields in which one factor is a
//! commutator such as `I(vv_x) − Iv·Iv_x`. Since each product is dealiased and
//! truncated the same way as in the solver, the identities hold exactly for the
//! spectrally truncated flow, not only in the continuum limit.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functionals::modified_functionals;
use crate::i_operator::{apply_i, IOperatorSpec};
use crate::solver::{SystemParams, SystemState, Trajectory};
use crate::spectral::{integral_of_product, SpectralField};

/// Sign convention for the fifth and ninth energy terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// Signs obtained by differentiating `E(Iu, Iv)` along the flow.
    #[default]
    Derived,
    /// Signs of the published display, kept for comparison.
    AsPrinted,
}

/// Placement of the square in the eleventh energy term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum E11Reading {
    /// `Iv·Iu·(I(|u|²ū) − Iu(Iū)²)`.
    #[default]
    Linear,
    /// `Iv·Iu·(I(|u|²ū) − Iu·Iū)²`.
    SquaredBracket,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ETermReading {
    #[serde(default)]
    pub signs: SignConvention,
    #[serde(default)]
    pub e11: E11Reading,
}

/// The sixteen commutator terms at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommutatorBreakdown {
    pub t: f64,
    pub l_terms: [f64; 4],
    pub e_terms: [f64; 12],
    pub l_sum: f64,
    pub e_sum: f64,
}

/// Modified fields and the four basic commutators at one state.
struct Pieces {
    iu: SpectralField,
    iub: SpectralField,
    iv: SpectralField,
    /// `|Iu|²`, truncated
    iu_sq: SpectralField,
    /// `I(vv_x) − Iv Iv_x`
    a: SpectralField,
    /// `I(|u|²) − |Iu|²`
    b: SpectralField,
    /// `I(uv) − Iu Iv`
    c: SpectralField,
    /// `I(|u|²u) − (Iu)² Iū`
    d: SpectralField,
    /// `I(|u|²ū)`, used by the squared reading of the eleventh term
    i_u2ub_conj: SpectralField,
}

impl Pieces {
    fn new(u: &SpectralField, v: &SpectralField, spec: &IOperatorSpec) -> Result<Self> {
        let prod = SpectralField::dealiased_product;
        let i = |f: &SpectralField| apply_i(f, spec);
        let ub = u.conj();
        let iu = i(u);
        let iub = iu.conj();
        let iv = i(v);

        let a = &i(&prod(&[v, &v.derivative(1)])?) - &prod(&[&iv, &iv.derivative(1)])?;
        let iu_sq = prod(&[&iu, &iub])?;
        let b = &i(&prod(&[u, &ub])?) - &iu_sq;
        let c = &i(&prod(&[u, v])?) - &prod(&[&iu, &iv])?;
        let i_u2u = i(&prod(&[u, u, &ub])?);
        let d = &i_u2u - &prod(&[&iu, &iu, &iub])?;
        Ok(Self {
            i_u2ub_conj: i_u2u.conj(),
            iu,
            iub,
            iv,
            iu_sq,
            a,
            b,
            c,
            d,
        })
    }
}

fn re_int(fields: &[&SpectralField]) -> Result<f64> {
    Ok(integral_of_product(fields)?.re)
}

fn im_int(fields: &[&SpectralField]) -> Result<f64> {
    Ok(integral_of_product(fields)?.im)
}

fn l_terms_from(p: &Pieces, params: &SystemParams) -> Result<[f64; 4]> {
    let SystemParams { alpha, beta, gamma } = *params;
    let iub_x = p.iub.derivative(1);
    let l1 = -2.0 * alpha * re_int(&[&p.iv, &p.a])?;
    let l2 = 2.0 * alpha * gamma * re_int(&[&p.iv, &p.b.derivative(1)])?;
    let l3 = -4.0 * alpha * gamma * re_int(&[&iub_x, &p.c])?;
    let l4 = if beta == 0.0 {
        0.0
    } else {
        -4.0 * beta * gamma * re_int(&[&p.d, &iub_x])?
    };
    Ok([l1, l2, l3, l4])
}

fn e_terms_from(p: &Pieces, params: &SystemParams, reading: ETermReading) -> Result<[f64; 12]> {
    let SystemParams { alpha, beta, gamma } = *params;
    let iu_x = p.iu.derivative(1);
    let iub_x = p.iub.derivative(1);
    let iv_x = p.iv.derivative(1);
    let iv_xx = p.iv.derivative(2);
    let b_x = p.b.derivative(1);
    let cb = p.c.conj();
    let printed = reading.signs == SignConvention::AsPrinted;

    let e1 = alpha * re_int(&[&p.a, &iv_xx])?;
    let e2 = 0.5 * alpha * re_int(&[&p.iv, &p.iv, &p.a])?;
    let e4 = -alpha * gamma * re_int(&[&p.iu, &p.iub, &p.a])?;
    let e5_derived = alpha * gamma * re_int(&[&p.b, &p.iv, &iv_x])?;
    let e5 = if printed { -e5_derived } else { e5_derived };
    let e6 = -alpha * gamma * re_int(&[&iv_xx, &b_x])?;
    let e7 = -2.0 * alpha * gamma * im_int(&[&iu_x, &cb.derivative(1)])?;
    let e8 = alpha * gamma * gamma * re_int(&[&p.iu, &p.iub, &b_x])?;
    let e9_printed = 2.0 * alpha * alpha * gamma * im_int(&[&p.iv, &p.iu, &cb])?;
    let e9 = if printed { e9_printed } else { -e9_printed };
    let e12 = -2.0 * alpha * beta * gamma * im_int(&[&p.iu, &p.iu, &p.iub, &cb])?;

    let (e3, e10, e11) = if beta == 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        let e3 = 2.0 * beta * gamma * im_int(&[&p.d.derivative(1), &iub_x])?;
        let e10 = 2.0 * beta * beta * gamma * im_int(&[&p.iu, &p.iub, &p.iub, &p.d])?;
        let e11 = match reading.e11 {
            E11Reading::Linear => -2.0 * alpha * beta * gamma * im_int(&[&p.iv, &p.iu, &p.d.conj()])?,
            E11Reading::SquaredBracket => {
                let w = &p.i_u2ub_conj - &p.iu_sq;
                -2.0 * alpha * beta * gamma * im_int(&[&p.iv, &p.iu, &w, &w])?
            }
        };
        (e3, e10, e11)
    };
    Ok([e1, e2, e3, e4, e5, e6, e7, e8, e9, e10, e11, e12])
}

/// `(L₁, …, L₄)` with `d/dt L(Iu, Iv) = Σ L_j`.
pub fn l_terms(u: &SpectralField, v: &SpectralField, spec: &IOperatorSpec, params: &SystemParams) -> Result<[f64; 4]> {
    l_terms_from(&Pieces::new(u, v, spec)?, params)
}

/// `(E₁, …, E₁₂)` with `d/dt E(Iu, Iv) = Σ E_j`, in display order.
pub fn e_terms(
    u: &SpectralField,
    v: &SpectralField,
    spec: &IOperatorSpec,
    params: &SystemParams,
    reading: ETermReading,
) -> Result<[f64; 12]> {
    e_terms_from(&Pieces::new(u, v, spec)?, params, reading)
}

/// All sixteen terms at one state.
pub fn breakdown(
    state: &SystemState,
    spec: &IOperatorSpec,
    params: &SystemParams,
    reading: ETermReading,
) -> Result<CommutatorBreakdown> {
    let pieces = Pieces::new(&state.u, &state.v, spec)?;
    let l_terms = l_terms_from(&pieces, params)?;
    let e_terms = e_terms_from(&pieces, params, reading)?;
    Ok(CommutatorBreakdown {
        t: state.t,
        l_terms,
        e_terms,
        l_sum: l_terms.iter().sum(),
        e_sum: e_terms.iter().sum(),
    })
}

/// Normalised mismatch between a centred difference of the modified functionals
/// and the commutator sums.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub h: f64,
    pub res_l: f64,
    pub res_e: f64,
}

/// Compares `(F(t+h) − F(t−h))/(2h)` with `Σ F_j(t)` for `F = L(Iu, Iv)` and
/// `F = E(Iu, Iv)`; both mismatches are divided by `max(1, |Σ F_j|)`.
pub fn derivative_identity_residual(
    trajectory: &Trajectory,
    t: f64,
    h: f64,
    spec: &IOperatorSpec,
    params: &SystemParams,
    reading: ETermReading,
) -> Result<IdentityResidual> {
    let before = trajectory.sample_at(t - h)?;
    let centre = trajectory.sample_at(t)?;
    let after = trajectory.sample_at(t + h)?;
    let (l_minus, e_minus) = modified_functionals(&before.u, &before.v, spec, params)?;
    let (l_plus, e_plus) = modified_functionals(&after.u, &after.v, spec, params)?;
    let b = breakdown(centre, spec, params, reading)?;
    let dl = (l_plus - l_minus) / (2.0 * h);
    let de = (e_plus - e_minus) / (2.0 * h);
    Ok(IdentityResidual {
        h,
        res_l: (dl - b.l_sum).abs() / b.l_sum.abs().max(1.0),
        res_e: (de - b.e_sum).abs() / b.e_sum.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DataSpec, Envelope};
    use crate::functionals::{energy_e, momentum_l};
    use crate::i_operator::SymbolVariant;
    use crate::spectral::Grid;

    fn state(m: usize, seed: u64) -> SystemState {
        let g = Grid::new(m).unwrap();
        let spec = DataSpec {
            envelope: Envelope::PowerLaw { exponent: 1.4 },
            norm_index: 0.0,
            u_norm: 1.5,
            v_norm: 1.5,
            cutoff: None,
        };
        let (u, v) = spec.generate(&g, seed).unwrap();
        SystemState::new(0.0, u, v).unwrap()
    }

    #[test]
    fn identity_operator_gives_vanishing_terms() {
        let s = state(32, 1);
        let params = SystemParams::new(1.0, 1.0, 1.0);
        let scale = momentum_l(&s.u, &s.v, &params)
            .abs()
            .max(energy_e(&s.u, &s.v, &params).unwrap().abs())
            .max(1.0);
        for spec in [
            IOperatorSpec::for_regularity(16.0, 0.9, SymbolVariant::Smooth).unwrap(),
            IOperatorSpec::for_regularity(4.0, 1.0, SymbolVariant::Smooth).unwrap(),
        ] {
            let b = breakdown(&s, &spec, &params, ETermReading::default()).unwrap();
            for x in b.l_terms.iter().chain(&b.e_terms) {
                assert!(x.abs() <= 1e-12 * scale, "{x}");
            }
        }
    }

    #[test]
    fn resonant_case_zeroes_beta_terms() {
        let s = state(32, 2);
        let spec = IOperatorSpec::for_regularity(4.0, 0.6, SymbolVariant::Smooth).unwrap();
        let params = SystemParams::new(1.0, 0.0, 1.0);
        let b = breakdown(&s, &spec, &params, ETermReading::default()).unwrap();
        assert_eq!(b.l_terms[3], 0.0);
        for j in [2, 9, 10, 11] {
            assert_eq!(b.e_terms[j], 0.0, "E{}", j + 1);
        }
        assert!(b.e_terms[0] != 0.0 && b.l_terms[0] != 0.0);
    }

    #[test]
    fn l_terms_scale_with_their_prefactors() {
        let s = state(32, 3);
        let spec = IOperatorSpec::for_regularity(4.0, 0.7, SymbolVariant::Sharp).unwrap();
        let base = SystemParams::new(0.8, 0.6, 1.1);
        let l0 = l_terms(&s.u, &s.v, &spec, &base).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);

        let la = l_terms(&s.u, &s.v, &spec, &SystemParams { alpha: 1.6, ..base }).unwrap();
        assert!(close(la[0], 2.0 * l0[0]) && close(la[1], 2.0 * l0[1]) && close(la[2], 2.0 * l0[2]));
        assert!(close(la[3], l0[3]));
        let lg = l_terms(&s.u, &s.v, &spec, &SystemParams { gamma: 2.2, ..base }).unwrap();
        assert!(close(lg[0], l0[0]) && close(lg[1], 2.0 * l0[1]) && close(lg[2], 2.0 * l0[2]) && close(lg[3], 2.0 * l0[3]));
        let lb = l_terms(&s.u, &s.v, &spec, &SystemParams { beta: 1.2, ..base }).unwrap();
        assert!(close(lb[0], l0[0]) && close(lb[2], l0[2]) && close(lb[3], 2.0 * l0[3]));
    }

    #[test]
    fn sums_match_components() {
        let s = state(32, 4);
        let spec = IOperatorSpec::for_regularity(5.0, 0.8, SymbolVariant::Smooth).unwrap();
        let b = breakdown(&s, &spec, &SystemParams::new(1.0, 1.0, 1.0), ETermReading::default()).unwrap();
        assert!((b.l_sum - b.l_terms.iter().sum::<f64>()).abs() < 1e-15);
        assert!((b.e_sum - b.e_terms.iter().sum::<f64>()).abs() < 1e-15);
    }

    fn residuals(beta: f64, reading: ETermReading) -> Vec<IdentityResidual> {
        use crate::solver::{Scheme, SolverConfig};
        let g = Grid::new(16).unwrap();
        let data = DataSpec {
            envelope: Envelope::Exponential { rate: 0.3 },
            norm_index: 0.0,
            u_norm: 1.0,
            v_norm: 1.0,
            cutoff: None,
        };
        let (u, v) = data.generate(&g, 7).unwrap();
        let params = SystemParams::new(1.0, beta, 1.0);
        let spec = IOperatorSpec::for_regularity(2.0, 0.5, SymbolVariant::Smooth).unwrap();
        let hs = [1e-3, 5e-4, 2.5e-4];
        let t = 0.01;
        let mut times: Vec<f64> = hs.iter().map(|h| t - h).chain([t]).chain(hs.iter().rev().map(|h| t + h)).collect();
        times.sort_by(f64::total_cmp);
        let cfg = SolverConfig::new(1e-5, Scheme::OracleRk4);
        let tr = Trajectory::record(&SystemState::new(0.0, u, v).unwrap(), &times, &cfg, &params).unwrap();
        hs.iter()
            .map(|&h| derivative_identity_residual(&tr, t, h, &spec, &params, reading).unwrap())
            .collect()
    }

    fn slope(r: &[IdentityResidual], pick: impl Fn(&IdentityResidual) -> f64) -> f64 {
        (pick(&r[0]) / pick(&r[2])).log2() / 2.0
    }

    #[test]
    fn residuals_decay_quadratically() {
        for beta in [0.0, 1.0] {
            let r = residuals(beta, ETermReading::default());
            assert!(slope(&r, |x| x.res_l) >= 1.8, "{r:?}");
            assert!(slope(&r, |x| x.res_e) >= 1.8, "{r:?}");
        }
    }

    #[test]
    fn printed_signs_leave_a_residual_floor() {
        let printed = ETermReading { signs: SignConvention::AsPrinted, e11: E11Reading::Linear };
        let r = residuals(0.0, printed);
        assert!(slope(&r, |x| x.res_e) < 1.0, "{r:?}");
        let squared = ETermReading { signs: SignConvention::Derived, e11: E11Reading::SquaredBracket };
        let r = residuals(1.0, squared);
        assert!(slope(&r, |x| x.res_e) < 1.0, "{r:?}");
    }

    #[test]
    fn sums_match_directional_derivative_along_rhs() {
        // E(Iu + εIu_t, Iv + εIv_t) is a quartic in ε, so the five-point stencil is exact
        let s = state(32, 6);
        let spec = IOperatorSpec::for_regularity(6.0, 0.7, SymbolVariant::Smooth).unwrap();
        for beta in [0.0, 1.0] {
            let params = SystemParams::new(1.0, beta, 1.0);
            let (du, dv) = crate::solver::rhs(&s, &params);
            let eps = 1e-4;
            let at = |e: f64| modified_functionals(&(&s.u + &du.scale(e)), &(&s.v + &dv.scale(e)), &spec, &params).unwrap();
            let (p2, p1, m1, m2) = (at(2.0 * eps), at(eps), at(-eps), at(-2.0 * eps));
            let dl = (m2.0 - 8.0 * m1.0 + 8.0 * p1.0 - p2.0) / (12.0 * eps);
            let de = (m2.1 - 8.0 * m1.1 + 8.0 * p1.1 - p2.1) / (12.0 * eps);
            let b = breakdown(&s, &spec, &params, ETermReading::default()).unwrap();
            assert!((dl - b.l_sum).abs() <= 1e-6 * b.l_sum.abs().max(1e-3), "{dl} vs {}", b.l_sum);
            assert!((de - b.e_sum).abs() <= 1e-6 * b.e_sum.abs().max(1e-3), "{de} vs {}", b.e_sum);
        }
    }

    #[test]
    fn missing_samples_are_reported() {
        let s = state(16, 5);
        let mut tr = Trajectory::default();
        tr.push(s.clone());
        let spec = IOperatorSpec::for_regularity(4.0, 0.9, SymbolVariant::Smooth).unwrap();
        let err = derivative_identity_residual(&tr, 0.0, 1e-3, &spec, &SystemParams::new(1.0, 1.0, 1.0), ETermReading::default());
        assert!(matches!(err, Err(crate::LabError::MissingSample { .. })));
    }
}
