//! Step-size law of the local theory, the leg-by-leg continuation loop, and
//! exact-rational solution of the exponent conditions behind the global
//! well-posedness thresholds.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::functionals::modified_functionals;
use crate::i_operator::{apply_i, IOperatorSpec, SymbolVariant};
use crate::solver::{integrate, SolverConfig, SystemParams, SystemState};
use crate::spectral::SpectralField;

/// Parameters of a continuation run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    /// Regularity `s ∈ [1/3, 1]`.
    pub s: f64,
    /// Multiplier parameter `N`.
    pub n: f64,
    pub t_goal: f64,
    #[serde(default = "one")]
    pub c_delta: f64,
    /// Loss `ε` in the exponent `−p − ε`.
    #[serde(default)]
    pub eps: f64,
    #[serde(default)]
    pub variant: SymbolVariant,
    #[serde(default = "default_max_legs")]
    pub max_legs: usize,
}

fn one() -> f64 {
    1.0
}

fn default_max_legs() -> usize {
    100_000
}

impl ContinuationConfig {
    pub fn new(s: f64, n: f64, t_goal: f64) -> Self {
        Self {
            s,
            n,
            t_goal,
            c_delta: 1.0,
            eps: 0.0,
            variant: SymbolVariant::Smooth,
            max_legs: default_max_legs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1.0 / 3.0..=1.0).contains(&self.s) {
            return Err(LabError::Config(format!("continuation needs 1/3 <= s <= 1, got {}", self.s)));
        }
        if !(self.c_delta > 0.0) || !self.c_delta.is_finite() {
            return Err(LabError::Config(format!("c_delta must be positive, got {}", self.c_delta)));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(LabError::Config(format!("eps must be nonnegative, got {}", self.eps)));
        }
        if !(self.t_goal > 0.0) || !self.t_goal.is_finite() {
            return Err(LabError::Config(format!("t_goal must be positive, got {}", self.t_goal)));
        }
        self.i_operator().map(|_| ())
    }

    pub fn i_operator(&self) -> Result<IOperatorSpec> {
        IOperatorSpec::for_regularity(self.n, self.s, self.variant)
    }
}

/// Exponent `p` of the step-size law: `16/3` when `β ≠ 0`, `8` when `β = 0`.
pub fn delta_exponent(params: &SystemParams) -> f64 {
    if params.beta == 0.0 {
        8.0
    } else {
        16.0 / 3.0
    }
}

/// `δ = min(1, c·proxy^{−p−ε})`; a zero proxy gives `δ = 1`.
pub fn delta_from_proxy(proxy: f64, p: f64, c_delta: f64, eps: f64) -> f64 {
    if proxy == 0.0 {
        return 1.0;
    }
    (c_delta * proxy.powf(-p - eps)).min(1.0)
}

/// `‖Iu‖_{H¹} + ‖Iv‖_{H¹}`, the slice surrogate for the space-time data norm.
pub fn norm_proxy(u: &SpectralField, v: &SpectralField, spec: &IOperatorSpec) -> f64 {
    apply_i(u, spec).sobolev_norm(1.0) + apply_i(v, spec).sobolev_norm(1.0)
}

/// Local existence time for data `(u, v)`.
pub fn local_delta(
    u: &SpectralField,
    v: &SpectralField,
    config: &ContinuationConfig,
    params: &SystemParams,
) -> Result<f64> {
    config.validate()?;
    let proxy = norm_proxy(u, v, &config.i_operator()?);
    Ok(delta_from_proxy(proxy, delta_exponent(params), config.c_delta, config.eps))
}

/// One leg of a continuation run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Leg {
    pub index: usize,
    pub t_start: f64,
    pub delta: f64,
    pub length: f64,
    pub steps: u64,
    pub mass: f64,
    pub modified_l: f64,
    pub modified_e: f64,
    pub delta_l: f64,
    pub delta_e: f64,
    /// `Σ |ΔL|` so far divided by `N^{1−s}`.
    pub budget_l: f64,
    /// `Σ |ΔE|` so far divided by `N^{2(1−s)}`.
    pub budget_e: f64,
}

/// Where a run stopped early.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LegFailure {
    pub leg: usize,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuationReport {
    pub legs: Vec<Leg>,
    pub initial_l: f64,
    pub initial_e: f64,
    pub cumulative_abs_delta_l: f64,
    pub cumulative_abs_delta_e: f64,
    /// First leg whose cumulative budget usage exceeds 1.
    pub budget_breach: Option<usize>,
    pub instability: Option<LegFailure>,
    #[serde(skip)]
    pub final_state: SystemState,
}

impl ContinuationReport {
    pub fn elapsed(&self) -> f64 {
        self.legs.iter().map(|l| l.length).sum()
    }
}

/// Repeats "compute δ, integrate over `[t, t + δ]`, record" until `t_goal`.
///
/// A budget breach is recorded and the run continues; an instability ends the
/// run and is reported with its leg.
pub fn continuation_run(
    u0: &SpectralField,
    v0: &SpectralField,
    config: &ContinuationConfig,
    params: &SystemParams,
    solver: &SolverConfig,
) -> Result<ContinuationReport> {
    config.validate()?;
    if params.alpha * params.gamma <= 0.0 {
        return Err(LabError::Hypothesis(format!(
            "continuation needs αγ > 0, got αγ = {}",
            params.alpha * params.gamma
        )));
    }
    let spec = config.i_operator()?;
    let mut state = SystemState::new(0.0, u0.clone(), v0.project_zero_mean())?;
    solver.validate(state.grid())?;
    let (initial_l, initial_e) = modified_functionals(&state.u, &state.v, &spec, params)?;
    let l_target = config.n.powf(1.0 - config.s);
    let e_target = l_target * l_target;
    let p = delta_exponent(params);

    let mut report = ContinuationReport {
        legs: Vec::new(),
        initial_l,
        initial_e,
        cumulative_abs_delta_l: 0.0,
        cumulative_abs_delta_e: 0.0,
        budget_breach: None,
        instability: None,
        final_state: state.clone(),
    };
    let (mut l, mut e) = (initial_l, initial_e);
    let mut index = 0;
    while state.t < config.t_goal {
        if index >= config.max_legs {
            return Err(LabError::Config(format!(
                "continuation needs more than {} legs to reach t = {}",
                config.max_legs, config.t_goal
            )));
        }
        let delta = delta_from_proxy(norm_proxy(&state.u, &state.v, &spec), p, config.c_delta, config.eps);
        let remaining = config.t_goal - state.t;
        let last = delta >= remaining || remaining - delta <= 1e-12 * config.t_goal;
        let length = if last { remaining } else { delta };
        let run = match integrate(&state, length, solver, params, u64::MAX, |_| {}) {
            Ok(run) => run,
            Err(LabError::Instability { t }) => {
                report.instability = Some(LegFailure { leg: index, t });
                break;
            }
            Err(err) => return Err(err),
        };
        let t_start = state.t;
        state = run.state;
        if last {
            state.t = config.t_goal;
        }
        let (l_next, e_next) = modified_functionals(&state.u, &state.v, &spec, params)?;
        report.cumulative_abs_delta_l += (l_next - l).abs();
        report.cumulative_abs_delta_e += (e_next - e).abs();
        let leg = Leg {
            index,
            t_start,
            delta,
            length,
            steps: run.steps,
            mass: state.u.l2_norm(),
            modified_l: l_next,
            modified_e: e_next,
            delta_l: l_next - l,
            delta_e: e_next - e,
            budget_l: report.cumulative_abs_delta_l / l_target,
            budget_e: report.cumulative_abs_delta_e / e_target,
        };
        if report.budget_breach.is_none() && (leg.budget_l > 1.0 || leg.budget_e > 1.0) {
            report.budget_breach = Some(index);
        }
        report.legs.push(leg);
        (l, e) = (l_next, e_next);
        index += 1;
    }
    report.final_state = state;
    Ok(report)
}

/// Resonance branch of the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `β = 0`, step-size exponent `8`.
    Resonant,
    /// `β ≠ 0`, step-size exponent `16/3`.
    Nonresonant,
}

impl Branch {
    pub fn p_delta(&self) -> Rational64 {
        match self {
            Branch::Resonant => Rational64::from_integer(8),
            Branch::Nonresonant => Rational64::new(16, 3),
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resonant" => Ok(Branch::Resonant),
            "nonresonant" => Ok(Branch::Nonresonant),
            other => Err(LabError::Config(format!("unknown branch {other:?}"))),
        }
    }
}

/// One condition `a + q·p·(1−s) + r·(1−s) < w·(1−s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inequality {
    pub label: &'static str,
    pub a: Rational64,
    /// Power of `δ` in the almost-conservation bound; the loss is `q = 1 − exponent`.
    pub delta_power: Rational64,
    /// `q` as it appears in the printed condition.
    pub printed_q: Rational64,
    pub r: Rational64,
    pub w: Rational64,
    pub printed_nonresonant: Rational64,
    pub printed_resonant: Rational64,
}

const fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new_raw(n, d)
}

/// The two momentum and five energy conditions.
pub const INEQUALITIES: [Inequality; 7] = [
    Inequality { label: "L1", a: q(-1, 1), delta_power: q(19, 24), printed_q: q(5, 24), r: q(3, 1), w: q(1, 1), printed_nonresonant: q(19, 28), printed_resonant: q(8, 11) },
    Inequality { label: "L2", a: q(-2, 1), delta_power: q(1, 2), printed_q: q(1, 2), r: q(4, 1), w: q(1, 1), printed_nonresonant: q(11, 17), printed_resonant: q(5, 7) },
    Inequality { label: "E1", a: q(-1, 1), delta_power: q(1, 6), printed_q: q(5, 6), r: q(3, 1), w: q(2, 1), printed_nonresonant: q(40, 49), printed_resonant: q(20, 23) },
    Inequality { label: "E2", a: q(-2, 3), delta_power: q(3, 8), printed_q: q(5, 6), r: q(3, 1), w: q(2, 1), printed_nonresonant: q(11, 13), printed_resonant: q(8, 9) },
    Inequality { label: "E3", a: q(-3, 2), delta_power: q(1, 8), printed_q: q(7, 8), r: q(3, 1), w: q(2, 1), printed_nonresonant: q(25, 34), printed_resonant: q(13, 16) },
    Inequality { label: "E4", a: q(-1, 1), delta_power: q(1, 2), printed_q: q(1, 2), r: q(4, 1), w: q(2, 1), printed_nonresonant: q(11, 14), printed_resonant: q(5, 6) },
    Inequality { label: "E5", a: q(-2, 1), delta_power: q(1, 2), printed_q: q(1, 2), r: q(6, 1), w: q(2, 1), printed_nonresonant: q(7, 10), printed_resonant: q(3, 4) },
];

/// Smallest `s` with `a + q·p·(1−s) + r·(1−s) < w·(1−s)`, i.e. `1 + a/(q·p + r − w)`.
pub fn solve_threshold(a: Rational64, q: Rational64, p: Rational64, r: Rational64, w: Rational64) -> Result<Rational64> {
    let slope = q * p + r - w;
    if slope <= Rational64::from_integer(0) {
        return Err(LabError::Domain(format!("condition does not bind s (q·p + r − w = {slope})")));
    }
    Ok(Rational64::from_integer(1) + a / slope)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdEntry {
    pub label: &'static str,
    /// Derived loss `1 − δ-power`.
    pub q: Rational64,
    pub printed_q: Rational64,
    pub threshold: Rational64,
    pub printed: Rational64,
    /// Threshold from the printed coefficient; differs only where the coefficient does.
    pub threshold_from_printed_q: Rational64,
    pub matches_printed: bool,
    pub coefficient_mismatch: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub branch: Branch,
    pub p_delta: Rational64,
    pub entries: Vec<ThresholdEntry>,
    pub binding: Rational64,
}

impl ThresholdReport {
    pub fn all_match_printed(&self) -> bool {
        self.entries.iter().all(|e| e.matches_printed)
    }
}

/// Solves the seven conditions for the given branch exactly.
pub fn gwp_threshold(p_delta: Rational64, branch: Branch) -> Result<ThresholdReport> {
    if p_delta != branch.p_delta() {
        return Err(LabError::Domain(format!(
            "p_delta = {p_delta} is not admissible for the {branch:?} branch (expected {})",
            branch.p_delta()
        )));
    }
    let one = Rational64::from_integer(1);
    let entries = INEQUALITIES
        .iter()
        .map(|ineq| {
            let q = one - ineq.delta_power;
            let threshold = solve_threshold(ineq.a, q, p_delta, ineq.r, ineq.w)?;
            let printed = match branch {
                Branch::Nonresonant => ineq.printed_nonresonant,
                Branch::Resonant => ineq.printed_resonant,
            };
            Ok(ThresholdEntry {
                label: ineq.label,
                q,
                printed_q: ineq.printed_q,
                threshold,
                printed,
                threshold_from_printed_q: solve_threshold(ineq.a, ineq.printed_q, p_delta, ineq.r, ineq.w)?,
                matches_printed: threshold == printed,
                coefficient_mismatch: q != ineq.printed_q,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let binding = entries.iter().map(|e| e.threshold).max().expect("seven entries");
    Ok(ThresholdReport { branch, p_delta, entries, binding })
}
