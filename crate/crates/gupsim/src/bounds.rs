//! Ramsey-type readout and deformation-strength upper bounds.
//!
//! The ion is prepared in (|r> + |g>)/sqrt(2); the protocol phase phi
//! accumulates on |g>, and a final Hadamard maps it to the readout population
//! `P_r = sin^2(phi/2)`. A deformation shifts the population by
//!
//! ```text
//! dP_r = sin^2((phi0 + dphi)/2) - sin^2(phi0/2) = sin(dphi/2) sin(phi0 + dphi/2)
//! ```
//!
//! (the product form avoids the catastrophic cancellation of the difference of
//! squares at small dphi). A measurement that resolves populations to eps but
//! sees no deviation bounds dphi, and through the linear relation
//! dphi = beta0 * slope bounds the deformation strength beta0.
//!
//! The bound solver works on the unwrapped dphi branch (tiny near any realistic
//! bound) with the wrapped phi0; the closed linear-regime form
//! `beta0 < 2 eps / (|sin phi0| slope)` is cross-checked against the bracketing
//! solve whenever it applies.

use serde::{Deserialize, Serialize};

use crate::protocol::{total_phase, PhaseResult, PlanNumbers};
use crate::{Error, Result};

/// Readout population P_r = sin^2(phi/2) for a wrapped phase.
pub fn readout_population(phi_wrapped: f64) -> f64 {
    let s = (phi_wrapped / 2.0).sin();
    s * s
}

/// Population deviation sin(dphi/2) sin(phi0 + dphi/2), cancellation-safe.
pub fn delta_population(phi0_wrapped: f64, dphi: f64) -> f64 {
    (dphi / 2.0).sin() * (phi0_wrapped + dphi / 2.0).sin()
}

/// Which branch of dP_r fixed the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// |sin phi0| dominates: dP_r ~ (dphi/2) sin phi0.
    Linear,
    /// phi0 at a multiple of 2 pi: dP_r ~ sin^2(dphi/2).
    Quadratic,
    /// dphi at the bound exceeded pi/4; the conservative first crossing was
    /// returned but the branch is no longer single-valued.
    WrapLimited,
}

/// One catalog species row: the published per-species parameters plus the
/// claimed order-of-magnitude bound they were proposed with. Physical
/// quantities are decimal strings so the extended-precision pipeline sees
/// them exactly as printed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSpec {
    pub name: String,
    pub wavelength_nm: String,
    pub cycles: u64,
    pub trap_freq_over_2pi_hz: String,
    pub dk_over_k: String,
    pub mass_u: String,
    /// (excited, ground, readout) level labels; metadata only.
    pub level_labels: (String, String, String),
    /// Claimed beta0 upper bound (order of magnitude).
    pub claimed_bound: f64,
    /// Explicit |k|/2pi in 1/m; when absent, derived as 1/(wavelength).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_over_2pi_per_m: Option<String>,
    /// Regime the published row claims for itself; applied as a selector for
    /// the headline bound and cross-checked against the computed regime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claimed_regime: Option<Regime>,
    /// Where each number came from.
    #[serde(default)]
    pub provenance: String,
}

impl SpeciesSpec {
    fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, s: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| Error::InvalidDecimal(s.to_string()))?;
            if v.is_nan() || v <= 0.0 {
                return Err(Error::NonPositive { name, value: v });
            }
            Ok(v)
        };
        positive("wavelength_nm", &self.wavelength_nm)?;
        positive("trap_freq_over_2pi_hz", &self.trap_freq_over_2pi_hz)?;
        positive("mass_u", &self.mass_u)?;
        let dk = positive("dk_over_k", &self.dk_over_k)?;
        if dk > 2.0 {
            return Err(Error::Catalog(format!(
                "{}: dk/|k| = {dk} exceeds the two-beam-pair bound of 2",
                self.name
            )));
        }
        if self.cycles == 0 {
            return Err(Error::NonPositive {
                name: "cycles",
                value: 0.0,
            });
        }
        if let Some(k) = &self.k_over_2pi_per_m {
            positive("k_over_2pi_per_m", k)?;
        }
        Ok(())
    }

    /// |k|/2pi in 1/m: explicit if listed, else 1/lambda.
    pub fn k_over_2pi(&self) -> String {
        match &self.k_over_2pi_per_m {
            Some(k) => k.clone(),
            None => {
                let lam_nm: f64 = self.wavelength_nm.parse().unwrap_or(f64::NAN);
                format!("{:.17e}", 1.0 / (lam_nm * 1e-9))
            }
        }
    }
}

/// Laser parameters shared by every catalog row.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharedParams {
    pub pulse_duration_s: String,
    pub rabi1_rad_s: String,
    pub rabi2_rad_s: String,
    pub detuning_rad_s: String,
}

/// The species catalog shipped with the crate (or loaded from
/// `GUPSIM_CATALOG`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub catalog_version: String,
    pub shared: SharedParams,
    pub species: Vec<SpeciesSpec>,
}

const EMBEDDED_CATALOG: &str = include_str!("../data/species.json");

impl Catalog {
    /// The embedded default catalog.
    pub fn embedded() -> Result<Self> {
        Self::from_json(EMBEDDED_CATALOG)
    }

    /// Resolve the catalog: `GUPSIM_CATALOG` path override, else embedded.
    pub fn load_default() -> Result<Self> {
        match std::env::var_os("GUPSIM_CATALOG") {
            Some(path) => {
                let text = std::fs::read_to_string(&path)?;
                Self::from_json(&text)
            }
            None => Self::embedded(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cat: Catalog = serde_json::from_str(text)?;
        for s in &cat.species {
            s.validate()?;
        }
        Ok(cat)
    }

    pub fn find(&self, name: &str) -> Result<&SpeciesSpec> {
        self.species
            .iter()
            .find(|s| s.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownSpecies(name.to_string()))
    }

    /// Decimal plan for a species row at a given deformation strength.
    pub fn plan(&self, species: &SpeciesSpec, beta0: &str, cycles: Option<u64>) -> PlanNumbers {
        PlanNumbers {
            mass_u: species.mass_u.clone(),
            trap_freq_over_2pi_hz: species.trap_freq_over_2pi_hz.clone(),
            pulse_duration_s: self.shared.pulse_duration_s.clone(),
            rabi1_rad_s: self.shared.rabi1_rad_s.clone(),
            rabi2_rad_s: self.shared.rabi2_rad_s.clone(),
            detuning_rad_s: self.shared.detuning_rad_s.clone(),
            k_over_2pi_per_m: species.k_over_2pi(),
            dk_over_k: species.dk_over_k.clone(),
            cycles: cycles.unwrap_or(species.cycles),
            beta0: beta0.into(),
        }
    }
}

/// Sensitivity of a solved bound to a +/-1% parameter change.
#[derive(Debug, Clone, Serialize)]
pub struct BoundSensitivity {
    pub parameter: String,
    pub bound_minus_1pct: f64,
    pub bound_plus_1pct: f64,
}

/// Solved deformation-strength upper bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub species: Option<String>,
    /// Population measurement accuracy eps.
    pub accuracy: f64,
    /// Smallest beta0 with |dP_r| = eps.
    pub beta0_bound: f64,
    /// The bound rounded to one significant figure (headline form).
    pub beta0_bound_headline: f64,
    pub phi0_wrapped: f64,
    pub sin_phi0: f64,
    /// dphi per unit beta0 (rad); the deformation phase is exactly linear.
    pub dphi_per_beta0: f64,
    pub dphi_at_bound: f64,
    pub regime: Regime,
    /// Relative error of |dP_r(bound)| against eps (solver round trip).
    pub roundtrip_rel_error: f64,
    /// Relative difference against the closed linear-regime form, when that
    /// form applies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_closed_form_rel_diff: Option<f64>,
    /// Bound recomputed under +/-1% parameter perturbations; the mod-2pi
    /// dependence of phi0 makes these swings large by design.
    pub sensitivity: Vec<BoundSensitivity>,
    pub discrepancy_notes: Vec<String>,
}

/// Solve the smallest beta0 with |dP_r(beta0)| = eps for a decimal plan.
///
/// `claimed_regime = Some(Quadratic)` applies the published row's own
/// phi0-elimination claim as a selector (phi0 treated as a 2 pi multiple for
/// the deviation), recording the computed phi0 alongside; it is never used to
/// reconcile a mismatched bound silently.
pub fn solve_beta0_bound(
    plan: &PlanNumbers,
    accuracy: f64,
    precision_bits: usize,
    claimed_regime: Option<Regime>,
    species: Option<String>,
    with_sensitivity: bool,
) -> Result<BoundReport> {
    if accuracy.is_nan() || accuracy <= 0.0 || accuracy >= 1.0 {
        return Err(Error::AccuracyOutOfRange(accuracy));
    }
    let base = total_phase(&unit_beta_plan(plan), precision_bits)?;
    let core = solve_core(&base, accuracy, claimed_regime)?;

    let mut sensitivity = Vec::new();
    if with_sensitivity {
        for (name, field) in [
            ("mass_u", PlanField::Mass),
            ("trap_freq_over_2pi_hz", PlanField::TrapFreq),
            ("pulse_duration_s", PlanField::PulseDuration),
            ("rabi1_rad_s", PlanField::Rabi1),
            ("detuning_rad_s", PlanField::Detuning),
            ("dk_over_k", PlanField::DkOverK),
            ("cycles", PlanField::Cycles),
        ] {
            let mut ends = [0.0f64; 2];
            for (k, fac) in [(0usize, 0.99f64), (1usize, 1.01f64)].into_iter() {
                let p = perturb_plan(plan, field, fac)?;
                let b = total_phase(&unit_beta_plan(&p), precision_bits)?;
                ends[k] = solve_core(&b, accuracy, claimed_regime)?.bound;
            }
            sensitivity.push(BoundSensitivity {
                parameter: name.to_string(),
                bound_minus_1pct: ends[0],
                bound_plus_1pct: ends[1],
            });
        }
    }

    let mut notes = Vec::new();
    if claimed_regime == Some(Regime::Quadratic) {
        notes.push(format!(
            "row claims a 2-pi-multiple standard phase (quadratic readout); computed \
             phi0_wrapped = {:.6} rad with |sin phi0| = {:.6} would put the row in the {} regime",
            base.phi0_wrapped,
            base.phi0_wrapped.sin().abs(),
            match core.computed_regime {
                Regime::Linear => "linear",
                Regime::Quadratic => "quadratic",
                Regime::WrapLimited => "wrap-limited",
            }
        ));
    }

    Ok(BoundReport {
        species,
        accuracy,
        beta0_bound: core.bound,
        beta0_bound_headline: round_one_sig(core.bound),
        phi0_wrapped: base.phi0_wrapped,
        sin_phi0: base.phi0_wrapped.sin(),
        dphi_per_beta0: base.dphi_per_beta0,
        dphi_at_bound: base.dphi_per_beta0 * core.bound,
        regime: core.regime,
        roundtrip_rel_error: core.roundtrip_rel_error,
        linear_closed_form_rel_diff: core.linear_closed_form_rel_diff,
        sensitivity,
        discrepancy_notes: notes,
    })
}

#[derive(Clone, Copy)]
enum PlanField {
    Mass,
    TrapFreq,
    PulseDuration,
    Rabi1,
    Detuning,
    DkOverK,
    Cycles,
}

fn perturb_plan(plan: &PlanNumbers, field: PlanField, factor: f64) -> Result<PlanNumbers> {
    let mut p = plan.clone();
    let scale = |s: &str| -> Result<String> {
        let v: f64 = s.parse().map_err(|_| Error::InvalidDecimal(s.into()))?;
        Ok(format!("{:.17e}", v * factor))
    };
    match field {
        PlanField::Mass => p.mass_u = scale(&p.mass_u)?,
        PlanField::TrapFreq => p.trap_freq_over_2pi_hz = scale(&p.trap_freq_over_2pi_hz)?,
        PlanField::PulseDuration => p.pulse_duration_s = scale(&p.pulse_duration_s)?,
        PlanField::Rabi1 => p.rabi1_rad_s = scale(&p.rabi1_rad_s)?,
        PlanField::Detuning => p.detuning_rad_s = scale(&p.detuning_rad_s)?,
        PlanField::DkOverK => p.dk_over_k = scale(&p.dk_over_k)?,
        PlanField::Cycles => {
            p.cycles = ((p.cycles as f64) * factor).round().max(1.0) as u64;
        }
    }
    Ok(p)
}

fn unit_beta_plan(plan: &PlanNumbers) -> PlanNumbers {
    let mut p = plan.clone();
    p.beta0 = "1".into();
    p
}

struct SolveCore {
    bound: f64,
    regime: Regime,
    computed_regime: Regime,
    roundtrip_rel_error: f64,
    linear_closed_form_rel_diff: Option<f64>,
}

fn solve_core(base: &PhaseResult, eps: f64, claimed_regime: Option<Regime>) -> Result<SolveCore> {
    let slope = base.dphi_per_beta0;
    if slope.is_nan() || slope <= 0.0 {
        return Err(Error::InvalidPlan(
            "deformation phase slope vanishes; no bound can be solved".into(),
        ));
    }
    // the readout phase entering dP_r
    let phi0_eff = match claimed_regime {
        Some(Regime::Quadratic) => 0.0,
        _ => base.phi0_wrapped,
    };
    let dp = |b: f64| delta_population(phi0_eff, slope * b).abs();

    // geometric scan for the first crossing of eps
    let mut lo = 1e-12 / slope; // dphi ~ 1e-12 rad: far below any eps of interest
    if dp(lo) >= eps {
        lo = 0.0;
    }
    let mut hi = lo.max(f64::MIN_POSITIVE);
    let mut wrap_limited = false;
    let mut crossed = false;
    for _ in 0..4000 {
        if dp(hi) >= eps {
            crossed = true;
            break;
        }
        if slope * hi > std::f64::consts::FRAC_PI_4 {
            wrap_limited = true;
        }
        if slope * hi > 16.0 * std::f64::consts::PI {
            break; // several full wraps without a crossing: eps unreachable
        }
        lo = hi;
        hi *= 1.25;
    }
    if !crossed {
        return Err(Error::InvalidPlan(format!(
            "|dP_r| never reaches eps = {eps} before several full phase wraps"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dp(mid) < eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let bound = hi;
    let roundtrip_rel_error = (dp(bound) - eps).abs() / eps;

    let sin0 = phi0_eff.sin().abs();
    let computed_regime = if wrap_limited {
        Regime::WrapLimited
    } else if sin0 > eps.sqrt() {
        Regime::Linear
    } else {
        Regime::Quadratic
    };
    let regime = match claimed_regime {
        Some(r) if !wrap_limited => r,
        _ => computed_regime,
    };

    let linear_closed_form_rel_diff = if computed_regime == Regime::Linear {
        let closed = 2.0 * eps / (sin0 * slope);
        Some((bound - closed).abs() / closed)
    } else {
        None
    };

    Ok(SolveCore {
        bound,
        regime,
        computed_regime,
        roundtrip_rel_error,
        linear_closed_form_rel_diff,
    })
}

fn round_one_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor();
    let scale = 10f64.powf(mag);
    (x / scale).round() * scale
}

/// One row of the species comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct Table1Row {
    pub species: String,
    pub lambda_nm: String,
    pub cycles: u64,
    pub nu_over_2pi_hz: String,
    pub dk_over_k: String,
    pub phi0_wrapped: f64,
    pub regime: Regime,
    pub beta0_bound: f64,
    pub claimed_bound: f64,
    /// |log10(bound / claimed)| <= 0.5.
    pub agreement: bool,
    pub log10_gap: f64,
    pub report: BoundReport,
}

/// Computed bounds side by side with the claimed ones for every catalog row.
/// Mismatches are flagged, never reconciled.
pub fn table1(catalog: &Catalog, accuracy: f64, precision_bits: usize) -> Result<Vec<Table1Row>> {
    let mut rows = Vec::new();
    for sp in &catalog.species {
        let plan = catalog.plan(sp, "1", None);
        let report = solve_beta0_bound(
            &plan,
            accuracy,
            precision_bits,
            sp.claimed_regime,
            Some(sp.name.clone()),
            true,
        )?;
        let log10_gap = (report.beta0_bound.log10() - sp.claimed_bound.log10()).abs();
        rows.push(Table1Row {
            species: sp.name.clone(),
            lambda_nm: sp.wavelength_nm.clone(),
            cycles: sp.cycles,
            nu_over_2pi_hz: sp.trap_freq_over_2pi_hz.clone(),
            dk_over_k: sp.dk_over_k.clone(),
            phi0_wrapped: report.phi0_wrapped,
            regime: report.regime,
            beta0_bound: report.beta0_bound,
            claimed_bound: sp.claimed_bound,
            agreement: log10_gap <= 0.5,
            log10_gap,
            report,
        });
    }
    Ok(rows)
}

/// CSV form of the comparison table (fixed column order).
pub fn table1_csv(rows: &[Table1Row]) -> String {
    let mut out = String::from(
        "species,lambda_nm,N,nu_over_2pi_hz,dk_over_k,phi0_wrapped,regime,beta0_bound,claimed_bound,agreement\n",
    );
    for r in rows {
        let regime = match r.regime {
            Regime::Linear => "linear",
            Regime::Quadratic => "quadratic",
            Regime::WrapLimited => "wrap_limited",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{:.15e},{},{:.6e},{:.1e},{}\n",
            r.species,
            r.lambda_nm,
            r.cycles,
            r.nu_over_2pi_hz,
            r.dk_over_k,
            r.phi0_wrapped,
            regime,
            r.beta0_bound,
            r.claimed_bound,
            r.agreement
        ));
    }
    out
}
