//! The verification suites.
//!
//! Each function runs one acceptance check at pinned parameters and
//! tolerances, returning a structured outcome; the CLI `verify` subcommand and
//! the cargo acceptance test target share these so the exit gate and the
//! machine-readable report can never drift apart. `quick` trims matrix
//! dimensions (never tolerances) to keep a full run under a minute.

use serde::Serialize;
use serde_json::json;

use crate::bounds::{solve_beta0_bound, Catalog};
use crate::gup::{x_heisenberg_analytic, x_heisenberg_numeric, GupParams};
use crate::protocol::{
    loop_closure_defect, phase_sensitivity, run_deformation_oracle, total_phase, LaserConfig,
};
use crate::report::{to_canonical_json, Conventions};
use crate::units::{OscillatorScales, DEFAULT_PRECISION_BITS};
use crate::zassenhaus::{
    c_terms_closed_form, leading_order_gap, zassenhaus_terms, zassenhaus_terms_first_order,
    SplitGenerators,
};
use crate::{fock, Result};

/// Outcome of one verification suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub criterion: u8,
    pub name: &'static str,
    pub passed: bool,
    /// Measured quantities, shaped per suite.
    pub measured: serde_json::Value,
    /// The pinned tolerance, human-readable.
    pub tolerance: &'static str,
    pub runtime_budget_s: f64,
}

impl SuiteOutcome {
    pub fn status_line(&self) -> String {
        format!(
            "criterion {}: {} ... {}",
            self.criterion,
            self.name,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

/// Least-squares slope of ln(y) against ln(x).
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Criterion 1: the four beta = 0 displacement pulses compose to a global
/// phase; defect <= 1e-6 on the 16-phonon block at D = 64 for displacement
/// strengths 0.1, 0.5, 1.0.
pub fn criterion_loop_closure(_quick: bool) -> Result<SuiteOutcome> {
    let mut defects = Vec::new();
    let mut passed = true;
    for s in [0.1, 0.5, 1.0] {
        let d = loop_closure_defect(s, 64, 16)?;
        passed &= d <= 1e-6;
        defects.push(json!({ "displacement": s, "defect": d }));
    }
    Ok(SuiteOutcome {
        criterion: 1,
        name: "loop-closure",
        passed,
        measured: json!({ "dim": 64, "interior": 16, "defects": defects }),
        tolerance: "defect <= 1e-6",
        runtime_budget_s: 5.0,
    })
}

/// Criterion 2: analytic vs brute-force Heisenberg position operator distance
/// scales as beta^2: fitted slope 2.0 +/- 0.2 over beta in {1e-5, 1e-4, 1e-3}
/// at nu t in {0.5, 1.0, 2.0}, D = 64, interior D/2.
pub fn criterion_first_order_heisenberg(quick: bool) -> Result<SuiteOutcome> {
    let dim = if quick { 48 } else { 64 };
    let scales = OscillatorScales::natural();
    let betas = [1e-5, 1e-4, 1e-3];
    let mut slopes = Vec::new();
    let mut passed = true;
    for nut in [0.5, 1.0, 2.0] {
        let mut pts = Vec::new();
        for &beta in &betas {
            let params = GupParams::natural(beta);
            let xa = x_heisenberg_analytic(nut, &params, &scales, dim)?;
            let xn = x_heisenberg_numeric(nut, &params, &scales, dim)?;
            let d = xa.sub(&xn)?.interior(dim / 2)?.norm_spectral();
            pts.push((beta, d));
        }
        let slope = fit_loglog_slope(&pts);
        passed &= (slope - 2.0).abs() <= 0.2;
        slopes.push(json!({ "nu_t": nut, "slope": slope }));
    }
    Ok(SuiteOutcome {
        criterion: 2,
        name: "first-order-heisenberg",
        passed,
        measured: json!({ "dim": dim, "betas": betas, "slopes": slopes }),
        tolerance: "log-log slope 2.0 +/- 0.2",
        runtime_budget_s: 30.0,
    })
}

/// Criterion 3: closed-form split corrections match the nested-commutator
/// forms to first order in beta within 1e-8 relative on the interior block;
/// the split-product residual is second order in beta; any constant-factor
/// mismatch must be a single global constant per term (none is expected).
pub fn criterion_appendix_consistency(quick: bool) -> Result<SuiteOutcome> {
    let dim = if quick { 48 } else { 64 };
    let scales = OscillatorScales::natural();
    let t = 1.0;
    let beta = 1e-4;
    let eta_t = 1.6;
    let laser = LaserConfig::natural(eta_t / t, t)?;
    let gup = GupParams::natural(beta);

    let split = SplitGenerators::for_pulse(&laser, &gup, &scales, t, dim)?;
    let nested = zassenhaus_terms_first_order(split.a_gen(), split.b_gen())?;
    let closed = c_terms_closed_form(&laser, &gup, &scales, t, dim)?;

    let mut term_reports = Vec::new();
    let mut passed = true;
    for (k, (n, c)) in nested.iter().zip(closed.iter()).enumerate() {
        let ni = n.interior(dim / 2)?;
        let ci = c.interior(dim / 2)?;
        // least-squares scalar fit c ~ ratio * n measures a global constant
        let num: num_complex::Complex64 = ni
            .matrix()
            .iter()
            .zip(ci.matrix().iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        let den: f64 = ni.matrix().iter().map(|a| a.norm_sqr()).sum();
        let ratio = num / den;
        let rel = ni.sub(&ci)?.norm_spectral() / ni.norm_spectral().max(ci.norm_spectral());
        let constant_mismatch = (ratio - num_complex::Complex64::new(1.0, 0.0)).norm();
        // residual after dividing out the fitted constant: a term whose only
        // defect is a single global factor still passes, with the factor
        // reported as a finding for the correction ledger; scatter beyond
        // that fails the suite
        let scaled = ni.scaled(ratio);
        let rel_after_fit =
            scaled.sub(&ci)?.norm_spectral() / scaled.norm_spectral().max(ci.norm_spectral());
        passed &= rel_after_fit <= 1e-8;
        term_reports.push(json!({
            "term": format!("C{}", k + 1),
            "relative_difference": rel,
            "relative_difference_after_constant_fit": rel_after_fit,
            "global_constant_fit": { "re": ratio.re, "im": ratio.im },
            "constant_mismatch": constant_mismatch,
            "constant_mismatch_finding": constant_mismatch > 1e-8,
        }));
    }

    // product residual: second order in beta
    let mut pts = Vec::new();
    for &b in &[1e-5, 1e-4, 1e-3] {
        let gup_b = GupParams::natural(b);
        let split_b = SplitGenerators::for_pulse(&laser, &gup_b, &scales, t, dim)?;
        let full = fock::expm_generator(&split_b.a_gen().add(split_b.b_gen())?)?;
        let mut prod = fock::expm_generator(split_b.a_gen())?
            .matmul(&fock::expm_generator(split_b.b_gen())?)?;
        for c in zassenhaus_terms(split_b.a_gen(), split_b.b_gen(), 3)? {
            prod = prod.matmul(&fock::expm_generator(&c)?)?;
        }
        let resid = full
            .as_operator()
            .sub(&prod.as_operator())?
            .interior(dim / 2)?
            .norm_spectral();
        pts.push((b, resid));
    }
    let slope = fit_loglog_slope(&pts);
    passed &= (slope - 2.0).abs() <= 0.2;

    Ok(SuiteOutcome {
        criterion: 3,
        name: "split-consistency",
        passed,
        measured: json!({
            "dim": dim,
            "terms": term_reports,
            "product_residual_slope": slope,
        }),
        tolerance: "per-term relative difference <= 1e-8; residual slope 2.0 +/- 0.2",
        runtime_budget_s: 30.0,
    })
}

/// Criterion 4: ||C1|| / |C3| decays with kappa over {2, 4, 8, 16} with fitted
/// exponent <= -1.5 on a fixed interior block.
pub fn criterion_leading_order_dominance(quick: bool) -> Result<SuiteOutcome> {
    let dim = if quick { 48 } else { 64 };
    let scales = OscillatorScales::natural();
    let gup = GupParams::natural(1e-4);
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    for kappa in [2.0, 4.0, 8.0, 16.0] {
        let eta_t = kappa / (2.0 * scales.x0);
        let laser = LaserConfig::natural(eta_t, 1.0)?;
        let gap = leading_order_gap(&laser, &gup, &scales, 1.0, dim, 16)?;
        r1.push((kappa, gap.c1_over_c3.unwrap_or(f64::NAN)));
        r2.push((kappa, gap.c2_over_c3.unwrap_or(f64::NAN)));
    }
    let e1 = fit_loglog_slope(&r1);
    let e2 = fit_loglog_slope(&r2);
    let passed = e1 <= -1.5 && r1.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(SuiteOutcome {
        criterion: 4,
        name: "leading-order-dominance",
        passed,
        measured: json!({
            "dim": dim,
            "c1_over_c3": r1.iter().map(|&(k, v)| json!({"kappa": k, "ratio": v})).collect::<Vec<_>>(),
            "fitted_exponent_c1": e1,
            "fitted_exponent_c2": e2,
        }),
        tolerance: "C1/C3 exponent <= -1.5, monotone decay",
        runtime_budget_s: 60.0,
    })
}

/// Criterion 5: the N-cycle deformation phase against the numeric oracle.
///
/// Per pulse, the deformation phase is extracted as the vacuum overlap
/// argument of the full pulse unitary against its ladder-linear part; the sum
/// over a run must match 2N(4N-1) beta xi t_p^4 within 10% at kappa = 8 and
/// improve at kappa = 16, for N in {1, 2, 3} at beta = 1e-4. The raw
/// composed-run deviation (which retains drift cross terms the closed form
/// discards, suppressed only as kappa^-2) is recorded alongside.
pub fn criterion_ncycle_oracle(quick: bool) -> Result<SuiteOutcome> {
    let beta = 1e-4;
    let (d8, d16) = if quick { (96, 288) } else { (128, 384) };
    let runs8 = run_deformation_oracle(8.0, beta, 3, d8)?;
    let runs16 = run_deformation_oracle(16.0, beta, 3, d16)?;
    let mut passed = true;
    let mut rows = Vec::new();
    for (r8, r16) in runs8.iter().zip(runs16.iter()) {
        // formula agreement at both operating points
        passed &= r8.rel_deviation <= 0.10;
        passed &= r16.rel_deviation <= 0.10;
        // the composed run converges toward the closed form as kappa grows
        // (the discarded drift terms are suppressed as kappa^-2)
        passed &= r16.composed_rel_deviation < r8.composed_rel_deviation;
        rows.push(json!({
            "cycles": r8.cycles,
            "kappa8": {
                "per_pulse_sum": r8.per_pulse_sum,
                "dphi_formula": r8.dphi_formula,
                "rel_deviation": r8.rel_deviation,
                "composed_rel_deviation": r8.composed_rel_deviation,
            },
            "kappa16": {
                "per_pulse_sum": r16.per_pulse_sum,
                "dphi_formula": r16.dphi_formula,
                "rel_deviation": r16.rel_deviation,
                "composed_rel_deviation": r16.composed_rel_deviation,
            },
        }));
    }
    Ok(SuiteOutcome {
        criterion: 5,
        name: "ncycle-oracle",
        passed,
        measured: json!({ "beta": beta, "dims": [d8, d16], "runs": rows }),
        tolerance: "per-pulse-extracted run phase within 10% at kappa=8, improving at kappa=16",
        runtime_budget_s: 120.0,
    })
}

/// Criterion 6: the Yb bound at eps = 1e-5 lands in [1e23, 1e25].
pub fn criterion_yb_bound(_quick: bool) -> Result<SuiteOutcome> {
    let catalog = Catalog::embedded()?;
    let sp = catalog.find("Yb171")?;
    let plan = catalog.plan(sp, "1", None);
    let report = solve_beta0_bound(
        &plan,
        1e-5,
        DEFAULT_PRECISION_BITS,
        sp.claimed_regime,
        Some(sp.name.clone()),
        false,
    )?;
    let passed = report.beta0_bound >= 1e23
        && report.beta0_bound <= 1e25
        && report.roundtrip_rel_error <= 1e-3;
    Ok(SuiteOutcome {
        criterion: 6,
        name: "yb-bound",
        passed,
        measured: json!({
            "beta0_bound": report.beta0_bound,
            "headline": report.beta0_bound_headline,
            "regime": report.regime,
            "phi0_wrapped": report.phi0_wrapped,
            "roundtrip_rel_error": report.roundtrip_rel_error,
        }),
        tolerance: "bound in [1e23, 1e25]",
        runtime_budget_s: 1.0,
    })
}

/// Criterion 7: the reference-set phase report carries unwrapped and wrapped
/// values at 256 bits plus a sensitivity table whose analytic elasticities
/// are verified by extended-precision finite differences. Matching the quoted
/// wrapped digits is explicitly not required; the table demonstrates why.
pub fn criterion_phase_targets(_quick: bool) -> Result<SuiteOutcome> {
    let catalog = Catalog::embedded()?;
    let sp = catalog.find("Yb171")?;
    let plan = catalog.plan(sp, "1e33", None);
    let result = total_phase(&plan, DEFAULT_PRECISION_BITS)?;
    let sens = phase_sensitivity(&plan, DEFAULT_PRECISION_BITS)?;

    let mut passed = result.phi0_wrap_error < 1e-6 && result.precision_bits == 256;
    // every finite-difference check must confirm its analytic elasticity
    let mut worst_fd = 0.0f64;
    for row in &sens {
        if let Some(e) = row.fd_rel_error {
            worst_fd = worst_fd.max(e);
            passed &= e <= 1e-6;
        }
    }
    // the table must demonstrate wrap scrambling by at least one constant's
    // uncertainty (this is the quantitative reachability statement)
    let scrambled: Vec<_> = sens
        .iter()
        .filter(|r| r.wrap_scrambled_by_uncertainty == Some(true))
        .map(|r| format!("{:?}", r.parameter))
        .collect();
    passed &= !scrambled.is_empty();

    Ok(SuiteOutcome {
        criterion: 7,
        name: "phase-targets",
        passed,
        measured: json!({
            "phi0_unwrapped_rad": result.phi0_unwrapped.to_f64(),
            "dphi_unwrapped_rad": result.dphi_unwrapped.to_f64(),
            "phi0_wrapped": result.phi0_wrapped,
            "dphi_wrapped": result.dphi_wrapped,
            "phi_wrapped": result.phi_wrapped,
            "quoted_reference_phases": { "phi_over_pi": -0.1167241, "dphi_over_pi": 0.293155 },
            "worst_fd_rel_error": worst_fd,
            "wrap_scrambling_constants": scrambled,
        }),
        tolerance: "sensitivity table present; FD vs analytic elasticity <= 1e-6",
        runtime_budget_s: 5.0,
    })
}

/// Criterion 8: bound scaling laws on a 3x3 grid: bound proportional to the
/// accuracy in the linear regime, and (after normalizing the mod-2pi factor
/// sin phi0) inversely proportional to 2N(4N-1) ~ 8 N^2 within 5%.
pub fn criterion_scaling_laws(_quick: bool) -> Result<SuiteOutcome> {
    let catalog = Catalog::embedded()?;
    let sp = catalog.find("Yb171")?;
    let eps_grid = [1e-6, 1e-5, 1e-4];
    let n_grid = [10_000_000u64, 20_000_000, 40_000_000];
    let mut normalized = Vec::new();
    let mut rows = Vec::new();
    for &n in &n_grid {
        for &eps in &eps_grid {
            let plan = catalog.plan(sp, "1", Some(n));
            let r = solve_beta0_bound(&plan, eps, DEFAULT_PRECISION_BITS, None, None, false)?;
            let coeff = 2.0 * n as f64 * (4.0 * n as f64 - 1.0);
            // in the linear regime bound = 2 eps / (|sin phi0| slope), so this
            // collapses to a single constant across the grid
            let collapse = r.beta0_bound * r.sin_phi0.abs() * coeff / eps;
            normalized.push(collapse);
            rows.push(json!({
                "cycles": n, "eps": eps, "bound": r.beta0_bound,
                "sin_phi0": r.sin_phi0, "collapse": collapse,
            }));
        }
    }
    let mean = normalized.iter().sum::<f64>() / normalized.len() as f64;
    let max_dev = normalized
        .iter()
        .map(|v| (v / mean - 1.0).abs())
        .fold(0.0, f64::max);
    // N^-2 statement: the exact coefficient 2N(4N-1) differs from 8N^2 by
    // 1/(4N); at N >= 1e7 that is < 5% by a wide margin
    let n2_dev = n_grid
        .iter()
        .map(|&n| {
            let exact = 2.0 * n as f64 * (4.0 * n as f64 - 1.0);
            (exact / (8.0 * (n as f64).powi(2)) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let passed = max_dev <= 0.05 && n2_dev <= 0.05;
    Ok(SuiteOutcome {
        criterion: 8,
        name: "scaling-laws",
        passed,
        measured: json!({ "grid": rows, "collapse_max_rel_dev": max_dev, "n2_model_dev": n2_dev }),
        tolerance: "grid collapse and N^-2 model within 5%",
        runtime_budget_s: 5.0,
    })
}

/// Criterion 9: report determinism. The CLI-level byte-identity of two
/// `verify` runs is exercised in the CLI acceptance tests; here the library
/// certifies that its own serialized blocks are reproducible within a
/// process run.
pub fn criterion_determinism(_quick: bool) -> Result<SuiteOutcome> {
    let catalog = Catalog::embedded()?;
    let sp = catalog.find("Yb171")?;
    let plan = catalog.plan(sp, "1e33", None);
    let mk = || -> Result<String> {
        let result = total_phase(&plan, DEFAULT_PRECISION_BITS)?;
        let report = crate::report::PhaseReport::new(
            Some(sp.name.clone()),
            "1e33".into(),
            &result,
            Conventions::current(catalog.catalog_version.clone()),
        );
        to_canonical_json(&report)
    };
    let a = mk()?;
    let b = mk()?;
    let passed = a == b;
    Ok(SuiteOutcome {
        criterion: 9,
        name: "determinism",
        passed,
        measured: json!({ "bytes": a.len(), "identical": passed }),
        tolerance: "byte-identical serialization",
        runtime_budget_s: 5.0,
    })
}

/// Run every acceptance suite in order.
pub fn run_all(quick: bool) -> Result<Vec<SuiteOutcome>> {
    Ok(vec![
        criterion_loop_closure(quick)?,
        criterion_first_order_heisenberg(quick)?,
        criterion_appendix_consistency(quick)?,
        criterion_leading_order_dominance(quick)?,
        criterion_ncycle_oracle(quick)?,
        criterion_yb_bound(quick)?,
        criterion_phase_targets(quick)?,
        criterion_scaling_laws(quick)?,
        criterion_determinism(quick)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_slope_recovers_power() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x| (x, 3.0 * x.powf(-1.7)))
            .collect();
        let s = fit_loglog_slope(&pts);
        assert!((s + 1.7).abs() < 1e-12);
    }
}
