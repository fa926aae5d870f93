//! Report metadata and deterministic JSON serialization.
//!
//! Every machine-readable report embeds a `conventions` block: the pinned
//! constants as exact decimal strings, the angular-frequency and phase-wrap
//! conventions, and the ledger of model corrections applied to the published
//! closed forms. Identical inputs must produce byte-identical reports, so maps
//! are ordered, no timestamps are emitted, and extended-precision values are
//! serialized as decimal strings.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::protocol::PhaseResult;
use crate::units::PhysicalConstants;

/// One entry of the model-correction ledger: a place where the implemented
/// formula deviates deliberately from a printed form.
#[derive(Debug, Clone, Serialize)]
pub struct Correction {
    pub id: &'static str,
    pub summary: &'static str,
}

/// The corrections applied by this implementation.
pub fn correction_ledger() -> Vec<Correction> {
    vec![
        Correction {
            id: "momentum-deformation-exponent",
            summary: "the deformed momentum is p (1 + beta p^2 / 3) with beta = beta0 / (M_p c)^2; \
                      the cubic-exponent variant p (1 + beta p^3 / 3) with beta = beta0 / (M_p c) is \
                      dimensionally inconsistent with the modified commutator and the quartic \
                      Hamiltonian term",
        },
        Correction {
            id: "deformation-coefficient-single-strength",
            summary: "the per-pulse phase coefficient xi is carried without the deformation \
                      strength; increments are i * beta * xi * t_p^4 with exactly one factor of \
                      beta (quoting beta inside xi as well would double-count it)",
        },
        Correction {
            id: "frequency-symbol-unification",
            summary: "the secular terms of the Heisenberg position operator use the trap frequency \
                      throughout; a mixed second symbol appearing in one printed term is read as \
                      the same frequency",
        },
        Correction {
            id: "phase-elimination-condition-exponent",
            summary: "the condition for cancelling the standard per-cycle phase is applied to the \
                      quadratic-in-pulse-area phase (phi0_cycle at a 2 pi multiple), not to the \
                      quartic expression it is sometimes attached to",
        },
        Correction {
            id: "rabi-frequency-unit",
            summary: "the reference Rabi frequencies quoted in a nonstandard unit are read as GHz, \
                      already angular (rad/s)",
        },
        Correction {
            id: "yb-mass-as-printed",
            summary: "the Yb mass is carried as printed (173.04 u, the element standard weight \
                      rather than the isotope mass); overrides are available",
        },
    ]
}

/// Conventions block embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    /// Pinned constants as exact decimal strings (CODATA 2018).
    pub constants: BTreeMap<&'static str, &'static str>,
    pub constants_source: &'static str,
    /// How quoted frequencies map to the internal rad/s convention.
    pub angular_frequency_convention: &'static str,
    /// Wrapped phases live in (-pi, pi].
    pub phase_wrap_convention: &'static str,
    pub default_precision_bits: usize,
    pub model_corrections: Vec<Correction>,
    pub catalog_version: String,
    pub code_version: &'static str,
}

impl Conventions {
    pub fn current(catalog_version: String) -> Self {
        Conventions {
            constants: PhysicalConstants::decimal_strings().into_iter().collect(),
            constants_source: "CODATA 2018",
            angular_frequency_convention: "internal frequencies are rad/s; quantities quoted as \
                 'f x 2pi Hz' map to 2*pi*f rad/s, plain GHz-scale Rabi frequencies and detunings \
                 are taken as already angular",
            phase_wrap_convention: "(-pi, pi]",
            default_precision_bits: crate::units::DEFAULT_PRECISION_BITS,
            model_corrections: correction_ledger(),
            catalog_version,
            code_version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Serializable view of a phase-accumulation result; extended-precision values
/// appear as full decimal strings next to their f64 views.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    pub species: Option<String>,
    pub beta0: String,
    pub cycles: u64,
    pub pulse_count: String,
    pub precision_bits: usize,
    pub phi0_unwrapped: String,
    pub dphi_unwrapped: String,
    pub phi0_wrapped: f64,
    pub dphi_wrapped: f64,
    pub phi_wrapped: f64,
    pub phi0_wrap_error_bound: f64,
    pub dphi_wrap_error_bound: f64,
    pub phi_wrap_error_bound: f64,
    pub phi0_cycle: f64,
    pub beta_tolerance_d: f64,
    pub per_pulse_beta_increments: Vec<f64>,
    pub dphi_per_beta0: f64,
    pub eta_rad_per_m_s: f64,
    pub xi_tilde_tp4: f64,
    pub kappa: f64,
    pub readout_population: f64,
    pub delta_population: f64,
    pub omega_tilde_defect: f64,
    pub pulse_duration_fraction: f64,
    pub pulse_duration_warn: bool,
    pub conventions: Conventions,
}

impl PhaseReport {
    pub fn new(
        species: Option<String>,
        beta0: String,
        result: &PhaseResult,
        conventions: Conventions,
    ) -> Self {
        PhaseReport {
            species,
            beta0,
            cycles: result.cycles,
            pulse_count: result.pulse_count.to_string(),
            precision_bits: result.precision_bits,
            phi0_unwrapped: result.phi0_unwrapped.to_decimal_string(),
            dphi_unwrapped: result.dphi_unwrapped.to_decimal_string(),
            phi0_wrapped: result.phi0_wrapped,
            dphi_wrapped: result.dphi_wrapped,
            phi_wrapped: result.phi_wrapped,
            phi0_wrap_error_bound: result.phi0_wrap_error,
            dphi_wrap_error_bound: result.dphi_wrap_error,
            phi_wrap_error_bound: result.phi_wrap_error,
            phi0_cycle: result.phi0_cycle,
            beta_tolerance_d: result.beta_tolerance_d,
            per_pulse_beta_increments: result.per_pulse_beta_increments.clone(),
            dphi_per_beta0: result.dphi_per_beta0,
            eta_rad_per_m_s: result.eta,
            xi_tilde_tp4: result.xi_tilde_tp4,
            kappa: result.kappa,
            readout_population: crate::bounds::readout_population(result.phi_wrapped),
            delta_population: crate::bounds::delta_population(
                result.phi0_wrapped,
                result.dphi_unwrapped.to_f64(),
            ),
            omega_tilde_defect: result.omega_tilde_defect,
            pulse_duration_fraction: result.pulse_duration_fraction,
            pulse_duration_warn: result.pulse_duration_fraction
                > crate::protocol::PULSE_DURATION_WARN,
            conventions,
        }
    }
}

/// Canonical JSON: pretty-printed, stable field order, trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> crate::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conventions_deterministic() {
        let a = to_canonical_json(&Conventions::current("1".into())).unwrap();
        let b = to_canonical_json(&Conventions::current("1".into())).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("1.054571817e-34"));
        assert!(a.contains("CODATA 2018"));
        assert!(a.ends_with('\n'));
    }

    #[test]
    fn ledger_ids_unique() {
        let ledger = correction_ledger();
        let mut ids: Vec<_> = ledger.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), ledger.len());
    }
}
