//! The four-pulse interaction schedule and its phase accounting.
//!
//! One trap period T hosts four short pulses at t_i nu = (pi/2) i with laser
//! phase settings pi/2, 0, -pi/2, pi. In the Lamb-Dicke regime each pulse
//! displaces the motional state along +x, -p, -x, +p in turn, closing a loop
//! that leaves the global phase `phi0_cycle = -hbar eta^2 t_p^2 / (m nu)` per
//! cycle. The commutator deformation adds a per-pulse phase `i * beta * xi * t_p^4`
//! whose coefficients form an arithmetic progression in the global pulse index
//! i, summing to `2N(4N-1) beta xi t_p^4` over N cycles.
//!
//! Pulse times are quarter periods, so the schedule trigonometry is held as
//! exact integers (cos, sin in {-1, 0, 1}) rather than evaluated floating
//! cosines of large arguments.
//!
//! Two propagator routes exist for every pulse: the closed-form displacement
//! plus phase increment ([`propagator_analytic`]) and brute-force
//! exponentiation of the effective Hamiltonian built from the deformed
//! Heisenberg position operator ([`propagator_numeric`]). The
//! [`run_deformation_oracle`] driver composes the numeric route over whole
//! cycles and extracts the deformation phase for comparison with the closed
//! form.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::fock::{expm_generator, quadratures, FockOperator, UnitaryOperator};
use crate::gup::{x_heisenberg_split, GupParams};
use crate::units::{
    wrap_phase, BigAngle, BigReal, OscillatorScales, ATOMIC_MASS_UNIT_DECIMAL, HBAR_DECIMAL,
    PLANCK_MASS_DECIMAL, SPEED_OF_LIGHT_DECIMAL,
};
use crate::{Error, Result};

/// Warn when t_p * nu exceeds this; the frozen-position approximation inside a
/// pulse degrades linearly in t_p * nu.
pub const PULSE_DURATION_WARN: f64 = 0.05;

/// Detuning treatment for the two-photon coupling strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetuningModel {
    /// Delta_1 ~ Delta_2 ~ Delta; the closed-form path. Default for natural
    /// unit oracles so the two routes share one coupling constant.
    #[default]
    Simplified,
    /// Delta_1 = Delta, Delta_2 = Delta + nu; the full expression.
    Exact,
}

/// Laser drive parameters for the four beams.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserConfig {
    /// Rabi frequencies (O1, O2, O3, O4), rad/s; O1 = O3 and O2 = O4 are
    /// enforced (they cancel the static Stark shift).
    pub rabi: [f64; 4],
    /// Common detuning Delta, rad/s.
    pub detuning: f64,
    /// Wavevector projections (k_x1..k_x4) on the trap axis, rad/m.
    pub wavevector_projections: [f64; 4],
    /// Static laser phases (phi_1..phi_4); the schedule adds the per-pulse
    /// differences on top.
    pub phases: [f64; 4],
    /// Pulse duration t_p, s.
    pub pulse_duration: f64,
    /// Transition wavelength, m (metadata; fixes |k| when projections are
    /// derived from it).
    pub transition_wavelength: f64,
}

impl LaserConfig {
    pub fn new(
        rabi: [f64; 4],
        detuning: f64,
        wavevector_projections: [f64; 4],
        pulse_duration: f64,
        transition_wavelength: f64,
    ) -> Result<Self> {
        if rabi[0] != rabi[2] || rabi[1] != rabi[3] {
            return Err(Error::InvalidLaser(
                "need O1 = O3 and O2 = O4 to cancel the static Stark shift".into(),
            ));
        }
        if pulse_duration.is_nan() || pulse_duration <= 0.0 {
            return Err(Error::NonPositive {
                name: "pulse_duration",
                value: pulse_duration,
            });
        }
        let cfg = LaserConfig {
            rabi,
            detuning,
            wavevector_projections,
            phases: [0.0; 4],
            pulse_duration,
            transition_wavelength,
        };
        if !cfg.dk().is_finite() {
            return Err(Error::InvalidLaser(
                "non-finite wavevector projections".into(),
            ));
        }
        Ok(cfg)
    }

    /// Symmetric projections (-dk/4, +dk/4, -dk/4, +dk/4) realizing a given
    /// net two-photon wavevector dk.
    pub fn with_symmetric_projections(
        rabi12: (f64, f64),
        detuning: f64,
        dk: f64,
        pulse_duration: f64,
        transition_wavelength: f64,
    ) -> Result<Self> {
        Self::new(
            [rabi12.0, rabi12.1, rabi12.0, rabi12.1],
            detuning,
            [-dk / 4.0, dk / 4.0, -dk / 4.0, dk / 4.0],
            pulse_duration,
            transition_wavelength,
        )
    }

    /// Natural-unit drive with a prescribed displacement rate eta and unit
    /// two-photon wavevector. The detuning is set far above the (unit) trap
    /// frequency so the simplified and exact couplings agree to ~1e-6.
    pub fn natural(eta: f64, pulse_duration: f64) -> Result<Self> {
        let detuning = 1e6;
        let dk = 1.0;
        let o = (2.0 * detuning * eta / dk).sqrt();
        Self::with_symmetric_projections(
            (o, o),
            detuning,
            dk,
            pulse_duration,
            2.0 * std::f64::consts::PI,
        )
    }

    /// Net two-photon wavevector dk = k_x4 + k_x2 - k_x3 - k_x1.
    pub fn dk(&self) -> f64 {
        let k = &self.wavevector_projections;
        k[3] + k[1] - k[2] - k[0]
    }

    /// First beam pair difference k_x1 - k_x2.
    pub fn q1(&self) -> f64 {
        self.wavevector_projections[0] - self.wavevector_projections[1]
    }

    /// Second beam pair difference k_x4 - k_x3.
    pub fn q4(&self) -> f64 {
        self.wavevector_projections[3] - self.wavevector_projections[2]
    }

    /// Two-photon coupling strength (energy units).
    pub fn omega_tilde(&self, trap_freq: f64, hbar: f64, model: DetuningModel) -> f64 {
        let (o1, o2) = (self.rabi[0], self.rabi[1]);
        match model {
            DetuningModel::Simplified => hbar * o1 * o2 / (4.0 * self.detuning),
            DetuningModel::Exact => {
                let d1 = self.detuning;
                let d2 = self.detuning + trap_freq;
                hbar * o1 * o2 * (d1 + d2) / (8.0 * d1 * d2)
            }
        }
    }

    /// Relative difference between the exact and simplified couplings,
    /// reported alongside closed-form results.
    pub fn omega_tilde_defect(&self, trap_freq: f64, hbar: f64) -> f64 {
        let s = self.omega_tilde(trap_freq, hbar, DetuningModel::Simplified);
        let e = self.omega_tilde(trap_freq, hbar, DetuningModel::Exact);
        (e - s) / s
    }

    /// t_p * nu, with the warn threshold [`PULSE_DURATION_WARN`].
    pub fn pulse_duration_fraction(&self, trap_freq: f64) -> f64 {
        self.pulse_duration * trap_freq
    }
}

/// A full protocol plan: drive, deformation, and cycle count. The pulse
/// schedule is derived, never stored: pulse i fires at t_i nu = (pi/2) i with
/// the phase setting of i mod 4.
#[derive(Debug, Clone)]
pub struct PulsePlan {
    pub laser: LaserConfig,
    pub gup: GupParams,
    pub cycles: u64,
}

/// One derived schedule entry.
#[derive(Debug, Clone, Copy)]
pub struct PulseSlot {
    pub index: u64,
    /// t_i in the time units of the given trap frequency.
    pub time: f64,
    /// (phi1 - phi2, phi4 - phi3) for this pulse.
    pub settings: (f64, f64),
}

impl PulsePlan {
    pub fn new(laser: LaserConfig, gup: GupParams, cycles: u64) -> Self {
        PulsePlan { laser, gup, cycles }
    }

    /// The 4N-entry schedule.
    pub fn schedule(&self, trap_freq: f64) -> impl Iterator<Item = PulseSlot> + '_ {
        (0..4 * self.cycles).map(move |i| PulseSlot {
            index: i,
            time: schedule_time(i, trap_freq),
            settings: phase_settings(i),
        })
    }
}

/// Relative laser phase settings (phi1 - phi2, phi4 - phi3) for pulse i; the
/// pattern repeats with period four: pi/2, 0, -pi/2, pi.
pub fn phase_settings(pulse_index: u64) -> (f64, f64) {
    use std::f64::consts::{FRAC_PI_2, PI};
    match pulse_index % 4 {
        0 => (FRAC_PI_2, FRAC_PI_2),
        1 => (0.0, 0.0),
        2 => (-FRAC_PI_2, -FRAC_PI_2),
        _ => (PI, PI),
    }
}

/// e^{i (phi1 - phi2)} for pulse i, held exactly (the settings are quarter
/// turns, so the factors are 1, i, -1, -i up to ordering).
fn phase_factor(pulse_index: u64) -> C64 {
    match pulse_index % 4 {
        0 => C64::new(0.0, 1.0),
        1 => C64::new(1.0, 0.0),
        2 => C64::new(0.0, -1.0),
        _ => C64::new(-1.0, 0.0),
    }
}

/// Exact schedule trigonometry: (cos nu t_i, sin nu t_i) as integers.
pub fn schedule_trig(pulse_index: u64) -> (i8, i8) {
    match pulse_index % 4 {
        0 => (1, 0),
        1 => (0, 1),
        2 => (-1, 0),
        _ => (0, -1),
    }
}

/// Schedule time t_i = (pi / 2 nu) i.
pub fn schedule_time(pulse_index: u64, trap_freq: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 * pulse_index as f64 / trap_freq
}

/// Displacement rate eta = dk O1 O2 / (2 Delta), rad/(m s).
pub fn eta(laser: &LaserConfig) -> Result<f64> {
    if laser.detuning == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    Ok(laser.dk() * laser.rabi[0] * laser.rabi[1] / (2.0 * laser.detuning))
}

/// Deformation-phase coefficient `xi = (hbar^3 pi / 256 m nu) (dk O1 O2 / Delta)^4`,
/// carried without the deformation strength: the phase increment of global
/// pulse i is `i * beta * xi * t_p^4`.
pub fn xi_tilde(laser: &LaserConfig, scales: &OscillatorScales) -> Result<f64> {
    if laser.detuning == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    let y = laser.dk() * laser.rabi[0] * laser.rabi[1] / laser.detuning;
    Ok(
        scales.hbar.powi(3) * std::f64::consts::PI / (256.0 * scales.mass * scales.trap_freq)
            * y.powi(4),
    )
}

/// Effective ground-state Hamiltonian of pulse i on the motional space.
///
/// With the Lamb-Dicke linearization the pattern is
/// `(-cos, +sin, +cos, -sin)[i mod 4] * 2 Omega~ dk * x(t_i)`, which at the
/// exact schedule times collapses to an alternating-sign displacement
/// generator. With `lamb_dicke = false` the full exponential form is built
/// from unitaries e^{i q x(t_i)} of the two beam pairs; its distance from the
/// linearized form is bounded by (k x0)^2 at small Lamb-Dicke parameter.
pub fn effective_hamiltonian(
    pulse_index: u64,
    t_i: f64,
    x_op: &FockOperator,
    laser: &LaserConfig,
    scales: &OscillatorScales,
    lamb_dicke: bool,
    model: DetuningModel,
) -> Result<FockOperator> {
    // schedule consistency: t_i nu must be (pi/2) i
    let expect = schedule_time(pulse_index, scales.trap_freq);
    let tol = 1e-9 * (1.0 + expect.abs());
    if (t_i - expect).abs() > tol {
        return Err(Error::ScheduleMismatch { index: pulse_index });
    }
    let ot = laser.omega_tilde(scales.trap_freq, scales.hbar, model);
    let (cos_i, sin_i) = schedule_trig(pulse_index);
    if lamb_dicke {
        let trig = match pulse_index % 4 {
            0 => -f64::from(cos_i),
            1 => f64::from(sin_i),
            2 => f64::from(cos_i),
            _ => -f64::from(sin_i),
        };
        Ok(x_op.scaled(C64::new(2.0 * ot * laser.dk() * trig, 0.0)))
    } else {
        // Omega~ [ (-e^{i q1 x + i dphi12} + e^{i q4 x + i dphi43}) e^{-i nu t_i} + H.c. ]
        let e1 = expm_generator(&x_op.scaled(C64::new(0.0, laser.q1())))?;
        let e4 = expm_generator(&x_op.scaled(C64::new(0.0, laser.q4())))?;
        let ph = phase_factor(pulse_index);
        let rot = C64::new(f64::from(cos_i), -f64::from(sin_i)); // e^{-i nu t_i}, exact
        let m = e4
            .as_operator()
            .scaled(ph)
            .sub(&e1.as_operator().scaled(ph))?
            .scaled(C64::new(ot, 0.0) * rot);
        m.add(&m.adjoint())
    }
}

/// Which quadrature a pulse displaces along, with sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GeneratorLabel {
    PlusX,
    MinusP,
    MinusX,
    PlusP,
}

impl GeneratorLabel {
    pub fn for_pulse(pulse_index: u64) -> Self {
        match pulse_index % 4 {
            0 => GeneratorLabel::PlusX,
            1 => GeneratorLabel::MinusP,
            2 => GeneratorLabel::MinusX,
            _ => GeneratorLabel::PlusP,
        }
    }
}

/// Closed-form description of pulse i: displacement generator, strength, and
/// deformation phase increment.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnalyticPulse {
    pub label: GeneratorLabel,
    /// e^{+/- i strength x(0)} or e^{+/- i strength p(0)} exponent scale:
    /// eta t_p for the position pulses, (eta / m nu) t_p for the momentum ones.
    pub strength: f64,
    /// i * beta * xi * t_p^4 with i the global pulse index.
    pub beta_phase_increment: f64,
}

/// Closed-form propagator data for global pulse index i.
pub fn propagator_analytic(
    pulse_index: u64,
    laser: &LaserConfig,
    gup: &GupParams,
    scales: &OscillatorScales,
) -> Result<AnalyticPulse> {
    let label = GeneratorLabel::for_pulse(pulse_index);
    let eta_v = eta(laser)?;
    let tp = laser.pulse_duration;
    let strength = match label {
        GeneratorLabel::PlusX | GeneratorLabel::MinusX => eta_v * tp,
        GeneratorLabel::MinusP | GeneratorLabel::PlusP => {
            eta_v / (scales.mass * scales.trap_freq) * tp
        }
    };
    let d = gup.beta * xi_tilde(laser, scales)? * tp.powi(4);
    Ok(AnalyticPulse {
        label,
        strength,
        beta_phase_increment: pulse_index as f64 * d,
    })
}

/// Numeric propagator for global pulse index i: exponentiation of the
/// effective Hamiltonian built from the deformed Heisenberg position operator
/// frozen at t_i. The internal state enters only as the |g><g| projector, so
/// the unitary acts on the motional space alone.
pub fn propagator_numeric(
    pulse_index: u64,
    plan: &PulsePlan,
    scales: &OscillatorScales,
    dim: usize,
    model: DetuningModel,
) -> Result<UnitaryOperator> {
    if pulse_index >= 4 * plan.cycles.max(1) {
        return Err(Error::ScheduleMismatch { index: pulse_index });
    }
    let t_i = schedule_time(pulse_index, scales.trap_freq);
    let (lin, cubic) = x_heisenberg_split(t_i, &plan.gup, scales, dim)?;
    let x_op = lin.add(&cubic)?;
    let h = effective_hamiltonian(pulse_index, t_i, &x_op, &plan.laser, scales, true, model)?;
    let g = h.scaled(C64::new(0.0, -plan.laser.pulse_duration / scales.hbar));
    expm_generator(&g)
}

/// Per-cycle closed-form phases.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CyclePhase {
    /// Standard-mechanics phase per cycle, -hbar eta^2 t_p^2 / (m nu).
    pub phi0_cycle: f64,
    /// The same quantity through the quartic-coefficient route
    /// -(hbar / 4 m nu) (t_p dk O1 O2 / Delta)^2; the two must agree.
    pub phi0_cycle_quartic_route: f64,
    /// Per-pulse deformation tolerance d = beta xi t_p^4.
    pub beta_tolerance_d: f64,
}

pub fn cycle_phase(
    laser: &LaserConfig,
    gup: &GupParams,
    scales: &OscillatorScales,
) -> Result<CyclePhase> {
    let eta_v = eta(laser)?;
    let tp = laser.pulse_duration;
    let m = scales.mass;
    let nu = scales.trap_freq;
    let phi0_cycle = -scales.hbar * eta_v * eta_v * tp * tp / (m * nu);
    let x = tp * laser.dk() * laser.rabi[0] * laser.rabi[1] / laser.detuning;
    let phi0_cycle_quartic_route = -scales.hbar / (4.0 * m * nu) * x * x;
    debug_assert!(
        (phi0_cycle - phi0_cycle_quartic_route).abs()
            <= 1e-12 * phi0_cycle.abs().max(f64::MIN_POSITIVE)
    );
    let d = gup.beta * xi_tilde(laser, scales)? * tp.powi(4);
    Ok(CyclePhase {
        phi0_cycle,
        phi0_cycle_quartic_route,
        beta_tolerance_d: d,
    })
}

/// Decimal-string plan for the extended-precision phase pipeline. Values are
/// carried as printed (not as f64) so the mod-2pi reductions are reproducible
/// bit-for-bit at a stated precision.
#[derive(Debug, Clone, Serialize)]
pub struct PlanNumbers {
    pub mass_u: String,
    pub trap_freq_over_2pi_hz: String,
    pub pulse_duration_s: String,
    pub rabi1_rad_s: String,
    pub rabi2_rad_s: String,
    pub detuning_rad_s: String,
    /// |k| / 2pi in 1/m.
    pub k_over_2pi_per_m: String,
    pub dk_over_k: String,
    pub cycles: u64,
    pub beta0: String,
}

/// Extended-precision N-cycle phase accumulation result.
#[derive(Debug, Clone)]
pub struct PhaseResult {
    pub phi0_unwrapped: BigAngle,
    pub dphi_unwrapped: BigAngle,
    pub phi0_wrapped: f64,
    pub dphi_wrapped: f64,
    pub phi_wrapped: f64,
    pub phi0_wrap_error: f64,
    pub dphi_wrap_error: f64,
    pub phi_wrap_error: f64,
    /// First few per-pulse increments i*d (capped; the full progression is
    /// implied by `beta_tolerance_d` and `pulse_count`).
    pub per_pulse_beta_increments: Vec<f64>,
    pub beta_tolerance_d: f64,
    pub pulse_count: u128,
    pub cycles: u64,
    /// Deformation phase per unit beta0 (radians); dphi = beta0 * this, exactly.
    pub dphi_per_beta0: f64,
    pub eta: f64,
    pub xi_tilde_tp4: f64,
    pub phi0_cycle: f64,
    pub kappa: f64,
    pub precision_bits: usize,
    /// Relative difference between exact and simplified two-photon couplings.
    pub omega_tilde_defect: f64,
    /// t_p * nu against the frozen-position warn threshold.
    pub pulse_duration_fraction: f64,
}

const INCREMENT_CAP: usize = 16;

/// Quantities a sensitivity analysis may perturb inside the phase pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseParam {
    Hbar,
    AtomicMassUnit,
    PlanckMass,
    SpeedOfLight,
    MassU,
    TrapFreq,
    PulseDuration,
    Rabi1,
    Rabi2,
    Detuning,
    DkOverK,
    Beta0,
    Cycles,
}

struct PhaseCore {
    phi0: BigReal,
    dphi: BigReal,
    dphi_slope: BigReal,
    phi0_cycle: BigReal,
    xi_tp4: BigReal,
    x: BigReal,
    m_nu: BigReal,
    hbar: BigReal,
}

/// The closed-form pipeline at full precision, optionally with one quantity
/// multiplied by a factor (used for finite-difference sensitivity checks).
fn phase_core(
    plan: &PlanNumbers,
    b: usize,
    perturb: Option<(PhaseParam, &BigReal)>,
) -> Result<PhaseCore> {
    let dec = |s: &str| BigReal::from_decimal(s, b);
    let tweak = |param: PhaseParam, v: BigReal| -> BigReal {
        match perturb {
            Some((p, f)) if p == param => v.mul(f),
            _ => v,
        }
    };

    let pi = BigReal::pi(b);
    let two = BigReal::from_u64(2, b);
    let two_pi = pi.mul(&two);

    let hbar = tweak(PhaseParam::Hbar, dec(HBAR_DECIMAL)?);
    let c = tweak(PhaseParam::SpeedOfLight, dec(SPEED_OF_LIGHT_DECIMAL)?);
    let mp = tweak(PhaseParam::PlanckMass, dec(PLANCK_MASS_DECIMAL)?);
    let amu = tweak(PhaseParam::AtomicMassUnit, dec(ATOMIC_MASS_UNIT_DECIMAL)?);

    let mass = tweak(PhaseParam::MassU, dec(&plan.mass_u)?).mul(&amu);
    let nu = two_pi.mul(&tweak(
        PhaseParam::TrapFreq,
        dec(&plan.trap_freq_over_2pi_hz)?,
    ));
    let tp = tweak(PhaseParam::PulseDuration, dec(&plan.pulse_duration_s)?);
    let o1 = tweak(PhaseParam::Rabi1, dec(&plan.rabi1_rad_s)?);
    let o2 = tweak(PhaseParam::Rabi2, dec(&plan.rabi2_rad_s)?);
    let delta = tweak(PhaseParam::Detuning, dec(&plan.detuning_rad_s)?);
    let kmag = two_pi.mul(&dec(&plan.k_over_2pi_per_m)?);
    let dk = tweak(PhaseParam::DkOverK, dec(&plan.dk_over_k)?).mul(&kmag);
    let beta0 = tweak(PhaseParam::Beta0, dec(&plan.beta0)?);
    let n_cycles = plan.cycles;

    if delta.is_zero() {
        return Err(Error::ZeroDetuning);
    }

    // X = t_p dk O1 O2 / Delta
    let x = tp.mul(&dk).mul(&o1).mul(&o2).div(&delta);
    // phi0_cycle = -(hbar / 4 m nu) X^2
    let four = BigReal::from_u64(4, b);
    let m_nu = mass.mul(&nu);
    let phi0_cycle = hbar.div(&four.mul(&m_nu)).mul(&x.powi(2)).neg();
    // xi t_p^4 = (hbar^3 pi / 256 m nu) X^4
    let xi_tp4 = hbar
        .powi(3)
        .mul(&pi)
        .div(&BigReal::from_u64(256, b).mul(&m_nu))
        .mul(&x.powi(4));
    // beta per unit beta0
    let beta_unit = BigReal::from_u64(1, b).div(&mp.mul(&c).powi(2));

    // exact integer progression: sum_{i=0}^{4N-1} i = 2N(4N-1)
    let n = n_cycles as u128;
    let four_n = 4 * n;
    let coeff = if n == 0 { 0 } else { 2 * n * (4 * n - 1) };
    if n > 0 {
        let gauss = four_n * (four_n - 1) / 2;
        assert_eq!(gauss, coeff, "arithmetic progression identity");
    }

    let n_big = BigReal::from_u128(n, b);
    let coeff_big = BigReal::from_u128(coeff, b);

    let phi0 = phi0_cycle.mul(&n_big);
    // dphi = beta0 * [coeff * beta_unit * xi t_p^4]  (exactly linear in beta0)
    let dphi_slope = coeff_big.mul(&beta_unit).mul(&xi_tp4);
    let dphi = beta0.mul(&dphi_slope);

    Ok(PhaseCore {
        phi0,
        dphi,
        dphi_slope,
        phi0_cycle,
        xi_tp4,
        x,
        m_nu,
        hbar,
    })
}

/// Accumulate the N-cycle phases for a decimal plan at the given precision.
///
/// phi0 = N * phi0_cycle and dphi = 2N(4N-1) * beta * xi * t_p^4, both carried
/// as big floats; the deformation phase is built as beta0 * (per-unit slope)
/// so scaling in beta0 is exact. The per-pulse arithmetic progression identity
/// sum_{i<4N} i = 2N(4N-1) is asserted in exact integer arithmetic.
pub fn total_phase(plan: &PlanNumbers, precision_bits: usize) -> Result<PhaseResult> {
    let b = precision_bits;
    let core = phase_core(plan, b, None)?;
    let n_cycles = plan.cycles;
    let four_n = 4 * n_cycles as u128;

    let phi0_angle = BigAngle::new(core.phi0.clone());
    let dphi_angle = BigAngle::new(core.dphi.clone());
    let phi_angle = BigAngle::new(core.phi0.add(&core.dphi));

    let w0 = wrap_phase(&phi0_angle)?;
    let wd = wrap_phase(&dphi_angle)?;
    let wp = wrap_phase(&phi_angle)?;

    // f64 views for the report
    let f = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::InvalidDecimal(s.into()))
    };
    let tp_f = f(&plan.pulse_duration_s)?;
    let o1_f = f(&plan.rabi1_rad_s)?;
    let o2_f = f(&plan.rabi2_rad_s)?;
    let delta_f = f(&plan.detuning_rad_s)?;
    let k_over_2pi = f(&plan.k_over_2pi_per_m)?;
    let dk_f = f(&plan.dk_over_k)? * 2.0 * std::f64::consts::PI * k_over_2pi;
    let nu_f = 2.0 * std::f64::consts::PI * f(&plan.trap_freq_over_2pi_hz)?;
    let eta_f = dk_f * o1_f * o2_f / (2.0 * delta_f);

    // per-pulse tolerance d = beta * xi * t_p^4
    let d_f = {
        let k = crate::units::pinned_constants();
        f(&plan.beta0)? / (k.planck_mass * k.c).powi(2) * core.xi_tp4.to_f64()
    };
    let mut incs = Vec::new();
    let listed = (four_n.min(INCREMENT_CAP as u128)) as usize;
    for i in 0..listed {
        incs.push(i as f64 * d_f);
    }
    // x0 = sqrt(hbar / 2 m nu) in f64 is plenty for the kappa diagnostic
    let x0 = (core.hbar.to_f64() / (2.0 * core.m_nu.to_f64())).sqrt();
    let kappa = core.x.to_f64() * x0;

    let laser_view = LaserConfig::with_symmetric_projections(
        (o1_f, o2_f),
        delta_f,
        dk_f,
        tp_f,
        1.0 / k_over_2pi,
    )?;

    Ok(PhaseResult {
        phi0_wrapped: w0.wrapped_f64,
        dphi_wrapped: wd.wrapped_f64,
        phi_wrapped: wp.wrapped_f64,
        phi0_wrap_error: w0.error_bound,
        dphi_wrap_error: wd.error_bound,
        phi_wrap_error: wp.error_bound,
        phi0_unwrapped: phi0_angle,
        dphi_unwrapped: dphi_angle,
        per_pulse_beta_increments: incs,
        beta_tolerance_d: d_f,
        pulse_count: four_n,
        cycles: n_cycles,
        dphi_per_beta0: core.dphi_slope.to_f64(),
        eta: eta_f,
        xi_tilde_tp4: core.xi_tp4.to_f64(),
        phi0_cycle: core.phi0_cycle.to_f64(),
        kappa,
        precision_bits: b,
        omega_tilde_defect: laser_view.omega_tilde_defect(nu_f, crate::units::HBAR),
        pulse_duration_fraction: laser_view.pulse_duration_fraction(nu_f),
    })
}

/// One row of the phase sensitivity table: how the accumulated phases respond
/// to a relative change of one input.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityRow {
    pub parameter: PhaseParam,
    /// d ln|phi0| / d ln c (exact from the power-law structure).
    pub phi0_elasticity: f64,
    /// d ln|dphi| / d ln c.
    pub dphi_elasticity: f64,
    /// d phi0 / d ln c in radians (unwrapped; the wrapped derivative is the
    /// same almost everywhere).
    pub dphi0_dlnc_rad: f64,
    /// d dphi / d ln c in radians.
    pub ddphi_dlnc_rad: f64,
    /// Relative change of this input that sweeps the wrapped total phase
    /// through a full turn: 2 pi / |d(phi0 + dphi)/d ln c|.
    pub rel_change_for_full_wrap: f64,
    /// Relative uncertainty attached to pinned constants (None for protocol
    /// parameters, which are exact by definition).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assumed_rel_uncertainty: Option<f64>,
    /// Whether that uncertainty alone re-randomizes the wrapped phase.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wrap_scrambled_by_uncertainty: Option<bool>,
    /// Finite-difference verification of the analytic elasticities at working
    /// precision (relative error; None where the derivative vanishes).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_rel_error: Option<f64>,
}

/// Analytic elasticities of (phi0, dphi) with respect to each input, verified
/// by extended-precision finite differences.
///
/// phi0 is a pure power law in every input; dphi adds the deformation-scale
/// factors and the cycle-count polynomial 2N(4N-1) whose log-derivative is
/// 1 + 4N/(4N-1). The table is the quantitative demonstration of why the
/// wrapped reference phases cannot be pinned by quoted digits: an input whose
/// relative uncertainty exceeds `rel_change_for_full_wrap` scrambles the
/// wrapped value entirely.
pub fn phase_sensitivity(plan: &PlanNumbers, precision_bits: usize) -> Result<Vec<SensitivityRow>> {
    let b = precision_bits;
    let base = phase_core(plan, b, None)?;
    let phi0 = base.phi0.to_f64();
    let dphi = base.dphi.to_f64();
    let n = plan.cycles as f64;
    let n_elast_dphi = if plan.cycles == 0 {
        0.0
    } else {
        1.0 + 4.0 * n / (4.0 * n - 1.0)
    };

    // (param, phi0 elasticity, dphi elasticity, constant rel uncertainty)
    // uncertainty notes: hbar and c are exact by definition in SI 2019, but the
    // pinned hbar decimal truncates h/2pi at 10 digits; amu and the Planck mass
    // carry CODATA 2018 standard uncertainties (the latter through G).
    let rows: Vec<(PhaseParam, f64, f64, Option<f64>)> = vec![
        (PhaseParam::Hbar, 1.0, 3.0, Some(4.7e-10)),
        (PhaseParam::AtomicMassUnit, -1.0, -1.0, Some(3.0e-10)),
        (PhaseParam::PlanckMass, 0.0, -2.0, Some(1.1e-5)),
        (PhaseParam::SpeedOfLight, 0.0, -2.0, Some(0.0)),
        (PhaseParam::MassU, -1.0, -1.0, None),
        (PhaseParam::TrapFreq, -1.0, -1.0, None),
        (PhaseParam::PulseDuration, 2.0, 4.0, None),
        (PhaseParam::Rabi1, 2.0, 4.0, None),
        (PhaseParam::Rabi2, 2.0, 4.0, None),
        (PhaseParam::Detuning, -2.0, -4.0, None),
        (PhaseParam::DkOverK, 2.0, 4.0, None),
        (PhaseParam::Beta0, 0.0, 1.0, None),
        (PhaseParam::Cycles, 1.0, n_elast_dphi, None),
    ];

    // finite-difference factor 1 + 2^-60, assembled in extended precision
    // (the sum is not representable in f64)
    let h = 2f64.powi(-60);
    let factor = BigReal::from_u64(1, b).add(&BigReal::from_f64(h, b));

    let mut out = Vec::with_capacity(rows.len());
    for (param, e0, ed, unc) in rows {
        let fd_rel_error = if param == PhaseParam::Cycles {
            None // integer input; elasticity from the closed form only
        } else {
            let pert = phase_core(plan, b, Some((param, &factor)))?;
            let fd = |f0: &BigReal, f1: &BigReal, elast: f64| -> Option<f64> {
                if elast == 0.0 {
                    return None;
                }
                let df = f1.sub(f0);
                let measured = df.div(f0).to_f64() / h;
                Some(((measured - elast) / elast).abs())
            };
            let e_phi0 = fd(&base.phi0, &pert.phi0, e0);
            let e_dphi = fd(&base.dphi, &pert.dphi, ed);
            match (e_phi0, e_dphi) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (Some(a), None) => Some(a),
                (None, Some(b)) => Some(b),
                (None, None) => None,
            }
        };
        let dphi0_dlnc = e0 * phi0;
        let ddphi_dlnc = ed * dphi;
        let total = (dphi0_dlnc + ddphi_dlnc).abs();
        let rel_change_for_full_wrap = if total == 0.0 {
            f64::INFINITY
        } else {
            2.0 * std::f64::consts::PI / total
        };
        out.push(SensitivityRow {
            parameter: param,
            phi0_elasticity: e0,
            dphi_elasticity: ed,
            dphi0_dlnc_rad: dphi0_dlnc,
            ddphi_dlnc_rad: ddphi_dlnc,
            rel_change_for_full_wrap,
            assumed_rel_uncertainty: unc,
            wrap_scrambled_by_uncertainty: unc.map(|u| u > rel_change_for_full_wrap),
            fd_rel_error,
        });
    }
    Ok(out)
}

/// One N-cycle numeric-oracle run (natural units).
#[derive(Debug, Clone, Serialize)]
pub struct OracleRun {
    pub cycles: u64,
    /// Sum of per-pulse deformation phases, each extracted as the vacuum
    /// overlap argument of the pulse's full unitary against its ladder-linear
    /// part (drift displacements removed pulse-locally).
    pub per_pulse_sum: f64,
    /// Closed-form deformation phase 2N(4N-1) beta xi t_p^4.
    pub dphi_formula: f64,
    /// |per_pulse_sum - dphi_formula| / dphi_formula.
    pub rel_deviation: f64,
    /// Vacuum overlap argument of the fully composed run.
    pub composed_arg: f64,
    /// Wrapped difference between the composed argument and the closed form
    /// N phi0_cycle + dphi. Dominated by drift cross terms of order
    /// beta kappa^2 that the closed form discards; reported, not gated.
    pub composed_deviation: f64,
    pub composed_rel_deviation: f64,
    /// |<0|U_run|0>|; attenuates as the deformation scatters the loop.
    pub overlap_magnitude: f64,
}

/// Compose the numeric pulse propagators over whole cycles at natural units
/// and extract deformation phases.
///
/// `kappa` is the protocol's large parameter X sqrt(hbar / 2 m nu) = 2 eta t_p x0.
/// Per pulse the full generator splits exactly into its ladder-linear part
/// (displacement including the deformation's drift corrections) and the cubic
/// deformation part; the vacuum overlap argument of (U_linear^dag U_full)
/// isolates the phase the cubic terms generate, which is the quantity the
/// closed-form progression i * beta * xi * t_p^4 models. The composed-run
/// extraction is also recorded: its deviation carries the drift cross terms,
/// suppressed only as kappa^-2 relative to the signal.
pub fn run_deformation_oracle(
    kappa: f64,
    beta: f64,
    max_cycles: u64,
    dim: usize,
) -> Result<Vec<OracleRun>> {
    let scales = OscillatorScales::natural();
    let gup = GupParams::natural(beta);
    let tp = 1.0;
    let eta_tp = kappa / (2.0 * scales.x0);
    let laser = LaserConfig::natural(eta_tp / tp, tp)?;
    let cycle = cycle_phase(&laser, &gup, &scales)?;
    let d = cycle.beta_tolerance_d;

    let dim_k = dim;
    let mut psi_f: Array1<C64> = Array1::zeros(dim_k);
    psi_f[0] = C64::new(1.0, 0.0);
    let mut psi_l = psi_f.clone();

    let mut per_pulse_sum = 0.0;
    let mut runs = Vec::new();

    for i in 0..4 * max_cycles {
        let t_i = schedule_time(i, scales.trap_freq);
        let (lin, cubic) = x_heisenberg_split(t_i, &gup, &scales, dim_k)?;
        let full = lin.add(&cubic)?;
        let h_full = effective_hamiltonian(
            i,
            t_i,
            &full,
            &laser,
            &scales,
            true,
            DetuningModel::Simplified,
        )?;
        let h_lin = effective_hamiltonian(
            i,
            t_i,
            &lin,
            &laser,
            &scales,
            true,
            DetuningModel::Simplified,
        )?;
        let to_gen = |h: &FockOperator| h.scaled(C64::new(0.0, -tp / scales.hbar));
        let u_full = expm_generator(&to_gen(&h_full))?;
        let u_lin = expm_generator(&to_gen(&h_lin))?;

        // pulse-local extraction from the vacuum; the overlap argument is
        // only defined mod 2 pi, so select the branch nearest the expected
        // progression value (late pulses at large kappa exceed pi)
        let mut e0: Array1<C64> = Array1::zeros(dim_k);
        e0[0] = C64::new(1.0, 0.0);
        let vf = u_full.apply(&e0);
        let vl = u_lin.apply(&e0);
        let overlap: C64 = vl.iter().zip(vf.iter()).map(|(l, f)| l.conj() * f).sum();
        let expected_i = i as f64 * d;
        per_pulse_sum += expected_i + wrap_f64(overlap.arg() - expected_i);

        psi_f = u_full.apply(&psi_f);
        psi_l = u_lin.apply(&psi_l);

        if i % 4 == 3 {
            let n = i / 4 + 1;
            let coeff = 2.0 * n as f64 * (4.0 * n as f64 - 1.0);
            let dphi_formula = coeff * d;
            let composed_arg = psi_f[0].arg();
            let expected = n as f64 * cycle.phi0_cycle + dphi_formula;
            let composed_deviation = wrap_f64(composed_arg - expected);
            runs.push(OracleRun {
                cycles: n,
                per_pulse_sum,
                dphi_formula,
                rel_deviation: (per_pulse_sum - dphi_formula).abs() / dphi_formula.abs(),
                composed_arg,
                composed_deviation,
                composed_rel_deviation: composed_deviation.abs() / dphi_formula.abs(),
                overlap_magnitude: psi_f[0].norm(),
            });
        }
    }
    Ok(runs)
}

/// Estimate of the motional drift neglected by freezing x(t) at the pulse
/// start: the fractional change of the position operator over one pulse,
/// `t_p ||[H0, x(0)]|| / (hbar ||x(0)||)` on the interior block. For the
/// harmonic part this reduces to nu t_p, the quantity gated by
/// [`PULSE_DURATION_WARN`].
pub fn frozen_drift_estimate(
    gup: &GupParams,
    scales: &OscillatorScales,
    pulse_duration: f64,
    dim: usize,
) -> Result<f64> {
    let h0 = crate::gup::deformed_h0(gup, scales, dim)?;
    let (x, _) = quadratures(dim, *scales)?;
    let comm = crate::fock::commutator(&h0, &x)?;
    let n_int = dim / 2;
    let rate =
        comm.interior(n_int)?.norm_spectral() / (scales.hbar * x.interior(n_int)?.norm_spectral());
    Ok(pulse_duration * rate)
}

/// Loop-closure defect at beta = 0: || U3 U2 U1 U0 - e^{i phi0_cycle} 1 || on
/// the n <= n_interior block, natural units.
pub fn loop_closure_defect(displacement: f64, dim: usize, n_interior: usize) -> Result<f64> {
    let scales = OscillatorScales::natural();
    let gup = GupParams::natural(0.0);
    let tp = 1.0;
    let eta_tp = displacement / scales.x0;
    let laser = LaserConfig::natural(eta_tp / tp, tp)?;
    let plan = PulsePlan::new(laser, gup, 1);
    let mut u = None;
    for i in 0..4u64 {
        let ui = propagator_numeric(i, &plan, &scales, dim, DetuningModel::Simplified)?;
        u = Some(match u {
            None => ui,
            Some(acc) => ui.matmul(&acc)?,
        });
    }
    let u = u.unwrap();
    let cycle = cycle_phase(&plan.laser, &plan.gup, &scales)?;
    let target =
        FockOperator::identity(dim, scales)?.scaled(C64::from_polar(1.0, cycle.phi0_cycle));
    u.as_operator()
        .sub(&target)?
        .interior(n_interior)
        .map(|m| m.norm_spectral())
}

fn wrap_f64(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = x % TAU;
    if r > PI {
        r -= TAU;
    } else if r <= -PI {
        r += TAU;
    }
    r
}
