//! Pinned physical constants, oscillator scales, and extended-precision phase
//! arithmetic.
//!
//! Constants are CODATA 2018 values, stored both as `f64` and as exact decimal
//! strings; every JSON report embeds the decimal strings so results can be
//! reproduced bit-for-bit. All frequencies are handled internally in rad/s: a
//! quantity quoted as "0.18 x 2pi MHz" maps to `0.18e6 * 2 * pi` rad/s, while
//! Rabi frequencies and detunings quoted as plain GHz are taken as already
//! angular. This is the only reading under which the protocol's displacement
//! rate and phase coefficients need no hidden 2-pi factors; the convention is
//! recorded in every report.
//!
//! The unwrapped standard-mechanics phase of a realistic run reaches ~1e12 rad,
//! so reduction mod 2pi is done in software arbitrary-precision arithmetic
//! (default 256 bits, configurable) with a correctly-rounded pi at the working
//! precision.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

use crate::{Error, Result};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s (exact by definition).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Planck mass, kg.
pub const PLANCK_MASS: f64 = 2.176_434e-8;
/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Exact decimal forms of the constants above, used for extended-precision
/// arithmetic and embedded verbatim in report metadata.
pub const HBAR_DECIMAL: &str = "1.054571817e-34";
pub const SPEED_OF_LIGHT_DECIMAL: &str = "299792458";
pub const PLANCK_MASS_DECIMAL: &str = "2.176434e-8";
pub const ATOMIC_MASS_UNIT_DECIMAL: &str = "1.66053906660e-27";

/// Default working precision for phase accumulation, in mantissa bits.
pub const DEFAULT_PRECISION_BITS: usize = 256;

/// Hard limit on the acceptable wrap error; callers must raise precision past it.
pub const WRAP_ERROR_LIMIT: f64 = 1e-6;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

/// Frozen table of the physical constants the protocol needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Planck mass, kg.
    pub planck_mass: f64,
    /// Atomic mass unit, kg.
    pub atomic_mass_unit: f64,
}

/// The pinned CODATA 2018 table. Two calls return bit-identical values.
pub fn pinned_constants() -> PhysicalConstants {
    PhysicalConstants {
        hbar: HBAR,
        c: SPEED_OF_LIGHT,
        planck_mass: PLANCK_MASS,
        atomic_mass_unit: ATOMIC_MASS_UNIT,
    }
}

impl PhysicalConstants {
    /// Decimal-string forms, keyed for the report conventions block.
    pub fn decimal_strings() -> Vec<(&'static str, &'static str)> {
        vec![
            ("hbar_J_s", HBAR_DECIMAL),
            ("c_m_per_s", SPEED_OF_LIGHT_DECIMAL),
            ("planck_mass_kg", PLANCK_MASS_DECIMAL),
            ("atomic_mass_unit_kg", ATOMIC_MASS_UNIT_DECIMAL),
        ]
    }
}

/// Characteristic length/momentum scales of the trapped oscillator.
///
/// `natural()` gives the dimensionless system hbar = m = nu = 1 used by the
/// matrix oracles; `si()` computes the scales for a physical ion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorScales {
    /// Ground-state length sqrt(hbar / 2 m nu), m.
    pub x0: f64,
    /// Ground-state momentum sqrt(hbar m nu / 2), kg m/s.
    pub p0: f64,
    /// Oscillator mass, kg.
    pub mass: f64,
    /// Trap frequency, rad/s.
    pub trap_freq: f64,
    /// Reduced Planck constant in the scale system (1 for natural units).
    pub hbar: f64,
    /// Marker distinguishing the natural-unit system from SI.
    pub natural: bool,
}

impl OscillatorScales {
    /// Natural units: hbar = m = nu = 1, so x0 = p0 = 1/sqrt(2).
    pub fn natural() -> Self {
        OscillatorScales {
            x0: std::f64::consts::FRAC_1_SQRT_2,
            p0: std::f64::consts::FRAC_1_SQRT_2,
            mass: 1.0,
            trap_freq: 1.0,
            hbar: 1.0,
            natural: true,
        }
    }

    /// SI scales for a given mass and trap frequency.
    pub fn si(mass: f64, trap_freq: f64, constants: &PhysicalConstants) -> Result<Self> {
        oscillator_scales(mass, trap_freq, constants)
    }
}

/// Compute the oscillator scales; rejects non-positive mass or frequency.
pub fn oscillator_scales(
    mass: f64,
    trap_freq: f64,
    constants: &PhysicalConstants,
) -> Result<OscillatorScales> {
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::NonPositive {
            name: "mass",
            value: mass,
        });
    }
    if trap_freq.is_nan() || trap_freq <= 0.0 {
        return Err(Error::NonPositive {
            name: "trap_freq",
            value: trap_freq,
        });
    }
    let x0 = (constants.hbar / (2.0 * mass * trap_freq)).sqrt();
    let p0 = (constants.hbar * mass * trap_freq / 2.0).sqrt();
    Ok(OscillatorScales {
        x0,
        p0,
        mass,
        trap_freq,
        hbar: constants.hbar,
        natural: false,
    })
}

/// Arbitrary-precision real number with a fixed working precision.
///
/// Thin wrapper over a binary big-float; all operations round to the stored
/// precision. Used for the phase pipeline where f64 would lose the mod-2pi
/// information entirely.
#[derive(Debug, Clone)]
pub struct BigReal {
    value: BigFloat,
    bits: usize,
}

impl BigReal {
    pub fn from_decimal(s: &str, bits: usize) -> Result<Self> {
        let v = CONSTS.with(|cc| BigFloat::parse(s, Radix::Dec, bits, RM, &mut cc.borrow_mut()));
        if v.is_nan() {
            return Err(Error::InvalidDecimal(s.to_string()));
        }
        Ok(BigReal { value: v, bits })
    }

    /// Exact conversion; the f64 payload is representable at any precision >= 53.
    pub fn from_f64(x: f64, bits: usize) -> Self {
        BigReal {
            value: BigFloat::from_f64(x, bits.max(64)),
            bits,
        }
    }

    pub fn from_u64(x: u64, bits: usize) -> Self {
        BigReal {
            value: BigFloat::from_u64(x, bits.max(64)),
            bits,
        }
    }

    /// Exact u128 conversion via decimal round-trip (used for cycle counts).
    pub fn from_u128(x: u128, bits: usize) -> Self {
        Self::from_decimal(&x.to_string(), bits.max(192)).expect("u128 decimal")
    }

    /// Correctly rounded pi at the given precision.
    pub fn pi(bits: usize) -> Self {
        let v = CONSTS.with(|cc| cc.borrow_mut().pi(bits, RM));
        BigReal { value: v, bits }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn raw(&self) -> &BigFloat {
        &self.value
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        BigReal {
            value: self.value.mul(&rhs.value, self.bits, RM),
            bits: self.bits,
        }
    }

    pub fn div(&self, rhs: &Self) -> Self {
        BigReal {
            value: self.value.div(&rhs.value, self.bits, RM),
            bits: self.bits,
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        BigReal {
            value: self.value.add(&rhs.value, self.bits, RM),
            bits: self.bits,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        BigReal {
            value: self.value.sub(&rhs.value, self.bits, RM),
            bits: self.bits,
        }
    }

    pub fn neg(&self) -> Self {
        BigReal {
            value: self.value.neg(),
            bits: self.bits,
        }
    }

    pub fn abs(&self) -> Self {
        BigReal {
            value: self.value.abs(),
            bits: self.bits,
        }
    }

    pub fn powi(&self, n: usize) -> Self {
        BigReal {
            value: self.value.powi(n, self.bits, RM),
            bits: self.bits,
        }
    }

    pub fn sin(&self) -> Self {
        let v = CONSTS.with(|cc| self.value.sin(self.bits, RM, &mut cc.borrow_mut()));
        BigReal {
            value: v,
            bits: self.bits,
        }
    }

    pub fn cos(&self) -> Self {
        let v = CONSTS.with(|cc| self.value.cos(self.bits, RM, &mut cc.borrow_mut()));
        BigReal {
            value: v,
            bits: self.bits,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn compare(&self, rhs: &Self) -> Ordering {
        match self.value.cmp(&rhs.value) {
            Some(c) => match c {
                x if x < 0 => Ordering::Less,
                0 => Ordering::Equal,
                _ => Ordering::Greater,
            },
            None => Ordering::Equal,
        }
    }

    /// Nearest f64 (correctly rounded via decimal round-trip).
    pub fn to_f64(&self) -> f64 {
        if self.value.is_zero() {
            return 0.0;
        }
        format!("{}", self.value).parse::<f64>().unwrap_or(f64::NAN)
    }

    /// Full-precision decimal form; deterministic for report serialization.
    pub fn to_decimal_string(&self) -> String {
        format!("{}", self.value)
    }

    /// Change the stored working precision (rounds if shrinking).
    pub fn with_bits(&self, bits: usize) -> Self {
        let mut v = self.value.clone();
        v.set_precision(bits, RM).expect("set precision");
        BigReal { value: v, bits }
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// An angle held at extended precision, tracking the precision it was
/// accumulated at so wrap error bounds can be reported honestly.
#[derive(Debug, Clone)]
pub struct BigAngle {
    value: BigReal,
    precision_bits: usize,
}

impl BigAngle {
    pub fn new(value: BigReal) -> Self {
        let precision_bits = value.bits();
        BigAngle {
            value,
            precision_bits,
        }
    }

    pub fn from_f64(x: f64, precision_bits: usize) -> Self {
        BigAngle {
            value: BigReal::from_f64(x, precision_bits),
            precision_bits,
        }
    }

    pub fn value(&self) -> &BigReal {
        &self.value
    }

    pub fn precision_bits(&self) -> usize {
        self.precision_bits
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn to_decimal_string(&self) -> String {
        self.value.to_decimal_string()
    }
}

/// Result of reducing an angle into (-pi, pi].
#[derive(Debug, Clone)]
pub struct WrappedPhase {
    /// Reduced angle in (-pi, pi], full precision.
    pub wrapped: BigAngle,
    /// f64 view of the reduced angle.
    pub wrapped_f64: f64,
    /// Absolute error bound 2^(1-p) |value| implied by the accumulation precision.
    pub error_bound: f64,
}

/// Reduce `angle` into the half-open interval (-pi, pi].
///
/// The reduction runs at `precision_bits + magnitude + 64` working bits with a
/// correctly rounded pi, so the quotient subtraction itself is exact to well
/// below the reported `error_bound`. Values whose error bound exceeds
/// [`WRAP_ERROR_LIMIT`] are rejected; the caller must raise the accumulation
/// precision instead of trusting a scrambled phase.
pub fn wrap_phase(angle: &BigAngle) -> Result<WrappedPhase> {
    let v = angle.value().raw();
    if v.is_nan() || v.is_inf() {
        return Err(Error::NonFiniteAngle);
    }
    let p_in = angle.precision_bits();
    let magnitude_bits = v.exponent().unwrap_or(0).max(0) as usize;
    let p_work = p_in + magnitude_bits + 64;

    let value = angle.value().with_bits(p_work);
    let pi = BigReal::pi(p_work);
    let two_pi = pi.add(&pi);

    // q = round(value / 2pi); remainder lands in [-pi, pi] up to rounding.
    let q = BigReal {
        value: value.div(&two_pi).raw().round(0, RM),
        bits: p_work,
    };
    let mut r = value.sub(&q.mul(&two_pi));

    // Enforce the half-open convention (-pi, pi].
    if r.compare(&pi) == Ordering::Greater {
        r = r.sub(&two_pi);
    } else if r.compare(&pi.neg()) != Ordering::Greater {
        r = r.add(&two_pi);
    }

    let wrapped_f64 = r.to_f64();
    let abs_value = angle.to_f64().abs();
    let error_bound = if abs_value == 0.0 {
        0.0
    } else {
        abs_value * 2f64.powi(1 - p_in as i32)
    };
    if error_bound > WRAP_ERROR_LIMIT {
        return Err(Error::PrecisionFailure {
            bound: error_bound,
            limit: WRAP_ERROR_LIMIT,
        });
    }
    Ok(WrappedPhase {
        wrapped: BigAngle {
            value: r.with_bits(p_in),
            precision_bits: p_in,
        },
        wrapped_f64,
        error_bound,
    })
}
