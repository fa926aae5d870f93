//! Property tests for the scalar layers (angle wrapping, readout algebra,
//! scale identities). Matrix-algebra properties live next to their modules;
//! these cover the surfaces where random inputs earn their keep.

use proptest::prelude::*;

use gupsim::bounds::{delta_population, readout_population};
use gupsim::units::{oscillator_scales, pinned_constants, wrap_phase, BigAngle, BigReal};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// wrap(x + 2 pi k) = wrap(x) for k up to 1e15, checked at 320 bits
    /// against the straight reduction of x.
    #[test]
    fn wrap_invariant_under_two_pi_shifts(
        x in -1000.0f64..1000.0,
        k in 0u64..1_000_000_000_000_000,
    ) {
        let bits = 320;
        let base = wrap_phase(&BigAngle::from_f64(x, bits)).unwrap();
        let two_pi = BigReal::pi(1088).add(&BigReal::pi(1088));
        let shifted = BigReal::from_f64(x, 1088)
            .add(&two_pi.mul(&BigReal::from_u64(k, 1088)));
        let w = wrap_phase(&BigAngle::new(shifted)).unwrap();
        prop_assert!(
            (w.wrapped_f64 - base.wrapped_f64).abs() < 1e-9,
            "x={x} k={k}: {} vs {}", w.wrapped_f64, base.wrapped_f64
        );
    }

    /// The wrapped angle always lands in (-pi, pi].
    #[test]
    fn wrap_range(x in -1e9f64..1e9) {
        let w = wrap_phase(&BigAngle::from_f64(x, 256)).unwrap();
        prop_assert!(w.wrapped_f64 <= std::f64::consts::PI + 1e-15);
        prop_assert!(w.wrapped_f64 > -std::f64::consts::PI - 1e-15);
    }

    /// x0 p0 = hbar/2 across twelve orders of magnitude in mass and frequency.
    #[test]
    fn scale_product_identity(
        log_m in -27.0f64..-15.0,
        log_nu in 0.0f64..12.0,
    ) {
        let k = pinned_constants();
        let s = oscillator_scales(10f64.powf(log_m), 10f64.powf(log_nu), &k).unwrap();
        prop_assert!((s.x0 * s.p0 / (k.hbar / 2.0) - 1.0).abs() < 1e-12);
    }

    /// Readout population is even in phi and 2 pi periodic.
    #[test]
    fn readout_symmetry(phi in -3.1f64..3.1) {
        let p = readout_population(phi);
        prop_assert!((readout_population(-phi) - p).abs() < 1e-12);
        prop_assert!((readout_population(phi + 2.0 * std::f64::consts::PI) - p).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    /// Cancellation-safe population deviation agrees with the naive difference
    /// of squares evaluated at 96-bit precision, to 1e-12 absolute, for
    /// |dphi| >= 1e-8.
    #[test]
    fn delta_population_reference(
        phi0 in -3.1f64..3.1,
        log_dphi in -8.0f64..-2.0,
    ) {
        let dphi = 10f64.powf(log_dphi);
        let got = delta_population(phi0, dphi);
        let bits = 96;
        let p0 = BigReal::from_f64(phi0, bits);
        let dp = BigReal::from_f64(dphi, bits);
        let half = BigReal::from_f64(0.5, bits);
        let s1 = p0.add(&dp).mul(&half).sin();
        let s0 = p0.mul(&half).sin();
        let direct = s1.mul(&s1).sub(&s0.mul(&s0)).to_f64();
        prop_assert!((got - direct).abs() < 1e-12, "{got} vs {direct}");
    }
}

/// x0 p0 = hbar/2 across 1000 seeded (mass, frequency) pairs spanning twelve
/// orders of magnitude in each.
#[test]
fn scale_product_identity_thousand_pairs() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let k = pinned_constants();
    for _ in 0..1000 {
        let mass = 10f64.powf(rng.gen_range(-27.0..-15.0));
        let nu = 10f64.powf(rng.gen_range(0.0..12.0));
        let s = oscillator_scales(mass, nu, &k).unwrap();
        assert!(
            (s.x0 * s.p0 / (k.hbar / 2.0) - 1.0).abs() < 1e-12,
            "mass={mass} nu={nu}"
        );
    }
}

/// The integer identity behind the N-cycle deformation sum: the pulse-index
/// progression sums to 2N(4N-1), exact in integer arithmetic up to N = 1e10.
#[test]
fn progression_sum_identity_exact() {
    for n in [1u128, 2, 3, 10, 1_000, 1_000_000, 10_000_000_000] {
        let four_n = 4 * n;
        let gauss = four_n * (four_n - 1) / 2;
        assert_eq!(gauss, 2 * n * (4 * n - 1), "N = {n}");
    }
    // and by brute sum for small N
    for n in 1u128..=64 {
        let sum: u128 = (0..4 * n).sum();
        assert_eq!(sum, 2 * n * (4 * n - 1));
    }
}
