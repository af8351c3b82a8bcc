//! Oracle behavior across drive strengths and truncations.

use cavity_squeeze::analytic;
use cavity_squeeze::liouville::{
    build_liouvillian, kernel_dimension, HilbertSpace, MotionMode, OracleCurves,
};
use cavity_squeeze::params::{preset, PresetName};
use cavity_squeeze::units::mhz_to_rad_us;

/// sup-norm deviation between the oracle autocorrelation and the analytic
/// regression form, relative to the curve scale.
fn sup_deviation(eps_mhz: f64) -> f64 {
    let pre = preset(PresetName::ConfigA);
    let params = pre.params.with_epsilon(mhz_to_rad_us(eps_mhz));
    let space = HilbertSpace::new(8).unwrap();
    let curves = OracleCurves::compute(&params, space, MotionMode::DecayChannel, 1.2, 600).unwrap();
    let numeric = curves.quadrature_autocorrelation(0.0);
    let reference =
        analytic::quadrature_autocorrelation(&params, 0.0, &curves.tau_us, true).unwrap();
    let scale = reference.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    numeric
        .values
        .iter()
        .zip(&reference.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max)
        / scale
}

#[test]
fn weak_drive_limit_of_the_full_autocorrelation() {
    // The full quadrature autocorrelation (incoherent term included)
    // converges to the weak-excitation form as ε → 0.
    let d_tiny = sup_deviation(0.01);
    let d_weak = sup_deviation(0.1);
    let d_strong = sup_deviation(1.0);
    assert!(d_tiny < 1e-3, "ε/2π = 0.01 MHz: {d_tiny:.2e}");
    assert!(d_weak < 1e-3, "ε/2π = 0.1 MHz: {d_weak:.2e}");
    assert!(d_strong > d_weak, "higher drive must deviate more");
    assert!(d_strong < 0.05, "ε/2π = 1 MHz: {d_strong:.2e}");
}

#[test]
fn liouvillian_kernel_is_one_dimensional_at_n6() {
    let pre = preset(PresetName::ConfigA);
    let params = pre.params.with_epsilon(mhz_to_rad_us(1.0));
    let l = build_liouvillian(&params, HilbertSpace::new(6).unwrap(), MotionMode::Dephasing)
        .unwrap();
    assert_eq!(kernel_dimension(&l, 1e-10), 1);
}
