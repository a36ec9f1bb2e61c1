//! Closed-form carbody/track transfer function of the two-mass model.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::params::TwoDofParams;

/// Polynomial coefficients `(numerator, denominator)` of `Z_c / Z_o`, highest
/// power first, for carbody mass `mc`.
///
/// Obtained by eliminating the bogie displacement from the two equations of
/// motion:
///
/// ```text
///            c_c c_b s^2 + (c_c k_b + c_b k_c) s + k_c k_b
/// H(s) = -----------------------------------------------------------------
///        m_b m_c s^4 + (c_c m_b + (c_c + c_b) m_c) s^3
///          + (c_c c_b + k_c m_b + (k_c + k_b) m_c) s^2
///          + (c_c k_b + c_b k_c) s + k_c k_b
/// ```
pub fn two_dof_coefficients(p: &TwoDofParams, mc: f64) -> ([f64; 3], [f64; 5]) {
    let (mb, kc, kb, cc, cb) = (
        p.bogie_mass,
        p.secondary_stiffness,
        p.primary_stiffness,
        p.secondary_damping,
        p.primary_damping,
    );
    let num = [cc * cb, cc * kb + cb * kc, kc * kb];
    let den = [
        mb * mc,
        cc * mb + (cc + cb) * mc,
        cc * cb + kc * mb + (kc + kb) * mc,
        cc * kb + cb * kc,
        kc * kb,
    ];
    (num, den)
}

fn horner(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// `H(s)` at an arbitrary complex `s` with `passengers` on board.
pub fn two_dof_transfer_at(p: &TwoDofParams, passengers: u32, s: Complex64) -> Complex64 {
    let (num, den) = two_dof_coefficients(p, p.loaded_carbody_mass(passengers));
    horner(&num, s) / horner(&den, s)
}

/// Carbody/track displacement ratio at `f` Hz (`s = j 2 pi f`).
pub fn two_dof_transfer(p: &TwoDofParams, passengers: u32, f: f64) -> Complex64 {
    two_dof_transfer_at(p, passengers, Complex64::new(0.0, 2.0 * PI * f))
}
