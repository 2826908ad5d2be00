//! Unit conventions.
//!
//! Inputs are given in cm⁻¹ and femtoseconds. Internally ħ = 1 and every
//! energy is an angular frequency in rad/fs.

use std::f64::consts::PI;

/// Speed of light in cm/fs.
pub const SPEED_OF_LIGHT_CM_PER_FS: f64 = 2.997_924_58e-5;

/// Boltzmann constant in cm⁻¹/K.
pub const BOLTZMANN_CM_PER_K: f64 = 0.695_034_800_4;

/// Wavenumber (cm⁻¹) to angular frequency (rad/fs).
#[inline]
pub fn cm_to_rad_fs(wavenumber: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT_CM_PER_FS * wavenumber
}

/// Angular frequency (rad/fs) to wavenumber (cm⁻¹).
#[inline]
pub fn rad_fs_to_cm(omega: f64) -> f64 {
    omega / (2.0 * PI * SPEED_OF_LIGHT_CM_PER_FS)
}

/// Inverse temperature in internal units (fs/rad) for a temperature in kelvin.
pub fn beta_from_kelvin(temperature: f64) -> f64 {
    1.0 / cm_to_rad_fs(BOLTZMANN_CM_PER_K * temperature)
}

/// `coth(x/2)` with the large-argument guard used for bath occupations.
#[inline]
pub fn coth_half(x: f64) -> f64 {
    if x > 50.0 {
        1.0
    } else {
        1.0 / (0.5 * x).tanh()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_round_trip() {
        let w = cm_to_rad_fs(12_500.0);
        assert!((rad_fs_to_cm(w) - 12_500.0).abs() < 1e-9);
        // 1 cm⁻¹ ≈ 1.8836e-4 rad/fs
        assert!((cm_to_rad_fs(1.0) - 1.883_651_567e-4).abs() < 1e-12);
    }

    #[test]
    fn room_temperature_beta() {
        // kT at 300 K is about 208.5 cm⁻¹
        let beta = beta_from_kelvin(300.0);
        let kt_cm = rad_fs_to_cm(1.0 / beta);
        assert!((kt_cm - 208.51).abs() < 0.01);
    }

    #[test]
    fn coth_guard() {
        assert_eq!(coth_half(120.0), 1.0);
        assert!((coth_half(2.0) - 1.0 / 1f64.tanh()).abs() < 1e-15);
    }
}
