use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Two-mass suspension model: carbody on a bogie on a single track contact.
///
/// Symbols follow the two-mass equations of motion: carbody `m_c`, bogie `m_b`,
/// carbody-bogie spring/damper `k_c`/`c_c`, bogie-track spring/damper `k_b`/`c_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoDofParams {
    /// `m_c`, kg
    pub carbody_mass: f64,
    /// `m_b`, kg
    pub bogie_mass: f64,
    /// `k_c`, N/m
    pub secondary_stiffness: f64,
    /// `k_b`, N/m
    pub primary_stiffness: f64,
    /// `c_c`, N s/m
    pub secondary_damping: f64,
    /// `c_b`, N s/m
    pub primary_damping: f64,
    /// kg
    pub mass_per_passenger: f64,
}

impl Default for TwoDofParams {
    fn default() -> Self {
        Self {
            carbody_mass: 38_000.0,
            bogie_mass: 3_000.0,
            secondary_stiffness: 0.78e6,
            primary_stiffness: 0.55e6,
            // As tabulated; 30e3 is the physically plausible alternative.
            secondary_damping: 30e6,
            primary_damping: 60e3,
            mass_per_passenger: 70.0,
        }
    }
}

impl TwoDofParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("two_dof.carbody_mass", self.carbody_mass)?;
        ensure_positive("two_dof.bogie_mass", self.bogie_mass)?;
        ensure_positive("two_dof.secondary_stiffness", self.secondary_stiffness)?;
        ensure_positive("two_dof.primary_stiffness", self.primary_stiffness)?;
        ensure_positive("two_dof.secondary_damping", self.secondary_damping)?;
        ensure_positive("two_dof.primary_damping", self.primary_damping)?;
        ensure_positive("two_dof.mass_per_passenger", self.mass_per_passenger)
    }

    /// Carbody mass with `passengers` on board.
    pub fn loaded_carbody_mass(&self, passengers: u32) -> f64 {
        self.carbody_mass + f64::from(passengers) * self.mass_per_passenger
    }
}

/// Flexible carbody (uniform Euler-Bernoulli beam) on two bogies with
/// primary and secondary suspension, vertical plane only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiDofParams {
    /// kg
    pub carbody_mass: f64,
    /// kg m^2
    pub carbody_pitch_inertia: f64,
    /// EI, N m^2
    pub bending_stiffness: f64,
    /// mu*I, N m^2 s
    pub internal_damping: f64,
    /// m
    pub carbody_length: f64,
    /// kg, per bogie
    pub bogie_mass: f64,
    /// kg m^2, per bogie
    pub bogie_pitch_inertia: f64,
    /// Half the distance between bogie centres, m.
    pub half_bogie_distance: f64,
    /// Half the bogie wheelbase, m.
    pub half_wheelbase: f64,
    /// Per wheelset, N/m
    pub primary_stiffness: f64,
    /// Per bogie, N/m
    pub secondary_stiffness: f64,
    /// Per wheelset, N s/m
    pub primary_damping: f64,
    /// Per bogie, N s/m
    pub secondary_damping: f64,
    /// kg
    pub mass_per_passenger: f64,
    /// Number of bending modes kept beyond bounce and pitch.
    pub n_flexible_modes: usize,
}

impl Default for MultiDofParams {
    fn default() -> Self {
        Self {
            carbody_mass: 28_000.0,
            carbody_pitch_inertia: 1.3e6,
            bending_stiffness: 4.987e9,
            internal_damping: 1.936e6,
            carbody_length: 24.5,
            bogie_mass: 2_500.0,
            bogie_pitch_inertia: 1_500.0,
            half_bogie_distance: 8.75,
            half_wheelbase: 1.25,
            primary_stiffness: 2.4e6,
            secondary_stiffness: 0.5e6,
            // As tabulated; 30e3 is the physically plausible alternative.
            primary_damping: 30e6,
            secondary_damping: 60e3,
            mass_per_passenger: 70.0,
            n_flexible_modes: 4,
        }
    }
}

impl MultiDofParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("multi_dof.carbody_mass", self.carbody_mass),
            (
                "multi_dof.carbody_pitch_inertia",
                self.carbody_pitch_inertia,
            ),
            ("multi_dof.bending_stiffness", self.bending_stiffness),
            ("multi_dof.internal_damping", self.internal_damping),
            ("multi_dof.carbody_length", self.carbody_length),
            ("multi_dof.bogie_mass", self.bogie_mass),
            ("multi_dof.bogie_pitch_inertia", self.bogie_pitch_inertia),
            ("multi_dof.half_bogie_distance", self.half_bogie_distance),
            ("multi_dof.half_wheelbase", self.half_wheelbase),
            ("multi_dof.primary_stiffness", self.primary_stiffness),
            ("multi_dof.secondary_stiffness", self.secondary_stiffness),
            ("multi_dof.primary_damping", self.primary_damping),
            ("multi_dof.secondary_damping", self.secondary_damping),
            ("multi_dof.mass_per_passenger", self.mass_per_passenger),
        ];
        for (name, v) in fields {
            ensure_positive(name, v)?;
        }
        if self.half_bogie_distance >= self.carbody_length / 2.0 {
            return Err(Error::invalid(
                "multi_dof.half_bogie_distance",
                "must be less than half the carbody length",
            ));
        }
        if self.half_wheelbase >= self.half_bogie_distance {
            return Err(Error::invalid(
                "multi_dof.half_wheelbase",
                "must be less than half_bogie_distance",
            ));
        }
        Ok(())
    }

    /// `(l_1, l_2)`: secondary suspension attachment points measured from the
    /// carbody end at `x = 0`.
    pub fn attachment_points(&self) -> (f64, f64) {
        let half = self.carbody_length / 2.0;
        (
            half - self.half_bogie_distance,
            half + self.half_bogie_distance,
        )
    }

    /// Wheel contact positions `[l_1 - l_w, l_1 + l_w, l_2 - l_w, l_2 + l_w]`.
    pub fn wheel_positions(&self) -> [f64; 4] {
        let (l1, l2) = self.attachment_points();
        let lw = self.half_wheelbase;
        [l1 - lw, l1 + lw, l2 - lw, l2 + lw]
    }

    /// Carbody mass with passengers spread uniformly along the beam.
    pub fn loaded_carbody_mass(&self, passengers: u32) -> f64 {
        self.carbody_mass + f64::from(passengers) * self.mass_per_passenger
    }

    /// Factor applied to mass per length and pitch inertia under load.
    pub fn load_ratio(&self, passengers: u32) -> f64 {
        self.loaded_carbody_mass(passengers) / self.carbody_mass
    }
}
