//! Flexible carbody on two bogies: matrix assembly and harmonic response.
//!
//! State ordering is `[z_b, theta_b, q_3..q_n, z_t1, z_t2, theta_t1, theta_t2]`.
//! Carbody rows are scaled so that `M`, `C` and `K` come out symmetric: the
//! modal equations are multiplied through by the carbody mass, and every
//! suspension element contributes `k g g^T` where `g` maps the state to the
//! element's relative displacement.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::beam::ModalBasis;
use super::params::MultiDofParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub mass: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// Wheel displacement input matrix, `(n + 4) x 4`.
    pub d_w: DMatrix<f64>,
    /// Wheel velocity input matrix, `(n + 4) x 4`.
    pub d_dw: DMatrix<f64>,
    /// Modal basis of the loaded carbody.
    pub basis: ModalBasis,
    /// Wheel contact positions along the carbody, m.
    pub wheel_positions: [f64; 4],
}

impl SystemMatrices {
    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    /// Index of the first bogie coordinate (`z_t1`).
    pub fn bogie_offset(&self) -> usize {
        self.basis.n_modes()
    }
}

/// How the single track profile reaches the four wheels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WheelInput {
    /// All wheels displaced in phase.
    Coherent,
    /// Each wheel sees the profile delayed by its position over `speed` (m/s).
    Delayed { speed: f64 },
}

impl WheelInput {
    fn phases(&self, wheel_positions: &[f64; 4], omega: f64) -> [Complex64; 4] {
        match *self {
            WheelInput::Coherent => [Complex64::new(1.0, 0.0); 4],
            WheelInput::Delayed { speed } => {
                wheel_positions.map(|x| Complex64::from_polar(1.0, -omega * x / speed))
            }
        }
    }
}

fn add_outer(target: &mut DMatrix<f64>, coeff: f64, g: &DVector<f64>) {
    *target += g * g.transpose() * coeff;
}

/// Builds `M`, `C`, `K`, `D_w`, `D_dw` for the carbody carrying `passengers`.
pub fn assemble_system(params: &MultiDofParams, passengers: u32) -> Result<SystemMatrices> {
    let basis = ModalBasis::new(params, passengers)?;
    let n = basis.n_modes();
    let dim = n + 4;
    let carbody_mass = params.loaded_carbody_mass(passengers);
    let pitch_inertia = params.carbody_pitch_inertia * params.load_ratio(passengers);

    let mut mass = DMatrix::zeros(dim, dim);
    let mut damping = DMatrix::zeros(dim, dim);
    let mut stiffness = DMatrix::zeros(dim, dim);

    mass[(0, 0)] = carbody_mass;
    mass[(1, 1)] = pitch_inertia;
    for (i, (&w, &xi)) in basis
        .natural_frequencies
        .iter()
        .zip(&basis.damping_ratios)
        .enumerate()
    {
        let r = 2 + i;
        mass[(r, r)] = carbody_mass;
        damping[(r, r)] = carbody_mass * 2.0 * xi * w;
        stiffness[(r, r)] = carbody_mass * w * w;
    }
    for b in 0..2 {
        mass[(n + b, n + b)] = params.bogie_mass;
        mass[(n + 2 + b, n + 2 + b)] = params.bogie_pitch_inertia;
    }

    // secondary suspension: z(l_a) - z_ta
    let (l1, l2) = params.attachment_points();
    for (a, la) in [l1, l2].into_iter().enumerate() {
        let mut g = DVector::zeros(dim);
        for (j, v) in basis.participation(la).into_iter().enumerate() {
            g[j] = v;
        }
        g[n + a] = -1.0;
        add_outer(&mut stiffness, params.secondary_stiffness, &g);
        add_outer(&mut damping, params.secondary_damping, &g);
    }

    // primary suspension: z_t -/+ l_w theta_t - z_w
    let mut d_w = DMatrix::zeros(dim, 4);
    let mut d_dw = DMatrix::zeros(dim, 4);
    let lw = params.half_wheelbase;
    for wheel in 0..4 {
        let bogie = wheel / 2;
        let lever = if wheel % 2 == 0 { -lw } else { lw };
        let mut h = DVector::zeros(dim);
        h[n + bogie] = 1.0;
        h[n + 2 + bogie] = lever;
        add_outer(&mut stiffness, params.primary_stiffness, &h);
        add_outer(&mut damping, params.primary_damping, &h);
        d_w.set_column(wheel, &(&h * params.primary_stiffness));
        d_dw.set_column(wheel, &(&h * params.primary_damping));
    }

    Ok(SystemMatrices {
        mass,
        damping,
        stiffness,
        d_w,
        d_dw,
        basis,
        wheel_positions: params.wheel_positions(),
    })
}

/// Carbody vertical acceleration at `x` per unit track displacement, at `f` Hz.
///
/// Solves `(M s^2 + C s + K) Y = (D_w + s D_dw) d` with `d` the wheel phase
/// vector, projects onto `z(x) = z_b + (L/2 - x) theta_b + sum Y_i(x) q_i` and
/// multiplies by `s^2`.
pub fn frequency_response(
    sys: &SystemMatrices,
    input: WheelInput,
    x: f64,
    f: f64,
) -> Result<Complex64> {
    let len = sys.basis.length;
    if !(0.0..=len).contains(&x) {
        return Err(Error::invalid(
            "location",
            format!("{x} outside [0, {len}]"),
        ));
    }
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::invalid("frequency", format!("must be > 0, got {f}")));
    }
    let omega = 2.0 * PI * f;
    let s = Complex64::new(0.0, omega);
    let dim = sys.dim();

    let dynamic = DMatrix::from_fn(dim, dim, |r, c| {
        s * s * sys.mass[(r, c)] + s * sys.damping[(r, c)] + sys.stiffness[(r, c)]
    });
    let phases = input.phases(&sys.wheel_positions, omega);
    let rhs = DVector::from_fn(dim, |r, _| {
        (0..4)
            .map(|w| (sys.d_w[(r, w)] + s * sys.d_dw[(r, w)]) * phases[w])
            .sum::<Complex64>()
    });
    let y = dynamic
        .lu()
        .solve(&rhs)
        .filter(|y| y.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
        .ok_or(Error::SingularSystem { frequency_hz: f })?;

    let displacement: Complex64 = sys
        .basis
        .participation(x)
        .iter()
        .zip(y.iter())
        .map(|(p, v)| v * *p)
        .sum();
    Ok(s * s * displacement)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> (MultiDofParams, SystemMatrices) {
        let p = MultiDofParams::default();
        let sys = assemble_system(&p, 0).unwrap();
        (p, sys)
    }

    #[test]
    fn rigid_only_system_is_six_by_six() {
        let p = MultiDofParams {
            n_flexible_modes: 0,
            ..Default::default()
        };
        let sys = assemble_system(&p, 0).unwrap();
        assert_eq!(sys.dim(), 6);
        assert_eq!(sys.d_w.shape(), (6, 4));
        let (_, sys) = defaults();
        assert_eq!(sys.dim(), 10);
    }

    #[test]
    fn mass_entry_and_bogie_stiffness_diagonal() {
        let p = MultiDofParams::default();
        let sys = assemble_system(&p, 100).unwrap();
        assert_eq!(sys.mass[(0, 0)], 28_000.0 + 100.0 * 70.0);
        let zt1 = sys.bogie_offset();
        let expected = p.secondary_stiffness + 2.0 * p.primary_stiffness;
        assert!((sys.stiffness[(zt1, zt1)] - expected).abs() < 1e-6);
        // pitch inertia scales with the load
        assert!((sys.mass[(1, 1)] - 1.3e6 * 35_000.0 / 28_000.0).abs() < 1e-6);
    }

    #[test]
    fn matrices_are_symmetric_and_mass_is_positive_definite() {
        let (_, sys) = defaults();
        for m in [&sys.mass, &sys.damping, &sys.stiffness] {
            assert!((m - m.transpose()).amax() < 1e-6 * m.amax());
        }
        assert!(sys.mass.clone().cholesky().is_some());
        let eig = sys.stiffness.clone().symmetric_eigen();
        let scale = sys.stiffness.amax();
        assert!(eig.eigenvalues.iter().all(|&e| e > -1e-9 * scale));
    }

    #[test]
    fn zero_input_gives_zero_response() {
        let (_, mut sys) = defaults();
        sys.d_w.fill(0.0);
        sys.d_dw.fill(0.0);
        let r = frequency_response(&sys, WheelInput::Coherent, 5.0, 3.0).unwrap();
        assert_eq!(r.norm(), 0.0);
    }

    #[test]
    fn response_is_linear_in_input() {
        let (p, sys) = defaults();
        let mut doubled = sys.clone();
        doubled.d_w *= 2.0;
        doubled.d_dw *= 2.0;
        let input = WheelInput::Delayed { speed: 13.9 };
        for &f in &[0.3, 1.0, 4.0, 11.0, 30.0] {
            let a = frequency_response(&sys, input, p.carbody_length / 2.0, f).unwrap();
            let b = frequency_response(&doubled, input, p.carbody_length / 2.0, f).unwrap();
            assert!((b - a * 2.0).norm() < 1e-9 * a.norm(), "f={f}");
        }
    }

    #[test]
    fn mirror_positions_match_without_delays() {
        let (p, sys) = defaults();
        let l = p.carbody_length;
        for &x in &[0.0, 2.0, l / 4.0, 9.1] {
            for &f in &[0.7, 1.2, 9.5, 12.0, 40.0] {
                let a = frequency_response(&sys, WheelInput::Coherent, x, f).unwrap();
                let b = frequency_response(&sys, WheelInput::Coherent, l - x, f).unwrap();
                assert!(
                    (a.norm() - b.norm()).abs() < 1e-7 * a.norm().max(1e-12),
                    "x={x} f={f}"
                );
            }
        }
    }

    #[test]
    fn rejects_out_of_range_location_and_frequency() {
        let (_, sys) = defaults();
        assert!(frequency_response(&sys, WheelInput::Coherent, -1.0, 1.0).is_err());
        assert!(frequency_response(&sys, WheelInput::Coherent, 1.0, 0.0).is_err());
    }

    #[test]
    fn singular_system_names_frequency() {
        let (_, mut sys) = defaults();
        sys.mass.fill(0.0);
        sys.damping.fill(0.0);
        sys.stiffness.fill(0.0);
        let err = frequency_response(&sys, WheelInput::Coherent, 1.0, 2.5).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { frequency_hz } if frequency_hz == 2.5));
    }

    // Rigid bogies following the wheels with a stiff rigid-body carbody limit:
    // at very low frequency the whole car follows the track, so the
    // displacement transmissibility tends to one.
    #[test]
    fn quasi_static_limit_follows_track() {
        let (p, sys) = defaults();
        let f = 1e-3;
        let acc =
            frequency_response(&sys, WheelInput::Coherent, p.carbody_length / 2.0, f).unwrap();
        let w = 2.0 * PI * f;
        let disp = -acc / (w * w);
        assert!((disp - Complex64::new(1.0, 0.0)).norm() < 1e-3, "{disp}");
    }
}
