//! Free-free Euler-Bernoulli beam modes.

use std::f64::consts::PI;

use super::params::MultiDofParams;
use crate::error::{Error, Result};

/// `1 - cosh(l) cos(l)`, the free-free frequency equation.
#[inline]
pub fn frequency_equation(lambda: f64) -> f64 {
    1.0 - lambda.cosh() * lambda.cos()
}

// Same roots as the frequency equation, divided through by -cosh so the
// magnitude stays O(1) for large arguments.
#[inline]
fn scaled(lambda: f64) -> f64 {
    lambda.cos() - 1.0 / lambda.cosh()
}

#[inline]
fn scaled_derivative(lambda: f64) -> f64 {
    -lambda.sin() + lambda.tanh() / lambda.cosh()
}

/// First `n` positive roots of `1 - cosh(l) cos(l) = 0`, ascending.
///
/// The k-th root lies in `(k pi, (k + 1) pi)`; each is found by safeguarded
/// Newton iteration inside that bracket and finally snapped to whichever
/// neighbouring float has the smallest residual.
pub fn beam_mode_roots(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| root_in_bracket(k as f64 * PI, (k + 1) as f64 * PI))
        .collect()
}

fn root_in_bracket(mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = scaled(lo);
    debug_assert!(f_lo * scaled(hi) < 0.0);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = scaled(x);
        if fx == 0.0 {
            break;
        }
        if (fx < 0.0) == (f_lo < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        let step = fx / scaled_derivative(x);
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x || hi - lo <= f64::EPSILON * x {
            break;
        }
        x = next;
    }
    polish(x)
}

fn polish(x: f64) -> f64 {
    let mut best = x;
    let mut best_r = frequency_equation(x).abs();
    let mut cand = x;
    for _ in 0..4 {
        cand = next_down(cand);
        let r = frequency_equation(cand).abs();
        if r < best_r {
            best = cand;
            best_r = r;
        }
    }
    cand = x;
    for _ in 0..4 {
        cand = next_up(cand);
        let r = frequency_equation(cand).abs();
        if r < best_r {
            best = cand;
            best_r = r;
        }
    }
    best
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// Natural circular frequencies `w_i = sqrt(EI beta_i^4 / rho)` and damping
/// ratios `xi_i = muI beta_i^4 / (2 rho w_i)` for the given roots, with
/// `passengers` spread uniformly along the carbody.
pub fn modal_frequencies(
    params: &MultiDofParams,
    roots: &[f64],
    passengers: u32,
) -> (Vec<f64>, Vec<f64>) {
    let len = params.carbody_length;
    let rho = params.loaded_carbody_mass(passengers) / len;
    roots
        .iter()
        .map(|&lambda| {
            let beta4 = (lambda / len).powi(4);
            let omega = (params.bending_stiffness * beta4 / rho).sqrt();
            let xi = params.internal_damping * beta4 / (2.0 * rho * omega);
            (omega, xi)
        })
        .unzip()
}

/// Modal description of the carbody: two rigid modes (bounce `Y_1 = 1`, pitch
/// `Y_2 = L/2 - x`) followed by the flexible bending modes `i = 3, 4, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalBasis {
    pub length: f64,
    /// `lambda_i` for the flexible modes, ascending.
    pub roots: Vec<f64>,
    /// `beta_i = lambda_i / L`, 1/m.
    pub wavenumbers: Vec<f64>,
    /// rad/s
    pub natural_frequencies: Vec<f64>,
    pub damping_ratios: Vec<f64>,
    // (cosh l - cos l) / (sinh l - sin l) per flexible mode
    shape_ratio: Vec<f64>,
}

impl ModalBasis {
    pub fn new(params: &MultiDofParams, passengers: u32) -> Result<Self> {
        params.validate()?;
        let roots = beam_mode_roots(params.n_flexible_modes);
        let (natural_frequencies, damping_ratios) = modal_frequencies(params, &roots, passengers);
        let length = params.carbody_length;
        Ok(Self {
            length,
            wavenumbers: roots.iter().map(|l| l / length).collect(),
            shape_ratio: roots
                .iter()
                .map(|&l| (l.cosh() - l.cos()) / (l.sinh() - l.sin()))
                .collect(),
            roots,
            natural_frequencies,
            damping_ratios,
        })
    }

    pub fn n_flexible(&self) -> usize {
        self.roots.len()
    }

    /// Total mode count `n` (rigid + flexible).
    pub fn n_modes(&self) -> usize {
        2 + self.roots.len()
    }

    /// Shape `Y_i(x)` for 1-based mode number `i`.
    pub fn mode_shape(&self, mode: usize, x: f64) -> Result<f64> {
        if !(0.0..=self.length).contains(&x) {
            return Err(Error::invalid(
                "x",
                format!("position {x} outside carbody [0, {}]", self.length),
            ));
        }
        match mode {
            1 => Ok(1.0),
            2 => Ok(self.length / 2.0 - x),
            i if i >= 3 && i - 3 < self.roots.len() => Ok(self.flexible_shape(i - 3, x)),
            _ => Err(Error::invalid(
                "mode",
                format!("mode {mode} not in 1..={}", self.n_modes()),
            )),
        }
    }

    /// Flexible shape by 0-based flexible index (mode `idx + 3`), unchecked.
    pub(crate) fn flexible_shape(&self, idx: usize, x: f64) -> f64 {
        let bx = self.wavenumbers[idx] * x;
        bx.cosh() + bx.cos() - self.shape_ratio[idx] * (bx.sinh() + bx.sin())
    }

    /// Displacement participation `[1, L/2 - x, Y_3(x), ..., Y_n(x)]`.
    pub(crate) fn participation(&self, x: f64) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.n_modes());
        row.push(1.0);
        row.push(self.length / 2.0 - x);
        row.extend((0..self.n_flexible()).map(|i| self.flexible_shape(i, x)));
        row
    }
}
