//! Scalar constants of the construction and their algebraic relations.
//!
//! Everything here is closed form: the cubic root `gamma`, the factor
//! coefficients `a`, `b`, the hyperbolic constants `mu`, `kappa`, the
//! rotation constant `alpha`, and the radii derived from the spectrum of
//! the quadratic forms.

use crate::error::{Error, Result};
use serde::Serialize;

/// All scalar constants of the construction.
///
/// Immutable after construction; cheap to copy and safe to share.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModelParams {
    /// Unique real root of `P(T) = T^3 + T^2 + T - 1/3`.
    pub gamma: f64,
    /// `a = gamma + 1`.
    pub a: f64,
    /// `b = gamma^2 + gamma + 1 = 1/(3 gamma)`.
    pub b: f64,
    /// `mu = sqrt(1 + gamma^2)`.
    pub mu: f64,
    /// `kappa = (mu + 1)/(mu - 1)`.
    pub kappa: f64,
    /// `alpha = tan(pi/8) = sqrt(2) - 1`.
    pub alpha: f64,
    /// Smaller eigenvalue of the quadratic-form matrix `[[1, a/2], [a/2, b]]`.
    pub lambda_min: f64,
    /// Larger eigenvalue of the same matrix.
    pub lambda_max: f64,
    /// Largest radius with both quadratic forms <= 1/2 on the closed ball.
    pub r_phi_half: f64,
    /// Smallest radius with both forms >= 1 outside the ball.
    pub r_outer: f64,
    /// Early-exit radius for the objective evaluator. A conservative
    /// default here; refined at startup by `objective::calibrate_r_core`.
    pub r_core: f64,
    /// Half-width of the working square.
    pub r_domain: f64,
}

/// The cubic `P(T) = T^3 + T^2 + T - 1/3`.
pub fn cubic(t: f64) -> f64 {
    ((t + 1.0) * t + 1.0) * t - 1.0 / 3.0
}

/// Derivative `P'(T) = 3T^2 + 2T + 1`.
pub fn cubic_deriv(t: f64) -> f64 {
    (3.0 * t + 2.0) * t + 1.0
}

impl ModelParams {
    /// Compute every constant in closed form.
    ///
    /// `gamma` comes from Cardano's expression and is then polished by a
    /// single Newton step on `P`, which removes the cube-root rounding.
    pub fn compute() -> Self {
        let s = 6.0 * 2.0_f64.sqrt();
        let cardano = ((s + 8.0).cbrt() - (s - 8.0).cbrt() - 1.0) / 3.0;
        let gamma = cardano - cubic(cardano) / cubic_deriv(cardano);

        let a = gamma + 1.0;
        let b = 1.0 / (3.0 * gamma);
        let mu = (1.0 + gamma * gamma).sqrt();
        let kappa = (mu + 1.0) / (mu - 1.0);
        let alpha = 2.0_f64.sqrt() - 1.0;

        // Spectrum of [[1, a/2], [a/2, b]]; the second form has the same
        // eigenvalues (it is the first one conjugated by a reflection).
        let trace = 1.0 + b;
        let det = b - a * a / 4.0;
        let disc = (trace * trace - 4.0 * det).sqrt();
        let lambda_max = (trace + disc) / 2.0;
        let lambda_min = (trace - disc) / 2.0;

        let r_phi_half = (0.5 / lambda_max).sqrt();
        let r_outer = (1.0 / lambda_min).sqrt();

        ModelParams {
            gamma,
            a,
            b,
            mu,
            kappa,
            alpha,
            lambda_min,
            lambda_max,
            r_phi_half,
            // Provisional value matching the calibration's starting radius
            // with its safety factor already applied.
            r_core: 0.25 * r_phi_half,
            r_outer,
            r_domain: 2.0,
        }
    }

    /// Same parameters with a replacement early-exit radius.
    pub fn with_r_core(mut self, r_core: f64) -> Self {
        self.r_core = r_core;
        self
    }

    /// Cardano's expression for `gamma` without the Newton polish.
    pub fn gamma_cardano() -> f64 {
        let s = 6.0 * 2.0_f64.sqrt();
        ((s + 8.0).cbrt() - (s - 8.0).cbrt() - 1.0) / 3.0
    }
}

/// Radial bounds of the level curve `{g = level}` of the quartic invariant
/// `g = 3x^4 + 4x^3y + 6x^2y^2 - 4xy^3 + 3y^4`.
///
/// On the circle of radius `r`, `g = r^4 (3 + sin 4t)`, so the level curve
/// has Euclidean norm within `[(level/4)^{1/4}, (level/2)^{1/4}]`, both
/// bounds attained.
pub fn quartic_level_bounds(level: f64) -> Result<(f64, f64)> {
    if level <= 0.0 || level.is_nan() {
        return Err(Error::NonpositiveLevel(level));
    }
    Ok(((level / 4.0).powf(0.25), (level / 2.0).powf(0.25)))
}
