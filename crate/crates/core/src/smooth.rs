//! The transition function `phi` and its building block `rho`.
//!
//! `phi` is constant 1 on [0, 1/2], equals `2t` on [1, inf), and blends
//! smoothly in between through `phi(t) = 1 + (2t - 1) rho(2t - 1)`.

/// Smooth step `rho(u) = e^{-1/u} / (e^{-1/u} + e^{-1/(1-u)})` on (0, 1),
/// extended by continuity to 0 below and 1 above.
pub fn rho(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    // Logistic form: overflow of the exponential saturates to 0 or 1.
    1.0 / (1.0 + (1.0 / u - 1.0 / (1.0 - u)).exp())
}

/// Derivative of `rho`; zero outside (0, 1).
pub fn rho_prime(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let r = rho(u);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    let iu = 1.0 / u;
    let iv = 1.0 / (1.0 - u);
    (iu * iu + iv * iv) * r * (1.0 - r)
}

/// Transition function: 1 on [0, 1/2], `2t` on [1, inf), smooth blend between.
///
/// Negative arguments are rejected.
pub fn phi(t: f64) -> f64 {
    assert!(t >= 0.0, "phi requires t >= 0, got {t}");
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        2.0 * t
    } else {
        let s = 2.0 * t - 1.0;
        1.0 + s * rho(s)
    }
}

/// Exact derivative of the implemented `phi`.
pub fn phi_prime(t: f64) -> f64 {
    assert!(t >= 0.0, "phi_prime requires t >= 0, got {t}");
    if t <= 0.5 {
        0.0
    } else if t >= 1.0 {
        2.0
    } else {
        let s = 2.0 * t - 1.0;
        2.0 * (rho(s) + s * rho_prime(s))
    }
}
