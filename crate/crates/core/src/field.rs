//! The vector field `v` whose flow lines are the level lines of the
//! objective, its linearization `w` near the origin, the two quadratic
//! forms, and the coordinate systems adapted to the line set `X`.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::smooth::{phi, phi_prime};
use serde::Serialize;
use std::ops::{Add, Mul, Neg, Sub};

/// A planar point, also used for vector values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Signed area `self.x * other.y - self.y * other.x`.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Coordinates `(l1, l2) = (x - gamma y, y + gamma x)` in which the line
/// set `X` becomes the two coordinate axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagCoords {
    pub l1: f64,
    pub l2: f64,
}

/// Coordinates diagonalizing the linear field `w`; the product `hu * hv`
/// is conserved along `w`-flow lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperCoords {
    pub hu: f64,
    pub hv: f64,
}

/// Sign pattern of `(l1, l2)` with a tolerance band around the axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quadrant {
    /// l1 > 0, l2 > 0
    PP,
    /// l1 > 0, l2 < 0
    PM,
    /// l1 < 0, l2 > 0
    MP,
    /// l1 < 0, l2 < 0
    MM,
    /// |l1| within the band: on the line {x = gamma y}
    OnL1Axis,
    /// |l2| within the band: on the line {y = -gamma x}
    OnL2Axis,
    Origin,
}

/// The two branches of `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum XBranch {
    /// The line {x = gamma y}, i.e. {l1 = 0}.
    XPlus,
    /// The line {y = -gamma x}, i.e. {l2 = 0}.
    XMinus,
}

/// The quadratic form `x^2 + a x y + b y^2` (argument of the first `phi`).
pub fn form_plus(p: Point, params: &ModelParams) -> f64 {
    p.x * p.x + params.a * p.x * p.y + params.b * p.y * p.y
}

/// The quadratic form `y^2 - a x y + b x^2` (argument of the second `phi`).
pub fn form_minus(p: Point, params: &ModelParams) -> f64 {
    p.y * p.y - params.a * p.x * p.y + params.b * p.x * p.x
}

/// The vector field whose flow lines are the level lines of the objective.
pub fn v(p: Point, params: &ModelParams) -> Point {
    Point::new(
        (params.gamma * p.y - p.x) * phi(form_plus(p, params)),
        (p.y + params.gamma * p.x) * phi(form_minus(p, params)),
    )
}

/// Closed cubic form of `v`, valid where both quadratic forms are >= 1.
pub fn v_outside_closed_form(p: Point, params: &ModelParams) -> Result<Point> {
    if form_plus(p, params) < 1.0 || form_minus(p, params) < 1.0 {
        return Err(Error::InvalidInput(format!(
            "closed form requires both quadratic forms >= 1 at ({}, {})",
            p.x, p.y
        )));
    }
    let (x, y) = (p.x, p.y);
    Ok(Point::new(
        2.0 * (-x * x * x - x * x * y - x * y * y + y * y * y / 3.0),
        2.0 * (y * y * y - x * y * y + x * x * y + x * x * x / 3.0),
    ))
}

/// Linearization of `v` at the origin; equals `v` wherever both forms <= 1/2.
pub fn w(p: Point, params: &ModelParams) -> Point {
    Point::new(params.gamma * p.y - p.x, p.y + params.gamma * p.x)
}

/// Exact Jacobian of `v` via the chain rule through `phi`.
pub fn jacobian_v(p: Point, params: &ModelParams) -> [[f64; 2]; 2] {
    let (x, y) = (p.x, p.y);
    let (g, a, b) = (params.gamma, params.a, params.b);
    let q1 = form_plus(p, params);
    let q2 = form_minus(p, params);
    let (p1, p1d) = (phi(q1), phi_prime(q1));
    let (p2, p2d) = (phi(q2), phi_prime(q2));
    let f1 = g * y - x;
    let f2 = y + g * x;
    [
        [
            -p1 + f1 * p1d * (2.0 * x + a * y),
            g * p1 + f1 * p1d * (a * x + 2.0 * b * y),
        ],
        [
            g * p2 + f2 * p2d * (2.0 * b * x - a * y),
            p2 + f2 * p2d * (2.0 * y - a * x),
        ],
    ]
}

pub fn diag_coords(p: Point, params: &ModelParams) -> DiagCoords {
    DiagCoords {
        l1: p.x - params.gamma * p.y,
        l2: p.y + params.gamma * p.x,
    }
}

pub fn hyper_coords(p: Point, params: &ModelParams) -> HyperCoords {
    HyperCoords {
        hu: params.gamma * p.x + (1.0 + params.mu) * p.y,
        hv: params.gamma * p.x + (1.0 - params.mu) * p.y,
    }
}

/// Classify a point by the signs of `(l1, l2)`, with a relative tolerance
/// band so points numerically on `X` do not flicker between quadrants.
pub fn quadrant(p: Point, params: &ModelParams, tol: f64) -> Quadrant {
    let DiagCoords { l1, l2 } = diag_coords(p, params);
    let band = tol * (1.0 + p.norm());
    let on1 = l1.abs() <= band;
    let on2 = l2.abs() <= band;
    match (on1, on2) {
        (true, true) => Quadrant::Origin,
        (true, false) => Quadrant::OnL1Axis,
        (false, true) => Quadrant::OnL2Axis,
        (false, false) => match (l1 > 0.0, l2 > 0.0) {
            (true, true) => Quadrant::PP,
            (true, false) => Quadrant::PM,
            (false, true) => Quadrant::MP,
            (false, false) => Quadrant::MM,
        },
    }
}

/// Prescribed objective value at a point of `X`.
///
/// On {x = gamma y} the value is `(gamma^3 + gamma) y^2 / 2`; on
/// {y = -gamma x} it is `-(gamma^3 + gamma) x^2 / 2`.
pub fn x_value_of_f(p: Point, branch: XBranch, params: &ModelParams, tol: f64) -> Result<f64> {
    let DiagCoords { l1, l2 } = diag_coords(p, params);
    let band = tol * (1.0 + p.norm());
    let half = 0.5 * (params.gamma.powi(3) + params.gamma);
    match branch {
        XBranch::XPlus => {
            if l1.abs() > band {
                return Err(Error::OffBranch { p, branch });
            }
            Ok(half * p.y * p.y)
        }
        XBranch::XMinus => {
            if l2.abs() > band {
                return Err(Error::OffBranch { p, branch });
            }
            Ok(-half * p.x * p.x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params() -> ModelParams {
        ModelParams::compute()
    }

    #[test]
    fn v_fixed_point_and_on_branch() {
        let p = params();
        assert_eq!(v(Point::ORIGIN, &p), Point::ORIGIN);
        // On XPlus the first component vanishes.
        let q = Point::new(p.gamma, 1.0);
        assert_abs_diff_eq!(v(q, &p).x, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn v_equals_cubic_form_far_out() {
        let p = params();
        let q = Point::new(1.5, 0.5);
        assert!(form_plus(q, &p) >= 1.0 && form_minus(q, &p) >= 1.0);
        let closed = v_outside_closed_form(q, &p).unwrap();
        let direct = v(q, &p);
        assert_abs_diff_eq!(closed.x, direct.x, epsilon = 1e-10 * direct.x.abs());
        assert_abs_diff_eq!(closed.y, direct.y, epsilon = 1e-10 * direct.y.abs());
    }

    #[test]
    fn closed_form_agrees_with_v_on_annulus() {
        let p = params();
        let mut worst = 0.0_f64;
        for i in 0..1000 {
            let t = std::f64::consts::TAU * (i as f64 + 0.37) / 1000.0;
            let r = p.r_outer + (3.0 - p.r_outer) * ((i * 7919 % 1000) as f64 / 1000.0);
            let q = Point::new(r * t.cos(), r * t.sin());
            if form_plus(q, &p) < 1.0 || form_minus(q, &p) < 1.0 {
                continue;
            }
            let a = v(q, &p);
            let b = v_outside_closed_form(q, &p).unwrap();
            let rel = (a - b).norm() / a.norm();
            worst = worst.max(rel);
        }
        assert!(worst <= 1e-10, "worst relative deviation {worst}");
    }

    #[test]
    fn closed_form_spot_value_and_precondition() {
        let p = params();
        let q = Point::new(2.0, 0.0);
        let val = v_outside_closed_form(q, &p).unwrap();
        assert_abs_diff_eq!(val.x, -16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(val.y, 16.0 / 3.0, epsilon = 1e-12);
        assert!(v_outside_closed_form(Point::new(0.1, 0.1), &p).is_err());
    }

    #[test]
    fn w_matches_v_in_small_ball() {
        let p = params();
        for i in 0..200 {
            let t = std::f64::consts::TAU * i as f64 / 200.0;
            let r = p.r_phi_half * ((i % 17) as f64 + 0.5) / 17.5;
            let q = Point::new(r * t.cos(), r * t.sin());
            let a = v(q, &p);
            let b = w(q, &p);
            assert_eq!(a, b, "v != w inside the half-level ball at {q:?}");
        }
        assert_eq!(w(Point::new(0.0, 1.0), &p), Point::new(p.gamma, 1.0));
    }

    #[test]
    fn jacobian_at_origin() {
        let p = params();
        let j = jacobian_v(Point::ORIGIN, &p);
        assert_eq!(j[0][0], -1.0);
        assert_eq!(j[0][1], p.gamma);
        assert_eq!(j[1][0], p.gamma);
        assert_eq!(j[1][1], 1.0);
        assert_eq!(j[0][0] + j[1][1], 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = params();
        let h = 1e-6;
        let mut state = 0xdeadbeef_u64;
        for _ in 0..500 {
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                -2.0 + 4.0 * ((state >> 11) as f64 / (1u64 << 53) as f64)
            };
            let q = Point::new(next(), next());
            let j = jacobian_v(q, &p);
            let dx = (v(q + Point::new(h, 0.0), &p) - v(q - Point::new(h, 0.0), &p)) * (0.5 / h);
            let dy = (v(q + Point::new(0.0, h), &p) - v(q - Point::new(0.0, h), &p)) * (0.5 / h);
            assert_abs_diff_eq!(j[0][0], dx.x, epsilon = 1e-5);
            assert_abs_diff_eq!(j[1][0], dx.y, epsilon = 1e-5);
            assert_abs_diff_eq!(j[0][1], dy.x, epsilon = 1e-5);
            assert_abs_diff_eq!(j[1][1], dy.y, epsilon = 1e-5);
        }
    }

    #[test]
    fn hyper_product_is_saddle_value() {
        let p = params();
        let mut state = 7_u64;
        for _ in 0..500 {
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                -2.0 + 4.0 * ((state >> 11) as f64 / (1u64 << 53) as f64)
            };
            let q = Point::new(next(), next());
            let h = hyper_coords(q, &p);
            let saddle = 0.5 * p.gamma * q.x * q.x + q.x * q.y - 0.5 * p.gamma * q.y * q.y;
            let lhs = h.hu * h.hv;
            let rhs = 2.0 * p.gamma * saddle;
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn x_branches_in_hyper_coords() {
        let p = params();
        // XPlus = {hu = kappa hv}, XMinus = {hu = -hv}.
        let on_plus = Point::new(p.gamma * 0.7, 0.7);
        let h = hyper_coords(on_plus, &p);
        assert_abs_diff_eq!(h.hu, p.kappa * h.hv, epsilon = 1e-12);
        let on_minus = Point::new(0.7, -p.gamma * 0.7);
        let h = hyper_coords(on_minus, &p);
        assert_abs_diff_eq!(h.hu, -h.hv, epsilon = 1e-12);
    }

    #[test]
    fn x_values() {
        let p = params();
        let half = 0.5 * (p.gamma.powi(3) + p.gamma);
        let val = x_value_of_f(Point::new(p.gamma, 1.0), XBranch::XPlus, &p, 1e-9).unwrap();
        assert_abs_diff_eq!(val, half, epsilon = 1e-14);
        assert_abs_diff_eq!(val, 0.134642787, epsilon = 1e-8);
        let val = x_value_of_f(Point::new(1.0, -p.gamma), XBranch::XMinus, &p, 1e-9).unwrap();
        assert_abs_diff_eq!(val, -half, epsilon = 1e-14);
        assert!(x_value_of_f(Point::new(1.0, 1.0), XBranch::XPlus, &p, 1e-9).is_err());
    }

    #[test]
    fn quadrant_classification() {
        let p = params();
        assert_eq!(quadrant(Point::ORIGIN, &p, 1e-12), Quadrant::Origin);
        assert_eq!(quadrant(Point::new(p.gamma, 1.0), &p, 1e-12), Quadrant::OnL1Axis);
        assert_eq!(quadrant(Point::new(1.0, -p.gamma), &p, 1e-12), Quadrant::OnL2Axis);
        assert_eq!(quadrant(Point::new(1.0, 1.0), &p, 1e-12), Quadrant::PP);
        assert_eq!(quadrant(Point::new(-1.0, -1.0), &p, 1e-12), Quadrant::MM);
        assert_eq!(quadrant(Point::new(-1.0, 1.0), &p, 1e-12), Quadrant::MP);
        assert_eq!(quadrant(Point::new(1.0, -1.0), &p, 1e-12), Quadrant::PM);
    }

    #[test]
    fn crossing_directions_on_axes() {
        // On {l1 = 0, l2 > 0} the l1-derivative along v is strictly
        // negative, and mirrored statements on the other half-lines.
        let p = params();
        for i in 1..=200 {
            let s = 2.0 * i as f64 / 200.0;
            // point with l1 = 0, l2 = s * (1 + gamma^2) > 0
            let q = Point::new(p.gamma * s, s);
            let vel = v(q, &p);
            let dl1 = vel.x - p.gamma * vel.y;
            assert!(dl1 < 0.0, "dl1 = {dl1} at s = {s}");
            let neg = -q;
            let vel = v(neg, &p);
            let dl1 = vel.x - p.gamma * vel.y;
            assert!(dl1 > 0.0);

            // point with l2 = 0, l1 > 0
            let q = Point::new(s, -p.gamma * s);
            let vel = v(q, &p);
            let dl2 = vel.y + p.gamma * vel.x;
            assert!(dl2 < 0.0, "dl2 = {dl2} at s = {s}");
            let vel = v(-q, &p);
            let dl2 = vel.y + p.gamma * vel.x;
            assert!(dl2 > 0.0);
        }
    }

    #[test]
    fn forms_are_exchanged_by_quarter_turn() {
        let p = params();
        let mut state = 99_u64;
        for _ in 0..100 {
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                -2.0 + 4.0 * ((state >> 11) as f64 / (1u64 << 53) as f64)
            };
            let q = Point::new(next(), next());
            // form_minus(x, y) = form_plus(-y, x): the forms are exchanged
            // by a quarter turn of the plane.
            let rotated = Point::new(-q.y, q.x);
            assert_abs_diff_eq!(
                form_minus(q, &p),
                form_plus(rotated, &p),
                epsilon = 1e-12 * (1.0 + q.norm_sq())
            );
            // Rayleigh bounds from the shared spectrum.
            let r2 = q.norm_sq();
            for f in [form_plus(q, &p), form_minus(q, &p)] {
                assert!(f >= p.lambda_min * r2 - 1e-12);
                assert!(f <= p.lambda_max * r2 + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn v_is_odd(x in -3.0..3.0f64, y in -3.0..3.0f64) {
            let p = params();
            let q = Point::new(x, y);
            let a = v(q, &p);
            let b = v(-q, &p);
            prop_assert!((a + b).norm() <= 1e-12 * (1.0 + a.norm()));
        }

        #[test]
        fn diag_map_is_invertible(x in -3.0..3.0f64, y in -3.0..3.0f64) {
            let p = params();
            let q = Point::new(x, y);
            let d = diag_coords(q, &p);
            // invert: determinant 1 + gamma^2
            let det = 1.0 + p.gamma * p.gamma;
            let xi = (d.l1 + p.gamma * d.l2) / det;
            let yi = (d.l2 - p.gamma * d.l1) / det;
            prop_assert!((xi - x).abs() <= 1e-12 * (1.0 + x.abs()));
            prop_assert!((yi - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }

        #[test]
        fn w_is_linear(x in -2.0..2.0f64, y in -2.0..2.0f64) {
            let p = params();
            let q = Point::new(x, y);
            let two = w(q * 2.0, &p);
            let one = w(q, &p) * 2.0;
            prop_assert!((two - one).norm() <= 1e-12 * (1.0 + one.norm()));
        }
    }
}
