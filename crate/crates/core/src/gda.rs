//! The gradient descent-ascent flow on the objective, its quartic
//! integral of motion, Poincare-section period detection, and local
//! convergence runs near the origin.

use crate::error::{Error, Result};
use crate::field::Point;
use crate::flow::{integrate, Direction, Event, IntegratorConfig, StopEvent, Trajectory};
use crate::objective::grad_f_adjoint;
use crate::params::ModelParams;
use serde::Serialize;
use std::cell::RefCell;

/// Poincare-section measurement of one orbit.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodReport {
    pub z0: Point,
    pub g0: f64,
    pub max_g_drift_rel: f64,
    #[serde(rename = "period_T")]
    pub period_t: f64,
    pub return_distance: f64,
    pub section: String,
}

/// Norm-decay measurement of a trajectory started near the origin.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub z0: Point,
    pub norms: Vec<(f64, f64)>,
    pub predicted_rate: f64,
    pub fit_rate: f64,
    pub final_norm: f64,
    pub degenerate: bool,
}

/// The GDA vector field `(-df/dx, df/dy)`.
///
/// Inside the core ball this is the exact linear field
/// `(-gamma x - y, x - gamma y)`; elsewhere the gradient comes from the
/// adjoint transport.
pub fn gda_field(p: Point, params: &ModelParams, cfg: &IntegratorConfig) -> Result<Point> {
    if p.norm() <= params.r_core {
        return Ok(Point::new(
            -params.gamma * p.x - p.y,
            p.x - params.gamma * p.y,
        ));
    }
    let g = grad_f_adjoint(p, params, cfg)?;
    Ok(Point::new(-g.grad.x, g.grad.y))
}

/// The quartic integral of motion
/// `g = 3x^4 + 4x^3y + 6x^2y^2 - 4xy^3 + 3y^4`.
pub fn quartic_invariant(p: Point) -> f64 {
    let (x, y) = (p.x, p.y);
    3.0 * x.powi(4) + 4.0 * x.powi(3) * y + 6.0 * x * x * y * y - 4.0 * x * y.powi(3)
        + 3.0 * y.powi(4)
}

/// Gradient of the quartic invariant.
pub fn quartic_invariant_grad(p: Point) -> Point {
    let (x, y) = (p.x, p.y);
    Point::new(
        12.0 * x * x * x + 12.0 * x * x * y + 12.0 * x * y * y - 4.0 * y * y * y,
        4.0 * x * x * x + 12.0 * x * x * y - 12.0 * x * y * y + 12.0 * y * y * y,
    )
}

/// The L4 norm (to the fourth power) after rotation by pi/8:
/// `|x + alpha y|^4 + |y - alpha x|^4 = 2 alpha^2 g(x, y)`.
pub fn rotated_l4(p: Point, params: &ModelParams) -> f64 {
    let u = p.x + params.alpha * p.y;
    let w = p.y - params.alpha * p.x;
    u.powi(4) + w.powi(4)
}

/// Integrate the GDA flow from `z0` for `t_max`.
///
/// Leaving the working square is an error: the acceptance orbits live on
/// level curves chosen to fit inside it.
pub fn simulate_gda(
    z0: Point,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    t_max: f64,
) -> Result<Trajectory> {
    let half = params.r_domain;
    if z0.x.abs() > half || z0.y.abs() > half {
        return Err(Error::InvalidInput(format!(
            "initial point ({}, {}) outside the working square",
            z0.x, z0.y
        )));
    }
    // Gradient failures inside the field closure surface as NaN for the
    // stepper; the real error is stashed and re-raised here.
    let stashed: RefCell<Option<Error>> = RefCell::new(None);
    let field = |p: Point| match gda_field(p, params, cfg) {
        Ok(vv) => vv,
        Err(e) => {
            stashed.borrow_mut().get_or_insert(e);
            Point::new(f64::NAN, f64::NAN)
        }
    };
    let run_cfg = IntegratorConfig {
        max_time: t_max,
        ..*cfg
    };
    let events = [Event::leave_square(half)];
    let outcome = integrate(field, z0, Direction::Forward, &events, &run_cfg);
    if let Some(e) = stashed.into_inner() {
        return Err(Error::GradientFailure {
            p: z0,
            reason: e.to_string(),
        });
    }
    let (traj, stop) = outcome?;
    match stop {
        StopEvent::TimeExhausted => Ok(traj),
        StopEvent::Escaped { p, .. } => Err(Error::Escaped { p }),
        other => Err(Error::Unclassified { p: z0, event: other }),
    }
}

/// Locate consecutive same-orientation crossings of the ray from the
/// origin through `z0` and measure the orbit period and return distance.
pub fn detect_period(traj: &Trajectory, z0: Point) -> Result<PeriodReport> {
    let g0 = quartic_invariant(z0);
    let e = z0 * (1.0 / z0.norm());
    let section_val = |p: Point| e.cross(p);
    let on_side = |p: Point| e.dot(p) > 0.0;

    // Dense sampling: a few probes per accepted step.
    let nodes: Vec<(f64, Point)> = traj.nodes().collect();
    let mut samples: Vec<(f64, Point)> = Vec::with_capacity(nodes.len() * 8);
    for pair in nodes.windows(2) {
        let (t0, t1) = (pair[0].0, pair[1].0);
        for k in 0..8 {
            let t = t0 + (t1 - t0) * k as f64 / 8.0;
            samples.push((t, traj.sample(t)?));
        }
    }
    samples.push((traj.duration(), traj.end()));

    let mut max_drift = 0.0_f64;
    for &(_, p) in &samples {
        let drift = (quartic_invariant(p) - g0).abs() / g0.abs().max(f64::MIN_POSITIVE);
        max_drift = max_drift.max(drift);
    }

    // Departure orientation: sign of the section value just after t = 0.
    let depart = samples
        .iter()
        .map(|&(_, p)| section_val(p))
        .find(|s| s.abs() > 1e-12)
        .ok_or_else(|| Error::InvalidInput("trajectory never leaves the section".into()))?;
    let d0 = depart.signum();

    // A full revolution returns through the section from the -d0 side.
    let mut crossing: Option<(f64, Point)> = None;
    for pair in samples.windows(2) {
        let (ta, pa) = pair[0];
        let (tb, pb) = pair[1];
        let (sa, sb) = (section_val(pa), section_val(pb));
        if sa * d0 < 0.0 && sb * d0 > 0.0 && (on_side(pa) || on_side(pb)) {
            // Bisect for the crossing time.
            let (mut lo, mut hi) = (ta, tb);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let sm = section_val(traj.sample(mid)?);
                if sm.abs() <= 1e-13 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if sm * d0 < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t_star = 0.5 * (lo + hi);
            let p_star = traj.sample(t_star)?;
            if on_side(p_star) {
                crossing = Some((t_star, p_star));
                break;
            }
        }
    }
    let (period_t, p_ret) = crossing.ok_or_else(|| {
        Error::InvalidInput("fewer than two section crossings within the trajectory".into())
    })?;

    Ok(PeriodReport {
        z0,
        g0,
        max_g_drift_rel: max_drift,
        period_t,
        return_distance: (p_ret - z0).norm(),
        section: format!("ray from origin through ({}, {})", z0.x, z0.y),
    })
}

/// Simulate one GDA orbit and measure its period: a coarse pass estimates
/// the revolution time, a fine pass measures drift and return distance.
pub fn measure_period(
    z0: Point,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    t_hint: f64,
) -> Result<PeriodReport> {
    let coarse_cfg = IntegratorConfig {
        rel_tol: 1e-6,
        abs_tol: 1e-9,
        ..*cfg
    };
    let coarse = simulate_gda(z0, params, &coarse_cfg, t_hint)?;
    let estimate = detect_period(&coarse, z0)?;
    let fine = simulate_gda(z0, params, cfg, 1.15 * estimate.period_t)?;
    detect_period(&fine, z0)
}

/// Run the GDA flow from a point near the origin and fit the norm-decay
/// rate against the predicted `-gamma`.
pub fn local_convergence_run(
    z0: Point,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    t_max: f64,
) -> Result<ConvergenceReport> {
    if z0.norm() > params.r_core / 2.0 {
        return Err(Error::InvalidInput(
            "local convergence run requires |z0| <= r_core / 2".into(),
        ));
    }
    let traj = simulate_gda(z0, params, cfg, t_max)?;
    if z0 == Point::ORIGIN {
        return Ok(ConvergenceReport {
            z0,
            norms: vec![(0.0, 0.0), (t_max, 0.0)],
            predicted_rate: -params.gamma,
            fit_rate: f64::NAN,
            final_norm: 0.0,
            degenerate: true,
        });
    }
    let n = 100;
    let mut norms = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = t_max * k as f64 / n as f64;
        norms.push((t, traj.sample(t)?.norm()));
    }
    // Least-squares slope of log |z(t)|.
    let m = norms.len() as f64;
    let (mut st, mut sl, mut stt, mut stl) = (0.0, 0.0, 0.0, 0.0);
    for &(t, r) in &norms {
        let l = r.max(f64::MIN_POSITIVE).ln();
        st += t;
        sl += l;
        stt += t * t;
        stl += t * l;
    }
    let fit_rate = (m * stl - st * sl) / (m * stt - st * st);
    Ok(ConvergenceReport {
        z0,
        predicted_rate: -params.gamma,
        fit_rate,
        final_norm: traj.end().norm(),
        norms,
        degenerate: false,
    })
}
