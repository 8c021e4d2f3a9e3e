//! Evaluation of the objective `f` anywhere in the plane.
//!
//! The value at a query point is found by classifying the flow line of `v`
//! through it: either it reaches the prescribed-value line set `X`, or it
//! funnels into the core ball where `f` coincides with the quadratic
//! saddle. Gradients are transported back along the stored trajectory by
//! the adjoint (variational) equation.

use crate::error::{Error, Result};
use crate::field::{
    jacobian_v, quadrant, v, x_value_of_f, Point, Quadrant, XBranch,
};
use crate::flow::{integrate, Direction, Event, IntegratorConfig, StopEvent, Trajectory};
use crate::params::ModelParams;
use serde::Serialize;

/// Relaxed on-branch tolerance for points produced by event localization.
const BRANCH_TOL: f64 = 1e-6;

/// Outcome of integrating the flow line through a query point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FlowClassification {
    StaysAtOrigin,
    CrossesX {
        branch: XBranch,
        p: Point,
        t: f64,
        direction: Direction,
    },
    ConvergesToOriginForward { entry: Point },
    ConvergesToOriginBackward { entry: Point },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GradMethod {
    Adjoint,
    FiniteDifference,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GradientResult {
    pub grad: Point,
    pub method: GradMethod,
    pub estimated_error: f64,
}

/// The quadratic saddle `gamma/2 x^2 + x y - gamma/2 y^2`; equals `f` on
/// the core ball.
pub fn quad_saddle(p: Point, params: &ModelParams) -> f64 {
    0.5 * params.gamma * p.x * p.x + p.x * p.y - 0.5 * params.gamma * p.y * p.y
}

/// Gradient of the quadratic saddle: `(gamma x + y, x - gamma y)`.
pub fn quad_saddle_grad(p: Point, params: &ModelParams) -> Point {
    Point::new(params.gamma * p.x + p.y, p.x - params.gamma * p.y)
}

/// Classify the flow line through `p` (see `FlowClassification`).
pub fn classify_flowline(
    p: Point,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<FlowClassification> {
    classify_with_traj(p, params, cfg, params.r_core).map(|(c, _)| c)
}

/// Classification plus the integrated trajectory when one was needed.
pub(crate) fn classify_with_traj(
    p: Point,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    entry_radius: f64,
) -> Result<(FlowClassification, Option<Trajectory>)> {
    if !p.is_finite() {
        return Err(Error::InvalidInput("non-finite query point".into()));
    }
    let quad = quadrant(p, params, cfg.event_tol);
    match quad {
        Quadrant::Origin => return Ok((FlowClassification::StaysAtOrigin, None)),
        Quadrant::OnL1Axis => {
            return Ok((
                FlowClassification::CrossesX {
                    branch: XBranch::XPlus,
                    p,
                    t: 0.0,
                    direction: Direction::Forward,
                },
                None,
            ))
        }
        Quadrant::OnL2Axis => {
            return Ok((
                FlowClassification::CrossesX {
                    branch: XBranch::XMinus,
                    p,
                    t: 0.0,
                    direction: Direction::Forward,
                },
                None,
            ))
        }
        _ => {}
    }
    let direction = match quad {
        Quadrant::PP | Quadrant::MM => Direction::Forward,
        _ => Direction::Backward,
    };
    if p.norm() <= entry_radius {
        let class = match direction {
            Direction::Forward => FlowClassification::ConvergesToOriginForward { entry: p },
            Direction::Backward => FlowClassification::ConvergesToOriginBackward { entry: p },
        };
        return Ok((class, None));
    }
    let events = [
        Event::l1_crossing(params),
        Event::l2_crossing(params),
        Event::enter_ball(entry_radius),
    ];
    let (traj, stop) = integrate(|q| v(q, params), p, direction, &events, cfg)?;
    let class = match stop {
        StopEvent::L1Crossing { t, p: p_star } => FlowClassification::CrossesX {
            branch: XBranch::XPlus,
            p: p_star,
            t,
            direction,
        },
        StopEvent::L2Crossing { t, p: p_star } => FlowClassification::CrossesX {
            branch: XBranch::XMinus,
            p: p_star,
            t,
            direction,
        },
        StopEvent::EnteredBall { p: entry, .. } => match direction {
            Direction::Forward => FlowClassification::ConvergesToOriginForward { entry },
            Direction::Backward => FlowClassification::ConvergesToOriginBackward { entry },
        },
        other => return Err(Error::Unclassified { p, event: other }),
    };
    Ok((class, Some(traj)))
}

fn value_of_classification(
    class: &FlowClassification,
    params: &ModelParams,
) -> Result<f64> {
    match class {
        FlowClassification::StaysAtOrigin => Ok(0.0),
        FlowClassification::CrossesX { branch, p, .. } => {
            x_value_of_f(*p, *branch, params, BRANCH_TOL)
        }
        FlowClassification::ConvergesToOriginForward { entry }
        | FlowClassification::ConvergesToOriginBackward { entry } => {
            Ok(quad_saddle(*entry, params))
        }
    }
}

/// Full ODE route with an explicit core-entry radius (no early exit).
///
/// Shrinking `entry_radius` below `r_core` forces the flow-line
/// classification to do more work before falling back to the quadratic
/// value, which is how the core-ball radius is validated.
pub fn eval_f_route(
    p: Point,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    entry_radius: f64,
) -> Result<f64> {
    let (class, _) = classify_with_traj(p, params, cfg, entry_radius)?;
    value_of_classification(&class, params)
}

/// Evaluate `f` by the ODE route regardless of the early-exit radius.
pub fn eval_f_ode(p: Point, params: &ModelParams, cfg: &IntegratorConfig) -> Result<f64> {
    eval_f_route(p, params, cfg, params.r_core)
}

/// Evaluate `f` at `p`: closed quadratic form inside the core ball,
/// flow-line classification elsewhere.
pub fn eval_f(p: Point, params: &ModelParams, cfg: &IntegratorConfig) -> Result<f64> {
    if p.norm() <= params.r_core {
        return Ok(quad_saddle(p, params));
    }
    eval_f_ode(p, params, cfg)
}

/// Exact gradient of `f` at a point of `X`.
///
/// On {x = gamma y}: `((gamma^2 + 1) y, 0)`; on {y = -gamma x}:
/// `(0, (gamma^2 + 1) x)`.
pub fn grad_on_x(p: Point, branch: XBranch, params: &ModelParams, tol: f64) -> Result<Point> {
    // Reuse the on-branch validation of the value prescription.
    x_value_of_f(p, branch, params, tol)?;
    let c = params.gamma * params.gamma + 1.0;
    Ok(match branch {
        XBranch::XPlus => Point::new(c * p.y, 0.0),
        XBranch::XMinus => Point::new(0.0, c * p.x),
    })
}

/// Transpose matrix-vector product `J^T g`.
fn matvec_t(j: &[[f64; 2]; 2], g: Point) -> Point {
    Point::new(j[0][0] * g.x + j[1][0] * g.y, j[0][1] * g.x + j[1][1] * g.y)
}

/// Transport a gradient from the end of `traj` back to its start along the
/// adjoint equation `dg/ds = -(D u)^T g`, where `u` is the effective
/// (possibly negated) field the trajectory was integrated with.
fn transport_gradient(
    traj: &Trajectory,
    params: &ModelParams,
    g_end: Point,
) -> Result<Point> {
    let sign = match traj.direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    // Adjoint right-hand side at internal time s.
    let rhs = |s: f64, g: Point| -> Result<Point> {
        let m = traj.sample(s)?;
        let j = jacobian_v(m, params);
        Ok(matvec_t(&j, g) * (-sign))
    };
    let nodes: Vec<(f64, Point)> = traj.nodes().collect();
    let mut g = g_end;
    const SUBSTEPS: usize = 8;
    for pair in nodes.windows(2).rev() {
        let (t0, t1) = (pair[0].0, pair[1].0);
        let h = (t0 - t1) / SUBSTEPS as f64; // negative: we march down in s
        let mut s = t1;
        for _ in 0..SUBSTEPS {
            let k1 = rhs(s, g)?;
            let k2 = rhs(s + 0.5 * h, g + k1 * (0.5 * h))?;
            let k3 = rhs(s + 0.5 * h, g + k2 * (0.5 * h))?;
            let k4 = rhs(s + h, g + k3 * h)?;
            g = g + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
            s += h;
        }
    }
    Ok(g)
}

/// Gradient of `f` by adjoint transport from exact boundary data.
pub fn grad_f_adjoint(
    p: Point,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<GradientResult> {
    if p.norm() <= params.r_core {
        return Ok(GradientResult {
            grad: quad_saddle_grad(p, params),
            method: GradMethod::ClosedForm,
            estimated_error: 0.0,
        });
    }
    let (class, traj) = classify_with_traj(p, params, cfg, params.r_core)?;
    let g_end = match &class {
        FlowClassification::StaysAtOrigin => Point::ORIGIN,
        FlowClassification::CrossesX { branch, p: p_star, .. } => {
            grad_on_x(*p_star, *branch, params, BRANCH_TOL)?
        }
        FlowClassification::ConvergesToOriginForward { entry }
        | FlowClassification::ConvergesToOriginBackward { entry } => {
            quad_saddle_grad(*entry, params)
        }
    };
    let grad = match traj {
        None => g_end,
        Some(traj) => transport_gradient(&traj, params, g_end)?,
    };
    let vel = v(p, params);
    let denom = grad.norm() * vel.norm();
    let estimated_error = if denom > 0.0 {
        grad.dot(vel).abs() / denom
    } else {
        0.0
    };
    Ok(GradientResult {
        grad,
        method: GradMethod::Adjoint,
        estimated_error,
    })
}

/// Central-difference gradient of `eval_f`, with a Richardson comparison
/// between `h` and `h/2` as the error estimate.
pub fn grad_f_fd(
    p: Point,
    h: f64,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<GradientResult> {
    if h <= 0.0 || h.is_nan() {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    let central = |step: f64| -> Result<Point> {
        let ex = Point::new(step, 0.0);
        let ey = Point::new(0.0, step);
        let gx = (eval_f(p + ex, params, cfg)? - eval_f(p - ex, params, cfg)?) / (2.0 * step);
        let gy = (eval_f(p + ey, params, cfg)? - eval_f(p - ey, params, cfg)?) / (2.0 * step);
        Ok(Point::new(gx, gy))
    };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    let estimated_error = (coarse.x - fine.x).abs().max((coarse.y - fine.y).abs());
    Ok(GradientResult {
        grad: fine,
        method: GradMethod::FiniteDifference,
        estimated_error,
    })
}

/// Calibrate the early-exit radius: starting from half the half-level
/// radius, require the ODE route to agree with the quadratic saddle at 64
/// circle points, halving until it does, then apply a 0.5 safety factor.
pub fn calibrate_r_core(params: &ModelParams, cfg: &IntegratorConfig) -> Result<f64> {
    let mut r = params.r_phi_half / 2.0;
    for _ in 0..20 {
        let mut ok = true;
        for i in 0..64 {
            let t = std::f64::consts::TAU * i as f64 / 64.0;
            let p = Point::new(r * t.cos(), r * t.sin());
            let by_ode = eval_f_route(p, params, cfg, 1e-3)?;
            let by_quad = quad_saddle(p, params);
            if (by_ode - by_quad).abs() > 1e-9 * (1.0 + by_quad.abs()) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(0.5 * r);
        }
        r *= 0.5;
    }
    Err(Error::InvalidInput(
        "core-radius calibration failed to converge".into(),
    ))
}

/// Compute the model constants and calibrate the early-exit radius.
pub fn calibrated_params(cfg: &IntegratorConfig) -> Result<ModelParams> {
    let base = ModelParams::compute();
    let r_core = calibrate_r_core(&base, cfg)?;
    Ok(base.with_r_core(r_core))
}
