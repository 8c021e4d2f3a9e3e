//! Adaptive planar ODE integration with dense output and event detection.
//!
//! The integrator is an embedded Dormand-Prince 5(4) pair with the usual
//! quartic continuous extension. Events are scalar functions of the state;
//! a sign change over an accepted step is localized by bisection on the
//! dense output. Backward integration negates the field so there is a
//! single stepping code path.

use crate::error::{Error, Result};
use crate::field::Point;
use crate::params::ModelParams;
use serde::Serialize;
use std::io::Write;

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// b - bhat, for the embedded error estimate.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense-output coefficients (Hairer & Wanner, DOPRI5 continuous extension).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: f64,
    pub max_time: f64,
    pub escape_norm: f64,
    pub event_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.5,
            initial_step: 1e-3,
            max_time: 200.0,
            // 10x the working half-width.
            escape_norm: 20.0,
            event_tol: 1e-12,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tols(mut self, rel: f64, abs: f64) -> Self {
        self.rel_tol = rel;
        self.abs_tol = abs;
        self
    }

    pub fn with_max_time(mut self, max_time: f64) -> Self {
        self.max_time = max_time;
        self
    }
}

/// Per-step quartic interpolation coefficients.
#[derive(Debug, Clone, Copy)]
struct DenseSeg {
    t0: f64,
    /// Full step length used to build the coefficients.
    h: f64,
    /// Valid span end (may be shorter than t0 + h after event truncation).
    t_end: f64,
    r: [Point; 5],
}

impl DenseSeg {
    fn eval(&self, t: f64) -> Point {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = self.r;
        r1 + (r2 + (r3 + (r4 + r5 * th1) * theta) * th1) * theta
    }
}

/// A timestamped solution path with dense output.
///
/// Internal times start at 0 and increase regardless of direction;
/// the direction flag records the orientation in physical time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub direction: Direction,
    times: Vec<f64>,
    points: Vec<Point>,
    dense: Vec<DenseSeg>,
}

impl Trajectory {
    fn new(direction: Direction, z0: Point) -> Self {
        Trajectory {
            direction,
            times: vec![0.0],
            points: vec![z0],
            dense: Vec::new(),
        }
    }

    pub fn start(&self) -> Point {
        self.points[0]
    }

    pub fn end(&self) -> Point {
        *self.points.last().unwrap()
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Accepted-step nodes as (t, point) pairs.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, Point)> + '_ {
        self.times.iter().copied().zip(self.points.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Dense-output interpolation at time `t` within the span.
    pub fn sample(&self, t: f64) -> Result<Point> {
        let lo = self.times[0];
        let hi = self.duration();
        let slack = 1e-12 * (1.0 + hi.abs());
        if t < lo - slack || t > hi + slack {
            return Err(Error::OutsideSpan { t, lo, hi });
        }
        let t = t.clamp(lo, hi);
        if self.dense.is_empty() {
            return Ok(self.points[0]);
        }
        // Last segment with t0 <= t.
        let idx = match self.times.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.dense.len()),
            Err(i) => i.saturating_sub(1),
        };
        let idx = idx.min(self.dense.len() - 1);
        Ok(self.dense[idx].eval(t))
    }

    /// CSV export: header `t,x,y`, one row per accepted step, 17
    /// significant digits, locale-independent.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,x,y")?;
        for (t, p) in self.nodes() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", t, p.x, p.y)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    L1Crossing,
    L2Crossing,
    EnteredBall,
    OriginNeighborhood,
    LeftSquare,
}

/// A scalar event function; the integrator stops at its first sign change.
pub struct Event {
    kind: EventKind,
    data: f64,
    func: Box<dyn Fn(Point) -> f64 + Send + Sync>,
}

impl Event {
    /// Sign change of `l1 = x - gamma y` (crossing of {x = gamma y}).
    pub fn l1_crossing(params: &ModelParams) -> Self {
        let gamma = params.gamma;
        Event {
            kind: EventKind::L1Crossing,
            data: 0.0,
            func: Box::new(move |p| p.x - gamma * p.y),
        }
    }

    /// Sign change of `l2 = y + gamma x` (crossing of {y = -gamma x}).
    pub fn l2_crossing(params: &ModelParams) -> Self {
        let gamma = params.gamma;
        Event {
            kind: EventKind::L2Crossing,
            data: 0.0,
            func: Box::new(move |p| p.y + gamma * p.x),
        }
    }

    /// Entry into the closed ball of the given radius.
    pub fn enter_ball(radius: f64) -> Self {
        Event {
            kind: EventKind::EnteredBall,
            data: radius,
            func: Box::new(move |p| p.norm() - radius),
        }
    }

    /// Entry into a small ball around the origin, reported as its own
    /// stop condition (used by the figure tracer).
    pub fn origin_neighborhood(radius: f64) -> Self {
        Event {
            kind: EventKind::OriginNeighborhood,
            data: radius,
            func: Box::new(move |p| p.norm() - radius),
        }
    }

    /// Exit from the square [-half_width, half_width]^2.
    pub fn leave_square(half_width: f64) -> Self {
        Event {
            kind: EventKind::LeftSquare,
            data: half_width,
            func: Box::new(move |p| half_width - p.x.abs().max(p.y.abs())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StopEvent {
    L1Crossing { t: f64, p: Point },
    L2Crossing { t: f64, p: Point },
    EnteredBall { t: f64, p: Point, radius: f64 },
    ReachedOriginNeighborhood { t: f64, p: Point, radius: f64 },
    Escaped { t: f64, p: Point },
    TimeExhausted,
}

impl StopEvent {
    pub fn time(&self) -> Option<f64> {
        match self {
            StopEvent::L1Crossing { t, .. }
            | StopEvent::L2Crossing { t, .. }
            | StopEvent::EnteredBall { t, .. }
            | StopEvent::ReachedOriginNeighborhood { t, .. }
            | StopEvent::Escaped { t, .. } => Some(*t),
            StopEvent::TimeExhausted => None,
        }
    }
}

fn stop_event(kind: EventKind, data: f64, t: f64, p: Point) -> StopEvent {
    match kind {
        EventKind::L1Crossing => StopEvent::L1Crossing { t, p },
        EventKind::L2Crossing => StopEvent::L2Crossing { t, p },
        EventKind::EnteredBall => StopEvent::EnteredBall { t, p, radius: data },
        EventKind::OriginNeighborhood => {
            StopEvent::ReachedOriginNeighborhood { t, p, radius: data }
        }
        EventKind::LeftSquare => StopEvent::Escaped { t, p },
    }
}

/// Integrate a planar field from `z0` until an event fires, the state
/// escapes, or time is exhausted.
pub fn integrate<F>(
    field: F,
    z0: Point,
    direction: Direction,
    events: &[Event],
    cfg: &IntegratorConfig,
) -> Result<(Trajectory, StopEvent)>
where
    F: Fn(Point) -> Point,
{
    if !z0.is_finite() {
        return Err(Error::InvalidInput("non-finite initial point".into()));
    }
    if z0.norm() > cfg.escape_norm {
        return Err(Error::InvalidInput(
            "initial point outside the escape ball".into(),
        ));
    }
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let eff = |p: Point| field(p) * sign;

    let mut traj = Trajectory::new(direction, z0);
    let mut t = 0.0_f64;
    let mut y = z0;
    let mut k1 = eff(y);
    if !k1.is_finite() {
        return Err(Error::NonFiniteField { p: y });
    }

    // Escape guard plus caller events; previous values define the signs
    // whose change triggers localization.
    let escape = Event {
        kind: EventKind::LeftSquare,
        data: cfg.escape_norm,
        func: Box::new({
            let esc = cfg.escape_norm;
            move |p: Point| esc - p.norm()
        }),
    };
    let mut prev_vals: Vec<f64> = events.iter().map(|e| (e.func)(y)).collect();
    let mut prev_escape = (escape.func)(y);

    let mut h = cfg.initial_step.min(cfg.max_step).min(cfg.max_time);
    let end_slack = 1e-12 * (1.0 + cfg.max_time);

    loop {
        if t >= cfg.max_time - end_slack {
            return Ok((traj, StopEvent::TimeExhausted));
        }
        h = h.min(cfg.max_step).min(cfg.max_time - t);
        let h_min = 1e-13 * (1.0 + t.abs());
        if h < h_min {
            return Err(Error::StepSizeUnderflow { t, p: y });
        }

        let k2 = eff(y + k1 * (A21 * h));
        let k3 = eff(y + (k1 * A31 + k2 * A32) * h);
        let k4 = eff(y + (k1 * A41 + k2 * A42 + k3 * A43) * h);
        let k5 = eff(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h);
        let k6 = eff(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h);
        let incr = k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76;
        let y_new = y + incr * h;
        let k7 = eff(y_new);

        let finite = k2.is_finite()
            && k3.is_finite()
            && k4.is_finite()
            && k5.is_finite()
            && k6.is_finite()
            && y_new.is_finite()
            && k7.is_finite();
        if !finite {
            if h > 16.0 * h_min {
                h *= 0.25;
                continue;
            }
            return Err(Error::NonFiniteField { p: y });
        }

        // Embedded error estimate.
        let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
        let sc_x = cfg.abs_tol + cfg.rel_tol * y.x.abs().max(y_new.x.abs());
        let sc_y = cfg.abs_tol + cfg.rel_tol * y.y.abs().max(y_new.y.abs());
        let ex = err_vec.x / sc_x;
        let ey = err_vec.y / sc_y;
        let err = (0.5 * (ex * ex + ey * ey)).sqrt();

        if err > 1.0 {
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            h *= fac;
            continue;
        }

        // Accepted step: build the continuous extension.
        let ydiff = y_new - y;
        let bspl = k1 * h - ydiff;
        let seg = DenseSeg {
            t0: t,
            h,
            t_end: t + h,
            r: [
                y,
                ydiff,
                bspl,
                ydiff - k7 * h - bspl,
                (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h,
            ],
        };

        // Event scan over the step.
        let mut triggered: Vec<(EventKind, f64, f64)> = Vec::new(); // kind, data, prev value
        for (i, ev) in events.iter().enumerate() {
            let val = (ev.func)(y_new);
            // A crossing is a sign change or an exact landing on zero;
            // starting on zero never triggers (callers short-circuit).
            if prev_vals[i] != 0.0
                && (val == 0.0 || prev_vals[i].signum() != val.signum())
            {
                triggered.push((ev.kind, ev.data, prev_vals[i]));
            }
        }
        let esc_val = (escape.func)(y_new);
        let escape_hit = prev_escape > 0.0 && esc_val <= 0.0;

        if triggered.len() + usize::from(escape_hit) >= 2 && h > 64.0 * h_min {
            // Two event functions changed sign in one step: halve and retry
            // so the first crossing is isolated.
            h *= 0.5;
            continue;
        }

        if !triggered.is_empty() || escape_hit {
            let mut best: Option<(f64, EventKind, f64)> = None;
            let mut consider = |kind: EventKind, data: f64, func: &dyn Fn(Point) -> f64, v0: f64| {
                let t_star = localize(&seg, func, t, t + h, v0, cfg.event_tol);
                match best {
                    Some((tb, _, _)) if tb <= t_star => {}
                    _ => best = Some((t_star, kind, data)),
                }
            };
            for (kind, data, v0) in &triggered {
                let ev = events.iter().find(|e| e.kind == *kind && e.data == *data).unwrap();
                consider(*kind, *data, &*ev.func, *v0);
            }
            if escape_hit {
                consider(EventKind::LeftSquare, escape.data, &*escape.func, prev_escape);
            }
            let (t_star, kind, data) = best.unwrap();
            let p_star = seg.eval(t_star);
            let mut seg = seg;
            seg.t_end = t_star;
            traj.times.push(t_star);
            traj.points.push(p_star);
            traj.dense.push(seg);
            let stop = if escape_hit && kind == EventKind::LeftSquare && data == escape.data {
                StopEvent::Escaped { t: t_star, p: p_star }
            } else {
                stop_event(kind, data, t_star, p_star)
            };
            return Ok((traj, stop));
        }

        traj.times.push(t + h);
        traj.points.push(y_new);
        traj.dense.push(seg);
        for (i, ev) in events.iter().enumerate() {
            let val = (ev.func)(y_new);
            if prev_vals[i] == 0.0 || val != 0.0 {
                prev_vals[i] = val;
            }
        }
        prev_escape = esc_val;

        t += h;
        y = y_new;
        k1 = k7;

        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= fac;
    }
}

/// Bisection on the dense output for the first sign change of `func`.
fn localize(
    seg: &DenseSeg,
    func: &dyn Fn(Point) -> f64,
    mut lo: f64,
    mut hi: f64,
    v_lo: f64,
    event_tol: f64,
) -> f64 {
    let s_lo = v_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let vm = func(seg.eval(mid));
        if vm.abs() <= event_tol {
            return mid;
        }
        if vm.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * (1.0 + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}
