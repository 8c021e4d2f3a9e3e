//! Empirical certification: 1D and 2D Polyak-Lojasiewicz checks, the
//! origin Jacobian spectrum, second-derivative sign checks on the two
//! prescription lines, and the algebraic identity suite.

use crate::error::{Error, Result};
use crate::field::{form_minus, form_plus, hyper_coords, v, v_outside_closed_form, w, Point};
use crate::flow::{integrate, Direction, IntegratorConfig};
use crate::gda::{quartic_invariant, quartic_invariant_grad, rotated_l4};
use crate::objective::{eval_f, grad_f_adjoint};
use crate::params::ModelParams;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Numerator below this and denominator below the denominator floor marks
/// a grid point as a 0/0 exclusion.
pub const RATIO_FLOOR_NUM: f64 = 1e-12;
pub const RATIO_FLOOR_DEN: f64 = 1e-16;

/// Guard below which a root's second derivative counts as degenerate.
const SECOND_DERIV_GUARD: f64 = 1e-8;

/// One-dimensional PL check along a scalar restriction.
#[derive(Debug, Clone, Serialize)]
pub struct PL1DReport {
    pub criterion_holds: bool,
    /// Refined critical points as `(x, f''(x))`.
    pub critical_points: Vec<(f64, f64)>,
    #[serde(rename = "estimated_C")]
    pub estimated_c: f64,
    pub worst_ratio_location: f64,
}

/// Two-sided PL certificate over a square grid.
#[derive(Debug, Clone, Serialize)]
pub struct PLReport {
    /// `(N, half_width)`.
    pub grid: (usize, f64),
    #[serde(rename = "C_x")]
    pub c_x: f64,
    #[serde(rename = "C_y")]
    pub c_y: f64,
    /// Points where one side of the inequality degenerates: the derivative
    /// vanishes (denominator below floor) while the gap does not.
    pub violations: Vec<(Point, f64)>,
    /// 0/0 points (both floors undershot), clustered on the argmin/argmax loci.
    #[serde(rename = "excluded")]
    pub excluded_points: usize,
    pub min_dxx_on_xminus: f64,
    pub max_dyy_on_xplus: f64,
    /// Coarsest row-minimum second difference: the grid modulus by which
    /// the discrete row minima may overestimate the continuous infima.
    pub row_min_modulus: f64,
    /// Minimum gradient norm over the grid outside the origin exclusion
    /// disk of radius 0.05, and where it occurs.
    pub min_grad_norm: f64,
    pub min_grad_location: Point,
    pub failed_points: usize,
}

/// Origin Jacobian of the GDA field and its spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub jacobian: [[f64; 2]; 2],
    /// Complex pair as `(re, im)`.
    pub eigenvalues: [(f64, f64); 2],
    pub max_real_part: f64,
}

/// One identity's outcome in the suite.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_rel_err: f64,
    pub threshold: f64,
    pub pass: bool,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Check the 1D PL criterion for a scalar function given by value,
/// derivative, and second-derivative oracles on `[lo, hi]`.
///
/// Critical points are sign changes of `df` on the grid, refined by
/// bisection; the criterion holds when every one has `d2f` above the
/// degeneracy guard. `estimated_c` is the max of `(f - min f) / df^2`
/// over the grid with the denominator floor applied.
pub fn pl_check_1d<F, G, H>(
    f: F,
    df: G,
    d2f: H,
    interval: (f64, f64),
    grid_n: usize,
) -> Result<PL1DReport>
where
    F: Fn(f64) -> Result<f64>,
    G: Fn(f64) -> Result<f64>,
    H: Fn(f64) -> Result<f64>,
{
    let (lo, hi) = interval;
    if grid_n < 3 || hi <= lo || hi.is_nan() || lo.is_nan() {
        return Err(Error::InvalidInput(format!(
            "pl_check_1d needs grid_n >= 3 and hi > lo, got n = {grid_n}, [{lo}, {hi}]"
        )));
    }
    let xs: Vec<f64> = (0..grid_n)
        .map(|i| lo + (hi - lo) * i as f64 / (grid_n - 1) as f64)
        .collect();
    let fs = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let dfs = xs.iter().map(|&x| df(x)).collect::<Result<Vec<_>>>()?;

    let mut critical_points = Vec::new();
    for i in 0..grid_n - 1 {
        let (da, db) = (dfs[i], dfs[i + 1]);
        if da == 0.0 {
            // Grid point is itself a critical point; no refinement needed.
            if i == 0 || dfs[i - 1] != 0.0 {
                critical_points.push((xs[i], d2f(xs[i])?));
            }
            continue;
        }
        if da * db < 0.0 {
            let (mut a, mut b) = (xs[i], xs[i + 1]);
            let mut fa = da;
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let fm = df(m)?;
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            let root = 0.5 * (a + b);
            critical_points.push((root, d2f(root)?));
        }
    }
    let criterion_holds = critical_points
        .iter()
        .all(|&(_, dd)| dd > SECOND_DERIV_GUARD);

    let fmin = fs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut estimated_c = 0.0;
    let mut worst_ratio_location = xs[0];
    for i in 0..grid_n {
        let num = fs[i] - fmin;
        let den = dfs[i] * dfs[i];
        if num < RATIO_FLOOR_NUM && den < RATIO_FLOOR_DEN {
            continue;
        }
        let ratio = num / den.max(RATIO_FLOOR_DEN);
        if ratio > estimated_c {
            estimated_c = ratio;
            worst_ratio_location = xs[i];
        }
    }
    Ok(PL1DReport {
        criterion_holds,
        critical_points,
        estimated_c,
        worst_ratio_location,
    })
}

/// Certify the two-sided PL inequality on an `N x N` grid over
/// `[-half_width, half_width]^2`.
///
/// Row minima and column maxima are grid extrema, so the reported
/// constants are conservative up to the grid modulus, which is reported.
pub fn two_sided_pl_grid(
    params: &ModelParams,
    cfg: &IntegratorConfig,
    grid_n: usize,
    half_width: f64,
) -> Result<PLReport> {
    if grid_n < 3 {
        return Err(Error::InvalidInput(format!(
            "grid_n must be >= 3, got {grid_n}"
        )));
    }
    if half_width > params.r_domain {
        return Err(Error::InvalidInput(format!(
            "half_width {half_width} exceeds the working square half-width {}",
            params.r_domain
        )));
    }
    let coord = |i: usize| -half_width + 2.0 * half_width * i as f64 / (grid_n - 1) as f64;

    // One pass over the grid: value and gradient at every node.
    let cells: Vec<Option<(f64, Point)>> = (0..grid_n * grid_n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % grid_n, idx / grid_n);
            let p = Point::new(coord(i), coord(j));
            match (eval_f(p, params, cfg), grad_f_adjoint(p, params, cfg)) {
                (Ok(fv), Ok(gr)) => Some((fv, gr.grad)),
                _ => None,
            }
        })
        .collect();

    let total = grid_n * grid_n;
    let failed_points = cells.iter().filter(|c| c.is_none()).count();
    if failed_points * 100 > total {
        return Err(Error::GridFailure {
            failed: failed_points,
            total,
        });
    }
    let at = |i: usize, j: usize| cells[j * grid_n + i];

    let mut c_x = 0.0_f64;
    let mut c_y = 0.0_f64;
    let mut violations = Vec::new();
    let mut excluded_points = 0usize;
    let mut row_min_modulus = 0.0_f64;
    let mut min_grad_norm = f64::INFINITY;
    let mut min_grad_location = Point::ORIGIN;

    for j in 0..grid_n {
        // Row minimum of f over x at fixed y = coord(j).
        let m_row = (0..grid_n)
            .filter_map(|i| at(i, j).map(|(fv, _)| fv))
            .fold(f64::INFINITY, f64::min);
        // Grid modulus: second difference of f around the row argmin.
        if let Some(i_min) = (0..grid_n)
            .filter(|&i| at(i, j).is_some())
            .min_by(|&a, &b| {
                at(a, j).unwrap().0.partial_cmp(&at(b, j).unwrap().0).unwrap()
            })
        {
            if i_min > 0 && i_min + 1 < grid_n {
                if let (Some((fl, _)), Some((fc, _)), Some((fr, _))) =
                    (at(i_min - 1, j), at(i_min, j), at(i_min + 1, j))
                {
                    row_min_modulus = row_min_modulus.max((fl - 2.0 * fc + fr).abs());
                }
            }
        }
        for i in 0..grid_n {
            let Some((fv, gr)) = at(i, j) else { continue };
            let p = Point::new(coord(i), coord(j));
            if p.norm() >= 0.05 && gr.norm() < min_grad_norm {
                min_grad_norm = gr.norm();
                min_grad_location = p;
            }
            let num = fv - m_row;
            let den = gr.x * gr.x;
            if num < RATIO_FLOOR_NUM && den < RATIO_FLOOR_DEN {
                excluded_points += 1;
                continue;
            }
            if den < RATIO_FLOOR_DEN {
                violations.push((p, num / RATIO_FLOOR_DEN));
                continue;
            }
            c_x = c_x.max(num / den);
        }
    }

    for i in 0..grid_n {
        // Column maximum of f over y at fixed x = coord(i).
        let m_col = (0..grid_n)
            .filter_map(|j| at(i, j).map(|(fv, _)| fv))
            .fold(f64::NEG_INFINITY, f64::max);
        for j in 0..grid_n {
            let Some((fv, gr)) = at(i, j) else { continue };
            let num = m_col - fv;
            let den = gr.y * gr.y;
            if num < RATIO_FLOOR_NUM && den < RATIO_FLOOR_DEN {
                excluded_points += 1;
                continue;
            }
            if den < RATIO_FLOOR_DEN {
                violations.push((Point::new(coord(i), coord(j)), num / RATIO_FLOOR_DEN));
                continue;
            }
            c_y = c_y.max(num / den);
        }
    }

    let (min_dxx_on_xminus, max_dyy_on_xplus) =
        second_derivative_checks(params, cfg, 20, 0.9 * half_width)?;

    Ok(PLReport {
        grid: (grid_n, half_width),
        c_x,
        c_y,
        violations,
        excluded_points,
        min_dxx_on_xminus,
        max_dyy_on_xplus,
        row_min_modulus,
        min_grad_norm,
        min_grad_location,
        failed_points,
    })
}

/// Central second differences of `f` on the two prescription lines:
/// returns `(min d2f/dx2 on {y = -gamma x}, max d2f/dy2 on {x = gamma y})`.
pub fn second_derivative_checks(
    params: &ModelParams,
    cfg: &IntegratorConfig,
    n_points: usize,
    extent: f64,
) -> Result<(f64, f64)> {
    let h = 1e-4;
    let results: Vec<Result<(f64, f64)>> = (0..n_points)
        .into_par_iter()
        .map(|k| {
            // Symmetric about the origin, skipping the saddle itself.
            let s = extent * (2.0 * (k as f64 + 0.5) / n_points as f64 - 1.0);
            let pm = Point::new(s, -params.gamma * s);
            let dxx = (eval_f(pm + Point::new(h, 0.0), params, cfg)?
                - 2.0 * eval_f(pm, params, cfg)?
                + eval_f(pm - Point::new(h, 0.0), params, cfg)?)
                / (h * h);
            let pp = Point::new(params.gamma * s, s);
            let dyy = (eval_f(pp + Point::new(0.0, h), params, cfg)?
                - 2.0 * eval_f(pp, params, cfg)?
                + eval_f(pp - Point::new(0.0, h), params, cfg)?)
                / (h * h);
            Ok((dxx, dyy))
        })
        .collect();
    let mut min_dxx = f64::INFINITY;
    let mut max_dyy = f64::NEG_INFINITY;
    for r in results {
        let (dxx, dyy) = r?;
        min_dxx = min_dxx.min(dxx);
        max_dyy = max_dyy.max(dyy);
    }
    Ok((min_dxx, max_dyy))
}

/// Exact origin Jacobian of the GDA field and its spectrum, from the
/// closed quadratic form of `f` near the saddle.
pub fn origin_spectrum(params: &ModelParams) -> SpectrumReport {
    let g = params.gamma;
    SpectrumReport {
        jacobian: [[-g, -1.0], [1.0, -g]],
        eigenvalues: [(-g, 1.0), (-g, -1.0)],
        max_real_part: -g,
    }
}

/// Evaluate the algebraic and flow identities at seeded-random sample
/// points; thresholds are 1e-10 for algebraic identities (1e-12 for the
/// rotated-L4 one) and 1e-6 for ODE-mediated ones.
pub fn identity_suite(
    params: &ModelParams,
    cfg: &IntegratorConfig,
    n_samples: usize,
    seed: u64,
) -> Result<IdentityReport> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Rejection sample a point of given norm range with both forms >= 1.
    let outside_point = |rng: &mut ChaCha8Rng| -> Point {
        loop {
            let r = rng.gen_range(params.r_outer..3.0);
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            let p = Point::new(r * t.cos(), r * t.sin());
            if form_plus(p, params) >= 1.0 && form_minus(p, params) >= 1.0 {
                return p;
            }
        }
    };

    let mut checks = Vec::new();

    // v equals its closed cubic form where both quadratic forms are >= 1.
    let mut err = 0.0_f64;
    for _ in 0..n_samples {
        let p = outside_point(&mut rng);
        let exact = v(p, params);
        let closed = v_outside_closed_form(p, params)?;
        err = err.max((exact - closed).norm() / exact.norm());
    }
    checks.push(IdentityCheck {
        name: "v_closed_form".into(),
        max_rel_err: err,
        threshold: 1e-10,
        pass: err <= 1e-10,
        samples: n_samples,
    });

    // grad g = 6 (-v1, v2) in the same region.
    let mut err = 0.0_f64;
    for _ in 0..n_samples {
        let p = outside_point(&mut rng);
        let gg = quartic_invariant_grad(p);
        let vv = v(p, params);
        let rhs = Point::new(-6.0 * vv.x, 6.0 * vv.y);
        err = err.max((gg - rhs).norm() / gg.norm());
    }
    checks.push(IdentityCheck {
        name: "grad_g_is_6v".into(),
        max_rel_err: err,
        threshold: 1e-10,
        pass: err <= 1e-10,
        samples: n_samples,
    });

    // Rotated-L4 identity, everywhere.
    let mut err = 0.0_f64;
    for _ in 0..n_samples {
        let p = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let lhs = rotated_l4(p, params);
        let rhs = 2.0 * params.alpha * params.alpha * quartic_invariant(p);
        let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        err = err.max((lhs - rhs).abs() / scale);
    }
    checks.push(IdentityCheck {
        name: "rotated_l4".into(),
        max_rel_err: err,
        threshold: 1e-12,
        pass: err <= 1e-12,
        samples: n_samples,
    });

    // hu * hv is constant along the hyperbolic flow of w over t in [0, 2].
    let flow_samples = n_samples.min(20);
    let mut err = 0.0_f64;
    for _ in 0..flow_samples {
        let z0 = Point::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let flow_cfg = IntegratorConfig {
            max_time: 2.0,
            ..*cfg
        };
        let (traj, _) = integrate(|p| w(p, params), z0, Direction::Forward, &[], &flow_cfg)?;
        let h0 = hyper_coords(z0, params);
        let c0 = h0.hu * h0.hv;
        for k in 0..=40 {
            let t = 2.0 * k as f64 / 40.0;
            let h = hyper_coords(traj.sample(t)?, params);
            let drift = (h.hu * h.hv - c0).abs() / c0.abs().max(1e-3);
            err = err.max(drift);
        }
    }
    checks.push(IdentityCheck {
        name: "huhv_conserved_along_w".into(),
        max_rel_err: err,
        threshold: 1e-6,
        pass: err <= 1e-6,
        samples: flow_samples,
    });

    // grad f is orthogonal to v (f is constant on flow lines).
    let perp_samples = n_samples.min(50);
    let mut err = 0.0_f64;
    for _ in 0..perp_samples {
        let r = rng.gen_range(2.0 * params.r_core..1.8);
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        let p = Point::new(r * t.cos(), r * t.sin());
        let gr = grad_f_adjoint(p, params, cfg)?;
        let vv = v(p, params);
        let denom = gr.grad.norm() * vv.norm();
        if denom > 0.0 {
            err = err.max(gr.grad.dot(vv).abs() / denom);
        }
    }
    checks.push(IdentityCheck {
        name: "grad_f_perp_v".into(),
        max_rel_err: err,
        threshold: 1e-6,
        pass: err <= 1e-6,
        samples: perp_samples,
    });

    Ok(IdentityReport { seed, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::calibrated_params;
    use approx::assert_abs_diff_eq;
    use std::sync::OnceLock;

    fn setup() -> &'static (ModelParams, IntegratorConfig) {
        static CELL: OnceLock<(ModelParams, IntegratorConfig)> = OnceLock::new();
        CELL.get_or_init(|| {
            let cfg = IntegratorConfig::default();
            let params = calibrated_params(&cfg).unwrap();
            (params, cfg)
        })
    }

    // Looser tolerances for grid sweeps where each node costs an ODE solve.
    fn sweep_cfg() -> IntegratorConfig {
        IntegratorConfig::default().with_tols(1e-8, 1e-10)
    }

    #[test]
    fn pl_1d_quadratic() {
        let rep = pl_check_1d(
            |x| Ok(x * x),
            |x| Ok(2.0 * x),
            |_| Ok(2.0),
            (-1.0, 1.0),
            101,
        )
        .unwrap();
        assert!(rep.criterion_holds);
        assert_eq!(rep.critical_points.len(), 1);
        assert_abs_diff_eq!(rep.critical_points[0].0, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.estimated_c, 0.25, epsilon = 1e-6);
    }

    #[test]
    fn pl_1d_quartic_fails() {
        let rep = pl_check_1d(
            |x| Ok(x.powi(4)),
            |x| Ok(4.0 * x * x * x),
            |x| Ok(12.0 * x * x),
            (-1.0, 1.0),
            101,
        )
        .unwrap();
        assert!(!rep.criterion_holds);
        assert_eq!(rep.critical_points.len(), 1);
    }

    #[test]
    fn pl_1d_linear_no_critical_points() {
        let rep = pl_check_1d(Ok, |_| Ok(1.0), |_| Ok(0.0), (0.0, 1.0), 51).unwrap();
        assert!(rep.criterion_holds);
        assert!(rep.critical_points.is_empty());
        assert_abs_diff_eq!(rep.estimated_c, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.worst_ratio_location, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pl_1d_rejects_bad_input() {
        assert!(pl_check_1d(Ok, |_| Ok(1.0), |_| Ok(0.0), (0.0, 1.0), 2).is_err());
        assert!(pl_check_1d(Ok, |_| Ok(1.0), |_| Ok(0.0), (1.0, 0.0), 9).is_err());
    }

    #[test]
    fn pl_1d_on_objective_slices() {
        let (params, _) = setup();
        let cfg = sweep_cfg();
        for y0 in [-1.0, -0.3, 0.4, 1.2] {
            let x_crit = -y0 / params.gamma;
            let in_domain = x_crit.abs() <= 2.0;
            let f = |x: f64| eval_f(Point::new(x, y0), params, &cfg);
            let df = |x: f64| Ok(grad_f_adjoint(Point::new(x, y0), params, &cfg)?.grad.x);
            let d2f = |x: f64| {
                let h = 1e-4;
                Ok((df(x + h)? - df(x - h)?) / (2.0 * h))
            };
            let rep = pl_check_1d(f, df, d2f, (-2.0, 2.0), 61).unwrap();
            assert!(rep.criterion_holds, "criterion failed at y0 = {y0}");
            if in_domain {
                assert_eq!(rep.critical_points.len(), 1, "y0 = {y0}");
                assert_abs_diff_eq!(rep.critical_points[0].0, x_crit, epsilon = 1e-4);
            } else {
                assert!(rep.critical_points.is_empty(), "y0 = {y0}");
            }
        }
    }

    #[test]
    fn spectrum_exact() {
        let (params, _) = setup();
        let rep = origin_spectrum(params);
        assert_eq!(rep.jacobian, [[-params.gamma, -1.0], [1.0, -params.gamma]]);
        assert_eq!(rep.eigenvalues[0], (-params.gamma, 1.0));
        assert!(rep.max_real_part < 0.0);
        // Characteristic polynomial at the eigenvalue: (l^2 + 2 gamma l +
        // gamma^2 + 1) with l = -gamma + i vanishes identically.
        let (re, im) = rep.eigenvalues[0];
        let g = params.gamma;
        let poly_re = re * re - im * im + 2.0 * g * re + g * g + 1.0;
        let poly_im = 2.0 * re * im + 2.0 * g * im;
        assert_abs_diff_eq!(poly_re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(poly_im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_matches_fd_jacobian_of_gda_field() {
        let (params, cfg) = setup();
        let rep = origin_spectrum(params);
        let h = 1e-6;
        let col = |e: Point| -> [f64; 2] {
            let fp = crate::gda::gda_field(e * h, params, cfg).unwrap();
            let fm = crate::gda::gda_field(e * (-h), params, cfg).unwrap();
            [(fp.x - fm.x) / (2.0 * h), (fp.y - fm.y) / (2.0 * h)]
        };
        let cx = col(Point::new(1.0, 0.0));
        let cy = col(Point::new(0.0, 1.0));
        let fd = [[cx[0], cy[0]], [cx[1], cy[1]]];
        for (fd_row, jac_row) in fd.iter().zip(&rep.jacobian) {
            for (got, want) in fd_row.iter().zip(jac_row) {
                assert_abs_diff_eq!(got, want, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn identity_suite_passes() {
        let (params, cfg) = setup();
        let rep = identity_suite(params, cfg, 200, 7).unwrap();
        for c in &rep.checks {
            assert!(c.pass, "{} failed: max_rel_err = {}", c.name, c.max_rel_err);
        }
        assert!(rep.all_pass());
        assert!(identity_suite(params, cfg, 0, 7).is_err());
    }

    #[test]
    fn identity_suite_deterministic() {
        let (params, cfg) = setup();
        let a = identity_suite(params, cfg, 50, 11).unwrap();
        let b = identity_suite(params, cfg, 50, 11).unwrap();
        for (ca, cb) in a.checks.iter().zip(&b.checks) {
            assert_eq!(ca.max_rel_err, cb.max_rel_err);
        }
    }

    #[test]
    fn pl_grid_near_origin_patch() {
        let (params, _) = setup();
        let cfg = sweep_cfg();
        let rep = two_sided_pl_grid(params, &cfg, 21, params.r_core / 2.0).unwrap();
        assert!(rep.violations.is_empty());
        assert_eq!(rep.failed_points, 0);
        let expect = 1.0 / (2.0 * params.gamma);
        assert!(
            (rep.c_x - expect).abs() <= 0.02 * expect,
            "C_x = {} vs 1/(2 gamma) = {expect}",
            rep.c_x
        );
        assert!(
            (rep.c_y - expect).abs() <= 0.02 * expect,
            "C_y = {} vs 1/(2 gamma) = {expect}",
            rep.c_y
        );
    }

    #[test]
    fn pl_grid_refinement_keeps_violations_empty() {
        let (params, _) = setup();
        let cfg = sweep_cfg();
        let coarse = two_sided_pl_grid(params, &cfg, 41, 2.0).unwrap();
        assert!(
            coarse.violations.is_empty(),
            "violations at N = 41: {:?}",
            coarse.violations
        );
        assert!(coarse.c_x.is_finite() && coarse.c_x > 0.0);
        assert!(coarse.c_y.is_finite() && coarse.c_y > 0.0);
        assert!(coarse.min_dxx_on_xminus > 0.0);
        assert!(coarse.max_dyy_on_xplus < 0.0);
        assert!(coarse.min_grad_norm > 0.0);
        let fine = two_sided_pl_grid(params, &cfg, 81, 2.0).unwrap();
        assert!(
            fine.violations.is_empty(),
            "violations at N = 81: {:?}",
            fine.violations
        );
    }

    #[test]
    fn pl_grid_rejects_bad_input() {
        let (params, cfg) = setup();
        assert!(two_sided_pl_grid(params, cfg, 2, 1.0).is_err());
        assert!(two_sided_pl_grid(params, cfg, 11, 5.0).is_err());
    }
}
