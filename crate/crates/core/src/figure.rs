//! Figure-data generation: level lines of the objective colored by field
//! magnitude, the two prescription lines, the four form-ellipses, and one
//! GDA orbit, assembled into a deterministic SVG.

use crate::error::{Error, Result};
use crate::field::{v, Point};
use crate::flow::{integrate, Direction, Event, IntegratorConfig};
use crate::gda::simulate_gda;
use crate::params::ModelParams;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

/// Which quadratic form an ellipse belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FormKind {
    Plus,
    Minus,
}

/// Layout and content choices for the figure.
#[derive(Debug, Clone, Serialize)]
pub struct FigureSpec {
    /// Half-width of the plotted square.
    pub half_width: f64,
    /// Level-line seeds per prescription-line branch (four branches total).
    pub seeds_per_branch: usize,
    /// Form-ellipse levels, one ellipse per form per level.
    pub ellipse_levels: [f64; 2],
    /// Initial point of the red GDA orbit.
    pub orbit_start: Point,
    /// Simulated orbit duration.
    pub orbit_t_max: f64,
    /// log10 magnitude clip range for the color map.
    pub log_mag_lo: f64,
    pub log_mag_hi: f64,
    /// Output raster size in pixels (square).
    pub size_px: u32,
}

impl Default for FigureSpec {
    fn default() -> Self {
        FigureSpec {
            half_width: 2.0,
            seeds_per_branch: 12,
            ellipse_levels: [0.5, 1.0],
            orbit_start: Point::new(1.6, 0.0),
            orbit_t_max: 8.0,
            log_mag_lo: -2.0,
            log_mag_hi: 1.5,
            size_px: 720,
        }
    }
}

/// A traced level line: vertices with the field magnitude at each.
pub type Polyline = Vec<(Point, f64)>;

/// Trace level lines of the objective from seeds placed geometrically
/// along both prescription-line branches.
///
/// Each seed is integrated forward and backward along the field until the
/// domain square is left, the ball of radius 0.02 around the origin is
/// entered, or the time budget runs out; the two halves are joined into
/// one polyline through the seed.
pub fn trace_level_lines(
    spec: &FigureSpec,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Vec<Polyline> {
    let mut lines = Vec::new();
    let trace_cfg = IntegratorConfig {
        max_time: 40.0,
        ..IntegratorConfig::default().with_tols(1e-8, 1e-10)
    };
    let _ = cfg;
    let n = spec.seeds_per_branch;
    let r_lo = 0.06_f64;
    let r_hi = 0.95 * spec.half_width;
    for branch in 0..4usize {
        for k in 0..n {
            // Geometric spacing of seed distances from the origin.
            let r = r_lo * (r_hi / r_lo).powf(k as f64 / (n - 1).max(1) as f64);
            let dir = match branch {
                // {x = gamma y} branch, both signs of y.
                0 => Point::new(params.gamma, 1.0),
                1 => Point::new(-params.gamma, -1.0),
                // {y = -gamma x} branch, both signs of x.
                2 => Point::new(1.0, -params.gamma),
                _ => Point::new(-1.0, params.gamma),
            };
            let seed = dir * (r / dir.norm());
            if seed.x.abs() > spec.half_width || seed.y.abs() > spec.half_width {
                continue;
            }
            let half = |direction: Direction| -> Polyline {
                let events = [
                    Event::leave_square(spec.half_width),
                    Event::enter_ball(0.02),
                ];
                match integrate(|p| v(p, params), seed, direction, &events, &trace_cfg) {
                    Ok((traj, _stop)) => {
                        let mut out = Vec::new();
                        let nodes: Vec<(f64, Point)> = traj.nodes().collect();
                        for pair in nodes.windows(2) {
                            for s in 0..4 {
                                let t = pair[0].0 + (pair[1].0 - pair[0].0) * s as f64 / 4.0;
                                if let Ok(p) = traj.sample(t) {
                                    out.push((p, v(p, params).norm()));
                                }
                            }
                        }
                        out.push((traj.end(), v(traj.end(), params).norm()));
                        out
                    }
                    Err(_) => Vec::new(),
                }
            };
            let back = half(Direction::Backward);
            let fwd = half(Direction::Forward);
            if back.len() + fwd.len() < 4 {
                continue;
            }
            // Join: backward half reversed, then the forward half.
            let mut line: Polyline = back.into_iter().rev().collect();
            line.extend(fwd);
            lines.push(line);
        }
    }
    lines
}

/// Parametric trace of `{form = level}` via the eigen-decomposition of the
/// form matrix; returns a closed polyline of `n` vertices.
pub fn ellipse_points(
    form: FormKind,
    level: f64,
    n: usize,
    params: &ModelParams,
) -> Result<Vec<Point>> {
    if level <= 0.0 || level.is_nan() {
        return Err(Error::NonpositiveLevel(level));
    }
    // Form matrix [[1, a/2], [a/2, b]] for the plus form; the minus form
    // y^2 - a x y + b x^2 is its image under a quarter turn of the plane.
    let (m11, m12, m22) = match form {
        FormKind::Plus => (1.0, 0.5 * params.a, params.b),
        FormKind::Minus => (params.b, -0.5 * params.a, 1.0),
    };
    // Eigen-decomposition of the symmetric 2x2 matrix.
    let theta = 0.5 * (2.0 * m12).atan2(m11 - m22);
    let half_sum = 0.5 * (m11 + m22);
    let half_dif = ((0.5 * (m11 - m22)).powi(2) + m12 * m12).sqrt();
    let (lam1, lam2) = (half_sum + half_dif, half_sum - half_dif);
    if lam2 <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "form matrix not positive definite: eigenvalues {lam1}, {lam2}"
        )));
    }
    let (c, s) = (theta.cos(), theta.sin());
    let (r1, r2) = ((level / lam1).sqrt(), (level / lam2).sqrt());
    let mut pts = Vec::with_capacity(n);
    for k in 0..n {
        let phi = std::f64::consts::TAU * k as f64 / n as f64;
        let (u, w) = (r1 * phi.cos(), r2 * phi.sin());
        pts.push(Point::new(c * u - s * w, s * u + c * w));
    }
    Ok(pts)
}

/// Map a field magnitude to [0, 1] through a clipped log10 scale.
pub fn magnitude_to_unit(mag: f64, spec: &FigureSpec) -> f64 {
    let l = mag.max(f64::MIN_POSITIVE).log10();
    let clipped = l.clamp(spec.log_mag_lo, spec.log_mag_hi);
    (clipped - spec.log_mag_lo) / (spec.log_mag_hi - spec.log_mag_lo)
}

/// Dark blue at 0 to yellow at 1, linearly in RGB.
pub fn unit_to_color(u: f64) -> String {
    let u = u.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * u).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(12.0, 253.0),
        lerp(20.0, 231.0),
        lerp(90.0, 37.0)
    )
}

fn fmt_coord(x: f64) -> String {
    format!("{x:.3}")
}

/// Render the full figure and write it to `out_path`.
///
/// The SVG holds one group per layer (`levels`, `xlines`, `ellipses`,
/// `orbit`, `axes`) plus a metadata block echoing the spec; output bytes
/// are deterministic for a fixed spec.
pub fn emit_figure_svg(
    spec: &FigureSpec,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    out_path: &Path,
) -> Result<()> {
    let hw = spec.half_width;
    let size = spec.size_px as f64;
    let to_px = |p: Point| -> (String, String) {
        let sx = (p.x + hw) / (2.0 * hw) * size;
        let sy = (hw - p.y) / (2.0 * hw) * size;
        (fmt_coord(sx), fmt_coord(sy))
    };
    let path_of = |pts: &[Point]| -> String {
        let mut d = String::new();
        for (i, &p) in pts.iter().enumerate() {
            let (x, y) = to_px(p);
            let _ = write!(d, "{}{x} {y}", if i == 0 { "M" } else { " L" });
        }
        d
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        spec.size_px
    );
    let _ = writeln!(
        svg,
        "<metadata>{}</metadata>",
        serde_json::to_string(spec)?
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{0}" height="{0}" fill="white"/>"#,
        spec.size_px
    );

    // Level lines, each stroked by the mean field magnitude along it.
    let _ = writeln!(svg, r#"<g id="levels" fill="none" stroke-width="1.2">"#);
    for line in trace_level_lines(spec, params, cfg) {
        if line.len() < 2 {
            continue;
        }
        let mean_mag = line.iter().map(|&(_, m)| m).sum::<f64>() / line.len() as f64;
        let color = unit_to_color(magnitude_to_unit(mean_mag, spec));
        let pts: Vec<Point> = line.iter().map(|&(p, _)| p).collect();
        let _ = writeln!(
            svg,
            r#"<path class="level" stroke="{color}" d="{}"/>"#,
            path_of(&pts)
        );
    }
    let _ = writeln!(svg, "</g>");

    // The two prescription lines in orange, clipped to the square.
    let _ = writeln!(
        svg,
        r#"<g id="xlines" fill="none" stroke="orange" stroke-width="2">"#
    );
    let plus = [
        Point::new(-params.gamma * hw, -hw),
        Point::new(params.gamma * hw, hw),
    ];
    let minus = [
        Point::new(-hw, params.gamma * hw),
        Point::new(hw, -params.gamma * hw),
    ];
    for line in [plus, minus] {
        let _ = writeln!(svg, r#"<path class="xline" d="{}"/>"#, path_of(&line));
    }
    let _ = writeln!(svg, "</g>");

    // Four form-ellipses.
    let _ = writeln!(
        svg,
        r#"<g id="ellipses" fill="none" stroke="black" stroke-width="1" stroke-dasharray="4 3">"#
    );
    for form in [FormKind::Plus, FormKind::Minus] {
        for level in spec.ellipse_levels {
            let mut pts = ellipse_points(form, level, 256, params)?;
            pts.push(pts[0]);
            let _ = writeln!(svg, r#"<path class="ellipse" d="{}"/>"#, path_of(&pts));
        }
    }
    let _ = writeln!(svg, "</g>");

    // The GDA orbit in red, traced at visual tolerance.
    let _ = writeln!(
        svg,
        r#"<g id="orbit" fill="none" stroke="red" stroke-width="2">"#
    );
    let orbit_cfg = IntegratorConfig::default().with_tols(1e-6, 1e-9);
    let traj = simulate_gda(spec.orbit_start, params, &orbit_cfg, spec.orbit_t_max)?;
    let mut pts = Vec::new();
    let nodes: Vec<(f64, Point)> = traj.nodes().collect();
    for pair in nodes.windows(2) {
        for s in 0..4 {
            let t = pair[0].0 + (pair[1].0 - pair[0].0) * s as f64 / 4.0;
            pts.push(traj.sample(t)?);
        }
    }
    pts.push(traj.end());
    let _ = writeln!(svg, r#"<path class="gda-orbit" d="{}"/>"#, path_of(&pts));
    let _ = writeln!(svg, "</g>");

    // Axes box.
    let _ = writeln!(
        svg,
        r#"<g id="axes" fill="none" stroke="black" stroke-width="1">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0.5" y="0.5" width="{0}" height="{0}"/>"#,
        fmt_coord(size - 1.0)
    );
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");

    std::fs::write(out_path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{form_minus, form_plus};
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

    #[test]
    fn ellipse_points_on_level_set() {
        let (params, _) = setup();
        let pts = ellipse_points(FormKind::Plus, 1.0, 64, params).unwrap();
        assert_eq!(pts.len(), 64);
        for &p in &pts {
            assert_abs_diff_eq!(form_plus(p, params), 1.0, epsilon = 1e-12);
        }
        let pts = ellipse_points(FormKind::Minus, 0.5, 64, params).unwrap();
        for &p in &pts {
            assert_abs_diff_eq!(form_minus(p, params), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn ellipse_area_matches_closed_form() {
        let (params, _) = setup();
        let level = 1.0;
        let pts = ellipse_points(FormKind::Plus, level, 10_000, params).unwrap();
        let mut area = 0.0;
        for i in 0..pts.len() {
            let a = pts[i];
            let b = pts[(i + 1) % pts.len()];
            area += a.x * b.y - b.x * a.y;
        }
        area = 0.5 * area.abs();
        let det = params.b - 0.25 * params.a * params.a;
        let expect = std::f64::consts::PI * level / det.sqrt();
        assert_abs_diff_eq!(area, expect, epsilon = 1e-6);
    }

    #[test]
    fn minus_ellipse_is_rotated_plus_ellipse() {
        let (params, _) = setup();
        let plus = ellipse_points(FormKind::Plus, 1.0, 360, params).unwrap();
        let minus = ellipse_points(FormKind::Minus, 1.0, 360, params).unwrap();
        // Every quarter-turned plus-point lies on the minus ellipse level set.
        for &p in &plus {
            let q = Point::new(-p.y, p.x);
            assert_abs_diff_eq!(form_minus(q, params), 1.0, epsilon = 1e-12);
        }
        // And the point sets coincide up to ordering.
        for &p in plus.iter().step_by(30) {
            let q = Point::new(-p.y, p.x);
            let nearest = minus
                .iter()
                .map(|&m| (m - q).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 0.05, "swapped point {q:?} not near minus ellipse");
        }
    }

    #[test]
    fn ellipse_rejects_nonpositive_level() {
        let (params, _) = setup();
        assert!(ellipse_points(FormKind::Plus, 0.0, 8, params).is_err());
        assert!(ellipse_points(FormKind::Plus, -1.0, 8, params).is_err());
    }

    #[test]
    fn color_map_monotone() {
        let spec = FigureSpec::default();
        let mut prev = magnitude_to_unit(1e-4, &spec);
        for i in 1..200 {
            let mag = 1e-4 * 10f64.powf(i as f64 * 0.03);
            let cur = magnitude_to_unit(mag, &spec);
            assert!(cur >= prev);
            prev = cur;
        }
        assert_eq!(magnitude_to_unit(1e-9, &spec), 0.0);
        assert_eq!(magnitude_to_unit(1e9, &spec), 1.0);
    }

    #[test]
    fn level_lines_avoid_origin_and_stay_near_square() {
        let (params, cfg) = setup();
        let spec = FigureSpec {
            seeds_per_branch: 3,
            ..FigureSpec::default()
        };
        let lines = trace_level_lines(&spec, params, cfg);
        assert!(lines.len() >= 10);
        for line in &lines {
            for &(p, mag) in line {
                assert!(p.norm() > 0.015);
                assert!(mag >= 0.0 && mag.is_finite());
                assert!(p.x.abs() <= spec.half_width + 0.3);
                assert!(p.y.abs() <= spec.half_width + 0.3);
            }
        }
    }

    #[test]
    fn svg_structure_and_determinism() {
        let (params, cfg) = setup();
        let spec = FigureSpec {
            seeds_per_branch: 11,
            orbit_t_max: 2.0,
            ..FigureSpec::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("fig1.svg");
        let p2 = dir.path().join("fig2.svg");
        emit_figure_svg(&spec, params, cfg, &p1).unwrap();
        emit_figure_svg(&spec, params, cfg, &p2).unwrap();
        let s1 = std::fs::read(&p1).unwrap();
        let s2 = std::fs::read(&p2).unwrap();
        assert_eq!(s1, s2, "SVG output not deterministic");
        let text = String::from_utf8(s1).unwrap();
        assert!(text.matches(r#"class="level""#).count() >= 40);
        assert_eq!(text.matches(r#"class="xline""#).count(), 2);
        assert_eq!(text.matches(r#"class="ellipse""#).count(), 4);
        assert_eq!(text.matches(r#"class="gda-orbit""#).count(), 1);
        for id in ["levels", "xlines", "ellipses", "orbit", "axes"] {
            assert!(text.contains(&format!(r#"id="{id}""#)), "missing layer {id}");
        }
        assert!(text.contains("<metadata>"));
    }

    #[test]
    fn empty_seed_list_still_valid() {
        let (params, cfg) = setup();
        let spec = FigureSpec {
            seeds_per_branch: 0,
            orbit_t_max: 1.0,
            ..FigureSpec::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.svg");
        emit_figure_svg(&spec, params, cfg, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches(r#"class="level""#).count(), 0);
        assert_eq!(text.matches(r#"class="ellipse""#).count(), 4);
        assert!(text.contains(r#"id="axes""#));
    }
}
