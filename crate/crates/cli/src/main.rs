//! Command-line surface for the PL/GDA counterexample toolkit.

use clap::{Args, Parser, Subcommand, ValueEnum};
use plgda_core::figure::{emit_figure_svg, FigureSpec};
use plgda_core::flow::{integrate, Event};
use plgda_core::gda::{
    detect_period, local_convergence_run, quartic_invariant, simulate_gda,
};
use plgda_core::objective::{
    calibrated_params, eval_f, eval_f_ode, grad_f_adjoint, grad_f_fd, quad_saddle,
};
use plgda_core::verify::{identity_suite, origin_spectrum, two_sided_pl_grid};
use plgda_core::{
    CheckResult, Direction, IntegratorConfig, ModelParams, Point, ReportEnvelope,
};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "plgda",
    version,
    about = "Evaluate and verify a two-sided-PL objective whose descent-ascent flow is periodic"
)]
struct Cli {
    /// Relative integration tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    rel_tol: f64,

    /// Absolute integration tolerance.
    #[arg(long, global = true, default_value_t = 1e-12)]
    abs_tol: f64,

    /// Write the structured JSON report to this path.
    #[arg(long, global = true, value_name = "PATH")]
    report: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMethod {
    Ode,
    Quad,
}

#[derive(Clone, Copy, ValueEnum)]
enum GradCliMethod {
    Adjoint,
    Fd,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    x: f64,
    #[arg(long)]
    y: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Print the model constants as key=value lines.
    Params,
    /// Evaluate the objective at a point.
    Eval {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum, default_value_t = EvalMethod::Ode)]
        method: EvalMethod,
    },
    /// Evaluate the gradient of the objective at a point.
    Grad {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum, default_value_t = GradCliMethod::Adjoint)]
        method: GradCliMethod,
    },
    /// Simulate the descent-ascent flow and measure its behavior.
    Gda {
        #[arg(long)]
        x0: f64,
        #[arg(long)]
        y0: f64,
        #[arg(long)]
        tmax: f64,
        /// Write the trajectory as CSV (t,x,y,g,f).
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Verification suites.
    Verify {
        #[command(subcommand)]
        what: VerifyCommand,
    },
    /// Render the figure (level lines, prescription lines, ellipses, orbit).
    Figure {
        #[arg(long, value_name = "PATH", default_value = "figure.svg")]
        out: PathBuf,
    },
    /// Trace the level line of the objective through a point to CSV.
    Levelline {
        #[arg(long)]
        x0: f64,
        #[arg(long)]
        y0: f64,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Two-sided PL certificate on a grid.
    Pl {
        #[arg(long, default_value_t = 161)]
        grid: usize,
        #[arg(long, default_value_t = 2.0)]
        half_width: f64,
    },
    /// Algebraic and flow identity suite.
    Identities {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Origin Jacobian spectrum of the descent-ascent field.
    Spectrum,
}

fn emit_report(
    path: &Option<PathBuf>,
    params: ModelParams,
    checks: Vec<CheckResult>,
) -> plgda_core::Result<bool> {
    let envelope = ReportEnvelope::new(params, checks);
    if let Some(path) = path {
        let file = std::fs::File::create(path)?;
        envelope.write_json(file)?;
    }
    Ok(envelope.all_pass)
}

fn run(cli: Cli) -> plgda_core::Result<bool> {
    let cfg = IntegratorConfig::default().with_tols(cli.rel_tol, cli.abs_tol);
    let params = calibrated_params(&cfg)?;

    match cli.command {
        Command::Params => {
            let json = serde_json::to_value(params)?;
            for (key, value) in json.as_object().expect("params serialize to an object") {
                println!("{key}={value}");
            }
            emit_report(&cli.report, params, vec![])?;
            Ok(true)
        }
        Command::Eval { point, method } => {
            let p = Point::new(point.x, point.y);
            let value = match method {
                EvalMethod::Ode => eval_f_ode(p, &params, &cfg)?,
                EvalMethod::Quad => {
                    if p.norm() > params.r_core {
                        return Err(plgda_core::Error::InvalidInput(format!(
                            "quad method valid only for |p| <= r_core = {}",
                            params.r_core
                        )));
                    }
                    quad_saddle(p, &params)
                }
            };
            println!("{value}");
            let check = CheckResult::new(
                "eval",
                true,
                &serde_json::json!({"x": p.x, "y": p.y, "f": value}),
            )?;
            emit_report(&cli.report, params, vec![check])?;
            Ok(true)
        }
        Command::Grad { point, method } => {
            let p = Point::new(point.x, point.y);
            let result = match method {
                GradCliMethod::Adjoint => grad_f_adjoint(p, &params, &cfg)?,
                GradCliMethod::Fd => grad_f_fd(p, 1e-5, &params, &cfg)?,
            };
            println!("{} {}", result.grad.x, result.grad.y);
            let check = CheckResult::new(
                "grad",
                true,
                &serde_json::json!({
                    "x": p.x, "y": p.y,
                    "fx": result.grad.x, "fy": result.grad.y,
                    "estimated_error": result.estimated_error,
                }),
            )?;
            emit_report(&cli.report, params, vec![check])?;
            Ok(true)
        }
        Command::Gda { x0, y0, tmax, csv } => {
            let z0 = Point::new(x0, y0);
            let traj = simulate_gda(z0, &params, &cfg, tmax)?;
            if let Some(path) = csv {
                let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
                writeln!(out, "t,x,y,g,f")?;
                for (t, p) in traj.nodes() {
                    writeln!(
                        out,
                        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                        t,
                        p.x,
                        p.y,
                        quartic_invariant(p),
                        eval_f(p, &params, &cfg)?
                    )?;
                }
            }
            // Near the saddle the orbit converges; away from it, it circles.
            let check = if z0.norm() <= params.r_core / 2.0 {
                let report = local_convergence_run(z0, &params, &cfg, tmax)?;
                println!("{}", serde_json::to_string_pretty(&report)?);
                let pass = report.degenerate
                    || (report.fit_rate - -params.gamma).abs() <= 1e-3;
                CheckResult::new("gda_convergence", pass, &report)?
            } else {
                let report = detect_period(&traj, z0)?;
                println!("{}", serde_json::to_string_pretty(&report)?);
                let pass = report.max_g_drift_rel <= 1e-7 && report.return_distance <= 1e-4;
                CheckResult::new("gda_period", pass, &report)?
            };
            emit_report(&cli.report, params, vec![check])
        }
        Command::Verify { what } => match what {
            VerifyCommand::Pl { grid, half_width } => {
                let report = two_sided_pl_grid(&params, &cfg, grid, half_width)?;
                println!("{}", serde_json::to_string_pretty(&report)?);
                let pass = report.violations.is_empty()
                    && report.c_x.is_finite()
                    && report.c_y.is_finite()
                    && report.min_dxx_on_xminus > 0.0
                    && report.max_dyy_on_xplus < 0.0;
                emit_report(&cli.report, params, vec![CheckResult::new(
                    "two_sided_pl",
                    pass,
                    &report,
                )?])
            }
            VerifyCommand::Identities { samples, seed } => {
                let report = identity_suite(&params, &cfg, samples, seed)?;
                println!("{}", serde_json::to_string_pretty(&report)?);
                let pass = report.all_pass();
                emit_report(&cli.report, params, vec![CheckResult::new(
                    "identities",
                    pass,
                    &report,
                )?])
            }
            VerifyCommand::Spectrum => {
                let report = origin_spectrum(&params);
                println!("{}", serde_json::to_string_pretty(&report)?);
                let pass = report.max_real_part < 0.0;
                emit_report(&cli.report, params, vec![CheckResult::new(
                    "spectrum",
                    pass,
                    &report,
                )?])
            }
        },
        Command::Figure { out } => {
            let spec = FigureSpec::default();
            emit_figure_svg(&spec, &params, &cfg, &out)?;
            println!("wrote {}", out.display());
            emit_report(&cli.report, params, vec![])?;
            Ok(true)
        }
        Command::Levelline { x0, y0, csv } => {
            let z0 = Point::new(x0, y0);
            if z0 == Point::ORIGIN {
                return Err(plgda_core::Error::InvalidInput(
                    "the origin is a fixed point; it has no level line".into(),
                ));
            }
            let trace_cfg = IntegratorConfig {
                max_time: 40.0,
                ..cfg
            };
            let field = |p: Point| plgda_core::field::v(p, &params);
            let events = [
                Event::leave_square(params.r_domain),
                Event::enter_ball(0.02),
            ];
            let (back, _) = integrate(field, z0, Direction::Backward, &events, &trace_cfg)?;
            let (fwd, _) = integrate(field, z0, Direction::Forward, &events, &trace_cfg)?;
            if let Some(path) = csv {
                let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
                writeln!(out, "t,x,y")?;
                let backward: Vec<(f64, Point)> = back.nodes().collect();
                for &(t, p) in backward.iter().rev() {
                    if t == 0.0 {
                        continue; // the seed is written by the forward half
                    }
                    writeln!(out, "{:.16e},{:.16e},{:.16e}", -t, p.x, p.y)?;
                }
                for (t, p) in fwd.nodes() {
                    writeln!(out, "{:.16e},{:.16e},{:.16e}", t, p.x, p.y)?;
                }
            }
            println!(
                "level line through ({}, {}): {} nodes backward, {} nodes forward",
                x0,
                y0,
                back.len(),
                fwd.len()
            );
            emit_report(&cli.report, params, vec![])?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
