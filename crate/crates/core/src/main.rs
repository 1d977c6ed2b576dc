use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use coconvex::error::{Error, Result};
use coconvex::harness::{
    emit, fmt_sig, parse_continuity, parse_p, run_experiment, Experiment, ExperimentConfig, OutputFormat,
};
use coconvex::korovkin::{fejer_from_coeffs, fourier_coeffs, tn_from_coeffs, OperatorSpec, TnMode};
use coconvex::polynomials::{chebyshev_knots, Interval};
use coconvex::smoothness::{
    classical_modulus, dt_modulus, dt_modulus_convergence, weighted_dt_modulus, MeshPartition, ModulusSpec, StepMode,
};
use coconvex::solvers::{best_approximation, best_spline, ApproxProblem, ShapeConstraint, SplineOptions};
use coconvex::stieltjes::{ls_integral, IntegralOptions, Integrator, LsIntegral};
use coconvex::weighted_spaces::{weighted_norm_estimate, JacobiWeight};

#[derive(Parser)]
#[command(name = "coconvex", version, about = "Weighted and shape-preserving polynomial approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weighted L_p norm of a function.
    Norm {
        #[command(flatten)]
        common: Common,
        /// Interval `a,b` (default -1,1).
        #[arg(long)]
        interval: Option<String>,
    },
    /// Classical or Ditzian–Totik modulus of smoothness.
    Modulus {
        #[command(flatten)]
        common: Common,
        /// classical | dt | weighted | convergence
        #[arg(long, default_value = "dt")]
        kind: String,
        /// Step bound t (or δ).
        #[arg(long, default_value_t = 0.1)]
        t: f64,
        /// phi | const
        #[arg(long, default_value = "phi")]
        step: String,
    },
    /// Best polynomial approximation, optionally convex or coconvex.
    /// Unconstrained unless `--shape` or `--inflections` is given.
    Approx {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        interval: Option<String>,
    },
    /// Best spline approximation on a Chebyshev partition with `--degree` pieces.
    Spline {
        #[command(flatten)]
        common: Common,
    },
    /// Lebesgue–Stieltjes integral with the identity integrator.
    Stieltjes {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        interval: Option<String>,
        #[arg(long, default_value_t = 1e-4)]
        ls_tol: f64,
    },
    /// Fejér and nodal operators applied to a 2π-periodic function.
    Korovkin {
        #[command(flatten)]
        common: Common,
        /// literal | reduction
        #[arg(long, default_value = "reduction")]
        tn_mode: String,
    },
    /// Experiments: table | ratio | thm212 | jackson | example28.
    Experiment {
        which: String,
        #[command(flatten)]
        common: Common,
    },
}

/// Flags shared by every subcommand; each overrides the `--config` file.
#[derive(Args, Default)]
struct Common {
    /// Registry name or expression in x.
    #[arg(long = "fn")]
    function: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// 1, 2, inf or a real >= 1.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    /// none | convex | coconvex
    #[arg(long)]
    shape: Option<String>,
    /// Comma-separated inflection points.
    #[arg(long, allow_hyphen_values = true)]
    inflections: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    /// m:N
    #[arg(long)]
    n_range: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// JSON file mirroring the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spline order.
    #[arg(long)]
    k: Option<usize>,
    /// Derivative order / power of φ.
    #[arg(long)]
    r: Option<usize>,
    /// Difference order of the modulus.
    #[arg(long)]
    modulus_order: Option<usize>,
    /// C0 | C1
    #[arg(long)]
    continuity: Option<String>,
    #[arg(long)]
    threshold: Option<bool>,
    #[arg(long)]
    tol: Option<f64>,
    /// paper-literal | corrected
    #[arg(long)]
    mode: Option<String>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                ExperimentConfig::from_json(&text)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.function {
            cfg.function = v.clone();
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = &self.p {
            cfg.p = parse_p(v)?;
        }
        if let Some(v) = self.degree {
            cfg.degree = Some(v);
        }
        if let Some(v) = &self.shape {
            cfg.shape = Some(v.parse()?);
        }
        if let Some(v) = &self.inflections {
            cfg.inflections = Some(parse_list(v)?);
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.eta {
            cfg.eta = v;
        }
        if let Some(v) = &self.n_range {
            cfg.n_range = v.parse()?;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = &self.format {
            cfg.format = v.parse()?;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.r {
            cfg.r = v;
        }
        if let Some(v) = self.modulus_order {
            cfg.modulus_order = v;
        }
        if let Some(v) = &self.continuity {
            cfg.continuity = parse_continuity(v)?;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = Some(v);
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = &self.mode {
            cfg.mode = v.parse()?;
        }
        Ok(cfg)
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parameter(format!("'{t}' is not a number")))
        })
        .collect()
}

fn parse_interval(s: Option<&str>) -> Result<Interval> {
    match s {
        None => Ok(Interval::UNIT),
        Some(s) => match parse_list(s)?.as_slice() {
            [a, b] => Interval::new(*a, *b),
            _ => Err(Error::Parameter(format!("interval '{s}' must be a,b"))),
        },
    }
}

/// Renders `(quantity, value)` pairs.
fn table(cfg: &ExperimentConfig, pairs: &[(String, String)], obj: serde_json::Value) -> String {
    match cfg.format {
        OutputFormat::Csv => {
            let mut s = String::from("quantity,value\n");
            for (k, v) in pairs {
                s.push_str(&format!("{k},{v}\n"));
            }
            s
        }
        OutputFormat::Json => format!("{}\n", serde_json::to_string_pretty(&obj).expect("json")),
    }
}

fn run(cli: Cli) -> Result<(String, Option<String>)> {
    match cli.command {
        Command::Norm { common, interval } => {
            let cfg = common.config()?;
            let f = cfg.resolve()?.func();
            let norm = cfg.norm()?.with_interval(parse_interval(interval.as_deref())?);
            let est = weighted_norm_estimate(f.as_fn(), &norm)?;
            let pairs = vec![
                ("norm".into(), fmt_sig(est.value)),
                ("error_estimate".into(), fmt_sig(est.error_estimate)),
            ];
            Ok((table(&cfg, &pairs, json!(est)), cfg.out))
        }
        Command::Modulus { common, kind, t, step } => {
            let cfg = common.config()?;
            let f = cfg.resolve()?.func();
            let mode = match step.as_str() {
                "phi" => StepMode::Phi,
                "const" | "constant" => StepMode::Constant,
                _ => return Err(Error::Parameter(format!("unknown step mode '{step}' (phi|const)"))),
            };
            let mut spec = ModulusSpec::new(cfg.modulus_order, cfg.p).with_r(cfg.r as u32).with_step(mode);
            if cfg.alpha != 0.0 || cfg.beta != 0.0 || kind == "weighted" {
                spec = spec.with_weight(JacobiWeight::new(cfg.alpha, cfg.beta));
            }
            let mut pairs: Vec<(String, String)> = Vec::new();
            match kind.as_str() {
                "classical" => pairs.push(("modulus".into(), fmt_sig(classical_modulus(f.as_fn(), cfg.modulus_order, t, cfg.p)?))),
                "dt" => pairs.push(("modulus".into(), fmt_sig(dt_modulus(f.as_fn(), &spec, t)?))),
                "weighted" => {
                    let n = cfg.degree.ok_or_else(|| Error::Parameter("--degree sets the partition size".into()))?;
                    let mesh = MeshPartition::chebyshev(n)?;
                    pairs.push(("mesh_norm".into(), fmt_sig(mesh.mesh_norm())));
                    pairs.push(("modulus".into(), fmt_sig(weighted_dt_modulus(f.as_fn(), &spec, &mesh)?)));
                }
                "convergence" => {
                    let (coarse, fine) = dt_modulus_convergence(f.as_fn(), &spec, t)?;
                    pairs.push(("modulus".into(), fmt_sig(coarse)));
                    pairs.push(("modulus_doubled_grid".into(), fmt_sig(fine)));
                }
                _ => return Err(Error::Parameter(format!("unknown modulus kind '{kind}'"))),
            }
            let obj: serde_json::Map<String, serde_json::Value> =
                pairs.iter().map(|(k, v)| (k.clone(), json!(v.parse::<f64>().ok()))).collect();
            Ok((table(&cfg, &pairs, serde_json::Value::Object(obj)), cfg.out))
        }
        Command::Approx { common, interval } => {
            let cfg = common.config()?;
            let f = cfg.resolve()?.func();
            let n = cfg.degree.ok_or_else(|| Error::Parameter("--degree is required".into()))?;
            let norm = cfg.norm()?.with_interval(parse_interval(interval.as_deref())?);
            let constraint = if cfg.shape.is_none() && cfg.inflections.is_none() {
                ShapeConstraint::None
            } else {
                cfg.constraint()?
            };
            let prob = ApproxProblem::new(f, n, norm)
                .with_constraint(constraint)
                .with_tol(cfg.tol);
            let sol = best_approximation(&prob)?;
            let mut pairs = vec![
                ("error".into(), fmt_sig(sol.error)),
                ("discretization_error_estimate".into(), fmt_sig(sol.discretization_error_estimate)),
                ("status".into(), sol.status.as_str().to_string()),
                ("iterations".into(), sol.iterations.to_string()),
            ];
            for (j, c) in sol.polynomial.coeffs().iter().enumerate() {
                pairs.push((format!("c{j}"), fmt_sig(*c)));
            }
            let obj = json!({
                "error": sol.error,
                "discretization_error_estimate": sol.discretization_error_estimate,
                "status": sol.status.as_str(),
                "iterations": sol.iterations,
                "constraint_residual": sol.constraint_residual,
                "chebyshev_coefficients": sol.polynomial.coeffs(),
            });
            Ok((table(&cfg, &pairs, obj), cfg.out))
        }
        Command::Spline { common } => {
            let cfg = common.config()?;
            let f = cfg.resolve()?.func();
            let n = cfg.degree.ok_or_else(|| Error::Parameter("--degree sets the number of pieces".into()))?;
            let part = chebyshev_knots(n)?;
            let opts = SplineOptions {
                solver_tol: cfg.tol,
                ..SplineOptions::default()
            };
            let sol = best_spline(&f, part.knots(), cfg.k, cfg.continuity, &cfg.constraint()?, &cfg.norm()?, &opts)?;
            let pairs = vec![
                ("error".into(), fmt_sig(sol.error)),
                ("discretization_error_estimate".into(), fmt_sig(sol.discretization_error_estimate)),
                ("status".into(), sol.status.as_str().to_string()),
                ("mesh_norm".into(), fmt_sig(part.mesh_norm())),
            ];
            let pieces: Vec<&[f64]> = sol.spline.pieces().iter().map(|p| p.coeffs()).collect();
            let obj = json!({
                "error": sol.error,
                "discretization_error_estimate": sol.discretization_error_estimate,
                "status": sol.status.as_str(),
                "knots": sol.spline.knots(),
                "pieces": pieces,
            });
            Ok((table(&cfg, &pairs, obj), cfg.out))
        }
        Command::Stieltjes { common, interval, ls_tol } => {
            let cfg = common.config()?;
            let f = cfg.resolve()?.func();
            let iv = parse_interval(interval.as_deref())?;
            let res = ls_integral(f.as_fn(), (iv.a, iv.b), &[Integrator::identity()], IntegralOptions::new(ls_tol))?;
            let (verdict, value, sums, cells) = match res {
                LsIntegral::Integrable { value, sums, cells } => ("INTEGRABLE", Some(value), sums, cells),
                LsIntegral::NotIntegrable { sums, cells } => ("NOT_INTEGRABLE", None, sums, cells),
            };
            let pairs = vec![
                ("verdict".into(), verdict.to_string()),
                ("value".into(), value.map(fmt_sig).unwrap_or_else(|| "NA".into())),
                ("lower".into(), fmt_sig(sums.lower)),
                ("upper".into(), fmt_sig(sums.upper)),
                ("cells".into(), cells.to_string()),
            ];
            let obj = json!({"verdict": verdict, "value": value, "lower": sums.lower, "upper": sums.upper, "cells": cells});
            Ok((table(&cfg, &pairs, obj), cfg.out))
        }
        Command::Korovkin { common, tn_mode } => {
            let cfg = common.config()?;
            let f = cfg.resolve()?.func();
            let n = cfg.degree.ok_or_else(|| Error::Parameter("--degree sets the operator index".into()))?;
            let mode = match tn_mode.as_str() {
                "literal" => TnMode::Literal,
                "reduction" => TnMode::Reduction,
                _ => return Err(Error::Parameter(format!("unknown mode '{tn_mode}' (literal|reduction)"))),
            };
            let coeffs = fourier_coeffs(f.as_fn(), n);
            let spec = OperatorSpec::default();
            let (mut fejer, mut tn) = (0.0f64, 0.0f64);
            for j in 0..1024 {
                let x = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / 1024.0;
                fejer = fejer.max((fejer_from_coeffs(&coeffs, n, x)? - f.eval(x)).abs());
                tn = tn.max((tn_from_coeffs(&coeffs, &spec, n, x, mode)? - f.eval(x)).abs());
            }
            let pairs = vec![
                ("fejer_sup_error".into(), fmt_sig(fejer)),
                ("tn_sup_error".into(), fmt_sig(tn)),
            ];
            Ok((table(&cfg, &pairs, json!({"fejer_sup_error": fejer, "tn_sup_error": tn})), cfg.out))
        }
        Command::Experiment { which, common } => {
            let which: Experiment = which.parse()?;
            let cfg = common.config()?;
            Ok((run_experiment(which, &cfg)?, cfg.out))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).and_then(|(text, out)| emit(&text, out.as_deref())) {
        Ok(Some(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
