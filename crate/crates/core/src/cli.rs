//! Command-line front end.
//!
//! Every experiment writes `<subcommand>-<seed>.<csv|json>` into `--out`.
//! Exit status: 0 when all pass flags hold, 1 when a check fails, 2 on a
//! configuration or usage error.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expr::FunctionSpec;
use crate::girsanov::{girsanov_density, measure_change_test, novikov_value, shifted_path, MeasureChangeConfig};
use crate::harness::{convergence_study, rms, StudyConfig, Target};
use crate::ito::{euler_delta_sde, general_ito_sides, ito_sides, SdeSpec, Variant};
use crate::path::{sample_path, RngConfig};
use crate::report::{num, Format, Report};
use crate::stoch_exp::{exponential_report, regressivity_check, Coefficient};
use crate::timescale::{ScaleSpec, TimeScale};

#[derive(Debug, Parser)]
#[command(
    name = "tscale",
    version,
    about = "Stochastic calculus on time scales: Ito formula, stochastic exponential and Girsanov checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scale spec file (JSON: {"pieces": [...]})
    #[arg(long, global = true)]
    pub scale: Option<PathBuf>,
    /// Start time for exp-check and girsanov-check [default: scale minimum]
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    /// Window start [default: scale minimum]
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t1: Option<f64>,
    /// Window end [default: scale maximum]
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t2: Option<f64>,
    /// Refinement level n (dense steps <= 2^-n)
    #[arg(long, global = true, default_value_t = 8)]
    pub refine: u32,
    /// Number of Monte-Carlo paths
    #[arg(long, global = true, default_value_t = 1000)]
    pub paths: u64,
    /// Seed of the per-path random streams
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Test function f(t, x)
    #[arg(long = "f", global = true, default_value = "x^2")]
    pub f: String,
    /// Coefficient A(t, x), evaluated at (t, W_t)
    #[arg(long = "A", global = true, default_value = "1")]
    pub a: String,
    /// SDE drift b(t, x)
    #[arg(long = "b", global = true, default_value = "0")]
    pub b: String,
    /// SDE diffusion s(t, x)
    #[arg(long = "s", global = true, default_value = "1")]
    pub s: String,
    /// SDE initial value
    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x0: f64,
    /// General Ito reading that decides pass/fail: as_printed | substituted
    #[arg(long, global = true, default_value = "as_printed")]
    pub variant: String,
    /// Pass threshold [default: 1e-9 for residual checks, 0.02 for exp-check RMS relative error]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory for report files
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Write report files without the stdout summary
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// Report serialization: csv | json
    #[arg(long, global = true, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Describe a scale: segments, gaps and partition size
    Scale,
    /// Both sides of the Ito formula for f(t, W_t) on every path
    ItoCheck,
    /// General Ito formula for f(t, X_t), X solving dX = b dt + s dW
    GeneralItoCheck,
    /// Closed-form stochastic exponential against the Euler recursion
    ExpCheck,
    /// Girsanov reweighting: weighted moments of the shifted process
    GirsanovCheck {
        /// Also write per-path weights and increments
        #[arg(long)]
        dump_paths: bool,
    },
    /// Refinement study over several levels
    Converge {
        /// time-integral | stoch-integral | quadratic-variation | ito-residual | exp-error
        #[arg(long, default_value = "ito-residual")]
        target: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![6u32, 8, 10, 12, 14])]
        levels: Vec<u32>,
    },
    /// Ito telescoping and the product-form exponential on a quantum scale
    QscaleDemo {
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = -20, allow_hyphen_values = true)]
        kmin: i32,
        #[arg(long, default_value_t = 3, allow_hyphen_values = true)]
        kmax: i32,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Scale => "scale",
            Command::ItoCheck => "ito-check",
            Command::GeneralItoCheck => "general-ito-check",
            Command::ExpCheck => "exp-check",
            Command::GirsanovCheck { .. } => "girsanov-check",
            Command::Converge { .. } => "converge",
            Command::QscaleDemo { .. } => "qscale-demo",
        }
    }
}

/// Parses `argv` and runs the subcommand, returning the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Domain { .. } | Error::NotRegressive { .. } => 1,
                _ => 2,
            }
        }
    }
}

struct Outcome {
    report: Report,
    pass: bool,
    extra: Option<(String, Report)>,
}

fn execute(cli: &Cli) -> Result<bool> {
    let c = &cli.common;
    let outcome = match &cli.command {
        Command::Scale => scale_cmd(c)?,
        Command::ItoCheck => ito_cmd(c)?,
        Command::GeneralItoCheck => general_ito_cmd(c)?,
        Command::ExpCheck => exp_cmd(c)?,
        Command::GirsanovCheck { dump_paths } => girsanov_cmd(c, *dump_paths)?,
        Command::Converge { target, levels } => converge_cmd(c, target, levels)?,
        Command::QscaleDemo { q, kmin, kmax } => qscale_cmd(c, *q, *kmin, *kmax)?,
    };
    let stem = format!("{}-{}", cli.command.name(), c.seed);
    let written = write(&outcome.report, &c.out, &stem, c.format)?;
    let dumped = match &outcome.extra {
        Some((suffix, extra)) => Some(write(extra, &c.out, &format!("{stem}-{suffix}"), Format::Csv)?),
        None => None,
    };
    if c.quiet {
        return Ok(outcome.pass);
    }
    println!("{}: {}", cli.command.name(), if outcome.pass { "PASS" } else { "FAIL" });
    for (k, v) in &outcome.report.summary {
        println!("  {k} = {v}");
    }
    println!("  report: {}", written.display());
    if let Some(p) = dumped {
        println!("  paths: {}", p.display());
    }
    Ok(outcome.pass)
}

fn write(report: &Report, dir: &Path, stem: &str, format: Format) -> Result<PathBuf> {
    report
        .write(dir, stem, format)
        .map_err(|e| Error::Config(format!("cannot write report to {}: {e}", dir.display())))
}

fn load_scale(c: &Common) -> Result<TimeScale> {
    match &c.scale {
        Some(path) => ScaleSpec::load(path)?.build(),
        None => Err(Error::Config("--scale FILE is required".into())),
    }
}

fn window(c: &Common, ts: &TimeScale, start: Option<f64>) -> (f64, f64) {
    (start.unwrap_or(ts.min()), c.t2.unwrap_or(ts.max()))
}

fn common_fields(r: &mut Report, c: &Common, ts: &TimeScale) {
    r.field("scale", ts.to_string())
        .field("n", c.refine)
        .field("paths", c.paths)
        .field("seed", c.seed);
}

fn scale_cmd(c: &Common) -> Result<Outcome> {
    let ts = load_scale(c)?;
    let (t1, t2) = window(c, &ts, c.t1);
    let gaps = ts.gaps_between(t1, t2)?;
    let mut r = Report::new();
    r.field("scale", ts.to_string())
        .float("min", ts.min())
        .float("max", ts.max())
        .field("segments", ts.segments().len())
        .field("discrete", ts.is_discrete())
        .float("t1", t1)
        .float("t2", t2)
        .field("gaps_in_window", gaps.len());
    if t1 < t2 {
        r.field("n", c.refine)
            .field("partition_points", ts.partition(t1, t2, c.refine)?.len());
    }
    r.set_columns(&["kind", "a", "b"]);
    for &(a, b) in ts.segments() {
        r.push_row(vec![json!("segment"), num(a), num(b)]);
    }
    for g in &gaps {
        r.push_row(vec![json!("gap"), num(g.s_minus), num(g.s_plus)]);
    }
    Ok(Outcome {
        report: r,
        pass: true,
        extra: None,
    })
}

fn ito_cmd(c: &Common) -> Result<Outcome> {
    let ts = load_scale(c)?;
    let (t1, t2) = window(c, &ts, c.t1);
    let fs = FunctionSpec::parse(&c.f)?;
    let p = Arc::new(ts.partition(t1, t2, c.refine)?);
    let reports = (0..c.paths)
        .into_par_iter()
        .map(|id| ito_sides(&fs, &ts, &sample_path(p.clone(), RngConfig::new(c.seed, id)), t1, t2))
        .collect::<Result<Vec<_>>>()?;
    let tol = c.tol.unwrap_or(1e-9);
    let max_res = reports.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    let pass = max_res <= tol;

    let mut r = Report::new();
    r.field("f", c.f.as_str());
    common_fields(&mut r, c, &ts);
    r.float("t1", t1)
        .float("t2", t2)
        .float("max_abs_residual", max_res)
        .float("rms_residual", rms(reports.iter().map(|r| r.residual)))
        .float("tol", tol)
        .field("pass", pass);
    r.set_columns(&["path_id", "n", "lhs", "rhs", "residual", "correction_sum"]);
    for (id, rep) in reports.iter().enumerate() {
        r.push_row(vec![
            json!(id),
            json!(c.refine),
            num(rep.lhs),
            num(rep.rhs),
            num(rep.residual),
            num(rep.correction_sum),
        ]);
    }
    Ok(Outcome {
        report: r,
        pass,
        extra: None,
    })
}

fn general_ito_cmd(c: &Common) -> Result<Outcome> {
    let ts = load_scale(c)?;
    let (t1, t2) = window(c, &ts, c.t1);
    let fs = FunctionSpec::parse(&c.f)?;
    let sde = SdeSpec::parse(&c.b, &c.s, c.x0)?;
    let selected: Variant = c.variant.parse()?;
    let p = Arc::new(ts.partition(t1, t2, c.refine)?);
    let variants = [Variant::AsPrinted, Variant::Substituted];
    let per_path = (0..c.paths)
        .into_par_iter()
        .map(|id| {
            let path = sample_path(p.clone(), RngConfig::new(c.seed, id));
            let x = euler_delta_sde(&sde, &path, t1, t2)?;
            variants
                .iter()
                .map(|&v| general_ito_sides(&fs, &ts, &sde, &x, &path, t1, t2, v))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let tol = c.tol.unwrap_or(1e-9);

    let mut r = Report::new();
    r.field("f", c.f.as_str())
        .field("b", c.b.as_str())
        .field("s", c.s.as_str())
        .float("x0", c.x0);
    common_fields(&mut r, c, &ts);
    r.float("t1", t1).float("t2", t2);
    let mut pass = false;
    for (k, v) in variants.iter().enumerate() {
        let max_res = per_path.iter().map(|p| p[k].residual.abs()).fold(0.0, f64::max);
        let mean_res = per_path.iter().map(|p| p[k].residual).sum::<f64>() / per_path.len().max(1) as f64;
        r.float(&format!("max_abs_residual_{}", v.name()), max_res)
            .float(&format!("mean_residual_{}", v.name()), mean_res);
        if *v == selected {
            pass = max_res <= tol;
        }
    }
    r.field("variant", selected.name()).float("tol", tol).field("pass", pass);
    r.set_columns(&["path_id", "n", "variant", "lhs", "rhs", "residual", "correction_sum"]);
    for (id, reps) in per_path.iter().enumerate() {
        for (v, rep) in variants.iter().zip(reps) {
            r.push_row(vec![
                json!(id),
                json!(c.refine),
                json!(v.name()),
                num(rep.lhs),
                num(rep.rhs),
                num(rep.residual),
                num(rep.correction_sum),
            ]);
        }
    }
    Ok(Outcome {
        report: r,
        pass,
        extra: None,
    })
}

fn exp_cmd(c: &Common) -> Result<Outcome> {
    let ts = load_scale(c)?;
    let (t0, t) = window(c, &ts, c.t0.or(c.t1));
    let a = Coefficient::parse(&c.a)?;
    let p = Arc::new(ts.partition(t0, t, c.refine)?);
    let rows = (0..c.paths)
        .into_par_iter()
        .map(|id| {
            let path = sample_path(p.clone(), RngConfig::new(c.seed, id));
            let failures = regressivity_check(&a, &path, t0, t)?
                .iter()
                .filter(|e| !e.pass)
                .count();
            if failures > 0 {
                return Ok(Err(failures));
            }
            exponential_report(&a, &path, t0, t).map(Ok)
        })
        .collect::<Result<Vec<_>>>()?;
    let failures: usize = rows.iter().filter_map(|r| r.as_ref().err()).sum();
    let ok: Vec<_> = rows.iter().filter_map(|r| r.as_ref().ok()).collect();
    let tol = c.tol.unwrap_or(0.02);
    let rms_rel = rms(ok.iter().map(|r| r.rel_error));
    let pass = failures == 0 && rms_rel <= tol;

    let mut r = Report::new();
    r.field("A", c.a.as_str());
    common_fields(&mut r, c, &ts);
    r.float("t0", t0)
        .float("t", t)
        .field("discrete", ts.is_discrete())
        .float("rms_rel_error", rms_rel)
        .float("max_abs_rel_error", ok.iter().map(|r| r.rel_error.abs()).fold(0.0, f64::max))
        .field("regressivity_failures", failures)
        .float("tol", tol)
        .field("pass", pass);
    r.set_columns(&["path_id", "U", "D", "V", "closed_form", "recursive", "rel_error"]);
    for (id, row) in rows.iter().enumerate() {
        if let Ok(e) = row {
            r.push_row(vec![
                json!(id),
                num(e.u),
                num(e.d),
                num(e.v),
                num(e.closed_form),
                num(e.recursive),
                num(e.rel_error),
            ]);
        }
    }
    Ok(Outcome {
        report: r,
        pass,
        extra: None,
    })
}

fn girsanov_cmd(c: &Common, dump_paths: bool) -> Result<Outcome> {
    let ts = load_scale(c)?;
    let (t0, t_end) = window(c, &ts, c.t0.or(c.t1));
    let coefficient = Coefficient::parse(&c.a)?;
    let cfg = MeasureChangeConfig {
        coefficient: coefficient.clone(),
        t0,
        t_end,
        level: c.refine,
        paths: c.paths,
        seed: c.seed,
    };
    let rep = measure_change_test(&ts, &cfg)?;
    let pass = rep.passed();

    let mut r = Report::new();
    r.field("A", c.a.as_str()).field("scale", ts.to_string());
    r.extend_from(&rep);
    if coefficient.is_deterministic() {
        let nov = novikov_value(&coefficient, &ts, t0, t_end, c.refine)?;
        r.float("novikov_exponent", nov.exponent)
            .field("novikov_overflow", nov.overflow);
    }
    r.field("pass", pass);
    r.set_columns(&[
        "from",
        "to",
        "target_m2",
        "weighted_mean",
        "se_mean",
        "weighted_m2",
        "se_m2",
        "pass_mean",
        "pass_m2",
    ]);
    for m in &rep.increments {
        r.push_row(vec![
            num(m.from),
            num(m.to),
            num(m.target_m2),
            num(m.weighted_mean),
            num(m.se_mean),
            num(m.weighted_m2),
            num(m.se_m2),
            json!(m.pass_mean),
            json!(m.pass_m2),
        ]);
    }

    let extra = if dump_paths {
        let p = Arc::new(ts.partition(t0, t_end, c.refine)?);
        let dump = (0..c.paths)
            .into_par_iter()
            .map(|id| {
                let path = sample_path(p.clone(), RngConfig::new(c.seed, id));
                let g = girsanov_density(&coefficient, &path, t0, t_end)?;
                let b = shifted_path(&coefficient, &path)?;
                Ok(vec![json!(id), num(g), num(b[b.len() - 1] - b[0])])
            })
            .collect::<Result<Vec<Vec<Value>>>>()?;
        let mut d = Report::new();
        d.set_columns(&["path_id", "weight", "b_increment"]);
        d.rows = dump;
        Some(("paths".to_string(), d))
    } else {
        None
    };
    Ok(Outcome {
        report: r,
        pass,
        extra,
    })
}

fn converge_cmd(c: &Common, target: &str, levels: &[u32]) -> Result<Outcome> {
    let ts = load_scale(c)?;
    let target: Target = target.parse()?;
    let (t1, t2) = window(c, &ts, if target == Target::ExpError { c.t0.or(c.t1) } else { c.t1 });
    let cfg = StudyConfig {
        t1,
        t2,
        levels: levels.to_vec(),
        paths: c.paths,
        seed: c.seed,
        f: FunctionSpec::parse(&c.f)?,
        a: Coefficient::parse(&c.a)?,
    };
    let table = convergence_study(&ts, target, &cfg)?;
    let pass = table.rms_strictly_decreasing();

    let mut r = Report::new();
    r.field("target", target.name())
        .field("scale", ts.to_string())
        .field("f", c.f.as_str())
        .field("A", c.a.as_str())
        .float("t1", t1)
        .float("t2", t2)
        .field("paths", c.paths)
        .field("seed", c.seed)
        .field("pass", pass);
    r.set_columns(&["n", "mean", "rms", "variance", "bound", "paths"]);
    for row in &table.rows {
        r.push_row(vec![
            json!(row.n),
            num(row.mean),
            num(row.rms),
            num(row.variance),
            row.bound.map_or(Value::Null, num),
            json!(row.paths),
        ]);
    }
    Ok(Outcome {
        report: r,
        pass,
        extra: None,
    })
}

fn qscale_cmd(c: &Common, q: f64, kmin: i32, kmax: i32) -> Result<Outcome> {
    let ts = TimeScale::qscale(q, kmin, kmax, true)?;
    let (t1, t2) = (0.0, ts.max());
    let fs = FunctionSpec::parse(&c.f)?;
    let a = Coefficient::parse(&c.a)?;
    let p = Arc::new(ts.partition(t1, t2, 0)?);
    let rows = (0..c.paths)
        .into_par_iter()
        .map(|id| {
            let path = sample_path(p.clone(), RngConfig::new(c.seed, id));
            let ito = ito_sides(&fs, &ts, &path, t1, t2)?;
            let exp = exponential_report(&a, &path, t1, t2)?;
            // product form over the truncated tail, written out directly
            let av = a.sample(&path)?;
            let product = (0..path.times().len() - 1)
                .map(|i| 1.0 + av[i] * path.increment(i))
                .product::<f64>();
            Ok((ito, exp, product))
        })
        .collect::<Result<Vec<_>>>()?;
    let tol = c.tol.unwrap_or(1e-9);
    let max_res = rows.iter().map(|r| r.0.residual.abs()).fold(0.0, f64::max);
    let max_exp = rows
        .iter()
        .map(|(_, e, prod)| {
            let scale = e.closed_form.abs().max(1.0);
            ((e.closed_form - e.recursive).abs().max((e.closed_form - prod).abs())) / scale
        })
        .fold(0.0, f64::max);
    let pass = max_res <= tol && max_exp <= 1e-12;

    let mut r = Report::new();
    r.field("f", c.f.as_str())
        .field("A", c.a.as_str())
        .float("q", q)
        .field("kmin", kmin)
        .field("kmax", kmax)
        .float("truncation_gap", q.powi(kmin))
        .field("paths", c.paths)
        .field("seed", c.seed)
        .float("max_abs_residual", max_res)
        .float("max_exp_discrepancy", max_exp)
        .float("tol", tol)
        .field("pass", pass);
    r.set_columns(&[
        "path_id",
        "lhs",
        "rhs",
        "residual",
        "correction_sum",
        "closed_form",
        "recursive",
        "product",
    ]);
    for (id, (ito, exp, prod)) in rows.iter().enumerate() {
        r.push_row(vec![
            json!(id),
            num(ito.lhs),
            num(ito.rhs),
            num(ito.residual),
            num(ito.correction_sum),
            num(exp.closed_form),
            num(exp.recursive),
            num(*prod),
        ]);
    }
    Ok(Outcome {
        report: r,
        pass,
        extra: None,
    })
}
