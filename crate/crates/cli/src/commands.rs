use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fiberlay::dynamics::{simulate, simulate_stream, Trajectory};
use fiberlay::ergodics::{
    fit_decay, hypocoercivity_rate, maximal_rate, mixing_series, optimal_sigma, rate_constants_report, run_batches,
    stationarity_audit, ObservableSeries, RateParams,
};
use fiberlay::{Scheme, SimConfig, FORMAT_HEADER};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{read_toml, write_toml, Defaults, RunArgs, RunConfig, CODE_VERSION, MANIFEST};
use crate::error::{CliError, CliResult};

/// Files written and lines for the standard output.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    /// Names of failed checks.
    pub failed: Vec<String>,
}

pub const FORMAT_TAG: &str = "fiberlay-format v1";
pub const FIGURE_SIGMAS: [f64; 4] = [0.0, 0.1, 0.5, 4.0];

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_trajectory(path: &Path, tr: &Trajectory<f64>) -> CliResult<()> {
    let mut w = create(path)?;
    tr.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn simulate_cmd(args: &RunArgs) -> CliResult<Outcome> {
    let cfg = RunConfig::resolve("simulate", args, &Defaults::simulate())?;
    let pot = cfg.potential()?;
    let mut out = Outcome::default();
    out.files.push(cfg.write_manifest()?);
    if cfg.n_paths == 1 {
        match simulate(&cfg.sim, &pot, &cfg.init) {
            Ok(tr) => {
                let path = cfg.out.join("trajectory.csv");
                write_trajectory(&path, &tr)?;
                out.lines.push(format!("records = {}", tr.len()));
                out.lines.push(format!("chart_events = {}", tr.events.len()));
                out.files.push(path);
            }
            Err(fail) => {
                if !fail.partial.is_empty() {
                    write_trajectory(&cfg.out.join("trajectory.partial.csv"), &fail.partial)?;
                }
                return Err(fail.error.into());
            }
        }
        return Ok(out);
    }
    let batches = run_batches(cfg.n_paths, Vec::new, |acc: &mut Vec<Trajectory<f64>>, p| {
        acc.push(simulate_stream(&cfg.sim, &pot, &cfg.init, p).map_err(|f| f.error)?);
        Ok(())
    })?;
    for (p, tr) in batches.into_iter().flatten().enumerate() {
        let path = cfg.out.join(format!("trajectory_{p:05}.csv"));
        write_trajectory(&path, &tr)?;
        out.files.push(path);
    }
    Ok(out)
}

pub fn figure_file(d: usize, sigma: f64) -> String {
    format!("figure_d{d}_sigma_{sigma}.csv")
}

fn gnuplot_script(d: usize, files: &[String]) -> String {
    let mut s = format!("{FORMAT_HEADER}\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set datafile commentschars '#'\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set terminal pngcairo size 1200,1000\n");
    s.push_str(&format!("set output 'figure_d{d}.png'\n"));
    s.push_str("set multiplot layout 2,2\n");
    if d == 2 {
        s.push_str("set size ratio -1\n");
    } else {
        s.push_str("set view equal xyz\n");
    }
    for (sigma, f) in FIGURE_SIGMAS.iter().zip(files) {
        s.push_str(&format!("set title 'sigma = {sigma}'\n"));
        if d == 2 {
            s.push_str(&format!("plot '{f}' using 2:3 with lines notitle\n"));
        } else {
            s.push_str(&format!("splot '{f}' using 2:3:4 with lines notitle\n"));
        }
    }
    s.push_str("unset multiplot\n");
    s
}

pub fn figures_cmd(args: &RunArgs) -> CliResult<Outcome> {
    let cfg = RunConfig::resolve("figures", args, &Defaults::figures())?;
    let d = cfg.sim.d;
    if d != 2 && d != 3 {
        return Err(CliError::Config(format!("figures need d = 2 or d = 3, got {d}")));
    }
    if cfg.sim.scheme != Scheme::EmbeddedHeunProjected {
        return Err(CliError::Config("figures use the embedded-heun-projected scheme".into()));
    }
    let pot = cfg.potential()?;
    let mut out = Outcome::default();
    out.files.push(cfg.write_manifest()?);
    let mut names = Vec::new();
    for sigma in FIGURE_SIGMAS {
        let sim = SimConfig { sigma, ..cfg.sim.clone() };
        let tr = simulate(&sim, &pot, &cfg.init).map_err(|f| CliError::from(f.error))?;
        let name = figure_file(d, sigma);
        let path = cfg.out.join(&name);
        write_trajectory(&path, &tr)?;
        out.lines.push(format!("roughness[sigma = {sigma}] = {:.16e}", tr.roughness()));
        out.files.push(path);
        names.push(name);
    }
    let script = cfg.out.join(format!("figure_d{d}.gp"));
    fs::write(&script, gnuplot_script(d, &names))?;
    out.files.push(script);
    Ok(out)
}

fn slug(name: &str) -> String {
    name.replace("|xi|", "normxi")
        .replace("^2", "sq")
        .replace('/', "_over_")
        .replace('.', "dot")
}

pub fn series_file(observable: &str) -> String {
    format!("series_{}.csv", slug(observable))
}

fn write_series(path: &Path, s: &ObservableSeries) -> CliResult<()> {
    let mut w = create(path)?;
    writeln!(w, "{FORMAT_HEADER}")?;
    writeln!(w, "t,mean,stderr")?;
    for ((t, m), e) in s.times.iter().zip(&s.means).zip(&s.std_errors) {
        writeln!(w, "{t:.16e},{m:.16e},{e:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn diagnose_cmd(args: &RunArgs) -> CliResult<Outcome> {
    let cfg = RunConfig::resolve("diagnose", args, &Defaults::diagnose())?;
    let pot = cfg.potential()?;
    let mut out = Outcome::default();
    out.files.push(cfg.write_manifest()?);
    let series = mixing_series(&cfg.sim, &pot, &cfg.observables, cfg.n_paths, &cfg.init)?;
    let mut summaries = Vec::new();
    for s in &series {
        let path = cfg.out.join(series_file(&s.observable));
        write_series(&path, s)?;
        out.files.push(path);
        let fit = match s.target {
            Some(t) => match fit_decay(s, t.value) {
                Ok(f) => {
                    out.lines.push(format!("observed decay rate[{}] = {:.16e}", s.observable, f.lambda_hat));
                    json!(f)
                }
                Err(e) => json!({ "error": e.to_string() }),
            },
            None => serde_json::Value::Null,
        };
        summaries.push(json!({
            "observable": s.observable,
            "target": s.target,
            "final_mean": s.means.last(),
            "final_stderr": s.std_errors.last(),
            "decay_fit": fit,
        }));
    }
    let audit = stationarity_audit(&cfg.sim, &pot, &cfg.init, cfg.n_paths, cfg.burn_in)?;
    out.lines.push(format!("stationarity max |z| = {:.6}", audit.max_abs_z()));
    let path = cfg.out.join("audit.json");
    write_json(
        &path,
        &json!({
            "format": FORMAT_TAG,
            "code_version": CODE_VERSION,
            "stationarity": audit,
            "series": summaries,
        }),
    )?;
    out.files.push(path);
    Ok(out)
}

#[derive(clap::Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct RateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[arg(long = "K1", visible_alias = "k1")]
    #[serde(rename = "K1", skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[arg(long = "K2", visible_alias = "k2")]
    #[serde(rename = "K2", skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    #[arg(long = "K3", visible_alias = "k3")]
    #[serde(rename = "K3", skip_serializing_if = "Option::is_none")]
    pub k3: Option<f64>,
    /// Dimension, for the coercivity sub-constants.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Poincare constant of exp(-Phi), for the coercivity sub-constants.
    #[arg(long = "Lambda", visible_alias = "lambda")]
    #[serde(rename = "Lambda", skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code_version: Option<String>,
}

pub fn rate_cmd(args: &RateArgs) -> CliResult<Outcome> {
    let base: RateArgs = match &args.config {
        Some(p) => read_toml(p)?,
        None => RateArgs::default(),
    };
    let a = RateArgs {
        config: None,
        eta: args.eta.or(base.eta),
        sigma: args.sigma.or(base.sigma),
        k1: args.k1.or(base.k1),
        k2: args.k2.or(base.k2),
        k3: args.k3.or(base.k3),
        d: args.d.or(base.d),
        lambda: args.lambda.or(base.lambda),
        out: args.out.clone().or(base.out),
        subcommand: Some("rate".into()),
        code_version: Some(CODE_VERSION.into()),
    };
    let need = |x: Option<f64>, name: &str| x.ok_or_else(|| CliError::Config(format!("--{name} is required")));
    let p = RateParams {
        eta: need(a.eta, "eta")?,
        sigma: need(a.sigma, "sigma")?,
        k1: need(a.k1, "K1")?,
        k2: need(a.k2, "K2")?,
        k3: need(a.k3, "K3")?,
    };
    p.validate()?;
    let lambda = hypocoercivity_rate(&p)?;
    let sigma_star = optimal_sigma(p.k3)?;
    let top = maximal_rate(&p)?;
    let mut out = Outcome::default();
    out.lines.push(format!("lambda = {lambda:.16e}"));
    out.lines.push(format!("sigma_star = {sigma_star:.16e}"));
    out.lines.push(format!("lambda_at_sigma_star = {top:.16e}"));
    let constants = match (a.d, a.lambda) {
        (Some(d), Some(l)) => {
            let r = rate_constants_report(d, p.sigma, l, p.eta)?;
            out.lines.push(format!("microscopic = {:.16e}", r.coercivity.microscopic));
            out.lines.push(format!("macroscopic = {:.16e}", r.coercivity.macroscopic));
            out.lines.push(format!("projected_bound = {:.16e}", r.coercivity.projected_bound));
            Some(r)
        }
        (None, None) => None,
        _ => return Err(CliError::Config("--d and --Lambda go together".into())),
    };
    let dir = a.out.clone().unwrap_or_else(|| PathBuf::from("fiberlay-out"));
    out.files.push(write_toml(&dir, MANIFEST, &a)?);
    let path = dir.join("rate.json");
    write_json(
        &path,
        &json!({
            "format": FORMAT_TAG,
            "code_version": CODE_VERSION,
            "params": p,
            "lambda": lambda,
            "sigma_star": sigma_star,
            "lambda_at_sigma_star": top,
            "coercivity": constants,
        }),
    )?;
    out.files.push(path);
    Ok(out)
}
