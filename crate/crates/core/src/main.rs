use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qthermo::scenario::{run_scenario, Scenario, ScenarioConfig};
use qthermo::Error;

/// Runs a numerical experiment and writes its CSV.
///
/// Exit status: 0 when every check passes, 1 on a physics-check violation or
/// non-convergence, 2 on a usage or configuration error.
#[derive(Debug, Parser)]
#[command(name = "qthermo", version)]
struct Cli {
    /// fig2, fig3, scaling2n, carnot2n, steady_temp, steady_chem or verify.
    #[arg(value_name = "SCENARIO")]
    positional: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    /// Key-value config file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cases: Option<u64>,
    /// Replay a single verify case.
    #[arg(long)]
    case: Option<u64>,
    /// N, or a comma-separated list of N values.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    tau_c: Option<f64>,
    #[arg(long)]
    tau_h: Option<f64>,
    #[arg(long)]
    beta_h: Option<f64>,
    #[arg(long)]
    beta_c: Option<f64>,
    #[arg(long)]
    omega_h: Option<f64>,
    #[arg(long)]
    omega_c: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    max_cycles: Option<usize>,
    /// Any other override as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("qthermo: {msg}");
    ExitCode::from(2)
}

fn build_config(cli: &Cli) -> Result<ScenarioConfig, String> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut text = text;
            // a scenario named on the command line may fill in for a config without one
            if !text.lines().any(|l| l.split_whitespace().next() == Some("scenario")) {
                if let Some(s) = cli.scenario.as_ref().or(cli.positional.as_ref()) {
                    text.push_str(&format!("\nscenario {s}\n"));
                }
            }
            ScenarioConfig::from_text(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => {
            let name = match (&cli.positional, &cli.scenario) {
                (Some(a), Some(b)) if a != b => return Err(format!("conflicting scenarios `{a}` and `{b}`")),
                (Some(a), _) | (None, Some(a)) => a,
                (None, None) => return Err("no scenario given".into()),
            };
            ScenarioConfig::new(name.parse::<Scenario>().map_err(|e| e.to_string())?)
        }
    };
    if let Some(s) = cli.scenario.as_ref().or(cli.positional.as_ref()) {
        let s: Scenario = s.parse().map_err(|e: Error| e.to_string())?;
        if s != config.scenario {
            return Err(format!(
                "command line names {s} but the config names {}",
                config.scenario
            ));
        }
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let flags: [(&str, Option<String>); 11] = [
        ("cases", cli.cases.map(|v| v.to_string())),
        ("case", cli.case.map(|v| v.to_string())),
        ("n", cli.n.clone()),
        ("tau_c", cli.tau_c.map(|v| v.to_string())),
        ("tau_h", cli.tau_h.map(|v| v.to_string())),
        ("beta_h", cli.beta_h.map(|v| v.to_string())),
        ("beta_c", cli.beta_c.map(|v| v.to_string())),
        ("omega_h", cli.omega_h.map(|v| v.to_string())),
        ("omega_c", cli.omega_c.map(|v| v.to_string())),
        ("dt", cli.dt.map(|v| v.to_string())),
        ("max_cycles", cli.max_cycles.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            config.overrides.insert(key.to_string(), v);
        }
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        config.overrides.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(msg) => return usage(msg),
    };
    let output = match run_scenario(&config) {
        Ok(o) => o,
        Err(
            e @ (Error::InvalidParameter(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::UnknownBath(_)
            | Error::InvalidBasis(_)),
        ) => return usage(e),
        Err(e) => {
            eprintln!("qthermo: {} failed: {e}", config.scenario);
            return ExitCode::from(1);
        }
    };
    let written = match &config.out {
        Some(path) => std::fs::write(path, &output.csv).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{}", output.csv);
            Ok(())
        }
    };
    if let Err(msg) = written {
        return usage(msg);
    }
    for v in &output.violations {
        eprintln!("qthermo: {v}");
    }
    if output.passed() {
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "qthermo: {} check(s) failed in scenario {} (seed {})",
            output.violations.len(),
            config.scenario,
            config.seed
        );
        ExitCode::from(1)
    }
}
