use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rbeam_core::certificates::{certify, search_for_rate, SearchOutcome};
use rbeam_core::runner::{self, RunOptions, Scenario, SweepAxis};
use rbeam_core::{CertificateInputsF64, Error};

#[derive(Parser)]
#[command(name = "rbeam", version, about = "Event-triggered boundary control of the Rayleigh beam")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trajectory, events and summary.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the displacement on a 64-point grid every N steps.
        #[arg(long, value_name = "STRIDE")]
        dump_field: Option<usize>,
    },
    /// Evaluate a decay-rate certificate, or search for one reaching a target rate.
    Certify {
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long)]
        target_delta: Option<f64>,
    },
    /// Run a scenario event-triggered and continuously and compare update counts.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_name = "STRIDE")]
        dump_field: Option<usize>,
    },
    /// Run a scenario once per value of one parameter.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// beta, beta0, theta, K1, K2, n_elements or dt.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidScenario(_) | Error::IncompatibleInitialCondition(_) => 2,
        Error::NonFinite { .. } => 3,
        Error::InvalidCertificate(_) => 4,
        _ => 1,
    }
}

fn load_scenario(path: &Path) -> rbeam_core::Result<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidScenario(format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text)
}

fn print_json<T: serde::Serialize>(value: &T) -> rbeam_core::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn simulate(scenario: &Path, out: &Path, dump_field: Option<usize>) -> rbeam_core::Result<()> {
    let s = load_scenario(scenario)?;
    let result = runner::run_with(&s, &RunOptions { dump_field })?;
    runner::write_run(&result, out)?;
    print_json(&result.summary)
}

fn certify_cmd(inputs: &Path, target: Option<f64>) -> rbeam_core::Result<()> {
    let text = fs::read_to_string(inputs)?;
    let inputs: CertificateInputsF64 = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidScenario(format!("{}: {e}", inputs.display())))?;
    if let Some(target) = target {
        let outcome = search_for_rate(inputs.k1, inputs.k2, target, inputs.beta0, inputs.theta)?;
        print_json(&outcome)?;
        return match outcome {
            SearchOutcome::Feasible { .. } => Ok(()),
            SearchOutcome::Infeasible { report } => Err(Error::InvalidCertificate(vec![format!(
                "no grid point reaches delta = {target}; best delta = {:?}",
                report.best_delta
            )])),
        };
    }
    let cert = certify(&inputs)?;
    print_json(&cert)?;
    if cert.valid {
        Ok(())
    } else {
        Err(Error::InvalidCertificate(
            cert.violations.iter().map(|v| v.to_string()).collect(),
        ))
    }
}

fn compare(scenario: &Path, out: &Path, dump_field: Option<usize>) -> rbeam_core::Result<()> {
    let s = load_scenario(scenario)?;
    let result = runner::compare(&s, &RunOptions { dump_field })?;
    let event_dir = out.join(mode_dir(result.comparison.event_mode));
    let reference_dir = if result.comparison.event_mode == result.comparison.reference_mode {
        out.join("repeat")
    } else {
        out.join(mode_dir(result.comparison.reference_mode))
    };
    runner::write_run(&result.event, &event_dir)?;
    runner::write_run(&result.reference, &reference_dir)?;
    runner::write_comparison(&result.comparison, fs::File::create(out.join("comparison.json"))?)?;
    println!(
        "updates: {} event-triggered, {} reference, ratio {:.4}",
        result.comparison.event_updates,
        result.comparison.reference_updates,
        result.comparison.update_ratio
    );
    Ok(())
}

fn mode_dir(mode: runner::Mode) -> &'static str {
    match mode {
        runner::Mode::EventTriggered => "event_triggered",
        runner::Mode::Continuous => "continuous",
        runner::Mode::Uncontrolled => "uncontrolled",
    }
}

fn sweep(scenario: &Path, axis: &str, values: &[f64], out: &Path) -> rbeam_core::Result<()> {
    let s = load_scenario(scenario)?;
    let axis: SweepAxis = axis.parse()?;
    if values.is_empty() {
        return Err(Error::InvalidScenario("no sweep values given".into()));
    }
    let rows = runner::sweep(&s, axis, values, &RunOptions::default())?;
    fs::create_dir_all(out)?;
    for (i, row) in rows.iter().enumerate() {
        if let Ok(result) = &row.outcome {
            runner::write_run(result, &out.join(format!("run_{i:03}")))?;
        }
    }
    runner::write_sweep_csv(&rows, fs::File::create(out.join("sweep.csv"))?)?;
    for row in &rows {
        match &row.outcome {
            Ok(r) => println!(
                "{}={}: E_final={:.6e} triggers={}",
                axis.name(),
                row.value,
                r.summary.e_final,
                r.summary.trigger_count
            ),
            Err(e) => println!("{}={}: failed: {e}", axis.name(), row.value),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            scenario,
            out,
            dump_field,
        } => simulate(scenario, out, *dump_field),
        Command::Certify {
            inputs,
            target_delta,
        } => certify_cmd(inputs, *target_delta),
        Command::Compare {
            scenario,
            out,
            dump_field,
        } => compare(scenario, out, *dump_field),
        Command::Sweep {
            scenario,
            axis,
            values,
            out,
        } => sweep(scenario, axis, values, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
