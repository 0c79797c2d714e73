use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

use super::{Comparison, FieldRow, RunOutput, RunSummary, SweepRow};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trajectory_csv<W: Write>(out: &RunOutput, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["t", "E", "rho", "V", "wt1", "wxt1", "U1", "U2", "envelope_bound"])?;
    for s in out.output_samples() {
        w.write_record([
            s.t.to_string(),
            s.energy.to_string(),
            s.rho.to_string(),
            s.lyapunov.to_string(),
            s.wt1.to_string(),
            s.wxt1.to_string(),
            s.u1.to_string(),
            s.u2.to_string(),
            opt(out.envelope_bound(s.t)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events_csv<W: Write>(out: &RunOutput, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["k", "t_k", "sampled_wt1", "sampled_wxt1", "cause", "inter_event_time"])?;
    let mut prev: Option<f64> = None;
    for e in &out.events {
        w.write_record([
            e.k.to_string(),
            e.t.to_string(),
            e.sampled_wt1.to_string(),
            e.sampled_wxt1.to_string(),
            e.cause.to_string(),
            opt(prev.map(|p| e.t - p)),
        ])?;
        prev = Some(e.t);
    }
    w.flush()?;
    Ok(())
}

pub fn write_field_csv<W: Write>(rows: &[FieldRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json<W: Write>(summary: &RunSummary, mut sink: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut sink, summary)?;
    writeln!(sink)?;
    Ok(())
}

/// Writes `trajectory.csv`, `events.csv`, `summary.json` and, when fields
/// were dumped, `field.csv` into `dir`.
pub fn write_run(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_trajectory_csv(out, fs::File::create(dir.join("trajectory.csv"))?)?;
    write_events_csv(out, fs::File::create(dir.join("events.csv"))?)?;
    write_summary_json(&out.summary, fs::File::create(dir.join("summary.json"))?)?;
    if !out.field.is_empty() {
        write_field_csv(&out.field, fs::File::create(dir.join("field.csv"))?)?;
    }
    Ok(())
}

pub fn write_comparison<W: Write>(cmp: &Comparison, mut sink: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut sink, cmp)?;
    writeln!(sink)?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "axis",
        "value",
        "E0",
        "E_final",
        "relative_energy_change",
        "fitted_decay_rate",
        "trigger_count",
        "min_inter_event_time",
        "envelope_ok",
        "energy_identity_max_residual",
        "rho_identity_max_residual",
        "error",
    ])?;
    for r in rows {
        let mut rec = vec![r.axis.name().to_string(), r.value.to_string()];
        match &r.outcome {
            Ok(out) => {
                let s = &out.summary;
                rec.extend([
                    s.e0.to_string(),
                    s.e_final.to_string(),
                    s.relative_energy_change.to_string(),
                    opt(s.fitted_decay_rate),
                    s.trigger_count.to_string(),
                    opt(s.min_inter_event_time),
                    s.envelope_ok.map(|b| b.to_string()).unwrap_or_default(),
                    s.energy_identity.max_residual.to_string(),
                    s.rho_identity.bc.max_residual.to_string(),
                    String::new(),
                ]);
            }
            Err(msg) => {
                rec.extend(std::iter::repeat(String::new()).take(9));
                rec.push(msg.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
