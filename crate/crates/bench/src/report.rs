//! CSV and markdown output.

use std::io::Write;

use crate::runner::{ConditionRow, TrialRow};
use crate::BenchError;

pub const CSV_HEADER: &str = "method,env,trial,seed,n_train,plan_len,plan_time_ms,success";

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub trials: usize,
    pub n_train: f64,
    pub plan_len: f64,
    pub plan_time_ms: f64,
    pub success_rate: f64,
}

pub fn summarize(rows: &[TrialRow]) -> Summary {
    let n = rows.len().max(1) as f64;
    let mean = |f: &dyn Fn(&TrialRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Summary {
        trials: rows.len(),
        n_train: mean(&|r| r.n_train as f64),
        plan_len: mean(&|r| r.plan_len as f64),
        plan_time_ms: mean(&|r| r.plan_time_ms),
        success_rate: mean(&|r| f64::from(u8::from(r.success))),
    }
}

/// Writes the rows as CSV. Without timing the plan time column is zeroed,
/// which makes runs on deterministic domains byte-identical.
pub fn write_csv<W: Write>(out: W, rows: &[TrialRow], timing: bool) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        let mut row = row.clone();
        if !timing {
            row.plan_time_ms = 0.0;
        }
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary_line(rows: &[TrialRow]) -> String {
    let s = summarize(rows);
    format!(
        "mean over {} trials: n_train {:.1}, plan_len {:.2}, plan_time_ms {:.3}, success {:.2}",
        s.trials, s.n_train, s.plan_len, s.plan_time_ms, s.success_rate
    )
}

pub fn markdown(rows: &[TrialRow], timing: bool) -> String {
    let mut out = String::from("| method | env | trial | seed | n_train | plan_len | plan_time_ms | success |\n");
    out.push_str("|---|---|---:|---:|---:|---:|---:|---|\n");
    let time = |t: f64| if timing { format!("{t:.3}") } else { "-".to_owned() };
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
            r.method, r.env, r.trial, r.seed, r.n_train, r.plan_len, time(r.plan_time_ms), r.success
        ));
    }
    if let Some(first) = rows.first() {
        let s = summarize(rows);
        out.push_str(&format!(
            "| {} | {} | mean | | {:.1} | {:.2} | {} | {:.2} |\n",
            first.method, first.env, s.n_train, s.plan_len, time(s.plan_time_ms), s.success_rate
        ));
    }
    out
}

pub fn conditions_markdown(rows: &[ConditionRow]) -> String {
    let mut out = String::from("| skill | effect | real condition | learned condition | confident | exact | subset |\n");
    out.push_str("|---:|---|---|---|---|---|---|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} |\n",
            r.skill, r.effect, r.real, r.learned, r.confident, r.exact, r.subset
        ));
    }
    out
}

pub fn write_conditions_csv<W: Write>(out: W, rows: &[ConditionRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
