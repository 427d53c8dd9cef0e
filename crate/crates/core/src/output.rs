//! Text encodings of stats, summaries and traces.
//!
//! Stats are comma-separated with integers verbatim and reals at six
//! decimals. Traces are one JSON object per line with fields in a fixed
//! order. Both are byte-stable for identical inputs.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::experiment::{GenerationStats, TraceRecord};
use crate::neural::Action;
use crate::stats::{Aggregate, GenerationAggregate, Summary};

pub const STATS_HEADER: &str = "run_id,generation,mode,map,best_fitness,mean_fitness";

pub fn emit_stats<W: Write + ?Sized>(stats: &[GenerationStats], sink: &mut W) -> Result<()> {
    writeln!(sink, "{STATS_HEADER}")?;
    for s in stats {
        writeln!(
            sink,
            "{},{},{},{},{},{:.6}",
            s.run_id,
            s.generation,
            s.mode.as_str(),
            s.map.as_str(),
            s.best_fitness,
            s.mean_fitness
        )?;
    }
    Ok(())
}

const AGG_FIELDS: [&str; 7] = ["n", "mean", "min", "q1", "median", "q3", "max"];

pub fn summary_header() -> String {
    let mut cols = vec!["scope".to_string(), "generation".to_string()];
    for metric in ["best", "mean"] {
        cols.extend(AGG_FIELDS.iter().map(|f| format!("{metric}_{f}")));
    }
    cols.join(",")
}

fn aggregate_cells(a: &Aggregate) -> String {
    format!(
        "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        a.n, a.mean, a.min, a.q1, a.median, a.q3, a.max
    )
}

fn summary_line<W: Write + ?Sized>(sink: &mut W, scope: &str, g: &GenerationAggregate) -> Result<()> {
    writeln!(
        sink,
        "{scope},{},{},{}",
        g.generation,
        aggregate_cells(&g.best),
        aggregate_cells(&g.mean)
    )?;
    Ok(())
}

/// Per-generation rows (`scope = generation`), then the last generation
/// (`final`) and each run's peak (`run_peak`).
pub fn emit_summary<W: Write + ?Sized>(summary: &Summary, sink: &mut W) -> Result<()> {
    writeln!(sink, "{}", summary_header())?;
    for g in &summary.per_generation {
        summary_line(sink, "generation", g)?;
    }
    summary_line(sink, "final", &summary.final_generation)?;
    summary_line(sink, "run_peak", &summary.run_peak)?;
    Ok(())
}

#[derive(Serialize)]
struct TraceLine<'a> {
    generation: usize,
    step: usize,
    agent_id: usize,
    x: f64,
    y: f64,
    heading: f64,
    energy: u64,
    action: &'a str,
}

pub fn emit_trace<W: Write + ?Sized>(trace: &[TraceRecord], sink: &mut W) -> Result<()> {
    for r in trace {
        let line = TraceLine {
            generation: r.generation,
            step: r.step,
            agent_id: r.agent_id,
            x: r.x,
            y: r.y,
            heading: r.heading,
            energy: r.energy,
            action: r.action.as_str(),
        };
        serde_json::to_writer(&mut *sink, &line).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

fn action_from_str(s: &str) -> Option<Action> {
    Action::ALL.into_iter().find(|a| a.as_str() == s)
}

/// Reads back a trace written by [`emit_trace`].
pub fn parse_trace(text: &str) -> std::result::Result<Vec<TraceRecord>, String> {
    #[derive(serde::Deserialize)]
    struct Line {
        generation: usize,
        step: usize,
        agent_id: usize,
        x: f64,
        y: f64,
        heading: f64,
        energy: u64,
        action: String,
    }
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            let line: Line = serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1))?;
            let action = action_from_str(&line.action)
                .ok_or_else(|| format!("line {}: unknown action `{}`", i + 1, line.action))?;
            Ok(TraceRecord {
                generation: line.generation,
                step: line.step,
                agent_id: line.agent_id,
                x: line.x,
                y: line.y,
                heading: line.heading,
                energy: line.energy,
                action,
            })
        })
        .collect()
}
