//! Network documents (JSON) and trace tables (CSV).

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::anytime::AnytimeTrace;
use crate::error::{Error, Result};
use crate::network::{Cpt, Network, NetworkDraft, ValidationReport, Variable};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    name: String,
    variables: Vec<VariableDocument>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDocument {
    name: String,
    states: Vec<String>,
    #[serde(default)]
    bounds: Option<[f64; 2]>,
    #[serde(default)]
    parents: Vec<String>,
    cpt: Vec<Vec<f64>>,
}

/// Parses a network document without validating it.
pub fn parse_network(text: &str) -> Result<NetworkDraft> {
    let doc: NetworkDocument = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut variables = Vec::with_capacity(doc.variables.len());
    let mut cpts = Vec::with_capacity(doc.variables.len());
    for v in doc.variables {
        variables.push(Variable {
            name: v.name,
            states: v.states,
            bounds: v.bounds.map(|[lo, hi]| (lo, hi)),
        });
        cpts.push(Cpt::new(v.parents, v.cpt));
    }
    Ok(NetworkDraft {
        name: doc.name,
        variables,
        cpts,
    })
}

/// Parses and validates a network document.
pub fn read_network(text: &str) -> Result<(Network, ValidationReport)> {
    Network::from_draft(parse_network(text)?)
}

pub fn read_network_file(path: &Path) -> Result<(Network, ValidationReport)> {
    read_network(&fs::read_to_string(path)?)
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("strings and finite floats always serialize")
}

/// Serializes a network. Keys always appear as name, states, bounds, parents,
/// cpt; each CPT row sits on its own line. Floats use the shortest decimal
/// form that reads back to the identical double.
pub fn write_network(net: &Network) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"name\": {},", json(net.name()));
    out.push_str("  \"variables\": [");
    for (i, (v, cpt)) in net.variables().iter().zip(net.cpts()).enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str("    {\n");
        let _ = writeln!(out, "      \"name\": {},", json(&v.name));
        let _ = writeln!(out, "      \"states\": {},", json(&v.states));
        if let Some((lo, hi)) = v.bounds {
            let _ = writeln!(out, "      \"bounds\": [{}, {}],", json(&lo), json(&hi));
        }
        let _ = writeln!(out, "      \"parents\": {},", json(&cpt.parents));
        out.push_str("      \"cpt\": [\n");
        for (r, row) in cpt.rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(json).collect();
            let sep = if r + 1 == cpt.rows.len() { "" } else { "," };
            let _ = writeln!(out, "        [{}]{sep}", cells.join(", "));
        }
        out.push_str("      ]\n");
        out.push_str("    }");
    }
    out.push_str("\n  ]\n}\n");
    out
}

pub fn write_network_file(net: &Network, path: &Path) -> Result<()> {
    fs::write(path, write_network(net))?;
    Ok(())
}

/// One line of `summary.csv`; fields are in column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run_id: String,
    pub iteration: usize,
    pub elapsed_ms: f64,
    pub eval_ms: f64,
    pub policy: String,
    pub strategy: String,
    pub total_superstates: usize,
    pub avg_relscore: Option<f64>,
    pub terminated: String,
}

/// One line of `nodes.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub run_id: String,
    pub iteration: usize,
    pub variable: String,
    pub n_superstates: usize,
    pub relscore: Option<f64>,
}

fn millis(d: std::time::Duration) -> f64 {
    // three decimals, so the text form is stable
    (d.as_secs_f64() * 1e6).round() / 1e3
}

pub fn summary_rows(trace: &AnytimeTrace, run_id: &str) -> Vec<SummaryRow> {
    let last = trace.records.len().saturating_sub(1);
    trace
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| SummaryRow {
            run_id: run_id.to_string(),
            iteration: r.iteration,
            elapsed_ms: millis(r.elapsed),
            eval_ms: millis(r.eval_time),
            policy: trace.policy.to_string(),
            strategy: trace.strategy.to_string(),
            total_superstates: r.total_superstates(),
            avg_relscore: r.avg_relscore,
            terminated: if i == last {
                trace.termination.as_str().to_string()
            } else {
                String::new()
            },
        })
        .collect()
}

/// Node rows for every non-evidence variable of every iteration.
pub fn node_rows(trace: &AnytimeTrace, run_id: &str) -> Vec<NodeRow> {
    let mut rows = Vec::new();
    for r in &trace.records {
        for (v, name) in r.marginals.names.iter().enumerate() {
            if r.marginals.evidence[v] {
                continue;
            }
            rows.push(NodeRow {
                run_id: run_id.to_string(),
                iteration: r.iteration,
                variable: name.clone(),
                n_superstates: r.states_per_variable[v],
                relscore: r.relscores.as_ref().map(|s| s[v]),
            });
        }
    }
    rows
}

fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    if rows.is_empty() {
        // the header must still be present
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record([
            "run_id",
            "iteration",
            "elapsed_ms",
            "eval_ms",
            "policy",
            "strategy",
            "total_superstates",
            "avg_relscore",
            "terminated",
        ])?;
        w.flush()?;
        return Ok(());
    }
    write_csv(rows, out)
}

pub fn write_nodes<W: Write>(rows: &[NodeRow], out: W) -> Result<()> {
    if rows.is_empty() {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["run_id", "iteration", "variable", "n_superstates", "relscore"])?;
        w.flush()?;
        return Ok(());
    }
    write_csv(rows, out)
}

/// Writes `summary.csv` and `nodes.csv` for a trace.
pub fn write_trace<S: Write, N: Write>(
    trace: &AnytimeTrace,
    run_id: &str,
    summary: S,
    nodes: N,
) -> Result<()> {
    write_summary(&summary_rows(trace, run_id), summary)?;
    write_nodes(&node_rows(trace, run_id), nodes)
}

/// Writes both trace files into `dir`, creating it if needed.
pub fn write_trace_dir(trace: &AnytimeTrace, run_id: &str, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let summary = fs::File::create(dir.join("summary.csv"))?;
    let nodes = fs::File::create(dir.join("nodes.csv"))?;
    write_trace(trace, run_id, summary, nodes)
}

pub fn read_summary<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<std::result::Result<Vec<SummaryRow>, _>>()?;
    Ok(rows)
}
