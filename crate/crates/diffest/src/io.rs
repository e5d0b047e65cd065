//! Report persistence: round-trippable CSV, plain-text topology dumps,
//! flat-JSON message logs, config loading, and the output-directory
//! layout of a finished run.
//!
//! Floats are written with 17 significant digits so parsing recovers the
//! exact bit pattern; infinities and NaN use the literal tokens `inf`,
//! `-inf`, and `nan`. Identical runs therefore produce byte-identical
//! files.

use crate::graph::Graph;
use crate::metrics::{EvolutionRow, GridRow, SourceTag};
use crate::plot::{line_chart, Series};
use crate::scenario::{ConfigError, ScenarioConfig};
use crate::sim::SimResult;
use std::fs;
use std::path::{Path, PathBuf};

pub const GRID_HEADER: &str = "round,agent,x,m_true,m_hat,bound,source,abs_error";
pub const EVOLUTION_HEADER: &str = "round,agent,delta,mean_bound,max_bound";

/// Round-trippable decimal rendering of any f64.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Inverse of [`format_float`].
pub fn parse_float(s: &str) -> Result<f64, std::num::ParseFloatError> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        other => other.parse::<f64>(),
    }
}

/// 64-bit FNV-1a, used to fingerprint experiment configurations.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// A report file that cannot be understood.
#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn malformed(line: usize, message: impl Into<String>) -> CsvError {
    CsvError::Malformed {
        line,
        message: message.into(),
    }
}

pub fn render_grid_csv(rows: &[GridRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(GRID_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.round,
            r.agent,
            format_float(r.x),
            format_float(r.m_true),
            format_float(r.m_hat),
            format_float(r.bound),
            r.source,
            format_float(r.abs_error),
        ));
    }
    out
}

pub fn parse_grid_csv(text: &str) -> Result<Vec<GridRow>, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == GRID_HEADER => {}
        Some((_, header)) => return Err(malformed(1, format!("unexpected header {header:?}"))),
        None => return Err(malformed(1, "empty file")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let n = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(malformed(n, format!("expected 8 fields, got {}", fields.len())));
        }
        let int = |s: &str, what: &str| {
            s.parse::<u64>()
                .map_err(|e| malformed(n, format!("{what}: {e}")))
        };
        let float = |s: &str, what: &str| {
            parse_float(s).map_err(|e| malformed(n, format!("{what}: {e}")))
        };
        rows.push(GridRow {
            round: int(fields[0], "round")?,
            agent: int(fields[1], "agent")? as usize,
            x: float(fields[2], "x")?,
            m_true: float(fields[3], "m_true")?,
            m_hat: float(fields[4], "m_hat")?,
            bound: float(fields[5], "bound")?,
            source: fields[6]
                .parse::<SourceTag>()
                .map_err(|e| malformed(n, e))?,
            abs_error: float(fields[7], "abs_error")?,
        });
    }
    Ok(rows)
}

pub fn render_evolution_csv(rows: &[EvolutionRow]) -> String {
    let mut out = String::with_capacity(48 * (rows.len() + 1));
    out.push_str(EVOLUTION_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.round,
            r.agent,
            format_float(r.delta),
            format_float(r.mean_bound),
            format_float(r.max_bound),
        ));
    }
    out
}

pub fn parse_evolution_csv(text: &str) -> Result<Vec<EvolutionRow>, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == EVOLUTION_HEADER => {}
        Some((_, header)) => return Err(malformed(1, format!("unexpected header {header:?}"))),
        None => return Err(malformed(1, "empty file")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let n = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(malformed(n, format!("expected 5 fields, got {}", fields.len())));
        }
        let float = |s: &str, what: &str| {
            parse_float(s).map_err(|e| malformed(n, format!("{what}: {e}")))
        };
        rows.push(EvolutionRow {
            round: fields[0]
                .parse::<u64>()
                .map_err(|e| malformed(n, format!("round: {e}")))?,
            agent: fields[1]
                .parse::<usize>()
                .map_err(|e| malformed(n, format!("agent: {e}")))?,
            delta: float(fields[2], "delta")?,
            mean_bound: float(fields[3], "mean_bound")?,
            max_bound: float(fields[4], "max_bound")?,
        });
    }
    Ok(rows)
}

/// One `i j` line per undirected edge, ascending.
pub fn render_topology(graph: &Graph) -> String {
    let mut out = String::new();
    for (i, j) in graph.edges() {
        out.push_str(&format!("{i} {j}\n"));
    }
    out
}

/// One flat JSON object per message, in transmission order.
pub fn render_message_log(messages: &[crate::sim::Message]) -> String {
    let mut out = String::new();
    for m in messages {
        out.push_str(&m.log_line());
        out.push('\n');
    }
    out
}

/// Reads and fully validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path)?;
    ScenarioConfig::from_json(&text)
}

fn estimate_plot(result: &SimResult, agent: usize, round: u64) -> String {
    let rows: Vec<&GridRow> = result
        .grid_rows
        .iter()
        .filter(|r| r.agent == agent && r.round == round)
        .collect();
    let series = vec![
        Series {
            label: "latent phenomenon".into(),
            color: "#000000".into(),
            points: rows.iter().map(|r| (r.x, r.m_true)).collect(),
        },
        Series {
            label: "estimate".into(),
            color: "#1b6ca8".into(),
            points: rows.iter().map(|r| (r.x, r.m_hat)).collect(),
        },
        Series {
            label: "upper bound".into(),
            color: "#d95f02".into(),
            points: rows.iter().map(|r| (r.x, r.m_hat + r.bound)).collect(),
        },
        Series {
            label: "lower bound".into(),
            color: "#d95f02".into(),
            points: rows.iter().map(|r| (r.x, r.m_hat - r.bound)).collect(),
        },
    ];
    line_chart(
        &format!("agent {agent} estimate, round {round}"),
        "x",
        "m(x)",
        &series,
    )
}

fn evolution_plot(result: &SimResult, agents: &[usize]) -> String {
    let palette = ["#1b6ca8", "#d95f02", "#2a9d8f", "#9467bd", "#8c564b", "#444444"];
    let mut deltas: Vec<f64> = result.evolution_rows.iter().map(|r| r.delta).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let mut series = Vec::new();
    for &agent in agents {
        for &delta in &deltas {
            let points: Vec<(f64, f64)> = result
                .evolution_rows
                .iter()
                .filter(|r| r.agent == agent && r.delta == delta)
                .map(|r| (r.round as f64, r.mean_bound))
                .collect();
            if !points.is_empty() {
                series.push(Series {
                    label: format!("agent {agent}, delta {delta}"),
                    color: palette[series.len() % palette.len()].into(),
                    points,
                });
            }
        }
    }
    line_chart("mean bound evolution", "round", "mean bound", &series)
}

/// Writes every artifact of a finished run under `out_dir`, returning
/// the created paths. The directory layout is fixed: `grid_report.csv`,
/// `bound_evolution.csv`, `topology.txt`, plus `messages.log` and SVG
/// plots when the scenario asked for them.
pub fn write_outputs(result: &SimResult, out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, content: String| -> std::io::Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, content)?;
        written.push(path);
        Ok(())
    };

    emit("grid_report.csv", render_grid_csv(&result.grid_rows))?;
    emit(
        "bound_evolution.csv",
        render_evolution_csv(&result.evolution_rows),
    )?;
    emit("topology.txt", render_topology(&result.graph))?;
    if result.config.log_messages {
        emit("messages.log", render_message_log(&result.message_log))?;
    }

    if result.config.emit_plots {
        // Paint the best- and worst-connected agents: connectivity is
        // what separates bound trajectories.
        let n = result.graph.node_count();
        let min_deg = (0..n).min_by_key(|&k| (result.graph.degree(k), k));
        let max_deg = (0..n).max_by_key(|&k| (result.graph.degree(k), std::cmp::Reverse(k)));
        let mut featured: Vec<usize> = [min_deg, max_deg].into_iter().flatten().collect();
        featured.dedup();

        if let Some(&round) = result.grid_rows.iter().map(|r| &r.round).max() {
            for &agent in &featured {
                emit(
                    &format!("estimate_agent{agent}_round{round}.svg"),
                    estimate_plot(result, agent, round),
                )?;
            }
        }
        if !result.evolution_rows.is_empty() {
            emit("bound_evolution.svg", evolution_plot(result, &featured))?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::metrics::SourceTag;
    use proptest::prelude::*;

    #[test]
    fn special_floats_use_fixed_tokens() {
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!(parse_float("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_float("-inf").unwrap(), f64::NEG_INFINITY);
        assert!(parse_float("nan").unwrap().is_nan());
        assert!(parse_float("oops").is_err());
    }

    #[test]
    fn seventeen_digits_recover_exact_bits() {
        for v in [
            std::f64::consts::PI,
            -1.0 / 3.0,
            1e-300,
            2.225_073_858_507_201_4e-308,
            9.881e-324, // subnormal
            1.7e308,
            0.1 + 0.2,
        ] {
            let back = parse_float(&format_float(v)).unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{v}");
        }
    }

    proptest! {
        #[test]
        fn any_float_round_trips(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            let back = parse_float(&format_float(v)).unwrap();
            if v.is_nan() {
                prop_assert!(back.is_nan());
            } else {
                prop_assert_eq!(v.to_bits(), back.to_bits());
            }
        }
    }

    fn sample_grid_rows() -> Vec<GridRow> {
        vec![
            GridRow {
                round: 100,
                agent: 0,
                x: 0.0,
                m_true: 3.0,
                m_hat: 2.987,
                bound: 0.41,
                source: SourceTag::Local,
                abs_error: 0.013,
            },
            GridRow {
                round: 100,
                agent: 1,
                x: 5.0,
                m_true: 2.647_231_473_711_194,
                m_hat: 0.0,
                bound: f64::INFINITY,
                source: SourceTag::None,
                abs_error: f64::NAN,
            },
            GridRow {
                round: 1000,
                agent: 1,
                x: 10.0,
                m_true: -0.2,
                m_hat: -0.19,
                bound: 0.3,
                source: SourceTag::Acquired,
                abs_error: 0.01,
            },
        ]
    }

    #[test]
    fn grid_reports_round_trip_including_inf_and_nan() {
        let rows = sample_grid_rows();
        let text = render_grid_csv(&rows);
        assert!(text.starts_with(GRID_HEADER));
        assert!(text.contains(",inf,none,nan"));
        let back = parse_grid_csv(&text).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.round, b.round);
            assert_eq!(a.agent, b.agent);
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.m_true.to_bits(), b.m_true.to_bits());
            assert_eq!(a.m_hat.to_bits(), b.m_hat.to_bits());
            assert_eq!(a.bound.to_bits(), b.bound.to_bits());
            assert_eq!(a.source, b.source);
            assert_eq!(a.abs_error.is_nan(), b.abs_error.is_nan());
        }
        // Same rows, same bytes.
        assert_eq!(text, render_grid_csv(&rows));
    }

    #[test]
    fn evolution_reports_round_trip() {
        let rows = vec![
            EvolutionRow {
                round: 50,
                agent: 0,
                delta: 0.01,
                mean_bound: 0.7231,
                max_bound: f64::INFINITY,
            },
            EvolutionRow {
                round: 100,
                agent: 0,
                delta: 0.001,
                mean_bound: 0.81,
                max_bound: 1.2,
            },
        ];
        let text = render_evolution_csv(&rows);
        let back = parse_evolution_csv(&text).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn wrong_headers_and_ragged_rows_are_named_by_line() {
        let err = parse_grid_csv("bogus\n1,2,3\n").unwrap_err();
        assert!(matches!(err, CsvError::Malformed { line: 1, .. }), "{err}");
        let good_header = format!("{GRID_HEADER}\n1,0,0.0,1.0,1.0\n");
        let err = parse_grid_csv(&good_header).unwrap_err();
        match err {
            CsvError::Malformed { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("expected 8 fields"));
            }
            other => panic!("unexpected {other}"),
        }
        let err = parse_evolution_csv("").unwrap_err();
        assert!(matches!(err, CsvError::Malformed { line: 1, .. }));
    }

    #[test]
    fn topology_lists_each_edge_once_ascending() {
        let graph = Graph::new(4, &[(2, 3), (0, 1), (1, 0), (0, 3)]).unwrap();
        assert_eq!(render_topology(&graph), "0 1\n0 3\n2 3\n");
    }
}
