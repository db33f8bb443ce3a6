use std::fs;
use std::io::{ErrorKind, Write};
use std::path::Path;

use cgrg_core::graphgen::{detect_edges, sample_cgrg};
use cgrg_core::mc::{ReplicaRecord, estimate_tail, run_typical};
use cgrg_core::measures::empirical_measures;
use cgrg_core::rates::{rate_eta1, rate_i, rate_j, rate_xi1, rate_zeta, typical_measures};
use cgrg_core::verify::{Suite, SuiteOptions, run_suite};
use cgrg_core::{DegreeDistribution, EdgeLaw, Error, GraphSample, RateResult};
use serde::Serialize;
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::RateKind;
use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::CliError;

pub fn print_json<T: Serialize>(v: &T) -> Result<(), CliError> {
    emit(&to_json(v))
}

/// Writes to stdout; a closed pipe downstream is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(CliError::io(Path::new("<stdout>"), e)),
        _ => Ok(()),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output types serialise")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn generate(cfg: &RunConfig, out: &Path, edge_list: Option<&Path>) -> Result<(), CliError> {
    let sample = sample_cgrg(cfg.n, &cfg.params, cfg.seed)?;
    write_file(out, &to_json(&sample))?;
    if let Some(p) = edge_list {
        write_file(p, &sample.to_edge_list())?;
    }
    print_json(&json!({
        "n": sample.n,
        "edges": sample.edges.len(),
        "mean_degree": 2.0 * sample.edges.len() as f64 / sample.n as f64,
        "seed": sample.seed,
        "effective_config": cfg,
    }))
}

pub fn measure(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let text = read_file(path)?;
    let sample: GraphSample =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let fail = |e: Error| CliError::Assertion(e.to_string());
    sample.validate().map_err(fail)?;
    if sample.edge_law == EdgeLaw::Geometric && !sample.points.is_empty() {
        let mut recorded = sample.edges.clone();
        recorded.sort_unstable();
        let expected = detect_edges(&sample.points, &sample.colours, &sample.radii, sample.k, sample.d, sample.geometry);
        if recorded != expected {
            return Err(CliError::Assertion(format!(
                "edge list disagrees with the point geometry ({} recorded, {} expected)",
                recorded.len(),
                expected.len()
            )));
        }
    }
    let m = empirical_measures(&sample).map_err(fail)?;
    let pair_mass = m.pair.total_mass();
    let expected = 2.0 * m.edge_count as f64 / m.n as f64;
    if !m.is_exactly_consistent() || (pair_mass - expected).abs() > 1e-12 * (1.0 + expected) {
        return Err(CliError::Assertion(format!("pair measure mass {pair_mass} differs from 2|E|/n = {expected}")));
    }
    let report = to_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "measures": m,
        "checks": { "pair_mass": pair_mass, "twice_edges_per_vertex": expected, "consistent": true },
    }));
    match out {
        Some(p) => write_file(p, &report),
        None => emit(&report),
    }
}

/// Inline JSON when the argument looks like JSON, otherwise a file path.
fn load_arg<T: DeserializeOwned>(arg: &str) -> Result<T, CliError> {
    let t = arg.trim_start();
    let text = if t.starts_with('{') || t.starts_with('[') { arg.to_string() } else { read_file(Path::new(arg))? };
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{arg}: {e}")))
}

fn load_delta(arg: &str) -> Result<DegreeDistribution, CliError> {
    match arg.strip_prefix("poisson:") {
        Some(l) => {
            let lambda: f64 = l.parse().map_err(|_| CliError::Config(format!("bad Poisson mean {l:?}")))?;
            Ok(DegreeDistribution::poisson(lambda, 1e-13)?)
        }
        None => load_arg(arg),
    }
}

pub fn rate(cfg: &RunConfig, kind: &RateKind) -> Result<(), CliError> {
    let p = &cfg.params;
    let scalar_c = |c: Option<f64>| -> Result<f64, CliError> {
        match c {
            Some(c) => Ok(c),
            None if p.k() == 1 => Ok(p.kernel(0, 0)),
            None => Err(CliError::Config("--c is required for a multi-colour config".into())),
        }
    };
    let r: RateResult = match kind {
        RateKind::J { varpi, mu, typical } => {
            if *typical {
                let t = typical_measures(p, None)?;
                rate_j(&t.varpi, &t.mu.measure, p)?
            } else {
                rate_j(&load_arg(varpi.as_deref().unwrap_or_default())?, &load_arg(mu.as_deref().unwrap_or_default())?, p)?
            }
        }
        RateKind::I { omega, varpi, typical } => {
            if *typical {
                let t = typical_measures(p, None)?;
                rate_i(&t.omega, &t.varpi, p)?
            } else {
                rate_i(&load_arg(omega.as_deref().unwrap_or_default())?, &load_arg(varpi.as_deref().unwrap_or_default())?, p)?
            }
        }
        RateKind::Eta1 { delta, c, d } => rate_eta1(&load_delta(delta)?, scalar_c(*c)?, d.unwrap_or(p.d()))?,
        RateKind::Xi1 { y, c, d } => rate_xi1(*y, scalar_c(*c)?, d.unwrap_or(p.d()))?,
        RateKind::Zeta { x } => rate_zeta(*x, p)?,
    };
    print_json(&r)
}

/// One row per `(n, component)` of a typical-behaviour summary.
#[derive(Serialize)]
struct TypicalCsvRow {
    n: usize,
    replicas: usize,
    component: usize,
    mean: f64,
    std_err: f64,
    pooled_tv: Option<f64>,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn experiment(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let exp = cfg.experiment_config();
    let (records, result): (Vec<ReplicaRecord>, serde_json::Value) = if exp.event.is_some() {
        let est = estimate_tail(&exp)?;
        write_csv(&out_dir.join("summary.csv"), &est.rows)?;
        (est.records.clone(), serde_json::to_value(&est).expect("serialises"))
    } else {
        let sum = run_typical(&exp)?;
        let rows = sum.rows.iter().flat_map(|r| {
            (0..r.mean.len()).map(move |c| TypicalCsvRow {
                n: r.n,
                replicas: r.replicas,
                component: c,
                mean: r.mean[c],
                std_err: r.std_err[c],
                pooled_tv: r.pooled_tv,
            })
        });
        write_csv(&out_dir.join("summary.csv"), rows)?;
        (sum.records.clone(), serde_json::to_value(&sum).expect("serialises"))
    };
    write_csv(&out_dir.join("replicas.csv"), &records)?;
    let summary = to_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "effective_config": cfg,
        "result": result,
    }));
    write_file(&out_dir.join("summary.json"), &summary)?;
    emit(&summary)
}

pub fn verify(suite: Suite, cfg: &RunConfig, replicas: Option<usize>, out: Option<&Path>) -> Result<(), CliError> {
    if replicas == Some(0) {
        return Err(CliError::Config("--replicas must be at least 1".into()));
    }
    let report = run_suite(suite, &SuiteOptions { seed: cfg.seed, replicas })?;
    let text = to_json(&report);
    if let Some(p) = out {
        write_file(p, &text)?;
    }
    emit(&text)?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Assertion(format!("suite {suite}: {}", failed.join("; "))))
    }
}
