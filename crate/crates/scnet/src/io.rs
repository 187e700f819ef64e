//! CSV ingest/export, census, SVG rendering, and run manifests.
//!
//! All result payloads are written with shortest-roundtrip float formatting
//! and no timestamps, so reruns with the same seed produce byte-identical
//! files; wall-clock information lives only in the manifest.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::{Band, EnsembleResult};
use crate::error::{Error, Result};
use crate::graph::{FirmAttrs, SupplyGraph};

pub const NODES_HEADER: &str = "firm_id,name,country,sic,employees,is_msf";
pub const EDGES_HEADER: &str = "customer_id,supplier_id";

fn opt_field(s: &str) -> Option<String> {
    if s.is_empty() {
        None
    } else {
        Some(s.to_string())
    }
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn check_header(path: &str, expected: &str, record: &csv::StringRecord) -> Result<()> {
    let found = record.iter().collect::<Vec<_>>().join(",");
    if found != expected {
        return Err(Error::BadHeader {
            path: path.to_string(),
            expected: expected.to_string(),
            found,
        });
    }
    Ok(())
}

/// Parse the nodes CSV (`firm_id,name,country,sic,employees,is_msf`; empty
/// fields mean UNKNOWN, `is_msf` is 0 or 1).
pub fn read_nodes(path: &Path) -> Result<Vec<FirmAttrs>> {
    let display = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::io(format!("reading {display}"), csv_io(e)))?;
    check_header(&display, NODES_HEADER, reader.headers().map_err(|e| parse_err(&display, 1, e))?)?;

    let mut nodes = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(&display, 0, e))?;
        let line = record_line(&record);
        if record.len() != 6 {
            return Err(Error::Parse {
                path: display.clone(),
                line,
                message: format!("expected 6 fields, found {}", record.len()),
            });
        }
        let firm_id = record[0].to_string();
        if firm_id.is_empty() {
            return Err(Error::Parse {
                path: display.clone(),
                line,
                message: "firm_id must be non-empty".into(),
            });
        }
        let employees = match &record[4] {
            "" => None,
            s => Some(s.parse::<u64>().map_err(|_| Error::Parse {
                path: display.clone(),
                line,
                message: format!("invalid employees value `{s}`"),
            })?),
        };
        let is_msf = match &record[5] {
            "0" => false,
            "1" => true,
            s => {
                return Err(Error::Parse {
                    path: display.clone(),
                    line,
                    message: format!("is_msf must be 0 or 1, got `{s}`"),
                })
            }
        };
        nodes.push(FirmAttrs {
            firm_id,
            name: opt_field(&record[1]),
            country: opt_field(&record[2]),
            industry: opt_field(&record[3]),
            employees,
            is_msf,
        });
    }
    Ok(nodes)
}

/// Parse the edges CSV (`customer_id,supplier_id`).
pub fn read_edges(path: &Path) -> Result<Vec<(String, String)>> {
    let display = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::io(format!("reading {display}"), csv_io(e)))?;
    check_header(&display, EDGES_HEADER, reader.headers().map_err(|e| parse_err(&display, 1, e))?)?;

    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(&display, 0, e))?;
        let line = record_line(&record);
        if record.len() != 2 || record[0].is_empty() || record[1].is_empty() {
            return Err(Error::Parse {
                path: display.clone(),
                line,
                message: "expected non-empty customer_id,supplier_id".into(),
            });
        }
        edges.push((record[0].to_string(), record[1].to_string()));
    }
    Ok(edges)
}

fn csv_io(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    }
}

fn parse_err(path: &str, line: u64, e: csv::Error) -> Error {
    let line = e
        .position()
        .map(|p| p.line())
        .filter(|&l| l > 0)
        .unwrap_or(line);
    Error::Parse {
        path: path.to_string(),
        line,
        message: e.to_string(),
    }
}

/// Read both files and build the graph (strict: an empty edge set is an
/// "empty graph" error).
pub fn ingest(nodes_path: &Path, edges_path: &Path) -> Result<SupplyGraph> {
    let nodes = read_nodes(nodes_path)?;
    let edges = read_edges(edges_path)?;
    SupplyGraph::build(nodes, edges)
}

/// Headline counts and missingness rates for an ingested graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusSummary {
    pub nodes: usize,
    pub edges: usize,
    pub msfs: usize,
    pub terminal_suppliers: usize,
    pub missing_industry: usize,
    pub missing_country: usize,
    pub missing_employees: usize,
    /// (tier, firm count) ascending, then firms unreachable from any MSF.
    pub tiers: Vec<(u32, usize)>,
    pub unreachable: usize,
}

pub fn census(graph: &SupplyGraph) -> CensusSummary {
    let n = graph.node_count();
    let mut missing_industry = 0;
    let mut missing_country = 0;
    let mut missing_employees = 0;
    for v in 0..n as u32 {
        let a = graph.attrs(v);
        missing_industry += a.industry.is_none() as usize;
        missing_country += a.country.is_none() as usize;
        missing_employees += a.employees.is_none() as usize;
    }
    let (tiers, unreachable) = graph.tier_census();
    CensusSummary {
        nodes: n,
        edges: graph.edge_count(),
        msfs: graph.msf_nodes().len(),
        terminal_suppliers: graph.terminal_suppliers().len(),
        missing_industry,
        missing_country,
        missing_employees,
        tiers,
        unreachable,
    }
}

impl std::fmt::Display for CensusSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pct = |k: usize| 100.0 * k as f64 / self.nodes.max(1) as f64;
        writeln!(f, "nodes: {}", self.nodes)?;
        writeln!(f, "edges: {}", self.edges)?;
        writeln!(f, "msfs: {}", self.msfs)?;
        writeln!(f, "terminal suppliers: {}", self.terminal_suppliers)?;
        writeln!(
            f,
            "missing: industry {:.1}%, country {:.1}%, employees {:.1}%",
            pct(self.missing_industry),
            pct(self.missing_country),
            pct(self.missing_employees)
        )?;
        for &(t, c) in &self.tiers {
            writeln!(f, "tier {t}: {c}")?;
        }
        write!(f, "unreachable: {}", self.unreachable)
    }
}

/// Write bytes to `path` atomically: write a temp file in the same directory,
/// then rename over the target.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.unwrap_or(Path::new("."));
    let context = || format!("writing {}", path.display());
    std::fs::create_dir_all(dir).map_err(|e| Error::io(context(), e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(context(), e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(context(), e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(context(), e.error))?;
    Ok(())
}

/// Serialize the graph back to the nodes CSV format.
pub fn nodes_csv(graph: &SupplyGraph) -> String {
    let mut out = String::from(NODES_HEADER);
    out.push('\n');
    for v in 0..graph.node_count() as u32 {
        let a = graph.attrs(v);
        let emp = a.employees.map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            a.firm_id,
            a.name.as_deref().unwrap_or(""),
            a.country.as_deref().unwrap_or(""),
            a.industry.as_deref().unwrap_or(""),
            emp,
            a.is_msf as u8
        );
    }
    out
}

/// Serialize the stored (deduplicated) edge list to the edges CSV format.
pub fn edges_csv(graph: &SupplyGraph) -> String {
    let mut out = String::from(EDGES_HEADER);
    out.push('\n');
    for &(a, b) in graph.edges() {
        let _ = writeln!(out, "{},{}", graph.firm_id(a), graph.firm_id(b));
    }
    out
}

const METRIC_NAMES: [&str; 4] = ["atsr", "stsr", "altsr", "scfr"];

/// Long-format ensemble CSV: one row per (grid point, metric).
pub fn ensemble_csv(result: &EnsembleResult) -> String {
    let mut out = String::from("fraction_units_remaining,fraction_firms_remaining,metric,mean,p2_5,p97_5\n");
    let bands = [&result.atsr, &result.stsr, &result.altsr, &result.scfr];
    for (j, &f) in result.grid.iter().enumerate() {
        for (name, band) in METRIC_NAMES.iter().zip(bands.iter()) {
            let _ = writeln!(
                out,
                "{},{},{name},{},{},{}",
                f, result.firms_remaining_mean[j], band.mean[j], band.p2_5[j], band.p97_5[j]
            );
        }
    }
    out
}

/// The numeric content of an ensemble CSV, for round-trip checks and
/// downstream tooling.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleCsv {
    pub grid: Vec<f64>,
    pub firms_remaining_mean: Vec<f64>,
    pub atsr: Band,
    pub stsr: Band,
    pub altsr: Band,
    pub scfr: Band,
}

pub fn parse_ensemble_csv(text: &str) -> Result<EnsembleCsv> {
    let path = "<ensemble csv>";
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == "fraction_units_remaining,fraction_firms_remaining,metric,mean,p2_5,p97_5" => {}
        other => {
            return Err(Error::BadHeader {
                path: path.into(),
                expected: "fraction_units_remaining,fraction_firms_remaining,metric,mean,p2_5,p97_5".into(),
                found: other.map(|(_, h)| h.to_string()).unwrap_or_default(),
            })
        }
    }
    let mut grid = Vec::new();
    let mut firms = Vec::new();
    let mut bands: [Band; 4] = std::array::from_fn(|_| Band {
        mean: vec![],
        p2_5: vec![],
        p97_5: vec![],
    });
    for (i, line) in lines {
        let err = |message: String| Error::Parse {
            path: path.into(),
            line: i as u64 + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
        let metric_idx = METRIC_NAMES
            .iter()
            .position(|&m| m == fields[2])
            .ok_or_else(|| err(format!("unknown metric `{}`", fields[2])))?;
        if metric_idx == 0 {
            grid.push(num(fields[0])?);
            firms.push(num(fields[1])?);
        }
        bands[metric_idx].mean.push(num(fields[3])?);
        bands[metric_idx].p2_5.push(num(fields[4])?);
        bands[metric_idx].p97_5.push(num(fields[5])?);
    }
    let [atsr, stsr, altsr, scfr] = bands;
    Ok(EnsembleCsv {
        grid,
        firms_remaining_mean: firms,
        atsr,
        stsr,
        altsr,
        scfr,
    })
}

/// Render mean lines with shaded 95% bands, x axis descending from 1.0.
pub fn ensemble_svg(result: &EnsembleResult) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const ML: f64 = 60.0;
    const MR: f64 = 20.0;
    const MT: f64 = 30.0;
    const MB: f64 = 50.0;
    let pw = W - ML - MR;
    let ph = H - MT - MB;
    let x = |f: f64| ML + (1.0 - f) * pw;
    let y = |v: f64| MT + (1.0 - v.clamp(0.0, 1.0)) * ph;

    let colors = ["#1f77b4", "#2ca02c", "#d62728", "#9467bd"];
    let bands = [&result.atsr, &result.stsr, &result.altsr, &result.scfr];

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\">{} / {} (tiers {}, {} realizations, seed {})</text>\n",
        W / 2.0,
        result.scale,
        result.strategy,
        result.tier_count,
        result.realization_count,
        result.master_seed
    );
    // axes
    let _ = write!(
        svg,
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB,
        H - MB
    );
    for i in 0..=4 {
        let f = 1.0 - i as f64 * 0.25;
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{f:.2}</text>\n",
            x(f),
            H - MB + 18.0
        );
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.2}</text>\n",
            ML - 6.0,
            y(i as f64 * 0.25) + 4.0,
            i as f64 * 0.25
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">fraction of units remaining</text>\n",
        ML + pw / 2.0,
        H - 12.0
    );

    for ((band, name), color) in bands.iter().zip(METRIC_NAMES).zip(colors) {
        let mut poly = String::new();
        for (j, &f) in result.grid.iter().enumerate() {
            let _ = write!(poly, "{:.2},{:.2} ", x(f), y(band.p97_5[j]));
        }
        for (j, &f) in result.grid.iter().enumerate().rev() {
            let _ = write!(poly, "{:.2},{:.2} ", x(f), y(band.p2_5[j]));
        }
        let _ = write!(
            svg,
            "<polygon points=\"{}\" fill=\"{color}\" opacity=\"0.2\"/>\n",
            poly.trim_end()
        );
        let mut line = String::new();
        for (j, &f) in result.grid.iter().enumerate() {
            let _ = write!(line, "{:.2},{:.2} ", x(f), y(band.mean[j]));
        }
        let _ = write!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            line.trim_end()
        );
        let ly = MT + 16.0 * (METRIC_NAMES.iter().position(|&m| m == name).unwrap() as f64 + 1.0);
        let _ = write!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"4\" fill=\"{color}\"/><text x=\"{}\" y=\"{}\">{name}</text>\n",
            W - MR - 110.0,
            ly - 4.0,
            W - MR - 92.0,
            ly
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestInput {
    pub path: String,
    pub sha256: String,
}

/// Provenance record accompanying every result directory. The only place
/// timestamps appear, so result payloads stay byte-identical across reruns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub master_seed: u64,
    pub inputs: Vec<ManifestInput>,
    pub config: serde_json::Value,
    pub created_at_unix: u64,
}

impl RunManifest {
    pub fn new(command: String, master_seed: u64, config: serde_json::Value) -> RunManifest {
        let created_at_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            master_seed,
            inputs: Vec::new(),
            config,
            created_at_unix,
        }
    }

    /// Hash a file's content into the manifest.
    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::io(format!("hashing {}", path.display()), e))?;
        self.inputs.push(ManifestInput {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{run_ensemble, AttackStrategy, ExperimentConfig};
    use crate::graph::fixtures::t1;
    use crate::scale::Scale;

    const T1_NODES: &str = "\
firm_id,name,country,sic,employees,is_msf
M1,Maker One,US,3841,100,1
M2,Maker Two,DE,3841,,1
A,,US,5047,20,0
B,,CN,,30,0
C,,,,,0
D,,JP,3674,5,0
E,,US,5065,,0
";

    const T1_EDGES: &str = "\
customer_id,supplier_id
M1,A
M2,B
A,C
A,D
B,D
B,E
";

    fn write_temp(name: &str, content: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!("scnet-io-{}-{name}", std::process::id()));
        std::fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn ingest_t1_census() {
        let nodes = write_temp("t1n.csv", T1_NODES);
        let edges = write_temp("t1e.csv", T1_EDGES);
        let g = ingest(&nodes, &edges).unwrap();
        let c = census(&g);
        assert_eq!((c.nodes, c.edges, c.msfs, c.terminal_suppliers), (7, 6, 2, 3));
        assert_eq!(c.tiers, vec![(0, 2), (1, 2), (2, 3)]);
        assert_eq!(c.unreachable, 0);
        // blank employees stays unknown
        let m2 = g.node("M2").unwrap();
        assert_eq!(g.attrs(m2).employees, None);
        assert_eq!(g.attrs(m2).country.as_deref(), Some("DE"));
    }

    #[test]
    fn bad_header_is_rejected() {
        let nodes = write_temp("badh.csv", "id,name\nx,y\n");
        let err = read_nodes(&nodes).unwrap_err();
        match err {
            Error::BadHeader { expected, .. } => assert_eq!(expected, NODES_HEADER),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let nodes = write_temp(
            "badrow.csv",
            "firm_id,name,country,sic,employees,is_msf\nA,,,,-,0\nB,,,,not_a_number,0\n",
        );
        let err = read_nodes(&nodes).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("employees"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_msf_flag_reports_line() {
        let nodes = write_temp(
            "badmsf.csv",
            "firm_id,name,country,sic,employees,is_msf\nA,,,,,yes\n",
        );
        let err = read_nodes(&nodes).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn empty_edges_is_empty_graph_error() {
        let nodes = write_temp("en.csv", T1_NODES);
        let edges = write_temp("ee.csv", "customer_id,supplier_id\n");
        assert!(matches!(ingest(&nodes, &edges), Err(Error::EmptyGraph)));
    }

    #[test]
    fn node_edge_csv_round_trip() {
        let nodes = write_temp("rtn.csv", T1_NODES);
        let edges = write_temp("rte.csv", T1_EDGES);
        let g = ingest(&nodes, &edges).unwrap();
        let nodes2 = write_temp("rtn2.csv", &nodes_csv(&g));
        let edges2 = write_temp("rte2.csv", &edges_csv(&g));
        let g2 = ingest(&nodes2, &edges2).unwrap();
        assert_eq!(g.edges(), g2.edges());
        for v in 0..g.node_count() as u32 {
            assert_eq!(g.attrs(v), g2.attrs(g2.node(g.firm_id(v)).unwrap()));
        }
    }

    #[test]
    fn ensemble_csv_round_trip_is_exact() {
        let g = t1();
        let mut cfg = ExperimentConfig::new(Scale::Firm, AttackStrategy::Random, 10, 99);
        cfg.realizations = 7;
        let res = run_ensemble(&g, &cfg).unwrap();
        let text = ensemble_csv(&res);
        let parsed = parse_ensemble_csv(&text).unwrap();
        assert_eq!(parsed.grid, res.grid);
        assert_eq!(parsed.firms_remaining_mean, res.firms_remaining_mean);
        assert_eq!(parsed.atsr, res.atsr);
        assert_eq!(parsed.stsr, res.stsr);
        assert_eq!(parsed.altsr, res.altsr);
        assert_eq!(parsed.scfr, res.scfr);
    }

    #[test]
    fn svg_contains_band_and_mean_per_metric() {
        let g = t1();
        let mut cfg = ExperimentConfig::new(Scale::Firm, AttackStrategy::Random, 10, 1);
        cfg.realizations = 3;
        let res = run_ensemble(&g, &cfg).unwrap();
        let svg = ensemble_svg(&res);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polygon").count(), 4);
        assert_eq!(svg.matches("<polyline").count(), 4);
        for m in METRIC_NAMES {
            assert!(svg.contains(&format!(">{m}</text>")));
        }
    }

    #[test]
    fn atomic_write_creates_parents_and_replaces() {
        let dir = std::env::temp_dir().join(format!("scnet-aw-{}", std::process::id()));
        let path = dir.join("nested/out.txt");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
