use crate::methods::MethodRun;
use anyhow::{Context, Result};
use mpclear::benders::BendersStats;
use mpclear::clearing::ClearingSolution;
use mpclear::market::Instance;
use mpclear::verification::{ProfitReport, VerificationReport};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const SUMMARY_HEADER: [&str; 9] = [
    "instance",
    "method",
    "welfare",
    "gap",
    "cuts_classical",
    "cuts_nogood",
    "cuts_strengthened",
    "nodes",
    "runtime_s",
];

#[derive(Debug, Serialize)]
pub struct NodePrice {
    pub location: String,
    pub period: u32,
    pub price: f64,
}

#[derive(Debug, Serialize)]
pub struct Acceptance {
    pub bid: String,
    pub accepted: bool,
}

#[derive(Debug, Serialize)]
pub struct RunStats {
    pub gap: f64,
    pub nodes: u64,
    pub runtime_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benders: Option<BendersStats>,
}

/// Everything `clear` writes as JSON.
#[derive(Debug, Serialize)]
pub struct ClearReport {
    pub instance: String,
    pub method: &'static str,
    pub status: String,
    pub welfare_definition: &'static str,
    pub welfare: Option<f64>,
    pub gross_welfare: Option<f64>,
    pub prices: Vec<NodePrice>,
    pub acceptance: Vec<Acceptance>,
    pub profit_table: Option<ProfitReport>,
    pub verification: Option<VerificationReport>,
    pub stats: RunStats,
    pub solution: Option<ClearingSolution>,
}

impl ClearReport {
    pub fn new(
        name: &str,
        instance: &Instance,
        run: &MethodRun,
        profit: Option<ProfitReport>,
        verification: Option<VerificationReport>,
    ) -> Self {
        let net = &instance.network;
        let prices = run
            .solution
            .as_ref()
            .and_then(|s| s.duals.as_ref())
            .map(|d| {
                net.locations
                    .iter()
                    .enumerate()
                    .flat_map(|(l, loc)| {
                        net.periods.iter().enumerate().map(move |(t, &period)| NodePrice {
                            location: loc.clone(),
                            period,
                            price: d.prices[l][t],
                        })
                    })
                    .collect()
            })
            .unwrap_or_default();
        let acceptance = run
            .solution
            .as_ref()
            .map(|s| {
                instance
                    .mp_bids
                    .iter()
                    .zip(&s.primal.u)
                    .map(|(b, &accepted)| Acceptance {
                        bid: b.id.clone(),
                        accepted,
                    })
                    .collect()
            })
            .unwrap_or_default();
        ClearReport {
            instance: name.to_string(),
            method: run.method.name(),
            status: format!("{:?}", run.status).to_lowercase(),
            welfare_definition: run.method.welfare_definition(),
            welfare: run.solution.as_ref().map(|s| s.welfare),
            gross_welfare: run.solution.as_ref().map(|s| s.gross_welfare),
            prices,
            acceptance,
            profit_table: profit,
            verification,
            stats: RunStats {
                gap: run.gap,
                nodes: run.nodes,
                runtime_s: run.runtime_s,
                benders: run.benders.clone(),
            },
            solution: run.solution.clone(),
        }
    }
}

/// One summary row; gap is the relative gap in percent.
pub fn summary_row(name: &str, run: &MethodRun) -> [String; 9] {
    [
        name.to_string(),
        run.method.name().to_string(),
        run.solution
            .as_ref()
            .map(|s| format!("{:.6}", s.welfare))
            .unwrap_or_default(),
        if run.gap.is_finite() {
            format!("{:.2}", run.gap * 100.0 + 0.0)
        } else {
            "inf".to_string()
        },
        run.cuts.classical.to_string(),
        run.cuts.no_good.to_string(),
        run.cuts.strengthened().to_string(),
        run.nodes.to_string(),
        format!("{:.3}", run.runtime_s),
    ]
}

pub fn summary_csv(rows: &[[String; 9]]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Writes through a sibling temporary file and a rename, so readers never see
/// a partial report.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = std::fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            let written = out.write_all(contents.as_bytes()).and_then(|()| {
                if contents.ends_with('\n') {
                    Ok(())
                } else {
                    out.write_all(b"\n")
                }
            });
            match written {
                // A closed pipe (`| head`) is the reader's choice, not a failure.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => Ok(other?),
            }
        }
    }
}
