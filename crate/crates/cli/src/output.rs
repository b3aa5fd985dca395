//! Trajectory files. CSV files start with a versioned comment line carrying the
//! run metadata as JSON, followed by a fixed column order:
//! `s`, coordinates, velocity, acceleration, monitored invariants, residuals.
//! Numbers are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context};
use cgflow::flows::{FlowKind, Sample, Termination};
use cgflow::MetricModel;
use serde::{Deserialize, Serialize};

use crate::report::Recorded;

pub const CSV_VERSION: &str = "cgflow-trajectory v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    model: MetricModel,
    flow: FlowKind,
    c: Option<[f64; 3]>,
    termination: Termination,
}

fn columns(rec: &Recorded) -> Vec<String> {
    let names = rec.model.coord_names();
    let mut cols = vec!["s".to_string()];
    for prefix in ["x", "u", "a"] {
        cols.extend(names.iter().map(|n| format!("{prefix}:{n}")));
    }
    cols.extend(rec.invariant_names.iter().map(|n| format!("inv:{n}")));
    cols.extend(rec.residual_names.iter().map(|n| format!("res:{n}")));
    cols
}

pub fn write_csv(path: &Path, rec: &Recorded) -> anyhow::Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let meta = Meta { model: rec.model.clone(), flow: rec.flow, c: rec.c, termination: rec.termination.clone() };
    writeln!(f, "# {CSV_VERSION} {}", serde_json::to_string(&meta)?)?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(columns(rec))?;
    for s in &rec.samples {
        let row = std::iter::once(s.s)
            .chain(s.coords.iter().copied())
            .chain(s.u.iter().copied())
            .chain(s.a.iter().copied())
            .chain(s.invariants.iter().copied())
            .chain(s.residuals.iter().copied())
            .map(|x| x.to_string());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> anyhow::Result<Recorded> {
    let mut r = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut first = String::new();
    r.read_line(&mut first)?;
    let Some(meta) = first.trim_end().strip_prefix(&format!("# {CSV_VERSION} ")) else {
        bail!("{}: missing `# {CSV_VERSION}` header line", path.display());
    };
    let meta: Meta = serde_json::from_str(meta).context("trajectory metadata")?;
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let n = meta.model.dim();
    let strip = |p: &str| -> Vec<String> { header.iter().filter_map(|h| h.strip_prefix(p)).map(str::to_string).collect() };
    let (inv, res) = (strip("inv:"), strip("res:"));
    let mut rec = Recorded {
        model: meta.model,
        flow: meta.flow,
        c: meta.c,
        termination: meta.termination,
        invariant_names: inv,
        residual_names: res,
        samples: vec![],
    };
    if columns(&rec) != header {
        bail!("{}: unexpected column layout", path.display());
    }
    let (ni, nr) = (rec.invariant_names.len(), rec.residual_names.len());
    for row in rd.records() {
        let row = row?;
        let v: Vec<f64> = row.iter().map(|x| x.parse::<f64>()).collect::<Result<_, _>>().context("numeric field")?;
        let mut it = v.into_iter();
        let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
        let s = take(1)[0];
        rec.samples.push(Sample {
            s,
            coords: take(n),
            u: take(n),
            a: take(n),
            invariants: take(ni),
            residuals: take(nr),
        });
    }
    Ok(rec)
}

pub fn write_json(path: &Path, rec: &Recorded) -> anyhow::Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer(std::io::BufWriter::new(f), rec)?;
    Ok(())
}

pub fn read_json(path: &Path) -> anyhow::Result<Recorded> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

pub fn read_any(path: &Path) -> anyhow::Result<Recorded> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_json(path),
        _ => read_csv(path),
    }
}
