//! JSON reports and CSV sweeps. Every writer is deterministic: fixed key order, shortest
//! round-trip float formatting, rows in input order.

use crate::failure::{Failure, Outcome};
use colombeau::kernels::SweepRow;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Output directory; `None` discards artifacts.
#[derive(Clone, Debug)]
pub struct Artifacts {
    dir: Option<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Artifacts { dir }
    }

    fn target(&self, rel: &str) -> Outcome<Option<PathBuf>> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let p = dir.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Failure::numerical(format!("create directory {}", parent.display()), e))?;
        }
        Ok(Some(p))
    }

    pub fn json<T: Serialize>(&self, rel: &str, value: &T) -> Outcome<Option<String>> {
        let Some(p) = self.target(rel)? else { return Ok(None) };
        let mut text = to_json(value)?;
        text.push('\n');
        write(&p, text.as_bytes())?;
        Ok(Some(rel.to_string()))
    }

    /// Sweep CSV: `epsilon, probe_x0.., quantity, value`.
    pub fn sweep_csv(&self, rel: &str, rows: &[SweepRow]) -> Outcome<Option<String>> {
        let Some(p) = self.target(rel)? else { return Ok(None) };
        write(&p, &sweep_csv_bytes(rows)?)?;
        Ok(Some(rel.to_string()))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Outcome<String> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::numerical("serialize report", e))
}

fn write(p: &Path, bytes: &[u8]) -> Outcome<()> {
    std::fs::write(p, bytes).map_err(|e| Failure::numerical(format!("write {}", p.display()), e))
}

pub fn sweep_csv_bytes(rows: &[SweepRow]) -> Outcome<Vec<u8>> {
    let n = rows.iter().map(|r| r.x.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::numerical("write sweep csv", e);
    let mut header = vec!["epsilon".to_string()];
    header.extend((0..n).map(|i| format!("probe_x{i}")));
    header.push("quantity".into());
    header.push("value".into());
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.epsilon.to_string()];
        rec.extend((0..n).map(|i| r.x.get(i).map(f64::to_string).unwrap_or_default()));
        rec.push(r.quantity.clone());
        rec.push(r.value.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Failure::numerical("write sweep csv", e.error()))
}
