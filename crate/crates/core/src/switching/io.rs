//! Signal files: CSV `start_time,mode` plus a JSON sidecar with the mode
//! partition and end time (`signal.csv` ↔ `signal.json`).

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::signal::{ModePartition, Piece, SwitchingSignal};
use crate::error::{Error, Result};
use crate::util::fmt_f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalMeta {
    #[serde(rename = "Q_s")]
    pub stable: Vec<usize>,
    #[serde(rename = "Q_u")]
    pub unstable: Vec<usize>,
    pub end_time: f64,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_signal_csv<W: Write>(signal: &SwitchingSignal, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["start_time", "mode"])?;
    for p in &signal.pieces {
        w.write_record([fmt_f64(p.start), p.mode.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_signal_csv<R: Read>(input: R, meta: &SignalMeta) -> Result<SwitchingSignal> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "start_time" || &headers[1] != "mode" {
        return Err(Error::Parse(format!(
            "expected header start_time,mode, got {headers:?}"
        )));
    }
    let mut pieces = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).map(str::trim).unwrap_or("");
        let start = field(0)
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("row {}: start_time: {e}", i + 1)))?;
        let mode = field(1)
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("row {}: mode: {e}", i + 1)))?;
        pieces.push(Piece { start, mode });
    }
    let partition = ModePartition {
        stable: meta.stable.clone(),
        unstable: meta.unstable.clone(),
    };
    SwitchingSignal::new(pieces, meta.end_time, partition).map_err(|e| Error::Parse(e.to_string()))
}

pub fn signal_meta(signal: &SwitchingSignal) -> SignalMeta {
    SignalMeta {
        stable: signal.partition.stable.clone(),
        unstable: signal.partition.unstable.clone(),
        end_time: signal.end_time,
    }
}

/// Writes `path` and its JSON sidecar.
pub fn save_signal(signal: &SwitchingSignal, path: &Path) -> Result<()> {
    write_signal_csv(signal, File::create(path)?)?;
    let meta = File::create(sidecar_path(path))?;
    serde_json::to_writer_pretty(meta, &signal_meta(signal))?;
    Ok(())
}

pub fn load_signal(path: &Path) -> Result<SwitchingSignal> {
    let meta: SignalMeta = serde_json::from_reader(File::open(sidecar_path(path))?)?;
    read_signal_csv(File::open(path)?, &meta)
}
