//! Arc export: CSV `t,s,j,q,tau,rho,mu,x0..x{n-1}` and a JSON mirror.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::arc::HybridArc;
use crate::blowup::BlowUpParams;
use crate::error::Result;
use crate::util::fmt_f64;

/// One exported sample, both time scales filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcRow {
    pub t: f64,
    pub s: f64,
    pub j: usize,
    pub q: usize,
    pub tau: f64,
    pub rho: Option<f64>,
    pub mu: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcDocument {
    pub scale: super::arc::TimeScale,
    pub params: BlowUpParams,
    pub dim: usize,
    pub rows: Vec<ArcRow>,
}

pub fn csv_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "s", "j", "q", "tau", "rho", "mu"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..dim).map(|i| format!("x{i}")));
    h
}

pub fn arc_rows(arc: &HybridArc) -> Result<Vec<ArcRow>> {
    arc.iter()
        .map(|(j, q, smp)| {
            Ok(ArcRow {
                t: arc.original_time(smp.time)?,
                s: arc.dilated_time(smp.time)?,
                j,
                q,
                tau: smp.tau,
                rho: smp.rho,
                mu: smp.mu,
                x: smp.x.clone(),
            })
        })
        .collect()
}

pub fn write_arc_csv<W: Write>(arc: &HybridArc, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(arc.dim))?;
    for row in arc_rows(arc)? {
        let mut rec = vec![
            fmt_f64(row.t),
            fmt_f64(row.s),
            row.j.to_string(),
            row.q.to_string(),
            fmt_f64(row.tau),
            row.rho.map(fmt_f64).unwrap_or_default(),
            fmt_f64(row.mu),
        ];
        rec.extend(row.x.iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_arc_json<W: Write>(arc: &HybridArc, out: W) -> Result<()> {
    let doc = ArcDocument {
        scale: arc.scale,
        params: arc.params,
        dim: arc.dim,
        rows: arc_rows(arc)?,
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::arc::{ArcInterval, Sample, TimeScale};

    fn arc() -> HybridArc {
        let smp = |time: f64, x: f64, rho| Sample {
            time,
            x: vec![x, -x],
            tau: 0.5,
            rho,
            mu: 1.0,
        };
        HybridArc {
            scale: TimeScale::Original,
            params: BlowUpParams::new(10.0, 1.0, 1.0).unwrap(),
            dim: 2,
            intervals: vec![
                ArcInterval {
                    j: 0,
                    mode: 1,
                    samples: vec![smp(0.0, 1.0, None), smp(5.0, 2.0, None)],
                },
                ArcInterval {
                    j: 1,
                    mode: 2,
                    samples: vec![smp(5.0, 3.0, Some(0.25))],
                },
            ],
        }
    }

    #[test]
    fn csv_schema() {
        let mut buf = Vec::new();
        write_arc_csv(&arc(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,s,j,q,tau,rho,mu,x0,x1");
        assert_eq!(lines.len(), 4);
        let f: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(f[5], "");
        let f: Vec<&str> = lines[2].split(',').collect();
        let s: f64 = f[1].parse().unwrap();
        assert!((s - 10.0 * 2f64.ln()).abs() < 1e-12);
        let f: Vec<&str> = lines[3].split(',').collect();
        assert_eq!(f[2], "1");
        assert_eq!(f[3], "2");
        assert_eq!(f[5].parse::<f64>().unwrap(), 0.25);
    }

    #[test]
    fn json_mirrors_csv() {
        let mut buf = Vec::new();
        write_arc_json(&arc(), &mut buf).unwrap();
        let doc: ArcDocument = serde_json::from_slice(&buf).unwrap();
        assert_eq!(doc.rows.len(), 3);
        assert_eq!(doc.rows[2].rho, Some(0.25));
        assert_eq!(doc.rows[0].rho, None);
    }
}
