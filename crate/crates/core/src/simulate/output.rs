//! Trajectory files.
//!
//! CSV: one row per snapshot, `path_id,t,g1..,z1..,s1..`.
//!
//! Binary (little-endian):
//!
//! ```text
//! magic      4 bytes  "LFTR"
//! version    u16      1
//! reserved   u16      0
//! group_len  u32
//! algebra    u32
//! chart      u32
//! stride     u64      recording stride in steps
//! n_paths    u64
//! frames     path_id u64, t f64, group_len + algebra + chart f64 values
//! ```

use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use super::{PathStatus, TrajectoryEnsemble};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LFTR";
pub const VERSION: u16 = 1;

pub fn write_csv<W: Write>(ensemble: &TrajectoryEnsemble, out: W) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    let mut header = vec!["path_id".to_string(), "t".to_string()];
    header.extend((1..=ensemble.group_len).map(|i| format!("g{i}")));
    header.extend((1..=ensemble.algebra_dim).map(|i| format!("z{i}")));
    header.extend((1..=ensemble.chart_dim).map(|i| format!("s{i}")));
    writeln!(w, "{}", header.join(","))?;
    for p in &ensemble.paths {
        for s in &p.snapshots {
            write!(w, "{},{}", p.path_id, s.t)?;
            for v in s.group.iter().chain(&s.algebra).chain(&s.chart) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()
}

/// Per-path status lines, `path_id,status,t_blowup`.
pub fn write_status_csv<W: Write>(ensemble: &TrajectoryEnsemble, out: W) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "path_id,status,t_blowup")?;
    for p in &ensemble.paths {
        match p.status {
            PathStatus::Completed => writeln!(w, "{},completed,", p.path_id)?,
            PathStatus::BlownUp { t } => writeln!(w, "{},blown_up,{t}", p.path_id)?,
        }
    }
    w.flush()
}

pub fn write_binary<W: Write>(ensemble: &TrajectoryEnsemble, out: W) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&0u16.to_le_bytes())?;
    for d in [ensemble.group_len, ensemble.algebra_dim, ensemble.chart_dim] {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&ensemble.stride.to_le_bytes())?;
    w.write_all(&(ensemble.paths.len() as u64).to_le_bytes())?;
    for p in &ensemble.paths {
        for s in &p.snapshots {
            w.write_all(&p.path_id.to_le_bytes())?;
            w.write_all(&s.t.to_le_bytes())?;
            for v in s.group.iter().chain(&s.algebra).chain(&s.chart) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryHeader {
    pub version: u16,
    pub group_len: usize,
    pub algebra_dim: usize,
    pub chart_dim: usize,
    pub stride: u64,
    pub n_paths: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub path_id: u64,
    pub t: f64,
    pub values: Vec<f64>,
}

pub fn read_binary(path: &Path) -> Result<(BinaryHeader, Vec<Frame>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_binary(&bytes)
}

pub fn parse_binary(bytes: &[u8]) -> Result<(BinaryHeader, Vec<Frame>)> {
    let bad = |what: &str| Error::InvalidConfig(format!("trajectory file: {what}"));
    if bytes.len() < 36 || &bytes[..4] != MAGIC {
        return Err(bad("missing header"));
    }
    let u16_at = |o: usize| u16::from_le_bytes(bytes[o..o + 2].try_into().unwrap());
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let header = BinaryHeader {
        version: u16_at(4),
        group_len: u32_at(8),
        algebra_dim: u32_at(12),
        chart_dim: u32_at(16),
        stride: u64_at(20),
        n_paths: u64_at(28),
    };
    if header.version != VERSION {
        return Err(bad(&format!("unsupported version {}", header.version)));
    }
    let width = header.group_len + header.algebra_dim + header.chart_dim;
    let frame_len = 16 + 8 * width;
    let body = &bytes[36..];
    if body.len() % frame_len != 0 {
        return Err(bad("truncated frame"));
    }
    let frames = body
        .chunks_exact(frame_len)
        .map(|c| Frame {
            path_id: u64::from_le_bytes(c[..8].try_into().unwrap()),
            t: f64::from_le_bytes(c[8..16].try_into().unwrap()),
            values: c[16..].chunks_exact(8).map(|v| f64::from_le_bytes(v.try_into().unwrap())).collect(),
        })
        .collect();
    Ok((header, frames))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{PathRecord, Snapshot};

    fn sample() -> TrajectoryEnsemble {
        let snap = |t: f64| Snapshot { t, group: vec![t, 1.0], algebra: vec![-t], chart: vec![0.5 * t] };
        TrajectoryEnsemble {
            kind: "constrained",
            seed: 1,
            dt: 0.1,
            stride: 5,
            group_len: 2,
            algebra_dim: 1,
            chart_dim: 1,
            paths: (0..2)
                .map(|i| PathRecord {
                    path_id: i,
                    stream_id: i,
                    snapshots: vec![snap(0.0), snap(0.5)],
                    status: PathStatus::Completed,
                })
                .collect(),
        }
    }

    #[test]
    fn binary_roundtrip() {
        let e = sample();
        let mut buf = Vec::new();
        write_binary(&e, &mut buf).unwrap();
        let (h, frames) = parse_binary(&buf).unwrap();
        assert_eq!(h, BinaryHeader { version: 1, group_len: 2, algebra_dim: 1, chart_dim: 1, stride: 5, n_paths: 2 });
        assert_eq!(frames.len(), 4);
        assert_eq!(frames[3], Frame { path_id: 1, t: 0.5, values: vec![0.5, 1.0, -0.5, 0.25] });
        assert!(parse_binary(&buf[..buf.len() - 3]).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "path_id,t,g1,g2,z1,s1");
        assert_eq!(lines[2], "0,0.5,0.5,1,-0.5,0.25");
        assert_eq!(lines.len(), 5);
    }
}
