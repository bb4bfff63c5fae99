//! On-disk formats of the lattice runs.
//!
//! * series: CSV `t,rho_mean,n_mean`, 17 significant digits;
//! * snapshots: concatenated binary frames, each `b"CTCF"`, `u32` format version,
//!   `u32 d`, `u32 L`, `f64 t`, `u64 step`, then `L^d` little-endian `f64` values of
//!   the active density in row-major order; a CSV index `frame,t,step,offset` sits
//!   beside it;
//! * checkpoints: `checkpoint.json` (seed, step index, config, parameters) plus
//!   `checkpoint.bin` holding `rho` then `n` as little-endian `f64`.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FieldState, Geometry, LatticeConfig, Observer, SeriesPoint, Simulation, Snapshot};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::output::{create_buffered, fmt_f64, read_csv_columns};

const MAGIC: &[u8; 4] = b"CTCF";
const FRAME_VERSION: u32 = 1;
const HEADER_BYTES: u64 = 4 + 4 + 4 + 4 + 8 + 8;

pub const SERIES_HEADER: &str = "t,rho_mean,n_mean";

fn series_row(p: &SeriesPoint) -> String {
    format!("{},{},{}", fmt_f64(p.t), fmt_f64(p.rho_mean), fmt_f64(p.n_mean))
}

pub fn write_series_csv(path: &Path, series: &[SeriesPoint]) -> Result<()> {
    let mut w = create_buffered(path)?;
    writeln!(w, "{SERIES_HEADER}")?;
    for p in series {
        writeln!(w, "{}", series_row(p))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series_csv(path: &Path) -> Result<Vec<SeriesPoint>> {
    let (header, cols) = read_csv_columns(path)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("{}: missing column `{name}`", path.display())))
    };
    let (it, ir, inn) = (col("t")?, col("rho_mean")?, col("n_mean")?);
    Ok((0..cols[it].len())
        .map(|k| SeriesPoint { t: cols[it][k], rho_mean: cols[ir][k], n_mean: cols[inn][k] })
        .collect())
}

/// Streams the series CSV as samples arrive.
pub struct SeriesWriter {
    out: BufWriter<File>,
}

impl SeriesWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = create_buffered(path)?;
        writeln!(out, "{SERIES_HEADER}")?;
        Ok(Self { out })
    }

    /// Reopens an existing series, dropping rows later than `t_keep`.
    pub fn resume(path: &Path, t_keep: f64) -> Result<Self> {
        let kept: Vec<SeriesPoint> = read_series_csv(path)?.into_iter().filter(|p| p.t <= t_keep).collect();
        write_series_csv(path, &kept)?;
        let out = BufWriter::new(OpenOptions::new().append(true).open(path)?);
        Ok(Self { out })
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.flush()
    }
}

impl Observer for SeriesWriter {
    fn sample(&mut self, point: SeriesPoint) -> Result<()> {
        writeln!(self.out, "{}", series_row(&point))?;
        Ok(())
    }
}

/// Appends binary snapshot frames plus their index.
pub struct SnapshotWriter {
    bin: BufWriter<File>,
    idx: BufWriter<File>,
    offset: u64,
    frames: u64,
}

impl SnapshotWriter {
    pub fn create(bin_path: &Path, idx_path: &Path) -> Result<Self> {
        let bin = create_buffered(bin_path)?;
        let mut idx = create_buffered(idx_path)?;
        writeln!(idx, "frame,t,step,offset")?;
        Ok(Self { bin, idx, offset: 0, frames: 0 })
    }

    /// Reopens existing files, discarding frames with step > `keep_step`.
    pub fn resume(bin_path: &Path, idx_path: &Path, keep_step: u64) -> Result<Self> {
        let mut kept = Vec::new();
        let mut end = 0u64;
        for frame in SnapshotReader::open(bin_path)? {
            let (geom, snap) = frame?;
            if snap.step > keep_step {
                break;
            }
            kept.push((snap.t, snap.step, end));
            end += HEADER_BYTES + 8 * geom.n_sites() as u64;
        }
        let f = OpenOptions::new().write(true).open(bin_path)?;
        f.set_len(end)?;
        let mut bin = BufWriter::new(f);
        bin.seek(SeekFrom::Start(end))?;
        let mut idx = create_buffered(idx_path)?;
        writeln!(idx, "frame,t,step,offset")?;
        for (k, (t, step, off)) in kept.iter().enumerate() {
            writeln!(idx, "{k},{},{step},{off}", fmt_f64(*t))?;
        }
        Ok(Self { bin, idx, offset: end, frames: kept.len() as u64 })
    }

    pub fn write_frame(&mut self, geom: &Geometry, t: f64, step: u64, rho: &[f64]) -> Result<()> {
        if rho.len() != geom.n_sites() {
            return Err(Error::Geometry("snapshot length does not match the lattice".into()));
        }
        self.bin.write_all(MAGIC)?;
        self.bin.write_all(&FRAME_VERSION.to_le_bytes())?;
        self.bin.write_all(&(geom.d() as u32).to_le_bytes())?;
        self.bin.write_all(&(geom.l() as u32).to_le_bytes())?;
        self.bin.write_all(&t.to_le_bytes())?;
        self.bin.write_all(&step.to_le_bytes())?;
        for v in rho {
            self.bin.write_all(&v.to_le_bytes())?;
        }
        writeln!(self.idx, "{},{},{step},{}", self.frames, fmt_f64(t), self.offset)?;
        self.offset += HEADER_BYTES + 8 * rho.len() as u64;
        self.frames += 1;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.bin.flush()?;
        self.idx.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.flush()
    }
}

impl Observer for SnapshotWriter {
    fn sample(&mut self, _point: SeriesPoint) -> Result<()> {
        Ok(())
    }

    fn snapshot(&mut self, state: &FieldState, geom: &Geometry) -> Result<()> {
        self.write_frame(geom, state.t, state.step_index, &state.rho)
    }
}

/// Iterates over the frames of a snapshot file.
pub struct SnapshotReader {
    inner: BufReader<File>,
    buf: Vec<u8>,
}

impl SnapshotReader {
    pub fn open(path: &Path) -> Result<Self> {
        Ok(Self { inner: BufReader::with_capacity(1 << 20, File::open(path)?), buf: Vec::new() })
    }

    fn read_frame(&mut self) -> Result<Option<(Geometry, Snapshot)>> {
        if self.inner.fill_buf()?.is_empty() {
            return Ok(None);
        }
        let mut head = [0u8; HEADER_BYTES as usize];
        self.inner.read_exact(&mut head).map_err(|_| Error::Format("truncated snapshot header".into()))?;
        if &head[0..4] != MAGIC {
            return Err(Error::Format("bad snapshot magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != FRAME_VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let geom = Geometry::new(u32_at(8) as usize, u32_at(12) as usize)?;
        let t = f64::from_le_bytes(head[16..24].try_into().unwrap());
        let step = u64::from_le_bytes(head[24..32].try_into().unwrap());
        self.buf.resize(8 * geom.n_sites(), 0);
        self.inner.read_exact(&mut self.buf).map_err(|_| Error::Format("truncated snapshot frame".into()))?;
        let rho = self.buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Some((geom, Snapshot { t, step, rho })))
    }
}

impl Iterator for SnapshotReader {
    type Item = Result<(Geometry, Snapshot)>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_frame().transpose()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub seed: u64,
    pub step_index: u64,
    pub t: f64,
    pub config: LatticeConfig,
    pub params: ModelParams,
}

pub fn write_checkpoint(dir: &Path, sim: &Simulation) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let state = sim.state();
    let meta = Checkpoint {
        format_version: 1,
        seed: sim.config().seed,
        step_index: state.step_index,
        t: state.t,
        config: sim.config().clone(),
        params: *sim.params(),
    };
    // Write the field dump first so a crash never leaves metadata pointing at stale data.
    let tmp = dir.join("checkpoint.bin.tmp");
    {
        let mut w = create_buffered(&tmp)?;
        for v in state.rho.iter().chain(&state.n) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, dir.join("checkpoint.bin"))?;
    std::fs::write(dir.join("checkpoint.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

pub fn read_checkpoint(dir: &Path) -> Result<(Checkpoint, FieldState)> {
    let meta: Checkpoint = serde_json::from_str(&std::fs::read_to_string(dir.join("checkpoint.json"))?)?;
    let geom = meta.config.geometry()?;
    let bytes = std::fs::read(dir.join("checkpoint.bin"))?;
    let n_sites = geom.n_sites();
    if bytes.len() != 16 * n_sites {
        return Err(Error::Format(format!("checkpoint holds {} bytes, expected {}", bytes.len(), 16 * n_sites)));
    }
    let vals: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let state = FieldState {
        rho: vals[..n_sites].to_vec(),
        n: vals[n_sites..].to_vec(),
        t: meta.t,
        step_index: meta.step_index,
    };
    Ok((meta, state))
}
