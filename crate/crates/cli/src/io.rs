//! Output files: CSV norm traces, binary field snapshots and JSON reports.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use boussinesq::spectral::{Field, NormSpec, Side, SpectralGrid, StateNorms};
use num_complex::Complex64;
use serde::Serialize;

pub const CSV_HEADER: &str = "t,norm_u_X1,norm_u_Xp,norm_u_Xinf,norm_u_Ysp,norm_ut_Xp,norm_ut_Xinf,norm_ut_Ysp,window_index,picard_iters,contraction_estimate";

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"BQS1";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Window bookkeeping attached to one CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RowWindow {
    pub index: usize,
    pub picard_iters: usize,
    pub contraction_estimate: f64,
}

/// One CSV row: time, norms of `u` and `u_t`, window data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRow {
    pub t: f64,
    pub u: StateNorms,
    pub ut: StateNorms,
    pub window: RowWindow,
}

impl NormRow {
    pub fn compute(t: f64, u: &Field, ut: &Field, spec: NormSpec, window: RowWindow) -> io::Result<Self> {
        let err = |e: boussinesq::spectral::NormError| io::Error::new(io::ErrorKind::InvalidData, e);
        Ok(Self {
            t,
            u: StateNorms::compute(u, None, spec).map_err(err)?,
            ut: StateNorms::compute(ut, None, spec).map_err(err)?,
            window,
        })
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the header and one line per row.
pub fn write_csv<W: Write>(out: &mut W, rows: &[NormRow]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f(r.t),
            fmt_f(r.u.x1),
            fmt_f(r.u.xp),
            fmt_f(r.u.xinf),
            fmt_f(r.u.ysp),
            fmt_f(r.ut.xp),
            fmt_f(r.ut.xinf),
            fmt_f(r.ut.ysp),
            r.window.index,
            r.window.picard_iters,
            fmt_f(r.window.contraction_estimate),
        )?;
    }
    Ok(())
}

pub fn write_csv_file(path: &Path, rows: &[NormRow]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(&mut w, rows)?;
    w.flush()
}

/// Parses a CSV written by [`write_csv`] into its numeric columns.
pub fn read_csv(text: &str) -> io::Result<Vec<Vec<f64>>> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad("unexpected CSV header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .map(|c| c.parse::<f64>().map_err(|e| bad(format!("row {}: {e}", i + 1))))
                .collect()
        })
        .collect()
}

/// A field sample at one time, as stored in a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: Field,
}

/// Serializes a snapshot in the `BQS1` layout.
pub fn write_snapshot<W: Write>(out: &mut W, time: f64, field: &Field) -> io::Result<()> {
    let grid = field.grid();
    let n = grid.n_dims();
    let comps = u8::try_from(field.components())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "too many components"))?;
    let side = match field.side() {
        Side::Physical => 0u8,
        Side::Spectral => 1u8,
    };
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    out.write_all(&[n as u8, comps, side, 0])?;
    for &p in grid.points() {
        out.write_all(&(p as u64).to_le_bytes())?;
    }
    for &w in grid.half_widths() {
        out.write_all(&w.to_le_bytes())?;
    }
    out.write_all(&time.to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    out.write_all(&buf)
}

pub fn write_snapshot_file(path: &Path, time: f64, field: &Field) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(&mut w, time, field)?;
    w.flush()
}

fn take<const K: usize, R: Read>(r: &mut R) -> io::Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b)?;
    Ok(b)
}

/// Parses a `BQS1` snapshot.
pub fn read_snapshot<R: Read>(r: &mut R) -> io::Result<Snapshot> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    if &take::<4, _>(r)? != SNAPSHOT_MAGIC {
        return Err(bad("not a BQS1 snapshot"));
    }
    if u32::from_le_bytes(take(r)?) != SNAPSHOT_VERSION {
        return Err(bad("unsupported snapshot version"));
    }
    let [n, comps, side, _pad] = take::<4, _>(r)?;
    let (n, comps) = (n as usize, comps as usize);
    let side = match side {
        0 => Side::Physical,
        1 => Side::Spectral,
        _ => return Err(bad("bad side tag")),
    };
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push(u64::from_le_bytes(take(r)?) as usize);
    }
    let mut widths = Vec::with_capacity(n);
    for _ in 0..n {
        widths.push(f64::from_le_bytes(take(r)?));
    }
    let grid = SpectralGrid::new(n, &points, &widths).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    let time = f64::from_le_bytes(take(r)?);
    let count = comps * grid.len();
    let mut raw = vec![0u8; 16 * count];
    r.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    let field = Field::from_values(grid, comps, side, values).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(bad("trailing bytes after snapshot samples"));
    }
    Ok(Snapshot { time, field })
}

pub fn read_snapshot_file(path: &Path) -> io::Result<Snapshot> {
    read_snapshot(&mut io::BufReader::new(File::open(path)?))
}

/// File name of the snapshot of `u` or `u_t` at stored time index `k`.
pub fn snapshot_path(dir: &Path, which: &str, k: usize) -> PathBuf {
    dir.join(format!("{which}_{k:06}.bqs"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::from)?;
    w.write_all(b"\n")?;
    w.flush()
}
