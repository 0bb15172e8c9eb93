//! File formats.
//!
//! Tables are written as CSV with a header row, or as raw binary: a
//! 16-byte header (`b"MTM1"`, `u32` row count, `u32` column count, `u32`
//! zero) followed by row-major little-endian `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::direct::{ObstructionReport, ScatteringSet};
use crate::error::{Error, Result};
use crate::lattice::{Potential, SpectralChart, SpectralGrid, Spacing, XGrid};
use crate::rhsolve::RhSolution;
use crate::spectra::{reflection_norm_report, ReflectionNormReport, ReflectionSet};

pub const MAGIC: &[u8; 4] = b"MTM1";
pub const POTENTIAL_HEADER: [&str; 5] = ["x", "re_u", "im_u", "re_v", "im_v"];
pub const SCATTERING_HEADER: [&str; 7] = ["z", "re_a", "im_a", "re_bp", "im_bp", "re_bm", "im_bm"];
pub const OMEGA_HEADER: [&str; 5] = ["omega", "re_rp", "im_rp", "re_rm", "im_rm"];
pub const Z_HEADER: [&str; 5] = ["z", "re_rhp", "im_rhp", "re_rhm", "im_rhm"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Bin,
}

/// A dense row-major table of floats.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub ncols: usize,
    pub data: Vec<f64>,
}

impl Table {
    pub fn new(header: &[&str], data: Vec<f64>) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), ncols: header.len(), data }
    }

    pub fn nrows(&self) -> usize {
        if self.ncols == 0 {
            0
        } else {
            self.data.len() / self.ncols
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }
}

pub fn write_csv(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&table.header).map_err(csv_err)?;
    for i in 0..table.nrows() {
        w.write_record(table.row(i).iter().map(|v| format!("{v}"))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Read a CSV table, requiring the given header.
pub fn read_csv(path: &Path, expected: &[&str]) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(|s| s.trim().to_string()).collect();
    if header != expected {
        return Err(Error::Parse(format!("{}: expected header {:?}, found {:?}", path.display(), expected, header)));
    }
    let mut data = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("{}: record {}: {e}", path.display(), i + 1)))?;
        if rec.len() != expected.len() {
            return Err(Error::Parse(format!("{}: record {} has {} fields", path.display(), i + 1, rec.len())));
        }
        for f in rec.iter() {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("{}: record {}: not a number: {f:?}", path.display(), i + 1)))?;
            data.push(v);
        }
    }
    Ok(Table::new(expected, data))
}

pub fn write_bin(path: &Path, table: &Table) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(table.nrows() as u32)?;
    w.write_u32::<LittleEndian>(table.ncols as u32)?;
    w.write_u32::<LittleEndian>(0)?;
    for v in &table.data {
        w.write_f64::<LittleEndian>(*v)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a binary table; `header` names the columns and fixes their count.
pub fn read_bin(path: &Path, header: &[&str]) -> Result<Table> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::Parse(format!("{}: truncated header", path.display())))?;
    if &magic != MAGIC {
        return Err(Error::Parse(format!("{}: bad magic {magic:?}", path.display())));
    }
    let trunc = |_| Error::Parse(format!("{}: truncated header", path.display()));
    let n = r.read_u32::<LittleEndian>().map_err(trunc)? as usize;
    let ncols = r.read_u32::<LittleEndian>().map_err(trunc)? as usize;
    let _reserved = r.read_u32::<LittleEndian>().map_err(trunc)?;
    if ncols != header.len() {
        return Err(Error::Parse(format!("{}: expected {} columns, found {ncols}", path.display(), header.len())));
    }
    let mut data = vec![0.0; n * ncols];
    r.read_f64_into::<LittleEndian>(&mut data)
        .map_err(|_| Error::Parse(format!("{}: truncated body, expected {n} rows", path.display())))?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Parse(format!("{}: {} trailing bytes", path.display(), rest.len())));
    }
    Ok(Table::new(header, data))
}

pub fn write_table(path: &Path, table: &Table, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(path, table),
        Format::Bin => write_bin(path, table),
    }
}

/// Format from the file extension (`.bin` or anything else as CSV).
pub fn format_of(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => Format::Bin,
        _ => Format::Csv,
    }
}

pub fn potential_table(p: &Potential) -> Table {
    let g = p.grid();
    let mut data = Vec::with_capacity(5 * g.len());
    for j in 0..g.len() {
        data.extend([g.x(j), p.u()[j].re, p.u()[j].im, p.v()[j].re, p.v()[j].im]);
    }
    Table::new(&POTENTIAL_HEADER, data)
}

pub fn write_potential(path: &Path, p: &Potential, format: Format) -> Result<()> {
    write_table(path, &potential_table(p), format)
}

/// Read a potential; the x column must be uniformly spaced.
pub fn read_potential(path: &Path) -> Result<Potential> {
    let t = match format_of(path) {
        Format::Csv => read_csv(path, &POTENTIAL_HEADER)?,
        Format::Bin => read_bin(path, &POTENTIAL_HEADER)?,
    };
    potential_from_table(&t)
}

pub fn potential_from_table(t: &Table) -> Result<Potential> {
    let n = t.nrows();
    if n < 2 {
        return Err(Error::Parse(format!("potential needs at least 2 rows, found {n}")));
    }
    let x0 = t.row(0)[0];
    let dx = (t.row(n - 1)[0] - x0) / (n - 1) as f64;
    for j in 0..n {
        let x = t.row(j)[0];
        if (x - (x0 + j as f64 * dx)).abs() > 1e-9 * (1.0 + x.abs()) {
            return Err(Error::Parse(format!("x column is not uniform at row {}", j + 1)));
        }
    }
    let grid = XGrid::new(x0, dx, n)?;
    let u = (0..n).map(|j| C64::new(t.row(j)[1], t.row(j)[2])).collect();
    let v = (0..n).map(|j| C64::new(t.row(j)[3], t.row(j)[4])).collect();
    Potential::new(grid, u, v)
}

/// Spectral grid parameters stored next to spectral tables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub z_max: f64,
    pub nodes: usize,
    pub spacing: Spacing,
}

impl GridMeta {
    pub fn of(g: &SpectralGrid) -> Self {
        GridMeta { z_max: g.z_max(), nodes: g.len(), spacing: g.spacing() }
    }

    pub fn z_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::symmetric(self.z_max, self.nodes, self.spacing, SpectralChart::Z)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSidecar {
    pub a0: [f64; 2],
    pub ainf: [f64; 2],
    pub min_abs_a: f64,
    pub winding: i64,
    pub verdict: crate::direct::Verdict,
    pub grid: GridMeta,
    pub max_wronskian_drift: f64,
    pub max_chart_defect: f64,
    pub max_determinant_defect: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn scattering_table(ss: &ScatteringSet) -> Table {
    let mut data = Vec::with_capacity(7 * ss.grid.len());
    for k in 0..ss.grid.len() {
        data.extend([ss.grid.node(k), ss.a[k].re, ss.a[k].im, ss.bp[k].re, ss.bp[k].im, ss.bm[k].re, ss.bm[k].im]);
    }
    Table::new(&SCATTERING_HEADER, data)
}

/// `<stem>.csv|bin` plus `<stem>.json`.
pub fn write_scattering(dir: &Path, stem: &str, ss: &ScatteringSet, rep: &ObstructionReport, format: Format) -> Result<()> {
    write_table(&dir.join(format!("{stem}.{}", ext(format))), &scattering_table(ss), format)?;
    let mx = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let side = ScatteringSidecar {
        a0: [ss.a0.re, ss.a0.im],
        ainf: [ss.ainf.re, ss.ainf.im],
        min_abs_a: rep.min_abs_a,
        winding: rep.winding,
        verdict: rep.verdict,
        grid: GridMeta::of(&ss.grid),
        max_wronskian_drift: mx(&ss.diagnostics.wronskian_drift),
        max_chart_defect: mx(&ss.diagnostics.chart_defect),
        max_determinant_defect: mx(&ss.diagnostics.determinant_defect),
    };
    write_json(&dir.join(format!("{stem}.json")), &side)
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Bin => "bin",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSidecar {
    pub t: f64,
    pub c0: f64,
    pub grid: GridMeta,
    pub norms: ReflectionNormReport,
}

pub fn reflection_tables(rs: &ReflectionSet) -> (Table, Table) {
    let n = rs.z_grid.len();
    let mut om = Vec::with_capacity(5 * n);
    let mut zz = Vec::with_capacity(5 * n);
    for k in 0..n {
        om.extend([rs.omega_grid.node(k), rs.rp[k].re, rs.rp[k].im, rs.rm[k].re, rs.rm[k].im]);
        zz.extend([rs.z_grid.node(k), rs.rhp[k].re, rs.rhp[k].im, rs.rhm[k].re, rs.rhm[k].im]);
    }
    (Table::new(&OMEGA_HEADER, om), Table::new(&Z_HEADER, zz))
}

/// `<stem>_omega.*`, `<stem>_z.*` and `<stem>.json`.
pub fn write_reflections(dir: &Path, stem: &str, rs: &ReflectionSet, format: Format) -> Result<()> {
    let (om, zz) = reflection_tables(rs);
    write_table(&dir.join(format!("{stem}_omega.{}", ext(format))), &om, format)?;
    write_table(&dir.join(format!("{stem}_z.{}", ext(format))), &zz, format)?;
    let side = ReflectionSidecar { t: rs.t, c0: rs.c0(), grid: GridMeta::of(&rs.z_grid), norms: reflection_norm_report(rs) };
    write_json(&dir.join(format!("{stem}.json")), &side)
}

/// Read reflection data written by [`write_reflections`]. The z table is
/// authoritative; the grid is rebuilt from the sidecar and checked
/// against the stored nodes.
pub fn read_reflections(dir: &Path, stem: &str) -> Result<ReflectionSet> {
    let side: ReflectionSidecar = read_json(&dir.join(format!("{stem}.json")))?;
    let csv = dir.join(format!("{stem}_z.csv"));
    let t = if csv.exists() { read_csv(&csv, &Z_HEADER)? } else { read_bin(&dir.join(format!("{stem}_z.bin")), &Z_HEADER)? };
    let grid = side.grid.z_grid()?;
    if t.nrows() != grid.len() {
        return Err(Error::Parse(format!("reflection table has {} rows, sidecar says {}", t.nrows(), grid.len())));
    }
    for k in 0..grid.len() {
        let z = t.row(k)[0];
        if (z - grid.node(k)).abs() > 1e-12 * z.abs().max(1.0) {
            return Err(Error::Parse(format!("reflection node {} = {z} does not match the grid", k + 1)));
        }
    }
    let rhm = (0..grid.len()).map(|k| C64::new(t.row(k)[3], t.row(k)[4])).collect();
    ReflectionSet::from_rhm(grid, rhm, side.t)
}

pub const MOMENT_COLUMNS: usize = 17;

/// `x`, then the entries of `moment1` and `value0` as (re, im) pairs in
/// row-major order.
pub fn moment_table(xs: &[f64], sols: &[RhSolution]) -> Table {
    let mut header = vec!["x".to_string()];
    for name in ["m1", "m0"] {
        for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            header.push(format!("re_{name}_{i}{j}"));
            header.push(format!("im_{name}_{i}{j}"));
        }
    }
    let mut data = Vec::with_capacity(MOMENT_COLUMNS * xs.len());
    for (x, s) in xs.iter().zip(sols) {
        data.push(*x);
        for m in [&s.moment1, &s.value0] {
            for z in m.0.iter().flatten() {
                data.extend([z.re, z.im]);
            }
        }
    }
    Table { header, ncols: MOMENT_COLUMNS, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_xgrid;

    #[test]
    fn potential_csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = Potential::gaussian(make_xgrid(3.0, 31).unwrap(), 0.2, 0.1);
        let path = dir.path().join("p.csv");
        write_potential(&path, &p, Format::Csv).unwrap();
        let q = read_potential(&path).unwrap();
        assert_eq!(p.u(), q.u());
        assert_eq!(p.v(), q.v());
    }

    #[test]
    fn potential_bin_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = Potential::gaussian(make_xgrid(3.0, 31).unwrap(), 0.2, 0.1);
        let path = dir.path().join("p.bin");
        write_potential(&path, &p, Format::Bin).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"MTM1");
        assert_eq!(bytes.len(), 16 + 31 * 5 * 8);
        let q = read_potential(&path).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn truncated_inputs_are_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = Potential::gaussian(make_xgrid(3.0, 31).unwrap(), 0.2, 0.1);
        let path = dir.path().join("p.bin");
        write_potential(&path, &p, Format::Bin).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..100]).unwrap();
        assert!(matches!(read_potential(&path), Err(Error::Parse(_))));

        let path = dir.path().join("p.csv");
        write_potential(&path, &p, Format::Csv).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut = &text[..text.len() - 20];
        std::fs::write(&path, cut).unwrap();
        assert!(matches!(read_potential(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "x,a,b,c,d\n0,0,0,0,0\n1,0,0,0,0\n").unwrap();
        assert!(matches!(read_potential(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn reflections_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpectralGrid::symmetric(8.0, 32, Spacing::Mapped, SpectralChart::Z).unwrap();
        let rhm = g.nodes().iter().map(|&z| C64::new(z.sin(), 0.1) * (z * z / (1.0 + z.powi(4)))).collect();
        let rs = ReflectionSet::from_rhm(g, rhm, 0.5).unwrap();
        write_reflections(dir.path(), "refl", &rs, Format::Csv).unwrap();
        let back = read_reflections(dir.path(), "refl").unwrap();
        assert_eq!(back, rs);
    }
}
