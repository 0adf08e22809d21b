//! CSV diagnostics traces and legacy ASCII VTK snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Column order of the diagnostics CSV.
pub const CSV_HEADER: &str = "step,time,energy,area,fp_iterations,dissipation_residual";

/// One row of the diagnostics trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub area: f64,
    pub fp_iterations: usize,
    pub dissipation_residual: f64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

/// Incremental CSV writer; rows are buffered until [`CsvSink::flush`].
pub struct CsvSink {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvSink {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        writer.write_record(CSV_HEADER.split(',')).map_err(csv_err(&path))?;
        Ok(Self { path, writer })
    }

    pub fn push(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        self.writer.serialize(record).map_err(csv_err(&self.path))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(io_err(&self.path))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

pub fn write_csv(records: &[DiagnosticsRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut sink = CsvSink::create(path)?;
    for r in records {
        sink.push(r)?;
    }
    sink.flush()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<DiagnosticsRecord>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    reader.deserialize().map(|r| r.map_err(csv_err(path))).collect()
}

/// Writes `s` as point data named `S` on an unstructured grid.
pub fn write_vtk_snapshot(mesh: &Mesh, s: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    write_vtk(mesh, s, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn write_vtk(mesh: &Mesh, s: &[f64], w: &mut impl Write) -> std::io::Result<()> {
    let npe = mesh.nodes_per_element();
    // VTK_LINE = 3, VTK_TRIANGLE = 5
    let cell_type = if mesh.dim() == 1 { 3 } else { 5 };
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "phase field S")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.num_vertices())?;
    for p in mesh.vertices() {
        writeln!(w, "{} {} 0", p[0], p[1])?;
    }
    writeln!(w, "CELLS {} {}", mesh.num_elements(), mesh.num_elements() * (npe + 1))?;
    for el in mesh.elements() {
        write!(w, "{npe}")?;
        for v in el {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.num_elements())?;
    for _ in 0..mesh.num_elements() {
        writeln!(w, "{cell_type}")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.num_vertices())?;
    writeln!(w, "SCALARS S double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in s {
        writeln!(w, "{v}")?;
    }
    Ok(())
}
