//! CSV reports. Scaling: `workers,wall_s,speedup,efficiency`. Kernel times:
//! `executor,kernel,count,total_ms,mean_ms`. Plain `.` decimals, no
//! thousands separators.

use std::collections::BTreeMap;
use std::path::Path;

use crate::bench::{CampaignReport, KernelTimes, ScalingRow, TenancyRow};
use crate::error::{Error, Result};

pub const SCALING_COLUMNS: [&str; 4] = ["workers", "wall_s", "speedup", "efficiency"];
pub const KERNEL_COLUMNS: [&str; 5] = ["executor", "kernel", "count", "total_ms", "mean_ms"];
pub const TENANCY_COLUMNS: [&str; 5] = ["ranks_per_device", "ranks", "devices", "wall_s", "throughput"];

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_scaling_csv(rows: &[ScalingRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows(
        path.as_ref(),
        &SCALING_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.workers.to_string(),
                format!("{:.6}", r.wall_s),
                format!("{:.6}", r.speedup),
                format!("{:.6}", r.efficiency),
            ]
        }),
    )
}

pub fn write_tenancy_csv(rows: &[TenancyRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows(
        path.as_ref(),
        &TENANCY_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.ranks_per_device.to_string(),
                r.ranks.to_string(),
                r.devices.to_string(),
                format!("{:.6}", r.wall_s),
                format!("{:.6}", r.throughput),
            ]
        }),
    )
}

pub fn write_kernel_csv<'a>(
    reports: impl IntoIterator<Item = (&'a str, &'a CampaignReport)>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut rows = Vec::new();
    for (name, report) in reports {
        for (kernel, agg) in &report.kernel_times {
            rows.push(vec![
                name.to_owned(),
                kernel.clone(),
                agg.count.to_string(),
                format!("{:.6}", agg.total_ms),
                format!("{:.6}", agg.mean_ms),
            ]);
        }
    }
    write_rows(path.as_ref(), &KERNEL_COLUMNS, rows)
}

/// A CSV file read as a header plus string records.
pub struct CsvTable {
    pub header: Vec<String>,
    pub records: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        let header: Vec<String> = r
            .headers()
            .map_err(|e| csv_err(path, e))?
            .iter()
            .map(|h| h.trim().to_owned())
            .collect();
        if header.iter().all(String::is_empty) {
            return Err(Error::Report(format!("{}: file is empty", path.display())));
        }
        let records = r
            .records()
            .map(|rec| {
                rec.map(|r| r.iter().map(|f| f.trim().to_owned()).collect())
                    .map_err(|e| csv_err(path, e))
            })
            .collect::<Result<_>>()?;
        Ok(CsvTable { header, records })
    }

    pub fn has_columns(&self, cols: &[&str]) -> bool {
        cols.iter().all(|c| self.header.iter().any(|h| h == c))
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Report(format!("missing column `{name}`")))
    }

    fn cell<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<T> {
        let raw = &self.records[row][col];
        raw.parse().map_err(|_| {
            Error::Report(format!(
                "row {}: column `{}` value {raw:?} is not valid",
                row + 1,
                self.header[col]
            ))
        })
    }

    fn require(&self, cols: &[&str]) -> Result<Vec<usize>> {
        let idx = cols.iter().map(|c| self.column(c)).collect::<Result<Vec<_>>>()?;
        if self.records.is_empty() {
            return Err(Error::Report("CSV has a header but no data rows".into()));
        }
        Ok(idx)
    }

    pub fn scaling_rows(&self) -> Result<Vec<ScalingRow>> {
        let c = self.require(&SCALING_COLUMNS)?;
        (0..self.records.len())
            .map(|i| {
                Ok(ScalingRow {
                    workers: self.cell(i, c[0])?,
                    wall_s: self.cell(i, c[1])?,
                    speedup: self.cell(i, c[2])?,
                    efficiency: self.cell(i, c[3])?,
                })
            })
            .collect()
    }

    /// Kernel means grouped by executor, executors in first-seen order.
    pub fn kernel_times(&self) -> Result<KernelTimes> {
        let c = self.require(&["executor", "kernel", "mean_ms"])?;
        let mut order: Vec<String> = Vec::new();
        let mut map: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for i in 0..self.records.len() {
            let exec = self.records[i][c[0]].clone();
            let kernel = self.records[i][c[1]].clone();
            let mean: f64 = self.cell(i, c[2])?;
            if !order.contains(&exec) {
                order.push(exec.clone());
            }
            map.entry(exec).or_default().insert(kernel, mean);
        }
        let mut out = KernelTimes::default();
        for e in order {
            let m = map.remove(&e).unwrap_or_default();
            out.push(e, m);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let rows = vec![
            ScalingRow { workers: 1, wall_s: 2.0, speedup: 1.0, efficiency: 1.0 },
            ScalingRow { workers: 2, wall_s: 1.25, speedup: 1.6, efficiency: 0.8 },
        ];
        write_scaling_csv(&rows, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("workers,wall_s,speedup,efficiency\n1,2.000000,1.000000,1.000000\n"));
        assert_eq!(CsvTable::read(&p).unwrap().scaling_rows().unwrap(), rows);
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "workers,wall_s,speedup\n1,1,1\n").unwrap();
        let err = CsvTable::read(&p).unwrap().scaling_rows().unwrap_err();
        assert!(err.to_string().contains("`efficiency`"), "{err}");
    }

    #[test]
    fn empty_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        std::fs::write(&p, "").unwrap();
        assert!(CsvTable::read(&p).is_err());
    }
}
