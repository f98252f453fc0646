//! On-disk cache of time-marched reference fields, keyed by problem hash.
//!
//! Each entry is a pair `<stem>.json` (header) and `<stem>.csv` (one row per
//! node: `i, j, valid, u0..`), written through a temporary file and renamed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::march::{reference_time_march_euler, MarchOptions, MarchResult};
use crate::error::{Result, SolverError};
use crate::grid::{Field2D, Grid2D, SweepDir};
use crate::propagate::{csv_err, fmt_real};
use crate::systems::{ProblemInstance, State};

/// Directory override for the cache.
pub const CACHE_ENV: &str = "SWEEPCL_ORACLE_CACHE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheHeader {
    pub problem: String,
    pub hash: String,
    pub n: usize,
    pub cfl: f64,
    pub tol: f64,
    pub steps: usize,
    pub final_update: f64,
    pub components: usize,
}

pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("sweepcl-oracle-cache"))
}

fn stem(name: &str, hash: &str, n: usize, cfl: f64, tol: f64) -> String {
    format!("{name}-{hash}-n{n}-cfl{cfl}-tol{tol:e}")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn store<const M: usize>(dir: &Path, header: &CacheHeader, field: &Field2D<M>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let name = stem(&header.problem, &header.hash, header.n, header.cfl, header.tol);
    let mut w = csv::Writer::from_writer(Vec::new());
    let g = field.grid;
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let k = g.idx(i, j);
            let mut row = vec![i.to_string(), j.to_string(), (field.valid[k] as u8).to_string()];
            row.extend(field.values[k].iter().map(|c| fmt_real(*c)));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    let body = w.into_inner().map_err(|e| SolverError::Io(e.to_string()))?;
    write_atomic(&dir.join(format!("{name}.csv")), &body)?;
    let json = serde_json::to_vec_pretty(header).map_err(|e| SolverError::Io(e.to_string()))?;
    write_atomic(&dir.join(format!("{name}.json")), &json)
}

/// Reads an entry back; `None` when absent or written for different settings.
pub fn load<const M: usize>(
    dir: &Path,
    problem: &ProblemInstance,
    grid: Grid2D,
    opts: &MarchOptions,
) -> Result<Option<(CacheHeader, Field2D<M>)>> {
    let name = stem(&problem.name, &problem.hash_hex(), grid.nx, opts.cfl, opts.tol);
    let (hpath, cpath) = (dir.join(format!("{name}.json")), dir.join(format!("{name}.csv")));
    if !hpath.exists() || !cpath.exists() {
        return Ok(None);
    }
    let header: CacheHeader =
        serde_json::from_slice(&fs::read(&hpath)?).map_err(|e| SolverError::Io(e.to_string()))?;
    if header.hash != problem.hash_hex()
        || header.n != grid.nx
        || header.cfl != opts.cfl
        || header.tol != opts.tol
        || header.components != M
    {
        return Ok(None);
    }
    let mut field = Field2D::filled(grid, State::<M>::zeros(), SweepDir::Marched);
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_path(&cpath).map_err(csv_err)?;
    let mut count = 0;
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let parse = |s: &str| s.parse::<f64>().map_err(|e| SolverError::Io(format!("{}: {e}", cpath.display())));
        let i = parse(&rec[0])? as usize;
        let j = parse(&rec[1])? as usize;
        if rec.len() != 3 + M || i > grid.nx || j > grid.ny {
            return Err(SolverError::Io(format!("{}: malformed row", cpath.display())));
        }
        let k = grid.idx(i, j);
        field.valid[k] = &rec[2] == "1";
        for c in 0..M {
            field.values[k][c] = parse(&rec[3 + c])?;
        }
        count += 1;
    }
    if count != grid.len() {
        return Err(SolverError::Io(format!("{}: {count} rows, expected {}", cpath.display(), grid.len())));
    }
    Ok(Some((header, field)))
}

/// Euler reference field, computed once per problem and settings.
pub fn cached_reference_euler(problem: &ProblemInstance, n: usize, opts: &MarchOptions) -> Result<MarchResult<4>> {
    cached_reference_euler_in(&cache_dir(), problem, n, opts)
}

pub fn cached_reference_euler_in(
    dir: &Path,
    problem: &ProblemInstance,
    n: usize,
    opts: &MarchOptions,
) -> Result<MarchResult<4>> {
    let (x0, x1, y0, y1) = problem.rectangle()?;
    let grid = Grid2D::new(n, n, x0, x1, y0, y1);
    if let Some((h, field)) = load::<4>(dir, problem, grid, opts)? {
        return Ok(MarchResult {
            field,
            steps: h.steps,
            final_update: h.final_update,
        });
    }
    let r = reference_time_march_euler(problem, n, opts)?;
    let header = CacheHeader {
        problem: problem.name.clone(),
        hash: problem.hash_hex(),
        n,
        cfl: opts.cfl,
        tol: opts.tol,
        steps: r.steps,
        final_update: r.final_update,
        components: 4,
    };
    store(dir, &header, &r.field)?;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = ProblemInstance::named("oblique").unwrap();
        let opts = MarchOptions::default();
        let first = cached_reference_euler_in(dir.path(), &p, 12, &opts).unwrap();
        let second = cached_reference_euler_in(dir.path(), &p, 12, &opts).unwrap();
        assert_eq!(first.field.values, second.field.values);
        assert_eq!(first.field.valid, second.field.valid);
        assert_eq!(first.steps, second.steps);
        let other = MarchOptions { cfl: 0.4, ..opts };
        let (x0, x1, y0, y1) = p.rectangle().unwrap();
        assert!(load::<4>(dir.path(), &p, Grid2D::new(12, 12, x0, x1, y0, y1), &other)
            .unwrap()
            .is_none());
    }
}
