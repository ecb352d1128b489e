//! Binary container for [`FineSolution`]: magic, little-endian `u64` header
//! length, JSON header, then each stored level as little-endian `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::FineGrid;
use super::solve::{FineSolution, SolveStats};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"PULSEFSL";

#[derive(Serialize, Deserialize)]
struct Header {
    eps: f64,
    grid: FineGrid,
    n: usize,
    steps: Vec<usize>,
    times: Vec<f64>,
    stats: SolveStats,
}

pub fn write_solution(sol: &FineSolution, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = serde_json::to_vec(&Header {
        eps: sol.eps,
        grid: sol.grid,
        n: sol.n,
        steps: sol.steps.clone(),
        times: sol.times.clone(),
        stats: sol.stats,
    })?;
    w.write_all(MAGIC)?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    for level in &sol.levels {
        for v in level {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<FineSolution> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Contract("not a reference solution container".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let mut header = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut header)?;
    let h: Header = serde_json::from_slice(&header)?;
    let mut buf = vec![0u8; 8 * h.n * h.grid.nx];
    let levels = (0..h.times.len())
        .map(|_| {
            r.read_exact(&mut buf)?;
            Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(FineSolution { eps: h.eps, grid: h.grid, n: h.n, steps: h.steps, times: h.times, levels, stats: h.stats })
}
