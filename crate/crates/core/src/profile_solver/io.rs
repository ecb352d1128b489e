//! Flat binary container for [`ProfileSet`]: magic, little-endian `u64`
//! header length, JSON header, then the stored profiles as little-endian
//! `f64` arrays in mode and component order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::profiles::ProfileSet;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"PULSEPRF";

pub fn write_profiles(set: &ProfileSet, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = serde_json::to_vec(set)?;
    w.write_all(MAGIC)?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    for m in &set.modes {
        for s in &m.sigma {
            for v in s {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_profiles(path: impl AsRef<Path>) -> Result<ProfileSet> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Contract("not a profile container".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let mut header = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut header)?;
    let mut set: ProfileSet = serde_json::from_slice(&header)?;
    let n = set.grid.len();
    let mut buf = vec![0u8; 8 * n];
    for m in &mut set.modes {
        if !m.incoming {
            continue;
        }
        m.sigma = (0..m.nu)
            .map(|_| {
                r.read_exact(&mut buf)?;
                Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
            })
            .collect::<Result<_>>()?;
    }
    Ok(set)
}
