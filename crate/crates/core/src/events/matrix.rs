//! Bit-packed membership matrix file format.
//!
//! Layout: magic `EVFM`, u32 LE event count, u32 LE grid size, then one row per
//! event of `⌈grid/64⌉` u64 LE words (bit `j` of the row is grid point `j`).

use std::io::{Read, Write};

use super::{EventFamily, Membership};
use crate::error::{Error, Result};

pub const MATRIX_MAGIC: &[u8; 4] = b"EVFM";

pub fn write_membership_matrix<W: Write>(family: &EventFamily, mut out: W) -> Result<()> {
    let events = u32::try_from(family.len()).map_err(|_| Error::invalid("too many events for the matrix format"))?;
    let grid = u32::try_from(family.grid.len()).map_err(|_| Error::invalid("grid too large for the matrix format"))?;
    out.write_all(MATRIX_MAGIC)?;
    out.write_all(&events.to_le_bytes())?;
    out.write_all(&grid.to_le_bytes())?;
    for e in &family.events {
        for w in e.membership.words() {
            out.write_all(&w.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Returns the grid size and one membership row per event.
pub fn read_membership_matrix<R: Read>(mut input: R) -> Result<(usize, Vec<Membership>)> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::invalid("not a membership matrix (bad magic)"));
    }
    let mut b4 = [0u8; 4];
    input.read_exact(&mut b4)?;
    let events = u32::from_le_bytes(b4) as usize;
    input.read_exact(&mut b4)?;
    let grid = u32::from_le_bytes(b4) as usize;
    let words = grid.div_ceil(64);
    let mut rows = Vec::with_capacity(events);
    let mut b8 = [0u8; 8];
    for _ in 0..events {
        let mut row = Vec::with_capacity(words);
        for _ in 0..words {
            input.read_exact(&mut b8)?;
            row.push(u64::from_le_bytes(b8));
        }
        rows.push(Membership::from_words(grid, row)?);
    }
    Ok((grid, rows))
}
