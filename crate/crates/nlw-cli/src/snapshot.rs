//! Bit-exact binary state snapshots.
//!
//! Layout: magic `NLWS`, version (u32 LE), dim (u8), n_modes (u32 LE),
//! time (f64 LE), then u and u_t coefficients, each N^d f64 LE in
//! row-major multi-index order.

use nlw_core::spectral::{Grid, GridError, SpectralField, State};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"NLWS";
pub const VERSION: u32 = 1;

// the binary only writes snapshots; the reader exists for tooling and tests
#[cfg_attr(not(test), allow(dead_code))]
#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("truncated snapshot: {0} bytes")]
    Truncated(usize),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    BadVersion(u32),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub fn encode(state: &State, time: f64) -> Vec<u8> {
    let grid = state.u.grid();
    let n = grid.coeff_len();
    let mut out = Vec::with_capacity(21 + 16 * n);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(grid.dim() as u8);
    out.extend_from_slice(&(grid.n_modes() as u32).to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for &c in state.u.coeff() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    for &c in state.ut.coeff() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

#[cfg_attr(not(test), allow(dead_code))]
pub fn decode(bytes: &[u8]) -> Result<(State, f64), SnapshotError> {
    let need = |n: usize| {
        if bytes.len() < n {
            Err(SnapshotError::Truncated(bytes.len()))
        } else {
            Ok(())
        }
    };
    need(21)?;
    if bytes[..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(SnapshotError::BadVersion(version));
    }
    let dim = bytes[8] as usize;
    let n_modes = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let time = f64::from_le_bytes(bytes[13..21].try_into().unwrap());
    let grid = Grid::with_default_quad(dim, n_modes)?;
    let n = grid.coeff_len();
    need(21 + 16 * n)?;
    let read = |offset: usize| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let at = offset + 8 * i;
                f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
            })
            .collect()
    };
    let state = State {
        u: SpectralField::from_coeff(&grid, read(21)),
        ut: SpectralField::from_coeff(&grid, read(21 + 8 * n)),
    };
    Ok((state, time))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = Grid::with_default_quad(2, 3).unwrap();
        let state = State {
            u: SpectralField::from_coeff(&grid, (0..9).map(|i| 0.1 * i as f64).collect()),
            ut: SpectralField::from_coeff(&grid, (0..9).map(|i| -1.5 + i as f64).collect()),
        };
        let bytes = encode(&state, 2.75);
        assert_eq!(bytes.len(), 21 + 16 * 9);
        assert_eq!(&bytes[..4], b"NLWS");
        let (back, time) = decode(&bytes).unwrap();
        assert_eq!(time, 2.75);
        assert_eq!(back.u.coeff(), state.u.coeff());
        assert_eq!(back.ut.coeff(), state.ut.coeff());
        assert_eq!(back.u.grid().dim(), 2);
    }

    #[test]
    fn corrupt_headers_are_rejected() {
        let grid = Grid::with_default_quad(1, 2).unwrap();
        let bytes = encode(&State::zeros(&grid), 0.0);
        assert!(matches!(decode(&bytes[..10]), Err(SnapshotError::Truncated(10))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(SnapshotError::BadMagic)));
        let mut newer = bytes;
        newer[4] = 9;
        assert!(matches!(decode(&newer), Err(SnapshotError::BadVersion(9))));
    }
}
