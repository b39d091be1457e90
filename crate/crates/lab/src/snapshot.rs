//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic        8 bytes  "DOIFBP01" (the last two bytes are the version)
//! dim          u32
//! bc           u32      0 periodic, 1 dirichlet
//! cells        2 × u64  unused axis 0
//! lengths      2 × f64  unused axis 0
//! degree       u32      sphere truncation L
//! gamma        f64
//! mu, lambda, diffusion, rot_diffusion   4 × f64
//! t            f64
//! counts       4 × u64  lengths of the four arrays below
//! rho          f64 per cell
//! u            f64 per cell and axis, interleaved
//! eta          f64 per cell
//! f            f64 per cell and coefficient, cell-major
//! ```

use std::fs;
use std::path::Path;
use std::sync::Arc;

use doifbp_core::{
    Boundary, FluidState, Grid, OrientationField, PhysCoeffs, PressureLaw, ScalarField,
    SphereBasis, VectorField,
};

use crate::error::LabError;

pub const MAGIC: &[u8; 8] = b"DOIFBP01";

/// Encodes `state` in the snapshot layout.
pub fn encode(state: &FluidState) -> Vec<u8> {
    let grid = state.grid();
    let d = grid.dim();
    let mut out =
        Vec::with_capacity(160 + 8 * (state.rho.values().len() * (2 + d) + state.f.coeffs().len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(d as u32).to_le_bytes());
    let bc: u32 = match grid.bc() {
        Boundary::Periodic => 0,
        Boundary::Dirichlet => 1,
    };
    out.extend_from_slice(&bc.to_le_bytes());
    for a in 0..2 {
        let n = grid.cells().get(a).copied().unwrap_or(0) as u64;
        out.extend_from_slice(&n.to_le_bytes());
    }
    for a in 0..2 {
        let l = grid.lengths().get(a).copied().unwrap_or(0.0);
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.extend_from_slice(&(state.f.basis().degree() as u32).to_le_bytes());
    let c = state.coeffs;
    for x in [
        state.law.gamma(),
        c.mu,
        c.lambda,
        c.diffusion,
        c.rot_diffusion,
        state.t,
    ] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let arrays: [&[f64]; 4] = [
        state.rho.values(),
        state.u.values(),
        state.eta.values(),
        state.f.coeffs(),
    ];
    for a in arrays {
        out.extend_from_slice(&(a.len() as u64).to_le_bytes());
    }
    for a in arrays {
        for x in a {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn snapshot(state: &FluidState, path: &Path) -> Result<(), LabError> {
    fs::write(path, encode(state)).map_err(|e| LabError::io(path, e))
}

pub fn load_snapshot(path: &Path) -> Result<FluidState, LabError> {
    let bytes = fs::read(path).map_err(|e| LabError::io(path, e))?;
    decode(&bytes).map_err(|message| LabError::Format {
        path: path.to_path_buf(),
        message,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, section: &str) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(format!(
                "truncated snapshot: {section} section is incomplete"
            )),
        }
    }

    fn u32(&mut self, section: &str) -> Result<u32, String> {
        Ok(u32::from_le_bytes(
            self.take(4, section)?.try_into().unwrap(),
        ))
    }

    fn u64(&mut self, section: &str) -> Result<u64, String> {
        Ok(u64::from_le_bytes(
            self.take(8, section)?.try_into().unwrap(),
        ))
    }

    fn f64(&mut self, section: &str) -> Result<f64, String> {
        Ok(f64::from_le_bytes(
            self.take(8, section)?.try_into().unwrap(),
        ))
    }

    fn array(&mut self, n: usize, section: &str) -> Result<Vec<f64>, String> {
        let raw = self.take(n.checked_mul(8).ok_or("array length overflows")?, section)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Decodes a snapshot; errors are human-readable.
pub fn decode(bytes: &[u8]) -> Result<FluidState, String> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(8, "magic")?;
    if &magic[..6] != b"DOIFBP" {
        return Err("not a snapshot file (bad magic)".into());
    }
    if magic != MAGIC {
        return Err(format!(
            "unsupported snapshot version {}",
            String::from_utf8_lossy(&magic[6..])
        ));
    }
    let h = "header";
    let dim = cur.u32(h)? as usize;
    let bc = match cur.u32(h)? {
        0 => Boundary::Periodic,
        1 => Boundary::Dirichlet,
        other => {
            return Err(format!(
                "inconsistent header: unknown boundary code {other}"
            ))
        }
    };
    let cells = [cur.u64(h)? as usize, cur.u64(h)? as usize];
    let lengths = [cur.f64(h)?, cur.f64(h)?];
    let degree = cur.u32(h)? as usize;
    let gamma = cur.f64(h)?;
    let coeffs = PhysCoeffs {
        mu: cur.f64(h)?,
        lambda: cur.f64(h)?,
        diffusion: cur.f64(h)?,
        rot_diffusion: cur.f64(h)?,
    };
    let t = cur.f64(h)?;
    let counts = [cur.u64(h)?, cur.u64(h)?, cur.u64(h)?, cur.u64(h)?];

    if !(dim == 1 || dim == 2) {
        return Err(format!("inconsistent header: dimension {dim}"));
    }
    let grid = Grid::new(&cells[..dim], &lengths[..dim], bc)
        .map_err(|e| format!("inconsistent header: {e}"))?;
    let basis = SphereBasis::new(degree).map_err(|e| format!("inconsistent header: {e}"))?;
    let n = grid.len() as u64;
    let expected = [n, n * dim as u64, n, n * basis.n_coeffs() as u64];
    if counts != expected {
        return Err(format!(
            "inconsistent header: array lengths {counts:?} do not match the grid ({expected:?})"
        ));
    }
    let rho = cur.array(counts[0] as usize, "rho")?;
    let u = cur.array(counts[1] as usize, "u")?;
    let eta = cur.array(counts[2] as usize, "eta")?;
    let f = cur.array(counts[3] as usize, "f")?;
    if cur.pos != bytes.len() {
        return Err(format!(
            "{} trailing bytes after the f section",
            bytes.len() - cur.pos
        ));
    }

    let law = PressureLaw::new(gamma).map_err(|e| format!("inconsistent header: {e}"))?;
    let shape = |e: doifbp_core::Error| format!("inconsistent data: {e}");
    FluidState::new(
        ScalarField::new(grid, rho).map_err(shape)?,
        VectorField::new(grid, u).map_err(shape)?,
        ScalarField::new(grid, eta).map_err(shape)?,
        OrientationField::new(grid, Arc::new(basis), f).map_err(shape)?,
        t,
        law,
        coeffs,
    )
    .map_err(shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use doifbp_core::presets;

    fn sample() -> FluidState {
        let grid = Grid::rect(6, 5, 1.0, 0.7, Boundary::Dirichlet).unwrap();
        let mut s = presets::smooth(
            grid,
            Arc::new(SphereBasis::new(3).unwrap()),
            PressureLaw::new(7.5).unwrap(),
            PhysCoeffs::new(0.3, 0.2, 1.5, 0.8).unwrap(),
        )
        .unwrap();
        s.t = 0.123_456_789;
        s
    }

    fn bits(v: &[f64]) -> Vec<u64> {
        v.iter().map(|x| x.to_bits()).collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let back = decode(&encode(&s)).unwrap();
        assert_eq!(bits(back.rho.values()), bits(s.rho.values()));
        assert_eq!(bits(back.u.values()), bits(s.u.values()));
        assert_eq!(bits(back.eta.values()), bits(s.eta.values()));
        assert_eq!(bits(back.f.coeffs()), bits(s.f.coeffs()));
        assert_eq!(back.t.to_bits(), s.t.to_bits());
        assert_eq!(back.law, s.law);
        assert_eq!(back.coeffs, s.coeffs);
        assert_eq!(back.grid(), s.grid());
    }

    #[test]
    fn truncation_names_the_section() {
        let bytes = encode(&sample());
        let header_end = 8 + 4 + 4 + 16 + 16 + 4 + 48 + 32;
        let n = 30;
        let cases = [
            (4, "magic"),
            (20, "header"),
            (header_end + 8, "rho"),
            (header_end + 8 * n + 8, "u"),
            (header_end + 8 * (3 * n) + 8, "eta"),
            (bytes.len() - 1, "f"),
        ];
        for (len, section) in cases {
            let e = decode(&bytes[..len]).unwrap_err();
            assert!(e.contains(&format!("{section} section")), "{len}: {e}");
        }
    }

    #[test]
    fn magic_and_version_are_checked() {
        let mut bytes = encode(&sample());
        bytes[7] = b'2';
        assert!(decode(&bytes).unwrap_err().contains("version 02"));
        bytes[0] = b'X';
        assert!(decode(&bytes).unwrap_err().contains("bad magic"));
    }

    #[test]
    fn inconsistent_header_is_rejected() {
        let mut bytes = encode(&sample());
        // claim 7 cells along x
        bytes[16..24].copy_from_slice(&7u64.to_le_bytes());
        assert!(decode(&bytes).unwrap_err().contains("inconsistent header"));

        let mut bytes = encode(&sample());
        bytes[8..12].copy_from_slice(&3u32.to_le_bytes());
        assert!(decode(&bytes).unwrap_err().contains("dimension 3"));

        let mut bytes = encode(&sample());
        bytes.push(0);
        assert!(decode(&bytes).unwrap_err().contains("trailing"));
    }
}
