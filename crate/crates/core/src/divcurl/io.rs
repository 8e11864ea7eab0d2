//! Binary layout, all little-endian:
//!
//! ```text
//! "SMFDCV01"            8-byte magic
//! u8                    domain (0 periodic, 1 line)
//! f64                   half-width (0 when periodic)
//! u64 u64               n_t, n_x
//! f64                   horizon T
//! 6 × n_t·n_x f64       f11, f12, f21, f22, G1, G2, each t-major
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{BalanceSystem, Domain};
use crate::error::{Result, SmfError};

pub const MAGIC: &[u8; 8] = b"SMFDCV01";

/// Refuse headers claiming more values than this per field.
const MAX_VALUES: u64 = 1 << 28;

pub fn write_system<W: Write>(sys: &BalanceSystem, mut w: W) -> Result<()> {
    sys.check_shape()?;
    w.write_all(MAGIC)?;
    let (kind, half) = match sys.domain {
        Domain::Periodic => (0u8, 0.0),
        Domain::Line { half_width } => (1u8, half_width),
    };
    w.write_u8(kind)?;
    w.write_f64::<LittleEndian>(half)?;
    w.write_u64::<LittleEndian>(sys.n_t as u64)?;
    w.write_u64::<LittleEndian>(sys.n_x as u64)?;
    w.write_f64::<LittleEndian>(sys.horizon)?;
    for field in sys.arrays() {
        for v in field {
            w.write_f64::<LittleEndian>(*v)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn format_err(e: std::io::Error) -> SmfError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        SmfError::Format("truncated file".into())
    } else {
        e.into()
    }
}

pub fn read_system<R: Read>(mut r: R) -> Result<BalanceSystem> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(format_err)?;
    if &magic != MAGIC {
        return Err(SmfError::Format("bad magic header".into()));
    }
    let kind = r.read_u8().map_err(format_err)?;
    let half = r.read_f64::<LittleEndian>().map_err(format_err)?;
    let domain = match kind {
        0 => Domain::Periodic,
        1 => Domain::Line { half_width: half },
        k => return Err(SmfError::Format(format!("unknown domain tag {k}"))),
    };
    let n_t = r.read_u64::<LittleEndian>().map_err(format_err)?;
    let n_x = r.read_u64::<LittleEndian>().map_err(format_err)?;
    let horizon = r.read_f64::<LittleEndian>().map_err(format_err)?;
    let len = n_t.checked_mul(n_x).filter(|l| *l <= MAX_VALUES).ok_or_else(|| SmfError::Format("field size overflow".into()))?;
    let mut sys = BalanceSystem::zeros(domain, 0, 0, horizon);
    (sys.n_t, sys.n_x) = (n_t as usize, n_x as usize);
    for field in [&mut sys.f11, &mut sys.f12, &mut sys.f21, &mut sys.f22, &mut sys.g1, &mut sys.g2] {
        // Grow as data arrives so a lying header cannot force a huge allocation.
        let mut left = len as usize;
        while left > 0 {
            let mut chunk = vec![0.0; left.min(1 << 16)];
            r.read_f64_into::<LittleEndian>(&mut chunk).map_err(format_err)?;
            field.extend_from_slice(&chunk);
            left -= chunk.len();
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(SmfError::Format("trailing bytes after the last field".into()));
    }
    sys.check_shape().map_err(|e| SmfError::Format(e.to_string()))?;
    Ok(sys)
}
