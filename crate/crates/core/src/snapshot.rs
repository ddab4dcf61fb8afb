//! Binary trajectory files.
//!
//! Layout, all fields 8-byte little-endian:
//!
//! ```text
//! "SCATLAB1"  N:u64  L:f64  count:u64
//! alpha delta beta nu epsilon:f64  n:u64  dt:f64  order:u64
//! count × { t:f64  u:(re,im)×N  v:(re,im)×N }
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Result, ScatterError};
use crate::solver::{PairState, SolverMeta, Trajectory};
use crate::spectral::{AnalysisParams, ComplexField, Grid1D};

pub const MAGIC: &[u8; 8] = b"SCATLAB1";

pub fn write_trajectory<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(traj.grid.len() as u64).to_le_bytes())?;
    out.write_all(&traj.grid.length().to_le_bytes())?;
    out.write_all(&(traj.snapshots.len() as u64).to_le_bytes())?;
    let p = &traj.params;
    for x in [p.alpha(), p.delta(), p.beta(), p.nu(), p.epsilon()] {
        out.write_all(&x.to_le_bytes())?;
    }
    out.write_all(&u64::from(p.n()).to_le_bytes())?;
    out.write_all(&traj.meta.dt.to_le_bytes())?;
    out.write_all(&u64::from(traj.meta.order).to_le_bytes())?;
    for s in &traj.snapshots {
        out.write_all(&s.t.to_le_bytes())?;
        for field in [&s.u, &s.v] {
            for z in field.samples() {
                out.write_all(&z.re.to_le_bytes())?;
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_samples<R: Read>(r: &mut R, n: usize) -> Result<Vec<Complex64>> {
    let mut buf = vec![0u8; 16 * n];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

pub fn read_trajectory<R: Read>(mut input: R) -> Result<Trajectory> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ScatterError::Format("bad magic".into()));
    }
    let n = usize::try_from(read_u64(&mut input)?)
        .map_err(|_| ScatterError::Format("grid size overflows".into()))?;
    let length = read_f64(&mut input)?;
    let grid = Grid1D::new(length, n)?;
    let count = read_u64(&mut input)?;
    let alpha = read_f64(&mut input)?;
    let delta = read_f64(&mut input)?;
    let beta = read_f64(&mut input)?;
    let nu = read_f64(&mut input)?;
    let epsilon = read_f64(&mut input)?;
    let order_n = u32::try_from(read_u64(&mut input)?)
        .map_err(|_| ScatterError::Format("weight order overflows".into()))?;
    let params = AnalysisParams::new(alpha, delta, beta, order_n, epsilon)?;
    if params.nu().to_bits() != nu.to_bits() {
        return Err(ScatterError::Format(format!(
            "stored nu {nu} disagrees with 1/4 - delta + 4 alpha = {}",
            params.nu()
        )));
    }
    let dt = read_f64(&mut input)?;
    let order = u32::try_from(read_u64(&mut input)?)
        .map_err(|_| ScatterError::Format("scheme order overflows".into()))?;
    let mut snapshots = Vec::new();
    for _ in 0..count {
        let t = read_f64(&mut input)?;
        let u = ComplexField::physical(&grid, read_samples(&mut input, n)?)?;
        let v = ComplexField::physical(&grid, read_samples(&mut input, n)?)?;
        snapshots.push(PairState { u, v, t });
    }
    crate::spectral::check_times(snapshots.iter().map(|s| s.t))?;
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(ScatterError::Format(
            "trailing bytes after last snapshot".into(),
        ));
    }
    Ok(Trajectory {
        grid,
        params,
        snapshots,
        meta: SolverMeta { dt, order },
    })
}

pub fn save_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    write_trajectory(traj, BufWriter::new(File::create(path)?))
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    read_trajectory(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{evolve, initial_state, InitialData};

    fn sample() -> Trajectory {
        let g = Grid1D::new(120.0, 256).unwrap();
        let s = initial_state(
            &g,
            &InitialData::gaussian(0.2, 2.0),
            &InitialData::modulated(0.1, 2.0, 0.3),
        );
        evolve(&s, AnalysisParams::default(), 2.0, 0.1, &[1.5]).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let traj = sample();
        let mut buf = Vec::new();
        write_trajectory(&traj, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 * 4 + 8 * 8 + 3 * (8 + 2 * 16 * 256));
        let back = read_trajectory(buf.as_slice()).unwrap();
        assert_eq!(back.grid, traj.grid);
        assert_eq!(back.params, traj.params);
        assert_eq!(back.meta, traj.meta);
        assert_eq!(back.snapshots, traj.snapshots);
    }

    #[test]
    fn header_layout() {
        let traj = sample();
        let mut buf = Vec::new();
        write_trajectory(&traj, &mut buf).unwrap();
        assert_eq!(&buf[..8], b"SCATLAB1");
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 256);
        assert_eq!(f64::from_le_bytes(buf[16..24].try_into().unwrap()), 120.0);
        assert_eq!(u64::from_le_bytes(buf[24..32].try_into().unwrap()), 3);
    }

    #[test]
    fn rejects_corruption() {
        let traj = sample();
        let mut buf = Vec::new();
        write_trajectory(&traj, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_trajectory(bad.as_slice()),
            Err(ScatterError::Format(_))
        ));
        assert!(read_trajectory(&buf[..buf.len() - 1]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_trajectory(long.as_slice()).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.bin");
        let traj = sample();
        save_trajectory(&traj, &path).unwrap();
        assert_eq!(load_trajectory(&path).unwrap().snapshots, traj.snapshots);
    }
}
