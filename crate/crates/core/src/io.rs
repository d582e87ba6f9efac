//! Binary instance container and CSV dumps.
//!
//! Layout (little endian): the 8-byte magic `WGMINST1`, `n: u64`, `ρ: f64`,
//! `seed: u64`, the strict lower triangle of `A` then of `B` (row-major,
//! `i > j`, `f64`), then `π*` as `n` values of `u64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{CorrelatedInstance, Permutation};

pub const MAGIC: &[u8; 8] = b"WGMINST1";

fn write_lower(w: &mut impl Write, m: &DMatrix<f64>) -> std::io::Result<()> {
    for i in 1..m.nrows() {
        for j in 0..i {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn read_lower(r: &mut impl Read, n: usize) -> std::io::Result<DMatrix<f64>> {
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        for j in 0..i {
            let x = read_f64(r)?;
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    Ok(m)
}

pub fn write_instance(w: &mut impl Write, inst: &CorrelatedInstance) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(inst.n as u64).to_le_bytes())?;
    w.write_all(&inst.rho.to_le_bytes())?;
    w.write_all(&inst.rng_seed.to_le_bytes())?;
    write_lower(w, &inst.a)?;
    write_lower(w, &inst.b)?;
    for &p in inst.pi_star.as_slice() {
        w.write_all(&(p as u64).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_instance(r: &mut impl Read) -> Result<CorrelatedInstance> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parameter("not an instance file (bad magic)".into()));
    }
    let n = read_u64(r)? as usize;
    if !(2..=1 << 20).contains(&n) {
        return Err(Error::Parameter(format!("implausible instance size {n}")));
    }
    let rho = read_f64(r)?;
    let rng_seed = read_u64(r)?;
    let a = read_lower(r, n)?;
    let b = read_lower(r, n)?;
    let mut pi = Vec::with_capacity(n);
    for _ in 0..n {
        pi.push(read_u64(r)? as usize);
    }
    Ok(CorrelatedInstance {
        n,
        rho,
        a,
        b,
        pi_star: Permutation::from_vec(pi)?,
        rng_seed,
    })
}

pub fn save_instance(path: &Path, inst: &CorrelatedInstance) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_instance(&mut w, inst)?;
    w.flush()?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<CorrelatedInstance> {
    read_instance(&mut BufReader::new(File::open(path)?))
}

/// One row per matrix row, comma separated, full precision.
pub fn write_matrix_csv(w: &mut impl Write, m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// `vertex,image` lines for a permutation.
pub fn write_permutation_csv(w: &mut impl Write, pi: &Permutation) -> Result<()> {
    writeln!(w, "vertex,image")?;
    for (u, &v) in pi.as_slice().iter().enumerate() {
        writeln!(w, "{u},{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate, PiMode};

    #[test]
    fn roundtrip_is_bit_exact() {
        let inst = generate(17, 0.6, PiMode::UniformRandom, 4).unwrap();
        let mut buf = Vec::new();
        write_instance(&mut buf, &inst).unwrap();
        assert_eq!(buf.len(), 8 * 4 + 2 * 8 * (17 * 16 / 2) + 8 * 17);
        let back = read_instance(&mut buf.as_slice()).unwrap();
        assert_eq!(back.a, inst.a);
        assert_eq!(back.b, inst.b);
        assert_eq!(back.pi_star, inst.pi_star);
        assert_eq!(back.rho.to_bits(), inst.rho.to_bits());
        assert_eq!(back.rng_seed, inst.rng_seed);
    }

    #[test]
    fn bad_magic_and_truncation() {
        assert!(read_instance(&mut &b"NOTMAGIC........"[..]).is_err());
        let inst = generate(5, 0.6, PiMode::Identity, 4).unwrap();
        let mut buf = Vec::new();
        write_instance(&mut buf, &inst).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_instance(&mut buf.as_slice()), Err(Error::Io(_))));
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -2.0, 0.0])).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1.0,0.5\n-2.0,0.0\n");
        let mut buf = Vec::new();
        write_permutation_csv(&mut buf, &Permutation::from_vec(vec![1, 0]).unwrap()).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "vertex,image\n0,1\n1,0\n");
    }
}
