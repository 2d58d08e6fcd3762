//! Binary container for tensor-network objects.
//!
//! Layout (all integers little-endian u32, floats little-endian f64):
//!
//! ```text
//! magic "QTN1" | kind u8 (1 = MPS, 2 = MPO) | n_sites u32
//! per site: rank u32 | extents u32 x rank | (re, im) f64 pairs, row-major
//! ```

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{QpdeError, Result};
use crate::mpo::Mpo;
use crate::mps::Mps;
use crate::tensor::DenseTensor;

type C64 = Complex64;

const MAGIC: &[u8; 4] = b"QTN1";

fn write_tensor<W: Write>(t: &DenseTensor, w: &mut W) -> Result<()> {
    w.write_all(&(t.rank() as u32).to_le_bytes())?;
    for &e in t.shape() {
        w.write_all(&(e as u32).to_le_bytes())?;
    }
    for v in t.data() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_tensor<R: BufRead>(r: &mut R) -> Result<DenseTensor> {
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let rank = u32::from_le_bytes(b4) as usize;
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        r.read_exact(&mut b4)?;
        shape.push(u32::from_le_bytes(b4) as usize);
    }
    let len: usize = shape.iter().product();
    let mut data = Vec::with_capacity(len);
    let mut b8 = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        data.push(C64::new(re, im));
    }
    DenseTensor::from_data(&shape, data)
}

fn write_header<W: Write>(kind: u8, n: usize, w: &mut W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[kind])?;
    w.write_all(&(n as u32).to_le_bytes())?;
    Ok(())
}

fn read_header<R: BufRead>(expect_kind: u8, r: &mut R) -> Result<usize> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(QpdeError::ShapeMismatch("bad container magic".into()));
    }
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    if kind[0] != expect_kind {
        return Err(QpdeError::ShapeMismatch(format!(
            "container kind {} where {} expected",
            kind[0], expect_kind
        )));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    Ok(u32::from_le_bytes(b4) as usize)
}

pub fn save_mps<W: Write>(m: &Mps, mut w: W) -> Result<()> {
    write_header(1, m.len(), &mut w)?;
    for s in m.sites() {
        write_tensor(s, &mut w)?;
    }
    Ok(())
}

pub fn load_mps<R: BufRead>(mut r: R) -> Result<Mps> {
    let n = read_header(1, &mut r)?;
    let sites = (0..n).map(|_| read_tensor(&mut r)).collect::<Result<Vec<_>>>()?;
    Mps::from_sites(sites)
}

pub fn save_mpo<W: Write>(m: &Mpo, mut w: W) -> Result<()> {
    write_header(2, m.len(), &mut w)?;
    for s in m.sites() {
        write_tensor(s, &mut w)?;
    }
    Ok(())
}

pub fn load_mpo<R: BufRead>(mut r: R) -> Result<Mpo> {
    let n = read_header(2, &mut r)?;
    let sites = (0..n).map(|_| read_tensor(&mut r)).collect::<Result<Vec<_>>>()?;
    Mpo::from_sites(sites)
}
