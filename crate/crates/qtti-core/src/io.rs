//! Binary container for trains and operators, plus a raw dense-blob format.
//!
//! Layout (all integers little-endian u64 unless noted):
//!
//! ```text
//! magic   b"TTv1"
//! endian  u8 = 0x01 (little-endian payload)
//! mode    u8 = 0 (tensor) | 1 (operator)
//! d       u64
//! dims    tensor: d sizes; operator: d row sizes then d column sizes
//! ranks   d+1 bond ranks, boundaries included
//! cores   f64 entries, row-major per core, cores in chain order
//! ```

use crate::error::{Error, Result};
use crate::operator::TtOperator;
use crate::tt::TensorTrain;
use ndarray::{Array3, ArrayD, IxDyn};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"TTv1";
const ENDIAN_LE: u8 = 0x01;
const MODE_TENSOR: u8 = 0;
const MODE_OPERATOR: u8 = 1;

/// Sanity bound on deserialized sizes so a corrupt header cannot trigger an
/// enormous allocation.
const MAX_REASONABLE: u64 = 1 << 40;

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_u64_checked<R: Read>(r: &mut R, what: &str) -> Result<usize> {
    let v = read_u64(r)?;
    if v == 0 || v > MAX_REASONABLE {
        return Err(Error::format(format!("implausible {what}: {v}")));
    }
    Ok(v as usize)
}

fn write_f64s<W: Write>(w: &mut W, data: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(data.len() * 8);
    for &x in data {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn read_header<R: Read>(r: &mut R) -> Result<u8> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::format("bad magic; not a TTv1 file".to_string()));
    }
    let mut tag = [0u8; 2];
    r.read_exact(&mut tag)?;
    if tag[0] != ENDIAN_LE {
        return Err(Error::format(format!("unsupported endian tag {:#x}", tag[0])));
    }
    if tag[1] != MODE_TENSOR && tag[1] != MODE_OPERATOR {
        return Err(Error::format(format!("unknown mode byte {:#x}", tag[1])));
    }
    Ok(tag[1])
}

/// Serialize a train.
pub fn write_tensor<W: Write>(w: &mut W, tt: &TensorTrain) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[ENDIAN_LE, MODE_TENSOR])?;
    let dims = tt.dims();
    let ranks = tt.ranks();
    write_u64(w, dims.len() as u64)?;
    for &n in &dims {
        write_u64(w, n as u64)?;
    }
    for &r in &ranks {
        write_u64(w, r as u64)?;
    }
    for core in tt.cores() {
        write_f64s(w, core.as_slice().expect("cores are standard layout"))?;
    }
    Ok(())
}

/// Deserialize a train written by [`write_tensor`].
pub fn read_tensor<R: Read>(r: &mut R) -> Result<TensorTrain> {
    let mode = read_header(r)?;
    if mode != MODE_TENSOR {
        return Err(Error::format("expected a tensor file, found an operator".to_string()));
    }
    let d = read_u64_checked(r, "core count")?;
    if d > 4096 {
        return Err(Error::format(format!("implausible core count: {d}")));
    }
    let dims: Vec<usize> =
        (0..d).map(|_| read_u64_checked(r, "dimension")).collect::<Result<_>>()?;
    let ranks: Vec<usize> =
        (0..=d).map(|_| read_u64_checked(r, "rank")).collect::<Result<_>>()?;
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let len = ranks[k]
            .checked_mul(dims[k])
            .and_then(|v| v.checked_mul(ranks[k + 1]))
            .filter(|&v| v as u64 <= MAX_REASONABLE)
            .ok_or_else(|| Error::format("core size overflow".to_string()))?;
        let data = read_f64s(r, len)?;
        let core = Array3::from_shape_vec((ranks[k], dims[k], ranks[k + 1]), data)
            .map_err(|e| Error::format(e.to_string()))?;
        cores.push(core);
    }
    TensorTrain::new(cores)
}

/// Serialize an operator.
pub fn write_operator<W: Write>(w: &mut W, op: &TtOperator) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[ENDIAN_LE, MODE_OPERATOR])?;
    let rows = op.row_dims();
    let cols = op.col_dims();
    let ranks = op.ranks();
    write_u64(w, rows.len() as u64)?;
    for &n in &rows {
        write_u64(w, n as u64)?;
    }
    for &n in &cols {
        write_u64(w, n as u64)?;
    }
    for &r in &ranks {
        write_u64(w, r as u64)?;
    }
    for core in op.cores() {
        write_f64s(w, core.as_slice().expect("cores are standard layout"))?;
    }
    Ok(())
}

/// Deserialize an operator written by [`write_operator`].
pub fn read_operator<R: Read>(r: &mut R) -> Result<TtOperator> {
    let mode = read_header(r)?;
    if mode != MODE_OPERATOR {
        return Err(Error::format("expected an operator file, found a tensor".to_string()));
    }
    let d = read_u64_checked(r, "core count")?;
    if d > 4096 {
        return Err(Error::format(format!("implausible core count: {d}")));
    }
    let rows: Vec<usize> =
        (0..d).map(|_| read_u64_checked(r, "row dimension")).collect::<Result<_>>()?;
    let cols: Vec<usize> =
        (0..d).map(|_| read_u64_checked(r, "column dimension")).collect::<Result<_>>()?;
    let ranks: Vec<usize> =
        (0..=d).map(|_| read_u64_checked(r, "rank")).collect::<Result<_>>()?;
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let len = ranks[k]
            .checked_mul(rows[k])
            .and_then(|v| v.checked_mul(cols[k]))
            .and_then(|v| v.checked_mul(ranks[k + 1]))
            .filter(|&v| v as u64 <= MAX_REASONABLE)
            .ok_or_else(|| Error::format("core size overflow".to_string()))?;
        let data = read_f64s(r, len)?;
        let core =
            ndarray::Array4::from_shape_vec((ranks[k], rows[k], cols[k], ranks[k + 1]), data)
                .map_err(|e| Error::format(e.to_string()))?;
        cores.push(core);
    }
    TtOperator::new(cores)
}

pub fn save_tensor(path: &Path, tt: &TensorTrain) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_tensor(&mut f, tt)?;
    f.flush()?;
    Ok(())
}

pub fn load_tensor(path: &Path) -> Result<TensorTrain> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_tensor(&mut f)
}

pub fn save_operator(path: &Path, op: &TtOperator) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_operator(&mut f, op)?;
    f.flush()?;
    Ok(())
}

pub fn load_operator(path: &Path) -> Result<TtOperator> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_operator(&mut f)
}

/// Write a dense array as a one-line text header plus raw little-endian f64.
///
/// ```text
/// F64v1 dims=n1,n2,...\n
/// <payload>
/// ```
pub fn write_dense<W: Write>(w: &mut W, a: &ArrayD<f64>) -> Result<()> {
    let dims: Vec<String> = a.shape().iter().map(|n| n.to_string()).collect();
    writeln!(w, "F64v1 dims={}", dims.join(","))?;
    let data: Vec<f64> = a.iter().copied().collect();
    write_f64s(w, &data)?;
    Ok(())
}

/// Read an array written by [`write_dense`].
pub fn read_dense<R: Read>(r: &mut R) -> Result<ArrayD<f64>> {
    let mut header = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        if header.len() > 4096 {
            return Err(Error::format("unterminated dense header".to_string()));
        }
        header.push(byte[0]);
    }
    let header = String::from_utf8(header).map_err(|_| Error::format("non-utf8 header"))?;
    let rest = header
        .strip_prefix("F64v1 dims=")
        .ok_or_else(|| Error::format(format!("bad dense header: {header}")))?;
    let dims: Vec<usize> = rest
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| Error::format(format!("bad dim: {s}"))))
        .collect::<Result<_>>()?;
    let total: usize = dims.iter().try_fold(1usize, |a, &n| a.checked_mul(n)).ok_or_else(|| {
        Error::format("dense size overflow".to_string())
    })?;
    if total as u64 > MAX_REASONABLE {
        return Err(Error::format("implausible dense size".to_string()));
    }
    let data = read_f64s(r, total)?;
    ArrayD::from_shape_vec(IxDyn(&dims), data).map_err(|e| Error::format(e.to_string()))
}

pub fn save_dense(path: &Path, a: &ArrayD<f64>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dense(&mut f, a)?;
    f.flush()?;
    Ok(())
}

pub fn load_dense(path: &Path) -> Result<ArrayD<f64>> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_dense(&mut f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::Tolerance;
    use ndarray::ArrayD;

    #[test]
    fn tensor_roundtrip_is_bit_exact() {
        let a = ArrayD::from_shape_fn(IxDyn(&[2, 3, 2, 2]), |ix| {
            (ix[0] as f64 * 1.7 - ix[1] as f64 * 0.3).sin() + ix[2] as f64 * ix[3] as f64
        });
        let tt = TensorTrain::from_dense(a.view(), &Tolerance::exact()).unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &tt).unwrap();
        let back = read_tensor(&mut buf.as_slice()).unwrap();
        assert_eq!(tt.dims(), back.dims());
        assert_eq!(tt.ranks(), back.ranks());
        for (a, b) in tt.cores().iter().zip(back.cores()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let buf = b"XXXX\x01\x00\x02\x00\x00\x00\x00\x00\x00\x00".to_vec();
        match read_tensor(&mut buf.as_slice()) {
            Err(Error::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let a = ArrayD::from_shape_fn(IxDyn(&[2, 2]), |ix| (ix[0] + ix[1]) as f64);
        let tt = TensorTrain::from_dense(a.view(), &Tolerance::exact()).unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &tt).unwrap();
        buf.truncate(buf.len() - 5);
        assert!(read_tensor(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn implausible_rank_is_rejected() {
        // Hand-built header claiming a gigantic rank.
        let mut buf = Vec::new();
        buf.extend_from_slice(b"TTv1");
        buf.extend_from_slice(&[0x01, 0x00]);
        buf.extend_from_slice(&1u64.to_le_bytes()); // d = 1
        buf.extend_from_slice(&2u64.to_le_bytes()); // dim
        buf.extend_from_slice(&u64::MAX.to_le_bytes()); // rank 0
        buf.extend_from_slice(&1u64.to_le_bytes()); // rank 1
        match read_tensor(&mut buf.as_slice()) {
            Err(Error::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn operator_roundtrip() {
        let op = TtOperator::identity(&[2, 3, 2]);
        let mut buf = Vec::new();
        write_operator(&mut buf, &op).unwrap();
        let back = read_operator(&mut buf.as_slice()).unwrap();
        assert_eq!(op, back);
    }

    #[test]
    fn dense_blob_roundtrip() {
        let a = ArrayD::from_shape_fn(IxDyn(&[3, 4]), |ix| ix[0] as f64 - 2.5 * ix[1] as f64);
        let mut buf = Vec::new();
        write_dense(&mut buf, &a).unwrap();
        let back = read_dense(&mut buf.as_slice()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let op = TtOperator::identity(&[2]);
        let mut buf = Vec::new();
        write_operator(&mut buf, &op).unwrap();
        assert!(matches!(read_tensor(&mut buf.as_slice()), Err(Error::Format(_))));
    }
}
