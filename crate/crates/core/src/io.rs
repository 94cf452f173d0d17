//! Binary serialization.
//!
//! A tensor record is the magic `TNSR`, the mode count `D` and the `D` mode
//! sizes as little-endian `u64`, then the values as little-endian `f64` in
//! column-major order. A container is the magic `TNET`, a network tag and a
//! block count as `u64`, followed by that many tensor records.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::decomp::{CpDecomp, TtDecomp, TuckerDecomp};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::tensor::{DenseTensor, Shape};
use crate::tkrr::{DenseRidgeModel, FeatureFamily, FeatureMap, TkrrModel};
use crate::ttlayer::TtLayer;

const TENSOR_MAGIC: &[u8; 4] = b"TNSR";
const CONTAINER_MAGIC: &[u8; 4] = b"TNET";
const MAX_MODES: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Cp = 1,
    Tucker = 2,
    Tt = 3,
    TtLayer = 4,
    Tkrr = 5,
    DenseRidge = 6,
}

impl NetworkKind {
    fn from_tag(tag: u64) -> Result<Self> {
        Ok(match tag {
            1 => Self::Cp,
            2 => Self::Tucker,
            3 => Self::Tt,
            4 => Self::TtLayer,
            5 => Self::Tkrr,
            6 => Self::DenseRidge,
            _ => return Err(Error::Format(format!("unknown network tag {tag}"))),
        })
    }
}

/// Any object that fits in a container.
#[derive(Debug, Clone)]
pub enum Network<T> {
    Cp(CpDecomp<T>),
    Tucker(TuckerDecomp<T>),
    Tt(TtDecomp<T>),
    TtLayer(TtLayer<T>),
    Tkrr(TkrrModel<T>),
    DenseRidge(DenseRidgeModel<T>),
}

impl<T: Scalar> Network<T> {
    pub fn kind(&self) -> NetworkKind {
        match self {
            Self::Cp(_) => NetworkKind::Cp,
            Self::Tucker(_) => NetworkKind::Tucker,
            Self::Tt(_) => NetworkKind::Tt,
            Self::TtLayer(_) => NetworkKind::TtLayer,
            Self::Tkrr(_) => NetworkKind::Tkrr,
            Self::DenseRidge(_) => NetworkKind::DenseRidge,
        }
    }

    /// The dense tensor the network represents. Layers give their weight
    /// matrix, regression models their `I x ... x I` weight tensor.
    pub fn reconstruct(&self) -> Result<DenseTensor<T>> {
        match self {
            Self::Cp(c) => c.reconstruct(),
            Self::Tucker(t) => t.reconstruct(),
            Self::Tt(t) => t.reconstruct(),
            Self::TtLayer(l) => l.to_dense(),
            Self::Tkrr(m) => m.weights().reconstruct(),
            Self::DenseRidge(m) => {
                let fm = m.feature_map();
                DenseTensor::from_dims(&vec![fm.basis_count(); fm.dims()], m.weights().to_vec())
            }
        }
    }
}

pub fn write_tensor<T: Scalar, W: Write>(w: &mut W, t: &DenseTensor<T>) -> Result<()> {
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&(t.ndim() as u64).to_le_bytes())?;
    for &d in t.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in t.values() {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("unexpected end of data".into())
    } else {
        Error::Io(e)
    }
}

pub fn read_tensor<T: Scalar, R: Read>(r: &mut R) -> Result<DenseTensor<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != TENSOR_MAGIC {
        return Err(Error::Format("missing tensor magic".into()));
    }
    let d = read_u64(r)?;
    if d == 0 || d > MAX_MODES {
        return Err(Error::Format(format!("implausible mode count {d}")));
    }
    let dims = (0..d)
        .map(|_| read_u64(r).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let shape = Shape::new(dims).map_err(|e| Error::Format(e.to_string()))?;
    let mut bytes = vec![0u8; shape.numel() * 8];
    r.read_exact(&mut bytes).map_err(truncated)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
        .collect();
    DenseTensor::new(shape, data)
}

pub fn save_tensor<T: Scalar>(path: impl AsRef<Path>, t: &DenseTensor<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseTensor<T>> {
    read_tensor(&mut BufReader::new(File::open(path)?))
}

fn matrix_block<T: Scalar>(m: &Matrix<T>) -> Result<DenseTensor<T>> {
    DenseTensor::from_dims(&[m.rows(), m.cols()], m.values().to_vec())
}

fn block_matrix<T: Scalar>(t: DenseTensor<T>) -> Result<Matrix<T>> {
    if t.ndim() != 2 {
        return Err(Error::Format(format!("expected a matrix block, found {} modes", t.ndim())));
    }
    let (r, c) = (t.dims()[0], t.dims()[1]);
    Matrix::from_col_major(r, c, t.into_values())
}

fn vector_block<T: Scalar>(v: &[T]) -> Result<DenseTensor<T>> {
    if v.is_empty() {
        return Err(Error::Format("cannot store an empty block".into()));
    }
    DenseTensor::from_dims(&[v.len()], v.to_vec())
}

/// `[family, I, regularization, lo_1, hi_1, ..., lo_D, hi_D]`.
fn model_header<T: Scalar>(fm: &FeatureMap<T>, reg: T) -> Result<DenseTensor<T>> {
    let mut v = vec![
        T::lit(f64::from(fm.family().code())),
        T::of_usize(fm.basis_count()),
        reg,
    ];
    for &(lo, hi) in fm.bounds() {
        v.push(lo);
        v.push(hi);
    }
    vector_block(&v)
}

fn parse_model_header<T: Scalar>(t: &DenseTensor<T>) -> Result<(FeatureMap<T>, T)> {
    let v = t.values();
    if t.ndim() != 1 || v.len() < 5 || (v.len() - 3) % 2 != 0 {
        return Err(Error::Format("malformed feature-map block".into()));
    }
    let code = v[0].as_f64();
    let family = FeatureFamily::from_code(code as u8).map_err(|e| Error::Format(e.to_string()))?;
    let basis = v[1].as_f64() as usize;
    let bounds = v[3..].chunks_exact(2).map(|c| (c[0], c[1])).collect();
    let fm = FeatureMap::new(family, basis, bounds).map_err(|e| Error::Format(e.to_string()))?;
    Ok((fm, v[2]))
}

fn blocks<T: Scalar>(net: &Network<T>) -> Result<Vec<DenseTensor<T>>> {
    Ok(match net {
        Network::Cp(c) => {
            let mut b = vec![vector_block(c.weights())?];
            for f in c.factors() {
                b.push(matrix_block(f)?);
            }
            b
        }
        Network::Tucker(t) => {
            let mut b = vec![t.core().clone()];
            for f in t.factors() {
                b.push(matrix_block(f)?);
            }
            b
        }
        Network::Tt(t) => t.cores().to_vec(),
        Network::TtLayer(l) => l.cores().to_vec(),
        Network::Tkrr(m) => {
            let mut b = vec![model_header(m.feature_map(), m.regularization())?];
            b.push(vector_block(m.weights().weights())?);
            for f in m.weights().factors() {
                b.push(matrix_block(f)?);
            }
            b
        }
        Network::DenseRidge(m) => vec![
            model_header(m.feature_map(), m.regularization())?,
            vector_block(m.weights())?,
        ],
    })
}

pub fn write_network<T: Scalar, W: Write>(w: &mut W, net: &Network<T>) -> Result<()> {
    let blocks = blocks(net)?;
    w.write_all(CONTAINER_MAGIC)?;
    w.write_all(&(net.kind() as u64).to_le_bytes())?;
    w.write_all(&(blocks.len() as u64).to_le_bytes())?;
    for b in &blocks {
        write_tensor(w, b)?;
    }
    Ok(())
}

fn format_err(e: Error) -> Error {
    match e {
        Error::Io(_) | Error::Format(_) => e,
        other => Error::Format(other.to_string()),
    }
}

pub fn read_network<T: Scalar, R: Read>(r: &mut R) -> Result<Network<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != CONTAINER_MAGIC {
        return Err(Error::Format("missing container magic".into()));
    }
    let kind = NetworkKind::from_tag(read_u64(r)?)?;
    let count = read_u64(r)?;
    if count == 0 || count > MAX_MODES + 2 {
        return Err(Error::Format(format!("implausible block count {count}")));
    }
    let mut blocks = (0..count).map(|_| read_tensor(r)).collect::<Result<Vec<_>>>()?;
    let build = || -> Result<Network<T>> {
        Ok(match kind {
            NetworkKind::Cp => {
                let weights = blocks.remove(0).into_values();
                let factors = blocks.into_iter().map(block_matrix).collect::<Result<_>>()?;
                Network::Cp(CpDecomp::new(weights, factors)?)
            }
            NetworkKind::Tucker => {
                let core = blocks.remove(0);
                let factors = blocks.into_iter().map(block_matrix).collect::<Result<_>>()?;
                Network::Tucker(TuckerDecomp::new(core, factors)?)
            }
            NetworkKind::Tt => Network::Tt(TtDecomp::new(blocks)?),
            NetworkKind::TtLayer => Network::TtLayer(TtLayer::new(blocks)?),
            NetworkKind::Tkrr => {
                if blocks.len() < 3 {
                    return Err(Error::Format("model container needs header, weights and factors".into()));
                }
                let (fm, reg) = parse_model_header(&blocks.remove(0))?;
                let weights = blocks.remove(0).into_values();
                let factors = blocks.into_iter().map(block_matrix).collect::<Result<_>>()?;
                Network::Tkrr(TkrrModel::from_weights(CpDecomp::new(weights, factors)?, fm, reg)?)
            }
            NetworkKind::DenseRidge => {
                if blocks.len() != 2 {
                    return Err(Error::Format("dense model container needs two blocks".into()));
                }
                let (fm, reg) = parse_model_header(&blocks[0])?;
                let weights = blocks.pop().expect("two blocks").into_values();
                Network::DenseRidge(DenseRidgeModel::from_weights(weights, fm, reg)?)
            }
        })
    };
    build().map_err(format_err)
}

pub fn save_network<T: Scalar>(path: impl AsRef<Path>, net: &Network<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_network(&mut w, net)?;
    w.flush()?;
    Ok(())
}

pub fn load_network<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>> {
    read_network(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_bytes_layout() {
        let t = DenseTensor::from_dims(&[2, 1], vec![1.5f64, -2.0]).unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t).unwrap();
        assert_eq!(&buf[..4], b"TNSR");
        assert_eq!(u64::from_le_bytes(buf[4..12].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[12..20].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[20..28].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(buf[28..36].try_into().unwrap()), 1.5);
        assert_eq!(buf.len(), 44);
        let back: DenseTensor<f64> = read_tensor(&mut buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn truncated_tensor_is_format_error() {
        let t = DenseTensor::from_dims(&[3], vec![1.0f64, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_tensor::<f64, _>(&mut buf.as_slice()), Err(Error::Format(_))));
        assert!(matches!(read_tensor::<f64, _>(&mut &b"XXXX"[..]), Err(Error::Format(_))));
    }

    #[test]
    fn cp_container_round_trip() {
        let cp = CpDecomp::<f64>::random(&[3, 2, 4], 2, 5).unwrap();
        let mut buf = Vec::new();
        write_network(&mut buf, &Network::Cp(cp.clone())).unwrap();
        match read_network::<f64, _>(&mut buf.as_slice()).unwrap() {
            Network::Cp(back) => assert_eq!(back.factors(), cp.factors()),
            other => panic!("wrong kind {:?}", other.kind()),
        }
    }

    #[test]
    fn unknown_tag_rejected() {
        let mut buf = b"TNET".to_vec();
        buf.extend_from_slice(&99u64.to_le_bytes());
        buf.extend_from_slice(&1u64.to_le_bytes());
        assert!(matches!(read_network::<f64, _>(&mut buf.as_slice()), Err(Error::Format(_))));
    }
}
