//! Versioned binary checkpoints: magic, version, JSON shape manifest, then
//! little-endian `f64` blocks for weights and both Adam moments.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::params::{Dims, GeneratorParams};
use crate::generator::seq2seq::{GeneratorConfig, Seq2Seq, Seq2SeqState};
use crate::optim::Adam;

const MAGIC: &[u8; 8] = b"PSGEN\0\0\x01";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    dims: Dims,
    tensors: Vec<(String, Vec<usize>)>,
    config: GeneratorConfig,
    seed: u64,
    calls: u64,
    adam_t: u64,
}

fn push_f64s(buf: &mut Vec<u8>, xs: &[f64]) {
    buf.reserve(xs.len() * 8);
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

fn read_f64s(bytes: &[u8], n: usize, at: &mut usize) -> Result<Vec<f64>> {
    let end = *at + n * 8;
    let chunk = bytes
        .get(*at..end)
        .ok_or_else(|| Error::Checkpoint("truncated tensor data".into()))?;
    *at = end;
    Ok(chunk
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn take<'a>(bytes: &'a [u8], n: usize, at: &mut usize) -> Result<&'a [u8]> {
    let s = bytes
        .get(*at..*at + n)
        .ok_or_else(|| Error::Checkpoint("truncated header".into()))?;
    *at += n;
    Ok(s)
}

impl Seq2Seq {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let st = &self.state;
        let dims = st.params.dims;
        let manifest = Manifest {
            dims,
            tensors: dims
                .tensors()
                .into_iter()
                .map(|(n, s)| (n.to_string(), s))
                .collect(),
            config: self.config,
            seed: st.seed,
            calls: st.calls,
            adam_t: st.adam.t,
        };
        let header = serde_json::to_vec(&manifest)?;
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
        buf.extend_from_slice(&header);
        push_f64s(&mut buf, &st.params.data);
        push_f64s(&mut buf, &st.adam.m);
        push_f64s(&mut buf, &st.adam.v);
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut at = 0;
        if take(bytes, MAGIC.len(), &mut at)? != MAGIC {
            return Err(Error::Checkpoint("not a generator checkpoint".into()));
        }
        let version = u32::from_le_bytes(take(bytes, 4, &mut at)?.try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let len = u64::from_le_bytes(take(bytes, 8, &mut at)?.try_into().expect("8 bytes")) as usize;
        let manifest: Manifest = serde_json::from_slice(take(bytes, len, &mut at)?)?;
        let expected: Vec<(String, Vec<usize>)> = manifest
            .dims
            .tensors()
            .into_iter()
            .map(|(n, s)| (n.to_string(), s))
            .collect();
        if manifest.tensors != expected
            || manifest.config.embed != manifest.dims.embed
            || manifest.config.hidden != manifest.dims.hidden
        {
            return Err(Error::Shape("checkpoint manifest inconsistent with its dims".into()));
        }
        let n = manifest.dims.n_params();
        let data = read_f64s(bytes, n, &mut at)?;
        let m = read_f64s(bytes, n, &mut at)?;
        let v = read_f64s(bytes, n, &mut at)?;
        if at != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        let mut adam = Adam::new(n);
        adam.t = manifest.adam_t;
        adam.m = m;
        adam.v = v;
        Ok(Seq2Seq::from_state(
            Seq2SeqState {
                params: GeneratorParams {
                    dims: manifest.dims,
                    data,
                },
                adam,
                seed: manifest.seed,
                calls: manifest.calls,
            },
            manifest.config,
        ))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    /// Loads a checkpoint, refusing one whose shapes differ from `expected`.
    pub fn load(path: impl AsRef<Path>, expected: Dims) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let gen = Self::from_bytes(&bytes)?;
        if gen.dims() != expected {
            return Err(Error::Shape(format!(
                "{}: checkpoint dims {:?} differ from expected {:?}",
                path.display(),
                gen.dims(),
                expected
            )));
        }
        Ok(gen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{GeneratorHandle, IdPair};

    #[test]
    fn roundtrip_is_exact() {
        let mut g = Seq2Seq::new(12, GeneratorConfig { embed: 4, hidden: 5, ..Default::default() }, 1);
        let pairs = [IdPair { src: vec![4, 5], tgt: vec![6] }];
        g.fine_tune(&pairs, 2, 0.01).unwrap();
        let back = Seq2Seq::from_bytes(&g.to_bytes().unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn refuses_mismatched_shapes() {
        let g = Seq2Seq::new(12, GeneratorConfig { embed: 4, hidden: 5, ..Default::default() }, 1);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.bin");
        g.save(&p).unwrap();
        assert!(Seq2Seq::load(&p, Dims::new(12, 4, 5)).is_ok());
        assert!(matches!(Seq2Seq::load(&p, Dims::new(13, 4, 5)), Err(Error::Shape(_))));
        let mut bytes = fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(Seq2Seq::from_bytes(&bytes).is_err());
        assert!(Seq2Seq::from_bytes(b"garbage!").is_err());
    }
}
