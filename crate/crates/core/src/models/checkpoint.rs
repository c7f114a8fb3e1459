//! Binary checkpoint container, all integers and floats little-endian:
//!
//! ```text
//! magic "OVCKPT\0\0" | version u32 | epoch u64
//! config: len u64, JSON bytes
//! params: count u64, then per tensor: name (len u32, UTF-8), rank u32,
//!         dims u64 × rank, values f64 × numel
//! optimizer: flag u8; if 1: step u64, count u64, then per tensor
//!            m (len u64, f64 × len) and v (len u64, f64 × len)
//! ```

use std::fs;
use std::path::Path;

use orthoview_nn::optim::AdamState;

use super::{Model, ModelConfig};
use crate::error::{io_err, Error, Result};
use crate::geometry::write_atomic;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"OVCKPT\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: Model,
    /// Epochs trained when the snapshot was taken.
    pub epoch: u64,
    pub adam: Option<AdamState>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    put_u64(&mut out, ck.epoch);
    let cfg = serde_json::to_vec(ck.model.config())?;
    put_u64(&mut out, cfg.len() as u64);
    out.extend_from_slice(&cfg);
    put_u64(&mut out, ck.model.store.len() as u64);
    for (_, p) in ck.model.store.iter() {
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.extend_from_slice(&(p.value.ndim() as u32).to_le_bytes());
        for &d in p.value.shape() {
            put_u64(&mut out, d as u64);
        }
        put_f64s(&mut out, p.value.data());
    }
    match &ck.adam {
        None => out.push(0),
        Some(st) => {
            out.push(1);
            put_u64(&mut out, st.step);
            put_u64(&mut out, st.m.len() as u64);
            for (m, v) in st.m.iter().zip(&st.v) {
                put_u64(&mut out, m.len() as u64);
                put_f64s(&mut out, m);
                put_u64(&mut out, v.len() as u64);
                put_f64s(&mut out, v);
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| bad("truncated file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap_or_default()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap_or_default()))
    }

    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        usize::try_from(n)
            .ok()
            .filter(|&n| n <= self.buf.len())
            .ok_or_else(|| bad("length out of range"))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| bad("length out of range"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap_or_default()))
            .collect())
    }
}

/// Parses a checkpoint. With `expected`, the stored config must match it.
pub fn decode_checkpoint(buf: &[u8], expected: Option<&ModelConfig>) -> Result<Checkpoint> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint (bad magic)"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let epoch = r.u64()?;
    let n = r.len()?;
    let config: ModelConfig = serde_json::from_slice(r.take(n)?)?;
    if let Some(want) = expected {
        if *want != config {
            return Err(bad("model config does not match the checkpoint"));
        }
    }
    let mut model = Model::new(&config, 0)?;
    let count = r.len()?;
    if count != model.store.len() {
        return Err(bad(format!("expected {} tensors, found {count}", model.store.len())));
    }
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| bad("tensor name is not UTF-8"))?
            .to_owned();
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.len()).collect::<Result<Vec<_>>>()?;
        let id = model.store.id(&name).map_err(|_| bad(format!("unknown tensor {name}")))?;
        let p = model.store.get_mut(id);
        if p.value.shape() != shape.as_slice() {
            return Err(bad(format!(
                "tensor {name} has shape {shape:?}, model expects {:?}",
                p.value.shape()
            )));
        }
        let data = r.f64s(p.value.numel())?;
        p.value.data_mut().copy_from_slice(&data);
    }
    let adam = match r.take(1)?[0] {
        0 => None,
        1 => {
            let step = r.u64()?;
            let k = r.len()?;
            let mut m = Vec::with_capacity(k);
            let mut v = Vec::with_capacity(k);
            for _ in 0..k {
                let a = r.len()?;
                m.push(r.f64s(a)?);
                let b = r.len()?;
                v.push(r.f64s(b)?);
            }
            Some(AdamState { step, m, v })
        }
        f => return Err(bad(format!("bad optimizer flag {f}"))),
    };
    if r.pos != buf.len() {
        return Err(bad("trailing bytes"));
    }
    Ok(Checkpoint { model, epoch, adam })
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    write_atomic(path, &encode_checkpoint(ck)?)
}

pub fn load_checkpoint(path: &Path, expected: Option<&ModelConfig>) -> Result<Checkpoint> {
    let buf = fs::read(path).map_err(io_err(path))?;
    decode_checkpoint(&buf, expected)
}
