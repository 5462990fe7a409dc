//! Binary persistence: the spectrum cache and parameter/wavefunction checkpoints.
//!
//! Both formats are little-endian, start with an 8-byte magic, carry a JSON
//! header and end with the SHA-256 of everything before it.

mod checkpoint;
mod spectrum_cache;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, Checkpoint, CheckpointHeader, CheckpointKind};
pub use spectrum_cache::{
    decode_spectrum, encode_spectrum, hamiltonian_hash, spectrum_cache_key, SpectrumHeader, BIT_CONVENTION,
    SPECTRUM_FORMAT_VERSION,
};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

const TRAILER: usize = 32;
/// JSON headers larger than this are rejected unread.
const MAX_HEADER: usize = 1 << 20;

pub(crate) fn seal(mut bytes: Vec<u8>) -> Vec<u8> {
    let digest = Sha256::digest(&bytes);
    bytes.extend_from_slice(&digest);
    bytes
}

/// Checks magic and trailing digest; returns the bytes in between.
pub(crate) fn unseal<'a>(bytes: &'a [u8], magic: &[u8; 8], what: &'static str) -> Result<&'a [u8]> {
    let fmt = |reason: &str| Error::Format {
        what,
        reason: reason.into(),
    };
    if bytes.len() < magic.len() + TRAILER {
        return Err(fmt("truncated"));
    }
    if &bytes[..8] != magic {
        return Err(fmt("bad magic"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - TRAILER);
    if Sha256::digest(body).as_slice() != digest {
        return Err(fmt("checksum mismatch"));
    }
    Ok(&body[8..])
}

/// Bounds-checked little-endian reader.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    what: &'static str,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8], what: &'static str) -> Self {
        Self { buf, what }
    }

    pub(crate) fn err(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            what: self.what,
            reason: reason.into(),
        }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len()
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.buf.len() {
            return Err(self.err(format!("needs {n} more bytes, {} left", self.buf.len())));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    /// `n` values of `width` bytes each, checked against the remaining length first.
    fn array(&mut self, n: usize, width: usize) -> Result<&'a [u8]> {
        let bytes = n.checked_mul(width).ok_or_else(|| self.err("length overflow"))?;
        self.take(bytes)
    }

    pub(crate) fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.array(n, 8)?;
        let out: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(self.err("non-finite value"));
        }
        Ok(out)
    }

    pub(crate) fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        let raw = self.array(n, 4)?;
        Ok(raw.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub(crate) fn i32s(&mut self, n: usize) -> Result<Vec<i32>> {
        let raw = self.array(n, 4)?;
        Ok(raw.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub(crate) fn json<T: serde::de::DeserializeOwned>(&mut self) -> Result<T> {
        let len = self.u32()? as usize;
        if len > MAX_HEADER {
            return Err(self.err("header too large"));
        }
        let raw = self.take(len)?;
        serde_json::from_slice(raw).map_err(|e| self.err(format!("header: {e}")))
    }

    pub(crate) fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(self.err(format!("{} trailing bytes", self.buf.len())))
        }
    }
}

pub(crate) fn put_json<T: serde::Serialize>(out: &mut Vec<u8>, value: &T) {
    let raw = serde_json::to_vec(value).expect("headers serialize");
    out.extend_from_slice(&(raw.len() as u32).to_le_bytes());
    out.extend_from_slice(&raw);
}

pub(crate) fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}
