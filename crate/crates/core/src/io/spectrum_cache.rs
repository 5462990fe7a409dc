use serde::{Deserialize, Serialize};

use super::{put_f64s, put_json, seal, sha256_hex, unseal, Reader};
use crate::error::Result;
use crate::model::{EigenBlock, Lattice, Spectrum, XxzParams, MAX_SITES};
use crate::numerics::{SparseRealMatrix, SymEig};

const MAGIC: &[u8; 8] = b"EFTSPEC\0";
pub const SPECTRUM_FORMAT_VERSION: u32 = 1;
pub const BIT_CONVENTION: &str = "site k = bit k of the basis index; bit 0 = spin up (Z = +1)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumHeader {
    pub format_version: u32,
    pub lattice: Lattice,
    pub params: XxzParams,
    pub sectored: bool,
    pub bit_convention: String,
    pub hamiltonian_sha256: String,
}

impl SpectrumHeader {
    pub fn new(lattice: &Lattice, params: &XxzParams, sectored: bool, h: &SparseRealMatrix) -> Self {
        Self {
            format_version: SPECTRUM_FORMAT_VERSION,
            lattice: lattice.clone(),
            params: params.clone(),
            sectored,
            bit_convention: BIT_CONVENTION.into(),
            hamiltonian_sha256: hamiltonian_hash(h),
        }
    }
}

/// Content key of a spectrum: model, geometry, blocking mode and format version.
pub fn spectrum_cache_key(lattice: &Lattice, params: &XxzParams, sectored: bool) -> String {
    let canonical = serde_json::json!({
        "format_version": SPECTRUM_FORMAT_VERSION,
        "lattice": lattice,
        "params": params,
        "sectored": sectored,
    });
    sha256_hex(canonical.to_string().as_bytes())
}

/// SHA-256 over the CSR entries `(row, col, value)` in row order.
pub fn hamiltonian_hash(h: &SparseRealMatrix) -> String {
    let mut bytes = Vec::with_capacity(h.nnz() * 24 + 8);
    bytes.extend_from_slice(&(h.dim() as u64).to_le_bytes());
    for r in 0..h.dim() {
        for (c, v) in h.row(r) {
            bytes.extend_from_slice(&(r as u64).to_le_bytes());
            bytes.extend_from_slice(&(c as u64).to_le_bytes());
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    sha256_hex(&bytes)
}

/// Layout after the header: block count, then per block
/// `[has_m u8, m i32, n u32, indices n×u32, values n×f64, vectors n²×f64]`,
/// then `2^L` sector labels as i32.
pub fn encode_spectrum(header: &SpectrumHeader, spectrum: &Spectrum) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    put_json(&mut out, header);
    out.extend_from_slice(&(spectrum.blocks().len() as u32).to_le_bytes());
    for b in spectrum.blocks() {
        out.push(b.m.is_some() as u8);
        out.extend_from_slice(&b.m.unwrap_or(0).to_le_bytes());
        out.extend_from_slice(&(b.indices.len() as u32).to_le_bytes());
        for &i in &b.indices {
            out.extend_from_slice(&(i as u32).to_le_bytes());
        }
        put_f64s(&mut out, &b.eig.values);
        put_f64s(&mut out, &b.eig.vectors);
    }
    for &m in spectrum.sector_labels() {
        out.extend_from_slice(&m.to_le_bytes());
    }
    seal(out)
}

pub fn decode_spectrum(bytes: &[u8]) -> Result<(SpectrumHeader, Spectrum)> {
    let body = unseal(bytes, MAGIC, "spectrum cache")?;
    let mut r = Reader::new(body, "spectrum cache");
    let header: SpectrumHeader = r.json()?;
    if header.format_version != SPECTRUM_FORMAT_VERSION {
        return Err(r.err(format!("unsupported format version {}", header.format_version)));
    }
    if header.bit_convention != BIT_CONVENTION {
        return Err(r.err("foreign bit convention"));
    }
    let sites = header.lattice.sites();
    if sites > MAX_SITES {
        return Err(r.err(format!("{sites} sites exceed the {MAX_SITES}-site limit")));
    }
    let dim = 1usize << sites;
    let count = r.u32()? as usize;
    if count > dim {
        return Err(r.err("more blocks than basis states"));
    }
    let mut seen = vec![false; dim];
    let mut blocks = Vec::with_capacity(count);
    for _ in 0..count {
        let has_m = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(r.err("bad sector flag")),
        };
        let m = r.i32()?;
        let n = r.u32()? as usize;
        if n == 0 || n > dim {
            return Err(r.err("bad block size"));
        }
        let indices: Vec<usize> = r.u32s(n)?.into_iter().map(|i| i as usize).collect();
        for &i in &indices {
            if i >= dim || std::mem::replace(&mut seen[i], true) {
                return Err(r.err("block indices out of range or repeated"));
            }
        }
        let values = r.f64s(n)?;
        // Checked before the n² allocation.
        if n.checked_mul(n).and_then(|nn| nn.checked_mul(8)).is_none_or(|b| b > r.remaining()) {
            return Err(r.err("truncated eigenvectors"));
        }
        let vectors = r.f64s(n * n)?;
        blocks.push(EigenBlock {
            m: has_m.then_some(m),
            indices,
            eig: SymEig { n, values, vectors },
        });
    }
    let labels = r.i32s(dim)?;
    r.finish()?;
    let spectrum = Spectrum::from_blocks(sites, blocks, Some(labels))?;
    Ok((header, spectrum))
}
