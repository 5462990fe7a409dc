use serde::{Deserialize, Serialize};

use super::{put_f64s, put_json, seal, unseal, Reader};
use crate::ansatz::{param_count, AnsatzSpec, LAYOUT_VERSION};
use crate::error::{invalid, Result};
use crate::model::MAX_SITES;
use crate::numerics::C64;

const MAGIC: &[u8; 8] = b"EFTCKPT\0";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointKind {
    /// Flat ansatz parameters.
    Params,
    /// Interleaved `(re, im)` amplitudes.
    Wavefunction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub kind: CheckpointKind,
    pub spec: Option<AnsatzSpec>,
    pub layout_version: u32,
    pub seed: Option<u64>,
    pub step: Option<u64>,
    /// Imaginary time of an ITES target.
    pub beta: Option<f64>,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub data: Vec<f64>,
}

impl Checkpoint {
    pub fn params(spec: &AnsatzSpec, theta: &[f64], seed: u64, step: u64) -> Result<Self> {
        if theta.len() != param_count(spec) {
            return Err(invalid("parameter vector does not match its spec"));
        }
        Ok(Self {
            header: CheckpointHeader {
                kind: CheckpointKind::Params,
                spec: Some(spec.clone()),
                layout_version: LAYOUT_VERSION,
                seed: Some(seed),
                step: Some(step),
                beta: None,
                len: theta.len(),
            },
            data: theta.to_vec(),
        })
    }

    pub fn wavefunction(psi: &[C64], beta: Option<f64>) -> Self {
        let data: Vec<f64> = psi.iter().flat_map(|z| [z.re, z.im]).collect();
        Self {
            header: CheckpointHeader {
                kind: CheckpointKind::Wavefunction,
                spec: None,
                layout_version: LAYOUT_VERSION,
                seed: None,
                step: None,
                beta,
                len: data.len(),
            },
            data,
        }
    }

    pub fn amplitudes(&self) -> Option<Vec<C64>> {
        (self.header.kind == CheckpointKind::Wavefunction)
            .then(|| self.data.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect())
    }
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    put_json(&mut out, &ckpt.header);
    put_f64s(&mut out, &ckpt.data);
    seal(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let body = unseal(bytes, MAGIC, "checkpoint")?;
    let mut r = Reader::new(body, "checkpoint");
    let header: CheckpointHeader = r.json()?;
    if header.layout_version != LAYOUT_VERSION {
        return Err(r.err(format!("layout version {} is not {LAYOUT_VERSION}", header.layout_version)));
    }
    match (header.kind, &header.spec) {
        (CheckpointKind::Params, Some(spec)) => {
            spec.validate().map_err(|e| r.err(e.to_string()))?;
            if param_count(spec) != header.len {
                return Err(r.err("length disagrees with the ansatz spec"));
            }
        }
        (CheckpointKind::Params, None) => return Err(r.err("parameter checkpoint without a spec")),
        (CheckpointKind::Wavefunction, _) => {
            let dim = header.len / 2;
            if header.len % 2 != 0 || !dim.is_power_of_two() || dim.trailing_zeros() as usize > MAX_SITES {
                return Err(r.err("wavefunction length is not 2·2^L"));
            }
        }
    }
    let data = r.f64s(header.len)?;
    r.finish()?;
    Ok(Checkpoint { header, data })
}
