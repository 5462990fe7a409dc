//! The five variational state families and their parameter layouts.
//!
//! Every family maps a flat real parameter vector θ to a full 2^L complex
//! wavefunction (generally unnormalized) via [`forward`], and maps a
//! cotangent on that wavefunction back to θ via [`pullback`].
//!
//! Layout (version [`LAYOUT_VERSION`]), all tensors row-major:
//!
//! * MPS: site-major, `L` tensors `(left, right, phys)` of shape `(χ, χ, 2)`.
//! * PEPS: site-major in row-major site order, `L` tensors
//!   `(up, down, left, right, phys)` of shape `(χ, χ, χ, χ, 2)`.
//! * NQS: amplitude head then phase head; each head is `D` ResBlocks
//!   `[W1 (W×L), b1 (W), W2 (L×W), b2 (L)]` followed by `[w_out, b_out]`.
//! * VQE: block-major; each block is `[Rz angles (L), Ry angles (L), SWAP angles (|bonds|)]`.
//! * VEC: `(re, im)` pairs per basis state.

pub(crate) mod chain;
mod mps;
mod nqs;
mod peps;
mod vqe;

pub use vqe::vqe_bonds;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Lattice, LatticeKind, MAX_SITES};
use crate::numerics::C64;
use crate::rng;

pub const LAYOUT_VERSION: u32 = 1;

/// Standard deviation of the Gaussian parameter initialization.
pub const INIT_STD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Variant {
    Mps { chi: usize },
    Peps { chi: usize },
    Nqs { width: usize, depth: usize },
    Vqe { depth: usize },
    Vec,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Mps { .. } => "mps",
            Variant::Peps { .. } => "peps",
            Variant::Nqs { .. } => "nqs",
            Variant::Vqe { .. } => "vqe",
            Variant::Vec => "vec",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub variant: Variant,
    pub lattice: Lattice,
}

impl AnsatzSpec {
    pub fn new(variant: Variant, lattice: Lattice) -> Result<Self> {
        let spec = Self { variant, lattice };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sites(&self) -> usize {
        self.lattice.sites()
    }

    pub fn dim(&self) -> usize {
        1usize << self.sites()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites() > MAX_SITES {
            return Err(invalid(format!(
                "{} sites exceed the {MAX_SITES}-site limit of full-wavefunction ansatzes",
                self.sites()
            )));
        }
        if checked_param_count(self).is_none_or(|n| n > MAX_PARAMS) {
            return Err(invalid(format!("{:?} has more than {MAX_PARAMS} parameters", self.variant)));
        }
        match self.variant {
            Variant::Mps { chi } | Variant::Peps { chi } if chi < 1 => {
                Err(invalid("bond dimension must be at least 1"))
            }
            Variant::Peps { .. } if self.lattice.kind != LatticeKind::Square => {
                Err(invalid("PEPS needs a square lattice"))
            }
            Variant::Nqs { width, .. } if width < 1 => Err(invalid("NQS width must be at least 1")),
            Variant::Vqe { depth } if depth < 1 => Err(invalid("VQE depth must be at least 1")),
            Variant::Vqe { .. } if self.sites() % 2 != 0 => {
                Err(invalid("VQE needs an even number of sites for its singlet pairs"))
            }
            _ => Ok(()),
        }
    }
}

/// One named block of the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl LayoutEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn layout(spec: &AnsatzSpec) -> Vec<LayoutEntry> {
    let l = spec.sites();
    let mut entries = Vec::new();
    let mut offset = 0;
    let mut push = |name: String, shape: Vec<usize>| {
        let len: usize = shape.iter().product();
        entries.push(LayoutEntry { name, offset, shape });
        offset += len;
    };
    match spec.variant {
        Variant::Mps { chi } => {
            for j in 0..l {
                push(format!("A[{j}]"), vec![chi, chi, 2]);
            }
        }
        Variant::Peps { chi } => {
            for j in 0..l {
                push(format!("T[{j}]"), vec![chi, chi, chi, chi, 2]);
            }
        }
        Variant::Nqs { width, depth } => {
            for head in ["amp", "phase"] {
                for k in 0..depth {
                    push(format!("{head}.block[{k}].w1"), vec![width, l]);
                    push(format!("{head}.block[{k}].b1"), vec![width]);
                    push(format!("{head}.block[{k}].w2"), vec![l, width]);
                    push(format!("{head}.block[{k}].b2"), vec![l]);
                }
                push(format!("{head}.out"), vec![2]);
            }
        }
        Variant::Vqe { depth } => {
            let nb = vqe_bonds(&spec.lattice).len();
            for k in 0..depth {
                push(format!("block[{k}].rz"), vec![l]);
                push(format!("block[{k}].ry"), vec![l]);
                push(format!("block[{k}].swap"), vec![nb]);
            }
        }
        Variant::Vec => push("psi".into(), vec![1usize << l, 2]),
    }
    entries
}

/// Upper bound on the flat parameter vector length.
pub const MAX_PARAMS: usize = 1 << 30;

fn checked_param_count(spec: &AnsatzSpec) -> Option<usize> {
    let l = spec.sites();
    match spec.variant {
        Variant::Mps { chi } => chi.checked_mul(chi)?.checked_mul(2 * l),
        Variant::Peps { chi } => chi.checked_pow(4)?.checked_mul(2 * l),
        Variant::Nqs { width, depth } => {
            let block = width.checked_mul(2 * l)?.checked_add(width)?.checked_add(l)?;
            depth.checked_mul(block)?.checked_add(2)?.checked_mul(2)
        }
        Variant::Vqe { depth } => depth.checked_mul(2 * l + vqe_bonds(&spec.lattice).len()),
        Variant::Vec => (l + 1 < usize::BITS as usize).then(|| 2usize << l),
    }
}

pub fn param_count(spec: &AnsatzSpec) -> usize {
    let l = spec.sites();
    match spec.variant {
        Variant::Mps { chi } => 2 * l * chi * chi,
        Variant::Peps { chi } => 2 * l * chi.pow(4),
        Variant::Nqs { width, depth } => 2 * (depth * (2 * width * l + width + l) + 2),
        Variant::Vqe { depth } => depth * (2 * l + vqe_bonds(&spec.lattice).len()),
        Variant::Vec => 2 << l,
    }
}

/// Flat parameters together with the layout they follow.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub layout: Vec<LayoutEntry>,
}

impl ParamVector {
    pub fn new(spec: &AnsatzSpec, values: Vec<f64>) -> Result<Self> {
        check_len(spec, &values)?;
        Ok(Self {
            values,
            layout: layout(spec),
        })
    }

    pub fn entry(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .iter()
            .find(|e| e.name == name)
            .map(|e| &self.values[e.offset..e.offset + e.len()])
    }
}

impl std::ops::Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// i.i.d. N(0, 0.1²) parameters from the seeded init stream.
pub fn init_params(spec: &AnsatzSpec, seed: u64) -> Result<ParamVector> {
    spec.validate()?;
    let values = rng::normal_vec(seed, rng::DOMAIN_INIT, param_count(spec), INIT_STD);
    ParamVector::new(spec, values)
}

fn check_len(spec: &AnsatzSpec, theta: &[f64]) -> Result<()> {
    let expected = param_count(spec);
    if theta.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: theta.len(),
        });
    }
    Ok(())
}

pub fn forward(spec: &AnsatzSpec, theta: &[f64]) -> Result<Vec<C64>> {
    spec.validate()?;
    check_len(spec, theta)?;
    let psi = match spec.variant {
        Variant::Mps { chi } => mps::forward(spec.sites(), chi, theta),
        Variant::Peps { chi } => peps::forward(&spec.lattice, chi, theta)?,
        Variant::Nqs { width, depth } => nqs::forward(spec.sites(), width, depth, theta),
        Variant::Vqe { depth } => vqe::forward(&spec.lattice, depth, theta)?,
        Variant::Vec => forward_vec(theta),
    };
    crate::numerics::ensure_finite_complex(&psi, "ansatz output")?;
    Ok(psi)
}

/// Gradient of `L` with respect to θ given `cot[b] = ∂L/∂Re ψ_b + i ∂L/∂Im ψ_b`.
pub fn pullback(spec: &AnsatzSpec, theta: &[f64], cot: &[C64]) -> Result<Vec<f64>> {
    spec.validate()?;
    check_len(spec, theta)?;
    if cot.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: cot.len(),
        });
    }
    let grad = match spec.variant {
        Variant::Mps { chi } => mps::pullback(spec.sites(), chi, theta, cot),
        Variant::Peps { chi } => peps::pullback(&spec.lattice, chi, theta, cot)?,
        Variant::Nqs { width, depth } => nqs::pullback(spec.sites(), width, depth, theta, cot),
        Variant::Vqe { depth } => vqe::pullback(&spec.lattice, depth, theta, cot)?,
        Variant::Vec => cot.iter().flat_map(|g| [g.re, g.im]).collect(),
    };
    crate::error::ensure_finite(&grad, "ansatz gradient")?;
    Ok(grad)
}

fn forward_vec(theta: &[f64]) -> Vec<C64> {
    theta.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect()
}

pub fn forward_mps(spec: &AnsatzSpec, theta: &[f64]) -> Result<Vec<C64>> {
    expect_variant(spec, "mps")?;
    forward(spec, theta)
}

pub fn forward_peps(spec: &AnsatzSpec, theta: &[f64]) -> Result<Vec<C64>> {
    expect_variant(spec, "peps")?;
    forward(spec, theta)
}

pub fn forward_nqs(spec: &AnsatzSpec, theta: &[f64]) -> Result<Vec<C64>> {
    expect_variant(spec, "nqs")?;
    forward(spec, theta)
}

pub fn forward_vqe(spec: &AnsatzSpec, theta: &[f64]) -> Result<Vec<C64>> {
    expect_variant(spec, "vqe")?;
    forward(spec, theta)
}

pub fn forward_vec_state(spec: &AnsatzSpec, theta: &[f64]) -> Result<Vec<C64>> {
    expect_variant(spec, "vec")?;
    forward(spec, theta)
}

fn expect_variant(spec: &AnsatzSpec, name: &str) -> Result<()> {
    if spec.variant.name() == name {
        Ok(())
    } else {
        Err(invalid(format!("expected a {name} spec, got {}", spec.variant.name())))
    }
}
