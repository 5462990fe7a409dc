use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Chain,
    Square,
}

/// Nearest-neighbour geometry. Sites are 0-based internally; site `k` is
/// encoded by bit `k` of a basis index. Square lattices number sites
/// row-major: `site = row * lx + col`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LatticeDesc", into = "LatticeDesc")]
pub struct Lattice {
    pub kind: LatticeKind,
    pub lx: usize,
    pub ly: usize,
    pub pbc: bool,
    bonds: Vec<(usize, usize)>,
}

/// Serialized form; bonds are always rebuilt from the geometry.
#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeDesc {
    kind: LatticeKind,
    lx: usize,
    ly: usize,
    pbc: bool,
}

impl TryFrom<LatticeDesc> for Lattice {
    type Error = crate::Error;
    fn try_from(d: LatticeDesc) -> Result<Self> {
        Lattice::build(d.kind, d.lx, d.ly, d.pbc)
    }
}

impl From<Lattice> for LatticeDesc {
    fn from(l: Lattice) -> Self {
        Self {
            kind: l.kind,
            lx: l.lx,
            ly: l.ly,
            pbc: l.pbc,
        }
    }
}

impl Lattice {
    pub fn chain(len: usize, pbc: bool) -> Result<Self> {
        Self::build(LatticeKind::Chain, len, 1, pbc)
    }

    pub fn square(lx: usize, ly: usize, pbc: bool) -> Result<Self> {
        Self::build(LatticeKind::Square, lx, ly, pbc)
    }

    pub fn build(kind: LatticeKind, lx: usize, ly: usize, pbc: bool) -> Result<Self> {
        // Site k is bit k of a basis index.
        if lx.checked_mul(ly).is_none_or(|n| n >= usize::BITS as usize) {
            return Err(invalid(format!("{lx}x{ly} sites do not fit a basis index")));
        }
        let mut raw = Vec::new();
        match kind {
            LatticeKind::Chain => {
                if ly != 1 {
                    return Err(invalid("chains have ly = 1"));
                }
                if lx < 2 {
                    return Err(invalid("a lattice needs at least 2 sites"));
                }
                if pbc && lx == 2 {
                    return Err(invalid(
                        "periodic chain of 2 sites would duplicate its only bond",
                    ));
                }
                for i in 0..lx {
                    if i + 1 < lx {
                        raw.push((i, i + 1));
                    } else if pbc {
                        raw.push((i, 0));
                    }
                }
            }
            LatticeKind::Square => {
                if lx < 2 || ly < 2 {
                    return Err(invalid("square lattices need lx >= 2 and ly >= 2"));
                }
                let site = |r: usize, c: usize| r * lx + c;
                for r in 0..ly {
                    for c in 0..lx {
                        if c + 1 < lx {
                            raw.push((site(r, c), site(r, c + 1)));
                        } else if pbc {
                            raw.push((site(r, c), site(r, 0)));
                        }
                    }
                }
                for r in 0..ly {
                    for c in 0..lx {
                        if r + 1 < ly {
                            raw.push((site(r, c), site(r + 1, c)));
                        } else if pbc {
                            raw.push((site(r, c), site(0, c)));
                        }
                    }
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        let bonds = raw
            .into_iter()
            .filter(|&(a, b)| seen.insert((a.min(b), a.max(b))))
            .collect();
        Ok(Self {
            kind,
            lx,
            ly,
            pbc,
            bonds,
        })
    }

    pub fn sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    /// Stable textual identity used in cache keys and manifests.
    pub fn descriptor(&self) -> String {
        let kind = match self.kind {
            LatticeKind::Chain => "chain",
            LatticeKind::Square => "square",
        };
        format!("{kind}:{}x{}:{}", self.lx, self.ly, if self.pbc { "pbc" } else { "obc" })
    }
}
