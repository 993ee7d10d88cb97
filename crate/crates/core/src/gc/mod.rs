//! Boolean circuits of XOR and AND gates, their cleartext simulation, and
//! free-XOR / point-and-permute garbling.

mod blocks;
mod garble;

pub use blocks::{
    audit_counts, build_block, build_max, build_mgc, build_nss, decode_index, mgc_cs_inputs,
    mgc_ps_inputs, BlockCounts, BlockKind, BlockRecord, BlockRecordKind, MaxVariant, Mgc,
};
pub use garble::{evaluate, garble, GarbledCircuit, InputLabels, Label, ROW_HASH};

use thiserror::Error;

pub type WireId = u32;
/// A little-endian bit bus.
pub type Bus = Vec<WireId>;

/// Wire carrying constant 0.
pub const ZERO: WireId = 0;
/// Wire carrying constant 1.
pub const ONE: WireId = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GcError {
    #[error("invalid circuit parameter: {0}")]
    Domain(String),
    #[error("evaluation integrity failure: {0}")]
    Integrity(String),
    #[error("wrong number of inputs: expected {expected}, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("malformed garbled circuit: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    Xor,
    And,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub a: WireId,
    pub b: WireId,
    pub out: WireId,
}

/// A topologically ordered circuit. Wires 0 and 1 are the constants; every
/// other wire is either an input or the output of exactly one gate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub num_wires: u32,
    pub gates: Vec<Gate>,
    /// Evaluator (PS) inputs, delivered by OT.
    pub ps_inputs: Vec<WireId>,
    /// Garbler (CS) inputs, delivered as active labels.
    pub cs_inputs: Vec<WireId>,
    pub outputs: Vec<WireId>,
}

impl Circuit {
    /// `(xor, and)` gate totals by traversal.
    pub fn gate_counts(&self) -> (u64, u64) {
        self.gates.iter().fold((0, 0), |(x, a), g| match g.kind {
            GateKind::Xor => (x + 1, a),
            GateKind::And => (x, a + 1),
        })
    }

    /// Cleartext gate-by-gate evaluation.
    pub fn simulate(&self, ps: &[bool], cs: &[bool]) -> Result<Vec<bool>, GcError> {
        if ps.len() != self.ps_inputs.len() {
            return Err(GcError::InputLength {
                expected: self.ps_inputs.len(),
                got: ps.len(),
            });
        }
        if cs.len() != self.cs_inputs.len() {
            return Err(GcError::InputLength {
                expected: self.cs_inputs.len(),
                got: cs.len(),
            });
        }
        let mut v = vec![false; self.num_wires as usize];
        v[ONE as usize] = true;
        for (&w, &b) in self
            .ps_inputs
            .iter()
            .zip(ps)
            .chain(self.cs_inputs.iter().zip(cs))
        {
            v[w as usize] = b;
        }
        for g in &self.gates {
            let (a, b) = (v[g.a as usize], v[g.b as usize]);
            v[g.out as usize] = match g.kind {
                GateKind::Xor => a ^ b,
                GateKind::And => a & b,
            };
        }
        Ok(self.outputs.iter().map(|&w| v[w as usize]).collect())
    }

    /// Checks that every gate reads only already-driven wires and that each
    /// wire is driven once.
    pub fn validate(&self) -> Result<(), GcError> {
        let mut driven = vec![false; self.num_wires as usize];
        driven[ZERO as usize] = true;
        driven[ONE as usize] = true;
        fn drive(driven: &mut [bool], w: WireId) -> Result<(), GcError> {
            let slot = driven
                .get_mut(w as usize)
                .ok_or_else(|| GcError::Malformed(format!("wire {w} out of range")))?;
            if *slot {
                return Err(GcError::Malformed(format!("wire {w} driven twice")));
            }
            *slot = true;
            Ok(())
        }
        let is_driven = |d: &[bool], w: WireId| d.get(w as usize).copied().unwrap_or(false);
        for &w in self.ps_inputs.iter().chain(&self.cs_inputs) {
            drive(&mut driven, w)?;
        }
        for g in &self.gates {
            for w in [g.a, g.b] {
                if !is_driven(&driven, w) {
                    return Err(GcError::Malformed(format!("gate reads undriven wire {w}")));
                }
            }
            drive(&mut driven, g.out)?;
        }
        for &w in &self.outputs {
            if !is_driven(&driven, w) {
                return Err(GcError::Malformed(format!("output wire {w} undriven")));
            }
        }
        Ok(())
    }
}

/// Incremental circuit construction.
#[derive(Debug)]
pub struct Builder {
    num_wires: u32,
    gates: Vec<Gate>,
    ps_inputs: Vec<WireId>,
    cs_inputs: Vec<WireId>,
    xor_count: u64,
    and_count: u64,
}

impl Default for Builder {
    fn default() -> Self {
        Self::new()
    }
}

impl Builder {
    pub fn new() -> Self {
        Self {
            num_wires: 2,
            gates: Vec::new(),
            ps_inputs: Vec::new(),
            cs_inputs: Vec::new(),
            xor_count: 0,
            and_count: 0,
        }
    }

    fn fresh(&mut self) -> WireId {
        let w = self.num_wires;
        self.num_wires += 1;
        w
    }

    pub fn ps_input(&mut self, width: usize) -> Bus {
        let bus: Bus = (0..width).map(|_| self.fresh()).collect();
        self.ps_inputs.extend(&bus);
        bus
    }

    pub fn cs_input(&mut self, width: usize) -> Bus {
        let bus: Bus = (0..width).map(|_| self.fresh()).collect();
        self.cs_inputs.extend(&bus);
        bus
    }

    /// Constant bus holding `value` in `width` bits.
    pub fn constant(&self, value: u64, width: usize) -> Bus {
        (0..width)
            .map(|i| {
                if i < 64 && value >> i & 1 == 1 {
                    ONE
                } else {
                    ZERO
                }
            })
            .collect()
    }

    pub fn xor(&mut self, a: WireId, b: WireId) -> WireId {
        let out = self.fresh();
        self.gates.push(Gate {
            kind: GateKind::Xor,
            a,
            b,
            out,
        });
        self.xor_count += 1;
        out
    }

    pub fn and(&mut self, a: WireId, b: WireId) -> WireId {
        let out = self.fresh();
        self.gates.push(Gate {
            kind: GateKind::And,
            a,
            b,
            out,
        });
        self.and_count += 1;
        out
    }

    /// `(xor, and)` emitted so far.
    pub fn counts(&self) -> (u64, u64) {
        (self.xor_count, self.and_count)
    }

    pub fn finish(self, outputs: Vec<WireId>) -> Circuit {
        Circuit {
            num_wires: self.num_wires,
            gates: self.gates,
            ps_inputs: self.ps_inputs,
            cs_inputs: self.cs_inputs,
            outputs,
        }
    }
}

/// Little-endian bits of `v`.
pub fn to_bits(v: u64, width: usize) -> Vec<bool> {
    (0..width).map(|i| i < 64 && v >> i & 1 == 1).collect()
}

pub fn from_bits(bits: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .filter(|(i, &b)| b && *i < 64)
        .fold(0, |acc, (i, _)| acc | 1 << i)
}
