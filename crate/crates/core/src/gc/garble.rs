//! Free-XOR garbling with 4-row point-and-permute AND tables.

use rand::{CryptoRng, Rng, RngCore};
use sha2::{Digest, Sha256};

use super::{Circuit, Gate, GateKind, GcError, WireId, ONE, ZERO};

pub type Label = u128;

const MAGIC: &[u8; 4] = b"SLGC";

/// Name of the row hash, for parameter records.
pub const ROW_HASH: &str = "sha256-trunc128";

fn row_key(a: Label, b: Label, gate: u32) -> Label {
    let mut h = Sha256::new();
    h.update(a.to_be_bytes());
    h.update(b.to_be_bytes());
    h.update(gate.to_be_bytes());
    u128::from_be_bytes(h.finalize()[..16].try_into().unwrap())
}

fn out_tag(l: Label, wire: WireId) -> [u8; 16] {
    let mut h = Sha256::new();
    h.update(b"out");
    h.update(l.to_be_bytes());
    h.update(wire.to_be_bytes());
    h.finalize()[..16].try_into().unwrap()
}

fn permute_bit(l: Label) -> usize {
    (l & 1) as usize
}

/// Label pairs `(label for 0, label for 1)` of the evaluator's input wires,
/// in [`Circuit::ps_inputs`] order.
#[derive(Clone, Debug)]
pub struct InputLabels {
    pub ps_pairs: Vec<(Label, Label)>,
}

/// Everything the evaluator receives from the garbler.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GarbledCircuit {
    /// Free-form header words, e.g. `(N, w, w_idx)`.
    pub header: [u32; 3],
    pub circuit: Circuit,
    tables: Vec<[Label; 4]>,
    cs_labels: Vec<Label>,
    const_labels: [Label; 2],
    decode: Vec<([u8; 16], [u8; 16])>,
    digest: [u8; 32],
}

/// Garbles `circuit` with the garbler's input bits fixed to `cs_values`.
pub fn garble<R: RngCore + CryptoRng>(
    circuit: &Circuit,
    cs_values: &[bool],
    header: [u32; 3],
    rng: &mut R,
) -> Result<(GarbledCircuit, InputLabels), GcError> {
    if cs_values.len() != circuit.cs_inputs.len() {
        return Err(GcError::InputLength {
            expected: circuit.cs_inputs.len(),
            got: cs_values.len(),
        });
    }
    let delta: Label = rng.gen::<Label>() | 1;
    let mut zero = vec![0 as Label; circuit.num_wires as usize];
    zero[ZERO as usize] = rng.gen();
    zero[ONE as usize] = rng.gen();
    for &w in circuit.ps_inputs.iter().chain(&circuit.cs_inputs) {
        zero[w as usize] = rng.gen();
    }
    let mut tables = Vec::new();
    for (idx, g) in circuit.gates.iter().enumerate() {
        let (a0, b0) = (zero[g.a as usize], zero[g.b as usize]);
        match g.kind {
            GateKind::Xor => zero[g.out as usize] = a0 ^ b0,
            GateKind::And => {
                let c0: Label = rng.gen();
                zero[g.out as usize] = c0;
                let mut table = [0 as Label; 4];
                for va in 0..2u8 {
                    for vb in 0..2u8 {
                        let la = if va == 1 { a0 ^ delta } else { a0 };
                        let lb = if vb == 1 { b0 ^ delta } else { b0 };
                        let lc = if va & vb == 1 { c0 ^ delta } else { c0 };
                        let row = 2 * permute_bit(la) + permute_bit(lb);
                        table[row] = row_key(la, lb, idx as u32) ^ lc;
                    }
                }
                tables.push(table);
            }
        }
    }
    let cs_labels = circuit
        .cs_inputs
        .iter()
        .zip(cs_values)
        .map(|(&w, &v)| {
            if v {
                zero[w as usize] ^ delta
            } else {
                zero[w as usize]
            }
        })
        .collect();
    let const_labels = [zero[ZERO as usize], zero[ONE as usize] ^ delta];
    let decode = circuit
        .outputs
        .iter()
        .map(|&w| {
            (
                out_tag(zero[w as usize], w),
                out_tag(zero[w as usize] ^ delta, w),
            )
        })
        .collect();
    let ps_pairs = circuit
        .ps_inputs
        .iter()
        .map(|&w| (zero[w as usize], zero[w as usize] ^ delta))
        .collect();
    let mut gc = GarbledCircuit {
        header,
        circuit: circuit.clone(),
        tables,
        cs_labels,
        const_labels,
        decode,
        digest: [0; 32],
    };
    gc.digest = gc.compute_digest();
    Ok((gc, InputLabels { ps_pairs }))
}

/// Evaluates with one active label per evaluator input wire.
pub fn evaluate(gc: &GarbledCircuit, ps_labels: &[Label]) -> Result<Vec<bool>, GcError> {
    let c = &gc.circuit;
    if ps_labels.len() != c.ps_inputs.len() {
        return Err(GcError::InputLength {
            expected: c.ps_inputs.len(),
            got: ps_labels.len(),
        });
    }
    if gc.compute_digest() != gc.digest {
        return Err(GcError::Integrity("garbled table digest mismatch".into()));
    }
    let mut active = vec![0 as Label; c.num_wires as usize];
    active[ZERO as usize] = gc.const_labels[0];
    active[ONE as usize] = gc.const_labels[1];
    for (&w, &l) in c
        .ps_inputs
        .iter()
        .zip(ps_labels)
        .chain(c.cs_inputs.iter().zip(&gc.cs_labels))
    {
        active[w as usize] = l;
    }
    let mut tables = gc.tables.iter();
    for (idx, g) in c.gates.iter().enumerate() {
        let (la, lb) = (active[g.a as usize], active[g.b as usize]);
        active[g.out as usize] = match g.kind {
            GateKind::Xor => la ^ lb,
            GateKind::And => {
                let t = tables
                    .next()
                    .ok_or_else(|| GcError::Integrity("missing garbled table".into()))?;
                t[2 * permute_bit(la) + permute_bit(lb)] ^ row_key(la, lb, idx as u32)
            }
        };
    }
    c.outputs
        .iter()
        .zip(&gc.decode)
        .map(|(&w, (t0, t1))| {
            let tag = out_tag(active[w as usize], w);
            if tag == *t0 {
                Ok(false)
            } else if tag == *t1 {
                Ok(true)
            } else {
                Err(GcError::Integrity(format!(
                    "output wire {w} label not decodable"
                )))
            }
        })
        .collect()
}

// ---------------------------------------------------------------- wire format

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GcError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| GcError::Malformed("truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, GcError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, GcError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn label(&mut self) -> Result<Label, GcError> {
        Ok(u128::from_be_bytes(self.take(16)?.try_into().unwrap()))
    }
    fn wires(&mut self) -> Result<Vec<WireId>, GcError> {
        let n = self.u32()? as usize;
        if n > self.buf.len() / 4 {
            return Err(GcError::Malformed("wire list longer than message".into()));
        }
        (0..n).map(|_| self.u32()).collect()
    }
}

fn put_wires(out: &mut Vec<u8>, ws: &[WireId]) {
    out.extend((ws.len() as u32).to_be_bytes());
    for w in ws {
        out.extend(w.to_be_bytes());
    }
}

impl GarbledCircuit {
    fn body_bytes(&self) -> Vec<u8> {
        let c = &self.circuit;
        let mut out = Vec::new();
        out.extend(MAGIC);
        for h in self.header {
            out.extend(h.to_be_bytes());
        }
        out.extend(c.num_wires.to_be_bytes());
        out.extend((c.gates.len() as u32).to_be_bytes());
        put_wires(&mut out, &c.ps_inputs);
        put_wires(&mut out, &c.cs_inputs);
        put_wires(&mut out, &c.outputs);
        let mut tables = self.tables.iter();
        for g in &c.gates {
            out.push(match g.kind {
                GateKind::Xor => 0,
                GateKind::And => 1,
            });
            out.extend(g.a.to_be_bytes());
            out.extend(g.b.to_be_bytes());
            out.extend(g.out.to_be_bytes());
            if g.kind == GateKind::And {
                for row in tables.next().expect("one table per AND gate") {
                    out.extend(row.to_be_bytes());
                }
            }
        }
        for l in &self.cs_labels {
            out.extend(l.to_be_bytes());
        }
        for l in &self.const_labels {
            out.extend(l.to_be_bytes());
        }
        for (t0, t1) in &self.decode {
            out.extend(t0);
            out.extend(t1);
        }
        out
    }

    fn compute_digest(&self) -> [u8; 32] {
        Sha256::digest(self.body_bytes()).into()
    }

    pub fn and_gate_count(&self) -> usize {
        self.tables.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.body_bytes();
        out.extend(self.digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GcError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(GcError::Malformed("bad magic".into()));
        }
        let header = [r.u32()?, r.u32()?, r.u32()?];
        let num_wires = r.u32()?;
        let gate_count = r.u32()? as usize;
        if gate_count > bytes.len() / 13 {
            return Err(GcError::Malformed("gate count larger than message".into()));
        }
        let ps_inputs = r.wires()?;
        let cs_inputs = r.wires()?;
        let outputs = r.wires()?;
        let mut gates = Vec::with_capacity(gate_count);
        let mut tables = Vec::new();
        for _ in 0..gate_count {
            let kind = match r.u8()? {
                0 => GateKind::Xor,
                1 => GateKind::And,
                k => return Err(GcError::Malformed(format!("unknown gate kind {k}"))),
            };
            let (a, b, out) = (r.u32()?, r.u32()?, r.u32()?);
            if kind == GateKind::And {
                tables.push([r.label()?, r.label()?, r.label()?, r.label()?]);
            }
            gates.push(Gate { kind, a, b, out });
        }
        let cs_labels = (0..cs_inputs.len())
            .map(|_| r.label())
            .collect::<Result<_, _>>()?;
        let const_labels = [r.label()?, r.label()?];
        let mut decode = Vec::with_capacity(outputs.len());
        for _ in 0..outputs.len() {
            let t0: [u8; 16] = r.take(16)?.try_into().unwrap();
            let t1: [u8; 16] = r.take(16)?.try_into().unwrap();
            decode.push((t0, t1));
        }
        let digest: [u8; 32] = r.take(32)?.try_into().unwrap();
        if r.pos != bytes.len() {
            return Err(GcError::Malformed("trailing bytes".into()));
        }
        let circuit = Circuit {
            num_wires,
            gates,
            ps_inputs,
            cs_inputs,
            outputs,
        };
        circuit.validate()?;
        Ok(Self {
            header,
            circuit,
            tables,
            cs_labels,
            const_labels,
            decode,
            digest,
        })
    }
}
