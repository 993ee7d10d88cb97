//! Arithmetic blocks and the maximum circuit built from them.

use super::{from_bits, to_bits, Builder, Bus, Circuit, GcError, WireId, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// `x − y mod 2^w`.
    Sub(usize),
    /// 1 iff the two input bits are equal.
    SubP,
    /// 1 iff `x ≥ y`.
    Comp(usize),
    /// `sel ? b : a`.
    Mux(usize),
    /// `flag ? x : 0`.
    Mul(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaxVariant {
    /// Both children are leaves.
    Max1,
    /// Exactly one child is a leaf.
    Max2,
    /// Both children are internal.
    Max3,
    /// Unpaired element promoted to the next layer; no gates.
    Max4,
}

impl MaxVariant {
    pub fn from_number(v: u8) -> Result<Self, GcError> {
        match v {
            1 => Ok(Self::Max1),
            2 => Ok(Self::Max2),
            3 => Ok(Self::Max3),
            4 => Ok(Self::Max4),
            _ => Err(GcError::Domain(format!("no Max variant {v}"))),
        }
    }
}

// ---------------------------------------------------------------- gadgets

fn sub(b: &mut Builder, x: &[WireId], y: &[WireId], borrow_in: WireId) -> Bus {
    let mut borrow = borrow_in;
    let mut diff = Vec::with_capacity(x.len());
    for (&xi, &yi) in x.iter().zip(y) {
        let t1 = b.xor(xi, borrow);
        let t2 = b.xor(yi, borrow);
        diff.push(b.xor(t1, yi));
        let t = b.and(t1, t2);
        borrow = b.xor(yi, t);
    }
    diff
}

fn sub_prime(b: &mut Builder, x: WireId, y: WireId) -> WireId {
    // one-bit subtractor with borrow-in 1: the difference bit is x XNOR y
    sub(b, &[x], &[y], ONE)[0]
}

fn comp(b: &mut Builder, x: &[WireId], y: &[WireId]) -> WireId {
    let mut c = ONE;
    for (&xi, &yi) in x.iter().zip(y) {
        let p = b.xor(c, xi);
        let q = b.xor(c, yi);
        let t = b.and(p, q);
        c = b.xor(xi, t);
    }
    c
}

fn mux(b: &mut Builder, sel: WireId, a: &[WireId], c: &[WireId]) -> Bus {
    a.iter()
        .zip(c)
        .map(|(&ai, &ci)| {
            let d = b.xor(ai, ci);
            let t = b.and(sel, d);
            b.xor(ai, t)
        })
        .collect()
}

fn mul(b: &mut Builder, x: &[WireId], flag: WireId) -> Bus {
    x.iter().map(|&xi| b.and(xi, flag)).collect()
}

fn nss(b: &mut Builder, sbar: &[WireId], r: &[WireId], a: WireId, r2: WireId) -> Bus {
    let s = sub(b, sbar, r, ZERO);
    let flag = sub_prime(b, a, r2);
    mul(b, &s, flag)
}

/// Returns `(score, index)` of the larger side; ties go to `left`.
fn max_block(
    b: &mut Builder,
    left: (&[WireId], &[WireId]),
    right: (&[WireId], &[WireId]),
) -> (Bus, Bus) {
    let sel = comp(b, left.0, right.0);
    let score = mux(b, sel, right.0, left.0);
    let idx = mux(b, sel, right.1, left.1);
    (score, idx)
}

fn check_width(w: usize, what: &str) -> Result<(), GcError> {
    if w == 0 {
        return Err(GcError::Domain(format!("{what} width must be at least 1")));
    }
    Ok(())
}

// ---------------------------------------------------------------- standalone builds

/// A single block as a circuit with evaluator inputs in argument order.
pub fn build_block(kind: BlockKind) -> Result<Circuit, GcError> {
    let mut b = Builder::new();
    let out = match kind {
        BlockKind::Sub(w) => {
            check_width(w, "SUB")?;
            let x = b.ps_input(w);
            let y = b.ps_input(w);
            sub(&mut b, &x, &y, ZERO)
        }
        BlockKind::SubP => {
            let x = b.ps_input(1);
            let y = b.ps_input(1);
            vec![sub_prime(&mut b, x[0], y[0])]
        }
        BlockKind::Comp(w) => {
            check_width(w, "COMP")?;
            let x = b.ps_input(w);
            let y = b.ps_input(w);
            vec![comp(&mut b, &x, &y)]
        }
        BlockKind::Mux(w) => {
            check_width(w, "MUX")?;
            let sel = b.ps_input(1)[0];
            let x = b.ps_input(w);
            let y = b.ps_input(w);
            mux(&mut b, sel, &x, &y)
        }
        BlockKind::Mul(w) => {
            check_width(w, "MUL")?;
            let x = b.ps_input(w);
            let f = b.ps_input(1)[0];
            mul(&mut b, &x, f)
        }
    };
    Ok(b.finish(out))
}

/// NSS leaf: evaluator inputs `s̄ (w), a`, garbler inputs `r (w), r''`.
pub fn build_nss(w: usize) -> Result<Circuit, GcError> {
    check_width(w, "NSS")?;
    let mut b = Builder::new();
    let sbar = b.ps_input(w);
    let a = b.ps_input(1)[0];
    let r = b.cs_input(w);
    let r2 = b.cs_input(1)[0];
    let out = nss(&mut b, &sbar, &r, a, r2);
    Ok(b.finish(out))
}

/// One Max block over `(left score, left index, right score, right index)`.
/// Leaf index buses are garbler-side inputs, internal ones evaluator-side.
/// Outputs the winning score followed by its index.
pub fn build_max(variant: MaxVariant, w: usize, w_idx: usize) -> Result<Circuit, GcError> {
    check_width(w, "score")?;
    check_width(w_idx, "index")?;
    let mut b = Builder::new();
    let (left_leaf, right_leaf) = match variant {
        MaxVariant::Max1 => (true, true),
        MaxVariant::Max2 => (true, false),
        MaxVariant::Max3 | MaxVariant::Max4 => (false, false),
    };
    let ls = b.ps_input(w);
    let li = if left_leaf {
        b.cs_input(w_idx)
    } else {
        b.ps_input(w_idx)
    };
    let rs = b.ps_input(w);
    let ri = if right_leaf {
        b.cs_input(w_idx)
    } else {
        b.ps_input(w_idx)
    };
    let out = if variant == MaxVariant::Max4 {
        [ls, li].concat()
    } else {
        let (s, i) = max_block(&mut b, (&ls, &li), (&rs, &ri));
        [s, i].concat()
    };
    Ok(b.finish(out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockRecordKind {
    Nss,
    Max(MaxVariant),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockRecord {
    pub kind: BlockRecordKind,
    /// Reduction layer; leaves are layer 0.
    pub layer: u32,
    pub xor: u64,
    pub and: u64,
}

/// The maximum circuit with its block inventory.
#[derive(Clone, Debug)]
pub struct Mgc {
    pub circuit: Circuit,
    pub n: usize,
    pub w: usize,
    pub w_idx: usize,
    pub blocks: Vec<BlockRecord>,
}

impl Mgc {
    pub fn layers(&self) -> u32 {
        self.blocks.iter().map(|b| b.layer).max().unwrap_or(0)
    }

    pub fn count_blocks(&self, kind: BlockRecordKind) -> usize {
        self.blocks.iter().filter(|b| b.kind == kind).count()
    }
}

fn bits_for(n: usize) -> usize {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1) as usize
}

/// Builds the maximum circuit over `n` NSS leaves. Leaf `i` contributes
/// evaluator inputs `(s̄_i, a_i)` and garbler inputs `(r_i, r''_i)`; its
/// index is hardwired from the constant wires. Output is the `w_idx`-bit
/// index of the leftmost maximal leaf.
pub fn build_mgc(n: usize, w: usize, w_idx: usize) -> Result<Mgc, GcError> {
    if n == 0 {
        return Err(GcError::Domain("at least one leaf required".into()));
    }
    check_width(w, "score")?;
    check_width(w_idx, "index")?;
    if w_idx < 64 && bits_for(n) > w_idx {
        return Err(GcError::Domain(format!(
            "index width {w_idx} cannot address {n} leaves"
        )));
    }
    let mut b = Builder::new();
    let mut blocks = Vec::new();
    // (score, index, is_leaf)
    let mut layer: Vec<(Bus, Bus, bool)> = Vec::with_capacity(n);
    for i in 0..n {
        let before = b.counts();
        let sbar = b.ps_input(w);
        let a = b.ps_input(1)[0];
        let r = b.cs_input(w);
        let r2 = b.cs_input(1)[0];
        let score = nss(&mut b, &sbar, &r, a, r2);
        let after = b.counts();
        blocks.push(BlockRecord {
            kind: BlockRecordKind::Nss,
            layer: 0,
            xor: after.0 - before.0,
            and: after.1 - before.1,
        });
        layer.push((score, b.constant(i as u64, w_idx), true));
    }
    let mut depth = 0;
    while layer.len() > 1 {
        depth += 1;
        let mut next = Vec::with_capacity(layer.len().div_ceil(2));
        let mut it = layer.into_iter();
        while let Some(left) = it.next() {
            match it.next() {
                Some(right) => {
                    let variant = match (left.2, right.2) {
                        (true, true) => MaxVariant::Max1,
                        (false, false) => MaxVariant::Max3,
                        _ => MaxVariant::Max2,
                    };
                    let before = b.counts();
                    let (s, i) = max_block(&mut b, (&left.0, &left.1), (&right.0, &right.1));
                    let after = b.counts();
                    blocks.push(BlockRecord {
                        kind: BlockRecordKind::Max(variant),
                        layer: depth,
                        xor: after.0 - before.0,
                        and: after.1 - before.1,
                    });
                    next.push((s, i, false));
                }
                None => {
                    blocks.push(BlockRecord {
                        kind: BlockRecordKind::Max(MaxVariant::Max4),
                        layer: depth,
                        xor: 0,
                        and: 0,
                    });
                    next.push(left);
                }
            }
        }
        layer = next;
    }
    let (_, index, _) = layer.pop().expect("n >= 1");
    Ok(Mgc {
        circuit: b.finish(index),
        n,
        w,
        w_idx,
        blocks,
    })
}

/// Evaluator input vector for [`build_mgc`]: per leaf, `s̄_i` then `a_i`.
pub fn mgc_ps_inputs(sbar: &[u64], a: &[bool], w: usize) -> Vec<bool> {
    sbar.iter()
        .zip(a)
        .flat_map(|(&s, &ai)| {
            let mut bits = to_bits(s, w);
            bits.push(ai);
            bits
        })
        .collect()
}

/// Garbler input vector for [`build_mgc`]: per leaf, `r_i` then `r''_i`.
pub fn mgc_cs_inputs(r: &[u64], r2: &[bool], w: usize) -> Vec<bool> {
    mgc_ps_inputs(r, r2, w)
}

pub fn decode_index(bits: &[bool]) -> u64 {
    from_bits(bits)
}

/// Gate totals of the maximum circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockCounts {
    pub n: u64,
    pub w: u64,
    pub w_idx: u64,
    pub sub: (u64, u64),
    pub sub_prime: (u64, u64),
    pub comp: (u64, u64),
    pub mux: (u64, u64),
    pub mux_idx: (u64, u64),
    pub mul: (u64, u64),
    pub nss: (u64, u64),
    pub max: (u64, u64),
    pub max_blocks: u64,
    /// Exact totals `(xor, and)` of the built circuit.
    pub total: (u64, u64),
    /// The `N(11w + 4)`, `N(5w + 1)` approximation.
    pub approx: (u64, u64),
}

/// Closed-form gate counts; `w_idx = w` reproduces the `7w / 3w` Max cost.
pub fn audit_counts(n: u64, w: u64, w_idx: u64) -> BlockCounts {
    let sub = (4 * w, w);
    let sub_prime = (4, 1);
    let comp = (3 * w, w);
    let mux = (2 * w, w);
    let mux_idx = (2 * w_idx, w_idx);
    let mul = (0, w);
    let nss = (sub.0 + sub_prime.0 + mul.0, sub.1 + sub_prime.1 + mul.1);
    let max = (comp.0 + mux.0 + mux_idx.0, comp.1 + mux.1 + mux_idx.1);
    let max_blocks = n.saturating_sub(1);
    BlockCounts {
        n,
        w,
        w_idx,
        sub,
        sub_prime,
        comp,
        mux,
        mux_idx,
        mul,
        nss,
        max,
        max_blocks,
        total: (
            n * nss.0 + max_blocks * max.0,
            n * nss.1 + max_blocks * max.1,
        ),
        approx: (n * (11 * w + 4), n * (5 * w + 1)),
    }
}
