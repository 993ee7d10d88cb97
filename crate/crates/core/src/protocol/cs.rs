//! Cloud server: homomorphic evaluation over the uploaded matrices.

use num_bigint::BigUint;
use rand::{CryptoRng, Rng, RngCore};
use rayon::prelude::*;

use super::wire::{SessionInfo, Trapdoor};
use super::{width_for, ProtocolError};
use crate::bgn::{CiphertextG, CiphertextG1, PublicKey};
use crate::gc::{self, GarbledCircuit, InputLabels};
use crate::pairing::{GroupElement, PreparedPoint};
use crate::prp::{perm_generate, permute};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CsOptions {
    /// Use `r_i = r'_i = 0` in the garbled-circuit variant. Test use only.
    pub zero_masks: bool,
    /// Use `⌈log2 N⌉` index bits in the maximum circuit instead of `w`.
    pub compact_index: bool,
}

/// Output of the CS half of the garbled-circuit variant.
pub struct GarbledQuery {
    pub c_bar: Vec<CiphertextG1>,
    pub m_bar: Vec<CiphertextG>,
    pub gc: GarbledCircuit,
    pub labels: InputLabels,
}

pub struct CloudServer {
    pk: PublicKey,
    info: SessionInfo,
    opts: CsOptions,
    n: usize,
    t: Vec<CiphertextG>,
    tp: Option<Vec<CiphertextG1>>,
}

impl CloudServer {
    pub fn new(pk: PublicKey, info: SessionInfo, opts: CsOptions) -> Self {
        Self {
            pk,
            info,
            opts,
            n: 0,
            t: Vec::new(),
            tp: None,
        }
    }

    pub fn pk(&self) -> &PublicKey {
        &self.pk
    }

    pub fn info(&self) -> &SessionInfo {
        &self.info
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Replaces the stored graph with `T`; clears any `T'`.
    pub fn load_t(&mut self, n: usize, t: Vec<CiphertextG>) -> Result<(), ProtocolError> {
        if t.len() != n * n {
            return Err(ProtocolError::Malformed("T is not square".into()));
        }
        if n as u64 > self.info.n_max as u64 {
            return Err(ProtocolError::Domain(format!(
                "graph order {n} exceeds session maximum {}",
                self.info.n_max
            )));
        }
        self.n = n;
        self.t = t;
        self.tp = None;
        Ok(())
    }

    pub fn load_tp(&mut self, n: usize, tp: Vec<CiphertextG1>) -> Result<(), ProtocolError> {
        if n != self.n || tp.len() != n * n {
            return Err(ProtocolError::Malformed("T' does not match T".into()));
        }
        self.tp = Some(tp);
        Ok(())
    }

    fn check_row(&self, row: u32) -> Result<usize, ProtocolError> {
        if self.n == 0 {
            return Err(ProtocolError::Domain("no graph uploaded".into()));
        }
        if row as usize >= self.n {
            return Err(ProtocolError::Domain(format!(
                "row {row} outside [0, {})",
                self.n
            )));
        }
        Ok(row as usize)
    }

    fn m(&self, i: usize, j: usize) -> &CiphertextG {
        &self.t[i * self.n + j]
    }

    /// `c_i = Enc(Σ_k a_{i'k} a_{ik})` for every row `i`, unpermuted. The
    /// self slot `c_{i'}` is a fresh encryption of 0.
    fn inner_products<R: RngCore + CryptoRng>(&self, row: usize, rng: &mut R) -> Vec<CiphertextG1> {
        let n = self.n;
        let group = self.pk.group();
        let blind: Vec<BigUint> = (0..n).map(|_| group.random_scalar(rng)).collect();
        let prepared: Vec<PreparedPoint> = (0..n)
            .into_par_iter()
            .map(|k| group.prepare(&self.m(row, k).0))
            .collect();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mask = self.pk.e_gh_pow(&blind[i]);
                if i == row {
                    return CiphertextG1(mask);
                }
                let pairs: Vec<(&PreparedPoint, &GroupElement)> = prepared
                    .iter()
                    .zip(&self.t[i * n..(i + 1) * n])
                    .map(|(p, c)| (p, &c.0))
                    .collect();
                CiphertextG1(group.gt_mul(&group.multi_pairing_prepared(&pairs), &mask))
            })
            .collect()
    }

    /// Link-prediction engine with plaintext adjacency at the PS: returns
    /// `(ĉ, m̂)` permuted by `π_s`. The self slot of `m̂` encrypts 1 so the PS
    /// never selects the queried vertex.
    pub fn query_slp1<R: RngCore + CryptoRng>(
        &self,
        td: &Trapdoor,
        rng: &mut R,
    ) -> Result<(Vec<CiphertextG1>, Vec<CiphertextG>), ProtocolError> {
        let row = self.check_row(td.row)?;
        let c = self.inner_products(row, rng);
        let group = self.pk.group();
        let blind: Vec<BigUint> = (0..self.n).map(|_| group.random_scalar(rng)).collect();
        let m: Vec<CiphertextG> = (0..self.n)
            .into_par_iter()
            .map(|i| {
                if i == row {
                    self.pk.encrypt_g_with(1, &blind[i])
                } else {
                    CiphertextG(group.add(&self.m(row, i).0, &self.pk.h_pow(&blind[i])))
                }
            })
            .collect();
        let perm = perm_generate(&td.seed, self.n);
        Ok((permute(&perm, &c), permute(&perm, &m)))
    }

    /// Masked-score engine: returns `d̂` (scores plus `B` row) permuted by
    /// `π_s`, and `Enc(deg(v))` for the client.
    pub fn query_slp2<R: RngCore + CryptoRng>(
        &self,
        td: &Trapdoor,
        rng: &mut R,
    ) -> Result<(Vec<CiphertextG1>, CiphertextG), ProtocolError> {
        let row = self.check_row(td.row)?;
        let tp = self
            .tp
            .as_ref()
            .ok_or_else(|| ProtocolError::Domain("T' not uploaded".into()))?;
        let c = self.inner_products(row, rng);
        let n = self.n;
        let d: Vec<CiphertextG1> = c
            .iter()
            .enumerate()
            .map(|(i, ci)| self.pk.add_g1(ci, &tp[row * n + i]))
            .collect();
        let perm = perm_generate(&td.seed, n);
        Ok((permute(&perm, &d), self.degree(td)?))
    }

    /// `Enc(deg(v)) = ∏_k m_{i'k}`.
    pub fn degree(&self, td: &Trapdoor) -> Result<CiphertextG, ProtocolError> {
        let row = self.check_row(td.row)?;
        let group = self.pk.group();
        let sum = (0..self.n).fold(group.identity(), |acc, k| {
            group.add(&acc, &self.m(row, k).0)
        });
        Ok(CiphertextG(sum))
    }

    /// Row `i'` of `T` permuted by `π_s`.
    pub fn row(&self, td: &Trapdoor) -> Result<Vec<CiphertextG>, ProtocolError> {
        let row = self.check_row(td.row)?;
        let perm = perm_generate(&td.seed, self.n);
        Ok(permute(&perm, &self.t[row * self.n..(row + 1) * self.n]))
    }

    /// `m_{i'_1 i'_2}`; `td.arg` is the second row.
    pub fn adjacency(&self, td: &Trapdoor) -> Result<CiphertextG, ProtocolError> {
        let a = self.check_row(td.row)?;
        let b = self.check_row(td.arg)?;
        Ok(*self.m(a, b))
    }

    /// Score width `w` for the maximum circuit.
    pub fn score_width(&self) -> usize {
        width_for(self.info.n_max as u64 + self.info.r_max)
    }

    /// Masked-input engine: blinds `c` and `m` additively, then garbles the
    /// maximum circuit with the unmasking subtrahends as garbler inputs.
    ///
    /// Leaf `j` (row `i = π_s(j)`) evaluates to `s_i + 2` for a non-neighbour,
    /// 1 for the queried vertex and 0 for a neighbour.
    pub fn query_slp3<R: RngCore + CryptoRng>(
        &self,
        td: &Trapdoor,
        rng: &mut R,
    ) -> Result<GarbledQuery, ProtocolError> {
        let row = self.check_row(td.row)?;
        let n = self.n;
        let w = self.score_width();
        let w_idx = if self.opts.compact_index {
            width_for(n as u64).max(1)
        } else {
            w
        };
        let c = self.inner_products(row, rng);
        let perm = perm_generate(&td.seed, n);
        let group = self.pk.group();
        let (r, r1): (Vec<u64>, Vec<u64>) = (0..n)
            .map(|_| {
                if self.opts.zero_masks {
                    (0, 0)
                } else {
                    (
                        rng.gen_range(0..self.info.r_max),
                        rng.gen_range(0..self.info.r_max),
                    )
                }
            })
            .unzip();
        let blind: Vec<(BigUint, BigUint)> = (0..n)
            .map(|_| (group.random_scalar(rng), group.random_scalar(rng)))
            .collect();
        let (c_bar, m_bar): (Vec<CiphertextG1>, Vec<CiphertextG>) = (0..n)
            .into_par_iter()
            .map(|j| {
                let i = perm[j] as usize;
                let cj = group.gt_mul(&c[i].0, &self.pk.encrypt_g1_with(r[j], &blind[j].0).0);
                let mj = group.add(
                    &self.m(row, i).0,
                    &self.pk.encrypt_g_with(r1[j], &blind[j].1).0,
                );
                (CiphertextG1(cj), CiphertextG(mj))
            })
            .unzip();
        let modulus = if w >= 64 { u64::MAX } else { (1u64 << w) - 1 };
        let sub: Vec<u64> = (0..n)
            .map(|j| {
                let off = if perm[j] as usize == row { 1 } else { 2 };
                r[j].wrapping_sub(off) & modulus
            })
            .collect();
        let r2: Vec<bool> = r1.iter().map(|x| x & 1 == 1).collect();
        let mgc = gc::build_mgc(n, w, w_idx)?;
        let cs_bits = gc::mgc_cs_inputs(&sub, &r2, w);
        let header = [n as u32, w as u32, w_idx as u32];
        let (gc, labels) = gc::garble(&mgc.circuit, &cs_bits, header, rng)?;
        Ok(GarbledQuery {
            c_bar,
            m_bar,
            gc,
            labels,
        })
    }
}
