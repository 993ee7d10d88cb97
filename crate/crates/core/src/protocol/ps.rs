//! Proxy server: decryption with `q1` and winner selection.

use rayon::prelude::*;

use super::wire::SessionInfo;
use super::{ProtocolError, Variant};
use crate::bgn::{CiphertextG, CiphertextG1, PublicKey, SecretKey, SolverG, SolverG1};
use crate::gc::{self, GarbledCircuit, Label};

pub struct ProxyServer {
    pk: PublicKey,
    sk: SecretKey,
    info: SessionInfo,
    solver_g: SolverG,
    solver_g1: SolverG1,
}

impl ProxyServer {
    /// Builds dlog tables sized for the session variant: G1 up to `N`, `2N`
    /// or `N + R_max`; G up to 1 or `R_max`.
    pub fn new(pk: PublicKey, sk: SecretKey, info: SessionInfo) -> Result<Self, ProtocolError> {
        if !sk.matches(&pk) {
            return Err(crate::bgn::BgnError::InvalidKey(
                "secret factor does not match public key".into(),
            )
            .into());
        }
        let n = info.n_max as u64;
        let (b_g1, b_g) = match info.variant {
            Variant::I => (n, 1),
            Variant::II => (2 * n, 1),
            Variant::III => (n + info.r_max, info.r_max.max(1)),
        };
        if num_bigint::BigUint::from(b_g1.max(b_g)) >= sk.q1 {
            return Err(ProtocolError::Domain(format!(
                "plaintext bound {} not below the subgroup order",
                b_g1.max(b_g)
            )));
        }
        let solver_g1 = sk.solver_g1(&pk, b_g1, false);
        let solver_g = sk.solver_g(&pk, b_g, false);
        Ok(Self {
            pk,
            sk,
            info,
            solver_g,
            solver_g1,
        })
    }

    pub fn pk(&self) -> &PublicKey {
        &self.pk
    }

    pub fn info(&self) -> &SessionInfo {
        &self.info
    }

    fn dec_g1(&self, c: &[CiphertextG1]) -> Result<Vec<u64>, ProtocolError> {
        c.par_iter()
            .map(|x| Ok(self.sk.decrypt_g1(&self.pk, x, &self.solver_g1)?))
            .collect()
    }

    fn dec_g(&self, c: &[CiphertextG]) -> Result<Vec<u64>, ProtocolError> {
        c.par_iter()
            .map(|x| Ok(self.sk.decrypt_g(&self.pk, x, &self.solver_g)?))
            .collect()
    }

    fn bits(&self, c: &[CiphertextG]) -> Result<Vec<bool>, ProtocolError> {
        self.dec_g(c)?
            .into_iter()
            .map(|a| match a {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(ProtocolError::Malformed(format!(
                    "adjacency plaintext {a} is not a bit"
                ))),
            })
            .collect()
    }

    /// Positions with `a = 0`, ordered by score descending then position
    /// ascending, truncated to `k`.
    pub fn top_k_slp1(
        &self,
        c_hat: &[CiphertextG1],
        m_hat: &[CiphertextG],
        k: usize,
    ) -> Result<Vec<u32>, ProtocolError> {
        if c_hat.len() != m_hat.len() {
            return Err(ProtocolError::Malformed(
                "score and adjacency vectors differ in length".into(),
            ));
        }
        let adj = self.bits(m_hat)?;
        let open: Vec<CiphertextG1> = c_hat
            .iter()
            .zip(&adj)
            .filter(|(_, &a)| !a)
            .map(|(c, _)| *c)
            .collect();
        let scores = self.dec_g1(&open)?;
        let mut ranked: Vec<(u64, u32)> = (0..adj.len() as u32)
            .filter(|&j| !adj[j as usize])
            .zip(scores)
            .map(|(j, s)| (s, j))
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(ranked.into_iter().take(k).map(|(_, j)| j).collect())
    }

    /// Leftmost maximal position among non-neighbours, if any.
    pub fn find_max_slp1(
        &self,
        c_hat: &[CiphertextG1],
        m_hat: &[CiphertextG],
    ) -> Result<Option<u32>, ProtocolError> {
        Ok(self.top_k_slp1(c_hat, m_hat, 1)?.first().copied())
    }

    /// `(s', position)` sorted by `s'` descending, ties by position.
    pub fn sort_slp2(&self, d_hat: &[CiphertextG1]) -> Result<Vec<(u32, u32)>, ProtocolError> {
        let d = self.dec_g1(d_hat)?;
        let mut list: Vec<(u32, u32)> = d
            .into_iter()
            .enumerate()
            .map(|(j, s)| (s as u32, j as u32))
            .collect();
        list.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(list)
    }

    /// Plaintext 0/1 row.
    pub fn neighbor_bits(&self, row: &[CiphertextG]) -> Result<Vec<bool>, ProtocolError> {
        self.bits(row)
    }

    /// Evaluator choice bits for the maximum circuit: `s̄_j` bits and the low
    /// bit of `ā_j` per leaf.
    pub fn slp3_choices(
        &self,
        c_bar: &[CiphertextG1],
        m_bar: &[CiphertextG],
        w: usize,
    ) -> Result<Vec<bool>, ProtocolError> {
        if c_bar.len() != m_bar.len() {
            return Err(ProtocolError::Malformed(
                "masked vectors differ in length".into(),
            ));
        }
        let s = self.dec_g1(c_bar)?;
        let a: Vec<bool> = self.dec_g(m_bar)?.into_iter().map(|x| x & 1 == 1).collect();
        if w < 64 && s.iter().any(|&x| x >> w != 0) {
            return Err(ProtocolError::Malformed(
                "masked score exceeds circuit width".into(),
            ));
        }
        Ok(gc::mgc_ps_inputs(&s, &a, w))
    }

    /// Evaluates the garbled maximum circuit; returns the winning position.
    pub fn slp3_eval(&self, gc: &GarbledCircuit, labels: &[Label]) -> Result<u32, ProtocolError> {
        let out = gc::evaluate(gc, labels)?;
        let idx = gc::decode_index(&out);
        if idx >= gc.header[0] as u64 {
            return Err(ProtocolError::Malformed(format!(
                "circuit returned index {idx} out of range"
            )));
        }
        Ok(idx as u32)
    }
}
