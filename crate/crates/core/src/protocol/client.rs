//! Client: key material, graph encryption, trapdoors and result decoding.

use rand::{CryptoRng, Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::wire::{QueryKind, Trapdoor};
use super::{ProtocolError, Variant};
use crate::bgn::{self, CiphertextG, CiphertextG1, KeyPair, PublicKey, SecretKey};
use crate::graph::{Graph, MaskMatrix};
use crate::pairing::{self, CurveParams};
use crate::prp::{self, PrpKey, KEY_LEN};

/// BGN key pair plus the PRP key `k_perm`.
#[derive(Clone)]
pub struct ClientKeys {
    pub keypair: KeyPair,
    pub k_perm: [u8; KEY_LEN],
}

impl ClientKeys {
    pub fn generate<R: RngCore + CryptoRng>(
        lambda_bits: u32,
        rng: &mut R,
    ) -> Result<Self, ProtocolError> {
        let keypair = bgn::keygen(lambda_bits, rng)?;
        let mut k_perm = [0u8; KEY_LEN];
        rng.fill_bytes(&mut k_perm);
        Ok(Self { keypair, k_perm })
    }

    pub fn pk(&self) -> &PublicKey {
        &self.keypair.pk
    }

    pub fn sk(&self) -> &SecretKey {
        &self.keypair.sk
    }

    /// The vertex PRP `F` over `[0, n)`.
    pub fn prp(&self, n: usize) -> Result<PrpKey, ProtocolError> {
        Ok(PrpKey::new(self.k_perm, n as u64)?)
    }

    /// Key bundle as `key=value` lines (hex values).
    pub fn to_text(&self) -> String {
        let mut s = self.keypair.pk.to_text();
        s.push_str(&format!("q1={}\n", self.keypair.params.q1.to_str_radix(16)));
        s.push_str(&format!("q2={}\n", self.keypair.params.q2.to_str_radix(16)));
        s.push_str(&format!("prf={}\n", prp::PRF_NAME));
        s.push_str(&format!("k_perm={}\n", pairing::encode_hex(&self.k_perm)));
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ProtocolError> {
        let map = pairing::parse_key_values(text).map_err(bgn::BgnError::from)?;
        let pk = PublicKey::from_text(text)?;
        let field = |k: &str| pairing::hex_field(&map, k).map_err(bgn::BgnError::from);
        let gp = pk.group().params();
        let params = CurveParams {
            p: gp.p.clone(),
            q1: field("q1")?,
            q2: field("q2")?,
            n: gp.n.clone(),
            l: gp.l.clone(),
        };
        params.validate().map_err(bgn::BgnError::from)?;
        if map.get("prf").map(String::as_str) != Some(prp::PRF_NAME) {
            return Err(ProtocolError::Malformed(
                "unsupported or missing prf".into(),
            ));
        }
        let k_perm = pairing::hex_bytes(&map, "k_perm")
            .map_err(bgn::BgnError::from)?
            .try_into()
            .map_err(|_| ProtocolError::Malformed("k_perm must be 32 bytes".into()))?;
        let sk = SecretKey {
            q1: params.q1.clone(),
        };
        if !sk.matches(&pk) {
            return Err(bgn::BgnError::InvalidKey(
                "secret factor does not match public key".into(),
            )
            .into());
        }
        Ok(Self {
            keypair: KeyPair { params, pk, sk },
            k_perm,
        })
    }
}

/// `T` (and `T'` for SLP-II), row-major, already permuted by `F` on both
/// axes: `T[F(i)][F(j)] = Enc(a_ij)`.
#[derive(Clone)]
pub struct EncryptedGraph {
    pub n: usize,
    pub t: Vec<CiphertextG>,
    pub tp: Option<Vec<CiphertextG1>>,
}

/// Encrypts `graph` under `keys`; `T'` is produced for [`Variant::II`].
/// Rows are encrypted in parallel from per-row seeds drawn from `rng`.
pub fn encrypt_graph<R: RngCore + CryptoRng>(
    graph: &Graph,
    keys: &ClientKeys,
    variant: Variant,
    rng: &mut R,
) -> Result<EncryptedGraph, ProtocolError> {
    let n = graph.n();
    let f = keys.prp(n)?;
    let pos: Vec<usize> = (0..n)
        .map(|i| f.apply(i as u64).map(|p| p as usize))
        .collect::<Result<_, _>>()?;
    let pk = keys.pk();
    let seeds: Vec<[u8; 32]> = (0..n).map(|_| rng.gen()).collect();
    let rows: Vec<Vec<CiphertextG>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, seed)| {
            let mut r = ChaCha20Rng::from_seed(*seed);
            (0..n)
                .map(|j| pk.encrypt_g_with(graph.a(i, j), &pk.group().random_scalar(&mut r)))
                .collect()
        })
        .collect();
    let mut t = vec![CiphertextG(pk.group().identity()); n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (j, c) in row.into_iter().enumerate() {
            t[pos[i] * n + pos[j]] = c;
        }
    }
    let tp = match variant {
        Variant::II => {
            let b = MaskMatrix::build(graph, rng);
            let seeds: Vec<[u8; 32]> = (0..n).map(|_| rng.gen()).collect();
            let rows: Vec<Vec<CiphertextG1>> = seeds
                .par_iter()
                .enumerate()
                .map(|(i, seed)| {
                    let mut r = ChaCha20Rng::from_seed(*seed);
                    (0..n)
                        .map(|j| {
                            let s = pk.group().random_scalar(&mut r);
                            pk.encrypt_g1_with(b.get(i, j) as u64, &s)
                        })
                        .collect()
                })
                .collect();
            let mut tp = vec![CiphertextG1(pk.group().gt_one()); n * n];
            for (i, row) in rows.into_iter().enumerate() {
                for (j, c) in row.into_iter().enumerate() {
                    tp[pos[i] * n + pos[j]] = c;
                }
            }
            Some(tp)
        }
        _ => None,
    };
    Ok(EncryptedGraph { n, t, tp })
}

/// `τ_v = (F(v), s)` for a fresh permutation seed `s`.
pub fn make_trapdoor<R: RngCore + CryptoRng>(
    keys: &ClientKeys,
    n: usize,
    v: usize,
    kind: QueryKind,
    arg: u32,
    rng: &mut R,
) -> Result<Trapdoor, ProtocolError> {
    let f = keys.prp(n)?;
    let row = f.apply(v as u64)? as u32;
    Ok(Trapdoor {
        kind,
        row,
        seed: prp::random_seed(rng),
        arg,
    })
}

/// Maps PS-visible positions back to vertex identifiers.
pub struct Resolver {
    f: PrpKey,
    perm: Vec<u32>,
    query: usize,
}

impl Resolver {
    pub fn new(
        keys: &ClientKeys,
        n: usize,
        v: usize,
        td: &Trapdoor,
    ) -> Result<Self, ProtocolError> {
        Ok(Self {
            f: keys.prp(n)?,
            perm: prp::perm_generate(&td.seed, n),
            query: v,
        })
    }

    /// Vertex at PS-visible position `pos`.
    pub fn vertex(&self, pos: u32) -> Result<usize, ProtocolError> {
        let row = *self
            .perm
            .get(pos as usize)
            .ok_or_else(|| ProtocolError::Malformed(format!("position {pos} out of range")))?;
        Ok(self.f.invert(row as u64)? as usize)
    }

    /// Vertex at `pos`, or `None` if it is the queried vertex itself.
    pub fn candidate(&self, pos: u32) -> Result<Option<usize>, ProtocolError> {
        let u = self.vertex(pos)?;
        Ok((u != self.query).then_some(u))
    }

    /// First `k` entries of a non-increasing masked list that are not
    /// neighbours (`s' ≤ deg`), skipping the queried vertex.
    pub fn pick_sorted(
        &self,
        sorted: &[(u32, u32)],
        deg: u64,
        k: usize,
    ) -> Result<Vec<usize>, ProtocolError> {
        let mut out = Vec::new();
        for &(s, pos) in sorted {
            if out.len() == k {
                break;
            }
            if let Some(u) = self.candidate(pos)? {
                if s as u64 <= deg {
                    out.push(u);
                }
            }
        }
        Ok(out)
    }

    /// Neighbour set from a PS-visible 0/1 row.
    pub fn neighbors(&self, bits: &[bool]) -> Result<Vec<usize>, ProtocolError> {
        if bits.len() != self.perm.len() {
            return Err(ProtocolError::Malformed("row length mismatch".into()));
        }
        let mut out: Vec<usize> = (0..bits.len() as u32)
            .filter(|&j| bits[j as usize])
            .map(|j| self.vertex(j))
            .collect::<Result<_, _>>()?;
        out.sort_unstable();
        Ok(out)
    }
}

/// Client-side decryption with a table sized for `[0, bound]` in G.
pub fn decrypt_small(keys: &ClientKeys, c: &CiphertextG, bound: u64) -> Result<u64, ProtocolError> {
    let solver = keys.sk().solver_g(keys.pk(), bound, false);
    Ok(keys.sk().decrypt_g(keys.pk(), c, &solver)?)
}
