//! Hashed Diffie–Hellman 1-of-2 oblivious transfer over Ristretto255.
//!
//! Flow: the sender publishes `A = aG` and a nonce; for each item the
//! receiver answers `B = bG` (choice 0) or `B = A + bG` (choice 1); the
//! sender encrypts `m0` under `H(aB)` and `m1` under `H(a(B − A))`, and the
//! receiver can derive only `H(bA)`.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_TABLE;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::Identity;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const POINT_LEN: usize = 32;
pub const NONCE_LEN: usize = 16;
pub const TAG_LEN: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OtError {
    #[error("OT protocol abort: {0}")]
    Abort(String),
    #[error("OT message length error: {0}")]
    Length(String),
    #[error("OT batch size mismatch: expected {expected}, got {got}")]
    Batch { expected: usize, got: usize },
    #[error("OT integrity tag mismatch at item {0}")]
    Integrity(usize),
}

fn decode_point(bytes: &[u8]) -> Result<RistrettoPoint, OtError> {
    CompressedRistretto::from_slice(bytes)
        .ok()
        .and_then(|c| c.decompress())
        .ok_or_else(|| OtError::Abort("invalid group element".into()))
}

fn derive_key(
    nonce: &[u8; NONCE_LEN],
    index: u32,
    a: &RistrettoPoint,
    b: &RistrettoPoint,
    shared: &RistrettoPoint,
) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"slp-ot-key");
    h.update(nonce);
    h.update(index.to_be_bytes());
    h.update(a.compress().as_bytes());
    h.update(b.compress().as_bytes());
    h.update(shared.compress().as_bytes());
    h.finalize().into()
}

fn keystream_xor(key: &[u8; 32], data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len());
    for (ctr, chunk) in data.chunks(32).enumerate() {
        let block = Sha256::new()
            .chain_update(key)
            .chain_update(b"pad")
            .chain_update((ctr as u64).to_be_bytes())
            .finalize();
        out.extend(chunk.iter().zip(block.iter()).map(|(a, b)| a ^ b));
    }
    out
}

fn tag(key: &[u8; 32], ct: &[u8]) -> [u8; TAG_LEN] {
    let d = Sha256::new()
        .chain_update(key)
        .chain_update(b"tag")
        .chain_update(ct)
        .finalize();
    d[..TAG_LEN].try_into().unwrap()
}

fn seal(key: &[u8; 32], m: &[u8]) -> Vec<u8> {
    let mut ct = keystream_xor(key, m);
    let t = tag(key, &ct);
    ct.extend(t);
    ct
}

fn open(key: &[u8; 32], sealed: &[u8]) -> Option<Vec<u8>> {
    let (ct, t) = sealed.split_at(sealed.len().checked_sub(TAG_LEN)?);
    (tag(key, ct) == t).then(|| keystream_xor(key, ct))
}

/// First flow: sender → receiver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ot1 {
    pub a: [u8; POINT_LEN],
    pub nonce: [u8; NONCE_LEN],
}

/// Second flow: one point per item, receiver → sender.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ot2 {
    pub points: Vec<[u8; POINT_LEN]>,
}

/// Third flow: per item, both sealed messages, sender → receiver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ot3 {
    pub msg_len: u32,
    pub sealed: Vec<(Vec<u8>, Vec<u8>)>,
}

impl Ot1 {
    pub fn to_bytes(&self) -> Vec<u8> {
        [&self.a[..], &self.nonce[..]].concat()
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, OtError> {
        if b.len() != POINT_LEN + NONCE_LEN {
            return Err(OtError::Abort("OT1 has wrong length".into()));
        }
        Ok(Self {
            a: b[..POINT_LEN].try_into().unwrap(),
            nonce: b[POINT_LEN..].try_into().unwrap(),
        })
    }
}

impl Ot2 {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = (self.points.len() as u32).to_be_bytes().to_vec();
        for p in &self.points {
            out.extend(p);
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, OtError> {
        let n = b
            .get(..4)
            .map(|h| u32::from_be_bytes(h.try_into().unwrap()) as usize);
        let n = n.ok_or_else(|| OtError::Abort("OT2 truncated".into()))?;
        if b.len() != 4 + n.saturating_mul(POINT_LEN) {
            return Err(OtError::Abort("OT2 has wrong length".into()));
        }
        let points = b[4..]
            .chunks(POINT_LEN)
            .map(|c| c.try_into().unwrap())
            .collect();
        Ok(Self { points })
    }
}

impl Ot3 {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = (self.sealed.len() as u32).to_be_bytes().to_vec();
        out.extend(self.msg_len.to_be_bytes());
        for (e0, e1) in &self.sealed {
            out.extend(e0);
            out.extend(e1);
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, OtError> {
        if b.len() < 8 {
            return Err(OtError::Abort("OT3 truncated".into()));
        }
        let n = u32::from_be_bytes(b[..4].try_into().unwrap()) as usize;
        let msg_len = u32::from_be_bytes(b[4..8].try_into().unwrap());
        let item = msg_len as usize + TAG_LEN;
        if b.len() != 8 + n.saturating_mul(2 * item) {
            return Err(OtError::Abort("OT3 has wrong length".into()));
        }
        let sealed = b[8..]
            .chunks(2 * item)
            .map(|c| (c[..item].to_vec(), c[item..].to_vec()))
            .collect();
        Ok(Self { msg_len, sealed })
    }
}

pub struct OtSender {
    a: Scalar,
    big_a: RistrettoPoint,
    nonce: [u8; NONCE_LEN],
}

impl OtSender {
    pub fn new<R: RngCore + CryptoRng>(rng: &mut R) -> (Self, Ot1) {
        let a = Scalar::random(rng);
        let big_a = &a * RISTRETTO_BASEPOINT_TABLE;
        let mut nonce = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut nonce);
        let msg = Ot1 {
            a: big_a.compress().to_bytes(),
            nonce,
        };
        (Self { a, big_a, nonce }, msg)
    }

    /// Answers the receiver's points with both sealed messages per item.
    pub fn respond(&self, ot2: &Ot2, pairs: &[(Vec<u8>, Vec<u8>)]) -> Result<Ot3, OtError> {
        if ot2.points.len() != pairs.len() {
            return Err(OtError::Batch {
                expected: pairs.len(),
                got: ot2.points.len(),
            });
        }
        let msg_len = pairs.first().map(|p| p.0.len()).unwrap_or(0);
        for (m0, m1) in pairs {
            if m0.is_empty() || m0.len() != m1.len() || m0.len() != msg_len {
                return Err(OtError::Length(
                    "messages must be non-empty and of equal length".into(),
                ));
            }
        }
        let mut sealed = Vec::with_capacity(pairs.len());
        for (j, (pb, (m0, m1))) in ot2.points.iter().zip(pairs).enumerate() {
            let b = decode_point(pb)?;
            let k0 = derive_key(&self.nonce, j as u32, &self.big_a, &b, &(self.a * b));
            let k1 = derive_key(
                &self.nonce,
                j as u32,
                &self.big_a,
                &b,
                &(self.a * (b - self.big_a)),
            );
            sealed.push((seal(&k0, m0), seal(&k1, m1)));
        }
        Ok(Ot3 {
            msg_len: msg_len as u32,
            sealed,
        })
    }
}

pub struct OtReceiver {
    choices: Vec<bool>,
    keys: Vec<[u8; 32]>,
}

impl OtReceiver {
    pub fn new<R: RngCore + CryptoRng>(
        ot1: &Ot1,
        choices: &[bool],
        rng: &mut R,
    ) -> Result<(Self, Ot2), OtError> {
        let big_a = decode_point(&ot1.a)?;
        if big_a == RistrettoPoint::identity() {
            return Err(OtError::Abort("sender element is the identity".into()));
        }
        let mut points = Vec::with_capacity(choices.len());
        let mut keys = Vec::with_capacity(choices.len());
        for (j, &c) in choices.iter().enumerate() {
            let b = Scalar::random(rng);
            let bg = &b * RISTRETTO_BASEPOINT_TABLE;
            let big_b = if c { big_a + bg } else { bg };
            keys.push(derive_key(
                &ot1.nonce,
                j as u32,
                &big_a,
                &big_b,
                &(b * big_a),
            ));
            points.push(big_b.compress().to_bytes());
        }
        Ok((
            Self {
                choices: choices.to_vec(),
                keys,
            },
            Ot2 { points },
        ))
    }

    pub fn finish(&self, ot3: &Ot3) -> Result<Vec<Vec<u8>>, OtError> {
        if ot3.sealed.len() != self.choices.len() {
            return Err(OtError::Batch {
                expected: self.choices.len(),
                got: ot3.sealed.len(),
            });
        }
        ot3.sealed
            .iter()
            .zip(&self.choices)
            .zip(&self.keys)
            .enumerate()
            .map(|(j, ((pair, &c), k))| {
                let e = if c { &pair.1 } else { &pair.0 };
                open(k, e).ok_or(OtError::Integrity(j))
            })
            .collect()
    }
}

/// Runs a full batch locally; both roles share `rng`.
pub fn ot_batch<R: RngCore + CryptoRng>(
    pairs: &[(Vec<u8>, Vec<u8>)],
    choices: &[bool],
    rng: &mut R,
) -> Result<Vec<Vec<u8>>, OtError> {
    if pairs.len() != choices.len() {
        return Err(OtError::Batch {
            expected: pairs.len(),
            got: choices.len(),
        });
    }
    let (sender, ot1) = OtSender::new(rng);
    let (receiver, ot2) = OtReceiver::new(&ot1, choices, rng)?;
    let ot3 = sender.respond(&ot2, pairs)?;
    receiver.finish(&ot3)
}
