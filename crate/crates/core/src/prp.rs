//! Keyed permutations of `[0, N)`.
//!
//! [`PrpKey`] is a 4-round balanced Feistel network with HMAC-SHA256 round
//! functions and cycle-walking, evaluated pointwise. [`perm_generate`] is a
//! Fisher–Yates shuffle driven by an HMAC-SHA256 counter-mode stream.

use hmac::{Hmac, Mac};
use rand::{CryptoRng, RngCore};
use sha2::Sha256;
use thiserror::Error;

type HmacSha256 = Hmac<Sha256>;

/// Name of the keyed PRF, recorded in key files.
pub const PRF_NAME: &str = "hmac-sha256";
pub const KEY_LEN: usize = 32;
const ROUNDS: u8 = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrpError {
    #[error("identifier {id} outside domain [0, {n})")]
    Domain { id: u64, n: u64 },
    #[error("empty domain")]
    EmptyDomain,
}

#[derive(Clone, PartialEq, Eq)]
pub struct PrpKey {
    key: [u8; KEY_LEN],
    n: u64,
    half_bits: u32,
}

impl std::fmt::Debug for PrpKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrpKey")
            .field("n", &self.n)
            .finish_non_exhaustive()
    }
}

fn prf(key: &[u8], parts: &[&[u8]]) -> [u8; 32] {
    let mut mac = HmacSha256::new_from_slice(key).expect("hmac accepts any key length");
    for p in parts {
        mac.update(p);
    }
    mac.finalize().into_bytes().into()
}

impl PrpKey {
    pub fn new(key: [u8; KEY_LEN], n: u64) -> Result<Self, PrpError> {
        if n == 0 {
            return Err(PrpError::EmptyDomain);
        }
        let bits = (64 - (n - 1).leading_zeros()).max(2);
        let bits = bits + (bits & 1);
        Ok(Self {
            key,
            n,
            half_bits: bits / 2,
        })
    }

    pub fn random<R: RngCore + CryptoRng>(n: u64, rng: &mut R) -> Result<Self, PrpError> {
        let mut key = [0u8; KEY_LEN];
        rng.fill_bytes(&mut key);
        Self::new(key, n)
    }

    pub fn key(&self) -> &[u8; KEY_LEN] {
        &self.key
    }

    pub fn domain(&self) -> u64 {
        self.n
    }

    fn round(&self, r: u8, x: u64) -> u64 {
        let out = prf(&self.key, &[b"feistel", &[r], &x.to_be_bytes()]);
        u64::from_be_bytes(out[..8].try_into().unwrap()) & self.mask()
    }

    fn mask(&self) -> u64 {
        (1u64 << self.half_bits) - 1
    }

    fn encrypt_block(&self, x: u64) -> u64 {
        let (mut l, mut r) = (x >> self.half_bits, x & self.mask());
        for round in 0..ROUNDS {
            (l, r) = (r, l ^ self.round(round, r));
        }
        (l << self.half_bits) | r
    }

    fn decrypt_block(&self, y: u64) -> u64 {
        let (mut l, mut r) = (y >> self.half_bits, y & self.mask());
        for round in (0..ROUNDS).rev() {
            (l, r) = (r ^ self.round(round, l), l);
        }
        (l << self.half_bits) | r
    }

    pub fn apply(&self, id: u64) -> Result<u64, PrpError> {
        if id >= self.n {
            return Err(PrpError::Domain { id, n: self.n });
        }
        let mut y = self.encrypt_block(id);
        while y >= self.n {
            y = self.encrypt_block(y);
        }
        Ok(y)
    }

    pub fn invert(&self, pos: u64) -> Result<u64, PrpError> {
        if pos >= self.n {
            return Err(PrpError::Domain { id: pos, n: self.n });
        }
        let mut x = self.decrypt_block(pos);
        while x >= self.n {
            x = self.decrypt_block(x);
        }
        Ok(x)
    }
}

/// Per-query permutation seed `s`.
pub type PermSeed = [u8; KEY_LEN];

pub fn random_seed<R: RngCore + CryptoRng>(rng: &mut R) -> PermSeed {
    let mut s = [0u8; KEY_LEN];
    rng.fill_bytes(&mut s);
    s
}

struct Stream<'a> {
    seed: &'a [u8],
    counter: u64,
    block: [u8; 32],
    used: usize,
}

impl Stream<'_> {
    fn next_u64(&mut self) -> u64 {
        if self.used == 32 {
            self.block = prf(self.seed, &[b"shuffle", &self.counter.to_be_bytes()]);
            self.counter += 1;
            self.used = 0;
        }
        let v = u64::from_be_bytes(self.block[self.used..self.used + 8].try_into().unwrap());
        self.used += 8;
        v
    }

    /// Uniform in `[0, bound)` by rejection.
    fn below(&mut self, bound: u64) -> u64 {
        let zone = (1u128 << 64) / bound as u128 * bound as u128;
        loop {
            let x = self.next_u64();
            if (x as u128) < zone {
                return x % bound;
            }
        }
    }
}

/// The permutation `π_s` of `[0, n)` as an array: position `j` holds `π_s(j)`.
pub fn perm_generate(seed: &PermSeed, n: usize) -> Vec<u32> {
    let mut perm: Vec<u32> = (0..n as u32).collect();
    let mut stream = Stream {
        seed,
        counter: 0,
        block: [0; 32],
        used: 32,
    };
    for i in (1..n).rev() {
        let j = stream.below(i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    perm
}

pub fn perm_invert(perm: &[u32]) -> Vec<u32> {
    let mut inv = vec![0u32; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p as usize] = i as u32;
    }
    inv
}

/// Applies `π` to a vector: `out[j] = v[perm[j]]`.
pub fn permute<T: Clone>(perm: &[u32], v: &[T]) -> Vec<T> {
    perm.iter().map(|&p| v[p as usize].clone()).collect()
}
