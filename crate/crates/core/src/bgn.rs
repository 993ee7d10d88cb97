//! Boneh–Goh–Nissim encryption over a composite-order pairing group.
//!
//! `Enc_G(a) = g^a·h^r` and `Enc_G1(a) = e(g,g)^a·e(g,h)^r`, where `h` has
//! order `q2`. Raising a ciphertext to `q1` kills the blinding term, leaving
//! a small discrete logarithm.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::dlog::{DlogSolver, SourceGroup, TargetGroup};
use crate::pairing::{
    self, CurveParams, FixedBase, FixedBaseTarget, GroupElement, GroupParams, PairingError,
    PairingGroup, TargetElement,
};

pub const TAG_G: u8 = 1;
pub const TAG_G1: u8 = 2;

#[derive(Debug, Error)]
pub enum BgnError {
    #[error(transparent)]
    Pairing(#[from] PairingError),
    #[error("ciphertexts belong to different groups")]
    GroupMismatch,
    #[error("plaintext {value} exceeds session bound {bound}")]
    PlaintextOutOfRange { value: u64, bound: u64 },
    #[error("plaintext not found within dlog bound {bound}")]
    PlaintextOutOfBound { bound: u64 },
    #[error("malformed ciphertext: {0}")]
    MalformedCiphertext(String),
    #[error("invalid key: {0}")]
    InvalidKey(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CiphertextG(pub GroupElement);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CiphertextG1(pub TargetElement);

/// A ciphertext tagged with its group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ciphertext {
    G(CiphertextG),
    G1(CiphertextG1),
}

pub type SolverG = DlogSolver<SourceGroup>;
pub type SolverG1 = DlogSolver<TargetGroup>;

#[derive(Clone)]
struct Tables {
    g: FixedBase,
    h: FixedBase,
    e_gg: FixedBaseTarget,
    e_gh: FixedBaseTarget,
}

/// `pk = (n, G, G1, e, g, h)` plus cached `e(g,g)`, `e(g,h)` and
/// fixed-base tables. Cloning is cheap.
#[derive(Clone)]
pub struct PublicKey {
    group: Arc<PairingGroup>,
    g: GroupElement,
    h: GroupElement,
    e_gg: TargetElement,
    e_gh: TargetElement,
    tables: Arc<Tables>,
    bound: u64,
}

/// The factor `q1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    pub q1: BigUint,
}

#[derive(Clone)]
pub struct KeyPair {
    pub params: CurveParams,
    pub pk: PublicKey,
    pub sk: SecretKey,
}

pub fn keygen<R: RngCore + CryptoRng>(lambda_bits: u32, rng: &mut R) -> Result<KeyPair, BgnError> {
    let params = pairing::generate_group(lambda_bits, rng)?;
    keygen_from_params(params, rng)
}

pub fn keygen_from_params<R: RngCore + CryptoRng>(
    params: CurveParams,
    rng: &mut R,
) -> Result<KeyPair, BgnError> {
    params.validate()?;
    let group = Arc::new(PairingGroup::new(&params.public())?);
    let g = group.random_subgroup_generator(Some((&params.q1, &params.q2)), rng);
    let h = loop {
        let r = group.random_scalar(rng);
        let h = group.scalar_mul(&group.scalar_mul(&g, &r), &params.q2);
        if !h.is_identity() {
            break h;
        }
    };
    let pk = PublicKey::new(group, g, h)?;
    Ok(KeyPair {
        sk: SecretKey {
            q1: params.q1.clone(),
        },
        params,
        pk,
    })
}

impl PublicKey {
    pub fn new(
        group: Arc<PairingGroup>,
        g: GroupElement,
        h: GroupElement,
    ) -> Result<Self, BgnError> {
        if g.is_identity() || !group.is_on_curve(&g) || !group.is_on_curve(&h) {
            return Err(BgnError::InvalidKey("generator not on curve".into()));
        }
        let e_gg = group.pairing(&g, &g);
        if group.gt_is_one(&e_gg) {
            return Err(BgnError::InvalidKey("degenerate generator".into()));
        }
        let e_gh = group.pairing(&g, &h);
        let tables = Tables {
            g: group.fixed_base(&g),
            h: group.fixed_base(&h),
            e_gg: group.fixed_base_target(&e_gg),
            e_gh: group.fixed_base_target(&e_gh),
        };
        Ok(Self {
            group,
            g,
            h,
            e_gg,
            e_gh,
            tables: Arc::new(tables),
            bound: u64::MAX,
        })
    }

    /// Copy of this key that refuses to encrypt plaintexts above `bound`.
    pub fn with_bound(&self, bound: u64) -> Self {
        Self {
            bound,
            ..self.clone()
        }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn group(&self) -> &Arc<PairingGroup> {
        &self.group
    }

    pub fn n(&self) -> &BigUint {
        self.group.order()
    }

    pub fn g(&self) -> &GroupElement {
        &self.g
    }

    pub fn h(&self) -> &GroupElement {
        &self.h
    }

    pub fn e_gg(&self) -> &TargetElement {
        &self.e_gg
    }

    pub fn e_gh(&self) -> &TargetElement {
        &self.e_gh
    }

    fn check(&self, a: u64) -> Result<(), BgnError> {
        if a > self.bound {
            return Err(BgnError::PlaintextOutOfRange {
                value: a,
                bound: self.bound,
            });
        }
        Ok(())
    }

    /// `g^a`, no blinding.
    pub fn g_pow(&self, a: &BigUint) -> GroupElement {
        self.group.fixed_base_mul(&self.tables.g, a)
    }

    /// `h^r`.
    pub fn h_pow(&self, r: &BigUint) -> GroupElement {
        self.group.fixed_base_mul(&self.tables.h, r)
    }

    /// `e(g,g)^a`.
    pub fn e_gg_pow(&self, a: &BigUint) -> TargetElement {
        self.group.fixed_base_target_pow(&self.tables.e_gg, a)
    }

    /// `e(g,h)^r`.
    pub fn e_gh_pow(&self, r: &BigUint) -> TargetElement {
        self.group.fixed_base_target_pow(&self.tables.e_gh, r)
    }

    pub fn encrypt_g<R: RngCore + CryptoRng>(
        &self,
        a: u64,
        rng: &mut R,
    ) -> Result<CiphertextG, BgnError> {
        self.check(a)?;
        let r = self.group.random_scalar(rng);
        Ok(self.encrypt_g_with(a, &r))
    }

    /// Deterministic encryption with caller-supplied blinding exponent.
    pub fn encrypt_g_with(&self, a: u64, r: &BigUint) -> CiphertextG {
        CiphertextG(self.group.fixed_base_mul2(
            &self.tables.g,
            &BigUint::from(a),
            &self.tables.h,
            r,
        ))
    }

    pub fn encrypt_g1<R: RngCore + CryptoRng>(
        &self,
        a: u64,
        rng: &mut R,
    ) -> Result<CiphertextG1, BgnError> {
        self.check(a)?;
        let r = self.group.random_scalar(rng);
        Ok(self.encrypt_g1_with(a, &r))
    }

    pub fn encrypt_g1_with(&self, a: u64, r: &BigUint) -> CiphertextG1 {
        let ea = self.e_gg_pow(&BigUint::from(a));
        CiphertextG1(self.group.gt_mul(&ea, &self.e_gh_pow(r)))
    }

    pub fn add_g(&self, a: &CiphertextG, b: &CiphertextG) -> CiphertextG {
        CiphertextG(self.group.add(&a.0, &b.0))
    }

    pub fn add_g1(&self, a: &CiphertextG1, b: &CiphertextG1) -> CiphertextG1 {
        CiphertextG1(self.group.gt_mul(&a.0, &b.0))
    }

    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, BgnError> {
        match (a, b) {
            (Ciphertext::G(x), Ciphertext::G(y)) => Ok(Ciphertext::G(self.add_g(x, y))),
            (Ciphertext::G1(x), Ciphertext::G1(y)) => Ok(Ciphertext::G1(self.add_g1(x, y))),
            _ => Err(BgnError::GroupMismatch),
        }
    }

    /// The single homomorphic multiplication, `e(c1, c2)`.
    pub fn multiply(&self, a: &CiphertextG, b: &CiphertextG) -> CiphertextG1 {
        CiphertextG1(self.group.pairing(&a.0, &b.0))
    }

    pub fn rerandomize<R: RngCore + CryptoRng>(&self, c: &Ciphertext, rng: &mut R) -> Ciphertext {
        let r = self.group.random_scalar(rng);
        match c {
            Ciphertext::G(x) => Ciphertext::G(CiphertextG(self.group.add(&x.0, &self.h_pow(&r)))),
            Ciphertext::G1(x) => {
                Ciphertext::G1(CiphertextG1(self.group.gt_mul(&x.0, &self.e_gh_pow(&r))))
            }
        }
    }

    // ------------------------------------------------------------ encoding

    pub fn ct_g_len(&self) -> usize {
        1 + self.group.g_len()
    }

    pub fn ct_g1_len(&self) -> usize {
        1 + self.group.gt_len()
    }

    pub fn write_ct_g(&self, c: &CiphertextG, out: &mut [u8]) {
        out[0] = TAG_G;
        self.group.write_g(&c.0, &mut out[1..self.ct_g_len()]);
    }

    pub fn write_ct_g1(&self, c: &CiphertextG1, out: &mut [u8]) {
        out[0] = TAG_G1;
        self.group.write_gt(&c.0, &mut out[1..self.ct_g1_len()]);
    }

    pub fn encode_ciphertext(&self, c: &Ciphertext) -> Vec<u8> {
        match c {
            Ciphertext::G(x) => {
                let mut out = vec![0; self.ct_g_len()];
                self.write_ct_g(x, &mut out);
                out
            }
            Ciphertext::G1(x) => {
                let mut out = vec![0; self.ct_g1_len()];
                self.write_ct_g1(x, &mut out);
                out
            }
        }
    }

    pub fn decode_ciphertext(&self, bytes: &[u8]) -> Result<Ciphertext, BgnError> {
        match bytes.first() {
            Some(&TAG_G) => self.decode_ct_g(bytes).map(Ciphertext::G),
            Some(&TAG_G1) => self.decode_ct_g1(bytes).map(Ciphertext::G1),
            Some(t) => Err(BgnError::MalformedCiphertext(format!(
                "unknown group tag {t}"
            ))),
            None => Err(BgnError::MalformedCiphertext("empty".into())),
        }
    }

    pub fn decode_ct_g(&self, bytes: &[u8]) -> Result<CiphertextG, BgnError> {
        match bytes.first() {
            Some(&TAG_G) => Ok(CiphertextG(self.group.decode_g(&bytes[1..])?)),
            Some(&TAG_G1) => Err(BgnError::GroupMismatch),
            _ => Err(BgnError::MalformedCiphertext("bad group tag".into())),
        }
    }

    pub fn decode_ct_g1(&self, bytes: &[u8]) -> Result<CiphertextG1, BgnError> {
        match bytes.first() {
            Some(&TAG_G1) => Ok(CiphertextG1(self.group.decode_gt(&bytes[1..])?)),
            Some(&TAG_G) => Err(BgnError::GroupMismatch),
            _ => Err(BgnError::MalformedCiphertext("bad group tag".into())),
        }
    }

    // ------------------------------------------------------------ key files

    pub fn to_text(&self) -> String {
        let mut s = String::from("# public key\n");
        self.group.params().write_text(&mut s);
        s.push_str(&format!(
            "g={}\n",
            pairing::encode_hex(&self.group.encode_g(&self.g))
        ));
        s.push_str(&format!(
            "h={}\n",
            pairing::encode_hex(&self.group.encode_g(&self.h))
        ));
        s
    }

    pub fn from_text(text: &str) -> Result<Self, BgnError> {
        let map = pairing::parse_key_values(text)?;
        let params = GroupParams::from_map(&map)?;
        let group = Arc::new(PairingGroup::new(&params)?);
        let g = group.decode_g(&pairing::hex_bytes(&map, "g")?)?;
        let h = group.decode_g(&pairing::hex_bytes(&map, "h")?)?;
        Self::new(group, g, h)
    }
}

impl SecretKey {
    pub fn solver_g(&self, pk: &PublicKey, bound: u64, bsgs: bool) -> SolverG {
        let base = pk.group.scalar_mul(&pk.g, &self.q1);
        DlogSolver::new(SourceGroup(pk.group.clone()), base, bound, bsgs)
    }

    pub fn solver_g1(&self, pk: &PublicKey, bound: u64, bsgs: bool) -> SolverG1 {
        let base = pk.group.gt_pow(&pk.e_gg, &self.q1);
        DlogSolver::new(TargetGroup(pk.group.clone()), base, bound, bsgs)
    }

    pub fn decrypt_g(
        &self,
        pk: &PublicKey,
        c: &CiphertextG,
        solver: &SolverG,
    ) -> Result<u64, BgnError> {
        let y = pk.group.scalar_mul(&c.0, &self.q1);
        solver.solve(&y).ok_or(BgnError::PlaintextOutOfBound {
            bound: solver.bound(),
        })
    }

    pub fn decrypt_g1(
        &self,
        pk: &PublicKey,
        c: &CiphertextG1,
        solver: &SolverG1,
    ) -> Result<u64, BgnError> {
        let y = pk.group.gt_pow(&c.0, &self.q1);
        solver.solve(&y).ok_or(BgnError::PlaintextOutOfBound {
            bound: solver.bound(),
        })
    }

    /// Checks that `pk` is consistent with this factor.
    pub fn matches(&self, pk: &PublicKey) -> bool {
        self.q1 > BigUint::one()
            && (pk.n() % &self.q1).is_zero()
            && pk.group.scalar_mul(&pk.h, &self.q1).is_identity()
    }

    pub fn to_text(&self) -> String {
        format!("# secret key\nq1={}\n", self.q1.to_str_radix(16))
    }

    pub fn from_text(text: &str) -> Result<Self, BgnError> {
        let map = pairing::parse_key_values(text)?;
        Ok(Self {
            q1: pairing::hex_field(&map, "q1")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn kp() -> (KeyPair, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        (keygen(32, &mut rng).unwrap(), rng)
    }

    #[test]
    fn key_invariants() {
        let (kp, _) = kp();
        let pk = &kp.pk;
        let group = pk.group();
        assert!(group.scalar_mul(pk.h(), &kp.sk.q1).is_identity());
        assert!(group.gt_is_one(&group.gt_pow(pk.e_gh(), &kp.sk.q1)));
        assert!(kp.sk.matches(pk));
    }

    #[test]
    fn encrypt_decrypt_and_homomorphisms() {
        let (kp, mut rng) = kp();
        let (pk, sk) = (&kp.pk, &kp.sk);
        let sg = sk.solver_g(pk, 500, false);
        let sg1 = sk.solver_g1(pk, 500, false);
        for i in 0..=500 {
            let c = pk.encrypt_g(i, &mut rng).unwrap();
            assert_eq!(sk.decrypt_g(pk, &c, &sg).unwrap(), i);
        }
        let c7 = pk.encrypt_g1(7, &mut rng).unwrap();
        assert_eq!(sk.decrypt_g1(pk, &c7, &sg1).unwrap(), 7);
        let two = pk.encrypt_g(2, &mut rng).unwrap();
        let three = pk.encrypt_g(3, &mut rng).unwrap();
        assert_eq!(sk.decrypt_g(pk, &pk.add_g(&two, &three), &sg).unwrap(), 5);
        assert_eq!(
            sk.decrypt_g1(pk, &pk.multiply(&two, &three), &sg1).unwrap(),
            6
        );
        let four = Ciphertext::G1(pk.encrypt_g1(4, &mut rng).unwrap());
        let re = pk.rerandomize(&four, &mut rng);
        assert_ne!(pk.encode_ciphertext(&re), pk.encode_ciphertext(&four));
        match re {
            Ciphertext::G1(c) => assert_eq!(sk.decrypt_g1(pk, &c, &sg1).unwrap(), 4),
            _ => unreachable!(),
        }
    }

    #[test]
    fn randomized_and_blinding_invariant() {
        let (kp, mut rng) = kp();
        let (pk, sk) = (&kp.pk, &kp.sk);
        let a = pk.encrypt_g(5, &mut rng).unwrap();
        let b = pk.encrypt_g(5, &mut rng).unwrap();
        assert_ne!(a, b);
        let sg = sk.solver_g(pk, 10, false);
        let t = pk.group().random_scalar(&mut rng);
        let blinded = CiphertextG(pk.group().add(&a.0, &pk.h_pow(&t)));
        assert_eq!(sk.decrypt_g(pk, &blinded, &sg).unwrap(), 5);
    }

    #[test]
    fn errors() {
        let (kp, mut rng) = kp();
        let pk = kp.pk.with_bound(10);
        assert!(matches!(
            pk.encrypt_g(11, &mut rng),
            Err(BgnError::PlaintextOutOfRange { .. })
        ));
        let g = Ciphertext::G(pk.encrypt_g(1, &mut rng).unwrap());
        let g1 = Ciphertext::G1(pk.encrypt_g1(1, &mut rng).unwrap());
        assert!(matches!(pk.add(&g, &g1), Err(BgnError::GroupMismatch)));
        let sg1 = kp.sk.solver_g1(&pk, 5, false);
        let big = pk.encrypt_g1(9, &mut rng).unwrap();
        assert!(matches!(
            kp.sk.decrypt_g1(&pk, &big, &sg1),
            Err(BgnError::PlaintextOutOfBound { .. })
        ));
    }

    #[test]
    fn ciphertext_and_key_encoding() {
        let (kp, mut rng) = kp();
        let pk = &kp.pk;
        for c in [
            Ciphertext::G(pk.encrypt_g(3, &mut rng).unwrap()),
            Ciphertext::G1(pk.encrypt_g1(3, &mut rng).unwrap()),
        ] {
            let bytes = pk.encode_ciphertext(&c);
            assert_eq!(pk.decode_ciphertext(&bytes).unwrap(), c);
        }
        let g_bytes = pk.encode_ciphertext(&Ciphertext::G(pk.encrypt_g(1, &mut rng).unwrap()));
        assert!(matches!(
            pk.decode_ct_g1(&g_bytes),
            Err(BgnError::GroupMismatch)
        ));
        let back = PublicKey::from_text(&pk.to_text()).unwrap();
        assert_eq!(back.g(), pk.g());
        assert_eq!(back.h(), pk.h());
        assert_eq!(SecretKey::from_text(&kp.sk.to_text()).unwrap(), kp.sk);
    }
}
