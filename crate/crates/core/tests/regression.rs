//! Frozen vectors for a pinned seed, checked against an affine-arithmetic
//! oracle on plain big integers.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use slp_core::bgn::PublicKey;
use slp_core::pairing::GroupElement;
use slp_core::protocol::client::make_trapdoor;
use slp_core::protocol::{ClientKeys, QueryKind};
use slp_core::prp::perm_generate;

const PINNED_SEED: u64 = 0x51a7;

const PINNED_BUNDLE: &str = "\
# public key
p=1d87d9490f
l=50
n=5e7f841d
g=0413290223c7058ceb6cb1
h=041849a273080c9670f5a1
q1=8ba3
q2=ad3f
prf=hmac-sha256
k_perm=296c384e155705b9bf38fd5b62ac9081bf26526c1ee0d2b1a82e58edabb4d4f7
";

type Pt = Option<(BigUint, BigUint)>;

struct Oracle {
    p: BigUint,
}

impl Oracle {
    fn inv(&self, a: &BigUint) -> BigUint {
        a.modpow(&(&self.p - 2u8), &self.p)
    }

    fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a + &self.p - b % &self.p) % &self.p
    }

    fn on_curve(&self, q: &Pt) -> bool {
        q.as_ref()
            .is_none_or(|(x, y)| (y * y) % &self.p == (x * x * x + x) % &self.p)
    }

    fn add(&self, a: &Pt, b: &Pt) -> Pt {
        let ((x1, y1), (x2, y2)) = match (a, b) {
            (None, _) => return b.clone(),
            (_, None) => return a.clone(),
            (Some(a), Some(b)) => (a, b),
        };
        let p = &self.p;
        let lam = if x1 == x2 {
            if ((y1 + y2) % p).is_zero() {
                return None;
            }
            (BigUint::from(3u8) * x1 * x1 + 1u8) * self.inv(&(BigUint::from(2u8) * y1)) % p
        } else {
            self.sub(y2, y1) * self.inv(&self.sub(x2, x1)) % p
        };
        let x3 = self.sub(&self.sub(&(&lam * &lam % p), x1), x2);
        let y3 = self.sub(&(&lam * self.sub(x1, &x3) % p), y1);
        Some((x3, y3))
    }

    fn mul(&self, q: &Pt, k: &BigUint) -> Pt {
        let mut acc = None;
        for i in (0..k.bits()).rev() {
            acc = self.add(&acc, &acc);
            if k.bit(i) {
                acc = self.add(&acc, q);
            }
        }
        acc
    }
}

fn to_pt(pk: &PublicKey, e: &GroupElement) -> Pt {
    let f = pk.group().field();
    match e {
        GroupElement::Identity => None,
        GroupElement::Affine { x, y } => Some((f.to_biguint(x), f.to_biguint(y))),
    }
}

fn pinned() -> (ClientKeys, ChaCha20Rng) {
    let mut rng = ChaCha20Rng::seed_from_u64(PINNED_SEED);
    (ClientKeys::generate(16, &mut rng).unwrap(), rng)
}

#[test]
fn pinned_key_bundle() {
    let (keys, _) = pinned();
    assert_eq!(keys.to_text(), PINNED_BUNDLE);
    let back = ClientKeys::from_text(PINNED_BUNDLE).unwrap();
    assert_eq!(back.to_text(), PINNED_BUNDLE);

    let pk = keys.pk();
    let params = &keys.keypair.params;
    let o = Oracle {
        p: params.p.clone(),
    };
    assert_eq!(&params.q1 * &params.q2, params.n);
    assert_eq!(&params.l * &params.n - 1u8, params.p);
    assert_eq!(&params.p % 4u8, BigUint::from(3u8));
    let (g, h) = (to_pt(pk, pk.g()), to_pt(pk, pk.h()));
    assert!(o.on_curve(&g) && o.on_curve(&h));
    assert!(o.mul(&g, &params.n).is_none());
    assert!(o.mul(&g, &params.q1).is_some() && o.mul(&g, &params.q2).is_some());
    assert!(h.is_some() && o.mul(&h, &params.q1).is_none());
}

#[test]
fn pinned_trapdoor() {
    let (keys, mut rng) = pinned();
    let td = make_trapdoor(&keys, 16, 3, QueryKind::LinkPrediction, 0, &mut rng).unwrap();
    let f = keys.prp(16).unwrap();
    let image: Vec<u64> = (0..16).map(|i| f.apply(i).unwrap()).collect();
    assert_eq!(
        image,
        [12, 1, 15, 8, 11, 6, 5, 2, 10, 7, 9, 3, 0, 13, 14, 4]
    );
    assert_eq!(td.row, 8);
    assert_eq!(
        perm_generate(&td.seed, 16),
        [13, 9, 2, 5, 15, 12, 0, 8, 6, 11, 4, 10, 3, 1, 14, 7]
    );
    let wire = td.encode();
    assert_eq!(wire.len(), 41);
    assert_eq!(&wire[..5], &[0, 0, 0, 0, 8]);
    assert_eq!(
        &wire[5..37],
        &[
            0xfd, 0xf7, 0xdc, 0x70, 0x47, 0xe0, 0x14, 0x63, 0x05, 0xa1, 0x55, 0x20, 0x3d, 0x11,
            0x86, 0xfb, 0x83, 0x55, 0xd8, 0xbd, 0xc9, 0xd1, 0xb0, 0x89, 0x88, 0x04, 0x55, 0x63,
            0x20, 0x2c, 0xdc, 0x35
        ]
    );
    assert_eq!(&wire[37..], &[0, 0, 0, 0]);
}

#[test]
fn encryption_matches_the_curve_oracle() {
    let (keys, _) = pinned();
    let pk = keys.pk();
    let o = Oracle {
        p: keys.keypair.params.p.clone(),
    };
    let (g, h) = (to_pt(pk, pk.g()), to_pt(pk, pk.h()));
    for (a, r) in [(0u64, 1u64), (1, 0), (1, 12345), (7, 99_991), (0, 0)] {
        let r = BigUint::from(r);
        let ct = pk.encrypt_g_with(a, &r);
        let want = o.add(&o.mul(&g, &BigUint::from(a)), &o.mul(&h, &r));
        assert_eq!(to_pt(pk, &ct.0), want, "a={a} r={r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bilinear_in_both_arguments(a in 0u64..1 << 40, b in 0u64..1 << 40) {
        let (keys, _) = pinned();
        let pk = keys.pk();
        let group = pk.group();
        let (a, b) = (BigUint::from(a), BigUint::from(b));
        let lhs = group.pairing(&group.scalar_mul(pk.g(), &a), &group.scalar_mul(pk.h(), &b));
        let rhs = group.gt_pow(&group.pairing(pk.g(), pk.h()), &(&a * &b));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn homomorphic_sum_and_product(a in 0u64..40, b in 0u64..40, c in 0u64..40) {
        let (keys, mut rng) = pinned();
        let (pk, sk) = (keys.pk(), keys.sk());
        let sg = sk.solver_g(pk, 80, false);
        let sg1 = sk.solver_g1(pk, 40 * 40 + 40, false);
        let (ea, eb) = (pk.encrypt_g(a, &mut rng).unwrap(), pk.encrypt_g(b, &mut rng).unwrap());
        prop_assert_eq!(sk.decrypt_g(pk, &pk.add_g(&ea, &eb), &sg).unwrap(), a + b);
        let prod = pk.add_g1(&pk.multiply(&ea, &eb), &pk.encrypt_g1(c, &mut rng).unwrap());
        prop_assert_eq!(sk.decrypt_g1(pk, &prod, &sg1).unwrap(), a * b + c);
    }
}

#[test]
fn identity_encodings() {
    let (keys, _) = pinned();
    let pk = keys.pk();
    let group = pk.group();
    assert!(group.scalar_mul(pk.g(), &BigUint::zero()).is_identity());
    assert_eq!(group.scalar_mul(pk.g(), &BigUint::one()), *pk.g());
    assert!(group.gt_is_one(&group.pairing(&GroupElement::Identity, pk.g())));
}
