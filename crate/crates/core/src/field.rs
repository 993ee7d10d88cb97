//! Prime-field and quadratic-extension arithmetic with a runtime modulus.
//!
//! Elements are kept in Montgomery form inside a fixed-capacity limb array so
//! they stay `Copy` and allocation-free; only the low `len` limbs are used and
//! the rest are always zero. The capacity bounds the supported modulus size,
//! not its precision: any odd prime below `2^(64 * MAX_LIMBS)` works.

#![allow(clippy::needless_range_loop)]

use num_bigint::BigUint;
use num_traits::One;

/// Largest supported modulus, in 64-bit limbs (768 bits).
pub const MAX_LIMBS: usize = 12;

/// An element of F_p in Montgomery representation.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp([u64; MAX_LIMBS]);

impl std::fmt::Debug for Fp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fp(")?;
        for limb in self.0.iter().rev().skip_while(|l| **l == 0) {
            write!(f, "{limb:016x}")?;
        }
        write!(f, ")")
    }
}

/// An element `c0 + c1·i` of F_{p²} = F_p[i]/(i² + 1).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Fp2 {
    pub c0: Fp,
    pub c1: Fp,
}

/// The field F_p together with its Montgomery constants.
#[derive(Clone, Debug)]
pub struct PrimeField {
    modulus: BigUint,
    p: [u64; MAX_LIMBS],
    len: usize,
    /// -p^{-1} mod 2^64
    inv: u64,
    r2: Fp,
    one: Fp,
    byte_len: usize,
    p_minus_2: Vec<u64>,
    sqrt_exp: Vec<u64>,
}

#[inline(always)]
fn mac(acc: u64, a: u64, b: u64, carry: u64) -> (u64, u64) {
    let t = (acc as u128) + (a as u128) * (b as u128) + (carry as u128);
    (t as u64, (t >> 64) as u64)
}

#[inline(always)]
fn adc(a: u64, b: u64, carry: u64) -> (u64, u64) {
    let t = (a as u128) + (b as u128) + (carry as u128);
    (t as u64, (t >> 64) as u64)
}

#[inline(always)]
fn sbb(a: u64, b: u64, borrow: u64) -> (u64, u64) {
    let t = (a as u128).wrapping_sub((b as u128) + (borrow as u128));
    (t as u64, ((t >> 64) as u64) & 1)
}

fn limbs_of(x: &BigUint) -> [u64; MAX_LIMBS] {
    let mut out = [0u64; MAX_LIMBS];
    for (i, d) in x.to_u64_digits().into_iter().enumerate() {
        out[i] = d;
    }
    out
}

impl PrimeField {
    /// Builds the field for an odd modulus `p > 3`. Returns `None` when the
    /// modulus is even, too small, or exceeds the limb capacity.
    pub fn new(modulus: &BigUint) -> Option<Self> {
        if modulus.bits() < 3 || modulus.bits() > (64 * MAX_LIMBS) as u64 || !modulus.bit(0) {
            return None;
        }
        let len = modulus.to_u64_digits().len();
        let p = limbs_of(modulus);
        // Newton iteration for p0^{-1} mod 2^64.
        let mut inv = 1u64;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p[0].wrapping_mul(inv)));
        }
        let inv = inv.wrapping_neg();
        let r = BigUint::one() << (64 * len);
        let r2 = (&r * &r) % modulus;
        let one = r % modulus;
        let byte_len = (modulus.bits() as usize).div_ceil(8);
        Some(Self {
            modulus: modulus.clone(),
            p,
            len,
            inv,
            r2: Fp(limbs_of(&r2)),
            one: Fp(limbs_of(&one)),
            byte_len,
            p_minus_2: (modulus - 2u32).to_u64_digits(),
            sqrt_exp: ((modulus + 1u32) >> 2usize).to_u64_digits(),
        })
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    /// Width of the fixed big-endian encoding of one element.
    pub fn byte_len(&self) -> usize {
        self.byte_len
    }

    pub fn zero(&self) -> Fp {
        Fp([0; MAX_LIMBS])
    }

    pub fn one(&self) -> Fp {
        self.one
    }

    pub fn is_zero(&self, a: &Fp) -> bool {
        a.0.iter().all(|l| *l == 0)
    }

    fn geq_p(&self, a: &[u64; MAX_LIMBS]) -> bool {
        for i in (0..self.len).rev() {
            if a[i] != self.p[i] {
                return a[i] > self.p[i];
            }
        }
        true
    }

    fn sub_p(&self, a: &mut [u64; MAX_LIMBS]) {
        let mut borrow = 0;
        for i in 0..self.len {
            let (d, b) = sbb(a[i], self.p[i], borrow);
            a[i] = d;
            borrow = b;
        }
    }

    pub fn add(&self, a: &Fp, b: &Fp) -> Fp {
        let mut out = [0u64; MAX_LIMBS];
        let mut carry = 0;
        for i in 0..self.len {
            let (s, c) = adc(a.0[i], b.0[i], carry);
            out[i] = s;
            carry = c;
        }
        if carry != 0 || self.geq_p(&out) {
            self.sub_p(&mut out);
        }
        Fp(out)
    }

    pub fn sub(&self, a: &Fp, b: &Fp) -> Fp {
        let mut out = [0u64; MAX_LIMBS];
        let mut borrow = 0;
        for i in 0..self.len {
            let (d, br) = sbb(a.0[i], b.0[i], borrow);
            out[i] = d;
            borrow = br;
        }
        if borrow != 0 {
            let mut carry = 0;
            for i in 0..self.len {
                let (s, c) = adc(out[i], self.p[i], carry);
                out[i] = s;
                carry = c;
            }
        }
        Fp(out)
    }

    pub fn neg(&self, a: &Fp) -> Fp {
        if self.is_zero(a) {
            *a
        } else {
            self.sub(&Fp(self.p), a)
        }
    }

    pub fn double(&self, a: &Fp) -> Fp {
        self.add(a, a)
    }

    /// Montgomery product (CIOS).
    pub fn mul(&self, a: &Fp, b: &Fp) -> Fp {
        let n = self.len;
        let mut t = [0u64; MAX_LIMBS + 2];
        for i in 0..n {
            let mut carry = 0;
            for j in 0..n {
                let (lo, hi) = mac(t[j], a.0[j], b.0[i], carry);
                t[j] = lo;
                carry = hi;
            }
            let (s, c) = adc(t[n], carry, 0);
            t[n] = s;
            t[n + 1] = c;

            let m = t[0].wrapping_mul(self.inv);
            let (_, mut carry) = mac(t[0], m, self.p[0], 0);
            for j in 1..n {
                let (lo, hi) = mac(t[j], m, self.p[j], carry);
                t[j - 1] = lo;
                carry = hi;
            }
            let (s, c) = adc(t[n], carry, 0);
            t[n - 1] = s;
            t[n] = t[n + 1] + c;
        }
        let mut out = [0u64; MAX_LIMBS];
        out[..n].copy_from_slice(&t[..n]);
        if t[n] != 0 || self.geq_p(&out) {
            self.sub_p(&mut out);
        }
        Fp(out)
    }

    pub fn square(&self, a: &Fp) -> Fp {
        self.mul(a, a)
    }

    /// Exponentiation by a little-endian limb exponent.
    pub fn pow_limbs(&self, a: &Fp, exp: &[u64]) -> Fp {
        let mut acc = self.one;
        for limb in exp.iter().rev() {
            for bit in (0..64).rev() {
                acc = self.square(&acc);
                if (limb >> bit) & 1 == 1 {
                    acc = self.mul(&acc, a);
                }
            }
        }
        acc
    }

    /// Multiplicative inverse via Fermat; `None` for zero.
    pub fn inv(&self, a: &Fp) -> Option<Fp> {
        if self.is_zero(a) {
            return None;
        }
        Some(self.pow_limbs(a, &self.p_minus_2))
    }

    /// Square root for `p ≡ 3 (mod 4)`; `None` if `a` is a non-residue.
    pub fn sqrt(&self, a: &Fp) -> Option<Fp> {
        let r = self.pow_limbs(a, &self.sqrt_exp);
        (self.square(&r) == *a).then_some(r)
    }

    /// Montgomery's batch inversion. Zero entries are left untouched.
    pub fn batch_inv(&self, values: &mut [Fp]) {
        let mut prefix = Vec::with_capacity(values.len());
        let mut acc = self.one;
        for v in values.iter() {
            prefix.push(acc);
            if !self.is_zero(v) {
                acc = self.mul(&acc, v);
            }
        }
        let mut inv = match self.inv(&acc) {
            Some(i) => i,
            None => return,
        };
        for (v, pre) in values.iter_mut().zip(prefix).rev() {
            if self.is_zero(v) {
                continue;
            }
            let next = self.mul(&inv, v);
            *v = self.mul(&inv, &pre);
            inv = next;
        }
    }

    pub fn from_u64(&self, x: u64) -> Fp {
        self.from_biguint(&BigUint::from(x))
    }

    /// Converts an integer (reduced mod p) into Montgomery form.
    pub fn from_biguint(&self, x: &BigUint) -> Fp {
        let reduced = if x >= &self.modulus {
            x % &self.modulus
        } else {
            x.clone()
        };
        self.mul(&Fp(limbs_of(&reduced)), &self.r2)
    }

    pub fn to_biguint(&self, a: &Fp) -> BigUint {
        let mut unit = [0u64; MAX_LIMBS];
        unit[0] = 1;
        let plain = self.mul(a, &Fp(unit));
        let digits: Vec<u32> = plain.0[..self.len]
            .iter()
            .flat_map(|l| [*l as u32, (*l >> 32) as u32])
            .collect();
        BigUint::new(digits)
    }

    /// Fixed-width big-endian encoding.
    pub fn to_bytes(&self, a: &Fp) -> Vec<u8> {
        let mut out = vec![0u8; self.byte_len];
        self.write_bytes(a, &mut out);
        out
    }

    pub fn write_bytes(&self, a: &Fp, out: &mut [u8]) {
        let be = self.to_biguint(a).to_bytes_be();
        let pad = self.byte_len - be.len();
        out[..pad].fill(0);
        out[pad..self.byte_len].copy_from_slice(&be);
    }

    /// Parses a fixed-width encoding; rejects values `>= p`.
    pub fn from_bytes(&self, bytes: &[u8]) -> Option<Fp> {
        if bytes.len() != self.byte_len {
            return None;
        }
        let x = BigUint::from_bytes_be(bytes);
        (x < self.modulus).then(|| self.from_biguint(&x))
    }

    // ---- F_{p^2} ----

    pub fn fp2_one(&self) -> Fp2 {
        Fp2 {
            c0: self.one,
            c1: self.zero(),
        }
    }

    pub fn fp2_mul(&self, a: &Fp2, b: &Fp2) -> Fp2 {
        // Karatsuba: (a0 + a1 i)(b0 + b1 i) with i^2 = -1
        let v0 = self.mul(&a.c0, &b.c0);
        let v1 = self.mul(&a.c1, &b.c1);
        let s = self.mul(&self.add(&a.c0, &a.c1), &self.add(&b.c0, &b.c1));
        Fp2 {
            c0: self.sub(&v0, &v1),
            c1: self.sub(&self.sub(&s, &v0), &v1),
        }
    }

    pub fn fp2_square(&self, a: &Fp2) -> Fp2 {
        // (a0 + a1)(a0 - a1) + 2 a0 a1 i
        let c0 = self.mul(&self.add(&a.c0, &a.c1), &self.sub(&a.c0, &a.c1));
        let c1 = self.double(&self.mul(&a.c0, &a.c1));
        Fp2 { c0, c1 }
    }

    pub fn fp2_conj(&self, a: &Fp2) -> Fp2 {
        Fp2 {
            c0: a.c0,
            c1: self.neg(&a.c1),
        }
    }

    pub fn fp2_inv(&self, a: &Fp2) -> Option<Fp2> {
        let norm = self.add(&self.square(&a.c0), &self.square(&a.c1));
        let ninv = self.inv(&norm)?;
        Some(Fp2 {
            c0: self.mul(&a.c0, &ninv),
            c1: self.neg(&self.mul(&a.c1, &ninv)),
        })
    }

    pub fn fp2_pow(&self, a: &Fp2, exp: &BigUint) -> Fp2 {
        let mut acc = self.fp2_one();
        let bits = exp.bits();
        for i in (0..bits).rev() {
            acc = self.fp2_square(&acc);
            if exp.bit(i) {
                acc = self.fp2_mul(&acc, a);
            }
        }
        acc
    }

    pub fn fp2_is_one(&self, a: &Fp2) -> bool {
        a.c0 == self.one && self.is_zero(&a.c1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field() -> PrimeField {
        // 2^127 - 1 is prime and ≡ 3 mod 4
        let p = (BigUint::one() << 127) - 1u32;
        PrimeField::new(&p).unwrap()
    }

    #[test]
    fn rejects_even_modulus() {
        assert!(PrimeField::new(&BigUint::from(100u32)).is_none());
    }

    #[test]
    fn inverse_and_sqrt() {
        let f = field();
        let a = f.from_u64(123_456_789);
        let ai = f.inv(&a).unwrap();
        assert_eq!(f.mul(&a, &ai), f.one());
        let sq = f.square(&a);
        let r = f.sqrt(&sq).unwrap();
        assert!(r == a || r == f.neg(&a));
        assert!(f.inv(&f.zero()).is_none());
    }

    #[test]
    fn batch_inverse_matches_single() {
        let f = field();
        let mut vals: Vec<Fp> = (1..20u64).map(|x| f.from_u64(x * 7919)).collect();
        vals.insert(3, f.zero());
        let expected: Vec<Fp> = vals.iter().map(|v| f.inv(v).unwrap_or(f.zero())).collect();
        f.batch_inv(&mut vals);
        assert_eq!(vals, expected);
    }

    proptest! {
        #[test]
        fn mul_matches_biguint(a in any::<u128>(), b in any::<u128>()) {
            let f = field();
            let (x, y) = (BigUint::from(a), BigUint::from(b));
            let got = f.to_biguint(&f.mul(&f.from_biguint(&x), &f.from_biguint(&y)));
            prop_assert_eq!(got, (&x * &y) % f.modulus());
        }

        #[test]
        fn add_sub_match_biguint(a in any::<u128>(), b in any::<u128>()) {
            let f = field();
            let p = f.modulus().clone();
            let (x, y) = (BigUint::from(a) % &p, BigUint::from(b) % &p);
            let (fx, fy) = (f.from_biguint(&x), f.from_biguint(&y));
            prop_assert_eq!(f.to_biguint(&f.add(&fx, &fy)), (&x + &y) % &p);
            prop_assert_eq!(f.to_biguint(&f.sub(&fx, &fy)), (&x + &p - &y) % &p);
        }

        #[test]
        fn bytes_round_trip(a in any::<u128>()) {
            let f = field();
            let x = f.from_biguint(&BigUint::from(a));
            prop_assert_eq!(f.from_bytes(&f.to_bytes(&x)), Some(x));
        }
    }

    #[test]
    fn two_limb_modulus_full_top_limb() {
        // modulus with a saturated top limb exercises the extra carry word
        let p = BigUint::parse_bytes(b"fffffffffffffffffffffffffffffe5f", 16).unwrap();
        let f = PrimeField::new(&p).unwrap();
        let a = f.from_biguint(&(&p - 1u32));
        assert_eq!(f.to_biguint(&f.mul(&a, &a)), BigUint::one());
    }
}
