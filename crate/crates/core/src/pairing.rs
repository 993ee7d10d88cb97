//! Composite-order pairing group on the supersingular curve `y² = x³ + x`.
//!
//! For a prime `p ≡ 3 (mod 4)` the curve has `p + 1` points over F_p and
//! embedding degree 2. Parameters are chosen so that `p + 1 = l·n` with
//! `n = q1·q2`; the source group G is the order-n subgroup and the target
//! group G1 is the order-n subgroup of F_{p²}^*. The pairing is the reduced
//! Tate pairing composed with the distortion map `(x, y) ↦ (−x, i·y)`.

use std::collections::BTreeMap;

use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::{CryptoRng, Rng, RngCore};
use thiserror::Error;

use crate::field::{Fp, Fp2, PrimeField, MAX_LIMBS};

/// Smallest accepted prime size. Anything below is a toy.
pub const MIN_LAMBDA_BITS: u32 = 8;
/// Default cofactor search budget used by [`generate_group`].
pub const DEFAULT_COFACTOR_BUDGET: u32 = 100_000;

const TAG_IDENTITY: u8 = 0x00;
const TAG_AFFINE: u8 = 0x04;

#[derive(Debug, Error)]
pub enum PairingError {
    #[error("parameter search exhausted after {attempts} cofactor candidates")]
    ParameterSearchExhausted { attempts: u32 },
    #[error("lambda_bits must be in [{min}, {max}], got {got}")]
    InvalidLambda { got: u32, min: u32, max: u32 },
    #[error("invalid curve parameters: {0}")]
    InvalidParameters(String),
    #[error("malformed element: {0}")]
    MalformedElement(String),
}

/// Full parameter set, including the secret factorization of `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveParams {
    pub p: BigUint,
    pub q1: BigUint,
    pub q2: BigUint,
    pub n: BigUint,
    pub l: BigUint,
}

/// The public part of [`CurveParams`]: everything except `q1` and `q2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupParams {
    pub p: BigUint,
    pub n: BigUint,
    pub l: BigUint,
}

fn is_prime(x: &BigUint) -> bool {
    num_prime::nt_funcs::is_prime(x, None).probably()
}

fn random_prime<R: RngCore + CryptoRng>(bits: u32, rng: &mut R) -> BigUint {
    loop {
        let mut c = rng.gen_biguint(bits as u64);
        c.set_bit(bits as u64 - 1, true);
        c.set_bit(0, true);
        if is_prime(&c) {
            return c;
        }
    }
}

fn max_lambda_bits() -> u32 {
    // 2λ bits for n plus headroom for the cofactor
    ((64 * MAX_LIMBS) as u32 - 32) / 2
}

/// Generates type-A1 style parameters with two `lambda_bits`-bit primes.
pub fn generate_group<R: RngCore + CryptoRng>(
    lambda_bits: u32,
    rng: &mut R,
) -> Result<CurveParams, PairingError> {
    generate_group_with_budget(lambda_bits, DEFAULT_COFACTOR_BUDGET, rng)
}

/// Like [`generate_group`] but with an explicit bound on how many cofactor
/// candidates `l = 4, 8, 12, …` are tried before giving up.
pub fn generate_group_with_budget<R: RngCore + CryptoRng>(
    lambda_bits: u32,
    budget: u32,
    rng: &mut R,
) -> Result<CurveParams, PairingError> {
    let max = max_lambda_bits();
    if !(MIN_LAMBDA_BITS..=max).contains(&lambda_bits) {
        return Err(PairingError::InvalidLambda {
            got: lambda_bits,
            min: MIN_LAMBDA_BITS,
            max,
        });
    }
    let q1 = random_prime(lambda_bits, rng);
    let q2 = loop {
        let q = random_prime(lambda_bits, rng);
        if q != q1 {
            break q;
        }
    };
    let n = &q1 * &q2;
    // l must be a multiple of 4 so that p = l·n − 1 ≡ 3 (mod 4)
    let mut l = BigUint::from(4u32);
    for _ in 0..budget {
        let p = &l * &n - 1u32;
        if is_prime(&p) {
            return Ok(CurveParams { p, q1, q2, n, l });
        }
        l += 4u32;
    }
    Err(PairingError::ParameterSearchExhausted { attempts: budget })
}

impl CurveParams {
    pub fn public(&self) -> GroupParams {
        GroupParams {
            p: self.p.clone(),
            n: self.n.clone(),
            l: self.l.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), PairingError> {
        self.public().validate()?;
        if &self.q1 * &self.q2 != self.n {
            return Err(PairingError::InvalidParameters("n != q1*q2".into()));
        }
        if !is_prime(&self.q1) || !is_prime(&self.q2) {
            return Err(PairingError::InvalidParameters(
                "q1 and q2 must be prime".into(),
            ));
        }
        Ok(())
    }
}

impl GroupParams {
    pub fn validate(&self) -> Result<(), PairingError> {
        let bad = |m: &str| Err(PairingError::InvalidParameters(m.into()));
        if &self.p % 4u32 != BigUint::from(3u32) {
            return bad("p must be 3 mod 4");
        }
        if &self.l * &self.n != &self.p + 1u32 {
            return bad("l*n must equal p+1");
        }
        if !is_prime(&self.p) {
            return bad("p must be prime");
        }
        if self.p.bits() > (64 * MAX_LIMBS) as u64 {
            return bad("p exceeds supported width");
        }
        Ok(())
    }
}

/// A point of the order-n subgroup, in affine coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupElement {
    Identity,
    Affine { x: Fp, y: Fp },
}

impl GroupElement {
    pub fn is_identity(&self) -> bool {
        matches!(self, GroupElement::Identity)
    }
}

/// An element of the target group, `a + b·i ∈ F_{p²}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TargetElement(pub Fp2);

#[derive(Clone, Copy)]
struct Jacobian {
    x: Fp,
    y: Fp,
    z: Fp,
}

/// Precomputed Miller-loop lines for a fixed first pairing argument.
#[derive(Clone, Debug)]
pub struct PreparedPoint {
    // one entry per loop bit: the doubling line, then the optional addition line
    steps: Vec<(Line, Option<Line>)>,
}

#[derive(Clone, Copy, Debug)]
#[allow(clippy::large_enum_variant)]
enum Line {
    /// Vertical or trivial line: its value lies in F_p and is erased by the
    /// final exponentiation.
    Trivial,
    /// `y − y_t − λ(x − x_t)`
    Slope { lambda: Fp, x: Fp, y: Fp },
}

/// Affine multiples `[2^j]P` for fast fixed-base scalar multiplication.
#[derive(Clone, Debug)]
pub struct FixedBase {
    powers: Vec<GroupElement>,
}

/// Powers `x^(2^j)` for fast fixed-base target-group exponentiation.
#[derive(Clone, Debug)]
pub struct FixedBaseTarget {
    powers: Vec<TargetElement>,
}

/// Group context: field, curve constants and the pairing.
#[derive(Clone, Debug)]
pub struct PairingGroup {
    params: GroupParams,
    field: PrimeField,
    n_bits: Vec<bool>,
}

impl PairingGroup {
    pub fn new(params: &GroupParams) -> Result<Self, PairingError> {
        params.validate()?;
        let field = PrimeField::new(&params.p)
            .ok_or_else(|| PairingError::InvalidParameters("unsupported modulus".into()))?;
        let bits = params.n.bits();
        let n_bits = (0..bits).rev().map(|i| params.n.bit(i)).collect();
        Ok(Self {
            params: params.clone(),
            field,
            n_bits,
        })
    }

    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn order(&self) -> &BigUint {
        &self.params.n
    }

    // ---------------------------------------------------------------- G

    pub fn identity(&self) -> GroupElement {
        GroupElement::Identity
    }

    pub fn is_on_curve(&self, p: &GroupElement) -> bool {
        match p {
            GroupElement::Identity => true,
            GroupElement::Affine { x, y } => {
                let f = &self.field;
                let rhs = f.add(&f.mul(&f.square(x), x), x);
                f.square(y) == rhs
            }
        }
    }

    pub fn neg(&self, p: &GroupElement) -> GroupElement {
        match p {
            GroupElement::Identity => GroupElement::Identity,
            GroupElement::Affine { x, y } => GroupElement::Affine {
                x: *x,
                y: self.field.neg(y),
            },
        }
    }

    pub fn double(&self, p: &GroupElement) -> GroupElement {
        self.add(p, p)
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let f = &self.field;
        match (a, b) {
            (GroupElement::Identity, _) => *b,
            (_, GroupElement::Identity) => *a,
            (GroupElement::Affine { x: x1, y: y1 }, GroupElement::Affine { x: x2, y: y2 }) => {
                let lambda = if x1 == x2 {
                    if f.add(y1, y2) == f.zero() {
                        return GroupElement::Identity;
                    }
                    self.tangent_slope(x1, y1)
                } else {
                    let num = f.sub(y2, y1);
                    let den = f.sub(x2, x1);
                    f.mul(&num, &f.inv(&den).expect("distinct x"))
                };
                let x3 = f.sub(&f.sub(&f.square(&lambda), x1), x2);
                let y3 = f.sub(&f.mul(&lambda, &f.sub(x1, &x3)), y1);
                GroupElement::Affine { x: x3, y: y3 }
            }
        }
    }

    fn tangent_slope(&self, x: &Fp, y: &Fp) -> Fp {
        let f = &self.field;
        let xx = f.square(x);
        let num = f.add(&f.add(&f.double(&xx), &xx), &f.one());
        f.mul(&num, &f.inv(&f.double(y)).expect("point of odd order"))
    }

    fn jac_identity(&self) -> Jacobian {
        Jacobian {
            x: self.field.one(),
            y: self.field.one(),
            z: self.field.zero(),
        }
    }

    fn jac_double(&self, p: &Jacobian) -> Jacobian {
        let f = &self.field;
        if f.is_zero(&p.z) || f.is_zero(&p.y) {
            return self.jac_identity();
        }
        let xx = f.square(&p.x);
        let yy = f.square(&p.y);
        let yyyy = f.square(&yy);
        let zz = f.square(&p.z);
        let s = f.double(&f.sub(&f.sub(&f.square(&f.add(&p.x, &yy)), &xx), &yyyy));
        // a = 1
        let m = f.add(&f.add(&f.double(&xx), &xx), &f.square(&zz));
        let x3 = f.sub(&f.square(&m), &f.double(&s));
        let eight_yyyy = f.double(&f.double(&f.double(&yyyy)));
        let y3 = f.sub(&f.mul(&m, &f.sub(&s, &x3)), &eight_yyyy);
        let z3 = f.sub(&f.sub(&f.square(&f.add(&p.y, &p.z)), &yy), &zz);
        Jacobian {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    fn jac_add_affine(&self, p: &Jacobian, q: &GroupElement) -> Jacobian {
        let f = &self.field;
        let (x2, y2) = match q {
            GroupElement::Identity => return *p,
            GroupElement::Affine { x, y } => (x, y),
        };
        if f.is_zero(&p.z) {
            return Jacobian {
                x: *x2,
                y: *y2,
                z: f.one(),
            };
        }
        let z1z1 = f.square(&p.z);
        let u2 = f.mul(x2, &z1z1);
        let s2 = f.mul(&f.mul(y2, &p.z), &z1z1);
        let h = f.sub(&u2, &p.x);
        let r = f.double(&f.sub(&s2, &p.y));
        if f.is_zero(&h) {
            return if f.is_zero(&r) {
                self.jac_double(p)
            } else {
                self.jac_identity()
            };
        }
        let hh = f.square(&h);
        let i = f.double(&f.double(&hh));
        let j = f.mul(&h, &i);
        let v = f.mul(&p.x, &i);
        let x3 = f.sub(&f.sub(&f.square(&r), &j), &f.double(&v));
        let y3 = f.sub(&f.mul(&r, &f.sub(&v, &x3)), &f.double(&f.mul(&p.y, &j)));
        let z3 = f.sub(&f.sub(&f.square(&f.add(&p.z, &h)), &z1z1), &hh);
        Jacobian {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    fn to_affine(&self, p: &Jacobian) -> GroupElement {
        let f = &self.field;
        match f.inv(&p.z) {
            None => GroupElement::Identity,
            Some(zi) => {
                let zi2 = f.square(&zi);
                GroupElement::Affine {
                    x: f.mul(&p.x, &zi2),
                    y: f.mul(&f.mul(&p.y, &zi2), &zi),
                }
            }
        }
    }

    fn batch_to_affine(&self, points: &[Jacobian]) -> Vec<GroupElement> {
        let f = &self.field;
        let mut zs: Vec<Fp> = points.iter().map(|p| p.z).collect();
        f.batch_inv(&mut zs);
        points
            .iter()
            .zip(zs)
            .map(|(p, zi)| {
                if f.is_zero(&p.z) {
                    GroupElement::Identity
                } else {
                    let zi2 = f.square(&zi);
                    GroupElement::Affine {
                        x: f.mul(&p.x, &zi2),
                        y: f.mul(&f.mul(&p.y, &zi2), &zi),
                    }
                }
            })
            .collect()
    }

    pub fn scalar_mul(&self, p: &GroupElement, k: &BigUint) -> GroupElement {
        if p.is_identity() || k.is_zero() {
            return GroupElement::Identity;
        }
        let mut acc = self.jac_identity();
        for i in (0..k.bits()).rev() {
            acc = self.jac_double(&acc);
            if k.bit(i) {
                acc = self.jac_add_affine(&acc, p);
            }
        }
        self.to_affine(&acc)
    }

    pub fn scalar_mul_u64(&self, p: &GroupElement, k: u64) -> GroupElement {
        self.scalar_mul(p, &BigUint::from(k))
    }

    /// The multiples `0·P, 1·P, …, count−1·P`, normalized in one batch.
    pub fn multiples(&self, p: &GroupElement, count: usize) -> Vec<GroupElement> {
        const CHUNK: usize = 4096;
        let mut out = Vec::with_capacity(count);
        let mut acc = self.jac_identity();
        let mut buf = Vec::with_capacity(CHUNK);
        for _ in 0..count {
            buf.push(acc);
            if buf.len() == CHUNK {
                out.extend(self.batch_to_affine(&buf));
                buf.clear();
            }
            acc = self.jac_add_affine(&acc, p);
        }
        out.extend(self.batch_to_affine(&buf));
        out
    }

    pub fn fixed_base(&self, p: &GroupElement) -> FixedBase {
        let bits = self.params.n.bits() as usize + 1;
        let mut jac = Vec::with_capacity(bits);
        let mut cur = self.jac_identity();
        cur = self.jac_add_affine(&cur, p);
        for _ in 0..bits {
            jac.push(cur);
            cur = self.jac_double(&cur);
        }
        FixedBase {
            powers: self.batch_to_affine(&jac),
        }
    }

    /// `k·P` using a table from [`Self::fixed_base`]; `k` is reduced mod n.
    pub fn fixed_base_mul(&self, table: &FixedBase, k: &BigUint) -> GroupElement {
        let k = if k >= &self.params.n {
            k % &self.params.n
        } else {
            k.clone()
        };
        let mut acc = self.jac_identity();
        for i in 0..k.bits() {
            if k.bit(i) {
                acc = self.jac_add_affine(&acc, &table.powers[i as usize]);
            }
        }
        self.to_affine(&acc)
    }

    /// `k1·P1 + k2·Q` from two fixed-base tables with a single affine conversion.
    pub fn fixed_base_mul2(
        &self,
        t1: &FixedBase,
        k1: &BigUint,
        t2: &FixedBase,
        k2: &BigUint,
    ) -> GroupElement {
        let mut acc = self.jac_identity();
        for (table, k) in [(t1, k1), (t2, k2)] {
            let k = if k >= &self.params.n {
                k % &self.params.n
            } else {
                k.clone()
            };
            for i in 0..k.bits() {
                if k.bit(i) {
                    acc = self.jac_add_affine(&acc, &table.powers[i as usize]);
                }
            }
        }
        self.to_affine(&acc)
    }

    /// Samples a uniformly random point of E(F_p).
    pub fn random_point<R: RngCore + CryptoRng>(&self, rng: &mut R) -> GroupElement {
        let f = &self.field;
        loop {
            let x = f.from_biguint(&rng.gen_biguint_below(&self.params.p));
            let rhs = f.add(&f.mul(&f.square(&x), &x), &x);
            if let Some(y) = f.sqrt(&rhs) {
                if f.is_zero(&y) {
                    continue;
                }
                let y = if rng.gen::<bool>() { f.neg(&y) } else { y };
                return GroupElement::Affine { x, y };
            }
        }
    }

    /// Random element of the order-n subgroup. When the factorization is
    /// supplied, retries until the element has order exactly `n`.
    pub fn random_subgroup_generator<R: RngCore + CryptoRng>(
        &self,
        factors: Option<(&BigUint, &BigUint)>,
        rng: &mut R,
    ) -> GroupElement {
        loop {
            let pt = self.random_point(rng);
            let g = self.scalar_mul(&pt, &self.params.l);
            if g.is_identity() {
                continue;
            }
            if let Some((q1, q2)) = factors {
                if self.scalar_mul(&g, q1).is_identity() || self.scalar_mul(&g, q2).is_identity() {
                    continue;
                }
            }
            return g;
        }
    }

    pub fn random_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_below(&self.params.n)
    }

    // ---------------------------------------------------------------- G1

    pub fn gt_one(&self) -> TargetElement {
        TargetElement(self.field.fp2_one())
    }

    pub fn gt_is_one(&self, a: &TargetElement) -> bool {
        self.field.fp2_is_one(&a.0)
    }

    pub fn gt_mul(&self, a: &TargetElement, b: &TargetElement) -> TargetElement {
        TargetElement(self.field.fp2_mul(&a.0, &b.0))
    }

    /// Inverse in G1. Subgroup elements have norm 1, so this is conjugation.
    pub fn gt_inv(&self, a: &TargetElement) -> TargetElement {
        TargetElement(self.field.fp2_conj(&a.0))
    }

    pub fn gt_pow(&self, a: &TargetElement, k: &BigUint) -> TargetElement {
        TargetElement(self.field.fp2_pow(&a.0, k))
    }

    pub fn gt_pow_u64(&self, a: &TargetElement, k: u64) -> TargetElement {
        self.gt_pow(a, &BigUint::from(k))
    }

    pub fn fixed_base_target(&self, a: &TargetElement) -> FixedBaseTarget {
        let bits = self.params.n.bits() as usize + 1;
        let mut powers = Vec::with_capacity(bits);
        let mut cur = *a;
        for _ in 0..bits {
            powers.push(cur);
            cur = TargetElement(self.field.fp2_square(&cur.0));
        }
        FixedBaseTarget { powers }
    }

    pub fn fixed_base_target_pow(&self, table: &FixedBaseTarget, k: &BigUint) -> TargetElement {
        let k = if k >= &self.params.n {
            k % &self.params.n
        } else {
            k.clone()
        };
        let mut acc = self.gt_one();
        for i in 0..k.bits() {
            if k.bit(i) {
                acc = self.gt_mul(&acc, &table.powers[i as usize]);
            }
        }
        acc
    }

    // ---------------------------------------------------------------- pairing

    /// Precomputes the Miller-loop lines of `f_{n,P}`.
    pub fn prepare(&self, p: &GroupElement) -> PreparedPoint {
        let f = &self.field;
        let (px, py) = match p {
            GroupElement::Identity => {
                let steps = self.n_bits[1..]
                    .iter()
                    .map(|b| (Line::Trivial, b.then_some(Line::Trivial)))
                    .collect();
                return PreparedPoint { steps };
            }
            GroupElement::Affine { x, y } => (*x, *y),
        };
        let mut t = *p;
        let mut steps = Vec::with_capacity(self.n_bits.len());
        for bit in &self.n_bits[1..] {
            let dbl = match t {
                GroupElement::Identity => Line::Trivial,
                GroupElement::Affine { x, y } => {
                    if f.is_zero(&y) {
                        t = GroupElement::Identity;
                        Line::Trivial
                    } else {
                        let lambda = self.tangent_slope(&x, &y);
                        let x3 = f.sub(&f.square(&lambda), &f.double(&x));
                        let y3 = f.sub(&f.mul(&lambda, &f.sub(&x, &x3)), &y);
                        t = GroupElement::Affine { x: x3, y: y3 };
                        Line::Slope { lambda, x, y }
                    }
                }
            };
            let add = if *bit {
                Some(match t {
                    GroupElement::Identity => {
                        t = *p;
                        Line::Trivial
                    }
                    GroupElement::Affine { x, y } => {
                        if x == px {
                            if y == py {
                                let lambda = self.tangent_slope(&x, &y);
                                t = self.add(&t, p);
                                Line::Slope { lambda, x, y }
                            } else {
                                t = GroupElement::Identity;
                                Line::Trivial
                            }
                        } else {
                            let lambda = f.mul(
                                &f.sub(&py, &y),
                                &f.inv(&f.sub(&px, &x)).expect("distinct x"),
                            );
                            let x3 = f.sub(&f.sub(&f.square(&lambda), &x), &px);
                            let y3 = f.sub(&f.mul(&lambda, &f.sub(&x, &x3)), &y);
                            t = GroupElement::Affine { x: x3, y: y3 };
                            Line::Slope { lambda, x, y }
                        }
                    }
                })
            } else {
                None
            };
            steps.push((dbl, add));
        }
        debug_assert!(t.is_identity(), "P must lie in the order-n subgroup");
        PreparedPoint { steps }
    }

    #[inline]
    fn mul_line(&self, acc: &Fp2, line: &Line, qx: &Fp, qy: &Fp) -> Fp2 {
        let f = &self.field;
        match line {
            Line::Trivial => *acc,
            Line::Slope { lambda, x, y } => {
                // value at φ(Q) = (−x_Q, i·y_Q): λ(x_Q + x_T) − y_T + i·y_Q
                let c0 = f.sub(&f.mul(lambda, &f.add(qx, x)), y);
                let c1 = qy;
                let r0 = f.sub(&f.mul(&acc.c0, &c0), &f.mul(&acc.c1, c1));
                let r1 = f.add(&f.mul(&acc.c0, c1), &f.mul(&acc.c1, &c0));
                Fp2 { c0: r0, c1: r1 }
            }
        }
    }

    fn final_exponentiation(&self, m: &Fp2) -> TargetElement {
        let f = &self.field;
        // m^(p−1) = conj(m) / m, then raise to (p+1)/n = l
        let inv = f.fp2_inv(m).expect("Miller value is nonzero");
        let unitary = f.fp2_mul(&f.fp2_conj(m), &inv);
        TargetElement(f.fp2_pow(&unitary, &self.params.l))
    }

    /// Product of pairings `∏ e(P_k, Q_k)` sharing one Miller accumulator and
    /// one final exponentiation.
    pub fn multi_pairing_prepared(
        &self,
        pairs: &[(&PreparedPoint, &GroupElement)],
    ) -> TargetElement {
        let f = &self.field;
        let live: Vec<(&PreparedPoint, Fp, Fp)> = pairs
            .iter()
            .filter_map(|(prep, q)| match q {
                GroupElement::Identity => None,
                GroupElement::Affine { x, y } => Some((*prep, *x, *y)),
            })
            .collect();
        if live.is_empty() {
            return self.gt_one();
        }
        let mut acc = f.fp2_one();
        for step in 0..self.n_bits.len() - 1 {
            if step > 0 {
                acc = f.fp2_square(&acc);
            }
            for (prep, qx, qy) in &live {
                acc = self.mul_line(&acc, &prep.steps[step].0, qx, qy);
            }
            for (prep, qx, qy) in &live {
                if let Some(line) = &prep.steps[step].1 {
                    acc = self.mul_line(&acc, line, qx, qy);
                }
            }
        }
        self.final_exponentiation(&acc)
    }

    pub fn multi_pairing(&self, pairs: &[(GroupElement, GroupElement)]) -> TargetElement {
        let prepared: Vec<PreparedPoint> = pairs.iter().map(|(p, _)| self.prepare(p)).collect();
        let refs: Vec<(&PreparedPoint, &GroupElement)> = prepared
            .iter()
            .zip(pairs.iter())
            .map(|(pp, (_, q))| (pp, q))
            .collect();
        self.multi_pairing_prepared(&refs)
    }

    /// The reduced Tate pairing `e(P, Q)`.
    pub fn pairing(&self, p: &GroupElement, q: &GroupElement) -> TargetElement {
        if p.is_identity() || q.is_identity() {
            return self.gt_one();
        }
        let prep = self.prepare(p);
        self.multi_pairing_prepared(&[(&prep, q)])
    }

    // ---------------------------------------------------------------- encoding

    /// Encoded length of a source-group element.
    pub fn g_len(&self) -> usize {
        1 + 2 * self.field.byte_len()
    }

    /// Encoded length of a target-group element.
    pub fn gt_len(&self) -> usize {
        2 * self.field.byte_len()
    }

    pub fn encode_g(&self, p: &GroupElement) -> Vec<u8> {
        let mut out = vec![0u8; self.g_len()];
        self.write_g(p, &mut out);
        out
    }

    pub fn write_g(&self, p: &GroupElement, out: &mut [u8]) {
        let w = self.field.byte_len();
        match p {
            GroupElement::Identity => out[..self.g_len()].fill(0),
            GroupElement::Affine { x, y } => {
                out[0] = TAG_AFFINE;
                self.field.write_bytes(x, &mut out[1..1 + w]);
                self.field.write_bytes(y, &mut out[1 + w..1 + 2 * w]);
            }
        }
    }

    /// Decodes and validates a source-group element (on curve, in subgroup).
    pub fn decode_g(&self, bytes: &[u8]) -> Result<GroupElement, PairingError> {
        let bad = |m: &str| Err(PairingError::MalformedElement(m.into()));
        if bytes.len() != self.g_len() {
            return bad("wrong length");
        }
        let w = self.field.byte_len();
        match bytes[0] {
            TAG_IDENTITY => {
                if bytes[1..].iter().any(|b| *b != 0) {
                    return bad("nonzero identity padding");
                }
                Ok(GroupElement::Identity)
            }
            TAG_AFFINE => {
                let x = self.field.from_bytes(&bytes[1..1 + w]);
                let y = self.field.from_bytes(&bytes[1 + w..]);
                let (x, y) = match (x, y) {
                    (Some(x), Some(y)) => (x, y),
                    _ => return bad("coordinate out of range"),
                };
                let pt = GroupElement::Affine { x, y };
                if !self.is_on_curve(&pt) {
                    return bad("point not on curve");
                }
                if !self.scalar_mul(&pt, &self.params.n).is_identity() {
                    return bad("point not in order-n subgroup");
                }
                Ok(pt)
            }
            _ => bad("unknown point tag"),
        }
    }

    pub fn encode_gt(&self, a: &TargetElement) -> Vec<u8> {
        let mut out = vec![0u8; self.gt_len()];
        self.write_gt(a, &mut out);
        out
    }

    pub fn write_gt(&self, a: &TargetElement, out: &mut [u8]) {
        let w = self.field.byte_len();
        self.field.write_bytes(&a.0.c0, &mut out[..w]);
        self.field.write_bytes(&a.0.c1, &mut out[w..2 * w]);
    }

    /// Decodes and validates a target-group element (`x^n = 1`).
    pub fn decode_gt(&self, bytes: &[u8]) -> Result<TargetElement, PairingError> {
        let bad = |m: &str| Err(PairingError::MalformedElement(m.into()));
        if bytes.len() != self.gt_len() {
            return bad("wrong length");
        }
        let w = self.field.byte_len();
        let (c0, c1) = match (
            self.field.from_bytes(&bytes[..w]),
            self.field.from_bytes(&bytes[w..]),
        ) {
            (Some(a), Some(b)) => (a, b),
            _ => return bad("coefficient out of range"),
        };
        let t = TargetElement(Fp2 { c0, c1 });
        if !self.gt_is_one(&self.gt_pow(&t, &self.params.n)) {
            return bad("element not in order-n subgroup");
        }
        Ok(t)
    }
}

// ------------------------------------------------------------------ text files

/// Parses the `key=value` text format used for parameter and key files.
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, PairingError> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            PairingError::InvalidParameters(format!("line {}: expected key=value", lineno + 1))
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn hex_field(map: &BTreeMap<String, String>, key: &str) -> Result<BigUint, PairingError> {
    let v = map
        .get(key)
        .ok_or_else(|| PairingError::InvalidParameters(format!("missing key {key}")))?;
    BigUint::parse_bytes(v.as_bytes(), 16)
        .ok_or_else(|| PairingError::InvalidParameters(format!("bad hex for {key}")))
}

pub fn hex_bytes(map: &BTreeMap<String, String>, key: &str) -> Result<Vec<u8>, PairingError> {
    let v = map
        .get(key)
        .ok_or_else(|| PairingError::InvalidParameters(format!("missing key {key}")))?;
    decode_hex(v).ok_or_else(|| PairingError::InvalidParameters(format!("bad hex for {key}")))
}

pub fn encode_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn decode_hex(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(s.get(i..i + 2)?, 16).ok())
        .collect()
}

impl CurveParams {
    /// Renders the parameter file; `generator` is the encoded `g` if known.
    pub fn to_text(&self, generator: Option<&[u8]>) -> String {
        let mut s = String::from("# composite-order pairing parameters, curve y^2 = x^3 + x\n");
        for (k, v) in [
            ("p", &self.p),
            ("q1", &self.q1),
            ("q2", &self.q2),
            ("l", &self.l),
            ("n", &self.n),
        ] {
            s.push_str(&format!("{k}={}\n", v.to_str_radix(16)));
        }
        if let Some(g) = generator {
            s.push_str(&format!("g={}\n", encode_hex(g)));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<(Self, Option<Vec<u8>>), PairingError> {
        let map = parse_key_values(text)?;
        let params = CurveParams {
            p: hex_field(&map, "p")?,
            q1: hex_field(&map, "q1")?,
            q2: hex_field(&map, "q2")?,
            l: hex_field(&map, "l")?,
            n: hex_field(&map, "n")?,
        };
        params.validate()?;
        let g = if map.contains_key("g") {
            Some(hex_bytes(&map, "g")?)
        } else {
            None
        };
        Ok((params, g))
    }
}

impl GroupParams {
    pub fn write_text(&self, s: &mut String) {
        for (k, v) in [("p", &self.p), ("l", &self.l), ("n", &self.n)] {
            s.push_str(&format!("{k}={}\n", v.to_str_radix(16)));
        }
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, PairingError> {
        let params = GroupParams {
            p: hex_field(map, "p")?,
            n: hex_field(map, "n")?,
            l: hex_field(map, "l")?,
        };
        params.validate()?;
        Ok(params)
    }
}
