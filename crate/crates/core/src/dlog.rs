//! Bounded discrete logarithms by table lookup, with an optional
//! baby-step giant-step extension.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::Hasher;
use std::sync::Arc;

use crate::pairing::{GroupElement, PairingGroup, TargetElement};

/// Minimal group interface the solver needs.
pub trait DlogGroup: Send + Sync {
    type Elem: Clone + PartialEq + Send + Sync;

    fn op(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inverse(&self, a: &Self::Elem) -> Self::Elem;
    fn pow_u64(&self, a: &Self::Elem, k: u64) -> Self::Elem;
    /// Canonical byte encoding, written into `buf` (cleared first).
    fn encode_into(&self, a: &Self::Elem, buf: &mut Vec<u8>);
    /// `base^0, …, base^(count−1)`.
    fn powers(&self, base: &Self::Elem, count: usize) -> Vec<Self::Elem>;
}

/// The source group G of a [`PairingGroup`].
#[derive(Clone)]
pub struct SourceGroup(pub Arc<PairingGroup>);

/// The target group G1 of a [`PairingGroup`].
#[derive(Clone)]
pub struct TargetGroup(pub Arc<PairingGroup>);

impl DlogGroup for SourceGroup {
    type Elem = GroupElement;

    fn op(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.0.add(a, b)
    }
    fn inverse(&self, a: &GroupElement) -> GroupElement {
        self.0.neg(a)
    }
    fn pow_u64(&self, a: &GroupElement, k: u64) -> GroupElement {
        self.0.scalar_mul_u64(a, k)
    }
    fn encode_into(&self, a: &GroupElement, buf: &mut Vec<u8>) {
        buf.clear();
        buf.resize(self.0.g_len(), 0);
        self.0.write_g(a, buf);
    }
    fn powers(&self, base: &GroupElement, count: usize) -> Vec<GroupElement> {
        self.0.multiples(base, count)
    }
}

impl DlogGroup for TargetGroup {
    type Elem = TargetElement;

    fn op(&self, a: &TargetElement, b: &TargetElement) -> TargetElement {
        self.0.gt_mul(a, b)
    }
    fn inverse(&self, a: &TargetElement) -> TargetElement {
        self.0.gt_inv(a)
    }
    fn pow_u64(&self, a: &TargetElement, k: u64) -> TargetElement {
        self.0.gt_pow_u64(a, k)
    }
    fn encode_into(&self, a: &TargetElement, buf: &mut Vec<u8>) {
        buf.clear();
        buf.resize(self.0.gt_len(), 0);
        self.0.write_gt(a, buf);
    }
    fn powers(&self, base: &TargetElement, count: usize) -> Vec<TargetElement> {
        let mut out = Vec::with_capacity(count);
        let mut cur = self.0.gt_one();
        for _ in 0..count {
            out.push(cur);
            cur = self.0.gt_mul(&cur, base);
        }
        out
    }
}

fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h = DefaultHasher::new();
    h.write(bytes);
    h.finish()
}

/// Lookup table for `base^i ↦ i`, `0 ≤ i ≤ bound`.
pub struct DlogSolver<D: DlogGroup> {
    group: D,
    base: D::Elem,
    bound: u64,
    table: HashMap<u64, u32>,
    // extra indices whose hash collided with an earlier entry
    collisions: HashMap<u64, Vec<u32>>,
    giant: Option<D::Elem>,
}

impl<D: DlogGroup> DlogSolver<D> {
    /// Builds a table of `bound + 1` entries. With `bsgs` set, solving also
    /// covers `[0, (bound+1)² − 1]` by giant steps of `base^-(bound+1)`.
    pub fn new(group: D, base: D::Elem, bound: u64, bsgs: bool) -> Self {
        assert!(bound < u32::MAX as u64, "dlog bound too large for table");
        let count = bound as usize + 1;
        let powers = group.powers(&base, count);
        let mut table = HashMap::with_capacity(count);
        let mut collisions: HashMap<u64, Vec<u32>> = HashMap::new();
        let mut buf = Vec::new();
        for (i, p) in powers.iter().enumerate() {
            group.encode_into(p, &mut buf);
            let key = hash_bytes(&buf);
            if let std::collections::hash_map::Entry::Vacant(e) = table.entry(key) {
                e.insert(i as u32);
            } else {
                collisions.entry(key).or_default().push(i as u32);
            }
        }
        let giant = bsgs.then(|| {
            let step = group.op(&powers[count - 1], &base);
            group.inverse(&step)
        });
        Self {
            group,
            base,
            bound,
            table,
            collisions,
            giant,
        }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn base(&self) -> &D::Elem {
        &self.base
    }

    fn lookup(&self, y: &D::Elem, buf: &mut Vec<u8>) -> Option<u64> {
        self.group.encode_into(y, buf);
        let key = hash_bytes(buf);
        let first = self.table.get(&key)?;
        let extra = self
            .collisions
            .get(&key)
            .map(|v| v.as_slice())
            .unwrap_or(&[]);
        std::iter::once(first)
            .chain(extra.iter())
            .map(|&i| i as u64)
            .find(|&i| self.group.pow_u64(&self.base, i) == *y)
    }

    /// Table lookup only: `Some(i)` iff `y = base^i` with `i ≤ bound`.
    pub fn solve_table(&self, y: &D::Elem) -> Option<u64> {
        self.lookup(y, &mut Vec::new())
    }

    /// Table lookup, then giant steps if enabled.
    pub fn solve(&self, y: &D::Elem) -> Option<u64> {
        let mut buf = Vec::new();
        if let Some(i) = self.lookup(y, &mut buf) {
            return Some(i);
        }
        let giant = self.giant.as_ref()?;
        let m = self.bound + 1;
        let mut cur = y.clone();
        for j in 1..m {
            cur = self.group.op(&cur, giant);
            if let Some(i) = self.lookup(&cur, &mut buf) {
                return Some(j * m + i);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::generate_group;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn setup() -> (Arc<PairingGroup>, GroupElement, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let params = generate_group(32, &mut rng).unwrap();
        let group = Arc::new(PairingGroup::new(&params.public()).unwrap());
        let g = group.random_subgroup_generator(Some((&params.q1, &params.q2)), &mut rng);
        (group, g, rng)
    }

    #[test]
    fn source_group_table() {
        let (group, g, mut rng) = setup();
        let solver = DlogSolver::new(SourceGroup(group.clone()), g, 2000, false);
        assert_eq!(solver.solve(&GroupElement::Identity), Some(0));
        assert_eq!(solver.solve(&group.scalar_mul_u64(&g, 2000)), Some(2000));
        assert_eq!(solver.solve(&group.scalar_mul_u64(&g, 2001)), None);
        for _ in 0..1000 {
            let i = rng.gen_range(0..=2000u64);
            assert_eq!(solver.solve(&group.scalar_mul_u64(&g, i)), Some(i));
        }
    }

    #[test]
    fn target_group_table_and_bsgs() {
        let (group, g, mut rng) = setup();
        let e = group.pairing(&g, &g);
        let solver = DlogSolver::new(TargetGroup(group.clone()), e, 100, true);
        assert_eq!(solver.solve(&group.gt_one()), Some(0));
        assert_eq!(solver.solve(&group.gt_pow_u64(&e, 100)), Some(100));
        // beyond the table, reachable only by giant steps
        let y = group.gt_pow_u64(&e, 7777);
        assert_eq!(solver.solve_table(&y), None);
        assert_eq!(solver.solve(&y), Some(7777));
        assert_eq!(
            solver.solve(&group.gt_pow_u64(&e, 101 * 101 - 1)),
            Some(101 * 101 - 1)
        );
        for _ in 0..200 {
            let i = rng.gen_range(0..101 * 101u64);
            assert_eq!(solver.solve(&group.gt_pow_u64(&e, i)), Some(i));
        }
    }
}
