//! Conditional strong typicality: `u^n` is typical with `c^n` under `p(u|c)`
//! when every pair count satisfies `|N(a, c) - p(a|c) N(c)| <= slack * n`
//! and pairs with `p(a|c) = 0` never occur.
//!
//! The set is counted exactly, ranked and unranked in lexicographic order,
//! and enumerated without dead ends.

use std::ops::ControlFlow;

use super::law::ConditionalLaw;
use crate::error::{CodecError, Error, Result};

const BOUND_TOL: f64 = 1e-9;

/// Largest number of sequences an enumeration will produce.
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalitySpec {
    pub slack: f64,
}

impl TypicalitySpec {
    pub fn new(slack: f64) -> Result<Self> {
        if !(slack > 0.0 && slack.is_finite()) {
            return Err(Error::param("slack", "must be positive and finite"));
        }
        Ok(TypicalitySpec { slack })
    }
}

/// Pascal triangle in `u128`, rows `0..=n`.
#[derive(Debug, Clone)]
struct Binomials(Vec<Vec<u128>>);

impl Binomials {
    fn new(n: usize) -> Self {
        let mut rows: Vec<Vec<u128>> = Vec::with_capacity(n + 1);
        for r in 0..=n {
            let mut row = vec![1u128; r + 1];
            for k in 1..r {
                row[k] = rows[r - 1][k - 1] + rows[r - 1][k];
            }
            rows.push(row);
        }
        Binomials(rows)
    }

    #[inline]
    fn get(&self, n: usize, k: usize) -> u128 {
        self.0[n][k]
    }
}

/// Typical set of sequences over the target alphabet given one conditioning
/// sequence.
#[derive(Debug, Clone)]
pub struct TypicalSet {
    cond: Vec<usize>,
    alphabet: usize,
    /// Per class `[c][a]` inclusive count bounds.
    lo: Vec<Vec<i64>>,
    hi: Vec<Vec<i64>>,
    class_size: Vec<usize>,
    binom: Binomials,
}

impl TypicalSet {
    pub fn new(law: &ConditionalLaw, cond: &[usize], spec: TypicalitySpec) -> Result<Self> {
        let n = cond.len();
        let alphabet = law.outputs();
        let bits = n as f64 * (alphabet as f64).log2();
        if bits > 126.0 {
            return Err(Error::BudgetExceeded {
                needed: n as u128,
                limit: (126.0 / (alphabet as f64).log2()).floor() as u128,
            });
        }
        if let Some(&bad) = cond.iter().find(|&&c| c >= law.inputs()) {
            return Err(Error::param(
                "cond",
                format!("symbol {bad} outside the conditioning alphabet"),
            ));
        }
        let classes = law.inputs();
        let mut class_size = vec![0usize; classes];
        for &c in cond {
            class_size[c] += 1;
        }
        let tol = spec.slack * n as f64;
        let mut lo = vec![vec![0i64; alphabet]; classes];
        let mut hi = vec![vec![0i64; alphabet]; classes];
        for c in 0..classes {
            let m = class_size[c] as f64;
            for a in 0..alphabet {
                let p = law.prob(c, a);
                if p == 0.0 {
                    lo[c][a] = 0;
                    hi[c][a] = 0;
                } else {
                    let centre = p * m;
                    lo[c][a] = ((centre - tol - BOUND_TOL).ceil() as i64).max(0);
                    hi[c][a] = ((centre + tol + BOUND_TOL).floor() as i64).min(class_size[c] as i64);
                }
            }
        }
        Ok(TypicalSet {
            cond: cond.to_vec(),
            alphabet,
            lo,
            hi,
            class_size,
            binom: Binomials::new(n),
        })
    }

    pub fn len(&self) -> usize {
        self.cond.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cond.is_empty()
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn contains(&self, u: &[usize]) -> bool {
        if u.len() != self.cond.len() || u.iter().any(|&a| a >= self.alphabet) {
            return false;
        }
        let mut counts = vec![vec![0i64; self.alphabet]; self.class_size.len()];
        for (&a, &c) in u.iter().zip(&self.cond) {
            counts[c][a] += 1;
        }
        counts.iter().enumerate().all(|(c, row)| {
            row.iter()
                .enumerate()
                .all(|(a, &k)| self.lo[c][a] <= k && k <= self.hi[c][a])
        })
    }

    /// Ways to fill `rem` positions of class `c` given counts already used.
    fn class_ways(&self, c: usize, rem: usize, used: &[i64]) -> u128 {
        // f[r] = ways to fill r positions with the symbols processed so far
        let mut f = vec![0u128; rem + 1];
        f[0] = 1;
        for a in 0..self.alphabet {
            let lo = (self.lo[c][a] - used[a]).max(0);
            let hi = self.hi[c][a] - used[a];
            if hi < lo {
                return 0;
            }
            let mut g = vec![0u128; rem + 1];
            for (r, slot) in g.iter_mut().enumerate() {
                let top = (hi as usize).min(r);
                let mut acc = 0u128;
                for k in lo as usize..=top {
                    if f[r - k] != 0 {
                        acc += self.binom.get(r, k) * f[r - k];
                    }
                }
                *slot = acc;
            }
            f = g;
        }
        f[rem]
    }

    fn class_feasible(&self, c: usize, rem: usize, used: &[i64]) -> bool {
        let (mut need, mut room) = (0i64, 0i64);
        for a in 0..self.alphabet {
            let lo = (self.lo[c][a] - used[a]).max(0);
            let hi = self.hi[c][a] - used[a];
            if hi < lo {
                return false;
            }
            need += lo;
            room += hi;
        }
        need <= rem as i64 && rem as i64 <= room
    }

    /// `|T|`, exactly.
    pub fn count(&self) -> u128 {
        let zero = vec![0i64; self.alphabet];
        (0..self.class_size.len())
            .map(|c| self.class_ways(c, self.class_size[c], &zero))
            .product()
    }

    /// `floor(log2 |T|)`, or `None` for an empty set.
    pub fn bit_budget(&self) -> Option<usize> {
        let t = self.count();
        (t > 0).then(|| 127 - t.leading_zeros() as usize)
    }

    /// Walk the sequence in lex order, calling `choose(i, completions)` at
    /// each position with the number of completions for every symbol.
    fn walk(&self, mut choose: impl FnMut(usize, &[u128]) -> Option<usize>) -> Option<Vec<usize>> {
        let classes = self.class_size.len();
        let mut used = vec![vec![0i64; self.alphabet]; classes];
        let mut rem = self.class_size.clone();
        let mut ways: Vec<u128> = (0..classes).map(|c| self.class_ways(c, rem[c], &used[c])).collect();
        let mut out = Vec::with_capacity(self.cond.len());
        let mut completions = vec![0u128; self.alphabet];
        for (i, &c) in self.cond.iter().enumerate() {
            let others: u128 = (0..classes).filter(|&k| k != c).map(|k| ways[k]).product();
            let mut per_symbol = vec![0u128; self.alphabet];
            for a in 0..self.alphabet {
                used[c][a] += 1;
                per_symbol[a] = self.class_ways(c, rem[c] - 1, &used[c]);
                completions[a] = per_symbol[a] * others;
                used[c][a] -= 1;
            }
            let a = choose(i, &completions)?;
            used[c][a] += 1;
            rem[c] -= 1;
            ways[c] = per_symbol[a];
            out.push(a);
        }
        Some(out)
    }

    /// Lexicographic rank of a typical sequence.
    pub fn rank(&self, u: &[usize]) -> Result<u128, CodecError> {
        if !self.contains(u) {
            return Err(CodecError::NotTypical);
        }
        let mut rank = 0u128;
        self.walk(|i, completions| {
            rank += completions[..u[i]].iter().sum::<u128>();
            Some(u[i])
        });
        Ok(rank)
    }

    /// Sequence at a given lexicographic rank.
    pub fn unrank(&self, mut index: u128) -> Result<Vec<usize>, CodecError> {
        if index >= self.count() {
            return Err(CodecError::IndexOutOfRange);
        }
        self.walk(|_, completions| {
            for (a, &w) in completions.iter().enumerate() {
                if index < w {
                    return Some(a);
                }
                index -= w;
            }
            None
        })
        .ok_or(CodecError::IndexOutOfRange)
    }

    /// Visit members in lex order until `visit` breaks.
    pub fn for_each<B>(&self, mut visit: impl FnMut(&[usize]) -> ControlFlow<B>) -> Option<B> {
        let classes = self.class_size.len();
        let mut used = vec![vec![0i64; self.alphabet]; classes];
        let mut rem = self.class_size.clone();
        if (0..classes).any(|c| !self.class_feasible(c, rem[c], &used[c])) {
            return None;
        }
        let mut cur = Vec::with_capacity(self.cond.len());
        self.dfs(&mut cur, &mut used, &mut rem, &mut visit).break_value()
    }

    fn dfs<B>(
        &self,
        cur: &mut Vec<usize>,
        used: &mut [Vec<i64>],
        rem: &mut [usize],
        visit: &mut impl FnMut(&[usize]) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        let i = cur.len();
        if i == self.cond.len() {
            return visit(cur);
        }
        let c = self.cond[i];
        for a in 0..self.alphabet {
            used[c][a] += 1;
            rem[c] -= 1;
            if self.class_feasible(c, rem[c], &used[c]) {
                cur.push(a);
                let flow = self.dfs(cur, used, rem, visit);
                cur.pop();
                if flow.is_break() {
                    used[c][a] -= 1;
                    rem[c] += 1;
                    return flow;
                }
            }
            used[c][a] -= 1;
            rem[c] += 1;
        }
        ControlFlow::Continue(())
    }

    /// Every member in lex order, refusing sets larger than `limit`.
    pub fn enumerate(&self, limit: u128) -> Result<Vec<Vec<usize>>> {
        let count = self.count();
        if count > limit {
            return Err(Error::BudgetExceeded { needed: count, limit });
        }
        let mut out = Vec::with_capacity(count as usize);
        self.for_each(|u| {
            out.push(u.to_vec());
            ControlFlow::<()>::Continue(())
        });
        Ok(out)
    }
}

pub fn is_jointly_typical(u: &[usize], cond: &[usize], law: &ConditionalLaw, spec: TypicalitySpec) -> bool {
    u.len() == cond.len() && TypicalSet::new(law, cond, spec).is_ok_and(|t| t.contains(u))
}

pub fn enumerate_conditional_typical(
    cond: &[usize],
    law: &ConditionalLaw,
    spec: TypicalitySpec,
) -> Result<Vec<Vec<usize>>> {
    TypicalSet::new(law, cond, spec)?.enumerate(DEFAULT_ENUMERATION_LIMIT)
}

/// Lex index of a sequence among all `alphabet^n` sequences.
pub fn sequence_index(u: &[usize], alphabet: usize) -> u128 {
    u.iter().fold(0u128, |acc, &a| acc * alphabet as u128 + a as u128)
}

pub fn index_sequence(mut index: u128, alphabet: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0usize; n];
    for v in out.iter_mut().rev() {
        *v = (index % alphabet as u128) as usize;
        index /= alphabet as u128;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_sequences(n: usize, q: usize) -> impl Iterator<Item = Vec<usize>> {
        (0..(q as u128).pow(n as u32)).map(move |i| index_sequence(i, q, n))
    }

    /// Definition-level check, written independently of the set's bounds.
    fn brute_typical(u: &[usize], c: &[usize], law: &ConditionalLaw, delta: f64) -> bool {
        let n = u.len() as f64;
        for cc in 0..law.inputs() {
            let nc = c.iter().filter(|&&v| v == cc).count() as f64;
            for a in 0..law.outputs() {
                let nac = u.iter().zip(c).filter(|&(&x, &y)| x == a && y == cc).count() as f64;
                let p = law.prob(cc, a);
                if p == 0.0 && nac > 0.0 {
                    return false;
                }
                if (nac - p * nc).abs() > delta * n + 1e-9 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn identity_law_accepts_copy() {
        let law = ConditionalLaw::identity(3);
        let x = vec![0, 2, 1, 1, 0, 2];
        assert!(is_jointly_typical(&x, &x, &law, TypicalitySpec::new(0.01).unwrap()));
        let mut y = x.clone();
        y[0] = 1;
        assert!(!is_jointly_typical(&y, &x, &law, TypicalitySpec::new(0.5).unwrap()));
    }

    #[test]
    fn vacuous_slack_accepts_everything() {
        let law = ConditionalLaw::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let x = vec![0, 1, 1, 0, 1, 0, 0];
        let t = TypicalSet::new(&law, &x, TypicalitySpec::new(1.0).unwrap()).unwrap();
        assert_eq!(t.count(), 1 << 7);
    }

    #[test]
    fn count_matches_brute_force_n8() {
        let law = ConditionalLaw::binary_symmetric(0.25).unwrap();
        for x in [vec![0, 1, 1, 0, 1, 0, 0, 1], vec![0; 8], vec![1, 1, 1, 0, 1, 1, 1, 1]] {
            let t = TypicalSet::new(&law, &x, TypicalitySpec::new(0.1).unwrap()).unwrap();
            let brute = all_sequences(8, 2).filter(|u| brute_typical(u, &x, &law, 0.1)).count();
            assert_eq!(t.count(), brute as u128);
            let listed = t.enumerate(1 << 20).unwrap();
            assert_eq!(listed.len(), brute);
            assert!(listed.windows(2).all(|w| w[0] < w[1]));
            assert!(listed.iter().all(|u| brute_typical(u, &x, &law, 0.1)));
        }
    }

    #[test]
    fn ternary_rank_unrank_match_enumeration() {
        let law = ConditionalLaw::new(vec![vec![0.5, 0.3, 0.2], vec![0.0, 0.5, 0.5]]).unwrap();
        let x = vec![0, 1, 0, 0, 1, 0, 1];
        let t = TypicalSet::new(&law, &x, TypicalitySpec::new(0.15).unwrap()).unwrap();
        let listed = t.enumerate(1 << 20).unwrap();
        let brute: Vec<_> = all_sequences(7, 3)
            .filter(|u| brute_typical(u, &x, &law, 0.15))
            .collect();
        assert_eq!(listed, brute);
        for (i, u) in listed.iter().enumerate() {
            assert_eq!(t.rank(u).unwrap(), i as u128);
            assert_eq!(&t.unrank(i as u128).unwrap(), u);
        }
        assert_eq!(t.unrank(listed.len() as u128), Err(CodecError::IndexOutOfRange));
    }

    #[test]
    fn empty_set_is_handled() {
        // a class of size 3 with p = 1/2 and zero slack has no integer split
        let law = ConditionalLaw::binary_symmetric(0.5).unwrap();
        let t = TypicalSet::new(&law, &[0, 0, 0], TypicalitySpec::new(1e-6).unwrap()).unwrap();
        assert_eq!(t.count(), 0);
        assert_eq!(t.bit_budget(), None);
        assert!(t.enumerate(10).unwrap().is_empty());
    }

    #[test]
    fn enumeration_budget() {
        let law = ConditionalLaw::binary_symmetric(0.5).unwrap();
        let t = TypicalSet::new(&law, &[0; 20], TypicalitySpec::new(1.0).unwrap()).unwrap();
        assert!(matches!(t.enumerate(1000), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn large_block_counts_without_overflow() {
        let law = ConditionalLaw::binary_symmetric(0.1).unwrap();
        let x: Vec<usize> = (0..100).map(|i| (i * 7 % 3 == 0) as usize).collect();
        let t = TypicalSet::new(&law, &x, TypicalitySpec::new(0.05).unwrap()).unwrap();
        let c = t.count();
        assert!(c > 0);
        let u = t.unrank(c / 3).unwrap();
        assert_eq!(t.rank(&u).unwrap(), c / 3);
    }

    proptest! {
        #[test]
        fn enumeration_is_a_bijection(
            x in proptest::collection::vec(0usize..2, 1..10),
            p in 0.05f64..0.5,
            delta in 0.05f64..0.4,
        ) {
            let law = ConditionalLaw::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap();
            let t = TypicalSet::new(&law, &x, TypicalitySpec::new(delta).unwrap()).unwrap();
            let listed = t.enumerate(1 << 12).unwrap();
            prop_assert_eq!(listed.len() as u128, t.count());
            let mut sorted = listed.clone();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), listed.len());
            for (i, u) in listed.iter().enumerate() {
                prop_assert!(t.contains(u));
                prop_assert!(brute_typical(u, &x, &law, delta));
                prop_assert_eq!(t.rank(u).unwrap(), i as u128);
            }
        }
    }
}
