//! Canonical score lattice used by the optimality LP.
//!
//! A lattice vector records, for each candidate, how many 2Δ steps its score
//! sits below the maximum (its "level" 0..=k). Selection probabilities of any
//! symmetric mechanism depend only on the multiset of levels, so vectors are
//! stored canonically (levels ascending, minimum 0) with the multiplicity of
//! orderings they stand for.

use crate::scores::QualityScores;
use crate::{Error, Result};

/// Hard cap on the number of canonical vectors `enumerate_lattice` will
/// produce before bailing out.
pub const LATTICE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeVector {
    levels: Vec<u32>,
    multiplicity: u64,
}

impl LatticeVector {
    /// Levels in canonical order: ascending, `levels[0] == 0`.
    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// Number of ordered score vectors this canonical vector represents:
    /// n! / Π (repetition count)!.
    pub fn multiplicity(&self) -> u64 {
        self.multiplicity
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Number of candidates at the maximum (level 0).
    pub fn zeros(&self) -> u32 {
        self.levels.iter().take_while(|&&l| l == 0).count() as u32
    }

    /// Distinct (level, count) pairs, ascending by level.
    pub fn classes(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = Vec::new();
        for &l in &self.levels {
            match out.last_mut() {
                Some(last) if last.0 == l => last.1 += 1,
                _ => out.push((l, 1)),
            }
        }
        out
    }

    /// Materializes the scores q_r = −step · level_r.
    pub fn scores(&self, step: f64) -> Result<QualityScores> {
        QualityScores::new(self.levels.iter().map(|&l| -step * l as f64).collect())
    }
}

/// Canonical form of an arbitrary level assignment: shift so the minimum is
/// zero, then sort ascending.
pub fn canonical_levels(levels: &[u32]) -> Vec<u32> {
    let min = levels.iter().copied().min().unwrap_or(0);
    let mut out: Vec<u32> = levels.iter().map(|&l| l - min).collect();
    out.sort_unstable();
    out
}

fn multiplicity(levels: &[u32]) -> u64 {
    let n = levels.len() as u64;
    let mut mult = 1u64;
    let mut next = 1u64; // next ordered position to fill, 1..=n
    let mut i = 0;
    // n! / Π rep_j! computed as Π over classes of C(remaining, rep): stays
    // integral at every step, so u64 is exact up to n = 20.
    while i < levels.len() {
        let mut j = i;
        while j < levels.len() && levels[j] == levels[i] {
            j += 1;
        }
        let rep = (j - i) as u64;
        for d in 1..=rep {
            mult = mult * (n - next + 1) / d;
            next += 1;
        }
        i = j;
    }
    mult
}

/// All canonical vectors for n candidates and depth k, in lexicographic
/// order of their level sequences. The multiplicities sum to
/// (k+1)^n − k^n — the number of ordered vectors whose minimum level is 0.
pub fn enumerate_lattice(n: usize, k: usize) -> Result<Vec<LatticeVector>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one candidate".into()));
    }
    if n > 20 {
        return Err(Error::TooLarge {
            what: "candidates on the lattice",
            got: n,
            limit: 20,
        });
    }
    let mut out = Vec::new();
    // Nondecreasing sequences over 0..=k starting at 0.
    let mut levels = vec![0u32; n];
    loop {
        out.push(LatticeVector {
            levels: levels.clone(),
            multiplicity: multiplicity(&levels),
        });
        if out.len() > LATTICE_LIMIT {
            return Err(Error::TooLarge {
                what: "lattice vectors",
                got: out.len(),
                limit: LATTICE_LIMIT,
            });
        }
        // Advance to the next nondecreasing sequence with levels[0] = 0.
        let mut i = n;
        loop {
            if i <= 1 {
                return Ok(out);
            }
            i -= 1;
            if levels[i] < k as u32 {
                let v = levels[i] + 1;
                for entry in levels.iter_mut().skip(i) {
                    *entry = v;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lattices_match_hand_counts() {
        let vecs = enumerate_lattice(2, 1).unwrap();
        assert_eq!(
            vecs.iter().map(|v| v.levels().to_vec()).collect::<Vec<_>>(),
            vec![vec![0, 0], vec![0, 1]]
        );
        assert_eq!(
            vecs.iter().map(|v| v.multiplicity()).collect::<Vec<_>>(),
            vec![1, 2]
        );

        let vecs = enumerate_lattice(3, 1).unwrap();
        assert_eq!(vecs.len(), 3); // (0,0,0), (0,0,1), (0,1,1)
        assert_eq!(
            vecs.iter().map(|v| v.multiplicity()).collect::<Vec<_>>(),
            vec![1, 3, 3]
        );
    }

    #[test]
    fn multiplicities_cover_all_ordered_vectors() {
        for n in 1..=5usize {
            for k in 0..=4usize {
                let vecs = enumerate_lattice(n, k).unwrap();
                let total: u64 = vecs.iter().map(|v| v.multiplicity()).sum();
                let expect = ((k + 1) as u64).pow(n as u32) - (k as u64).pow(n as u32);
                assert_eq!(total, expect, "n={n} k={k}");
                for v in &vecs {
                    assert_eq!(v.levels()[0], 0);
                    assert!(v.levels().windows(2).all(|w| w[0] <= w[1]));
                    assert!(v.levels().iter().all(|&l| l <= k as u32));
                    let class_total: u32 = v.classes().iter().map(|&(_, c)| c).sum();
                    assert_eq!(class_total as usize, n);
                }
            }
        }
    }

    #[test]
    fn canonicalization_and_scores() {
        assert_eq!(canonical_levels(&[3, 1, 2]), vec![0, 1, 2]);
        assert_eq!(canonical_levels(&[2, 2]), vec![0, 0]);

        let vecs = enumerate_lattice(3, 2).unwrap();
        let v = vecs.iter().find(|v| v.levels() == [0, 1, 1]).unwrap();
        assert_eq!(v.zeros(), 1);
        assert_eq!(v.classes(), vec![(0, 1), (1, 2)]);
        let q = v.scores(2.0).unwrap();
        assert_eq!(q.values(), &[0.0, -2.0, -2.0]);
    }

    #[test]
    fn rejects_oversized_inputs() {
        assert!(matches!(
            enumerate_lattice(21, 1),
            Err(Error::TooLarge { .. })
        ));
        assert!(matches!(
            enumerate_lattice(0, 1),
            Err(Error::InvalidArgument(_))
        ));
        // 20 candidates, depth 1 is fine: 20 canonical vectors.
        assert_eq!(enumerate_lattice(20, 1).unwrap().len(), 20);
    }
}
