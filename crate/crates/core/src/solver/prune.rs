//! Removal of alpha vectors that never attain the pointwise minimum.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lp::{find_witness, Witness};
use super::pwlc::AlphaVector;
use crate::entropy::dot;
use crate::quasi::simplex_points;

/// Witnesses must beat every retained vector by more than this.
pub const DEFAULT_MARGIN: f64 = 1e-9;

const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneStats {
    pub input: usize,
    pub output: usize,
    pub lp_solves: usize,
    pub lp_failures: usize,
}

impl PruneStats {
    pub fn absorb(&mut self, other: &PruneStats) {
        self.input += other.input;
        self.output += other.output;
        self.lp_solves += other.lp_solves;
        self.lp_failures += other.lp_failures;
    }
}

/// `w <= v` componentwise, i.e. `v` can never be strictly below `w`.
#[inline]
fn dominates(w: &[f64], v: &[f64]) -> bool {
    w.iter().zip(v).all(|(a, b)| a <= b)
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// Index of the minimiser at `pi` among `live` candidates, ties broken
/// toward the lexicographically smallest weights.
fn best_at(vectors: &[AlphaVector], live: impl Iterator<Item = usize>, pi: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for i in live {
        let val = dot(pi, &vectors[i].weights);
        best = match best {
            None => Some((i, val)),
            Some((b, bv)) if val < bv || (val == bv && lex_less(&vectors[i].weights, &vectors[b].weights)) => {
                Some((i, val))
            }
            keep => keep,
        };
    }
    best
}

/// Drops vectors weakly dominated by another one, keeping the first of any
/// exact duplicates. Cheap but not minimal.
pub fn prune_pairwise(vectors: Vec<AlphaVector>) -> (Vec<AlphaVector>, PruneStats) {
    let input = vectors.len();
    let mut order: Vec<usize> = (0..input).collect();
    let sums: Vec<f64> = vectors.iter().map(|v| v.weights.iter().sum()).collect();
    order.sort_by(|&a, &b| sums[a].total_cmp(&sums[b]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if !kept.iter().any(|&k| dominates(&vectors[k].weights, &vectors[i].weights)) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    let mut slots: Vec<Option<AlphaVector>> = vectors.into_iter().map(Some).collect();
    let out: Vec<AlphaVector> = kept.into_iter().map(|i| slots[i].take().expect("kept once")).collect();
    let stats = PruneStats { input, output: out.len(), ..Default::default() };
    (out, stats)
}

/// Minimal subset with the same pointwise minimum (up to `margin`), via
/// witness linear programs. Candidates whose LP fails are retained.
pub fn prune(vectors: Vec<AlphaVector>, margin: f64) -> (Vec<AlphaVector>, PruneStats) {
    let input = vectors.len();
    let mut stats = PruneStats { input, ..Default::default() };
    if input <= 1 {
        stats.output = input;
        return (vectors, stats);
    }
    let n = vectors[0].weights.len();

    let mut alive = vec![true; input];
    let mut in_w = vec![false; input];
    let mut w: Vec<usize> = Vec::new();

    // Seed with the minimisers at the vertices and a few interior points;
    // each of these is certainly part of the minimal set.
    let mut probes: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let mut e = vec![0.0; n];
            e[v] = 1.0;
            e
        })
        .collect();
    probes.extend(simplex_points(n, 4 * n + 8));
    for p in &probes {
        if let Some((b, _)) = best_at(&vectors, 0..input, p) {
            if !in_w[b] {
                in_w[b] = true;
                w.push(b);
            }
        }
    }

    let mut pending: VecDeque<usize> = (0..input).filter(|&i| !in_w[i]).collect();
    while !pending.is_empty() {
        let take = pending.len().min(CHUNK);
        let chunk: Vec<usize> = pending.drain(..take).collect();
        let snapshot: Vec<&[f64]> = w.iter().map(|&i| vectors[i].weights.as_slice()).collect();
        let results: Vec<Option<Witness>> = chunk
            .par_iter()
            .map(|&c| {
                let cand = &vectors[c].weights;
                if snapshot.iter().any(|wv| dominates(wv, cand)) {
                    None
                } else {
                    Some(find_witness(cand, &snapshot, margin))
                }
            })
            .collect();
        for (&c, res) in chunk.iter().zip(results) {
            if !alive[c] || in_w[c] {
                continue;
            }
            match res {
                None => alive[c] = false,
                Some(res) => {
                    stats.lp_solves += 1;
                    match res {
                        Witness::None => alive[c] = false,
                        Witness::Failed => {
                            stats.lp_failures += 1;
                            in_w[c] = true;
                            w.push(c);
                        }
                        Witness::Found(pi) => {
                            let live = chunk.iter().chain(pending.iter()).copied().filter(|&i| alive[i] && !in_w[i]);
                            let (b, bv) = best_at(&vectors, live, &pi).expect("candidate itself is live");
                            let w_min = w.iter().map(|&i| dot(&pi, &vectors[i].weights)).fold(f64::INFINITY, f64::min);
                            // When W has not grown since the LP, a failed
                            // re-check is round-off; keep b rather than loop.
                            if bv + margin < w_min || w.len() == snapshot.len() {
                                in_w[b] = true;
                                w.push(b);
                            }
                            if !in_w[c] {
                                pending.push_back(c);
                            }
                        }
                    }
                }
            }
        }
    }

    w.sort_unstable();
    let mut slots: Vec<Option<AlphaVector>> = vectors.into_iter().map(Some).collect();
    let out: Vec<AlphaVector> = w.into_iter().map(|i| slots[i].take().expect("kept once")).collect();
    stats.output = out.len();
    (out, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::pwlc::Provenance;
    use rand::{Rng, SeedableRng};

    fn av(w: &[f64]) -> AlphaVector {
        AlphaVector::new(w.to_vec(), None, Provenance::Backup)
    }

    fn min_value(vs: &[AlphaVector], pi: &[f64]) -> f64 {
        vs.iter().map(|v| v.value(pi)).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn identical_vectors_collapse() {
        let (out, _) = prune(vec![av(&[1.0, 2.0]), av(&[1.0, 2.0])], DEFAULT_MARGIN);
        assert_eq!(out.len(), 1);
        let (out, _) = prune_pairwise(vec![av(&[1.0, 2.0]), av(&[1.0, 2.0])]);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn crossing_vectors_both_kept() {
        let (out, _) = prune(vec![av(&[0.0, 1.0]), av(&[1.0, 0.0])], DEFAULT_MARGIN);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn vector_below_only_in_interior_is_kept() {
        let vs = vec![av(&[0.0, 1.0]), av(&[1.0, 0.0]), av(&[0.4, 0.4])];
        let (out, stats) = prune(vs.clone(), DEFAULT_MARGIN);
        assert_eq!(out.len(), 3);
        assert_eq!(stats.output, 3);
        let (out, _) = prune(vec![av(&[0.0, 1.0]), av(&[1.0, 0.0]), av(&[0.6, 0.6])], DEFAULT_MARGIN);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn random_sets_keep_the_pointwise_minimum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let vs: Vec<AlphaVector> = (0..50).map(|_| av(&[rng.gen(), rng.gen(), rng.gen()])).collect();
            let (out, _) = prune(vs.clone(), DEFAULT_MARGIN);
            assert!(out.len() <= vs.len());
            for p in simplex_points(3, 10_000) {
                assert!((min_value(&vs, &p) - min_value(&out, &p)).abs() < 1e-9);
            }
            // every retained vector is needed somewhere
            for (i, v) in out.iter().enumerate() {
                let others: Vec<&[f64]> =
                    out.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, o)| o.weights.as_slice()).collect();
                assert!(matches!(find_witness(&v.weights, &others, 0.0), Witness::Found(_)));
            }
        }
    }

    #[test]
    fn pairwise_is_sound_but_weaker() {
        let vs = vec![av(&[0.0, 1.0]), av(&[1.0, 0.0]), av(&[0.6, 0.6]), av(&[2.0, 2.0])];
        let (out, stats) = prune_pairwise(vs);
        assert_eq!(out.len(), 3);
        assert_eq!(stats.input, 4);
    }
}
