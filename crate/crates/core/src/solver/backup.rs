//! One step of finite-horizon value iteration over alpha vectors.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prune::{prune, prune_pairwise, PruneStats};
use super::pwlc::{AlphaVector, Provenance, PwlcFunction};
use crate::error::{Error, Result};
use crate::model::PomdpModel;

/// Largest cross-sum the backup will materialise.
pub const CROSS_SUM_LIMIT: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruneMode {
    /// Exact incremental pruning with witness LPs.
    Incremental,
    /// Incremental cross-sums with domination checks only.
    Pairwise,
    /// One backed-up vector per base point.
    PointBased,
}

impl fmt::Display for PruneMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PruneMode::Incremental => "incremental",
            PruneMode::Pairwise => "pairwise",
            PruneMode::PointBased => "point-based",
        })
    }
}

impl FromStr for PruneMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "incremental" => Ok(PruneMode::Incremental),
            "pairwise" => Ok(PruneMode::Pairwise),
            "point-based" | "pointbased" => Ok(PruneMode::PointBased),
            other => Err(Error::InvalidArgument(format!(
                "unknown prune mode '{other}' (expected incremental, pairwise or point-based)"
            ))),
        }
    }
}

/// `M^{u,y}[i][j] = B^i(y,u) A^{ij}(u)`, so that the back-projection of
/// `alpha` is `alpha^{u,y}(j) = sum_i M[i][j] alpha(i)`.
pub struct Projections {
    n: usize,
    ny: usize,
    mats: Vec<Vec<f64>>,
}

impl Projections {
    pub fn new(model: &PomdpModel) -> Self {
        let n = model.num_states();
        let ny = model.num_measurements();
        let mats = (0..model.num_controls())
            .flat_map(|u| {
                (0..ny).map(move |y| {
                    let mut m = vec![0.0; n * n];
                    for i in 0..n {
                        for j in 0..n {
                            m[i * n + j] = model.observation(u, i, y) * model.transition(u, i, j);
                        }
                    }
                    m
                })
            })
            .collect();
        Self { n, ny, mats }
    }

    pub fn project(&self, u: usize, y: usize, alpha: &[f64]) -> Vec<f64> {
        let m = &self.mats[u * self.ny + y];
        let n = self.n;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let a = alpha[i];
            if a == 0.0 {
                continue;
            }
            let row = &m[i * n..(i + 1) * n];
            for j in 0..n {
                out[j] += row[j] * a;
            }
        }
        out
    }
}

fn tagged(vectors: &[AlphaVector], u: usize) -> Vec<AlphaVector> {
    vectors.iter().map(|v| AlphaVector::new(v.weights.clone(), Some(u), v.provenance)).collect()
}

fn reduce(vectors: Vec<AlphaVector>, mode: PruneMode, margin: f64, stats: &mut PruneStats) -> Vec<AlphaVector> {
    let (out, s) = match mode {
        PruneMode::Incremental | PruneMode::PointBased => prune(vectors, margin),
        PruneMode::Pairwise => prune_pairwise(vectors),
    };
    stats.absorb(&s);
    out
}

fn cross_sum(a: &[AlphaVector], b: &[AlphaVector], u: usize) -> Result<Vec<AlphaVector>> {
    let size = a.len().saturating_mul(b.len());
    if size > CROSS_SUM_LIMIT {
        return Err(Error::SizeGuard(format!(
            "cross-sum of {} x {} vectors exceeds {CROSS_SUM_LIMIT}; try --prune incremental or point-based",
            a.len(),
            b.len()
        )));
    }
    let mut out = Vec::with_capacity(size);
    for x in a {
        for y in b {
            let w = x.weights.iter().zip(&y.weights).map(|(p, q)| p + q).collect();
            out.push(AlphaVector::new(w, Some(u), Provenance::Backup));
        }
    }
    Ok(out)
}

fn backup_control(
    proj: &Projections,
    cost: &PwlcFunction,
    next: &PwlcFunction,
    u: usize,
    mode: PruneMode,
    margin: f64,
) -> Result<(Vec<AlphaVector>, PruneStats)> {
    let mut stats = PruneStats::default();
    let mut acc = reduce(tagged(&cost.vectors, u), mode, margin, &mut stats);
    for y in 0..proj.ny {
        let gamma: Vec<AlphaVector> = next
            .vectors
            .iter()
            .map(|v| AlphaVector::new(proj.project(u, y, &v.weights), Some(u), Provenance::Backup))
            .collect();
        let gamma = reduce(gamma, mode, margin, &mut stats);
        // Translating a minimal set by one vector keeps it minimal.
        acc = if acc.len() == 1 || gamma.len() == 1 {
            cross_sum(&acc, &gamma, u)?
        } else {
            reduce(cross_sum(&acc, &gamma, u)?, mode, margin, &mut stats)
        };
    }
    Ok((acc, stats))
}

/// Exact backup of the PWLC surrogate:
/// `J(pi) = min_u [ c^(pi, u) + sum_y min_alpha <pi, alpha^{u,y}> ]`,
/// computed by incremental pruning (per control, in parallel), or at the
/// given points only in point-based mode.
pub fn dp_backup(
    model: &PomdpModel,
    costs: &[PwlcFunction],
    next: &PwlcFunction,
    mode: PruneMode,
    margin: f64,
    points: &[Vec<f64>],
) -> Result<(PwlcFunction, PruneStats)> {
    let proj = Projections::new(model);
    if mode == PruneMode::PointBased {
        return point_based_backup(model, &proj, costs, next, points);
    }
    let per_control = (0..model.num_controls())
        .into_par_iter()
        .map(|u| backup_control(&proj, &costs[u], next, u, mode, margin))
        .collect::<Result<Vec<_>>>()?;
    let mut stats = PruneStats::default();
    let mut union = Vec::new();
    for (vs, s) in per_control {
        stats.absorb(&s);
        union.extend(vs);
    }
    let out = if model.num_controls() > 1 { reduce(union, mode, margin, &mut stats) } else { union };
    Ok((PwlcFunction::new(out)?, stats))
}

fn point_based_backup(
    model: &PomdpModel,
    proj: &Projections,
    costs: &[PwlcFunction],
    next: &PwlcFunction,
    points: &[Vec<f64>],
) -> Result<(PwlcFunction, PruneStats)> {
    let nu = model.num_controls();
    let ny = model.num_measurements();
    let gammas: Vec<Vec<Vec<f64>>> = (0..nu * ny)
        .map(|uy| next.vectors.iter().map(|v| proj.project(uy / ny, uy % ny, &v.weights)).collect())
        .collect();
    let best_in = |set: &[Vec<f64>], pi: &[f64]| -> usize {
        let mut best = 0;
        let mut val = f64::INFINITY;
        for (i, w) in set.iter().enumerate() {
            let v: f64 = w.iter().zip(pi).map(|(a, b)| a * b).sum();
            if v < val {
                val = v;
                best = i;
            }
        }
        best
    };
    let vectors: Vec<AlphaVector> = points
        .par_iter()
        .map(|pi| {
            let mut best: Option<(f64, AlphaVector)> = None;
            for u in 0..nu {
                let mut w = costs[u].vectors[costs[u].argmin(pi)].weights.clone();
                for y in 0..ny {
                    let set = &gammas[u * ny + y];
                    for (acc, g) in w.iter_mut().zip(&set[best_in(set, pi)]) {
                        *acc += g;
                    }
                }
                let val: f64 = w.iter().zip(pi.iter()).map(|(a, b)| a * b).sum();
                if best.as_ref().is_none_or(|(bv, _)| val < *bv) {
                    best = Some((val, AlphaVector::new(w, Some(u), Provenance::Backup)));
                }
            }
            best.expect("at least one control").1
        })
        .collect();
    let (out, stats) = prune_pairwise(vectors);
    Ok((PwlcFunction::new(out)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasi::simplex_points;
    use rand::SeedableRng;

    fn surrogate_bellman(model: &PomdpModel, costs: &[PwlcFunction], next: &PwlcFunction, pi: &[f64]) -> f64 {
        (0..model.num_controls())
            .map(|u| {
                let p_y = model.observation_likelihood(pi, u);
                let mut v = costs[u].value(pi);
                for (y, &p) in p_y.iter().enumerate() {
                    if p > 0.0 {
                        v += p * next.value(&model.filter_update(pi, u, y).unwrap());
                    }
                }
                v
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn random_pwlc(rng: &mut impl rand::Rng, n: usize, k: usize) -> PwlcFunction {
        PwlcFunction::new(
            (0..k)
                .map(|_| AlphaVector::new((0..n).map(|_| rng.gen::<f64>()).collect(), None, Provenance::Backup))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_costs_and_zero_future_give_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let m = PomdpModel::random(&mut rng, 3, 2, 2, 3);
        let costs = vec![PwlcFunction::zero(3), PwlcFunction::zero(3)];
        let (j, _) = dp_backup(&m, &costs, &PwlcFunction::zero(3), PruneMode::Incremental, 1e-9, &[]).unwrap();
        assert_eq!(j.len(), 1);
        assert!(j.vectors[0].weights.iter().all(|w| *w == 0.0));
    }

    #[test]
    fn backup_matches_pointwise_bellman_evaluation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for (nu, ny) in [(1, 1), (2, 2), (3, 3)] {
            let m = PomdpModel::random(&mut rng, 3, nu, ny, 3);
            let costs: Vec<PwlcFunction> = (0..nu).map(|_| random_pwlc(&mut rng, 3, 4)).collect();
            let next = random_pwlc(&mut rng, 3, 6);
            for mode in [PruneMode::Incremental, PruneMode::Pairwise] {
                let (j, _) = dp_backup(&m, &costs, &next, mode, 1e-9, &[]).unwrap();
                for pi in simplex_points(3, 100) {
                    let want = surrogate_bellman(&m, &costs, &next, &pi);
                    assert!((j.value(&pi) - want).abs() < 1e-9, "{mode}: {} vs {want}", j.value(&pi));
                }
            }
        }
    }

    #[test]
    fn point_based_is_exact_at_its_points_and_an_upper_bound_elsewhere() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let m = PomdpModel::random(&mut rng, 3, 2, 2, 3);
        let costs: Vec<PwlcFunction> = (0..2).map(|_| random_pwlc(&mut rng, 3, 3)).collect();
        let next = random_pwlc(&mut rng, 3, 5);
        let pts = simplex_points(3, 20);
        let (j, _) = dp_backup(&m, &costs, &next, PruneMode::PointBased, 1e-9, &pts).unwrap();
        for p in &pts {
            assert!((j.value(p) - surrogate_bellman(&m, &costs, &next, p)).abs() < 1e-12);
        }
        for p in simplex_points(3, 500) {
            assert!(j.value(&p) >= surrogate_bellman(&m, &costs, &next, &p) - 1e-12);
        }
    }

    #[test]
    fn prune_mode_names() {
        for mode in [PruneMode::Incremental, PruneMode::Pairwise, PruneMode::PointBased] {
            assert_eq!(mode.to_string().parse::<PruneMode>().unwrap(), mode);
        }
        assert!("witness".parse::<PruneMode>().is_err());
    }
}
