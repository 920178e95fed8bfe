use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::PomdpModel;
use crate::quasi::simplex_points;
use crate::simulate::{rng_from_seed, sample_index, Policy};

/// Mass placed on the uniform belief so every base point is interior.
pub const INTERIOR_MIX: f64 = 0.01;
/// Sample size for the empirical sparsity estimate.
pub const SPARSITY_SAMPLES: usize = 100_000;
pub const MIN_BASE_POINT_MASS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme", content = "resolution")]
pub enum BasePointScheme {
    /// Centre of the simplex plus one point near each vertex.
    Vertex,
    /// Every composition of `m` into `N` parts, mixed with the uniform belief.
    Lattice(usize),
}

impl fmt::Display for BasePointScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasePointScheme::Vertex => write!(f, "vertex"),
            BasePointScheme::Lattice(m) => write!(f, "lattice:{m}"),
        }
    }
}

impl FromStr for BasePointScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "vertex" {
            return Ok(BasePointScheme::Vertex);
        }
        if let Some(m) = s.strip_prefix("lattice:") {
            let m: usize = m.parse().map_err(|_| Error::InvalidArgument(format!("bad lattice resolution '{m}'")))?;
            return Ok(BasePointScheme::Lattice(m));
        }
        Err(Error::InvalidArgument(format!("unknown base-point scheme '{s}' (expected vertex or lattice:m)")))
    }
}

/// Interior beliefs at which tangent planes are taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasePointSet {
    pub scheme: BasePointScheme,
    pub points: Vec<Vec<f64>>,
    /// Largest sampled L1 distance from a belief to its nearest base point.
    pub sparsity: f64,
}

pub fn generate_base_points(num_states: usize, scheme: BasePointScheme) -> Result<BasePointSet> {
    if num_states == 0 {
        return Err(Error::InvalidArgument("num_states must be positive".into()));
    }
    let n = num_states;
    let mut points = match scheme {
        BasePointScheme::Vertex => {
            let mut pts = vec![vec![1.0 / n as f64; n]];
            for v in 0..n {
                let mut p = vec![INTERIOR_MIX; n];
                p[v] = 1.0 - INTERIOR_MIX * (n - 1) as f64;
                pts.push(p);
            }
            pts
        }
        BasePointScheme::Lattice(m) => {
            if m < 1 {
                return Err(Error::InvalidArgument("lattice resolution must be at least 1".into()));
            }
            compositions(m, n)
                .into_iter()
                .map(|c| {
                    c.into_iter()
                        .map(|ci| (1.0 - INTERIOR_MIX) * ci as f64 / m as f64 + INTERIOR_MIX / n as f64)
                        .collect()
                })
                .collect()
        }
    };
    points.dedup();
    debug_assert!(points.iter().flatten().all(|&v| v >= MIN_BASE_POINT_MASS));
    let sparsity = estimate_sparsity(&points, SPARSITY_SAMPLES);
    Ok(BasePointSet { scheme, points, sparsity })
}

/// All vectors of `parts` non-negative integers summing to `total`, in
/// lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// `max_pi min_xi |pi - xi|_1` over `samples` quasi-random beliefs.
pub fn estimate_sparsity(points: &[Vec<f64>], samples: usize) -> f64 {
    let n = points[0].len();
    simplex_points(n, samples)
        .par_iter()
        .map(|pi| {
            points
                .iter()
                .map(|xi| pi.iter().zip(xi).map(|(a, b)| (a - b).abs()).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

/// Filter beliefs visited along `runs` simulated trajectories. Controls come
/// from `policy` when given, otherwise uniformly at random; with a policy,
/// each control is replaced by a random one with probability `explore`.
pub fn reachable_beliefs(
    model: &PomdpModel,
    policy: Option<&dyn Policy>,
    runs: usize,
    explore: f64,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    let n = model.num_states();
    let ny = model.num_measurements();
    let nu = model.num_controls();
    let mut out = Vec::with_capacity(runs * model.horizon());
    for _ in 0..runs {
        let mut x = sample_index(&mut rng, model.initial_distribution().iter().copied());
        let y = sample_index(&mut rng, (0..ny).map(|y| model.initial_observation(x, y)));
        let Ok(mut belief) = model.initial_belief(y) else { continue };
        out.push(belief.to_vec());
        for k in 1..model.horizon() {
            let random = rng.gen::<f64>() < explore;
            let u = match policy {
                Some(p) if !random => p.action(k, &belief),
                _ => rng.gen_range(0..nu),
            };
            x = sample_index(&mut rng, (0..n).map(|i| model.transition(u, i, x)));
            let y = sample_index(&mut rng, (0..ny).map(|yy| model.observation(u, x, yy)));
            match model.filter_update(&belief, u, y) {
                Ok(b) => belief = b,
                Err(_) => break,
            }
            out.push(belief.to_vec());
        }
    }
    out
}

/// Appends `extra` to `points`, skipping exact duplicates.
pub fn merge_points(points: &mut Vec<Vec<f64>>, extra: Vec<Vec<f64>>) {
    let key = |p: &[f64]| p.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
    let mut seen: HashSet<Vec<u64>> = points.iter().map(|p| key(p)).collect();
    for p in extra {
        if seen.insert(key(&p)) {
            points.push(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_scheme_three_states() {
        let set = generate_base_points(3, BasePointScheme::Vertex).unwrap();
        assert_eq!(set.points.len(), 4);
        assert_eq!(set.points[0], vec![1.0 / 3.0; 3]);
        assert!((set.points[1][0] - 0.98).abs() < 1e-15);
        assert_eq!(set.points[2][0], 0.01);
        assert!((set.points[3][2] - 0.98).abs() < 1e-15);
    }

    #[test]
    fn lattice_counts() {
        let set = generate_base_points(2, BasePointScheme::Lattice(1)).unwrap();
        assert_eq!(set.points.len(), 2);
        assert!(set.points.iter().all(|p| p.iter().any(|&v| v > 0.99)));
        assert_eq!(generate_base_points(3, BasePointScheme::Lattice(4)).unwrap().points.len(), 15);
        assert!(generate_base_points(3, BasePointScheme::Lattice(0)).is_err());
    }

    #[test]
    fn lattices_are_nested_and_sparsity_shrinks() {
        let sets: Vec<BasePointSet> =
            [2, 4, 8].iter().map(|&m| generate_base_points(3, BasePointScheme::Lattice(m)).unwrap()).collect();
        for w in sets.windows(2) {
            for p in &w[0].points {
                assert!(w[1].points.iter().any(|q| q.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-15)));
            }
            assert!(w[1].sparsity < w[0].sparsity);
        }
    }

    #[test]
    fn reachable_beliefs_are_normalised_and_deduplicated() {
        let (m, _) = crate::experiments::build_cloud_model();
        let pts = reachable_beliefs(&m, None, 20, 0.0, 4);
        assert_eq!(pts.len(), 20 * m.horizon());
        assert!(pts.iter().all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-12));
        let mut merged = vec![pts[0].clone()];
        merge_points(&mut merged, pts.clone());
        assert!(merged.len() <= pts.len());
        assert_eq!(reachable_beliefs(&m, None, 20, 0.0, 4), pts);
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("vertex".parse::<BasePointScheme>().unwrap(), BasePointScheme::Vertex);
        assert_eq!("lattice:8".parse::<BasePointScheme>().unwrap(), BasePointScheme::Lattice(8));
        assert!("lattice:x".parse::<BasePointScheme>().is_err());
        assert_eq!(BasePointScheme::Lattice(3).to_string(), "lattice:3");
    }
}
