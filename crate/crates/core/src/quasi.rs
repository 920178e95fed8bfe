//! Deterministic low-discrepancy sampling of the probability simplex.

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131,
];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// `count` interior points of the `dim`-simplex: Halton points in the unit
/// cube pushed through `-ln` and normalised, which maps uniform cube points
/// to uniform simplex points. Index 0 is skipped.
pub fn simplex_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "quasi-random sampling supports at most {} states", PRIMES.len());
    (1..=count as u64)
        .map(|idx| {
            let raw: Vec<f64> = PRIMES[..dim].iter().map(|&p| -radical_inverse(idx, p).ln()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        let got: Vec<f64> = (1..5).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(got, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn points_are_interior_and_normalised() {
        for p in simplex_points(4, 1000) {
            assert!(p.iter().all(|&v| v > 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_mean_is_near_centre() {
        let pts = simplex_points(3, 20_000);
        for i in 0..3 {
            let m = pts.iter().map(|p| p[i]).sum::<f64>() / pts.len() as f64;
            assert!((m - 1.0 / 3.0).abs() < 5e-3, "{m}");
        }
    }
}
