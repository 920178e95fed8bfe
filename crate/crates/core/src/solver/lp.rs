//! Dense dictionary-form simplex for `max c.x` subject to `A x <= b`,
//! `x >= 0`, `b >= 0` (the slack basis is feasible, so no phase one).

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        value: f64,
    },
    /// Stopped because the objective exceeded the requested threshold.
    Reached {
        x: Vec<f64>,
        value: f64,
    },
    Unbounded,
    /// Iteration limit or non-finite arithmetic.
    Failed,
}

pub struct DenseLp {
    m: usize,
    n: usize,
    /// Row-major `m x n` dictionary coefficients.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    z: f64,
    /// Variable label of each basic row; labels `< n` are structural.
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
}

impl DenseLp {
    /// `a` is row-major `b.len() x c.len()`. Negative `b` entries are
    /// clamped to zero (callers only pass round-off there).
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Self {
        let m = b.len();
        let n = c.len();
        assert_eq!(a.len(), m * n, "constraint matrix has wrong size");
        Self {
            m,
            n,
            a,
            b: b.into_iter().map(|v| v.max(0.0)).collect(),
            c,
            z: 0.0,
            basic: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
        }
    }

    fn solution(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (r, &label) in self.basic.iter().enumerate() {
            if label < self.n {
                x[label] = self.b[r];
            }
        }
        x
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let n = self.n;
        let inv = 1.0 / self.a[r * n + s];
        for j in 0..n {
            if j != s {
                self.a[r * n + j] *= inv;
            }
        }
        self.a[r * n + s] = inv;
        self.b[r] *= inv;
        let pivot_row: Vec<f64> = self.a[r * n..(r + 1) * n].to_vec();
        let br = self.b[r];

        for i in 0..self.m {
            if i == r {
                continue;
            }
            let row = &mut self.a[i * n..(i + 1) * n];
            let f = row[s];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                if j != s {
                    row[j] -= f * pivot_row[j];
                }
            }
            row[s] = -f * inv;
            self.b[i] -= f * br;
            if self.b[i] < 0.0 && self.b[i] > -1e-11 {
                self.b[i] = 0.0;
            }
        }

        let f = self.c[s];
        for j in 0..n {
            if j != s {
                self.c[j] -= f * pivot_row[j];
            }
        }
        self.c[s] = -f * inv;
        self.z += f * br;
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[s]);
    }

    /// Runs Bland's rule to optimality, stopping early once the objective
    /// exceeds `stop_above`.
    pub fn solve(mut self, stop_above: f64) -> LpOutcome {
        let max_iter = 50 * (self.m + self.n) + 100;
        for _ in 0..max_iter {
            if self.z > stop_above {
                return LpOutcome::Reached { x: self.solution(), value: self.z };
            }
            // entering: smallest label with positive reduced cost
            let mut s = None;
            for j in 0..self.n {
                if self.c[j] > PIVOT_EPS && s.is_none_or(|k: usize| self.nonbasic[j] < self.nonbasic[k]) {
                    s = Some(j);
                }
            }
            let Some(s) = s else {
                return LpOutcome::Optimal { x: self.solution(), value: self.z };
            };
            // leaving: minimum ratio, ties to smallest label
            let mut r: Option<usize> = None;
            let mut best = f64::INFINITY;
            for i in 0..self.m {
                let a = self.a[i * self.n + s];
                if a > PIVOT_EPS {
                    let ratio = self.b[i] / a;
                    let better = match r {
                        None => true,
                        Some(k) => ratio < best || (ratio == best && self.basic[i] < self.basic[k]),
                    };
                    if better {
                        best = ratio;
                        r = Some(i);
                    }
                }
            }
            let Some(r) = r else {
                return LpOutcome::Unbounded;
            };
            self.pivot(r, s);
            if !self.z.is_finite() {
                return LpOutcome::Failed;
            }
        }
        LpOutcome::Failed
    }
}

/// Result of a witness search.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// A belief where the candidate beats every competitor by more than the margin.
    Found(Vec<f64>),
    None,
    /// The LP did not terminate cleanly.
    Failed,
}

/// Looks for a belief `pi` with `<pi, alpha> + margin < <pi, w>` for every
/// `w` in `competitors`.
pub fn find_witness(alpha: &[f64], competitors: &[&[f64]], margin: f64) -> Witness {
    let n = alpha.len();
    if competitors.is_empty() {
        return Witness::Found(vec![1.0 / n as f64; n]);
    }
    let rows: Vec<Vec<f64>> =
        competitors.iter().map(|w| alpha.iter().zip(w.iter()).map(|(a, b)| a - b).collect()).collect();
    find_witness_rows(&rows, n, margin)
}

/// Looks for a belief with `<pi, row> + margin < 0` for every row. Each row is
/// a difference `alpha - w` between a candidate and one competitor.
///
/// Eliminates `pi_N = 1 - sum_{i<N} pi_i` and shifts the margin variable
/// `d = e - D` so every right-hand side is non-negative.
pub fn find_witness_rows(rows: &[Vec<f64>], n: usize, margin: f64) -> Witness {
    if rows.is_empty() {
        return Witness::Found(vec![1.0 / n as f64; n]);
    }
    let last = n - 1;
    let shift = rows.iter().map(|r| r[last]).fold(f64::NEG_INFINITY, f64::max);
    // columns: pi_0..pi_{N-2}, e
    let cols = n;
    let m = rows.len() + 1;
    let mut a = vec![0.0; m * cols];
    let mut b = vec![0.0; m];
    for (r, d) in rows.iter().enumerate() {
        let tail = d[last];
        for i in 0..last {
            a[r * cols + i] = d[i] - tail;
        }
        a[r * cols + last] = 1.0;
        b[r] = shift - tail;
    }
    let r = rows.len();
    for i in 0..last {
        a[r * cols + i] = 1.0;
    }
    b[r] = 1.0;
    let mut c = vec![0.0; cols];
    c[last] = 1.0;

    match DenseLp::new(a, b, c).solve(shift + margin) {
        LpOutcome::Optimal { x, value } | LpOutcome::Reached { x, value } => {
            if value - shift > margin {
                let mut pi: Vec<f64> = x[..last].iter().map(|v| v.max(0.0)).collect();
                let head: f64 = pi.iter().sum();
                pi.push((1.0 - head).max(0.0));
                let s: f64 = pi.iter().sum();
                pi.iter_mut().for_each(|v| *v /= s);
                Witness::Found(pi)
            } else {
                Witness::None
            }
        }
        LpOutcome::Unbounded | LpOutcome::Failed => Witness::Failed,
    }
}
