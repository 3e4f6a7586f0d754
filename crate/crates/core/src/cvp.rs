//! Generic closest-vector solver: LLL basis reduction followed by
//! Schnorr–Euchner depth-first enumeration with radius shrinking.
//!
//! This is the exact fallback quantizer for lattices without a dedicated
//! rounding rule (Barnes–Wall, Leech, and anything loaded from a file).
//! The basis is length-reduced once up front; without that step the
//! 24-dimensional enumeration is infeasible.

/// Pruning slack absorbing Gram–Schmidt rounding error. True distances are
/// compared exactly on the candidate points themselves, so slack can only
/// admit extra nodes, never lose the optimum.
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Enumerator {
    n: usize,
    /// LLL-reduced basis rows.
    basis: Vec<Vec<f64>>,
    /// Gram–Schmidt coefficients, `mu[j][k]` for k < j.
    mu: Vec<Vec<f64>>,
    /// Orthogonalized rows and their squared norms.
    star: Vec<Vec<f64>>,
    bnorm2: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist2(y: &[f64], p: &[f64]) -> f64 {
    y.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Gram–Schmidt orthogonalization; returns (mu, star, squared norms).
#[allow(clippy::type_complexity)]
fn gso(basis: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let n = basis.len();
    let dim = basis[0].len();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    let mut bnorm2 = vec![0.0; n];
    for i in 0..n {
        let mut v = basis[i].clone();
        for j in 0..i {
            let m = if bnorm2[j] > 0.0 { dot(&basis[i], &star[j]) / bnorm2[j] } else { 0.0 };
            mu[i][j] = m;
            for d in 0..dim {
                v[d] -= m * star[j][d];
            }
        }
        bnorm2[i] = dot(&v, &v);
        star.push(v);
    }
    (mu, star, bnorm2)
}

/// In-place LLL reduction with delta = 0.99.
fn lll_reduce(basis: &mut [Vec<f64>]) {
    const DELTA: f64 = 0.99;
    let n = basis.len();
    if n < 2 {
        return;
    }
    let (mut mu, _, mut bnorm2) = gso(basis);
    let mut k = 1;
    let mut guard = 0usize;
    while k < n {
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if q != 0.0 {
                for d in 0..basis[k].len() {
                    basis[k][d] -= q * basis[j][d];
                }
                let (m2, _, b2) = gso(basis);
                mu = m2;
                bnorm2 = b2;
            }
        }
        if bnorm2[k] >= (DELTA - mu[k][k - 1] * mu[k][k - 1]) * bnorm2[k - 1] {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            let (m2, _, b2) = gso(basis);
            mu = m2;
            bnorm2 = b2;
            k = k.max(2) - 1;
        }
        guard += 1;
        if guard > 100_000 {
            break; // float LLL can oscillate on degenerate input
        }
    }
}

struct Search<'a> {
    e: &'a Enumerator,
    target: &'a [f64],
    /// Target coordinates in the orthogonalized frame.
    tstar: Vec<f64>,
    coeffs: Vec<i64>,
    best_coeffs: Vec<i64>,
    best_point: Vec<f64>,
    best_d2: f64,
    bound: f64,
    exclude_zero: bool,
}

impl Enumerator {
    /// Build from generator rows. The rows are copied and LLL-reduced.
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        assert!(n > 0 && rows.iter().all(|r| r.len() == n));
        let mut basis = rows;
        lll_reduce(&mut basis);
        let (mu, star, bnorm2) = gso(&basis);
        assert!(
            bnorm2.iter().all(|&b| b > 0.0),
            "singular basis passed to enumerator"
        );
        Enumerator { n, basis, mu, star, bnorm2 }
    }

    /// Exact nearest lattice point and its squared distance to `y`.
    pub fn nearest(&self, y: &[f64]) -> (Vec<f64>, f64) {
        assert_eq!(y.len(), self.n);
        assert!(y.iter().all(|v| v.is_finite()), "non-finite input coordinate");
        let mut s = self.start(y, false);
        s.descend(self.n, 0.0);
        let d2 = s.best_d2;
        (s.best_point, d2)
    }

    /// Squared norm of a shortest nonzero lattice vector.
    pub fn min_norm2(&self) -> f64 {
        let origin = vec![0.0; self.n];
        let mut s = self.start(&origin, true);
        // Shortest reduced row is an upper bound; seed it as the incumbent.
        let (i0, ub) = self
            .basis
            .iter()
            .map(|r| dot(r, r))
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        s.best_coeffs[i0] = 1;
        s.best_point = self.basis[i0].clone();
        s.best_d2 = ub;
        s.bound = ub * (1.0 + PRUNE_SLACK) + PRUNE_SLACK;
        s.descend(self.n, 0.0);
        s.best_d2
    }

    fn start<'a>(&'a self, y: &'a [f64], exclude_zero: bool) -> Search<'a> {
        let n = self.n;
        let tstar = (0..n).map(|i| dot(y, &self.star[i]) / self.bnorm2[i]).collect();
        Search {
            e: self,
            target: y,
            tstar,
            coeffs: vec![0; n],
            best_coeffs: vec![0; n],
            best_point: vec![0.0; n],
            best_d2: f64::INFINITY,
            bound: f64::INFINITY,
            exclude_zero,
        }
    }
}

impl<'a> Search<'a> {
    fn descend(&mut self, level_plus1: usize, partial: f64) {
        if level_plus1 == 0 {
            if self.exclude_zero && self.coeffs.iter().all(|&c| c == 0) {
                return;
            }
            // Leaf: evaluate the true point exactly.
            let mut p = vec![0.0; self.e.n];
            for (i, &c) in self.coeffs.iter().enumerate() {
                if c != 0 {
                    for d in 0..self.e.n {
                        p[d] += c as f64 * self.e.basis[i][d];
                    }
                }
            }
            let d2 = dist2(self.target, &p);
            let better = d2 < self.best_d2
                || (d2 == self.best_d2 && lex_less(&p, &self.best_point));
            if better {
                self.best_d2 = d2;
                self.best_point = p;
                self.best_coeffs = self.coeffs.clone();
                self.bound = d2 * (1.0 + PRUNE_SLACK) + PRUNE_SLACK;
            }
            return;
        }
        let k = level_plus1 - 1;
        let mut center = self.tstar[k];
        for j in k + 1..self.e.n {
            if self.coeffs[j] != 0 {
                center -= self.e.mu[j][k] * self.coeffs[j] as f64;
            }
        }
        let bk = self.e.bnorm2[k];
        let x0 = (center + 0.5).floor();
        let dir: f64 = if center - x0 >= 0.0 { 1.0 } else { -1.0 };
        // Candidates x0, x0+dir, x0-dir, x0+2dir, ... are sorted by distance
        // from the center, so the first bound violation ends the level.
        let mut idx: u64 = 0;
        loop {
            let offset = match idx {
                0 => 0.0,
                i if i % 2 == 1 => ((i + 1) / 2) as f64 * dir,
                i => -((i / 2) as f64) * dir,
            };
            let diff = x0 + offset - center;
            let contrib = diff * diff * bk;
            if partial + contrib > self.bound {
                break;
            }
            self.coeffs[k] = (x0 + offset) as i64;
            self.descend(k, partial + contrib);
            idx += 1;
        }
        self.coeffs[k] = 0;
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}
