//! Exact integer matrix helpers: determinants, lower-triangular Hermite
//! normal form, and exact inverses for lattice membership tests.
//!
//! Everything here is exact. Intermediate values use `BigInt` (Hermite
//! elimination and cofactor growth overflow machine words long before the
//! final, small canonical entries appear), and results are converted back
//! to `i64`/`i128` where they provably fit.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::Euclid;
use num::{One, Signed, ToPrimitive, Zero};

/// Square integer matrix, rows span the lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IMat {
    pub n: usize,
    pub rows: Vec<Vec<i64>>,
}

impl IMat {
    pub fn new(rows: Vec<Vec<i64>>) -> Self {
        let n = rows.len();
        assert!(n > 0, "empty matrix");
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        IMat { n, rows }
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
            .collect();
        IMat { n, rows }
    }

    pub fn scaled(&self, s: i64) -> Self {
        IMat {
            n: self.n,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&x| x * s).collect())
                .collect(),
        }
    }

    /// Right-multiply by another square matrix: `self * other`.
    pub fn mul(&self, other: &IMat) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut rows = vec![vec![0i64; n]; n];
        for i in 0..n {
            for k in 0..n {
                let a = self.rows[i][k];
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    rows[i][j] += a * other.rows[k][j];
                }
            }
        }
        IMat { n, rows }
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let rows = (0..n)
            .map(|i| (0..n).map(|j| self.rows[j][i]).collect())
            .collect();
        IMat { n, rows }
    }

    /// Exact determinant via fraction-free Bareiss elimination.
    pub fn det(&self) -> BigInt {
        let n = self.n;
        let mut m: Vec<Vec<BigInt>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[k][k].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                    return BigInt::zero();
                };
                m.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = &t / &prev;
                }
            }
            prev = m[k][k].clone();
        }
        sign * m[n - 1][n - 1].clone()
    }

    pub fn det_abs(&self) -> BigInt {
        self.det().abs()
    }

    /// Lower-triangular Hermite normal form of the row lattice.
    ///
    /// Returns a matrix spanning the same lattice with positive diagonal
    /// and each below-diagonal entry reduced into `[0, diag)`. `None` if
    /// the matrix is singular.
    pub fn hnf_lower(&self) -> Option<IMat> {
        hnf_lower_from_rows(self.rows.clone(), self.n)
    }

    /// Exact inverse as `(num, den)` with `G⁻¹ = num / den`, `den > 0`.
    pub fn inverse_scaled(&self) -> Option<(Vec<Vec<BigInt>>, BigInt)> {
        let n = self.n;
        let mut a: Vec<Vec<BigRational>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&x| BigRational::from(BigInt::from(x))).collect())
            .collect();
        let mut inv: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| BigRational::from(BigInt::from(i64::from(i == j))))
                    .collect()
            })
            .collect();
        for col in 0..n {
            let piv = (col..n).find(|&i| !a[i][col].is_zero())?;
            a.swap(col, piv);
            inv.swap(col, piv);
            let p = a[col][col].clone();
            for j in 0..n {
                a[col][j] /= p.clone();
                inv[col][j] /= p.clone();
            }
            for i in 0..n {
                if i == col || a[i][col].is_zero() {
                    continue;
                }
                let f = a[i][col].clone();
                for j in 0..n {
                    let t = a[i][j].clone() - f.clone() * a[col][j].clone();
                    a[i][j] = t;
                    let t = inv[i][j].clone() - f.clone() * inv[col][j].clone();
                    inv[i][j] = t;
                }
            }
        }
        // Common denominator: lcm of all entry denominators.
        let mut den = BigInt::one();
        for r in &inv {
            for x in r {
                den = num::integer::lcm(den.clone(), x.denom().clone());
            }
        }
        let num = inv
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| x.numer() * (&den / x.denom()))
                    .collect::<Vec<_>>()
            })
            .collect();
        Some((num, den))
    }

    pub fn as_f64(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&x| x as f64).collect())
            .collect()
    }
}

/// Lower-triangular HNF basis of the lattice spanned by `rows` (any count
/// of n-vectors, possibly redundant). `None` when the span has rank < n.
pub fn hnf_lower_from_rows(rows: Vec<Vec<i64>>, n: usize) -> Option<IMat> {
    assert!(rows.iter().all(|r| r.len() == n));
    let mut free: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut pivots: Vec<Option<Vec<BigInt>>> = vec![None; n];
    // Process columns from the last to the first; gcd row steps leave one
    // pivot per column, every other remaining row zero there.
    for col in (0..n).rev() {
        loop {
            let mut nz: Vec<usize> = (0..free.len())
                .filter(|&i| !free[i][col].is_zero())
                .collect();
            if nz.is_empty() {
                return None; // rank deficient
            }
            if nz.len() == 1 {
                let mut p = free.swap_remove(nz[0]);
                if p[col].is_negative() {
                    for x in p.iter_mut() {
                        *x = -x.clone();
                    }
                }
                pivots[col] = Some(p);
                break;
            }
            nz.sort_by_key(|&i| free[i][col].abs());
            let (a, b) = (nz[0], nz[1]);
            let q = &free[b][col] / &free[a][col];
            for j in 0..n {
                let t = &free[b][j] - &q * &free[a][j];
                free[b][j] = t;
            }
        }
    }
    let mut m: Vec<Vec<BigInt>> = pivots.into_iter().map(|p| p.unwrap()).collect();
    // Reduce below-diagonal entries modulo the diagonal above them.
    for i in 0..n {
        for j in (0..i).rev() {
            let h = m[j][j].clone();
            let q = m[i][j].div_euclid(&h);
            if !q.is_zero() {
                for t in 0..=j {
                    let v = &m[i][t] - &q * &m[j][t];
                    m[i][t] = v;
                }
            }
        }
    }
    let rows: Vec<Vec<i64>> = m
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| x.to_i64().expect("HNF entry exceeds i64"))
                .collect()
        })
        .collect();
    Some(IMat { n, rows })
}

/// Exact membership tester for an integer-generator lattice: `v` belongs to
/// the row lattice of `g` iff `v · g⁻¹` is integral.
#[derive(Debug, Clone)]
pub struct MembershipTest {
    n: usize,
    /// `g⁻¹ * den`, column-major not needed; kept row-major.
    num: Vec<Vec<BigInt>>,
    den: BigInt,
    /// i128 fast path when every value fits.
    fast: Option<(Vec<Vec<i128>>, i128)>,
}

impl MembershipTest {
    pub fn new(g: &IMat) -> Option<Self> {
        let (num, den) = g.inverse_scaled()?;
        let fast = (|| {
            let d = den.to_i128()?;
            let mut rows = Vec::with_capacity(g.n);
            for r in &num {
                let mut row = Vec::with_capacity(g.n);
                for x in r {
                    row.push(x.to_i128()?);
                }
                rows.push(row);
            }
            Some((rows, d))
        })();
        Some(MembershipTest { n: g.n, num, den, fast })
    }

    /// True iff `v` lies in the lattice.
    pub fn contains(&self, v: &[i64]) -> bool {
        self.contains_scaled(v, 1)
    }

    /// True iff `mult · v` lies in the lattice of the numerator matrix.
    /// Used for lattices stored as `num / den`: `v ∈ num/den ⟺ den·v ∈ num`.
    pub fn contains_scaled(&self, v: &[i64], mult: i64) -> bool {
        assert_eq!(v.len(), self.n);
        if let Some((num, den)) = &self.fast {
            // mult·v · num must be divisible by den componentwise.
            for j in 0..self.n {
                let mut acc: i128 = 0;
                for i in 0..self.n {
                    acc += mult as i128 * v[i] as i128 * num[i][j];
                }
                if acc % den != 0 {
                    return false;
                }
            }
            return true;
        }
        for j in 0..self.n {
            let mut acc = BigInt::zero();
            for i in 0..self.n {
                acc += BigInt::from(mult) * BigInt::from(v[i]) * &self.num[i][j];
            }
            if !(acc % &self.den).is_zero() {
                return false;
            }
        }
        true
    }
}
