//! Lattice families, exact closest-point quantizers, the pairwise rotation
//! operator, and lattice-partition utilities (coset tables, partition
//! chains).
//!
//! Fast coordinate-rule quantizers exist for the cubic, checkerboard and
//! Gosset families; Barnes–Wall and Leech lattices fall back to the generic
//! sphere decoder in [`crate::cvp`]. All quantizers are exact, which the
//! test suite checks against brute force and the generic decoder.

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::OnceLock;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{ToPrimitive, Zero};

use crate::cvp::Enumerator;
use crate::matrix::{hnf_lower_from_rows, IMat, MembershipTest};

#[derive(thiserror::Error, Debug)]
pub enum LatticeError {
    #[error("dimension must be even and positive, got {0}")]
    OddDimension(usize),
    #[error("generator matrix is singular")]
    Singular,
    #[error("{child} is not a sublattice of {parent}")]
    NotASublattice { parent: String, child: String },
    #[error("partition order {0} is not a power of 2")]
    NotPowerOfTwo(String),
    #[error("partition order {0} is too large to enumerate")]
    OrderTooLarge(String),
    #[error("unknown lattice name '{0}'")]
    UnknownName(String),
    #[error("invalid partition chain: {0}")]
    BadChain(String),
    #[error("rotation not supported for {0}")]
    UnsupportedRotation(String),
    #[error("failed to read matrix file: {0}")]
    Io(#[from] std::io::Error),
    #[error("matrix parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, LatticeError>;

/// Round to the nearest integer, halves toward +infinity. This is the one
/// tie rule used everywhere so that encode, decode and oracle comparisons
/// stay deterministic.
#[inline]
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Componentwise nearest point of `scale·Zⁿ + translate`.
pub fn quantize_cubic(y: &[f64], scale: f64, translate: &[f64]) -> Vec<f64> {
    assert!(scale > 0.0);
    assert_eq!(y.len(), translate.len());
    y.iter()
        .zip(translate)
        .map(|(&v, &t)| scale * round_half_up((v - t) / scale) + t)
        .collect()
}

/// Nearest point of Dₙ = {x ∈ Zⁿ : Σxᵢ even}: round everything, then flip
/// the worst coordinate if the parity came out odd.
pub fn quantize_dn(y: &[f64]) -> Vec<f64> {
    assert!(y.len() >= 2);
    let mut f: Vec<f64> = y.iter().map(|&v| round_half_up(v)).collect();
    let parity: i64 = f.iter().map(|&v| v as i64).sum::<i64>() & 1;
    if parity != 0 {
        let mut worst = 0usize;
        let mut werr = -1.0;
        for (i, (&v, &q)) in y.iter().zip(f.iter()).enumerate() {
            let e = (v - q).abs();
            if e > werr {
                werr = e;
                worst = i;
            }
        }
        f[worst] += if y[worst] - f[worst] >= 0.0 { 1.0 } else { -1.0 };
    }
    f
}

/// Nearest point of E₈ via its decomposition into D₈ ∪ (D₈ + ½·1):
/// quantize to both cosets and keep the closer (D₈ branch on ties).
pub fn quantize_e8(y: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), 8);
    let q0 = quantize_dn(y);
    let shifted: Vec<f64> = y.iter().map(|&v| v - 0.5).collect();
    let mut q1 = quantize_dn(&shifted);
    for v in q1.iter_mut() {
        *v += 0.5;
    }
    let d0: f64 = y.iter().zip(&q0).map(|(a, b)| (a - b) * (a - b)).sum();
    let d1: f64 = y.iter().zip(&q1).map(|(a, b)| (a - b) * (a - b)).sum();
    if d1 < d0 {
        q1
    } else {
        q0
    }
}

/// The n×n integer rotation operator: block diagonal with 2×2 blocks
/// [[1,1],[-1,1]]. Right-multiplying a generator rotates every coordinate
/// pair by 45° and scales by √2; det = 2^(n/2).
pub fn build_rotation(n: usize) -> Result<IMat> {
    if n == 0 || n % 2 != 0 {
        return Err(LatticeError::OddDimension(n));
    }
    let mut rows = vec![vec![0i64; n]; n];
    for b in 0..n / 2 {
        rows[2 * b][2 * b] = 1;
        rows[2 * b][2 * b + 1] = 1;
        rows[2 * b + 1][2 * b] = -1;
        rows[2 * b + 1][2 * b + 1] = 1;
    }
    Ok(IMat::new(rows))
}

/// Apply the rotation to a point: per pair (a,b) → (a−b, a+b).
pub fn rotate_point(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    for c in v.chunks_exact(2) {
        out.push(c[0] - c[1]);
        out.push(c[0] + c[1]);
    }
    out
}

/// Apply the inverse rotation: per pair (a,b) → ((a+b)/2, (b−a)/2).
pub fn unrotate_point(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    for c in v.chunks_exact(2) {
        out.push((c[0] + c[1]) / 2.0);
        out.push((c[1] - c[0]) / 2.0);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// scale·Zⁿ
    Cubic,
    /// scale·Dₙ
    Checkerboard,
    /// scale·E₈
    Gosset,
    /// scale·Λ₁₆
    BarnesWall,
    /// scale·Λ₂₄
    Leech,
    /// Anything loaded from a file or derived; sphere decoder only.
    Generic,
}

/// An n-dimensional lattice spanned by the rows of its generator matrix.
///
/// The generator is stored exactly as `gen_num / gen_den` (the Gosset base
/// lattice has half-integer coordinates). `scale` and `rot` record how the
/// lattice was derived from its base family so quantization can dispatch
/// to the fast coordinate rules.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub name: String,
    pub n: usize,
    pub family: Family,
    scale: i64,
    rot: u8,
    gen_num: IMat,
    gen_den: i64,
    solver: OnceLock<Enumerator>,
    member: OnceLock<MembershipTest>,
}

impl Lattice {
    fn from_parts(name: String, family: Family, scale: i64, rot: u8, gen_num: IMat, gen_den: i64) -> Self {
        let n = gen_num.n;
        let mut l = Lattice {
            name,
            n,
            family,
            scale,
            rot,
            gen_num,
            gen_den,
            solver: OnceLock::new(),
            member: OnceLock::new(),
        };
        l.normalize_den();
        l
    }

    fn normalize_den(&mut self) {
        while self.gen_den > 1
            && self
                .gen_num
                .rows
                .iter()
                .all(|r| r.iter().all(|&x| x % 2 == 0))
            && self.gen_den % 2 == 0
        {
            self.gen_den /= 2;
            for r in self.gen_num.rows.iter_mut() {
                for x in r.iter_mut() {
                    *x /= 2;
                }
            }
        }
    }

    /// Zⁿ.
    pub fn cubic(n: usize) -> Self {
        Self::from_parts(format!("Z{n}"), Family::Cubic, 1, 0, IMat::identity(n), 1)
    }

    /// Dₙ, integer points with an even coordinate sum.
    pub fn checkerboard(n: usize) -> Self {
        assert!(n >= 2);
        let mut rows = vec![vec![0i64; n]; n];
        rows[0][0] = 1;
        rows[0][1] = 1;
        for i in 1..n {
            rows[i][i - 1] = 1;
            rows[i][i] = -1;
        }
        Self::from_parts(format!("D{n}"), Family::Checkerboard, 1, 0, IMat::new(rows), 1)
    }

    /// E₈ in the unimodular scaling (minimum squared norm 2); generator
    /// entries are half-integers.
    pub fn gosset() -> Self {
        let mut num = vec![vec![0i64; 8]; 8];
        num[0][0] = 4;
        for i in 1..7 {
            num[i][i - 1] = -2;
            num[i][i] = 2;
        }
        for j in 0..8 {
            num[7][j] = 1;
        }
        Self::from_parts("E8".into(), Family::Gosset, 1, 0, IMat::new(num), 2)
    }

    /// The 16-dimensional Barnes–Wall lattice as an integer sublattice of
    /// Z¹⁶ (determinant 2¹², minimum squared norm 8), built from the
    /// first-order Reed–Muller code: Λ₁₆ = RM(1,4) + 2·(even-weight) + 4Z¹⁶.
    pub fn barnes_wall16() -> Self {
        let n = 16;
        let mut span: Vec<Vec<i64>> = Vec::new();
        // RM(1,4) generators: the all-ones row and the four coordinate bits.
        span.push(vec![1i64; n]);
        for bit in 0..4 {
            span.push((0..n).map(|p| ((p >> bit) & 1) as i64).collect());
        }
        // 2 · (even-weight code) generators.
        for i in 0..n - 1 {
            let mut r = vec![0i64; n];
            r[i] = 2;
            r[i + 1] = 2;
            span.push(r);
        }
        for i in 0..n {
            let mut r = vec![0i64; n];
            r[i] = 4;
            span.push(r);
        }
        let gen = hnf_lower_from_rows(span, n).expect("BW16 span is full rank");
        Self::from_parts("BW16".into(), Family::BarnesWall, 1, 0, gen, 1)
    }

    /// The Leech lattice as an integer sublattice of Z²⁴ (determinant 2³⁶,
    /// minimum squared norm 32), assembled from the extended binary Golay
    /// code: doubled codewords, 4·D₂₄, and one odd-class vector.
    pub fn leech24() -> Self {
        let n = 24;
        let mut span: Vec<Vec<i64>> = Vec::new();
        for c in golay_extended_generators() {
            span.push(c.iter().map(|&b| 2 * b as i64).collect());
        }
        let mut r = vec![0i64; n];
        r[0] = 4;
        r[1] = 4;
        span.push(r);
        for i in 0..n - 1 {
            let mut r = vec![0i64; n];
            r[i] = 4;
            r[i + 1] = -4;
            span.push(r);
        }
        let mut odd = vec![1i64; n];
        odd[0] = -3;
        span.push(odd);
        let gen = hnf_lower_from_rows(span, n).expect("Leech span is full rank");
        Self::from_parts("Leech24".into(), Family::Leech, 1, 0, gen, 1)
    }

    /// A generic lattice from explicit generator rows (`num / den`).
    pub fn generic(name: impl Into<String>, gen: IMat, den: i64) -> Result<Self> {
        if gen.det().is_zero() {
            return Err(LatticeError::Singular);
        }
        Ok(Self::from_parts(name.into(), Family::Generic, 1, 0, gen, den))
    }

    /// Load a generator from a plain-text file: one row per line, entries
    /// whitespace-separated integers or rationals like `1/2`.
    pub fn from_matrix_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows: Vec<Vec<(i64, i64)>> = Vec::new();
        for (lno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut row = Vec::new();
            for tok in line.split_whitespace() {
                let (num, den) = match tok.split_once('/') {
                    Some((a, b)) => (
                        i64::from_str(a).map_err(|_| bad_tok(lno, tok))?,
                        i64::from_str(b).map_err(|_| bad_tok(lno, tok))?,
                    ),
                    None => (i64::from_str(tok).map_err(|_| bad_tok(lno, tok))?, 1),
                };
                if den == 0 {
                    return Err(bad_tok(lno, tok));
                }
                row.push((num, den));
            }
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(LatticeError::Parse("matrix must be square and non-empty".into()));
        }
        let mut den = 1i64;
        for r in &rows {
            for &(_, d) in r {
                den = num::integer::lcm(den, d.abs());
            }
        }
        let int_rows: Vec<Vec<i64>> = rows
            .iter()
            .map(|r| r.iter().map(|&(a, d)| a * (den / d)).collect())
            .collect();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "file".into());
        Self::generic(name, IMat::new(int_rows), den)
    }

    /// Parse a built-in name: optional integer scale, family (`Z<n>`,
    /// `D<n>`, `E8`, `BW16`, `Leech24`), optional trailing `R` rotation.
    pub fn by_name(name: &str) -> Result<Self> {
        let orig = name;
        let mut s = name;
        let scale_end = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
        let scale: i64 = if scale_end > 0 {
            s[..scale_end].parse().map_err(|_| LatticeError::UnknownName(orig.into()))?
        } else {
            1
        };
        s = &s[scale_end..];
        let rot = if let Some(rest) = s.strip_suffix('R') {
            s = rest;
            1u8
        } else {
            0u8
        };
        let base = if let Some(d) = s.strip_prefix('Z') {
            let n: usize = d.parse().map_err(|_| LatticeError::UnknownName(orig.into()))?;
            Lattice::cubic(n)
        } else if s == "E8" {
            Lattice::gosset()
        } else if s == "BW16" {
            Lattice::barnes_wall16()
        } else if s == "Leech24" {
            Lattice::leech24()
        } else if let Some(d) = s.strip_prefix('D') {
            let n: usize = d.parse().map_err(|_| LatticeError::UnknownName(orig.into()))?;
            if n < 2 {
                return Err(LatticeError::UnknownName(orig.into()));
            }
            Lattice::checkerboard(n)
        } else {
            return Err(LatticeError::UnknownName(orig.into()));
        };
        let mut l = if scale != 1 { base.scaled(scale) } else { base };
        if rot == 1 {
            l = l.rotated()?;
        }
        Ok(l)
    }

    /// The lattice scaled by a positive integer.
    pub fn scaled(&self, s: i64) -> Self {
        assert!(s > 0);
        if s == 1 {
            return self.clone();
        }
        let name = if self.scale == 1 && self.rot == 0 {
            format!("{s}{}", self.name)
        } else {
            format!("{s}({})", self.name)
        };
        Self::from_parts(
            name,
            self.family,
            self.scale * s,
            self.rot,
            self.gen_num.scaled(s),
            self.gen_den,
        )
    }

    /// The lattice right-multiplied by the rotation operator Rₙ.
    ///
    /// A second rotation is folded into scale 2 for the families invariant
    /// under the per-pair 90° rotation (cubic, checkerboard, Gosset).
    pub fn rotated(&self) -> Result<Self> {
        let r = build_rotation(self.n)?;
        let gen = self.gen_num.mul(&r);
        if self.rot == 0 {
            Ok(Self::from_parts(
                format!("{}R", self.name),
                self.family,
                self.scale,
                1,
                gen,
                self.gen_den,
            ))
        } else {
            match self.family {
                Family::Cubic | Family::Checkerboard | Family::Gosset => Ok(Self::from_parts(
                    format!("{}R", self.name),
                    self.family,
                    self.scale * 2,
                    0,
                    gen,
                    self.gen_den,
                )),
                _ => Err(LatticeError::UnsupportedRotation(self.name.clone())),
            }
        }
    }

    pub fn generator(&self) -> &IMat {
        &self.gen_num
    }

    pub fn generator_den(&self) -> i64 {
        self.gen_den
    }

    pub fn generator_f64(&self) -> Vec<Vec<f64>> {
        let d = self.gen_den as f64;
        self.gen_num
            .rows
            .iter()
            .map(|r| r.iter().map(|&x| x as f64 / d).collect())
            .collect()
    }

    pub fn is_integral(&self) -> bool {
        self.gen_den == 1
    }

    /// |det| of the generator, exact.
    pub fn det_abs(&self) -> BigRational {
        let num = self.gen_num.det_abs();
        let den = BigInt::from(self.gen_den).pow(self.n as u32);
        BigRational::new(num, den)
    }

    fn solver(&self) -> &Enumerator {
        self.solver.get_or_init(|| Enumerator::new(self.generator_f64()))
    }

    fn membership(&self) -> &MembershipTest {
        self.member
            .get_or_init(|| MembershipTest::new(&self.gen_num).expect("nonsingular generator"))
    }

    /// Exact membership test for integer points.
    pub fn contains_int(&self, v: &[i64]) -> bool {
        self.membership().contains_scaled(v, self.gen_den)
    }

    /// Exact nearest lattice point. Fast coordinate rules where the family
    /// has one, sphere decoding otherwise.
    pub fn quantize(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n);
        match self.family {
            Family::Cubic | Family::Checkerboard | Family::Gosset => {
                if self.rot == 1 {
                    let yr = unrotate_point(y);
                    rotate_point(&self.quantize_base(&yr))
                } else {
                    self.quantize_base(y)
                }
            }
            _ => self.solver().nearest(y).0,
        }
    }

    fn quantize_base(&self, y: &[f64]) -> Vec<f64> {
        let s = self.scale as f64;
        let ys: Vec<f64> = y.iter().map(|&v| v / s).collect();
        let q = match self.family {
            Family::Cubic => ys.iter().map(|&v| round_half_up(v)).collect(),
            Family::Checkerboard => quantize_dn(&ys),
            Family::Gosset => quantize_e8(&ys),
            _ => unreachable!(),
        };
        q.iter().map(|&v| v * s).collect()
    }

    /// Exact nearest point by sphere decoding, regardless of family.
    pub fn quantize_sphere(&self, y: &[f64]) -> (Vec<f64>, f64) {
        self.solver().nearest(y)
    }

    /// Squared norm of a shortest nonzero lattice vector.
    pub fn min_norm2(&self) -> f64 {
        self.solver().min_norm2()
    }
}

fn bad_tok(lno: usize, tok: &str) -> LatticeError {
    LatticeError::Parse(format!("line {}: bad entry '{}'", lno + 1, tok))
}

/// Generator rows of the extended binary Golay code [24,12,8]: the cyclic
/// [23,12] code of g(x) = x¹¹+x¹⁰+x⁶+x⁵+x⁴+x²+1 plus an overall parity bit.
fn golay_extended_generators() -> Vec<Vec<u8>> {
    const G: [usize; 7] = [0, 2, 4, 5, 6, 10, 11];
    let mut rows = Vec::with_capacity(12);
    for i in 0..12 {
        let mut r = vec![0u8; 24];
        for &e in &G {
            r[i + e] = 1;
        }
        let w: u8 = r.iter().sum::<u8>() % 2;
        r[23] = w;
        rows.push(r);
    }
    rows
}

// ---------------------------------------------------------------------------
// Lattice partitions
// ---------------------------------------------------------------------------

/// `|parent/child|`, exact. Errors if `child` is not a sublattice.
pub fn partition_order(parent: &Lattice, child: &Lattice) -> Result<BigInt> {
    if parent.n != child.n {
        return Err(LatticeError::NotASublattice {
            parent: parent.name.clone(),
            child: child.name.clone(),
        });
    }
    // J = G_child · G_parent⁻¹ must be integral.
    let (inv_num, inv_den) = parent
        .gen_num
        .inverse_scaled()
        .ok_or(LatticeError::Singular)?;
    let n = parent.n;
    // child row i in parent coordinates: child_num[i]/child_den · inv/inv_den
    let denom = BigInt::from(child.gen_den) * &inv_den / BigInt::from(parent.gen_den);
    for i in 0..n {
        for j in 0..n {
            let mut acc = BigInt::zero();
            for k in 0..n {
                acc += BigInt::from(child.gen_num.rows[i][k]) * &inv_num[k][j];
            }
            // acc / (child_den · inv_den / parent_den) must be integral
            if !(acc % &denom).is_zero() {
                return Err(LatticeError::NotASublattice {
                    parent: parent.name.clone(),
                    child: child.name.clone(),
                });
            }
        }
    }
    let det_ratio = child.det_abs() / parent.det_abs();
    if !det_ratio.is_integer() {
        return Err(LatticeError::NotASublattice {
            parent: parent.name.clone(),
            child: child.name.clone(),
        });
    }
    Ok(det_ratio.to_integer())
}

/// Coset representatives of a binary lattice partition and their bit
/// labels. Representative `i` carries the k-bit big-endian label of `i`;
/// the all-zero point sits at index 0 with the all-zero label, remaining
/// representatives in lexicographic order.
#[derive(Debug, Clone)]
pub struct CosetTable {
    pub k: u32,
    pub reps: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
}

impl CosetTable {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Bits of representative `idx`, MSB first.
    pub fn label_of(&self, idx: usize) -> Vec<u8> {
        (0..self.k).rev().map(|b| ((idx >> b) & 1) as u8).collect()
    }

    /// Representative index for a bit label.
    pub fn index_of_bits(&self, bits: &[u8]) -> usize {
        assert_eq!(bits.len(), self.k as usize);
        bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn rep_for_bits(&self, bits: &[u8]) -> &[i64] {
        &self.reps[self.index_of_bits(bits)]
    }

    pub fn index_of_rep(&self, rep: &[i64]) -> Option<usize> {
        self.index.get(rep).copied()
    }
}

/// Enumerate `[parent/child]` and label it. The order must be a power of
/// two no larger than 2¹⁶.
pub fn build_coset_table(parent: &Lattice, child: &Lattice) -> Result<CosetTable> {
    let order = partition_order(parent, child)?;
    let order_u = order
        .to_u64()
        .filter(|&o| o <= 1 << 16)
        .ok_or_else(|| LatticeError::OrderTooLarge(order.to_string()))?;
    if !order_u.is_power_of_two() {
        return Err(LatticeError::NotPowerOfTwo(order.to_string()));
    }
    let k = order_u.trailing_zeros();
    if !parent.is_integral() {
        return Err(LatticeError::BadChain(format!(
            "coset enumeration needs an integral parent, got {}",
            parent.name
        )));
    }
    // Child in parent coordinates, then the HNF box is a complete set of
    // residues for Zⁿ modulo that integer matrix.
    let n = parent.n;
    let (inv_num, inv_den) = parent.gen_num.inverse_scaled().ok_or(LatticeError::Singular)?;
    let mut j_rows = vec![vec![0i64; n]; n];
    let denom = BigInt::from(child.gen_den) * &inv_den;
    for i in 0..n {
        for j in 0..n {
            let mut acc = BigInt::zero();
            for t in 0..n {
                acc += BigInt::from(child.gen_num.rows[i][t]) * &inv_num[t][j];
            }
            let q = &acc / &denom;
            debug_assert!((&acc % &denom).is_zero());
            j_rows[i][j] = q.to_i64().expect("coset coordinate overflow");
        }
    }
    let jh = IMat::new(j_rows).hnf_lower().ok_or(LatticeError::Singular)?;
    let diag: Vec<i64> = (0..n).map(|i| jh.rows[i][i]).collect();
    let mut reps: Vec<Vec<i64>> = Vec::with_capacity(order_u as usize);
    let mut t = vec![0i64; n];
    loop {
        // rep = t · G_parent
        let mut rep = vec![0i64; n];
        for (i, &ti) in t.iter().enumerate() {
            if ti != 0 {
                for j in 0..n {
                    rep[j] += ti * parent.gen_num.rows[i][j];
                }
            }
        }
        reps.push(rep);
        let mut i = 0;
        loop {
            t[i] += 1;
            if t[i] < diag[i] {
                break;
            }
            t[i] = 0;
            i += 1;
            if i == n {
                debug_assert_eq!(reps.len() as u64, order_u);
                reps.sort();
                let zero = vec![0i64; n];
                let zpos = reps.iter().position(|r| *r == zero).expect("zero representative");
                reps.remove(zpos);
                reps.insert(0, zero);
                let index = reps
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (r.clone(), i))
                    .collect();
                return Ok(CosetTable { k, reps, index });
            }
        }
    }
}

/// One step of a partition chain.
#[derive(Debug, Clone)]
pub struct ChainStep {
    pub child: Lattice,
    pub order: u64,
    pub k: u32,
    /// Intra-set minimum squared distance: the child's minimum norm.
    pub d2: i64,
    pub table: CosetTable,
}

/// An ordered lattice partition chain Λ⁰/Λ¹/…/Λ^q with Λ⁰ = Zⁿ and
/// Λ^q = 2^p Zⁿ, carrying per-step bit widths, intra-set distances and
/// coset look-up tables.
#[derive(Debug, Clone)]
pub struct PartitionChainSpec {
    pub name: String,
    pub n: usize,
    pub p: u32,
    pub steps: Vec<ChainStep>,
}

impl PartitionChainSpec {
    pub fn q(&self) -> usize {
        self.steps.len()
    }

    /// Number of chain-coded bits, Σkᵢ = n·p.
    pub fn np(&self) -> usize {
        self.n * self.p as usize
    }

    pub fn widths(&self) -> Vec<u32> {
        self.steps.iter().map(|s| s.k).collect()
    }

    pub fn mseds(&self) -> Vec<i64> {
        self.steps.iter().map(|s| s.d2).collect()
    }

    /// Build and validate a chain from an explicit lattice list
    /// Λ⁰, Λ¹, …, Λ^q.
    pub fn build(name: impl Into<String>, lattices: Vec<Lattice>) -> Result<Self> {
        let name = name.into();
        if lattices.len() < 2 {
            return Err(LatticeError::BadChain("need at least two lattices".into()));
        }
        let n = lattices[0].n;
        let first = &lattices[0];
        if !(first.family == Family::Cubic && first.scale == 1 && first.rot == 0) {
            return Err(LatticeError::BadChain("chain must start at Zn".into()));
        }
        let last = lattices.last().unwrap();
        let p = match (last.family, last.rot) {
            (Family::Cubic, 0) if last.scale.count_ones() == 1 => last.scale.trailing_zeros(),
            _ => {
                return Err(LatticeError::BadChain(format!(
                    "terminal lattice must be 2^p Zn, got {}",
                    last.name
                )))
            }
        };
        let mut steps = Vec::with_capacity(lattices.len() - 1);
        for w in lattices.windows(2) {
            let (parent, child) = (&w[0], &w[1]);
            let table = build_coset_table(parent, child)?;
            let order = 1u64 << table.k;
            let d2f = child.min_norm2();
            let d2 = d2f.round() as i64;
            debug_assert!((d2f - d2 as f64).abs() < 1e-9);
            steps.push(ChainStep {
                child: child.clone(),
                order,
                k: table.k,
                d2,
                table,
            });
        }
        let total: u32 = steps.iter().map(|s| s.k).sum();
        if total != n as u32 * p {
            return Err(LatticeError::BadChain(format!(
                "bit widths sum to {total}, expected n·p = {}",
                n as u32 * p
            )));
        }
        Ok(PartitionChainSpec { name, n, p, steps })
    }

    /// Built-in named chains.
    pub fn by_name(name: &str) -> Result<Self> {
        let lat = |s: &str| Lattice::by_name(s).unwrap();
        let lattices = match name {
            "sp-n2-p1" => vec![lat("Z2"), lat("D2"), lat("2Z2")],
            "sp-n4-p1" => vec![lat("Z4"), lat("D4"), lat("2Z4")],
            "e8-48-sp" | "sp-n8-p1" => vec![lat("Z8"), lat("D8"), lat("E8R"), lat("2Z8")],
            "table-I-n2" => vec![lat("Z2"), lat("D2"), lat("2Z2"), lat("2D2"), lat("4Z2")],
            "table-I-n4" => vec![lat("Z4"), lat("D4"), lat("2Z4"), lat("2D4"), lat("4Z4")],
            "table-I-n8" => vec![
                lat("Z8"),
                lat("D8"),
                lat("E8R"),
                lat("2E8"),
                lat("2E8R"),
                lat("4Z8"),
            ],
            _ => return Err(LatticeError::UnknownName(name.into())),
        };
        Self::build(name, lattices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn d2(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    #[test]
    fn cubic_rounding() {
        assert_eq!(quantize_cubic(&[0.4, -1.6], 1.0, &[0.0, 0.0]), vec![0.0, -2.0]);
        // Exact tie: deterministic and one of the four bracketing points.
        let q = quantize_cubic(&[3.0, 5.0], 2.0, &[0.0, 0.0]);
        assert_eq!(q, quantize_cubic(&[3.0, 5.0], 2.0, &[0.0, 0.0]));
        assert!(q[0] == 2.0 || q[0] == 4.0);
        assert!(q[1] == 4.0 || q[1] == 6.0);
        // Half-up rule: 3/2 rounds to 2, -3/2 rounds to -1.
        assert_eq!(round_half_up(1.5), 2.0);
        assert_eq!(round_half_up(-1.5), -1.0);
    }

    #[test]
    fn cubic_translate_brute_force() {
        let y = [1.3, 0.2, -0.9, 2.6];
        let t = [1.0, 1.0, 1.0, 1.0];
        let q = quantize_cubic(&y, 2.0, &t);
        assert_eq!(q, vec![1.0, 1.0, -1.0, 3.0]);
        // Brute force over the 3^n surrounding candidates.
        let mut best = f64::INFINITY;
        let mut best_p = vec![];
        for a in -2..=2i64 {
            for b in -2..=2i64 {
                for c in -2..=2i64 {
                    for d in -2..=2i64 {
                        let p: Vec<f64> = [a, b, c, d]
                            .iter()
                            .zip(&t)
                            .map(|(&k, &tv)| 2.0 * k as f64 + tv)
                            .collect();
                        let dist = d2(&p, &y);
                        if dist < best {
                            best = dist;
                            best_p = p;
                        }
                    }
                }
            }
        }
        assert_eq!(q, best_p);
    }

    #[test]
    fn dn_examples() {
        assert_eq!(quantize_dn(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(quantize_dn(&[0.6, 0.6]), vec![1.0, 1.0]);
        // Exact tie between (0,0) and (1,1): fixed rule, both at d² = 0.82.
        let q = quantize_dn(&[0.9, 0.1]);
        assert!((d2(&q, &[0.9, 0.1]) - 0.82).abs() < 1e-12);
        assert_eq!(q, quantize_dn(&[0.9, 0.1]));
    }

    #[test]
    fn dn_brute_force() {
        let mut rng = StdRng::seed_from_u64(3);
        let lat = Lattice::checkerboard(4);
        for _ in 0..500 {
            let y: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let q = quantize_dn(&y);
            let (_, want) = lat.quantize_sphere(&y);
            assert!((d2(&q, &y) - want).abs() < 1e-9);
        }
    }

    #[test]
    fn e8_examples() {
        assert_eq!(quantize_e8(&[0.0; 8]), vec![0.0; 8]);
        let glue = [0.5; 8];
        assert_eq!(quantize_e8(&glue), glue.to_vec());
    }

    #[test]
    fn e8_vs_sphere_decoder() {
        let mut rng = StdRng::seed_from_u64(5);
        let lat = Lattice::gosset();
        for _ in 0..500 {
            let y: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let q = quantize_e8(&y);
            let (_, want) = lat.quantize_sphere(&y);
            assert!((d2(&q, &y) - want).abs() < 1e-9, "y={y:?}");
        }
    }

    #[test]
    fn rotation_properties() {
        let r2 = build_rotation(2).unwrap();
        assert_eq!(r2.rows, vec![vec![1, 1], vec![-1, 1]]);
        assert_eq!(r2.det(), BigInt::from(2));
        let r8 = build_rotation(8).unwrap();
        assert_eq!(r8.det(), BigInt::from(16));
        let r4 = build_rotation(4).unwrap();
        let prod = r4.mul(&r4.transpose());
        assert_eq!(prod, IMat::identity(4).scaled(2));
        assert!(build_rotation(3).is_err());
    }

    #[test]
    fn rotate_unrotate_roundtrip() {
        let v = vec![1.5, -2.0, 3.0, 0.25];
        assert_eq!(unrotate_point(&rotate_point(&v)), v);
    }

    #[test]
    fn named_lattice_dets() {
        assert_eq!(Lattice::by_name("Z8").unwrap().det_abs(), BigRational::one());
        assert_eq!(
            Lattice::by_name("D8").unwrap().det_abs(),
            BigRational::from(BigInt::from(2))
        );
        assert_eq!(Lattice::by_name("E8").unwrap().det_abs(), BigRational::one());
        assert_eq!(
            Lattice::by_name("E8R").unwrap().det_abs(),
            BigRational::from(BigInt::from(16))
        );
        assert_eq!(
            Lattice::by_name("BW16").unwrap().det_abs(),
            BigRational::from(BigInt::from(1i64 << 12))
        );
        assert_eq!(
            Lattice::by_name("Leech24").unwrap().det_abs(),
            BigRational::from(BigInt::from(1i64 << 36))
        );
        assert_eq!(
            Lattice::by_name("8E8").unwrap().det_abs(),
            BigRational::from(BigInt::from(1i64 << 24))
        );
        assert!(Lattice::by_name("Q5").is_err());
    }

    #[test]
    fn e8_rotated_is_integral_with_min_norm_4() {
        let l = Lattice::by_name("E8R").unwrap();
        assert!(l.is_integral());
        assert_eq!(l.min_norm2(), 4.0);
        // 2Z8 is a sublattice of E8R8.
        let twozn = Lattice::by_name("2Z8").unwrap();
        assert_eq!(partition_order(&l, &twozn).unwrap(), BigInt::from(16));
    }

    #[test]
    fn bw16_structure() {
        let l = Lattice::barnes_wall16();
        assert_eq!(l.min_norm2(), 8.0);
        // Weight-8 Reed-Muller row is a lattice vector of norm 8.
        let mut v = vec![0i64; 16];
        for p in 0..16 {
            if (p >> 0) & 1 == 1 {
                v[p] = 1;
            }
        }
        assert!(l.contains_int(&v));
        assert!(!l.contains_int(&[1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]));
    }

    #[test]
    fn leech_structure() {
        let l = Lattice::leech24();
        // Norm-32 minimum vectors: (4,4,0,...) and 2·(weight-8 codeword).
        let mut v = vec![0i64; 24];
        v[0] = 4;
        v[1] = 4;
        assert!(l.contains_int(&v));
        let mut w = vec![0i64; 24];
        w[0] = 4;
        assert!(!l.contains_int(&w));
        // Odd class.
        let mut o = vec![1i64; 24];
        o[0] = -3;
        assert!(l.contains_int(&o));
        assert_eq!(l.min_norm2(), 32.0);
    }

    #[test]
    fn golay_weight_distribution() {
        let gens = golay_extended_generators();
        let mut counts = HashMap::new();
        for mask in 0u32..4096 {
            let mut cw = vec![0u8; 24];
            for (i, g) in gens.iter().enumerate() {
                if (mask >> i) & 1 == 1 {
                    for (c, &b) in cw.iter_mut().zip(g) {
                        *c ^= b;
                    }
                }
            }
            let w: u32 = cw.iter().map(|&b| b as u32).sum();
            *counts.entry(w).or_insert(0u32) += 1;
        }
        assert_eq!(counts.get(&0), Some(&1));
        assert_eq!(counts.get(&8), Some(&759));
        assert_eq!(counts.get(&12), Some(&2576));
        assert_eq!(counts.get(&16), Some(&759));
        assert_eq!(counts.get(&24), Some(&1));
    }

    #[test]
    fn partition_orders_from_catalog() {
        let z8 = Lattice::by_name("Z8").unwrap();
        let d8 = Lattice::by_name("D8").unwrap();
        let e8r = Lattice::by_name("E8R").unwrap();
        let e8s = Lattice::by_name("8E8").unwrap();
        assert_eq!(partition_order(&z8, &d8).unwrap(), BigInt::from(2));
        assert_eq!(partition_order(&d8, &e8r).unwrap(), BigInt::from(8));
        assert_eq!(partition_order(&z8, &e8s).unwrap(), BigInt::from(16_777_216));
        // Not a sublattice: D8 of E8R8.
        assert!(partition_order(&e8r, &d8).is_err());
    }

    #[test]
    fn coset_table_z2_d2() {
        let t = build_coset_table(
            &Lattice::by_name("Z2").unwrap(),
            &Lattice::by_name("D2").unwrap(),
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.reps[0], vec![0, 0]);
        assert_eq!(t.label_of(0), vec![0]);
        // The nonzero representative is odd-parity.
        assert_eq!((t.reps[1][0] + t.reps[1][1]).rem_euclid(2), 1);
    }

    #[test]
    fn coset_table_z2_2z2() {
        let t = build_coset_table(
            &Lattice::by_name("Z2").unwrap(),
            &Lattice::by_name("2Z2").unwrap(),
        )
        .unwrap();
        assert_eq!(t.len(), 4);
        let mut reps = t.reps.clone();
        reps.sort();
        assert_eq!(reps, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn coset_table_d8_e8r8() {
        let d8 = Lattice::by_name("D8").unwrap();
        let e8r = Lattice::by_name("E8R").unwrap();
        let t = build_coset_table(&d8, &e8r).unwrap();
        assert_eq!(t.len(), 8);
        assert_eq!(t.k, 3);
        assert_eq!(t.reps[0], vec![0i64; 8]);
        // Representatives are pairwise non-congruent mod E8R8 and lie in D8.
        for (i, a) in t.reps.iter().enumerate() {
            assert!(d8.contains_int(a));
            for b in t.reps.iter().skip(i + 1) {
                let diff: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                assert!(!e8r.contains_int(&diff));
            }
        }
    }

    #[test]
    fn chain_example_1() {
        let c = PartitionChainSpec::by_name("sp-n2-p1").unwrap();
        assert_eq!(c.widths(), vec![1, 1]);
        assert_eq!(c.mseds(), vec![2, 4]);
        assert_eq!(c.p, 1);
    }

    #[test]
    fn chain_table_i_n8() {
        let c = PartitionChainSpec::by_name("table-I-n8").unwrap();
        assert_eq!(c.widths(), vec![1, 3, 4, 4, 4]);
        assert_eq!(&c.mseds()[..3], &[2, 4, 8]);
        assert_eq!(c.p, 2);
        assert_eq!(c.np(), 16);
        // Multiplicativity: product of step orders = |Z8/4Z8| = 2^16.
        let prod: u64 = c.steps.iter().map(|s| s.order).product();
        assert_eq!(prod, 1 << 16);
    }

    #[test]
    fn chain_e8_48_sp() {
        let c = PartitionChainSpec::by_name("e8-48-sp").unwrap();
        assert_eq!(c.widths(), vec![1, 3, 4]);
        assert_eq!(c.p, 1);
        // Terminal 2Z8 has minimum norm 4, so the last intra-set distance
        // stays at 4 on this production chain.
        assert_eq!(c.mseds(), vec![2, 4, 4]);
    }

    #[test]
    fn chain_rejects_non_nested() {
        let lat = |s: &str| Lattice::by_name(s).unwrap();
        let r = PartitionChainSpec::build("bad", vec![lat("Z8"), lat("E8R"), lat("D8"), lat("2Z8")]);
        assert!(r.is_err());
    }

    #[test]
    fn quantizer_idempotent_and_equivariant() {
        let mut rng = StdRng::seed_from_u64(9);
        for name in ["D4", "E8", "2E8R", "4D2"] {
            let l = Lattice::by_name(name).unwrap();
            for _ in 0..50 {
                //

                let coeffs: Vec<i64> = (0..l.n).map(|_| rng.gen_range(-3..=3)).collect();
                let gf = l.generator_f64();
                let mut point = vec![0.0; l.n];
                for (i, &c) in coeffs.iter().enumerate() {
                    for j in 0..l.n {
                        point[j] += c as f64 * gf[i][j];
                    }
                }
                // Idempotence on lattice points.
                assert_eq!(l.quantize(&point), point, "{name}");
                // Translation equivariance at a non-tie input.
                let y: Vec<f64> = (0..l.n).map(|_| rng.gen_range(-0.31..0.29)).collect();
                let q0 = l.quantize(&y);
                let shifted: Vec<f64> = y.iter().zip(&point).map(|(a, b)| a + b).collect();
                let q1 = l.quantize(&shifted);
                for j in 0..l.n {
                    assert!((q1[j] - q0[j] - point[j]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn matrix_file_roundtrip() {
        let dir = std::env::temp_dir().join("vcm_lat_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("halfint.txt");
        std::fs::write(&path, "2 0\n1/2 1\n").unwrap();
        let l = Lattice::from_matrix_file(&path).unwrap();
        assert_eq!(l.generator_den(), 2);
        assert_eq!(l.det_abs(), BigRational::from(BigInt::from(2)));
        let bad = dir.join("bad.txt");
        std::fs::write(&bad, "1 x\n0 1\n").unwrap();
        assert!(Lattice::from_matrix_file(&bad).is_err());
    }
}
