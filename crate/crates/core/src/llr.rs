//! Max-log LLR engines.
//!
//! The sign convention is fixed throughout: positive LLR means bit 0 is
//! more likely, i.e. llr = −(1/σ²)·(min distance² to a 0-labeled point −
//! min distance² to a 1-labeled point), with σ² the noise power per two
//! dimensions.
//!
//! Four engines are provided:
//! - an exhaustive reference over the whole constellation (the oracle for
//!   everything else, feasible while the point count is enumerable);
//! - the Euclidean-ball approximation for BICM, searching integer-grid
//!   points within squared radius R² of the rounded receive point, with a
//!   default distance r for empty bit subsets;
//! - the per-level coset LLR for multistage decoding with SP mapping;
//! - the scaled-ball per-level LLR for the hybrid mapping, where R² = 1
//!   suffices on chains with pᵢ = i and no subset is ever empty.

use crate::labeling::{int_to_brgc, Mapping};
use crate::lattices::PartitionChainSpec;
use crate::vc::{VoronoiConstellation, EXACT_ENUM_BITS};

#[derive(thiserror::Error, Debug)]
pub enum LlrError {
    #[error("constellation too large for exhaustive LLR (m = {0} bits)")]
    TooLarge(u32),
    #[error("default value r = {r} must exceed the ball radius R² = {r2}")]
    BadDefault { r: f64, r2: i64 },
    #[error("level {level} out of range for a chain of {q} steps")]
    BadLevel { level: usize, q: usize },
    #[error(transparent)]
    Label(#[from] crate::labeling::LabelError),
    #[error(transparent)]
    Vc(#[from] crate::vc::VcError),
}

pub type Result<T> = std::result::Result<T, LlrError>;

/// Saturation bound applied to every LLR before FEC decoding; max-log
/// distance differences are unbounded as σ² → 0.
pub const LLR_CLAMP: f64 = 1e3;

/// Ball radius / default used for 8D BICM operating points.
pub const BALL_R2_8D: i64 = 6;
/// Ball radius used for 16D BICM operating points.
pub const BALL_R2_16D: i64 = 2;
/// Default distance r for empty ball subsets.
pub const BALL_DEFAULT_R: f64 = 20.0;

/// Per-symbol LLR values plus the noise variance they were computed at.
#[derive(Debug, Clone)]
pub struct LlrFrame {
    pub values: Vec<f64>,
    /// Noise power per two dimensions.
    pub sigma2: f64,
}

impl LlrFrame {
    fn from_minima(min0: &[f64], min1: &[f64], sigma2: f64) -> Self {
        let values = min0
            .iter()
            .zip(min1)
            .map(|(&a, &b)| (-(a - b) / sigma2).clamp(-LLR_CLAMP, LLR_CLAMP))
            .collect();
        LlrFrame { values, sigma2 }
    }

    /// Hard decisions under the fixed sign convention (1 when negative).
    pub fn hard_bits(&self) -> Vec<u8> {
        self.values.iter().map(|&v| u8::from(v < 0.0)).collect()
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn shifted(y: &[f64], offset: &[f64]) -> Vec<f64> {
    y.iter().zip(offset).map(|(v, a)| v + a).collect()
}

// ---------------------------------------------------------------------------
// Exhaustive reference
// ---------------------------------------------------------------------------

/// Precomputed point/label table for the exhaustive max-log reference.
pub struct ExactLlrTable {
    pub m: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<Vec<u8>>,
}

impl ExactLlrTable {
    pub fn new(vc: &VoronoiConstellation, mapping: &Mapping) -> Result<Self> {
        if vc.m_bits > EXACT_ENUM_BITS {
            return Err(LlrError::TooLarge(vc.m_bits));
        }
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for u in vc.indices()? {
            points.push(vc.encode_unchecked(&u));
            labels.push(mapping.index_to_bits(vc, &u)?);
        }
        Ok(ExactLlrTable { m: vc.m_bits as usize, points, labels })
    }

    /// Max-log LLRs of all m bits by full search over the constellation.
    pub fn llr(&self, y: &[f64], sigma2: f64) -> LlrFrame {
        let mut min0 = vec![f64::INFINITY; self.m];
        let mut min1 = vec![f64::INFINITY; self.m];
        for (x, bits) in self.points.iter().zip(&self.labels) {
            let d2 = dist2(y, x);
            for (k, &b) in bits.iter().enumerate() {
                let slot = if b == 0 { &mut min0[k] } else { &mut min1[k] };
                if d2 < *slot {
                    *slot = d2;
                }
            }
        }
        LlrFrame::from_minima(&min0, &min1, sigma2)
    }

    /// Conditional max-log LLRs of bits `lo..hi` over the subconstellation
    /// whose labels match `prefix` on the first `lo` bits. Used as the
    /// multistage-decoding oracle.
    pub fn conditional_llr(
        &self,
        y: &[f64],
        sigma2: f64,
        prefix: &[u8],
        lo: usize,
        hi: usize,
    ) -> LlrFrame {
        let width = hi - lo;
        let mut min0 = vec![f64::INFINITY; width];
        let mut min1 = vec![f64::INFINITY; width];
        for (x, bits) in self.points.iter().zip(&self.labels) {
            if bits[..lo] != *prefix {
                continue;
            }
            let d2 = dist2(y, x);
            for k in lo..hi {
                let slot = if bits[k] == 0 { &mut min0[k - lo] } else { &mut min1[k - lo] };
                if d2 < *slot {
                    *slot = d2;
                }
            }
        }
        LlrFrame::from_minima(&min0, &min1, sigma2)
    }

    /// Nearest constellation point (max-likelihood symbol decision).
    pub fn nearest(&self, y: &[f64]) -> (&[f64], &[u8]) {
        let mut best = 0usize;
        let mut bd = f64::INFINITY;
        for (i, x) in self.points.iter().enumerate() {
            let d2 = dist2(y, x);
            if d2 < bd {
                bd = d2;
                best = i;
            }
        }
        (&self.points[best], &self.labels[best])
    }
}

/// One-shot exhaustive max-log LLR (builds the table; prefer
/// [`ExactLlrTable`] in loops).
pub fn exact_maxlog_llr(
    vc: &VoronoiConstellation,
    mapping: &Mapping,
    y: &[f64],
    sigma2: f64,
) -> Result<LlrFrame> {
    Ok(ExactLlrTable::new(vc, mapping)?.llr(y, sigma2))
}

// ---------------------------------------------------------------------------
// Euclidean ball (BICM)
// ---------------------------------------------------------------------------

/// Integer-grid points within squared radius R² of the rounded receive
/// point (all in the integer frame y + a).
#[derive(Debug, Clone)]
pub struct EuclideanBall {
    pub center: Vec<i64>,
    pub r2: i64,
    pub members: Vec<Vec<i64>>,
}

/// Enumerate B(y, R²) by bounded coordinate recursion, lexicographic in
/// the offset coordinates.
pub fn ball_enumerate(y: &[f64], offset: &[f64], r2: i64) -> EuclideanBall {
    assert!(r2 >= 0);
    let ys = shifted(y, offset);
    let center: Vec<i64> = ys.iter().map(|&v| crate::lattices::round_half_up(v) as i64).collect();
    let n = y.len();
    let mut members = Vec::new();
    let mut cur = vec![0i64; n];
    fn rec(
        dim: usize,
        rem: i64,
        n: usize,
        cur: &mut Vec<i64>,
        center: &[i64],
        members: &mut Vec<Vec<i64>>,
    ) {
        if dim == n {
            members.push(cur.iter().zip(center).map(|(d, c)| c + d).collect());
            return;
        }
        let reach = (rem as f64).sqrt() as i64;
        for d in -reach..=reach {
            let used = d * d;
            if used <= rem {
                cur[dim] = d;
                rec(dim + 1, rem - used, n, cur, center, members);
            }
        }
        cur[dim] = 0;
    }
    rec(0, r2, n, &mut cur, &center, &mut members);
    EuclideanBall { center, r2, members }
}

/// Euclidean-ball max-log LLRs of all m bits for BICM with Gray labeling.
/// Ball members may fall outside the constellation by design; empty bit
/// subsets contribute the default distance `r_default`.
pub fn bicm_ball_llr(
    vc: &VoronoiConstellation,
    y: &[f64],
    sigma2: f64,
    r2: i64,
    r_default: f64,
) -> Result<LlrFrame> {
    if r_default <= r2 as f64 {
        return Err(LlrError::BadDefault { r: r_default, r2 });
    }
    let m = vc.m_bits as usize;
    let ys = shifted(y, &vc.offset);
    let ball = ball_enumerate(y, &vc.offset, r2);
    let mut min0 = vec![r_default; m];
    let mut min1 = vec![r_default; m];
    let mut zf = vec![0.0f64; vc.n];
    for z in &ball.members {
        for (f, &i) in zf.iter_mut().zip(z) {
            *f = i as f64;
        }
        let d2 = dist2(&ys, &zf);
        let u = vc.reduce_index(z);
        let bits = int_to_brgc(&u, &vc.h)?;
        for (k, &b) in bits.iter().enumerate() {
            let slot = if b == 0 { &mut min0[k] } else { &mut min1[k] };
            if d2 < *slot {
                *slot = d2;
            }
        }
    }
    Ok(LlrFrame::from_minima(&min0, &min1, sigma2))
}

// ---------------------------------------------------------------------------
// MLCM per-level LLRs
// ---------------------------------------------------------------------------

/// Per-level coset LLR for MLCM with SP mapping: for every candidate
/// representative of step `level`, quantize y+a to the shifted child
/// lattice and take max-log differences over the bit split of the table.
///
/// `prev_reps` are the re-encoded representatives of steps 0..level.
pub fn mlcm_sp_llr(
    chain: &PartitionChainSpec,
    vc: &VoronoiConstellation,
    level: usize,
    y: &[f64],
    sigma2: f64,
    prev_reps: &[Vec<i64>],
) -> Result<LlrFrame> {
    if level >= chain.q() || prev_reps.len() != level {
        return Err(LlrError::BadLevel { level, q: chain.q() });
    }
    let n = vc.n;
    let step = &chain.steps[level];
    let k = step.k as usize;
    let ys = shifted(y, &vc.offset);
    let mut base = vec![0.0f64; n];
    for rep in prev_reps {
        for (b, &r) in base.iter_mut().zip(rep) {
            *b += r as f64;
        }
    }
    let mut min0 = vec![f64::INFINITY; k];
    let mut min1 = vec![f64::INFINITY; k];
    let mut target = vec![0.0f64; n];
    for (idx, rep) in step.table.reps.iter().enumerate() {
        for j in 0..n {
            target[j] = ys[j] - base[j] - rep[j] as f64;
        }
        let q = step.child.quantize(&target);
        // z = Q_{Λ^i}(y+a − shift) + shift; distance is to the residual.
        let d2: f64 = target.iter().zip(&q).map(|(t, z)| (t - z) * (t - z)).sum();
        let bits = step.table.label_of(idx);
        for (e, &b) in bits.iter().enumerate() {
            let slot = if b == 0 { &mut min0[e] } else { &mut min1[e] };
            if d2 < *slot {
                *slot = d2;
            }
        }
    }
    Ok(LlrFrame::from_minima(&min0, &min1, sigma2))
}

/// Scaled-ball per-level LLR for MLCM with hybrid mapping.
///
/// Members live on 2^(p_{i-1})·Zⁿ shifted by the re-encoded digits of the
/// previous levels; their level digits come from modulo extraction. On
/// chains with pᵢ = i, R² = 1 is sufficient and neither bit subset can be
/// empty, so no default value is needed (a large default still guards the
/// degenerate configurations).
pub fn mlcm_hybrid_llr(
    spec: &crate::labeling::HybridChainSpec,
    vc: &VoronoiConstellation,
    level: usize,
    y: &[f64],
    sigma2: f64,
    prev_digits: &[Vec<i64>],
    r2: i64,
) -> Result<LlrFrame> {
    if level >= spec.q() || prev_digits.len() != level {
        return Err(LlrError::BadLevel { level, q: spec.q() });
    }
    assert!(r2 >= 1);
    let n = vc.n;
    let p_lo = if level == 0 { 0 } else { spec.exponents[level - 1] };
    let p_hi = spec.exponents[level];
    let dp = p_hi - p_lo;
    let scale = 1i64 << p_lo;
    let modulus = 1i64 << p_hi;
    // Accumulated shift from previous levels: Σ 2^(p_{t-1})·digit_t,
    // componentwise below 2^(p_{i-1}).
    let mut shift = vec![0i64; n];
    let mut prev = 0u32;
    for (t, digits) in prev_digits.iter().enumerate() {
        for (s, &d) in shift.iter_mut().zip(digits) {
            *s += d << prev;
        }
        prev = spec.exponents[t];
    }
    let ys = shifted(y, &vc.offset);
    // Center: nearest point of scale·Zⁿ + shift.
    let center: Vec<i64> = ys
        .iter()
        .zip(&shift)
        .map(|(&v, &s)| s + scale * crate::lattices::round_half_up((v - s as f64) / scale as f64) as i64)
        .collect();
    let k = (n as u32 * dp) as usize;
    let mut min0 = vec![LLR_CLAMP * sigma2 + (r2 * scale * scale) as f64; k];
    let mut min1 = min0.clone();
    // Enumerate offsets d with Σd² ≤ R², members z = center + scale·d.
    let mut cur = vec![0i64; n];
    let mut stack_digits = vec![0i64; n];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        dim: usize,
        rem: i64,
        n: usize,
        scale: i64,
        modulus: i64,
        p_lo: u32,
        dp: u32,
        cur: &mut Vec<i64>,
        digits: &mut Vec<i64>,
        center: &[i64],
        shift: &[i64],
        ys: &[f64],
        min0: &mut [f64],
        min1: &mut [f64],
    ) {
        if dim == n {
            let mut d2 = 0.0;
            for j in 0..n {
                let z = (center[j] + scale * cur[j]) as f64;
                let t = ys[j] - z;
                d2 += t * t;
            }
            // Level digits of the member via modulo extraction.
            for j in 0..n {
                let z = center[j] + scale * cur[j];
                let c = (z - shift[j]).rem_euclid(modulus);
                digits[j] = c >> p_lo;
            }
            // Per-dimension BRGC bits of each digit, dimension-major.
            for j in 0..n {
                let g = digits[j] ^ (digits[j] >> 1);
                for b in 0..dp {
                    let e = j * dp as usize + (dp - 1 - b) as usize;
                    let bit = ((g >> b) & 1) as u8;
                    let slot = if bit == 0 { &mut min0[e] } else { &mut min1[e] };
                    if d2 < *slot {
                        *slot = d2;
                    }
                }
            }
            return;
        }
        let reach = (rem as f64).sqrt() as i64;
        for d in -reach..=reach {
            let used = d * d;
            if used <= rem {
                cur[dim] = d;
                rec(
                    dim + 1,
                    rem - used,
                    n,
                    scale,
                    modulus,
                    p_lo,
                    dp,
                    cur,
                    digits,
                    center,
                    shift,
                    ys,
                    min0,
                    min1,
                );
            }
        }
        cur[dim] = 0;
    }
    rec(
        0,
        r2,
        n,
        scale,
        modulus,
        p_lo,
        dp,
        &mut cur,
        &mut stack_digits,
        &center,
        &shift,
        &ys,
        &mut min0,
        &mut min1,
    );
    Ok(LlrFrame::from_minima(&min0, &min1, sigma2))
}

// ---------------------------------------------------------------------------
// Per-dimension exact LLR for QAM / TDHQ products
// ---------------------------------------------------------------------------

/// Exact per-dimension max-log LLRs for PAM-product constellations with
/// per-dimension Gray labeling. Equals the exhaustive reference on the
/// product constellation at a fraction of the cost.
pub fn qam_exact_llr(vc: &VoronoiConstellation, y: &[f64], sigma2: f64) -> Result<LlrFrame> {
    let mut values = Vec::with_capacity(vc.m_bits as usize);
    for (dim, &hi) in vc.h.iter().enumerate() {
        let w = hi.trailing_zeros() as usize;
        let a = vc.offset[dim];
        let half = hi as f64 / 2.0;
        let mut min0 = vec![f64::INFINITY; w];
        let mut min1 = vec![f64::INFINITY; w];
        for u in 0..hi {
            // Per-dimension constellation value for index u.
            let mut x = u as f64 - a;
            // Reduce into the Voronoi cell [−h/2, h/2) of hZ.
            while x >= half {
                x -= hi as f64;
            }
            while x < -half {
                x += hi as f64;
            }
            let d = y[dim] - x;
            let d2 = d * d;
            let g = u ^ (u >> 1);
            for b in 0..w {
                let bit = ((g >> (w - 1 - b)) & 1) as u8;
                let slot = if bit == 0 { &mut min0[b] } else { &mut min1[b] };
                if d2 < *slot {
                    *slot = d2;
                }
            }
        }
        for b in 0..w {
            values.push((-(min0[b] - min1[b]) / sigma2).clamp(-LLR_CLAMP, LLR_CLAMP));
        }
    }
    Ok(LlrFrame { values, sigma2 })
}

/// Plain-text dump format: one frame per line, fixed six-significant-digit
/// floats, space separated.
pub fn write_llr_line<W: std::io::Write>(w: &mut W, frame: &LlrFrame) -> std::io::Result<()> {
    let mut first = true;
    for v in &frame.values {
        if !first {
            write!(w, " ")?;
        }
        write!(w, "{v:.6e}")?;
        first = false;
    }
    writeln!(w)
}
