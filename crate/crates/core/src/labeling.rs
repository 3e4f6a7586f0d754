//! The three bit-to-integer mapping functions and their inverses: the
//! per-dimension binary reflected Gray code, the set-partitioning mapping
//! over a lattice partition chain, and the hybrid mapping over scaled
//! cubic chains.
//!
//! Every mapping is a bijection between {0,1}^m and the integer index set
//! U = {u : 0 ≤ u ≤ h−1}. Bit blocks are concatenated most-protected
//! first: chain blocks b₁…b_q, then the residual per-dimension Gray bits.

use crate::lattices::{LatticeError, PartitionChainSpec};
use crate::vc::VoronoiConstellation;

#[derive(thiserror::Error, Debug)]
pub enum LabelError {
    #[error("bit label has width {got}, expected {want}")]
    WidthMismatch { got: usize, want: usize },
    #[error("integer component {got} out of range [0, {limit})")]
    OutOfRange { got: i64, limit: i64 },
    #[error("chain spec incompatible with constellation: {0}")]
    Incompatible(String),
    #[error("coset table inconsistency: {matches} matches at step {step}")]
    TableInconsistency { step: usize, matches: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

pub type Result<T> = std::result::Result<T, LabelError>;

// ---------------------------------------------------------------------------
// Binary reflected Gray code
// ---------------------------------------------------------------------------

fn width_of(h: i64) -> u32 {
    debug_assert!(h > 0 && h.count_ones() == 1);
    h.trailing_zeros()
}

/// f_BRGC(b, h): per-dimension Gray decode (prefix-XOR) of the blocks of
/// `bits`, block i holding log₂(hᵢ) bits MSB first.
pub fn brgc_to_int(bits: &[u8], h: &[i64]) -> Result<Vec<i64>> {
    let want: usize = h.iter().map(|&hi| width_of(hi) as usize).sum();
    if bits.len() != want {
        return Err(LabelError::WidthMismatch { got: bits.len(), want });
    }
    let mut out = Vec::with_capacity(h.len());
    let mut pos = 0;
    for &hi in h {
        let w = width_of(hi) as usize;
        let mut acc = 0u8;
        let mut val: i64 = 0;
        for &g in &bits[pos..pos + w] {
            acc ^= g;
            val = (val << 1) | acc as i64;
        }
        pos += w;
        out.push(val);
    }
    Ok(out)
}

/// f⁻¹_BRGC(u, h): per-dimension Gray encode, blocks MSB first.
pub fn int_to_brgc(u: &[i64], h: &[i64]) -> Result<Vec<u8>> {
    if u.len() != h.len() {
        return Err(LabelError::WidthMismatch { got: u.len(), want: h.len() });
    }
    let mut out = Vec::new();
    for (&ui, &hi) in u.iter().zip(h) {
        if ui < 0 || ui >= hi {
            return Err(LabelError::OutOfRange { got: ui, limit: hi });
        }
        let w = width_of(hi);
        let g = ui ^ (ui >> 1);
        for b in (0..w).rev() {
            out.push(((g >> b) & 1) as u8);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Set-partitioning mapping (over a lattice partition chain)
// ---------------------------------------------------------------------------

fn check_chain(chain: &PartitionChainSpec, vc: &VoronoiConstellation) -> Result<()> {
    if chain.n != vc.n {
        return Err(LabelError::Incompatible(format!(
            "chain dimension {} vs constellation dimension {}",
            chain.n, vc.n
        )));
    }
    let step = 1i64 << chain.p;
    if (vc.m_bits as usize) < chain.np() {
        return Err(LabelError::Incompatible(format!(
            "chain codes {} bits but constellation only carries {}",
            chain.np(),
            vc.m_bits
        )));
    }
    if let Some(&bad) = vc.h.iter().find(|&&hi| hi % step != 0) {
        return Err(LabelError::Incompatible(format!(
            "shaping diagonal {bad} not divisible by 2^p = {step}"
        )));
    }
    Ok(())
}

fn residual_h(vc: &VoronoiConstellation, p: u32) -> Vec<i64> {
    vc.h.iter().map(|&hi| hi >> p).collect()
}

/// SP mapping f_SP: chain-block bits select coset representatives whose sum
/// fixes u modulo 2^p; the remaining bits Gray-encode the quotient.
pub fn sp_map(
    chain: &PartitionChainSpec,
    vc: &VoronoiConstellation,
    bits: &[u8],
) -> Result<Vec<i64>> {
    check_chain(chain, vc)?;
    let m = vc.m_bits as usize;
    if bits.len() != m {
        return Err(LabelError::WidthMismatch { got: bits.len(), want: m });
    }
    let n = vc.n;
    let two_p = 1i64 << chain.p;
    let mut c = vec![0i64; n];
    let mut pos = 0usize;
    for step in &chain.steps {
        let k = step.k as usize;
        let rep = step.table.rep_for_bits(&bits[pos..pos + k]);
        for (ci, &ri) in c.iter_mut().zip(rep) {
            *ci += ri;
        }
        pos += k;
    }
    // s = c mod 2^p, componentwise into [0, 2^p).
    let s: Vec<i64> = c.iter().map(|&ci| ci.rem_euclid(two_p)).collect();
    let t = brgc_to_int(&bits[pos..], &residual_h(vc, chain.p))?;
    Ok(s.iter().zip(&t).map(|(&si, &ti)| si + two_p * ti).collect())
}

/// SP demapping f⁻¹_SP: at every step exactly one coset representative
/// leaves an integral coordinate vector in the child lattice; the residual
/// bits come from the Gray code of the 2^p-quotient.
pub fn sp_demap(
    chain: &PartitionChainSpec,
    vc: &VoronoiConstellation,
    u: &[i64],
) -> Result<Vec<u8>> {
    check_chain(chain, vc)?;
    let n = vc.n;
    let two_p = 1i64 << chain.p;
    let mut bits = Vec::with_capacity(vc.m_bits as usize);
    let mut acc = u.to_vec();
    let mut diff = vec![0i64; n];
    for (si, step) in chain.steps.iter().enumerate() {
        let mut found: Option<usize> = None;
        let mut matches = 0usize;
        for (idx, rep) in step.table.reps.iter().enumerate() {
            for j in 0..n {
                diff[j] = acc[j] - rep[j];
            }
            if step.child.contains_int(&diff) {
                matches += 1;
                found = Some(idx);
            }
        }
        if matches != 1 {
            return Err(LabelError::TableInconsistency { step: si, matches });
        }
        let idx = found.unwrap();
        bits.extend(step.table.label_of(idx));
        let rep = &step.table.reps[idx];
        for j in 0..n {
            acc[j] -= rep[j];
        }
    }
    // Residual bits from v = u: s = u mod 2^p, then Gray bits of (u−s)/2^p.
    let quot: Vec<i64> = u
        .iter()
        .map(|&ui| (ui - ui.rem_euclid(two_p)) >> chain.p)
        .collect();
    bits.extend(int_to_brgc(&quot, &residual_h(vc, chain.p))?);
    Ok(bits)
}

// ---------------------------------------------------------------------------
// Hybrid mapping (scaled cubic chain)
// ---------------------------------------------------------------------------

/// Chain of scaled cubic lattices 2^p₀Zⁿ/2^p¹Zⁿ/…/2^p_qZⁿ with
/// 0 = p₀ < p₁ < … < p_q = p. Step i carries kᵢ = n(pᵢ−pᵢ₋₁) bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridChainSpec {
    pub n: usize,
    pub exponents: Vec<u32>,
}

impl HybridChainSpec {
    pub fn new(n: usize, exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() || exponents[0] == 0 || exponents.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(LabelError::Incompatible(
                "hybrid exponents must be strictly increasing and positive".into(),
            ));
        }
        Ok(HybridChainSpec { n, exponents })
    }

    pub fn q(&self) -> usize {
        self.exponents.len()
    }

    pub fn p(&self) -> u32 {
        *self.exponents.last().unwrap()
    }

    pub fn np(&self) -> usize {
        self.n * self.p() as usize
    }

    /// Per-step bit widths kᵢ = n(pᵢ − pᵢ₋₁).
    pub fn widths(&self) -> Vec<u32> {
        let mut prev = 0;
        self.exponents
            .iter()
            .map(|&p| {
                let w = self.n as u32 * (p - prev);
                prev = p;
                w
            })
            .collect()
    }

    fn check(&self, vc: &VoronoiConstellation) -> Result<()> {
        if self.n != vc.n {
            return Err(LabelError::Incompatible(format!(
                "hybrid chain dimension {} vs constellation dimension {}",
                self.n, vc.n
            )));
        }
        let step = 1i64 << self.p();
        if (vc.m_bits as usize) < self.np() {
            return Err(LabelError::Incompatible(format!(
                "hybrid chain codes {} bits but constellation only carries {}",
                self.np(),
                vc.m_bits
            )));
        }
        if let Some(&bad) = vc.h.iter().find(|&&hi| hi % step != 0) {
            return Err(LabelError::Incompatible(format!(
                "shaping diagonal {bad} not divisible by 2^p = {step}"
            )));
        }
        Ok(())
    }
}

/// Hybrid mapping f_H: every chain step is a per-dimension Gray decode of
/// the scaled coset digits; no look-up table search is needed.
pub fn hybrid_map(
    spec: &HybridChainSpec,
    vc: &VoronoiConstellation,
    bits: &[u8],
) -> Result<Vec<i64>> {
    spec.check(vc)?;
    let m = vc.m_bits as usize;
    if bits.len() != m {
        return Err(LabelError::WidthMismatch { got: bits.len(), want: m });
    }
    let n = vc.n;
    let two_p = 1i64 << spec.p();
    let mut s = vec![0i64; n];
    let mut pos = 0usize;
    let mut prev = 0u32;
    for &pi in &spec.exponents {
        let dp = pi - prev;
        let digits = brgc_to_int(&bits[pos..pos + n * dp as usize], &vec![1i64 << dp; n])?;
        for (sj, &dj) in s.iter_mut().zip(&digits) {
            *sj += dj << prev;
        }
        pos += n * dp as usize;
        prev = pi;
    }
    let t = brgc_to_int(&bits[pos..], &residual_h(vc, spec.p()))?;
    Ok(s.iter().zip(&t).map(|(&si, &ti)| si + two_p * ti).collect())
}

/// Hybrid demapping f⁻¹_H: successive modulo extraction of the coset
/// digits, then the Gray code of the 2^p-quotient.
pub fn hybrid_demap(
    spec: &HybridChainSpec,
    vc: &VoronoiConstellation,
    u: &[i64],
) -> Result<Vec<u8>> {
    spec.check(vc)?;
    let n = vc.n;
    let mut bits = Vec::with_capacity(vc.m_bits as usize);
    let mut acc = u.to_vec();
    let mut prev = 0u32;
    for &pi in &spec.exponents {
        let dp = pi - prev;
        let two_pi = 1i64 << pi;
        let c: Vec<i64> = acc.iter().map(|&v| v.rem_euclid(two_pi)).collect();
        let digits: Vec<i64> = c.iter().map(|&ci| ci >> prev).collect();
        bits.extend(int_to_brgc(&digits, &vec![1i64 << dp; n])?);
        for (aj, &cj) in acc.iter_mut().zip(&c) {
            *aj -= cj;
        }
        prev = pi;
    }
    let quot: Vec<i64> = acc.iter().map(|&v| v >> spec.p()).collect();
    bits.extend(int_to_brgc(&quot, &residual_h(vc, spec.p()))?);
    Ok(bits)
}

// ---------------------------------------------------------------------------
// Mapping facade
// ---------------------------------------------------------------------------

/// One of the three labeling rules, bundled with its chain data.
#[derive(Debug, Clone)]
pub enum Mapping {
    Gray,
    Sp(PartitionChainSpec),
    Hybrid(HybridChainSpec),
}

impl Mapping {
    pub fn name(&self) -> &'static str {
        match self {
            Mapping::Gray => "gray",
            Mapping::Sp(_) => "sp",
            Mapping::Hybrid(_) => "hybrid",
        }
    }

    pub fn bits_to_index(&self, vc: &VoronoiConstellation, bits: &[u8]) -> Result<Vec<i64>> {
        match self {
            Mapping::Gray => brgc_to_int(bits, &vc.h),
            Mapping::Sp(chain) => sp_map(chain, vc, bits),
            Mapping::Hybrid(spec) => hybrid_map(spec, vc, bits),
        }
    }

    pub fn index_to_bits(&self, vc: &VoronoiConstellation, u: &[i64]) -> Result<Vec<u8>> {
        match self {
            Mapping::Gray => int_to_brgc(u, &vc.h),
            Mapping::Sp(chain) => sp_demap(chain, vc, u),
            Mapping::Hybrid(spec) => hybrid_demap(spec, vc, u),
        }
    }

    /// Widths of the chain-coded levels; empty for the Gray mapping.
    pub fn coded_widths(&self) -> Vec<u32> {
        match self {
            Mapping::Gray => Vec::new(),
            Mapping::Sp(chain) => chain.widths(),
            Mapping::Hybrid(spec) => spec.widths(),
        }
    }

    /// Number of chain-coded bits np (0 for Gray).
    pub fn np(&self) -> usize {
        match self {
            Mapping::Gray => 0,
            Mapping::Sp(chain) => chain.np(),
            Mapping::Hybrid(spec) => spec.np(),
        }
    }

    pub fn p(&self) -> u32 {
        match self {
            Mapping::Gray => 0,
            Mapping::Sp(chain) => chain.p,
            Mapping::Hybrid(spec) => spec.p(),
        }
    }
}
