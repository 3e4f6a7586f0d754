//! Coded-modulation pipelines: BICM (one code over all bit levels through
//! an interleaver) and MLCM (one component code per partition level with
//! multistage decoding), plus rate bookkeeping, per-level mutual
//! information for enumerable constellations, and capacity-rule code-rate
//! selection.

use num::rational::Rational64;
use rand_distr::Distribution;
use rayon::prelude::*;

use crate::fec::{Interleaver, LdpcCode};
use crate::labeling::{brgc_to_int, Mapping};
use crate::llr::{bicm_ball_llr, mlcm_hybrid_llr, mlcm_sp_llr, qam_exact_llr, LlrFrame};
use crate::vc::{ShapingSet, VoronoiConstellation};

#[derive(thiserror::Error, Debug)]
pub enum CmError {
    #[error("codeword length {n} not divisible by label width m = {m}")]
    BlockMismatch { n: usize, m: usize },
    #[error("info length {got}, expected {want}")]
    InfoLength { got: usize, want: usize },
    #[error("symbol count {got}, expected {want}")]
    SymbolCount { got: usize, want: usize },
    #[error("MLCM needs an SP or hybrid mapping, not {0}")]
    BadMapping(&'static str),
    #[error("level {level}: component code length {code_n} != block symbols {want}")]
    CodeLength { level: usize, code_n: usize, want: usize },
    #[error("level count {got} does not match the chain ({want} levels)")]
    LevelCount { got: usize, want: usize },
    #[error("constellation too large to enumerate for MI ({0} bits)")]
    MiTooLarge(u32),
    #[error(transparent)]
    Label(#[from] crate::labeling::LabelError),
    #[error(transparent)]
    Fec(#[from] crate::fec::FecError),
    #[error(transparent)]
    Llr(#[from] crate::llr::LlrError),
}

pub type Result<T> = std::result::Result<T, CmError>;

/// Exact code rate.
pub type Rate = Rational64;

/// The DVB-S2 normal-frame rate ladder, the documented rate set for
/// capacity-rule selection.
pub fn dvbs2_rates() -> Vec<Rate> {
    [
        (1, 4),
        (1, 3),
        (2, 5),
        (1, 2),
        (3, 5),
        (2, 3),
        (3, 4),
        (4, 5),
        (5, 6),
        (8, 9),
        (9, 10),
    ]
    .iter()
    .map(|&(a, b)| Rational64::new(a, b))
    .collect()
}

// ---------------------------------------------------------------------------
// BICM
// ---------------------------------------------------------------------------

/// Gray-labeled BICM: encode, interleave, split into m parallel streams,
/// map symbol-by-symbol.
#[derive(Debug, Clone)]
pub struct BicmScheme {
    pub vc: VoronoiConstellation,
    pub code: LdpcCode,
    pub interleaver: Interleaver,
    /// Euclidean-ball parameters for lattice constellations.
    pub ball_r2: i64,
    pub ball_default: f64,
}

/// Transmit-side record kept for BER accounting.
pub struct BicmTx {
    pub symbols: Vec<Vec<f64>>,
    pub coded: Vec<u8>,
    pub info: Vec<u8>,
}

pub struct BicmRx {
    pub info_hat: Vec<u8>,
    /// Hard decisions on the deinterleaved coded bits (pre-FEC).
    pub coded_hard: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

impl BicmScheme {
    pub fn new(
        vc: VoronoiConstellation,
        code: LdpcCode,
        interleaver_seed: u64,
        ball_r2: i64,
        ball_default: f64,
    ) -> Result<Self> {
        let m = vc.m_bits as usize;
        if code.n % m != 0 {
            return Err(CmError::BlockMismatch { n: code.n, m });
        }
        let interleaver = Interleaver::new(interleaver_seed, code.n);
        Ok(BicmScheme { vc, code, interleaver, ball_r2, ball_default })
    }

    pub fn symbols_per_block(&self) -> usize {
        self.code.n / self.vc.m_bits as usize
    }

    pub fn info_bits_per_block(&self) -> usize {
        self.code.k
    }

    /// Total rate β·R_c in bits per 2D symbol, exact.
    pub fn total_rate(&self) -> Rate {
        Rational64::new(
            2 * self.vc.m_bits as i64 * self.code.k as i64,
            self.vc.n as i64 * self.code.n as i64,
        )
    }

    pub fn transmit(&self, info: &[u8]) -> Result<BicmTx> {
        let coded = self.code.encode(info)?;
        let permuted = self.interleaver.interleave(&coded);
        let m = self.vc.m_bits as usize;
        let s = self.symbols_per_block();
        let mut symbols = Vec::with_capacity(s);
        let mut bits = vec![0u8; m];
        for j in 0..s {
            for k in 0..m {
                bits[k] = permuted[k * s + j];
            }
            let u = brgc_to_int(&bits, &self.vc.h)?;
            symbols.push(self.vc.encode_unchecked(&u));
        }
        Ok(BicmTx { symbols, coded, info: info.to_vec() })
    }

    pub fn receive(&self, ys: &[Vec<f64>], sigma2: f64, max_iter: usize) -> Result<BicmRx> {
        let s = self.symbols_per_block();
        if ys.len() != s {
            return Err(CmError::SymbolCount { got: ys.len(), want: s });
        }
        let m = self.vc.m_bits as usize;
        let frames: Vec<LlrFrame> = ys
            .par_iter()
            .map(|y| match &self.vc.shaping {
                ShapingSet::Rect { .. } => qam_exact_llr(&self.vc, y, sigma2),
                ShapingSet::Lattice(_) => {
                    bicm_ball_llr(&self.vc, y, sigma2, self.ball_r2, self.ball_default)
                }
            })
            .collect::<std::result::Result<_, _>>()?;
        // Streams back to serial order, then deinterleave.
        let mut permuted = vec![0.0f64; self.code.n];
        for (j, f) in frames.iter().enumerate() {
            for k in 0..m {
                permuted[k * s + j] = f.values[k];
            }
        }
        let llrs = self.interleaver.deinterleave(&permuted);
        let coded_hard: Vec<u8> = llrs.iter().map(|&l| u8::from(l < 0.0)).collect();
        let (info_hat, converged, iterations) = self.code.decode(&llrs, max_iter)?;
        Ok(BicmRx { info_hat, coded_hard, converged, iterations })
    }
}

// ---------------------------------------------------------------------------
// MLCM
// ---------------------------------------------------------------------------

/// Per-level component code. Rate-0 levels carry fixed zero bits (the
/// subchannel is not used); rate-1 levels pass bits through uncoded.
#[derive(Debug, Clone)]
pub enum LevelCode {
    Ldpc(LdpcCode),
    RateZero,
    RateOne,
}

impl LevelCode {
    pub fn rate(&self) -> Rate {
        match self {
            LevelCode::Ldpc(c) => Rational64::new(c.k as i64, c.n as i64),
            LevelCode::RateZero => Rational64::new(0, 1),
            LevelCode::RateOne => Rational64::new(1, 1),
        }
    }
}

/// MLCM with SP or hybrid mapping: q parallel component codes over the
/// chain levels, m − np uncoded bit levels, multistage decoding.
#[derive(Debug, Clone)]
pub struct MlcmScheme {
    pub vc: VoronoiConstellation,
    pub mapping: Mapping,
    pub levels: Vec<LevelCode>,
    /// Symbols per block; equals every component codeword length.
    pub block_symbols: usize,
    /// Scaled-ball radius for hybrid level LLRs.
    pub ball_r2: i64,
}

pub struct MlcmTx {
    pub symbols: Vec<Vec<f64>>,
    /// Per level: coded bits, symbol-major (symbol j owns bits
    /// k·j .. k·(j+1) of the stream).
    pub level_bits: Vec<Vec<u8>>,
    /// Uncoded streams flattened symbol-major ((m−np) bits per symbol).
    pub uncoded_bits: Vec<u8>,
    pub info: Vec<u8>,
}

pub struct MlcmRx {
    pub info_hat: Vec<u8>,
    /// Decoded info bits per coded level (empty for rate-0 levels).
    pub level_info_hat: Vec<Vec<u8>>,
    pub level_converged: Vec<bool>,
    /// Uncoded-level decisions, symbol-major.
    pub uncoded_hat: Vec<u8>,
}

impl MlcmScheme {
    pub fn new(
        vc: VoronoiConstellation,
        mapping: Mapping,
        levels: Vec<LevelCode>,
        block_symbols: usize,
        ball_r2: i64,
    ) -> Result<Self> {
        let widths = mapping.coded_widths();
        if widths.is_empty() {
            return Err(CmError::BadMapping(mapping.name()));
        }
        if levels.len() != widths.len() {
            return Err(CmError::LevelCount { got: levels.len(), want: widths.len() });
        }
        for (i, lc) in levels.iter().enumerate() {
            if let LevelCode::Ldpc(c) = lc {
                if c.n != block_symbols {
                    return Err(CmError::CodeLength {
                        level: i,
                        code_n: c.n,
                        want: block_symbols,
                    });
                }
            }
        }
        Ok(MlcmScheme { vc, mapping, levels, block_symbols, ball_r2 })
    }

    pub fn uncoded_levels(&self) -> usize {
        self.vc.m_bits as usize - self.mapping.np()
    }

    /// Info bits consumed per block: Σ kᵢ·Kᵢ + (m − np)·N.
    pub fn info_bits_per_block(&self) -> usize {
        let widths = self.mapping.coded_widths();
        let coded: usize = self
            .levels
            .iter()
            .zip(&widths)
            .map(|(lc, &k)| match lc {
                LevelCode::Ldpc(c) => k as usize * c.k,
                LevelCode::RateZero => 0,
                LevelCode::RateOne => k as usize * self.block_symbols,
            })
            .sum();
        coded + self.uncoded_levels() * self.block_symbols
    }

    /// R_tot = (Σ kᵢRᵢ + (m − np)) / (n/2), exact.
    pub fn total_rate(&self) -> Rate {
        let widths = self.mapping.coded_widths();
        let mut acc = Rational64::new(0, 1);
        for (lc, &k) in self.levels.iter().zip(&widths) {
            acc += Rational64::from_integer(k as i64) * lc.rate();
        }
        acc += Rational64::from_integer(self.uncoded_levels() as i64);
        acc / Rational64::new(self.vc.n as i64, 2)
    }

    /// Layout of the info vector: per coded level a (offset, len), then
    /// the uncoded block.
    pub fn info_layout(&self) -> (Vec<std::ops::Range<usize>>, std::ops::Range<usize>) {
        let widths = self.mapping.coded_widths();
        let mut ranges = Vec::new();
        let mut at = 0usize;
        for (lc, &k) in self.levels.iter().zip(&widths) {
            let len = match lc {
                LevelCode::Ldpc(c) => k as usize * c.k,
                LevelCode::RateZero => 0,
                LevelCode::RateOne => k as usize * self.block_symbols,
            };
            ranges.push(at..at + len);
            at += len;
        }
        (ranges, at..at + self.uncoded_levels() * self.block_symbols)
    }

    pub fn transmit(&self, info: &[u8]) -> Result<MlcmTx> {
        let want = self.info_bits_per_block();
        if info.len() != want {
            return Err(CmError::InfoLength { got: info.len(), want });
        }
        let widths = self.mapping.coded_widths();
        let nsym = self.block_symbols;
        let (level_ranges, uncoded_range) = self.info_layout();
        // Encode each level into a symbol-major stream of kᵢ bits/symbol.
        let mut level_bits: Vec<Vec<u8>> = Vec::with_capacity(self.levels.len());
        for ((lc, &k), range) in self.levels.iter().zip(&widths).zip(&level_ranges) {
            let k = k as usize;
            let slice = &info[range.clone()];
            let mut stream = vec![0u8; k * nsym];
            match lc {
                LevelCode::Ldpc(code) => {
                    for e in 0..k {
                        let cw = code.encode(&slice[e * code.k..(e + 1) * code.k])?;
                        for j in 0..nsym {
                            stream[j * k + e] = cw[j];
                        }
                    }
                }
                LevelCode::RateZero => {}
                LevelCode::RateOne => {
                    for e in 0..k {
                        for j in 0..nsym {
                            stream[j * k + e] = slice[e * nsym + j];
                        }
                    }
                }
            }
            level_bits.push(stream);
        }
        let uncoded_bits = info[uncoded_range].to_vec();
        let mu = self.uncoded_levels();
        let m = self.vc.m_bits as usize;
        let mut symbols = Vec::with_capacity(nsym);
        let mut bits = vec![0u8; m];
        for j in 0..nsym {
            let mut at = 0usize;
            for (stream, &k) in level_bits.iter().zip(&widths) {
                let k = k as usize;
                bits[at..at + k].copy_from_slice(&stream[j * k..(j + 1) * k]);
                at += k;
            }
            bits[at..at + mu].copy_from_slice(&uncoded_bits[j * mu..(j + 1) * mu]);
            let u = self.mapping.bits_to_index(&self.vc, &bits)?;
            symbols.push(self.vc.encode_unchecked(&u));
        }
        Ok(MlcmTx { symbols, level_bits, uncoded_bits, info: info.to_vec() })
    }

    pub fn receive(&self, ys: &[Vec<f64>], sigma2: f64, max_iter: usize) -> Result<MlcmRx> {
        self.receive_inner(ys, sigma2, max_iter, None)
    }

    /// Genie-aided receive: coded levels are forced to their true
    /// transmitted bits, so the output errors are exactly the uncoded-level
    /// errors. Used for error-floor decomposition.
    pub fn receive_genie(&self, ys: &[Vec<f64>], sigma2: f64, tx: &MlcmTx) -> Result<MlcmRx> {
        self.receive_inner(ys, sigma2, 0, Some(tx))
    }

    fn receive_inner(
        &self,
        ys: &[Vec<f64>],
        sigma2: f64,
        max_iter: usize,
        genie: Option<&MlcmTx>,
    ) -> Result<MlcmRx> {
        let nsym = self.block_symbols;
        if ys.len() != nsym {
            return Err(CmError::SymbolCount { got: ys.len(), want: nsym });
        }
        let widths = self.mapping.coded_widths();
        let n = self.vc.n;
        // Per-symbol conditioning state: SP carries lattice representatives,
        // hybrid carries digit vectors.
        let mut prev_reps: Vec<Vec<Vec<i64>>> = vec![Vec::new(); nsym];
        let mut level_info_hat = Vec::with_capacity(self.levels.len());
        let mut level_converged = Vec::with_capacity(self.levels.len());
        for (i, (lc, &k)) in self.levels.iter().zip(&widths).enumerate() {
            let k = k as usize;
            // Hard bits for this level, symbol-major.
            let hard: Vec<u8>;
            match (genie, lc) {
                (Some(tx), _) => {
                    hard = tx.level_bits[i].clone();
                    level_info_hat.push(Vec::new());
                    level_converged.push(true);
                }
                (None, LevelCode::RateZero) => {
                    hard = vec![0u8; k * nsym];
                    level_info_hat.push(Vec::new());
                    level_converged.push(true);
                }
                (None, lc) => {
                    let frames: Vec<LlrFrame> = ys
                        .par_iter()
                        .zip(prev_reps.par_iter())
                        .map(|(y, prev)| self.level_llr(i, y, sigma2, prev))
                        .collect::<Result<_>>()?;
                    match lc {
                        LevelCode::Ldpc(code) => {
                            let mut stream = vec![0u8; k * nsym];
                            let mut infos = Vec::with_capacity(k * code.k);
                            let mut conv_all = true;
                            for e in 0..k {
                                let llrs: Vec<f64> =
                                    frames.iter().map(|f| f.values[e]).collect();
                                let (inf, conv, _) = code.decode(&llrs, max_iter)?;
                                conv_all &= conv;
                                let re = code.encode(&inf)?;
                                for j in 0..nsym {
                                    stream[j * k + e] = re[j];
                                }
                                infos.extend_from_slice(&inf);
                            }
                            hard = stream;
                            level_info_hat.push(infos);
                            level_converged.push(conv_all);
                        }
                        LevelCode::RateOne => {
                            let mut stream = vec![0u8; k * nsym];
                            for (j, f) in frames.iter().enumerate() {
                                for e in 0..k {
                                    stream[j * k + e] = u8::from(f.values[e] < 0.0);
                                }
                            }
                            // Info order for rate-one levels is stream-major
                            // per codeword position, matching transmit.
                            let mut infos = vec![0u8; k * nsym];
                            for e in 0..k {
                                for j in 0..nsym {
                                    infos[e * nsym + j] = stream[j * k + e];
                                }
                            }
                            hard = stream;
                            level_info_hat.push(infos);
                            level_converged.push(true);
                        }
                        LevelCode::RateZero => unreachable!(),
                    }
                }
            }
            // Re-encode into conditioning state for the next level.
            for j in 0..nsym {
                let bits = &hard[j * k..(j + 1) * k];
                let rep = self.rep_from_bits(i, bits)?;
                prev_reps[j].push(rep);
            }
        }
        // Final point estimate and uncoded-bit extraction per symbol.
        let p = self.mapping.p();
        let two_p = 1i64 << p;
        let mu = self.uncoded_levels();
        let np = self.mapping.np();
        let uncoded_hat: Vec<u8> = ys
            .par_iter()
            .zip(prev_reps.par_iter())
            .map(|(y, reps)| -> Result<Vec<u8>> {
                let mut shift = vec![0i64; n];
                for rep in reps {
                    for (s, &r) in shift.iter_mut().zip(rep) {
                        *s += r;
                    }
                }
                // x̂ = 2^p·⌊(y+a−ĉ)/2^p⌉ + ĉ − a, then w and the inverse map.
                let mut xhat = vec![0.0f64; n];
                for d in 0..n {
                    let t = y[d] + self.vc.offset[d] - shift[d] as f64;
                    let q = crate::lattices::round_half_up(t / two_p as f64);
                    xhat[d] = (two_p as f64) * q + shift[d] as f64 - self.vc.offset[d];
                }
                let u = self.vc.decode(&xhat);
                let bits = self.mapping.index_to_bits(&self.vc, &u)?;
                Ok(bits[np..].to_vec())
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        debug_assert_eq!(uncoded_hat.len(), mu * nsym);
        // Assemble the info estimate in transmit layout.
        let mut info_hat = Vec::with_capacity(self.info_bits_per_block());
        for infos in &level_info_hat {
            info_hat.extend_from_slice(infos);
        }
        info_hat.extend_from_slice(&uncoded_hat);
        Ok(MlcmRx { info_hat, level_info_hat, level_converged, uncoded_hat })
    }

    fn level_llr(
        &self,
        level: usize,
        y: &[f64],
        sigma2: f64,
        prev: &[Vec<i64>],
    ) -> Result<LlrFrame> {
        match &self.mapping {
            Mapping::Sp(chain) => {
                Ok(mlcm_sp_llr(chain, &self.vc, level, y, sigma2, prev)?)
            }
            Mapping::Hybrid(spec) => Ok(mlcm_hybrid_llr(
                spec,
                &self.vc,
                level,
                y,
                sigma2,
                prev,
                self.ball_r2,
            )?),
            Mapping::Gray => Err(CmError::BadMapping("gray")),
        }
    }

    /// Conditioning state for one level from its hard bits: SP looks up
    /// the coset representative, hybrid Gray-decodes the digits.
    fn rep_from_bits(&self, level: usize, bits: &[u8]) -> Result<Vec<i64>> {
        match &self.mapping {
            Mapping::Sp(chain) => {
                Ok(chain.steps[level].table.rep_for_bits(bits).to_vec())
            }
            Mapping::Hybrid(spec) => {
                let prev = if level == 0 { 0 } else { spec.exponents[level - 1] };
                let dp = spec.exponents[level] - prev;
                let digits = brgc_to_int(bits, &vec![1i64 << dp; self.vc.n])?;
                Ok(digits)
            }
            Mapping::Gray => Err(CmError::BadMapping("gray")),
        }
    }
}

// ---------------------------------------------------------------------------
// Per-level mutual information and the capacity rule
// ---------------------------------------------------------------------------

/// Per-bit conditional mutual information estimates in bits, with the
/// Monte-Carlo standard error of each value.
#[derive(Debug, Clone)]
pub struct MiReport {
    /// I(Y; B_k | bits of earlier levels), one entry per bit position.
    pub per_bit: Vec<f64>,
    pub per_bit_se: Vec<f64>,
    /// Width of each conditioning level (coded blocks, then 1 per
    /// uncoded bit).
    pub level_widths: Vec<usize>,
    pub samples: u64,
}

impl MiReport {
    /// Sum of the per-bit MIs over each level.
    pub fn level_sums(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.level_widths.len());
        let mut at = 0usize;
        for &w in &self.level_widths {
            out.push(self.per_bit[at..at + w].iter().sum());
            at += w;
        }
        out
    }
}

/// Monte-Carlo estimate of the per-level conditional MIs of a labeled
/// constellation over the AWGN channel.
///
/// Bits within one level are conditioned on all bits of earlier levels
/// only (they share a component code); uncoded bits are conditioned on all
/// chain-coded bits. For the Gray mapping every bit is unconditioned,
/// which gives the BICM sum capacity.
pub fn mi_bit_levels(
    vc: &VoronoiConstellation,
    mapping: &Mapping,
    snr_db: f64,
    samples: u64,
    seed: u64,
) -> Result<MiReport> {
    if vc.m_bits > 16 {
        return Err(CmError::MiTooLarge(vc.m_bits));
    }
    let m = vc.m_bits as usize;
    let n = vc.n;
    // Points and labels, labels packed into a u32 mask (bit k of the label
    // at mask bit k).
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut masks: Vec<u32> = Vec::new();
    for u in vc.indices().map_err(|e| CmError::Llr(crate::llr::LlrError::Vc(e)))? {
        points.push(vc.encode_unchecked(&u));
        let bits = mapping.index_to_bits(vc, &u)?;
        let mut mask = 0u32;
        for (k, &b) in bits.iter().enumerate() {
            mask |= (b as u32) << k;
        }
        masks.push(mask);
    }
    let npoints = points.len();
    // Conditioning masks per bit: all bits of earlier levels.
    let widths: Vec<usize> = match mapping {
        Mapping::Gray => vec![1; m],
        _ => {
            let mut w: Vec<usize> = mapping.coded_widths().iter().map(|&k| k as usize).collect();
            w.extend(std::iter::repeat(1).take(m - mapping.np()));
            w
        }
    };
    let mut cond_mask = vec![0u32; m];
    {
        let mut at = 0usize;
        let mut acc = 0u32;
        for &w in &widths {
            for k in at..at + w {
                cond_mask[k] = acc;
            }
            for k in at..at + w {
                acc |= 1 << k;
            }
            at += w;
        }
        // Uncoded bits condition only on the chain-coded bits.
        if !matches!(mapping, Mapping::Gray) {
            let np = mapping.np();
            let coded: u32 = (1u32 << np) - 1;
            for k in np..m {
                cond_mask[k] = coded;
            }
        }
    }
    let es = vc.symbol_energy();
    let sigma_tot2 = es / 10f64.powf(snr_db / 10.0);
    let sigma_d2 = sigma_tot2 / n as f64;
    let chunks: u64 = rayon::current_num_threads() as u64 * 4;
    let per_chunk = samples.div_ceil(chunks);
    let results: Vec<(Vec<f64>, Vec<f64>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                seed ^ (0xC0FFEE_u64.wrapping_add(chunk).wrapping_mul(0x9E3779B97F4A7C15)),
            );
            let normal = rand_distr::Normal::new(0.0, sigma_d2.sqrt()).unwrap();
            let mut sum = vec![0.0f64; m];
            let mut sum2 = vec![0.0f64; m];
            let mut w = vec![0.0f64; npoints];
            let mut y = vec![0.0f64; n];
            for _ in 0..per_chunk {
                let t = rng.gen_range(0..npoints);
                for (yd, xd) in y.iter_mut().zip(&points[t]) {
                    *yd = xd + normal.sample(&mut rng);
                }
                // Likelihood weights, shifted by the min distance.
                let mut dmin = f64::INFINITY;
                for (wi, p) in w.iter_mut().zip(&points) {
                    let d2: f64 = y.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
                    *wi = d2;
                    if d2 < dmin {
                        dmin = d2;
                    }
                }
                let inv = 1.0 / (2.0 * sigma_d2);
                for wi in w.iter_mut() {
                    *wi = (-(*wi - dmin) * inv).exp();
                }
                let tmask = masks[t];
                for k in 0..m {
                    let cm = cond_mask[k];
                    let full = cm | (1 << k);
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for (wi, &pm) in w.iter().zip(&masks) {
                        let agree = pm ^ tmask;
                        if agree & cm == 0 {
                            den += wi;
                            if agree & full == 0 {
                                num += wi;
                            }
                        }
                    }
                    // Information content of this bit: 1 − (−log2 p).
                    let bits = -(num / den).log2();
                    let v = 1.0 - bits;
                    sum[k] += v;
                    sum2[k] += v * v;
                }
            }
            (sum, sum2, per_chunk)
        })
        .collect();
    let total: u64 = results.iter().map(|r| r.2).sum();
    let mut per_bit = vec![0.0f64; m];
    let mut per_bit_se = vec![0.0f64; m];
    for k in 0..m {
        let s: f64 = results.iter().map(|r| r.0[k]).sum();
        let s2: f64 = results.iter().map(|r| r.1[k]).sum();
        let mean = s / total as f64;
        let var = (s2 / total as f64 - mean * mean).max(0.0);
        per_bit[k] = mean;
        per_bit_se[k] = (var / total as f64).sqrt();
    }
    Ok(MiReport { per_bit, per_bit_se, level_widths: widths, samples: total })
}

/// Per-bit MI cutoff below which a subchannel carries no information.
const MI_CUTOFF: f64 = 0.2;

fn rate_value(r: &Rate) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Capacity-rule rate selection: per level the largest available rate not
/// exceeding the per-bit conditional MI; levels below the 0.2 bits/bit
/// cutoff get rate 0 (subchannel unused).
pub fn capacity_rule_rates(
    level_widths: &[usize],
    level_mis: &[f64],
    rate_set: &[Rate],
) -> Vec<Option<Rate>> {
    level_widths
        .iter()
        .zip(level_mis)
        .map(|(&k, &mi)| {
            let per_bit = mi / k as f64;
            if per_bit < MI_CUTOFF {
                return None;
            }
            let mut best: Option<Rate> = None;
            for r in rate_set {
                if rate_value(r) <= per_bit && best.map_or(true, |b| r > &b) {
                    best = Some(*r);
                }
            }
            best
        })
        .collect()
}

/// Capacity rule with a coded-rate-sum target Σ kᵢRᵢ (how the published
/// rate tables are assembled: every scheme in a block shares one total
/// rate). Stronger levels take their largest feasible rate; the weakest
/// eligible level takes the smallest rate that still reaches the target,
/// never exceeding its own conditional MI. The 0.2 cutoff applies first.
pub fn capacity_rule_rates_targeted(
    level_widths: &[usize],
    level_mis: &[f64],
    rate_set: &[Rate],
    target_coded_sum: f64,
) -> Vec<Option<Rate>> {
    let q = level_widths.len();
    let per_bit: Vec<f64> = level_widths
        .iter()
        .zip(level_mis)
        .map(|(&k, &mi)| mi / k as f64)
        .collect();
    let mut eligible: Vec<usize> = (0..q).filter(|&i| per_bit[i] >= MI_CUTOFF).collect();
    // Strongest first; the weakest eligible level tops up to the target.
    eligible.sort_by(|&a, &b| per_bit[b].partial_cmp(&per_bit[a]).unwrap());
    let mut plan: Vec<Option<Rate>> = vec![None; q];
    let mut remaining = target_coded_sum;
    for (pos, &i) in eligible.iter().enumerate() {
        let max_rate = rate_set
            .iter()
            .filter(|r| rate_value(r) <= per_bit[i])
            .max()
            .copied();
        let chosen = if pos + 1 < eligible.len() {
            max_rate
        } else {
            // Smallest rate reaching the remaining target, capped by MI.
            let need = remaining / level_widths[i] as f64;
            rate_set
                .iter()
                .filter(|r| rate_value(r) <= per_bit[i] && rate_value(r) >= need - 1e-9)
                .min()
                .copied()
                .or(max_rate)
        };
        if let Some(r) = chosen {
            remaining -= level_widths[i] as f64 * rate_value(&r);
            plan[i] = Some(r);
        }
    }
    plan
}
