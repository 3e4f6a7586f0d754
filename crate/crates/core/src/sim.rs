//! AWGN channel, SNR conventions, Monte-Carlo BER sweeps, benchmark
//! QAM/TDHQ constellations, experiment configs and result records.
//!
//! SNR is defined as Es/σ²_tot with σ²_tot the total noise variance over
//! the n dimensions of one symbol; the σ² entering every LLR formula is
//! the noise power per two dimensions, σ² = 2σ²_tot/n. Es is measured per
//! constellation instance, not assumed.
//!
//! Sweeps are deterministic: work is split into fixed-size tasks whose
//! RNG streams derive from the master seed and task index, so results do
//! not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cm::{BicmScheme, LevelCode, MlcmScheme, Rate};
use crate::fec::LdpcCode;
use crate::labeling::{HybridChainSpec, Mapping};
use crate::lattices::PartitionChainSpec;
use crate::vc::VoronoiConstellation;

#[derive(thiserror::Error, Debug)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
    #[error("failed to parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Vc(#[from] crate::vc::VcError),
    #[error(transparent)]
    Lattice(#[from] crate::lattices::LatticeError),
    #[error(transparent)]
    Label(#[from] crate::labeling::LabelError),
    #[error(transparent)]
    Fec(#[from] crate::fec::FecError),
    #[error(transparent)]
    Cm(#[from] crate::cm::CmError),
}

pub type Result<T> = std::result::Result<T, SimError>;

// ---------------------------------------------------------------------------
// SNR conventions and the channel
// ---------------------------------------------------------------------------

pub fn sigma_tot2_from_snr_db(es: f64, snr_db: f64) -> f64 {
    es / 10f64.powf(snr_db / 10.0)
}

pub fn snr_db_from_sigma_tot2(es: f64, sigma_tot2: f64) -> f64 {
    10.0 * (es / sigma_tot2).log10()
}

/// Noise power per two dimensions from the total per-symbol variance.
pub fn sigma2_per_2d(sigma_tot2: f64, n: usize) -> f64 {
    2.0 * sigma_tot2 / n as f64
}

/// Add white Gaussian noise with total variance σ²_tot per symbol
/// (σ²_tot/n per dimension).
pub fn awgn<R: Rng>(x: &[Vec<f64>], sigma_tot2: f64, rng: &mut R) -> Vec<Vec<f64>> {
    assert!(sigma_tot2 > 0.0);
    let n = x.first().map_or(0, |s| s.len());
    let normal = Normal::new(0.0, (sigma_tot2 / n as f64).sqrt()).unwrap();
    x.iter()
        .map(|sym| sym.iter().map(|&v| v + normal.sample(rng)).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// Records and stop rules
// ---------------------------------------------------------------------------

/// One measured BER point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BerRecord {
    pub scheme: String,
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub prefec_ber: f64,
    pub postfec_ber: f64,
    pub level_bers: Vec<f64>,
    pub seed: u64,
    pub seconds: f64,
}

impl BerRecord {
    pub const CSV_HEADER: &'static str =
        "scheme,snr_db,bits,errors,prefec_ber,postfec_ber,level_bers,seed,seconds";

    pub fn csv_line(&self) -> String {
        let levels = self
            .level_bers
            .iter()
            .map(|b| format!("{b:.6e}"))
            .collect::<Vec<_>>()
            .join(";");
        format!(
            "{},{:.4},{},{},{:.6e},{:.6e},{},{},{:.3}",
            self.scheme,
            self.snr_db,
            self.bits,
            self.errors,
            self.prefec_ber,
            self.postfec_ber,
            levels,
            self.seed,
            self.seconds
        )
    }
}

/// Stop when either the target error count or the bit cap is reached.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StopRule {
    #[serde(default = "default_target_errors")]
    pub target_errors: u64,
    #[serde(default = "default_max_bits")]
    pub max_bits: u64,
}

fn default_target_errors() -> u64 {
    200
}

fn default_max_bits() -> u64 {
    10_000_000
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { target_errors: 200, max_bits: 10_000_000 }
    }
}

/// Log-linear interpolation of the SNR where the post-FEC BER crosses a
/// target (the outer-code threshold read-out).
pub fn threshold_crossing(records: &[BerRecord], target: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.postfec_ber > 0.0)
        .map(|r| (r.snr_db, r.postfec_ber))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in pts.windows(2) {
        let (s0, b0) = w[0];
        let (s1, b1) = w[1];
        if (b0 >= target && b1 <= target) || (b0 <= target && b1 >= target) {
            if b0 == b1 {
                return Some(s0);
            }
            let t = (target.log10() - b0.log10()) / (b1.log10() - b0.log10());
            return Some(s0 + t * (s1 - s0));
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Benchmark constellations
// ---------------------------------------------------------------------------

/// Square/rectangular Gray QAM as a PAM-product constellation on the
/// 2D integer grid: `bits` per 2D symbol.
pub fn build_qam(bits: u32) -> Result<VoronoiConstellation> {
    if bits < 2 {
        return Err(SimError::Config(format!("QAM needs ≥ 2 bits per 2D, got {bits}")));
    }
    let hi = 1i64 << bits.div_ceil(2);
    let lo = 1i64 << (bits / 2);
    Ok(VoronoiConstellation::rectangular(
        format!("{}-QAM", 1u64 << bits),
        vec![hi, lo],
    )?)
}

/// Time-domain hybrid QAM: t₁ symbols of M₁-QAM and t₂ of M₂-QAM,
/// multiplexed into one n = 2(t₁+t₂)-dimensional symbol on the shared
/// integer grid (all constituents keep minimum distance 1).
pub fn build_tdhq(t1: usize, m1: u64, t2: usize, m2: u64) -> Result<VoronoiConstellation> {
    for m in [m1, m2] {
        if !m.is_power_of_two() || m < 4 {
            return Err(SimError::Config(format!("TDHQ size {m} is not a power of 2 ≥ 4")));
        }
    }
    let mut h = Vec::new();
    for (t, m) in [(t1, m1), (t2, m2)] {
        let bits = m.trailing_zeros();
        for _ in 0..t {
            h.push(1i64 << bits.div_ceil(2));
            h.push(1i64 << (bits / 2));
        }
    }
    Ok(VoronoiConstellation::rectangular(
        format!("TDHQ({t1}x{m1},{t2}x{m2})"),
        h,
    )?)
}

/// Resolve a constellation name: the VC catalog, `<M>-QAM`, or TDHQ1/2.
pub fn constellation_by_name(name: &str) -> Result<VoronoiConstellation> {
    if VoronoiConstellation::catalog_names().contains(&name) {
        return Ok(VoronoiConstellation::catalog(name)?);
    }
    let upper = name.to_ascii_uppercase();
    if let Some(m) = upper.strip_suffix("-QAM") {
        let m: u64 = m
            .parse()
            .map_err(|_| SimError::Config(format!("bad QAM size in '{name}'")))?;
        if !m.is_power_of_two() {
            return Err(SimError::Config(format!("QAM size {m} is not a power of 2")));
        }
        return build_qam(m.trailing_zeros());
    }
    match upper.as_str() {
        // TDHQ formats matching the 16D VCs at β = 9.5 and 11.5.
        "TDHQ1" => build_tdhq(4, 1024, 4, 512),
        "TDHQ2" => build_tdhq(4, 4096, 4, 2048),
        _ => Err(SimError::Config(format!("unknown constellation '{name}'"))),
    }
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// 0 = use all cores.
    #[serde(default)]
    pub threads: usize,
    pub constellation: ConstellationConfig,
    pub scheme: SchemeConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstellationConfig {
    pub name: String,
    /// "half" (default) or "refined".
    #[serde(default = "default_offset")]
    pub offset: String,
}

fn default_offset() -> String {
    "half".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeConfig {
    /// "uncoded" | "bicm" | "mlcm".
    pub kind: String,
    /// "gray" | "sp" | "hybrid".
    #[serde(default = "default_mapping")]
    pub mapping: String,
    /// Chain name for SP ("sp-n2-p1", "e8-48-sp", "table-I-n8", ...) or
    /// hybrid exponents ("hybrid-p1", "hybrid-p1,2").
    #[serde(default)]
    pub chain: Option<String>,
    /// BICM component code.
    #[serde(default)]
    pub code: Option<String>,
    /// MLCM per-level codes: builtin name, "rate0", "rate1", "alist:path".
    #[serde(default)]
    pub codes: Vec<String>,
    #[serde(default = "default_interleaver_seed")]
    pub interleaver_seed: u64,
    #[serde(default)]
    pub ball_r2: Option<i64>,
    #[serde(default = "default_ball_default")]
    pub ball_default: f64,
    #[serde(default)]
    pub block_symbols: Option<usize>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_mapping() -> String {
    "gray".into()
}

fn default_interleaver_seed() -> u64 {
    1
}

fn default_ball_default() -> f64 {
    20.0
}

fn default_max_iterations() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    #[serde(default = "default_target_errors")]
    pub target_errors: u64,
    #[serde(default = "default_max_bits")]
    pub max_bits: u64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule {
            target_errors: self.sweep.target_errors,
            max_bits: self.sweep.max_bits,
        }
    }

    pub fn build_constellation(&self) -> Result<VoronoiConstellation> {
        let mut vc = constellation_by_name(&self.constellation.name)?;
        match self.constellation.offset.as_str() {
            "half" => {}
            "refined" => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x0FF5E7);
                vc.refine_offset(&mut rng);
            }
            other => {
                return Err(SimError::Config(format!("unknown offset mode '{other}'")));
            }
        }
        Ok(vc)
    }

    pub fn build_mapping(&self, vc: &VoronoiConstellation) -> Result<Mapping> {
        match self.scheme.mapping.as_str() {
            "gray" => Ok(Mapping::Gray),
            "sp" => {
                let chain = self
                    .scheme
                    .chain
                    .as_deref()
                    .ok_or_else(|| SimError::Config("SP mapping needs a chain name".into()))?;
                Ok(Mapping::Sp(PartitionChainSpec::by_name(chain)?))
            }
            "hybrid" => {
                let spec = match self.scheme.chain.as_deref() {
                    None | Some("hybrid-p1") => HybridChainSpec::new(vc.n, vec![1])?,
                    Some(s) => {
                        let rest = s.strip_prefix("hybrid-p").ok_or_else(|| {
                            SimError::Config(format!("bad hybrid chain '{s}'"))
                        })?;
                        let exps: std::result::Result<Vec<u32>, _> =
                            rest.split(',').map(|v| v.parse()).collect();
                        HybridChainSpec::new(
                            vc.n,
                            exps.map_err(|_| {
                                SimError::Config(format!("bad hybrid exponents '{s}'"))
                            })?,
                        )?
                    }
                };
                Ok(Mapping::Hybrid(spec))
            }
            other => Err(SimError::Config(format!("unknown mapping '{other}'"))),
        }
    }

    fn build_code(&self, spec: &str) -> Result<LdpcCode> {
        if let Some(path) = spec.strip_prefix("alist:") {
            return Ok(LdpcCode::load_alist(std::path::Path::new(path))?);
        }
        Ok(LdpcCode::builtin(spec)?)
    }

    pub fn build_bicm(&self) -> Result<BicmScheme> {
        let vc = self.build_constellation()?;
        let code_name = self
            .scheme
            .code
            .as_deref()
            .ok_or_else(|| SimError::Config("BICM needs scheme.code".into()))?;
        let code = self.build_code(code_name)?;
        let ball_r2 = self.scheme.ball_r2.unwrap_or(match vc.n {
            16 | 24 => crate::llr::BALL_R2_16D,
            _ => crate::llr::BALL_R2_8D,
        });
        Ok(BicmScheme::new(
            vc,
            code,
            self.scheme.interleaver_seed,
            ball_r2,
            self.scheme.ball_default,
        )?)
    }

    pub fn build_mlcm(&self) -> Result<MlcmScheme> {
        let vc = self.build_constellation()?;
        let mapping = self.build_mapping(&vc)?;
        if self.scheme.codes.is_empty() {
            return Err(SimError::Config("MLCM needs scheme.codes".into()));
        }
        let mut levels = Vec::new();
        let mut block = self.scheme.block_symbols;
        for spec in &self.scheme.codes {
            let lc = match spec.as_str() {
                "rate0" => LevelCode::RateZero,
                "rate1" => LevelCode::RateOne,
                other => {
                    let code = self.build_code(other)?;
                    if block.is_none() {
                        block = Some(code.n);
                    }
                    LevelCode::Ldpc(code)
                }
            };
            levels.push(lc);
        }
        let block = block.ok_or_else(|| {
            SimError::Config("MLCM with no LDPC level needs scheme.block_symbols".into())
        })?;
        let ball_r2 = self.scheme.ball_r2.unwrap_or(1);
        Ok(MlcmScheme::new(vc, mapping, levels, block, ball_r2)?)
    }
}

// ---------------------------------------------------------------------------
// Monte-Carlo BER sweeps
// ---------------------------------------------------------------------------

fn task_rng(master: u64, snr_idx: usize, task: u64) -> ChaCha8Rng {
    let mix = master
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add((snr_idx as u64) << 32)
        .wrapping_add(task)
        .wrapping_mul(0xD1B54A32D192ED03);
    ChaCha8Rng::seed_from_u64(mix)
}

/// Uncoded BER of a mapped constellation over AWGN: map random labels,
/// add noise, decode to the nearest index, inverse-map, count bit errors.
pub fn uncoded_ber(
    vc: &VoronoiConstellation,
    mapping: &Mapping,
    snr_grid: &[f64],
    stop: StopRule,
    seed: u64,
) -> Result<Vec<BerRecord>> {
    let m = vc.m_bits as u64;
    let es = vc.symbol_energy();
    let tasks_per_batch = rayon::current_num_threads().max(1) as u64;
    let symbols_per_task = 512u64;
    let mut out = Vec::with_capacity(snr_grid.len());
    for (si, &snr_db) in snr_grid.iter().enumerate() {
        let t0 = std::time::Instant::now();
        let sigma_tot2 = sigma_tot2_from_snr_db(es, snr_db);
        let sigma_d = (sigma_tot2 / vc.n as f64).sqrt();
        let mut bits = 0u64;
        let mut errors = 0u64;
        let mut task = 0u64;
        while errors < stop.target_errors && bits < stop.max_bits {
            let batch: Vec<(u64, u64)> = (0..tasks_per_batch)
                .into_par_iter()
                .map(|t| {
                    let mut rng = task_rng(seed, si, task + t);
                    let normal = Normal::new(0.0, sigma_d).unwrap();
                    let mut errs = 0u64;
                    for _ in 0..symbols_per_task {
                        let u = vc.random_index(&mut rng);
                        let tx_bits = mapping.index_to_bits(vc, &u).expect("valid index");
                        let x = vc.encode_unchecked(&u);
                        let y: Vec<f64> =
                            x.iter().map(|&v| v + normal.sample(&mut rng)).collect();
                        let uhat = vc.decode(&y);
                        let rx_bits = mapping.index_to_bits(vc, &uhat).expect("valid index");
                        errs += tx_bits
                            .iter()
                            .zip(&rx_bits)
                            .filter(|(a, b)| a != b)
                            .count() as u64;
                    }
                    (symbols_per_task * m, errs)
                })
                .collect();
            for (b, e) in batch {
                bits += b;
                errors += e;
            }
            task += tasks_per_batch;
        }
        let ber = errors as f64 / bits as f64;
        out.push(BerRecord {
            scheme: format!("uncoded-{}-{}", mapping.name(), vc.name),
            snr_db,
            bits,
            errors,
            prefec_ber: ber,
            postfec_ber: ber,
            level_bers: Vec::new(),
            seed,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(out)
}

/// Either coded pipeline, type-erased for the sweep driver.
pub enum CodedScheme {
    Bicm(BicmScheme),
    Mlcm(MlcmScheme),
}

impl CodedScheme {
    pub fn name(&self) -> String {
        match self {
            CodedScheme::Bicm(s) => format!("bicm-{}", s.vc.name),
            CodedScheme::Mlcm(s) => {
                format!("mlcm-{}-{}", s.mapping.name(), s.vc.name)
            }
        }
    }

    pub fn vc(&self) -> &VoronoiConstellation {
        match self {
            CodedScheme::Bicm(s) => &s.vc,
            CodedScheme::Mlcm(s) => &s.vc,
        }
    }

    pub fn info_bits_per_block(&self) -> usize {
        match self {
            CodedScheme::Bicm(s) => s.info_bits_per_block(),
            CodedScheme::Mlcm(s) => s.info_bits_per_block(),
        }
    }

    pub fn total_rate(&self) -> Rate {
        match self {
            CodedScheme::Bicm(s) => s.total_rate(),
            CodedScheme::Mlcm(s) => s.total_rate(),
        }
    }
}

struct BlockOutcome {
    info_bits: u64,
    info_errors: u64,
    raw_bits: u64,
    raw_errors: u64,
    level_bits: Vec<u64>,
    level_errors: Vec<u64>,
}

/// Coded BER sweep. Post-FEC BER counts info-bit errors; pre-FEC BER
/// counts hard-decision errors on the coded stream (BICM) or raw mapped
/// bits through symbol-wise decoding (MLCM).
pub fn coded_ber(
    scheme: &CodedScheme,
    snr_grid: &[f64],
    stop: StopRule,
    seed: u64,
    max_iter: usize,
) -> Result<Vec<BerRecord>> {
    let vc = scheme.vc();
    let es = vc.symbol_energy();
    let tasks_per_batch = rayon::current_num_threads().max(1) as u64;
    let mut out = Vec::with_capacity(snr_grid.len());
    for (si, &snr_db) in snr_grid.iter().enumerate() {
        let t0 = std::time::Instant::now();
        let sigma_tot2 = sigma_tot2_from_snr_db(es, snr_db);
        let sigma2 = sigma2_per_2d(sigma_tot2, vc.n);
        let mut info_bits = 0u64;
        let mut info_errors = 0u64;
        let mut raw_bits = 0u64;
        let mut raw_errors = 0u64;
        let mut level_bits: Vec<u64> = Vec::new();
        let mut level_errors: Vec<u64> = Vec::new();
        let mut task = 0u64;
        while info_errors < stop.target_errors && info_bits < stop.max_bits {
            let batch: Vec<BlockOutcome> = (0..tasks_per_batch)
                .into_par_iter()
                .map(|t| run_block(scheme, sigma_tot2, sigma2, seed, si, task + t, max_iter))
                .collect::<Result<_>>()?;
            for b in batch {
                info_bits += b.info_bits;
                info_errors += b.info_errors;
                raw_bits += b.raw_bits;
                raw_errors += b.raw_errors;
                if level_bits.len() < b.level_bits.len() {
                    level_bits.resize(b.level_bits.len(), 0);
                    level_errors.resize(b.level_bits.len(), 0);
                }
                for (i, (&lb, &le)) in b.level_bits.iter().zip(&b.level_errors).enumerate() {
                    level_bits[i] += lb;
                    level_errors[i] += le;
                }
            }
            task += tasks_per_batch;
        }
        out.push(BerRecord {
            scheme: scheme.name(),
            snr_db,
            bits: info_bits,
            errors: info_errors,
            prefec_ber: raw_errors as f64 / raw_bits.max(1) as f64,
            postfec_ber: info_errors as f64 / info_bits.max(1) as f64,
            level_bers: level_bits
                .iter()
                .zip(&level_errors)
                .map(|(&b, &e)| e as f64 / b.max(1) as f64)
                .collect(),
            seed,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(out)
}

fn run_block(
    scheme: &CodedScheme,
    sigma_tot2: f64,
    sigma2: f64,
    seed: u64,
    si: usize,
    task: u64,
    max_iter: usize,
) -> Result<BlockOutcome> {
    let mut rng = task_rng(seed, si, task);
    match scheme {
        CodedScheme::Bicm(s) => {
            let info = crate::fec::random_bits(s.info_bits_per_block(), &mut rng);
            let tx = s.transmit(&info)?;
            let ys = awgn(&tx.symbols, sigma_tot2, &mut rng);
            let rx = s.receive(&ys, sigma2, max_iter)?;
            let info_errors = info
                .iter()
                .zip(&rx.info_hat)
                .filter(|(a, b)| a != b)
                .count() as u64;
            let raw_errors = tx
                .coded
                .iter()
                .zip(&rx.coded_hard)
                .filter(|(a, b)| a != b)
                .count() as u64;
            Ok(BlockOutcome {
                info_bits: info.len() as u64,
                info_errors,
                raw_bits: tx.coded.len() as u64,
                raw_errors,
                level_bits: Vec::new(),
                level_errors: Vec::new(),
            })
        }
        CodedScheme::Mlcm(s) => {
            let info = crate::fec::random_bits(s.info_bits_per_block(), &mut rng);
            let tx = s.transmit(&info)?;
            let ys = awgn(&tx.symbols, sigma_tot2, &mut rng);
            let rx = s.receive(&ys, sigma2, max_iter)?;
            let info_errors = info
                .iter()
                .zip(&rx.info_hat)
                .filter(|(a, b)| a != b)
                .count() as u64;
            // Raw pre-FEC reference: symbol-wise decode of the noisy
            // points against the transmitted labels.
            let mut raw_errors = 0u64;
            let mut raw_bits = 0u64;
            for (y, x) in ys.iter().zip(&tx.symbols) {
                let ut = s.vc.decode(x);
                let uh = s.vc.decode(y);
                let bt = s.mapping.index_to_bits(&s.vc, &ut)?;
                let bh = s.mapping.index_to_bits(&s.vc, &uh)?;
                raw_errors += bt.iter().zip(&bh).filter(|(a, b)| a != b).count() as u64;
                raw_bits += bt.len() as u64;
            }
            // Per-level info errors; uncoded level appended last.
            let (ranges, uncoded_range) = s.info_layout();
            let mut level_bits = Vec::new();
            let mut level_errors = Vec::new();
            for (i, range) in ranges.iter().enumerate() {
                let truth = &info[range.clone()];
                let got = &rx.level_info_hat[i];
                level_bits.push(truth.len() as u64);
                level_errors.push(
                    truth.iter().zip(got).filter(|(a, b)| a != b).count() as u64,
                );
            }
            let truth = &info[uncoded_range];
            level_bits.push(truth.len() as u64);
            level_errors.push(
                truth
                    .iter()
                    .zip(&rx.uncoded_hat)
                    .filter(|(a, b)| a != b)
                    .count() as u64,
            );
            Ok(BlockOutcome {
                info_bits: info.len() as u64,
                info_errors,
                raw_bits,
                raw_errors,
                level_bits,
                level_errors,
            })
        }
    }
}

/// Run a full experiment config: builds the scheme and sweeps the grid.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    let stop = cfg.stop_rule();
    match cfg.scheme.kind.as_str() {
        "uncoded" => {
            let vc = cfg.build_constellation()?;
            let mapping = cfg.build_mapping(&vc)?;
            uncoded_ber(&vc, &mapping, &cfg.sweep.snr_db, stop, cfg.seed)
        }
        "bicm" => {
            let s = CodedScheme::Bicm(cfg.build_bicm()?);
            coded_ber(&s, &cfg.sweep.snr_db, stop, cfg.seed, cfg.scheme.max_iterations)
        }
        "mlcm" => {
            let s = CodedScheme::Mlcm(cfg.build_mlcm()?);
            coded_ber(&s, &cfg.sweep.snr_db, stop, cfg.seed, cfg.scheme.max_iterations)
        }
        other => Err(SimError::Config(format!("unknown scheme kind '{other}'"))),
    }
}

/// JSON summary: config echo plus all records.
pub fn summary_json(cfg: &ExperimentConfig, records: &[BerRecord]) -> String {
    serde_json::json!({
        "config": cfg,
        "records": records,
    })
    .to_string()
}
