//! Voronoi constellations over the partition Zⁿ/Λₛ: integer-index encoding
//! and decoding, symbol energy, offset handling, and the named catalog.
//!
//! A constellation point is a translated integer-lattice point whose
//! closest shaping-lattice point is the origin. Encoding maps an integer
//! vector `u` (componentwise `0 ≤ uᵢ < hᵢ`, where `h` is the diagonal of
//! the lower-triangular shaping generator) to the congruent point inside
//! the Voronoi region; decoding rounds to the integer grid and reduces
//! back to the canonical index by back-substitution.

use num::bigint::BigUint;
use rand::Rng;

use crate::lattices::{round_half_up, Lattice, LatticeError};
use crate::matrix::IMat;

#[derive(thiserror::Error, Debug)]
pub enum VcError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("shaping lattice must be an integral sublattice of Zn")]
    NotIntegral,
    #[error("shaping diagonal {0} is not a power of 2")]
    BadDiagonal(i64),
    #[error("index component {got} out of range [0, {limit}) at dimension {dim}")]
    IndexOutOfRange { dim: usize, got: i64, limit: i64 },
    #[error("constellation too large for exact enumeration (m = {0} bits)")]
    TooLarge(u32),
    #[error("unknown constellation '{0}'")]
    UnknownName(String),
}

pub type Result<T> = std::result::Result<T, VcError>;

/// Bring an integer generator to the canonical lower-triangular form used
/// for indexing (positive diagonal, below-diagonal entries reduced).
pub fn triangularize(g: &IMat) -> Result<IMat> {
    g.hnf_lower().ok_or(VcError::Lattice(LatticeError::Singular))
}

/// The shaping set cutting the constellation boundary: either a true
/// lattice or a rectangular box (per-dimension scaled integers), the
/// latter covering the QAM/TDHQ benchmark formats.
#[derive(Debug, Clone)]
pub enum ShapingSet {
    Lattice(Lattice),
    Rect { h: Vec<i64> },
}

impl ShapingSet {
    fn quantize(&self, y: &[f64]) -> Vec<f64> {
        match self {
            ShapingSet::Lattice(l) => l.quantize(y),
            ShapingSet::Rect { h } => y
                .iter()
                .zip(h)
                .map(|(&v, &hi)| hi as f64 * round_half_up(v / hi as f64))
                .collect(),
        }
    }

    fn name(&self) -> String {
        match self {
            ShapingSet::Lattice(l) => l.name.clone(),
            ShapingSet::Rect { h } => format!(
                "diag({})",
                h.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            ),
        }
    }
}

/// Exhaustive-vs-sampled threshold for energy and enumeration.
pub const EXACT_ENUM_BITS: u32 = 20;

/// A Voronoi constellation Γ = {x ∈ (Zⁿ − a) : Q_Λₛ(x) = 0}.
#[derive(Debug, Clone)]
pub struct VoronoiConstellation {
    pub name: String,
    pub n: usize,
    pub shaping: ShapingSet,
    /// Lower-triangular shaping generator.
    pub gs: IMat,
    /// Diagonal of `gs`; every entry a power of 2.
    pub h: Vec<i64>,
    /// Offset vector a.
    pub offset: Vec<f64>,
    /// m = log₂ M.
    pub m_bits: u32,
}

impl VoronoiConstellation {
    /// Build from a shaping lattice with the default offset a = ½·1.
    pub fn from_shaping(name: impl Into<String>, shaping: Lattice) -> Result<Self> {
        if !shaping.is_integral() {
            return Err(VcError::NotIntegral);
        }
        let gs = triangularize(shaping.generator())?;
        Self::assemble(name.into(), ShapingSet::Lattice(shaping), gs)
    }

    /// Rectangular shaping (PAM product): h gives the per-dimension sizes.
    /// The offset (hᵢ−1)/2 makes index and point order coincide, giving
    /// the textbook Gray-PAM labeling with no wrap at the cell boundary.
    pub fn rectangular(name: impl Into<String>, h: Vec<i64>) -> Result<Self> {
        let n = h.len();
        let mut rows = vec![vec![0i64; n]; n];
        for i in 0..n {
            rows[i][i] = h[i];
        }
        let offset: Vec<f64> = h.iter().map(|&hi| (hi - 1) as f64 / 2.0).collect();
        let mut vc = Self::assemble(name.into(), ShapingSet::Rect { h }, IMat::new(rows))?;
        vc.offset = offset;
        Ok(vc)
    }

    fn assemble(name: String, shaping: ShapingSet, gs: IMat) -> Result<Self> {
        let n = gs.n;
        let mut m_bits = 0u32;
        let mut h = Vec::with_capacity(n);
        for i in 0..n {
            let hi = gs.rows[i][i];
            if hi <= 0 || hi.count_ones() != 1 {
                return Err(VcError::BadDiagonal(hi));
            }
            m_bits += hi.trailing_zeros();
            h.push(hi);
        }
        Ok(VoronoiConstellation {
            name,
            n,
            shaping,
            gs,
            h,
            offset: vec![0.5; n],
            m_bits,
        })
    }

    /// Constellation size M = 2^m.
    pub fn size(&self) -> BigUint {
        BigUint::from(1u8) << self.m_bits
    }

    /// Spectral efficiency β = 2m/n in bits per 2D symbol.
    pub fn beta(&self) -> f64 {
        2.0 * self.m_bits as f64 / self.n as f64
    }

    /// Per-dimension label widths log₂ hᵢ.
    pub fn widths(&self) -> Vec<u32> {
        self.h.iter().map(|&hi| hi.trailing_zeros()).collect()
    }

    fn check_index(&self, u: &[i64]) -> Result<()> {
        assert_eq!(u.len(), self.n);
        for (dim, (&ui, &hi)) in u.iter().zip(&self.h).enumerate() {
            if ui < 0 || ui >= hi {
                return Err(VcError::IndexOutOfRange { dim, got: ui, limit: hi });
            }
        }
        Ok(())
    }

    /// Encode g: U → Γ, x = (u − a) − Q_Λₛ(u − a).
    pub fn encode(&self, u: &[i64]) -> Result<Vec<f64>> {
        self.check_index(u)?;
        Ok(self.encode_unchecked(u))
    }

    pub fn encode_unchecked(&self, u: &[i64]) -> Vec<f64> {
        let shifted: Vec<f64> = u
            .iter()
            .zip(&self.offset)
            .map(|(&ui, &ai)| ui as f64 - ai)
            .collect();
        let q = self.shaping.quantize(&shifted);
        shifted.iter().zip(&q).map(|(a, b)| a - b).collect()
    }

    /// Decode w: Rⁿ → U. Rounds y + a to the integer grid, then reduces to
    /// the canonical index by back-substitution over the lower-triangular
    /// shaping generator.
    pub fn decode(&self, y: &[f64]) -> Vec<i64> {
        assert_eq!(y.len(), self.n);
        let lam: Vec<i64> = y
            .iter()
            .zip(&self.offset)
            .map(|(&v, &ai)| round_half_up(v + ai) as i64)
            .collect();
        self.reduce_index(&lam)
    }

    /// The unique u ∈ U congruent to an integer point modulo Λₛ.
    pub fn reduce_index(&self, point: &[i64]) -> Vec<i64> {
        let mut lam = point.to_vec();
        for i in (0..self.n).rev() {
            let hi = self.h[i];
            let ui = lam[i].rem_euclid(hi);
            let k = (lam[i] - ui) / hi;
            if k != 0 {
                for j in 0..=i {
                    lam[j] -= k * self.gs.rows[i][j];
                }
            }
        }
        lam
    }

    pub fn random_index<R: Rng>(&self, rng: &mut R) -> Vec<i64> {
        self.h.iter().map(|&hi| rng.gen_range(0..hi)).collect()
    }

    /// Iterate all of U (only for m ≤ EXACT_ENUM_BITS).
    pub fn indices(&self) -> Result<IndexIter> {
        if self.m_bits > EXACT_ENUM_BITS {
            return Err(VcError::TooLarge(self.m_bits));
        }
        Ok(IndexIter {
            h: self.h.clone(),
            cur: vec![0; self.n],
            done: false,
        })
    }

    /// Average symbol energy, exact (exhaustive) when the constellation is
    /// enumerable.
    pub fn average_energy_exact(&self) -> Result<f64> {
        let mut sum = 0.0;
        let mut count = 0u64;
        for u in self.indices()? {
            let x = self.encode_unchecked(&u);
            sum += x.iter().map(|v| v * v).sum::<f64>();
            count += 1;
        }
        Ok(sum / count as f64)
    }

    /// Monte-Carlo average symbol energy with its standard error.
    pub fn average_energy_mc<R: Rng>(&self, trials: u64, rng: &mut R) -> (f64, f64) {
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..trials {
            let u = self.random_index(rng);
            let x = self.encode_unchecked(&u);
            let e = x.iter().map(|v| v * v).sum::<f64>();
            sum += e;
            sum2 += e * e;
        }
        let mean = sum / trials as f64;
        let var = (sum2 / trials as f64 - mean * mean).max(0.0);
        (mean, (var / trials as f64).sqrt())
    }

    /// Symbol energy used for SNR normalization: exact when enumerable,
    /// otherwise a fixed-seed Monte-Carlo measurement (deterministic).
    pub fn symbol_energy(&self) -> f64 {
        if self.m_bits <= EXACT_ENUM_BITS {
            self.average_energy_exact().expect("enumerable")
        } else {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xE5E5_0001);
            self.average_energy_mc(1 << 17, &mut rng).0
        }
    }

    /// Offset refinement: shift a by the constellation centroid until the
    /// centroid norm drops below 10⁻³·√Es. Returns the number of steps.
    pub fn refine_offset<R: Rng>(&mut self, rng: &mut R) -> usize {
        const MAX_STEPS: usize = 40;
        for step in 0..MAX_STEPS {
            let (centroid, es) = self.centroid_estimate(rng);
            let cnorm = centroid.iter().map(|v| v * v).sum::<f64>().sqrt();
            if cnorm <= 1e-3 * es.sqrt() {
                return step;
            }
            for (ai, ci) in self.offset.iter_mut().zip(&centroid) {
                *ai += ci;
            }
        }
        MAX_STEPS
    }

    fn centroid_estimate<R: Rng>(&self, rng: &mut R) -> (Vec<f64>, f64) {
        let mut centroid = vec![0.0; self.n];
        let mut es = 0.0;
        if self.m_bits <= EXACT_ENUM_BITS {
            let mut count = 0u64;
            for u in self.indices().expect("enumerable") {
                let x = self.encode_unchecked(&u);
                for (c, v) in centroid.iter_mut().zip(&x) {
                    *c += v;
                }
                es += x.iter().map(|v| v * v).sum::<f64>();
                count += 1;
            }
            let inv = 1.0 / count as f64;
            centroid.iter_mut().for_each(|c| *c *= inv);
            (centroid, es * inv)
        } else {
            let trials = 1u64 << 15;
            for _ in 0..trials {
                let u = self.random_index(rng);
                let x = self.encode_unchecked(&u);
                for (c, v) in centroid.iter_mut().zip(&x) {
                    *c += v;
                }
                es += x.iter().map(|v| v * v).sum::<f64>();
            }
            let inv = 1.0 / trials as f64;
            centroid.iter_mut().for_each(|c| *c *= inv);
            (centroid, es * inv)
        }
    }

    /// Named catalog of the simulated formats.
    pub fn catalog(name: &str) -> Result<Self> {
        let (shaping_name, m_expect): (&str, u32) = match name {
            "E8-24" => ("8E8", 24),
            "E8-32" => ("16E8", 32),
            "E8-40" => ("32E8", 40),
            "E8-48" => ("64E8", 48),
            "L24-72" => ("2Leech24R", 72),
            "L24-96" => ("4Leech24R", 96),
            "L24-120" => ("8Leech24R", 120),
            "L24-144" => ("16Leech24R", 144),
            "L16-76" => ("16BW16", 76),
            "L16-92" => ("32BW16", 92),
            _ => return Err(VcError::UnknownName(name.into())),
        };
        let shaping = Lattice::by_name(shaping_name)?;
        let vc = Self::from_shaping(name, shaping)?;
        assert_eq!(vc.m_bits, m_expect, "catalog size mismatch for {name}");
        Ok(vc)
    }

    pub fn catalog_names() -> &'static [&'static str] {
        &[
            "E8-24", "E8-32", "E8-40", "E8-48", "L24-72", "L24-96", "L24-120", "L24-144",
            "L16-76", "L16-92",
        ]
    }

    pub fn shaping_name(&self) -> String {
        self.shaping.name()
    }

    /// True iff the point (in the translated frame) lies in Γ.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        let q = self.shaping.quantize(x);
        q.iter().all(|&v| v == 0.0)
    }
}

/// Mixed-radix counter over U.
pub struct IndexIter {
    h: Vec<i64>,
    cur: Vec<i64>,
    done: bool,
}

impl Iterator for IndexIter {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let mut i = 0;
        loop {
            self.cur[i] += 1;
            if self.cur[i] < self.h[i] {
                break;
            }
            self.cur[i] = 0;
            i += 1;
            if i == self.h.len() {
                self.done = true;
                break;
            }
        }
        Some(out)
    }
}
