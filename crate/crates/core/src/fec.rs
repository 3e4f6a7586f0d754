//! Binary LDPC codes and the BICM interleaver.
//!
//! Decoding is normalized min-sum (factor 0.75) with flooding schedule and
//! early exit on a zero syndrome. Encoding is systematic: codes whose
//! parity part is lower-triangular (staircase or identity) encode by
//! back-substitution, anything else falls back to a dense generator built
//! by GF(2) elimination.
//!
//! Parity-check matrices load from alist text files (the MacKay format:
//! dimensions, max degrees, per-column and per-row degrees, then 1-based
//! index lists). A built-in catalog provides a Hamming(7,4) toy code and a
//! progressive-edge-growth staircase pair at N = 3840 for desk-scale runs;
//! full-scale standard matrices are ingested from files.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(thiserror::Error, Debug)]
pub enum FecError {
    #[error("failed to read parity file: {0}")]
    Io(#[from] std::io::Error),
    #[error("alist parse error: {0}")]
    Parse(String),
    #[error("info length {got}, expected {want}")]
    InfoLength { got: usize, want: usize },
    #[error("LLR length {got}, expected {want}")]
    LlrLength { got: usize, want: usize },
    #[error("code too large for a dense generator fallback (n = {0})")]
    TooLargeForDense(usize),
    #[error("parity-check matrix is rank deficient")]
    RankDeficient,
    #[error("unknown code '{0}'")]
    UnknownCode(String),
}

pub type Result<T> = std::result::Result<T, FecError>;

/// Min-sum normalization factor.
const MINSUM_ALPHA: f64 = 0.75;

#[derive(Debug, Clone)]
enum Encoder {
    /// Parity part lower-triangular with unit diagonal: back-substitute.
    BackSubstitution,
    /// Dense systematic generator: parity row masks per info bit, plus the
    /// column permutation applied during elimination.
    Dense { parity_rows: Vec<Vec<u64>>, perm: Vec<usize> },
}

/// A binary LDPC code defined by its sparse parity-check matrix.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    pub name: String,
    pub n: usize,
    pub k: usize,
    /// Variable indices per check row.
    rows: Vec<Vec<u32>>,
    /// Check indices per variable column.
    cols: Vec<Vec<u32>>,
    encoder: Encoder,
}

impl LdpcCode {
    pub fn m(&self) -> usize {
        self.n - self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// (max column degree, max row degree).
    pub fn degree_profile(&self) -> (usize, usize) {
        (
            self.cols.iter().map(|c| c.len()).max().unwrap_or(0),
            self.rows.iter().map(|r| r.len()).max().unwrap_or(0),
        )
    }

    fn from_rows(name: String, n: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let m = rows.len();
        if m >= n {
            return Err(FecError::Parse(format!("m = {m} checks for n = {n} variables")));
        }
        let mut cols = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &v in row {
                cols[v as usize].push(r as u32);
            }
        }
        let k = n - m;
        let encoder = Self::pick_encoder(n, k, &rows)?;
        Ok(LdpcCode { name, n, k, rows, cols, encoder })
    }

    fn pick_encoder(n: usize, k: usize, rows: &[Vec<u32>]) -> Result<Encoder> {
        let m = n - k;
        // Lower-triangular parity part with unit diagonal?
        let mut triangular = true;
        'rows: for (i, row) in rows.iter().enumerate() {
            let mut has_diag = false;
            for &v in row {
                let v = v as usize;
                if v >= k {
                    if v - k > i {
                        triangular = false;
                        break 'rows;
                    }
                    if v - k == i {
                        has_diag = true;
                    }
                }
            }
            if !has_diag {
                triangular = false;
                break;
            }
        }
        if triangular {
            return Ok(Encoder::BackSubstitution);
        }
        if n > 20_000 {
            return Err(FecError::TooLargeForDense(n));
        }
        // Dense GF(2) elimination of H into [A | I] with column swaps.
        let words = n.div_ceil(64);
        let mut h: Vec<Vec<u64>> = vec![vec![0u64; words]; m];
        for (i, row) in rows.iter().enumerate() {
            for &v in row {
                h[i][v as usize / 64] |= 1u64 << (v as usize % 64);
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let getbit = |row: &[u64], c: usize| (row[c / 64] >> (c % 64)) & 1 == 1;
        for i in 0..m {
            let target = k + i;
            // Find a pivot among rows ≥ i; prefer columns in the parity
            // region, fall back to info columns (swapped in via perm).
            let mut found = None;
            'search: for c in (target..n).chain(0..k) {
                for r in i..m {
                    if getbit(&h[r], c) {
                        found = Some((r, c));
                        break 'search;
                    }
                }
            }
            let Some((r, c)) = found else {
                return Err(FecError::RankDeficient);
            };
            h.swap(i, r);
            if c != target {
                for row in h.iter_mut() {
                    let a = (row[c / 64] >> (c % 64)) & 1;
                    let b = (row[target / 64] >> (target % 64)) & 1;
                    if a != b {
                        row[c / 64] ^= 1 << (c % 64);
                        row[target / 64] ^= 1 << (target % 64);
                    }
                }
                perm.swap(c, target);
            }
            let pivot_row = h[i].clone();
            for (r, row) in h.iter_mut().enumerate() {
                if r != i && getbit(row, target) {
                    for (w, p) in row.iter_mut().zip(&pivot_row) {
                        *w ^= p;
                    }
                }
            }
        }
        // Now H·Π = [A | I_m]; parity bits p = A·v. Store A columns as
        // parity row masks per info bit for fast encoding.
        let pwords = m.div_ceil(64);
        let mut parity_rows = vec![vec![0u64; pwords]; k];
        for i in 0..m {
            for c in 0..k {
                if getbit(&h[i], c) {
                    parity_rows[c][i / 64] |= 1 << (i % 64);
                }
            }
        }
        Ok(Encoder::Dense { parity_rows, perm })
    }

    /// Systematic encoding; the first k bits of the returned codeword are
    /// the info bits (in the dense fallback the systematic positions sit
    /// at the recorded permutation).
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k {
            return Err(FecError::InfoLength { got: info.len(), want: self.k });
        }
        let m = self.m();
        match &self.encoder {
            Encoder::BackSubstitution => {
                let mut cw = vec![0u8; self.n];
                cw[..self.k].copy_from_slice(info);
                for (i, row) in self.rows.iter().enumerate() {
                    let mut acc = 0u8;
                    for &v in row {
                        let v = v as usize;
                        if v != self.k + i {
                            acc ^= cw[v];
                        }
                    }
                    cw[self.k + i] = acc;
                }
                Ok(cw)
            }
            Encoder::Dense { parity_rows, perm } => {
                let pwords = m.div_ceil(64);
                let mut p = vec![0u64; pwords];
                for (c, &b) in info.iter().enumerate() {
                    if b == 1 {
                        for (w, mask) in p.iter_mut().zip(&parity_rows[c]) {
                            *w ^= mask;
                        }
                    }
                }
                let mut cw = vec![0u8; self.n];
                for (c, &b) in info.iter().enumerate() {
                    cw[perm[c]] = b;
                }
                for i in 0..m {
                    cw[perm[self.k + i]] = ((p[i / 64] >> (i % 64)) & 1) as u8;
                }
                Ok(cw)
            }
        }
    }

    /// Info bits of a codeword (the systematic positions).
    pub fn extract_info(&self, cw: &[u8]) -> Vec<u8> {
        match &self.encoder {
            Encoder::BackSubstitution => cw[..self.k].to_vec(),
            Encoder::Dense { perm, .. } => (0..self.k).map(|c| cw[perm[c]]).collect(),
        }
    }

    /// H·cᵀ over GF(2); all-zero iff `cw` is a codeword.
    pub fn syndrome_ok(&self, cw: &[u8]) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &v| acc ^ cw[v as usize]) == 0)
    }

    /// Normalized min-sum decoding with a layered (check-serial) schedule.
    /// Positive LLR means bit 0. Returns the hard info decision, whether
    /// the syndrome converged to zero, and the number of sweeps used.
    pub fn decode(&self, llrs: &[f64], max_iter: usize) -> Result<(Vec<u8>, bool, usize)> {
        if llrs.len() != self.n {
            return Err(FecError::LlrLength { got: llrs.len(), want: self.n });
        }
        let mut hard = vec![0u8; self.n];
        let decide = |totals: &[f64], hard: &mut [u8]| {
            for (h, &t) in hard.iter_mut().zip(totals) {
                *h = u8::from(t < 0.0);
            }
        };
        decide(llrs, &mut hard);
        if self.syndrome_ok(&hard) {
            return Ok((self.extract_info(&hard), true, 0));
        }
        // Edge-major storage grouped by check.
        let edges: usize = self.rows.iter().map(|r| r.len()).sum();
        let mut edge_var = Vec::with_capacity(edges);
        let mut check_start = Vec::with_capacity(self.rows.len() + 1);
        check_start.push(0usize);
        for row in &self.rows {
            for &v in row {
                edge_var.push(v as usize);
            }
            check_start.push(edge_var.len());
        }
        let mut c2v = vec![0.0f64; edges];
        let mut v2c = vec![0.0f64; edges];
        let mut totals = llrs.to_vec();
        for iter in 1..=max_iter {
            for c in 0..self.rows.len() {
                let (s, t) = (check_start[c], check_start[c + 1]);
                // Peel this check's previous contribution off the totals.
                let mut sign = 1.0f64;
                let mut min1 = f64::INFINITY;
                let mut min2 = f64::INFINITY;
                let mut argmin = s;
                for e in s..t {
                    let m = totals[edge_var[e]] - c2v[e];
                    v2c[e] = m;
                    if m < 0.0 {
                        sign = -sign;
                    }
                    let a = m.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        argmin = e;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for e in s..t {
                    let mag = if e == argmin { min2 } else { min1 };
                    let s_out = if v2c[e] < 0.0 { -sign } else { sign };
                    let m_new = MINSUM_ALPHA * s_out * mag;
                    totals[edge_var[e]] = v2c[e] + m_new;
                    c2v[e] = m_new;
                }
            }
            decide(&totals, &mut hard);
            if self.syndrome_ok(&hard) {
                return Ok((self.extract_info(&hard), true, iter));
            }
        }
        Ok((self.extract_info(&hard), false, max_iter))
    }

    /// Load a MacKay-alist parity matrix.
    pub fn load_alist(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_alist(
            &text,
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "alist".into()),
        )
    }

    pub fn parse_alist(text: &str, name: String) -> Result<Self> {
        let mut it = text.split_whitespace().map(|t| {
            t.parse::<i64>()
                .map_err(|_| FecError::Parse(format!("bad token '{t}'")))
        });
        let mut next = |what: &str| -> Result<i64> {
            it.next()
                .ok_or_else(|| FecError::Parse(format!("unexpected end of file at {what}")))?
        };
        let n = next("n")? as usize;
        let m = next("m")? as usize;
        if n == 0 || m == 0 || m >= n {
            return Err(FecError::Parse(format!("bad dimensions n={n} m={m}")));
        }
        let _max_col = next("max col degree")?;
        let _max_row = next("max row degree")?;
        let col_deg: Vec<usize> = (0..n)
            .map(|_| next("column degree").map(|v| v as usize))
            .collect::<Result<_>>()?;
        let row_deg: Vec<usize> = (0..m)
            .map(|_| next("row degree").map(|v| v as usize))
            .collect::<Result<_>>()?;
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); m];
        for (c, &d) in col_deg.iter().enumerate() {
            for _ in 0..d {
                let r = next("column entry")?;
                if r < 1 || r as usize > m {
                    return Err(FecError::Parse(format!("row index {r} out of range 1..={m}")));
                }
                rows[r as usize - 1].push(c as u32);
            }
        }
        // Row lists are redundant; consume and cross-check when present.
        let mut have_row_lists = true;
        let mut row_lists: Vec<Vec<u32>> = vec![Vec::new(); m];
        'outer: for (r, &d) in row_deg.iter().enumerate() {
            for _ in 0..d {
                match it.next() {
                    Some(v) => {
                        let v = v?;
                        if v < 1 || v as usize > n {
                            return Err(FecError::Parse(format!(
                                "column index {v} out of range 1..={n}"
                            )));
                        }
                        row_lists[r].push(v as u32 - 1);
                    }
                    None => {
                        have_row_lists = false;
                        break 'outer;
                    }
                }
            }
        }
        for row in rows.iter_mut() {
            row.sort_unstable();
        }
        if have_row_lists {
            for (r, mut list) in row_lists.into_iter().enumerate() {
                list.sort_unstable();
                if list != rows[r] {
                    return Err(FecError::Parse(format!("row {} lists disagree", r + 1)));
                }
            }
        }
        if rows.iter().zip(&row_deg).any(|(r, &d)| r.len() != d) {
            return Err(FecError::Parse("row degrees inconsistent with columns".into()));
        }
        Self::from_rows(name, n, rows)
    }

    /// Serialize to alist text.
    pub fn to_alist(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let (maxc, maxr) = self.degree_profile();
        let m = self.m();
        writeln!(s, "{} {}", self.n, m).unwrap();
        writeln!(s, "{maxc} {maxr}").unwrap();
        let degs: Vec<String> = self.cols.iter().map(|c| c.len().to_string()).collect();
        writeln!(s, "{}", degs.join(" ")).unwrap();
        let degs: Vec<String> = self.rows.iter().map(|r| r.len().to_string()).collect();
        writeln!(s, "{}", degs.join(" ")).unwrap();
        for c in &self.cols {
            let l: Vec<String> = c.iter().map(|&r| (r + 1).to_string()).collect();
            writeln!(s, "{}", l.join(" ")).unwrap();
        }
        for r in &self.rows {
            let l: Vec<String> = r.iter().map(|&v| (v + 1).to_string()).collect();
            writeln!(s, "{}", l.join(" ")).unwrap();
        }
        s
    }

    /// The (7,4) Hamming code with identity parity part.
    pub fn hamming74() -> Self {
        let rows = vec![vec![0, 1, 3, 4], vec![0, 2, 3, 5], vec![1, 2, 3, 6]];
        Self::from_rows("hamming74".into(), 7, rows).expect("static code")
    }

    /// Staircase LDPC built by progressive edge growth: info columns of
    /// degree 3 placed one edge at a time maximizing the local girth,
    /// parity columns forming the accumulator staircase.
    pub fn peg_staircase(name: &str, n: usize, k: usize, seed: u64) -> Self {
        let m = n - k;
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); m];
        let mut cols: Vec<Vec<u32>> = vec![Vec::new(); n];
        // Staircase parity part first: column k+j joins checks j-1 and j.
        for j in 0..m {
            let col = k + j;
            rows[j].push(col as u32);
            cols[col].push(j as u32);
            if j > 0 {
                rows[j - 1].push(col as u32);
                cols[col].push(j as u32 - 1);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut row_deg: Vec<u32> = rows.iter().map(|r| r.len() as u32).collect();
        for v in 0..k {
            for _edge in 0..3 {
                let pick = Self::peg_pick(v, m, &rows, &cols, &row_deg, &mut rng);
                rows[pick].push(v as u32);
                cols[v].push(pick as u32);
                row_deg[pick] += 1;
            }
        }
        for r in rows.iter_mut() {
            r.sort_unstable();
        }
        Self::from_rows(name.into(), n, rows).expect("PEG construction is triangular")
    }

    /// BFS from variable v through the current Tanner graph; returns the
    /// check to attach: an unreached check of minimum degree, or, when all
    /// checks are reachable, one at maximum distance of minimum degree.
    fn peg_pick(
        v: usize,
        m: usize,
        rows: &[Vec<u32>],
        cols: &[Vec<u32>],
        row_deg: &[u32],
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let mut reached = vec![false; m];
        let mut var_seen = vec![false; cols.len()];
        let mut frontier: Vec<u32> = cols[v].to_vec();
        for &c in &frontier {
            reached[c as usize] = true;
        }
        var_seen[v] = true;
        let mut last_frontier = frontier.clone();
        while !frontier.is_empty() {
            let mut next: Vec<u32> = Vec::new();
            for &c in &frontier {
                for &var in &rows[c as usize] {
                    let var = var as usize;
                    if var_seen[var] {
                        continue;
                    }
                    var_seen[var] = true;
                    for &c2 in &cols[var] {
                        if !reached[c2 as usize] {
                            reached[c2 as usize] = true;
                            next.push(c2);
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            last_frontier = next.clone();
            frontier = next;
        }
        let candidates: Vec<usize> = if reached.iter().all(|&r| r) {
            // Fully connected: attach at maximal distance.
            last_frontier.iter().map(|&c| c as usize).collect()
        } else {
            (0..m).filter(|&c| !reached[c]).collect()
        };
        let min_deg = candidates.iter().map(|&c| row_deg[c]).min().unwrap();
        let best: Vec<usize> = candidates
            .into_iter()
            .filter(|&c| row_deg[c] == min_deg)
            .collect();
        *best.as_slice().choose(rng).unwrap()
    }

    /// Built-in code catalog.
    pub fn builtin(name: &str) -> Result<Self> {
        static CACHE: OnceLock<Mutex<HashMap<String, LdpcCode>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(code) = cache.lock().unwrap().get(name) {
            return Ok(code.clone());
        }
        let code = match name {
            "hamming74" => Self::hamming74(),
            "peg-3840-r12" => Self::peg_staircase(name, 3840, 1920, 0x9E37),
            "peg-3840-r23" => Self::peg_staircase(name, 3840, 2560, 0x9E38),
            _ => return Err(FecError::UnknownCode(name.into())),
        };
        cache.lock().unwrap().insert(name.into(), code.clone());
        Ok(code)
    }
}

/// Seeded uniform random permutation of length n with its inverse.
#[derive(Debug, Clone)]
pub struct Interleaver {
    pub seed: u64,
    perm: Vec<u32>,
    inv: Vec<u32>,
}

impl Interleaver {
    pub fn new(seed: u64, n: usize) -> Self {
        let mut perm: Vec<u32> = (0..n as u32).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        perm.shuffle(&mut rng);
        let mut inv = vec![0u32; n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p as usize] = i as u32;
        }
        Interleaver { seed, perm, inv }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// out[i] = in[perm[i]].
    pub fn interleave<T: Copy>(&self, data: &[T]) -> Vec<T> {
        assert_eq!(data.len(), self.perm.len());
        self.perm.iter().map(|&p| data[p as usize]).collect()
    }

    pub fn deinterleave<T: Copy>(&self, data: &[T]) -> Vec<T> {
        assert_eq!(data.len(), self.inv.len());
        self.inv.iter().map(|&p| data[p as usize]).collect()
    }
}

/// Random info bits helper shared by the simulators.
pub fn random_bits<R: Rng>(len: usize, rng: &mut R) -> Vec<u8> {
    (0..len).map(|_| rng.gen_range(0..2) as u8).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;

    #[test]
    fn hamming_shape() {
        let c = LdpcCode::hamming74();
        assert_eq!(c.n, 7);
        assert_eq!(c.k, 4);
        assert!((c.rate() - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn encode_zero_and_linearity() {
        let c = LdpcCode::hamming74();
        assert_eq!(c.encode(&[0, 0, 0, 0]).unwrap(), vec![0u8; 7]);
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..50 {
            let a = random_bits(4, &mut rng);
            let b = random_bits(4, &mut rng);
            let ca = c.encode(&a).unwrap();
            let cb = c.encode(&b).unwrap();
            assert!(c.syndrome_ok(&ca));
            let sum: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
            assert!(c.syndrome_ok(&sum));
        }
        assert!(c.encode(&[0, 1]).is_err());
    }

    #[test]
    fn hamming_corrects_single_errors() {
        // Exhaustive single-error test: the info word is recovered for
        // every flip position. (A flipped degree-1 parity bit cannot clear
        // the syndrome under scaled min-sum since its only extrinsic is
        // capped at 0.75 of the channel magnitude; the data still decodes.)
        let c = LdpcCode::hamming74();
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..20 {
            let info = random_bits(4, &mut rng);
            let cw = c.encode(&info).unwrap();
            for flip in 0..7 {
                let llr: Vec<f64> = cw
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| {
                        let sign = if b == 0 { 1.0 } else { -1.0 };
                        if i == flip {
                            -4.0 * sign
                        } else {
                            4.0 * sign
                        }
                    })
                    .collect();
                let (out, conv, _) = c.decode(&llr, 50).unwrap();
                assert_eq!(out, info, "flip {flip}");
                if flip < 4 {
                    assert!(conv, "flip {flip}");
                }
            }
        }
    }

    #[test]
    fn noiseless_converges_immediately() {
        let c = LdpcCode::builtin("peg-3840-r12").unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        let info = random_bits(c.k, &mut rng);
        let cw = c.encode(&info).unwrap();
        let llr: Vec<f64> = cw.iter().map(|&b| if b == 0 { 8.0 } else { -8.0 }).collect();
        let (out, conv, iters) = c.decode(&llr, 50).unwrap();
        assert!(conv);
        assert_eq!(iters, 0);
        assert_eq!(out, info);
    }

    #[test]
    fn peg_codes_are_valid() {
        for name in ["peg-3840-r12", "peg-3840-r23"] {
            let c = LdpcCode::builtin(name).unwrap();
            assert_eq!(c.n, 3840);
            let mut rng = StdRng::seed_from_u64(4);
            for _ in 0..5 {
                let info = random_bits(c.k, &mut rng);
                let cw = c.encode(&info).unwrap();
                assert!(c.syndrome_ok(&cw));
                assert_eq!(c.extract_info(&cw), info);
            }
            // No 4-cycles: any two checks share at most one variable.
            let m = c.m();
            let mut pair_seen = std::collections::HashSet::new();
            for v in 0..c.n {
                let checks = &c.cols[v];
                for i in 0..checks.len() {
                    for j in i + 1..checks.len() {
                        let key = (checks[i].min(checks[j]), checks[i].max(checks[j]));
                        assert!(
                            pair_seen.insert(key),
                            "4-cycle through checks {key:?} in {name}"
                        );
                    }
                }
            }
            assert!(pair_seen.len() <= m * (m - 1) / 2);
        }
    }

    #[test]
    fn peg_decodes_under_noise() {
        // Rate-1/2 staircase at ~2.5 dB Eb/N0 BPSK should decode most
        // blocks; just require it corrects a meaningful number of flips.
        let c = LdpcCode::builtin("peg-3840-r12").unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let info = random_bits(c.k, &mut rng);
        let cw = c.encode(&info).unwrap();
        use rand_distr::{Distribution, Normal};
        let sigma = 0.79; // Es/N0 ≈ 2 dB BPSK
        let normal = Normal::new(0.0, sigma).unwrap();
        let llr: Vec<f64> = cw
            .iter()
            .map(|&b| {
                let x = if b == 0 { 1.0 } else { -1.0 };
                let y: f64 = x + normal.sample(&mut rng);
                2.0 * y / (sigma * sigma)
            })
            .collect();
        let pre_errors = llr
            .iter()
            .zip(&cw)
            .filter(|(&l, &b)| u8::from(l < 0.0) != b)
            .count();
        assert!(pre_errors > 50, "want a noisy channel, got {pre_errors} flips");
        let (out, conv, _) = c.decode(&llr, 50).unwrap();
        assert!(conv, "decoder failed at moderate noise");
        assert_eq!(out, info);
    }

    #[test]
    fn dense_fallback_roundtrip() {
        // A small full-rank matrix whose parity part is not triangular.
        let rows = vec![vec![0u32, 1, 4], vec![1, 2, 3, 5], vec![0, 3, 4, 5]];
        let c = LdpcCode::from_rows("dense".into(), 6, rows).unwrap();
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..20 {
            let info = random_bits(c.k, &mut rng);
            let cw = c.encode(&info).unwrap();
            assert!(c.syndrome_ok(&cw));
            assert_eq!(c.extract_info(&cw), info);
        }
    }

    #[test]
    fn alist_roundtrip_and_errors() {
        let c = LdpcCode::hamming74();
        let text = c.to_alist();
        let c2 = LdpcCode::parse_alist(&text, "h".into()).unwrap();
        assert_eq!(c2.n, 7);
        assert_eq!(c2.k, 4);
        assert_eq!(c2.rows, c.rows);
        // Out-of-range index.
        let bad = "4 2\n1 2\n1 1 1 1\n2 2\n1\n2\n3\n5\n1 2\n3 4\n";
        assert!(LdpcCode::parse_alist(bad, "bad".into()).is_err());
        // Truncated file.
        assert!(LdpcCode::parse_alist("7 3\n3 4\n1 1", "t".into()).is_err());
    }

    #[test]
    fn interleaver_inverse_and_determinism() {
        let il = Interleaver::new(42, 257);
        let data: Vec<u32> = (0..257).collect();
        let shuffled = il.interleave(&data);
        assert_ne!(shuffled, data);
        assert_eq!(il.deinterleave(&shuffled), data);
        let il2 = Interleaver::new(42, 257);
        assert_eq!(il.interleave(&data), il2.interleave(&data));
    }

    #[test]
    fn interleaver_positions_uniform_across_seeds() {
        // Position of input index 0 across seeds: chi-square against
        // uniform over 16 buckets at the 5% level (df = 15, crit ≈ 25.0).
        let n = 64usize;
        let trials = 4000u64;
        let mut counts = [0u64; 16];
        for seed in 0..trials {
            let il = Interleaver::new(seed, n);
            let pos = il.inv[0] as usize;
            counts[pos * 16 / n] += 1;
        }
        let expect = trials as f64 / 16.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expect;
                d * d / expect
            })
            .sum();
        assert!(chi2 < 25.0, "chi2 = {chi2}, counts = {counts:?}");
    }
}
