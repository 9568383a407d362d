//! Codebooks: a design evaluated on every vector of a four-group signal set.
//!
//! Codewords are addressed by a 4-tuple of group point indices. Signal points
//! are mapped to design variables through the design's canonical grouping and
//! multiplied by a common symbol scale, by default `sqrt(n / 4)`, which puts
//! the average squared scale factor `E(a^2)` at `n` for signal sets whose
//! group points have unit average power.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::OnceLock;

use crate::design::{Grouping, LinearDesign};
use crate::error::{Error, Result};
use crate::numerics::{CMat, Cx, LOOSE_TOL, ZERO};
use crate::signalset::{SignalSet, GROUPS};

/// Group point indices of a codeword.
pub type Index4 = [usize; GROUPS];

/// Largest codebook for exhaustive pair scans.
pub const EXHAUSTIVE_PAIR_LIMIT: usize = 4096;
/// Largest codebook averaged codeword by codeword in [`Codebook::average_scale`].
pub const EXHAUSTIVE_AVERAGE_LIMIT: usize = 65536;
/// Default number of sampled pairs.
pub const DEFAULT_SAMPLED_PAIRS: usize = 1_000_000;
/// Slack allowed on the determinant lower bound.
pub const DET_BOUND_SLACK: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Codeword {
    pub matrix: CMat,
    /// Squared scale factor: `matrix^H matrix == scale_sq * I`.
    pub scale_sq: f64,
    pub index: Index4,
}

impl Codeword {
    /// Wraps an arbitrary square matrix; `scale_sq` is taken from the
    /// diagonal of its Gram matrix.
    pub fn from_matrix(matrix: CMat) -> Self {
        let n = matrix.cols().max(1);
        let scale_sq = matrix.fro_norm_sq() / n as f64;
        Codeword {
            matrix,
            scale_sq,
            index: [0; GROUPS],
        }
    }

    /// Whether `S^H S` is within `tol` (max entry) of `a^2 I`, and the
    /// measured `a^2` (mean of the Gram diagonal).
    pub fn check_scaled_unitary(&self, tol: f64) -> (bool, f64) {
        check_scaled_unitary(&self.matrix, tol)
    }
}

/// See [`Codeword::check_scaled_unitary`].
pub fn check_scaled_unitary(m: &CMat, tol: f64) -> (bool, f64) {
    let measured = m.fro_norm_sq() / m.cols().max(1) as f64;
    let ok = m.is_square() && m.scaled_unitary_residual(measured) <= tol;
    (ok, measured)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PairMode {
    Exhaustive,
    Sampled { pairs: usize, seed: u64 },
}

impl PairMode {
    /// `exhaustive`, `sampled` or `sampled:N`.
    pub fn parse(s: &str, seed: u64) -> Result<Self> {
        match s.split_once(':') {
            None if s == "exhaustive" => Ok(PairMode::Exhaustive),
            None if s == "sampled" => Ok(PairMode::Sampled {
                pairs: DEFAULT_SAMPLED_PAIRS,
                seed,
            }),
            Some(("sampled", n)) => n
                .parse()
                .map(|pairs| PairMode::Sampled { pairs, seed })
                .map_err(|_| Error::InvalidParameter(format!("bad pair count {n:?}"))),
            _ => Err(Error::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }

    /// Exhaustive when small enough, otherwise the default sample.
    pub fn auto(size: usize, seed: u64) -> Self {
        if size <= EXHAUSTIVE_PAIR_LIMIT {
            PairMode::Exhaustive
        } else {
            PairMode::Sampled {
                pairs: DEFAULT_SAMPLED_PAIRS,
                seed,
            }
        }
    }
}

/// Outcome of a pairwise scan over codeword differences.
#[derive(Clone, Debug, Serialize)]
pub struct DiversityReport {
    pub mode: PairMode,
    pub pairs_checked: usize,
    /// All checked differences passed the rank rule. In sampled mode this
    /// means no counterexample was found, nothing more.
    pub all_full_rank: bool,
    pub rank_deficient_pairs: usize,
    pub first_deficient_pair: Option<(Index4, Index4)>,
    /// Minimum of `|det(S1 - S2)|` and the pair attaining it.
    pub min_abs_det: f64,
    pub min_det_pair: Option<(Index4, Index4)>,
    /// Minimum of `det((S1 - S2)^H (S1 - S2))^(1/n)`.
    pub coding_gain: f64,
    /// Pairs where `det(dS^H dS) < max(|det dA|^2, |det dB|^2)^2 - slack`,
    /// with `dA`, `dB` the left half blocks of the difference.
    pub bound_violations: usize,
}

impl DiversityReport {
    pub fn verdict(&self) -> &'static str {
        match (self.all_full_rank, self.mode) {
            (false, _) => "rank-deficient difference found",
            (true, PairMode::Exhaustive) => "fully diverse (exhaustive)",
            (true, PairMode::Sampled { .. }) => "no counterexample found (sampled)",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Codebook {
    design: LinearDesign,
    sset: SignalSet,
    grouping: Grouping,
    symbol_scale: f64,
    // group_mats[k][p]: contribution of point p of group k to the codeword
    group_mats: [Vec<CMat>; GROUPS],
    // scaled squared norm of each group point
    group_energy: [Vec<f64>; GROUPS],
    // nonzero (row, col, value) entries of each weight matrix
    weight_terms: Vec<Vec<(usize, usize, Cx)>>,
    group_decodable: OnceLock<bool>,
}

impl Codebook {
    /// Codebook with the default symbol scale `sqrt(n / 4)`.
    pub fn new(design: LinearDesign, sset: SignalSet) -> Result<Self> {
        let scale = (design.n() as f64 / 4.0).sqrt();
        Self::with_symbol_scale(design, sset, scale)
    }

    /// Codebook whose design variables are `symbol_scale` times the signal
    /// coordinates.
    pub fn with_symbol_scale(design: LinearDesign, sset: SignalSet, symbol_scale: f64) -> Result<Self> {
        let grouping = design.canonical_grouping();
        if sset.group_dim() != grouping.group_size() {
            return Err(Error::Dimension(format!(
                "signal set has {}-dimensional groups, design needs {}",
                sset.group_dim(),
                grouping.group_size()
            )));
        }
        if !(symbol_scale > 0.0 && symbol_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("symbol scale {symbol_scale}")));
        }
        let weights: Vec<CMat> = design.weights().iter().map(|w| w.to_cmat()).collect();
        let n = design.n();
        let group_mats = std::array::from_fn(|k| {
            let vars = grouping.group(k);
            sset.group(k)
                .points()
                .iter()
                .map(|p| {
                    let mut m = CMat::zeros(n, n);
                    for (&v, &x) in vars.iter().zip(p) {
                        if x != 0.0 {
                            m.axpy(symbol_scale * x, &weights[v]);
                        }
                    }
                    m
                })
                .collect()
        });
        let group_energy = std::array::from_fn(|k| {
            sset.group(k)
                .points()
                .iter()
                .map(|p| symbol_scale * symbol_scale * p.iter().map(|v| v * v).sum::<f64>())
                .collect()
        });
        let weight_terms = weights
            .iter()
            .map(|w| {
                let mut t = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        if w[(i, j)] != ZERO {
                            t.push((i, j, w[(i, j)]));
                        }
                    }
                }
                t
            })
            .collect();
        Ok(Codebook {
            design,
            sset,
            grouping,
            symbol_scale,
            group_mats,
            group_energy,
            weight_terms,
            group_decodable: OnceLock::new(),
        })
    }

    pub fn design(&self) -> &LinearDesign {
        &self.design
    }

    pub fn signal_set(&self) -> &SignalSet {
        &self.sset
    }

    pub fn grouping(&self) -> &Grouping {
        &self.grouping
    }

    pub fn symbol_scale(&self) -> f64 {
        self.symbol_scale
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn size(&self) -> usize {
        self.sset.size()
    }

    pub fn group_sizes(&self) -> [usize; GROUPS] {
        self.sset.group_sizes()
    }

    /// Per-group partial codeword `S_k(p)` for point `p` of group `k`.
    pub fn group_matrix(&self, k: usize, p: usize) -> &CMat {
        &self.group_mats[k][p]
    }

    /// Nonzero entries `(row, col, value)` of the weight matrix of variable `v`.
    pub fn weight_terms(&self, v: usize) -> &[(usize, usize, Cx)] {
        &self.weight_terms[v]
    }

    pub fn group_matrices(&self, k: usize) -> &[CMat] {
        &self.group_mats[k]
    }

    /// `a^2` of the codeword at `idx`, without building it. Panics when out
    /// of range.
    pub fn scale_sq_at(&self, idx: Index4) -> f64 {
        (0..GROUPS).map(|k| self.group_energy[k][idx[k]]).sum()
    }

    /// Whether the design passes the exact cross-group check for the
    /// canonical grouping. Computed once.
    pub fn is_group_decodable(&self) -> bool {
        *self
            .group_decodable
            .get_or_init(|| self.design.verify_group_decodable(&self.grouping))
    }

    /// Bits per channel use, `log2(M) / n`.
    pub fn rate_bits_per_use(&self) -> f64 {
        (self.size() as f64).log2() / self.n() as f64
    }

    /// All indices in lexicographic order.
    pub fn indices(&self) -> impl Iterator<Item = Index4> + '_ {
        let sizes = self.group_sizes();
        (0..self.size()).map(move |flat| unflatten(flat, sizes))
    }

    pub fn flat_index(&self, idx: Index4) -> usize {
        flatten(idx, self.group_sizes())
    }

    pub fn index_of(&self, flat: usize) -> Index4 {
        unflatten(flat, self.group_sizes())
    }

    fn check_index(&self, idx: Index4) -> Result<()> {
        let sizes = self.group_sizes();
        for k in 0..GROUPS {
            if idx[k] >= sizes[k] {
                return Err(Error::IndexOutOfRange(format!(
                    "group {k} has {} points, index {} requested",
                    sizes[k], idx[k]
                )));
            }
        }
        Ok(())
    }

    /// Real design variables for an index, in canonical order (scaled).
    pub fn variables(&self, idx: Index4) -> Result<Vec<f64>> {
        self.check_index(idx)?;
        let mut x = vec![0.0; self.design.k()];
        for (k, &p) in idx.iter().enumerate() {
            for (&v, &val) in self.grouping.group(k).iter().zip(self.sset.group(k).point(p)) {
                x[v] = self.symbol_scale * val;
            }
        }
        Ok(x)
    }

    /// Codeword matrix for an index.
    pub fn matrix_at(&self, idx: Index4) -> Result<CMat> {
        self.check_index(idx)?;
        let mut m = self.group_mats[0][idx[0]].clone();
        for k in 1..GROUPS {
            m.axpy(1.0, &self.group_mats[k][idx[k]]);
        }
        Ok(m)
    }

    pub fn codeword_at(&self, idx: Index4) -> Result<Codeword> {
        let matrix = self.matrix_at(idx)?;
        let scale_sq = self.variables(idx)?.iter().map(|v| v * v).sum();
        Ok(Codeword {
            matrix,
            scale_sq,
            index: idx,
        })
    }

    /// Worst `||S^H S - a^2 I||` (max entry) over all codewords, with `a^2`
    /// the codeword's own `sum |x_i|^2`.
    pub fn max_scaled_unitary_residual(&self) -> f64 {
        (0..self.size())
            .into_par_iter()
            .map(|flat| {
                let cw = self.codeword_at(self.index_of(flat)).expect("in range");
                cw.matrix.scaled_unitary_residual(cw.scale_sq)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Mean of `a^2` over the codebook.
    pub fn average_scale(&self) -> f64 {
        if self.size() <= EXHAUSTIVE_AVERAGE_LIMIT {
            let total: f64 = self
                .indices()
                .map(|idx| self.variables(idx).expect("in range").iter().map(|v| v * v).sum::<f64>())
                .sum();
            total / self.size() as f64
        } else {
            self.symbol_scale.powi(2)
                * self
                    .sset
                    .groups()
                    .iter()
                    .map(|g| g.average_power())
                    .sum::<f64>()
        }
    }

    /// First pair of distinct indices whose matrices agree within `1e-12`.
    /// Exhaustive; requires `size <= EXHAUSTIVE_PAIR_LIMIT`.
    pub fn find_duplicate(&self) -> Result<Option<(Index4, Index4)>> {
        if self.size() > EXHAUSTIVE_PAIR_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "exhaustive scan needs at most {EXHAUSTIVE_PAIR_LIMIT} codewords"
            )));
        }
        let mats: Vec<CMat> = self.indices().map(|i| self.matrix_at(i).expect("in range")).collect();
        let found = (0..mats.len()).into_par_iter().find_map_first(|a| {
            ((a + 1)..mats.len())
                .find(|&b| mats[a].max_abs_diff(&mats[b]) <= 1e-12)
                .map(|b| (self.index_of(a), self.index_of(b)))
        });
        Ok(found)
    }

    /// Rank, determinant and coding-gain scan over codeword pairs.
    pub fn verify_full_diversity(&self, mode: PairMode) -> Result<DiversityReport> {
        let pairs: Vec<(usize, usize)> = match mode {
            PairMode::Exhaustive => {
                if self.size() > EXHAUSTIVE_PAIR_LIMIT {
                    return Err(Error::InvalidParameter(format!(
                        "exhaustive mode needs at most {EXHAUSTIVE_PAIR_LIMIT} codewords, have {}",
                        self.size()
                    )));
                }
                let m = self.size();
                (0..m).flat_map(|a| ((a + 1)..m).map(move |b| (a, b))).collect()
            }
            PairMode::Sampled { pairs, seed } => {
                let m = self.size();
                if m < 2 {
                    Vec::new()
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..pairs)
                        .map(|_| loop {
                            let a = rng.gen_range(0..m);
                            let b = rng.gen_range(0..m);
                            if a != b {
                                break (a.min(b), a.max(b));
                            }
                        })
                        .collect()
                }
            }
        };

        let n = self.n();
        let half = n / 2;
        let stats = pairs
            .par_iter()
            .map(|&(a, b)| {
                let sa = self.matrix_at(self.index_of(a)).expect("in range");
                let sb = self.matrix_at(self.index_of(b)).expect("in range");
                let d = &sa - &sb;
                let full_rank = d.is_full_rank();
                let abs_det = d.det().expect("square").norm();
                let gram_det = (&d.herm() * &d).det().expect("square");
                debug_assert!(gram_det.im.abs() <= LOOSE_TOL * gram_det.re.abs().max(1.0));
                let gram_det = gram_det.re;
                let da = d.block(0, 0, half, half).det().expect("square").norm_sqr();
                let db = d.block(half, 0, half, half).det().expect("square").norm_sqr();
                let bound = da.max(db).powi(2);
                PairStats {
                    pairs: 1,
                    deficient: usize::from(!full_rank),
                    first_deficient: (!full_rank).then_some((a, b)),
                    min_abs_det: (abs_det, (a, b)),
                    min_gram_det: gram_det,
                    bound_violations: usize::from(gram_det < bound - DET_BOUND_SLACK),
                }
            })
            .reduce(PairStats::empty, PairStats::merge);

        let pair_of = |(a, b): (usize, usize)| (self.index_of(a), self.index_of(b));
        let (min_abs_det, min_pair) = stats.min_abs_det;
        Ok(DiversityReport {
            mode,
            pairs_checked: stats.pairs,
            all_full_rank: stats.deficient == 0,
            rank_deficient_pairs: stats.deficient,
            first_deficient_pair: stats.first_deficient.map(pair_of),
            min_abs_det: if stats.pairs == 0 { f64::NAN } else { min_abs_det },
            min_det_pair: (stats.pairs > 0).then(|| pair_of(min_pair)),
            coding_gain: if stats.pairs == 0 {
                f64::NAN
            } else {
                stats.min_gram_det.max(0.0).powf(1.0 / n as f64)
            },
            bound_violations: stats.bound_violations,
        })
    }

    /// `min det(dS^H dS)^(1/n)` over the pairs selected by `mode`.
    pub fn coding_gain(&self, mode: PairMode) -> Result<f64> {
        Ok(self.verify_full_diversity(mode)?.coding_gain)
    }
}

#[derive(Clone, Copy)]
struct PairStats {
    pairs: usize,
    deficient: usize,
    first_deficient: Option<(usize, usize)>,
    min_abs_det: (f64, (usize, usize)),
    min_gram_det: f64,
    bound_violations: usize,
}

impl PairStats {
    fn empty() -> Self {
        PairStats {
            pairs: 0,
            deficient: 0,
            first_deficient: None,
            min_abs_det: (f64::INFINITY, (usize::MAX, usize::MAX)),
            min_gram_det: f64::INFINITY,
            bound_violations: 0,
        }
    }

    // Order-independent: minima tie-break on the pair itself.
    fn merge(a: Self, b: Self) -> Self {
        let first_deficient = match (a.first_deficient, b.first_deficient) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        let min_abs_det = if (b.min_abs_det.0, b.min_abs_det.1) < (a.min_abs_det.0, a.min_abs_det.1) {
            b.min_abs_det
        } else {
            a.min_abs_det
        };
        PairStats {
            pairs: a.pairs + b.pairs,
            deficient: a.deficient + b.deficient,
            first_deficient,
            min_abs_det,
            min_gram_det: a.min_gram_det.min(b.min_gram_det),
            bound_violations: a.bound_violations + b.bound_violations,
        }
    }
}

fn flatten(idx: Index4, sizes: [usize; GROUPS]) -> usize {
    idx.iter().zip(sizes).fold(0, |acc, (&i, s)| acc * s + i)
}

fn unflatten(mut flat: usize, sizes: [usize; GROUPS]) -> Index4 {
    let mut idx = [0; GROUPS];
    for k in (0..GROUPS).rev() {
        idx[k] = flat % sizes[k];
        flat /= sizes[k];
    }
    idx
}
