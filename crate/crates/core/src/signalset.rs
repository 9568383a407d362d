//! Per-group signal sets and their Cartesian product.
//!
//! Two families are provided:
//!
//! * **axis**: for `2^lambda` antennas each group lives in `R^(2^(lambda-1))`
//!   and every point has a single nonzero coordinate, `±r_q` on axis
//!   `(q - 1) mod 2^(lambda-1)`. All pairwise products inside a group vanish,
//!   which makes every codeword scaled unitary.
//! * **hyperbola** (four antennas only): two-dimensional points on the
//!   intersection of concentric circles with the hyperbola `xy = c`. The
//!   quadrature groups use the mirrored hyperbola `xy = -c` so that the
//!   in-phase and quadrature products cancel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::codebook::Codebook;
use crate::design::construct_design;
use crate::error::{Error, Result};
use crate::numerics::{EXACT_TOL, LOOSE_TOL};

/// Number of groups in every signal set built here.
pub const GROUPS: usize = 4;

/// Largest codebook checked exhaustively by [`yields_scaled_unitary_codewords`].
pub const EXHAUSTIVE_CHECK_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Axis,
    /// Points on `xy = c`; `c` is negative for mirrored quadrature groups.
    Hyperbola { c: f64 },
    Custom,
}

/// Which intersection points of a circle with `xy = c` are kept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `(x0, y0)` and `(-x0, -y0)` with `x0 > y0 > 0`.
    #[default]
    A,
    /// `(y0, x0)` and `(-y0, -x0)`.
    B,
    /// Both of the above. Breaks full diversity; useful as a negative control.
    Both,
}

impl Branch {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Branch::A),
            "b" => Ok(Branch::B),
            "both" => Ok(Branch::Both),
            _ => Err(Error::InvalidParameter(format!("unknown branch {s:?} (a, b or both)"))),
        }
    }

    /// Points contributed by each circle.
    pub fn points_per_radius(self) -> usize {
        if self == Branch::Both {
            4
        } else {
            2
        }
    }
}

/// Shipped radius presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Eight antennas, 16 points per group, two bits per channel use.
    Paper8AntRate2,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Paper8AntRate2 => "paper-8ant-rate2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paper-8ant-rate2" => Ok(Preset::Paper8AntRate2),
            other => Err(Error::InvalidParameter(format!("unknown preset {other:?}"))),
        }
    }

    pub fn lambda(self) -> u32 {
        match self {
            Preset::Paper8AntRate2 => 3,
        }
    }

    /// Total codebook size.
    pub fn points(self) -> usize {
        match self {
            Preset::Paper8AntRate2 => 16usize.pow(4),
        }
    }

    /// Radii exactly as listed (not renormalised; `r1` is rounded to four
    /// decimals so the squared sum is 7.998...).
    pub fn radii(self) -> Vec<f64> {
        match self {
            Preset::Paper8AntRate2 => {
                let s3 = 3f64.sqrt();
                let r1 = 0.3235;
                let r2 = s3 * r1;
                let r5 = 3.0 * r1;
                let r6 = (2.0 + s3) * r1;
                let r3 = r2 + (r5 - r2) / 3.0;
                let r4 = r2 + 2.0 * ((r5 - r2) / 3.0);
                let r7 = r3 + 2.0 * r1;
                let r8 = r4 + 2.0 * r1;
                vec![r1, r2, r3, r4, r5, r6, r7, r8]
            }
        }
    }
}

/// Point set of one group.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupSignalSet {
    dim: usize,
    points: Vec<Vec<f64>>,
    radii: Vec<f64>,
    family: Family,
}

impl GroupSignalSet {
    /// Arbitrary points; only checks that dimensions agree and the set is
    /// nonempty.
    pub fn custom(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidParameter("empty point set".into()))?;
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::Dimension("points must share a nonzero dimension".into()));
        }
        Ok(GroupSignalSet {
            dim,
            points,
            radii: Vec::new(),
            family: Family::Custom,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Mean squared norm of the points.
    pub fn average_power(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / self.points.len() as f64
    }

    /// Reflects the second coordinate, moving points from `xy = c` to `xy = -c`.
    fn mirrored(&self) -> Self {
        let family = match self.family {
            Family::Hyperbola { c } => Family::Hyperbola { c: -c },
            f => f,
        };
        GroupSignalSet {
            dim: self.dim,
            points: self
                .points
                .iter()
                .map(|p| {
                    let mut q = p.clone();
                    if let Some(y) = q.get_mut(1) {
                        *y = -*y;
                    }
                    q
                })
                .collect(),
            radii: self.radii.clone(),
            family,
        }
    }
}

/// Cartesian product of four group point sets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignalSet {
    groups: [GroupSignalSet; GROUPS],
}

impl SignalSet {
    /// Product of explicitly given group sets, which must share a dimension.
    pub fn from_groups(groups: [GroupSignalSet; GROUPS]) -> Result<Self> {
        let dim = groups[0].dim;
        if groups.iter().any(|g| g.dim != dim) {
            return Err(Error::Dimension("group sets differ in dimension".into()));
        }
        Ok(SignalSet { groups })
    }

    /// Four copies of one group set.
    pub fn identical(group: GroupSignalSet) -> Self {
        SignalSet {
            groups: [group.clone(), group.clone(), group.clone(), group],
        }
    }

    pub fn groups(&self) -> &[GroupSignalSet; GROUPS] {
        &self.groups
    }

    pub fn group(&self, k: usize) -> &GroupSignalSet {
        &self.groups[k]
    }

    /// Dimension of each group's points.
    pub fn group_dim(&self) -> usize {
        self.groups[0].dim
    }

    pub fn group_sizes(&self) -> [usize; GROUPS] {
        [
            self.groups[0].len(),
            self.groups[1].len(),
            self.groups[2].len(),
            self.groups[3].len(),
        ]
    }

    /// Total number of signal vectors.
    pub fn size(&self) -> usize {
        self.group_sizes().iter().product()
    }

    /// Antenna exponent implied by the group dimension, if it is a power of two.
    pub fn lambda(&self) -> Option<u32> {
        let d = self.group_dim();
        d.is_power_of_two().then(|| d.trailing_zeros() + 1)
    }

    pub fn all_groups_identical(&self) -> bool {
        self.groups.iter().all(|g| g.points == self.groups[0].points)
    }
}

/// Linear radius ramp `r_q = q * delta` with `sum r_q^2 = half`.
pub fn default_radii(half: usize) -> Vec<f64> {
    let sum_sq: f64 = (1..=half).map(|q| (q * q) as f64).sum();
    let delta = (half as f64 / sum_sq).sqrt();
    (1..=half).map(|q| q as f64 * delta).collect()
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter("at least one radius required".into()));
    }
    if radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("radii must be strictly increasing".into()));
    }
    Ok(())
}

/// Rescales so that `sum r^2 == radii.len()`.
pub fn normalize_radii(radii: &[f64]) -> Vec<f64> {
    let sum_sq: f64 = radii.iter().map(|r| r * r).sum();
    let f = (radii.len() as f64 / sum_sq).sqrt();
    radii.iter().map(|r| r * f).collect()
}

/// Points per group for a total of `m` signal vectors: the integer fourth
/// root, which must be even.
pub fn points_per_group(m: usize) -> Result<usize> {
    let p = (m as f64).powf(0.25).round() as usize;
    if p == 0 || p.checked_pow(4) != Some(m) || !p.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "{m} is not the fourth power of an even integer"
        )));
    }
    Ok(p)
}

/// Axis-family group set with the given radii, used as-is.
pub fn axis_group(lambda: u32, radii: &[f64]) -> Result<GroupSignalSet> {
    if !(1..=crate::design::MAX_LAMBDA).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("unsupported lambda {lambda}")));
    }
    check_radii(radii)?;
    let dim = 1usize << (lambda - 1);
    let mut points = Vec::with_capacity(2 * radii.len());
    for (q, &r) in radii.iter().enumerate() {
        let axis = q % dim;
        for sign in [1.0, -1.0] {
            let mut p = vec![0.0; dim];
            p[axis] = sign * r;
            points.push(p);
        }
    }
    Ok(GroupSignalSet {
        dim,
        points,
        radii: radii.to_vec(),
        family: Family::Axis,
    })
}

/// Axis-family signal set of `m` points in total. Radii default to
/// [`default_radii`] and are always renormalised to `sum r^2 = P/2`.
pub fn construct_signal_set(lambda: u32, m: usize, radii: Option<&[f64]>) -> Result<SignalSet> {
    let p = points_per_group(m)?;
    let radii = match radii {
        Some(r) => {
            if r.len() != p / 2 {
                return Err(Error::InvalidParameter(format!(
                    "{} radii given, {} required for {m} points",
                    r.len(),
                    p / 2
                )));
            }
            check_radii(r)?;
            normalize_radii(r)
        }
        None => default_radii(p / 2),
    };
    Ok(SignalSet::identical(axis_group(lambda, &radii)?))
}

/// Signal set of a named preset, radii exactly as shipped.
pub fn preset_signal_set(preset: Preset) -> SignalSet {
    SignalSet::identical(
        axis_group(preset.lambda(), &preset.radii()).expect("preset radii are valid"),
    )
}

/// Two-dimensional points on circles of the given radii intersected with the
/// hyperbola `xy = c`.
///
/// Requires `0 < c < r1^2 / 2`: at `c = r1^2 / 2` the hyperbola is tangent to
/// the smallest circle (`x0 == y0`) and beyond it there is no intersection.
/// Radii must be normalised to `sum r^2 == radii.len()`.
pub fn circle_hyperbola_set(radii: &[f64], c: f64, branch: Branch) -> Result<GroupSignalSet> {
    check_radii(radii)?;
    let sum_sq: f64 = radii.iter().map(|r| r * r).sum();
    if (sum_sq - radii.len() as f64).abs() > LOOSE_TOL {
        return Err(Error::InvalidParameter(format!(
            "radii must satisfy sum r^2 = {}, got {sum_sq}",
            radii.len()
        )));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("hyperbola constant must be positive, got {c}")));
    }
    let r1_sq = radii[0] * radii[0];
    if c >= r1_sq {
        return Err(Error::Infeasible(format!(
            "c = {c} must be below r1^2 = {r1_sq}"
        )));
    }
    if c >= r1_sq / 2.0 - EXACT_TOL {
        return Err(Error::Infeasible(format!(
            "c = {c} leaves no two distinct intersections on the circle of radius {} (need c < {})",
            radii[0],
            r1_sq / 2.0
        )));
    }
    let mut points = Vec::with_capacity(4 * radii.len());
    for &r in radii {
        // x^2 and y^2 are the roots of t^2 - r^2 t + c^2 = 0
        let r2 = r * r;
        let disc = (r2 * r2 - 4.0 * c * c).sqrt();
        let x0 = ((r2 + disc) / 2.0).sqrt();
        // y0 from xy = c is better conditioned than the small root
        let y0 = c / x0;
        if matches!(branch, Branch::A | Branch::Both) {
            points.push(vec![x0, y0]);
            points.push(vec![-x0, -y0]);
        }
        if matches!(branch, Branch::B | Branch::Both) {
            points.push(vec![y0, x0]);
            points.push(vec![-y0, -x0]);
        }
    }
    Ok(GroupSignalSet {
        dim: 2,
        points,
        radii: radii.to_vec(),
        family: Family::Hyperbola { c },
    })
}

/// Four-antenna signal set from the circle/hyperbola family: in-phase groups
/// on `xy = c`, quadrature groups on `xy = -c`.
pub fn hyperbola_signal_set(radii: &[f64], c: f64, branch: Branch) -> Result<SignalSet> {
    let i_set = circle_hyperbola_set(radii, c, branch)?;
    let q_set = i_set.mirrored();
    SignalSet::from_groups([i_set.clone(), q_set.clone(), i_set, q_set])
}

/// Coordinate pairs `(0,1), (2,3), ...` within a group vector; these carry
/// the in-phase (or quadrature) parts of consecutive complex symbols.
pub fn default_pairing(dim: usize) -> Vec<(usize, usize)> {
    (0..dim / 2).map(|i| (2 * i, 2 * i + 1)).collect()
}

/// For every pair of distinct points and every coordinate pair `(u, v)`:
/// `du != dv` and `du != -dv`, unless both differences are zero.
pub fn difference_condition_holds(group: &GroupSignalSet, pairing: &[(usize, usize)]) -> bool {
    let pts = group.points();
    for (a, pa) in pts.iter().enumerate() {
        for pb in &pts[a + 1..] {
            for &(u, v) in pairing {
                let du = pa[u] - pb[u];
                let dv = pa[v] - pb[v];
                if du.abs() <= EXACT_TOL && dv.abs() <= EXACT_TOL {
                    continue;
                }
                if (du - dv).abs() <= LOOSE_TOL || (du + dv).abs() <= LOOSE_TOL {
                    return false;
                }
            }
        }
    }
    true
}

/// Whether every codeword built from this signal set (on the design matching
/// its group dimension) is scaled unitary. Exhaustive up to
/// [`EXHAUSTIVE_CHECK_LIMIT`] codewords, otherwise a fixed-seed sample of
/// that many.
pub fn yields_scaled_unitary_codewords(sset: &SignalSet) -> bool {
    let Some(lambda) = sset.lambda() else {
        return false;
    };
    let Ok(design) = construct_design(lambda) else {
        return false;
    };
    let Ok(cb) = Codebook::new(design, sset.clone()) else {
        return false;
    };
    let check = |idx: [usize; GROUPS]| {
        cb.codeword_at(idx)
            .map(|cw| cw.check_scaled_unitary(LOOSE_TOL).0)
            .unwrap_or(false)
    };
    if cb.size() <= EXHAUSTIVE_CHECK_LIMIT {
        cb.indices().all(check)
    } else {
        let sizes = sset.group_sizes();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        (0..EXHAUSTIVE_CHECK_LIMIT).all(|_| {
            let idx = std::array::from_fn(|k| rng.gen_range(0..sizes[k]));
            check(idx)
        })
    }
}
