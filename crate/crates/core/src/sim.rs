//! Monte Carlo error-rate sweeps over the differential chain.
//!
//! A burst of `frames` data frames is cut into coherence blocks of
//! `coherence` frames each. Every block starts with the known reference
//! `X_0 = I` (not counted) followed by `coherence - 1` data frames, under one
//! Rayleigh channel draw. Blocks are independent, which is what lets them run
//! on any number of workers with bit-identical results.
//!
//! Random streams are ChaCha8 streams of the master seed, selected by
//! purpose:
//!
//! * channel of block `b`: depends on `b` only,
//! * transmitted indices of frame slot `s`: depends on `s` only,
//! * noise of slot `s` at SNR point `i`: depends on `(i, s)`.
//!
//! Channel and data are therefore shared across the SNR sweep; only the noise
//! level changes.
//!
//! SNR is `10 log10(E(a^2) / noise_var)`: received signal power per receive
//! antenna over noise power per complex sample.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::codebook::{Codebook, Index4};
use crate::design::construct_design;
use crate::diffcodec::{channel_step, decode_exhaustive, decode_group, draw_channel, EncoderState};
use crate::error::{Error, Result};
use crate::signalset::{
    construct_signal_set, hyperbola_signal_set, preset_signal_set, Branch, Preset, SignalSet, GROUPS,
};

/// Exact CSV header.
pub const CSV_HEADER: &str = "snr_db,decoder,frames,frame_errors,bler,bits,bit_errors,ber,metric_evals,seed";

/// Blocks simulated between early-stopping checks.
const BATCH_BLOCKS: usize = 64;

const STREAM_CHANNEL: u64 = 1 << 60;
const STREAM_DATA: u64 = 2 << 60;
const STREAM_NOISE: u64 = 3 << 60;

pub const SNR_CONVENTION: &str =
    "snr_db = 10*log10(E(a^2)/noise_var): received signal power per receive antenna over noise power per complex sample";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Group,
    Exhaustive,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Group => "group",
            DecoderKind::Exhaustive => "exhaustive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderChoice {
    Group,
    Exhaustive,
    Both,
}

impl DecoderChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "group" => Ok(DecoderChoice::Group),
            "exhaustive" => Ok(DecoderChoice::Exhaustive),
            "both" => Ok(DecoderChoice::Both),
            other => Err(Error::InvalidParameter(format!("unknown decoder {other:?}"))),
        }
    }

    pub fn kinds(self) -> &'static [DecoderKind] {
        match self {
            DecoderChoice::Group => &[DecoderKind::Group],
            DecoderChoice::Exhaustive => &[DecoderKind::Exhaustive],
            DecoderChoice::Both => &[DecoderKind::Group, DecoderKind::Exhaustive],
        }
    }
}

/// Which signal set to build.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SignalSpec {
    /// Axis family; radii default to the linear ramp.
    Axis { radii: Option<Vec<f64>> },
    Preset { name: String },
    /// Circle/hyperbola family, four antennas only.
    Hyperbola {
        radii: Option<Vec<f64>>,
        c: Option<f64>,
        branch: Branch,
    },
}

impl SignalSpec {
    pub fn build(&self, lambda: u32, points: usize) -> Result<SignalSet> {
        match self {
            SignalSpec::Axis { radii } => construct_signal_set(lambda, points, radii.as_deref()),
            SignalSpec::Preset { name } => {
                let preset = Preset::parse(name)?;
                if preset.lambda() != lambda || preset.points() != points {
                    return Err(Error::InvalidParameter(format!(
                        "preset {name} is for lambda {} with {} points",
                        preset.lambda(),
                        preset.points()
                    )));
                }
                Ok(preset_signal_set(preset))
            }
            SignalSpec::Hyperbola { radii, c, branch } => {
                if lambda != 2 {
                    return Err(Error::InvalidParameter(
                        "the hyperbola family is only defined for four antennas".into(),
                    ));
                }
                let per_group = crate::signalset::points_per_group(points)?;
                let radii = match radii {
                    Some(r) => crate::signalset::normalize_radii(r),
                    None => crate::signalset::default_radii((per_group / branch.points_per_radius()).max(1)),
                };
                if branch.points_per_radius() * radii.len() != per_group {
                    return Err(Error::InvalidParameter(format!(
                        "{} radii give {} points per group, {} needed",
                        radii.len(),
                        branch.points_per_radius() * radii.len(),
                        per_group
                    )));
                }
                let c = c.unwrap_or(radii[0] * radii[0] / 4.0);
                hyperbola_signal_set(&radii, c, *branch)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimConfig {
    pub lambda: u32,
    pub points: usize,
    pub signal: SignalSpec,
    pub n_r: usize,
    /// SNR points in dB; `f64::INFINITY` means noiseless.
    #[serde(serialize_with = "ser_snr_list")]
    pub snr_db: Vec<f64>,
    /// Data frames per SNR point (reference frames excluded).
    pub frames: usize,
    /// Stop a point once this many frame errors have been seen.
    pub target_errors: Option<usize>,
    /// Frames per coherence block including the reference; `None` puts the
    /// whole burst under one channel draw.
    pub coherence: Option<usize>,
    pub decoder: DecoderChoice,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::InvalidParameter("frames must be at least 1".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::InvalidParameter("empty SNR list".into()));
        }
        if self.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(Error::InvalidParameter("SNR values must be numbers or inf".into()));
        }
        if self.n_r == 0 {
            return Err(Error::InvalidParameter("need at least one receive antenna".into()));
        }
        if matches!(self.coherence, Some(l) if l < 2) {
            return Err(Error::InvalidParameter("coherence block must span at least 2 frames".into()));
        }
        if self.target_errors == Some(0) {
            return Err(Error::InvalidParameter("target errors must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be positive".into()));
        }
        Ok(())
    }

    /// Frames per block, reference included.
    pub fn block_len(&self) -> usize {
        self.coherence.unwrap_or(self.frames + 1)
    }
}

/// Counts for one SNR point and one decoder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimPoint {
    #[serde(serialize_with = "ser_snr")]
    pub snr_db: f64,
    pub decoder: DecoderKind,
    pub frames: u64,
    pub frame_errors: u64,
    pub bler: f64,
    /// Zero when group sizes are not powers of two (BLER-only).
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: Option<f64>,
    pub metric_evals: u64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub snr_convention: &'static str,
    pub average_scale: f64,
    pub rate_bits_per_use: f64,
    pub points: Vec<SimPoint>,
}

/// Natural-binary labels of the group indices, concatenated most significant
/// bit first. Fails if a group size is not a power of two.
pub fn bit_mapping(idx: Index4, group_sizes: [usize; GROUPS]) -> Result<Vec<bool>> {
    let mut bits = Vec::new();
    for (&i, &s) in idx.iter().zip(&group_sizes) {
        if !s.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "group size {s} is not a power of two"
            )));
        }
        if i >= s {
            return Err(Error::IndexOutOfRange(format!("index {i} in group of {s}")));
        }
        let width = s.trailing_zeros();
        bits.extend((0..width).rev().map(|b| (i >> b) & 1 == 1));
    }
    Ok(bits)
}

fn bit_errors(a: Index4, b: Index4, widths: &Option<[u32; GROUPS]>) -> u64 {
    match widths {
        Some(_) => a.iter().zip(&b).map(|(x, y)| (x ^ y).count_ones() as u64).sum(),
        None => 0,
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Clone, Copy, Default)]
struct Counts {
    frames: u64,
    frame_errors: u64,
    bit_errors: u64,
    metric_evals: u64,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.frames += o.frames;
        self.frame_errors += o.frame_errors;
        self.bit_errors += o.bit_errors;
        self.metric_evals += o.metric_evals;
    }
}

struct Setup<'a> {
    cb: &'a Codebook,
    cfg: &'a SimConfig,
    kinds: &'a [DecoderKind],
    widths: Option<[u32; GROUPS]>,
    block_len: usize,
}

impl Setup<'_> {
    /// Data frames carried by block `b`.
    fn data_frames(&self, b: usize) -> usize {
        let per = self.block_len - 1;
        per.min(self.cfg.frames.saturating_sub(b * per))
    }

    fn blocks(&self) -> usize {
        self.cfg.frames.div_ceil(self.block_len - 1)
    }

    /// Runs one coherence block; stops early once `stop_after` frame errors
    /// are seen by every decoder.
    fn run_block(&self, snr_index: usize, noise_var: f64, b: usize, stop_after: Option<u64>) -> Result<Vec<Counts>> {
        let cb = self.cb;
        let n = cb.n();
        let seed = self.cfg.seed;
        let sizes = cb.group_sizes();
        let h = draw_channel(&mut stream(seed, STREAM_CHANNEL | b as u64), n, self.cfg.n_r);
        let slot0 = (b * self.block_len) as u64;
        let noise_stream = |slot: u64| stream(seed, STREAM_NOISE | ((snr_index as u64) << 40) | slot);

        let mut enc = EncoderState::new(n);
        let mut r_prev = channel_step(&enc.x_prev, &h, noise_var, &mut noise_stream(slot0))?;
        let mut a_hat = vec![1.0; self.kinds.len()];
        let mut counts = vec![Counts::default(); self.kinds.len()];

        for f in 1..=self.data_frames(b) {
            let slot = slot0 + f as u64;
            let mut data_rng = stream(seed, STREAM_DATA | slot);
            let idx: Index4 = std::array::from_fn(|k| data_rng.gen_range(0..sizes[k]));
            let cw = cb.codeword_at(idx)?;
            let (next, x) = enc.step(&cw)?;
            let r = channel_step(&x, &h, noise_var, &mut noise_stream(slot))?;
            for (d, kind) in self.kinds.iter().enumerate() {
                let res = match kind {
                    DecoderKind::Group => decode_group(cb, &r, &r_prev, a_hat[d])?,
                    DecoderKind::Exhaustive => decode_exhaustive(cb, &r, &r_prev, a_hat[d])?,
                };
                let c = &mut counts[d];
                c.frames += 1;
                c.metric_evals += res.evaluations as u64;
                if res.index != idx {
                    c.frame_errors += 1;
                    c.bit_errors += bit_errors(res.index, idx, &self.widths);
                }
                a_hat[d] = cb.scale_sq_at(res.index);
            }
            enc = next;
            r_prev = r;
            if let Some(t) = stop_after {
                if counts.iter().all(|c| c.frame_errors >= t) {
                    break;
                }
            }
        }
        Ok(counts)
    }

    fn run_point(&self, snr_index: usize, snr_db: f64) -> Result<Vec<Counts>> {
        let noise_var = if snr_db == f64::INFINITY {
            0.0
        } else {
            self.cb.average_scale() / 10f64.powf(snr_db / 10.0)
        };
        let target = self.cfg.target_errors.map(|t| t as u64);
        let mut total = vec![Counts::default(); self.kinds.len()];
        let blocks = self.blocks();
        let mut start = 0;
        'batches: while start < blocks {
            let end = (start + BATCH_BLOCKS).min(blocks);
            let remaining = target.map(|t| t - total.iter().map(|c| c.frame_errors).min().unwrap_or(0));
            let results: Vec<Result<Vec<Counts>>> = (start..end)
                .into_par_iter()
                .map(|b| self.run_block(snr_index, noise_var, b, remaining))
                .collect();
            for res in results {
                let counts = res?;
                for (t, c) in total.iter_mut().zip(&counts) {
                    t.add(c);
                }
                if let Some(t) = target {
                    if total.iter().all(|c| c.frame_errors >= t) {
                        break 'batches;
                    }
                }
            }
            start = end;
        }
        Ok(total)
    }
}

/// Builds the codebook a configuration describes.
pub fn build_codebook(cfg: &SimConfig) -> Result<Codebook> {
    let design = construct_design(cfg.lambda)?;
    let sset = cfg.signal.build(cfg.lambda, cfg.points)?;
    Codebook::new(design, sset)
}

/// Runs the sweep. Deterministic for a fixed configuration, independent of
/// the worker count.
pub fn run_sim(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let cb = build_codebook(cfg)?;
    run_sim_with(cfg, &cb)
}

/// As [`run_sim`] on a prebuilt codebook.
pub fn run_sim_with(cfg: &SimConfig, cb: &Codebook) -> Result<SimResult> {
    cfg.validate()?;
    let kinds = cfg.decoder.kinds();
    if kinds.contains(&DecoderKind::Group) && !cb.is_group_decodable() {
        return Err(Error::Verification(
            "group decoding requested on a codebook that is not four-group decodable".into(),
        ));
    }
    let sizes = cb.group_sizes();
    let widths = sizes
        .iter()
        .all(|s| s.is_power_of_two())
        .then(|| sizes.map(|s| s.trailing_zeros()));
    let bits_per_frame: u64 = widths.map_or(0, |w| w.iter().map(|&b| b as u64).sum());
    let setup = Setup {
        cb,
        cfg,
        kinds,
        widths,
        block_len: cfg.block_len(),
    };

    let run = || -> Result<Vec<SimPoint>> {
        let mut points = Vec::new();
        for (i, &snr) in cfg.snr_db.iter().enumerate() {
            let t0 = Instant::now();
            let counts = setup.run_point(i, snr)?;
            let wall = t0.elapsed().as_secs_f64();
            for (kind, c) in kinds.iter().zip(counts) {
                let bits = c.frames * bits_per_frame;
                points.push(SimPoint {
                    snr_db: snr,
                    decoder: *kind,
                    frames: c.frames,
                    frame_errors: c.frame_errors,
                    bler: c.frame_errors as f64 / c.frames as f64,
                    bits,
                    bit_errors: c.bit_errors,
                    ber: (bits > 0).then(|| c.bit_errors as f64 / bits as f64),
                    metric_evals: c.metric_evals,
                    wall_time_s: wall,
                });
            }
        }
        Ok(points)
    };
    let points = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(SimResult {
        config: cfg.clone(),
        snr_convention: SNR_CONVENTION,
        average_scale: cb.average_scale(),
        rate_bits_per_use: cb.rate_bits_per_use(),
        points,
    })
}

fn six_sig(x: f64) -> String {
    format!("{x:.5e}")
}

// JSON has no infinity; noiseless points are written as "inf".
fn ser_snr<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&snr_label(*x))
    }
}

fn ser_snr_list<S: serde::Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        if x.is_finite() {
            seq.serialize_element(x)?;
        } else {
            seq.serialize_element(&snr_label(*x))?;
        }
    }
    seq.end()
}

fn snr_label(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{x}")
    }
}

/// Writes the CSV table (exact header, one row per SNR point and decoder).
pub fn write_csv<W: Write>(result: &SimResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for p in &result.points {
        w.write_record([
            snr_label(p.snr_db),
            p.decoder.name().to_string(),
            p.frames.to_string(),
            p.frame_errors.to_string(),
            six_sig(p.bler),
            p.bits.to_string(),
            p.bit_errors.to_string(),
            p.ber.map_or_else(|| "nan".to_string(), six_sig),
            p.metric_evals.to_string(),
            result.config.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(result: &SimResult) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(result, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Parses `A:B:STEP`, a comma-separated list, or `inf` entries.
pub fn parse_snr_list(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("cannot parse SNR list {s:?}"));
    let value = |t: &str| -> Result<f64> {
        let t = t.trim();
        if t.eq_ignore_ascii_case("inf") {
            Ok(f64::INFINITY)
        } else {
            t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad)
        }
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (value(a)?, value(b)?, value(step)?);
            if !(step > 0.0) || !a.is_finite() || !b.is_finite() || b < a {
                return Err(bad());
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| a + i as f64 * step).collect())
        }
        [_] => s.split(',').map(value).collect(),
        _ => Err(bad()),
    }
}
