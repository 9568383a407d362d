//! Differential encoding over a block-fading channel and the two decoders.
//!
//! The transmitter sends a known `X_0 = I` and then `X_t = U_t X_{t-1} / a_{t-1}`
//! where `U_t^H U_t = a_t^2 I`. The receiver sees `R_t = X_t H + W_t` and
//! decides on `U_t` by minimising `||R_t - U_t R_{t-1} / a_{t-1}||^2`, either
//! over the whole codebook or, for group-decodable codebooks, group by group
//! with `||R_t - S_k(X_k) R_{t-1} / a_{t-1}||^2`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::codebook::{Codebook, Codeword, Index4};
use crate::error::{Error, Result};
use crate::numerics::{CMat, Cx, LOOSE_TOL, ZERO};
use crate::signalset::GROUPS;

/// Transmitter memory: the last transmitted matrix and the squared scale of
/// the codeword that produced it.
#[derive(Clone, Debug)]
pub struct EncoderState {
    pub x_prev: CMat,
    pub a_prev_sq: f64,
}

impl EncoderState {
    /// `X_0 = I_n`, `a_0^2 = 1`.
    pub fn new(n: usize) -> Self {
        EncoderState {
            x_prev: CMat::identity(n),
            a_prev_sq: 1.0,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.x_prev.scaled_unitary_residual(self.a_prev_sq) <= LOOSE_TOL * self.a_prev_sq.max(1.0)
    }

    /// Encodes one codeword, returning the next state and the matrix to send.
    pub fn step(&self, u: &Codeword) -> Result<(EncoderState, CMat)> {
        if !u.matrix.is_square() || u.matrix.cols() != self.x_prev.rows() {
            return Err(Error::Dimension(format!(
                "codeword is {}x{}, state is {}x{}",
                u.matrix.rows(),
                u.matrix.cols(),
                self.x_prev.rows(),
                self.x_prev.cols()
            )));
        }
        let x = u.matrix.matmul(&self.x_prev)?.scale(1.0 / self.a_prev_sq.sqrt());
        let next = EncoderState {
            x_prev: x.clone(),
            a_prev_sq: u.scale_sq,
        };
        Ok((next, x))
    }
}

/// Channel parameters.
#[derive(Clone, Debug, Serialize)]
pub struct ChannelConfig {
    /// Receive antennas.
    pub n_r: usize,
    /// Noise variance per complex entry.
    pub noise_var: f64,
    /// Frames per coherence block, including the reference frame.
    pub coherence_frames: usize,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_r == 0 {
            return Err(Error::InvalidParameter("need at least one receive antenna".into()));
        }
        if !(self.noise_var >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise variance {}", self.noise_var)));
        }
        if self.coherence_frames < 2 {
            return Err(Error::InvalidParameter("coherence block must span at least 2 frames".into()));
        }
        Ok(())
    }
}

/// Circularly symmetric complex Gaussian with variance `var`.
pub fn complex_gaussian(rng: &mut impl Rng, var: f64) -> Cx {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Cx::new(re * s, im * s)
}

/// `n x n_r` Rayleigh channel with i.i.d. CN(0, 1) entries.
pub fn draw_channel(rng: &mut impl Rng, n: usize, n_r: usize) -> CMat {
    CMat::from_fn(n, n_r, |_, _| complex_gaussian(rng, 1.0))
}

/// `R = X H + W` with `W` i.i.d. CN(0, noise_var).
pub fn channel_step(x: &CMat, h: &CMat, noise_var: f64, rng: &mut impl Rng) -> Result<CMat> {
    let mut r = x.matmul(h)?;
    if noise_var > 0.0 {
        for z in r.as_mut_slice() {
            *z += complex_gaussian(rng, noise_var);
        }
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecodeResult {
    pub index: Index4,
    pub metric: f64,
    /// Number of metric evaluations performed.
    pub evaluations: usize,
}

/// `S_k(p) R_prev / a` for every point of every group, flattened row-major
/// per point.
struct Projections {
    len: usize,
    groups: [Vec<Cx>; GROUPS],
}

impl Projections {
    fn new(cb: &Codebook, r_prev: &CMat, a_prev_sq: f64) -> Result<Self> {
        let n = cb.n();
        if r_prev.rows() != n {
            return Err(Error::Dimension(format!(
                "received matrix has {} rows, codewords have {}",
                r_prev.rows(),
                n
            )));
        }
        let cols = r_prev.cols();
        let len = n * cols;
        let inv_a = 1.0 / a_prev_sq.sqrt();
        let rp = r_prev.as_slice();
        let groups = std::array::from_fn(|k| {
            let mats = cb.group_matrices(k);
            let mut buf = vec![ZERO; mats.len() * len];
            for (p, m) in mats.iter().enumerate() {
                let out = &mut buf[p * len..(p + 1) * len];
                let s = m.as_slice();
                for i in 0..n {
                    for j in 0..n {
                        let v = s[i * n + j];
                        if v.re == 0.0 && v.im == 0.0 {
                            continue;
                        }
                        let v = v * inv_a;
                        for c in 0..cols {
                            out[i * cols + c] += v * rp[j * cols + c];
                        }
                    }
                }
            }
            buf
        });
        Ok(Projections { len, groups })
    }

    #[inline]
    fn get(&self, k: usize, p: usize) -> &[Cx] {
        &self.groups[k][p * self.len..(p + 1) * self.len]
    }
}

fn check_received(r_t: &CMat, r_prev: &CMat) -> Result<()> {
    if r_t.rows() != r_prev.rows() || r_t.cols() != r_prev.cols() {
        return Err(Error::Dimension(format!(
            "received matrices differ: {}x{} vs {}x{}",
            r_t.rows(),
            r_t.cols(),
            r_prev.rows(),
            r_prev.cols()
        )));
    }
    Ok(())
}

#[inline]
fn dist_sq(a: &[Cx], b: &[Cx]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

/// Minimises the full metric over every codeword. Ties go to the
/// lexicographically smallest index.
pub fn decode_exhaustive(cb: &Codebook, r_t: &CMat, r_prev: &CMat, a_prev_sq: f64) -> Result<DecodeResult> {
    check_received(r_t, r_prev)?;
    let proj = Projections::new(cb, r_prev, a_prev_sq)?;
    let sizes = cb.group_sizes();
    let len = proj.len;
    let r = r_t.as_slice();
    let mut acc = [vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]];
    let mut best = DecodeResult {
        index: [0; GROUPS],
        metric: f64::INFINITY,
        evaluations: 0,
    };
    // the codeword's projection is the sum of its four group projections
    for i0 in 0..sizes[0] {
        for (a, (x, y)) in acc[0].iter_mut().zip(r.iter().zip(proj.get(0, i0))) {
            *a = x - y;
        }
        for i1 in 0..sizes[1] {
            let (lo, hi) = acc.split_at_mut(1);
            for (a, (x, y)) in hi[0].iter_mut().zip(lo[0].iter().zip(proj.get(1, i1))) {
                *a = x - y;
            }
            for i2 in 0..sizes[2] {
                let (lo, hi) = acc.split_at_mut(2);
                for (a, (x, y)) in hi[0].iter_mut().zip(lo[1].iter().zip(proj.get(2, i2))) {
                    *a = x - y;
                }
                for i3 in 0..sizes[3] {
                    let metric = dist_sq(&acc[2], proj.get(3, i3));
                    best.evaluations += 1;
                    if metric < best.metric {
                        best.metric = metric;
                        best.index = [i0, i1, i2, i3];
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Per-group metrics `||R_t - S_k(p) R_prev / a||^2` for every point.
///
/// With `B_v = A_v R_prev / a`, the metric of a group point `y` (scaled
/// coordinates) expands to `||R||^2 - 2 y.c + y' G y`, where
/// `c_v = Re<R, B_v>` and `G_uv = Re<B_u, B_v>`; each point then costs
/// `O(dim^2)` regardless of the matrix sizes.
pub fn group_metrics(cb: &Codebook, r_t: &CMat, r_prev: &CMat, a_prev_sq: f64) -> Result<[Vec<f64>; GROUPS]> {
    check_received(r_t, r_prev)?;
    let n = cb.n();
    if r_prev.rows() != n {
        return Err(Error::Dimension(format!(
            "received matrix has {} rows, codewords have {}",
            r_prev.rows(),
            n
        )));
    }
    let cols = r_prev.cols();
    let len = n * cols;
    let inv_a = 1.0 / a_prev_sq.sqrt();
    let gamma = cb.symbol_scale();
    let (r, rp) = (r_t.as_slice(), r_prev.as_slice());
    let rr = r_t.fro_norm_sq();
    let dim = cb.grouping().group_size();
    let mut b = vec![ZERO; dim * len];
    let mut c = vec![0.0; dim];
    let mut g = vec![0.0; dim * dim];
    let mut nz = Vec::with_capacity(dim);
    Ok(std::array::from_fn(|k| {
        b.iter_mut().for_each(|z| *z = ZERO);
        for (u, &v) in cb.grouping().group(k).iter().enumerate() {
            let bu = &mut b[u * len..(u + 1) * len];
            for &(i, j, w) in cb.weight_terms(v) {
                let w = w * inv_a;
                for col in 0..cols {
                    bu[i * cols + col] += w * rp[j * cols + col];
                }
            }
        }
        for u in 0..dim {
            let bu = &b[u * len..(u + 1) * len];
            c[u] = r.iter().zip(bu).map(|(x, y)| (x.conj() * y).re).sum();
            for v in u..dim {
                let bv = &b[v * len..(v + 1) * len];
                let s: f64 = bu.iter().zip(bv).map(|(x, y)| (x.conj() * y).re).sum();
                g[u * dim + v] = s;
                g[v * dim + u] = s;
            }
        }
        cb.signal_set()
            .group(k)
            .points()
            .iter()
            .map(|p| {
                nz.clear();
                nz.extend(p.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(u, x)| (u, gamma * x)));
                let mut m = rr;
                for &(u, yu) in &nz {
                    m -= 2.0 * yu * c[u];
                    for &(v, yv) in &nz {
                        m += yu * yv * g[u * dim + v];
                    }
                }
                m
            })
            .collect()
    }))
}

/// Group-by-group decision. Refuses codebooks whose design fails the exact
/// cross-group check, since the per-group minima would then be meaningless.
pub fn decode_group(cb: &Codebook, r_t: &CMat, r_prev: &CMat, a_prev_sq: f64) -> Result<DecodeResult> {
    if !cb.is_group_decodable() {
        return Err(Error::Verification(
            "design is not four-group decodable under its canonical grouping".into(),
        ));
    }
    let metrics = group_metrics(cb, r_t, r_prev, a_prev_sq)?;
    let mut index = [0; GROUPS];
    let mut total = 0.0;
    let mut evaluations = 0;
    for (k, m) in metrics.iter().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for (p, &v) in m.iter().enumerate() {
            if v < best.0 {
                best = (v, p);
            }
        }
        index[k] = best.1;
        total += best.0;
        evaluations += m.len();
    }
    // sum of group metrics overcounts ||R_t||^2 three times
    let metric = total - 3.0 * r_t.fro_norm_sq();
    Ok(DecodeResult {
        index,
        metric,
        evaluations,
    })
}

/// Decision-directed scale estimate: the squared scale of the decided
/// codeword.
pub fn estimate_scale(u_hat: &Codeword) -> f64 {
    u_hat.scale_sq
}

/// Full metric of one codeword, computed directly from its matrix.
pub fn full_metric(cb: &Codebook, idx: Index4, r_t: &CMat, r_prev: &CMat, a_prev_sq: f64) -> Result<f64> {
    let u = cb.matrix_at(idx)?;
    let pred = u.matmul(r_prev)?.scale(1.0 / a_prev_sq.sqrt());
    Ok((r_t - &pred).fro_norm_sq())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{construct_design, DesignBlock, LinearDesign};
    use crate::signalset::construct_signal_set;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn axis_codebook(lambda: u32, m: usize) -> Codebook {
        Codebook::new(
            construct_design(lambda).unwrap(),
            construct_signal_set(lambda, m, None).unwrap(),
        )
        .unwrap()
    }

    fn random_index(rng: &mut impl Rng, cb: &Codebook) -> Index4 {
        let s = cb.group_sizes();
        std::array::from_fn(|k| rng.gen_range(0..s[k]))
    }

    // straight-line reference: build every codeword and evaluate the metric
    fn brute_force(cb: &Codebook, r_t: &CMat, r_prev: &CMat, a_prev_sq: f64) -> (Index4, f64) {
        let mut best = ([0; 4], f64::INFINITY);
        for idx in cb.indices() {
            let m = full_metric(cb, idx, r_t, r_prev, a_prev_sq).unwrap();
            if m < best.1 {
                best = (idx, m);
            }
        }
        best
    }

    #[test]
    fn encoder_init_state() {
        for n in [2, 4] {
            let st = EncoderState::new(n);
            assert_eq!(st.x_prev, CMat::identity(n));
            assert_eq!(st.a_prev_sq, 1.0);
            assert!(st.is_consistent());
        }
    }

    #[test]
    fn encoder_scaled_identity_chain() {
        let u = Codeword::from_matrix(CMat::identity(2).scale(2.0));
        assert_eq!(u.scale_sq, 4.0);
        let (s1, x1) = EncoderState::new(2).step(&u).unwrap();
        assert_eq!(x1, CMat::identity(2).scale(2.0));
        assert_eq!(s1.a_prev_sq, 4.0);
        let (s2, x2) = s1.step(&u).unwrap();
        assert_eq!(x2, CMat::identity(2).scale(2.0));
        assert!(s2.is_consistent());
        assert!(EncoderState::new(4).step(&u).is_err());
    }

    #[test]
    fn unitary_codewords_keep_chain_unitary() {
        let cb = axis_codebook(1, 16);
        let mut st = EncoderState::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let mut cw = cb.codeword_at(random_index(&mut rng, &cb)).unwrap();
            // normalise to a unitary codeword
            cw.matrix = cw.matrix.scale(1.0 / cw.scale_sq.sqrt());
            cw.scale_sq = 1.0;
            let (next, x) = st.step(&cw).unwrap();
            assert!(x.scaled_unitary_residual(1.0) < 1e-12);
            st = next;
        }
    }

    #[test]
    fn power_is_stable_along_chain() {
        let cb = axis_codebook(2, 256);
        let mut st = EncoderState::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let cw = cb.codeword_at(random_index(&mut rng, &cb)).unwrap();
            let (next, x) = st.step(&cw).unwrap();
            assert!((x.fro_norm_sq() - 4.0 * cw.scale_sq).abs() < 1e-9 * cw.scale_sq);
            st = next;
        }
        assert!(st.is_consistent());
    }

    #[test]
    fn channel_noiseless_and_noise_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = CMat::identity(2).scale(1.5);
        let h = draw_channel(&mut rng, 2, 3);
        assert_eq!(channel_step(&x, &h, 0.0, &mut rng).unwrap(), &x * &h);

        let var = 0.7;
        let zero = CMat::zeros(4, 4);
        let h = CMat::zeros(4, 5);
        let mut sum = 0.0;
        let mut count = 0usize;
        while count < 100_000 {
            let r = channel_step(&zero, &h, var, &mut rng).unwrap();
            sum += r.fro_norm_sq();
            count += 20;
        }
        let est = sum / count as f64;
        assert!((est - var).abs() / var < 0.02, "{est}");
    }

    #[test]
    fn channel_is_deterministic_for_a_seed() {
        let x = CMat::identity(4);
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let h = draw_channel(&mut rng, 4, 2);
            channel_step(&x, &h, 0.3, &mut rng).unwrap()
        };
        let (a, b) = (draw(), draw());
        assert!(a.as_slice().iter().zip(b.as_slice()).all(|(p, q)| p.re.to_bits() == q.re.to_bits() && p.im.to_bits() == q.im.to_bits()));
    }

    fn noisy_instance(rng: &mut ChaCha8Rng, cb: &Codebook, n_r: usize, noise_var: f64) -> (Index4, CMat, CMat, f64) {
        let n = cb.n();
        let h = draw_channel(rng, n, n_r);
        let prev = cb.codeword_at(random_index(rng, cb)).unwrap();
        let (st, x_prev) = EncoderState::new(n).step(&prev).unwrap();
        let r_prev = channel_step(&x_prev, &h, noise_var, rng).unwrap();
        let idx = random_index(rng, cb);
        let (_, x) = st.step(&cb.codeword_at(idx).unwrap()).unwrap();
        let r_t = channel_step(&x, &h, noise_var, rng).unwrap();
        (idx, r_t, r_prev, prev.scale_sq)
    }

    #[test]
    fn noiseless_chain_recovers_every_codeword() {
        for (lambda, m) in [(1, 16), (2, 256), (3, 4096)] {
            let cb = axis_codebook(lambda, m);
            let mut rng = ChaCha8Rng::seed_from_u64(lambda as u64);
            for _ in 0..20 {
                let (idx, r_t, r_prev, a2) = noisy_instance(&mut rng, &cb, 1, 0.0);
                assert_eq!(decode_exhaustive(&cb, &r_t, &r_prev, a2).unwrap().index, idx);
                assert_eq!(decode_group(&cb, &r_t, &r_prev, a2).unwrap().index, idx);
            }
        }
    }

    #[test]
    fn exhaustive_matches_brute_force() {
        let cb = axis_codebook(2, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let (_, r_t, r_prev, a2) = noisy_instance(&mut rng, &cb, 2, 2.0);
            let d = decode_exhaustive(&cb, &r_t, &r_prev, a2).unwrap();
            let (idx, metric) = brute_force(&cb, &r_t, &r_prev, a2);
            assert_eq!(d.index, idx);
            assert!((d.metric - metric).abs() <= 1e-9 * metric.max(1.0));
            assert_eq!(d.evaluations, 16);
        }
    }

    #[test]
    fn all_zero_received_ties_to_first_index() {
        let cb = axis_codebook(2, 256);
        let z = CMat::zeros(4, 1);
        let d = decode_exhaustive(&cb, &z, &z, 1.0).unwrap();
        assert_eq!(d.index, [0; 4]);
        assert_eq!(d.metric, 0.0);
        assert_eq!(decode_group(&cb, &z, &z, 1.0).unwrap().index, [0; 4]);
    }

    #[test]
    fn metric_decomposition() {
        for (lambda, m) in [(1, 256), (2, 256), (3, 256)] {
            let cb = axis_codebook(lambda, m);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..5 {
                let (_, r_t, r_prev, a2) = noisy_instance(&mut rng, &cb, 2, 0.5);
                let gm = group_metrics(&cb, &r_t, &r_prev, a2).unwrap();
                let rr = r_t.fro_norm_sq();
                for idx in cb.indices() {
                    let full = full_metric(&cb, idx, &r_t, &r_prev, a2).unwrap();
                    let split: f64 = (0..4).map(|k| gm[k][idx[k]]).sum::<f64>() - 3.0 * rr;
                    assert!((full - split).abs() <= 1e-6 * full.max(1.0), "{full} vs {split}");
                }
            }
        }
    }

    #[test]
    fn group_and_exhaustive_agree() {
        for (lambda, m) in [(1, 256), (2, 256), (3, 4096)] {
            let cb = axis_codebook(lambda, m);
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            for _ in 0..200 {
                let (_, r_t, r_prev, a2) = noisy_instance(&mut rng, &cb, 1, 1.0);
                let e = decode_exhaustive(&cb, &r_t, &r_prev, a2).unwrap();
                let g = decode_group(&cb, &r_t, &r_prev, a2).unwrap();
                assert_eq!(e.index, g.index);
                assert!((e.metric - g.metric).abs() <= 1e-6 * e.metric.max(1.0));
                assert_eq!(e.evaluations, m);
                assert_eq!(g.evaluations, 4 * cb.group_sizes()[0]);
            }
        }
    }

    #[test]
    fn group_decoder_refuses_undecodable_design() {
        // [[x1, x2], [x2, x1]] doubled by ABBA is not four-group decodable under
        // the canonical split
        let design = LinearDesign::from_block(2, DesignBlock::scalar().abba().abba());
        let cb = Codebook::new(design, construct_signal_set(2, 16, None).unwrap()).unwrap();
        assert!(!cb.is_group_decodable());
        let z = CMat::zeros(4, 1);
        assert!(matches!(decode_group(&cb, &z, &z, 1.0), Err(Error::Verification(_))));
        assert!(decode_exhaustive(&cb, &z, &z, 1.0).is_ok());
    }

    #[test]
    fn decision_directed_scale_tracks_encoder() {
        let cb = axis_codebook(2, 256);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = draw_channel(&mut rng, 4, 1);
        let mut enc = EncoderState::new(4);
        let mut r_prev = channel_step(&enc.x_prev, &h, 0.0, &mut rng).unwrap();
        let mut a_hat = 1.0;
        for _ in 0..100 {
            let cw = cb.codeword_at(random_index(&mut rng, &cb)).unwrap();
            let (next, x) = enc.step(&cw).unwrap();
            let r = channel_step(&x, &h, 0.0, &mut rng).unwrap();
            let d = decode_group(&cb, &r, &r_prev, a_hat).unwrap();
            assert_eq!(d.index, cw.index);
            a_hat = estimate_scale(&cb.codeword_at(d.index).unwrap());
            assert_eq!(a_hat, next.a_prev_sq);
            enc = next;
            r_prev = r;
        }
        let u = Codeword::from_matrix(CMat::identity(2).scale(2.0));
        assert_eq!(estimate_scale(&u), 4.0);
    }

    #[test]
    fn channel_config_validation() {
        let ok = ChannelConfig { n_r: 1, noise_var: 0.1, coherence_frames: 2, seed: 0 };
        assert!(ok.validate().is_ok());
        assert!(ChannelConfig { n_r: 0, ..ok.clone() }.validate().is_err());
        assert!(ChannelConfig { noise_var: -1.0, ..ok.clone() }.validate().is_err());
        assert!(ChannelConfig { coherence_frames: 1, ..ok }.validate().is_err());
    }
}
