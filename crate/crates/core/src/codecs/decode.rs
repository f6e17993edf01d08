//! Decoders over a precomputed curve table.
//!
//! Both decoders search `s` in `[-SEARCH_RANGE, SEARCH_RANGE]`. The table holds
//! `GRID_CELLS + 1` equally spaced nodes. Since `|a(s)|` is increasing in
//! `|s|`, the triangle inequality `|b - a(s)| >= | |b| - |a(s)| |` restricts the
//! scan to the nodes whose curve norm lies within a known distance of `|b|`;
//! the nodes skipped are provably farther than the best node already seen.
//!
//! ML decoding of spirals does not stop at the table edge: when `|b|` is large
//! enough that a point with `|s| > SEARCH_RANGE` could be closer, the matching
//! stretch of the curve is scanned on the fly. Inside a control loop the
//! normalized source can leave the Gaussian range after a threshold event.

use crate::channel::{ChannelModel, SymbolBlock};
use crate::codecs::search::golden_section_min;
use crate::codecs::spec::{CodecSpec, Decoder, Family};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Half-width of the decoder search interval (standard-normal source).
pub const SEARCH_RANGE: f64 = 8.0;
pub const GRID_CELLS: usize = 1 << 14;
/// Bracket length at which golden-section refinement stops.
pub const REFINE_TOL: f64 = 1e-6;
/// Grid local minima refined per ML decode.
const REFINE_CANDIDATES: usize = 3;
/// Cap on nodes scanned beyond the table per sign; the pitch coarsens past it.
const TAIL_MAX_NODES: usize = 1 << 20;
/// Posterior nodes whose log-weight is this far below the peak are dropped.
const MMSE_LOG_CUTOFF: f64 = 40.0;
/// Posterior runs shorter than this many nodes are re-integrated on a finer grid.
const MMSE_NARROW_RUN: usize = 32;
const MMSE_SUBDIVISIONS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub biased: bool,
    /// Set when the MMSE decoder could not form a posterior and returned the ML estimate.
    pub fallback: bool,
}

impl<T> Estimate<T> {
    fn biased(value: T) -> Self {
        Self { value, biased: true, fallback: false }
    }
}

/// A codec whose power scale is known, ready to encode and decode.
#[derive(Debug, Clone)]
pub struct Codec<T> {
    spec: CodecSpec<T>,
    c: T,
    h: T,
    /// Index of the `s = 0` node.
    center: usize,
    a1: Vec<T>,
    a2: Vec<T>,
}

#[derive(Debug, Clone, Copy)]
struct Candidates<T> {
    best: [(T, usize); REFINE_CANDIDATES],
    len: usize,
}

impl<T: Scalar> Candidates<T> {
    fn new() -> Self {
        Self { best: [(T::infinity(), 0); REFINE_CANDIDATES], len: 0 }
    }

    fn offer(&mut self, d2: T, idx: usize) {
        if self.len == REFINE_CANDIDATES && d2 >= self.best[REFINE_CANDIDATES - 1].0 {
            return;
        }
        let mut pos = self.len.min(REFINE_CANDIDATES - 1);
        self.best[pos] = (d2, idx);
        while pos > 0 && self.best[pos].0 < self.best[pos - 1].0 {
            self.best.swap(pos, pos - 1);
            pos -= 1;
        }
        self.len = (self.len + 1).min(REFINE_CANDIDATES);
    }

    fn as_slice(&self) -> &[(T, usize)] {
        &self.best[..self.len]
    }
}

impl<T: Scalar> Codec<T> {
    /// Builds the decoder table. The spec must have its power scale set.
    pub fn new(spec: CodecSpec<T>) -> Result<Self> {
        spec.validate()?;
        let c = spec.power_scale()?;
        let center = GRID_CELLS / 2;
        let h = T::of(2.0 * SEARCH_RANGE) / T::of_usize(GRID_CELLS);
        let mut a1 = Vec::with_capacity(GRID_CELLS + 1);
        let mut a2 = Vec::with_capacity(GRID_CELLS + 1);
        for i in 0..=GRID_CELLS {
            let s = (T::of_usize(i) - T::of_usize(center)) * h;
            let block = spec.encode_with(c, s);
            let sym = block.as_slice();
            a1.push(sym[0]);
            a2.push(if sym.len() > 1 { sym[1] } else { T::zero() });
        }
        Ok(Self { spec, c, h, center, a1, a2 })
    }

    pub fn spec(&self) -> &CodecSpec<T> {
        &self.spec
    }

    pub fn kc(&self) -> usize {
        self.spec.kc
    }

    #[inline]
    pub fn encode(&self, s: T) -> SymbolBlock<T> {
        self.spec.encode_with(self.c, s)
    }

    #[inline]
    fn node(&self, i: usize) -> T {
        (T::of_usize(i) - T::of_usize(self.center)) * self.h
    }

    #[inline]
    fn node_dist2(&self, i: usize, b: &[T]) -> T {
        let d1 = b[0] - self.a1[i];
        if b.len() == 1 {
            d1 * d1
        } else {
            let d2 = b[1] - self.a2[i];
            d1 * d1 + d2 * d2
        }
    }

    #[inline]
    fn dist2(&self, s: T, b: &[T]) -> T {
        let a = self.encode(s);
        a.as_slice()
            .iter()
            .zip(b)
            .fold(T::zero(), |acc, (&x, &y)| acc + (y - x) * (y - x))
    }

    fn check_len(&self, b: &SymbolBlock<T>) -> Result<()> {
        if b.len() != self.spec.kc {
            return Err(Error::BlockLength { expected: self.spec.kc, got: b.len() });
        }
        Ok(())
    }

    /// Node index ranges whose `|s|` lies in `[m_lo, m_hi]`, padded by one node.
    fn index_ranges(&self, m_lo: T, m_hi: T) -> [Option<(usize, usize)>; 2] {
        let cells = |m: T| -> usize {
            if !(m >= T::zero()) {
                0
            } else {
                (m / self.h).to_usize().unwrap_or(self.center).min(self.center)
            }
        };
        let k_lo = cells(m_lo).saturating_sub(1);
        let k_hi = if m_hi.is_finite() { (cells(m_hi) + 2).min(self.center) } else { self.center };
        if k_lo > k_hi {
            return [None, None];
        }
        if k_lo == 0 {
            [Some((self.center - k_hi, self.center + k_hi)), None]
        } else {
            [
                Some((self.center - k_hi, self.center - k_lo)),
                Some((self.center + k_lo, self.center + k_hi)),
            ]
        }
    }

    fn norm_window(&self, bn: T, radius: T) -> [Option<(usize, usize)>; 2] {
        let m_lo = self.spec.magnitude_for_norm(self.c, bn - radius);
        let m_hi = self.spec.magnitude_for_norm(self.c, bn + radius);
        self.index_ranges(m_lo, m_hi)
    }

    /// Grid node nearest to `s`, clamped to the table.
    #[inline]
    fn nearest_node(&self, s: T) -> usize {
        let k = (s / self.h).round();
        let max = T::of_usize(self.center);
        let k = k.max(-max).min(max);
        let offset = k.abs().to_usize().unwrap_or(self.center);
        if k < T::zero() {
            self.center - offset
        } else {
            self.center + offset
        }
    }

    /// Distance (squared) from `b` to some grid node, used as the pruning radius.
    ///
    /// For spirals the probes are the nodes nearest to where the arms of either
    /// branch cross the ray through `b`, at the turns whose radius is closest to `|b|`.
    fn node_bound(&self, b: &[T], bn: T) -> T {
        let m_star = self.spec.magnitude_for_norm(self.c, bn);
        let k = if m_star.is_finite() {
            (m_star / self.h).round().to_usize().unwrap_or(self.center).min(self.center)
        } else {
            self.center
        };
        let mut bound = self
            .node_dist2(self.center, b)
            .min(self.node_dist2(self.center + k, b))
            .min(self.node_dist2(self.center - k, b));
        if self.spec.family == Family::Spiral && b.len() == 2 && bn.is_finite() {
            let tau = T::TAU();
            let spec = &self.spec;
            let phase = b[1].atan2(b[0]);
            let u_star = (bn / self.c).powf(spec.beta.recip());
            let theta_star = spec.delta * u_star;
            for (sign, offset) in [(T::one(), T::zero()), (-T::one(), T::PI())] {
                let raw = phase + offset;
                let base = raw - (raw / tau).floor() * tau;
                let turn = ((theta_star - base) / tau).round();
                for dk in [-1.0, 0.0, 1.0] {
                    let theta = base + (turn + T::of(dk)) * tau;
                    if theta < T::zero() {
                        continue;
                    }
                    let m = (theta / spec.delta).powf(spec.lambda.recip());
                    bound = bound.min(self.node_dist2(self.nearest_node(sign * m), b));
                }
            }
        }
        bound
    }

    /// Best grid local minima of `|b - a(s_i)|^2`, exact over the whole table.
    fn grid_search(&self, b: &[T]) -> Candidates<T> {
        let bn = b.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        let bound = self.node_bound(b, bn);
        let mut cand = Candidates::new();
        for (lo, hi) in self.norm_window(bn, bound.sqrt()).into_iter().flatten() {
            let mut prev = T::infinity();
            let mut cur = self.node_dist2(lo, b);
            for i in lo..=hi {
                let next = if i < hi { self.node_dist2(i + 1, b) } else { T::infinity() };
                if cur <= prev && cur < next {
                    cand.offer(cur, i);
                }
                prev = cur;
                cur = next;
            }
        }
        if cand.len == 0 {
            // Only reachable when every distance is non-finite.
            cand.offer(T::infinity(), self.center);
        }
        cand
    }

    /// Longest chord between node `i` and its neighbours: bounds how much closer
    /// the curve can get to `b` inside the adjacent cells.
    fn cell_reach(&self, i: usize) -> T {
        let chord = |j: usize, k: usize| {
            let (d1, d2) = (self.a1[j] - self.a1[k], self.a2[j] - self.a2[k]);
            (d1 * d1 + d2 * d2).sqrt()
        };
        let left = if i > 0 { chord(i, i - 1) } else { T::zero() };
        let right = if i < 2 * self.center { chord(i, i + 1) } else { T::zero() };
        left.max(right)
    }

    fn refine(&self, idx: usize, b: &[T]) -> (T, T) {
        let lo = self.node(idx.saturating_sub(1));
        let hi = self.node((idx + 1).min(2 * self.center));
        golden_section_min(|s| self.dist2(s, b), lo, hi, T::of(REFINE_TOL))
    }

    /// Best refined point with `|s|` beyond the table whose norm is within `radius` of `bn`.
    ///
    /// Nodes are equally spaced in `|s|^lambda`, which keeps the angular pitch
    /// equal to the table's at its edge.
    fn tail_search(&self, b: &[T], bn: T, radius: T) -> Option<(T, T)> {
        let spec = &self.spec;
        let range = T::of(SEARCH_RANGE);
        let m_lo = spec.magnitude_for_norm(self.c, bn - radius).max(range);
        let m_hi = spec.magnitude_for_norm(self.c, bn + radius);
        if !(m_hi > m_lo && m_hi.is_finite()) {
            return None;
        }
        let (u_lo, u_hi) = (m_lo.powf(spec.lambda), m_hi.powf(spec.lambda));
        let du0 = spec.lambda * range.powf(spec.lambda - T::one()) * self.h;
        let nodes = ((u_hi - u_lo) / du0).ceil().to_usize()?.clamp(2, TAIL_MAX_NODES);
        let du = (u_hi - u_lo) / T::of_usize(nodes);
        let inv = spec.lambda.recip();
        let mut best: Option<(T, T)> = None;
        for sign in [T::one(), -T::one()] {
            let s_at = |k: usize| sign * (u_lo + du * T::of_usize(k)).powf(inv);
            let mut cand = Candidates::new();
            let mut prev = T::infinity();
            let mut cur = self.dist2(s_at(0), b);
            for k in 0..=nodes {
                let next = if k < nodes { self.dist2(s_at(k + 1), b) } else { T::infinity() };
                if cur <= prev && cur < next {
                    cand.offer(cur, k);
                }
                prev = cur;
                cur = next;
            }
            for &(_, k) in cand.as_slice() {
                let (x, y) = (s_at(k.saturating_sub(1)), s_at((k + 1).min(nodes)));
                let (lo, hi) = if x < y { (x, y) } else { (y, x) };
                let (s, d2) = golden_section_min(|s| self.dist2(s, b), lo, hi, T::of(REFINE_TOL));
                if best.is_none_or(|(_, bd)| d2 < bd) {
                    best = Some((s, d2));
                }
            }
        }
        best
    }

    /// Minimum-distance (ML under isotropic Gaussian noise) estimate.
    pub fn decode_ml(&self, b: &SymbolBlock<T>) -> Result<Estimate<T>> {
        self.check_len(b)?;
        let sym = b.as_slice();
        match self.spec.family {
            Family::Linear | Family::Repetition => {
                let sum = sym.iter().fold(T::zero(), |acc, &x| acc + x);
                Ok(Estimate::biased(sum / (self.c * T::of_usize(sym.len()))))
            }
            Family::Spiral => {
                if !b.is_finite() {
                    return Ok(Estimate { value: T::zero(), biased: true, fallback: true });
                }
                let cand = self.grid_search(sym);
                let best_grid = cand.as_slice()[0].0.sqrt();
                let (mut best_s, mut best_d2) = (T::zero(), T::infinity());
                for &(d2, idx) in cand.as_slice() {
                    // A runner-up is refined only if its cells could beat the best node.
                    if d2.sqrt() - T::of(2.0) * self.cell_reach(idx) > best_grid {
                        continue;
                    }
                    let (s, d2) = self.refine(idx, sym);
                    if d2 < best_d2 || (d2 == best_d2 && s.abs() < best_s.abs()) {
                        best_s = s;
                        best_d2 = d2;
                    }
                }
                let bn = sym.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
                let radius = best_d2.sqrt();
                if bn + radius > self.spec.curve_norm(self.c, T::of(SEARCH_RANGE)) {
                    if let Some((s, d2)) = self.tail_search(sym, bn, radius) {
                        if d2 < best_d2 {
                            best_s = s;
                        }
                    }
                }
                Ok(Estimate::biased(best_s))
            }
        }
    }

    #[inline]
    fn log_weight(&self, d2: T, s: T, half_snr: T) -> T {
        -(d2 * half_snr) - s * s / T::of(2.0)
    }

    /// Posterior mean under a standard normal prior, by trapezoidal quadrature on the table grid.
    ///
    /// Posterior peaks narrower than [`MMSE_NARROW_RUN`] nodes are re-integrated
    /// with [`MMSE_SUBDIVISIONS`] sub-nodes per cell. Weights are handled in the
    /// log domain; if the normalizer is still not finite the ML estimate is
    /// returned with `fallback` set.
    pub fn decode_mmse(&self, b: &SymbolBlock<T>, ch: &ChannelModel<T>) -> Result<Estimate<T>> {
        self.check_len(b)?;
        if ch.noise_variance() == T::zero() {
            return self.decode_ml(b);
        }
        let fallback = || -> Result<Estimate<T>> {
            let mut est = self.decode_ml(b)?;
            est.fallback = true;
            Ok(est)
        };
        if !b.is_finite() {
            return fallback();
        }
        let sym = b.as_slice();
        let half_snr = ch.snr() / T::of(2.0);
        let cut = T::of(MMSE_LOG_CUTOFF);

        let (d2_best, i_best) = self.grid_search(sym).as_slice()[0];
        let s_best = self.node(i_best);
        let radius2 = d2_best + (s_best * s_best + T::of(2.0) * cut) / ch.snr();
        if !radius2.is_finite() {
            return fallback();
        }
        let bn = b.norm();

        let mut nodes: Vec<(usize, T)> = Vec::new();
        for (lo, hi) in self.norm_window(bn, radius2.sqrt()).into_iter().flatten() {
            for i in lo..=hi {
                nodes.push((i, self.log_weight(self.node_dist2(i, sym), self.node(i), half_snr)));
            }
        }
        let w_max = nodes.iter().fold(T::neg_infinity(), |m, &(_, w)| m.max(w));
        if !w_max.is_finite() {
            return fallback();
        }
        let floor = w_max - cut;

        // (peak log-weight, integral of weight, integral of s * weight) per run, scaled by exp(-peak).
        let mut runs: Vec<(T, T, T)> = Vec::new();
        let mut start = 0;
        while start < nodes.len() {
            if nodes[start].1 < floor {
                start += 1;
                continue;
            }
            let mut end = start;
            while end + 1 < nodes.len() && nodes[end + 1].0 == nodes[end].0 + 1 && nodes[end + 1].1 >= floor {
                end += 1;
            }
            let run = &nodes[start..=end];
            runs.push(if run.len() < MMSE_NARROW_RUN {
                self.integrate_fine(run[0].0, run[run.len() - 1].0, sym, half_snr)
            } else {
                let peak = run.iter().fold(T::neg_infinity(), |m, &(_, w)| m.max(w));
                let (mut z, mut zs) = (T::zero(), T::zero());
                for &(i, w) in run {
                    let e = (w - peak).exp();
                    z = z + e;
                    zs = zs + e * self.node(i);
                }
                (peak, z * self.h, zs * self.h)
            });
            start = end + 1;
        }

        let peak = runs.iter().fold(T::neg_infinity(), |m, r| m.max(r.0));
        let (mut z, mut zs) = (T::zero(), T::zero());
        for &(p, rz, rzs) in &runs {
            let scale = (p - peak).exp();
            z = z + rz * scale;
            zs = zs + rzs * scale;
        }
        if !(z > T::zero() && z.is_finite()) {
            return fallback();
        }
        Ok(Estimate::biased(zs / z))
    }

    fn integrate_fine(&self, first: usize, last: usize, b: &[T], half_snr: T) -> (T, T, T) {
        let lo = first.saturating_sub(1);
        let hi = (last + 1).min(2 * self.center);
        let steps = (hi - lo) * MMSE_SUBDIVISIONS;
        let dx = self.h / T::of_usize(MMSE_SUBDIVISIONS);
        let s0 = self.node(lo);
        let weights: Vec<(T, T)> = (0..=steps)
            .map(|k| {
                let s = s0 + T::of_usize(k) * dx;
                (s, self.log_weight(self.dist2(s, b), s, half_snr))
            })
            .collect();
        let peak = weights.iter().fold(T::neg_infinity(), |m, &(_, w)| m.max(w));
        let (mut z, mut zs) = (T::zero(), T::zero());
        for (k, &(s, w)) in weights.iter().enumerate() {
            let e = (w - peak).exp();
            let e = if k == 0 || k == steps { e / T::of(2.0) } else { e };
            z = z + e;
            zs = zs + e * s;
        }
        (peak, z * dx, zs * dx)
    }

    /// Decodes with the spec's configured decoder.
    pub fn decode(&self, b: &SymbolBlock<T>, ch: &ChannelModel<T>) -> Result<Estimate<T>> {
        match self.spec.decoder {
            Decoder::Ml => self.decode_ml(b),
            Decoder::Mmse => self.decode_mmse(b, ch),
        }
    }

    /// Scales a biased estimate by the calibrated CUBE factor.
    pub fn cube_correct(&self, est: Estimate<T>) -> Result<Estimate<T>> {
        if !est.biased {
            return Err(Error::InvalidParameter("estimate is already CUBE-corrected".into()));
        }
        let k = self.spec.cube_factor.ok_or(Error::Uncalibrated("cube_factor"))?;
        Ok(Estimate { value: est.value * k, biased: false, fallback: est.fallback })
    }

    /// Decode followed by CUBE correction.
    pub fn estimate(&self, b: &SymbolBlock<T>, ch: &ChannelModel<T>) -> Result<Estimate<T>> {
        self.cube_correct(self.decode(b, ch)?)
    }

    /// Whether decoding `s` as `s_hat` jumped to another arm or branch of the spiral.
    pub fn is_threshold_event(&self, s: T, s_hat: T) -> bool {
        match self.spec.family {
            Family::Spiral => {
                (self.spec.stretch(s) - self.spec.stretch(s_hat)).abs() > T::PI() / self.spec.delta
            }
            _ => false,
        }
    }
}
