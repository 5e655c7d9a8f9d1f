//! Wiener increments for the diffusion channels.

use rand_distr::{Distribution, StandardNormal};

use crate::network::Partition;
use crate::rng::{SimRng, Stream, StreamSeed};

/// Supplies Brownian increments `W_r(t1) - W_r(t0)` for every diffusion
/// channel, in partition order. Calls arrive with consecutive, increasing
/// intervals.
pub trait WienerSource {
    fn increments(&mut self, t0: f64, t1: f64, dw: &mut [f64]);

    /// Like [`Self::increments`], but only channels with a positive
    /// coefficient in `props` are needed; the others may be left stale.
    fn active_increments(&mut self, t0: f64, t1: f64, props: &[f64], dw: &mut [f64]) {
        let _ = props;
        self.increments(t0, t1, dw);
    }
}

/// Fresh Gaussian draws, one independent stream per channel.
#[derive(Debug, Clone)]
pub struct IndependentWiener {
    rngs: Vec<SimRng>,
}

impl IndependentWiener {
    pub fn new(seed: StreamSeed, partition: &Partition) -> Self {
        IndependentWiener {
            rngs: partition
                .diffusion()
                .iter()
                .map(|&r| seed.rng(Stream::Wiener(r)))
                .collect(),
        }
    }
}

impl WienerSource for IndependentWiener {
    #[inline]
    fn increments(&mut self, t0: f64, t1: f64, dw: &mut [f64]) {
        let sd = (t1 - t0).sqrt();
        for (d, rng) in dw.iter_mut().zip(&mut self.rngs) {
            let z: f64 = StandardNormal.sample(rng);
            *d = sd * z;
        }
    }

    /// Increments of disjoint intervals are independent, so an unused draw
    /// can be skipped without changing the law of the others.
    #[inline]
    fn active_increments(&mut self, t0: f64, t1: f64, props: &[f64], dw: &mut [f64]) {
        let sd = (t1 - t0).sqrt();
        for ((d, rng), &a) in dw.iter_mut().zip(&mut self.rngs).zip(props) {
            if a > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                *d = sd * z;
            }
        }
    }
}

/// No noise at all: the diffusion step reduces to explicit Euler on the
/// drift.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl WienerSource for ZeroNoise {
    fn increments(&mut self, _t0: f64, _t1: f64, dw: &mut [f64]) {
        dw.fill(0.0);
    }
}

/// A Brownian path frozen on a fixed set of base times. Any grid whose
/// points are a subset of the base times reads increments as differences of
/// the stored path, so runs on different grids see the same noise.
#[derive(Debug, Clone)]
pub struct CoupledWiener {
    times: Vec<f64>,
    /// `paths[c][i]` is `W_c(times[i])`.
    paths: Vec<Vec<f64>>,
    tol: f64,
    cursor: usize,
}

impl CoupledWiener {
    /// Samples the path on `times` (sorted, starting at the path origin)
    /// using the same per-channel streams as [`IndependentWiener`].
    pub fn new(times: Vec<f64>, seed: StreamSeed, partition: &Partition) -> Self {
        let mut paths = Vec::with_capacity(partition.diffusion().len());
        for &r in partition.diffusion() {
            let mut rng = seed.rng(Stream::Wiener(r));
            let mut w = Vec::with_capacity(times.len());
            let mut acc = 0.0;
            w.push(0.0);
            for pair in times.windows(2) {
                let z: f64 = StandardNormal.sample(&mut rng);
                acc += (pair[1] - pair[0]).sqrt() * z;
                w.push(acc);
            }
            paths.push(w);
        }
        let span = times.last().copied().unwrap_or(0.0).abs();
        CoupledWiener {
            times,
            paths,
            tol: 1e-12 * span.max(f64::MIN_POSITIVE),
            cursor: 0,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Rewinds the read cursor for another pass over the path.
    pub fn rewind(&mut self) {
        self.cursor = 0;
    }

    fn locate(&mut self, t: f64) -> usize {
        // Consecutive reads move forward, so scan from the cursor first.
        let mut i = self.cursor;
        while i < self.times.len() && self.times[i] < t - self.tol {
            i += 1;
        }
        if i >= self.times.len() || (self.times[i] - t).abs() > self.tol {
            i = self.times.partition_point(|&x| x < t - self.tol);
        }
        assert!(
            i < self.times.len() && (self.times[i] - t).abs() <= self.tol,
            "time {t} is not a base point of the coupled Wiener path"
        );
        self.cursor = i;
        i
    }
}

impl WienerSource for CoupledWiener {
    fn increments(&mut self, t0: f64, t1: f64, dw: &mut [f64]) {
        let i0 = self.locate(t0);
        let i1 = self.locate(t1);
        for (d, w) in dw.iter_mut().zip(&self.paths) {
            *d = w[i1] - w[i0];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    fn partition() -> Partition {
        let net = parse_network(
            "species A continuous init=100\nreaction b: 0 -> A rate=1\nreaction d: A -> 0 rate=1",
        )
        .unwrap();
        Partition::with_diffusion(&net, &[0, 1]).unwrap()
    }

    #[test]
    fn independent_increments_have_interval_variance() {
        let p = partition();
        let mut w = IndependentWiener::new(StreamSeed::new(3, 0), &p);
        let n = 100_000;
        let dt = 0.25;
        let mut dw = [0.0; 2];
        let (mut s, mut s2) = ([0.0; 2], [0.0; 2]);
        for _ in 0..n {
            w.increments(0.0, dt, &mut dw);
            for c in 0..2 {
                s[c] += dw[c];
                s2[c] += dw[c] * dw[c];
            }
        }
        for c in 0..2 {
            let mean = s[c] / n as f64;
            let var = s2[c] / n as f64 - mean * mean;
            // var of the sample variance is 2 dt^2 / n
            assert!(
                (var - dt).abs() < 4.0 * (2.0f64).sqrt() * dt / (n as f64).sqrt(),
                "{var}"
            );
            assert!(mean.abs() < 4.0 * (dt / n as f64).sqrt());
        }
    }

    #[test]
    fn coupled_sums_over_coarse_cells() {
        let p = partition();
        let fine: Vec<f64> = (0..=16).map(|k| k as f64 / 16.0).collect();
        let mut w = CoupledWiener::new(fine, StreamSeed::new(4, 0), &p);
        let mut total = [0.0; 2];
        let mut dw = [0.0; 2];
        for k in 0..4 {
            w.increments(k as f64 / 4.0, (k + 1) as f64 / 4.0, &mut dw);
            total[0] += dw[0];
            total[1] += dw[1];
        }
        let mut whole = [0.0; 2];
        w.rewind();
        w.increments(0.0, 1.0, &mut whole);
        for c in 0..2 {
            assert!((total[c] - whole[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_is_zero() {
        let mut dw = [1.0, 2.0];
        ZeroNoise.increments(0.0, 1.0, &mut dw);
        assert_eq!(dw, [0.0, 0.0]);
    }
}
