//! Reference Poisson process and thinning of its marks.
//!
//! Jump reactions share one homogeneous reference process of intensity
//! `lambda_max` whose arrivals carry marks uniform on `[0, lambda_max)`.
//! At an arrival, the mark space is cut into consecutive intervals whose
//! lengths are the current jump propensities; the interval containing the
//! mark names the reaction that fires, and marks past the last interval are
//! discarded.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::network::{ReactionNetwork, State};
use crate::rng::{SimRng, Stream, StreamSeed};
use crate::trajectory::SimError;

use super::kernel::Channel;
use super::Partition;

/// Outcome of classifying one mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkOutcome {
    /// Reaction index (into the network) that fires.
    Fire(usize),
    Thinned,
}

/// Cumulative propensity bounds `0 = L_0 <= L_1 <= ... <= L_n` over the jump
/// reactions, in partition order, at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkLayout {
    reactions: Vec<usize>,
    channels: Vec<Channel>,
    bounds: Vec<f64>,
    lambda_max: f64,
}

impl MarkLayout {
    pub(crate) fn empty(net: &ReactionNetwork, partition: &Partition, lambda_max: f64) -> Self {
        let n = partition.jump().len();
        MarkLayout {
            reactions: partition.jump().to_vec(),
            channels: partition
                .jump()
                .iter()
                .map(|&r| Channel::compile(net, partition, r))
                .collect(),
            bounds: vec![0.0; n + 1],
            lambda_max,
        }
    }

    /// Recomputes the bounds at `s`; fails when the total exceeds
    /// `lambda_max`.
    pub(crate) fn update(&mut self, s: &State) -> Result<(), SimError> {
        let mut acc = 0.0;
        for (bound, ch) in self.bounds[1..].iter_mut().zip(&self.channels) {
            acc += ch.propensity(s);
            *bound = acc;
        }
        if acc > self.lambda_max {
            return Err(SimError::IntensityBound {
                t: s.t,
                total: acc,
                lambda_max: self.lambda_max,
                state: s.clone(),
            });
        }
        Ok(())
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    /// Total jump propensity.
    pub fn total(&self) -> f64 {
        *self.bounds.last().unwrap_or(&0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn with_lambda_max(mut self, lambda_max: f64) -> Self {
        self.lambda_max = lambda_max;
        self
    }

    #[inline]
    pub fn classify(&self, z: f64) -> MarkOutcome {
        if z >= self.total() {
            return MarkOutcome::Thinned;
        }
        for (i, &upper) in self.bounds[1..].iter().enumerate() {
            if z < upper {
                return MarkOutcome::Fire(self.reactions[i]);
            }
        }
        MarkOutcome::Thinned
    }
}

/// Mark-space layout of the jump reactions at `s`.
pub fn mark_layout(
    net: &ReactionNetwork,
    partition: &Partition,
    s: &State,
    lambda_max: f64,
) -> Result<MarkLayout, SimError> {
    if !(lambda_max > 0.0) {
        return Err(SimError::Config(format!(
            "lambda_max must be positive, got {lambda_max}"
        )));
    }
    let mut layout = MarkLayout::empty(net, partition, lambda_max);
    layout.update(s)?;
    Ok(layout)
}

/// Reaction whose interval contains `z`, or [`MarkOutcome::Thinned`].
pub fn classify_mark(layout: &MarkLayout, z: f64) -> MarkOutcome {
    layout.classify(z)
}

/// One arrival of the reference process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceJump {
    pub tau: f64,
    pub z: f64,
}

/// Next arrival after `t_now`: exponential gap from `arrivals`, uniform mark
/// on `[0, lambda_max)` from `marks`.
pub fn next_reference_jump<A: Rng + ?Sized, M: Rng + ?Sized>(
    arrivals: &mut A,
    marks: &mut M,
    lambda_max: f64,
    t_now: f64,
) -> ReferenceJump {
    let gap: f64 = Exp1.sample(arrivals);
    let u: f64 = marks.random();
    let mut z = u * lambda_max;
    if z >= lambda_max {
        z = lambda_max.next_down();
    }
    let mut tau = t_now + gap / lambda_max;
    if tau <= t_now {
        tau = t_now.next_up();
    }
    ReferenceJump { tau, z }
}

/// Endless stream of reference arrivals for one replicate attempt.
#[derive(Debug, Clone)]
pub struct ReferenceProcess {
    arrivals: SimRng,
    marks: SimRng,
    lambda_max: f64,
    t: f64,
}

impl ReferenceProcess {
    pub fn new(seed: StreamSeed, lambda_max: f64) -> Self {
        ReferenceProcess {
            arrivals: seed.rng(Stream::Arrivals),
            marks: seed.rng(Stream::Marks),
            lambda_max,
            t: 0.0,
        }
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }
}

impl Iterator for ReferenceProcess {
    type Item = ReferenceJump;

    fn next(&mut self) -> Option<ReferenceJump> {
        let j = next_reference_jump(&mut self.arrivals, &mut self.marks, self.lambda_max, self.t);
        self.t = j.tau;
        Some(j)
    }
}
