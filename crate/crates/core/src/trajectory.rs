//! Sampled paths and run diagnostics.

use serde::Serialize;
use thiserror::Error;

use crate::network::{ImpossibleEvent, State};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Impossible(#[from] ImpossibleEvent),
    #[error("intensity bound exceeded at t={t}: jump propensity {total} > lambda_max {lambda_max}")]
    IntensityBound {
        t: f64,
        total: f64,
        lambda_max: f64,
        state: State,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("state space of {states} states exceeds the limit of {limit}")]
    StateSpaceTooLarge { states: u128, limit: usize },
    #[error("state cap too small: probability leakage {leakage} exceeds {tolerance}")]
    CapTooSmall { leakage: f64, tolerance: f64 },
    #[error("{failed} of {total} replicates failed (more than 1%); first: {first}")]
    BatchFailed {
        failed: usize,
        total: usize,
        first: String,
    },
}

/// Sorted sample times in `[0, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid(Vec<f64>);

impl SampleGrid {
    pub fn new(mut times: Vec<f64>, t_max: f64) -> Result<Self, SimError> {
        if times.iter().any(|t| !t.is_finite() || *t < 0.0 || *t > t_max) {
            return Err(SimError::Config(format!("sample times must lie in [0, {t_max}]")));
        }
        times.sort_by(f64::total_cmp);
        times.dedup();
        Ok(SampleGrid(times))
    }

    /// `0, dt, 2 dt, ...` up to and including `t_max`.
    pub fn uniform(dt: f64, t_max: f64) -> Result<Self, SimError> {
        if !(dt > 0.0) {
            return Err(SimError::Config(format!(
                "sample step must be positive, got {dt}"
            )));
        }
        let n = (t_max / dt + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        if times.last().is_some_and(|&t| t_max - t > 1e-9 * t_max) {
            times.push(t_max);
        }
        if let Some(last) = times.last_mut() {
            *last = last.min(t_max);
        }
        SampleGrid::new(times, t_max)
    }

    /// Only the final time.
    pub fn final_only(t_max: f64) -> Self {
        SampleGrid(vec![t_max])
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }
}

/// Counters collected along a path.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub events_per_reaction: Vec<u64>,
    pub thinned: u64,
    pub clamps: u64,
    pub retries: u32,
    pub lambda_max_used: Option<f64>,
}

impl Diagnostics {
    pub fn new(n_reactions: usize) -> Self {
        Diagnostics {
            events_per_reaction: vec![0; n_reactions],
            ..Default::default()
        }
    }

    pub fn events(&self) -> u64 {
        self.events_per_reaction.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Starts with the initial state at `t = 0`; times strictly increase.
    pub samples: Vec<State>,
    /// `(time, reaction index)` of every fired event, if requested.
    pub events: Option<Vec<(f64, usize)>>,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.samples.last().expect("trajectory has an initial sample")
    }
}

/// Records grid samples as a path is advanced.
pub(crate) struct Sampler<'a> {
    times: &'a [f64],
    next: usize,
    pub samples: Vec<State>,
}

impl<'a> Sampler<'a> {
    pub fn new(grid: &'a SampleGrid, s0: &State) -> Self {
        let times = grid.times();
        let mut samples = Vec::with_capacity(times.len() + 1);
        samples.push(State { t: 0.0, ..s0.clone() });
        let next = times.iter().take_while(|&&t| t <= 0.0).count();
        Sampler { times, next, samples }
    }

    /// Records `current` at every pending sample time `< until`.
    #[inline]
    pub fn record_before(&mut self, until: f64, current: &State) {
        while self.next < self.times.len() && self.times[self.next] < until {
            self.push(current);
        }
    }

    /// Records `current` at every pending sample time `<= until`.
    pub fn record_through(&mut self, until: f64, current: &State) {
        while self.next < self.times.len() && self.times[self.next] <= until {
            self.push(current);
        }
    }

    fn push(&mut self, current: &State) {
        let t = self.times[self.next];
        self.samples.push(State { t, ..current.clone() });
        self.next += 1;
    }
}
