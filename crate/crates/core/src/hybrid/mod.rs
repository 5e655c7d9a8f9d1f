//! Hybrid jump-diffusion propagation.
//!
//! Reactions in the diffusion set move the continuous species through an
//! Euler–Maruyama step, `X += nu^X (a dt + sqrt(a) dW)`. Reactions in the
//! jump set are driven by thinning a homogeneous reference Poisson process
//! of intensity `lambda_max`. The stepping grid is the equidistant grid of
//! step `h` merged with the reference arrivals; at an arrival the diffusion
//! is first advanced to the arrival time, then the mark is classified
//! against the propensities of the post-diffusion state.

mod grid;
mod kernel;
mod marks;
mod noise;

use serde::{Deserialize, Serialize};

use crate::network::{Partition, ReactionNetwork, State};
use crate::rng::StreamSeed;
use crate::trajectory::{Diagnostics, SampleGrid, Sampler, SimError, Trajectory};
use kernel::DiffusionKernel;

pub use grid::{merged_grid, GridPoint, MergedGrid};
pub use marks::{
    classify_mark, mark_layout, next_reference_jump, MarkLayout, MarkOutcome, ReferenceJump, ReferenceProcess,
};
pub use noise::{CoupledWiener, IndependentWiener, WienerSource, ZeroNoise};

/// What to do when the jump propensity outgrows `lambda_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaPolicy {
    #[default]
    Fail,
    /// Restart the replicate from `t = 0` with `lambda_max` doubled and
    /// fresh random streams.
    RetryDoubled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampPolicy {
    /// Negative continuous values are set to zero and counted.
    #[default]
    ClampZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    #[default]
    Wiener,
    /// Drift only; the diffusion channels integrate their mean.
    Off,
}

/// Upper limit on `retry_doubled` restarts of a single replicate.
pub const MAX_RETRIES: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub h: f64,
    pub lambda_max: f64,
    pub t_max: f64,
    pub lambda_policy: LambdaPolicy,
    pub clamp_policy: ClampPolicy,
    pub noise: NoiseMode,
}

impl HybridConfig {
    pub fn new(h: f64, lambda_max: f64, t_max: f64) -> Result<Self, SimError> {
        let cfg = HybridConfig {
            h,
            lambda_max,
            t_max,
            lambda_policy: LambdaPolicy::Fail,
            clamp_policy: ClampPolicy::ClampZero,
            noise: NoiseMode::Wiener,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_policy(mut self, policy: LambdaPolicy) -> Self {
        self.lambda_policy = policy;
        self
    }

    pub fn with_noise(mut self, noise: NoiseMode) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("h", self.h),
            ("lambda_max", self.lambda_max),
            ("t_max", self.t_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SimError::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One Euler–Maruyama step of the diffusion channels; returns the new state
/// and the number of components clamped at zero. Discrete species and time
/// are left unchanged.
pub fn diffusion_step(
    net: &ReactionNetwork,
    partition: &Partition,
    s: &State,
    dt: f64,
    dw: &[f64],
) -> (State, u64) {
    assert_eq!(
        dw.len(),
        partition.diffusion().len(),
        "one increment per diffusion channel"
    );
    let mut next = s.clone();
    let clamps = DiffusionKernel::new(net, partition).step(&mut next, dt, dw);
    (next, clamps)
}

/// Classifies mark `z` against `layout` (computed at `s_minus`) and fires
/// the selected reaction with its full stoichiometry.
pub fn jump_step(
    net: &ReactionNetwork,
    s_minus: &State,
    z: f64,
    layout: &MarkLayout,
) -> Result<(State, MarkOutcome), SimError> {
    let outcome = layout.classify(z);
    let mut next = s_minus.clone();
    if let MarkOutcome::Fire(r) = outcome {
        net.fire(r, &mut next)?;
    }
    Ok((next, outcome))
}

/// Runs one hybrid path with explicit noise sources.
///
/// `reference` may be `None` only when the partition has no jump reactions.
/// The value recorded at a sample time is the state at the latest stepping
/// point not after it.
pub fn hybrid_path<W: WienerSource>(
    net: &ReactionNetwork,
    partition: &Partition,
    s0: &State,
    h: f64,
    t_max: f64,
    reference: Option<ReferenceProcess>,
    noise: &mut W,
    grid: &SampleGrid,
    record_events: bool,
) -> Result<Trajectory, SimError> {
    if !partition.jump().is_empty() && reference.is_none() {
        return Err(SimError::Config("jump reactions need a reference process".into()));
    }
    let lambda_max = reference.as_ref().map(ReferenceProcess::lambda_max);
    let mut run = PathRun::new(net, partition, s0, grid, lambda_max, record_events);
    match reference.filter(|_| !partition.jump().is_empty()) {
        Some(process) => run.advance(h, t_max, process.map(|j| (j.tau, j)), noise)?,
        None => run.advance(h, t_max, std::iter::empty(), noise)?,
    }
    Ok(run.finish(t_max))
}

/// Mutable state of one path while it is being stepped.
struct PathRun<'a> {
    net: &'a ReactionNetwork,
    s: State,
    sampler: Sampler<'a>,
    diagnostics: Diagnostics,
    events: Option<Vec<(f64, usize)>>,
    layout: MarkLayout,
    kernel: DiffusionKernel,
    dw: Vec<f64>,
}

impl<'a> PathRun<'a> {
    fn new(
        net: &'a ReactionNetwork,
        partition: &Partition,
        s0: &State,
        grid: &'a SampleGrid,
        lambda_max: Option<f64>,
        record_events: bool,
    ) -> Self {
        let s = State { t: 0.0, ..s0.clone() };
        let sampler = Sampler::new(grid, &s);
        let mut diagnostics = Diagnostics::new(net.reactions().len());
        diagnostics.lambda_max_used = lambda_max;
        let kernel = DiffusionKernel::new(net, partition);
        PathRun {
            net,
            s,
            sampler,
            diagnostics,
            events: record_events.then(Vec::new),
            layout: MarkLayout::empty(net, partition, lambda_max.unwrap_or(0.0)),
            dw: vec![0.0; kernel.channels()],
            kernel,
        }
    }

    fn advance<I, W>(&mut self, h: f64, t_max: f64, arrivals: I, noise: &mut W) -> Result<(), SimError>
    where
        I: Iterator<Item = (f64, ReferenceJump)>,
        W: WienerSource,
    {
        let diffuse = self.kernel.channels() > 0;
        let mut t_prev = 0.0;
        for point in MergedGrid::new(0.0, t_max, h, arrivals) {
            if point.t > t_prev {
                self.sampler.record_before(point.t, &self.s);
                if diffuse {
                    let props = self.kernel.prepare(&self.s);
                    noise.active_increments(t_prev, point.t, props, &mut self.dw);
                    self.diagnostics.clamps += self.kernel.apply(&mut self.s, point.t - t_prev, &self.dw);
                }
                self.s.t = point.t;
                t_prev = point.t;
            }
            if let Some(jump) = point.jump {
                self.jump(jump.z)?;
            }
        }
        Ok(())
    }

    fn jump(&mut self, z: f64) -> Result<(), SimError> {
        self.layout.update(&self.s)?;
        match self.layout.classify(z) {
            MarkOutcome::Fire(r) => {
                self.net.fire(r, &mut self.s)?;
                self.diagnostics.events_per_reaction[r] += 1;
                if let Some(ev) = self.events.as_mut() {
                    ev.push((self.s.t, r));
                }
            }
            MarkOutcome::Thinned => self.diagnostics.thinned += 1,
        }
        Ok(())
    }

    fn finish(mut self, t_max: f64) -> Trajectory {
        self.sampler.record_through(t_max, &self.s);
        Trajectory {
            samples: self.sampler.samples,
            events: self.events,
            diagnostics: self.diagnostics,
        }
    }
}

/// Simulates one replicate with the standard random streams of `seed`,
/// applying the configured `lambda_max` violation policy.
pub fn hybrid_simulate(
    net: &ReactionNetwork,
    partition: &Partition,
    s0: &State,
    config: &HybridConfig,
    grid: &SampleGrid,
    seed: StreamSeed,
    record_events: bool,
) -> Result<Trajectory, SimError> {
    config.validate()?;
    let mut lambda_max = config.lambda_max;
    let mut attempt = 0;
    loop {
        let seed = seed.with_attempt(attempt);
        let reference = Some(ReferenceProcess::new(seed, lambda_max));
        let result = match config.noise {
            NoiseMode::Wiener => {
                let mut noise = IndependentWiener::new(seed, partition);
                hybrid_path(
                    net,
                    partition,
                    s0,
                    config.h,
                    config.t_max,
                    reference,
                    &mut noise,
                    grid,
                    record_events,
                )
            }
            NoiseMode::Off => hybrid_path(
                net,
                partition,
                s0,
                config.h,
                config.t_max,
                reference,
                &mut ZeroNoise,
                grid,
                record_events,
            ),
        };
        match result {
            Ok(mut traj) => {
                traj.diagnostics.retries = attempt;
                return Ok(traj);
            }
            Err(SimError::IntensityBound { .. })
                if config.lambda_policy == LambdaPolicy::RetryDoubled && attempt < MAX_RETRIES =>
            {
                attempt += 1;
                lambda_max *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
}
