//! Exact stochastic simulation (Gillespie direct method).
//!
//! Every reaction is treated as a discrete event regardless of species kind;
//! continuous species are carried as integral reals. This is the reference
//! the hybrid engine is measured against.

mod cme;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::network::{ReactionNetwork, State};
use crate::trajectory::{Diagnostics, SampleGrid, Sampler, SimError, Trajectory};

pub use cme::{cme_distribution, CmeDistribution};

/// Result of one direct-method step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SsaStep {
    Fired {
        dt: f64,
        reaction: usize,
    },
    /// Every propensity is zero; nothing can happen any more.
    Exhausted,
}

/// Fills `props` with all propensities and returns their sum.
#[inline]
fn fill_propensities(net: &ReactionNetwork, s: &State, props: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for (r, a) in props.iter_mut().enumerate() {
        *a = net.propensity(r, s);
        total += *a;
    }
    total
}

#[inline]
fn draw<R: Rng + ?Sized>(props: &[f64], total: f64, rng: &mut R) -> SsaStep {
    if !(total > 0.0) {
        return SsaStep::Exhausted;
    }
    let e: f64 = Exp1.sample(rng);
    let dt = e / total;
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_live = 0;
    for (r, &a) in props.iter().enumerate() {
        if a > 0.0 {
            acc += a;
            last_live = r;
            if target < acc {
                return SsaStep::Fired { dt, reaction: r };
            }
        }
    }
    // Rounding can leave `target` a hair above the running sum.
    SsaStep::Fired {
        dt,
        reaction: last_live,
    }
}

/// Samples the waiting time to the next event and which channel fires.
pub fn ssa_step<R: Rng + ?Sized>(net: &ReactionNetwork, s: &State, rng: &mut R) -> SsaStep {
    let mut props = vec![0.0; net.reactions().len()];
    let total = fill_propensities(net, s, &mut props);
    draw(&props, total, rng)
}

/// Runs the direct method from `s0` until `t_max` or exhaustion.
///
/// Samples follow the right-continuous convention: the value at a grid time
/// includes any event at exactly that time.
pub fn ssa_simulate<R: Rng + ?Sized>(
    net: &ReactionNetwork,
    s0: &State,
    t_max: f64,
    grid: &SampleGrid,
    record_events: bool,
    rng: &mut R,
) -> Result<Trajectory, SimError> {
    if !(t_max > 0.0) {
        return Err(SimError::Config(format!("t_max must be positive, got {t_max}")));
    }
    let mut s = State { t: 0.0, ..s0.clone() };
    let mut sampler = Sampler::new(grid, &s);
    let mut diagnostics = Diagnostics::new(net.reactions().len());
    let mut events = record_events.then(Vec::new);
    let mut props = vec![0.0; net.reactions().len()];

    loop {
        let total = fill_propensities(net, &s, &mut props);
        let SsaStep::Fired { dt, reaction } = draw(&props, total, rng) else {
            break;
        };
        let t_next = s.t + dt;
        if t_next > t_max {
            break;
        }
        sampler.record_before(t_next, &s);
        net.fire(reaction, &mut s)?;
        s.t = t_next;
        diagnostics.events_per_reaction[reaction] += 1;
        if let Some(ev) = events.as_mut() {
            ev.push((t_next, reaction));
        }
    }
    sampler.record_through(t_max, &s);

    Ok(Trajectory {
        samples: sampler.samples,
        events,
        diagnostics,
    })
}
