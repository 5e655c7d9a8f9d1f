//! Diffusion channels flattened for the stepping loop.

use crate::network::{falling_factorial, Partition, ReactionNetwork, Slot, State};

/// Combinatorial weight of one channel. First-order terms, the common
/// case, skip the generic falling-factorial loop.
#[derive(Debug, Clone, PartialEq)]
enum Weight {
    Const,
    One(Slot),
    Two(Slot, Slot),
    General(Box<[(Slot, u32)]>),
}

#[inline(always)]
fn read(s: &State, slot: Slot) -> f64 {
    match slot {
        Slot::X(j) => s.x[j],
        Slot::Sigma(j) => s.sigma[j] as f64,
    }
    .max(0.0)
}

/// One reaction's propensity, precompiled.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Channel {
    rate: f64,
    norm: f64,
    weight: Weight,
    changes: Box<[(usize, f64)]>,
}

impl Channel {
    pub fn compile(net: &ReactionNetwork, partition: &Partition, r: usize) -> Self {
        let (terms, norm) = net.kinetics(r);
        let weight = match *terms {
            [] => Weight::Const,
            [(a, 1)] => Weight::One(a),
            [(a, 1), (b, 1)] => Weight::Two(a, b),
            _ => Weight::General(terms.into()),
        };
        Channel {
            rate: net.reactions()[r].rate.value,
            norm,
            weight,
            changes: partition.split(r).x.iter().map(|&(j, d)| (j, d as f64)).collect(),
        }
    }

    /// Same value as [`ReactionNetwork::propensity`], floored at zero.
    #[inline(always)]
    pub fn propensity(&self, s: &State) -> f64 {
        let w = match &self.weight {
            Weight::Const => self.norm,
            Weight::One(a) => self.norm * read(s, *a),
            Weight::Two(a, b) => self.norm * read(s, *a) * read(s, *b),
            Weight::General(terms) => {
                let mut w = self.norm;
                for &(slot, order) in terms.iter() {
                    w *= falling_factorial(read(s, slot), order);
                }
                w
            }
        };
        (self.rate * w).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DiffusionKernel {
    channels: Vec<Channel>,
    props: Vec<f64>,
}

impl DiffusionKernel {
    pub fn new(net: &ReactionNetwork, partition: &Partition) -> Self {
        let channels: Vec<Channel> = partition
            .diffusion()
            .iter()
            .map(|&r| Channel::compile(net, partition, r))
            .collect();
        let props = vec![0.0; channels.len()];
        DiffusionKernel { channels, props }
    }

    pub fn channels(&self) -> usize {
        self.channels.len()
    }

    /// Evaluates the channel propensities at `s`.
    #[inline]
    pub fn prepare(&mut self, s: &State) -> &[f64] {
        for (a, ch) in self.props.iter_mut().zip(&self.channels) {
            *a = ch.propensity(s);
        }
        &self.props
    }

    /// Euler–Maruyama update over `dt` with the propensities from the last
    /// [`Self::prepare`] and Wiener increments `dw`, then clamping at zero.
    /// Returns the number of clamped components.
    #[inline]
    pub fn apply(&self, s: &mut State, dt: f64, dw: &[f64]) -> u64 {
        for ((ch, &a), &w) in self.channels.iter().zip(&self.props).zip(dw) {
            if a > 0.0 {
                let count = a * dt + a.sqrt() * w;
                for &(j, d) in ch.changes.iter() {
                    s.x[j] += d * count;
                }
            }
        }
        let mut clamps = 0;
        for x in &mut s.x {
            if *x < 0.0 {
                *x = 0.0;
                clamps += 1;
            }
        }
        clamps
    }

    pub fn step(&mut self, s: &mut State, dt: f64, dw: &[f64]) -> u64 {
        self.prepare(s);
        self.apply(s, dt, dw)
    }
}
