//! Split of reactions into diffusion channels and jump channels.

use serde::Serialize;

use super::{GroupHint, NetworkError, ReactionNetwork, Slot, State};

/// Per-reaction stoichiometry split into the continuous and discrete blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitStoichiometry {
    /// `(x index, change)`
    pub x: Vec<(usize, i64)>,
    /// `(sigma index, change)`
    pub sigma: Vec<(usize, i64)>,
}

/// Reactions approximated by diffusion (`R1`) and reactions simulated as
/// jumps (`R_d`). The two sets are disjoint and cover the network; jump
/// order fixes the layout of the mark space.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    diffusion: Vec<usize>,
    jump: Vec<usize>,
    split: Vec<SplitStoichiometry>,
    ids: Vec<String>,
}

impl Partition {
    /// Builds a partition from an explicit diffusion set; everything else
    /// becomes a jump reaction, in network order.
    pub fn with_diffusion(net: &ReactionNetwork, diffusion: &[usize]) -> Result<Self, NetworkError> {
        let n = net.reactions().len();
        let mut in_r1 = vec![false; n];
        for &r in diffusion {
            if r >= n {
                return Err(NetworkError::UnknownReaction(format!("#{r}")));
            }
            if net.changes_discrete(r) {
                return Err(NetworkError::DiffusionChangesDiscrete(
                    net.reactions()[r].id.clone(),
                ));
            }
            in_r1[r] = true;
        }
        let split = (0..n)
            .map(|r| {
                let mut s = SplitStoichiometry {
                    x: Vec::new(),
                    sigma: Vec::new(),
                };
                for &(slot, d) in net.net_stoichiometry(r) {
                    match slot {
                        Slot::X(j) => s.x.push((j, d)),
                        Slot::Sigma(j) => s.sigma.push((j, d)),
                    }
                }
                s
            })
            .collect();
        Ok(Partition {
            diffusion: (0..n).filter(|&r| in_r1[r]).collect(),
            jump: (0..n).filter(|&r| !in_r1[r]).collect(),
            split,
            ids: net.reactions().iter().map(|r| r.id.clone()).collect(),
        })
    }

    /// Same as [`Partition::with_diffusion`], naming reactions by id.
    pub fn with_diffusion_ids(net: &ReactionNetwork, ids: &[&str]) -> Result<Self, NetworkError> {
        let idx = ids
            .iter()
            .map(|id| {
                net.reaction_index(id)
                    .ok_or_else(|| NetworkError::UnknownReaction((*id).to_owned()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::with_diffusion(net, &idx)
    }

    /// Reaction indices in the diffusion set, ascending.
    pub fn diffusion(&self) -> &[usize] {
        &self.diffusion
    }

    /// Reaction indices in the jump set, in mark-layout order.
    pub fn jump(&self) -> &[usize] {
        &self.jump
    }

    pub fn split(&self, r: usize) -> &SplitStoichiometry {
        &self.split[r]
    }

    pub fn diffusion_ids(&self) -> Vec<&str> {
        self.diffusion.iter().map(|&r| self.ids[r].as_str()).collect()
    }

    pub fn jump_ids(&self) -> Vec<&str> {
        self.jump.iter().map(|&r| self.ids[r].as_str()).collect()
    }

    pub fn is_diffusion(&self, r: usize) -> bool {
        self.diffusion.binary_search(&r).is_ok()
    }
}

/// Assigns reactions to the diffusion or jump set.
///
/// Hints are honoured; `auto` reactions go to the diffusion set iff they
/// leave discrete species unchanged and `h_r(probe) >= h_threshold`.
pub fn partition_reactions(
    net: &ReactionNetwork,
    h_threshold: f64,
    probe: &State,
) -> Result<Partition, NetworkError> {
    if !(h_threshold > 0.0) {
        return Err(NetworkError::BadThreshold(h_threshold));
    }
    let mut diffusion = Vec::new();
    for (r, reaction) in net.reactions().iter().enumerate() {
        let discrete = net.changes_discrete(r);
        let to_r1 = match reaction.group {
            GroupHint::Diffusion if discrete => {
                return Err(NetworkError::DiffusionChangesDiscrete(reaction.id.clone()))
            }
            GroupHint::Diffusion => true,
            GroupHint::Jump => false,
            GroupHint::Auto => !discrete && net.combinatorial_weight(r, probe) >= h_threshold,
        };
        if to_r1 {
            diffusion.push(r);
        }
    }
    Partition::with_diffusion(net, &diffusion)
}

/// One diffusion reaction's weight at the checked state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityEntry {
    pub reaction: String,
    pub weight: f64,
    pub pass: bool,
}

/// Reports `h_r(s)` for every diffusion reaction, flagging those below
/// `h_min`, where the Gaussian approximation of the event counter degrades.
pub fn diffusion_validity(
    net: &ReactionNetwork,
    partition: &Partition,
    s: &State,
    h_min: f64,
) -> Vec<ValidityEntry> {
    partition
        .diffusion()
        .iter()
        .map(|&r| {
            let weight = net.combinatorial_weight(r, s);
            ValidityEntry {
                reaction: net.reactions()[r].id.clone(),
                weight,
                pass: weight >= h_min,
            }
        })
        .collect()
}
