//! Reaction-network data model and mass-action kinetics.
//!
//! A network holds an ordered list of species, each either continuous (large
//! population, real-valued) or discrete (small population, integer-valued),
//! and an ordered list of reactions with reactant/product stoichiometry.
//! Species values live in a [`State`], split into the continuous block `x`
//! and the discrete block `sigma`; [`Slot`] maps a species onto its block.

mod parse;
mod partition;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::parse_network;
pub use partition::{diffusion_validity, partition_reactions, Partition, ValidityEntry};

/// Errors raised while building, parsing or partitioning a network.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undeclared species {name}")]
    UndeclaredSpecies { name: String },
    #[error("unknown parameter {name}")]
    UnknownParam { name: String },
    #[error("duplicate species {0}")]
    DuplicateSpecies(String),
    #[error("duplicate reaction id {0}")]
    DuplicateReaction(String),
    #[error("duplicate parameter {0}")]
    DuplicateParam(String),
    #[error("negative {what} for {name}: {value}")]
    Negative {
        what: &'static str,
        name: String,
        value: f64,
    },
    #[error("{what} for {name} is not finite")]
    NonFinite { what: &'static str, name: String },
    #[error("discrete species {name} needs an integer init, got {value}")]
    NonIntegerInit { name: String, value: f64 },
    #[error("reaction {0} has neither reactants nor products")]
    EmptyReaction(String),
    #[error("reaction {0} is marked diffusion but changes a discrete species")]
    DiffusionChangesDiscrete(String),
    #[error("unknown reaction id {0}")]
    UnknownReaction(String),
    #[error("h threshold must be positive, got {0}")]
    BadThreshold(f64),
    /// Carries the parse location of a semantic error found in the DSL.
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<NetworkError>,
    },
}

impl NetworkError {
    /// Strips any line annotation.
    pub fn root(&self) -> &NetworkError {
        match self {
            NetworkError::AtLine { source, .. } => source.root(),
            other => other,
        }
    }
}

/// A fired event that would drive a discrete count below zero.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("impossible event: reaction {reaction} would make {species} negative")]
pub struct ImpossibleEvent {
    pub reaction: String,
    pub species: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeciesKind {
    Continuous,
    Discrete,
}

impl fmt::Display for SpeciesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpeciesKind::Continuous => "continuous",
            SpeciesKind::Discrete => "discrete",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    pub kind: SpeciesKind,
    pub init: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupHint {
    #[default]
    Auto,
    Diffusion,
    Jump,
}

impl fmt::Display for GroupHint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupHint::Auto => "auto",
            GroupHint::Diffusion => "diffusion",
            GroupHint::Jump => "jump",
        })
    }
}

/// Rate constant, remembering the parameter it came from (if any).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub param: Option<String>,
}

impl Rate {
    pub fn literal(value: f64) -> Self {
        Rate { value, param: None }
    }
}

/// One mass-action reaction channel. Stoichiometry entries are
/// `(species index, coefficient)` pairs with distinct species and positive
/// coefficients, in order of first appearance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub id: String,
    pub reactants: Vec<(usize, u32)>,
    pub products: Vec<(usize, u32)>,
    pub rate: Rate,
    pub group: GroupHint,
}

impl Reaction {
    /// Net change of species `i` when this reaction fires.
    pub fn net_change(&self, species: usize) -> i64 {
        let get = |side: &[(usize, u32)]| {
            side.iter()
                .filter(|(s, _)| *s == species)
                .map(|(_, c)| i64::from(*c))
                .sum::<i64>()
        };
        get(&self.products) - get(&self.reactants)
    }
}

/// Where a species value lives inside a [`State`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    X(usize),
    Sigma(usize),
}

/// Compiled per-reaction data used by the hot loops.
#[derive(Debug, Clone)]
struct Kinetics {
    /// `(slot, order)` for each distinct reactant.
    reactants: Vec<(Slot, u32)>,
    /// Product of `1/order!` over reactants.
    norm: f64,
    /// Nonzero net changes.
    delta: Vec<(Slot, i64)>,
}

/// A validated reaction network.
#[derive(Debug, Clone)]
pub struct ReactionNetwork {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    params: Vec<(String, f64)>,
    slots: Vec<Slot>,
    n_x: usize,
    n_sigma: usize,
    kinetics: Vec<Kinetics>,
}

impl PartialEq for ReactionNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.species == other.species && self.reactions == other.reactions && self.params == other.params
    }
}

impl ReactionNetwork {
    /// Validates and compiles a network. Parameters are kept for
    /// serialization; rate values must already be resolved.
    pub fn new(
        species: Vec<Species>,
        reactions: Vec<Reaction>,
        params: Vec<(String, f64)>,
    ) -> Result<Self, NetworkError> {
        let mut seen = HashSet::new();
        for (name, value) in &params {
            if !seen.insert(name.as_str()) {
                return Err(NetworkError::DuplicateParam(name.clone()));
            }
            if !value.is_finite() {
                return Err(NetworkError::NonFinite {
                    what: "parameter",
                    name: name.clone(),
                });
            }
        }

        let mut seen = HashSet::new();
        let mut slots = Vec::with_capacity(species.len());
        let (mut n_x, mut n_sigma) = (0, 0);
        for sp in &species {
            if !seen.insert(sp.name.as_str()) {
                return Err(NetworkError::DuplicateSpecies(sp.name.clone()));
            }
            if !sp.init.is_finite() {
                return Err(NetworkError::NonFinite {
                    what: "init",
                    name: sp.name.clone(),
                });
            }
            if sp.init < 0.0 {
                return Err(NetworkError::Negative {
                    what: "init",
                    name: sp.name.clone(),
                    value: sp.init,
                });
            }
            match sp.kind {
                SpeciesKind::Continuous => {
                    slots.push(Slot::X(n_x));
                    n_x += 1;
                }
                SpeciesKind::Discrete => {
                    if sp.init.fract() != 0.0 {
                        return Err(NetworkError::NonIntegerInit {
                            name: sp.name.clone(),
                            value: sp.init,
                        });
                    }
                    slots.push(Slot::Sigma(n_sigma));
                    n_sigma += 1;
                }
            }
        }

        let mut ids = HashSet::new();
        let mut kinetics = Vec::with_capacity(reactions.len());
        for r in &reactions {
            if !ids.insert(r.id.as_str()) {
                return Err(NetworkError::DuplicateReaction(r.id.clone()));
            }
            if !r.rate.value.is_finite() {
                return Err(NetworkError::NonFinite {
                    what: "rate",
                    name: r.id.clone(),
                });
            }
            if r.rate.value < 0.0 {
                return Err(NetworkError::Negative {
                    what: "rate",
                    name: r.id.clone(),
                    value: r.rate.value,
                });
            }
            if r.reactants.is_empty() && r.products.is_empty() {
                return Err(NetworkError::EmptyReaction(r.id.clone()));
            }
            let mut touched = Vec::new();
            for &(s, _) in r.reactants.iter().chain(&r.products) {
                if s >= species.len() {
                    return Err(NetworkError::UndeclaredSpecies {
                        name: format!("#{s}"),
                    });
                }
                if !touched.contains(&s) {
                    touched.push(s);
                }
            }
            let mut norm = 1.0;
            for &(_, order) in &r.reactants {
                norm /= factorial(order);
            }
            kinetics.push(Kinetics {
                reactants: r.reactants.iter().map(|&(s, o)| (slots[s], o)).collect(),
                norm,
                delta: touched
                    .into_iter()
                    .map(|s| (slots[s], r.net_change(s)))
                    .filter(|&(_, d)| d != 0)
                    .collect(),
            });
        }

        Ok(ReactionNetwork {
            species,
            reactions,
            params,
            slots,
            n_x,
            n_sigma,
            kinetics,
        })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn n_continuous(&self) -> usize {
        self.n_x
    }

    pub fn n_discrete(&self) -> usize {
        self.n_sigma
    }

    pub fn slot(&self, species: usize) -> Slot {
        self.slots[species]
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn reaction_index(&self, id: &str) -> Option<usize> {
        self.reactions.iter().position(|r| r.id == id)
    }

    /// Nonzero net stoichiometry of reaction `r` as `(slot, change)`.
    pub fn net_stoichiometry(&self, r: usize) -> &[(Slot, i64)] {
        &self.kinetics[r].delta
    }

    /// Whether reaction `r` changes any discrete species.
    pub fn changes_discrete(&self, r: usize) -> bool {
        self.kinetics[r]
            .delta
            .iter()
            .any(|(slot, _)| matches!(slot, Slot::Sigma(_)))
    }

    /// The declared initial state at `t = 0`.
    pub fn initial_state(&self) -> State {
        let mut s = State::zeros(self.n_x, self.n_sigma);
        for (i, sp) in self.species.iter().enumerate() {
            match self.slots[i] {
                Slot::X(j) => s.x[j] = sp.init,
                Slot::Sigma(j) => s.sigma[j] = sp.init as i64,
            }
        }
        s
    }

    /// Number of distinct reactant combinations `h_r(s)`.
    ///
    /// Integer counts give `prod C(n_i, order_i)`. Continuous values use the
    /// falling factorial `x (x-1) ... (x-order+1) / order!`, which agrees with
    /// the binomial at integers, and is taken as zero below `x = order - 1`.
    /// Continuous values are clamped at zero first.
    pub fn combinatorial_weight(&self, r: usize, s: &State) -> f64 {
        let k = &self.kinetics[r];
        let mut w = k.norm;
        for &(slot, order) in &k.reactants {
            w *= falling_factorial(s.value(slot).max(0.0), order);
            if w == 0.0 {
                return 0.0;
            }
        }
        w
    }

    /// Reactant `(slot, order)` pairs of reaction `r` and the product of
    /// `1/order!` over them.
    pub(crate) fn kinetics(&self, r: usize) -> (&[(Slot, u32)], f64) {
        let k = &self.kinetics[r];
        (&k.reactants, k.norm)
    }

    /// Mass-action propensity `a_r(s) = k_r h_r(s)`.
    #[inline]
    pub fn propensity(&self, r: usize, s: &State) -> f64 {
        self.reactions[r].rate.value * self.combinatorial_weight(r, s)
    }

    /// Applies the full net stoichiometry of reaction `r` in place.
    /// The state is left untouched on error.
    pub fn fire(&self, r: usize, s: &mut State) -> Result<(), ImpossibleEvent> {
        let delta = &self.kinetics[r].delta;
        for &(slot, d) in delta {
            if let Slot::Sigma(j) = slot {
                if s.sigma[j] + d < 0 {
                    let species = self
                        .slots
                        .iter()
                        .position(|&sl| sl == slot)
                        .map(|i| self.species[i].name.clone())
                        .unwrap_or_default();
                    return Err(ImpossibleEvent {
                        reaction: self.reactions[r].id.clone(),
                        species,
                    });
                }
            }
        }
        for &(slot, d) in delta {
            match slot {
                Slot::X(j) => s.x[j] += d as f64,
                Slot::Sigma(j) => s.sigma[j] += d,
            }
        }
        Ok(())
    }

    /// Returns `s` advanced by one firing of reaction `r`.
    pub fn apply_stoichiometry(&self, s: &State, r: usize) -> Result<State, ImpossibleEvent> {
        let mut next = s.clone();
        self.fire(r, &mut next)?;
        Ok(next)
    }

    /// Species values in declaration order.
    pub fn values(&self, s: &State) -> Vec<f64> {
        self.slots.iter().map(|&slot| s.value(slot)).collect()
    }

    /// Builds a state from values in declaration order; discrete values are
    /// rounded.
    pub fn state_from_values(&self, t: f64, values: &[f64]) -> State {
        let mut s = State::zeros(self.n_x, self.n_sigma);
        s.t = t;
        for (&slot, &v) in self.slots.iter().zip(values) {
            match slot {
                Slot::X(j) => s.x[j] = v,
                Slot::Sigma(j) => s.sigma[j] = v.round() as i64,
            }
        }
        s
    }
}

/// Hybrid state: continuous block `x`, discrete block `sigma`, time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub x: Vec<f64>,
    pub sigma: Vec<i64>,
}

impl State {
    pub fn zeros(n_x: usize, n_sigma: usize) -> Self {
        State {
            t: 0.0,
            x: vec![0.0; n_x],
            sigma: vec![0; n_sigma],
        }
    }

    #[inline]
    pub fn value(&self, slot: Slot) -> f64 {
        match slot {
            Slot::X(j) => self.x[j],
            Slot::Sigma(j) => self.sigma[j] as f64,
        }
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

#[inline]
pub(crate) fn falling_factorial(x: f64, order: u32) -> f64 {
    match order {
        0 => 1.0,
        1 => x,
        _ => {
            if x < f64::from(order - 1) {
                return 0.0;
            }
            (0..order).map(|j| x - f64::from(j)).product()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(name: &str, kind: SpeciesKind, init: f64) -> Species {
        Species {
            name: name.into(),
            kind,
            init,
        }
    }

    fn rx(id: &str, reactants: &[(usize, u32)], products: &[(usize, u32)], k: f64) -> Reaction {
        Reaction {
            id: id.into(),
            reactants: reactants.to_vec(),
            products: products.to_vec(),
            rate: Rate::literal(k),
            group: GroupHint::Auto,
        }
    }

    fn dimer_net() -> ReactionNetwork {
        // S1 -> S2, 2 S2 -> 0
        ReactionNetwork::new(
            vec![
                sp("S1", SpeciesKind::Discrete, 7.0),
                sp("S2", SpeciesKind::Discrete, 5.0),
            ],
            vec![rx("r1", &[(0, 1)], &[(1, 1)], 1.0), rx("r2", &[(1, 2)], &[], 1.0)],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn weights_match_textbook_pair() {
        let net = dimer_net();
        let s = net.initial_state();
        assert_eq!(net.combinatorial_weight(0, &s), 7.0);
        assert_eq!(net.combinatorial_weight(1, &s), 10.0);
        let mut one = s.clone();
        one.sigma[1] = 1;
        assert_eq!(net.combinatorial_weight(1, &one), 0.0);
    }

    #[test]
    fn continuous_weight_is_falling_factorial() {
        let net = ReactionNetwork::new(
            vec![sp("X", SpeciesKind::Continuous, 10.0)],
            vec![rx("d", &[(0, 2)], &[], 1.0), rx("t", &[(0, 3)], &[], 1.0)],
            vec![],
        )
        .unwrap();
        let mut s = net.initial_state();
        assert_eq!(net.combinatorial_weight(0, &s), 45.0);
        s.x[0] = 2.5;
        assert!((net.combinatorial_weight(0, &s) - 2.5 * 1.5 / 2.0).abs() < 1e-12);
        s.x[0] = 0.5;
        assert_eq!(net.combinatorial_weight(0, &s), 0.0);
        assert_eq!(net.combinatorial_weight(1, &s), 0.0);
        s.x[0] = -3.0;
        assert_eq!(net.combinatorial_weight(0, &s), 0.0);
    }

    #[test]
    fn zero_state_has_zero_propensity() {
        let net = dimer_net();
        let s = State::zeros(0, 2);
        for r in 0..net.reactions().len() {
            assert_eq!(net.propensity(r, &s), 0.0);
        }
    }

    #[test]
    fn impossible_event_leaves_state_alone() {
        let net = ReactionNetwork::new(
            vec![sp("A", SpeciesKind::Discrete, 0.0)],
            vec![rx("r", &[(0, 1)], &[], 1.0)],
            vec![],
        )
        .unwrap();
        let s = net.initial_state();
        let err = net.apply_stoichiometry(&s, 0).unwrap_err();
        assert!(err.to_string().contains("impossible event"));
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let dup = ReactionNetwork::new(
            vec![
                sp("A", SpeciesKind::Discrete, 1.0),
                sp("A", SpeciesKind::Discrete, 1.0),
            ],
            vec![],
            vec![],
        );
        assert!(matches!(dup, Err(NetworkError::DuplicateSpecies(_))));
        let frac = ReactionNetwork::new(vec![sp("A", SpeciesKind::Discrete, 1.5)], vec![], vec![]);
        assert!(matches!(frac, Err(NetworkError::NonIntegerInit { .. })));
        let neg = ReactionNetwork::new(
            vec![sp("A", SpeciesKind::Continuous, 1.0)],
            vec![rx("r", &[(0, 1)], &[], -1.0)],
            vec![],
        );
        assert!(matches!(neg, Err(NetworkError::Negative { .. })));
    }

    #[test]
    fn catalyst_has_no_net_change() {
        // S1 -> S1 + 5 S3
        let net = ReactionNetwork::new(
            vec![
                sp("S1", SpeciesKind::Discrete, 1.0),
                sp("S3", SpeciesKind::Continuous, 1000.0),
            ],
            vec![rx("r3", &[(0, 1)], &[(0, 1), (1, 5)], 1.0)],
            vec![],
        )
        .unwrap();
        assert_eq!(net.net_stoichiometry(0), &[(Slot::X(0), 5)]);
        assert!(!net.changes_discrete(0));
    }
}
