use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::exact::ssa_simulate;
use crate::hybrid::{hybrid_simulate, HybridConfig};
use crate::network::{Partition, ReactionNetwork, State};
use crate::rng::{Stream, StreamSeed};
use crate::trajectory::{Diagnostics, SampleGrid, SimError, Trajectory};

/// Which engine an ensemble runs, with its settings.
#[derive(Debug, Clone)]
pub enum EngineSpec {
    Ssa,
    Hybrid {
        partition: Partition,
        config: HybridConfig,
    },
    /// Hybrid engine on a partition without jump reactions.
    DiffusionOnly {
        partition: Partition,
        config: HybridConfig,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Ssa,
    Hybrid,
    DiffusionOnly,
}

impl EngineSpec {
    pub fn kind(&self) -> EngineKind {
        match self {
            EngineSpec::Ssa => EngineKind::Ssa,
            EngineSpec::Hybrid { .. } => EngineKind::Hybrid,
            EngineSpec::DiffusionOnly { .. } => EngineKind::DiffusionOnly,
        }
    }

    fn hybrid_config(&self) -> Option<&HybridConfig> {
        match self {
            EngineSpec::Ssa => None,
            EngineSpec::Hybrid { config, .. } | EngineSpec::DiffusionOnly { config, .. } => Some(config),
        }
    }
}

/// Runs one replicate of `engine` up to `t_max` with the streams of `seed`.
/// The `t_max` of a hybrid config is replaced by the argument.
pub fn simulate_replicate(
    net: &ReactionNetwork,
    engine: &EngineSpec,
    s0: &State,
    t_max: f64,
    grid: &SampleGrid,
    seed: StreamSeed,
    record_events: bool,
) -> Result<Trajectory, SimError> {
    match engine {
        EngineSpec::Ssa => {
            let mut rng = seed.rng(Stream::Ssa);
            ssa_simulate(net, s0, t_max, grid, record_events, &mut rng)
        }
        EngineSpec::Hybrid { partition, config } => {
            let config = HybridConfig { t_max, ..*config };
            hybrid_simulate(net, partition, s0, &config, grid, seed, record_events)
        }
        EngineSpec::DiffusionOnly { partition, config } => {
            if !partition.jump().is_empty() {
                return Err(SimError::Config(format!(
                    "diffusion-only engine with jump reactions {:?}",
                    partition.jump_ids()
                )));
            }
            let config = HybridConfig { t_max, ..*config };
            hybrid_simulate(net, partition, s0, &config, grid, seed, record_events)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateFailure {
    pub replicate: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub h: Option<f64>,
    pub lambda_max: Option<f64>,
    pub seed: u64,
    pub replicates: usize,
    pub parallelism: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub engine: EngineKind,
    pub t_max: f64,
    /// Final states of the successful replicates, in replicate order.
    pub final_states: Vec<State>,
    /// Replicate index of each entry of `final_states`.
    pub replicate_ids: Vec<u64>,
    pub failures: Vec<ReplicateFailure>,
    /// Seconds for the whole batch.
    pub wall_time: f64,
    pub config: EnsembleConfig,
    /// Counters summed over successful replicates; `lambda_max_used` is
    /// the largest value any replicate needed.
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesStats {
    pub name: String,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub engine: EngineKind,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub replicates: usize,
    pub failed: usize,
    pub species: Vec<SpeciesStats>,
    pub wall_time: f64,
}

impl EnsembleResult {
    /// Final values of one species across replicates.
    pub fn species_values(&self, net: &ReactionNetwork, species: usize) -> Vec<f64> {
        let slot = net.slot(species);
        self.final_states.iter().map(|s| s.value(slot)).collect()
    }

    pub fn stats(&self, net: &ReactionNetwork) -> EnsembleStats {
        let species = net
            .species()
            .iter()
            .enumerate()
            .map(|(i, sp)| {
                let v = self.species_values(net, i);
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let variance = if v.len() > 1 {
                    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                SpeciesStats {
                    name: sp.name.clone(),
                    mean,
                    variance,
                }
            })
            .collect();
        EnsembleStats {
            engine: self.engine,
            t_max: self.t_max,
            replicates: self.final_states.len(),
            failed: self.failures.len(),
            species,
            wall_time: self.wall_time,
        }
    }
}

pub(crate) fn thread_pool(parallelism: usize) -> Result<rayon::ThreadPool, SimError> {
    if parallelism == 0 {
        return Err(SimError::Config("parallelism must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| SimError::Config(format!("thread pool: {e}")))
}

/// Runs `replicates` independent replicates to `t_max`, replicate `i`
/// using the streams of `StreamSeed::new(master_seed, i)`.
///
/// Failed replicates are listed in the result; the batch only fails when
/// more than 1% of the replicates fail.
pub fn run_ensemble(
    net: &ReactionNetwork,
    engine: &EngineSpec,
    s0: &State,
    t_max: f64,
    replicates: usize,
    master_seed: u64,
    parallelism: usize,
) -> Result<EnsembleResult, SimError> {
    if replicates == 0 {
        return Err(SimError::Config("replicates must be at least 1".into()));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(SimError::Config(format!(
            "T must be positive and finite, got {t_max}"
        )));
    }
    if let Some(config) = engine.hybrid_config() {
        HybridConfig { t_max, ..*config }.validate()?;
    }
    let pool = thread_pool(parallelism)?;
    let grid = SampleGrid::final_only(t_max);

    let start = Instant::now();
    let outcomes: Vec<Result<(State, Diagnostics), SimError>> = pool.install(|| {
        (0..replicates as u64)
            .into_par_iter()
            .map(|i| {
                let seed = StreamSeed::new(master_seed, i);
                simulate_replicate(net, engine, s0, t_max, &grid, seed, false)
                    .map(|traj| (traj.final_state().clone(), traj.diagnostics))
            })
            .collect()
    });
    let wall_time = start.elapsed().as_secs_f64();

    let mut final_states = Vec::with_capacity(replicates);
    let mut replicate_ids = Vec::with_capacity(replicates);
    let mut failures = Vec::new();
    let mut diagnostics = Diagnostics::new(net.reactions().len());
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok((state, d)) => {
                for (acc, e) in diagnostics
                    .events_per_reaction
                    .iter_mut()
                    .zip(&d.events_per_reaction)
                {
                    *acc += e;
                }
                diagnostics.thinned += d.thinned;
                diagnostics.clamps += d.clamps;
                diagnostics.retries += d.retries;
                diagnostics.lambda_max_used = match (diagnostics.lambda_max_used, d.lambda_max_used) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
                final_states.push(state);
                replicate_ids.push(i as u64);
            }
            Err(e) => failures.push(ReplicateFailure {
                replicate: i as u64,
                error: e.to_string(),
            }),
        }
    }
    if failures.len() * 100 > replicates {
        return Err(SimError::BatchFailed {
            failed: failures.len(),
            total: replicates,
            first: failures[0].error.clone(),
        });
    }

    let config = engine.hybrid_config();
    Ok(EnsembleResult {
        engine: engine.kind(),
        t_max,
        final_states,
        replicate_ids,
        failures,
        wall_time,
        config: EnsembleConfig {
            h: config.map(|c| c.h),
            lambda_max: config.map(|c| c.lambda_max),
            seed: master_seed,
            replicates,
            parallelism,
        },
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::LambdaPolicy;
    use crate::network::parse_network;

    fn gene_burst() -> (ReactionNetwork, Partition) {
        let net = parse_network(crate::GENE_BURST).unwrap();
        let p = Partition::with_diffusion_ids(&net, &["r4", "r5"]).unwrap();
        (net, p)
    }

    #[test]
    fn single_replicate_matches_direct_call() {
        let (net, p) = gene_burst();
        let config = HybridConfig::new(0.1, 1.5, 20.0).unwrap();
        let engine = EngineSpec::Hybrid {
            partition: p.clone(),
            config,
        };
        let s0 = net.initial_state();
        let res = run_ensemble(&net, &engine, &s0, 20.0, 1, 5, 1).unwrap();
        let direct = hybrid_simulate(
            &net,
            &p,
            &s0,
            &config,
            &SampleGrid::final_only(20.0),
            StreamSeed::new(5, 0),
            false,
        )
        .unwrap();
        assert_eq!(res.final_states, vec![direct.final_state().clone()]);

        let res = run_ensemble(&net, &EngineSpec::Ssa, &s0, 20.0, 1, 5, 1).unwrap();
        let mut rng = StreamSeed::new(5, 0).rng(Stream::Ssa);
        let direct = ssa_simulate(&net, &s0, 20.0, &SampleGrid::final_only(20.0), false, &mut rng).unwrap();
        assert_eq!(res.final_states, vec![direct.final_state().clone()]);
    }

    #[test]
    fn independent_of_parallelism() {
        let (net, p) = gene_burst();
        let config = HybridConfig::new(0.5, 1.5, 50.0).unwrap();
        let engine = EngineSpec::Hybrid { partition: p, config };
        let s0 = net.initial_state();
        let a = run_ensemble(&net, &engine, &s0, 50.0, 40, 9, 1).unwrap();
        let b = run_ensemble(&net, &engine, &s0, 50.0, 40, 9, 4).unwrap();
        assert_eq!(a.final_states, b.final_states);
        assert_eq!(a.diagnostics, b.diagnostics);
        assert!(a.final_states.iter().all(|s| s.t == 50.0));
    }

    #[test]
    fn failures_are_aggregated() {
        let (net, p) = gene_burst();
        let s0 = net.initial_state();
        // lambda_max below the initial jump propensity: every replicate fails
        let config = HybridConfig::new(0.1, 1.0, 10.0).unwrap();
        let engine = EngineSpec::Hybrid {
            partition: p.clone(),
            config,
        };
        let err = run_ensemble(&net, &engine, &s0, 10.0, 10, 1, 1).unwrap_err();
        assert!(matches!(
            err,
            SimError::BatchFailed {
                failed: 10,
                total: 10,
                ..
            }
        ));
        let engine = EngineSpec::Hybrid {
            partition: p,
            config: config.with_policy(LambdaPolicy::RetryDoubled),
        };
        let res = run_ensemble(&net, &engine, &s0, 10.0, 10, 1, 1).unwrap();
        assert!(res.failures.is_empty());
        assert_eq!(res.diagnostics.retries, 10);
    }

    #[test]
    fn diffusion_only_rejects_jumps() {
        let (net, p) = gene_burst();
        let config = HybridConfig::new(0.1, 1.5, 1.0).unwrap();
        let engine = EngineSpec::DiffusionOnly { partition: p, config };
        let err = run_ensemble(&net, &engine, &net.initial_state(), 1.0, 100, 1, 1).unwrap_err();
        assert!(matches!(err, SimError::BatchFailed { .. }));
        assert!(run_ensemble(&net, &EngineSpec::Ssa, &net.initial_state(), 1.0, 0, 1, 1).is_err());
    }

    #[test]
    fn stats_per_species() {
        let net = parse_network("species A discrete init=3\nreaction r: A -> 0 rate=0").unwrap();
        let res = run_ensemble(&net, &EngineSpec::Ssa, &net.initial_state(), 1.0, 5, 0, 1).unwrap();
        let stats = res.stats(&net);
        assert_eq!(stats.species[0].mean, 3.0);
        assert_eq!(stats.species[0].variance, 0.0);
        assert_eq!(stats.replicates, 5);
    }
}
