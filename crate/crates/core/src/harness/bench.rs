use serde::Serialize;

use crate::hybrid::HybridConfig;
use crate::network::{Partition, ReactionNetwork, State};
use crate::trajectory::SimError;

use super::ensemble::{run_ensemble, EngineSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub h: f64,
    pub t_ssa: f64,
    pub t_hybrid: f64,
    pub ratio: f64,
}

/// Wall-clock comparison of exact and hybrid ensembles of equal size. The
/// exact ensemble is timed once and shared by every row.
pub fn speedup_benchmark(
    net: &ReactionNetwork,
    partition: &Partition,
    s0: &State,
    t_max: f64,
    h_list: &[f64],
    base: &HybridConfig,
    replicates: usize,
    master_seed: u64,
    parallelism: usize,
) -> Result<Vec<BenchRow>, SimError> {
    if replicates == 0 {
        return Err(SimError::Config("replicates must be at least 1".into()));
    }
    if h_list.is_empty() {
        return Err(SimError::Config("empty step list".into()));
    }
    let ssa = run_ensemble(
        net,
        &EngineSpec::Ssa,
        s0,
        t_max,
        replicates,
        master_seed,
        parallelism,
    )?;
    h_list
        .iter()
        .map(|&h| {
            let engine = EngineSpec::Hybrid {
                partition: partition.clone(),
                config: HybridConfig { h, t_max, ..*base },
            };
            let hybrid = run_ensemble(net, &engine, s0, t_max, replicates, master_seed, parallelism)?;
            Ok(BenchRow {
                h,
                t_ssa: ssa.wall_time,
                t_hybrid: hybrid.wall_time,
                ratio: ssa.wall_time / hybrid.wall_time,
            })
        })
        .collect()
}
