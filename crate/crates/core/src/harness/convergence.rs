use rayon::prelude::*;
use serde::Serialize;

use crate::hybrid::{
    hybrid_path, merged_grid, CoupledWiener, NoiseMode, ReferenceProcess, WienerSource, ZeroNoise,
};
use crate::network::{Partition, ReactionNetwork, State};
use crate::rng::StreamSeed;
use crate::trajectory::{SampleGrid, SimError};

use super::ensemble::thread_pool;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    /// Reference intensity; unused when the partition has no jump reactions.
    pub lambda_max: f64,
    pub noise: NoiseMode,
    pub parallelism: usize,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            lambda_max: 1.0,
            noise: NoiseMode::Wiener,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    /// Mean over replicates of `|X_T^h - X_T^ref|^2`.
    pub mse: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    /// Coarsest step first; the last row is the reference.
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `ln mse` against `ln h`, reference row
    /// excluded. Twice the strong order.
    pub slope: f64,
    pub failed: usize,
    pub warnings: Vec<String>,
}

impl ConvergenceTable {
    /// Estimated strong order (half the mean-square slope).
    pub fn order(&self) -> f64 {
        self.slope / 2.0
    }
}

/// Ratio `h / h_ref` as a power of two, or `None`.
fn dyadic_exponent(h: f64, h_ref: f64) -> Option<u32> {
    let k = (h / h_ref).log2().round();
    if !(0.0..=60.0).contains(&k) {
        return None;
    }
    let exact = h_ref * 2f64.powi(k as i32);
    ((exact - h).abs() <= 1e-12 * h).then_some(k as u32)
}

fn check_steps(t_max: f64, h_list: &[f64]) -> Result<f64, SimError> {
    if h_list.is_empty() {
        return Err(SimError::Config("empty step list".into()));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(SimError::Config(format!(
            "T must be positive and finite, got {t_max}"
        )));
    }
    if let Some(h) = h_list.iter().find(|&&h| !(h > 0.0) || !h.is_finite()) {
        return Err(SimError::Config(format!("step sizes must be positive, got {h}")));
    }
    let h_ref = h_list.iter().copied().fold(f64::INFINITY, f64::min);
    for &h in h_list {
        if dyadic_exponent(h, h_ref).is_none() {
            return Err(SimError::Config(format!(
                "step {h} is not a power-of-two multiple of the finest step {h_ref}"
            )));
        }
    }
    Ok(h_ref)
}

fn final_x<W: WienerSource>(
    net: &ReactionNetwork,
    partition: &Partition,
    s0: &State,
    h: f64,
    t_max: f64,
    reference: Option<ReferenceProcess>,
    noise: &mut W,
    grid: &SampleGrid,
) -> Result<Vec<f64>, SimError> {
    let traj = hybrid_path(net, partition, s0, h, t_max, reference, noise, grid, false)?;
    Ok(traj.final_state().x.clone())
}

/// Squared deviation of every `h` in `h_list` from the finest entry, per
/// replicate, on one frozen realisation of the arrivals, marks and Wiener
/// paths. Entries may repeat. Fails on the first replicate error.
fn replicate_errors(
    net: &ReactionNetwork,
    partition: &Partition,
    s0: &State,
    t_max: f64,
    h_list: &[f64],
    h_ref: f64,
    seed: StreamSeed,
    opts: &ConvergenceOptions,
) -> Result<Vec<f64>, SimError> {
    let with_jumps = !partition.jump().is_empty();
    let reference = || with_jumps.then(|| ReferenceProcess::new(seed, opts.lambda_max));
    let arrivals: Vec<f64> = match reference() {
        Some(process) => process.map(|j| j.tau).take_while(|&t| t <= t_max).collect(),
        None => Vec::new(),
    };
    let grid = SampleGrid::final_only(t_max);
    let steps = std::iter::once(h_ref).chain(h_list.iter().copied());
    let finals: Vec<Vec<f64>> = match opts.noise {
        NoiseMode::Wiener => {
            let base: Vec<f64> = merged_grid(0.0, t_max, h_ref, &arrivals)
                .iter()
                .map(|p| p.t)
                .collect();
            let mut wiener = CoupledWiener::new(base, seed, partition);
            steps
                .map(|h| {
                    wiener.rewind();
                    final_x(net, partition, s0, h, t_max, reference(), &mut wiener, &grid)
                })
                .collect::<Result<_, _>>()?
        }
        NoiseMode::Off => steps
            .map(|h| final_x(net, partition, s0, h, t_max, reference(), &mut ZeroNoise, &grid))
            .collect::<Result<_, _>>()?,
    };
    let x_ref = &finals[0];
    Ok(finals[1..]
        .iter()
        .map(|x| x.iter().zip(x_ref).map(|(a, b)| (a - b).powi(2)).sum())
        .collect())
}

/// Mean-square deviation from the finest step for every entry of
/// `h_list`, in the given order. Unlike [`convergence_study`], repeated and
/// unsorted entries are allowed.
pub fn coupled_errors(
    net: &ReactionNetwork,
    partition: &Partition,
    s0: &State,
    t_max: f64,
    h_list: &[f64],
    replicates: usize,
    master_seed: u64,
    opts: &ConvergenceOptions,
) -> Result<(Vec<ConvergenceRow>, usize), SimError> {
    let h_ref = check_steps(t_max, h_list)?;
    if replicates == 0 {
        return Err(SimError::Config("replicates must be at least 1".into()));
    }
    let pool = thread_pool(opts.parallelism)?;
    let per_replicate: Vec<Result<Vec<f64>, SimError>> = pool.install(|| {
        (0..replicates as u64)
            .into_par_iter()
            .map(|i| {
                let seed = StreamSeed::new(master_seed, i);
                replicate_errors(net, partition, s0, t_max, h_list, h_ref, seed, opts)
            })
            .collect()
    });
    let mut sums = vec![0.0; h_list.len()];
    let mut n = 0;
    let mut failed = Vec::new();
    for r in per_replicate {
        match r {
            Ok(errs) => {
                n += 1;
                for (s, e) in sums.iter_mut().zip(errs) {
                    *s += e;
                }
            }
            Err(e) => failed.push(e),
        }
    }
    if failed.len() * 100 > replicates {
        return Err(SimError::BatchFailed {
            failed: failed.len(),
            total: replicates,
            first: failed[0].to_string(),
        });
    }
    let rows = h_list
        .iter()
        .zip(sums)
        .map(|(&h, s)| ConvergenceRow {
            h,
            mse: s / n as f64,
            n,
        })
        .collect();
    Ok((rows, failed.len()))
}

/// Strong self-convergence study against the finest step in `h_list`.
///
/// Steps must be distinct power-of-two multiples of the finest one, at
/// least three of them, spanning at least a factor of ten.
pub fn convergence_study(
    net: &ReactionNetwork,
    partition: &Partition,
    s0: &State,
    t_max: f64,
    h_list: &[f64],
    replicates: usize,
    master_seed: u64,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceTable, SimError> {
    let mut hs = h_list.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    hs.dedup();
    if hs.len() != h_list.len() || hs.len() < 3 {
        return Err(SimError::Config("need at least three distinct step sizes".into()));
    }
    if hs[0] / hs[hs.len() - 1] < 10.0 {
        return Err(SimError::Config(
            "step sizes must span at least a factor of ten".into(),
        ));
    }
    let (rows, failed) = coupled_errors(net, partition, s0, t_max, &hs, replicates, master_seed, opts)?;

    let mut warnings = Vec::new();
    for w in rows.windows(2) {
        if w[1].mse > w[0].mse && w[1].h != hs[hs.len() - 1] {
            warnings.push(format!("error increases from h={} to h={}", w[0].h, w[1].h));
        }
    }
    let points: Vec<(f64, f64)> = rows[..rows.len() - 1]
        .iter()
        .filter(|r| r.mse > 0.0)
        .map(|r| (r.h.ln(), r.mse.ln()))
        .collect();
    let slope = if points.len() >= 2 {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        warnings.push("fewer than two nonzero error rows; slope undefined".into());
        f64::NAN
    };
    Ok(ConvergenceTable {
        rows,
        slope,
        failed,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    fn decay(init: f64) -> (ReactionNetwork, Partition) {
        let net = parse_network(&format!(
            "species A continuous init={init}\nreaction d: A -> 0 rate=1"
        ))
        .unwrap();
        let p = Partition::with_diffusion(&net, &[0]).unwrap();
        (net, p)
    }

    #[test]
    fn dyadic_detection() {
        assert_eq!(dyadic_exponent(0.1, 0.025), Some(2));
        assert_eq!(dyadic_exponent(0.1, 0.1), Some(0));
        assert_eq!(dyadic_exponent(0.3, 0.1), None);
    }

    #[test]
    fn identical_steps_have_zero_error() {
        let (net, p) = decay(100.0);
        let opts = ConvergenceOptions::default();
        let (rows, _) = coupled_errors(
            &net,
            &p,
            &net.initial_state(),
            1.0,
            &[0.125, 0.125, 0.125],
            20,
            3,
            &opts,
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.mse == 0.0 && r.n == 20));
    }

    #[test]
    fn validation() {
        let (net, p) = decay(100.0);
        let s0 = net.initial_state();
        let opts = ConvergenceOptions::default();
        let study = |hs: &[f64]| convergence_study(&net, &p, &s0, 1.0, hs, 4, 1, &opts);
        assert!(study(&[0.5, 0.25]).is_err());
        assert!(study(&[0.5, 0.25, 0.125]).is_err());
        assert!(study(&[0.5, 0.3, 0.125, 0.0625, 0.03125]).is_err());
        assert!(study(&[0.5, 0.5, 0.125, 0.0625, 0.03125]).is_err());
        let t = study(&[0.03125, 0.5, 0.125]).unwrap();
        assert_eq!(
            t.rows.iter().map(|r| r.h).collect::<Vec<_>>(),
            vec![0.5, 0.125, 0.03125]
        );
        assert_eq!(t.rows[2].mse, 0.0);
    }

    #[test]
    fn drift_only_is_first_order() {
        let (net, p) = decay(1000.0);
        let opts = ConvergenceOptions {
            noise: NoiseMode::Off,
            ..Default::default()
        };
        let hs = [
            1.0 / 16.0,
            1.0 / 32.0,
            1.0 / 64.0,
            1.0 / 128.0,
            1.0 / 256.0,
            1.0 / 1024.0,
        ];
        let t = convergence_study(&net, &p, &net.initial_state(), 1.0, &hs, 2, 0, &opts).unwrap();
        assert!((t.slope - 2.0).abs() < 0.3, "{t:?}");
    }

    #[test]
    fn jumps_share_arrivals_across_steps() {
        let net = parse_network(crate::GENE_BURST).unwrap();
        let p = Partition::with_diffusion_ids(&net, &["r4", "r5"]).unwrap();
        let opts = ConvergenceOptions {
            lambda_max: 1.5,
            ..Default::default()
        };
        let hs = [0.4, 0.2, 0.1, 0.05, 0.025];
        let t = convergence_study(&net, &p, &net.initial_state(), 20.0, &hs, 8, 2, &opts).unwrap();
        assert_eq!(t.rows.last().unwrap().mse, 0.0);
        assert!(t.rows[0].mse > 0.0);
    }
}
