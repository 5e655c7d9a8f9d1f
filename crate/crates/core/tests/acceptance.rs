//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use hybridsim::exact::{cme_distribution, ssa_simulate};
use hybridsim::harness::{
    convergence_study, ks_one_sample, ks_two_sample, run_ensemble, simulate_replicate, speedup_benchmark,
    total_variation, ConvergenceOptions, EngineSpec,
};
use hybridsim::hybrid::{
    hybrid_path, mark_layout, HybridConfig, MarkOutcome, NoiseMode, ReferenceProcess, ZeroNoise,
};
use hybridsim::network::Slot;
use hybridsim::rng::{Stream, StreamSeed};
use hybridsim::{parse_network, Partition, ReactionNetwork, SampleGrid, State, GENE_BURST};

type Criterion = (&'static str, fn() -> Outcome);

// Distribution match
const DIST_T: f64 = 2000.0;
const DIST_H: f64 = 0.1;
const DIST_LAMBDA: f64 = 1.5;
const DIST_REPLICATES: usize = 2000;
const DIST_ALPHA: f64 = 0.01;

// Exactness oracle
const ORACLE_T: f64 = 5.0;
const ORACLE_REPLICATES: usize = 100_000;
const ORACLE_MAX_STATES: usize = 200;
const ORACLE_TV: f64 = 0.03;

// Thinning statistics
const THIN_ACCEPTED: usize = 100_000;
const THIN_SIGMAS: f64 = 3.0;
const THIN_ALPHA: f64 = 0.01;

// Convergence order
const CONV_REPLICATES: usize = 500;
const CONV_SLOPE: (f64, f64) = (0.7, 1.3);
const DRIFT_SLOPE: (f64, f64) = (1.7, 2.3);

// Speedup
const BENCH_STEPS: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
const BENCH_REPLICATES: usize = 1000;

// Combinatorial weights
const WEIGHT_MAX_COUNT: u32 = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gene_burst() -> (ReactionNetwork, Partition) {
    let net = parse_network(GENE_BURST).expect("bundled network parses");
    let partition = Partition::with_diffusion_ids(&net, &["r4", "r5"]).expect("valid partition");
    (net, partition)
}

fn distribution_match() -> Outcome {
    let (net, partition) = gene_burst();
    let s0 = net.initial_state();
    let config = HybridConfig::new(DIST_H, DIST_LAMBDA, DIST_T).unwrap();
    let hybrid = EngineSpec::Hybrid { partition, config };
    let ssa = run_ensemble(&net, &EngineSpec::Ssa, &s0, DIST_T, DIST_REPLICATES, 42, 1).unwrap();
    let hyb = run_ensemble(&net, &hybrid, &s0, DIST_T, DIST_REPLICATES, 42, 1).unwrap();
    let mut pass = ssa.final_states.len() == DIST_REPLICATES && hyb.final_states.len() == DIST_REPLICATES;
    let mut detail = String::new();
    for name in ["S3", "S4"] {
        let i = net.species_index(name).unwrap();
        let ks = ks_two_sample(&ssa.species_values(&net, i), &hyb.species_values(&net, i));
        pass &= ks.p_value >= DIST_ALPHA;
        detail += &format!("{name}: D={:.4} p={:.3}; ", ks.statistic, ks.p_value);
    }
    detail += &format!("n={}+{}", ssa.final_states.len(), hyb.final_states.len());
    outcome(pass, detail)
}

fn exactness_oracle() -> Outcome {
    let net = parse_network(
        "species A discrete init=10\nspecies B discrete init=0\n\
         reaction f: A -> B rate=1\nreaction b: B -> A rate=1",
    )
    .unwrap();
    let s0 = net.initial_state();
    let cap = 13;
    let cme = cme_distribution(&net, &s0, ORACLE_T, cap, 1e-12).unwrap();
    if cme.len() > ORACLE_MAX_STATES {
        return outcome(false, format!("lattice has {} states", cme.len()));
    }
    let empirical = |finals: &[State]| {
        let mut p = vec![0.0; cme.len()];
        for s in finals {
            let idx = cme.index_of(&net.values(s)).expect("state inside the lattice");
            p[idx] += 1.0 / finals.len() as f64;
        }
        p
    };

    let ssa = run_ensemble(&net, &EngineSpec::Ssa, &s0, ORACLE_T, ORACLE_REPLICATES, 7, 1).unwrap();
    let tv_ssa = total_variation(&empirical(&ssa.final_states), cme.probs());

    // Every reaction touches a discrete species, so all of them jump; the
    // total propensity is A + B = 10 in every state.
    let partition = Partition::with_diffusion(&net, &[]).unwrap();
    let config = HybridConfig::new(0.5, 10.0, ORACLE_T).unwrap();
    let hybrid = EngineSpec::Hybrid { partition, config };
    let hyb = run_ensemble(&net, &hybrid, &s0, ORACLE_T, ORACLE_REPLICATES, 7, 1).unwrap();
    let tv_hyb = total_variation(&empirical(&hyb.final_states), cme.probs());

    let pass = tv_ssa < ORACLE_TV && tv_hyb < ORACLE_TV && hyb.failures.is_empty();
    outcome(
        pass,
        format!(
            "states={} TV(ssa)={tv_ssa:.4} TV(hybrid)={tv_hyb:.4} thinned={}",
            cme.len(),
            hyb.diagnostics.thinned
        ),
    )
}

fn thinning_statistics() -> Outcome {
    let (net, partition) = gene_burst();
    let lambda_max = 2.0;
    let mut pass = true;
    let mut detail = String::new();
    for (label, values) in [
        ("on", [1.0, 0.0, 1000.0, 200.0]),
        ("off", [0.0, 1.0, 1000.0, 200.0]),
    ] {
        let s = net.state_from_values(0.0, &values);
        let layout = mark_layout(&net, &partition, &s, lambda_max).unwrap();
        let total = layout.total();
        let mut counts = vec![0usize; net.reactions().len()];
        let mut gaps = Vec::with_capacity(THIN_ACCEPTED);
        let mut last = 0.0;
        let mut accepted = 0;
        for jump in ReferenceProcess::new(StreamSeed::new(3, 0), lambda_max) {
            if let MarkOutcome::Fire(r) = layout.classify(jump.z) {
                counts[r] += 1;
                gaps.push(jump.tau - last);
                last = jump.tau;
                accepted += 1;
                if accepted == THIN_ACCEPTED {
                    break;
                }
            }
        }
        for &r in partition.jump() {
            let p = net.propensity(r, &s) / total;
            let f = counts[r] as f64 / accepted as f64;
            let sigma = (p * (1.0 - p) / accepted as f64).sqrt();
            let ok = (f - p).abs() <= THIN_SIGMAS * sigma;
            pass &= ok;
            detail += &format!("{label}/{}: {f:.4} vs {p:.4}; ", net.reactions()[r].id);
        }
        let ks = ks_one_sample(&gaps, |x| 1.0 - (-total * x).exp());
        pass &= ks.p_value >= THIN_ALPHA;
        detail += &format!("{label} gaps KS p={:.3}; ", ks.p_value);
    }
    outcome(pass, detail.trim_end_matches("; ").to_string())
}

fn convergence_order() -> Outcome {
    let hs = [
        1.0 / 16.0,
        1.0 / 32.0,
        1.0 / 64.0,
        1.0 / 128.0,
        1.0 / 256.0,
        1.0 / 1024.0,
    ];
    let t_max = 1.0;

    // Critical branching: zero drift, noise 2 sqrt(A) in variance terms.
    let net = parse_network(
        "species A continuous init=1000\nreaction b: A -> 2 A rate=1\nreaction d: A -> 0 rate=1",
    )
    .unwrap();
    let partition = Partition::with_diffusion(&net, &[0, 1]).unwrap();
    let opts = ConvergenceOptions::default();
    let table = convergence_study(
        &net,
        &partition,
        &net.initial_state(),
        t_max,
        &hs,
        CONV_REPLICATES,
        11,
        &opts,
    )
    .unwrap();
    let noisy_ok = table.slope >= CONV_SLOPE.0 && table.slope <= CONV_SLOPE.1;

    // Drift only: explicit Euler on dA/dt = -A.
    let net = parse_network("species A continuous init=1000\nreaction d: A -> 0 rate=1").unwrap();
    let partition = Partition::with_diffusion(&net, &[0]).unwrap();
    let opts = ConvergenceOptions {
        noise: NoiseMode::Off,
        ..Default::default()
    };
    let drift =
        convergence_study(&net, &partition, &net.initial_state(), t_max, &hs, 200, 11, &opts).unwrap();
    let drift_ok = drift.slope >= DRIFT_SLOPE.0 && drift.slope <= DRIFT_SLOPE.1;

    // The same scheme measured against the exact solution.
    let exact = 1000.0 * (-t_max).exp();
    let points: Vec<(f64, f64)> = hs[..hs.len() - 1]
        .iter()
        .map(|&h| {
            let traj = hybrid_path(
                &net,
                &partition,
                &net.initial_state(),
                h,
                t_max,
                None,
                &mut ZeroNoise,
                &SampleGrid::final_only(t_max),
                false,
            )
            .unwrap();
            (h.ln(), (traj.final_state().x[0] - exact).powi(2).ln())
        })
        .collect();
    let n = points.len() as f64;
    let (mx, my) = (
        points.iter().map(|p| p.0).sum::<f64>() / n,
        points.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let ode_slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let ode_ok = ode_slope >= DRIFT_SLOPE.0 && ode_slope <= DRIFT_SLOPE.1;

    outcome(
        noisy_ok && drift_ok && ode_ok,
        format!(
            "diffusion slope={:.3} (n={}), drift slope={:.3}, drift vs ODE slope={ode_slope:.3}",
            table.slope, table.rows[0].n, drift.slope
        ),
    )
}

fn speedup() -> Outcome {
    let (net, partition) = gene_burst();
    let base = HybridConfig::new(0.1, DIST_LAMBDA, DIST_T).unwrap();
    let rows = speedup_benchmark(
        &net,
        &partition,
        &net.initial_state(),
        DIST_T,
        &BENCH_STEPS,
        &base,
        BENCH_REPLICATES,
        5,
        1,
    )
    .unwrap();
    let pass = rows.iter().all(|r| r.ratio > 1.0);
    let detail = rows
        .iter()
        .map(|r| format!("h={}: {:.2}x", r.h, r.ratio))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("{detail} (t_ssa={:.2}s)", rows[0].t_ssa))
}

fn invariants() -> Outcome {
    let (net, partition) = gene_burst();
    let s0 = net.initial_state();
    let t_max = 500.0;
    let grid = SampleGrid::uniform(0.5, t_max).unwrap();
    let config = HybridConfig::new(0.1, DIST_LAMBDA, t_max).unwrap();
    let engines = [EngineSpec::Ssa, EngineSpec::Hybrid { partition, config }];
    let (s1, s2) = match (net.slot(0), net.slot(1)) {
        (Slot::Sigma(a), Slot::Sigma(b)) => (a, b),
        _ => return outcome(false, "S1 and S2 must be discrete".into()),
    };
    let mut conserved = true;
    let mut nonneg = true;
    let mut ssa_clamps = 0;
    let mut paths = 0;
    for engine in &engines {
        for i in 0..200 {
            let traj =
                simulate_replicate(&net, engine, &s0, t_max, &grid, StreamSeed::new(8, i), true).unwrap();
            paths += 1;
            if matches!(engine, EngineSpec::Ssa) {
                ssa_clamps += traj.diagnostics.clamps;
                nonneg &= traj
                    .samples
                    .iter()
                    .all(|s| s.x.iter().all(|&x| x >= 0.0 && x.fract() == 0.0));
            }
            for s in &traj.samples {
                conserved &= s.sigma[s1] + s.sigma[s2] == 1;
                nonneg &= s.sigma.iter().all(|&v| v >= 0);
            }
            // replay the discrete part event by event
            let mut sigma = s0.sigma.clone();
            for &(_, r) in traj.events.as_deref().unwrap_or(&[]) {
                for &(slot, d) in net.net_stoichiometry(r) {
                    if let Slot::Sigma(j) = slot {
                        sigma[j] += d;
                    }
                }
                conserved &= sigma[s1] + sigma[s2] == 1;
                nonneg &= sigma.iter().all(|&v| v >= 0);
            }
        }
    }
    let mut reproducible = true;
    for engine in &engines {
        let a = run_ensemble(&net, engine, &s0, 200.0, 64, 21, 1).unwrap();
        let b = run_ensemble(&net, engine, &s0, 200.0, 64, 21, 4).unwrap();
        let c = run_ensemble(&net, engine, &s0, 200.0, 64, 21, 3).unwrap();
        reproducible &= a.final_states == b.final_states && a.final_states == c.final_states;
        reproducible &= a.diagnostics == b.diagnostics;
    }
    let mut rng = StreamSeed::new(8, 0).rng(Stream::Ssa);
    let again = ssa_simulate(&net, &s0, t_max, &grid, true, &mut rng).unwrap();
    let first =
        simulate_replicate(&net, &engines[0], &s0, t_max, &grid, StreamSeed::new(8, 0), true).unwrap();
    reproducible &= again == first;

    outcome(
        conserved && nonneg && ssa_clamps == 0 && reproducible,
        format!(
            "paths={paths} conserved={conserved} nonnegative={nonneg} ssa_clamps={ssa_clamps} reproducible={reproducible}"
        ),
    )
}

/// Number of ways to pick the reactant multiset by enumerating index tuples.
fn brute_force_count(counts: &[u32], orders: &[(usize, u32)]) -> u64 {
    fn pick(n: u32, k: u32, start: u32) -> u64 {
        if k == 0 {
            return 1;
        }
        (start..n).map(|i| pick(n, k - 1, i + 1)).sum()
    }
    orders.iter().map(|&(i, k)| pick(counts[i], k, 0)).product()
}

fn combinatorial_weights() -> Outcome {
    let mut checked = 0u64;
    let mut mismatches = Vec::new();
    for kind in ["discrete", "continuous"] {
        let net = parse_network(&format!(
            "species A {kind} init=0\nspecies B {kind} init=0\n\
             reaction one: A -> 0 rate=1\n\
             reaction same: 2 A -> 0 rate=1\n\
             reaction pair: A + B -> 0 rate=1\n\
             reaction other: B -> A rate=1"
        ))
        .unwrap();
        let orders: [&[(usize, u32)]; 4] = [&[(0, 1)], &[(0, 2)], &[(0, 1), (1, 1)], &[(1, 1)]];
        for a in 0..=WEIGHT_MAX_COUNT {
            for b in 0..=WEIGHT_MAX_COUNT {
                let s = net.state_from_values(0.0, &[a as f64, b as f64]);
                for (r, order) in orders.iter().enumerate() {
                    let expected = brute_force_count(&[a, b], order) as f64;
                    let got = net.combinatorial_weight(r, &s);
                    checked += 1;
                    if got != expected {
                        mismatches.push(format!(
                            "{kind} {} at ({a},{b}): {got} != {expected}",
                            net.reactions()[r].id
                        ));
                    }
                }
            }
        }
    }
    let detail = match mismatches.first() {
        None => format!("{checked} cases exact"),
        Some(first) => format!("{} of {checked} mismatched, e.g. {first}", mismatches.len()),
    };
    outcome(mismatches.is_empty(), detail)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 distribution match (KS, S3 and S4)", distribution_match),
        ("2 exactness oracle (TV vs master equation)", exactness_oracle),
        ("3 thinning statistics", thinning_statistics),
        ("4 convergence order", convergence_order),
        ("5 speedup over exact simulation", speedup),
        ("6 invariant suite", invariants),
        ("7 combinatorial weights", combinatorial_weights),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.starts_with(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} criterion {name}: {} [{:.1}s]",
            result.detail,
            start.elapsed().as_secs_f64()
        );
        if !result.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
