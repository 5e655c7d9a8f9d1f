use std::fs;
use std::path::Path;

use hybridsim::harness::{
    convergence_study, histogram, histogram_with_edges, ks_two_sample, run_ensemble, simulate_replicate,
    speedup_benchmark, Bins, ConvergenceOptions, EngineSpec, EnsembleResult,
};
use hybridsim::hybrid::{HybridConfig, NoiseMode};
use hybridsim::network::{diffusion_validity, partition_reactions};
use hybridsim::output::format_g;
use hybridsim::{parse_network, Partition, ReactionNetwork, SampleGrid, SpeciesKind, StreamSeed};
use serde::Serialize;

use crate::write::{
    write_bench, write_convergence, write_final_states, write_histograms, write_json, HistogramRow,
};
use crate::{CliError, Command, RunOpts};

/// Significance level of the KS report.
const KS_ALPHA: f64 = 0.01;
const HISTOGRAM_BINS: usize = 50;

/// Everything needed to repeat a run bit for bit.
#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    argv: Vec<String>,
    options: &'a RunOpts,
    replicates: usize,
    lambda_max: Option<f64>,
    h_list: Option<Vec<f64>>,
    partition: PartitionIds<'a>,
    network_source: &'a str,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct PartitionIds<'a> {
    diffusion: Vec<&'a str>,
    jump: Vec<&'a str>,
}

/// State shared by the simulating subcommands.
struct Context<'a> {
    command: &'static str,
    opts: &'a RunOpts,
    source: String,
    net: ReactionNetwork,
    partition: Partition,
    replicates: usize,
    outputs: Vec<String>,
    h_list: Option<Vec<f64>>,
}

pub(crate) fn run(command: &Command) -> Result<(), CliError> {
    let opts = command.opts();
    let source = fs::read_to_string(&opts.network)
        .map_err(|e| CliError::Input(format!("{}: {e}", opts.network.display())))?;
    let net = parse_network(&source)?;
    validate(opts)?;
    let partition = partition_reactions(&net, opts.h_threshold, &net.initial_state())?;
    if let Command::Check(_) = command {
        check(&net, &partition, opts);
        return Ok(());
    }

    let replicates = opts.replicates.unwrap_or(match command {
        Command::Compare(_) => 1000,
        Command::Converge(_) => 200,
        Command::Bench(_) => 100,
        _ => 1,
    });
    if replicates == 0 {
        return Err(CliError::Usage("--replicates must be at least 1".into()));
    }
    fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", opts.out.display())))?;
    let mut ctx = Context {
        command: command.name(),
        opts,
        source,
        net,
        partition,
        replicates,
        outputs: Vec::new(),
        h_list: None,
    };
    match command {
        Command::Ssa(_) => simulate(&mut ctx, false)?,
        Command::Hybrid(_) => simulate(&mut ctx, true)?,
        Command::Compare(_) => compare(&mut ctx)?,
        Command::Converge(_) => converge(&mut ctx)?,
        Command::Bench(_) => bench(&mut ctx)?,
        Command::Check(_) => unreachable!(),
    }
    ctx.write_manifest()
}

fn validate(opts: &RunOpts) -> Result<(), CliError> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(CliError::Usage(format!("{name} must be positive, got {v}")))
        }
    };
    positive("--T", opts.t_max)?;
    positive("--h", opts.h)?;
    positive("--h-threshold", opts.h_threshold)?;
    if let Some(l) = opts.lambda_max {
        positive("--lambda-max", l)?;
    }
    if let Some(dt) = opts.sample_dt {
        positive("--sample-dt", dt)?;
    }
    for &h in opts.h_list.iter().flatten() {
        positive("--h-list entry", h)?;
    }
    if opts.parallelism == 0 {
        return Err(CliError::Usage("--parallelism must be at least 1".into()));
    }
    Ok(())
}

fn check(net: &ReactionNetwork, partition: &Partition, opts: &RunOpts) {
    let s0 = net.initial_state();
    println!(
        "network: {} ({} species, {} reactions)",
        opts.network.display(),
        net.species().len(),
        net.reactions().len()
    );
    println!("R1={{{}}}", partition.diffusion_ids().join(","));
    println!("R_d={{{}}}", partition.jump_ids().join(","));
    println!("h_r at the initial state:");
    for (r, reaction) in net.reactions().iter().enumerate() {
        let set = if partition.is_diffusion(r) { "R1" } else { "R_d" };
        println!(
            "  {:<8} h={:<12} a={:<12} {set}",
            reaction.id,
            format_g(net.combinatorial_weight(r, &s0), 10),
            format_g(net.propensity(r, &s0), 10)
        );
    }
    let validity = diffusion_validity(net, partition, &s0, opts.h_threshold);
    let low: Vec<&str> = validity
        .iter()
        .filter(|v| !v.pass)
        .map(|v| v.reaction.as_str())
        .collect();
    if low.is_empty() {
        println!("diffusion validity (h >= {}): ok", format_g(opts.h_threshold, 10));
    } else {
        println!(
            "diffusion validity (h >= {}): low weight for {}",
            format_g(opts.h_threshold, 10),
            low.join(",")
        );
    }
}

impl Context<'_> {
    fn lambda_max(&self) -> Result<Option<f64>, CliError> {
        match (self.opts.lambda_max, self.partition.jump().is_empty()) {
            (Some(l), _) => Ok(Some(l)),
            (None, true) => Ok(None),
            (None, false) => Err(CliError::Usage(format!(
                "--lambda-max is required: jump reactions {{{}}}",
                self.partition.jump_ids().join(",")
            ))),
        }
    }

    fn noise(&self) -> NoiseMode {
        if self.opts.drift_only {
            NoiseMode::Off
        } else {
            NoiseMode::Wiener
        }
    }

    fn hybrid_config(&self, h: f64) -> Result<HybridConfig, CliError> {
        // Without jump reactions the reference intensity is never used.
        let lambda = self.lambda_max()?.unwrap_or(1.0);
        Ok(HybridConfig::new(h, lambda, self.opts.t_max)?
            .with_policy(self.opts.lambda_policy.into())
            .with_noise(self.noise()))
    }

    fn hybrid_engine(&self) -> Result<EngineSpec, CliError> {
        Ok(EngineSpec::Hybrid {
            partition: self.partition.clone(),
            config: self.hybrid_config(self.opts.h)?,
        })
    }

    fn path(&mut self, name: &str) -> std::path::PathBuf {
        self.outputs.push(name.to_owned());
        self.opts.out.join(name)
    }

    fn ensemble(&self, engine: &EngineSpec) -> Result<EnsembleResult, CliError> {
        Ok(run_ensemble(
            &self.net,
            engine,
            &self.net.initial_state(),
            self.opts.t_max,
            self.replicates,
            self.opts.seed,
            self.opts.parallelism,
        )?)
    }

    fn write_manifest(&mut self) -> Result<(), CliError> {
        let path = self.path("manifest.json");
        let manifest = Manifest {
            tool: "hybridsim",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            argv: std::env::args().collect(),
            options: self.opts,
            replicates: self.replicates,
            lambda_max: self.opts.lambda_max,
            h_list: self.h_list.clone(),
            partition: PartitionIds {
                diffusion: self.partition.diffusion_ids(),
                jump: self.partition.jump_ids(),
            },
            network_source: &self.source,
            outputs: self.outputs.clone(),
        };
        write_json(&path, &manifest)
    }
}

#[derive(Serialize)]
struct ReactionCount<'a> {
    reaction: &'a str,
    events: u64,
}

#[derive(Serialize)]
struct RunDiagnostics<'a> {
    engine: &'static str,
    #[serde(rename = "T")]
    t_max: f64,
    seed: u64,
    events: Vec<ReactionCount<'a>>,
    thinned: u64,
    clamps: u64,
    retries: u32,
    lambda_max_used: Option<f64>,
}

fn simulate(ctx: &mut Context, hybrid: bool) -> Result<(), CliError> {
    let engine = if hybrid {
        ctx.hybrid_engine()?
    } else {
        EngineSpec::Ssa
    };
    let label = if hybrid { "hybrid" } else { "ssa" };
    if ctx.replicates > 1 {
        let result = ctx.ensemble(&engine)?;
        let csv = ctx.path("final_states.csv");
        write_final_states(&csv, &ctx.net, &result)?;
        let stats_path = ctx.path("stats.json");
        write_ensemble_stats(&stats_path, &ctx.net, &result)?;
        print_stats(label, &ctx.net, &result);
        return Ok(());
    }

    let t_max = ctx.opts.t_max;
    let dt = ctx.opts.sample_dt.unwrap_or(t_max / 1000.0);
    let grid = SampleGrid::uniform(dt, t_max)?;
    let seed = StreamSeed::new(ctx.opts.seed, 0);
    let traj = simulate_replicate(
        &ctx.net,
        &engine,
        &ctx.net.initial_state(),
        t_max,
        &grid,
        seed,
        false,
    )?;
    let csv = ctx.path("trajectory.csv");
    let file = fs::File::create(&csv)?;
    hybridsim::output::write_trajectory_csv(&ctx.net, &traj, std::io::BufWriter::new(file))?;

    let d = &traj.diagnostics;
    let json = ctx.path("diagnostics.json");
    let diagnostics = RunDiagnostics {
        engine: label,
        t_max,
        seed: ctx.opts.seed,
        events: ctx
            .net
            .reactions()
            .iter()
            .zip(&d.events_per_reaction)
            .map(|(r, &events)| ReactionCount {
                reaction: &r.id,
                events,
            })
            .collect(),
        thinned: d.thinned,
        clamps: d.clamps,
        retries: d.retries,
        lambda_max_used: d.lambda_max_used,
    };
    write_json(&json, &diagnostics)?;
    let last = ctx.net.values(traj.final_state());
    let cols: Vec<String> = ctx
        .net
        .species()
        .iter()
        .zip(&last)
        .map(|(sp, v)| format!("{}={}", sp.name, format_g(*v, 10)))
        .collect();
    println!(
        "{label} T={}: {} ({} events)",
        format_g(t_max, 10),
        cols.join(" "),
        d.events()
    );
    Ok(())
}

#[derive(Serialize)]
struct EnsembleReport<'a> {
    stats: hybridsim::harness::EnsembleStats,
    diagnostics: &'a hybridsim::Diagnostics,
    failures: &'a [hybridsim::harness::ReplicateFailure],
}

fn write_ensemble_stats(path: &Path, net: &ReactionNetwork, result: &EnsembleResult) -> Result<(), CliError> {
    let report = EnsembleReport {
        stats: result.stats(net),
        diagnostics: &result.diagnostics,
        failures: &result.failures,
    };
    write_json(path, &report)
}

fn print_stats(label: &str, net: &ReactionNetwork, result: &EnsembleResult) {
    let stats = result.stats(net);
    println!(
        "{label} ensemble: {} replicates, {} failed, {:.3} s",
        stats.replicates, stats.failed, stats.wall_time
    );
    for sp in &stats.species {
        println!(
            "  {:<8} mean={:<14} var={}",
            sp.name,
            format_g(sp.mean, 8),
            format_g(sp.variance, 8)
        );
    }
}

#[derive(Serialize)]
struct KsRow {
    species: String,
    statistic: f64,
    p_value: f64,
    reject: bool,
}

#[derive(Serialize)]
struct KsReport {
    alpha: f64,
    replicates_ssa: usize,
    replicates_hybrid: usize,
    species: Vec<KsRow>,
}

fn compare(ctx: &mut Context) -> Result<(), CliError> {
    let hybrid_engine = ctx.hybrid_engine()?;
    let ssa = ctx.ensemble(&EngineSpec::Ssa)?;
    let hybrid = ctx.ensemble(&hybrid_engine)?;
    print_stats("ssa", &ctx.net, &ssa);
    print_stats("hybrid", &ctx.net, &hybrid);
    let p = ctx.path("final_states_ssa.csv");
    write_final_states(&p, &ctx.net, &ssa)?;
    let p = ctx.path("final_states_hybrid.csv");
    write_final_states(&p, &ctx.net, &hybrid)?;

    let mut rows_ssa = Vec::new();
    let mut rows_hybrid = Vec::new();
    let mut ks = Vec::new();
    for (i, sp) in ctx.net.species().iter().enumerate() {
        let a = ssa.species_values(&ctx.net, i);
        let b = hybrid.species_values(&ctx.net, i);
        let pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
        let bins = match sp.kind {
            SpeciesKind::Discrete => Bins::Width(1.0),
            SpeciesKind::Continuous => Bins::Count(HISTOGRAM_BINS),
        };
        let edges = histogram(&pooled, bins).map_err(stats_error)?.edges;
        for (samples, rows) in [(&a, &mut rows_ssa), (&b, &mut rows_hybrid)] {
            let hist = histogram_with_edges(samples, &edges).map_err(stats_error)?;
            rows.extend((0..hist.counts.len()).map(|k| HistogramRow {
                species: sp.name.clone(),
                lo: hist.edges[k],
                hi: hist.edges[k + 1],
                count: hist.counts[k],
                frequency: hist.frequencies[k],
            }));
        }
        let r = ks_two_sample(&a, &b);
        ks.push(KsRow {
            species: sp.name.clone(),
            statistic: r.statistic,
            p_value: r.p_value,
            reject: r.p_value < KS_ALPHA,
        });
    }
    let p = ctx.path("histogram_ssa.csv");
    write_histograms(&p, &rows_ssa)?;
    let p = ctx.path("histogram_hybrid.csv");
    write_histograms(&p, &rows_hybrid)?;

    println!("two-sample KS, alpha = {KS_ALPHA}:");
    for row in &ks {
        println!(
            "  {:<8} D={:<12} p={:<12} {}",
            row.species,
            format_g(row.statistic, 6),
            format_g(row.p_value, 6),
            if row.reject { "reject" } else { "ok" }
        );
    }
    let report = KsReport {
        alpha: KS_ALPHA,
        replicates_ssa: ssa.final_states.len(),
        replicates_hybrid: hybrid.final_states.len(),
        species: ks,
    };
    let p = ctx.path("ks_report.json");
    write_json(&p, &report)
}

fn stats_error(e: hybridsim::harness::StatsError) -> CliError {
    CliError::Runtime(hybridsim::SimError::Config(e.to_string()))
}

fn converge(ctx: &mut Context) -> Result<(), CliError> {
    let hs = ctx
        .opts
        .h_list
        .clone()
        .unwrap_or_else(|| (0..6).map(|k| ctx.opts.h / f64::from(1u32 << k)).collect());
    ctx.h_list = Some(hs.clone());
    let opts = ConvergenceOptions {
        lambda_max: ctx.lambda_max()?.unwrap_or(1.0),
        noise: ctx.noise(),
        parallelism: ctx.opts.parallelism,
    };
    let table = convergence_study(
        &ctx.net,
        &ctx.partition,
        &ctx.net.initial_state(),
        ctx.opts.t_max,
        &hs,
        ctx.replicates,
        ctx.opts.seed,
        &opts,
    )?;
    let p = ctx.path("convergence.csv");
    write_convergence(&p, &table.rows)?;
    let p = ctx.path("convergence.json");
    write_json(&p, &table)?;
    println!("h,mse,n");
    for row in &table.rows {
        println!("{},{},{}", format_g(row.h, 10), format_g(row.mse, 10), row.n);
    }
    println!(
        "mean-square slope {} (strong order {})",
        format_g(table.slope, 4),
        format_g(table.order(), 4)
    );
    for w in &table.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn bench(ctx: &mut Context) -> Result<(), CliError> {
    let hs = ctx
        .opts
        .h_list
        .clone()
        .unwrap_or_else(|| vec![0.1, 0.5, 1.0, 2.0]);
    ctx.h_list = Some(hs.clone());
    let base = ctx.hybrid_config(ctx.opts.h)?;
    let rows = speedup_benchmark(
        &ctx.net,
        &ctx.partition,
        &ctx.net.initial_state(),
        ctx.opts.t_max,
        &hs,
        &base,
        ctx.replicates,
        ctx.opts.seed,
        ctx.opts.parallelism,
    )?;
    let p = ctx.path("bench.csv");
    write_bench(&p, &rows)?;
    println!("h,t_ssa,t_hybrid,ratio");
    for r in &rows {
        println!(
            "{},{},{},{}",
            format_g(r.h, 10),
            format_g(r.t_ssa, 6),
            format_g(r.t_hybrid, 6),
            format_g(r.ratio, 4)
        );
    }
    Ok(())
}
