use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use fiedler_core::dataset::{generate_dataset, Dataset};
use fiedler_core::graph::{generate_connected_graph, GraphGenConfig, MAX_NODES, MIN_NODES};
use fiedler_core::model::{
    backward, compare_with_finite_differences, forward, init_params, Checkpoint, CheckpointMeta, ReadoutMode,
};
use fiedler_core::sim::{demo_figure1, run_simulation_with_drop, Figure1Report};
use fiedler_core::spectrum::algebraic_connectivity;
use fiedler_core::train::{
    evaluate, generalization_sweep, sweep_csv, train_with_callback, AdamConfig, Metrics, TrainConfig,
};

use crate::output::{guard, manifest_path, write_atomic, Manifest};
use crate::{runtime, CliError, EvalArgs, GenDataArgs, GradcheckArgs, SimulateArgs, SweepArgs, TrainArgs};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    let f = File::open(path).map_err(|e| runtime(format!("open {}: {e}", path.display())))?;
    Dataset::read_from(BufReader::new(f)).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    let f = File::open(path).map_err(|e| runtime(format!("open {}: {e}", path.display())))?;
    Checkpoint::read_from(BufReader::new(f)).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

pub fn gen_data(a: &GenDataArgs) -> Result<(), CliError> {
    let cfg = GraphGenConfig {
        n_min: a.n_min,
        n_max: a.n_max,
        p_min: a.p_min,
        p_max: a.p_max,
        seed: a.seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    if a.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    guard(&a.out, a.force)?;
    let ds = generate_dataset(&cfg, a.count).map_err(runtime)?;
    write_atomic(&a.out, &ds.to_text())?;
    Manifest::new("gen-data")
        .set("count", a.count)
        .set("n-min", a.n_min)
        .set("n-max", a.n_max)
        .set("p-min", a.p_min)
        .set("p-max", a.p_max)
        .set("seed", a.seed)
        .set_path("out", &a.out)
        .write(&manifest_path(&a.out))?;
    println!("wrote {} graphs to {}", ds.len(), a.out.display());
    Ok(())
}

pub fn train(a: &TrainArgs) -> Result<(), CliError> {
    if a.epochs == 0 {
        return Err(usage("--epochs must be at least 1"));
    }
    if a.rounds == 0 {
        return Err(usage("--T must be at least 1"));
    }
    if !(a.lr > 0.0 && a.lr.is_finite()) {
        return Err(usage("--lr must be positive"));
    }
    let final_path = a.out_dir.join("final.params");
    guard(&final_path, a.force)?;

    let train_set = load_dataset(&a.train_data)?;
    let val_set = load_dataset(&a.val_data)?;
    let n_min = train_set.iter().map(|i| i.graph.node_count()).min().unwrap_or(0);
    let n_max = train_set.iter().map(|i| i.graph.node_count()).max().unwrap_or(0);
    let config = TrainConfig {
        rounds: a.rounds,
        mode: a.mode,
        hidden: a.hidden,
        epochs: a.epochs,
        batch_size: a.batch,
        adam: AdamConfig {
            learning_rate: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            epsilon: a.adam_eps,
        },
        seed: a.seed,
        train_count: train_set.len(),
        val_count: val_set.len(),
        n_min,
        n_max,
        record_wall_time: !a.no_wall_time,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let meta = CheckpointMeta {
        mode: a.mode,
        rounds: a.rounds,
        n_min,
        n_max,
    };

    let metrics_path = a.out_dir.join("metrics.csv");
    let mut history = Metrics::default();
    let outcome = train_with_callback(&config, &train_set, &val_set, |record, params| {
        let ck = Checkpoint {
            meta,
            params: params.clone(),
        };
        let path = a.out_dir.join(format!("epoch-{:03}.params", record.epoch));
        write_atomic(&path, &ck.to_text()).map_err(|e| e.to_string())?;
        history.epochs.push(*record);
        write_atomic(&metrics_path, &history.to_csv()).map_err(|e| e.to_string())?;
        eprintln!(
            "epoch {:>3}  train_l2 {:.5}  val_l1 {:.5}  val_l2 {:.5}",
            record.epoch, record.train_l2, record.val_l1, record.val_l2
        );
        Ok(())
    })
    .map_err(runtime)?;

    let ck = Checkpoint {
        meta,
        params: outcome.params,
    };
    write_atomic(&final_path, &ck.to_text())?;
    write_atomic(&metrics_path, &outcome.metrics.to_csv())?;
    Manifest::new("train")
        .set_path("train-data", &a.train_data)
        .set_path("val-data", &a.val_data)
        .set("T", a.rounds)
        .set("mode", a.mode)
        .set("hidden", a.hidden)
        .set("epochs", a.epochs)
        .set("lr", a.lr)
        .set("batch", a.batch)
        .set("beta1", a.beta1)
        .set("beta2", a.beta2)
        .set("adam-eps", a.adam_eps)
        .set("seed", a.seed)
        .set_path("out-dir", &a.out_dir)
        .set("no-wall-time", a.no_wall_time)
        .write(&a.out_dir.join("manifest.txt"))?;
    if let Some(last) = outcome.metrics.last() {
        println!("final val_l1 {} val_l2 {}", last.val_l1, last.val_l2);
    }
    Ok(())
}

fn check_compatible(ck: &Checkpoint, mode: Option<ReadoutMode>, hidden: Option<usize>) -> Result<(), CliError> {
    if let Some(m) = mode.filter(|&m| m != ck.meta.mode) {
        return Err(usage(format!(
            "--mode {m} does not match the checkpoint, which was trained in {} mode",
            ck.meta.mode
        )));
    }
    if let Some(h) = hidden.filter(|&h| h != ck.params.hidden) {
        return Err(usage(format!(
            "--hidden {h} does not match the checkpoint hidden size {}",
            ck.params.hidden
        )));
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    if let Some(out) = &a.out {
        guard(out, a.force)?;
    }
    let ck = load_checkpoint(&a.checkpoint)?;
    check_compatible(&ck, a.mode, a.hidden)?;
    let rounds = a.rounds.unwrap_or(ck.meta.rounds);
    if rounds == 0 {
        return Err(usage("--T must be at least 1"));
    }
    let ds = load_dataset(&a.data)?;
    let r = evaluate(&ck.params, &ds, rounds, ck.meta.mode);
    println!("mean_l1={} mean_l2={} count={}", r.mean_l1, r.mean_l2, ds.len());
    if let Some(out) = &a.out {
        let csv = format!(
            "mean_l1,mean_l2,count\n{},{},{}\n",
            fiedler_core::numfmt::round_trip(r.mean_l1),
            fiedler_core::numfmt::round_trip(r.mean_l2),
            ds.len()
        );
        write_atomic(out, &csv)?;
        Manifest::new("eval")
            .set_path("checkpoint", &a.checkpoint)
            .set_path("data", &a.data)
            .set("mode", ck.meta.mode)
            .set("hidden", ck.params.hidden)
            .set("T", rounds)
            .set_path("out", out)
            .write(&manifest_path(out))?;
    }
    Ok(())
}

/// `a..b` (inclusive) or `a,b,c`.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>, CliError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(usage("--sizes must not be empty"));
    }
    let bad = |e: std::num::ParseIntError| usage(format!("--sizes {s:?}: {e}"));
    let sizes: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (lo.trim().parse().map_err(bad)?, hi.trim().parse().map_err(bad)?);
        if lo > hi {
            return Err(usage(format!("--sizes range {s:?} is empty")));
        }
        (lo..=hi).collect()
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(bad)).collect::<Result<_, _>>()?
    };
    if let Some(n) = sizes.iter().find(|n| !(MIN_NODES..=MAX_NODES).contains(n)) {
        return Err(usage(format!("size {n} outside {MIN_NODES}..={MAX_NODES}")));
    }
    Ok(sizes)
}

pub fn sweep(a: &SweepArgs) -> Result<(), CliError> {
    let sizes = parse_sizes(&a.sizes)?;
    if a.per_size == 0 {
        return Err(usage("--per-size must be at least 1"));
    }
    guard(&a.out, a.force)?;
    let ck = load_checkpoint(&a.checkpoint)?;
    let rounds = a.rounds.unwrap_or(ck.meta.rounds);
    let gen = GraphGenConfig {
        n_min: MIN_NODES,
        n_max: MAX_NODES,
        p_min: a.p_min,
        p_max: a.p_max,
        seed: a.seed,
    };
    gen.validate().map_err(|e| usage(e.to_string()))?;
    let rows = generalization_sweep(&ck.params, &sizes, a.per_size, &gen, rounds, ck.meta.mode).map_err(runtime)?;
    for r in &rows {
        println!("n={:>2} mean_l1={:.5}", r.n, r.mean_l1);
    }
    write_atomic(&a.out, &sweep_csv(&rows, (ck.meta.n_min, ck.meta.n_max)))?;
    Manifest::new("sweep")
        .set_path("checkpoint", &a.checkpoint)
        .set("sizes", &a.sizes)
        .set("per-size", a.per_size)
        .set("p-min", a.p_min)
        .set("p-max", a.p_max)
        .set("seed", a.seed)
        .set("T", rounds)
        .set_path("out", &a.out)
        .write(&manifest_path(&a.out))?;
    Ok(())
}

pub fn parse_edges(s: &str) -> Result<Vec<(usize, usize)>, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let (x, y) = pair
                .trim()
                .split_once('-')
                .ok_or_else(|| usage(format!("edge {pair:?} is not i-j")))?;
            let parse = |t: &str| t.parse::<usize>().map_err(|e| usage(format!("edge {pair:?}: {e}")));
            Ok((parse(x)?, parse(y)?))
        })
        .collect()
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    for p in [&a.out, &a.trace].into_iter().flatten() {
        guard(p, a.force)?;
    }
    let ck = load_checkpoint(&a.checkpoint)?;
    if ck.meta.mode != ReadoutMode::Local {
        return Err(usage(format!(
            "simulation needs a local-readout checkpoint; {} was trained in {} mode",
            a.checkpoint.display(),
            ck.meta.mode
        )));
    }
    let rounds = a.rounds.unwrap_or(ck.meta.rounds);
    if rounds == 0 {
        return Err(usage("--T must be at least 1"));
    }
    let gen = GraphGenConfig {
        n_min: a.n,
        n_max: a.n,
        p_min: a.p_min,
        p_max: a.p_max,
        seed: a.seed,
    };
    gen.validate().map_err(|e| usage(e.to_string()))?;
    let g = generate_connected_graph(&gen, a.graph_index).map_err(runtime)?;
    let drops = match &a.drop_edges {
        Some(s) => parse_edges(s)?,
        None => Vec::new(),
    };

    let (report, trace) = if drops.is_empty() {
        let sim = fiedler_core::sim::run_simulation(&ck.params, &g, rounds);
        let report = demo_figure1(&ck.params, &g, rounds);
        debug_assert_eq!(report.estimates, sim.estimates);
        (report, sim.trace)
    } else {
        let sim = run_simulation_with_drop(&ck.params, &g, rounds, &drops, a.drop_from_round)
            .map_err(|e| usage(e.to_string()))?;
        let report = Figure1Report {
            lambda2: algebraic_connectivity(&g),
            estimates: sim.estimates,
        };
        (report, sim.trace)
    };

    println!("graph: {g}");
    println!("T = {rounds}");
    print!("{report}");
    if let Some(out) = &a.out {
        write_atomic(out, &report.to_csv())?;
    }
    if let Some(path) = &a.trace {
        write_atomic(path, &trace.to_csv())?;
    }
    if let Some(out) = a.out.as_ref().or(a.trace.as_ref()) {
        Manifest::new("simulate")
            .set_path("checkpoint", &a.checkpoint)
            .set("n", a.n)
            .set("seed", a.seed)
            .set("graph-index", a.graph_index)
            .set("p-min", a.p_min)
            .set("p-max", a.p_max)
            .set("T", rounds)
            .set_opt("drop-edges", a.drop_edges.as_ref())
            .set("drop-from-round", a.drop_from_round)
            .set_opt("trace", a.trace.as_ref().map(|p| p.display()))
            .set_opt("out", a.out.as_ref().map(|p| p.display()))
            .write(&manifest_path(out))?;
    }
    Ok(())
}

pub fn gradcheck(a: &GradcheckArgs) -> Result<(), CliError> {
    if a.instances == 0 || a.hidden == 0 || a.epsilon <= 0.0 {
        return Err(usage("--instances, --hidden and --epsilon must be positive"));
    }
    let gen = GraphGenConfig::with_nodes(4, 6, a.seed);
    let mut worst_overall: f64 = 0.0;
    for mode in [ReadoutMode::Local, ReadoutMode::Global] {
        let mut worst: f64 = 0.0;
        for k in 0..a.instances {
            let g = generate_connected_graph(&gen, k as u64).map_err(runtime)?;
            let rounds = 2 + k % 2;
            let params = init_params(a.hidden, a.seed.wrapping_add(1000 * k as u64 + mode as u64));
            let target = algebraic_connectivity(&g);
            let (_, cache) = forward(&params, &g, rounds, mode);
            let (_, mut grads) = backward(&params, &g, &cache, target, mode).map_err(runtime)?;
            if a.corrupt {
                *grads.flat_mut(0) += 1.0;
            }
            let err = compare_with_finite_differences(&params, &g, rounds, mode, target, a.epsilon, &grads);
            println!(
                "{mode:<6} instance {k}: n={} T={rounds} max relative error {err:.3e}",
                g.node_count()
            );
            worst = worst.max(err);
        }
        println!("{mode:<6} max relative error {worst:.3e}");
        worst_overall = worst_overall.max(worst);
    }
    if worst_overall <= a.tolerance {
        println!("PASS ({worst_overall:.3e} <= {:.1e})", a.tolerance);
        Ok(())
    } else {
        Err(runtime(format!(
            "gradient check FAILED: max relative error {worst_overall:.3e} > {:.1e}",
            a.tolerance
        )))
    }
}
