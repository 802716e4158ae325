//! The five subcommands.

use std::path::{Path, PathBuf};

use gnnlab_engine::{
    backward, finite_diff_check_record, save_checkpoint, Architecture, LossTarget, ModelParams,
    OutputMap,
};
use gnnlab_graph::{write_dataset, AttributedGraph, DatasetPaths, FeatureMatrix, Split};
use gnnlab_limits::{
    census_tsv, convergence_csv, gen_config_model, gen_erdos_renyi, gen_pref_attachment,
    neighborhood_census, poisson_depth1_reference, sample_gw_reference, tv_distance,
    CensusDistribution, ConvergenceRow,
};
use gnnlab_samplers::{full_computational_graph_batch, CompSampler, SubgraphSampler};
use gnnlab_trainer::{
    evaluate, limit_gradient_check, metrics_csv, train_full, train_on_subgraphs, LossKind,
    StopReason, TrainConfig, TrainOutcome,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{
    load_config, require, GeneratorSpec, GradcheckSpec, ModelSpec, ReferenceSpec,
    RunConfig,
};
use crate::dataset::{class_count, dataset_checksum, load_dataset};
use crate::error::CliError;
use crate::manifest::{write_manifest, Manifest};

pub struct Globals {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub deterministic: bool,
}

fn load_effective(path: &Path, globals: &Globals) -> Result<RunConfig, CliError> {
    let cfg = load_config(path)?;
    Ok(crate::config::apply_overrides(
        cfg,
        globals.seed,
        globals.deterministic,
    ))
}

fn build_model(spec: &ModelSpec, g: &AttributedGraph) -> Result<ModelParams, CliError> {
    if spec.dims.is_empty() {
        return Err(CliError::Config("model needs at least one layer".into()));
    }
    if spec.dims.iter().any(|&d| d == 0) {
        return Err(CliError::Config("layer widths must be positive".into()));
    }
    let input_dim = g.features().dim();
    if input_dim == 0 {
        return Err(CliError::Config("dataset has zero-width features".into()));
    }
    let head = match (spec.head_classes, spec.output) {
        (Some(c), _) => {
            if c == 0 {
                return Err(CliError::Config("head_classes must be positive".into()));
            }
            Some(c)
        }
        (None, OutputMap::LogSoftmax) => Some(class_count(g)?),
        (None, _) => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.init_seed);
    Ok(ModelParams::new(
        spec.arch,
        input_dim,
        &spec.dims,
        head,
        spec.output,
        &mut rng,
    ))
}

fn standard_notes(train: &TrainConfig) -> Vec<String> {
    let mut notes =
        vec!["weights use glorot-uniform initialization from the model init_seed".to_string()];
    if matches!(train.sampler.comp_sampler, CompSampler::Fastgcn { .. }) {
        notes.push("layerwise importance sampling draws without replacement".to_string());
    }
    notes
}

fn stop_reason_name(reason: StopReason) -> &'static str {
    match reason {
        StopReason::ThresholdAtInit => "threshold at init",
        StopReason::EmaBelowThreshold => "smoothed gradient norm below threshold",
        StopReason::MaxEpochs => "max epochs",
    }
}

fn run_training(
    g: &AttributedGraph,
    params: &ModelParams,
    train: &TrainConfig,
) -> Result<TrainOutcome, CliError> {
    match train.sampler.subgraph_sampler {
        SubgraphSampler::WholeGraph => Ok(train_full(g, params, train)?),
        SubgraphSampler::Bfs { .. } => Ok(train_on_subgraphs(g, params, train)?),
    }
}

pub fn cmd_train(config_path: &Path, globals: &Globals) -> Result<(), CliError> {
    let cfg = load_effective(config_path, globals)?;
    let dataset = require(&cfg.dataset, "dataset")?;
    let model = require(&cfg.model, "model")?;
    let train = require(&cfg.train, "train")?.clone();
    train.validate().map_err(CliError::from)?;

    let g = load_dataset(dataset)?;
    let params0 = build_model(model, &g)?;

    let mut manifest = Manifest::new("train", cfg.clone());
    manifest.dataset_checksum = Some(dataset_checksum(&g));
    manifest.notes = standard_notes(&train);
    write_manifest(&globals.out_dir, &manifest)?;

    let outcome = run_training(&g, &params0, &train)?;

    let metrics_path = globals.out_dir.join("metrics.csv");
    std::fs::write(&metrics_path, metrics_csv(&outcome.metrics.rows))?;
    let ckpt_path = globals.out_dir.join("checkpoint.bin");
    save_checkpoint(&outcome.params, "manifest.json", &ckpt_path)?;

    manifest.completed = true;
    manifest.outputs = vec!["metrics.csv".into(), "checkpoint.bin".into()];
    write_manifest(&globals.out_dir, &manifest)?;

    println!(
        "stopped after {} epochs ({})",
        outcome.metrics.stop_epoch,
        stop_reason_name(outcome.metrics.stop_reason)
    );
    if let Some(row) = outcome.metrics.rows.last() {
        println!(
            "final accuracy train {} val {} test {}",
            row.train_acc, row.val_acc, row.test_acc
        );
    }
    Ok(())
}

fn generate_graph(
    spec: &GeneratorSpec,
    n: usize,
    seed: u64,
) -> Result<AttributedGraph, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec {
        GeneratorSpec::ErdosRenyi { lambda } => Ok(gen_erdos_renyi(n, *lambda, &mut rng)?),
        GeneratorSpec::ConfigModel { degree_pattern } => {
            if degree_pattern.is_empty() {
                return Err(CliError::Config("degree pattern must be non-empty".into()));
            }
            let mut degrees: Vec<usize> =
                (0..n).map(|i| degree_pattern[i % degree_pattern.len()]).collect();
            if degrees.iter().sum::<usize>() % 2 == 1 {
                let last = degrees.last_mut().expect("n >= 1");
                *last += 1;
            }
            Ok(gen_config_model(&degrees, &mut rng)?)
        }
        GeneratorSpec::PrefAttachment { m } => Ok(gen_pref_attachment(n, *m, &mut rng)?),
    }
}

fn build_reference(
    spec: &ReferenceSpec,
    radius: usize,
) -> Result<CensusDistribution, CliError> {
    match spec {
        ReferenceSpec::Poisson { lambda, max_deg } => {
            if radius != 1 {
                return Err(CliError::Config(
                    "the analytic Poisson reference is a depth-1 law; use galton_watson for deeper censuses".into(),
                ));
            }
            Ok(poisson_depth1_reference(*lambda, *max_deg)?)
        }
        ReferenceSpec::GaltonWatson { lambda, samples } => {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            Ok(sample_gw_reference(*lambda, radius, *samples, &mut rng)?)
        }
    }
}

pub fn cmd_census(config_path: &Path, globals: &Globals) -> Result<(), CliError> {
    let cfg = load_effective(config_path, globals)?;
    let spec = require(&cfg.census, "census")?.clone();
    if spec.generator.is_some() && spec.sizes.is_empty() {
        return Err(CliError::Config(
            "a generator sweep needs a non-empty `sizes` list".into(),
        ));
    }
    if spec.seeds.is_empty() {
        return Err(CliError::Config("census needs at least one seed".into()));
    }

    let mut manifest = Manifest::new("census", cfg.clone());
    write_manifest(&globals.out_dir, &manifest)?;

    let reference = match &spec.reference {
        Some(r) => Some(build_reference(r, spec.radius)?),
        None => None,
    };

    let mut outputs: Vec<String> = Vec::new();
    let mut rows: Vec<ConvergenceRow> = Vec::new();

    let run_one = |g: &AttributedGraph,
                       n: usize,
                       seed: u64,
                       name: String,
                       outputs: &mut Vec<String>,
                       rows: &mut Vec<ConvergenceRow>|
     -> Result<(), CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let census =
            neighborhood_census(g, spec.radius, spec.attributed, spec.sample_cap, &mut rng)?;
        std::fs::write(globals.out_dir.join(&name), census_tsv(&census))?;
        outputs.push(name);
        if let Some(reference) = &reference {
            let tv = tv_distance(&census, reference)?;
            println!("n={n} seed={seed} tv={tv}");
            rows.push(ConvergenceRow { n, seed, k: spec.radius, tv });
        } else {
            println!("n={n} seed={seed} signatures={}", census.probs.len());
        }
        Ok(())
    };

    match &spec.generator {
        Some(generator) => {
            for &n in &spec.sizes {
                for &seed in &spec.seeds {
                    let g = generate_graph(generator, n, seed)?;
                    run_one(
                        &g,
                        n,
                        seed,
                        format!("census_n{n}_seed{seed}.tsv"),
                        &mut outputs,
                        &mut rows,
                    )?;
                }
            }
        }
        None => {
            let dataset = require(&cfg.dataset, "dataset")?;
            let g = load_dataset(dataset)?;
            manifest.dataset_checksum = Some(dataset_checksum(&g));
            run_one(
                &g,
                g.node_count(),
                spec.seeds[0],
                "census.tsv".into(),
                &mut outputs,
                &mut rows,
            )?;
        }
    }

    if !rows.is_empty() {
        std::fs::write(globals.out_dir.join("convergence.csv"), convergence_csv(&rows))?;
        outputs.push("convergence.csv".into());
    }

    manifest.completed = true;
    manifest.outputs = outputs;
    write_manifest(&globals.out_dir, &manifest)?;
    Ok(())
}

#[derive(Serialize)]
struct GradcheckRow {
    arch: String,
    loss: String,
    max_rel_error: f64,
    mean_rel_error: f64,
    checked: usize,
    skipped_kinks: usize,
    tolerance: f64,
    passed: bool,
}

fn gradcheck_instance(nodes: usize, rng: &mut ChaCha8Rng) -> AttributedGraph {
    let mut edges = Vec::new();
    let p = (4.0 / nodes as f64).min(1.0);
    for i in 0..nodes {
        for j in (i + 1)..nodes {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let dim = 5;
    let rows: Vec<Vec<(u32, f64)>> = (0..nodes)
        .map(|_| {
            (0..3)
                .map(|_| (rng.random_range(0..dim as u32), rng.random_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    let labels: Vec<i64> = (0..nodes).map(|_| rng.random_range(0..3)).collect();
    let features = FeatureMatrix::from_rows(dim, rows);
    AttributedGraph::from_edges(
        nodes,
        &edges,
        features,
        labels,
        vec![true; nodes],
        vec![false; nodes],
        vec![false; nodes],
    )
    .expect("generated instance is valid")
}

pub fn cmd_gradcheck(config_path: &Path, globals: &Globals) -> Result<(), CliError> {
    let cfg = load_effective(config_path, globals)?;
    let spec: GradcheckSpec = cfg.gradcheck.clone().unwrap_or_default();
    if spec.nodes < 6 {
        return Err(CliError::Config(
            "the check instance needs at least 6 nodes".into(),
        ));
    }

    let mut manifest = Manifest::new("gradcheck", cfg.clone());
    write_manifest(&globals.out_dir, &manifest)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let g = gradcheck_instance(spec.nodes, &mut rng);
    let seeds: Vec<usize> = (0..4).collect();
    let labels: Vec<i64> = seeds.iter().map(|&v| g.label(v)).collect();
    let pairs = [(0usize, 1usize), (2, 3)];
    let negatives = vec![vec![1usize, 3], vec![0, 2]];

    let mut report_rows: Vec<GradcheckRow> = Vec::new();
    let mut all_passed = true;
    let mut corrupted = spec.corrupt_gradient;

    for arch in [Architecture::Gcn, Architecture::Sage, Architecture::Gin] {
        for nll in [true, false] {
            let params = {
                let mut prng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0xabcd);
                if nll {
                    ModelParams::new(arch, 5, &[5, 4], Some(3), OutputMap::LogSoftmax, &mut prng)
                } else {
                    ModelParams::new(arch, 5, &[5, 4], None, OutputMap::Identity, &mut prng)
                }
            };
            let cg = full_computational_graph_batch(&g, &seeds, 2)?;
            let target = if nll {
                LossTarget::Nll { labels: &labels }
            } else {
                LossTarget::NegSample { pairs: &pairs, negatives: &negatives }
            };
            let mut rec = backward(&params, &cg, g.features(), &target)?;
            if corrupted {
                rec.layers[0][0][[0, 0]] += 0.5;
                corrupted = false;
            }
            let report = finite_diff_check_record(
                &params,
                &cg,
                g.features(),
                &target,
                spec.step,
                &rec,
            )?;
            let passed = report.max_rel_error <= spec.tolerance && report.checked > 0;
            all_passed &= passed;
            let arch_name = format!("{arch:?}").to_lowercase();
            let loss_name = if nll { "nll" } else { "negsample" };
            println!(
                "{arch_name} {loss_name}: max rel error {:.3e} over {} coords ({} kinks skipped) [{}]",
                report.max_rel_error,
                report.checked,
                report.skipped_kinks,
                if passed { "ok" } else { "FAILED" }
            );
            report_rows.push(GradcheckRow {
                arch: arch_name,
                loss: loss_name.into(),
                max_rel_error: report.max_rel_error,
                mean_rel_error: report.mean_rel_error,
                checked: report.checked,
                skipped_kinks: report.skipped_kinks,
                tolerance: spec.tolerance,
                passed,
            });
        }
    }

    {
        let mut prng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x1357);
        let params =
            ModelParams::new(Architecture::Gcn, 5, &[3], None, OutputMap::Identity, &mut prng);
        let cg = full_computational_graph_batch(&g, &seeds, 1)?;
        let target = LossTarget::NegSample { pairs: &pairs, negatives: &negatives };
        let rec = backward(&params, &cg, g.features(), &target)?;
        let report =
            finite_diff_check_record(&params, &cg, g.features(), &target, spec.step, &rec)?;
        let passed = report.max_rel_error <= spec.linear_tolerance && report.checked > 0;
        all_passed &= passed;
        println!(
            "linear fixture: max rel error {:.3e} over {} coords [{}]",
            report.max_rel_error,
            report.checked,
            if passed { "ok" } else { "FAILED" }
        );
        report_rows.push(GradcheckRow {
            arch: "gcn".into(),
            loss: "negsample (linear fixture)".into(),
            max_rel_error: report.max_rel_error,
            mean_rel_error: report.mean_rel_error,
            checked: report.checked,
            skipped_kinks: report.skipped_kinks,
            tolerance: spec.linear_tolerance,
            passed,
        });
    }

    let report_text = serde_json::to_string_pretty(&report_rows)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(globals.out_dir.join("gradcheck_report.json"), report_text + "\n")?;

    manifest.completed = true;
    manifest.outputs = vec!["gradcheck_report.json".into()];
    write_manifest(&globals.out_dir, &manifest)?;

    if !all_passed {
        return Err(CliError::Runtime(
            "analytic gradients disagree with finite differences; see gradcheck_report.json"
                .into(),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareSeedRow {
    seed: u64,
    full_test_acc: f64,
    sub_test_acc: f64,
    /// Full-graph accuracy minus subgraph accuracy, in points.
    gap_points: f64,
    full_grad_norm: f64,
    sub_grad_norm: f64,
    norm_ratio: f64,
}

#[derive(Serialize)]
struct CompareReport {
    rows: Vec<CompareSeedRow>,
    median_gap_points: f64,
    median_norm_ratio: f64,
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("medians of finite values"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn cmd_compare(config_path: &Path, globals: &Globals) -> Result<(), CliError> {
    let cfg = load_effective(config_path, globals)?;
    let dataset = require(&cfg.dataset, "dataset")?;
    let model = require(&cfg.model, "model")?;
    let train = require(&cfg.train, "train")?.clone();
    let compare = require(&cfg.compare, "compare")?.clone();
    train.validate().map_err(CliError::from)?;
    if compare.seeds.is_empty() {
        return Err(CliError::Config("compare needs at least one seed".into()));
    }
    if !matches!(train.sampler.subgraph_sampler, SubgraphSampler::Bfs { .. }) {
        return Err(CliError::Config(
            "compare needs a bfs subgraph sampler for the subgraph arm".into(),
        ));
    }
    if train.loss != LossKind::Nll {
        return Err(CliError::Config(
            "compare reports classification accuracy, so the loss must be nll".into(),
        ));
    }

    let g = load_dataset(dataset)?;
    let mut manifest = Manifest::new("compare", cfg.clone());
    manifest.dataset_checksum = Some(dataset_checksum(&g));
    manifest.notes = standard_notes(&train);
    manifest.notes.push(
        "per seed, both arms start from the same initialization (init_seed + trial seed)"
            .to_string(),
    );
    write_manifest(&globals.out_dir, &manifest)?;

    let mut outputs: Vec<String> = Vec::new();
    let mut rows: Vec<CompareSeedRow> = Vec::new();
    for &seed in &compare.seeds {
        let mut spec = model.clone();
        spec.init_seed = model.init_seed.wrapping_add(seed);
        let params0 = build_model(&spec, &g)?;

        let mut cfg_full = train.clone();
        cfg_full.sampler.subgraph_sampler = SubgraphSampler::WholeGraph;
        cfg_full.seed = seed;
        let full = train_full(&g, &params0, &cfg_full)?;

        let mut cfg_sub = train.clone();
        cfg_sub.seed = seed;
        let sub = train_on_subgraphs(&g, &params0, &cfg_sub)?;

        let full_acc = evaluate(&full.params, &g, Split::Test)?.accuracy;
        let sub_acc = evaluate(&sub.params, &g, Split::Test)?.accuracy;
        let full_norm = limit_gradient_check(&full.params, &g)?;
        let sub_norm = limit_gradient_check(&sub.params, &g)?;

        let full_name = format!("full_seed{seed}.csv");
        std::fs::write(globals.out_dir.join(&full_name), metrics_csv(&full.metrics.rows))?;
        let sub_name = format!("sub_seed{seed}.csv");
        std::fs::write(globals.out_dir.join(&sub_name), metrics_csv(&sub.metrics.rows))?;
        outputs.push(full_name);
        outputs.push(sub_name);

        let row = CompareSeedRow {
            seed,
            full_test_acc: full_acc,
            sub_test_acc: sub_acc,
            gap_points: 100.0 * (full_acc - sub_acc),
            full_grad_norm: full_norm,
            sub_grad_norm: sub_norm,
            norm_ratio: sub_norm / full_norm,
        };
        println!(
            "seed {}: full {:.4} sub {:.4} gap {:+.2} points, norm ratio {:.3}",
            seed, row.full_test_acc, row.sub_test_acc, row.gap_points, row.norm_ratio
        );
        rows.push(row);
    }

    let mut gaps: Vec<f64> = rows.iter().map(|r| r.gap_points).collect();
    let mut ratios: Vec<f64> = rows.iter().map(|r| r.norm_ratio).collect();
    let report = CompareReport {
        median_gap_points: median(&mut gaps),
        median_norm_ratio: median(&mut ratios),
        rows,
    };
    println!(
        "median gap {:+.2} points, median norm ratio {:.3}",
        report.median_gap_points, report.median_norm_ratio
    );
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(globals.out_dir.join("compare_report.json"), text + "\n")?;
    outputs.push("compare_report.json".into());

    manifest.completed = true;
    manifest.outputs = outputs;
    write_manifest(&globals.out_dir, &manifest)?;
    Ok(())
}

pub fn cmd_gen(config_path: &Path, globals: &Globals) -> Result<(), CliError> {
    let cfg = load_effective(config_path, globals)?;
    let dataset = require(&cfg.dataset, "dataset")?;
    if matches!(dataset, crate::config::DatasetSpec::Files { .. }) {
        return Err(CliError::Config(
            "gen writes generated datasets; the files dataset is already on disk".into(),
        ));
    }
    let g = load_dataset(dataset)?;

    let mut manifest = Manifest::new("gen", cfg.clone());
    manifest.dataset_checksum = Some(dataset_checksum(&g));
    write_manifest(&globals.out_dir, &manifest)?;

    let dir = globals.out_dir.join("dataset");
    std::fs::create_dir_all(&dir)?;
    let paths = DatasetPaths::under(&dir);
    write_dataset(&g, &paths)?;

    manifest.completed = true;
    manifest.outputs = vec![
        "dataset/edges.txt".into(),
        "dataset/features.csv".into(),
        "dataset/labels.txt".into(),
        "dataset/splits.txt".into(),
    ];
    write_manifest(&globals.out_dir, &manifest)?;
    println!(
        "wrote {} nodes / {} edges to {} (checksum {})",
        g.node_count(),
        g.edge_count(),
        dir.display(),
        manifest.dataset_checksum.as_deref().unwrap_or("-")
    );
    Ok(())
}
