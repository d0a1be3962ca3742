//! The per-seed protocol: split, propagate, train with calibrated noise,
//! select, unlearn, retrain, evaluate.

use std::time::{Duration, Instant};

use fairwipe_core::fairness::{
    alpha_diagnostics, fairness_metrics, pearson_correlations, pooled_std, raw_sp_and_bound,
    select_edges_with, select_features_with, select_nodes_with, SelectionKind,
};
use fairwipe_core::graph::{aggregate, build_propagation, AggregatedFeatures, GraphDataset};
use fairwipe_core::model::{accuracy, predict, train, LossSpec, TrainConfig, TrainedModel};
use fairwipe_core::synthetic::{generate, random_split_masks};
use fairwipe_core::unlearn::{
    calibrate_noise, retrain_oracle, sequential_unlearn, worstcase_bound_feature,
    CertificationBudget, RemovalRequest,
};
use log::{error, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Arm, ExperimentConfig, Resolved};
use crate::error::{BenchError, Result};
use crate::manifest::{load_dataset, DatasetManifest};

/// Headroom on the residual of a noise-free dry run when it sets `ε′` for
/// structural removals; the residual under the drawn noise differs slightly.
pub const DRY_RUN_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Seed,
    Mean,
    Std,
}

impl RowKind {
    pub fn name(self) -> &'static str {
        match self {
            RowKind::Seed => "seed",
            RowKind::Mean => "mean",
            RowKind::Std => "std",
        }
    }
}

/// One result line. Rates and gaps are fractions in `[0, 1]`; wall times
/// are seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub task: String,
    pub selector: String,
    pub arm: String,
    pub seed: Option<u64>,
    pub k: usize,
    pub accuracy: f64,
    pub delta_sp: f64,
    pub delta_eo: f64,
    pub raw_sp: f64,
    /// `‖ρ‖` over the columns of `Z`, the matrix the scores come from.
    pub rho_norm: f64,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub residual_norm: Option<f64>,
    pub worstcase_bound: Option<f64>,
    pub certified: Option<bool>,
    pub wall_time: f64,
    pub row: RowKind,
    pub setting: String,
    pub val_accuracy: f64,
    /// `‖ρ‖` over the columns of `X`.
    pub rho_norm_x: f64,
    pub sp_bound: f64,
}

/// Loads the dataset a config points at, without splits.
pub fn load_source(config: &ExperimentConfig) -> Result<(String, GraphDataset)> {
    match (&config.manifest, &config.synthetic) {
        (Some(path), None) => {
            let manifest = DatasetManifest::from_path(path)?;
            let dataset = load_dataset(&manifest)?;
            Ok((manifest.name, dataset))
        }
        (None, Some(source)) => Ok((source.name.clone(), generate(&source.spec())?)),
        _ => Err(BenchError::Config("exactly one of `manifest` and `[synthetic]` must be given".into())),
    }
}

/// Random train/validation/test masks for `seed`. The draw is repeated once
/// with a derived seed if the test set lacks a sensitive group or a group
/// has no positive label in it.
pub fn make_splits(dataset: &GraphDataset, fractions: [f64; 3], seed: u64) -> Result<GraphDataset> {
    for attempt in [seed, seed ^ 0x9e37_79b9_7f4a_7c15] {
        let (train, val, test) = random_split_masks(dataset.n_nodes(), fractions, attempt)?;
        if test_covers_groups(dataset, &test) {
            return Ok(dataset.with_splits(train, val, test)?);
        }
        warn!("seed {seed}: test split misses a sensitive group, resampling");
    }
    Err(BenchError::DataValidation(format!(
        "seed {seed}: test split misses a sensitive group twice"
    )))
}

fn test_covers_groups(dataset: &GraphDataset, test: &[bool]) -> bool {
    let s = dataset.sensitive();
    let y = dataset.labels();
    (0..2u8).all(|g| (0..test.len()).any(|i| test[i] && s[i] == g && y[i] == 1))
}

/// Runs every seed (in parallel) and appends mean and standard deviation
/// rows per arm. Failed seeds are logged and left out.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let (name, dataset) = load_source(config)?;
    run_on_dataset(config, &name, &dataset, "")
}

pub fn run_on_dataset(
    config: &ExperimentConfig,
    name: &str,
    dataset: &GraphDataset,
    setting: &str,
) -> Result<Vec<ResultRow>> {
    let resolved = config.resolve()?;
    let per_seed: Vec<(u64, Result<Vec<ResultRow>>)> = config
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_seed(config, &resolved, name, dataset, setting, seed)))
        .collect();
    let mut rows = Vec::new();
    for (seed, outcome) in per_seed {
        match outcome {
            Ok(r) => rows.extend(r),
            Err(e) => error!("seed {seed} failed: {e}"),
        }
    }
    if rows.is_empty() {
        return Err(BenchError::DataValidation("every seed failed".into()));
    }
    let mut aggregates = Vec::new();
    for arm in [Arm::Pretrained, Arm::Unlearn, Arm::Retrain] {
        let group: Vec<&ResultRow> = rows.iter().filter(|r| r.arm == arm.name()).collect();
        if !group.is_empty() {
            aggregates.extend(summarize(&group));
        }
    }
    rows.extend(aggregates);
    Ok(rows)
}

struct Evaluation {
    accuracy: f64,
    val_accuracy: f64,
    delta_sp: f64,
    delta_eo: f64,
    raw_sp: f64,
    sp_bound: f64,
    rho_norm: f64,
    rho_norm_x: f64,
    alpha: Option<(f64, f64)>,
}

fn evaluate(dataset: &GraphDataset, z: &AggregatedFeatures, model: &TrainedModel) -> Result<Evaluation> {
    let (pred, _) = predict(model, z)?;
    let s = dataset.sensitive();
    let (delta_sp, delta_eo) = fairness_metrics(&pred, dataset.labels(), s, dataset.test_mask())?;
    let raw = raw_sp_and_bound(
        z.values(),
        &model.weights,
        s,
        model.lambda,
        &LossSpec::logistic(),
        pooled_std(z.values()),
    )?;
    Ok(Evaluation {
        accuracy: accuracy(&pred, dataset.labels(), dataset.test_mask()),
        val_accuracy: accuracy(&pred, dataset.labels(), dataset.val_mask()),
        delta_sp,
        delta_eo,
        raw_sp: raw.raw_sp,
        sp_bound: raw.bound,
        rho_norm: raw.rho_norm,
        rho_norm_x: pearson_correlations(dataset.features(), s)?.norm(),
        alpha: alpha_diagnostics(dataset).ok(),
    })
}

/// Removal requests in execution order and the reported budget.
fn select(
    dataset: &GraphDataset,
    config: &ExperimentConfig,
    resolved: &Resolved,
    seed: u64,
) -> Result<(Vec<RemovalRequest>, usize)> {
    let k = config.k.unwrap_or(0);
    Ok(match resolved.task {
        SelectionKind::Feature => {
            let sel = select_features_with(dataset.features(), dataset.sensitive(), k, resolved.rule, seed)?;
            (vec![sel.to_request()], k)
        }
        SelectionKind::Node => {
            let sel = select_nodes_with(dataset, k, resolved.scope, resolved.rule, seed)?;
            (vec![sel.to_request()], k)
        }
        SelectionKind::Edge => {
            let total = (config.edge_fraction * dataset.n_edges() as f64).round() as usize;
            let sel = select_edges_with(dataset, total, resolved.rule, seed)?;
            let per_batch = total.div_ceil(config.edge_batches).max(1);
            let requests = sel
                .chosen
                .chunks(per_batch)
                .map(|c| RemovalRequest::Edges(c.to_vec()))
                .collect();
            (requests, sel.chosen.len())
        }
    })
}

fn run_seed(
    config: &ExperimentConfig,
    resolved: &Resolved,
    name: &str,
    dataset: &GraphDataset,
    setting: &str,
    seed: u64,
) -> Result<Vec<ResultRow>> {
    let clock = |d: Duration| if config.record_timing { d.as_secs_f64() } else { 0.0 };
    let g = make_splits(dataset, config.split, seed)?;
    let z = aggregate(&g, &build_propagation(&g, config.hops), resolved.scheme)?;
    let train_cfg = TrainConfig {
        lambda: config.lambda,
        tolerance: config.tolerance,
        max_iterations: config.max_iterations,
        seed,
    };

    let started = Instant::now();
    let (requests, k) = select(&g, config, resolved, seed)?;
    let selection_time = started.elapsed();

    let epsilon_prime = match (resolved.task, config.epsilon_prime) {
        (_, Some(e)) => e,
        (SelectionKind::Feature, None) => worstcase_bound_feature(
            z.n_features(),
            k,
            g.train_count(),
            &LossSpec::logistic(),
            config.lambda,
        )?,
        (_, None) => {
            let dry = train(&g, &z, &train_cfg, 0.0)?;
            let open = CertificationBudget::new(config.epsilon, config.delta, f64::INFINITY)?;
            DRY_RUN_MARGIN * sequential_unlearn(&dry, &g, &z, &requests, open)?.budget.accumulated_residual
        }
    };
    let budget = CertificationBudget::new(config.epsilon, config.delta, epsilon_prime)?;
    let noise_std = calibrate_noise(&budget);
    info!("seed {seed}: epsilon' {epsilon_prime:.4e}, noise std {noise_std:.4e}");
    let model = train(&g, &z, &train_cfg, noise_std)?;

    let row = |arm: Arm, ev: Evaluation, wall: f64| ResultRow {
        dataset: name.to_string(),
        task: resolved.task.name().to_string(),
        selector: resolved.rule.name().to_string(),
        arm: arm.name().to_string(),
        seed: Some(seed),
        k,
        accuracy: ev.accuracy,
        delta_sp: ev.delta_sp,
        delta_eo: ev.delta_eo,
        raw_sp: ev.raw_sp,
        rho_norm: ev.rho_norm,
        alpha1: ev.alpha.map(|a| a.0),
        alpha2: ev.alpha.map(|a| a.1),
        residual_norm: None,
        worstcase_bound: None,
        certified: None,
        wall_time: wall,
        row: RowKind::Seed,
        setting: setting.to_string(),
        val_accuracy: ev.val_accuracy,
        rho_norm_x: ev.rho_norm_x,
        sp_bound: ev.sp_bound,
    };

    let mut rows = Vec::new();
    if config.arms.contains(&Arm::Pretrained) {
        rows.push(row(Arm::Pretrained, evaluate(&g, &z, &model)?, 0.0));
    }
    if !config.arms.iter().any(|a| matches!(a, Arm::Unlearn | Arm::Retrain)) {
        return Ok(rows);
    }

    let edited = if config.arms.contains(&Arm::Unlearn) {
        let out = sequential_unlearn(&model, &g, &z, &requests, budget)?;
        let update: Duration = out.steps.iter().map(|s| s.wall_time).sum();
        let mut r = row(
            Arm::Unlearn,
            evaluate(&out.dataset, &out.aggregated, &out.model)?,
            clock(selection_time + update),
        );
        r.residual_norm = Some(out.budget.accumulated_residual);
        r.worstcase_bound = out.steps.last().and_then(|s| s.worstcase_bound);
        r.certified = Some(out.budget.certified());
        rows.push(r);
        out.dataset
    } else {
        requests.iter().try_fold(g.clone(), |d, r| r.apply(&d))?
    };

    if config.arms.contains(&Arm::Retrain) {
        let started = Instant::now();
        let (oracle, z_new) =
            retrain_oracle(&edited, resolved.scheme, config.hops, &train_cfg, &model.perturbation)?;
        let wall = clock(started.elapsed());
        rows.push(row(Arm::Retrain, evaluate(&edited, &z_new, &oracle)?, wall));
    }
    Ok(rows)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean and sample standard deviation (`n − 1`; zero for one seed) rows.
pub fn summarize(rows: &[&ResultRow]) -> [ResultRow; 2] {
    let first = rows[0];
    let stat = |f: &dyn Fn(&ResultRow) -> f64| mean_std(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
    let opt = |f: &dyn Fn(&ResultRow) -> Option<f64>| -> Option<(f64, f64)> {
        let v: Option<Vec<f64>> = rows.iter().map(|r| f(r)).collect();
        v.map(|v| mean_std(&v))
    };
    let pick = |kind: RowKind| {
        let sel = |p: (f64, f64)| if kind == RowKind::Mean { p.0 } else { p.1 };
        ResultRow {
            seed: None,
            accuracy: sel(stat(&|r| r.accuracy)),
            delta_sp: sel(stat(&|r| r.delta_sp)),
            delta_eo: sel(stat(&|r| r.delta_eo)),
            raw_sp: sel(stat(&|r| r.raw_sp)),
            rho_norm: sel(stat(&|r| r.rho_norm)),
            alpha1: opt(&|r| r.alpha1).map(sel),
            alpha2: opt(&|r| r.alpha2).map(sel),
            residual_norm: opt(&|r| r.residual_norm).map(sel),
            worstcase_bound: opt(&|r| r.worstcase_bound).map(sel),
            certified: match kind {
                RowKind::Mean => rows.iter().map(|r| r.certified).collect::<Option<Vec<bool>>>().map(|c| c.iter().all(|&b| b)),
                _ => None,
            },
            wall_time: sel(stat(&|r| r.wall_time)),
            row: kind,
            val_accuracy: sel(stat(&|r| r.val_accuracy)),
            rho_norm_x: sel(stat(&|r| r.rho_norm_x)),
            sp_bound: sel(stat(&|r| r.sp_bound)),
            ..first.clone()
        }
    };
    [pick(RowKind::Mean), pick(RowKind::Std)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std_convention() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }
}
