use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;

use super::manifest::{unix_now, RunManifest};
use super::svg::{frontier_svg, histogram_svg};
use super::{Cli, CliError, Command, GlobalArgs, Task, TrainArgs};
use crate::datagen::{
    generate_paired_dataset, generate_structured_arrival_dataset, load_jsonl, save_jsonl, split,
    ModalityRegistry, MultimodalSequence, PairedConfig, StructuredConfig,
};
use crate::error::Error;
use crate::eval::{
    flow_table, frontier_auc, pareto_frontier, read_points_csv, rollouts, stopping_time_histogram,
    write_auc_summary_csv, write_flows_csv, write_frontier_csv, write_histogram_csv,
    write_points_csv, AucRow, Method, TradeoffPoint,
};
use crate::sttransformer::{load_checkpoint, save_checkpoint};
use crate::trainer::{sweep, train_model, write_log_csv, TrainConfig};

type CliResult<T> = Result<T, CliError>;

pub(super) fn execute(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Generate { task, n, output } => generate(g, *task, *n, output.as_deref()),
        Command::Train(args) => train_cmd(g, args),
        Command::Sweep {
            train,
            mu_list,
            trials,
        } => sweep_cmd(g, train, mu_list, *trials),
        Command::Report {
            points,
            t_end,
            chance,
            data,
            rollouts,
            svg,
        } => report(g, points, *t_end, *chance, data.as_deref(), rollouts, *svg),
    }
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))
}

fn load_dataset(path: &Path) -> CliResult<Vec<MultimodalSequence>> {
    if !path.is_file() {
        return Err(
            Error::InvalidArgument(format!("dataset not found: {}", path.display())).into(),
        );
    }
    let data = load_jsonl(path, &ModalityRegistry::standard())?;
    if data.is_empty() {
        return Err(Error::InvalidArgument(format!("dataset {} is empty", path.display())).into());
    }
    Ok(data)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::from(e).into())
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn generate(g: &GlobalArgs, task: Task, n: Option<usize>, output: Option<&Path>) -> CliResult<()> {
    let started = unix_now();
    let (data, config, seed, name) = match task {
        Task::Paired => {
            let mut cfg: PairedConfig = read_config(g.config.as_deref())?;
            cfg.seed = g.seed.unwrap_or(cfg.seed);
            cfg.samples = n.unwrap_or(cfg.samples);
            (
                generate_paired_dataset(&cfg)?,
                to_json(&cfg),
                cfg.seed,
                "paired",
            )
        }
        Task::StructuredArrival => {
            let mut cfg: StructuredConfig = read_config(g.config.as_deref())?;
            cfg.seed = g.seed.unwrap_or(cfg.seed);
            cfg.samples = n.unwrap_or(cfg.samples);
            (
                generate_structured_arrival_dataset(&cfg)?,
                to_json(&cfg),
                cfg.seed,
                "structured_arrival",
            )
        }
    };
    let out = output.map_or_else(
        || g.out_dir.join(format!("{name}.jsonl")),
        Path::to_path_buf,
    );
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    create_dir(&g.out_dir)?;
    save_jsonl(&out, &data)?;
    eprintln!("wrote {} sequences to {}", data.len(), out.display());
    let mut m = RunManifest::new("generate", config, vec![seed], started);
    m.artifacts.push(out);
    m.write(&g.out_dir)?;
    Ok(())
}

fn train_config(g: &GlobalArgs, a: &TrainArgs) -> CliResult<TrainConfig> {
    let mut cfg: TrainConfig = read_config(g.config.as_deref())?;
    if let Some(o) = a.objective {
        cfg.objective = o.into();
    }
    cfg.mu = a.mu.unwrap_or(cfg.mu);
    cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
    cfg.learning_rate = a.learning_rate.unwrap_or(cfg.learning_rate);
    cfg.seed = g.seed.unwrap_or(cfg.seed);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if !(a.holdout > 0.0 && a.holdout < 1.0) {
        return Err(CliError::Usage(format!(
            "--holdout must lie in (0, 1), got {}",
            a.holdout
        )));
    }
    Ok(cfg)
}

type Splits = (
    Vec<MultimodalSequence>,
    Vec<MultimodalSequence>,
    Vec<MultimodalSequence>,
);

fn load_split(a: &TrainArgs, cfg: &TrainConfig) -> CliResult<Splits> {
    let data = load_dataset(&a.data)?;
    let (tr, va) = split(&data, a.holdout, cfg.seed)?;
    if tr.is_empty() || va.is_empty() {
        return Err(Error::InvalidArgument(
            "holdout leaves an empty train or validation set".into(),
        )
        .into());
    }
    Ok((data, tr, va))
}

fn train_cmd(g: &GlobalArgs, a: &TrainArgs) -> CliResult<()> {
    let started = unix_now();
    let cfg = train_config(g, a)?;
    let (data, tr, va) = load_split(a, &cfg)?;
    let model_cfg = cfg.model_config(&data)?;
    let model = crate::sttransformer::SpatialTemporalModel::new(model_cfg, cfg.seed)?;
    let label = cfg.objective;
    let out = train_model(model, &tr, &va, &cfg, |r| {
        eprintln!(
            "[{label}] epoch {} loss {:.4} mean_T {:.3} accuracy {:.4}",
            r.epoch, r.loss, r.mean_t, r.accuracy
        )
    })?;
    create_dir(&g.out_dir)?;
    let ckpt = g.out_dir.join(format!("{label}_model.json"));
    let log = g.out_dir.join(format!("{label}_log.csv"));
    let points = g.out_dir.join(format!("{label}_points.csv"));
    save_checkpoint(&out.model, &ckpt)?;
    write_log_csv(&log, &out.log)?;
    write_points_csv(&points, &out.points)?;
    let mut m = RunManifest::new("train", to_json(&cfg), vec![cfg.seed], started);
    m.artifacts = vec![ckpt, log, points];
    m.write(&g.out_dir)?;
    Ok(())
}

fn sweep_cmd(g: &GlobalArgs, a: &TrainArgs, mus: &[f64], trials: usize) -> CliResult<()> {
    let started = unix_now();
    let cfg = train_config(g, a)?;
    if mus.is_empty() || trials == 0 || mus.iter().any(|m| m.is_nan() || *m < 0.0) {
        return Err(CliError::Usage(
            "need a nonempty --mu-list of values >= 0 and --trials >= 1".into(),
        ));
    }
    let (data, tr, va) = load_split(a, &cfg)?;
    let model_cfg = cfg.model_config(&data)?;
    let label = cfg.objective;
    eprintln!(
        "[{label}] sweeping {} mu values x {trials} trials",
        mus.len()
    );
    let cells = sweep(&tr, &va, &model_cfg, &cfg, mus, trials, g.workers)?;

    let ckpt_dir = g.out_dir.join("checkpoints");
    create_dir(&ckpt_dir)?;
    let mut artifacts = Vec::new();
    let mut pooled: Vec<TradeoffPoint> = Vec::new();
    let mut failures = Vec::new();
    for c in &cells {
        match &c.result {
            Ok(out) => {
                let path = ckpt_dir.join(format!("{label}_mu{}_trial{}.json", c.mu_index, c.trial));
                save_checkpoint(&out.model, &path)?;
                artifacts.push(path);
                pooled.extend(&out.points);
                if let Some(last) = out.log.last() {
                    eprintln!(
                        "[{label}] mu {} trial {}: mean_T {:.3} accuracy {:.4}",
                        c.mu, c.trial, last.mean_t, last.accuracy
                    );
                }
            }
            Err(e) => failures.push(format!("mu {} trial {}: {e}", c.mu, c.trial)),
        }
    }
    let points = g.out_dir.join(format!("{label}_points.csv"));
    write_points_csv(&points, &pooled)?;
    artifacts.push(points);
    if !failures.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} of {} cells failed:\n  {}",
            failures.len(),
            cells.len(),
            failures.join("\n  ")
        ))
        .into());
    }
    let mut m = RunManifest::new(
        "sweep",
        to_json(&cfg),
        cells.iter().map(|c| c.seed).collect(),
        started,
    );
    m.artifacts = artifacts;
    m.write(&g.out_dir)?;
    Ok(())
}

/// `cis_points.csv` → cis; any stem that starts with a method name.
fn method_of(path: &Path) -> CliResult<Method> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    [Method::Cis, Method::Larm]
        .into_iter()
        .find(|m| stem.starts_with(m.as_str()))
        .ok_or_else(|| {
            CliError::Usage(format!(
                "cannot tell the method of {}: file names must start with `cis` or `larm`",
                path.display()
            ))
        })
}

fn report(
    g: &GlobalArgs,
    points: &[PathBuf],
    t_end: Option<usize>,
    chance: f64,
    data_path: Option<&Path>,
    rollout_specs: &[(Method, PathBuf)],
    svg: bool,
) -> CliResult<()> {
    let started = unix_now();
    if !rollout_specs.is_empty() && data_path.is_none() {
        return Err(CliError::Usage("--rollout needs --data".into()));
    }
    let mut by_method: BTreeMap<Method, Vec<TradeoffPoint>> = BTreeMap::new();
    for p in points {
        let method = method_of(p)?;
        if by_method.contains_key(&method) {
            return Err(CliError::Usage(format!(
                "two points files for method {method}"
            )));
        }
        by_method.insert(method, read_points_csv(p)?);
    }
    let data = data_path.map(load_dataset).transpose()?;
    let t_end = match (t_end, &data) {
        (Some(t), _) => t,
        (None, Some(d)) => d.iter().map(MultimodalSequence::t_end).max().unwrap_or(0),
        (None, None) => return Err(CliError::Usage("report needs --t-end or --data".into())),
    };

    create_dir(&g.out_dir)?;
    let mut artifacts = Vec::new();
    let mut summary = Vec::new();
    let mut plotted = Vec::new();
    for (method, pts) in &by_method {
        let mut trials: BTreeMap<usize, Vec<TradeoffPoint>> = BTreeMap::new();
        for p in pts {
            trials.entry(p.trial).or_default().push(*p);
        }
        let mut rows = Vec::new();
        for (trial, tp) in &trials {
            let f = pareto_frontier(tp)?;
            let path = g
                .out_dir
                .join(format!("{method}_trial{trial}_frontier.csv"));
            write_frontier_csv(&path, &f)?;
            artifacts.push(path);
            rows.push((*trial, frontier_auc(&f, t_end, chance)?));
            plotted.push((format!("{method} trial {trial}"), f));
        }
        let mean = rows.iter().map(|r| r.1).sum::<f64>() / rows.len().max(1) as f64;
        eprintln!(
            "{method}: mean frontier AUC {mean:.4} over {} trials",
            rows.len()
        );
        summary.extend(rows.into_iter().map(|(trial, auc)| AucRow {
            method: *method,
            trial,
            auc,
            mean_auc: mean,
        }));
    }
    let summary_path = g.out_dir.join("auc_summary.csv");
    write_auc_summary_csv(&summary_path, &summary)?;
    artifacts.push(summary_path);
    if svg && !plotted.is_empty() {
        let path = g.out_dir.join("frontiers.svg");
        std::fs::write(&path, frontier_svg(&plotted, t_end)).map_err(Error::from)?;
        artifacts.push(path);
    }

    let seed = g.seed.unwrap_or(0);
    if let Some(data) = &data {
        for (method, ckpt) in rollout_specs {
            let model = load_checkpoint(ckpt)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rs = rollouts(&model, data, *method, &mut rng)?;
            let counts = stopping_time_histogram(&rs, t_end)?;
            let hist = g.out_dir.join(format!("{method}_histogram.csv"));
            let flows = g.out_dir.join(format!("{method}_flows.csv"));
            write_histogram_csv(&hist, &counts)?;
            write_flows_csv(&flows, &flow_table(data, &rs)?)?;
            artifacts.extend([hist, flows]);
            if svg {
                let path = g.out_dir.join(format!("{method}_histogram.svg"));
                std::fs::write(&path, histogram_svg(method.as_str(), &counts))
                    .map_err(Error::from)?;
                artifacts.push(path);
            }
        }
    }
    let config = serde_json::json!({
        "points": points,
        "t_end": t_end,
        "chance": chance,
        "data": data_path,
        "rollouts": rollout_specs.iter().map(|(m, p)| format!("{m}={}", p.display())).collect::<Vec<_>>(),
        "svg": svg,
    });
    let mut m = RunManifest::new("report", config, vec![seed], started);
    m.artifacts = artifacts;
    m.write(&g.out_dir)?;
    Ok(())
}
