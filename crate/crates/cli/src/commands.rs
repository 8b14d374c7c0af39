use std::fmt;
use std::path::{Path, PathBuf};

use binsparx::analysis::{
    profile_model, profile_uniform_random, sweep_deviation, validate_solver as run_validation,
    write_csv_with_config, write_histogram_csv, write_json, write_sweep_csv,
};
use binsparx::config::RunConfig;
use binsparx::dataset::{load_csv, load_idx, Dataset};
use binsparx::devices::WirePreset;
use binsparx::model::load_model;
use binsparx::pipeline::{sparsify_model, Engine};
use binsparx::solver::SolverSettings;
use binsparx::Error;

use crate::{Common, DataArgs};

pub enum Failure {
    Core(Error),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::Io { .. } | Error::Parse { .. } | Error::Json(_)) => 4,
            Failure::Core(Error::NonConvergence { .. } | Error::Solver(_)) => 6,
            Failure::Core(_) => 3,
            Failure::Validation(_) => 5,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn out(cfg: &RunConfig, file: &str) -> PathBuf {
    cfg.run.output_dir.join(file)
}

fn load_data(args: &DataArgs) -> Result<Dataset, Failure> {
    match (&args.dataset, &args.images, &args.labels) {
        (Some(csv), _, _) => Ok(load_csv(csv)?),
        (None, Some(img), Some(lab)) => Ok(load_idx(img, lab)?),
        _ => Err(Error::Config(
            "a dataset is required: --dataset FILE or --images FILE --labels FILE".into(),
        )
        .into()),
    }
}

fn engine(cfg: &RunConfig) -> Result<Engine, Failure> {
    Ok(Engine::new(cfg.engine_config()?)?)
}

pub fn validate_solver(cfg: &RunConfig, common: &Common, columns: usize) -> CmdResult {
    let presets: Vec<WirePreset> = match common.preset {
        Some(p) => vec![p.into()],
        None => vec![WirePreset::M3, WirePreset::M4, WirePreset::M6],
    };
    let ions = match common.ion {
        Some(i) => vec![i],
        None => vec![1e-6, 2e-6],
    };
    let settings = SolverSettings {
        tol: cfg.solver.tol,
        max_iter: cfg.solver.max_iter,
        damping: cfg.solver.damping,
    };
    let v = run_validation(
        &presets,
        &ions,
        cfg.array.n,
        columns,
        &settings,
        cfg.array.topology,
        cfg.run.seed,
        cfg.run.parallelism,
    )?;
    for c in &v.cases {
        println!(
            "{:?} i_on={:e}: max rel error {:.3e}, mean {:.3e}, non-converged {}",
            c.preset, c.i_on, c.max_rel_error, c.mean_rel_error, c.nonconverged
        );
    }
    println!(
        "linear ladder closed form: max rel error {:.3e}",
        v.linear_max_rel_error
    );
    write_json(&out(cfg, "validate_solver.json"), cfg, &v)?;
    if v.passed() {
        println!("PASS (budget {:.1}%)", 100.0 * v.budget);
        Ok(())
    } else {
        Err(Failure::Validation(format!(
            "max rel error {:.3e} against budget {:.1e}",
            v.max_rel_error(),
            v.budget
        )))
    }
}

pub fn profile(
    cfg: &RunConfig,
    model: Option<&Path>,
    data: &DataArgs,
    pairs: Option<usize>,
) -> CmdResult {
    let (n, m) = (cfg.array.n, cfg.array.m);
    let rep = match model {
        Some(path) => {
            let model = load_model(path)?;
            profile_model(&model, &load_data(data)?, n, m, cfg.run.parallelism)?
        }
        None => {
            let pairs = pairs.unwrap_or(cfg.run.trials);
            profile_uniform_random(n, m, pairs, cfg.run.seed, cfg.run.parallelism)?
        }
    };
    let text = cfg.to_toml_string();
    write_histogram_csv(
        &out(cfg, "histogram_baseline.csv"),
        &text,
        &rep.baseline.counts,
    )?;
    write_histogram_csv(
        &out(cfg, "histogram_binsparx.csv"),
        &text,
        &rep.binsparx.counts,
    )?;
    write_json(&out(cfg, "profile.json"), cfg, &rep)?;
    println!(
        "columns {}: baseline mean {:.4}, BinSparX mean {:.4}, reduction {:.2}%",
        rep.baseline.total,
        rep.baseline.mean,
        rep.binsparx.mean,
        100.0 * rep.reduction
    );
    Ok(())
}

pub fn sweep(cfg: &RunConfig, trials: Option<usize>) -> CmdResult {
    let e = engine(cfg)?;
    let xs: Vec<usize> = (1..=cfg.array.n).collect();
    let s = sweep_deviation(
        &xs,
        trials.unwrap_or(cfg.run.trials),
        &e,
        cfg.run.parallelism,
    )?;
    write_sweep_csv(&out(cfg, "sweep.csv"), &cfg.to_toml_string(), &s)?;
    write_json(&out(cfg, "sweep.json"), cfg, &s)?;
    let nonconverged: usize = s.points.iter().map(|p| p.nonconverged).sum();
    for p in s.points.iter().filter(|p| p.x.is_power_of_two()) {
        println!(
            "x={:3} mean {:.5} min {:.5} max {:.5}",
            p.x, p.mean, p.min, p.max
        );
    }
    if nonconverged > 0 {
        println!("non-converged columns: {nonconverged}");
        if !cfg.solver.best_effort {
            return Err(Error::Solver(format!(
                "{nonconverged} sweep columns did not converge within {} iterations (use --best-effort to accept them)",
                cfg.solver.max_iter
            ))
            .into());
        }
    }
    Ok(())
}

pub fn infer(cfg: &RunConfig, model: &Path, data: &DataArgs) -> CmdResult {
    let model = load_model(model)?;
    let data = load_data(data)?;
    let e = engine(cfg)?;
    let rep = e.infer(&e.compile(&model)?, &data, cfg.run.parallelism)?;
    write_csv_with_config(
        &out(cfg, "predictions.csv"),
        &cfg.to_toml_string(),
        &["index", "prediction", "label"],
        rep.predictions
            .iter()
            .zip(&rep.labels)
            .enumerate()
            .map(|(i, (p, l))| vec![i.to_string(), p.to_string(), l.to_string()]),
    )?;
    write_json(&out(cfg, "stats.json"), cfg, &rep)?;
    for l in &rep.layers {
        println!(
            "{}: mean partial sum {:.4}, mean |error| {:.5}, clamps {}, non-converged {}",
            l.name,
            l.mean_partial_sum,
            l.mean_abs_error,
            l.stats.clamp_events,
            l.stats.nonconverged
        );
    }
    println!(
        "accuracy {:.4} on {} samples",
        rep.accuracy,
        rep.predictions.len()
    );
    Ok(())
}

pub fn sparsify(cfg: &RunConfig, model: &Path, probes: usize) -> CmdResult {
    let model = load_model(model)?;
    let map = sparsify_model(&model, cfg.array.n, cfg.array.m, probes, cfg.run.seed)?;
    for l in &map.layers {
        println!(
            "{}: {}/{} columns flipped, mean ones {:.3} -> {:.3}, probes {} mismatches {}",
            l.report.layer,
            l.report.columns_flipped,
            l.report.columns,
            l.report.mean_ones_before,
            l.report.mean_ones_after,
            l.probes,
            l.probe_mismatches
        );
    }
    if !map.verified() {
        return Err(Failure::Validation(
            "sparsified mapping differs from the original model".into(),
        ));
    }
    write_json(&out(cfg, "sparsified.json"), cfg, &map)?;
    Ok(())
}
