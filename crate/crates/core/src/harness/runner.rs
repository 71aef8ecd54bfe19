use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::descriptor::{ExperimentDescriptor, ExperimentKind};
use super::output::{fmt_f64, table_csv, trace_csv, write};
use super::theory::theory_checks;
use super::HarnessError;
use crate::experiments::{run_dkm_heat, run_supervised, run_supervised_pair, steps_to_reach, DkmHeatProblem};
use crate::linalg::dist_sq;
use crate::optim::{train_theorem1, AdamVariant, OptimizerKind};
use crate::rng::{RngStream, StreamId};

/// Command-line adjustments applied on top of a parsed descriptor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seeds: Option<usize>,
    pub literal_adam: bool,
}

pub fn apply_overrides(mut desc: ExperimentDescriptor, o: &Overrides) -> Result<ExperimentDescriptor, HarnessError> {
    if let Some(dir) = &o.output_dir {
        desc.output_dir = Some(dir.clone());
    }
    if let Some(k) = o.seeds {
        if k == 0 {
            return Err(HarnessError::Invalid("--seeds must be at least 1".into()));
        }
        desc.seeds = Some(k);
    }
    if o.literal_adam {
        match &mut desc.optimizer {
            Some(OptimizerKind::Adam(cfg)) => cfg.variant = AdamVariant::Literal,
            _ => return Err(HarnessError::Invalid("--literal-adam needs an Adam experiment".into())),
        }
    }
    Ok(desc)
}

/// Caps the global rayon pool at `LRAD_THREADS` workers when the variable is
/// set.
pub fn init_thread_pool() -> Result<(), HarnessError> {
    let Ok(v) = std::env::var("LRAD_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| HarnessError::Invalid(format!("LRAD_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| HarnessError::Runtime(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub output_dir: PathBuf,
    /// Files written, relative to `output_dir`, in write order.
    pub files: Vec<String>,
}

struct SeedOutput {
    files: Vec<(String, String)>,
    rows: Vec<Vec<String>>,
    wall_ms: u128,
}

fn seed_stream(desc: &ExperimentDescriptor, s: usize) -> RngStream {
    RngStream::new(desc.seed, StreamId::new(desc.experiment.stream_tag(), s as u64, 0))
}

fn final_train(trace: &[crate::optim::TraceRecord]) -> String {
    trace.last().map(|r| fmt_f64(r.train_loss)).unwrap_or_default()
}

fn supervised_seed(desc: &ExperimentDescriptor, s: usize) -> crate::Result<SeedOutput> {
    let cfg = desc.trainer().expect("resolved");
    let arch = desc.arch.as_ref().expect("resolved");
    let every = desc.eval_every.expect("resolved");
    let stream = seed_stream(desc, s);
    let mut files = Vec::new();
    let mut rows = Vec::new();
    let row = |label: &str, r: &crate::experiments::SupervisedRun, target: Option<f64>| {
        vec![
            s.to_string(),
            label.to_string(),
            fmt_f64(r.outcome.initial_lr),
            final_train(&r.outcome.trace),
            fmt_f64(r.initial_test_loss),
            fmt_f64(r.final_test_loss),
            r.outcome.searches.len().saturating_sub(1).to_string(),
            target.and_then(|t| steps_to_reach(&r.outcome.trace, t)).map(|n| n.to_string()).unwrap_or_default(),
        ]
    };
    if desc.constant_baseline == Some(true) {
        let pair = run_supervised_pair(&cfg, arch, &stream, every)?;
        let target = (cfg.steps > 0).then_some(pair.constant.final_test_loss);
        files.push((format!("trace_seed{s}.csv"), trace_csv(&pair.adaptive.outcome.trace)));
        files.push((format!("trace_seed{s}_constant.csv"), trace_csv(&pair.constant.outcome.trace)));
        rows.push(row("adaptive", &pair.adaptive, target));
        rows.push(row("constant", &pair.constant, target));
    } else {
        let run = run_supervised(&cfg, arch, &stream, every)?;
        files.push((format!("trace_seed{s}.csv"), trace_csv(&run.outcome.trace)));
        rows.push(row("adaptive", &run, None));
    }
    Ok(SeedOutput { files, rows, wall_ms: 0 })
}

fn dkm_seed(desc: &ExperimentDescriptor, s: usize) -> crate::Result<SeedOutput> {
    let cfg = desc.trainer().expect("resolved");
    let problem = DkmHeatProblem::new(desc.d.expect("resolved"), desc.pde_time.expect("resolved"))?;
    let arch = desc.arch.as_ref().expect("resolved");
    let run = run_dkm_heat(problem, &cfg, arch, &seed_stream(desc, s), desc.n_mc.expect("resolved"))?;
    Ok(SeedOutput {
        files: vec![(format!("trace_seed{s}.csv"), trace_csv(&run.outcome.trace))],
        rows: vec![vec![
            s.to_string(),
            fmt_f64(run.outcome.initial_lr),
            final_train(&run.outcome.trace),
            fmt_f64(run.relative_l2),
            run.outcome.searches.len().saturating_sub(1).to_string(),
        ]],
        wall_ms: 0,
    })
}

fn quadratic_seed(desc: &ExperimentDescriptor, s: usize) -> crate::Result<(SeedOutput, Vec<Option<f64>>)> {
    let exp = desc.quadratic_experiment().expect("resolved");
    let theta0 = exp.theta0.clone().expect("resolved");
    let out = train_theorem1(
        &exp.model,
        &theta0,
        &exp.nu,
        exp.batch,
        exp.test_batch,
        exp.max_steps as usize,
        &seed_stream(desc, s),
    )?;
    let mean = exp.model.data_mean();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for &t in &exp.probes {
        match out.clock.lookup(t) {
            Ok(n) => {
                let v = dist_sq(&out.states[n], &mean);
                rows.push(vec![s.to_string(), fmt_f64(t), n.to_string(), fmt_f64(v)]);
                values.push(Some(v));
            }
            Err(crate::Error::HorizonNotReached { .. }) => values.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok((SeedOutput { files: vec![(format!("trace_seed{s}.csv"), trace_csv(&out.trace))], rows, wall_ms: 0 }, values))
}

fn timed<T>(f: impl FnOnce() -> crate::Result<T>) -> crate::Result<(T, u128)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_millis()))
}

fn emit(dir: &Path, report: &mut RunReport, name: &str, contents: &str) -> Result<(), HarnessError> {
    write(dir, name, contents).map_err(|e| HarnessError::Runtime(format!("{}: {e}", dir.join(name).display())))?;
    report.files.push(name.to_string());
    Ok(())
}

/// Run a resolved descriptor and write its outputs.
///
/// Written files: `config.resolved.json`, one trace CSV per seed (two for a
/// supervised run with baseline), `summary.csv`, `timing.csv` with wall-clock
/// times, and for quadratic runs `convergence.csv` with seed-averaged values.
/// Everything except `timing.csv` is a deterministic function of the
/// descriptor.
pub fn run(desc: &ExperimentDescriptor) -> Result<RunReport, HarnessError> {
    desc.validate().map_err(|e| HarnessError::Invalid(e.to_string()))?;
    let dir = desc.output_dir.clone().ok_or_else(|| HarnessError::Invalid("output_dir unresolved".into()))?;
    std::fs::create_dir_all(&dir)?;
    let mut report = RunReport { output_dir: dir.clone(), files: Vec::new() };
    let config = serde_json::to_string_pretty(desc).map_err(|e| HarnessError::Runtime(e.to_string()))? + "\n";
    emit(&dir, &mut report, "config.resolved.json", &config)?;

    let seeds = desc.seeds.unwrap_or(1);
    let (header, outputs, extra): (&[&str], Vec<SeedOutput>, Option<String>) = match desc.experiment {
        ExperimentKind::Supervised => {
            let outs = (0..seeds)
                .into_par_iter()
                .map(|s| timed(|| supervised_seed(desc, s)).map(|(o, ms)| SeedOutput { wall_ms: ms, ..o }))
                .collect::<crate::Result<Vec<_>>>()?;
            (
                &[
                    "seed",
                    "run",
                    "initial_lr",
                    "final_train_loss",
                    "initial_test_loss",
                    "final_test_loss",
                    "searches",
                    "steps_to_constant_final",
                ],
                outs,
                None,
            )
        }
        ExperimentKind::DkmHeat => {
            let outs = (0..seeds)
                .into_par_iter()
                .map(|s| timed(|| dkm_seed(desc, s)).map(|(o, ms)| SeedOutput { wall_ms: ms, ..o }))
                .collect::<crate::Result<Vec<_>>>()?;
            (&["seed", "initial_lr", "final_train_loss", "relative_l2", "searches"], outs, None)
        }
        ExperimentKind::Quadratic => {
            let runs = (0..seeds)
                .into_par_iter()
                .map(|s| timed(|| quadratic_seed(desc, s)))
                .collect::<crate::Result<Vec<_>>>()?;
            let probes = desc.probes.clone().expect("resolved");
            let mut conv = Vec::new();
            for (j, t) in probes.iter().enumerate() {
                let vals: Option<Vec<f64>> = runs.iter().map(|((_, v), _)| v[j]).collect();
                match vals {
                    Some(v) => conv.push(vec![fmt_f64(*t), seeds.to_string(), fmt_f64(v.iter().sum::<f64>() / seeds as f64)]),
                    None => eprintln!("lrad: probe t={t} not reached by every seed within {} steps", desc.steps.unwrap_or(0)),
                }
            }
            let outs = runs.into_iter().map(|((o, _), ms)| SeedOutput { wall_ms: ms, ..o }).collect();
            (
                &["seed", "t", "n_t", "sq_dist"],
                outs,
                Some(table_csv(&["t", "seeds", "mean_sq_dist"], &conv)),
            )
        }
        ExperimentKind::TheoryChecks => {
            let sizes = desc.theory_sizes().expect("resolved");
            let (checks, ms) = timed(|| theory_checks(&sizes, &seed_stream(desc, 0)))?;
            let rows = checks
                .iter()
                .map(|c| vec![c.name.clone(), fmt_f64(c.value), fmt_f64(c.threshold), c.pass.to_string()])
                .collect();
            let out = SeedOutput { files: Vec::new(), rows, wall_ms: ms };
            let summary = table_csv(&["check", "value", "threshold", "pass"], &out.rows);
            emit(&dir, &mut report, "summary.csv", &summary)?;
            emit(&dir, &mut report, "timing.csv", &format!("seed,wall_ms\n0,{}\n", out.wall_ms))?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            if !failed.is_empty() {
                return Err(HarnessError::ChecksFailed(failed.join(", ")));
            }
            return Ok(report);
        }
    };

    for o in &outputs {
        for (name, contents) in &o.files {
            emit(&dir, &mut report, name, contents)?;
        }
    }
    let rows: Vec<Vec<String>> = outputs.iter().flat_map(|o| o.rows.iter().cloned()).collect();
    emit(&dir, &mut report, "summary.csv", &table_csv(header, &rows))?;
    if let Some(conv) = extra {
        emit(&dir, &mut report, "convergence.csv", &conv)?;
    }
    let timing: Vec<Vec<String>> =
        outputs.iter().enumerate().map(|(s, o)| vec![s.to_string(), o.wall_ms.to_string()]).collect();
    emit(&dir, &mut report, "timing.csv", &table_csv(&["seed", "wall_ms"], &timing))?;
    Ok(report)
}
