//! `run` and `eval`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use dynav_core::eval::report::{load_results, summary_table};
use dynav_core::eval::{
    compute_metrics, export_report, objectnav_episodes, results_from_logs, run_all, Budgets, EpisodeSet, EpisodeSpec,
    RunOptions, Termination, WorldSource,
};
use dynav_core::memory::{self, merge, MemoryGraph};
use dynav_core::{DecisionBackend, EpisodeResult, OracleBackend, RemoteBackend, StepRecord, WorldGenSpec};
use log::info;

use crate::config::{parse_file, BackendKind, RunConfig, RunFlags};
use crate::error::CliError;

pub const STEPS_FILE: &str = "steps.jsonl";
pub const MEMORY_FILE: &str = "memory.json";

pub fn load_worldgen_spec(path: Option<&Path>) -> Result<WorldGenSpec, CliError> {
    match path {
        None => Ok(WorldGenSpec::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::at(p, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::at(p, e))
        }
    }
}

/// Episode specs plus the directory their relative world paths resolve against.
fn episodes(cfg: &RunConfig) -> Result<(Vec<EpisodeSpec>, PathBuf), CliError> {
    let (mut specs, base) = match (&cfg.episodes, cfg.generate) {
        (Some(path), _) => {
            let set = EpisodeSet::load(path).map_err(|e| CliError::at(path, e))?;
            let mut specs = set.episodes;
            for s in &mut specs {
                s.seed = s.seed.wrapping_add(cfg.seed);
            }
            (specs, path.parent().unwrap_or(Path::new("")).to_path_buf())
        }
        (None, Some(n)) => {
            let spec = load_worldgen_spec(cfg.worldgen.as_deref())?;
            (objectnav_episodes(n, cfg.seed, &spec, Budgets::default())?, PathBuf::new())
        }
        (None, None) => unreachable!("validated"),
    };
    override_world(&mut specs, cfg.world.as_deref());
    if let Some(t) = cfg.success_threshold_m {
        for s in &mut specs {
            s.success_threshold = t;
        }
    }
    Ok((specs, base))
}

fn override_world(specs: &mut [EpisodeSpec], world: Option<&Path>) {
    if let Some(w) = world {
        let path = std::path::absolute(w).unwrap_or_else(|_| w.to_path_buf());
        for s in specs {
            s.world = WorldSource::File { path: path.clone() };
        }
    }
}

fn write_jsonl(path: &Path, records: &[StepRecord]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::at(path, e))?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| CliError::at(path, e))?;
        w.write_all(b"\n").map_err(|e| CliError::at(path, e))?;
    }
    w.flush().map_err(|e| CliError::at(path, e))
}

fn read_jsonl(path: &Path) -> Result<Vec<StepRecord>, CliError> {
    let f = File::open(path).map_err(|e| CliError::at(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::at(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| CliError::Io(format!("{}:{}: {e}", path.display(), k + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

fn report(results: &[EpisodeResult], out: &Path) -> Result<(), CliError> {
    let report = compute_metrics(results)?;
    export_report(&report, results, out).map_err(|e| CliError::at(out, e))?;
    print!("{}", summary_table(&report, results));
    Ok(())
}

pub fn cmd_run(flags: &RunFlags) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(flags)?;
    let (specs, base) = episodes(&cfg)?;
    let backend: Box<dyn DecisionBackend> = match cfg.backend {
        BackendKind::Oracle => Box::new(OracleBackend::new(cfg.oracle())),
        BackendKind::Remote => Box::new(RemoteBackend::new(cfg.remote())?),
    };
    let mem0 = match &cfg.memory_in {
        Some(p) => memory::load(p).map_err(|e| CliError::at(p, e))?,
        None => MemoryGraph::new(),
    };
    let cancel = Arc::new(AtomicBool::new(false));
    {
        let c = cancel.clone();
        // a second handler in the same process (tests) is not an error worth failing on
        let _ = ctrlc::set_handler(move || c.store(true, Ordering::Relaxed));
    }
    let opts = RunOptions {
        cancel: Some(cancel.clone()),
        ..cfg.run_options()
    };
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::at(&cfg.out, e))?;
    info!("running {} episodes on {} workers", specs.len(), cfg.workers);

    let runs = run_all(&specs, &base, backend.as_ref(), &mem0, &opts, cfg.workers);
    let mut results = Vec::with_capacity(runs.len());
    let mut records = Vec::new();
    let mut mem = mem0.clone();
    let mut aborted = 0usize;
    for (spec, run) in specs.iter().zip(runs) {
        let run = run.map_err(|e| CliError::from(e).context(&spec.id))?;
        aborted += usize::from(run.result.termination == Termination::Aborted);
        mem = merge(&mem, &run.memory);
        records.extend(run.records);
        results.push(run.result);
    }
    write_jsonl(&cfg.out.join(STEPS_FILE), &records)?;
    let mem_path = cfg.out.join(MEMORY_FILE);
    memory::save(&mem, &mem_path).map_err(|e| CliError::at(&mem_path, e))?;
    report(&results, &cfg.out)?;
    if cancel.load(Ordering::Relaxed) {
        return Err(CliError::Aborted("interrupted; partial results written".into()));
    }
    if aborted > 0 {
        return Err(CliError::Aborted(format!(
            "{aborted} episode(s) aborted after repeated backend failures"
        )));
    }
    Ok(())
}

pub struct EvalInput {
    pub logs: Option<PathBuf>,
    pub episodes: Option<PathBuf>,
    pub world: Option<PathBuf>,
    pub results: Option<PathBuf>,
    pub config: Option<PathBuf>,
}

pub fn cmd_eval(input: EvalInput, out: &Path) -> Result<(), CliError> {
    let results = match (&input.results, &input.logs, &input.episodes) {
        (Some(path), _, _) => load_results(path).map_err(|e| CliError::at(path, e))?,
        (None, Some(logs), Some(eps)) => {
            let cfg = match &input.config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| CliError::at(p, e))?;
                    let mut cfg = parse_file(&text, p)?;
                    if let Some(w) = cfg.world.as_mut().filter(|w| w.is_relative()) {
                        *w = p.parent().unwrap_or(Path::new("")).join(&*w);
                    }
                    cfg
                }
                None => RunConfig::default(),
            };
            let set = EpisodeSet::load(eps).map_err(|e| CliError::at(eps, e))?;
            let mut specs = set.episodes;
            // the run's overrides, so Stops are judged the same way
            override_world(&mut specs, input.world.as_deref().or(cfg.world.as_deref()));
            if let Some(t) = cfg.success_threshold_m {
                for s in &mut specs {
                    s.success_threshold = t;
                }
            }
            let opts = cfg.run_options();
            let base = eps.parent().unwrap_or(Path::new(""));
            results_from_logs(&specs, &read_jsonl(logs)?, base, &opts)?
        }
        _ => return Err(CliError::Config("give --results, or --logs with --episodes".into())),
    };
    report(&results, out)
}
