//! `run` configuration: defaults, then the TOML file, then flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use dynav_core::backend::{BackendConfig, OracleConfig};
use dynav_core::eval::RunOptions;
use dynav_core::proposer::ConstraintSet;
use dynav_core::PolicyConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Oracle,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Replaces the world of every episode.
    pub world: Option<PathBuf>,
    pub episodes: Option<PathBuf>,
    /// Generate this many single-goal episodes instead of reading a file.
    pub generate: Option<usize>,
    /// Worldgen spec (JSON) for generated episodes.
    pub worldgen: Option<PathBuf>,
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub template_dir: Option<PathBuf>,
    pub alpha: f64,
    pub theta_delta_deg: f64,
    pub r_min: f64,
    pub tau_stop: f64,
    /// Overrides every episode's own threshold when set.
    pub success_threshold_m: Option<f64>,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub use_memory: bool,
    pub memory_in: Option<PathBuf>,
    /// Also send a `memory_extract` request after every step.
    pub memory_extract: bool,
    pub constraints: Vec<String>,
    pub hazard_clearance_m: f64,
    pub mask_corruption: f64,
    pub max_backend_failures: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            world: None,
            episodes: None,
            generate: None,
            worldgen: None,
            backend: BackendKind::Oracle,
            endpoint: None,
            timeout_ms: 10_000,
            max_retries: 2,
            template_dir: None,
            alpha: 0.8,
            theta_delta_deg: 15.0,
            r_min: 0.5,
            tau_stop: 0.6,
            success_threshold_m: None,
            seed: 0,
            workers: 1,
            out: PathBuf::from("out"),
            use_memory: true,
            memory_in: None,
            memory_extract: false,
            constraints: Vec::new(),
            hazard_clearance_m: 0.5,
            mask_corruption: 0.0,
            max_backend_failures: 10,
        }
    }
}

/// Flags of `run`; each one, when given, overrides the file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// TOML config file
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub world: Option<PathBuf>,
    #[arg(long)]
    pub episodes: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub generate: Option<usize>,
    #[arg(long, value_name = "FILE")]
    pub worldgen: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub timeout_ms: Option<u64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub template_dir: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub theta_delta_deg: Option<f64>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub tau_stop: Option<f64>,
    #[arg(long, value_name = "M")]
    pub success_threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Run without the memory graph
    #[arg(long)]
    pub no_memory: bool,
    #[arg(long, value_name = "FILE")]
    pub memory_in: Option<PathBuf>,
    /// Ask the backend for memory updates after every step
    #[arg(long)]
    pub memory_extract: bool,
    /// Natural-language constraint; repeat for several. Replaces the file's list.
    #[arg(long = "constraint", value_name = "TEXT")]
    pub constraints: Vec<String>,
    #[arg(long, value_name = "M")]
    pub hazard_clearance: Option<f64>,
    #[arg(long)]
    pub mask_corruption: Option<f64>,
    #[arg(long)]
    pub max_backend_failures: Option<u32>,
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |k| k + 1) + 1;
    (line, col)
}

/// Line of `key = ...` in the file, for validation messages.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|k| k + 1)
}

pub fn parse_file(text: &str, path: &Path) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().trim().to_string();
        match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                CliError::Config(format!("{}:{line}:{col}: {msg}", path.display()))
            }
            None => CliError::Config(format!("{}: {msg}", path.display())),
        }
    })
}

impl RunConfig {
    /// Defaults, overlaid by the config file (if any), overlaid by flags.
    pub fn resolve(flags: &RunFlags) -> Result<RunConfig, CliError> {
        let (mut cfg, source) = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::at(path, e))?;
                (parse_file(&text, path)?, Some((path.clone(), text)))
            }
            None => (RunConfig::default(), None),
        };
        cfg.apply(flags);
        // relative paths in a config file resolve against its directory
        if let Some((path, _)) = &source {
            let base = path.parent().unwrap_or(Path::new(""));
            cfg.rebase(base, flags);
        }
        cfg.validate().map_err(|(key, msg)| {
            let from_file = source
                .as_ref()
                .and_then(|(path, text)| key_line(text, key).map(|line| (path, line)))
                .filter(|_| !flags.sets(key));
            match from_file {
                Some((path, line)) => CliError::Config(format!("{}:{line}: {key}: {msg}", path.display())),
                None => CliError::Config(format!("{key}: {msg}")),
            }
        })?;
        Ok(cfg)
    }

    pub fn apply(&mut self, f: &RunFlags) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &f.$field {
                    self.$field = v.clone().into();
                })*
            };
        }
        take!(world, episodes, generate, worldgen, endpoint, template_dir, memory_in);
        take!(backend, timeout_ms, max_retries, alpha, theta_delta_deg, r_min, tau_stop);
        take!(seed, workers, out, mask_corruption, max_backend_failures);
        if let Some(v) = f.success_threshold {
            self.success_threshold_m = Some(v);
        }
        if let Some(v) = f.hazard_clearance {
            self.hazard_clearance_m = v;
        }
        if f.no_memory {
            self.use_memory = false;
        }
        if f.memory_extract {
            self.memory_extract = true;
        }
        if !f.constraints.is_empty() {
            self.constraints = f.constraints.clone();
        }
    }

    fn rebase(&mut self, base: &Path, f: &RunFlags) {
        let fix = |p: &mut Option<PathBuf>, from_flag: bool| {
            if let Some(p) = p.as_mut().filter(|p| p.is_relative() && !from_flag) {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.world, f.world.is_some());
        fix(&mut self.episodes, f.episodes.is_some());
        fix(&mut self.worldgen, f.worldgen.is_some());
        fix(&mut self.template_dir, f.template_dir.is_some());
        fix(&mut self.memory_in, f.memory_in.is_some());
        if f.out.is_none() && self.out.is_relative() {
            self.out = base.join(&self.out);
        }
    }

    /// `(key, message)` for the first invalid knob.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(("alpha", format!("{} must be in (0, 1)", self.alpha)));
        }
        if !(self.theta_delta_deg > 0.0 && self.theta_delta_deg < 180.0) {
            return Err(("theta_delta_deg", format!("{} must be in (0, 180)", self.theta_delta_deg)));
        }
        if !(0.0..=1.0).contains(&self.tau_stop) {
            return Err(("tau_stop", format!("{} must be in [0, 1]", self.tau_stop)));
        }
        if !(self.r_min >= 0.0) {
            return Err(("r_min", "must be ≥ 0".into()));
        }
        if let Some(t) = self.success_threshold_m.filter(|t| !(*t >= 0.0)) {
            return Err(("success_threshold_m", format!("{t} must be ≥ 0")));
        }
        if self.workers == 0 {
            return Err(("workers", "must be ≥ 1".into()));
        }
        if self.timeout_ms == 0 {
            return Err(("timeout_ms", "must be > 0".into()));
        }
        if !(self.hazard_clearance_m >= 0.0) {
            return Err(("hazard_clearance_m", "must be ≥ 0".into()));
        }
        if !(0.0..=1.0).contains(&self.mask_corruption) {
            return Err(("mask_corruption", format!("{} must be in [0, 1]", self.mask_corruption)));
        }
        if self.backend == BackendKind::Remote && self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
            return Err(("endpoint", "required with backend = \"remote\"".into()));
        }
        if self.episodes.is_none() && self.generate.is_none() {
            return Err(("episodes", "give an episode file or a number of episodes to generate".into()));
        }
        Ok(())
    }

    pub fn run_options(&self) -> RunOptions {
        let policy = PolicyConfig {
            alpha: self.alpha,
            theta_delta: self.theta_delta_deg.to_radians(),
            r_min: self.r_min,
            tau_stop: self.tau_stop,
            mask_corruption: self.mask_corruption,
            use_memory: self.use_memory,
            memory_extract: self.memory_extract,
            constraints: ConstraintSet {
                constraints: self.constraints.clone(),
                hazard_clearance: self.hazard_clearance_m,
            },
            ..PolicyConfig::default()
        };
        RunOptions {
            policy,
            max_backend_failures: self.max_backend_failures,
            ..RunOptions::default()
        }
    }

    pub fn oracle(&self) -> OracleConfig {
        OracleConfig {
            success_threshold: self.success_threshold_m.unwrap_or(0.3),
            ..OracleConfig::default()
        }
    }

    pub fn remote(&self) -> BackendConfig {
        BackendConfig {
            endpoint: self.endpoint.clone().unwrap_or_default(),
            timeout_ms: self.timeout_ms,
            max_retries: self.max_retries,
            template_dir: self.template_dir.clone(),
            ..BackendConfig::default()
        }
    }
}

impl RunFlags {
    /// Whether the flag for config key `key` was given.
    fn sets(&self, key: &str) -> bool {
        match key {
            "alpha" => self.alpha.is_some(),
            "theta_delta_deg" => self.theta_delta_deg.is_some(),
            "tau_stop" => self.tau_stop.is_some(),
            "r_min" => self.r_min.is_some(),
            "success_threshold_m" => self.success_threshold.is_some(),
            "workers" => self.workers.is_some(),
            "timeout_ms" => self.timeout_ms.is_some(),
            "hazard_clearance_m" => self.hazard_clearance.is_some(),
            "mask_corruption" => self.mask_corruption.is_some(),
            "endpoint" => self.endpoint.is_some() || self.backend.is_some(),
            "episodes" => self.episodes.is_some() || self.generate.is_some(),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[derive(Parser)]
    struct Harness {
        #[command(flatten)]
        flags: RunFlags,
    }

    fn flags(args: &[&str]) -> RunFlags {
        let mut argv = vec!["dynav"];
        argv.extend_from_slice(args);
        Harness::try_parse_from(argv).unwrap().flags
    }

    fn from_file(text: &str, args: &[&str]) -> Result<RunConfig, CliError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, text).unwrap();
        let mut f = flags(args);
        f.config = Some(path);
        RunConfig::resolve(&f)
    }

    type Get = fn(&RunConfig) -> String;

    /// (file line, flag args, getter, default, file value, flag value)
    fn knobs() -> Vec<(&'static str, Vec<&'static str>, Get, &'static str, &'static str, &'static str)> {
        vec![
            ("alpha = 0.7", vec!["--alpha", "0.6"], |c| c.alpha.to_string(), "0.8", "0.7", "0.6"),
            ("theta_delta_deg = 20.0", vec!["--theta-delta-deg", "25"], |c| c.theta_delta_deg.to_string(), "15", "20", "25"),
            ("r_min = 0.4", vec!["--r-min", "0.3"], |c| c.r_min.to_string(), "0.5", "0.4", "0.3"),
            ("tau_stop = 0.5", vec!["--tau-stop", "0.9"], |c| c.tau_stop.to_string(), "0.6", "0.5", "0.9"),
            ("success_threshold_m = 0.4", vec!["--success-threshold", "0.2"], |c| format!("{:?}", c.success_threshold_m), "None", "Some(0.4)", "Some(0.2)"),
            ("seed = 3", vec!["--seed", "9"], |c| c.seed.to_string(), "0", "3", "9"),
            ("workers = 2", vec!["--workers", "8"], |c| c.workers.to_string(), "1", "2", "8"),
            ("timeout_ms = 500", vec!["--timeout-ms", "900"], |c| c.timeout_ms.to_string(), "10000", "500", "900"),
            ("max_retries = 5", vec!["--max-retries", "0"], |c| c.max_retries.to_string(), "2", "5", "0"),
            ("use_memory = true", vec!["--no-memory"], |c| c.use_memory.to_string(), "true", "true", "false"),
            ("memory_extract = false", vec!["--memory-extract"], |c| c.memory_extract.to_string(), "false", "false", "true"),
            ("hazard_clearance_m = 0.8", vec!["--hazard-clearance", "0.1"], |c| c.hazard_clearance_m.to_string(), "0.5", "0.8", "0.1"),
            ("mask_corruption = 0.1", vec!["--mask-corruption", "0.2"], |c| c.mask_corruption.to_string(), "0", "0.1", "0.2"),
            ("max_backend_failures = 3", vec!["--max-backend-failures", "4"], |c| c.max_backend_failures.to_string(), "10", "3", "4"),
            ("constraints = [\"avoid the rug\"]", vec!["--constraint", "stay left"], |c| c.constraints.join("|"), "", "avoid the rug", "stay left"),
            ("endpoint = \"http://a\"", vec!["--endpoint", "http://b"], |c| format!("{:?}", c.endpoint), "None", "Some(\"http://a\")", "Some(\"http://b\")"),
            ("backend = \"oracle\"", vec!["--backend", "remote", "--endpoint", "http://x"], |c| format!("{:?}", c.backend), "Oracle", "Oracle", "Remote"),
            ("generate = 4", vec!["--generate", "6"], |c| format!("{:?}", c.generate), "Some(5)", "Some(4)", "Some(6)"),
        ]
    }

    #[test]
    fn precedence_per_knob() {
        for (line, args, get, default, file, flag) in knobs() {
            // every case needs some episode source
            let base = ["--generate", "5"];
            let mut c = RunConfig::default();
            c.apply(&flags(&base));
            assert_eq!(get(&c), default, "default of `{line}`");
            let text = if line.starts_with("generate") { line.to_string() } else { format!("generate = 5\n{line}\n") };
            assert_eq!(get(&from_file(&text, &[]).unwrap()), file, "file value `{line}`");
            assert_eq!(get(&from_file(&text, &args).unwrap()), flag, "flag over `{line}`");
        }
    }

    #[test]
    fn file_paths_resolve_next_to_the_file() {
        let c = from_file("episodes = \"specs/e.json\"\nout = \"o\"\n", &[]).unwrap();
        assert!(c.episodes.unwrap().ends_with("specs/e.json"));
        assert!(c.out.is_absolute() && c.out.ends_with("o"));
        let c = from_file("episodes = \"specs/e.json\"\n", &["--episodes", "x.json", "--out", "here"]).unwrap();
        assert_eq!(c.episodes.unwrap(), PathBuf::from("x.json"));
        assert_eq!(c.out, PathBuf::from("here"));
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = from_file("generate = 3\nalpha = \"big\"\n", &[]).unwrap_err().to_string();
        assert!(err.contains("run.toml:2:"), "{err}");
        let err = from_file("generate = 3\n\nalfa = 0.5\n", &[]).unwrap_err().to_string();
        assert!(err.contains("run.toml:3:1"), "{err}");
        assert!(err.contains("alfa"), "{err}");
    }

    #[test]
    fn invalid_values_name_the_line() {
        let err = from_file("generate = 3\n  alpha = 1.5\n", &[]).unwrap_err().to_string();
        assert!(err.contains("run.toml:2: alpha"), "{err}");
        // a bad flag is reported without a file position
        let err = from_file("generate = 3\n", &["--tau-stop", "2"]).unwrap_err().to_string();
        assert_eq!(err, "config: tau_stop: 2 must be in [0, 1]");
    }

    #[test]
    fn remote_needs_endpoint() {
        let mut f = flags(&["--generate", "1", "--backend", "remote"]);
        let err = RunConfig::resolve(&f).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        f.endpoint = Some("http://127.0.0.1:9".into());
        assert!(RunConfig::resolve(&f).is_ok());
    }

    #[test]
    fn defaults_match_the_policy() {
        let c = RunConfig::default();
        let p = PolicyConfig::default();
        let o = c.run_options().policy;
        assert_eq!((o.alpha, o.r_min, o.tau_stop), (p.alpha, p.r_min, p.tau_stop));
        assert!((o.theta_delta - p.theta_delta).abs() < 1e-15);
    }
}
