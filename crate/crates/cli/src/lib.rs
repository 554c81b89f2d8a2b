//! Batch command-line front end for random double rotation experiments.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use dblrot::displacement::Verdict;
use dblrot::sets::SetDescriptor;
use serde_json::json;

use commands::{Artifact, Outcome};
use config::{ConfigFile, ExperimentConfig, Kind, Overrides, Preset};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "dblrot", version, about = "Random double rotation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config with `system`, `experiment` and `output` sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; repeat for several runs.
    #[arg(long = "seed", global = true)]
    pub seeds: Vec<u64>,
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// Output root; artifacts go to `<out>/<experiment>/`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum Command {
    /// Tabulate φ and fit its exponent near 0.
    Phi,
    /// Integrability verdict with its supporting diagnostics and Z.
    Classify,
    /// Two points under common noise: sync fractions and Cesàro distances.
    Twopoint,
    /// Forward push of a uniform ensemble: the D series.
    Ensemble,
    /// Reversed compositions: the D series and the limit point.
    Reversed,
    /// Exact reversed images of the circle.
    Attractor,
    /// Difference-chain occupation against the predicted density, and the
    /// slowed-walk law test.
    Diffchain,
    /// Every applicable experiment for one system.
    Report,
}

impl Command {
    pub fn kind(self) -> Kind {
        match self {
            Command::Phi => Kind::Phi,
            Command::Classify => Kind::Classify,
            Command::Twopoint => Kind::Twopoint,
            Command::Ensemble => Kind::Ensemble,
            Command::Reversed => Kind::Reversed,
            Command::Attractor => Kind::Attractor,
            Command::Diffchain => Kind::Diffchain,
            Command::Report => Kind::Report,
        }
    }
}

/// Files written and the error that ended the run, if any.
#[derive(Debug)]
pub struct RunResult {
    pub written: Vec<PathBuf>,
    pub error: Option<CliError>,
}

impl RunResult {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, CliError::exit_code)
    }
}

fn fail(e: CliError) -> RunResult {
    RunResult {
        written: Vec::new(),
        error: Some(e),
    }
}

/// Parse the config sources and run the subcommand.
pub fn execute(cli: &Cli) -> RunResult {
    let file = match &cli.config {
        Some(p) => match config::load(p) {
            Ok(f) => f,
            Err(e) => return fail(e),
        },
        None => ConfigFile::default(),
    };
    let over = Overrides {
        preset: cli.preset,
        seeds: cli.seeds.clone(),
        out: cli.out.clone(),
    };
    run_kind(file, cli.command.kind(), &over)
}

pub fn run_kind(file: ConfigFile, kind: Kind, over: &Overrides) -> RunResult {
    if kind == Kind::Report {
        return report(file, over);
    }
    let cfg = match config::resolve(file, kind, over) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let Outcome { artifacts, error } = commands::run(&cfg);
    match output::write_all(&cfg, &artifacts) {
        Ok(written) => RunResult { written, error },
        Err(e) => RunResult {
            written: Vec::new(),
            error: error.or(Some(e)),
        },
    }
}

fn one_dimensional_arcs(set: &SetDescriptor) -> bool {
    match set {
        SetDescriptor::Intervals { .. } | SetDescriptor::Cantor { .. } => true,
        SetDescriptor::Product { factors } => factors.len() == 1 && one_dimensional_arcs(&factors[0]),
        SetDescriptor::Boxes { .. } => false,
    }
}

struct Section {
    kind: Kind,
    cfg: Option<ExperimentConfig>,
    outcome: Outcome,
    skipped: Option<&'static str>,
}

fn report(mut file: ConfigFile, over: &Overrides) -> RunResult {
    if file.experiment.kind == Some(Kind::Report) {
        file.experiment.kind = None;
    }
    let resolve = |k: Kind| config::resolve(file.clone(), k, over);
    let base = match resolve(Kind::Phi) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let profile = match commands::profile(&base) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let mut sections = vec![Section {
        kind: Kind::Phi,
        cfg: Some(base.clone()),
        outcome: Ok(commands::phi(&profile)).into(),
        skipped: None,
    }];
    let mut run = |kind: Kind, skip: Option<&'static str>, f: &dyn Fn(&ExperimentConfig) -> Outcome| {
        if skip.is_some() {
            sections.push(Section {
                kind,
                cfg: None,
                outcome: Ok(Vec::new()).into(),
                skipped: skip,
            });
            return;
        }
        let (cfg, outcome) = match resolve(kind) {
            Ok(c) => {
                let o = f(&c);
                (Some(c), o)
            }
            Err(e) => (None, Err(e).into()),
        };
        sections.push(Section {
            kind,
            cfg,
            outcome,
            skipped: None,
        });
    };
    run(Kind::Classify, None, &|c| commands::classify(c, &profile).into());
    run(Kind::Twopoint, None, &|c| commands::twopoint(c).into());
    run(Kind::Ensemble, None, &|c| commands::ensemble(c).into());
    run(Kind::Reversed, None, &|c| commands::reversed(c).into());
    let attractor_skip = (!one_dimensional_arcs(&base.system.set)).then_some("exact images need a union of arcs on the circle");
    run(Kind::Attractor, attractor_skip, &commands::attractor);
    let diffchain_skip = (profile.verdict != Verdict::Converges).then_some("1/phi is not integrable");
    run(Kind::Diffchain, diffchain_skip, &|c| commands::diffchain(c, &profile).into());

    let mut written = Vec::new();
    let mut first_error: Option<CliError> = None;
    let mut index = Vec::new();
    for s in sections {
        let files: Vec<String> = s.outcome.artifacts.iter().map(Artifact::file_name).collect();
        if let Some(cfg) = &s.cfg {
            match output::write_all(cfg, &s.outcome.artifacts) {
                Ok(p) => written.extend(p),
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        let status = match (&s.outcome.error, s.skipped) {
            (Some(e), _) => json!({"kind": s.kind, "status": "error", "exit_code": e.exit_code(), "reason": e.to_string(), "files": files}),
            (None, Some(why)) => json!({"kind": s.kind, "status": "skipped", "reason": why, "files": files}),
            (None, None) => json!({"kind": s.kind, "status": "ok", "files": files}),
        };
        index.push(status);
        if let Some(e) = s.outcome.error {
            first_error.get_or_insert(e);
        }
    }
    let mut report_cfg = base;
    report_cfg.experiment.kind = Kind::Report;
    let summary = Artifact {
        name: "report".into(),
        payload: commands::Payload::Json(json!({ "sections": index })),
    };
    match output::write_all(&report_cfg, &[summary]) {
        Ok(p) => written.extend(p),
        Err(e) => {
            first_error.get_or_insert(e);
        }
    }
    RunResult {
        written,
        error: first_error,
    }
}

/// Full entry point behind `main`; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    let r = execute(&cli);
    for p in &r.written {
        println!("{}", p.display());
    }
    if let Some(e) = &r.error {
        eprintln!("error: {e}");
    }
    r.exit_code()
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    match threads {
        None => Ok(()),
        Some(0) => Err(CliError::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string())),
    }
}
