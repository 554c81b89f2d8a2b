//! One runner per subcommand. Each returns the artifacts to write; nothing
//! here touches the filesystem.

use dblrot::analysis::{cesaro_distance, d_functional, sync_fraction};
use dblrot::diffchain::{histogram_csv, occupation_compare, predicted_density, DiffChain, Slowdown};
use dblrot::displacement::{
    alpha_lower_bound, classify_integrability, phi_profile, symmetry_check, z_constant, DisplacementProfile,
    Verdict, SYMMETRY_THRESHOLD,
};
use dblrot::rds::{
    attractor_report_capped, ensemble_forward, estimate_limit_point, reversed_ensemble, two_point_orbit,
    AttractorReport, NoiseStream,
};
use dblrot::stats::median;
use dblrot::torus::TorusPoint;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Kind};
use crate::error::{CliError, CliResult};

/// Stream ids per experiment family.
const FORWARD_STREAM: u64 = 0;
const REVERSED_STREAM: u64 = 1;
const LAW_STREAM: u64 = 2;

/// Grid points closer than this to 0 are ignored by the symmetry check.
const SYMMETRY_RADIUS: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Csv(String),
    Json(Value),
}

/// A file `<name>.csv` or `<name>.json` in the experiment directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub payload: Payload,
}

impl Artifact {
    fn csv(name: &str, body: String) -> Self {
        Self {
            name: name.into(),
            payload: Payload::Csv(body),
        }
    }

    fn json(name: &str, value: Value) -> Self {
        Self {
            name: name.into(),
            payload: Payload::Json(value),
        }
    }

    pub fn file_name(&self) -> String {
        match self.payload {
            Payload::Csv(_) => format!("{}.csv", self.name),
            Payload::Json(_) => format!("{}.json", self.name),
        }
    }
}

/// Artifacts produced so far plus the error that stopped the run, if any.
#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub error: Option<CliError>,
}

impl From<CliResult<Vec<Artifact>>> for Outcome {
    fn from(r: CliResult<Vec<Artifact>>) -> Self {
        match r {
            Ok(artifacts) => Outcome { artifacts, error: None },
            Err(e) => Outcome {
                artifacts: Vec::new(),
                error: Some(e),
            },
        }
    }
}

fn to_json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize to JSON")
}

fn point(c: &[f64]) -> CliResult<TorusPoint> {
    Ok(TorusPoint::wrap(c)?)
}

pub fn profile(cfg: &ExperimentConfig) -> CliResult<DisplacementProfile> {
    Ok(phi_profile(cfg.set()?, &cfg.experiment.grid)?)
}

pub fn run(cfg: &ExperimentConfig) -> Outcome {
    match cfg.experiment.kind {
        Kind::Phi => profile(cfg).map(|p| phi(&p)).into(),
        Kind::Classify => profile(cfg).and_then(|p| classify(cfg, &p)).into(),
        Kind::Twopoint => twopoint(cfg).into(),
        Kind::Ensemble => ensemble(cfg).into(),
        Kind::Reversed => reversed(cfg).into(),
        Kind::Attractor => attractor(cfg),
        Kind::Diffchain => profile(cfg).and_then(|p| diffchain(cfg, &p)).into(),
        Kind::Report => Outcome {
            artifacts: Vec::new(),
            error: Some(CliError::Config("report runs through the orchestrator".into())),
        },
    }
}

pub fn phi(p: &DisplacementProfile) -> Vec<Artifact> {
    vec![
        Artifact::csv("phi", p.to_csv()),
        Artifact::json(
            "phi",
            json!({
                "dimension": p.dimension,
                "set_measure": p.set_measure,
                "grid_points": p.grid.len(),
                "fit": to_json(&p.fit),
                "verdict": p.verdict,
            }),
        ),
    ]
}

pub fn classify(cfg: &ExperimentConfig, p: &DisplacementProfile) -> CliResult<Vec<Artifact>> {
    let verdict = classify_integrability(p, cfg.system.dimension)?;
    let z = if verdict == Verdict::Converges {
        Some(to_json(&z_constant(p, cfg.experiment.exclusion_radius)?))
    } else {
        None
    };
    Ok(vec![Artifact::json(
        "classify",
        json!({
            "integrability": verdict,
            "fit": to_json(&p.fit),
            "alpha_lower_bound": alpha_lower_bound(p),
            "symmetry": to_json(&symmetry_check(p, SYMMETRY_RADIUS)),
            "symmetry_radius": SYMMETRY_RADIUS,
            "symmetry_threshold": SYMMETRY_THRESHOLD,
            "z": z,
        }),
    )])
}

pub fn twopoint(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    let e = &cfg.experiment;
    let sys = cfg.system_config()?;
    let x = point(&e.start.x)?;
    let y = point(&e.start.y)?;
    struct Row {
        sync: Vec<Vec<f64>>,
        cesaro: Vec<f64>,
    }
    let rows: Vec<Row> = e
        .seeds
        .par_iter()
        .map(|&s| -> CliResult<Row> {
            let tr = two_point_orbit(&sys, &x, &y, e.horizon, &NoiseStream::new(s, FORWARD_STREAM))?;
            let sync = e
                .checkpoints
                .iter()
                .map(|&n| e.deltas.iter().map(|&d| sync_fraction(&tr, d, n)).collect())
                .collect::<dblrot::Result<_>>()?;
            let cesaro = e
                .checkpoints
                .iter()
                .map(|&n| cesaro_distance(&tr, n))
                .collect::<dblrot::Result<_>>()?;
            Ok(Row { sync, cesaro })
        })
        .collect::<CliResult<_>>()?;
    let mut sync_csv = String::from("seed,n,delta,sync_fraction\n");
    let mut ces_csv = String::from("seed,n,cesaro\n");
    for (r, &s) in rows.iter().zip(&e.seeds) {
        for (ci, &n) in e.checkpoints.iter().enumerate() {
            for (di, &d) in e.deltas.iter().enumerate() {
                sync_csv.push_str(&format!("{s},{n},{d},{}\n", r.sync[ci][di]));
            }
            ces_csv.push_str(&format!("{s},{n},{}\n", r.cesaro[ci]));
        }
    }
    let medians: Vec<Value> = e
        .checkpoints
        .iter()
        .enumerate()
        .map(|(ci, &n)| {
            let sync: Vec<Value> = e
                .deltas
                .iter()
                .enumerate()
                .map(|(di, &d)| {
                    let v: Vec<f64> = rows.iter().map(|r| r.sync[ci][di]).collect();
                    json!({"delta": d, "sync_fraction": median(&v)})
                })
                .collect();
            let c: Vec<f64> = rows.iter().map(|r| r.cesaro[ci]).collect();
            json!({"n": n, "sync": sync, "cesaro": median(&c)})
        })
        .collect();
    Ok(vec![
        Artifact::csv("sync", sync_csv),
        Artifact::csv("cesaro", ces_csv),
        Artifact::json("twopoint", json!({"medians": medians})),
    ])
}

fn d_series_csv(seeds: &[u64], checkpoints: &[usize], ds: &[Vec<f64>]) -> String {
    let mut out = String::from("seed,checkpoint,d\n");
    for (row, s) in ds.iter().zip(seeds) {
        for (d, n) in row.iter().zip(checkpoints) {
            out.push_str(&format!("{s},{n},{d}\n"));
        }
    }
    out
}

fn median_series(checkpoints: &[usize], ds: &[Vec<f64>]) -> Vec<Value> {
    checkpoints
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let v: Vec<f64> = ds.iter().map(|r| r[i]).collect();
            json!({"checkpoint": n, "median_d": median(&v)})
        })
        .collect()
}

pub fn ensemble(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    let e = &cfg.experiment;
    let sys = cfg.system_config()?;
    let ds: Vec<Vec<f64>> = e
        .seeds
        .par_iter()
        .map(|&s| -> CliResult<Vec<f64>> {
            let cps = ensemble_forward(&sys, e.particles, e.horizon, &NoiseStream::new(s, FORWARD_STREAM), &e.checkpoints)?;
            Ok(cps.iter().map(|c| c.d).collect())
        })
        .collect::<CliResult<_>>()?;
    Ok(vec![
        Artifact::csv("ensemble", d_series_csv(&e.seeds, &e.checkpoints, &ds)),
        Artifact::json("ensemble", json!({"medians": median_series(&e.checkpoints, &ds)})),
    ])
}

pub fn reversed(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    let e = &cfg.experiment;
    let sys = cfg.system_config()?;
    let last = *e.checkpoints.last().expect("resolved schedule is nonempty");
    let runs: Vec<(Vec<f64>, Option<f64>)> = e
        .seeds
        .par_iter()
        .map(|&s| -> CliResult<(Vec<f64>, Option<f64>)> {
            let noise = NoiseStream::new(s, REVERSED_STREAM);
            let mut ds = Vec::with_capacity(e.checkpoints.len());
            let mut limit = None;
            for &n in &e.checkpoints {
                let ens = reversed_ensemble(&sys, e.particles, n, &noise)?;
                ds.push(d_functional(&ens));
                if n == last && ens.dim() == 1 {
                    limit = Some(estimate_limit_point(&ens)?.coords()[0]);
                }
            }
            Ok((ds, limit))
        })
        .collect::<CliResult<_>>()?;
    let ds: Vec<Vec<f64>> = runs.iter().map(|r| r.0.clone()).collect();
    let limits: Vec<Value> = runs
        .iter()
        .zip(&e.seeds)
        .map(|(r, &s)| json!({"seed": s, "n": last, "limit_point": r.1}))
        .collect();
    Ok(vec![
        Artifact::csv("reversed", d_series_csv(&e.seeds, &e.checkpoints, &ds)),
        Artifact::json(
            "reversed",
            json!({"medians": median_series(&e.checkpoints, &ds), "limit_points": limits}),
        ),
    ])
}

fn attractor_artifacts(reports: &[AttractorReport]) -> Vec<Artifact> {
    let mut csv = String::from("seed,step,components,measure,largest_gap,largest_component,nested_in_previous\n");
    for r in reports {
        for c in &r.checkpoints {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.noise.master_seed, c.step, c.components, c.measure, c.largest_gap, c.largest_component, c.nested_in_previous
            ));
        }
    }
    let summary: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "seed": r.noise.master_seed,
                "nested": r.nested(),
                "measure_non_increasing": r.measure_non_increasing(),
                "report": to_json(r),
            })
        })
        .collect();
    vec![
        Artifact::csv("attractor", csv),
        Artifact::json("attractor", json!({"reports": summary})),
    ]
}

/// Exact reversed images per seed. A capacity failure keeps the completed
/// reports, including the partial one.
pub fn attractor(cfg: &ExperimentConfig) -> Outcome {
    let e = &cfg.experiment;
    let sys = match cfg.system_config() {
        Ok(s) => s,
        Err(err) => return Err(err).into(),
    };
    let mut schedule = vec![0];
    schedule.extend_from_slice(&e.checkpoints);
    let results: Vec<dblrot::Result<AttractorReport>> = e
        .seeds
        .par_iter()
        .map(|&s| attractor_report_capped(&sys, e.horizon, &schedule, &NoiseStream::new(s, FORWARD_STREAM), e.component_cap))
        .collect();
    let mut reports = Vec::new();
    let mut error = None;
    for r in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(dblrot::Error::Capacity {
                step,
                components,
                cap,
                partial,
            }) => {
                if let Some(p) = partial {
                    reports.push(*p);
                }
                error.get_or_insert(CliError::Core(dblrot::Error::Capacity {
                    step,
                    components,
                    cap,
                    partial: None,
                }));
                break;
            }
            Err(other) => {
                error.get_or_insert(CliError::Core(other));
                break;
            }
        }
    }
    let artifacts = if reports.is_empty() {
        Vec::new()
    } else {
        attractor_artifacts(&reports)
    };
    Outcome { artifacts, error }
}

pub fn diffchain(cfg: &ExperimentConfig, p: &DisplacementProfile) -> CliResult<Vec<Artifact>> {
    let e = &cfg.experiment;
    let predicted = predicted_density(p, e.bins)?;
    let chain = DiffChain::new(cfg.set()?, point(&cfg.system.v)?, e.bins)?;
    let z0 = point(&e.start.x)?.diff(&point(&e.start.y)?)?;
    struct Run {
        csv: String,
        tv: f64,
        law: Value,
        control: Value,
    }
    let runs: Vec<Run> = e
        .seeds
        .par_iter()
        .map(|&s| -> CliResult<Run> {
            let orbit = chain.chain_occupation(&z0, e.horizon, &NoiseStream::new(s, FORWARD_STREAM))?;
            let occ = orbit.occupation()?;
            let law_noise = NoiseStream::new(s, LAW_STREAM);
            let law = chain.law_equivalence_test(&z0, e.law_horizon, e.trials, &law_noise, Slowdown::Exact)?;
            let control = chain.law_equivalence_test(&z0, e.law_horizon, e.trials, &law_noise, Slowdown::Corrupted)?;
            Ok(Run {
                csv: histogram_csv(&occ, &predicted)?,
                tv: occupation_compare(&orbit, &predicted)?,
                law: json!({"statistic": law.statistic, "dof": law.dof, "p_value": law.p_value}),
                control: json!({"statistic": control.statistic, "dof": control.dof, "p_value": control.p_value}),
            })
        })
        .collect::<CliResult<_>>()?;
    let mut csv = String::new();
    for (r, &s) in runs.iter().zip(&e.seeds) {
        let mut lines = r.csv.lines();
        let header = lines.next().unwrap_or_default();
        if csv.is_empty() {
            csv.push_str(&format!("seed,{header}\n"));
        }
        for l in lines {
            csv.push_str(&format!("{s},{l}\n"));
        }
    }
    let tvs: Vec<f64> = runs.iter().map(|r| r.tv).collect();
    let per_seed: Vec<Value> = runs
        .iter()
        .zip(&e.seeds)
        .map(|(r, &s)| json!({"seed": s, "tv": r.tv, "law_test": r.law, "corrupted_control": r.control}))
        .collect();
    Ok(vec![
        Artifact::csv("occupation", csv),
        Artifact::json("diffchain", json!({"median_tv": median(&tvs), "runs": per_seed})),
    ])
}
