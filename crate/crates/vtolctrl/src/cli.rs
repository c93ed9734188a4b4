//! Batch command-line front end: configuration, scenario execution, and
//! artifact emission (gain files, trace CSVs, summary JSON, SVG plots).
//!
//! Exit codes are a stable contract: 0 success, 1 usage/config errors,
//! 2 numerical or certificate failures.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::aero::{alpha_sweep, WingGeometry};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Tolerances};
use crate::models::{
    build_hover_model, build_level_model, load_model, performance_from_weights, LinearModel,
};
use crate::plot::{write_svg, Series};
use crate::sim::{
    compare, hover_mixer, simulate, write_trace_csv, ControllerPolicy, PidCascade, PidGains,
    PolicySummary, SimConfig,
};
use crate::synthesis::{
    h2_certificate, h2_lmi_witness, h2_synthesize, lqr_certificate, lqr_synthesize,
    CertificateReport, WeightSpec,
};
use crate::wind::DrydenParams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Shipped defaults; all tunable assumptions live here.
pub const DEFAULT_CONFIG_JSON: &str = include_str!("../config/default.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Case1Level,
    Case2Hover,
    Custom,
}

impl Scenario {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "case1_level" => Ok(Scenario::Case1Level),
            "case2_hover" => Ok(Scenario::Case2Hover),
            "custom" => Ok(Scenario::Custom),
            other => Err(Error::InvalidConfig {
                field: "scenario".into(),
                message: format!("unknown scenario `{other}`"),
            }),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::Case1Level => "case1_level",
            Scenario::Case2Hover => "case2_hover",
            Scenario::Custom => "custom",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Pid,
    Lqr,
    H2,
}

impl ControllerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Pid => "pid",
            ControllerKind::Lqr => "lqr",
            ControllerKind::H2 => "h2",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "pid" => Ok(ControllerKind::Pid),
            "lqr" => Ok(ControllerKind::Lqr),
            "h2" => Ok(ControllerKind::H2),
            other => Err(Error::InvalidConfig {
                field: "controllers".into(),
                message: format!("unknown controller `{other}` (expected pid, lqr, h2)"),
            }),
        }
    }
}

/// LQR pair plus the distinct disturbance-attenuation output weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsSection {
    pub lqr_q_diag: Vec<f64>,
    pub lqr_r_diag: Vec<f64>,
    pub h2_state_weights: Vec<f64>,
    pub h2_input_weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimSection {
    pub dt: f64,
    pub t_final: f64,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelScenario {
    pub weights: WeightsSection,
    pub pid: PidGains,
    pub sim: SimSection,
    pub dryden: DrydenParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HoverPidSection {
    pub angle_p: f64,
    pub rate: PidGains,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HoverScenario {
    pub weights: WeightsSection,
    pub pid: HoverPidSection,
    pub sim: SimSection,
    pub dryden: DrydenParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CustomScenario {
    pub model_path: PathBuf,
    pub lqr_q_diag: Vec<f64>,
    pub lqr_r_diag: Vec<f64>,
    pub sim: SimSection,
    pub dryden: DrydenParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WingSection {
    pub span: f64,
    pub root_chord: f64,
    pub tip_chord: f64,
    pub sweep_deg: f64,
    pub panels_spanwise: usize,
    pub panels_chordwise: usize,
    pub cg_x: f64,
}

impl WingSection {
    fn geometry(&self) -> WingGeometry {
        let mut g = WingGeometry::new(
            self.span,
            self.root_chord,
            self.tip_chord,
            self.sweep_deg.to_radians(),
        );
        g.panels_spanwise = self.panels_spanwise;
        g.panels_chordwise = self.panels_chordwise;
        g.cg_x = self.cg_x;
        g
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AeroSection {
    pub alpha_start_deg: f64,
    pub alpha_end_deg: f64,
    pub alpha_step_deg: f64,
    pub rho: f64,
    pub v_inf: f64,
}

/// Full run configuration; `config/default.json` documents every field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub controllers: Vec<ControllerKind>,
    pub seeds: usize,
    pub seed_base: u64,
    pub output_dir: PathBuf,
    pub level: LevelScenario,
    pub hover: HoverScenario,
    pub custom: Option<CustomScenario>,
    pub wing: WingSection,
    pub aero: AeroSection,
}

impl RunConfig {
    /// Parses the shipped default configuration.
    pub fn builtin_default() -> Self {
        serde_json::from_str(DEFAULT_CONFIG_JSON).expect("embedded default config parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.controllers.is_empty() {
            return Err(Error::InvalidConfig {
                field: "controllers".into(),
                message: "at least one controller is required".into(),
            });
        }
        if self.seeds < 1 {
            return Err(Error::InvalidConfig {
                field: "seeds".into(),
                message: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// FNV-1a hash of the canonical serialized config; recorded in summary
    /// files so runs can be traced back to their exact inputs. The output
    /// directory is not part of the identity, only the science is.
    pub fn hash(&self) -> u64 {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x100_0000_01b3);
        }
        h
    }
}

/// Everything a scenario needs at run time.
struct ScenarioBundle {
    /// Plant with the matched (LQR-equivalent) performance pair.
    model: LinearModel,
    /// Plant with the disturbance-focused performance pair for H2 synthesis.
    h2_model: LinearModel,
    lqr_weights: WeightSpec,
    pid_policy: Option<ControllerPolicy>,
    sim: SimConfig,
    /// `(state index, table label, unit scale factor)` per summary column.
    rms_columns: Vec<(usize, String, f64)>,
}

fn diag_checked(values: &[f64], n: usize, field: &str) -> Result<Matrix> {
    if values.len() != n {
        return Err(Error::InvalidConfig {
            field: field.into(),
            message: format!("expected {n} entries, got {}", values.len()),
        });
    }
    Ok(Matrix::diag(values))
}

fn apply_weights(
    model: LinearModel,
    weights: &WeightsSection,
    tol: &Tolerances,
) -> Result<(LinearModel, LinearModel, WeightSpec)> {
    let n = model.n_states();
    let m = model.n_inputs();
    let q = diag_checked(&weights.lqr_q_diag, n, "weights.lqr_q_diag")?;
    let r = diag_checked(&weights.lqr_r_diag, m, "weights.lqr_r_diag")?;
    let zq = diag_checked(&weights.h2_state_weights, n, "weights.h2_state_weights")?;
    let zr = diag_checked(&weights.h2_input_weights, m, "weights.h2_input_weights")?;
    let (cz, du) = performance_from_weights(&zq, &zr, tol)?;
    let h2_model = model.clone().with_performance(cz, du)?;
    Ok((model, h2_model, WeightSpec::new(q, r)))
}

fn sim_config(section: &SimSection, dryden: &DrydenParams, n: usize) -> Result<SimConfig> {
    if section.x0.len() != n {
        return Err(Error::InvalidConfig {
            field: "sim.x0".into(),
            message: format!("expected {n} states, got {}", section.x0.len()),
        });
    }
    let mut d = dryden.clone();
    d.dt = section.dt;
    Ok(SimConfig {
        dt: section.dt,
        t_final: section.t_final,
        x0: section.x0.clone(),
        reference: vec![0.0; n],
        dryden: Some(d),
    })
}

fn build_bundle(cfg: &RunConfig, tol: &Tolerances) -> Result<ScenarioBundle> {
    match cfg.scenario {
        Scenario::Case1Level => {
            let (model, h2_model, lqr_weights) =
                apply_weights(build_level_model(), &cfg.level.weights, tol)?;
            let sim = sim_config(&cfg.level.sim, &cfg.level.dryden, model.n_states())?;
            let pid = ControllerPolicy::pid(PidCascade::SingleAxis {
                state_index: 3,
                gains: cfg.level.pid,
            });
            Ok(ScenarioBundle {
                model,
                h2_model,
                lqr_weights,
                pid_policy: Some(pid),
                sim,
                rms_columns: vec![(3, "q (rad/sec)".into(), 1.0)],
            })
        }
        Scenario::Case2Hover => {
            let (model, h2_model, lqr_weights) =
                apply_weights(build_hover_model(), &cfg.hover.weights, tol)?;
            let sim = sim_config(&cfg.hover.sim, &cfg.hover.dryden, model.n_states())?;
            let mixer = hover_mixer(&model)?;
            let pid = ControllerPolicy::pid(PidCascade::AttitudeCascade {
                angle_p: cfg.hover.pid.angle_p,
                rate_gains: cfg.hover.pid.rate,
                mixer,
            });
            let deg = 180.0 / std::f64::consts::PI;
            Ok(ScenarioBundle {
                model,
                h2_model,
                lqr_weights,
                pid_policy: Some(pid),
                sim,
                rms_columns: vec![
                    (0, "Roll angle (deg)".into(), deg),
                    (1, "Pitch angle (deg)".into(), deg),
                    (2, "Yaw angle (deg)".into(), deg),
                ],
            })
        }
        Scenario::Custom => {
            let custom = cfg.custom.as_ref().ok_or_else(|| Error::InvalidConfig {
                field: "custom".into(),
                message: "scenario `custom` needs the custom section".into(),
            })?;
            let model = load_model(&custom.model_path)?;
            let n = model.n_states();
            let m = model.n_inputs();
            let q = diag_checked(&custom.lqr_q_diag, n, "custom.lqr_q_diag")?;
            let r = diag_checked(&custom.lqr_r_diag, m, "custom.lqr_r_diag")?;
            let sim = sim_config(&custom.sim, &custom.dryden, n)?;
            let rms_columns = model
                .states
                .iter()
                .enumerate()
                .map(|(i, s)| (i, format!("{s} rms"), 1.0))
                .collect();
            Ok(ScenarioBundle {
                h2_model: model.clone(),
                model,
                lqr_weights: WeightSpec::new(q, r),
                pid_policy: None,
                sim,
                rms_columns,
            })
        }
    }
}

/// On-disk gain file: `K` row-major, optional `gamma`, closed-loop spectral
/// abscissa, and the certificate outcome.
#[derive(Debug, Serialize, Deserialize)]
pub struct GainFile {
    pub controller: String,
    pub scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(rename = "K")]
    pub k: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub spectral_abscissa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h2_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pid: Option<serde_json::Value>,
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text)?;
    Ok(())
}

/// Synthesizes the requested gains, writes one JSON per controller, and
/// reports certificate outcomes. Returns the process exit code.
pub fn cmd_synth(cfg: &RunConfig) -> Result<i32> {
    cfg.validate()?;
    let tol = Tolerances::default();
    let bundle = build_bundle(cfg, &tol)?;
    std::fs::create_dir_all(&cfg.output_dir)?;

    let mut all_certified = true;
    for kind in &cfg.controllers {
        let path = cfg.output_dir.join(format!("gain_{}.json", kind.name()));
        match kind {
            ControllerKind::Lqr => {
                let gain = lqr_synthesize(&bundle.model, &bundle.lqr_weights, &tol)?;
                let report = lqr_certificate(
                    &bundle.model,
                    &bundle.lqr_weights,
                    &gain.k,
                    &gain.care.p,
                    &tol,
                )?;
                all_certified &= report.satisfied;
                write_json(
                    &path,
                    &GainFile {
                        controller: "lqr".into(),
                        scenario: cfg.scenario.to_string(),
                        k: Some(matrix_rows(&gain.k)),
                        gamma: None,
                        spectral_abscissa: gain.spectral_abscissa,
                        h2_norm: Some(gain.h2_norm),
                        certificate: Some(report),
                        pid: None,
                    },
                )?;
                println!(
                    "lqr: abscissa {:+.4e}, certificate {}",
                    gain.spectral_abscissa,
                    if report.satisfied {
                        "satisfied"
                    } else {
                        "VIOLATED"
                    }
                );
            }
            ControllerKind::H2 => {
                let h2 = h2_synthesize(&bundle.h2_model, &tol)?;
                let witness = h2_lmi_witness(&bundle.h2_model, &h2.k, &tol)?;
                let report = h2_certificate(&bundle.h2_model, &h2.k, &witness, h2.gamma, &tol)?;
                all_certified &= report.satisfied;
                write_json(
                    &path,
                    &GainFile {
                        controller: "h2".into(),
                        scenario: cfg.scenario.to_string(),
                        k: Some(matrix_rows(&h2.k)),
                        gamma: Some(h2.gamma),
                        spectral_abscissa: h2.spectral_abscissa,
                        h2_norm: Some(h2.gamma),
                        certificate: Some(report),
                        pid: None,
                    },
                )?;
                println!(
                    "h2:  abscissa {:+.4e}, gamma {:.6}, certificate {}",
                    h2.spectral_abscissa,
                    h2.gamma,
                    if report.satisfied {
                        "satisfied"
                    } else {
                        "VIOLATED"
                    }
                );
            }
            ControllerKind::Pid => {
                let policy = bundle
                    .pid_policy
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig {
                        field: "controllers".into(),
                        message: "pid is not available for custom scenarios".into(),
                    })?;
                let a_cl = policy.closed_loop_matrix(&bundle.model)?;
                let abscissa = crate::linalg::spectral_abscissa(&a_cl, &tol)?;
                let pid_json = match cfg.scenario {
                    Scenario::Case1Level => serde_json::to_value(cfg.level.pid).unwrap(),
                    Scenario::Case2Hover => serde_json::to_value(&cfg.hover.pid).unwrap(),
                    Scenario::Custom => unreachable!("pid rejected for custom above"),
                };
                write_json(
                    &path,
                    &GainFile {
                        controller: "pid".into(),
                        scenario: cfg.scenario.to_string(),
                        k: None,
                        gamma: None,
                        spectral_abscissa: abscissa,
                        h2_norm: None,
                        certificate: None,
                        pid: Some(pid_json),
                    },
                )?;
                println!("pid: abscissa {abscissa:+.4e} (no certificate; fixed gains)");
            }
        }
    }
    Ok(if all_certified {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    })
}

fn build_policies(
    cfg: &RunConfig,
    bundle: &ScenarioBundle,
    tol: &Tolerances,
) -> Result<Vec<(String, ControllerPolicy)>> {
    let mut policies = Vec::new();
    for kind in &cfg.controllers {
        let policy = match kind {
            ControllerKind::Lqr => {
                let gain = lqr_synthesize(&bundle.model, &bundle.lqr_weights, tol)?;
                ControllerPolicy::state_feedback(gain.k)
            }
            ControllerKind::H2 => {
                let h2 = h2_synthesize(&bundle.h2_model, tol)?;
                ControllerPolicy::state_feedback(h2.k)
            }
            ControllerKind::Pid => {
                bundle
                    .pid_policy
                    .clone()
                    .ok_or_else(|| Error::InvalidConfig {
                        field: "controllers".into(),
                        message: "pid is not available for custom scenarios".into(),
                    })?
            }
        };
        policies.push((kind.name().to_string(), policy));
    }
    Ok(policies)
}

/// Named controller policies for one scenario run.
pub type NamedPolicies = Vec<(String, ControllerPolicy)>;

/// Model, policy set, and simulation settings for a configured scenario —
/// the same objects `simulate` runs with; exposed for the acceptance suite.
pub fn scenario_setup(cfg: &RunConfig) -> Result<(LinearModel, NamedPolicies, SimConfig)> {
    cfg.validate()?;
    let tol = Tolerances::default();
    let bundle = build_bundle(cfg, &tol)?;
    let policies = build_policies(cfg, &bundle, &tol)?;
    Ok((bundle.model, policies, bundle.sim))
}

#[derive(Debug, Serialize)]
struct SimulateSummary<'a> {
    config_hash: String,
    scenario: String,
    seeds: usize,
    seed_base: u64,
    columns: Vec<String>,
    /// Per controller: RMS per summary column (unit-converted).
    table: Vec<SummaryRow>,
    policies: &'a [PolicySummary],
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    controller: String,
    rms: Vec<f64>,
}

/// Runs the multi-seed comparison, writes traces/metrics/plots, prints the
/// summary table. Returns the process exit code.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<i32> {
    cfg.validate()?;
    let tol = Tolerances::default();
    let bundle = build_bundle(cfg, &tol)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let policies = build_policies(cfg, &bundle, &tol)?;

    // per-controller, per-seed traces
    for (name, policy) in &policies {
        for s in 0..cfg.seeds {
            let seed = cfg.seed_base + s as u64;
            let mut sim = bundle.sim.clone();
            if let Some(d) = sim.dryden.as_mut() {
                d.seed = seed;
            }
            match simulate(&bundle.model, policy, &sim) {
                Ok(trace) => {
                    let path = cfg
                        .output_dir
                        .join(format!("trace_{name}_seed{seed:04}.csv"));
                    write_trace_csv(&trace, &bundle.model, &path)?;
                }
                Err(Error::Diverged { t, .. }) => {
                    eprintln!("warning: {name} diverged at t = {t:.3} s for seed {seed}; excluded");
                }
                Err(e) => return Err(e),
            }
        }
    }

    let summaries = compare(
        &bundle.model,
        &policies,
        &bundle.sim,
        cfg.seeds,
        cfg.seed_base,
    )?;
    for summary in &summaries {
        for seed in &summary.diverged_seeds {
            eprintln!(
                "warning: {} diverged for seed {seed}; excluded from means",
                summary.name
            );
        }
    }

    // summary table mirroring the study's RMS layout
    let columns: Vec<String> = bundle.rms_columns.iter().map(|c| c.1.clone()).collect();
    let mut table = Vec::new();
    let mut header = format!("{:<10}", "Algorithm");
    for c in &columns {
        header.push_str(&format!(" | {c:>18}"));
    }
    println!("{header}");
    println!("{}", "-".repeat(header.len()));
    for summary in &summaries {
        let mut row = format!("{:<10}", summary.name);
        let mut rms = Vec::new();
        for (idx, _, scale) in &bundle.rms_columns {
            let v = summary.mean_rms[*idx] * scale;
            rms.push(v);
            row.push_str(&format!(" | {v:>18.6}"));
        }
        println!("{row}");
        table.push(SummaryRow {
            controller: summary.name.clone(),
            rms,
        });
    }

    let summary = SimulateSummary {
        config_hash: format!("{:016x}", cfg.hash()),
        scenario: cfg.scenario.to_string(),
        seeds: cfg.seeds,
        seed_base: cfg.seed_base,
        columns,
        table,
        policies: &summaries,
    };
    write_json(&cfg.output_dir.join("metrics.json"), &summary)?;

    // comparison plots from the first seed
    let mut traces = Vec::new();
    for (name, policy) in &policies {
        let mut sim = bundle.sim.clone();
        if let Some(d) = sim.dryden.as_mut() {
            d.seed = cfg.seed_base;
        }
        if let Ok(trace) = simulate(&bundle.model, policy, &sim) {
            traces.push((name.clone(), trace));
        }
    }
    for (idx, label, scale) in &bundle.rms_columns {
        let state_name = &bundle.model.states[*idx];
        let series_data: Vec<(String, Vec<f64>)> = traces
            .iter()
            .map(|(name, trace)| {
                let ys = trace.states.iter().map(|x| x[*idx] * scale).collect();
                (name.clone(), ys)
            })
            .collect();
        let series: Vec<Series<'_>> = series_data
            .iter()
            .zip(&traces)
            .map(|((name, ys), (_, trace))| Series {
                name,
                xs: &trace.times,
                ys,
            })
            .collect();
        write_svg(
            &cfg.output_dir.join(format!("comparison_{state_name}.svg")),
            &format!("{label} under gust disturbance"),
            "t (s)",
            label,
            &series,
        )?;
    }

    Ok(EXIT_OK)
}

/// Sweeps the wing angle of attack, writes CSV and the drag polar SVG.
pub fn cmd_aero(cfg: &RunConfig) -> Result<i32> {
    let tol = Tolerances::default();
    let geometry = cfg.wing.geometry();
    geometry.validate()?;
    let a = &cfg.aero;
    if a.alpha_step_deg.is_nan() || a.alpha_step_deg <= 0.0 || a.alpha_end_deg < a.alpha_start_deg {
        return Err(Error::InvalidConfig {
            field: "aero.alpha_step_deg".into(),
            message: "sweep needs a positive step and end >= start".into(),
        });
    }
    let mut alphas = Vec::new();
    let mut alpha = a.alpha_start_deg;
    while alpha <= a.alpha_end_deg + 1e-9 {
        alphas.push(alpha);
        alpha += a.alpha_step_deg;
    }
    let points = alpha_sweep(&geometry, &alphas, a.rho, a.v_inf, &tol)?;

    std::fs::create_dir_all(&cfg.output_dir)?;
    let csv_path = cfg.output_dir.join("aero_sweep.csv");
    let mut csv = String::from("alpha_deg,CL,CDi,Cm\n");
    for p in &points {
        csv.push_str(&format!("{},{},{},{}\n", p.alpha_deg, p.cl, p.cdi, p.cm));
    }
    std::fs::write(&csv_path, csv)?;

    let cls: Vec<f64> = points.iter().map(|p| p.cl).collect();
    let cdis: Vec<f64> = points.iter().map(|p| p.cdi).collect();
    write_svg(
        &cfg.output_dir.join("aero_polar.svg"),
        "Lift-drag polar",
        "CDi",
        "CL",
        &[Series {
            name: "polar",
            xs: &cdis,
            ys: &cls,
        }],
    )?;
    println!(
        "swept {} angles: CL {:.4} .. {:.4}",
        points.len(),
        points.first().map(|p| p.cl).unwrap_or(0.0),
        points.last().map(|p| p.cl).unwrap_or(0.0)
    );
    Ok(EXIT_OK)
}

#[derive(Parser, Debug)]
#[command(
    name = "vtolctrl",
    version,
    about = "Controller synthesis and gust-disturbance simulation for a hybrid VTOL UAV"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// Path to a JSON config; the embedded default is used otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// case1_level, case2_hover, or custom.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Comma-separated subset of pid,lqr,h2.
    #[arg(long, value_delimiter = ',')]
    pub controllers: Option<Vec<String>>,
    /// Number of gust seeds for the comparison.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// First gust seed.
    #[arg(long)]
    pub seed_base: Option<u64>,
    /// Output directory (overrides config and the VTOLCTRL_OUT env var).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize gains and evaluate their certificates.
    Synth(CommonArgs),
    /// Run the multi-seed closed-loop comparison.
    Simulate(CommonArgs),
    /// Sweep the wing angle of attack.
    Aero(CommonArgs),
}

/// Merges CLI flags and the environment over the loaded config.
pub fn resolve_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::builtin_default(),
    };
    if let Some(s) = &args.scenario {
        cfg.scenario = Scenario::parse(s)?;
    }
    if let Some(list) = &args.controllers {
        let mut kinds = Vec::new();
        for c in list {
            kinds.push(ControllerKind::parse(c)?);
        }
        cfg.controllers = kinds;
    }
    if let Some(seeds) = args.seeds {
        cfg.seeds = seeds;
    }
    if let Some(base) = args.seed_base {
        cfg.seed_base = base;
    }
    if let Ok(dir) = std::env::var("VTOLCTRL_OUT") {
        if !dir.is_empty() {
            cfg.output_dir = PathBuf::from(dir);
        }
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig { .. }
        | Error::Parse { .. }
        | Error::Io(_)
        | Error::DimensionMismatch { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Synth(args) => resolve_config(args).and_then(|cfg| cmd_synth(&cfg)),
        Command::Simulate(args) => resolve_config(args).and_then(|cfg| cmd_simulate(&cfg)),
        Command::Aero(args) => resolve_config(args).and_then(|cfg| cmd_aero(&cfg)),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
