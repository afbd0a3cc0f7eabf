//! Scenario configuration and artifact emission: everything needed to
//! reproduce the reference experiments end-to-end from a TOML file or a
//! built-in name.
//!
//! Artifacts are CSV (ground truth for tests) plus small self-contained SVG
//! charts; identical config and seed produce byte-identical CSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{run_discrete, Bandwidth, DiscreteConfig, KdeConfig};
use crate::feasibility::{analyze, von_mises_1d, von_mises_2d, FeasibilityReport, TargetSpec};
use crate::field::{Field, Grid, TWO_PI};
use crate::governor::AlphaRule;
use crate::kernel::{KernelComponent, KernelSpec, DEFAULT_TRUNCATION};
use crate::sim::{run, Disturbance, Scheme, SimConfig, SimRecord};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Built-in scenario names with one-line descriptions.
pub const BUILTINS: &[(&str, &str)] = &[
    (
        "feasibility_sweep",
        "Minimum leaders' mass over a (D, kappa) grid of von Mises targets",
    ),
    (
        "monomodal_1d_ff",
        "Monomodal 1D trial, feed-forward scheme",
    ),
    (
        "monomodal_1d_rg",
        "Monomodal 1D trial, reference-governor scheme",
    ),
    (
        "disturbance_robustness",
        "Steady follower drift from mid-trial: feed-forward vs governor rules",
    ),
    (
        "kernel_mismatch",
        "Plant interaction kernel much shorter-ranged than the controller's model",
    ),
    (
        "discrete_ensemble",
        "Finite-population ensemble with estimated densities in the loop",
    ),
    (
        "monomodal_2d_rg",
        "Monomodal 2D trial on the torus, reference governor",
    ),
];

pub fn builtin_toml(name: &str) -> Option<&'static str> {
    Some(match name {
        "feasibility_sweep" => FEASIBILITY_SWEEP,
        "monomodal_1d_ff" => MONOMODAL_1D_FF,
        "monomodal_1d_rg" => MONOMODAL_1D_RG,
        "disturbance_robustness" => DISTURBANCE_ROBUSTNESS,
        "kernel_mismatch" => KERNEL_MISMATCH,
        "discrete_ensemble" => DISCRETE_ENSEMBLE,
        "monomodal_2d_rg" => MONOMODAL_2D_RG,
        _ => return None,
    })
}

/// Nearest built-in by edit distance, for "did you mean" diagnostics.
pub fn nearest_builtin(name: &str) -> Option<String> {
    BUILTINS
        .iter()
        .map(|(b, _)| (edit_distance(name, b), *b))
        .min()
        .filter(|(d, _)| *d <= 5)
        .map(|(_, b)| b.to_string())
}

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = if ca == cb { prev } else { prev + 1 };
            prev = row[j + 1];
            row[j + 1] = cost.min(prev + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

// ---------------------------------------------------------------------------
// Config schema

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema_version: u32,
    /// One of `pde`, `comparison`, `sweep`, `ensemble`.
    pub kind: String,
    #[serde(default)]
    pub description: String,
    pub grid: GridConfig,
    pub target: TargetConfig,
    pub kernel: KernelConfig,
    /// Kernel driving the followers when it differs from the controller's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant_kernel: Option<KernelConfig>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<VariantSection>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TargetConfig {
    /// `von_mises` or `uniform`.
    pub shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    pub mass_f: f64,
    pub diffusivity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelConfig {
    pub components: Vec<KernelComponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSection {
    pub dt: f64,
    pub n_steps: usize,
    pub record_every: usize,
    pub k_l: f64,
    /// `feed_forward` or `reference_governor`.
    pub scheme: String,
    /// `off`, `conservative` or `optimal`.
    pub alpha_rule: String,
    pub disturbance_amplitude: f64,
    pub disturbance_onset: f64,
    pub allow_infeasible: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: 1e-3,
            n_steps: 150_000,
            record_every: 150,
            k_l: 1.0,
            scheme: "feed_forward".into(),
            alpha_rule: "conservative".into(),
            disturbance_amplitude: 0.0,
            disturbance_onset: 0.0,
            allow_infeasible: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VariantSection {
    pub name: String,
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_rule: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSection {
    pub diffusivities: Vec<f64>,
    pub kappas: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleSection {
    pub n_leaders: usize,
    pub n_followers: usize,
    pub n_trials: usize,
    pub master_seed: u64,
    pub control_every: usize,
    /// `"silverman"` or a fixed numeric bandwidth.
    pub bandwidth: toml::Value,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            n_leaders: 400,
            n_followers: 600,
            n_trials: 8,
            master_seed: 7,
            control_every: 1,
            bandwidth: toml::Value::String("silverman".into()),
        }
    }
}

// ---------------------------------------------------------------------------
// Loading and overrides

/// Parse a scenario from TOML text, applying `key=value` overrides with
/// dotted paths (e.g. `sim.n_steps=1000`).
pub fn load_config(toml_text: &str, overrides: &[String]) -> Result<ScenarioFile> {
    let mut value: toml::Value = toml_text
        .parse()
        .map_err(|e| Error::ConfigParse(format!("invalid TOML: {e}")))?;
    for entry in overrides {
        let (path, raw) = entry
            .split_once('=')
            .ok_or_else(|| Error::ConfigParse(format!("override `{entry}` is not key=value")))?;
        apply_override(&mut value, path.trim(), raw.trim())?;
    }
    let file: ScenarioFile = value
        .try_into()
        .map_err(|e| Error::ConfigParse(format!("invalid scenario: {e}")))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::ConfigParse(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    Ok(file)
}

fn parse_literal(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.trim_matches('"').to_string())
}

fn apply_override(root: &mut toml::Value, path: &str, raw: &str) -> Result<()> {
    let mut node = root;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::ConfigParse(format!("`{path}` does not address a table")))?;
        if parts.peek().is_none() {
            table.insert(part.to_string(), parse_literal(raw));
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Err(Error::ConfigParse(format!("empty override path `{path}`")))
}

// ---------------------------------------------------------------------------
// Materialization

impl ScenarioFile {
    pub fn grid(&self) -> Result<Grid> {
        match self.grid.dim {
            1 => Ok(Grid::circle(self.grid.n)),
            2 => Ok(Grid::torus(self.grid.n)),
            d => Err(Error::ConfigParse(format!("unsupported grid dim {d}"))),
        }
    }

    fn kernel_spec(&self, config: &KernelConfig) -> Result<KernelSpec> {
        if config.components.is_empty() {
            return Err(Error::ConfigParse("kernel has no components".into()));
        }
        if config.components.iter().any(|c| c.length <= 0.0) {
            return Err(Error::ConfigParse("kernel length scales must be positive".into()));
        }
        Ok(match self.grid.dim {
            1 => KernelSpec::new_1d(config.components.clone()),
            _ => KernelSpec::new_2d(
                config.components.clone(),
                config.truncation.unwrap_or(DEFAULT_TRUNCATION),
            ),
        })
    }

    pub fn target_density(&self, grid: Grid) -> Result<Field> {
        let t = &self.target;
        match (t.shape.as_str(), self.grid.dim) {
            ("uniform", d) => Ok(Field::constant(
                grid,
                t.mass_f / TWO_PI.powi(d as i32),
            )),
            ("von_mises", 1) => {
                let kappa = t
                    .kappa
                    .ok_or_else(|| Error::ConfigParse("von_mises target needs kappa".into()))?;
                Ok(von_mises_1d(grid, kappa, t.mu, t.mass_f))
            }
            ("von_mises", _) => {
                let (k1, k2) = (
                    t.k1.ok_or_else(|| Error::ConfigParse("2D target needs k1".into()))?,
                    t.k2.ok_or_else(|| Error::ConfigParse("2D target needs k2".into()))?,
                );
                Ok(von_mises_2d(grid, k1, k2, t.mass_f))
            }
            (shape, _) => Err(Error::ConfigParse(format!("unknown target shape `{shape}`"))),
        }
    }

    pub fn target_spec(&self) -> Result<TargetSpec> {
        let grid = self.grid()?;
        TargetSpec::new(
            self.target_density(grid)?,
            self.target.diffusivity,
            self.kernel_spec(&self.kernel)?,
        )
    }

    fn scheme(&self, name: &str) -> Result<Scheme> {
        match name {
            "feed_forward" => Ok(Scheme::FeedForward),
            "reference_governor" => Ok(Scheme::ReferenceGovernor),
            other => Err(Error::ConfigParse(format!("unknown scheme `{other}`"))),
        }
    }

    fn alpha_rule(&self, name: &str) -> Result<AlphaRule> {
        match name {
            "off" => Ok(AlphaRule::Off),
            "conservative" => Ok(AlphaRule::Conservative),
            "optimal" => Ok(AlphaRule::optimal()),
            other => Err(Error::ConfigParse(format!("unknown alpha rule `{other}`"))),
        }
    }

    /// PDE-loop config for the main sim section, or a named variant of it.
    pub fn sim_config(&self, variant: Option<&VariantSection>) -> Result<SimConfig> {
        let mut config = SimConfig::new(self.target_spec()?);
        let s = &self.sim;
        config.dt = s.dt;
        config.n_steps = s.n_steps;
        config.record_every = s.record_every;
        config.k_l = s.k_l;
        config.allow_infeasible = s.allow_infeasible;
        config.scheme = self.scheme(&s.scheme)?;
        config.alpha_rule = self.alpha_rule(&s.alpha_rule)?;
        if let Some(v) = variant {
            config.scheme = self.scheme(&v.scheme)?;
            if let Some(rule) = &v.alpha_rule {
                config.alpha_rule = self.alpha_rule(rule)?;
            }
        }
        if s.disturbance_amplitude != 0.0 {
            config.disturbance = Some(Disturbance {
                amplitude: s.disturbance_amplitude,
                onset: s.disturbance_onset,
            });
        }
        if let Some(plant) = &self.plant_kernel {
            config.plant_kernel = Some(self.kernel_spec(plant)?);
        }
        Ok(config)
    }

    pub fn discrete_config(&self) -> Result<DiscreteConfig> {
        let section = self
            .ensemble
            .clone()
            .ok_or_else(|| Error::ConfigParse("ensemble scenario needs [ensemble]".into()))?;
        let bandwidth = match &section.bandwidth {
            toml::Value::String(s) if s == "silverman" => Bandwidth::Silverman,
            toml::Value::Float(h) if *h > 0.0 => Bandwidth::Fixed(*h),
            other => {
                return Err(Error::ConfigParse(format!(
                    "bandwidth must be \"silverman\" or a positive number, got {other}"
                )))
            }
        };
        let mut config = DiscreteConfig::new(self.target_spec()?);
        config.n_leaders = section.n_leaders;
        config.n_followers = section.n_followers;
        config.n_trials = section.n_trials;
        config.master_seed = section.master_seed;
        config.control_every = section.control_every;
        config.kde = KdeConfig { bandwidth };
        config.dt = self.sim.dt;
        config.n_steps = self.sim.n_steps;
        config.record_every = self.sim.record_every;
        config.k_l = self.sim.k_l;
        config.alpha_rule = self.alpha_rule(&self.sim.alpha_rule)?;
        Ok(config)
    }
}

// ---------------------------------------------------------------------------
// Execution

/// Run a scenario and write its artifacts under `out`. Everything is
/// computed before the first file is created, so failed runs leave either a
/// partial record (simulation errors) or nothing (config errors).
pub fn run_scenario(file: &ScenarioFile, out: &Path) -> Result<()> {
    match file.kind.as_str() {
        "pde" => run_pde_scenario(file, out),
        "comparison" => run_comparison_scenario(file, out),
        "sweep" => run_sweep_scenario(file, out),
        "ensemble" => run_ensemble_scenario(file, out),
        other => Err(Error::ConfigParse(format!("unknown scenario kind `{other}`"))),
    }
}

fn prepare_dir(file: &ScenarioFile, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let echo = toml::to_string_pretty(file)
        .map_err(|e| Error::ConfigParse(format!("cannot serialize config: {e}")))?;
    fs::write(out.join("config.toml"), echo)?;
    Ok(())
}

fn write_feasibility_json(report: &FeasibilityReport, path: &Path) -> Result<()> {
    let json = serde_json::json!({
        "min_leader_mass": report.min_leader_mass,
        "leader_mass": report.mass_l,
        "feasible": report.feasible,
        "stability_margin": report.stability_margin,
        "deconvolution_constant": report.constant,
    });
    fs::write(path, serde_json::to_string_pretty(&json).unwrap() + "\n")?;
    Ok(())
}

fn run_pde_scenario(file: &ScenarioFile, out: &Path) -> Result<()> {
    let config = file.sim_config(None)?;
    let report = analyze(&config.target)?;
    let record = run(&config).map_err(|f| f.error)?;
    prepare_dir(file, out)?;
    write_feasibility_json(&report, &out.join("feasibility.json"))?;
    write_pde_artifacts(&record, &config, &report, out)
}

fn write_pde_artifacts(
    record: &SimRecord,
    config: &SimConfig,
    report: &FeasibilityReport,
    out: &Path,
) -> Result<()> {
    fs::write(out.join("record.csv"), record_csv(record))?;
    write_field_csv(&config.target.density, &out.join("target_rho_f.csv"))?;
    write_field_csv(&report.leader_reference, &out.join("reference_rho_l.csv"))?;
    write_field_csv(&record.final_rho_f, &out.join("final_rho_f.csv"))?;
    write_field_csv(&record.final_rho_l, &out.join("final_rho_l.csv"))?;
    write_field_csv(&record.final_rho_hat_l, &out.join("final_rho_hat_l.csv"))?;
    let errors = line_chart(
        "percentage error",
        &record.times,
        &[("E_L", &record.e_l, "#c0392b"), ("E_F", &record.e_f, "#2980b9")],
    );
    fs::write(out.join("errors.svg"), errors)?;
    let kl = line_chart(
        "KL divergence",
        &record.times,
        &[("KL_L", &record.kl_l, "#c0392b"), ("KL_F", &record.kl_f, "#2980b9")],
    );
    fs::write(out.join("kl.svg"), kl)?;
    let alpha = line_chart("blending weight", &record.times, &[("alpha", &record.alpha, "#27ae60")]);
    fs::write(out.join("alpha.svg"), alpha)?;
    if record.final_rho_f.grid.dim() == 2 {
        fs::write(out.join("final_rho_f.svg"), heatmap(&record.final_rho_f))?;
        fs::write(out.join("target_rho_f.svg"), heatmap(&config.target.density))?;
    }
    Ok(())
}

fn run_comparison_scenario(file: &ScenarioFile, out: &Path) -> Result<()> {
    if file.variants.is_empty() {
        return Err(Error::ConfigParse("comparison scenario needs [[variants]]".into()));
    }
    let mut results = Vec::new();
    for variant in &file.variants {
        let config = file.sim_config(Some(variant))?;
        let report = analyze(&config.target)?;
        let record = run(&config).map_err(|f| f.error)?;
        results.push((variant.name.clone(), config, report, record));
    }
    prepare_dir(file, out)?;
    let mut summary = String::from("variant,steady_E_F,steady_KL_F\n");
    for (name, config, report, record) in &results {
        let dir = out.join(name);
        fs::create_dir_all(&dir)?;
        write_feasibility_json(report, &dir.join("feasibility.json"))?;
        write_pde_artifacts(record, config, report, &dir)?;
        let _ = writeln!(summary, "{name},{},{}", record.steady_e_f(), record.steady_kl_f());
    }
    fs::write(out.join("summary.csv"), summary)?;
    Ok(())
}

fn run_sweep_scenario(file: &ScenarioFile, out: &Path) -> Result<()> {
    let sweep = file
        .sweep
        .as_ref()
        .ok_or_else(|| Error::ConfigParse("sweep scenario needs [sweep]".into()))?;
    if file.grid.dim != 1 {
        return Err(Error::ConfigParse("feasibility sweeps are one-dimensional".into()));
    }
    let grid = file.grid()?;
    let kernel = file.kernel_spec(&file.kernel)?;
    let mut rows = String::from("param1,param2,M_hat_L,feasible\n");
    for &d in &sweep.diffusivities {
        for &kappa in &sweep.kappas {
            let density = von_mises_1d(grid, kappa, file.target.mu, file.target.mass_f);
            let target = TargetSpec::new(density, d, kernel.clone())?;
            let report = analyze(&target)?;
            // Saturate at 1: masses above the whole population are all
            // equally infeasible.
            let m_hat = report.min_leader_mass.min(1.0);
            let _ = writeln!(rows, "{d},{kappa},{m_hat},{}", report.feasible);
        }
    }
    prepare_dir(file, out)?;
    fs::write(out.join("sweep.csv"), rows)?;
    Ok(())
}

fn run_ensemble_scenario(file: &ScenarioFile, out: &Path) -> Result<()> {
    let config = file.discrete_config()?;
    let report = analyze(&config.target)?;
    let ensemble = run_discrete(&config)?;
    prepare_dir(file, out)?;
    write_feasibility_json(&report, &out.join("feasibility.json"))?;
    let mut trials = String::from("trial,seed,N_L,steady_E_F,steady_KL_F\n");
    for (i, t) in ensemble.trials.iter().enumerate() {
        let _ = writeln!(
            trials,
            "{i},{},{},{},{}",
            t.seed, config.n_leaders, t.steady_e_f, t.steady_kl_f
        );
    }
    fs::write(out.join("trials.csv"), trials)?;
    let aggregate = format!(
        "N_L,mean_steady_E_F,std_steady_E_F,mean_steady_KL_F,std_steady_KL_F\n{},{},{},{},{}\n",
        config.n_leaders,
        ensemble.mean_steady_e_f,
        ensemble.std_steady_e_f,
        ensemble.mean_steady_kl_f,
        ensemble.std_steady_kl_f,
    );
    fs::write(out.join("aggregate.csv"), aggregate)?;
    let curves: Vec<(String, &[f64])> = ensemble
        .trials
        .iter()
        .enumerate()
        .map(|(i, t)| (format!("trial {i}"), t.e_f.as_slice()))
        .collect();
    let palette = ["#2980b9", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#16a085", "#7f8c8d", "#2c3e50"];
    let series: Vec<(&str, &[f64], &str)> = curves
        .iter()
        .enumerate()
        .map(|(i, (name, data))| (name.as_str(), *data, palette[i % palette.len()]))
        .collect();
    fs::write(
        out.join("e_f.svg"),
        line_chart("follower percentage error", &ensemble.trials[0].times, &series),
    )?;
    Ok(())
}

/// Standalone feasibility analysis of a scenario's target (the `feasibility`
/// CLI subcommand).
pub fn feasibility_json(file: &ScenarioFile) -> Result<String> {
    let report = analyze(&file.target_spec()?)?;
    let json = serde_json::json!({
        "min_leader_mass": report.min_leader_mass,
        "leader_mass": report.mass_l,
        "feasible": report.feasible,
        "stability_margin": report.stability_margin,
        "deconvolution_constant": report.constant,
    });
    Ok(serde_json::to_string_pretty(&json).unwrap())
}

// ---------------------------------------------------------------------------
// CSV and SVG helpers

fn record_csv(record: &SimRecord) -> String {
    let mut s = String::from("t,E_L,E_F,KL_L,KL_F,alpha,mass_L,mass_F,lyap_residual\n");
    for i in 0..record.times.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            record.times[i],
            record.e_l[i],
            record.e_f[i],
            record.kl_l[i],
            record.kl_f[i],
            record.alpha[i],
            record.mass_l[i],
            record.mass_f[i],
            record.lyap_residual[i],
        );
    }
    s
}

fn write_field_csv(field: &Field, path: &Path) -> Result<()> {
    let grid = field.grid;
    let mut s = String::new();
    match grid.dim() {
        1 => {
            s.push_str("x,value\n");
            for i in 0..grid.n() {
                let _ = writeln!(s, "{},{}", grid.node(i), field.values[i]);
            }
        }
        _ => {
            s.push_str("x,y,value\n");
            for i2 in 0..grid.n() {
                for i1 in 0..grid.n() {
                    let _ = writeln!(
                        s,
                        "{},{},{}",
                        grid.node(i1),
                        grid.node(i2),
                        field.values[grid.index_2d(i1, i2)]
                    );
                }
            }
        }
    }
    fs::write(path, s)?;
    Ok(())
}

const CHART_W: f64 = 640.0;
const CHART_H: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// Minimal multi-series line chart; times on x, linear axes.
fn line_chart(title: &str, times: &[f64], series: &[(&str, &[f64], &str)]) -> String {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, data, _) in series {
        for v in *data {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !lo.is_finite() || lo == hi {
        lo -= 1.0;
        hi += 1.0;
    }
    let (t0, t1) = (
        times.first().copied().unwrap_or(0.0),
        times.last().copied().unwrap_or(1.0).max(1e-12),
    );
    let x = |t: f64| MARGIN + (t - t0) / (t1 - t0).max(1e-300) * (CHART_W - 2.0 * MARGIN);
    let y = |v: f64| CHART_H - MARGIN - (v - lo) / (hi - lo) * (CHART_H - 2.0 * MARGIN);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {CHART_W} {CHART_H}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{CHART_W}\" height=\"{CHART_H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        CHART_W / 2.0
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let yy = y(v);
        let _ = writeln!(
            svg,
            "<line x1=\"{MARGIN}\" y1=\"{yy}\" x2=\"{}\" y2=\"{yy}\" stroke=\"#dddddd\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{v:.3}</text>",
            CHART_W - MARGIN,
            MARGIN - 6.0,
            yy + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">t = {t0:.1} .. {t1:.1}</text>",
        CHART_W / 2.0,
        CHART_H - 12.0
    );
    for (idx, (label, data, color)) in series.iter().enumerate() {
        let mut path = String::new();
        for (i, v) in data.iter().enumerate() {
            let t = times.get(i).copied().unwrap_or(t1);
            let _ = write!(path, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, x(t), y(*v));
        }
        let _ = writeln!(svg, "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>");
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{label}</text>",
            CHART_W - MARGIN - 90.0,
            MARGIN + 16.0 * idx as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Cell heatmap of a 2D field (blue = low, yellow = high).
fn heatmap(field: &Field) -> String {
    let grid = field.grid;
    let n = grid.n();
    let (lo, hi) = (field.min(), field.max());
    let span = (hi - lo).max(1e-300);
    let size = 512.0;
    let cell = size / n as f64;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {size} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
        size + 24.0
    );
    for i2 in 0..n {
        for i1 in 0..n {
            let v = (field.values[grid.index_2d(i1, i2)] - lo) / span;
            // Simple blue -> teal -> yellow ramp.
            let r = (255.0 * v * v) as u8;
            let g = (255.0 * v) as u8;
            let b = (255.0 * (1.0 - v)) as u8;
            let _ = writeln!(
                svg,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({r},{g},{b})\"/>",
                i1 as f64 * cell,
                size - (i2 + 1) as f64 * cell,
                cell + 0.5,
                cell + 0.5
            );
        }
    }
    let _ = writeln!(
        svg,
        "<text x=\"4\" y=\"{}\">min {lo:.5}  max {hi:.5}</text>",
        size + 16.0
    );
    svg.push_str("</svg>\n");
    svg
}

// ---------------------------------------------------------------------------
// Built-in scenario definitions (paper defaults)

const MONOMODAL_1D_FF: &str = r#"
schema_version = 1
kind = "pde"
description = "Monomodal 1D trial, feed-forward scheme"

[grid]
dim = 1
n = 500

[target]
shape = "von_mises"
kappa = 1.8
mu = 0.0
mass_f = 0.6
diffusivity = 0.05

[kernel]
components = [{ weight = 1.0, L = 3.141592653589793 }]

[sim]
dt = 0.001
n_steps = 150000
record_every = 150
k_l = 1.0
scheme = "feed_forward"
"#;

const MONOMODAL_1D_RG: &str = r#"
schema_version = 1
kind = "pde"
description = "Monomodal 1D trial, reference-governor scheme"

[grid]
dim = 1
n = 500

[target]
shape = "von_mises"
kappa = 1.8
mu = 0.0
mass_f = 0.6
diffusivity = 0.05

[kernel]
components = [{ weight = 1.0, L = 3.141592653589793 }]

[sim]
dt = 0.001
n_steps = 150000
record_every = 150
k_l = 1.0
scheme = "reference_governor"
alpha_rule = "conservative"
"#;

const FEASIBILITY_SWEEP: &str = r#"
schema_version = 1
kind = "sweep"
description = "Minimum leaders' mass over a (D, kappa) grid of von Mises targets"

[grid]
dim = 1
n = 500

[target]
shape = "von_mises"
kappa = 1.8
mu = 0.0
mass_f = 0.6
diffusivity = 0.05

[kernel]
components = [{ weight = 1.0, L = 3.141592653589793 }]

[sweep]
diffusivities = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5]
kappas = [0.25, 0.5, 1.0, 1.8, 2.5, 3.5, 5.0]
"#;

const DISTURBANCE_ROBUSTNESS: &str = r#"
schema_version = 1
kind = "comparison"
description = "Steady follower drift from mid-trial: feed-forward vs governor rules"

[grid]
dim = 1
n = 500

[target]
shape = "von_mises"
kappa = 1.8
mu = 0.0
mass_f = 0.6
diffusivity = 0.05

[kernel]
components = [{ weight = 1.0, L = 3.141592653589793 }]

[sim]
dt = 0.001
n_steps = 150000
record_every = 150
k_l = 1.0
disturbance_amplitude = 0.031415926535897934
disturbance_onset = 75.0

[[variants]]
name = "feed_forward"
scheme = "feed_forward"

[[variants]]
name = "conservative"
scheme = "reference_governor"
alpha_rule = "conservative"

[[variants]]
name = "optimal"
scheme = "reference_governor"
alpha_rule = "optimal"
"#;

const KERNEL_MISMATCH: &str = r#"
schema_version = 1
kind = "comparison"
description = "Plant interaction kernel much shorter-ranged than the controller's model"

[grid]
dim = 1
n = 500

[target]
shape = "von_mises"
kappa = 1.8
mu = 0.0
mass_f = 0.6
diffusivity = 0.02

[kernel]
components = [{ weight = 1.0, L = 3.141592653589793 }]

[plant_kernel]
components = [{ weight = 1.0, L = 0.5235987755982988 }]

[sim]
dt = 0.001
n_steps = 150000
record_every = 150
k_l = 1.0

[[variants]]
name = "feed_forward"
scheme = "feed_forward"

[[variants]]
name = "governor"
scheme = "reference_governor"
alpha_rule = "conservative"
"#;

const DISCRETE_ENSEMBLE: &str = r#"
schema_version = 1
kind = "ensemble"
description = "Finite-population ensemble with estimated densities in the loop"

[grid]
dim = 1
n = 500

[target]
shape = "von_mises"
kappa = 1.8
mu = 0.0
mass_f = 0.6
diffusivity = 0.05

[kernel]
components = [{ weight = 1.0, L = 3.141592653589793 }]

[sim]
dt = 0.001
n_steps = 150000
record_every = 150
k_l = 1.0
alpha_rule = "conservative"

[ensemble]
n_leaders = 400
n_followers = 600
n_trials = 8
master_seed = 7
control_every = 1
bandwidth = "silverman"
"#;

const MONOMODAL_2D_RG: &str = r#"
schema_version = 1
kind = "pde"
description = "Monomodal 2D trial on the torus, reference governor"

[grid]
dim = 2
n = 50

[target]
shape = "von_mises"
k1 = 0.5
k2 = 0.5
mass_f = 0.6
diffusivity = 0.05

[kernel]
components = [{ weight = 1.0, L = 3.141592653589793 }]
truncation = 10

[sim]
dt = 0.01
n_steps = 5000
record_every = 10
k_l = 10.0
scheme = "reference_governor"
alpha_rule = "conservative"
"#;
