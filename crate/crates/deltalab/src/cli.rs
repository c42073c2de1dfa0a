//! Batch entry point: every experiment as a subcommand driven by a JSON
//! config document, writing auditable artifacts.
//!
//! Each command reads one config file, validates it (unknown keys are
//! rejected), runs the experiment, and writes its outputs into `--out`.
//! Every output embeds a SHA-256 hash of the canonicalized config, so a
//! result file can always be traced back to the exact parameters that
//! produced it, and re-running a command with the same config reproduces
//! the output byte for byte.
//!
//! Exit codes, shared by all commands:
//!
//! * 0: success
//! * 1: I/O, JSON or schema error
//! * 2: no resonance (nothing to tune, or the overlap vanishes)
//! * 3: resonance eigenvalue too degenerate to trust
//! * 4: spectral point rejected or sweep rows flagged invalid

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bsop::{coupling_to_alpha, resonance_profile, tune_resonance, verify_localization};
use crate::convlab::{
    canonical_hash, sweep_free, sweep_local, sweep_nonlocal, ConvergenceReport, CouplingBranch,
    NonlocalScaling, SweepSetup,
};
use crate::core::{
    build_graded_grid, PointInteractionStrength, RadialGrid, RadialPotential, Space,
};
use crate::error::{Error, Result};
use crate::greens::{c_alpha, correction_l0, SpectralPoint};
use crate::resolvent::{interaction_profile, pi_eigenvalue, pi_resolvent};

/// Graded radial grid in config form; `inner_scale` is the width of the
/// innermost panel, in the same length units as `r_max`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub inner_scale: f64,
}

impl GridSpec {
    fn build(&self, r_max: f64) -> Result<RadialGrid> {
        if !(self.inner_scale > 0.0 && self.inner_scale < r_max) {
            return Err(Error::Config(format!(
                "grid inner_scale must lie in (0, r_max), got {}",
                self.inner_scale
            )));
        }
        build_graded_grid(self.panels, self.nodes_per_panel, r_max, self.inner_scale)
    }
}

/// Config for `bs`: tune a potential shape to its zero-energy resonance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsConfig {
    pub potential: RadialPotential,
    pub grid: GridSpec,
    pub gap_threshold: f64,
    /// coupling slope of the local scheme; when present the implied
    /// interaction strength α = −λ/⟨v,φ⟩² is reported
    #[serde(default)]
    pub lambda: Option<f64>,
}

/// Config for `pi`: spectrum and profile of the point interaction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiConfig {
    pub medium: Space,
    pub alpha: PointInteractionStrength,
    /// spectral point for the exported resolvent data, z < 0
    pub z: f64,
    pub r_max: f64,
    pub grid: GridSpec,
    /// eigenvalue search window [−e_max, 0)
    pub e_max: f64,
}

/// Config for `converge`: one of the three ε sweeps.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    /// "local", "free" or "nonlocal"
    pub mode: String,
    pub setup: SweepSetup,
    #[serde(default)]
    pub potential: Option<RadialPotential>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub branch: Option<CouplingBranch>,
    #[serde(default)]
    pub gap_threshold: Option<f64>,
    #[serde(default)]
    pub density: Option<RadialPotential>,
    #[serde(default)]
    pub alpha: Option<PointInteractionStrength>,
    #[serde(default)]
    pub scaling: Option<NonlocalScaling>,
}

/// Config for `resonance`: reconstruct ψ and check the tail law.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    pub potential: RadialPotential,
    pub grid: GridSpec,
    pub gap_threshold: f64,
    /// radii at which ψ is reported; tail checks use those beyond the
    /// support
    pub radii: Vec<f64>,
    /// also re-tune on a domain extended fourfold and report the drift
    #[serde(default)]
    pub localize: bool,
}

#[derive(Serialize)]
struct BsOutput {
    config_hash: String,
    theta_star: f64,
    eigenvalue: f64,
    eigen_residual: f64,
    overlap: f64,
    gap: f64,
    experimental: bool,
    nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
}

#[derive(Serialize)]
struct PiOutput {
    config_hash: String,
    alpha: PointInteractionStrength,
    z: f64,
    kappa: f64,
    /// rank-one coefficient c_α(z); absent when the interaction is off
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficient: Option<f64>,
    /// most negative point eigenvalue in the window, or the string "none"
    eigenvalue: serde_json::Value,
    nodes: Vec<f64>,
    /// interaction profile 𝒢_z at the nodes; with the coefficient this
    /// reconstructs the resolvent as R₀ + c_α |𝒢_z⟩⟨𝒢_z|
    profile: Vec<f64>,
}

#[derive(Serialize)]
struct ResonanceOutput {
    config_hash: String,
    theta_star: f64,
    overlap: f64,
    gap: f64,
    profile: crate::bsop::ResonanceProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    localization: Option<crate::bsop::LocalizationReport>,
}

#[derive(Serialize)]
struct ConvergeOutput {
    config_hash: String,
    mode: String,
    report: ConvergenceReport,
}

fn exit_for(err: &Error) -> i32 {
    match err {
        Error::NoResonance | Error::OrthogonalResonance { .. } => 2,
        Error::DegenerateResonance { .. } => 3,
        Error::SpectralPoint(_)
        | Error::InvalidSpectralPoint(_)
        | Error::Pole(_)
        | Error::SingularCorrection { .. } => 4,
        _ => 1,
    }
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serializing {name}: {e}")))?;
    text.push('\n');
    let path = out.join(name);
    fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn report_exit(err: Error) -> i32 {
    let code = exit_for(&err);
    eprintln!("error: {err}");
    code
}

/// `bs` command: tune the resonance and write the certificate.
pub fn cmd_bs(config: &Path, out: &Path) -> i32 {
    match run_bs(config, out) {
        Ok(()) => 0,
        Err(e) => report_exit(e),
    }
}

fn run_bs(config: &Path, out: &Path) -> Result<()> {
    let cfg: BsConfig = read_config(config)?;
    let grid = cfg.grid.build(cfg.potential.support)?;
    let data = tune_resonance(&cfg.potential, &grid, cfg.gap_threshold)?;
    let output = BsOutput {
        config_hash: canonical_hash(&cfg),
        theta_star: data.theta_star,
        eigenvalue: data.pair.value,
        eigen_residual: data.pair.residual,
        overlap: data.overlap,
        gap: data.gap,
        experimental: data.experimental,
        nodes: data.grid.nodes.len(),
        alpha: cfg.lambda.map(|l| coupling_to_alpha(l, &data)),
    };
    println!(
        "theta_star {:.12}  overlap {:.6}  gap {:.3e}",
        output.theta_star, output.overlap, output.gap
    );
    write_json(out, "bs.json", &output)
}

/// `pi` command: point-interaction spectrum and resolvent data.
pub fn cmd_pi(config: &Path, out: &Path) -> i32 {
    match run_pi(config, out) {
        Ok(()) => 0,
        Err(e) => report_exit(e),
    }
}

fn run_pi(config: &Path, out: &Path) -> Result<()> {
    let cfg: PiConfig = read_config(config)?;
    let z = SpectralPoint::new(cfg.z)?;
    let grid = cfg.grid.build(cfg.r_max)?;
    let space = crate::operator::PanelSpace::new(grid)?;
    // building the resolvent validates medium, z and grid together
    let res = pi_resolvent(space, &cfg.medium, cfg.alpha, &z)?;
    let nodes = res.op.space.grid.nodes.clone();
    let profile = interaction_profile(&cfg.medium, &z, &nodes)?;
    let coefficient = match cfg.alpha.finite() {
        Some(af) => Some(c_alpha(af, &z, &correction_l0(&cfg.medium, &z)?)?),
        None => None,
    };
    let eigenvalue = match pi_eigenvalue(&cfg.medium, cfg.alpha, cfg.e_max)? {
        Some(e) => {
            println!("eigenvalue {e:.12}");
            serde_json::Value::from(e)
        }
        None => {
            println!("eigenvalue none");
            serde_json::Value::from("none")
        }
    };
    let output = PiOutput {
        config_hash: canonical_hash(&cfg),
        alpha: cfg.alpha,
        z: cfg.z,
        kappa: z.kappa,
        coefficient,
        eigenvalue,
        nodes,
        profile,
    };
    write_json(out, "pi.json", &output)
}

/// `converge` command: run one sweep, write CSV and JSON reports.
pub fn cmd_converge(config: &Path, out: &Path) -> i32 {
    match run_converge(config, out) {
        Ok(code) => code,
        Err(e) => report_exit(e),
    }
}

fn forbid<T>(field: &Option<T>, name: &str, mode: &str) -> Result<()> {
    if field.is_some() {
        return Err(Error::Config(format!("field {name} does not apply to mode {mode}")));
    }
    Ok(())
}

fn require<T: Clone>(field: &Option<T>, name: &str, mode: &str) -> Result<T> {
    field.clone().ok_or_else(|| Error::Config(format!("mode {mode} needs field {name}")))
}

fn run_converge(config: &Path, out: &Path) -> Result<i32> {
    let cfg: ConvergeConfig = read_config(config)?;
    let report = match cfg.mode.as_str() {
        mode @ ("local" | "free") => {
            forbid(&cfg.density, "density", mode)?;
            forbid(&cfg.alpha, "alpha", mode)?;
            forbid(&cfg.scaling, "scaling", mode)?;
            let pot = require(&cfg.potential, "potential", mode)?;
            let lambda = require(&cfg.lambda, "lambda", mode)?;
            let branch = cfg.branch.unwrap_or(CouplingBranch::Resonant);
            let gap = cfg.gap_threshold.unwrap_or(0.5);
            if mode == "local" {
                sweep_local(&cfg.setup, &pot, lambda, branch, gap)?
            } else {
                sweep_free(&cfg.setup, &pot, lambda, branch, gap)?
            }
        }
        "nonlocal" => {
            forbid(&cfg.potential, "potential", "nonlocal")?;
            forbid(&cfg.lambda, "lambda", "nonlocal")?;
            forbid(&cfg.branch, "branch", "nonlocal")?;
            forbid(&cfg.gap_threshold, "gap_threshold", "nonlocal")?;
            let rho = require(&cfg.density, "density", "nonlocal")?;
            let alpha = require(&cfg.alpha, "alpha", "nonlocal")?;
            let scaling = cfg.scaling.unwrap_or(NonlocalScaling::Correct);
            sweep_nonlocal(&cfg.setup, &rho, alpha, scaling)?
        }
        other => {
            return Err(Error::Config(format!(
                "mode must be local, free or nonlocal, got {other}"
            )));
        }
    };

    fs::create_dir_all(out)?;
    let csv_path = out.join(format!("converge_{}.csv", cfg.mode));
    report.write_csv(&csv_path)?;
    println!("wrote {}", csv_path.display());
    let output =
        ConvergeOutput { config_hash: canonical_hash(&cfg), mode: cfg.mode.clone(), report };
    write_json(out, &format!("converge_{}.json", cfg.mode), &output)?;

    let invalid = output.report.rows.iter().filter(|r| !r.valid).count();
    if invalid > 0 {
        eprintln!("{invalid} row(s) flagged invalid");
        return Ok(4);
    }
    Ok(0)
}

/// `resonance` command: reconstruct ψ, check the tail law, optionally
/// verify localization under domain extension.
pub fn cmd_resonance_profile(config: &Path, out: &Path) -> i32 {
    match run_resonance(config, out) {
        Ok(()) => 0,
        Err(e) => report_exit(e),
    }
}

fn run_resonance(config: &Path, out: &Path) -> Result<()> {
    let cfg: ResonanceConfig = read_config(config)?;
    let grid = cfg.grid.build(cfg.potential.support)?;
    let data = tune_resonance(&cfg.potential, &grid, cfg.gap_threshold)?;
    let tuned = data.tuned_potential(&cfg.potential)?;
    let profile = resonance_profile(&data, &tuned, &cfg.radii)?;
    let localization =
        if cfg.localize { Some(verify_localization(&data, &tuned)?) } else { None };
    println!(
        "tail constant {:.12}  deviation {:.3e}  defect {:.3e}",
        profile.tail_constant, profile.tail_deviation, profile.residual_defect
    );
    let output = ResonanceOutput {
        config_hash: canonical_hash(&cfg),
        theta_star: data.theta_star,
        overlap: data.overlap,
        gap: data.gap,
        profile,
        localization,
    };
    write_json(out, "resonance.json", &output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use tempfile::tempdir;

    fn write_cfg(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn bs_body(coupling: f64, gap: f64, lambda: &str) -> String {
        format!(
            r#"{{
  "potential": {{ "profile": {{ "kind": "square_well", "depth": -1.0 }}, "support": 1.0, "coupling": {coupling} }},
  "grid": {{ "panels": 8, "nodes_per_panel": 12, "inner_scale": 1e-4 }},
  "gap_threshold": {gap}{lambda}
}}"#
        )
    }

    #[test]
    fn bs_command_tunes_and_reports_alpha_zero_for_flat_coupling() {
        let dir = tempdir().unwrap();
        let cfg = write_cfg(dir.path(), "bs.json", &bs_body(1.0, 0.5, ",\n  \"lambda\": 0.0"));
        let out = dir.path().join("out");
        assert_eq!(cmd_bs(&cfg, &out), 0);
        let text = fs::read_to_string(out.join("bs.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let theta = v["theta_star"].as_f64().unwrap();
        assert!((theta - PI * PI / 4.0).abs() < 1e-3, "theta {theta}");
        assert_eq!(v["alpha"].as_f64().unwrap(), 0.0);
        assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);

        // reruns reproduce the artifact byte for byte
        let first = text.clone();
        assert_eq!(cmd_bs(&cfg, &out), 0);
        assert_eq!(fs::read_to_string(out.join("bs.json")).unwrap(), first);
    }

    #[test]
    fn bs_command_exit_codes_follow_the_failure_kind() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("out");

        // repulsive potential: nothing to tune
        let cfg = write_cfg(dir.path(), "rep.json", &bs_body(1.0, 0.5, ""));
        let body = fs::read_to_string(&cfg).unwrap().replace("-1.0", "1.0");
        fs::write(&cfg, body).unwrap();
        assert_eq!(cmd_bs(&cfg, &out), 2);

        // an absurd simplicity demand trips the degeneracy flag
        let cfg = write_cfg(dir.path(), "deg.json", &bs_body(1.0, 0.95, ""));
        assert_eq!(cmd_bs(&cfg, &out), 3);

        // malformed JSON and unknown keys are schema errors
        let cfg = write_cfg(dir.path(), "bad.json", "{ not json");
        assert_eq!(cmd_bs(&cfg, &out), 1);
        let cfg = write_cfg(
            dir.path(),
            "extra.json",
            &bs_body(1.0, 0.5, ",\n  \"surprise\": 1.0"),
        );
        assert_eq!(cmd_bs(&cfg, &out), 1);
        assert_eq!(cmd_bs(Path::new("/nonexistent/x.json"), &out), 1);
    }

    #[test]
    fn pi_command_reports_the_free_eigenvalue_and_none_when_off() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("out");
        let body = format!(
            r#"{{
  "medium": {{ "kind": "free" }},
  "alpha": {{ "finite": {} }},
  "z": -4.0,
  "r_max": 3.0,
  "grid": {{ "panels": 6, "nodes_per_panel": 8, "inner_scale": 1e-3 }},
  "e_max": 25.0
}}"#,
            -0.25 / PI
        );
        let cfg = write_cfg(dir.path(), "pi.json", &body);
        assert_eq!(cmd_pi(&cfg, &out), 0);
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("pi.json")).unwrap()).unwrap();
        let e = v["eigenvalue"].as_f64().unwrap();
        assert!((e + 1.0).abs() < 1e-10, "eigenvalue {e}");
        assert!(v["coefficient"].as_f64().is_some());
        assert_eq!(v["nodes"].as_array().unwrap().len(), 48);

        let cfg = write_cfg(dir.path(), "off.json", &body.replace(
            &format!("{{ \"finite\": {} }}", -0.25 / PI),
            "\"infinite\"",
        ));
        assert_eq!(cmd_pi(&cfg, &out), 0);
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("pi.json")).unwrap()).unwrap();
        assert_eq!(v["eigenvalue"].as_str().unwrap(), "none");
        assert!(v.get("coefficient").is_none());
    }

    fn converge_body(mode: &str, medium: &str, z: f64, tail: &str) -> String {
        format!(
            r#"{{
  "mode": "{mode}",
  "setup": {{
    "medium": {medium},
    "z": {z},
    "epsilons": [0.2, 0.1, 0.05, 0.025],
    "annulus": [0.9, 1.5],
    "r_max": 2.0,
    "nodes_per_panel": 8,
    "inner_scale": 1e-4
  }}{tail}
}}"#
        )
    }

    #[test]
    fn converge_command_writes_byte_stable_reports() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("out");
        let medium = r#"{ "kind": "ball", "domain": { "radius": 2.0, "bc": { "kind": "dirichlet" } } }"#;
        let tail = r#",
  "potential": { "profile": { "kind": "square_well", "depth": -1.0 }, "support": 1.0, "coupling": 1.0 },
  "lambda": 0.0,
  "branch": "resonant""#;
        let cfg = write_cfg(dir.path(), "c.json", &converge_body("local", medium, -1.0, tail));
        assert_eq!(cmd_converge(&cfg, &out), 0);
        let csv = fs::read_to_string(out.join("converge_local.csv")).unwrap();
        assert!(csv.starts_with("# config_hash="));
        assert_eq!(csv.lines().count(), 6);
        assert_eq!(cmd_converge(&cfg, &out), 0);
        assert_eq!(fs::read_to_string(out.join("converge_local.csv")).unwrap(), csv);

        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("converge_local.json")).unwrap())
                .unwrap();
        assert_eq!(v["mode"].as_str().unwrap(), "local");
        assert_eq!(v["report"]["rows"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn converge_command_rejects_bad_mode_mixes_and_spectral_points() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("out");
        let medium = r#"{ "kind": "ball", "domain": { "radius": 2.0, "bc": { "kind": "dirichlet" } } }"#;

        // nonlocal fields on a local run
        let tail = r#",
  "potential": { "profile": { "kind": "square_well", "depth": -1.0 }, "support": 1.0, "coupling": 1.0 },
  "lambda": 0.0,
  "alpha": { "finite": -0.3 }"#;
        let cfg = write_cfg(dir.path(), "mix.json", &converge_body("local", medium, -1.0, tail));
        assert_eq!(cmd_converge(&cfg, &out), 1);

        // z inside the essential-spectrum range is a rejected spectral point
        let tail = r#",
  "potential": { "profile": { "kind": "square_well", "depth": -1.0 }, "support": 1.0, "coupling": 1.0 },
  "lambda": 0.0"#;
        let cfg = write_cfg(dir.path(), "pole.json", &converge_body("local", medium, 1.0, tail));
        assert_eq!(cmd_converge(&cfg, &out), 4);

        let cfg = write_cfg(dir.path(), "mode.json", &converge_body("both", medium, -1.0, tail));
        assert_eq!(cmd_converge(&cfg, &out), 1);
    }

    #[test]
    fn resonance_command_certifies_the_tail_and_flags_missing_resonance() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("out");
        let body = r#"{
  "potential": { "profile": { "kind": "square_well", "depth": -1.0 }, "support": 1.0, "coupling": 1.0 },
  "grid": { "panels": 8, "nodes_per_panel": 12, "inner_scale": 1e-4 },
  "gap_threshold": 0.5,
  "radii": [0.25, 0.5, 1.2, 1.5, 2.0]
}"#;
        let cfg = write_cfg(dir.path(), "res.json", body);
        assert_eq!(cmd_resonance_profile(&cfg, &out), 0);
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("resonance.json")).unwrap())
                .unwrap();
        assert!(v["profile"]["tail_deviation"].as_f64().unwrap() < 1e-8);
        assert!(v.get("localization").is_none());

        let cfg = write_cfg(dir.path(), "norate.json", &body.replace("-1.0", "1.0"));
        assert_eq!(cmd_resonance_profile(&cfg, &out), 2);
    }
}
