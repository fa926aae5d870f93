//! Run configuration: file schema, flag merging, and provenance tracking.
//!
//! Configs are strict JSON: unknown keys are rejected with the offending key
//! named. Exactly one plan source must be present (a catalog species or an
//! explicit parameter set). Every physical number in the effective plan is
//! tagged with where it came from (catalog, config file, or command line), and
//! the tags are embedded in the report.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context};
use gupsim::bounds::Catalog;
use gupsim::protocol::PlanNumbers;
use serde::{Deserialize, Serialize};

/// Output format for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// A physical quantity in a config file: accepted as a JSON number (its
/// literal decimal form is preserved) or as a decimal string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Decimal {
    Number(serde_json::Number),
    Text(String),
}

impl Decimal {
    pub fn as_str(&self) -> String {
        match self {
            Decimal::Number(n) => n.to_string(),
            Decimal::Text(s) => s.clone(),
        }
    }
}

/// Explicit physical parameters (decimal-preserving).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitParams {
    pub mass_u: Option<Decimal>,
    pub trap_freq_over_2pi_hz: Option<Decimal>,
    pub pulse_duration_s: Option<Decimal>,
    pub rabi1_rad_s: Option<Decimal>,
    pub rabi2_rad_s: Option<Decimal>,
    pub detuning_rad_s: Option<Decimal>,
    pub k_over_2pi_per_m: Option<Decimal>,
    pub wavelength_nm: Option<Decimal>,
    pub dk_over_k: Option<Decimal>,
    pub cycles: Option<u64>,
    pub beta0: Option<Decimal>,
}

/// Plan source: a species name, or a full explicit parameter set, plus
/// per-field overrides in either case.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSource {
    pub species: Option<String>,
    pub params: Option<ExplicitParams>,
    /// Overrides applied on top of the species row.
    pub overrides: Option<ExplicitParams>,
    pub beta0: Option<Decimal>,
    pub cycles: Option<u64>,
}

/// Numeric knobs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericConfig {
    pub dim: Option<usize>,
    pub precision_bits: Option<usize>,
    pub accuracy: Option<f64>,
}

/// Output destination.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// The config file schema.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub plan: Option<PlanSource>,
    pub numeric: Option<NumericConfig>,
    pub output: Option<OutputConfig>,
}

/// Where each effective plan number came from.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance(pub BTreeMap<&'static str, &'static str>);

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub plan: PlanNumbers,
    pub species: Option<String>,
    /// Explicit truncation dimension; commands choose their own default.
    pub dim: Option<usize>,
    pub precision_bits: usize,
    pub accuracy: f64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub provenance: Provenance,
    pub catalog_version: String,
}

pub fn load_file_config(path: &PathBuf) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg: FileConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    Ok(cfg)
}

/// Merge the config file and command-line flags into an effective plan.
///
/// Precedence: command-line flags > config overrides > species catalog row.
#[allow(clippy::too_many_arguments)]
pub fn resolve(
    file: Option<FileConfig>,
    catalog: &Catalog,
    species_flag: Option<String>,
    beta0_flag: Option<String>,
    cycles_flag: Option<u64>,
    dim_flag: Option<usize>,
    precision_flag: Option<usize>,
    accuracy_flag: Option<f64>,
    output_flag: Option<PathBuf>,
    format_flag: Option<Format>,
) -> anyhow::Result<RunConfig> {
    let file = file.unwrap_or_default();
    let plan_src = file.plan.unwrap_or_default();

    let species = species_flag.or(plan_src.species.clone());
    let explicit = plan_src.params.clone();
    if species.is_some() && explicit.is_some() {
        bail!("exactly one plan source: give either a species or explicit params, not both");
    }
    if species.is_none() && explicit.is_none() {
        bail!("no plan source: give --species or a config with plan.params");
    }

    let mut prov: BTreeMap<&'static str, &'static str> = BTreeMap::new();
    let beta0 = if let Some(b) = beta0_flag {
        prov.insert("beta0", "flag");
        b
    } else if let Some(b) = plan_src.beta0.as_ref() {
        prov.insert("beta0", "config");
        b.as_str()
    } else {
        prov.insert("beta0", "default");
        "0".to_string()
    };
    let cycles_over = if let Some(n) = cycles_flag {
        prov.insert("cycles", "flag");
        Some(n)
    } else if let Some(n) = plan_src.cycles {
        prov.insert("cycles", "config");
        Some(n)
    } else {
        None
    };

    let plan = if let Some(name) = &species {
        let sp = catalog.find(name)?;
        for key in [
            "mass_u",
            "trap_freq_over_2pi_hz",
            "pulse_duration_s",
            "rabi1_rad_s",
            "rabi2_rad_s",
            "detuning_rad_s",
            "k_over_2pi_per_m",
            "dk_over_k",
        ] {
            prov.entry(key).or_insert("catalog");
        }
        prov.entry("cycles").or_insert("catalog");
        let mut plan = catalog.plan(sp, &beta0, cycles_over);
        if let Some(ov) = &plan_src.overrides {
            apply_overrides(&mut plan, ov, &mut prov)?;
        }
        plan
    } else {
        let p = explicit.unwrap();
        for key in [
            "mass_u",
            "trap_freq_over_2pi_hz",
            "pulse_duration_s",
            "rabi1_rad_s",
            "rabi2_rad_s",
            "detuning_rad_s",
            "k_over_2pi_per_m",
            "dk_over_k",
        ] {
            prov.entry(key).or_insert("config");
        }
        prov.entry("cycles").or_insert("config");
        let need = |name: &str, v: &Option<Decimal>| -> anyhow::Result<String> {
            v.as_ref()
                .map(|d| d.as_str())
                .ok_or_else(|| anyhow::anyhow!("plan.params.{name} is required"))
        };
        let k_over_2pi = match (&p.k_over_2pi_per_m, &p.wavelength_nm) {
            (Some(k), _) => k.as_str(),
            (None, Some(lam)) => {
                let lam_nm: f64 = lam
                    .as_str()
                    .parse()
                    .context("plan.params.wavelength_nm must be numeric")?;
                format!("{:.17e}", 1.0 / (lam_nm * 1e-9))
            }
            (None, None) => bail!("plan.params needs k_over_2pi_per_m or wavelength_nm"),
        };
        PlanNumbers {
            mass_u: need("mass_u", &p.mass_u)?,
            trap_freq_over_2pi_hz: need("trap_freq_over_2pi_hz", &p.trap_freq_over_2pi_hz)?,
            pulse_duration_s: need("pulse_duration_s", &p.pulse_duration_s)?,
            rabi1_rad_s: need("rabi1_rad_s", &p.rabi1_rad_s)?,
            rabi2_rad_s: need("rabi2_rad_s", &p.rabi2_rad_s)?,
            detuning_rad_s: need("detuning_rad_s", &p.detuning_rad_s)?,
            k_over_2pi_per_m: k_over_2pi,
            dk_over_k: need("dk_over_k", &p.dk_over_k)?,
            cycles: cycles_over.or(p.cycles).unwrap_or(1),
            beta0,
        }
    };

    let numeric = file.numeric.unwrap_or_default();
    let output = file.output.unwrap_or_default();
    Ok(RunConfig {
        plan,
        species,
        dim: dim_flag.or(numeric.dim),
        precision_bits: precision_flag
            .or(numeric.precision_bits)
            .unwrap_or(gupsim::units::DEFAULT_PRECISION_BITS),
        accuracy: accuracy_flag.or(numeric.accuracy).unwrap_or(1e-5),
        output_path: output_flag.or(output.path),
        format: format_flag.or(output.format).unwrap_or(Format::Json),
        provenance: Provenance(prov),
        catalog_version: catalog.catalog_version.clone(),
    })
}

fn apply_overrides(
    plan: &mut PlanNumbers,
    ov: &ExplicitParams,
    prov: &mut BTreeMap<&'static str, &'static str>,
) -> anyhow::Result<()> {
    let mut set = |field: &mut String, v: &Option<Decimal>, key: &'static str| {
        if let Some(d) = v {
            *field = d.as_str();
            prov.insert(key, "user");
        }
    };
    set(&mut plan.mass_u, &ov.mass_u, "mass_u");
    set(
        &mut plan.trap_freq_over_2pi_hz,
        &ov.trap_freq_over_2pi_hz,
        "trap_freq_over_2pi_hz",
    );
    set(
        &mut plan.pulse_duration_s,
        &ov.pulse_duration_s,
        "pulse_duration_s",
    );
    set(&mut plan.rabi1_rad_s, &ov.rabi1_rad_s, "rabi1_rad_s");
    set(&mut plan.rabi2_rad_s, &ov.rabi2_rad_s, "rabi2_rad_s");
    set(
        &mut plan.detuning_rad_s,
        &ov.detuning_rad_s,
        "detuning_rad_s",
    );
    set(
        &mut plan.k_over_2pi_per_m,
        &ov.k_over_2pi_per_m,
        "k_over_2pi_per_m",
    );
    set(&mut plan.dk_over_k, &ov.dk_over_k, "dk_over_k");
    if let Some(lam) = &ov.wavelength_nm {
        let lam_nm: f64 = lam
            .as_str()
            .parse()
            .context("overrides.wavelength_nm must be numeric")?;
        plan.k_over_2pi_per_m = format!("{:.17e}", 1.0 / (lam_nm * 1e-9));
        prov.insert("k_over_2pi_per_m", "user");
    }
    if let Some(n) = ov.cycles {
        plan.cycles = n;
        prov.insert("cycles", "user");
    }
    if let Some(b) = &ov.beta0 {
        plan.beta0 = b.as_str();
        prov.insert("beta0", "user");
    }
    Ok(())
}
