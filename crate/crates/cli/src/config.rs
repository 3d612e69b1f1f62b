use std::path::Path;

use exboot_core::bootstrap::SigmaChoice;
use exboot_core::cox::FitOptions;
use exboot_core::lab::{ExperimentConfig, InequalityConfig, MonomialClass, Tolerances, WeightLawConfig};
use exboot_core::weights::DiagnosticsOptions;
use exboot_core::{SimulationConfig, WeightScheme};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// One file drives every command; each command reads only its sections.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub simulation: SimulationConfig,
    pub weights: WeightsSection,
    pub fit: FitOptions,
    pub bootstrap: BootstrapSection,
    pub experiment: ExperimentSection,
    pub weight_law: WeightLawSection,
    pub inequalities: InequalitySection,
    pub rng: RngSection,
    pub execution: ExecutionSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsSection {
    pub scheme: WeightScheme,
}

impl Default for WeightsSection {
    fn default() -> Self {
        Self { scheme: WeightScheme::Efron }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapSection {
    #[serde(rename = "B")]
    pub replicates: usize,
    pub sigma: SigmaChoice,
    pub alpha: f64,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        Self { replicates: 2000, sigma: SigmaChoice::Plugin, alpha: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub n_grid: Vec<usize>,
    pub mc_reps: usize,
    pub alpha: f64,
    pub moments: Vec<u32>,
    pub tolerances: Tolerances,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let d = ExperimentConfig::default();
        Self { n_grid: d.n_grid, mc_reps: d.mc_reps, alpha: d.alpha, moments: d.moments, tolerances: d.tolerances }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightLawSection {
    pub schemes: Vec<WeightScheme>,
    pub n_grid: Vec<usize>,
    pub c2_n: usize,
    pub c2_replications: usize,
    pub c2_tolerance: f64,
    pub fifth_moment_tolerance: f64,
    pub multinomial_fifth_bound: f64,
    pub diagnostics: DiagnosticsOptions,
}

impl Default for WeightLawSection {
    fn default() -> Self {
        let d = WeightLawConfig::default();
        Self {
            schemes: d.schemes,
            n_grid: d.n_grid,
            c2_n: d.c2_n,
            c2_replications: d.c2_replications,
            c2_tolerance: d.c2_tolerance,
            fifth_moment_tolerance: d.fifth_moment_tolerance,
            multinomial_fifth_bound: d.multinomial_fifth_bound,
            diagnostics: d.diagnostics,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InequalitySection {
    pub laws: usize,
    pub r_values: Vec<f64>,
    pub law_sample_size: usize,
    pub p_values: Vec<u32>,
    pub n_values: Vec<usize>,
    pub n0_divisor: usize,
    pub schemes: Vec<WeightScheme>,
    pub draws: usize,
    pub powers: Vec<u32>,
}

impl Default for InequalitySection {
    fn default() -> Self {
        let d = InequalityConfig::default();
        Self {
            laws: d.laws,
            r_values: d.r_values,
            law_sample_size: d.law_sample_size,
            p_values: d.p_values,
            n_values: d.n_values,
            n0_divisor: d.n0_divisor,
            schemes: d.schemes,
            draws: d.draws,
            powers: d.class.powers,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RngSection {
    pub seed: u64,
}

impl Default for RngSection {
    fn default() -> Self {
        Self { seed: ExperimentConfig::default().seed }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExecutionSection {
    /// Worker threads; the rayon default when absent. Left out of output
    /// files, which do not depend on it.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    pub strict: bool,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Config(format!("config: {}", e.message().trim()) + &location(text, &e)))
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            simulation: self.simulation.clone(),
            scheme: self.weights.scheme,
            n_grid: self.experiment.n_grid.clone(),
            replicates: self.bootstrap.replicates,
            mc_reps: self.experiment.mc_reps,
            alpha: self.experiment.alpha,
            moments: self.experiment.moments.clone(),
            seed: self.rng.seed,
            sigma: self.bootstrap.sigma,
            strict: self.execution.strict,
            tolerances: self.experiment.tolerances.clone(),
        }
    }

    pub fn weight_law(&self) -> WeightLawConfig {
        let w = &self.weight_law;
        WeightLawConfig {
            seed: self.rng.seed,
            schemes: w.schemes.clone(),
            n_grid: w.n_grid.clone(),
            c2_n: w.c2_n,
            c2_replications: w.c2_replications,
            c2_tolerance: w.c2_tolerance,
            fifth_moment_tolerance: w.fifth_moment_tolerance,
            multinomial_fifth_bound: w.multinomial_fifth_bound,
            diagnostics: w.diagnostics.clone(),
        }
    }

    pub fn inequalities(&self) -> InequalityConfig {
        let s = &self.inequalities;
        InequalityConfig {
            seed: self.rng.seed,
            laws: s.laws,
            r_values: s.r_values.clone(),
            law_sample_size: s.law_sample_size,
            p_values: s.p_values.clone(),
            n_values: s.n_values.clone(),
            n0_divisor: s.n0_divisor,
            schemes: s.schemes.clone(),
            draws: s.draws,
            class: MonomialClass { powers: s.powers.clone() },
        }
    }
}

/// ` (line k: <source line>)`, which shows the offending key.
fn location(text: &str, e: &toml::de::Error) -> String {
    let Some(span) = e.span() else {
        return String::new();
    };
    let start = span.start.min(text.len());
    let line = text[..start].matches('\n').count() + 1;
    let source = text.lines().nth(line - 1).unwrap_or("").trim();
    format!(" (line {line}: `{source}`)")
}
