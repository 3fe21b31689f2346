//! Experiment configuration, presets and the replicate runner.

mod presets;
mod run;

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::amplifier::{make_unit_test, AmplifierSpec, FilterPolicy, UnitTest};
use crate::lambda::{parse_closed, LambdaExpr, ReductionLimits};
use crate::metrics::{MetricsError, Motif, MotifSet};
use crate::soup::{
    Amount, GeneratorParams, Ingredient, PopulationSpec, Schedules, SoupError, SoupRng, RNG_ALGORITHM,
};
use crate::stdlib::Combinator;

pub use presets::{preset, PRESETS};
pub use run::{
    replicate_seed, run_experiment, summarize, ExperimentReport, Manifest, ReplicateEntry, ReplicateStatus,
    SummaryRow, MANIFEST_FILE, SUMMARY_FILE,
};

/// Largest expected value a unit test may have. Beyond it the reference
/// implementations' tests no longer fit the default vertex budget.
pub const MAX_TEST_VALUE: u32 = 10;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Runtime(String),
}

impl ExperimentError {
    pub fn is_config(&self) -> bool {
        matches!(self, ExperimentError::Config(_))
    }
}

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

/// A unit-test family for amplifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `f n = n + 1`
    Successor,
    /// `f n = n + 2`
    Add2,
    /// `f n m = n + m`
    Addition,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Successor => "successor",
            Family::Add2 => "add2",
            Family::Addition => "addition",
        }
    }

    /// The reference implementation the family tests for.
    pub fn target(self) -> Combinator {
        match self {
            Family::Successor => Combinator::Scc,
            Family::Add2 => Combinator::Add2,
            Family::Addition => Combinator::Add,
        }
    }

    /// Every test in the family, in the order amplifier copies cycle through.
    pub fn tests(self) -> Vec<UnitTest> {
        let cases: Vec<(Vec<u32>, u32)> = match self {
            Family::Successor => (0..MAX_TEST_VALUE).map(|n| (vec![n], n + 1)).collect(),
            Family::Add2 => (0..MAX_TEST_VALUE - 1).map(|n| (vec![n], n + 2)).collect(),
            Family::Addition => {
                let mut pairs: Vec<(u32, u32)> = (0..=MAX_TEST_VALUE)
                    .flat_map(|n| (0..=MAX_TEST_VALUE - n).map(move |m| (n, m)))
                    .collect();
                // fixed shuffle so that small amplifier counts still cover the grid evenly
                pairs.shuffle(&mut SoupRng::seed_from_u64(0));
                pairs.into_iter().map(|(n, m)| (vec![n, m], n + m)).collect()
            }
        };
        cases
            .into_iter()
            .map(|(inputs, expected)| make_unit_test(&inputs, expected).expect("family tests build"))
            .collect()
    }

    pub fn amplifiers(self, factor: u32, filters: FilterPolicy) -> Result<Vec<AmplifierSpec>, ExperimentError> {
        self.tests()
            .into_iter()
            .map(|t| AmplifierSpec::new(self.name(), t, factor, filters).map_err(|e| config_err(e.to_string())))
            .collect()
    }
}

/// An initial-population ingredient as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IngredientConfig {
    Combinator { name: Combinator },
    Expr { text: String },
    Random,
    Amplifiers { family: Family },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryConfig {
    pub ingredient: IngredientConfig,
    /// Share of the soup; a cell's fractions sum to 1.
    pub fraction: f64,
}

/// One initial condition. `x`/`y` place the cell on a heatmap grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    pub entries: Vec<EntryConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrackTarget {
    Combinator { name: Combinator },
    Expr { text: String },
    Family { family: Family },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    pub label: String,
    pub target: TrackTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: String,
    pub soup_size: usize,
    pub total_collisions: u64,
    /// Replicates per cell.
    pub replicates: u32,
    pub master_seed: u64,
    pub rng: String,
    pub schedules: Schedules,
    pub limits: ReductionLimits,
    pub generator: GeneratorParams,
    pub amplification_factor: u32,
    pub filters: FilterPolicy,
    /// Share of the soup a tracked label must hold at the end of a run to
    /// count as a hit.
    pub threshold: f64,
    pub cells: Vec<CellConfig>,
    pub track: Vec<TrackConfig>,
    pub output_dir: PathBuf,
    /// Worker threads; absent means available parallelism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Multiplies soup size, collision count and replicates by `factor`,
    /// keeping each at least 1. Schedules are left as they are.
    pub fn scaled(mut self, factor: f64) -> Result<Self, ExperimentError> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(config_err(format!("scale must be positive, got {factor}")));
        }
        let s = |v: f64| (v * factor).round().max(1.0);
        self.soup_size = s(self.soup_size as f64) as usize;
        self.total_collisions = s(self.total_collisions as f64) as u64;
        self.replicates = s(self.replicates as f64) as u32;
        Ok(self)
    }

    /// SHA-256 over the canonical JSON form, excluding where output goes and
    /// how many threads run it.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let serde_json::Value::Object(map) = &mut value {
            map.remove("output_dir");
            map.remove("workers");
        }
        hex::encode(Sha256::digest(serde_json::to_vec(&value).expect("json")))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.soup_size < 2 {
            return Err(config_err("soup_size must be at least 2"));
        }
        if self.total_collisions == 0 || self.replicates == 0 {
            return Err(config_err("total_collisions and replicates must be positive"));
        }
        if self.rng != RNG_ALGORITHM {
            return Err(config_err(format!("unsupported rng `{}`, expected `{RNG_ALGORITHM}`", self.rng)));
        }
        self.schedules.validate().map_err(config_err)?;
        if self.total_collisions < self.schedules.measure_every {
            return Err(config_err("total_collisions is shorter than one measurement interval"));
        }
        if self.amplification_factor == 0 {
            return Err(config_err("amplification_factor must be positive"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(config_err("threshold must lie in [0, 1]"));
        }
        if self.workers == Some(0) {
            return Err(config_err("workers must be positive"));
        }
        self.generator.validate().map_err(|e| config_err(e.to_string()))?;
        if self.cells.is_empty() {
            return Err(config_err("no cells"));
        }
        for (i, cell) in self.cells.iter().enumerate() {
            let ok_name = !cell.name.is_empty()
                && cell.name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
            if !ok_name {
                return Err(config_err(format!("bad cell name `{}`", cell.name)));
            }
            if self.cells[..i].iter().any(|c| c.name == cell.name) {
                return Err(config_err(format!("duplicate cell `{}`", cell.name)));
            }
            self.population(cell)?;
        }
        self.motifs()?;
        Ok(())
    }

    /// Resolves a cell to a population of `soup_size` elements.
    pub fn population(&self, cell: &CellConfig) -> Result<PopulationSpec, ExperimentError> {
        let mut entries = Vec::with_capacity(cell.entries.len());
        for e in &cell.entries {
            let ingredient = match &e.ingredient {
                IngredientConfig::Combinator { name } => Ingredient::Molecule(name.expr()),
                IngredientConfig::Expr { text } => Ingredient::Molecule(parse_expr(text)?),
                IngredientConfig::Random => Ingredient::Random(self.generator),
                IngredientConfig::Amplifiers { family } => {
                    Ingredient::Amplifiers(family.amplifiers(self.amplification_factor, self.filters)?)
                }
            };
            entries.push((ingredient, Amount::Fraction(e.fraction)));
        }
        PopulationSpec::new(self.soup_size, entries)
            .map_err(|e: SoupError| config_err(format!("cell `{}`: {e}", cell.name)))
    }

    pub fn motifs(&self) -> Result<MotifSet, ExperimentError> {
        let entries = self
            .track
            .iter()
            .map(|t| {
                let motif = match &t.target {
                    TrackTarget::Combinator { name } => Motif::Expr(name.expr()),
                    TrackTarget::Expr { text } => Motif::Expr(parse_expr(text)?),
                    TrackTarget::Family { family } => Motif::AmplifierFamily(family.name().to_string()),
                };
                Ok((t.label.clone(), motif))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        if entries.is_empty() {
            return Err(config_err("nothing to track"));
        }
        MotifSet::new(entries).map_err(|e| config_err(e.to_string()))
    }

    pub fn worker_count(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

fn parse_expr(text: &str) -> Result<LambdaExpr, ExperimentError> {
    let e = parse_closed(text).map_err(|e| config_err(format!("`{text}`: {e}")))?;
    crate::lambda::reduce_to_normal_form(&e, ReductionLimits::default())
        .into_normal_form()
        .ok_or_else(|| config_err(format!("`{text}` has no normal form within the default limits")))
}
