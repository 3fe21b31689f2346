use std::path::PathBuf;

use super::{
    CellConfig, EntryConfig, ExperimentConfig, ExperimentError, Family, IngredientConfig, TrackConfig, TrackTarget,
};
use crate::amplifier::FilterPolicy;
use crate::lambda::ReductionLimits;
use crate::soup::{GeneratorParams, PerturbAction, Schedules, RNG_ALGORITHM};
use crate::stdlib::Combinator;

pub const PRESETS: [&str; 5] = ["heatmap", "successor", "add2", "addition", "sensitivity"];

const HEATMAP_ROWS: usize = 16;
const HEATMAP_COLS: usize = 16;
const HEATMAP_MIN_TARGET: f64 = 0.00002;
const HEATMAP_MAX_TARGET: f64 = 0.10;
const HEATMAP_MAX_TESTS: f64 = 0.30;

const SKI: [Combinator; 3] = [Combinator::S, Combinator::K, Combinator::I];
const SKIP: [Combinator; 4] = [Combinator::S, Combinator::K, Combinator::I, Combinator::P];

pub fn preset(name: &str) -> Result<ExperimentConfig, ExperimentError> {
    let mut config = base(name);
    match name {
        "heatmap" => {
            config.replicates = 100;
            config.schedules.perturb_action = PerturbAction::None;
            config.cells = heatmap_cells();
            config.track = vec![track_comb("scc", Combinator::Scc), track_family("amp_successor", Family::Successor)];
        }
        "successor" => {
            config.soup_size = 6000;
            config.replicates = 16;
            let mut entries = seeds(&SKI, 5.0 / 6.0);
            entries.push(amps(Family::Successor, 1.0 / 6.0));
            config.cells = vec![cell("ski-successor", entries)];
            config.track = vec![track_comb("scc", Combinator::Scc), track_family("amp_successor", Family::Successor)];
        }
        "add2" => {
            let mut entries = seeds(&SKI, 0.85);
            entries.push(amps(Family::Add2, 0.15));
            config.cells = vec![cell("ski-add2", entries)];
            config.track = vec![track_comb("add2", Combinator::Add2), track_family("amp_add2", Family::Add2)];
        }
        "addition" => {
            let mut entries = seeds(&SKIP, 0.85);
            entries.push(amps(Family::Addition, 0.075));
            entries.push(amps(Family::Successor, 0.075));
            config.cells = vec![cell("skip-addition", entries)];
            config.track = vec![
                track_comb("add", Combinator::Add),
                track_comb("scc", Combinator::Scc),
                track_family("amp_addition", Family::Addition),
                track_family("amp_successor", Family::Successor),
            ];
        }
        "sensitivity" => {
            config.cells = sensitivity_cells();
            config.track = vec![
                track_comb("scc", Combinator::Scc),
                track_comb("add", Combinator::Add),
                track_family("amp_successor", Family::Successor),
                track_family("amp_addition", Family::Addition),
            ];
        }
        _ => {
            return Err(ExperimentError::Config(format!(
                "unknown preset `{name}` (expected one of {})",
                PRESETS.join(", ")
            )))
        }
    }
    Ok(config)
}

fn base(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        preset: name.to_string(),
        soup_size: 5000,
        total_collisions: 1_000_000,
        replicates: 1000,
        master_seed: 0,
        rng: RNG_ALGORITHM.to_string(),
        schedules: Schedules::default(),
        limits: ReductionLimits::default(),
        generator: GeneratorParams::default(),
        amplification_factor: 100,
        filters: FilterPolicy::ALL,
        threshold: 0.20,
        cells: Vec::new(),
        track: Vec::new(),
        output_dir: PathBuf::from("runs").join(name),
        workers: None,
    }
}

/// `share` split equally over `combs`.
fn seeds(combs: &[Combinator], share: f64) -> Vec<EntryConfig> {
    combs
        .iter()
        .map(|&name| EntryConfig {
            ingredient: IngredientConfig::Combinator { name },
            fraction: share / combs.len() as f64,
        })
        .collect()
}

fn amps(family: Family, fraction: f64) -> EntryConfig {
    EntryConfig {
        ingredient: IngredientConfig::Amplifiers { family },
        fraction,
    }
}

fn cell(name: &str, entries: Vec<EntryConfig>) -> CellConfig {
    CellConfig {
        name: name.to_string(),
        x: None,
        y: None,
        entries,
    }
}

fn track_comb(label: &str, name: Combinator) -> TrackConfig {
    TrackConfig {
        label: label.to_string(),
        target: TrackTarget::Combinator { name },
    }
}

fn track_family(label: &str, family: Family) -> TrackConfig {
    TrackConfig {
        label: label.to_string(),
        target: TrackTarget::Family { family },
    }
}

/// Rows: initial successor share, log-spaced. Columns: amplifier share,
/// linear from zero. The rest is S, K and I in equal thirds.
fn heatmap_cells() -> Vec<CellConfig> {
    let ratio = (HEATMAP_MAX_TARGET / HEATMAP_MIN_TARGET).ln();
    let mut cells = Vec::with_capacity(HEATMAP_ROWS * HEATMAP_COLS);
    for row in 0..HEATMAP_ROWS {
        let y = HEATMAP_MIN_TARGET * (ratio * row as f64 / (HEATMAP_ROWS - 1) as f64).exp();
        for col in 0..HEATMAP_COLS {
            let x = HEATMAP_MAX_TESTS * col as f64 / (HEATMAP_COLS - 1) as f64;
            let mut entries = vec![EntryConfig {
                ingredient: IngredientConfig::Combinator { name: Combinator::Scc },
                fraction: y,
            }];
            if x > 0.0 {
                entries.push(amps(Family::Successor, x));
            }
            entries.extend(seeds(&SKI, 1.0 - x - y));
            cells.push(CellConfig {
                name: format!("y{row:02}-x{col:02}"),
                x: Some(x),
                y: Some(y),
                entries,
            });
        }
    }
    cells
}

fn sensitivity_cells() -> Vec<CellConfig> {
    let inputs: [(&str, Option<&[Combinator]>); 3] = [("random", None), ("ski", Some(&SKI)), ("skip", Some(&SKIP))];
    let amp_sets: [(&str, &[Family]); 4] = [
        ("none", &[]),
        ("scc", &[Family::Successor]),
        ("add", &[Family::Addition]),
        ("both", &[Family::Successor, Family::Addition]),
    ];
    let mut cells = Vec::new();
    for (input, combs) in inputs {
        for (set, families) in amp_sets {
            let amp_share = if families.is_empty() { 0.0 } else { 0.15 };
            let mut entries: Vec<EntryConfig> = families
                .iter()
                .map(|&f| amps(f, amp_share / families.len() as f64))
                .collect();
            match combs {
                Some(combs) => entries.extend(seeds(combs, 1.0 - amp_share)),
                None => entries.push(EntryConfig {
                    ingredient: IngredientConfig::Random,
                    fraction: 1.0 - amp_share,
                }),
            }
            cells.push(cell(&format!("{input}-{set}"), entries));
        }
    }
    cells
}
