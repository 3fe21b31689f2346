//! The collision dynamics.
//!
//! A [`Soup`] holds a constant number of elements. Each collision draws an
//! ordered pair of distinct slots `(A, B)` and applies `A` to `B`:
//!
//! * `B` is an amplifier: the collision fails eagerly and nothing changes.
//! * `A` is an amplifier, `B` a molecule: on a passing test,
//!   `amplification_factor` copies of `B` overwrite uniformly chosen slots; on
//!   a failing test one copy of `A` overwrites a uniformly chosen slot; an
//!   inert test changes nothing.
//! * Both molecules: the normal form of `A B`, if reached within budget,
//!   overwrites a uniformly chosen slot; otherwise nothing changes.
//!
//! Overwriting a slot drawn from the pre-collision population is the same as
//! inserting the product and then deleting a uniformly chosen element other
//! than the product. `A` and `B` may be the element deleted.

mod generator;

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use std::sync::Arc;

use log::warn;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generator::{random_expression, random_tree, GenerationError, GeneratorParams};

use crate::amplifier::{evaluate_candidate, AmplifierId, AmplifierResult, AmplifierSpec};
use crate::lambda::{apply_and_reduce, reduce_to_normal_form, LambdaExpr, LimitKind, ReductionLimits, ReductionOutcome};

/// The generator behind every soup.
pub type SoupRng = ChaCha8Rng;

/// Name recorded in configs and manifests for [`SoupRng`].
pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SoupElement {
    /// A closed expression in normal form.
    Molecule(LambdaExpr),
    Amplifier(AmplifierId),
}

impl SoupElement {
    pub fn as_molecule(&self) -> Option<&LambdaExpr> {
        match self {
            SoupElement::Molecule(e) => Some(e),
            SoupElement::Amplifier(_) => None,
        }
    }

    pub fn is_amplifier(&self) -> bool {
        matches!(self, SoupElement::Amplifier(_))
    }
}

/// What goes into the initial population.
#[derive(Debug, Clone)]
pub enum Ingredient {
    Molecule(LambdaExpr),
    /// Copies cycle through the listed amplifiers in order.
    Amplifiers(Vec<AmplifierSpec>),
    /// Each copy is a fresh random expression.
    Random(GeneratorParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amount {
    Count(usize),
    Fraction(f64),
}

#[derive(Debug, Clone)]
pub struct PopulationSpec {
    soup_size: usize,
    entries: Vec<(Ingredient, usize)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SoupError {
    #[error("soup size must be positive")]
    Empty,
    #[error("a soup needs at least two elements to collide")]
    TooSmall,
    #[error("fractions sum to {0}, expected 1")]
    FractionSum(f64),
    #[error("fraction {0} is not in [0, 1]")]
    BadFraction(f64),
    #[error("counts sum to {counts}, expected soup size {soup_size}")]
    CountSum { counts: usize, soup_size: usize },
    #[error("cannot mix counts and fractions in one population")]
    MixedAmounts,
    #[error("an amplifier ingredient lists no amplifiers")]
    NoAmplifiers,
    #[error("initial molecule {0} does not normalize within the reduction limits")]
    Unnormalizable(String),
    #[error("initial molecule {0} is not closed")]
    Open(String),
    #[error(transparent)]
    Generation(#[from] GenerationError),
}

impl PopulationSpec {
    /// Builds a population of `soup_size` elements. Amounts must be all counts
    /// (summing to `soup_size`) or all fractions (summing to 1, resolved by
    /// largest remainder with ties going to the earlier entry).
    pub fn new(soup_size: usize, entries: Vec<(Ingredient, Amount)>) -> Result<Self, SoupError> {
        if soup_size == 0 {
            return Err(SoupError::Empty);
        }
        let all_counts = entries.iter().all(|(_, a)| matches!(a, Amount::Count(_)));
        let all_fractions = entries.iter().all(|(_, a)| matches!(a, Amount::Fraction(_)));
        let counts: Vec<usize> = if all_counts {
            let counts: Vec<usize> = entries
                .iter()
                .map(|(_, a)| match a {
                    Amount::Count(c) => *c,
                    Amount::Fraction(_) => unreachable!(),
                })
                .collect();
            let total: usize = counts.iter().sum();
            if total != soup_size {
                return Err(SoupError::CountSum {
                    counts: total,
                    soup_size,
                });
            }
            counts
        } else if all_fractions {
            let fractions: Vec<f64> = entries
                .iter()
                .map(|(_, a)| match a {
                    Amount::Fraction(f) => *f,
                    Amount::Count(_) => unreachable!(),
                })
                .collect();
            largest_remainder(soup_size, &fractions)?
        } else {
            return Err(SoupError::MixedAmounts);
        };
        let entries = entries
            .into_iter()
            .zip(counts)
            .map(|((ingredient, _), n)| (ingredient, n))
            .collect();
        Ok(Self { soup_size, entries })
    }

    /// Counts given directly; the soup size is their sum.
    pub fn from_counts(entries: Vec<(Ingredient, usize)>) -> Result<Self, SoupError> {
        let total = entries.iter().map(|(_, n)| n).sum();
        Self::new(total, entries.into_iter().map(|(i, n)| (i, Amount::Count(n))).collect())
    }

    pub fn soup_size(&self) -> usize {
        self.soup_size
    }

    /// Resolved integer count per entry.
    pub fn entries(&self) -> &[(Ingredient, usize)] {
        &self.entries
    }
}

/// Apportions `total` by `fractions` with the largest-remainder method.
pub fn largest_remainder(total: usize, fractions: &[f64]) -> Result<Vec<usize>, SoupError> {
    if let Some(&bad) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(SoupError::BadFraction(bad));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SoupError::FractionSum(sum));
    }
    let quotas: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    Ok(counts)
}

/// What happens to the population when amplifiers are replenished.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbAction {
    /// Top every amplifier back up to its initial count.
    ReplenishAmplifiers,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedules {
    pub measure_every: u64,
    pub perturb_every: u64,
    pub perturb_action: PerturbAction,
}

impl Schedules {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.measure_every == 0 {
            return Err("measure_every must be positive");
        }
        if self.perturb_every == 0 {
            return Err("perturb_every must be positive");
        }
        Ok(())
    }
}

impl Default for Schedules {
    fn default() -> Self {
        Self {
            measure_every: 1000,
            perturb_every: 100_000,
            perturb_action: PerturbAction::ReplenishAmplifiers,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CollisionOutcome {
    /// One element was written over a uniformly chosen slot.
    Reaction {
        inserted: SoupElement,
        removed: SoupElement,
    },
    /// `copies` of a passing candidate were written over distinct slots.
    AmplifiedReaction {
        product: LambdaExpr,
        copies: usize,
        removed: Vec<SoupElement>,
    },
    /// Reduction ran out of budget; nothing changed.
    FailedCollision(LimitKind),
    /// An amplifier was drawn as the argument; nothing changed.
    EagerFail,
}

/// Tallies of collision outcomes since the soup was built.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionStats {
    pub reactions: u64,
    pub amplified: u64,
    pub test_failures: u64,
    pub filtered: u64,
    pub failed_steps: u64,
    pub failed_vertices: u64,
    pub eager_fails: u64,
}

/// Result of one replenishment pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Replenishment {
    pub added: usize,
    /// Amplifiers that could not be added for lack of molecules to displace.
    pub shortfall: usize,
}

/// Called at every measurement point of [`Soup::run`].
pub trait Observer {
    type Record;
    fn observe(&mut self, soup: &Soup) -> Self::Record;
}

impl<F, R> Observer for F
where
    F: FnMut(&Soup) -> R,
{
    type Record = R;
    fn observe(&mut self, soup: &Soup) -> R {
        self(soup)
    }
}

/// Structural hashes are already well mixed.
#[derive(Default)]
struct PassThrough(u64);

impl Hasher for PassThrough {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = self.0.rotate_left(8) ^ b as u64;
        }
    }

    fn write_u64(&mut self, n: u64) {
        self.0 = n;
    }
}

type MoleculeIndex = HashMap<LambdaExpr, usize, BuildHasherDefault<PassThrough>>;

pub struct Soup {
    elements: Vec<SoupElement>,
    amplifiers: Vec<Arc<AmplifierSpec>>,
    initial_amplifier_counts: Vec<usize>,
    amplifier_counts: Vec<usize>,
    molecules: MoleculeIndex,
    rng: SoupRng,
    collisions: u64,
    limits: ReductionLimits,
    stats: CollisionStats,
}

impl Soup {
    /// Builds the initial population. Molecules are normalized (and must be
    /// closed); random ingredients draw from the soup's own generator, so the
    /// whole trajectory is a function of `(spec, seed)`.
    pub fn new(spec: &PopulationSpec, limits: ReductionLimits, seed: u64) -> Result<Self, SoupError> {
        if spec.soup_size() < 2 {
            return Err(SoupError::TooSmall);
        }
        let mut rng = SoupRng::seed_from_u64(seed);
        let mut amplifiers: Vec<Arc<AmplifierSpec>> = Vec::new();
        let mut elements = Vec::with_capacity(spec.soup_size());
        for (ingredient, count) in spec.entries() {
            match ingredient {
                Ingredient::Molecule(expr) => {
                    if !expr.is_closed() {
                        return Err(SoupError::Open(expr.to_string()));
                    }
                    let normal = reduce_to_normal_form(expr, limits)
                        .into_normal_form()
                        .ok_or_else(|| SoupError::Unnormalizable(expr.to_string()))?;
                    elements.extend((0..*count).map(|_| SoupElement::Molecule(normal.clone())));
                }
                Ingredient::Amplifiers(specs) => {
                    if specs.is_empty() {
                        return Err(SoupError::NoAmplifiers);
                    }
                    let ids: Vec<AmplifierId> = specs
                        .iter()
                        .map(|s| register(&mut amplifiers, s))
                        .collect();
                    elements.extend((0..*count).map(|i| SoupElement::Amplifier(ids[i % ids.len()])));
                }
                Ingredient::Random(params) => {
                    for _ in 0..*count {
                        let e = random_expression(params, limits, &mut rng)?;
                        elements.push(SoupElement::Molecule(e));
                    }
                }
            }
        }
        let mut soup = Soup {
            amplifier_counts: vec![0; amplifiers.len()],
            initial_amplifier_counts: Vec::new(),
            amplifiers,
            elements: Vec::new(),
            molecules: MoleculeIndex::default(),
            rng,
            collisions: 0,
            limits,
            stats: CollisionStats::default(),
        };
        for e in &elements {
            soup.index_insert(e);
        }
        soup.elements = elements;
        soup.initial_amplifier_counts = soup.amplifier_counts.clone();
        Ok(soup)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[SoupElement] {
        &self.elements
    }

    pub fn collisions(&self) -> u64 {
        self.collisions
    }

    pub fn limits(&self) -> ReductionLimits {
        self.limits
    }

    pub fn stats(&self) -> CollisionStats {
        self.stats
    }

    pub fn amplifier_specs(&self) -> &[Arc<AmplifierSpec>] {
        &self.amplifiers
    }

    pub fn amplifier_spec(&self, id: AmplifierId) -> &AmplifierSpec {
        &self.amplifiers[id.0 as usize]
    }

    pub fn amplifier_count(&self, id: AmplifierId) -> usize {
        self.amplifier_counts.get(id.0 as usize).copied().unwrap_or(0)
    }

    pub fn initial_amplifier_count(&self, id: AmplifierId) -> usize {
        self.initial_amplifier_counts.get(id.0 as usize).copied().unwrap_or(0)
    }

    /// Amplifier elements whose spec belongs to `family`.
    pub fn family_count(&self, family: &str) -> usize {
        self.amplifiers
            .iter()
            .zip(&self.amplifier_counts)
            .filter(|(spec, _)| spec.family == family)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn total_amplifiers(&self) -> usize {
        self.amplifier_counts.iter().sum()
    }

    /// Molecules α-equivalent to `expr`.
    pub fn molecule_count(&self, expr: &LambdaExpr) -> usize {
        self.molecules.get(expr).copied().unwrap_or(0)
    }

    /// Distinct molecules currently present with their multiplicities.
    pub fn molecule_census(&self) -> impl Iterator<Item = (&LambdaExpr, usize)> {
        self.molecules.iter().map(|(e, n)| (e, *n))
    }

    fn index_insert(&mut self, e: &SoupElement) {
        match e {
            SoupElement::Molecule(expr) => *self.molecules.entry(expr.clone()).or_insert(0) += 1,
            SoupElement::Amplifier(id) => self.amplifier_counts[id.0 as usize] += 1,
        }
    }

    fn index_remove(&mut self, e: &SoupElement) {
        match e {
            SoupElement::Molecule(expr) => {
                let n = self.molecules.get_mut(expr).expect("indexed molecule");
                *n -= 1;
                if *n == 0 {
                    self.molecules.remove(expr);
                }
            }
            SoupElement::Amplifier(id) => self.amplifier_counts[id.0 as usize] -= 1,
        }
    }

    fn overwrite(&mut self, slot: usize, element: SoupElement) -> SoupElement {
        self.index_insert(&element);
        let old = std::mem::replace(&mut self.elements[slot], element);
        self.index_remove(&old);
        old
    }

    fn insert_one(&mut self, element: SoupElement) -> SoupElement {
        let slot = self.rng.gen_range(0..self.elements.len());
        self.overwrite(slot, element)
    }

    /// One collision.
    pub fn collide(&mut self) -> CollisionOutcome {
        let n = self.elements.len();
        let a = self.rng.gen_range(0..n);
        let mut b = self.rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        self.collide_slots(a, b)
    }

    /// Collides the element in slot `a` (applied) with the one in slot `b`.
    pub fn collide_slots(&mut self, a: usize, b: usize) -> CollisionOutcome {
        assert!(a != b, "a collision needs two distinct slots");
        let n = self.elements.len();
        self.collisions += 1;
        match (&self.elements[a], &self.elements[b]) {
            (_, SoupElement::Amplifier(_)) => {
                self.stats.eager_fails += 1;
                CollisionOutcome::EagerFail
            }
            (SoupElement::Amplifier(id), SoupElement::Molecule(candidate)) => {
                let id = *id;
                let spec = Arc::clone(&self.amplifiers[id.0 as usize]);
                match evaluate_candidate(&spec, candidate, self.limits) {
                    AmplifierResult::Pass(product) => {
                        self.stats.amplified += 1;
                        let copies = (spec.amplification_factor as usize).min(n);
                        let slots = index::sample(&mut self.rng, n, copies);
                        let removed = slots
                            .iter()
                            .map(|slot| self.overwrite(slot, SoupElement::Molecule(product.clone())))
                            .collect();
                        CollisionOutcome::AmplifiedReaction {
                            product,
                            copies,
                            removed,
                        }
                    }
                    AmplifierResult::Fail(filter) => {
                        match filter {
                            Some(_) => self.stats.filtered += 1,
                            None => self.stats.test_failures += 1,
                        }
                        let inserted = SoupElement::Amplifier(id);
                        let removed = self.insert_one(inserted.clone());
                        CollisionOutcome::Reaction { inserted, removed }
                    }
                    AmplifierResult::Inert(limit) => self.failed(limit),
                }
            }
            (SoupElement::Molecule(f), SoupElement::Molecule(x)) => {
                match apply_and_reduce(f, x, self.limits) {
                    ReductionOutcome::NormalForm { expr, .. } => {
                        self.stats.reactions += 1;
                        let inserted = SoupElement::Molecule(expr);
                        let removed = self.insert_one(inserted.clone());
                        CollisionOutcome::Reaction { inserted, removed }
                    }
                    ReductionOutcome::StepLimitExceeded => self.failed(LimitKind::Steps),
                    ReductionOutcome::SizeLimitExceeded => self.failed(LimitKind::Vertices),
                }
            }
        }
    }

    fn failed(&mut self, limit: LimitKind) -> CollisionOutcome {
        match limit {
            LimitKind::Steps => self.stats.failed_steps += 1,
            LimitKind::Vertices => self.stats.failed_vertices += 1,
        }
        CollisionOutcome::FailedCollision(limit)
    }

    /// Tops every amplifier back up to its initial count, displacing uniformly
    /// chosen molecules. Surplus amplifiers are kept.
    pub fn perturb(&mut self) -> Replenishment {
        let deficits: Vec<(AmplifierId, usize)> = self
            .initial_amplifier_counts
            .iter()
            .zip(&self.amplifier_counts)
            .enumerate()
            .filter(|(_, (init, now))| init > now)
            .map(|(i, (init, now))| (AmplifierId(i as u32), init - now))
            .collect();
        let wanted: usize = deficits.iter().map(|(_, d)| d).sum();
        if wanted == 0 {
            return Replenishment::default();
        }
        let molecule_slots: Vec<usize> = self
            .elements
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_amplifier())
            .map(|(i, _)| i)
            .collect();
        let available = wanted.min(molecule_slots.len());
        let picks = index::sample(&mut self.rng, molecule_slots.len(), available);
        let mut picks = picks.iter();
        let mut added = 0;
        'outer: for (id, deficit) in deficits {
            for _ in 0..deficit {
                let Some(pick) = picks.next() else { break 'outer };
                self.overwrite(molecule_slots[pick], SoupElement::Amplifier(id));
                added += 1;
            }
        }
        let shortfall = wanted - added;
        if shortfall > 0 {
            warn!("replenishment short by {shortfall} amplifiers: not enough molecules to displace");
        }
        Replenishment { added, shortfall }
    }

    /// Runs `total_collisions` collisions. Every `measure_every` collisions the
    /// observer is called; every `perturb_every` collisions amplifiers are
    /// replenished (after the measurement at the same point).
    pub fn run<O: Observer>(&mut self, total_collisions: u64, schedules: &Schedules, observer: &mut O) -> Vec<O::Record> {
        schedules.validate().expect("valid schedules");
        let mut records = Vec::new();
        for _ in 0..total_collisions {
            self.collide();
            let t = self.collisions;
            if t.is_multiple_of(schedules.measure_every) {
                records.push(observer.observe(self));
            }
            if schedules.perturb_action == PerturbAction::ReplenishAmplifiers && t.is_multiple_of(schedules.perturb_every) {
                self.perturb();
            }
        }
        records
    }
}

fn register(registry: &mut Vec<Arc<AmplifierSpec>>, spec: &AmplifierSpec) -> AmplifierId {
    let index = match registry.iter().position(|s| **s == *spec) {
        Some(i) => i,
        None => {
            registry.push(Arc::new(spec.clone()));
            registry.len() - 1
        }
    };
    AmplifierId(index as u32)
}
