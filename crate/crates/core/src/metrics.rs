//! Population tracking: motif counts per measurement, threshold and
//! time-average statistics, and the per-replicate CSV format.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amplifier::AmplifierId;
use crate::lambda::LambdaExpr;
use crate::soup::{Observer, Soup};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("duplicate motif label `{0}`")]
    DuplicateLabel(String),
    #[error("invalid motif label `{0}`")]
    InvalidLabel(String),
    #[error("reference for `{0}` is not a closed normal form")]
    NotNormal(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("no records")]
    NoRecords,
    #[error("threshold {0} outside [0, 1]")]
    BadThreshold(f64),
    #[error("malformed csv: {0}")]
    Malformed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What a label counts.
#[derive(Debug, Clone, PartialEq)]
pub enum Motif {
    /// Molecules α-equivalent to this expression.
    Expr(LambdaExpr),
    /// Copies of one registered amplifier.
    Amplifier(AmplifierId),
    /// All amplifiers whose spec belongs to this family.
    AmplifierFamily(String),
}

pub fn count_motif(soup: &Soup, motif: &Motif) -> usize {
    match motif {
        Motif::Expr(e) => soup.molecule_count(e),
        Motif::Amplifier(id) => soup.amplifier_count(*id),
        Motif::AmplifierFamily(f) => soup.family_count(f),
    }
}

const RESERVED: [&str; 2] = ["collision", "soup_size"];

#[derive(Debug, Clone, PartialEq)]
pub struct MotifSet {
    entries: Vec<(String, Motif)>,
}

impl MotifSet {
    pub fn new(entries: Vec<(String, Motif)>) -> Result<Self, MetricsError> {
        for (i, (label, motif)) in entries.iter().enumerate() {
            validate_label(label)?;
            if entries[..i].iter().any(|(l, _)| l == label) {
                return Err(MetricsError::DuplicateLabel(label.clone()));
            }
            if let Motif::Expr(e) = motif {
                if !e.is_closed() || !e.is_normal() {
                    return Err(MetricsError::NotNormal(label.clone()));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(l, _)| l.as_str())
    }

    pub fn entries(&self) -> &[(String, Motif)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn measure(&self, soup: &Soup) -> PopulationRecord {
        PopulationRecord {
            collision_index: soup.collisions(),
            counts: self
                .entries
                .iter()
                .map(|(l, m)| (l.clone(), count_motif(soup, m)))
                .collect(),
            soup_size: soup.len(),
        }
    }
}

impl Observer for MotifSet {
    type Record = PopulationRecord;

    fn observe(&mut self, soup: &Soup) -> PopulationRecord {
        self.measure(soup)
    }
}

fn validate_label(label: &str) -> Result<(), MetricsError> {
    let ok = !label.is_empty()
        && !RESERVED.contains(&label)
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | ':'));
    if ok {
        Ok(())
    } else {
        Err(MetricsError::InvalidLabel(label.to_string()))
    }
}

/// One measurement. `counts` keeps the motif set's label order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationRecord {
    pub collision_index: u64,
    pub counts: Vec<(String, usize)>,
    pub soup_size: usize,
}

impl PopulationRecord {
    pub fn count(&self, label: &str) -> Option<usize> {
        self.counts.iter().find(|(l, _)| l == label).map(|&(_, c)| c)
    }

    pub fn fraction(&self, label: &str) -> Result<f64, MetricsError> {
        let c = self
            .count(label)
            .ok_or_else(|| MetricsError::UnknownLabel(label.to_string()))?;
        Ok(c as f64 / self.soup_size as f64)
    }
}

fn fractions<'a>(
    records: &'a [PopulationRecord],
    label: &'a str,
) -> Result<impl Iterator<Item = f64> + 'a, MetricsError> {
    let first = records.first().ok_or(MetricsError::NoRecords)?;
    first.fraction(label)?;
    Ok(records.iter().map(move |r| r.fraction(label).unwrap_or(0.0)))
}

/// Whether the final record has at least `threshold` of the soup in `label`.
pub fn threshold_fraction(
    records: &[PopulationRecord],
    label: &str,
    threshold: f64,
) -> Result<bool, MetricsError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(MetricsError::BadThreshold(threshold));
    }
    let last = records.last().ok_or(MetricsError::NoRecords)?;
    Ok(last.fraction(label)? >= threshold)
}

/// Mean over records of `label`'s share of the soup.
pub fn time_averaged_population(records: &[PopulationRecord], label: &str) -> Result<f64, MetricsError> {
    let sum: f64 = fractions(records, label)?.sum();
    Ok(sum / records.len() as f64)
}

/// Largest share of the soup `label` held at any measurement.
pub fn peak_fraction(records: &[PopulationRecord], label: &str) -> Result<f64, MetricsError> {
    Ok(fractions(records, label)?.fold(0.0, f64::max))
}

/// Writes `collision,<labels>,soup_size` followed by one row per record.
/// All records must share the same labels in the same order.
pub fn write_csv<W: Write>(records: &[PopulationRecord], labels: &[&str], out: W) -> Result<(), MetricsError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(out);
    let mut header = vec!["collision"];
    header.extend_from_slice(labels);
    header.push("soup_size");
    w.write_record(&header)?;
    for r in records {
        if r.counts.len() != labels.len() || r.counts.iter().zip(labels).any(|((l, _), e)| l != e) {
            return Err(MetricsError::Malformed(format!(
                "record at collision {} does not match the header labels",
                r.collision_index
            )));
        }
        let mut row = Vec::with_capacity(labels.len() + 2);
        row.push(r.collision_index.to_string());
        row.extend(r.counts.iter().map(|(_, c)| c.to_string()));
        row.push(r.soup_size.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses the output of [`write_csv`], returning labels and records.
pub fn read_csv<R: Read>(input: R) -> Result<(Vec<String>, Vec<PopulationRecord>), MetricsError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 || header[0] != "collision" || header[header.len() - 1] != "soup_size" {
        return Err(MetricsError::Malformed("header must be collision,<labels>,soup_size".into()));
    }
    let labels = header[1..header.len() - 1].to_vec();
    let num = |s: &str, line: u64| {
        s.parse::<u64>()
            .map_err(|_| MetricsError::Malformed(format!("line {line}: `{s}` is not a count")))
    };
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != header.len() {
            return Err(MetricsError::Malformed(format!("line {line}: wrong field count")));
        }
        let counts = labels
            .iter()
            .zip(row.iter().skip(1))
            .map(|(l, v)| Ok((l.clone(), num(v, line)? as usize)))
            .collect::<Result<Vec<_>, MetricsError>>()?;
        records.push(PopulationRecord {
            collision_index: num(&row[0], line)?,
            counts,
            soup_size: num(&row[header.len() - 1], line)? as usize,
        });
    }
    Ok((labels, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplifier::{make_unit_test, AmplifierSpec, FilterPolicy};
    use crate::lambda::{parse_closed, ReductionLimits};
    use crate::soup::{Ingredient, PopulationSpec};
    use crate::stdlib::Combinator;
    use proptest::prelude::*;

    fn rec(collision_index: u64, scc: usize, n: usize) -> PopulationRecord {
        PopulationRecord {
            collision_index,
            counts: vec![("scc".into(), scc)],
            soup_size: n,
        }
    }

    #[test]
    fn counts_alpha_equivalent_molecules() {
        let renamed = parse_closed(r"\m.\f.\x.f (m f x)").unwrap();
        let spec = PopulationSpec::from_counts(vec![
            (Ingredient::Molecule(Combinator::Scc.expr()), 1),
            (Ingredient::Molecule(renamed), 1),
            (Ingredient::Molecule(Combinator::K.expr()), 1),
        ])
        .unwrap();
        let soup = Soup::new(&spec, ReductionLimits::default(), 0).unwrap();
        assert_eq!(count_motif(&soup, &Motif::Expr(Combinator::Scc.expr())), 2);
        assert_eq!(count_motif(&soup, &Motif::Expr(Combinator::Add.expr())), 0);
    }

    #[test]
    fn counts_amplifier_family() {
        let amps = (0..=9)
            .map(|n| AmplifierSpec::new("successor", make_unit_test(&[n], n + 1).unwrap(), 100, FilterPolicy::ALL).unwrap())
            .collect();
        let spec = PopulationSpec::from_counts(vec![
            (Ingredient::Molecule(Combinator::S.expr()), 5000),
            (Ingredient::Amplifiers(amps), 1000),
        ])
        .unwrap();
        let soup = Soup::new(&spec, ReductionLimits::default(), 0).unwrap();
        let set = MotifSet::new(vec![
            ("amps".into(), Motif::AmplifierFamily("successor".into())),
            ("first".into(), Motif::Amplifier(AmplifierId(0))),
            ("s".into(), Motif::Expr(Combinator::S.expr())),
        ])
        .unwrap();
        let r = set.measure(&soup);
        assert_eq!(r.count("amps"), Some(1000));
        assert_eq!(r.count("first"), Some(100));
        assert_eq!(r.count("s"), Some(5000));
        assert_eq!(r.soup_size, 6000);
    }

    #[test]
    fn rejects_bad_labels() {
        let m = || Motif::Expr(Combinator::I.expr());
        assert!(matches!(
            MotifSet::new(vec![("a".into(), m()), ("a".into(), m())]),
            Err(MetricsError::DuplicateLabel(_))
        ));
        for bad in ["", "a,b", "soup_size", "collision", "x y"] {
            assert!(matches!(
                MotifSet::new(vec![(bad.into(), m())]),
                Err(MetricsError::InvalidLabel(_))
            ));
        }
        let redex = LambdaExpr::app(Combinator::I.expr(), Combinator::I.expr());
        assert!(matches!(
            MotifSet::new(vec![("r".into(), Motif::Expr(redex))]),
            Err(MetricsError::NotNormal(_))
        ));
    }

    #[test]
    fn threshold_examples() {
        assert!(threshold_fraction(&[rec(0, 0, 5000), rec(1, 1200, 5000)], "scc", 0.20).unwrap());
        assert!(!threshold_fraction(&[rec(0, 5000, 5000), rec(1, 999, 5000)], "scc", 0.20).unwrap());
        assert!(threshold_fraction(&[rec(0, 0, 5000)], "scc", 0.0).unwrap());
        assert!(matches!(threshold_fraction(&[], "scc", 0.2), Err(MetricsError::NoRecords)));
        assert!(matches!(
            threshold_fraction(&[rec(0, 0, 1)], "add", 0.2),
            Err(MetricsError::UnknownLabel(_))
        ));
        assert!(matches!(
            threshold_fraction(&[rec(0, 0, 1)], "scc", 1.5),
            Err(MetricsError::BadThreshold(_))
        ));
    }

    #[test]
    fn time_average_examples() {
        let constant: Vec<_> = (0..10).map(|i| rec(i, 500, 5000)).collect();
        assert!((time_averaged_population(&constant, "scc").unwrap() - 0.1).abs() < 1e-12);
        let two = [rec(0, 0, 5000), rec(1, 1000, 5000)];
        assert!((time_averaged_population(&two, "scc").unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(time_averaged_population(&[rec(0, 0, 10)], "scc").unwrap(), 0.0);
        assert_eq!(peak_fraction(&two, "scc").unwrap(), 0.2);
        assert!(matches!(time_averaged_population(&two, "add"), Err(MetricsError::UnknownLabel(_))));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&[rec(0, 3, 10), rec(1000, 4, 10)], &["scc"], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "collision,scc,soup_size\n0,3,10\n1000,4,10\n");
    }

    #[test]
    fn csv_rejects_mismatch_and_garbage() {
        let mut buf = Vec::new();
        assert!(write_csv(&[rec(0, 3, 10)], &["add"], &mut buf).is_err());
        assert!(read_csv("foo,bar\n1,2\n".as_bytes()).is_err());
        assert!(read_csv("collision,scc,soup_size\n1,x,3\n".as_bytes()).is_err());
    }

    fn arb_records() -> impl Strategy<Value = (Vec<String>, Vec<PopulationRecord>)> {
        (1usize..4).prop_flat_map(|k| {
            let labels: Vec<String> = (0..k).map(|i| format!("m{i}")).collect();
            let rows = prop::collection::vec((any::<u64>(), prop::collection::vec(0usize..100_000, k), 1usize..100_000), 0..20);
            (Just(labels), rows)
        })
        .prop_map(|(labels, rows)| {
            let records = rows
                .into_iter()
                .map(|(c, counts, n)| PopulationRecord {
                    collision_index: c,
                    counts: labels.iter().cloned().zip(counts).collect(),
                    soup_size: n,
                })
                .collect();
            (labels, records)
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip((labels, records) in arb_records()) {
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            let mut buf = Vec::new();
            write_csv(&records, &refs, &mut buf).unwrap();
            let (l2, r2) = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(l2, labels);
            prop_assert_eq!(r2, records);
        }
    }
}
