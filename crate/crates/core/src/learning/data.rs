use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, ObservedSpace, TreeStructure};

/// One distinct joint observed state and how often it occurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub states: Vec<usize>,
    pub count: u64,
}

/// Observed categorical data, aggregated into distinct records sorted in
/// canonical state order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    observed_names: Vec<String>,
    cards: Vec<usize>,
    records: Vec<Record>,
    total: u64,
}

impl Dataset {
    /// Aggregate raw `(states, count)` rows. Duplicate states are merged;
    /// zero counts are rejected.
    pub fn new(
        observed_names: Vec<String>,
        cards: Vec<usize>,
        rows: impl IntoIterator<Item = (Vec<usize>, u64)>,
    ) -> Result<Self> {
        if observed_names.len() != cards.len() {
            return Err(Error::DataMismatch("names and cardinalities differ in length".into()));
        }
        let mut agg: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        for (states, count) in rows {
            if states.len() != cards.len() {
                return Err(Error::DataMismatch(format!(
                    "record has {} values, expected {}",
                    states.len(),
                    cards.len()
                )));
            }
            if let Some((i, &s)) = states.iter().enumerate().find(|&(i, &s)| s >= cards[i]) {
                return Err(Error::DataMismatch(format!(
                    "state {s} of '{}' is out of range (cardinality {})",
                    observed_names[i], cards[i]
                )));
            }
            if count == 0 {
                return Err(Error::DataMismatch("record counts must be at least 1".into()));
            }
            *agg.entry(states).or_insert(0) += count;
        }
        let records: Vec<Record> = agg
            .into_iter()
            .map(|(states, count)| Record { states, count })
            .collect();
        let total = records.iter().map(|r| r.count).sum();
        Ok(Dataset {
            observed_names,
            cards,
            records,
            total,
        })
    }

    /// Empty dataset over the observed variables of `structure`.
    pub fn for_structure(
        structure: &TreeStructure,
        rows: impl IntoIterator<Item = (Vec<usize>, u64)>,
    ) -> Result<Self> {
        let names = structure
            .observed()
            .iter()
            .map(|&o| structure.name(o).to_string())
            .collect();
        let cards = structure.observed().iter().map(|&o| structure.card(o)).collect();
        Self::new(names, cards, rows)
    }

    pub fn observed_names(&self) -> &[String] {
        &self.observed_names
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Check that the data's observed variables are the model's, in order.
    pub fn check_model(&self, model: &ModelSpec) -> Result<()> {
        let s = model.structure();
        let names: Vec<&str> = s.observed().iter().map(|&o| s.name(o)).collect();
        let cards: Vec<usize> = s.observed().iter().map(|&o| s.card(o)).collect();
        if names != self.observed_names.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::DataMismatch(format!(
                "data columns {:?} do not match observed variables {:?}",
                self.observed_names, names
            )));
        }
        if cards != self.cards {
            return Err(Error::DataMismatch(format!(
                "data cardinalities {:?} do not match model {:?}",
                self.cards, cards
            )));
        }
        Ok(())
    }

    /// Relative frequencies over the full joint observed space.
    pub fn empirical_distribution(&self) -> Result<Vec<f64>> {
        let space = ObservedSpace::from_cards(self.cards.clone());
        let mut out = vec![0.0; space.size()];
        let n = self.total as f64;
        for r in &self.records {
            out[space.encode(&r.states)] = r.count as f64 / n;
        }
        Ok(out)
    }

    /// Read CSV with a header of observed names (any order) and an optional
    /// `count` column. Columns are matched to the model's observed variables
    /// by name.
    pub fn read_csv<R: Read>(reader: R, model: &ModelSpec) -> Result<Self> {
        let s = model.structure();
        let names: Vec<String> = s.observed().iter().map(|&o| s.name(o).to_string()).collect();
        let cards: Vec<usize> = s.observed().iter().map(|&o| s.card(o)).collect();

        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        let mut positions = Vec::with_capacity(names.len());
        for name in &names {
            let pos = header.iter().position(|h| h == name).ok_or_else(|| {
                Error::DataMismatch(format!("column '{name}' is missing from the data"))
            })?;
            positions.push(pos);
        }
        let count_pos = header.iter().position(|h| h == "count");
        if let Some(extra) = header
            .iter()
            .find(|h| *h != "count" && !names.iter().any(|n| n == h))
        {
            return Err(Error::DataMismatch(format!(
                "column '{extra}' is not an observed variable of the model"
            )));
        }

        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |pos: usize| -> Result<&str> {
                rec.get(pos).ok_or_else(|| {
                    Error::DataMismatch(format!("row {} is too short", line + 2))
                })
            };
            let states = positions
                .iter()
                .map(|&p| {
                    let v = field(p)?;
                    v.parse::<usize>().map_err(|_| {
                        Error::DataMismatch(format!("row {}: bad state index '{v}'", line + 2))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let count = match count_pos {
                Some(p) => {
                    let v = field(p)?;
                    v.parse::<u64>().map_err(|_| {
                        Error::DataMismatch(format!("row {}: bad count '{v}'", line + 2))
                    })?
                }
                None => 1,
            };
            rows.push((states, count));
        }
        Self::new(names, cards, rows)
    }

    pub fn read_csv_path(path: &Path, model: &ModelSpec) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, model)
    }

    /// Write one row per distinct record with a `count` column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.observed_names.iter().map(String::as_str).collect();
        header.push("count");
        w.write_record(&header)?;
        for r in &self.records {
            let mut row: Vec<String> = r.states.iter().map(usize::to_string).collect();
            row.push(r.count.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Expected sufficient statistics `N(x, pa)` per variable, laid out like the
/// conditional tables (`column * card + state`).
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedDataset {
    pub tables: Vec<Vec<f64>>,
}

impl CompletedDataset {
    pub fn zeros(structure: &TreeStructure) -> Self {
        CompletedDataset {
            tables: (0..structure.len())
                .map(|i| vec![0.0; structure.card(i) * structure.parent_configs(i)])
                .collect(),
        }
    }

    /// Total count held by the table of variable `i`; equal to `|D|` for
    /// every variable.
    pub fn total(&self, i: usize) -> f64 {
        self.tables[i].iter().sum()
    }
}
