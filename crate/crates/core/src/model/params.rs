use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{sample_simplex, sample_simplex_floored};

use super::structure::TreeStructure;

const COLUMN_TOLERANCE: f64 = 1e-12;

/// Conditional probability table `p(X = state | Pa(X) = column)`.
///
/// Stored column-major: entry `(state, column)` lives at
/// `column * card + state`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    card: usize,
    columns: usize,
    values: Vec<f64>,
}

impl Cpt {
    pub fn new(card: usize, columns: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), card * columns);
        Cpt {
            card,
            columns,
            values,
        }
    }

    pub fn uniform(card: usize, columns: usize) -> Self {
        Cpt::new(card, columns, vec![1.0 / card as f64; card * columns])
    }

    pub fn card(&self) -> usize {
        self.card
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    #[inline]
    pub fn get(&self, state: usize, column: usize) -> f64 {
        self.values[column * self.card + state]
    }

    pub fn column(&self, column: usize) -> &[f64] {
        &self.values[column * self.card..(column + 1) * self.card]
    }

    pub fn column_mut(&mut self, column: usize) -> &mut [f64] {
        &mut self.values[column * self.card..(column + 1) * self.card]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Conditional probability tables for every variable of a tree, indexed by
/// variable position.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    tables: Vec<Cpt>,
}

impl Parameters {
    /// Validate tables against a structure: shapes, non-negativity and
    /// column sums.
    pub fn from_cpts(structure: &TreeStructure, tables: Vec<Cpt>) -> Result<Self> {
        if tables.len() != structure.len() {
            return Err(Error::InvalidParameters(format!(
                "expected {} tables, got {}",
                structure.len(),
                tables.len()
            )));
        }
        for (i, t) in tables.iter().enumerate() {
            let name = structure.name(i);
            if t.card != structure.card(i) || t.columns != structure.parent_configs(i) {
                return Err(Error::InvalidParameters(format!(
                    "table of '{name}' is {}x{}, expected {}x{}",
                    t.card,
                    t.columns,
                    structure.card(i),
                    structure.parent_configs(i)
                )));
            }
            for j in 0..t.columns {
                let col = t.column(j);
                if col.iter().any(|&v| !v.is_finite() || v < 0.0) {
                    return Err(Error::InvalidParameters(format!(
                        "table of '{name}' column {j} has a negative or non-finite entry"
                    )));
                }
                let sum: f64 = col.iter().sum();
                if (sum - 1.0).abs() > COLUMN_TOLERANCE {
                    return Err(Error::InvalidParameters(format!(
                        "table of '{name}' column {j} sums to {sum}"
                    )));
                }
            }
        }
        Ok(Parameters { tables })
    }

    /// Build from nested `tables[variable][column][state]`.
    pub fn new(structure: &TreeStructure, tables: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let cpts = tables
            .into_iter()
            .enumerate()
            .map(|(i, cols)| {
                let card = cols.first().map_or(0, Vec::len);
                if cols.iter().any(|c| c.len() != card) || i >= structure.len() {
                    return Err(Error::InvalidParameters(format!(
                        "ragged table for variable {i}"
                    )));
                }
                let n = cols.len();
                Ok(Cpt::new(card, n, cols.into_iter().flatten().collect()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_cpts(structure, cpts)
    }

    pub fn uniform(structure: &TreeStructure) -> Self {
        let tables = (0..structure.len())
            .map(|i| Cpt::uniform(structure.card(i), structure.parent_configs(i)))
            .collect();
        Parameters { tables }
    }

    /// Every column drawn from the flat Dirichlet distribution, variables in
    /// declaration order, columns in index order.
    pub fn random<R: Rng + ?Sized>(structure: &TreeStructure, rng: &mut R) -> Self {
        Self::random_with(structure, |k| sample_simplex(rng, k))
    }

    /// Like [`Parameters::random`] with every entry raised to `floor` and the
    /// column renormalized, so all entries are strictly positive.
    pub fn random_positive<R: Rng + ?Sized>(structure: &TreeStructure, rng: &mut R, floor: f64) -> Self {
        Self::random_with(structure, |k| sample_simplex_floored(rng, k, floor))
    }

    fn random_with(structure: &TreeStructure, mut draw: impl FnMut(usize) -> Vec<f64>) -> Self {
        let tables = (0..structure.len())
            .map(|i| {
                let card = structure.card(i);
                let cols = structure.parent_configs(i);
                let values = (0..cols).flat_map(|_| draw(card)).collect();
                Cpt::new(card, cols, values)
            })
            .collect();
        Parameters { tables }
    }

    /// Construct without validation; callers guarantee normalized columns.
    pub(crate) fn from_cpts_unchecked(tables: Vec<Cpt>) -> Self {
        Parameters { tables }
    }

    pub fn table(&self, i: usize) -> &Cpt {
        &self.tables[i]
    }

    pub fn table_mut(&mut self, i: usize) -> &mut Cpt {
        &mut self.tables[i]
    }

    pub fn tables(&self) -> &[Cpt] {
        &self.tables
    }

    /// Whether the tables have the shapes `structure` requires.
    pub fn matches(&self, structure: &TreeStructure) -> bool {
        self.tables.len() == structure.len()
            && self.tables.iter().enumerate().all(|(i, t)| {
                t.card == structure.card(i) && t.columns == structure.parent_configs(i)
            })
    }

    /// First entry that is not strictly positive, as
    /// `(variable, state, column, value)`.
    pub fn first_non_positive(&self) -> Option<(usize, usize, usize, f64)> {
        self.tables.iter().enumerate().find_map(|(i, t)| {
            t.values
                .iter()
                .position(|&v| v.is_nan() || v <= 0.0)
                .map(|pos| (i, pos % t.card, pos / t.card, t.values[pos]))
        })
    }

    /// Rebuild parameters from a document whose tables may be listed in any
    /// order; every variable must appear exactly once.
    pub fn from_document(structure: &TreeStructure, doc: &ParametersDocument) -> Result<Self> {
        let mut tables: Vec<Option<Vec<Vec<f64>>>> = vec![None; structure.len()];
        for t in &doc.tables {
            let i = structure.index_of(&t.variable).ok_or_else(|| {
                Error::InvalidParameters(format!("unknown variable '{}'", t.variable))
            })?;
            if tables[i].replace(t.columns.clone()).is_some() {
                return Err(Error::InvalidParameters(format!("'{}' listed twice", t.variable)));
            }
        }
        let tables = tables
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                t.ok_or_else(|| {
                    Error::InvalidParameters(format!("no table for '{}'", structure.name(i)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(structure, tables)
    }

    pub fn to_document(&self, structure: &TreeStructure) -> ParametersDocument {
        ParametersDocument {
            tables: self
                .tables
                .iter()
                .enumerate()
                .map(|(i, t)| NamedTable {
                    variable: structure.name(i).to_string(),
                    columns: (0..t.columns).map(|j| t.column(j).to_vec()).collect(),
                })
                .collect(),
        }
    }
}

/// Serializable form of [`Parameters`]: one table per variable, one inner
/// list per parent state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParametersDocument {
    pub tables: Vec<NamedTable>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedTable {
    pub variable: String,
    pub columns: Vec<Vec<f64>>,
}

/// A free parameter `p(X = state | Pa = column)`; the last state of every
/// column is the dependent one and has no free parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeParameter {
    pub variable: usize,
    pub column: usize,
    pub state: usize,
}

/// Canonical order of free parameters: variables in declaration order,
/// then parent states, then states `0..card-1`. Its length is the standard
/// dimension.
pub fn free_parameters(structure: &TreeStructure) -> Vec<FreeParameter> {
    let mut out = Vec::new();
    for variable in 0..structure.len() {
        for column in 0..structure.parent_configs(variable) {
            for state in 0..structure.card(variable) - 1 {
                out.push(FreeParameter {
                    variable,
                    column,
                    state,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;
    use crate::rng::rng_from_seed;

    #[test]
    fn document_round_trip() {
        let m = ModelSpec::parse("3:2,4").unwrap();
        let s = m.structure();
        let p = Parameters::random(s, &mut rng_from_seed(1));
        let mut doc = p.to_document(s);
        doc.tables.reverse();
        assert_eq!(Parameters::from_document(s, &doc).unwrap(), p);
        doc.tables.pop();
        assert!(Parameters::from_document(s, &doc).is_err());
    }

    #[test]
    fn validation_catches_bad_columns() {
        let m = ModelSpec::parse("2:2,2").unwrap();
        let s = m.structure();
        let good = vec![
            vec![vec![0.5, 0.5]],
            vec![vec![0.1, 0.9], vec![0.2, 0.8]],
            vec![vec![0.3, 0.7], vec![0.4, 0.6]],
        ];
        assert!(Parameters::new(s, good.clone()).is_ok());
        let mut bad = good.clone();
        bad[1][0] = vec![0.2, 0.9];
        assert!(Parameters::new(s, bad).is_err());
        let mut neg = good.clone();
        neg[2][1] = vec![-0.1, 1.1];
        assert!(Parameters::new(s, neg).is_err());
        let mut shape = good;
        shape[0] = vec![vec![0.2, 0.3, 0.5]];
        assert!(Parameters::new(s, shape).is_err());
    }

    #[test]
    fn free_parameter_count_is_standard_dimension() {
        for spec in ["2:2,2", "3:4,5", "5,3,3:2,2,2,2,2"] {
            let m = ModelSpec::parse(spec).unwrap();
            assert_eq!(free_parameters(m.structure()).len(), m.standard_dimension());
        }
    }

    #[test]
    fn random_parameters_validate() {
        let m = ModelSpec::parse("5,3,3:2,2,2,2,2").unwrap();
        let mut rng = rng_from_seed(1);
        let p = Parameters::random(m.structure(), &mut rng);
        let tables: Vec<Cpt> = p.tables().to_vec();
        assert!(Parameters::from_cpts(m.structure(), tables).is_ok());
        let q = Parameters::random_positive(m.structure(), &mut rng, 1e-6);
        assert!(q.first_non_positive().is_none());
    }
}
