use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Hidden,
    Observed,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Hidden => f.write_str("hidden"),
            Role::Observed => f.write_str("observed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub cardinality: usize,
    pub role: Role,
}

impl Variable {
    pub fn new(name: impl Into<String>, cardinality: usize, role: Role) -> Self {
        Variable {
            name: name.into(),
            cardinality,
            role,
        }
    }

    pub fn hidden(name: impl Into<String>, cardinality: usize) -> Self {
        Self::new(name, cardinality, Role::Hidden)
    }

    pub fn observed(name: impl Into<String>, cardinality: usize) -> Self {
        Self::new(name, cardinality, Role::Observed)
    }

    pub fn is_hidden(&self) -> bool {
        self.role == Role::Hidden
    }
}

/// A rooted directed tree over categorical variables.
///
/// When the model has hidden variables the root must be hidden, every
/// observed variable must be a leaf and every hidden variable must have at
/// least two neighbours. Trees without hidden variables are accepted as
/// fully observed Bayesian networks and only need to be valid trees.
///
/// Variables are addressed by their position in the declaration order.
/// That order also fixes the joint observed state order (row-major, first
/// observed variable slowest) used by every distribution and matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeStructure {
    variables: Vec<Variable>,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    preorder: Vec<usize>,
    observed: Vec<usize>,
    hidden: Vec<usize>,
}

impl TreeStructure {
    /// Build from named edges `(parent, child)`.
    pub fn new(variables: Vec<Variable>, root: &str, edges: &[(String, String)]) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            if index.insert(v.name.clone(), i).is_some() {
                return Err(Error::InvalidStructure(format!(
                    "duplicate variable name '{}'",
                    v.name
                )));
            }
        }
        let lookup = |name: &str| {
            index.get(name).copied().ok_or_else(|| {
                Error::InvalidStructure(format!("unknown variable '{name}'"))
            })
        };
        let root = lookup(root)?;
        let edges = edges
            .iter()
            .map(|(p, c)| Ok((lookup(p)?, lookup(c)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(variables, root, &edges)
    }

    /// Build from index edges `(parent, child)`. Children keep the order in
    /// which their edges are listed.
    pub fn from_indices(
        variables: Vec<Variable>,
        root: usize,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let n = variables.len();
        if n == 0 {
            return Err(Error::InvalidStructure("no variables".into()));
        }
        if root >= n {
            return Err(Error::InvalidStructure(format!("root index {root} out of range")));
        }
        for v in &variables {
            if v.cardinality < 2 {
                return Err(Error::InvalidStructure(format!(
                    "variable '{}' has cardinality {}; at least 2 states are required",
                    v.name, v.cardinality
                )));
            }
            if v.name.is_empty() || v.name.chars().any(char::is_whitespace) {
                return Err(Error::InvalidStructure(format!(
                    "invalid variable name '{}'",
                    v.name
                )));
            }
        }
        if edges.len() + 1 != n {
            return Err(Error::InvalidStructure(format!(
                "a tree over {n} variables needs {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }

        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in edges {
            if p >= n || c >= n {
                return Err(Error::InvalidStructure("edge index out of range".into()));
            }
            if p == c {
                return Err(Error::InvalidStructure(format!(
                    "self loop on '{}'",
                    variables[p].name
                )));
            }
            if c == root {
                return Err(Error::InvalidStructure(format!(
                    "root '{}' cannot have a parent",
                    variables[c].name
                )));
            }
            if parent[c].is_some() {
                return Err(Error::InvalidStructure(format!(
                    "'{}' has more than one parent",
                    variables[c].name
                )));
            }
            parent[c] = Some(p);
            children[p].push(c);
        }

        let mut preorder = Vec::with_capacity(n);
        let mut stack = vec![root];
        let mut seen = vec![false; n];
        while let Some(v) = stack.pop() {
            if seen[v] {
                return Err(Error::InvalidStructure("edges contain a cycle".into()));
            }
            seen[v] = true;
            preorder.push(v);
            stack.extend(children[v].iter().rev());
        }
        if preorder.len() != n {
            return Err(Error::InvalidStructure(
                "edges do not connect every variable to the root".into(),
            ));
        }

        let observed: Vec<usize> = (0..n).filter(|&i| !variables[i].is_hidden()).collect();
        let hidden: Vec<usize> = (0..n).filter(|&i| variables[i].is_hidden()).collect();
        if observed.is_empty() {
            return Err(Error::InvalidStructure("no observed variables".into()));
        }
        if !hidden.is_empty() {
            if !variables[root].is_hidden() {
                return Err(Error::InvalidStructure(format!(
                    "root '{}' must be hidden",
                    variables[root].name
                )));
            }
            for &o in &observed {
                if !children[o].is_empty() {
                    return Err(Error::InvalidStructure(format!(
                        "observed variable '{}' is not a leaf",
                        variables[o].name
                    )));
                }
            }
            for &h in &hidden {
                let degree = children[h].len() + usize::from(parent[h].is_some());
                if degree < 2 {
                    return Err(Error::InvalidStructure(format!(
                        "hidden variable '{}' has {degree} neighbour(s); at least 2 are required",
                        variables[h].name
                    )));
                }
            }
        }

        Ok(TreeStructure {
            variables,
            root,
            parent,
            children,
            preorder,
            observed,
            hidden,
        })
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, i: usize) -> &Variable {
        &self.variables[i]
    }

    pub fn card(&self, i: usize) -> usize {
        self.variables[i].cardinality
    }

    pub fn name(&self, i: usize) -> &str {
        &self.variables[i].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Parent first (if any), then children in declaration order.
    pub fn neighbours(&self, i: usize) -> Vec<usize> {
        self.parent[i]
            .into_iter()
            .chain(self.children[i].iter().copied())
            .collect()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.children[i].len() + usize::from(self.parent[i].is_some())
    }

    /// Variables in root-first depth-first order; parents precede children.
    pub fn preorder(&self) -> &[usize] {
        &self.preorder
    }

    /// Observed variables in declaration order.
    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    /// Hidden variables in declaration order.
    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    /// Number of columns of the conditional table of `i` (parent states).
    pub fn parent_configs(&self, i: usize) -> usize {
        self.parent[i].map_or(1, |p| self.card(p))
    }

    /// Edges `(parent, child)` in preorder of the child.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.preorder
            .iter()
            .filter_map(|&c| self.parent[c].map(|p| (p, c)))
            .collect()
    }

    /// Product of observed cardinalities, saturating at `u128::MAX`.
    pub fn observed_space(&self) -> u128 {
        product(self.observed.iter().map(|&i| self.card(i)))
    }

    /// Product of hidden cardinalities (1 when there are none).
    pub fn hidden_space(&self) -> u128 {
        product(self.hidden.iter().map(|&i| self.card(i)))
    }

    /// One hidden root whose children are exactly the observed variables.
    pub fn is_latent_class(&self) -> bool {
        self.hidden.len() == 1
            && self.hidden[0] == self.root
            && self.children[self.root].len() == self.observed.len()
    }

    /// Same topology with some cardinalities replaced.
    pub fn with_cardinalities(&self, changes: &[(usize, usize)]) -> Result<Self> {
        let mut variables = self.variables.clone();
        for &(i, card) in changes {
            variables[i].cardinality = card;
        }
        Self::from_indices(variables, self.root, &self.edges())
    }
}

pub(crate) fn product(cards: impl Iterator<Item = usize>) -> u128 {
    cards.fold(1u128, |acc, c| acc.saturating_mul(c as u128))
}
