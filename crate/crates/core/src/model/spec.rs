use std::fmt;

use crate::error::{Error, Result};

use super::structure::{product, Role, TreeStructure, Variable};

/// A validated model structure plus its canonical spec string, when it has
/// one.
///
/// Two spec-string families are recognised:
///
/// * `k:c1,...,cn` – latent class model, hidden root `X` with observed leaves
///   `O1..On`.
/// * `h1,h2,h3:o1,o2,o3,o4,o5` – the built-in five-leaf HLC topology: `H1` is
///   the root with children `H2`, `H3` and `O5`; `H2` has leaves `O1`, `O2`
///   and `H3` has leaves `O3`, `O4`.
///
/// Anything else is described by a structure file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    structure: TreeStructure,
    label: Option<String>,
}

impl ModelSpec {
    pub fn from_structure(structure: TreeStructure) -> Self {
        let label = canonical_label(&structure);
        ModelSpec { structure, label }
    }

    /// Latent class model `hidden:observed[0],...`.
    pub fn latent_class(hidden: usize, observed: &[usize]) -> Result<Self> {
        let mut vars = vec![Variable::hidden("X", hidden)];
        vars.extend(
            observed
                .iter()
                .enumerate()
                .map(|(i, &c)| Variable::observed(format!("O{}", i + 1), c)),
        );
        let edges: Vec<(usize, usize)> = (1..vars.len()).map(|i| (0, i)).collect();
        let structure = TreeStructure::from_indices(vars, 0, &edges)?;
        Ok(Self::from_structure(structure))
    }

    /// The built-in three-hidden, five-leaf HLC topology.
    pub fn five_leaf_hlc(hidden: [usize; 3], observed: [usize; 5]) -> Result<Self> {
        Ok(Self::from_structure(five_leaf_structure(hidden, observed)?))
    }

    /// Parse a spec string or a structure file body.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(Error::Parse("empty model description".into()));
        }
        let is_file = trimmed.lines().count() > 1
            || trimmed.starts_with('#')
            || trimmed
                .split_whitespace()
                .next()
                .is_some_and(|w| matches!(w, "var" | "edge" | "root"));
        if is_file {
            parse_structure_file(trimmed).map(Self::from_structure)
        } else {
            parse_spec_string(trimmed)
        }
    }

    pub fn structure(&self) -> &TreeStructure {
        &self.structure
    }

    pub fn into_structure(self) -> TreeStructure {
        self.structure
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Spec string if there is one, otherwise the structure file.
    pub fn render(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => self.to_structure_file(),
        }
    }

    /// Short single-line description: the label or a compact edge list.
    pub fn describe(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let s = &self.structure;
        let vars: Vec<String> = s
            .variables()
            .iter()
            .map(|v| format!("{}{}{}", v.name, if v.is_hidden() { "*" } else { "" }, v.cardinality))
            .collect();
        let edges: Vec<String> = s
            .edges()
            .iter()
            .map(|&(p, c)| format!("{}>{}", s.name(p), s.name(c)))
            .collect();
        format!("[{}|{}]", vars.join(","), edges.join(","))
    }

    pub fn to_structure_file(&self) -> String {
        let s = &self.structure;
        let mut out = String::new();
        for v in s.variables() {
            out.push_str(&format!("var {} {} {}\n", v.name, v.cardinality, v.role));
        }
        out.push_str(&format!("root {}\n", s.name(s.root())));
        for (p, c) in s.edges() {
            out.push_str(&format!("edge {} {}\n", s.name(p), s.name(c)));
        }
        out
    }

    pub fn is_latent_class(&self) -> bool {
        self.structure.is_latent_class()
    }

    /// ds = Σ_X (|X| − 1) · |Pa(X)|.
    pub fn standard_dimension(&self) -> usize {
        let s = &self.structure;
        (0..s.len())
            .map(|i| (s.card(i) - 1) * s.parent_configs(i))
            .sum()
    }

    /// dc = Π_{observed} |O| − 1.
    pub fn complete_dimension(&self) -> usize {
        let space = self.structure.observed_space();
        usize::try_from(space - 1).unwrap_or(usize::MAX)
    }

    /// Hidden cardinalities in declaration order.
    pub fn hidden_cards(&self) -> Vec<usize> {
        let s = &self.structure;
        s.hidden().iter().map(|&h| s.card(h)).collect()
    }

    /// Observed cardinalities in declaration order.
    pub fn observed_cards(&self) -> Vec<usize> {
        let s = &self.structure;
        s.observed().iter().map(|&o| s.card(o)).collect()
    }

    /// The local latent class model of every hidden node: the node itself
    /// over its neighbours (parent first), each treated as observed.
    pub fn local_lc_models(&self) -> Vec<(usize, ModelSpec)> {
        let s = &self.structure;
        s.hidden()
            .iter()
            .map(|&h| {
                let ne = s.neighbours(h);
                let mut vars = vec![Variable::hidden(s.name(h), s.card(h))];
                vars.extend(
                    ne.iter()
                        .map(|&y| Variable::observed(s.name(y), s.card(y))),
                );
                let edges: Vec<(usize, usize)> = (1..vars.len()).map(|i| (0, i)).collect();
                let local = TreeStructure::from_indices(vars, 0, &edges)
                    .expect("neighbourhood of a valid hidden node forms a valid star");
                (h, ModelSpec::from_structure(local))
            })
            .collect()
    }

    /// Same topology with the hidden cardinalities replaced (declaration order).
    pub fn with_hidden_cards(&self, cards: &[usize]) -> Result<Self> {
        let s = &self.structure;
        if cards.len() != s.hidden().len() {
            return Err(Error::CardinalityMismatch(format!(
                "expected {} hidden cardinalities, got {}",
                s.hidden().len(),
                cards.len()
            )));
        }
        let changes: Vec<(usize, usize)> =
            s.hidden().iter().copied().zip(cards.iter().copied()).collect();
        Ok(Self::from_structure(s.with_cardinalities(&changes)?))
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

fn five_leaf_structure(hidden: [usize; 3], observed: [usize; 5]) -> Result<TreeStructure> {
    let mut vars: Vec<Variable> = hidden
        .iter()
        .enumerate()
        .map(|(i, &c)| Variable::hidden(format!("H{}", i + 1), c))
        .collect();
    vars.extend(
        observed
            .iter()
            .enumerate()
            .map(|(i, &c)| Variable::observed(format!("O{}", i + 1), c)),
    );
    // H1 -> H2, H3, O5; H2 -> O1, O2; H3 -> O3, O4
    let edges = [(0, 1), (0, 2), (0, 7), (1, 3), (1, 4), (2, 5), (2, 6)];
    TreeStructure::from_indices(vars, 0, &edges)
}

fn canonical_label(s: &TreeStructure) -> Option<String> {
    let join = |v: Vec<usize>| {
        v.iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",")
    };
    let hidden: Vec<usize> = s.hidden().iter().map(|&h| s.card(h)).collect();
    let observed: Vec<usize> = s.observed().iter().map(|&o| s.card(o)).collect();
    if s.is_latent_class() {
        return Some(format!("{}:{}", hidden[0], join(observed)));
    }
    if hidden.len() == 3 && observed.len() == 5 {
        let h: [usize; 3] = hidden.clone().try_into().ok()?;
        let o: [usize; 5] = observed.clone().try_into().ok()?;
        let canon = five_leaf_structure(h, o).ok()?;
        let same_shape = canon.root() == s.root()
            && canon.edges() == s.edges()
            && canon
                .variables()
                .iter()
                .zip(s.variables())
                .all(|(a, b)| a.role == b.role);
        if same_shape {
            return Some(format!("{}:{}", join(hidden), join(observed)));
        }
    }
    None
}

fn parse_cards(list: &str, what: &str) -> Result<Vec<usize>> {
    list.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad {what} cardinality '{t}'")))
        })
        .collect()
}

fn parse_spec_string(text: &str) -> Result<ModelSpec> {
    let (left, right) = text
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("expected 'hidden:observed', got '{text}'")))?;
    let hidden = parse_cards(left, "hidden")?;
    let observed = parse_cards(right, "observed")?;
    match (hidden.len(), observed.len()) {
        (1, _) => ModelSpec::latent_class(hidden[0], &observed),
        (3, 5) => ModelSpec::five_leaf_hlc(
            [hidden[0], hidden[1], hidden[2]],
            [observed[0], observed[1], observed[2], observed[3], observed[4]],
        ),
        (h, o) => Err(Error::Parse(format!(
            "no built-in topology with {h} hidden and {o} observed variables; use a structure file"
        ))),
    }
}

fn parse_structure_file(text: &str) -> Result<TreeStructure> {
    let mut vars = Vec::new();
    let mut edges = Vec::new();
    let mut root = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse(format!("line {}: {msg}: '{}'", lineno + 1, raw.trim()));
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["var", name, card, role] => {
                let card: usize = card.parse().map_err(|_| err("bad cardinality"))?;
                let role = match *role {
                    "hidden" => Role::Hidden,
                    "observed" => Role::Observed,
                    _ => return Err(err("role must be 'hidden' or 'observed'")),
                };
                vars.push(Variable::new(*name, card, role));
            }
            ["edge", parent, child] => edges.push((parent.to_string(), child.to_string())),
            ["root", name] => {
                if root.replace(name.to_string()).is_some() {
                    return Err(err("root declared twice"));
                }
            }
            _ => return Err(err("unrecognised line")),
        }
    }
    let root = root.ok_or_else(|| Error::Parse("missing 'root' line".into()))?;
    TreeStructure::new(vars, &root, &edges)
}

pub(crate) fn neighbour_product(s: &TreeStructure, h: usize) -> u128 {
    product(s.neighbours(h).into_iter().map(|y| s.card(y)))
}
