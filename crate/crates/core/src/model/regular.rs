//! Regularity of LC/HLC models and reduction of irregular models to
//! equivalent regular ones.
//!
//! A hidden node `H` is within its cap when
//! `|H| <= Π_{Y ∈ Ne(H)} |Y| / max_{Y ∈ Ne(H)} |Y|`. If `H` has exactly two
//! neighbours and one of them is hidden the inequality must be strict.

use serde::Serialize;

use super::spec::{neighbour_product, ModelSpec};
use super::structure::{TreeStructure, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Regularity {
    pub regular: bool,
    /// Hidden nodes that violate the condition, by variable index.
    pub violations: Vec<usize>,
}

/// Largest cardinality `h` may take without exceeding the neighbourhood cap.
pub fn cardinality_cap(structure: &TreeStructure, h: usize) -> usize {
    let max = structure
        .neighbours(h)
        .into_iter()
        .map(|y| structure.card(y))
        .max()
        .unwrap_or(1) as u128;
    let cap = neighbour_product(structure, h) / max;
    usize::try_from(cap).unwrap_or(usize::MAX)
}

/// Whether `h` falls under the strict two-neighbour rule.
pub fn requires_strict(structure: &TreeStructure, h: usize) -> bool {
    let ne = structure.neighbours(h);
    ne.len() == 2 && ne.iter().any(|&y| structure.variable(y).is_hidden())
}

pub fn node_is_regular(structure: &TreeStructure, h: usize) -> bool {
    let cap = cardinality_cap(structure, h);
    let card = structure.card(h);
    if requires_strict(structure, h) {
        card < cap
    } else {
        card <= cap
    }
}

pub fn is_regular(structure: &TreeStructure) -> Regularity {
    let violations: Vec<usize> = structure
        .hidden()
        .iter()
        .copied()
        .filter(|&h| !node_is_regular(structure, h))
        .collect();
    Regularity {
        regular: violations.is_empty(),
        violations,
    }
}

impl ModelSpec {
    pub fn regularity(&self) -> Regularity {
        is_regular(self.structure())
    }

    pub fn is_regular(&self) -> bool {
        self.regularity().regular
    }

    /// An equivalent regular model.
    ///
    /// Hidden cardinalities above their cap are lowered to the cap, which
    /// preserves the represented class of observed distributions. A hidden
    /// node that still violates the strict two-neighbour rule sits at the
    /// cap `min(|A|, |B|)` of its neighbours `A`, `B`; such a node can relay
    /// any conditional `p(B | A)`, so it is removed and `A`, `B` are joined
    /// directly. The two steps repeat until nothing changes. Observed
    /// variables are never touched.
    pub fn regularize(&self) -> ModelSpec {
        let mut structure = self.structure().clone();
        loop {
            let over: Vec<(usize, usize)> = structure
                .hidden()
                .iter()
                .filter_map(|&h| {
                    let cap = cardinality_cap(&structure, h);
                    (structure.card(h) > cap).then_some((h, cap))
                })
                .collect();
            if !over.is_empty() {
                // lower one node at a time: caps of its neighbours depend on it
                structure = structure
                    .with_cardinalities(&over[..1])
                    .expect("lowering a cardinality to a cap >= 2 keeps the tree valid");
                continue;
            }
            let strict = structure
                .hidden()
                .iter()
                .copied()
                .find(|&h| !node_is_regular(&structure, h));
            match strict {
                Some(h) => structure = remove_relay(&structure, h),
                None => break,
            }
        }
        if &structure == self.structure() {
            self.clone()
        } else {
            ModelSpec::from_structure(structure)
        }
    }
}

/// Remove a two-neighbour hidden node and connect its neighbours.
fn remove_relay(structure: &TreeStructure, h: usize) -> TreeStructure {
    let ne = structure.neighbours(h);
    debug_assert_eq!(ne.len(), 2);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let root;
    if structure.parent(h).is_none() {
        // h is the root: a hidden child takes over and adopts its sibling
        let (a, b) = (ne[0], ne[1]);
        let (new_root, other) = if structure.variable(a).is_hidden() { (a, b) } else { (b, a) };
        root = new_root;
        for (p, c) in structure.edges() {
            if p != h {
                edges.push((p, c));
            }
        }
        edges.push((new_root, other));
    } else {
        let p = ne[0];
        let c = ne[1];
        root = structure.root();
        for (pp, cc) in structure.edges() {
            if cc == h {
                edges.push((p, c));
            } else if pp != h {
                edges.push((pp, cc));
            }
        }
    }
    let remap = |i: usize| if i > h { i - 1 } else { i };
    let vars: Vec<Variable> = structure
        .variables()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != h)
        .map(|(_, v)| v.clone())
        .collect();
    let edges: Vec<(usize, usize)> = edges.into_iter().map(|(p, c)| (remap(p), remap(c))).collect();
    TreeStructure::from_indices(vars, remap(root), &edges)
        .expect("removing a relay node from a valid tree leaves a valid tree")
}
