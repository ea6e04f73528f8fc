#![allow(dead_code)]

use hlcdim::rng::rng_from_seed;
use hlcdim::{ModelSpec, TreeStructure, Variable};
use rand::Rng;

/// Random HLC tree: `hidden` hidden nodes attached to earlier ones, each
/// given enough observed leaves to have at least `min_degree` neighbours.
pub fn random_tree(
    seed: u64,
    hidden: usize,
    hidden_cards: std::ops::RangeInclusive<usize>,
    observed_cards: std::ops::RangeInclusive<usize>,
    min_degree: usize,
) -> ModelSpec {
    let mut rng = rng_from_seed(seed);
    let mut vars: Vec<Variable> = (0..hidden)
        .map(|i| Variable::hidden(format!("H{}", i + 1), rng.random_range(hidden_cards.clone())))
        .collect();
    let mut edges = Vec::new();
    let mut degree = vec![0usize; hidden];
    for i in 1..hidden {
        let p = rng.random_range(0..i);
        edges.push((p, i));
        degree[p] += 1;
        degree[i] += 1;
    }
    for (h, &deg) in degree.iter().enumerate() {
        let extra = usize::from(rng.random_bool(0.3));
        let leaves = (min_degree.max(2) + extra).saturating_sub(deg).max(usize::from(deg == 0));
        for _ in 0..leaves {
            let card = rng.random_range(observed_cards.clone());
            vars.push(Variable::observed(format!("O{}", vars.len() - hidden + 1), card));
            edges.push((h, vars.len() - 1));
        }
    }
    ModelSpec::from_structure(TreeStructure::from_indices(vars, 0, &edges).expect("valid random tree"))
}

/// The LC models of the reference dimension table.
pub const LC_SPECS: [&str; 21] = [
    "2:2,2", "2:2,2,2", "3:2,2,2", "4:2,2,2", "2:3,3", "2:3,3,3", "3:3,3,3", "3:4,5", "4:3,3,3", "5:3,3,3",
    "6:3,3,3", "2:2,2,2,2", "3:2,2,2,2", "4:2,2,2,2", "5:2,2,2,2", "6:2,2,2,2", "3:5,2,2", "3:4,2,2",
    "5:3,3,2", "5:6,3,2", "5:10,3,2",
];
