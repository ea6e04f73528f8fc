use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Cpt, ModelSpec, Parameters};
use crate::rng::rng_from_seed;

use super::data::Dataset;

/// Every conditional column drawn from the flat Dirichlet distribution.
pub fn random_parameters(model: &ModelSpec, seed: u64) -> Parameters {
    Parameters::random(model.structure(), &mut rng_from_seed(seed))
}

/// LC parameters in which the hidden state is a bijection of the joint
/// state of `block` (observed variable names). The block tables are 0/1; the
/// hidden prior and the other leaves are random.
///
/// Hidden state `x` maps to the block state whose mixed-radix index (first
/// listed variable slowest) is `x`.
pub fn deterministic_block_parameters(
    model: &ModelSpec,
    block: &[&str],
    seed: u64,
) -> Result<Parameters> {
    if !model.is_latent_class() {
        return Err(Error::NotLatentClass);
    }
    let s = model.structure();
    let root = s.root();
    let hidden = s.card(root);
    let mut members = Vec::with_capacity(block.len());
    for name in block {
        let i = s
            .index_of(name)
            .filter(|&i| !s.variable(i).is_hidden())
            .ok_or_else(|| Error::CardinalityMismatch(format!("'{name}' is not an observed variable")))?;
        if members.contains(&i) {
            return Err(Error::CardinalityMismatch(format!("'{name}' listed twice")));
        }
        members.push(i);
    }
    let joint: usize = members.iter().map(|&i| s.card(i)).product();
    if joint != hidden || members.is_empty() {
        return Err(Error::CardinalityMismatch(format!(
            "block state space has {joint} states but the hidden variable has {hidden}"
        )));
    }

    let mut params = random_parameters(model, seed);
    let mut stride = joint;
    for &i in &members {
        let card = s.card(i);
        stride /= card;
        let mut values = vec![0.0; card * hidden];
        for x in 0..hidden {
            values[x * card + (x / stride) % card] = 1.0;
        }
        *params.table_mut(i) = Cpt::new(card, hidden, values);
    }
    Ok(params)
}

fn draw_state<R: Rng + ?Sized>(rng: &mut R, column: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in column.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding: fall back to the last state with positive mass
    column.iter().rposition(|&p| p > 0.0).unwrap_or(column.len() - 1)
}

/// `n` forward samples from the root down; hidden values are dropped and
/// the observed states aggregated into counted records.
pub fn sample_dataset(model: &ModelSpec, params: &Parameters, n: usize, seed: u64) -> Result<Dataset> {
    let s = model.structure();
    if !params.matches(s) {
        return Err(Error::InvalidParameters("parameters do not match the structure".into()));
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = rng_from_seed(seed);
    let mut states = vec![0usize; s.len()];
    let cards: Vec<u128> = s.observed().iter().map(|&o| s.card(o) as u128).collect();
    let mut counts: BTreeMap<u128, u64> = BTreeMap::new();
    for _ in 0..n {
        for &v in s.preorder() {
            let col = s.parent(v).map_or(0, |p| states[p]);
            states[v] = draw_state(&mut rng, params.table(v).column(col));
        }
        let key = s
            .observed()
            .iter()
            .zip(&cards)
            .fold(0u128, |acc, (&o, &c)| acc * c + states[o] as u128);
        *counts.entry(key).or_insert(0) += 1;
    }
    let rows = counts.into_iter().map(|(mut key, count)| {
        let mut st = vec![0usize; cards.len()];
        for (slot, &c) in st.iter_mut().zip(&cards).rev() {
            *slot = (key % c) as usize;
            key /= c;
        }
        (st, count)
    });
    Dataset::for_structure(s, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::observed_marginal;

    #[test]
    fn random_parameters_are_deterministic() {
        let m = ModelSpec::parse("3:2,3,2").unwrap();
        assert_eq!(random_parameters(&m, 5), random_parameters(&m, 5));
        assert_ne!(random_parameters(&m, 5), random_parameters(&m, 6));
    }

    #[test]
    fn different_seeds_give_different_marginals() {
        let m = ModelSpec::parse("3:2,3,2").unwrap();
        let a = observed_marginal(m.structure(), &random_parameters(&m, 1)).unwrap();
        let b = observed_marginal(m.structure(), &random_parameters(&m, 2)).unwrap();
        let tv: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0;
        assert!(tv > 0.0);
    }

    #[test]
    fn block_parameters_are_bijective() {
        let m = ModelSpec::parse("8:2,2,2,2").unwrap();
        let p = deterministic_block_parameters(&m, &["O1", "O2", "O3"], 3).unwrap();
        let s = m.structure();
        let mut seen = std::collections::HashSet::new();
        for x in 0..8 {
            let code: Vec<usize> = (1..=3)
                .map(|i| {
                    let col = p.table(i).column(x);
                    assert!(col.iter().all(|&v| v == 0.0 || v == 1.0));
                    col.iter().position(|&v| v == 1.0).unwrap()
                })
                .collect();
            assert!(seen.insert(code));
        }
        assert!(p.table(4).column(0).iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(crate::model::Parameters::from_cpts(s, p.tables().to_vec()).is_ok());
    }

    #[test]
    fn block_size_mismatch() {
        let m = ModelSpec::parse("8:2,2,2,2").unwrap();
        assert!(deterministic_block_parameters(&m, &["O1", "O2"], 0).is_err());
        assert!(deterministic_block_parameters(&m, &["O1", "O1", "O2"], 0).is_err());
        assert!(deterministic_block_parameters(&m, &["X", "O1", "O2"], 0).is_err());
    }

    #[test]
    fn sample_sizes() {
        let m = ModelSpec::parse("2:2,2,2").unwrap();
        let p = random_parameters(&m, 0);
        let d = sample_dataset(&m, &p, 1, 9).unwrap();
        assert_eq!(d.total(), 1);
        assert_eq!(d.records().len(), 1);
        assert_eq!(d.records()[0].count, 1);
        let d = sample_dataset(&m, &p, 1000, 9).unwrap();
        assert_eq!(d.total(), 1000);
        assert_eq!(d, sample_dataset(&m, &p, 1000, 9).unwrap());
    }
}
