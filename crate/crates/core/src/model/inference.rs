//! Exact inference with every observed variable instantiated.
//!
//! Two interchangeable back ends: exhaustive enumeration of hidden
//! configurations, and two-pass sum-product propagation on the tree. Small
//! hidden spaces are enumerated; larger ones are propagated.

use crate::error::{Error, Result};
use crate::exec;

use super::params::Parameters;
use super::structure::TreeStructure;

/// Largest joint observed space any dense operation will enumerate.
pub const MAX_OBSERVED_STATES: usize = 1 << 20;

/// Hidden spaces up to this size are marginalized by enumeration.
pub const ENUMERATION_HIDDEN_LIMIT: u128 = 1 << 16;

const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marginalizer {
    Enumerate,
    Propagate,
}

impl Marginalizer {
    pub fn for_structure(structure: &TreeStructure) -> Self {
        if structure.hidden_space() <= ENUMERATION_HIDDEN_LIMIT {
            Marginalizer::Enumerate
        } else {
            Marginalizer::Propagate
        }
    }
}

/// Mixed-radix indexing of joint observed states, first observed variable
/// slowest.
#[derive(Debug, Clone)]
pub struct ObservedSpace {
    cards: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl ObservedSpace {
    pub fn new(structure: &TreeStructure) -> Result<Self> {
        let states = structure.observed_space();
        if states > MAX_OBSERVED_STATES as u128 {
            return Err(Error::StateSpaceTooLarge {
                states,
                cap: MAX_OBSERVED_STATES,
            });
        }
        let cards: Vec<usize> = structure
            .observed()
            .iter()
            .map(|&o| structure.card(o))
            .collect();
        Ok(Self::from_cards(cards))
    }

    pub fn from_cards(cards: Vec<usize>) -> Self {
        let mut strides = vec![1; cards.len()];
        for i in (0..cards.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * cards[i + 1];
        }
        let size = cards.iter().product();
        ObservedSpace {
            cards,
            strides,
            size,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn decode(&self, mut index: usize, out: &mut [usize]) {
        for (slot, &stride) in out.iter_mut().zip(&self.strides) {
            *slot = index / stride;
            index %= stride;
        }
    }

    pub fn encode(&self, states: &[usize]) -> usize {
        states.iter().zip(&self.strides).map(|(s, st)| s * st).sum()
    }
}

/// Joint probabilities `p(o, X = x, Pa(X) = pa)` for every family, laid out
/// like the conditional tables (`column * card + state`), plus `p(o)`.
#[derive(Debug, Clone)]
pub struct FamilyJoint {
    pub probability: f64,
    pub tables: Vec<Vec<f64>>,
}

impl FamilyJoint {
    pub fn zeros(structure: &TreeStructure) -> Self {
        FamilyJoint {
            probability: 0.0,
            tables: (0..structure.len())
                .map(|i| vec![0.0; structure.card(i) * structure.parent_configs(i)])
                .collect(),
        }
    }
}

/// Reusable inference workspace for one (structure, parameters) pair.
pub struct Inference<'a> {
    structure: &'a TreeStructure,
    params: &'a Parameters,
    method: Marginalizer,
    clamp: Vec<Option<usize>>,
    lambda: Vec<Vec<f64>>,
    up: Vec<Vec<f64>>,
    pi: Vec<Vec<f64>>,
    outside: Vec<f64>,
    states: Vec<usize>,
}

impl<'a> Inference<'a> {
    pub fn new(structure: &'a TreeStructure, params: &'a Parameters) -> Self {
        Self::with_method(structure, params, Marginalizer::for_structure(structure))
    }

    pub fn with_method(
        structure: &'a TreeStructure,
        params: &'a Parameters,
        method: Marginalizer,
    ) -> Self {
        let n = structure.len();
        let card = |i: usize| structure.card(i);
        Inference {
            structure,
            params,
            method,
            clamp: vec![None; n],
            lambda: (0..n).map(|i| vec![0.0; card(i)]).collect(),
            up: (0..n)
                .map(|i| vec![0.0; structure.parent(i).map_or(1, card)])
                .collect(),
            pi: (0..n).map(|i| vec![0.0; card(i)]).collect(),
            outside: vec![0.0; (0..n).map(card).max().unwrap_or(1)],
            states: vec![0; n],
        }
    }

    pub fn method(&self) -> Marginalizer {
        self.method
    }

    fn set_evidence(&mut self, observed_states: &[usize]) {
        debug_assert_eq!(observed_states.len(), self.structure.observed().len());
        for (&o, &s) in self.structure.observed().iter().zip(observed_states) {
            self.clamp[o] = Some(s);
        }
    }

    /// `p(o)` for one joint observed state.
    pub fn likelihood(&mut self, observed_states: &[usize]) -> f64 {
        self.set_evidence(observed_states);
        match self.method {
            Marginalizer::Propagate => self.upward(),
            Marginalizer::Enumerate => self.enumerate(None),
        }
    }

    /// All family joints for one joint observed state, written into `out`.
    pub fn family_joint(&mut self, observed_states: &[usize], out: &mut FamilyJoint) {
        self.set_evidence(observed_states);
        for t in &mut out.tables {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
        out.probability = match self.method {
            Marginalizer::Propagate => {
                let p = self.upward();
                self.downward(out);
                p
            }
            Marginalizer::Enumerate => self.enumerate(Some(out)),
        };
    }

    #[inline]
    fn indicator(&self, v: usize, x: usize) -> f64 {
        match self.clamp[v] {
            Some(s) if s != x => 0.0,
            _ => 1.0,
        }
    }

    fn upward(&mut self) -> f64 {
        let s = self.structure;
        for &v in s.preorder().iter().rev() {
            let card = s.card(v);
            for x in 0..card {
                let mut val = self.indicator(v, x);
                for &c in s.children(v) {
                    val *= self.up[c][x];
                }
                self.lambda[v][x] = val;
            }
            if let Some(p) = s.parent(v) {
                let cpt = self.params.table(v);
                for y in 0..s.card(p) {
                    let col = cpt.column(y);
                    self.up[v][y] = col.iter().zip(&self.lambda[v]).map(|(a, b)| a * b).sum();
                }
            }
        }
        let root = s.root();
        let prior = self.params.table(root).column(0);
        prior.iter().zip(&self.lambda[root]).map(|(a, b)| a * b).sum()
    }

    fn downward(&mut self, out: &mut FamilyJoint) {
        let s = self.structure;
        let root = s.root();
        self.pi[root].copy_from_slice(self.params.table(root).column(0));
        for (x, slot) in out.tables[root].iter_mut().enumerate() {
            *slot = self.pi[root][x] * self.lambda[root][x];
        }
        for &v in s.preorder() {
            let card_v = s.card(v);
            for &c in s.children(v) {
                for x in 0..card_v {
                    let mut val = self.pi[v][x] * self.indicator(v, x);
                    for &c2 in s.children(v) {
                        if c2 != c {
                            val *= self.up[c2][x];
                        }
                    }
                    self.outside[x] = val;
                }
                let card_c = s.card(c);
                let cpt = self.params.table(c);
                let table = &mut out.tables[c];
                self.pi[c].iter_mut().for_each(|v| *v = 0.0);
                for x in 0..card_v {
                    let o = self.outside[x];
                    if o == 0.0 {
                        continue;
                    }
                    let col = cpt.column(x);
                    for xc in 0..card_c {
                        let w = o * col[xc];
                        self.pi[c][xc] += w;
                        table[x * card_c + xc] = w * self.lambda[c][xc];
                    }
                }
            }
        }
    }

    fn enumerate(&mut self, mut out: Option<&mut FamilyJoint>) -> f64 {
        let s = self.structure;
        for v in 0..s.len() {
            self.states[v] = self.clamp[v].unwrap_or(0);
        }
        let hidden = s.hidden();
        let mut total = 0.0;
        loop {
            let mut joint = 1.0;
            for &v in s.preorder() {
                let col = s.parent(v).map_or(0, |p| self.states[p]);
                joint *= self.params.table(v).get(self.states[v], col);
                if joint == 0.0 {
                    break;
                }
            }
            if joint != 0.0 {
                total += joint;
                if let Some(out) = out.as_deref_mut() {
                    for v in 0..s.len() {
                        let col = s.parent(v).map_or(0, |p| self.states[p]);
                        out.tables[v][col * s.card(v) + self.states[v]] += joint;
                    }
                }
            }
            // advance the hidden odometer, last hidden variable fastest
            let mut k = hidden.len();
            loop {
                if k == 0 {
                    return total;
                }
                k -= 1;
                let h = hidden[k];
                self.states[h] += 1;
                if self.states[h] < s.card(h) {
                    break;
                }
                self.states[h] = 0;
            }
        }
    }
}

/// `p(o)` for every joint observed state, in canonical state order.
pub fn observed_marginal(structure: &TreeStructure, params: &Parameters) -> Result<Vec<f64>> {
    observed_marginal_with(structure, params, Marginalizer::for_structure(structure))
}

pub fn observed_marginal_with(
    structure: &TreeStructure,
    params: &Parameters,
    method: Marginalizer,
) -> Result<Vec<f64>> {
    if !params.matches(structure) {
        return Err(Error::InvalidParameters(
            "parameters do not match the structure".into(),
        ));
    }
    let space = ObservedSpace::new(structure)?;
    let chunks = space.size().div_ceil(CHUNK);
    let parts = exec::map_range(chunks, |c| {
        let mut inf = Inference::with_method(structure, params, method);
        let mut states = vec![0; space.cards().len()];
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(space.size());
        (lo..hi)
            .map(|i| {
                space.decode(i, &mut states);
                inf.likelihood(&states)
            })
            .collect::<Vec<f64>>()
    });
    Ok(parts.concat())
}
