//! Model structures, parameters, regularity and exact inference.

mod inference;
mod params;
mod regular;
mod spec;
mod structure;

pub use inference::{
    observed_marginal, observed_marginal_with, FamilyJoint, Inference, Marginalizer,
    ObservedSpace, ENUMERATION_HIDDEN_LIMIT, MAX_OBSERVED_STATES,
};
pub use params::{free_parameters, Cpt, FreeParameter, NamedTable, Parameters, ParametersDocument};
pub use regular::{cardinality_cap, is_regular, node_is_regular, requires_strict, Regularity};
pub use spec::ModelSpec;
pub use structure::{Role, TreeStructure, Variable};
