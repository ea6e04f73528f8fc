use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec;
use crate::model::{free_parameters, FamilyJoint, FreeParameter, Inference, ModelSpec, ObservedSpace, Parameters};

const ROW_CHUNK: usize = 256;

/// Jacobian of the map from free parameters to the observed marginal.
///
/// Rows follow the canonical joint observed state order, columns follow
/// [`free_parameters`].
#[derive(Debug, Clone)]
pub struct JacobianMatrix {
    matrix: DMatrix<f64>,
    columns: Vec<FreeParameter>,
}

impl JacobianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn columns(&self) -> &[FreeParameter] {
        &self.columns
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// Analytic Jacobian `∂p(o)/∂θ` at strictly positive parameters.
///
/// For the free parameter `θ = p(x_k | pa_j)` of `X`, whose column has the
/// dependent last state `x_K`,
/// `∂p(o)/∂θ = p(o, x_k, pa_j)/p(x_k|pa_j) − p(o, x_K, pa_j)/p(x_K|pa_j)`.
pub fn build_jacobian(model: &ModelSpec, params: &Parameters) -> Result<JacobianMatrix> {
    let s = model.structure();
    if !params.matches(s) {
        return Err(Error::InvalidParameters(
            "parameters do not match the structure".into(),
        ));
    }
    if let Some((variable, state, column, value)) = params.first_non_positive() {
        return Err(Error::NonPositiveParameter {
            variable: s.name(variable).to_string(),
            state,
            column,
            value,
        });
    }
    let space = ObservedSpace::new(s)?;
    let columns = free_parameters(s);
    let ncols = columns.len();
    let rows = space.size();

    let chunks = exec::map_range(rows.div_ceil(ROW_CHUNK), |c| {
        let mut inf = Inference::new(s, params);
        let mut fam = FamilyJoint::zeros(s);
        let mut states = vec![0; space.cards().len()];
        let lo = c * ROW_CHUNK;
        let hi = (lo + ROW_CHUNK).min(rows);
        let mut block = Vec::with_capacity((hi - lo) * ncols);
        for r in lo..hi {
            space.decode(r, &mut states);
            inf.family_joint(&states, &mut fam);
            for fp in &columns {
                let cpt = params.table(fp.variable);
                let card = cpt.card();
                let last = card - 1;
                let t = &fam.tables[fp.variable];
                let base = fp.column * card;
                block.push(
                    t[base + fp.state] / cpt.get(fp.state, fp.column)
                        - t[base + last] / cpt.get(last, fp.column),
                );
            }
        }
        block
    });
    let data = chunks.concat();
    Ok(JacobianMatrix {
        matrix: DMatrix::from_row_slice(rows, ncols, &data),
        columns,
    })
}
