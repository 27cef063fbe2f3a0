//! Polynomial feature maps.

use super::NumError;
use std::collections::HashMap;

/// Monomial feature map over a fixed input dimension.
///
/// Features are all monomials of total degree at most `degree`, ordered by
/// graded lexicographic order: ascending total degree, and within one degree
/// descending lexicographic order of the exponent tuple, so the constant
/// feature comes first and e.g. for two variables and degree two the order is
/// `1, x1, x2, x1^2, x1*x2, x2^2`.
///
/// When `append_timestep` is set, the timestep is appended as one extra
/// linear feature after all monomials; it never enters interaction terms.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    input_dim: usize,
    degree: usize,
    append_timestep: bool,
    /// Exponent tuples in the documented order; `exponents[0]` is all zeros.
    exponents: Vec<Vec<u32>>,
    /// For each non-constant monomial: (index of parent monomial, variable),
    /// where parent = this monomial with the last positive exponent
    /// decremented. Parents always precede children in the graded order, so
    /// evaluation is a single multiply per feature.
    steps: Vec<(usize, usize)>,
}

fn enumerate_exponents(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; dim];
    // descending lexicographic within one total degree
    fn rec(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, var: usize, remaining: u32) {
        if var + 1 == current.len() {
            current[var] = remaining;
            out.push(current.clone());
            current[var] = 0;
            return;
        }
        for e in (0..=remaining).rev() {
            current[var] = e;
            rec(out, current, var + 1, remaining - e);
            current[var] = 0;
        }
    }
    for total in 0..=degree as u32 {
        rec(&mut out, &mut current, 0, total);
    }
    out
}

impl FeatureMap {
    pub fn new(input_dim: usize, degree: usize, append_timestep: bool) -> Result<Self, NumError> {
        if input_dim == 0 {
            return Err(NumError::InvalidArgument("input_dim must be positive".into()));
        }
        let exponents = enumerate_exponents(input_dim, degree);
        let index: HashMap<&[u32], usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_slice(), i))
            .collect();
        let mut steps = Vec::with_capacity(exponents.len() - 1);
        let mut parent = vec![0u32; input_dim];
        for expo in exponents.iter().skip(1) {
            let var = expo.iter().rposition(|&e| e > 0).expect("non-constant");
            parent.copy_from_slice(expo);
            parent[var] -= 1;
            steps.push((index[parent.as_slice()], var));
        }
        Ok(Self {
            input_dim,
            degree,
            append_timestep,
            exponents,
            steps,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn append_timestep(&self) -> bool {
        self.append_timestep
    }

    /// Number of monomial features, `C(input_dim + degree, degree)`.
    pub fn n_monomials(&self) -> usize {
        self.exponents.len()
    }

    /// Total output dimension including the optional timestep column.
    pub fn n_features(&self) -> usize {
        self.exponents.len() + usize::from(self.append_timestep)
    }

    /// Exponent tuples in feature order (timestep column excluded).
    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    /// Write the feature row for `x` into `out` (length `n_features()`).
    pub fn eval_into(&self, x: &[f64], dt: Option<f64>, out: &mut [f64]) -> Result<(), NumError> {
        if x.len() != self.input_dim {
            return Err(NumError::Dimension(format!(
                "feature input has length {}, map expects {}",
                x.len(),
                self.input_dim
            )));
        }
        if dt.is_some() != self.append_timestep {
            return Err(NumError::InvalidArgument(
                "timestep must be supplied exactly when the map appends it".into(),
            ));
        }
        debug_assert_eq!(out.len(), self.n_features());
        out[0] = 1.0;
        for (j, &(parent, var)) in self.steps.iter().enumerate() {
            out[j + 1] = out[parent] * x[var];
        }
        if let Some(dt) = dt {
            out[self.exponents.len()] = dt;
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], dt: Option<f64>) -> Result<Vec<f64>, NumError> {
        let mut out = vec![0.0; self.n_features()];
        self.eval_into(x, dt, &mut out)?;
        Ok(out)
    }

    /// Feature matrix for a batch of rows (one sample per row).
    pub fn eval_matrix(
        &self,
        xs: &[Vec<f64>],
        dts: Option<&[f64]>,
    ) -> Result<faer::Mat<f64>, NumError> {
        let p = self.n_features();
        let mut m = faer::Mat::<f64>::zeros(xs.len(), p);
        let mut row = vec![0.0; p];
        for (i, x) in xs.iter().enumerate() {
            let dt = dts.map(|d| d[i]);
            self.eval_into(x, dt, &mut row)?;
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }
}
