//! Standard errors from the Gauss–Newton normal matrix.

use nalgebra::DMatrix;

/// Identifiability status of one fitted parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamStatus {
    Free,
    /// Held at a box bound; no error bar.
    AtBound,
    /// Lies in a null direction of the Jacobian; no error bar.
    Unidentifiable,
}

#[derive(Debug, Clone)]
pub struct ParameterError {
    pub name: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub status: ParamStatus,
}

/// Standard errors from the diagonal of the inverse normal matrix scaled by
/// the residual variance: `σ̂² = SSR / (m - k_free)`, covariance
/// `σ̂² (JᵀJ)⁻¹` over the identifiable subspace.
///
/// Parameters pinned at bounds are excluded. Directions whose singular value
/// is below `1e-10` of the largest are reported as unidentifiable instead of
/// producing meaningless numbers.
pub fn standard_errors(
    names: &[String],
    values: &[f64],
    jacobian: &DMatrix<f64>,
    residuals: &[f64],
    at_bound: &[bool],
) -> Vec<ParameterError> {
    let k = names.len();
    let m = residuals.len();
    let free: Vec<usize> = (0..k).filter(|&j| !at_bound[j]).collect();
    let mut out: Vec<ParameterError> = (0..k)
        .map(|j| ParameterError {
            name: names[j].clone(),
            value: values[j],
            stderr: None,
            status: if at_bound[j] { ParamStatus::AtBound } else { ParamStatus::Free },
        })
        .collect();
    if free.is_empty() || m <= free.len() {
        for j in &free {
            out[*j].status = ParamStatus::Unidentifiable;
        }
        return out;
    }

    let j_free = DMatrix::from_fn(m, free.len(), |r, c| jacobian[(r, free[c])]);
    let svd = j_free.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let sv = &svd.singular_values;
    let sv_max = sv.iter().cloned().fold(0.0f64, f64::max);
    let threshold = sv_max * 1e-10;

    // parameters dominated by null-space directions are unidentifiable
    let mut null_weight = vec![0.0f64; free.len()];
    let mut rank = 0usize;
    for d in 0..sv.len() {
        if sv[d] > threshold {
            rank += 1;
        } else {
            for c in 0..free.len() {
                null_weight[c] += v_t[(d, c)] * v_t[(d, c)];
            }
        }
    }
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let dof = (m as f64 - rank as f64).max(1.0);
    let variance = ssr / dof;

    for (c, &j) in free.iter().enumerate() {
        if null_weight[c] > 0.5 {
            out[j].status = ParamStatus::Unidentifiable;
            continue;
        }
        // covariance diagonal over the identifiable subspace:
        // Σ_d (V[c,d] / s_d)² over kept directions
        let mut cov = 0.0;
        let mut touched_null = false;
        for d in 0..sv.len() {
            if sv[d] > threshold {
                let component = v_t[(d, c)];
                cov += (component / sv[d]) * (component / sv[d]);
            } else if v_t[(d, c)].abs() > 1e-6 {
                touched_null = true;
            }
        }
        if touched_null && null_weight[c] > 0.1 {
            out[j].status = ParamStatus::Unidentifiable;
        } else {
            out[j].stderr = Some((variance * cov).sqrt());
        }
    }
    out
}
