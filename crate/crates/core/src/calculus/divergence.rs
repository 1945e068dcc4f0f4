use crate::fields::VectorField;
use crate::{Error, Result};

/// Default centered-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Centered-difference divergence `sum_i (f_i(x + h e_i) - f_i(x - h e_i)) / 2h`.
///
/// The stencil must stay clear of every exclusion set: points within
/// `2h + margin` of one are rejected, naming the set.
pub fn numeric_divergence(field: &VectorField, x: &[f64], h: f64) -> Result<f64> {
    if x.len() != field.dim {
        return Err(Error::DimensionMismatch {
            expected: field.dim,
            got: x.len(),
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    for e in &field.exclusions {
        let d = e.distance(x);
        let required = 2.0 * h + e.margin;
        if d <= required {
            return Err(Error::NearExclusion {
                set: e.name(),
                point: x.to_vec(),
                distance: d,
                required,
            });
        }
    }
    let mut p = x.to_vec();
    let mut total = 0.0;
    for i in 0..x.len() {
        p[i] = x[i] + h;
        let plus = field.eval(&p)?[i];
        p[i] = x[i] - h;
        let minus = field.eval(&p)?[i];
        p[i] = x[i];
        total += (plus - minus) / (2.0 * h);
    }
    Ok(total)
}
