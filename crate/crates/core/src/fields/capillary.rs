use super::VectorField;
use crate::geometry::{Domain, Exclusion};
use crate::{Error, Result};

/// `Tu(x) = x / R` on the open disk of radius `R`: the capillary field of the
/// lower hemisphere `u(x) = -sqrt(R^2 - |x|^2)`, whose divergence is `2 / R`.
pub fn make_capillary_field(radius: f64) -> Result<VectorField> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("capillary radius must be positive, got {radius}")));
    }
    let r = radius;
    Ok(VectorField::new(format!("capillary:R={r}"), 2, 1.0, move |x| {
        Ok(vec![x[0] / r, x[1] / r])
    })
    .with_divergence(move |_| 2.0 / r)
    .with_jacobian(move |_| vec![1.0 / r, 0.0, 0.0, 1.0 / r])
    .with_domain(Domain::Ball {
        center: vec![0.0, 0.0],
        radius: r,
    })
    .with_exclusion(Exclusion::sphere(vec![0.0, 0.0], r)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_and_domain() {
        let f = make_capillary_field(1.0).unwrap();
        assert_eq!(f.eval(&[0.5, 0.0]).unwrap(), vec![0.5, 0.0]);
        assert_eq!(f.analytic_div(&[0.1, 0.2]), Some(2.0));
        assert!(matches!(f.eval(&[1.0, 0.0]), Err(Error::OutOfDomain { .. })));
        let near = f.eval(&[1.0 - 1e-12, 0.0]).unwrap();
        assert!((near[0] - 1.0).abs() < 1e-11);
        assert!(make_capillary_field(0.0).is_err());
    }
}
