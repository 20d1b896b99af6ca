use crate::error::{Error, Result};

use super::dense::{dot, norm};
use super::rng::{unit_sphere_vector, SketchRng};

/// Largest eigenvalue of a symmetric PSD operator by power iteration.
///
/// Starts from a random unit vector, normalizes after every application and
/// returns the Rayleigh quotient of the last iterate. If the operator maps
/// the iterate to zero the estimate is zero.
pub fn spectral_norm_sym<F>(
    mut apply: F,
    d: usize,
    iterations: usize,
    rng: &mut SketchRng,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    if iterations == 0 {
        return Err(Error::invalid("power iteration needs at least one step"));
    }
    if d == 0 {
        return Ok(0.0);
    }
    let mut x = unit_sphere_vector(d, rng);
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let y = apply(&x);
        if y.len() != d {
            return Err(Error::dims(format!(
                "operator returned {} entries for {d}",
                y.len()
            )));
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("power iteration operator"));
        }
        estimate = dot(&x, &y);
        let n = norm(&y);
        if n == 0.0 {
            return Ok(0.0);
        }
        x = y;
        x.iter_mut().for_each(|v| *v /= n);
    }
    Ok(estimate)
}
