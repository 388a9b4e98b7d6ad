use crate::error::{Error, Result};

/// Gaussian CDF `Φ((x − mean)/√variance)` through `erfc`, which keeps full
/// relative precision in both tails.
pub fn gaussian_cdf(x: f64, mean: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::param(format!("variance must be positive, got {variance}")));
    }
    let z = (x - mean) / variance.sqrt();
    Ok(0.5 * libm::erfc(-z / std::f64::consts::SQRT_2))
}

/// Ordinary least squares line through `points`, returned as `(slope, intercept)`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::param(format!(
            "need at least two points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |(sxx, sxy), &(x, y)| {
        let dx = x - mean_x;
        (sxx + dx * dx, sxy + dx * (y - mean_y))
    });
    if sxx == 0.0 {
        return Err(Error::DegenerateFit);
    }
    let slope = sxy / sxx;
    Ok((slope, mean_y - slope * mean_x))
}
