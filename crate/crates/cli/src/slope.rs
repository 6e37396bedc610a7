//! Least-squares slope fitting for convergence and complexity plots.

use anyhow::{bail, Result};

/// Ordinary least squares line `y = slope * x + intercept`.
///
/// Errors when fewer than two points are given or the x values are all
/// identical (vertical fit).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        bail!("fit_line needs as many x as y values, got {} vs {}", xs.len(), ys.len());
    }
    if xs.len() < 2 {
        bail!("fit_line needs at least two points, got {}", xs.len());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        bail!("fit_line is degenerate: all x values equal {mx}");
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Log-log slope of `ys` against `xs` over the index window
/// `lo..=hi` (inclusive). All windowed values must be positive and the
/// window must hold at least three points.
pub fn fit_slope(xs: &[f64], ys: &[f64], lo: usize, hi: usize) -> Result<f64> {
    if xs.len() != ys.len() {
        bail!("fit_slope needs as many x as y values, got {} vs {}", xs.len(), ys.len());
    }
    if lo > hi || hi >= xs.len() {
        bail!("window {lo}..={hi} is out of bounds for {} points", xs.len());
    }
    if hi - lo + 1 < 3 {
        bail!("slope window needs at least three points, got {}", hi - lo + 1);
    }
    let mut lx = Vec::with_capacity(hi - lo + 1);
    let mut ly = Vec::with_capacity(hi - lo + 1);
    for k in lo..=hi {
        if xs[k] <= 0.0 || ys[k] <= 0.0 {
            bail!("log-log fit needs positive data, got ({}, {}) at index {k}", xs[k], ys[k]);
        }
        lx.push(xs[k].ln());
        ly.push(ys[k].ln());
    }
    Ok(fit_line(&lx, &ly)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws_are_recovered() {
        let xs: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        let inv: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
        let slope = fit_slope(&xs, &inv, 0, 19).unwrap();
        assert!((slope + 1.0).abs() <= 1e-12, "slope {slope}");

        // the constant is absorbed by the intercept
        let half: Vec<f64> = xs.iter().map(|x| 3.7 * x.powf(-0.5)).collect();
        let slope = fit_slope(&xs, &half, 0, 19).unwrap();
        assert!((slope + 0.5).abs() <= 1e-12, "slope {slope}");
    }

    #[test]
    fn multiplicative_noise_moves_the_slope_only_slightly() {
        // +-10% alternating noise on a -1 power law over 20 points
        let xs: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| (1.0 / x) * if i % 2 == 0 { 1.1 } else { 0.9 })
            .collect();
        let slope = fit_slope(&xs, &ys, 0, 19).unwrap();
        assert!((-1.15..=-0.85).contains(&slope), "slope {slope}");
    }

    #[test]
    fn windows_select_a_subrange() {
        let xs: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        // -2 power law on the first half, flat afterwards
        let ys: Vec<f64> =
            xs.iter().map(|x| if *x <= 5.0 { x.powi(-2) } else { 0.04 }).collect();
        let slope = fit_slope(&xs, &ys, 0, 4).unwrap();
        assert!((slope + 2.0).abs() <= 1e-12, "slope {slope}");
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(fit_line(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_slope(&[1.0, 2.0], &[1.0, 1.0], 0, 1).is_err());
        assert!(fit_slope(&[1.0, 2.0, 0.0], &[1.0, 1.0, 1.0], 0, 2).is_err());
        assert!(fit_slope(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0], 0, 5).is_err());
    }
}
