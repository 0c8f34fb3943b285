//! Shared oracles for unit tests. Independent of the spectral code paths
//! they are used to check.

use ndarray::Array2;

use crate::grid::{Axis2, Grid};

/// 8th-order centered finite differences on the periodic samples.
pub fn fd8_derivative(grid: &Grid, f: &Array2<f64>, axis: Axis2) -> Array2<f64> {
    let n = grid.n();
    let h = grid.spacing();
    let w = [
        (1, 4.0 / 5.0),
        (2, -1.0 / 5.0),
        (3, 4.0 / 105.0),
        (4, -1.0 / 280.0),
    ];
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for (s, c) in w {
                let (ip, im) = match axis {
                    Axis2::A1 => (((i + s) % n, j), ((i + n - s) % n, j)),
                    Axis2::A2 => ((i, (j + s) % n), (i, (j + n - s) % n)),
                };
                acc += c * (f[[ip.0, ip.1]] - f[[im.0, im.1]]);
            }
            out[[i, j]] = acc / h;
        }
    }
    out
}

/// Least-squares slope of `log(values)` against `log(times)`.
pub fn loglog_slope(times: &[f64], values: &[f64]) -> f64 {
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
