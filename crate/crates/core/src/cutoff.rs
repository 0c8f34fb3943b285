//! Smooth cutoff machinery: C-infinity step templates, the dyadic
//! Littlewood-Paley partition functions, and the radial cutoffs used by the
//! decay estimates (plateau on `[3<t>/4, 6<t>/5]`, support in
//! `[2<t>/3, 5<t>/4]`, and the wide variant equal to one for `r <= 5<t>/2`).
//!
//! Two step shapes are used. `smooth_step` is the classical exactly
//! supported sigmoid `e(x) / (e(x) + e(1-x))` with `e(x) = exp(-1/x)`; its
//! maximum slope is about 2.07, fine wherever the gradient budget allows.
//! `flat_step` is a clipped linear ramp mollified by a logistic kernel
//! (a softplus difference, closed form); its slope never exceeds
//! `1/(1 - 2 MARGIN)` = 1.43, which the wide cutoff needs to satisfy its
//! `3/<t>` gradient bound. Its tails are exponential rather than compactly
//! supported, at the 1e-11 level: within the quadrature accuracy the
//! region invariants are stated for.

use std::sync::Arc;

use ndarray::Array2;

use crate::grid::Grid;

fn cinf_ramp(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Exactly supported C-infinity step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = cinf_ramp(x);
    let b = cinf_ramp(1.0 - x);
    a / (a + b)
}

pub fn smooth_step_deriv(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let a = cinf_ramp(x);
    let b = cinf_ramp(1.0 - x);
    let da = a / (x * x);
    let db = -b / ((1.0 - x) * (1.0 - x));
    (da * b - a * db) / ((a + b) * (a + b))
}

/// Ramp margin and mollification scale of `flat_step`.
const FLAT_MARGIN: f64 = 0.15;
const FLAT_SCALE: f64 = FLAT_MARGIN / 20.0;

/// Stable softplus `s * ln(1 + exp(u/s))`.
fn softplus(u: f64, s: f64) -> f64 {
    u.max(0.0) + s * (-u.abs() / s).exp().ln_1p()
}

fn logistic_cdf(u: f64, s: f64) -> f64 {
    1.0 / (1.0 + (-u / s).exp())
}

/// Low-slope C-infinity step: a linear ramp over `[MARGIN, 1 - MARGIN]`
/// convolved with a logistic kernel. Max slope `1/(1 - 2 MARGIN)`; the
/// tails beyond `[0, 1]` are below `exp(-20) / (1 - 2 MARGIN) ~ 3e-9`
/// in value and decay exponentially.
pub fn flat_step(x: f64) -> f64 {
    let w = 1.0 - 2.0 * FLAT_MARGIN;
    (softplus(x - FLAT_MARGIN, FLAT_SCALE) - softplus(x - 1.0 + FLAT_MARGIN, FLAT_SCALE)) / w
}

pub fn flat_step_deriv(x: f64) -> f64 {
    let w = 1.0 - 2.0 * FLAT_MARGIN;
    (logistic_cdf(x - FLAT_MARGIN, FLAT_SCALE) - logistic_cdf(x - 1.0 + FLAT_MARGIN, FLAT_SCALE))
        / w
}

/// Non-increasing C-infinity function: 1 for `tau <= 1`, 0 for `tau >= 4/3`.
pub fn lp_chi(tau: f64) -> f64 {
    1.0 - smooth_step((tau - 1.0) * 3.0)
}

/// Dyadic bump `phi(tau) = chi(tau/2) - chi(tau)`, supported in `[1, 8/3]`
/// (inside the admissible band `[3/4, 8/3]`), telescoping to 1 for `tau > 0`.
pub fn lp_phi(tau: f64) -> f64 {
    lp_chi(tau / 2.0) - lp_chi(tau)
}

/// A radial profile built from `smooth_step`: 0 for `r <= r0`, 1 on
/// `[r1, r2]`, 0 for `r >= r3`. Degenerate first edge (`r0 = r1 = 0`)
/// means "no inner hole".
#[derive(Clone, Copy, Debug)]
pub struct RadialProfile {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl RadialProfile {
    pub fn value(&self, r: f64) -> f64 {
        let rise = if self.r1 > self.r0 {
            smooth_step((r - self.r0) / (self.r1 - self.r0))
        } else {
            1.0
        };
        let fall = 1.0 - smooth_step((r - self.r2) / (self.r3 - self.r2));
        rise * fall
    }

    /// Radial derivative d/dr of the profile.
    pub fn deriv(&self, r: f64) -> f64 {
        let rise;
        let rise_d;
        if self.r1 > self.r0 {
            let w = self.r1 - self.r0;
            rise = smooth_step((r - self.r0) / w);
            rise_d = smooth_step_deriv((r - self.r0) / w) / w;
        } else {
            rise = 1.0;
            rise_d = 0.0;
        }
        let w = self.r3 - self.r2;
        let fall = 1.0 - smooth_step((r - self.r2) / w);
        let fall_d = -smooth_step_deriv((r - self.r2) / w) / w;
        rise_d * fall + rise * fall_d
    }

    /// Samples the profile and its analytic gradient on the grid.
    pub fn sample(&self, grid: &Grid) -> (Array2<f64>, [Array2<f64>; 2]) {
        let n = grid.n();
        let mut val = Array2::zeros((n, n));
        let mut g1 = Array2::zeros((n, n));
        let mut g2 = Array2::zeros((n, n));
        let r = grid.radius();
        let w1 = grid.omega(crate::grid::Axis2::A1);
        let w2 = grid.omega(crate::grid::Axis2::A2);
        for i in 0..n {
            for j in 0..n {
                let rr = r[[i, j]];
                val[[i, j]] = self.value(rr);
                let d = self.deriv(rr);
                g1[[i, j]] = d * w1[[i, j]];
                g2[[i, j]] = d * w2[[i, j]];
            }
        }
        (val, [g1, g2])
    }
}

/// Radial annulus cutoff with logistic-mollified edges of scale `s`,
/// for identity checks that differentiate cutoff-carrying products
/// spectrally: the spectral tail decays like `exp(-pi k s)`, so choosing
/// `s >~ 1.5 h` pushes it to round-off. Not used for the paper-constant
/// region cutoffs (its plateau/support are only exponentially accurate).
#[derive(Clone, Copy, Debug)]
pub struct SoftAnnulus {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub scale: f64,
}

impl SoftAnnulus {
    pub fn value(&self, r: f64) -> f64 {
        let rise = if self.r1 > self.r0 {
            let w = self.r1 - self.r0;
            (softplus(r - self.r0, self.scale) - softplus(r - self.r1, self.scale)) / w
        } else {
            1.0
        };
        let w = self.r3 - self.r2;
        let fall = 1.0 - (softplus(r - self.r2, self.scale) - softplus(r - self.r3, self.scale)) / w;
        rise * fall
    }

    pub fn deriv(&self, r: f64) -> f64 {
        let (rise, rise_d) = if self.r1 > self.r0 {
            let w = self.r1 - self.r0;
            (
                (softplus(r - self.r0, self.scale) - softplus(r - self.r1, self.scale)) / w,
                (logistic_cdf(r - self.r0, self.scale) - logistic_cdf(r - self.r1, self.scale)) / w,
            )
        } else {
            (1.0, 0.0)
        };
        let w = self.r3 - self.r2;
        let fall = 1.0 - (softplus(r - self.r2, self.scale) - softplus(r - self.r3, self.scale)) / w;
        let fall_d =
            -(logistic_cdf(r - self.r2, self.scale) - logistic_cdf(r - self.r3, self.scale)) / w;
        rise_d * fall + rise * fall_d
    }
}

/// The two time-indexed radial cutoffs of the decay lemmas, sampled on a
/// grid together with their analytic gradients.
pub struct RegionCutoffs {
    pub t: f64,
    /// Annular cutoff: 1 on `[3<t>/4, 6<t>/5]`, 0 off `[2<t>/3, 5<t>/4]`.
    pub phi: Array2<f64>,
    pub phi_grad: [Array2<f64>; 2],
    /// Wide cutoff: 1 for `r <= 5<t>/2`, 0 for `r > 3<t>`.
    pub phi_tilde: Array2<f64>,
    pub phi_tilde_grad: [Array2<f64>; 2],
}

impl RegionCutoffs {
    pub fn profile_phi(t: f64) -> RadialProfile {
        let b = crate::bracket(t);
        RadialProfile {
            r0: 2.0 * b / 3.0,
            r1: 3.0 * b / 4.0,
            r2: 6.0 * b / 5.0,
            r3: 5.0 * b / 4.0,
        }
    }

    /// Wide cutoff value at radius `r` (flat-slope step over `[5/2, 3] <t>`).
    pub fn phi_tilde_value(t: f64, r: f64) -> f64 {
        let b = crate::bracket(t);
        1.0 - flat_step((r - 2.5 * b) / (0.5 * b))
    }

    pub fn phi_tilde_deriv(t: f64, r: f64) -> f64 {
        let b = crate::bracket(t);
        -flat_step_deriv((r - 2.5 * b) / (0.5 * b)) / (0.5 * b)
    }

    pub fn build(grid: &Arc<Grid>, t: f64) -> RegionCutoffs {
        let (phi, phi_grad) = Self::profile_phi(t).sample(grid);
        let n = grid.n();
        let mut val = Array2::zeros((n, n));
        let mut g1 = Array2::zeros((n, n));
        let mut g2 = Array2::zeros((n, n));
        let r = grid.radius();
        let w1 = grid.omega(crate::grid::Axis2::A1);
        let w2 = grid.omega(crate::grid::Axis2::A2);
        for i in 0..n {
            for j in 0..n {
                let rr = r[[i, j]];
                val[[i, j]] = Self::phi_tilde_value(t, rr);
                let d = Self::phi_tilde_deriv(t, rr);
                g1[[i, j]] = d * w1[[i, j]];
                g2[[i, j]] = d * w2[[i, j]];
            }
        }
        RegionCutoffs {
            t,
            phi,
            phi_grad,
            phi_tilde: val,
            phi_tilde_grad: [g1, g2],
        }
    }
}
