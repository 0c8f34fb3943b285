//! Synthetic field families with analytic time dependence. Spatial patterns
//! are random band-limited fields (optionally windowed to compact support);
//! time profiles are polynomial-trigonometric, closed under d/dt and t*d/dt,
//! so every time derivative used by the identity checks is exact.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::field::{ScalarField, VectorField2};
use crate::grid::{Axis2, Grid};

/// Random real field with modes `|m| <= max_mode` on each axis, zero mean,
/// normalized to unit sup norm.
pub fn random_band_limited_field(grid: &Arc<Grid>, max_mode: i64, seed: u64) -> ScalarField {
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hat = Array2::from_elem((n, n), Complex64::default());
    for i in 0..n {
        for j in 0..n {
            let mi = if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
            let mj = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
            if mi.abs() > max_mode || mj.abs() > max_mode || (mi == 0 && mj == 0) {
                continue;
            }
            hat[[i, j]] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    // Hermitian-symmetrize so the inverse transform is real.
    let raw = hat.clone();
    for i in 0..n {
        for j in 0..n {
            let ic = (n - i) % n;
            let jc = (n - j) % n;
            hat[[i, j]] = 0.5 * (raw[[i, j]] + raw[[ic, jc]].conj());
        }
    }
    let data = grid.inverse_real(hat);
    let sup = data.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1e-300);
    ScalarField::from_array(grid, data.mapv(|v| v / sup))
}

/// Random band-limited field localized by a truncated-Gaussian window
/// `exp(-32 (r/radius)^2)`, zero beyond `radius`. The edge value sits at
/// `exp(-32) ~ 1e-14`, so the product is compactly supported to round-off
/// while its spectrum stays Gaussian-fast.
pub fn windowed_random_field(
    grid: &Arc<Grid>,
    max_mode: i64,
    radius: f64,
    seed: u64,
) -> ScalarField {
    let base = random_band_limited_field(grid, max_mode, seed);
    let n = grid.n();
    let r = grid.radius();
    let mut data = base.data;
    for i in 0..n {
        for j in 0..n {
            let s = r[[i, j]] / radius;
            data[[i, j]] *= if s < 1.0 { (-32.0 * s * s).exp() } else { 0.0 };
        }
    }
    ScalarField::from_array(grid, data)
}

#[derive(Clone, Copy, Debug)]
enum Phase {
    Cos,
    Sin,
}

#[derive(Clone, Copy, Debug)]
struct TrigTerm {
    coeff: f64,
    power: u32,
    freq: f64,
    phase: Phase,
}

impl TrigTerm {
    fn eval(&self, t: f64) -> f64 {
        let osc = match self.phase {
            Phase::Cos => (self.freq * t).cos(),
            Phase::Sin => (self.freq * t).sin(),
        };
        self.coeff * t.powi(self.power as i32) * osc
    }
}

/// Finite sum of `c * t^p * cos/sin(w t)` terms.
#[derive(Clone, Debug, Default)]
pub struct TrigPoly {
    terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn oscillation(amp_cos: f64, amp_sin: f64, freq: f64) -> TrigPoly {
        TrigPoly {
            terms: vec![
                TrigTerm { coeff: amp_cos, power: 0, freq, phase: Phase::Cos },
                TrigTerm { coeff: amp_sin, power: 0, freq, phase: Phase::Sin },
            ],
        }
    }

    pub fn constant(c: f64) -> TrigPoly {
        TrigPoly {
            terms: vec![TrigTerm { coeff: c, power: 0, freq: 0.0, phase: Phase::Cos }],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    pub fn derivative(&self) -> TrigPoly {
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for term in &self.terms {
            if term.power > 0 {
                terms.push(TrigTerm {
                    coeff: term.coeff * term.power as f64,
                    power: term.power - 1,
                    ..*term
                });
            }
            if term.freq != 0.0 {
                let (phase, sign) = match term.phase {
                    Phase::Cos => (Phase::Sin, -1.0),
                    Phase::Sin => (Phase::Cos, 1.0),
                };
                terms.push(TrigTerm {
                    coeff: sign * term.coeff * term.freq,
                    power: term.power,
                    freq: term.freq,
                    phase,
                });
            }
        }
        TrigPoly { terms }
    }

    pub fn nth_derivative(&self, n: u32) -> TrigPoly {
        let mut out = self.clone();
        for _ in 0..n {
            out = out.derivative();
        }
        out
    }

    /// Multiply by `t` (used by the scaling operator `t d_t`).
    pub fn mul_t(&self) -> TrigPoly {
        TrigPoly {
            terms: self
                .terms
                .iter()
                .map(|term| TrigTerm { power: term.power + 1, ..*term })
                .collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> TrigPoly {
        TrigPoly {
            terms: self.terms.iter().map(|t| TrigTerm { coeff: c * t.coeff, ..*t }).collect(),
        }
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        TrigPoly { terms }
    }
}

/// Separated scalar `pattern(y) * profile(t)` with exact calculus.
#[derive(Clone)]
pub struct SyntheticScalar {
    pub pattern: ScalarField,
    pub profile: TrigPoly,
}

impl SyntheticScalar {
    pub fn value_at(&self, t: f64) -> ScalarField {
        self.pattern.scaled(self.profile.eval(t))
    }

    pub fn dt(&self, order: u32) -> SyntheticScalar {
        SyntheticScalar {
            pattern: self.pattern.clone(),
            profile: self.profile.nth_derivative(order),
        }
    }

    pub fn deriv(&self, axis: Axis2) -> SyntheticScalar {
        SyntheticScalar {
            pattern: self.pattern.deriv(axis),
            profile: self.profile.clone(),
        }
    }
}

/// Separated vector field with independent component profiles.
#[derive(Clone)]
pub struct SyntheticVector {
    pub comps: [SyntheticScalar; 2],
}

impl SyntheticVector {
    pub fn value_at(&self, t: f64) -> VectorField2 {
        VectorField2::new(self.comps[0].value_at(t), self.comps[1].value_at(t))
    }

    pub fn dt(&self, order: u32) -> SyntheticVector {
        SyntheticVector {
            comps: [self.comps[0].dt(order), self.comps[1].dt(order)],
        }
    }
}

/// Random synthetic vector with windowed spatial patterns and oscillatory
/// profiles; frequencies stay order-one so time derivatives do not blow up.
pub fn random_synthetic_vector(
    grid: &Arc<Grid>,
    max_mode: i64,
    window: Option<f64>,
    seed: u64,
) -> SyntheticVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    let make = |comp_seed: u64, rng: &mut ChaCha8Rng| {
        let pattern = match window {
            Some(radius) => windowed_random_field(grid, max_mode, radius, comp_seed),
            None => random_band_limited_field(grid, max_mode, comp_seed),
        };
        let profile = TrigPoly::oscillation(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.3..1.5),
        );
        SyntheticScalar { pattern, profile }
    };
    let c1 = make(seed.wrapping_mul(2654435761).wrapping_add(1), &mut rng);
    let c2 = make(seed.wrapping_mul(2654435761).wrapping_add(2), &mut rng);
    SyntheticVector { comps: [c1, c2] }
}
