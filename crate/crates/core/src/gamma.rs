//! Commuting vector-field calculus: canonical words over
//! `{dt, d1, d2, Om, Sc}` applied to solution histories.
//!
//! `Om` is the modified rotation `dtheta + A` on vectors (`dtheta` on
//! scalars, `A = [[0,-1],[1,0]]`) and `Sc` the shifted scaling `S - 1` on
//! displacements (`S = t dt + y . grad` on scalars). Words are applied in
//! the fixed canonical order: time derivatives innermost, then spatial
//! derivatives, then rotations, then scalings. Commutators of the family
//! stay inside the family, so canonical words span the same graded
//! filtration as arbitrary words.
//!
//! Time derivatives reduce to exact substitutions `dt Y = V`, `dtt Y = A`;
//! third and higher orders fall through to centered stencils on the sampled
//! acceleration. The scaling operator's time derivative is re-expanded with
//! the operator identity `dt Sc^m = (Sc + 1)^m dt`, so no nested stencils
//! ever appear.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField2};
use crate::grid::{Axis2, Grid};
use crate::solver::History;

/// Counts of `(dt, d1, d2, Om, Sc)` in a canonical word.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct MultiIndex(pub [u8; 5]);

pub const GEN_T: usize = 0;
pub const GEN_X1: usize = 1;
pub const GEN_X2: usize = 2;
pub const GEN_ROT: usize = 3;
pub const GEN_SCALE: usize = 4;

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex([0; 5])
    }

    pub fn unit(generator: usize) -> Self {
        let mut c = [0u8; 5];
        c[generator] = 1;
        MultiIndex(c)
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    pub fn bump(&self, generator: usize) -> Self {
        let mut c = self.0;
        c[generator] += 1;
        MultiIndex(c)
    }

    fn drop_one(&self, generator: usize) -> Self {
        let mut c = self.0;
        c[generator] -= 1;
        MultiIndex(c)
    }

    /// Componentwise `self <= other`.
    pub fn leq(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    pub fn sub(&self, other: &MultiIndex) -> MultiIndex {
        let mut c = self.0;
        for i in 0..5 {
            c[i] -= other.0[i];
        }
        MultiIndex(c)
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "t{}x{}y{}r{}s{}",
            self.0[0], self.0[1], self.0[2], self.0[3], self.0[4]
        )
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// All count-vectors with `|alpha| <= max_order`, graded-lexicographic.
pub fn enumerate_multiindices(max_order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for grade in 0..=max_order {
        let g = grade as u8;
        for t in 0..=g {
            for x1 in 0..=(g - t) {
                for x2 in 0..=(g - t - x1) {
                    for rot in 0..=(g - t - x1 - x2) {
                        let scale = g - t - x1 - x2 - rot;
                        out.push(MultiIndex([t, x1, x2, rot, scale]));
                    }
                }
            }
        }
    }
    out
}

/// All splits `beta + gamma = alpha` with the Leibniz multinomial weight
/// `prod_i C(alpha_i, beta_i)`.
pub fn decompositions(alpha: MultiIndex) -> Vec<(MultiIndex, MultiIndex, f64)> {
    let mut out = Vec::new();
    let a = alpha.0;
    for t in 0..=a[0] {
        for x1 in 0..=a[1] {
            for x2 in 0..=a[2] {
                for rot in 0..=a[3] {
                    for scale in 0..=a[4] {
                        let beta = MultiIndex([t, x1, x2, rot, scale]);
                        let gamma = alpha.sub(&beta);
                        let mut w = 1.0;
                        for i in 0..5 {
                            w *= binomial(a[i] as u32, beta.0[i] as u32);
                        }
                        out.push((beta, gamma, w));
                    }
                }
            }
        }
    }
    out
}

/// Centered stencil coefficients on 7 points for the `order`-th time
/// derivative (accuracy 6 for orders 1-2, accuracy 4 for orders 3-4).
pub fn stencil_coefficients(order: u32) -> [f64; 7] {
    match order {
        1 => [
            -1.0 / 60.0,
            3.0 / 20.0,
            -3.0 / 4.0,
            0.0,
            3.0 / 4.0,
            -3.0 / 20.0,
            1.0 / 60.0,
        ],
        2 => [
            1.0 / 90.0,
            -3.0 / 20.0,
            3.0 / 2.0,
            -49.0 / 18.0,
            3.0 / 2.0,
            -3.0 / 20.0,
            1.0 / 90.0,
        ],
        3 => [
            1.0 / 8.0,
            -1.0,
            13.0 / 8.0,
            0.0,
            -13.0 / 8.0,
            1.0,
            -1.0 / 8.0,
        ],
        4 => [
            -1.0 / 6.0,
            2.0,
            -13.0 / 2.0,
            28.0 / 3.0,
            -13.0 / 2.0,
            2.0,
            -1.0 / 6.0,
        ],
        _ => panic!("stencil order {order} not tabulated"),
    }
}

pub const STENCIL_RADIUS: usize = 3;

/// Uniform jet interface shared by solver histories and synthetic sources.
pub trait JetSource {
    fn grid(&self) -> &Arc<Grid>;
    fn time(&self) -> f64;
    fn max_order(&self) -> usize;
    /// Canonical word applied to the displacement.
    fn gamma_y(&self, alpha: MultiIndex) -> Result<Arc<VectorField2>>;
    /// `dt^m` of a canonical entry, `m <= 2`.
    fn dt_gamma_y(&self, alpha: MultiIndex, m: u32) -> Result<Arc<VectorField2>>;
}

/// `dtheta f = y1 d2 f - y2 d1 f`, with edge-tapered coordinate weights.
fn dtheta(grid: &Arc<Grid>, f: &ScalarField) -> ScalarField {
    let y1 = grid.tapered_coord(Axis2::A1);
    let y2 = grid.tapered_coord(Axis2::A2);
    let d1 = f.deriv(Axis2::A1);
    let d2 = f.deriv(Axis2::A2);
    ScalarField::from_array(grid, &(y1 * &d2.data) - &(y2 * &d1.data))
}

/// `y . grad f` with edge-tapered coordinate weights.
fn radial_scale(grid: &Arc<Grid>, f: &ScalarField) -> ScalarField {
    let y1 = grid.tapered_coord(Axis2::A1);
    let y2 = grid.tapered_coord(Axis2::A2);
    let d1 = f.deriv(Axis2::A1);
    let d2 = f.deriv(Axis2::A2);
    ScalarField::from_array(grid, &(y1 * &d1.data) + &(y2 * &d2.data))
}

/// Modified rotation on vectors: `dtheta Y - A Y`. Differentiating the
/// rotation family `Q^T X(t, Q y)`, `Q = exp(lambda A)`, in lambda gives the
/// generator `dtheta - A`; this is the sign under which the commuted
/// constraint stays bilinear and equivariant data are annihilated.
fn rotate_vector(grid: &Arc<Grid>, f: &VectorField2) -> VectorField2 {
    let t1 = dtheta(grid, &f.comps[0]);
    let t2 = dtheta(grid, &f.comps[1]);
    VectorField2::new(&t1 + &f.comps[1], &t2 - &f.comps[0])
}

/// Jet evaluated from a solver history around one interior sample.
pub struct HistoryJet<'h> {
    grid: Arc<Grid>,
    history: &'h History,
    center: usize,
    max_order: usize,
    cache: RefCell<HashMap<(MultiIndex, usize), Arc<VectorField2>>>,
    cache_p: RefCell<HashMap<(MultiIndex, usize), Arc<ScalarField>>>,
}

impl<'h> HistoryJet<'h> {
    pub fn new(
        grid: &Arc<Grid>,
        history: &'h History,
        center: usize,
        max_order: usize,
    ) -> Result<HistoryJet<'h>> {
        if center >= history.len() {
            return Err(Error::InsufficientHistory {
                t: f64::NAN,
                available: history.len(),
                needed: center + 1,
            });
        }
        Ok(HistoryJet {
            grid: grid.clone(),
            history,
            center,
            max_order,
            cache: RefCell::new(HashMap::new()),
            cache_p: RefCell::new(HashMap::new()),
        })
    }

    fn check_order(&self, alpha: MultiIndex, extra: usize) -> Result<()> {
        if alpha.order() + extra > self.max_order + 2 {
            return Err(Error::OrderExceeded {
                requested: alpha.order() + extra,
                max: self.max_order + 2,
            });
        }
        if alpha.order() > self.max_order {
            return Err(Error::OrderExceeded {
                requested: alpha.order(),
                max: self.max_order,
            });
        }
        Ok(())
    }

    /// `dt^order` of the raw displacement at sample `k`: exact V/A
    /// substitutions, stencils on A beyond second order.
    fn base_dt(&self, order: u32, k: usize) -> Result<Arc<VectorField2>> {
        let sample = self.history.get(k);
        match order {
            0 => Ok(Arc::new(sample.y.clone())),
            1 => Ok(Arc::new(sample.v.clone())),
            2 => Ok(Arc::new(sample.a.clone())),
            m => {
                let d = m - 2;
                self.history.check_window(k, STENCIL_RADIUS)?;
                let coeffs = stencil_coefficients(d);
                let dt_s = self.history.dt_s();
                let scale = dt_s.powi(d as i32);
                let mut acc = VectorField2::zeros(&self.grid);
                for (w, c) in coeffs.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    let idx = k + w - STENCIL_RADIUS;
                    acc += &self.history.get(idx).a.scaled(c / scale);
                }
                Ok(Arc::new(acc))
            }
        }
    }

    /// Canonical word at sample `k`, with memoization.
    fn eval(&self, alpha: MultiIndex, k: usize) -> Result<Arc<VectorField2>> {
        if let Some(hit) = self.cache.borrow().get(&(alpha, k)) {
            return Ok(hit.clone());
        }
        let c = alpha.0;
        let out: VectorField2 = if c[GEN_SCALE] > 0 {
            let inner = alpha.drop_one(GEN_SCALE);
            // Sc F = t dt F + y . grad F - F, with dt re-expanded through
            // the remaining scalings: dt Sc^m = (Sc + 1)^m dt.
            let m = inner.0[GEN_SCALE] as u32;
            let mut dt_f = VectorField2::zeros(&self.grid);
            for j in 0..=m {
                let w = binomial(m, j);
                let mut idx = inner;
                idx.0[GEN_SCALE] = j as u8;
                idx.0[GEN_T] += 1;
                dt_f += &self.eval(idx, k)?.scaled(w);
            }
            let f = self.eval(inner, k)?;
            let t = self.history.get(k).t;
            let mut out = dt_f.scaled(t);
            out += &VectorField2::new(
                radial_scale(&self.grid, &f.comps[0]),
                radial_scale(&self.grid, &f.comps[1]),
            );
            out += &f.scaled(-1.0);
            out
        } else if c[GEN_ROT] > 0 {
            let f = self.eval(alpha.drop_one(GEN_ROT), k)?;
            rotate_vector(&self.grid, &f)
        } else if c[GEN_X2] > 0 {
            let f = self.eval(alpha.drop_one(GEN_X2), k)?;
            VectorField2::new(f.comps[0].deriv(Axis2::A2), f.comps[1].deriv(Axis2::A2))
        } else if c[GEN_X1] > 0 {
            let f = self.eval(alpha.drop_one(GEN_X1), k)?;
            VectorField2::new(f.comps[0].deriv(Axis2::A1), f.comps[1].deriv(Axis2::A1))
        } else {
            return match self.base_dt(c[GEN_T] as u32, k) {
                Ok(v) => {
                    self.cache.borrow_mut().insert((alpha, k), v.clone());
                    Ok(v)
                }
                Err(e) => Err(e),
            };
        };
        let arc = Arc::new(out);
        self.cache.borrow_mut().insert((alpha, k), arc.clone());
        Ok(arc)
    }

    /// Scalar word applied to the solved pressure: `Om p = dtheta p`,
    /// `Sc p = S p = t dt p + y . grad p`; time derivatives by stencil.
    pub fn gamma_p(&self, alpha: MultiIndex) -> Result<Arc<ScalarField>> {
        self.check_order(alpha, 0)?;
        self.eval_p(alpha, self.center)
    }

    fn base_dt_p(&self, order: u32, k: usize) -> Result<Arc<ScalarField>> {
        if order == 0 {
            return Ok(Arc::new(self.history.get(k).p.clone()));
        }
        self.history.check_window(k, STENCIL_RADIUS)?;
        let coeffs = stencil_coefficients(order);
        let scale = self.history.dt_s().powi(order as i32);
        let mut acc = ScalarField::zeros(&self.grid);
        for (w, c) in coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let idx = k + w - STENCIL_RADIUS;
            acc += &self.history.get(idx).p.scaled(c / scale);
        }
        Ok(Arc::new(acc))
    }

    fn eval_p(&self, alpha: MultiIndex, k: usize) -> Result<Arc<ScalarField>> {
        if let Some(hit) = self.cache_p.borrow().get(&(alpha, k)) {
            return Ok(hit.clone());
        }
        let c = alpha.0;
        let out: ScalarField = if c[GEN_SCALE] > 0 {
            let inner = alpha.drop_one(GEN_SCALE);
            let m = inner.0[GEN_SCALE] as u32;
            let mut dt_f = ScalarField::zeros(&self.grid);
            for j in 0..=m {
                let w = binomial(m, j);
                let mut idx = inner;
                idx.0[GEN_SCALE] = j as u8;
                idx.0[GEN_T] += 1;
                dt_f += &self.eval_p(idx, k)?.scaled(w);
            }
            let f = self.eval_p(inner, k)?;
            let t = self.history.get(k).t;
            // Scalar rule: S p (no -1 shift).
            &dt_f.scaled(t) + &radial_scale(&self.grid, &f)
        } else if c[GEN_ROT] > 0 {
            let f = self.eval_p(alpha.drop_one(GEN_ROT), k)?;
            dtheta(&self.grid, &f)
        } else if c[GEN_X2] > 0 {
            self.eval_p(alpha.drop_one(GEN_X2), k)?.deriv(Axis2::A2)
        } else if c[GEN_X1] > 0 {
            self.eval_p(alpha.drop_one(GEN_X1), k)?.deriv(Axis2::A1)
        } else {
            return match self.base_dt_p(c[GEN_T] as u32, k) {
                Ok(v) => {
                    self.cache_p.borrow_mut().insert((alpha, k), v.clone());
                    Ok(v)
                }
                Err(e) => Err(e),
            };
        };
        let arc = Arc::new(out);
        self.cache_p.borrow_mut().insert((alpha, k), arc.clone());
        Ok(arc)
    }
}

impl JetSource for HistoryJet<'_> {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn time(&self) -> f64 {
        self.history.get(self.center).t
    }

    fn max_order(&self) -> usize {
        self.max_order
    }

    fn gamma_y(&self, alpha: MultiIndex) -> Result<Arc<VectorField2>> {
        self.check_order(alpha, 0)?;
        self.eval(alpha, self.center)
    }

    fn dt_gamma_y(&self, alpha: MultiIndex, m: u32) -> Result<Arc<VectorField2>> {
        self.check_order(alpha, m as usize)?;
        // dt Sc^s = (Sc + 1)^s dt, applied m times.
        let s = alpha.0[GEN_SCALE] as u32;
        let mut acc = VectorField2::zeros(&self.grid);
        match m {
            0 => return self.eval(alpha, self.center),
            1 => {
                for j in 0..=s {
                    let w = binomial(s, j);
                    let mut idx = alpha;
                    idx.0[GEN_SCALE] = j as u8;
                    idx.0[GEN_T] += 1;
                    acc += &self.eval(idx, self.center)?.scaled(w);
                }
            }
            2 => {
                for j in 0..=s {
                    for l in 0..=j {
                        let w = binomial(s, j) * binomial(j, l);
                        let mut idx = alpha;
                        idx.0[GEN_SCALE] = l as u8;
                        idx.0[GEN_T] += 2;
                        acc += &self.eval(idx, self.center)?.scaled(w);
                    }
                }
            }
            _ => panic!("dt_gamma_y supports m <= 2"),
        }
        Ok(Arc::new(acc))
    }
}

/// Space-time first derivatives of a canonical entry.
pub struct DJet {
    pub dt: VectorField2,
    pub dx: [VectorField2; 2],
}

pub fn d_gamma<J: JetSource>(jet: &J, alpha: MultiIndex) -> Result<DJet> {
    let g = jet.gamma_y(alpha)?;
    let dt = jet.dt_gamma_y(alpha, 1)?;
    let dx = [
        VectorField2::new(g.comps[0].deriv(Axis2::A1), g.comps[1].deriv(Axis2::A1)),
        VectorField2::new(g.comps[0].deriv(Axis2::A2), g.comps[1].deriv(Axis2::A2)),
    ];
    Ok(DJet { dt: dt.as_ref().clone(), dx })
}

/// Distinct second derivatives with their multiplicities in `|D^2 f|^2`
/// (mixed pairs count twice).
pub fn d2_gamma<J: JetSource>(
    jet: &J,
    alpha: MultiIndex,
) -> Result<Vec<(f64, VectorField2)>> {
    let g = jet.gamma_y(alpha)?;
    let dt = jet.dt_gamma_y(alpha, 1)?;
    let dtt = jet.dt_gamma_y(alpha, 2)?;
    let sd = |f: &VectorField2, axis: Axis2| {
        VectorField2::new(f.comps[0].deriv(axis), f.comps[1].deriv(axis))
    };
    let d1 = sd(&g, Axis2::A1);
    let out = vec![
        (1.0, dtt.as_ref().clone()),
        (2.0, sd(&dt, Axis2::A1)),
        (2.0, sd(&dt, Axis2::A2)),
        (1.0, sd(&d1, Axis2::A1)),
        (2.0, sd(&d1, Axis2::A2)),
        (1.0, sd(&sd(&g, Axis2::A2), Axis2::A2)),
    ];
    Ok(out)
}

/// `(dtt - lap) Gamma^alpha Y`.
pub fn wave_residual<J: JetSource>(jet: &J, alpha: MultiIndex) -> Result<VectorField2> {
    let dtt = jet.dt_gamma_y(alpha, 2)?;
    let g = jet.gamma_y(alpha)?;
    Ok(&dtt.as_ref().clone() - &g.laplacian())
}

/// Residual of the commuted constraint: `div Gamma^alpha Y` minus the
/// weighted bilinear sum over `beta + gamma = alpha` of
/// `d1 G^beta Y^2 d2 G^gamma Y^1 - d1 G^gamma Y^1 d2 G^beta Y^2`.
pub fn struc2_residual<J: JetSource>(jet: &J, alpha: MultiIndex) -> Result<ScalarField> {
    let g = jet.gamma_y(alpha)?;
    let mut resid = g.divergence();
    for (beta, gamma, w) in decompositions(alpha) {
        let gb = jet.gamma_y(beta)?;
        let gg = jet.gamma_y(gamma)?;
        let t1 = gb.comps[1]
            .deriv(Axis2::A1)
            .mul_pointwise(&gg.comps[0].deriv(Axis2::A2));
        let t2 = gg.comps[0]
            .deriv(Axis2::A1)
            .mul_pointwise(&gb.comps[1].deriv(Axis2::A2));
        resid += &(&t1 - &t2).scaled(-w);
    }
    Ok(resid)
}
