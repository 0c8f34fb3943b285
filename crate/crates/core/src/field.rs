//! Sampled fields on a shared grid and the pointwise algebra of the flow
//! map: gradients in the convention `(grad u)_{ij} = du^i/dy^j`, 2x2
//! determinant and adjugate inverse, perp operators, and the good-derivative
//! combination `omega_j dt + d_j`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{Axis2, Grid};

#[derive(Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    pub data: Array2<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        ScalarField {
            grid: grid.clone(),
            data: Array2::zeros((grid.n(), grid.n())),
        }
    }

    pub fn from_array(grid: &Arc<Grid>, data: Array2<f64>) -> Self {
        assert_eq!(data.dim(), (grid.n(), grid.n()));
        ScalarField { grid: grid.clone(), data }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &Arc<Grid>, f: F) -> Self {
        let n = grid.n();
        let mut data = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                data[[i, j]] = f(grid.coord(i), grid.coord(j));
            }
        }
        ScalarField { grid: grid.clone(), data }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn deriv(&self, axis: Axis2) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            data: self.grid.derivative(&self.data, axis),
        }
    }

    pub fn laplacian(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            data: self.grid.laplacian(&self.data),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid.l2_norm(&self.data)
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.grid.mean(&self.data)
    }

    /// Pointwise product followed by 2/3-rule dealiasing.
    pub fn mul_dealiased(&self, other: &ScalarField) -> ScalarField {
        let prod = &self.data * &other.data;
        ScalarField {
            grid: self.grid.clone(),
            data: self.grid.dealias(&prod),
        }
    }

    /// Plain pointwise product (for quadrature weights and cutoff masks).
    pub fn mul_pointwise(&self, other: &ScalarField) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            data: &self.data * &other.data,
        }
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            data: self.data.mapv(|v| c * v),
        }
    }

    pub fn dealias(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            data: self.grid.dealias(&self.data),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            data: &self.data - &rhs.data,
        }
    }
}

impl AddAssign<&ScalarField> for ScalarField {
    fn add_assign(&mut self, rhs: &ScalarField) {
        self.data += &rhs.data;
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, c: f64) -> ScalarField {
        self.scaled(c)
    }
}

#[derive(Clone)]
pub struct VectorField2 {
    pub comps: [ScalarField; 2],
}

impl VectorField2 {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        VectorField2 {
            comps: [ScalarField::zeros(grid), ScalarField::zeros(grid)],
        }
    }

    pub fn new(c1: ScalarField, c2: ScalarField) -> Self {
        VectorField2 { comps: [c1, c2] }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.comps[0].grid()
    }

    pub fn c(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn divergence(&self) -> ScalarField {
        &self.comps[0].deriv(Axis2::A1) + &self.comps[1].deriv(Axis2::A2)
    }

    /// `perp-div u = -d2 u^1 + d1 u^2` (so that perp_div(perp_grad f) = lap f).
    pub fn perp_div(&self) -> ScalarField {
        &self.comps[1].deriv(Axis2::A1) - &self.comps[0].deriv(Axis2::A2)
    }

    pub fn laplacian(&self) -> VectorField2 {
        VectorField2::new(self.comps[0].laplacian(), self.comps[1].laplacian())
    }

    pub fn scaled(&self, c: f64) -> VectorField2 {
        VectorField2::new(self.comps[0].scaled(c), self.comps[1].scaled(c))
    }

    pub fn l2_norm(&self) -> f64 {
        (self.comps[0].l2_norm().powi(2) + self.comps[1].l2_norm().powi(2)).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps[0].sup_norm().max(self.comps[1].sup_norm())
    }

    pub fn is_finite(&self) -> bool {
        self.comps[0].is_finite() && self.comps[1].is_finite()
    }
}

impl Add for &VectorField2 {
    type Output = VectorField2;
    fn add(self, rhs: &VectorField2) -> VectorField2 {
        VectorField2::new(&self.comps[0] + &rhs.comps[0], &self.comps[1] + &rhs.comps[1])
    }
}

impl Sub for &VectorField2 {
    type Output = VectorField2;
    fn sub(self, rhs: &VectorField2) -> VectorField2 {
        VectorField2::new(&self.comps[0] - &rhs.comps[0], &self.comps[1] - &rhs.comps[1])
    }
}

impl AddAssign<&VectorField2> for VectorField2 {
    fn add_assign(&mut self, rhs: &VectorField2) {
        self.comps[0] += &rhs.comps[0];
        self.comps[1] += &rhs.comps[1];
    }
}

#[derive(Clone)]
pub struct Matrix2Field {
    /// Entries `m[i][j]`, row `i`, column `j`.
    pub m: [[ScalarField; 2]; 2],
}

impl Matrix2Field {
    pub fn identity(grid: &Arc<Grid>) -> Self {
        let one = ScalarField::from_array(grid, Array2::ones((grid.n(), grid.n())));
        Matrix2Field {
            m: [
                [one.clone(), ScalarField::zeros(grid)],
                [ScalarField::zeros(grid), one],
            ],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.m[0][0].grid()
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.m[i][j]
    }

    pub fn transpose(&self) -> Matrix2Field {
        Matrix2Field {
            m: [
                [self.m[0][0].clone(), self.m[1][0].clone()],
                [self.m[0][1].clone(), self.m[1][1].clone()],
            ],
        }
    }

    pub fn trace(&self) -> ScalarField {
        &self.m[0][0] + &self.m[1][1]
    }

    /// Pointwise matrix-vector product, dealiased.
    pub fn apply(&self, v: &VectorField2) -> VectorField2 {
        VectorField2::new(
            &self.m[0][0].mul_dealiased(&v.comps[0]) + &self.m[0][1].mul_dealiased(&v.comps[1]),
            &self.m[1][0].mul_dealiased(&v.comps[0]) + &self.m[1][1].mul_dealiased(&v.comps[1]),
        )
    }

    /// Pointwise matrix-matrix product, dealiased.
    pub fn matmul(&self, other: &Matrix2Field) -> Matrix2Field {
        let grid = self.grid().clone();
        let mut out = Matrix2Field::identity(&grid);
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = &self.m[i][0].mul_dealiased(&other.m[0][j])
                    + &self.m[i][1].mul_dealiased(&other.m[1][j]);
            }
        }
        out
    }

    pub fn add_identity(&self) -> Matrix2Field {
        let mut out = self.clone();
        out.m[0][0].data += 1.0;
        out.m[1][1].data += 1.0;
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(ScalarField::sup_norm)
            .fold(0.0, f64::max)
    }
}

/// Gradient in the convention row `i`, column `j` = `du^i/dy^j`.
pub fn grad(u: &VectorField2) -> Matrix2Field {
    Matrix2Field {
        m: [
            [u.comps[0].deriv(Axis2::A1), u.comps[0].deriv(Axis2::A2)],
            [u.comps[1].deriv(Axis2::A1), u.comps[1].deriv(Axis2::A2)],
        ],
    }
}

/// Pointwise determinant `ad - bc`. No dealiasing: this is pointwise
/// algebra used by diagnostics; solver assemblies that feed products back
/// into spectral operators dealias at that boundary instead.
pub fn det2(m: &Matrix2Field) -> ScalarField {
    &m.m[0][0].mul_pointwise(&m.m[1][1]) - &m.m[0][1].mul_pointwise(&m.m[1][0])
}

/// Exact adjugate-over-determinant inverse, evaluated pointwise (no
/// dealiasing: `1/det` is not band-limited, and callers that feed the
/// result into spectral products dealias there). Requires `|det| >= 0.5`
/// everywhere (small-displacement regime).
pub fn cof_inverse(m: &Matrix2Field) -> Result<Matrix2Field> {
    let det = &(&m.m[0][0].data * &m.m[1][1].data) - &(&m.m[0][1].data * &m.m[1][0].data);
    let min_det = det.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if min_det < 0.5 {
        return Err(Error::NearSingular { min_det });
    }
    let grid = m.grid();
    let entry = |num: &Array2<f64>, sign: f64| {
        ScalarField::from_array(grid, num / &det * sign)
    };
    Ok(Matrix2Field {
        m: [
            [entry(&m.m[1][1].data, 1.0), entry(&m.m[0][1].data, -1.0)],
            [entry(&m.m[1][0].data, -1.0), entry(&m.m[0][0].data, 1.0)],
        ],
    })
}

/// Incompressibility defect `div Y + det(grad Y)`; zero iff
/// `det(I + grad Y) = 1` pointwise.
pub fn constraint_residual(y: &VectorField2) -> ScalarField {
    let g = grad(y);
    &y.divergence() + &det2(&g)
}

/// `perp-grad f = (-d2 f, d1 f)`.
pub fn perp_grad(f: &ScalarField) -> VectorField2 {
    VectorField2::new(f.deriv(Axis2::A2).scaled(-1.0), f.deriv(Axis2::A1))
}

/// Good derivative `omega_j dt g + d_j g` sampled pointwise; `omega` is the
/// zero vector at the origin sample.
pub fn good_derivative(dt_g: &ScalarField, dj_g: &ScalarField, j: Axis2) -> ScalarField {
    let grid = dt_g.grid();
    let omega = grid.omega(j);
    ScalarField::from_array(grid, &dt_g.data * omega + &dj_g.data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::random_band_limited_field;
    use crate::testutil::fd8_derivative;

    fn grid64() -> Arc<Grid> {
        Grid::new(64, 8.0).unwrap()
    }

    fn random_vector(grid: &Arc<Grid>, max_mode: i64, seed: u64) -> VectorField2 {
        VectorField2::new(
            random_band_limited_field(grid, max_mode, seed),
            random_band_limited_field(grid, max_mode, seed + 1000),
        )
    }

    #[test]
    fn grad_of_zero_is_zero() {
        let grid = grid64();
        let g = grad(&VectorField2::zeros(&grid));
        assert_eq!(g.sup_norm(), 0.0);
    }

    #[test]
    fn grad_of_windowed_shear() {
        // u = (a*y2*window, 0): entry (1,2) is close to `a` in the window interior.
        let grid = Grid::new(128, 8.0).unwrap();
        let a = 0.7;
        let u = VectorField2::new(
            ScalarField::from_fn(&grid, |y1, y2| {
                let r2 = y1 * y1 + y2 * y2;
                a * y2 * (-r2 / 4.0).exp()
            }),
            ScalarField::zeros(&grid),
        );
        let g = grad(&u);
        let center = grid.n() / 2;
        let got = g.entry(0, 1).data[[center, center]];
        assert!((got - a).abs() <= 1e-6, "shear entry {got} vs {a}");
    }

    #[test]
    fn grad_matches_fd8() {
        let grid = Grid::new(128, 8.0).unwrap();
        let u = random_vector(&grid, 6, 3);
        let g = grad(&u);
        let fd = fd8_derivative(&grid, &u.comps[0].data, Axis2::A2);
        let err = (&g.entry(0, 1).data - &fd)
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max);
        let h = grid.spacing();
        let kmax = 6.0 * std::f64::consts::PI / 8.0;
        let scale = g.entry(0, 1).sup_norm();
        assert!(err <= 0.5 * (kmax * h).powi(8) / h * scale);
    }

    #[test]
    fn det_and_inverse_of_identity() {
        let grid = grid64();
        let id = Matrix2Field::identity(&grid);
        let d = det2(&id);
        assert!(d.data.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let inv = cof_inverse(&id).unwrap();
        assert!((&inv.m[0][0] - &id.m[0][0]).sup_norm() < 1e-13);
        assert!(inv.m[0][1].sup_norm() < 1e-13);
    }

    #[test]
    fn shear_matrix_inverse() {
        let grid = grid64();
        let mut m = Matrix2Field::identity(&grid);
        let a = ScalarField::from_array(&grid, Array2::from_elem((64, 64), 0.3));
        m.m[0][1] = a.clone();
        let d = det2(&m);
        assert!(d.data.iter().all(|v| (v - 1.0).abs() < 1e-13));
        let inv = cof_inverse(&m).unwrap();
        assert!((&inv.m[0][1] + &a).sup_norm() < 1e-13);
        assert!((inv.m[0][0].data[[0, 0]] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn inverse_multiplies_back_to_identity() {
        let grid = grid64();
        // Well-conditioned random matrix: I + small smooth perturbation.
        let mut m = Matrix2Field::identity(&grid);
        for i in 0..2 {
            for j in 0..2 {
                let p = random_band_limited_field(&grid, 6, 17 + (2 * i + j) as u64);
                m.m[i][j] += &p.scaled(0.1);
            }
        }
        let inv = cof_inverse(&m).unwrap();
        // Multiply back pointwise (no dealiasing, to isolate the algebra).
        let mut max_err = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Array2::zeros((64, 64));
                for k in 0..2 {
                    acc += &(&m.m[i][k].data * &inv.m[k][j].data);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                let err = acc.iter().map(|v| (v - target).abs()).fold(0.0f64, f64::max);
                max_err = max_err.max(err);
            }
        }
        // Pointwise adjugate inverse is exact up to round-off; dealiasing in
        // the inverse entries adds a small spectral truncation.
        assert!(max_err <= 1e-10, "multiply-back error {max_err}");
    }

    #[test]
    fn expansion_identity_pointwise() {
        // det(I + G) - 1 - tr(G) - det(G) = 0 for any 2x2 G, up to round-off.
        let grid = grid64();
        let u = random_vector(&grid, 10, 29);
        let g = grad(&u);
        let full = {
            let x = g.add_identity();
            let a = &x.m[0][0].data * &x.m[1][1].data;
            let b = &x.m[0][1].data * &x.m[1][0].data;
            a - b
        };
        let det_g = &(&g.m[0][0].data * &g.m[1][1].data) - &(&g.m[0][1].data * &g.m[1][0].data);
        let resid = &full - &(&g.m[0][0].data + &g.m[1][1].data) - det_g - 1.0;
        let err = resid.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        assert!(err <= 1e-12, "expansion identity residual {err}");
    }

    #[test]
    fn paper_inverse_display_is_transpose_of_true_inverse() {
        // Under the row convention (grad Y)_{ij} = dY^i/dy^j, the displayed
        // matrix [[1+d2Y^2, -d1Y^2], [-d2Y^1, 1+d1Y^1]] equals the transpose
        // of the adjugate inverse whenever det(grad X) = 1.
        let grid = grid64();
        let psi = random_band_limited_field(&grid, 8, 37).scaled(0.05);
        // Divergence-free Y keeps det(grad X) = 1 + det(grad Y) close to 1,
        // so compare against adjugate / det rather than assuming det = 1.
        let y = perp_grad(&psi);
        let gx = grad(&y).add_identity();
        let inv = cof_inverse(&gx).unwrap();
        let det = det2(&gx);
        // Displayed matrix, divided by det to compare shape with the true inverse.
        let gy = grad(&y);
        let displayed = [
            [&gy.m[1][1].data + 1.0, gy.m[1][0].data.mapv(|v| -v)],
            [gy.m[0][1].data.mapv(|v| -v), &gy.m[0][0].data + 1.0],
        ];
        let mut max_err = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let scaled = &displayed[i][j] / &det.data;
                let err = (&scaled - &inv.m[j][i].data)
                    .iter()
                    .map(|v| v.abs())
                    .fold(0.0f64, f64::max);
                max_err = max_err.max(err);
            }
        }
        assert!(max_err <= 1e-8, "transpose relation residual {max_err}");
        // And it differs from the true inverse itself (off-diagonals swap).
        let off_gap = (&(&gy.m[1][0].data.mapv(|v| -v) / &det.data) - &inv.m[0][1].data)
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max);
        assert!(off_gap > 1e-6, "display should differ from the true inverse");
    }

    #[test]
    fn constraint_residual_zero_for_zero() {
        let grid = grid64();
        let r = constraint_residual(&VectorField2::zeros(&grid));
        assert_eq!(r.sup_norm(), 0.0);
    }

    #[test]
    fn constraint_residual_of_perp_grad_is_quadratic() {
        let grid = grid64();
        let psi = random_band_limited_field(&grid, 8, 41);
        for eps in [1e-2, 1e-3] {
            let y = perp_grad(&psi.scaled(eps));
            let r = constraint_residual(&y);
            // div Y = 0, so the residual is exactly det(grad Y) = O(eps^2).
            let g = grad(&y);
            let det = det2(&g);
            let gap = (&r - &det).sup_norm();
            assert!(gap <= 1e-12 * det.sup_norm().max(1e-300) + 1e-14);
            assert!(r.sup_norm() <= 10.0 * eps * eps * psi.sup_norm().powi(2) * 100.0);
        }
    }

    #[test]
    fn perp_identities() {
        let grid = grid64();
        let f = random_band_limited_field(&grid, 12, 53);
        let pg = perp_grad(&f);
        let lap = pg.perp_div();
        let rel = (&lap - &f.laplacian()).l2_norm() / f.laplacian().l2_norm();
        assert!(rel <= 1e-10, "perp_div(perp_grad) vs laplacian: {rel}");

        let g = VectorField2::new(f.deriv(Axis2::A1), f.deriv(Axis2::A2));
        let zero = g.perp_div();
        assert!(zero.l2_norm() <= 1e-10 * f.l2_norm());
    }

    #[test]
    fn good_derivative_basics() {
        let grid = grid64();
        let zero = good_derivative(
            &ScalarField::zeros(&grid),
            &ScalarField::zeros(&grid),
            Axis2::A1,
        );
        assert_eq!(zero.sup_norm(), 0.0);

        // Consistency with direct pointwise assembly.
        let a = random_band_limited_field(&grid, 10, 61);
        let b = random_band_limited_field(&grid, 10, 62);
        let gd = good_derivative(&a, &b, Axis2::A2);
        let omega = grid.omega(Axis2::A2);
        let direct = &a.data * omega + &b.data;
        let err = (&gd.data - &direct).iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn linearity_scalings() {
        let grid = grid64();
        let u = random_vector(&grid, 10, 71);
        let c = 2.5;
        let uc = VectorField2::new(u.comps[0].scaled(c), u.comps[1].scaled(c));
        // grad scales by c.
        let gap = (&grad(&uc).m[0][1] - &grad(&u).m[0][1].scaled(c)).sup_norm();
        assert!(gap <= 1e-12);
        // det scales by c^2.
        let d1 = det2(&grad(&uc));
        let d2 = det2(&grad(&u)).scaled(c * c);
        assert!((&d1 - &d2).sup_norm() <= 1e-10 * d1.sup_norm().max(1e-300));
        // perp ops scale by c.
        let p1 = perp_grad(&u.comps[0].scaled(c));
        let p2 = perp_grad(&u.comps[0]).scaled(c);
        assert!((&p1 - &p2).sup_norm() <= 1e-12);
    }
}
