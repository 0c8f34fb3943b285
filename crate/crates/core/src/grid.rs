//! Periodic-box discretization and Fourier-side operators.
//!
//! The computational domain is the square `[-L, L)^2` sampled on an `n x n`
//! uniform lattice, with wavenumbers `k = (pi/L) * m` for signed modes
//! `m in {-n/2, ..., n/2 - 1}`. All differential and inverse operators act
//! as Fourier multipliers; inverse operators zero the mean mode and require
//! (near) mean-free input. Products of fields are dealiased with the 2/3
//! rule by the field layer on top of this module.

use std::sync::{Arc, OnceLock};

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::cutoff::{lp_chi, lp_phi};
use crate::error::{Error, Result};

/// Worker pool for row-parallel transforms, sized once from the
/// `ELASTOWAVE_THREADS` environment variable (default: single-threaded).
/// Rows are independent, so results are bit-identical for any thread count.
fn thread_pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let n: usize = std::env::var("ELASTOWAVE_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(1);
        if n <= 1 {
            None
        } else {
            rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()
        }
    })
    .as_ref()
}

/// Relative factor for the mean-free precondition of inverse operators.
pub const MEAN_TOL_FACTOR: f64 = 1e-10;

/// Spatial axis of the box. `A1` varies along the first array index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis2 {
    A1,
    A2,
}

/// Periodic grid together with its transform plan and cached geometry.
pub struct Grid {
    n: usize,
    half_width: f64,
    h: f64,
    coord: Vec<f64>,
    /// Signed wavenumber per index; Nyquist stored with positive sign.
    k: Vec<f64>,
    /// Wavenumbers for odd-symbol multipliers; Nyquist zeroed to keep
    /// derivatives of real fields real.
    k_deriv: Vec<f64>,
    r: Array2<f64>,
    omega: [Array2<f64>; 2],
    /// Coordinates `y^i` tapered to zero near the box edge (plateau to
    /// 0.82 L, zero from 0.98 L): the rotation and scaling weights must be
    /// periodic-smooth, and monitored solutions carry only tail-level
    /// amplitude out there.
    coord_taper: [Array2<f64>; 2],
    dealias_keep: i64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("half_width", &self.half_width)
            .finish()
    }
}

impl Grid {
    pub fn new(n: usize, half_width: f64) -> Result<Arc<Grid>> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::Config {
                field: "grid.n".into(),
                reason: format!("n = {n} must be even and >= 16"),
            });
        }
        if !(half_width > 0.0) {
            return Err(Error::Config {
                field: "grid.half_width".into(),
                reason: "L must be positive".into(),
            });
        }
        let h = 2.0 * half_width / n as f64;
        let coord: Vec<f64> = (0..n).map(|i| -half_width + i as f64 * h).collect();
        let base = std::f64::consts::PI / half_width;
        let mut k = vec![0.0; n];
        let mut k_deriv = vec![0.0; n];
        for (m, slot) in k.iter_mut().enumerate() {
            let signed = if m <= n / 2 { m as i64 } else { m as i64 - n as i64 };
            *slot = base * signed as f64;
            k_deriv[m] = if m == n / 2 { 0.0 } else { *slot };
        }
        let mut r = Array2::zeros((n, n));
        let mut w1 = Array2::zeros((n, n));
        let mut w2 = Array2::zeros((n, n));
        let mut t1 = Array2::zeros((n, n));
        let mut t2 = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let (y1, y2) = (coord[i], coord[j]);
                let rr = (y1 * y1 + y2 * y2).sqrt();
                r[[i, j]] = rr;
                if rr > 0.0 {
                    w1[[i, j]] = y1 / rr;
                    w2[[i, j]] = y2 / rr;
                }
                let taper =
                    1.0 - crate::cutoff::smooth_step((rr / half_width - 0.82) / 0.16);
                t1[[i, j]] = y1 * taper;
                t2[[i, j]] = y2 * taper;
            }
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid {
            n,
            half_width,
            h,
            coord,
            k,
            k_deriv,
            r,
            omega: [w1, w2],
            coord_taper: [t1, t2],
            dealias_keep: (n as i64) / 3,
            fwd,
            inv,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// Coordinate of sample `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        self.coord[i]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coord
    }

    pub fn radius(&self) -> &Array2<f64> {
        &self.r
    }

    /// Unit radial direction; zero vector at the origin sample.
    pub fn omega(&self, axis: Axis2) -> &Array2<f64> {
        match axis {
            Axis2::A1 => &self.omega[0],
            Axis2::A2 => &self.omega[1],
        }
    }

    /// Coordinate field `y^axis`, smoothly tapered to zero at the box edge.
    pub fn tapered_coord(&self, axis: Axis2) -> &Array2<f64> {
        match axis {
            Axis2::A1 => &self.coord_taper[0],
            Axis2::A2 => &self.coord_taper[1],
        }
    }

    pub fn wavenumber(&self, m: usize) -> f64 {
        self.k[m]
    }

    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI / self.half_width * (self.n as f64) / 2.0
    }

    fn fft_rows(fft: &Arc<dyn Fft<f64>>, a: &mut Array2<Complex64>) {
        match thread_pool() {
            Some(pool) => pool.install(|| {
                use rayon::prelude::*;
                a.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut row| {
                    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                    let slice = row.as_slice_mut().expect("row-major layout");
                    fft.process_with_scratch(slice, &mut scratch);
                });
            }),
            None => {
                let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                for mut row in a.rows_mut() {
                    let slice = row.as_slice_mut().expect("row-major layout");
                    fft.process_with_scratch(slice, &mut scratch);
                }
            }
        }
    }

    /// In-place 2D transform (rows, then columns via a transposed pass).
    /// The inverse applies the 1/n^2 normalization.
    pub fn fft2(&self, a: &mut Array2<Complex64>, forward: bool) {
        let fft = if forward { &self.fwd } else { &self.inv };
        Self::fft_rows(fft, a);
        let mut at = a.t().as_standard_layout().into_owned();
        Self::fft_rows(fft, &mut at);
        a.assign(&at.t());
        if !forward {
            let scale = 1.0 / (self.n * self.n) as f64;
            a.mapv_inplace(|z| z * scale);
        }
    }

    pub fn forward(&self, data: &Array2<f64>) -> Array2<Complex64> {
        let mut hat = data.mapv(|v| Complex64::new(v, 0.0));
        self.fft2(&mut hat, true);
        hat
    }

    pub fn inverse_real(&self, mut hat: Array2<Complex64>) -> Array2<f64> {
        self.fft2(&mut hat, false);
        hat.mapv(|z| z.re)
    }

    /// Applies `f(k1, k2) * hat` in place. `k1`, `k2` carry the odd-symbol
    /// (Nyquist-zeroed) values; use `kmag2` from the closure argument for
    /// even symbols.
    fn apply_multiplier<F>(&self, hat: &mut Array2<Complex64>, f: F)
    where
        F: Fn(f64, f64, f64) -> Complex64,
    {
        for ((i, j), v) in hat.indexed_iter_mut() {
            let k1 = self.k_deriv[i];
            let k2 = self.k_deriv[j];
            let kmag2 = self.k[i] * self.k[i] + self.k[j] * self.k[j];
            *v *= f(k1, k2, kmag2);
        }
    }

    pub fn derivative(&self, data: &Array2<f64>, axis: Axis2) -> Array2<f64> {
        let mut hat = self.forward(data);
        self.derivative_hat(&mut hat, axis);
        self.inverse_real(hat)
    }

    /// Derivative from an already-computed transform (shared forward pass).
    pub fn deriv_from_hat(&self, hat: &Array2<Complex64>, axis: Axis2) -> Array2<f64> {
        let mut h = hat.clone();
        self.derivative_hat(&mut h, axis);
        self.inverse_real(h)
    }

    pub fn laplacian_from_hat(&self, hat: &Array2<Complex64>) -> Array2<f64> {
        let mut h = hat.clone();
        self.apply_multiplier(&mut h, |_, _, kmag2| Complex64::new(-kmag2, 0.0));
        self.inverse_real(h)
    }

    /// `d_axis lap` from a shared transform.
    pub fn deriv_laplacian_from_hat(&self, hat: &Array2<Complex64>, axis: Axis2) -> Array2<f64> {
        let mut h = hat.clone();
        match axis {
            Axis2::A1 => {
                self.apply_multiplier(&mut h, |k1, _, kmag2| Complex64::new(0.0, -k1 * kmag2))
            }
            Axis2::A2 => {
                self.apply_multiplier(&mut h, |_, k2, kmag2| Complex64::new(0.0, -k2 * kmag2))
            }
        }
        self.inverse_real(h)
    }

    pub fn derivative_hat(&self, hat: &mut Array2<Complex64>, axis: Axis2) {
        match axis {
            Axis2::A1 => self.apply_multiplier(hat, |k1, _, _| Complex64::new(0.0, k1)),
            Axis2::A2 => self.apply_multiplier(hat, |_, k2, _| Complex64::new(0.0, k2)),
        }
    }

    pub fn laplacian(&self, data: &Array2<f64>) -> Array2<f64> {
        let mut hat = self.forward(data);
        self.apply_multiplier(&mut hat, |_, _, kmag2| Complex64::new(-kmag2, 0.0));
        self.inverse_real(hat)
    }

    pub fn mean(&self, data: &Array2<f64>) -> f64 {
        data.sum() / (self.n * self.n) as f64
    }

    /// L2 norm with cell-area quadrature.
    pub fn l2_norm(&self, data: &Array2<f64>) -> f64 {
        (data.iter().map(|v| v * v).sum::<f64>() * self.cell_area()).sqrt()
    }

    /// Same norm evaluated on the spectral side (Parseval).
    pub fn spectral_l2_norm(&self, hat: &Array2<Complex64>) -> f64 {
        let sum: f64 = hat.iter().map(|z| z.norm_sqr()).sum();
        (sum * self.cell_area()).sqrt() / (self.n as f64)
    }

    fn check_mean(&self, data: &Array2<f64>) -> Result<()> {
        let mean = self.mean(data);
        let tol = MEAN_TOL_FACTOR * self.l2_norm(data);
        if mean.abs() > tol {
            Err(Error::NonZeroMean { mean, tol })
        } else {
            Ok(())
        }
    }

    /// Solves `-lap u = f` with zero-mean `u`; requires mean-free `f`.
    pub fn inverse_laplacian(&self, data: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_mean(data)?;
        let mut hat = self.forward(data);
        self.apply_multiplier(&mut hat, |_, _, kmag2| {
            if kmag2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0 / kmag2, 0.0)
            }
        });
        Ok(self.inverse_real(hat))
    }

    /// `(-lap)^{-1/2} div u` via the symbol `i k . u(k) / |k|`.
    pub fn riesz_div(&self, u1: &Array2<f64>, u2: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_mean(u1)?;
        self.check_mean(u2)?;
        let h1 = self.forward(u1);
        let h2 = self.forward(u2);
        Ok(self.riesz_combine(&h1, &h2, false))
    }

    /// `(-lap)^{-1/2} (perp-div) u` via the symbol `i k^perp . u(k) / |k|`.
    pub fn riesz_curl(&self, u1: &Array2<f64>, u2: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_mean(u1)?;
        self.check_mean(u2)?;
        let h1 = self.forward(u1);
        let h2 = self.forward(u2);
        Ok(self.riesz_combine(&h1, &h2, true))
    }

    fn riesz_combine(
        &self,
        h1: &Array2<Complex64>,
        h2: &Array2<Complex64>,
        perp: bool,
    ) -> Array2<f64> {
        let n = self.n;
        let mut out = Array2::from_elem((n, n), Complex64::default());
        for ((i, j), v) in out.indexed_iter_mut() {
            let k1 = self.k_deriv[i];
            let k2 = self.k_deriv[j];
            let kmag = (self.k[i] * self.k[i] + self.k[j] * self.k[j]).sqrt();
            if kmag == 0.0 {
                continue;
            }
            let dot = if perp {
                -k2 * h1[[i, j]] + k1 * h2[[i, j]]
            } else {
                k1 * h1[[i, j]] + k2 * h2[[i, j]]
            };
            *v = Complex64::new(0.0, 1.0) * dot / kmag;
        }
        self.inverse_real(out)
    }

    /// Curl-free (gradient) part of `u`: symbol `k (k . u(k)) / |k|^2`.
    /// Fixes pure gradients and annihilates solenoidal fields.
    pub fn leray_gradient_part(
        &self,
        u1: &Array2<f64>,
        u2: &Array2<f64>,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        self.check_mean(u1)?;
        self.check_mean(u2)?;
        let h1 = self.forward(u1);
        let h2 = self.forward(u2);
        let n = self.n;
        let mut g1 = Array2::from_elem((n, n), Complex64::default());
        let mut g2 = Array2::from_elem((n, n), Complex64::default());
        for i in 0..n {
            for j in 0..n {
                let k1 = self.k_deriv[i];
                let k2 = self.k_deriv[j];
                let kmag2 = self.k[i] * self.k[i] + self.k[j] * self.k[j];
                if kmag2 == 0.0 {
                    continue;
                }
                let dot = (k1 * h1[[i, j]] + k2 * h2[[i, j]]) / kmag2;
                g1[[i, j]] = k1 * dot;
                g2[[i, j]] = k2 * dot;
            }
        }
        Ok((self.inverse_real(g1), self.inverse_real(g2)))
    }

    /// Zeroes modes with `|m| > n/3` in either axis (2/3-rule).
    pub fn dealias_hat(&self, hat: &mut Array2<Complex64>) {
        let n = self.n as i64;
        let keep = self.dealias_keep;
        for ((i, j), v) in hat.indexed_iter_mut() {
            let mi = if (i as i64) <= n / 2 { i as i64 } else { i as i64 - n };
            let mj = if (j as i64) <= n / 2 { j as i64 } else { j as i64 - n };
            if mi.abs() > keep || mj.abs() > keep {
                *v = Complex64::default();
            }
        }
    }

    pub fn dealias(&self, data: &Array2<f64>) -> Array2<f64> {
        let mut hat = self.forward(data);
        self.dealias_hat(&mut hat);
        self.inverse_real(hat)
    }

    /// Littlewood-Paley block `Delta_j f` via the multiplier `phi(2^{-j}|k|)`.
    pub fn lp_block(&self, data: &Array2<f64>, j: i32) -> Array2<f64> {
        let scale = (2.0f64).powi(-j);
        let mut hat = self.forward(data);
        self.apply_multiplier(&mut hat, |_, _, kmag2| {
            Complex64::new(lp_phi(scale * kmag2.sqrt()), 0.0)
        });
        self.inverse_real(hat)
    }

    /// Low-frequency part `S_j f = sum_{k <= j-1} Delta_k f`, including the mean.
    pub fn lp_low(&self, data: &Array2<f64>, j: i32) -> Array2<f64> {
        let scale = (2.0f64).powi(-j);
        let mut hat = self.forward(data);
        self.apply_multiplier(&mut hat, |_, _, kmag2| {
            Complex64::new(lp_chi(scale * kmag2.sqrt()), 0.0)
        });
        self.inverse_real(hat)
    }

    /// Dyadic indices `j` for which `Delta_j` can be nonzero on this grid.
    pub fn lp_j_range(&self) -> (i32, i32) {
        let k_min = std::f64::consts::PI / self.half_width;
        let k_max = self.max_wavenumber() * std::f64::consts::SQRT_2;
        let j_lo = (k_min.log2() - (8.0f64 / 3.0).log2()).floor() as i32 - 1;
        let j_hi = k_max.log2().ceil() as i32;
        (j_lo, j_hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::fd8_derivative;
    use ndarray::Array2;

    pub fn test_grid(n: usize, l: f64) -> Arc<Grid> {
        Grid::new(n, l).unwrap()
    }

    fn random_band_limited(grid: &Arc<Grid>, max_mode: i64, seed: u64) -> Array2<f64> {
        crate::synth::random_band_limited_field(grid, max_mode, seed).data
    }

    #[test]
    fn roundtrip_is_identity() {
        let grid = test_grid(64, 8.0);
        let f = random_band_limited(&grid, 20, 7);
        let back = grid.inverse_real(grid.forward(&f));
        let err = (&back - &f).iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        let scale = f.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        assert!(err <= 1e-12 * scale, "roundtrip error {err}");
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let grid = test_grid(32, 4.0);
        let f = Array2::from_elem((32, 32), 3.25);
        let d = grid.derivative(&f, Axis2::A1);
        assert!(d.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn derivative_of_single_mode() {
        let grid = test_grid(64, 8.0);
        let l = grid.half_width();
        let k = std::f64::consts::PI / l;
        let mut f = Array2::zeros((64, 64));
        let mut expect = Array2::zeros((64, 64));
        for i in 0..64 {
            for j in 0..64 {
                f[[i, j]] = (k * grid.coord(i)).sin();
                expect[[i, j]] = k * (k * grid.coord(i)).cos();
                let _ = j;
            }
        }
        let d = grid.derivative(&f, Axis2::A1);
        let err = (&d - &expect).iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        assert!(err <= 1e-10, "single-mode derivative error {err}");
    }

    #[test]
    fn derivative_matches_fd8_oracle() {
        let grid = test_grid(128, 8.0);
        // Smooth field: low modes only, so the FD truncation term dominates.
        let f = random_band_limited(&grid, 6, 11);
        for axis in [Axis2::A1, Axis2::A2] {
            let spectral = grid.derivative(&f, axis);
            let fd = fd8_derivative(&grid, &f, axis);
            let err = (&spectral - &fd).iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            let scale = spectral.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            // O(h^8) with k <= 6*pi/8: generous constant.
            let h = grid.spacing();
            let kmax = 6.0 * std::f64::consts::PI / 8.0;
            let bound = 0.5 * (kmax * h).powi(8) / h * scale;
            assert!(err <= bound, "fd8 mismatch: {err} > {bound}");
        }
    }

    #[test]
    fn inverse_laplacian_eigenfunction() {
        let grid = test_grid(64, 8.0);
        let l = grid.half_width();
        let k = std::f64::consts::PI / l;
        let mut f = Array2::zeros((64, 64));
        for i in 0..64 {
            for j in 0..64 {
                f[[i, j]] = (k * grid.coord(i)).sin();
                let _ = j;
            }
        }
        let u = grid.inverse_laplacian(&f).unwrap();
        let expect = f.mapv(|v| v / (k * k));
        let err = (&u - &expect).iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        assert!(err <= 1e-12, "eigenfunction error {err}");
    }

    #[test]
    fn inverse_laplacian_forward_oracle() {
        let grid = test_grid(96, 6.0);
        let f = random_band_limited(&grid, 30, 3);
        let u = grid.inverse_laplacian(&f).unwrap();
        let back = grid.laplacian(&u).mapv(|v| -v);
        let num = grid.l2_norm(&(&back - &f));
        let den = grid.l2_norm(&f);
        assert!(num / den <= 1e-10, "forward-oracle residual {}", num / den);
    }

    #[test]
    fn inverse_laplacian_rejects_nonzero_mean() {
        let grid = test_grid(32, 4.0);
        let f = Array2::from_elem((32, 32), 1.0);
        assert!(matches!(
            grid.inverse_laplacian(&f),
            Err(Error::NonZeroMean { .. })
        ));
    }

    #[test]
    fn riesz_div_annihilates_solenoidal() {
        let grid = test_grid(64, 8.0);
        let psi = random_band_limited(&grid, 18, 5);
        let u1 = grid.derivative(&psi, Axis2::A2).mapv(|v| -v);
        let u2 = grid.derivative(&psi, Axis2::A1);
        let out = grid.riesz_div(&u1, &u2).unwrap();
        let rel = grid.l2_norm(&out) / grid.l2_norm(&u1).max(1e-300);
        assert!(rel <= 1e-10, "riesz_div on perp-grad: {rel}");
    }

    #[test]
    fn riesz_div_matches_fourier_sum_oracle() {
        let grid = test_grid(64, 8.0);
        let u1 = random_band_limited(&grid, 18, 21);
        let u2 = random_band_limited(&grid, 18, 22);
        let out = grid.riesz_div(&u1, &u2).unwrap();
        // Oracle: |k|^{-1} |k . u(k)| summed directly in spectral space.
        let h1 = grid.forward(&u1);
        let h2 = grid.forward(&u2);
        let n = grid.n();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let k1 = grid.k_deriv[i];
                let k2 = grid.k_deriv[j];
                let kmag2 = grid.k[i] * grid.k[i] + grid.k[j] * grid.k[j];
                if kmag2 == 0.0 {
                    continue;
                }
                let dot = k1 * h1[[i, j]] + k2 * h2[[i, j]];
                sum += dot.norm_sqr() / kmag2;
            }
        }
        let oracle = (sum * grid.cell_area()).sqrt() / n as f64;
        let got = grid.l2_norm(&out);
        assert!(
            (got - oracle).abs() <= 1e-10 * oracle,
            "norm {got} vs oracle {oracle}"
        );
    }

    #[test]
    fn leray_fixes_gradients_and_kills_solenoidal() {
        let grid = test_grid(64, 8.0);
        let phi = random_band_limited(&grid, 18, 31);
        let g1 = grid.derivative(&phi, Axis2::A1);
        let g2 = grid.derivative(&phi, Axis2::A2);
        let (p1, p2) = grid.leray_gradient_part(&g1, &g2).unwrap();
        let err = grid.l2_norm(&(&p1 - &g1)) + grid.l2_norm(&(&p2 - &g2));
        assert!(err <= 1e-10 * grid.l2_norm(&g1), "gradient not fixed: {err}");

        let psi = random_band_limited(&grid, 18, 32);
        let s1 = grid.derivative(&psi, Axis2::A2).mapv(|v| -v);
        let s2 = grid.derivative(&psi, Axis2::A1);
        let (q1, q2) = grid.leray_gradient_part(&s1, &s2).unwrap();
        let err = grid.l2_norm(&q1) + grid.l2_norm(&q2);
        assert!(err <= 1e-10 * grid.l2_norm(&s1), "solenoidal not killed: {err}");
    }

    #[test]
    fn leray_is_idempotent_and_orthogonal() {
        let grid = test_grid(64, 8.0);
        let u1 = random_band_limited(&grid, 18, 41);
        let u2 = random_band_limited(&grid, 18, 42);
        let (p1, p2) = grid.leray_gradient_part(&u1, &u2).unwrap();
        let (pp1, pp2) = grid.leray_gradient_part(&p1, &p2).unwrap();
        let err = grid.l2_norm(&(&pp1 - &p1)) + grid.l2_norm(&(&pp2 - &p2));
        assert!(err <= 1e-10 * grid.l2_norm(&u1), "not idempotent: {err}");

        // Remainder is L2-orthogonal to the gradient part.
        let r1 = &u1 - &p1;
        let r2 = &u2 - &p2;
        let inner: f64 = (p1.iter().zip(r1.iter()).map(|(a, b)| a * b).sum::<f64>()
            + p2.iter().zip(r2.iter()).map(|(a, b)| a * b).sum::<f64>())
            * grid.cell_area();
        let scale = grid.l2_norm(&u1).powi(2) + grid.l2_norm(&u2).powi(2);
        assert!(inner.abs() <= 1e-10 * scale, "parts not orthogonal: {inner}");
    }

    #[test]
    fn parseval_holds() {
        let grid = test_grid(64, 8.0);
        let f = random_band_limited(&grid, 20, 51);
        let phys = grid.l2_norm(&f);
        let spec = grid.spectral_l2_norm(&grid.forward(&f));
        assert!((phys - spec).abs() <= 1e-12 * phys);
    }

    #[test]
    fn lp_partition_reconstructs() {
        let grid = test_grid(64, 8.0);
        let f = random_band_limited(&grid, 20, 61);
        let (j_lo, j_hi) = grid.lp_j_range();
        let mut sum = grid.lp_low(&f, j_lo);
        for j in j_lo..=j_hi {
            sum += &grid.lp_block(&f, j);
        }
        let rel = grid.l2_norm(&(&sum - &f)) / grid.l2_norm(&f);
        assert!(rel <= 1e-10, "partition defect {rel}");
    }

    #[test]
    fn lp_block_localizes_single_mode() {
        let grid = test_grid(128, std::f64::consts::PI);
        // |k| = 8 = 2^3 exactly: mode m = 8 with L = pi.
        let mut f = Array2::zeros((128, 128));
        for i in 0..128 {
            for j in 0..128 {
                f[[i, j]] = (8.0 * grid.coord(i)).cos();
                let _ = j;
            }
        }
        let j0 = 3;
        for j in (j0 - 4)..=(j0 + 4) {
            let b = grid.lp_block(&f, j);
            let norm = grid.l2_norm(&b);
            if (j - j0).abs() >= 2 {
                assert!(norm <= 1e-12, "block {j} should vanish, norm {norm}");
            }
        }
        // The retained blocks must reproduce the mode.
        let mut sum = Array2::<f64>::zeros((128, 128));
        for j in (j0 - 1)..=(j0 + 1) {
            sum += &grid.lp_block(&f, j);
        }
        let rel = grid.l2_norm(&(&sum - &f)) / grid.l2_norm(&f);
        assert!(rel <= 1e-12, "adjacent blocks defect {rel}");
    }

    #[test]
    fn lp_commutes_with_derivative() {
        let grid = test_grid(64, 8.0);
        let f = random_band_limited(&grid, 20, 71);
        let a = grid.derivative(&grid.lp_block(&f, 1), Axis2::A1);
        let b = grid.lp_block(&grid.derivative(&f, Axis2::A1), 1);
        let rel = grid.l2_norm(&(&a - &b)) / grid.l2_norm(&a).max(1e-300);
        assert!(rel <= 1e-10);
    }

    #[test]
    fn bernstein_constant_is_stable() {
        let grid = test_grid(128, 8.0);
        let f = random_band_limited(&grid, 40, 81);
        let mut constants = Vec::new();
        let (j_lo, j_hi) = grid.lp_j_range();
        for j in j_lo..=j_hi {
            let b = grid.lp_block(&f, j);
            let linf = b.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            let l2 = grid.l2_norm(&b);
            if l2 > 1e-8 {
                constants.push(linf / ((2.0f64).powi(j) * l2));
            }
        }
        assert!(constants.len() >= 3, "too few active blocks");
        let cmax = constants.iter().cloned().fold(0.0f64, f64::max);
        let cmin = constants.iter().cloned().fold(f64::INFINITY, f64::min);
        // Stability across j: spread bounded by a fixed factor.
        assert!(cmax / cmin <= 50.0, "Bernstein constants spread: {constants:?}");
    }
}
