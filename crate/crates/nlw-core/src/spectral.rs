//! Dirichlet sine eigenbasis of the negative Laplacian on the box (0,pi)^d,
//! transforms between spectral and collocation representations, and the norms
//! used throughout the crate.
//!
//! The basis is orthonormal in L2: `e_kappa(x) = (2/pi)^(d/2) prod_i sin(kappa_i x_i)`
//! with eigenvalue `lambda_kappa = sum_i kappa_i^2`. Coefficients are stored
//! row-major over the multi-index `kappa in {1..N}^d`.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("dimension must be 1, 2 or 3, got {0}")]
    BadDim(usize),
    #[error("n_modes must be >= 1, got {0}")]
    BadModes(usize),
    #[error("n_quad = {n_quad} violates the dealiasing bound n_quad >= ceil(3*n_modes/2) = {min}")]
    QuadTooCoarse { n_quad: usize, min: usize },
}

/// Precomputed sine tables shared by all fields on the same grid.
#[derive(Debug)]
struct GridTables {
    /// Synthesis matrix, n_quad rows x n_modes cols (per dimension):
    /// `synth[j*n_modes + k] = sqrt(2/pi) * sin((k+1) x_{j+1})`.
    synth: Vec<f64>,
    /// Analysis matrix, n_modes rows x n_quad cols; exact left inverse of
    /// `synth` by discrete sine orthogonality, and identical to the
    /// uniform-weight quadrature projection onto the basis.
    anal: Vec<f64>,
    /// Eigenvalues indexed like coefficient arrays, length n_modes^dim.
    lambda: Vec<f64>,
}

/// Tensor grid on (0,pi)^d: `n_modes` sine modes and `n_quad` interior
/// collocation points `x_j = j*pi/(n_quad+1)` per dimension.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    n_modes: usize,
    n_quad: usize,
    tables: Arc<GridTables>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n_modes == other.n_modes && self.n_quad == other.n_quad
    }
}

impl Grid {
    pub fn new(dim: usize, n_modes: usize, n_quad: usize) -> Result<Self, GridError> {
        if !(1..=3).contains(&dim) {
            return Err(GridError::BadDim(dim));
        }
        if n_modes == 0 {
            return Err(GridError::BadModes(n_modes));
        }
        let min_quad = (3 * n_modes).div_ceil(2);
        if n_quad < min_quad {
            return Err(GridError::QuadTooCoarse {
                n_quad,
                min: min_quad,
            });
        }
        let m = n_quad;
        let n = n_modes;
        let c = (2.0 / PI).sqrt();
        let mut synth = vec![0.0; m * n];
        let mut anal = vec![0.0; n * m];
        for j in 0..m {
            let x = (j + 1) as f64 * PI / (m + 1) as f64;
            for k in 0..n {
                let s = ((k + 1) as f64 * x).sin();
                synth[j * n + k] = c * s;
                anal[k * m + j] = 2.0 / ((m + 1) as f64 * c) * s;
            }
        }
        let total = n.pow(dim as u32);
        let mut lambda = vec![0.0; total];
        for (i, l) in lambda.iter_mut().enumerate() {
            let mut rem = i;
            let mut acc = 0.0;
            for _ in 0..dim {
                let k = (rem % n + 1) as f64;
                acc += k * k;
                rem /= n;
            }
            // rem runs fastest over the last axis; the sum of squares is
            // permutation invariant so the axis order does not matter here.
            *l = acc;
        }
        Ok(Grid {
            dim,
            n_modes,
            n_quad,
            tables: Arc::new(GridTables {
                synth,
                anal,
                lambda,
            }),
        })
    }

    /// Grid with the default dealiasing margin `n_quad = 2*n_modes`.
    pub fn with_default_quad(dim: usize, n_modes: usize) -> Result<Self, GridError> {
        Self::new(dim, n_modes, 2 * n_modes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_quad(&self) -> usize {
        self.n_quad
    }

    /// Total number of spectral coefficients, `n_modes^dim`.
    pub fn coeff_len(&self) -> usize {
        self.n_modes.pow(self.dim as u32)
    }

    /// Total number of collocation values, `n_quad^dim`.
    pub fn value_len(&self) -> usize {
        self.n_quad.pow(self.dim as u32)
    }

    /// Eigenvalue of -Laplace for the flat coefficient index `i`.
    pub fn lambda(&self, i: usize) -> f64 {
        self.tables.lambda[i]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.tables.lambda
    }

    /// First eigenvalue `lambda_1 = d` (multi-index (1,..,1)).
    pub fn lambda_min(&self) -> f64 {
        self.dim as f64
    }

    /// Largest resolved eigenvalue, `d * n_modes^2`.
    pub fn lambda_max(&self) -> f64 {
        self.dim as f64 * (self.n_modes * self.n_modes) as f64
    }

    /// Uniform quadrature weight `(pi/(n_quad+1))^d` of the interior composite rule.
    pub fn quad_weight(&self) -> f64 {
        (PI / (self.n_quad + 1) as f64).powi(self.dim as i32)
    }

    /// Flat coefficient index of a multi-index (components in 1..=n_modes).
    pub fn coeff_index(&self, kappa: &[usize]) -> usize {
        assert_eq!(kappa.len(), self.dim);
        let mut idx = 0;
        for &k in kappa {
            assert!((1..=self.n_modes).contains(&k), "mode {k} out of range");
            idx = idx * self.n_modes + (k - 1);
        }
        idx
    }
}

/// Real coefficient vector in the orthonormal sine eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeff: Vec<f64>,
}

/// Values on the uniform interior collocation grid.
#[derive(Debug, Clone)]
pub struct PhysicalField {
    grid: Grid,
    values: Vec<f64>,
}

/// Apply `mat` (rows x cols) along `axis` of a row-major tensor whose extents
/// are `shape`; the extent of `axis` must equal `cols` and becomes `rows`.
fn apply_axis(
    data: &[f64],
    shape: &mut [usize],
    axis: usize,
    mat: &[f64],
    rows: usize,
    cols: usize,
) -> Vec<f64> {
    debug_assert_eq!(shape[axis], cols);
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        for r in 0..rows {
            let mrow = &mat[r * cols..(r + 1) * cols];
            let dst = &mut out[(o * rows + r) * inner..(o * rows + r + 1) * inner];
            for (c, &m) in mrow.iter().enumerate() {
                let src = &data[(o * cols + c) * inner..(o * cols + c + 1) * inner];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += m * s;
                }
            }
        }
    }
    shape[axis] = rows;
    out
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeff: vec![0.0; grid.coeff_len()],
        }
    }

    pub fn from_coeff(grid: &Grid, coeff: Vec<f64>) -> Self {
        assert_eq!(coeff.len(), grid.coeff_len());
        SpectralField {
            grid: grid.clone(),
            coeff,
        }
    }

    /// Field with a single excited mode.
    pub fn single_mode(grid: &Grid, kappa: &[usize], amplitude: f64) -> Self {
        let mut f = Self::zeros(grid);
        let idx = grid.coeff_index(kappa);
        f.coeff[idx] = amplitude;
        f
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeff(&self) -> &[f64] {
        &self.coeff
    }

    pub fn coeff_mut(&mut self) -> &mut [f64] {
        &mut self.coeff
    }

    /// Sine synthesis onto the collocation grid; exact up to roundoff.
    pub fn to_physical(&self) -> PhysicalField {
        let g = &self.grid;
        let t = &g.tables;
        let mut shape = vec![g.n_modes; g.dim];
        let mut data = self.coeff.clone();
        for axis in 0..g.dim {
            data = apply_axis(&data, &mut shape, axis, &t.synth, g.n_quad, g.n_modes);
        }
        PhysicalField {
            grid: g.clone(),
            values: data,
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeff.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn grad_norm(&self) -> f64 {
        self.coeff
            .iter()
            .zip(self.grid.lambdas())
            .map(|(a, l)| l * a * a)
            .sum::<f64>()
            .sqrt()
    }

    /// L2 inner product, coefficientwise by orthonormality.
    pub fn dot(&self, other: &SpectralField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.coeff
            .iter()
            .zip(&other.coeff)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Lq norm by the uniform-weight composite rule on the interior grid.
    pub fn lq_norm(&self, q: f64) -> f64 {
        assert!(q >= 1.0, "lq_norm requires q >= 1");
        self.to_physical().lq_norm(q)
    }

    pub fn scaled(&self, c: f64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeff: self.coeff.iter().map(|a| c * a).collect(),
        }
    }

    pub fn scale_in_place(&mut self, c: f64) {
        for a in &mut self.coeff {
            *a *= c;
        }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        debug_assert_eq!(self.grid, other.grid);
        SpectralField {
            grid: self.grid.clone(),
            coeff: self
                .coeff
                .iter()
                .zip(&other.coeff)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: f64, other: &SpectralField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.coeff.iter_mut().zip(&other.coeff) {
            *a += c * b;
        }
    }
}

impl PhysicalField {
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.value_len());
        PhysicalField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Discrete sine analysis truncated to `{1..n_modes}^d`; the projector
    /// P_N of the Galerkin system. Left inverse of `to_physical`.
    pub fn to_spectral(&self, n_modes: usize) -> SpectralField {
        let g = &self.grid;
        assert!(
            n_modes <= g.n_modes,
            "requested {n_modes} modes exceeds grid capacity {}",
            g.n_modes
        );
        let t = &g.tables;
        let mut shape = vec![g.n_quad; g.dim];
        let mut data = self.values.clone();
        for axis in 0..g.dim {
            data = apply_axis(&data, &mut shape, axis, &t.anal, g.n_modes, g.n_quad);
        }
        let mut full = SpectralField {
            grid: g.clone(),
            coeff: data,
        };
        if n_modes < g.n_modes {
            // zero out modes above the truncation in any direction
            let n = g.n_modes;
            for (i, a) in full.coeff.iter_mut().enumerate() {
                let mut rem = i;
                for _ in 0..g.dim {
                    if rem % n + 1 > n_modes {
                        *a = 0.0;
                        break;
                    }
                    rem /= n;
                }
            }
        }
        full
    }

    pub fn lq_norm(&self, q: f64) -> f64 {
        assert!(q >= 1.0, "lq_norm requires q >= 1");
        let w = self.grid.quad_weight();
        let s: f64 = self.values.iter().map(|v| v.abs().powf(q)).sum();
        (w * s).powf(1.0 / q)
    }
}

/// Phase-space point xi = (u, u_t) of the energy space H^1_0 x L^2.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: SpectralField,
    pub ut: SpectralField,
}

impl State {
    pub fn zeros(grid: &Grid) -> Self {
        State {
            u: SpectralField::zeros(grid),
            ut: SpectralField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// Graph norm of the energy space: sqrt(|grad u|^2 + |u_t|^2).
    pub fn energy_norm(&self) -> f64 {
        let g = self.u.grad_norm();
        let v = self.ut.l2_norm();
        (g * g + v * v).sqrt()
    }

    pub fn sub(&self, other: &State) -> State {
        State {
            u: self.u.sub(&other.u),
            ut: self.ut.sub(&other.ut),
        }
    }
}

pub fn energy_norm(state: &State) -> f64 {
    state.energy_norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_parameters() {
        assert_eq!(Grid::new(0, 4, 8).unwrap_err(), GridError::BadDim(0));
        assert_eq!(Grid::new(4, 4, 8).unwrap_err(), GridError::BadDim(4));
        assert_eq!(Grid::new(1, 0, 8).unwrap_err(), GridError::BadModes(0));
        assert!(matches!(
            Grid::new(1, 8, 11).unwrap_err(),
            GridError::QuadTooCoarse { min: 12, .. }
        ));
        assert!(Grid::new(1, 8, 12).is_ok());
    }

    #[test]
    fn zero_coefficients_synthesize_to_zero() {
        let g = Grid::with_default_quad(2, 4).unwrap();
        let u = SpectralField::zeros(&g);
        assert!(u.to_physical().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_mode_synthesis_is_the_basis_function() {
        let g = Grid::with_default_quad(1, 4).unwrap();
        let u = SpectralField::single_mode(&g, &[1], 1.0);
        let v = u.to_physical();
        let c = (2.0 / PI).sqrt();
        for (j, &val) in v.values().iter().enumerate() {
            let x = (j + 1) as f64 * PI / (g.n_quad() + 1) as f64;
            assert!((val - c * x.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_physical_field_analyzes_to_zero() {
        let g = Grid::with_default_quad(1, 4).unwrap();
        let v = PhysicalField::from_values(&g, vec![0.0; g.value_len()]);
        assert!(v.to_spectral(4).coeff().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn pythagorean_l2_norm() {
        let g = Grid::with_default_quad(1, 4).unwrap();
        let u = SpectralField::from_coeff(&g, vec![3.0, 4.0, 0.0, 0.0]);
        assert_eq!(u.l2_norm(), 5.0);
    }

    #[test]
    fn single_mode_grad_norm_is_the_frequency() {
        let g = Grid::with_default_quad(1, 8).unwrap();
        for k in 1..=8usize {
            let u = SpectralField::single_mode(&g, &[k], 1.0);
            assert!((u.grad_norm() - k as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn lq_norm_of_zero_field_is_zero() {
        let g = Grid::with_default_quad(1, 4).unwrap();
        let u = SpectralField::zeros(&g);
        for q in [1.0, 2.0, 3.0, 6.0, 12.0] {
            assert_eq!(u.lq_norm(q), 0.0);
        }
    }

    #[test]
    fn truncated_analysis_drops_high_modes() {
        let g = Grid::with_default_quad(1, 8).unwrap();
        let u = SpectralField::from_coeff(&g, (1..=8).map(|k| k as f64).collect());
        let t = u.to_physical().to_spectral(3);
        for (i, &a) in t.coeff().iter().enumerate() {
            if i < 3 {
                assert!((a - (i + 1) as f64).abs() < 1e-12);
            } else {
                assert_eq!(a, 0.0);
            }
        }
    }

    #[test]
    fn lambda_indexing_matches_multi_index() {
        let g = Grid::with_default_quad(3, 3).unwrap();
        let idx = g.coeff_index(&[2, 1, 3]);
        assert_eq!(g.lambda(idx), 4.0 + 1.0 + 9.0);
        assert_eq!(g.lambda_min(), 3.0);
    }
}
