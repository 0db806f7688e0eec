//! Neumann-Laplacian cosine eigenbasis on intervals and rectangles.
//!
//! Eigenfunctions are tensor products of `sqrt(1/L)` and
//! `sqrt(2/L) cos(k pi x / L)`, sorted by eigenvalue with ties broken by the
//! lexicographic order of the multi-index. Inner products use the midpoint
//! (DCT-II) grid, which is exact for products of modes below the grid size.

use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for membership in the domain of `N`.
pub const MEAN_TOL: f64 = 1e-10;

/// Multi-index `(k1, k2)`; the second entry is 0 in one dimension.
pub type Mode = [usize; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lengths: Vec<f64>,
    grid: usize,
}

impl BoxDomain {
    pub fn new(lengths: &[f64], grid_points_per_axis: usize) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 2 {
            return Err(Error::Config(format!(
                "domain dimension must be 1 or 2, got {}",
                lengths.len()
            )));
        }
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::Config(format!("domain lengths must be positive, got {lengths:?}")));
        }
        if grid_points_per_axis < 4 {
            return Err(Error::Config(format!(
                "grid needs at least 4 points per axis, got {grid_points_per_axis}"
            )));
        }
        Ok(Self {
            lengths: lengths.to_vec(),
            grid: grid_points_per_axis,
        })
    }

    pub fn interval(length: f64, grid: usize) -> Result<Self> {
        Self::new(&[length], grid)
    }

    pub fn rectangle(l1: f64, l2: f64, grid: usize) -> Result<Self> {
        Self::new(&[l1, l2], grid)
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn grid_points_per_axis(&self) -> usize {
        self.grid
    }

    pub fn measure(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn num_points(&self) -> usize {
        self.grid.pow(self.dim() as u32)
    }

    /// Midpoint quadrature weight (uniform).
    pub fn weight(&self) -> f64 {
        self.lengths.iter().map(|l| l / self.grid as f64).product()
    }

    /// Coordinates of grid point `p` (row-major, axis 0 slowest).
    pub fn point(&self, p: usize) -> [f64; 2] {
        let m = self.grid;
        let (i0, i1) = if self.dim() == 1 { (p, 0) } else { (p / m, p % m) };
        let x = (i0 as f64 + 0.5) * self.lengths[0] / m as f64;
        let y = if self.dim() == 2 {
            (i1 as f64 + 0.5) * self.lengths[1] / m as f64
        } else {
            0.0
        };
        [x, y]
    }

    /// Eigenvalue of the Neumann Laplacian for a mode.
    pub fn eigenvalue(&self, mode: Mode) -> f64 {
        self.lengths
            .iter()
            .zip(mode.iter())
            .map(|(l, &k)| (k as f64 * PI / l).powi(2))
            .sum()
    }

    /// Factor `c` with `prod cos(k_i pi x_i / L_i) = c * e_mode(x)`.
    pub fn cosine_to_eigen(&self, mode: Mode) -> f64 {
        self.lengths
            .iter()
            .zip(mode.iter())
            .map(|(l, &k)| if k == 0 { l.sqrt() } else { (l / 2.0).sqrt() })
            .product()
    }

    /// Normalized eigenfunction `e_mode` evaluated at `x`.
    pub fn eigenfunction(&self, mode: Mode, x: [f64; 2]) -> f64 {
        self.lengths
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let k = mode[i];
                if k == 0 {
                    (1.0 / l).sqrt()
                } else {
                    (2.0 / l).sqrt() * (k as f64 * PI * x[i] / l).cos()
                }
            })
            .product()
    }
}

/// Coordinates in the eigenbasis `e_1, ..., e_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coeffs(pub DVector<f64>);

impl Coeffs {
    pub fn zeros(n: usize) -> Self {
        Coeffs(DVector::zeros(n))
    }

    pub fn from_vec(v: Vec<f64>) -> Self {
        Coeffs(DVector::from_vec(v))
    }

    pub fn unit(n: usize, j: usize) -> Self {
        let mut c = Self::zeros(n);
        c.0[j] = 1.0;
        c
    }
}

impl Deref for Coeffs {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl DerefMut for Coeffs {
    fn deref_mut(&mut self) -> &mut DVector<f64> {
        &mut self.0
    }
}

/// Samples on the quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field(pub DVector<f64>);

impl Field {
    pub fn from_fn(domain: &BoxDomain, f: impl Fn([f64; 2]) -> f64) -> Self {
        Field(DVector::from_iterator(
            domain.num_points(),
            (0..domain.num_points()).map(|p| f(domain.point(p))),
        ))
    }

    pub fn constant(domain: &BoxDomain, c: f64) -> Self {
        Field(DVector::from_element(domain.num_points(), c))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Field(self.0.map(f))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for Field {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut DVector<f64> {
        &mut self.0
    }
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    domain: BoxDomain,
    modes: Vec<Mode>,
    eigenvalues: Vec<f64>,
    /// `table[(j, p)] = e_j(x_p)`.
    table: DMatrix<f64>,
}

/// Eigenvalue rounded to 12 significant digits, so that analytically equal
/// eigenvalues compare equal and fall back to lexicographic order.
fn eigen_key(domain: &BoxDomain, mode: &Mode) -> (i64, i32, Mode) {
    let l = domain.eigenvalue(*mode);
    if l == 0.0 {
        return (0, i32::MIN, *mode);
    }
    let exp = l.log10().floor() as i32;
    let mant = (l / 10f64.powi(exp - 11)).round() as i64;
    (mant, exp, *mode)
}

impl SpectralBasis {
    /// First `n` Neumann eigenpairs of the box.
    pub fn build(domain: &BoxDomain, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("basis needs at least one mode".into()));
        }
        // The n smallest eigenvalues never use an index >= n on any axis.
        let mut modes: Vec<Mode> = if domain.dim() == 1 {
            (0..n).map(|k| [k, 0]).collect()
        } else {
            (0..n).flat_map(|a| (0..n).map(move |b| [a, b])).collect()
        };
        modes.sort_by_key(|m| {
            let (mant, exp, md) = eigen_key(domain, m);
            (exp, mant, md)
        });
        modes.truncate(n);
        if modes.len() < n {
            return Err(Error::Config(format!("cannot build {n} modes")));
        }
        let m = domain.grid_points_per_axis();
        for axis in 0..domain.dim() {
            let kmax = modes.iter().map(|md| md[axis]).max().unwrap_or(0);
            if m < 2 * kmax {
                return Err(Error::Config(format!(
                    "{n} modes need index {kmax} on axis {axis}; grid of {m} points is below the anti-aliasing limit {}",
                    2 * kmax
                )));
            }
        }
        let eigenvalues = modes.iter().map(|md| domain.eigenvalue(*md)).collect();
        let table = Self::tabulate(domain, &modes);
        Ok(Self {
            domain: domain.clone(),
            modes,
            eigenvalues,
            table,
        })
    }

    fn tabulate(domain: &BoxDomain, modes: &[Mode]) -> DMatrix<f64> {
        let m = domain.grid_points_per_axis();
        let axis_table = |axis: usize, k: usize| -> Vec<f64> {
            let l = domain.lengths()[axis];
            (0..m)
                .map(|i| {
                    if k == 0 {
                        (1.0 / l).sqrt()
                    } else {
                        (2.0 / l).sqrt() * (k as f64 * PI * (i as f64 + 0.5) / m as f64).cos()
                    }
                })
                .collect()
        };
        let npts = domain.num_points();
        let mut table = DMatrix::zeros(modes.len(), npts);
        for (j, md) in modes.iter().enumerate() {
            let c0 = axis_table(0, md[0]);
            if domain.dim() == 1 {
                for p in 0..npts {
                    table[(j, p)] = c0[p];
                }
            } else {
                let c1 = axis_table(1, md[1]);
                for i0 in 0..m {
                    for i1 in 0..m {
                        table[(j, i0 * m + i1)] = c0[i0] * c1[i1];
                    }
                }
            }
        }
        table
    }

    pub fn n(&self) -> usize {
        self.modes.len()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn index_of(&self, mode: Mode) -> Option<usize> {
        self.modes.iter().position(|m| *m == mode)
    }

    pub fn num_points(&self) -> usize {
        self.domain.num_points()
    }

    pub fn weight(&self) -> f64 {
        self.domain.weight()
    }

    /// Eigenfunction values of an arbitrary mode on the grid.
    pub fn mode_field(&self, mode: Mode) -> Field {
        Field::from_fn(&self.domain, |x| self.domain.eigenfunction(mode, x))
    }

    fn check_coeffs(&self, c: &Coeffs) -> Result<()> {
        if c.len() != self.n() {
            return Err(Error::Usage(format!(
                "coefficient vector of length {} used with a basis of {} modes",
                c.len(),
                self.n()
            )));
        }
        Ok(())
    }

    fn check_field(&self, f: &Field) -> Result<()> {
        if f.len() != self.num_points() {
            return Err(Error::Usage(format!(
                "field with {} samples used on a grid of {} points",
                f.len(),
                self.num_points()
            )));
        }
        Ok(())
    }

    /// `(v, e_j)` by quadrature: the projection `P_n` in coordinates.
    pub fn to_coeffs(&self, field: &Field) -> Result<Coeffs> {
        self.check_field(field)?;
        Ok(Coeffs(&self.table * &field.0 * self.weight()))
    }

    pub fn to_field(&self, c: &Coeffs) -> Result<Field> {
        self.check_coeffs(c)?;
        Ok(Field(self.table.tr_mul(&c.0)))
    }

    /// Spatial mean `c_1 / sqrt(|Omega|)`.
    pub fn mean_value(&self, c: &Coeffs) -> f64 {
        c[0] / self.domain.measure().sqrt()
    }

    /// Coefficients of a constant function.
    pub fn constant_coeffs(&self, value: f64) -> Coeffs {
        let mut c = Coeffs::zeros(self.n());
        c[0] = value * self.domain.measure().sqrt();
        c
    }

    /// Inverse Neumann Laplacian on zero-mean elements.
    pub fn solve_n(&self, psi: &Coeffs) -> Result<Coeffs> {
        self.check_coeffs(psi)?;
        let mean = self.mean_value(psi);
        if mean.abs() > MEAN_TOL * psi.norm() {
            return Err(Error::Domain(format!(
                "N is defined on zero-mean elements only; mean value is {mean:e}"
            )));
        }
        let mut u = Coeffs::zeros(self.n());
        for j in 1..self.n() {
            u[j] = psi[j] / self.eigenvalues[j];
        }
        Ok(u)
    }

    pub fn stiffness_apply(&self, c: &Coeffs) -> Coeffs {
        Coeffs(c.0.zip_map(&DVector::from_column_slice(&self.eigenvalues), |a, l| a * l))
    }

    /// `(a, b)_H` for elements of `V_n`.
    pub fn inner(&self, a: &Coeffs, b: &Coeffs) -> f64 {
        a.dot(b)
    }

    pub fn norm_h(&self, c: &Coeffs) -> f64 {
        c.norm()
    }

    /// `|grad v|^2 = sum lambda_j c_j^2`.
    pub fn grad_norm_sq(&self, c: &Coeffs) -> f64 {
        c.iter().zip(&self.eigenvalues).map(|(a, l)| l * a * a).sum()
    }

    pub fn norm_v(&self, c: &Coeffs) -> f64 {
        c.iter().zip(&self.eigenvalues).map(|(a, l)| (1.0 + l) * a * a).sum::<f64>().sqrt()
    }

    /// `|psi|_*^2 = |grad N(psi - mean)|^2 + mean^2`.
    pub fn norm_vstar(&self, c: &Coeffs) -> f64 {
        let mean = self.mean_value(c);
        let tail: f64 = c.iter().zip(&self.eigenvalues).skip(1).map(|(a, l)| a * a / l).sum();
        (tail + mean * mean).sqrt()
    }

    pub fn integrate(&self, field: &Field) -> f64 {
        field.sum() * self.weight()
    }

    /// Quadrature `L^p` norm; `p = inf` is the grid maximum.
    pub fn norm_lp(&self, field: &Field, p: f64) -> f64 {
        if p.is_infinite() {
            return field.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        }
        let s: f64 = field.iter().map(|v| v.abs().powf(p)).sum();
        (s * self.weight()).powf(1.0 / p)
    }

    /// `M[i][j] = sum_p w rho(x_p) e_i(x_p) e_j(x_p)`.
    pub fn weighted_mass(&self, rho: &Field) -> DMatrix<f64> {
        let w = self.weight();
        let mut scaled = self.table.clone();
        for (p, mut col) in scaled.column_iter_mut().enumerate() {
            col *= rho[p] * w;
        }
        scaled * self.table.transpose()
    }

    /// Max deviation of the discrete Gram matrix from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = &self.table * self.table.transpose() * self.weight();
        let n = self.n();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let d = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - d).abs());
            }
        }
        worst
    }

    /// Trapezoid approximation of `int <dv/dt, N v> dt` along sampled
    /// `(t, v, dv/dt)` triples of zero-mean coefficients; equals
    /// `|v(T)|_*^2/2 - |v(0)|_*^2/2` up to `O(dt^2)`, exactly for linear paths.
    pub fn dual_pairing_integral(&self, path: &[(f64, Coeffs, Coeffs)]) -> Result<f64> {
        let mut vals = Vec::with_capacity(path.len());
        for (_, v, dv) in path {
            vals.push(self.inner(dv, &self.solve_n(v)?));
        }
        Ok(path
            .windows(2)
            .zip(vals.windows(2))
            .map(|(p, f)| 0.5 * (p[1].0 - p[0].0) * (f[0] + f[1]))
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_interval(n: usize) -> SpectralBasis {
        SpectralBasis::build(&BoxDomain::interval(1.0, 64).unwrap(), n).unwrap()
    }

    fn random_zero_mean(n: usize, rng: &mut ChaCha8Rng) -> Coeffs {
        let mut c = Coeffs::from_vec((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        c[0] = 0.0;
        c
    }

    #[test]
    fn interval_eigenvalues() {
        let b = unit_interval(2);
        assert_eq!(b.eigenvalues()[0], 0.0);
        assert!((b.eigenvalues()[1] - PI * PI).abs() < 1e-12);
        assert!((b.eigenvalues()[1] - 9.8696044).abs() < 1e-7);
    }

    #[test]
    fn constant_eigenfunction() {
        let b = unit_interval(1);
        let f = b.to_field(&Coeffs::unit(1, 0)).unwrap();
        assert!(f.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert_eq!(b.eigenvalues(), &[0.0]);
    }

    #[test]
    fn square_tie_order() {
        let d = BoxDomain::rectangle(1.0, 1.0, 16).unwrap();
        let b = SpectralBasis::build(&d, 3).unwrap();
        assert_eq!(b.modes(), &[[0, 0], [0, 1], [1, 0]]);
        assert!((b.eigenvalues()[1] - PI * PI).abs() < 1e-12);
        assert_eq!(b.eigenvalues()[1], b.eigenvalues()[2]);
    }

    #[test]
    fn eigenvalues_nondecreasing_2d() {
        let d = BoxDomain::rectangle(1.0, 2.0, 64).unwrap();
        let b = SpectralBasis::build(&d, 64).unwrap();
        assert!(b.eigenvalues().windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)));
        assert!(b.orthonormality_residual() < 1e-10);
    }

    #[test]
    fn aliasing_limit_rejected() {
        let d = BoxDomain::interval(1.0, 8).unwrap();
        assert!(SpectralBasis::build(&d, 5).is_ok());
        assert!(matches!(SpectralBasis::build(&d, 6), Err(Error::Config(_))));
        assert!(BoxDomain::interval(1.0, 3).is_err());
        assert!(BoxDomain::new(&[1.0, 1.0, 1.0], 8).is_err());
    }

    #[test]
    fn orthonormality() {
        for n in [8, 32] {
            assert!(unit_interval(n).orthonormality_residual() < 1e-10);
        }
    }

    #[test]
    fn projection_drops_unresolved_mode() {
        let b = unit_interval(8);
        let mut f = b.mode_field([0, 0]);
        f.0 += &b.mode_field([8, 0]).0;
        let c = b.to_coeffs(&f).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-14);
        assert!(c.iter().skip(1).all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn constant_field_coeffs() {
        let d = BoxDomain::rectangle(2.0, 2.0, 16).unwrap();
        let b = SpectralBasis::build(&d, 6).unwrap();
        let c = b.to_coeffs(&Field::constant(&d, 3.0)).unwrap();
        assert!((c[0] - 3.0 * 2.0).abs() < 1e-13);
        assert!((b.mean_value(&c) - 3.0).abs() < 1e-14);
        assert!(c.iter().skip(1).all(|v| v.abs() < 1e-13));
        let mut c2 = Coeffs::zeros(6);
        c2[0] = 2.0;
        assert_eq!(b.mean_value(&c2), 1.0);
        assert_eq!(b.mean_value(&Coeffs::unit(6, 3)), 0.0);
    }

    #[test]
    fn mismatched_shapes_are_usage_errors() {
        let b = unit_interval(8);
        assert!(matches!(b.to_field(&Coeffs::zeros(3)), Err(Error::Usage(_))));
        let other = BoxDomain::interval(1.0, 32).unwrap();
        assert!(matches!(b.to_coeffs(&Field::constant(&other, 1.0)), Err(Error::Usage(_))));
    }

    #[test]
    fn n_of_second_mode() {
        let b = unit_interval(4);
        let u = b.solve_n(&Coeffs::unit(4, 1)).unwrap();
        assert!((u[1] - 1.0 / (PI * PI)).abs() < 1e-15);
        assert_eq!(b.solve_n(&Coeffs::zeros(4)).unwrap(), Coeffs::zeros(4));
        assert!(matches!(b.solve_n(&b.constant_coeffs(1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn norms_of_second_mode() {
        let b = unit_interval(4);
        let e2 = Coeffs::unit(4, 1);
        assert!((b.norm_h(&e2) - 1.0).abs() < 1e-15);
        assert!((b.norm_v(&e2) - (1.0 + PI * PI).sqrt()).abs() < 1e-14);
        assert!((b.norm_vstar(&e2) - 1.0 / PI).abs() < 1e-15);
        let one = b.constant_coeffs(1.0);
        assert!((b.norm_h(&one) - 1.0).abs() < 1e-15);
        assert!((b.norm_v(&one) - 1.0).abs() < 1e-15);
        assert!((b.norm_vstar(&one) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stiffness_diagonal() {
        let b = unit_interval(4);
        let s = b.stiffness_apply(&b.constant_coeffs(2.0));
        assert!(s.iter().all(|v| *v == 0.0));
        let s = b.stiffness_apply(&Coeffs::unit(4, 1));
        assert!((s[1] - PI * PI).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_zero_mean(4, &mut rng);
        let v = random_zero_mean(4, &mut rng);
        let lhs = b.stiffness_apply(&Coeffs(&u.0 * 2.5 + &v.0 * -0.5));
        let rhs = &b.stiffness_apply(&u).0 * 2.5 + &b.stiffness_apply(&v).0 * -0.5;
        assert!((lhs.0 - rhs).amax() < 1e-12);
    }

    #[test]
    fn lp_norms() {
        let d = BoxDomain::interval(1.0, 16).unwrap();
        let b = SpectralBasis::build(&d, 4).unwrap();
        assert!((b.norm_lp(&Field::constant(&d, 2.0), 6.0) - 2.0).abs() < 1e-14);
        let d8 = BoxDomain::rectangle(2.0, 4.0, 16).unwrap();
        let b8 = SpectralBasis::build(&d8, 4).unwrap();
        let v = b8.norm_lp(&Field::constant(&d8, 2.0), 6.0);
        assert!((v - 2.0 * 8f64.powf(1.0 / 6.0)).abs() < 1e-13);
        // int_0^1 cos^2 = 1/2, cos^4 = 3/8, cos^6 = 5/16.
        let c = Field::from_fn(&d, |x| (PI * x[0]).cos());
        assert!((b.norm_lp(&c, 2.0) - 0.5f64.sqrt()).abs() < 1e-8);
        assert!((b.norm_lp(&c, 4.0) - (3.0f64 / 8.0).powf(0.25)).abs() < 1e-8);
        assert!((b.norm_lp(&c, 6.0) - (5.0f64 / 16.0).powf(1.0 / 6.0)).abs() < 1e-8);
        assert!((b.norm_lp(&c, f64::INFINITY) - (PI / 32.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn dual_pairing_linear_path_exact() {
        let b = unit_interval(16);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v0 = random_zero_mean(16, &mut rng);
        let d = random_zero_mean(16, &mut rng);
        let path: Vec<_> = (0..=10)
            .map(|k| {
                let t = k as f64 * 0.1;
                (t, Coeffs(&v0.0 + &d.0 * t), d.clone())
            })
            .collect();
        let lhs = b.dual_pairing_integral(&path).unwrap();
        let v1 = &path.last().unwrap().1;
        let rhs = 0.5 * b.norm_vstar(v1).powi(2) - 0.5 * b.norm_vstar(&v0).powi(2);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn dual_pairing_curved_path_second_order() {
        let b = unit_interval(8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_zero_mean(8, &mut rng);
        let c = random_zero_mean(8, &mut rng);
        let err = |steps: usize| {
            let path: Vec<_> = (0..=steps)
                .map(|k| {
                    let t = k as f64 / steps as f64;
                    let v = Coeffs(&a.0 * t.sin() + &c.0 * (t * t));
                    let dv = Coeffs(&a.0 * t.cos() + &c.0 * (2.0 * t));
                    (t, v, dv)
                })
                .collect();
            let v1 = &path.last().unwrap().1;
            let exact = 0.5 * b.norm_vstar(v1).powi(2);
            (b.dual_pairing_integral(&path).unwrap() - exact).abs()
        };
        let ratio = err(20) / err(40);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    proptest! {
        #[test]
        fn band_limited_round_trip(seed in 0u64..1000) {
            let b = unit_interval(24);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = Coeffs::from_vec((0..24).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let back = b.to_coeffs(&b.to_field(&c).unwrap()).unwrap();
            prop_assert!((back.0 - &c.0).amax() < 1e-12);
        }

        #[test]
        fn n_symmetric_and_poincare(seed in 0u64..1000) {
            let b = unit_interval(16);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = random_zero_mean(16, &mut rng);
            let zeta = random_zero_mean(16, &mut rng);
            let l = b.inner(&psi, &b.solve_n(&zeta).unwrap());
            let r = b.inner(&zeta, &b.solve_n(&psi).unwrap());
            prop_assert!((l - r).abs() < 1e-12);
            let e = b.inner(&psi, &b.solve_n(&psi).unwrap());
            prop_assert!((e - b.norm_vstar(&psi).powi(2)).abs() < 1e-12);
            let lam2 = b.eigenvalues()[1];
            prop_assert!(psi.norm_squared() <= b.grad_norm_sq(&psi) / lam2 + 1e-12);
        }

        #[test]
        fn projection_nonexpansive(seed in 0u64..500) {
            // Fine field with modes beyond V_n.
            let d = BoxDomain::interval(1.0, 64).unwrap();
            let fine = SpectralBasis::build(&d, 30).unwrap();
            let coarse = SpectralBasis::build(&d, 10).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = Coeffs::from_vec((0..30).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let f = fine.to_field(&c).unwrap();
            let p = coarse.to_coeffs(&f).unwrap();
            prop_assert!(coarse.norm_h(&p) <= fine.norm_h(&c) + 1e-12);
            prop_assert!(coarse.grad_norm_sq(&p) <= fine.grad_norm_sq(&c) + 1e-9);
        }
    }
}
