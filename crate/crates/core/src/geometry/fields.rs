use std::sync::Arc;

use num_complex::Complex64 as C;

use super::Grid;
use crate::{Error, Result};

/// A real function sampled on the nodes of a grid.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.grid.spec() == other.grid.spec() && self.values == other.values
    }
}

impl ScalarField {
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Shape(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub(crate) fn from_vec(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::from_vec(grid, vec![0.0; grid.node_count()])
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self::from_vec(grid, vec![c; grid.node_count()])
    }

    /// Sample `f` at the node coordinates (torus: real coordinates
    /// `x₁, y₁, …`; sphere: `u = cos θ`).
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|p| f(&grid.node_coords(p))).collect();
        Self::from_vec(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::from_vec(&self.grid, values)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// `self + s·other`
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn shift(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }

    /// Plain node average (not a measure-weighted mean).
    pub fn node_mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sup norm of `self − other` after removing the node mean of the difference.
    pub fn deviation_from_constant(&self, other: &Self) -> f64 {
        let d = self.sub(other);
        let m = d.node_mean();
        d.values.iter().fold(0.0, |acc, v| acc.max((v - m).abs()))
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.grid.spec() != grid.spec() {
            return Err(Error::Shape("field lives on a different grid".into()));
        }
        Ok(())
    }
}

/// A Hermitian (1,1)-tensor per node in the reference frame,
/// stored row-major: `T[i][j] = T_{ij̄}` (n = 1: one real entry).
#[derive(Clone, Debug)]
pub struct HermitianTensorField {
    grid: Arc<Grid>,
    data: Vec<C>,
}

impl HermitianTensorField {
    pub(crate) fn from_vec(grid: &Arc<Grid>, data: Vec<C>) -> Self {
        let n = grid.complex_dim();
        debug_assert_eq!(data.len(), grid.node_count() * n * n);
        Self { grid: grid.clone(), data }
    }

    /// The tensor `c·g_ref` (`c` times the identity in the reference frame).
    pub fn scalar_multiple_of_identity(grid: &Arc<Grid>, c: &[f64]) -> Self {
        let n = grid.complex_dim();
        let mut data = vec![C::new(0.0, 0.0); grid.node_count() * n * n];
        for (p, &v) in c.iter().enumerate() {
            for i in 0..n {
                data[p * n * n + i * n + i] = C::new(v, 0.0);
            }
        }
        Self::from_vec(grid, data)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn complex_dim(&self) -> usize {
        self.grid.complex_dim()
    }

    pub fn at(&self, node: usize) -> &[C] {
        let nn = self.complex_dim().pow(2);
        &self.data[node * nn..(node + 1) * nn]
    }

    pub fn data(&self) -> &[C] {
        &self.data
    }

    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(C, C) -> C) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self::from_vec(&self.grid, data)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_vec(&self.grid, self.data.iter().map(|&a| a * s).collect())
    }

    /// Max over nodes and components of `|self − other|`.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.norm()))
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.complex_dim();
        let mut m: f64 = 0.0;
        for p in 0..self.node_count() {
            let t = self.at(p);
            for i in 0..n {
                for j in 0..n {
                    m = m.max((t[i * n + j] - t[j * n + i].conj()).norm());
                }
            }
        }
        m
    }
}

/// A symmetric (2,0)-tensor per node in the reference frame: `c[i][j] = c_{ij}`.
#[derive(Clone, Debug)]
pub struct Tensor20Field {
    grid: Arc<Grid>,
    data: Vec<C>,
}

impl Tensor20Field {
    pub(crate) fn from_vec(grid: &Arc<Grid>, data: Vec<C>) -> Self {
        let n = grid.complex_dim();
        debug_assert_eq!(data.len(), grid.node_count() * n * n);
        Self { grid: grid.clone(), data }
    }

    pub fn at(&self, node: usize) -> &[C] {
        let nn = self.grid.complex_dim().pow(2);
        &self.data[node * nn..(node + 1) * nn]
    }

    pub fn data(&self) -> &[C] {
        &self.data
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.norm()))
    }
}
