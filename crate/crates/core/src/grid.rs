//! Rectangular node lattices, finite-difference stencils and quadrature.
//!
//! Nodes are laid out row-major: the last axis varies fastest. Every
//! reduction goes through [`pairwise_sum`] in lexicographic node order so
//! results do not depend on how sweeps are scheduled.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// One coordinate axis: `count` nodes starting at `min` with uniform `spacing`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub spacing: f64,
    pub count: usize,
}

impl Axis {
    /// Symmetric axis over `[-half_width, half_width]`.
    ///
    /// The node count is rounded to the nearest integer and the spacing is
    /// recomputed from it, so the stored spacing is authoritative.
    pub fn symmetric(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing {spacing} must be positive")));
        }
        let intervals = (2.0 * half_width / spacing).round().max(1.0) as usize;
        let count = intervals + 1;
        if count < 3 {
            return Err(Error::InvalidGrid(format!(
                "{count} nodes per axis, at least 3 required"
            )));
        }
        Ok(Self { min: -half_width, spacing: 2.0 * half_width / intervals as f64, count })
    }

    /// Symmetric axis with a prescribed node count.
    pub fn with_count(half_width: f64, count: usize) -> Result<Self> {
        if count < 3 {
            return Err(Error::InvalidGrid(format!("{count} nodes per axis, at least 3 required")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        Ok(Self { min: -half_width, spacing: 2.0 * half_width / (count - 1) as f64, count })
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.min + self.spacing * i as f64
    }

    #[inline]
    pub fn max(&self) -> f64 {
        self.coord(self.count - 1)
    }

    /// Trapezoidal weight of node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.count {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }
}

/// The square `[-L, L]^2` sampled with (approximately) spacing `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub half_width: f64,
    pub spacing: f64,
    pub node_count: usize,
}

impl Grid2 {
    pub fn new(half_width: f64, spacing: f64) -> Result<Self> {
        let axis = Axis::symmetric(half_width, spacing)?;
        Ok(Self { half_width, spacing: axis.spacing, node_count: axis.count })
    }

    pub fn with_nodes(half_width: f64, node_count: usize) -> Result<Self> {
        let axis = Axis::with_count(half_width, node_count)?;
        Ok(Self { half_width, spacing: axis.spacing, node_count })
    }

    pub fn axis(&self) -> Axis {
        Axis { min: -self.half_width, spacing: self.spacing, count: self.node_count }
    }

    pub fn grid(&self) -> Grid {
        Grid::new(vec![self.axis(), self.axis()]).expect("Grid2 axes are valid")
    }
}

/// Cylinder `B^n x R^2` embedded in its bounding box: `n` tangential axes
/// followed by the two normal axes of a [`Grid2`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridN {
    pub tangential_dim: usize,
    pub tangential_half_width: f64,
    pub tangential_spacing: f64,
    pub normal: Grid2,
}

impl GridN {
    pub fn new(tangential_dim: usize, tangential_half_width: f64, tangential_spacing: f64, normal: Grid2) -> Result<Self> {
        if tangential_dim == 0 {
            return Err(Error::InvalidGrid("tangential dimension must be at least 1".into()));
        }
        let axis = Axis::symmetric(tangential_half_width, tangential_spacing)?;
        Ok(Self { tangential_dim, tangential_half_width, tangential_spacing: axis.spacing, normal })
    }

    pub fn tangential_axis(&self) -> Axis {
        Axis::symmetric(self.tangential_half_width, self.tangential_spacing).expect("validated at construction")
    }

    pub fn grid(&self) -> Grid {
        let mut axes = vec![self.tangential_axis(); self.tangential_dim];
        axes.push(self.normal.axis());
        axes.push(self.normal.axis());
        Grid::new(axes).expect("GridN axes are valid")
    }
}

/// General rectangular lattice in `dim` dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDescriptor", into = "GridDescriptor")]
pub struct Grid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDescriptor {
    pub axes: Vec<Axis>,
}

impl TryFrom<GridDescriptor> for Grid {
    type Error = Error;
    fn try_from(d: GridDescriptor) -> Result<Self> {
        Grid::new(d.axes)
    }
}

impl From<Grid> for GridDescriptor {
    fn from(g: Grid) -> Self {
        GridDescriptor { axes: g.axes }
    }
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.len() < 2 {
            return Err(Error::InvalidGrid("at least two axes required".into()));
        }
        for (k, ax) in axes.iter().enumerate() {
            if ax.count < 3 {
                return Err(Error::InvalidGrid(format!("axis {k} has {} nodes, at least 3 required", ax.count)));
            }
            if !(ax.spacing > 0.0 && ax.spacing.is_finite() && ax.min.is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {k} has invalid spacing {}", ax.spacing)));
            }
        }
        let mut strides = vec![1; axes.len()];
        for k in (0..axes.len() - 1).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].count;
        }
        let len = strides[0] * axes[0].count;
        Ok(Self { axes, strides, len })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    #[inline]
    pub fn axis(&self, a: usize) -> &Axis {
        &self.axes[a]
    }

    #[inline]
    pub fn stride(&self, a: usize) -> usize {
        self.strides[a]
    }

    #[inline]
    pub fn spacing(&self, a: usize) -> f64 {
        self.axes[a].spacing
    }

    /// Volume of one lattice cell.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    pub fn max_spacing(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).fold(0.0, f64::max)
    }

    /// Index of node along axis `a`.
    #[inline]
    pub fn coord_index(&self, idx: usize, a: usize) -> usize {
        (idx / self.strides[a]) % self.axes[a].count
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        (0..self.dim()).map(|a| self.coord_index(idx, a)).collect()
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    #[inline]
    pub fn coord(&self, idx: usize, a: usize) -> f64 {
        self.axes[a].coord(self.coord_index(idx, a))
    }

    pub fn position(&self, idx: usize) -> Vec<f64> {
        (0..self.dim()).map(|a| self.coord(idx, a)).collect()
    }

    /// True when the node has both neighbours along every axis.
    #[inline]
    pub fn is_interior(&self, idx: usize) -> bool {
        (0..self.dim()).all(|a| {
            let i = self.coord_index(idx, a);
            i > 0 && i + 1 < self.axes[a].count
        })
    }

    /// True when the node is at least `margin` nodes away from every face.
    pub fn is_inside_margin(&self, idx: usize, margin: usize) -> bool {
        (0..self.dim()).all(|a| {
            let i = self.coord_index(idx, a);
            i >= margin && i + margin < self.axes[a].count
        })
    }

    #[inline]
    pub fn forward(&self, idx: usize, a: usize) -> Option<usize> {
        (self.coord_index(idx, a) + 1 < self.axes[a].count).then(|| idx + self.strides[a])
    }

    #[inline]
    pub fn backward(&self, idx: usize, a: usize) -> Option<usize> {
        (self.coord_index(idx, a) > 0).then(|| idx - self.strides[a])
    }

    /// Second-order first-derivative stencil along axis `a`: centered in the
    /// interior, one-sided at the faces.
    #[inline]
    pub fn diff_stencil(&self, idx: usize, a: usize) -> [(usize, f64); 3] {
        let i = self.coord_index(idx, a);
        let n = self.axes[a].count;
        let s = self.strides[a];
        let inv = 0.5 / self.axes[a].spacing;
        if i == 0 {
            [(idx, -3.0 * inv), (idx + s, 4.0 * inv), (idx + 2 * s, -inv)]
        } else if i + 1 == n {
            [(idx, 3.0 * inv), (idx - s, -4.0 * inv), (idx - 2 * s, inv)]
        } else {
            [(idx + s, inv), (idx - s, -inv), (idx, 0.0)]
        }
    }

    /// First derivative of a nodal field along axis `a`.
    #[inline]
    pub fn diff<T>(&self, v: &[T], idx: usize, a: usize) -> T
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let i = self.coord_index(idx, a);
        let n = self.axes[a].count;
        let s = self.strides[a];
        let inv = 0.5 / self.axes[a].spacing;
        if i == 0 {
            ((v[idx + s] - v[idx]) * 4.0 - (v[idx + 2 * s] - v[idx])) * inv
        } else if i + 1 == n {
            ((v[idx] - v[idx - s]) * 4.0 - (v[idx] - v[idx - 2 * s])) * inv
        } else {
            (v[idx + s] - v[idx - s]) * inv
        }
    }

    /// Three-point second derivative; interior nodes only.
    #[inline]
    pub fn second_diff<T>(&self, v: &[T], idx: usize, a: usize) -> T
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let s = self.strides[a];
        let h = self.axes[a].spacing;
        ((v[idx + s] - v[idx]) - (v[idx] - v[idx - s])) * (1.0 / (h * h))
    }

    /// Compact mixed derivative `d_a d_b` (a != b); interior nodes only.
    #[inline]
    pub fn mixed_diff(&self, v: &[f64], idx: usize, a: usize, b: usize) -> f64 {
        let sa = self.strides[a];
        let sb = self.strides[b];
        let scale = 0.25 / (self.axes[a].spacing * self.axes[b].spacing);
        (v[idx + sa + sb] - v[idx + sa - sb] - v[idx - sa + sb] + v[idx - sa - sb]) * scale
    }

    /// Trapezoidal quadrature weight of a node.
    #[inline]
    pub fn weight(&self, idx: usize) -> f64 {
        (0..self.dim()).map(|a| self.axes[a].weight(self.coord_index(idx, a))).product()
    }

    /// Squared distance from node to a point.
    #[inline]
    pub fn dist2(&self, idx: usize, center: &[f64]) -> f64 {
        (0..self.dim())
            .map(|a| {
                let d = self.coord(idx, a) - center[a];
                d * d
            })
            .sum()
    }

    /// Ordered coordinate pairs `(a, b)` with `a < b`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let d = self.dim();
        (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect()
    }

    /// Whether the closed ball lies within the bounding box.
    pub fn contains_ball(&self, center: &[f64], radius: f64) -> bool {
        center.len() == self.dim()
            && self.axes.iter().zip(center).all(|(ax, c)| c - radius >= ax.min - 1e-12 && c + radius <= ax.max() + 1e-12)
    }
}

/// Integration region on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Region {
    All,
    /// Closed ball, masked by node membership.
    Ball { center: Vec<f64>, radius: f64 },
    /// Nodes at least `margin` nodes away from every face.
    Interior { margin: usize },
}

impl Region {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        Region::Ball { center: center.to_vec(), radius }
    }

    pub fn contains(&self, grid: &Grid, idx: usize) -> bool {
        match self {
            Region::All => true,
            Region::Ball { center, radius } => grid.dist2(idx, center) <= radius * radius,
            Region::Interior { margin } => grid.is_inside_margin(idx, *margin),
        }
    }

    /// Checks the region against a grid and returns its quadrature mask
    /// weights (zero outside the region).
    pub fn weights(&self, grid: &Grid) -> Result<Vec<f64>> {
        if let Region::Ball { center, radius } = self {
            if center.len() != grid.dim() {
                return Err(Error::Dimension(format!(
                    "ball center has {} coordinates, grid has {}",
                    center.len(),
                    grid.dim()
                )));
            }
            if !(*radius > 0.0) {
                return Err(Error::EmptyRegion);
            }
        }
        let w: Vec<f64> = (0..grid.len())
            .map(|i| if self.contains(grid, i) { grid.weight(i) } else { 0.0 })
            .collect();
        if w.iter().all(|&x| x == 0.0) {
            return Err(Error::EmptyRegion);
        }
        Ok(w)
    }
}

/// Pairwise (tree) summation with a fixed split so the result is a pure
/// function of the input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `sum_i w_i * f_i` with pairwise summation.
pub fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    let prod: Vec<f64> = weights.iter().zip(values).map(|(w, v)| w * v).collect();
    pairwise_sum(&prod)
}

/// Maximum of `|v|` over nodes selected by `keep`.
pub fn sup_norm_where(values: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max)
}
