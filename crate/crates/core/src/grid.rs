//! Uniform 1-D grids, node fields with and without ghost values, the
//! difference operators, trapezoidal summation and the discrete norms.

use crate::{Error, Result};

/// Uniform grid on `[0, L]` with `K` cells, nodes `k = 0..=K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    length: f64,
    cells: usize,
}

impl Grid {
    pub fn new(length: f64, cells: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if cells < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 cells, got {cells}")));
        }
        let grid = Grid { length, cells };
        let reconstructed = grid.dx() * cells as f64;
        if ((reconstructed - length) / length).abs() > 1e-14 {
            return Err(Error::InvalidGrid(format!(
                "dx * K = {reconstructed} does not reproduce L = {length}"
            )));
        }
        Ok(grid)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        self.length / self.cells as f64
    }

    /// Node coordinate `k * dx`.
    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.dx()
    }
}

/// Values on the grid nodes `k = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField(Vec<f64>);

impl NodeField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "node field needs at least 3 entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("node field contains a non-finite entry".into()));
        }
        Ok(NodeField(values))
    }

    pub fn zeros(grid: &Grid) -> Self {
        NodeField(vec![0.0; grid.cells() + 1])
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        NodeField(vec![c; grid.cells() + 1])
    }

    /// Samples `f` at every node.
    pub fn sample(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        NodeField((0..=grid.cells()).map(|k| f(grid.node(k))).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl std::ops::Index<usize> for NodeField {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Node values plus the ghost entries at `k = -1` and `k = K+1`.
///
/// Stored contiguously; slot `i` holds node `k = i - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedField(Vec<f64>);

impl ExtendedField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 5 {
            return Err(Error::InvalidGrid(format!(
                "extended field needs at least 5 entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("extended field contains a non-finite entry".into()));
        }
        Ok(ExtendedField(values))
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        ExtendedField(vec![c; grid.cells() + 3])
    }

    /// Wraps interior values with explicitly supplied ghosts.
    pub fn from_interior(interior: &NodeField, ghost_left: f64, ghost_right: f64) -> Self {
        let mut v = Vec::with_capacity(interior.len() + 2);
        v.push(ghost_left);
        v.extend_from_slice(interior.values());
        v.push(ghost_right);
        ExtendedField(v)
    }

    /// Reflecting ghosts: `U_{-1} = U_1`, `U_{K+1} = U_{K-1}`.
    pub fn reflect(interior: &NodeField) -> Self {
        let n = interior.len();
        Self::from_interior(interior, interior[1], interior[n - 2])
    }

    /// Number of interior nodes, `K + 1`.
    pub fn interior_len(&self) -> usize {
        self.0.len() - 2
    }

    /// Value at node `k` where `k` may be `-1` or `K+1`.
    pub fn at(&self, k: isize) -> f64 {
        self.0[(k + 1) as usize]
    }

    pub fn set(&mut self, k: isize, v: f64) {
        self.0[(k + 1) as usize] = v;
    }

    /// The interior nodes `k = 0..=K` as a `NodeField`.
    pub fn interior(&self) -> NodeField {
        NodeField(self.0[1..self.0.len() - 1].to_vec())
    }
}

/// Read access by signed node index; out-of-range access panics.
pub trait GridField {
    fn value(&self, k: isize) -> f64;
    fn node_count(&self) -> usize;
}

impl GridField for NodeField {
    fn value(&self, k: isize) -> f64 {
        assert!(k >= 0, "node field indexed at ghost position {k}");
        self.0[k as usize]
    }
    fn node_count(&self) -> usize {
        self.0.len()
    }
}

impl GridField for ExtendedField {
    fn value(&self, k: isize) -> f64 {
        self.at(k)
    }
    fn node_count(&self) -> usize {
        self.interior_len()
    }
}

/// Forward difference `(f[k+1] - f[k]) / dx`.
pub fn diff_forward(f: &impl GridField, grid: &Grid, k: isize) -> f64 {
    (f.value(k + 1) - f.value(k)) / grid.dx()
}

/// Backward difference `(f[k] - f[k-1]) / dx`.
pub fn diff_backward(f: &impl GridField, grid: &Grid, k: isize) -> f64 {
    (f.value(k) - f.value(k - 1)) / grid.dx()
}

/// Central difference `(f[k+1] - f[k-1]) / (2 dx)`.
pub fn diff_central(f: &impl GridField, grid: &Grid, k: isize) -> f64 {
    (f.value(k + 1) - f.value(k - 1)) / (2.0 * grid.dx())
}

/// Second difference `(f[k+1] - 2 f[k] + f[k-1]) / dx^2`.
pub fn diff_second(f: &impl GridField, grid: &Grid, k: isize) -> f64 {
    let dx = grid.dx();
    (f.value(k + 1) - 2.0 * f.value(k) + f.value(k - 1)) / (dx * dx)
}

/// Trapezoidal sum `(f_0/2 + f_1 + ... + f_{K-1} + f_K/2) dx`.
pub fn trap_sum(f: &NodeField, grid: &Grid) -> f64 {
    let v = f.values();
    let last = v.len() - 1;
    let mut s = 0.5 * (v[0] + v[last]);
    for &x in &v[1..last] {
        s += x;
    }
    s * grid.dx()
}

/// Discrete Dirichlet seminorm `sqrt(sum_k (d+ f_k)^2 dx)`.
pub fn dirichlet_seminorm(f: &NodeField, grid: &Grid) -> f64 {
    let dx = grid.dx();
    let v = f.values();
    let mut s = 0.0;
    for k in 0..v.len() - 1 {
        let d = (v[k + 1] - v[k]) / dx;
        s += d * d;
    }
    (s * dx).sqrt()
}

/// Discrete L-infinity norm, `max_k |f_k|`.
pub fn linf_norm(f: &NodeField) -> f64 {
    f.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(k: usize) -> Grid {
        Grid::new(k as f64, k).unwrap()
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(0.0, 4).is_err());
        assert!(Grid::new(-1.0, 4).is_err());
        assert!(Grid::new(1.0, 1).is_err());
        assert!(Grid::new(f64::NAN, 4).is_err());
    }

    #[test]
    fn diff_forward_examples() {
        let g = unit_grid(3);
        let f = NodeField::new(vec![0.0, 1.0, 4.0, 9.0]).unwrap();
        assert_eq!(diff_forward(&f, &g, 0), 1.0);
        assert_eq!(diff_forward(&f, &g, 1), 3.0);
        assert_eq!(diff_forward(&f, &g, 2), 5.0);

        let c = NodeField::constant(&g, 5.0);
        assert_eq!(diff_forward(&c, &g, 1), 0.0);

        let ramp = NodeField::sample(&g, |x| x);
        assert_eq!(diff_forward(&ramp, &g, 0), 1.0);
    }

    #[test]
    fn diff_backward_examples() {
        let g = unit_grid(3);
        let f = NodeField::new(vec![0.0, 1.0, 4.0, 9.0]).unwrap();
        assert_eq!(diff_backward(&f, &g, 1), 1.0);
        assert_eq!(diff_backward(&f, &g, 2), 3.0);
        assert_eq!(diff_backward(&f, &g, 3), 5.0);
        let c = NodeField::constant(&g, 5.0);
        assert_eq!(diff_backward(&c, &g, 2), 0.0);
    }

    #[test]
    fn diff_central_examples() {
        let g = unit_grid(2);
        let f = NodeField::new(vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(diff_central(&f, &g, 1), 2.0);
        let ramp = NodeField::sample(&g, |x| x);
        assert_eq!(diff_central(&ramp, &g, 1), 1.0);
    }

    #[test]
    fn diff_second_examples() {
        let g = unit_grid(2);
        let f = NodeField::new(vec![1.0, 0.0, 1.0]).unwrap();
        assert_eq!(diff_second(&f, &g, 1), 2.0);
        let g8 = Grid::new(2.0, 8).unwrap();
        let q = NodeField::sample(&g8, |x| x * x);
        for k in 1..8 {
            assert!((diff_second(&q, &g8, k) - 2.0).abs() < 1e-12);
        }
        let lin = NodeField::sample(&g8, |x| 3.0 * x - 1.0);
        assert!(diff_second(&lin, &g8, 3).abs() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn node_field_ghost_access_panics() {
        let g = unit_grid(3);
        let f = NodeField::zeros(&g);
        diff_backward(&f, &g, 0);
    }

    #[test]
    fn trap_sum_examples() {
        let g = unit_grid(2);
        let f = NodeField::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(trap_sum(&f, &g), 4.0);
        let g2 = Grid::new(7.0, 5).unwrap();
        assert!((trap_sum(&NodeField::constant(&g2, 1.0), &g2) - 7.0).abs() < 1e-14);
        assert_eq!(trap_sum(&NodeField::zeros(&g2), &g2), 0.0);
    }

    #[test]
    fn dirichlet_seminorm_examples() {
        let g = Grid::new(4.0, 8).unwrap();
        assert_eq!(dirichlet_seminorm(&NodeField::constant(&g, 2.5), &g), 0.0);
        let s = 1.75;
        let ramp = NodeField::sample(&g, |x| s * x);
        assert!((dirichlet_seminorm(&ramp, &g) - s * 4.0_f64.sqrt()).abs() < 1e-12);
        let g1 = Grid::new(1.0, 1).err();
        assert!(g1.is_some());
        let g2 = unit_grid(2);
        let two = NodeField::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert!((dirichlet_seminorm(&two, &g2) - 2.0_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn linf_examples() {
        let g = unit_grid(2);
        assert_eq!(linf_norm(&NodeField::zeros(&g)), 0.0);
        assert_eq!(linf_norm(&NodeField::new(vec![-3.0, 1.0, 2.0]).unwrap()), 3.0);
        assert_eq!(linf_norm(&NodeField::constant(&g, -4.5)), 4.5);
    }

    #[test]
    fn extended_field_indexing() {
        let g = unit_grid(2);
        let f = ExtendedField::new(vec![9.0, 1.0, 2.0, 3.0, 8.0]).unwrap();
        assert_eq!(f.at(-1), 9.0);
        assert_eq!(f.at(3), 8.0);
        assert_eq!(f.interior().values(), &[1.0, 2.0, 3.0]);
        let r = ExtendedField::reflect(&f.interior());
        assert_eq!(r.at(-1), 2.0);
        assert_eq!(r.at(3), 2.0);
        let _ = g;
    }
}
