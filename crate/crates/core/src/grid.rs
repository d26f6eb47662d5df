//! Uniform periodic grids with centered differences.
//!
//! Centered differences on a periodic grid commute exactly and satisfy exact
//! summation by parts, which is what makes the divergence and flatness
//! identities of the lattice theories hold to roundoff.

use serde::{Deserialize, Serialize};

/// A periodic grid in 0, 1, 2, or 3 spatial dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub spatial_dim: usize,
    pub nodes_per_dim: usize,
    pub spacing: f64,
}

impl Grid {
    pub fn new(spatial_dim: usize, nodes_per_dim: usize, spacing: f64) -> Self {
        assert!(spatial_dim <= 3, "at most three spatial dimensions");
        assert!(spatial_dim == 0 || nodes_per_dim >= 2);
        assert!(spacing > 0.0);
        Grid {
            spatial_dim,
            nodes_per_dim,
            spacing,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_dim.pow(self.spatial_dim as u32)
    }

    /// Lexicographic coordinates of a flat node index (axis 0 fastest).
    pub fn coords(&self, node: usize) -> [usize; 3] {
        let n = self.nodes_per_dim;
        let mut c = [0usize; 3];
        let mut rest = node;
        for axis in 0..self.spatial_dim {
            c[axis] = rest % n;
            rest /= n;
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        let n = self.nodes_per_dim;
        let mut idx = 0;
        for axis in (0..self.spatial_dim).rev() {
            idx = idx * n + (coords[axis] % n);
        }
        idx
    }

    /// Label like "(i,j,k)" used in constraint names and reports.
    pub fn node_label(&self, node: usize) -> String {
        let c = self.coords(node);
        match self.spatial_dim {
            0 => "()".to_string(),
            1 => format!("({})", c[0]),
            2 => format!("({},{})", c[0], c[1]),
            _ => format!("({},{},{})", c[0], c[1], c[2]),
        }
    }

    /// Flat index of the node shifted by `step` along `axis` (periodic).
    pub fn neighbor(&self, node: usize, axis: usize, step: isize) -> usize {
        let n = self.nodes_per_dim as isize;
        let mut c = self.coords(node);
        let moved = (c[axis] as isize + step).rem_euclid(n) as usize;
        c[axis] = moved;
        self.index(&c[..self.spatial_dim])
    }

    /// Centered difference along `axis` of a nodal scalar array.
    pub fn diff(&self, axis: usize, field: &[f64]) -> Vec<f64> {
        let nodes = self.node_count();
        debug_assert_eq!(field.len(), nodes);
        let inv = 1.0 / (2.0 * self.spacing);
        (0..nodes)
            .map(|i| (field[self.neighbor(i, axis, 1)] - field[self.neighbor(i, axis, -1)]) * inv)
            .collect()
    }

    /// Centered difference at a single node.
    pub fn diff_at(&self, axis: usize, field: &[f64], node: usize) -> f64 {
        (field[self.neighbor(node, axis, 1)] - field[self.neighbor(node, axis, -1)])
            / (2.0 * self.spacing)
    }

    /// Cell measure `spacing^spatial_dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.spatial_dim as i32)
    }

    /// Node position along `axis` (for initial-data construction).
    pub fn position(&self, node: usize, axis: usize) -> f64 {
        self.coords(node)[axis] as f64 * self.spacing
    }

    /// Physical extent along each axis.
    pub fn length(&self) -> f64 {
        self.nodes_per_dim as f64 * self.spacing
    }
}
