//! Block layouts and state vectors.
//!
//! A state is a flat coordinate vector partitioned into named field blocks
//! (positions, momenta, metric components, ...). Each block stores
//! `node_count * components_per_node` reals, node-major.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{CoreError, Result};

/// One named block of a state layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub node_count: usize,
    pub components_per_node: usize,
    pub offset: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.node_count * self.components_per_node
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of component `comp` at node `node`.
    pub fn index(&self, node: usize, comp: usize) -> usize {
        debug_assert!(node < self.node_count && comp < self.components_per_node);
        self.offset + node * self.components_per_node + comp
    }
}

/// Ordered, contiguous partition of `[0, total_dim)` into named blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    blocks: Vec<Block>,
    total_dim: usize,
}

impl BlockLayout {
    /// Build a layout from `(name, node_count, components_per_node)` triples.
    /// Offsets are assigned consecutively in the order given.
    pub fn new(spec: &[(&str, usize, usize)]) -> Self {
        let mut blocks = Vec::with_capacity(spec.len());
        let mut offset = 0;
        for &(name, node_count, components_per_node) in spec {
            blocks.push(Block {
                name: name.to_string(),
                node_count,
                components_per_node,
                offset,
            });
            offset += node_count * components_per_node;
        }
        BlockLayout {
            blocks,
            total_dim: offset,
        }
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> &Block {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .unwrap_or_else(|| panic!("no block named {name:?}"))
    }

    pub fn has_block(&self, name: &str) -> bool {
        self.blocks.iter().any(|b| b.name == name)
    }
}

/// A point of the discretized phase space: flat coordinates plus their layout.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub coords: DVector<f64>,
    pub layout: Arc<BlockLayout>,
}

impl StateVector {
    pub fn new(coords: DVector<f64>, layout: Arc<BlockLayout>) -> Result<Self> {
        if coords.len() != layout.total_dim() {
            return Err(CoreError::LayoutMismatch {
                expected: layout.total_dim(),
                got: coords.len(),
            });
        }
        Ok(StateVector { coords, layout })
    }

    pub fn zeros(layout: Arc<BlockLayout>) -> Self {
        let n = layout.total_dim();
        StateVector {
            coords: DVector::zeros(n),
            layout,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Read component `comp` of block `block` at node `node`.
    pub fn get(&self, block: &str, node: usize, comp: usize) -> f64 {
        self.coords[self.layout.block(block).index(node, comp)]
    }

    pub fn set(&mut self, block: &str, node: usize, comp: usize, value: f64) {
        let idx = self.layout.block(block).index(node, comp);
        self.coords[idx] = value;
    }

    /// Copy one block out as a flat vector (node-major).
    pub fn block_vec(&self, block: &str) -> Vec<f64> {
        let b = self.layout.block(block);
        (0..b.len()).map(|i| self.coords[b.offset + i]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_offsets_cover_total_dim() {
        let layout = BlockLayout::new(&[("q", 1, 4), ("pi", 1, 4)]);
        assert_eq!(layout.total_dim(), 8);
        assert_eq!(layout.block("q").offset, 0);
        assert_eq!(layout.block("pi").offset, 4);
        let union: usize = layout.blocks().iter().map(Block::len).sum();
        assert_eq!(union, layout.total_dim());
        // strictly increasing offsets
        for w in layout.blocks().windows(2) {
            assert!(w[0].offset < w[1].offset);
        }
    }

    #[test]
    fn state_vector_rejects_wrong_dimension() {
        let layout = Arc::new(BlockLayout::new(&[("q", 2, 3)]));
        let err = StateVector::new(DVector::zeros(5), layout).unwrap_err();
        assert!(matches!(err, CoreError::LayoutMismatch { expected: 6, got: 5 }));
    }

    #[test]
    fn block_indexing_is_node_major() {
        let layout = Arc::new(BlockLayout::new(&[("a", 2, 3)]));
        let mut p = StateVector::zeros(layout);
        p.set("a", 1, 2, 7.0);
        assert_eq!(p.coords[5], 7.0);
        assert_eq!(p.get("a", 1, 2), 7.0);
    }
}
