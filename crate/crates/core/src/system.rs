//! Presymplectic systems: a chart on phase space, a form, a Hamiltonian,
//! declared constraints, and optionally an ambient symplectic description
//! used to classify primary constraints.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::layout::{BlockLayout, StateVector};
use crate::scalar::ScalarFunction;
use crate::twoform::TwoFormField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintClass {
    First,
    Second,
    Unknown,
}

impl std::fmt::Display for ConstraintClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintClass::First => f.write_str("first"),
            ConstraintClass::Second => f.write_str("second"),
            ConstraintClass::Unknown => f.write_str("unknown"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Provenance {
    Declared,
    Generated {
        from_level: usize,
        direction_index: usize,
    },
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Declared => f.write_str("declared"),
            Provenance::Generated {
                from_level,
                direction_index,
            } => write!(f, "generated(level {from_level}, dir {direction_index})"),
        }
    }
}

/// One scalar constraint with its discovery metadata.
#[derive(Debug, Clone)]
pub struct ConstraintRecord {
    pub function: ScalarFunction,
    /// 1 = primary, 2 = secondary, ...
    pub level: usize,
    pub class: ConstraintClass,
    pub provenance: Provenance,
    /// Lexicographic grid coordinates when the constraint is node-indexed.
    pub node: Option<String>,
}

impl ConstraintRecord {
    pub fn declared(function: ScalarFunction) -> Self {
        ConstraintRecord {
            function,
            level: 1,
            class: ConstraintClass::Unknown,
            provenance: Provenance::Declared,
            node: None,
        }
    }

    pub fn with_node(mut self, node: impl Into<String>) -> Self {
        self.node = Some(node.into());
        self
    }
}

/// Ambient symplectic description of the chart: the chart coordinates are a
/// subset of the ambient ones (matched block names), with the remaining
/// momenta fixed by `embed`.
#[derive(Clone)]
pub struct AmbientSpec {
    pub layout: Arc<BlockLayout>,
    pub omega: TwoFormField,
    chart_layout: Arc<BlockLayout>,
    embed: Arc<dyn Fn(&StateVector) -> StateVector + Send + Sync>,
    /// Flat chart index -> flat ambient index.
    chart_index_map: Arc<Vec<usize>>,
    /// Constraints that define the chart inside the ambient space
    /// (classified against the ambient symplectic form).
    pub primaries: Vec<ConstraintRecord>,
}

impl AmbientSpec {
    pub fn new(
        chart_layout: Arc<BlockLayout>,
        layout: Arc<BlockLayout>,
        omega: TwoFormField,
        embed: impl Fn(&StateVector) -> StateVector + Send + Sync + 'static,
        primaries: Vec<ConstraintRecord>,
    ) -> Self {
        let mut map = Vec::with_capacity(chart_layout.total_dim());
        for block in chart_layout.blocks() {
            let amb = layout.block(&block.name);
            assert_eq!(
                (amb.node_count, amb.components_per_node),
                (block.node_count, block.components_per_node),
                "ambient block {} must mirror the chart block",
                block.name
            );
            for i in 0..block.len() {
                map.push(amb.offset + i);
            }
        }
        AmbientSpec {
            layout,
            omega,
            chart_layout,
            embed: Arc::new(embed),
            chart_index_map: Arc::new(map),
            primaries,
        }
    }

    pub fn embed(&self, p: &StateVector) -> StateVector {
        (self.embed)(p)
    }

    /// Pull the chart components out of an ambient state.
    pub fn restrict(&self, p: &StateVector) -> StateVector {
        let coords = DVector::from_fn(self.chart_index_map.len(), |i, _| {
            p.coords[self.chart_index_map[i]]
        });
        StateVector::new(coords, Arc::clone(&self.chart_layout)).unwrap()
    }

    /// Lift a chart function to ambient coordinates by reading the shared
    /// components; the gradient is scattered into the ambient indices.
    pub fn lift(&self, f: &ScalarFunction) -> ScalarFunction {
        let map = Arc::clone(&self.chart_index_map);
        let map_g = Arc::clone(&self.chart_index_map);
        let chart_dim = map.len();
        let chart_layout = Arc::clone(&self.chart_layout);
        let chart_layout_g = Arc::clone(&self.chart_layout);
        let value_f = f.clone();
        let grad_f = f.clone();
        let amb_dim = self.layout.total_dim();
        let lifted = ScalarFunction::new(
            f.name.clone(),
            move |p| {
                let coords = DVector::from_fn(chart_dim, |i, _| p.coords[map[i]]);
                let q = StateVector::new(coords, Arc::clone(&chart_layout)).unwrap();
                value_f.value(&q)
            },
            move |p| {
                let coords = DVector::from_fn(chart_dim, |i, _| p.coords[map_g[i]]);
                let q = StateVector::new(coords, Arc::clone(&chart_layout_g)).unwrap();
                let g = grad_f.gradient(&q);
                let mut out = DVector::zeros(amb_dim);
                for i in 0..chart_dim {
                    out[map_g[i]] = g[i];
                }
                out
            },
        );
        if f.linear {
            lifted.linear_flagged()
        } else {
            lifted
        }
    }
}

impl std::fmt::Debug for AmbientSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AmbientSpec")
            .field("dim", &self.layout.total_dim())
            .field("primaries", &self.primaries.len())
            .finish()
    }
}

/// The data the constraint algorithm runs on.
#[derive(Clone)]
pub struct PresymplecticSystem {
    pub name: String,
    pub layout: Arc<BlockLayout>,
    pub omega: TwoFormField,
    pub hamiltonian: ScalarFunction,
    /// Declared level-1 constraints in chart coordinates (often empty when
    /// the chart already parametrizes the primary set).
    pub primaries: Vec<ConstraintRecord>,
    pub seed_points: Vec<StateVector>,
    pub ambient: Option<AmbientSpec>,
    /// Per-block human-readable node labels (lexicographic grid coordinates).
    pub node_labels: BTreeMap<String, Vec<String>>,
}

impl PresymplecticSystem {
    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// Label for the node of an axis-aligned direction, if any.
    pub fn axis_label(&self, flat_index: usize) -> Option<(String, String, usize)> {
        for block in self.layout.blocks() {
            if flat_index >= block.offset && flat_index < block.offset + block.len() {
                let local = flat_index - block.offset;
                let node = local / block.components_per_node;
                let comp = local % block.components_per_node;
                let label = self
                    .node_labels
                    .get(&block.name)
                    .and_then(|v| v.get(node).cloned())
                    .unwrap_or_else(|| node.to_string());
                return Some((block.name.clone(), label, comp));
            }
        }
        None
    }
}

impl std::fmt::Debug for PresymplecticSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PresymplecticSystem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("primaries", &self.primaries.len())
            .field("seeds", &self.seed_points.len())
            .finish()
    }
}

/// Numerical tolerances for the constraint algorithm.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value threshold for rank decisions.
    pub eps_rank: f64,
    /// Absolute threshold on constraint values (model units).
    pub eps_con: f64,
    /// Relative step for finite differences.
    pub fd_step: f64,
    /// Target residual for constraint projection.
    pub proj_tol: f64,
    pub proj_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_rank: 1e-9,
            eps_con: 1e-8,
            fd_step: 1e-5,
            proj_tol: 1e-12,
            proj_max_iter: 80,
        }
    }
}
