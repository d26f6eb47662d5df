//! The built-in theories, each packaged as a presymplectic system with an
//! explicit evolution right-hand side, an energy-momentum evaluator, and a
//! set of named observables.

mod chern_simons;
mod maxwell;
mod particle;
mod string;

pub use chern_simons::{chern_simons_build, ChernSimonsConfig};
pub use maxwell::{maxwell_build, MaxwellConfig};
pub use particle::{particle_build, ParticleConfig};
pub use string::{string_build, StringConfig};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::layout::StateVector;
use crate::scalar::ScalarFunction;
use crate::slicing::{LapseShift, SlicingGenerator};
use crate::system::PresymplecticSystem;

/// Constant symmetric target metric, e.g. Minkowski for the point particle
/// and the string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMetric {
    /// Row-major entries of `g_AB`.
    pub entries: Vec<Vec<f64>>,
}

impl TargetMetric {
    pub fn minkowski(dim: usize) -> Self {
        TargetMetric {
            entries: (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| {
                            if i != j {
                                0.0
                            } else if i == 0 {
                                -1.0
                            } else {
                                1.0
                            }
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn euclidean(dim: usize) -> Self {
        TargetMetric {
            entries: (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j])
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        self.matrix()
            .try_inverse()
            .ok_or_else(|| CoreError::InvalidInput("target metric is degenerate".into()))
    }
}

/// A named scalar diagnostic of the state.
#[derive(Clone)]
pub struct Observable {
    pub name: String,
    pub eval: Arc<dyn Fn(&StateVector) -> f64 + Send + Sync>,
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&StateVector) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Observable {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn value(&self, p: &StateVector) -> f64 {
        (self.eval)(p)
    }
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Observable({})", self.name)
    }
}

type RhsFn = dyn Fn(&StateVector, &SlicingGenerator, &LapseShift) -> DVector<f64> + Send + Sync;
type PairingFn = dyn Fn(&StateVector, &SlicingGenerator) -> f64 + Send + Sync;
type HamFn = dyn Fn(&StateVector, &SlicingGenerator) -> f64 + Send + Sync;

/// A theory's full instantaneous package.
#[derive(Clone)]
pub struct TheorySpec {
    pub name: String,
    pub system: PresymplecticSystem,
    /// Background slicing data used by the evolution equations.
    pub lapse_shift: LapseShift,
    /// The generator the system Hamiltonian was frozen at.
    pub generator: SlicingGenerator,
    rhs: Arc<RhsFn>,
    hamiltonian_at: Arc<HamFn>,
    energy_momentum: Arc<PairingFn>,
    momentum_map: Option<Arc<PairingFn>>,
    /// Independent per-node constraint functions expected from consistency
    /// (the oracle the reports are compared against).
    pub oracle_secondaries: Vec<ScalarFunction>,
    pub observables: Vec<Observable>,
}

impl TheorySpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        system: PresymplecticSystem,
        lapse_shift: LapseShift,
        generator: SlicingGenerator,
        rhs: impl Fn(&StateVector, &SlicingGenerator, &LapseShift) -> DVector<f64>
            + Send
            + Sync
            + 'static,
        hamiltonian_at: impl Fn(&StateVector, &SlicingGenerator) -> f64 + Send + Sync + 'static,
        energy_momentum: impl Fn(&StateVector, &SlicingGenerator) -> f64 + Send + Sync + 'static,
        momentum_map: Option<Arc<PairingFn>>,
        oracle_secondaries: Vec<ScalarFunction>,
        observables: Vec<Observable>,
    ) -> Self {
        TheorySpec {
            name: name.into(),
            system,
            lapse_shift,
            generator,
            rhs: Arc::new(rhs),
            hamiltonian_at: Arc::new(hamiltonian_at),
            energy_momentum: Arc::new(energy_momentum),
            momentum_map,
            oracle_secondaries,
            observables,
        }
    }

    /// Evolution right-hand side at `p` for the configured background.
    pub fn evolution_rhs(&self, p: &StateVector, zg: &SlicingGenerator) -> DVector<f64> {
        (self.rhs)(p, zg, &self.lapse_shift)
    }

    /// The instantaneous Hamiltonian as a function of the generator.
    pub fn hamiltonian_at(&self, p: &StateVector, zg: &SlicingGenerator) -> f64 {
        (self.hamiltonian_at)(p, zg)
    }

    /// Pairing of the energy-momentum map with a generator `(zeta, chi)`.
    pub fn energy_momentum(&self, p: &StateVector, zg: &SlicingGenerator) -> f64 {
        (self.energy_momentum)(p, zg)
    }

    /// Momentum-map pairing for tangent generators, when the theory has one.
    pub fn momentum_map(&self, p: &StateVector, zg: &SlicingGenerator) -> Option<f64> {
        self.momentum_map.as_ref().map(|f| f(p, zg))
    }

    /// `<E(p), (zeta, chi)> + H(p)`: zero for transverse generators of the
    /// dual theories, up to the sets stated per theory.
    pub fn energy_momentum_vs_hamiltonian(&self, p: &StateVector, zg: &SlicingGenerator) -> f64 {
        self.energy_momentum(p, zg) + self.hamiltonian_at(p, zg)
    }

    /// Energy-momentum pairing for tangent generators (`zeta0 = 0`): equals
    /// the momentum map where one exists.
    pub fn tangent_energy_momentum(&self, p: &StateVector, zg: &SlicingGenerator) -> f64 {
        debug_assert_eq!(zg.zeta0, 0.0);
        self.energy_momentum(p, zg)
    }

    pub fn observable(&self, name: &str) -> Option<&Observable> {
        self.observables.iter().find(|o| o.name == name)
    }
}

impl std::fmt::Debug for TheorySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TheorySpec")
            .field("name", &self.name)
            .field("dim", &self.system.dim())
            .finish()
    }
}
