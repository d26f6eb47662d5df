//! Free relativistic point particle on a flat target: canonical chart
//! `(q^A, pi_A)`, mass-shell primary, reparametrization gauge flow.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::layout::{BlockLayout, StateVector};
use crate::scalar::ScalarFunction;
use crate::slicing::{LapseShift, SlicingGenerator};
use crate::system::{ConstraintRecord, PresymplecticSystem};
use crate::theories::{Observable, TargetMetric, TheorySpec};
use crate::twoform::{paired_form, TwoFormField};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParticleConfig {
    pub dim: usize,
    pub mass: f64,
    pub target_metric: Option<TargetMetric>,
    /// Constant Killing components `zeta^A` of the slicing generator.
    pub zeta_target: Vec<f64>,
    /// Gauge multiplier in the evolution equations; `1/(2m)` gives the
    /// unit-speed parametrization.
    pub multiplier: Option<f64>,
    pub seed_count: usize,
    pub rng_seed: u64,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        ParticleConfig {
            dim: 4,
            mass: 1.0,
            target_metric: None,
            zeta_target: vec![0.0; 4],
            multiplier: None,
            seed_count: 3,
            rng_seed: 1,
        }
    }
}

pub fn particle_build(config: &ParticleConfig) -> Result<TheorySpec> {
    let dim = config.dim;
    if config.mass <= 0.0 {
        return Err(CoreError::InvalidInput("mass must be positive".into()));
    }
    if config.zeta_target.len() != dim {
        return Err(CoreError::InvalidInput(
            "zeta_target must have one component per target dimension".into(),
        ));
    }
    let metric = config
        .target_metric
        .clone()
        .unwrap_or_else(|| TargetMetric::minkowski(dim));
    if metric.dim() != dim {
        return Err(CoreError::InvalidInput(
            "target metric dimension mismatch".into(),
        ));
    }
    let g_inv = Arc::new(metric.inverse()?);
    let mass = config.mass;
    let multiplier = config.multiplier.unwrap_or(1.0 / (2.0 * mass));

    let layout = Arc::new(BlockLayout::new(&[("q", 1, dim), ("pi", 1, dim)]));
    let pairs: Vec<(usize, usize)> = (0..dim).map(|a| (a, dim + a)).collect();
    let omega = TwoFormField::constant(paired_form(2 * dim, &pairs, 1.0));

    // Mass-shell constraint g^{AB} pi_A pi_B + m^2.
    let mass_shell = {
        let g_inv = Arc::clone(&g_inv);
        let g_inv_grad = Arc::clone(&g_inv);
        ScalarFunction::new(
            "mass_shell",
            move |p| {
                let pi = DVector::from_vec(p.block_vec("pi"));
                (pi.transpose() * &*g_inv * &pi)[(0, 0)] + mass * mass
            },
            move |p| {
                let pi = DVector::from_vec(p.block_vec("pi"));
                let dpi = &*g_inv_grad * pi * 2.0;
                let mut grad = DVector::zeros(2 * dim);
                for a in 0..dim {
                    grad[dim + a] = dpi[a];
                }
                grad
            },
        )
    };

    // H = -zeta^A pi_A.
    let zeta_frozen = config.zeta_target.clone();
    let hamiltonian = {
        let zeta = zeta_frozen.clone();
        let zeta_g = zeta_frozen.clone();
        ScalarFunction::new(
            "hamiltonian",
            move |p| -(0..dim).map(|a| zeta[a] * p.get("pi", 0, a)).sum::<f64>(),
            move |p| {
                let mut grad = DVector::zeros(p.dim());
                for a in 0..dim {
                    grad[dim + a] = -zeta_g[a];
                }
                grad
            },
        )
        .linear_flagged()
    };

    // Seeds exactly on the Minkowski shell when possible; otherwise the
    // algorithm's projection handles them.
    let minkowski = metric == TargetMetric::minkowski(dim);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut seeds = Vec::with_capacity(config.seed_count);
    for _ in 0..config.seed_count.max(1) {
        let mut p = StateVector::zeros(Arc::clone(&layout));
        for a in 0..dim {
            p.set("q", 0, a, rng.gen_range(-1.0..1.0));
        }
        let spatial: Vec<f64> = (1..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if minkowski {
            let sq: f64 = spatial.iter().map(|x| x * x).sum();
            p.set("pi", 0, 0, (sq + mass * mass).sqrt());
            for a in 1..dim {
                p.set("pi", 0, a, spatial[a - 1]);
            }
        } else {
            for a in 0..dim {
                p.set("pi", 0, a, rng.gen_range(-1.0..1.0));
            }
        }
        seeds.push(p);
    }

    let system = PresymplecticSystem {
        name: "particle".into(),
        layout: Arc::clone(&layout),
        omega,
        hamiltonian,
        primaries: vec![ConstraintRecord::declared(mass_shell.clone())],
        seed_points: seeds,
        ambient: None,
        node_labels: BTreeMap::new(),
    };

    // Evolution: dq^A = -zeta^A + 2 k g^{AB} pi_B, dpi_A = 0 (flat target,
    // constant generator).
    let g_inv_rhs = Arc::clone(&g_inv);
    let rhs = move |p: &StateVector, zg: &SlicingGenerator, _ls: &LapseShift| {
        let pi = DVector::from_vec(p.block_vec("pi"));
        let v = &*g_inv_rhs * pi * (2.0 * multiplier);
        let mut out = DVector::zeros(2 * dim);
        for a in 0..dim {
            let zeta_a = if zg.zeta.len() == dim { zg.zeta[a] } else { 0.0 };
            out[a] = -zeta_a + v[a];
        }
        out
    };

    let ham_at = move |p: &StateVector, zg: &SlicingGenerator| {
        -(0..dim)
            .map(|a| {
                let zeta_a = if zg.zeta.len() == dim { zg.zeta[a] } else { 0.0 };
                zeta_a * p.get("pi", 0, a)
            })
            .sum::<f64>()
    };

    // The time-reparametrization energy-momentum map vanishes on the shell.
    let energy_momentum = move |_p: &StateVector, _zg: &SlicingGenerator| 0.0;

    let observables = vec![
        Observable::new("H", {
            let zeta = zeta_frozen.clone();
            move |p: &StateVector| {
                -(0..dim).map(|a| zeta[a] * p.get("pi", 0, a)).sum::<f64>()
            }
        }),
        Observable::new("mass_residual", {
            let f = mass_shell.clone();
            move |p: &StateVector| f.value(p).abs()
        }),
        Observable::new("pi0", |p: &StateVector| p.get("pi", 0, 0)),
        // q^0 pi_1 - q^1 pi_0 is constant along the worldline and under
        // reparametrization kicks.
        Observable::new("orbital01", |p: &StateVector| {
            p.get("q", 0, 0) * p.get("pi", 0, 1) - p.get("q", 0, 1) * p.get("pi", 0, 0)
        }),
    ];

    let generator = SlicingGenerator {
        zeta0: 1.0,
        zeta: config.zeta_target.clone(),
        chi: Vec::new(),
    };

    Ok(TheorySpec::new(
        "particle",
        system,
        LapseShift::flat(dim.saturating_sub(1).max(1)),
        generator,
        rhs,
        ham_at,
        energy_momentum,
        None,
        Vec::new(),
        observables,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hamiltonian_value_example() {
        // zeta^A = (1,0,0,0), pi = (-1,0,0,0): H = -zeta.pi = 1
        let mut config = ParticleConfig::default();
        config.zeta_target = vec![1.0, 0.0, 0.0, 0.0];
        let theory = particle_build(&config).unwrap();
        let mut p = StateVector::zeros(Arc::clone(&theory.system.layout));
        p.set("pi", 0, 0, -1.0);
        assert_relative_eq!(theory.system.hamiltonian.value(&p), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mass_shell_vanishes_on_shell() {
        // pi = (-1,0,0,0), m = 1, Minkowski: h = -1 + 1 = 0
        let theory = particle_build(&ParticleConfig::default()).unwrap();
        let mut p = StateVector::zeros(Arc::clone(&theory.system.layout));
        p.set("pi", 0, 0, -1.0);
        let h = &theory.system.primaries[0].function;
        assert_relative_eq!(h.value(&p), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn on_shell_rhs_is_unit_velocity() {
        // zeta = 0, k = 1/(2m): dq^A = g^{AB} pi_B / m on the shell, dpi = 0.
        let theory = particle_build(&ParticleConfig::default()).unwrap();
        let p = theory.system.seed_points[0].clone();
        let zg = SlicingGenerator::transverse(1.0, vec![0.0; 4]);
        let rhs = theory.evolution_rhs(&p, &zg);
        let pi = DVector::from_vec(p.block_vec("pi"));
        // Minkowski raising
        assert_relative_eq!(rhs[0], -pi[0], epsilon = 1e-14);
        for a in 1..4 {
            assert_relative_eq!(rhs[a], pi[a], epsilon = 1e-14);
        }
        for a in 0..4 {
            assert_relative_eq!(rhs[4 + a], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn seeds_are_on_the_shell() {
        let theory = particle_build(&ParticleConfig::default()).unwrap();
        let h = &theory.system.primaries[0].function;
        for p in &theory.system.seed_points {
            assert!(h.value(p).abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_gradient_matches_fd() {
        let mut config = ParticleConfig::default();
        config.zeta_target = vec![0.3, -0.7, 0.2, 0.9];
        let theory = particle_build(&config).unwrap();
        let p = theory.system.seed_points[0].clone();
        assert!(theory.system.hamiltonian.gradient_check(&p, 1e-5) < 1e-6);
        assert!(theory.system.primaries[0].function.gradient_check(&p, 1e-5) < 1e-6);
    }
}
