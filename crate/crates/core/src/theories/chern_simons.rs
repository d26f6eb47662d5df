//! Lattice Chern-Simons theory on a 2-torus: chart `(A_0, A_1, A_2)` per
//! node with the momenta eliminated against `pi^i = eps^{0ij} A_j`, form
//! `2 eps^{0ij} dA_i ^ dA_j` (temporal direction in the kernel), and a
//! purely gauge evolution once the spatial flatness condition holds.
//!
//! `F_12 = D_1 A_2 - D_2 A_1`, `eps^{012} = +1`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::Grid;
use crate::layout::{BlockLayout, StateVector};
use crate::scalar::ScalarFunction;
use crate::slicing::{LapseShift, SlicingGenerator};
use crate::system::{AmbientSpec, ConstraintRecord, PresymplecticSystem};
use crate::theories::{Observable, TheorySpec};
use crate::twoform::{paired_form, TwoFormField};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChernSimonsConfig {
    pub grid: Grid,
    pub generator: SlicingGenerator,
    pub seed_count: usize,
    pub rng_seed: u64,
}

impl Default for ChernSimonsConfig {
    fn default() -> Self {
        ChernSimonsConfig {
            grid: Grid::new(2, 3, 1.0 / 3.0),
            generator: SlicingGenerator::transverse(1.0, vec![0.0, 0.0]),
            seed_count: 3,
            rng_seed: 3,
        }
    }
}

struct CsGeometry {
    grid: Grid,
    cell: f64,
}

impl CsGeometry {
    fn a_field(&self, p: &StateVector, mu: usize) -> Vec<f64> {
        (0..self.grid.node_count()).map(|n| p.get("a", n, mu)).collect()
    }

    fn flatness(&self, p: &StateVector) -> Vec<f64> {
        let a1 = self.a_field(p, 1);
        let a2 = self.a_field(p, 2);
        let d1a2 = self.grid.diff(0, &a2);
        let d2a1 = self.grid.diff(1, &a1);
        d1a2.iter().zip(d2a1.iter()).map(|(x, y)| x - y).collect()
    }

    /// `zeta^mu A_mu - chi_offset` as a nodal field.
    fn generator_potential(&self, p: &StateVector, zg: &SlicingGenerator) -> Vec<f64> {
        (0..self.grid.node_count())
            .map(|n| {
                zg.zeta0 * p.get("a", n, 0)
                    + zg.zeta[0] * p.get("a", n, 1)
                    + zg.zeta[1] * p.get("a", n, 2)
            })
            .collect()
    }

    fn hamiltonian(&self, p: &StateVector, zg: &SlicingGenerator) -> f64 {
        let nodes = self.grid.node_count();
        let f12 = self.flatness(p);
        let a0 = self.a_field(p, 0);
        let a1 = self.a_field(p, 1);
        let a2 = self.a_field(p, 2);
        let za = self.generator_potential(p, zg);
        let d1 = self.grid.diff(0, &za);
        let d2 = self.grid.diff(1, &za);
        let mut total = 0.0;
        for n in 0..nodes {
            total += -f12[n] * (zg.zeta[0] * a1[n] + zg.zeta[1] * a2[n])
                - zg.zeta0 * f12[n] * a0[n]
                + d1[n] * a2[n]
                - d2[n] * a1[n];
        }
        total * self.cell
    }

    fn hamiltonian_gradient(&self, p: &StateVector, zg: &SlicingGenerator) -> DVector<f64> {
        let nodes = self.grid.node_count();
        let mut grad = DVector::zeros(p.dim());
        let a_block = p.layout.block("a");
        let f12 = self.flatness(p);
        let za = self.generator_potential(p, zg);
        let d1za = self.grid.diff(0, &za);
        let d2za = self.grid.diff(1, &za);
        for n in 0..nodes {
            grad[a_block.index(n, 0)] = -2.0 * self.cell * zg.zeta0 * f12[n];
            grad[a_block.index(n, 1)] = -2.0 * self.cell * (d2za[n] + zg.zeta[0] * f12[n]);
            grad[a_block.index(n, 2)] = 2.0 * self.cell * (d1za[n] - zg.zeta[1] * f12[n]);
        }
        grad
    }

    /// `dA_i/dl = D_i(zeta^mu A_mu)`, `dA_0/dl = 0` (kinematic choice).
    fn rhs(&self, p: &StateVector, zg: &SlicingGenerator) -> DVector<f64> {
        let nodes = self.grid.node_count();
        let mut out = DVector::zeros(p.dim());
        let a_block = p.layout.block("a");
        let za = self.generator_potential(p, zg);
        for i in 0..2 {
            let d = self.grid.diff(i, &za);
            for n in 0..nodes {
                out[a_block.index(n, i + 1)] = d[n];
            }
        }
        out
    }

    /// Ersatz energy-momentum pairing:
    /// `eps^{0ij} [ A_j D_i(chi - xi.A) + A_j F_ik xi^k + A_0 F_12 xi^0 ]`.
    fn energy_momentum(&self, p: &StateVector, zg: &SlicingGenerator) -> f64 {
        let nodes = self.grid.node_count();
        let f12 = self.flatness(p);
        let a0 = self.a_field(p, 0);
        let a1 = self.a_field(p, 1);
        let a2 = self.a_field(p, 2);
        let psi: Vec<f64> = (0..nodes)
            .map(|n| {
                zg.chi_at(n)
                    - zg.zeta0 * a0[n]
                    - zg.zeta[0] * a1[n]
                    - zg.zeta[1] * a2[n]
            })
            .collect();
        let d1psi = self.grid.diff(0, &psi);
        let d2psi = self.grid.diff(1, &psi);
        let mut total = 0.0;
        for n in 0..nodes {
            total += a2[n] * d1psi[n] - a1[n] * d2psi[n]
                + f12[n] * (zg.zeta[0] * a1[n] + zg.zeta[1] * a2[n])
                + zg.zeta0 * a0[n] * f12[n];
        }
        total * self.cell
    }

    /// Genuine momentum map on the chart: `pi^nu (D_nu chi - xi^i D_i A_nu)`
    /// with `pi^1 = A_2`, `pi^2 = -A_1`.
    fn momentum_map(&self, p: &StateVector, zg: &SlicingGenerator) -> f64 {
        let nodes = self.grid.node_count();
        let a1 = self.a_field(p, 1);
        let a2 = self.a_field(p, 2);
        let chi: Vec<f64> = (0..nodes).map(|n| zg.chi_at(n)).collect();
        let d1chi = self.grid.diff(0, &chi);
        let d2chi = self.grid.diff(1, &chi);
        let mut drag1 = vec![0.0; nodes];
        let mut drag2 = vec![0.0; nodes];
        for i in 0..2 {
            if zg.zeta[i] != 0.0 {
                let d_a1 = self.grid.diff(i, &a1);
                let d_a2 = self.grid.diff(i, &a2);
                for n in 0..nodes {
                    drag1[n] += zg.zeta[i] * d_a1[n];
                    drag2[n] += zg.zeta[i] * d_a2[n];
                }
            }
        }
        let mut total = 0.0;
        for n in 0..nodes {
            total += a2[n] * (d1chi[n] - drag1[n]) - a1[n] * (d2chi[n] - drag2[n]);
        }
        total * self.cell
    }

    fn wilson_line(&self, p: &StateVector, axis: usize) -> f64 {
        let n = self.grid.nodes_per_dim;
        let mut total = 0.0;
        for i in 0..n {
            let coords = if axis == 0 { [i, 0] } else { [0, i] };
            let node = self.grid.index(&coords);
            total += p.get("a", node, axis + 1);
        }
        total * self.grid.spacing
    }
}

pub fn chern_simons_build(config: &ChernSimonsConfig) -> Result<TheorySpec> {
    if config.grid.spatial_dim != 2 {
        return Err(CoreError::InvalidInput(
            "chern-simons needs a 2D grid".into(),
        ));
    }
    let grid = config.grid;
    let nodes = grid.node_count();
    let geom = Arc::new(CsGeometry {
        grid,
        cell: grid.cell_volume(),
    });

    let generator = config.generator.clone();
    if generator.zeta.len() != 2 {
        return Err(CoreError::InvalidInput(
            "chern-simons generator needs two spatial components".into(),
        ));
    }
    if !generator.chi.is_empty() && generator.chi.len() != nodes {
        return Err(CoreError::InvalidInput(
            "chi field must have one value per node".into(),
        ));
    }

    let layout = Arc::new(BlockLayout::new(&[("a", nodes, 3)]));
    // omega pairs A_1 with A_2 at weight 2 * cell; A_0 spans the kernel.
    let mut pairs = Vec::with_capacity(nodes);
    {
        let a = layout.block("a");
        for n in 0..nodes {
            pairs.push((a.index(n, 1), a.index(n, 2)));
        }
    }
    let omega = TwoFormField::constant(paired_form(
        layout.total_dim(),
        &pairs,
        2.0 * grid.cell_volume(),
    ));

    let hamiltonian = {
        let geom_v = Arc::clone(&geom);
        let geom_g = Arc::clone(&geom);
        let zg = generator.clone();
        let zg_g = generator.clone();
        ScalarFunction::new(
            "hamiltonian",
            move |p| geom_v.hamiltonian(p, &zg),
            move |p| geom_g.hamiltonian_gradient(p, &zg_g),
        )
    };

    // Ambient cotangent chart (A_mu, pi^nu) with all three Legendre
    // relations as primaries.
    let ambient_layout = Arc::new(BlockLayout::new(&[("a", nodes, 3), ("pi", nodes, 3)]));
    let mut amb_pairs = Vec::with_capacity(3 * nodes);
    {
        let a = ambient_layout.block("a");
        let pi = ambient_layout.block("pi");
        for n in 0..nodes {
            for mu in 0..3 {
                amb_pairs.push((a.index(n, mu), pi.index(n, mu)));
            }
        }
    }
    let ambient_omega = TwoFormField::constant(paired_form(
        ambient_layout.total_dim(),
        &amb_pairs,
        grid.cell_volume(),
    ));
    let mut ambient_primaries = Vec::new();
    for n in 0..nodes {
        let label = grid.node_label(n);
        // pi^0 = 0
        {
            let al = Arc::clone(&ambient_layout);
            let alg = Arc::clone(&ambient_layout);
            let f = ScalarFunction::new(
                format!("pi0[{label}]"),
                move |p| p.coords[al.block("pi").index(n, 0)],
                move |p| {
                    let mut g = DVector::zeros(p.dim());
                    g[alg.block("pi").index(n, 0)] = 1.0;
                    g
                },
            )
            .linear_flagged();
            ambient_primaries.push(ConstraintRecord::declared(f).with_node(label.clone()));
        }
        // pi^1 - A_2 = 0 and pi^2 + A_1 = 0
        for i in 0..2 {
            let al = Arc::clone(&ambient_layout);
            let alg = Arc::clone(&ambient_layout);
            let sign = if i == 0 { -1.0 } else { 1.0 };
            let other = if i == 0 { 2 } else { 1 };
            let f = ScalarFunction::new(
                format!("legendre{}[{label}]", i + 1),
                move |p| {
                    p.coords[al.block("pi").index(n, i + 1)]
                        + sign * p.coords[al.block("a").index(n, other)]
                },
                move |p| {
                    let mut g = DVector::zeros(p.dim());
                    g[alg.block("pi").index(n, i + 1)] = 1.0;
                    g[alg.block("a").index(n, other)] = sign;
                    g
                },
            )
            .linear_flagged();
            ambient_primaries.push(ConstraintRecord::declared(f).with_node(label.clone()));
        }
    }
    let embed_layout = Arc::clone(&ambient_layout);
    let ambient = AmbientSpec::new(
        Arc::clone(&layout),
        Arc::clone(&ambient_layout),
        ambient_omega,
        move |p: &StateVector| {
            let mut q = StateVector::zeros(Arc::clone(&embed_layout));
            let nodes = embed_layout.block("a").node_count;
            for n in 0..nodes {
                for mu in 0..3 {
                    q.set("a", n, mu, p.get("a", n, mu));
                }
                q.set("pi", n, 1, p.get("a", n, 2));
                q.set("pi", n, 2, -p.get("a", n, 1));
            }
            q
        },
        ambient_primaries,
    );

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut seeds = Vec::with_capacity(config.seed_count.max(1));
    for _ in 0..config.seed_count.max(1) {
        let mut p = StateVector::zeros(Arc::clone(&layout));
        for x in p.coords.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        seeds.push(p);
    }

    let mut node_labels = BTreeMap::new();
    node_labels.insert(
        "a".to_string(),
        (0..nodes).map(|n| grid.node_label(n)).collect(),
    );

    let system = PresymplecticSystem {
        name: "chern_simons".into(),
        layout: Arc::clone(&layout),
        omega,
        hamiltonian,
        primaries: Vec::new(),
        seed_points: seeds,
        ambient: Some(ambient),
        node_labels,
    };

    // Oracle secondary: the flatness condition per node.
    let mut oracle = Vec::with_capacity(nodes);
    for n in 0..nodes {
        let geom_v = Arc::clone(&geom);
        let geom_g = Arc::clone(&geom);
        let f = ScalarFunction::new(
            format!("flatness[{}]", grid.node_label(n)),
            move |p| geom_v.flatness(p)[n],
            move |p| {
                let mut g = DVector::zeros(p.dim());
                let a = p.layout.block("a");
                let inv = 1.0 / (2.0 * geom_g.grid.spacing);
                g[a.index(geom_g.grid.neighbor(n, 0, 1), 2)] += inv;
                g[a.index(geom_g.grid.neighbor(n, 0, -1), 2)] -= inv;
                g[a.index(geom_g.grid.neighbor(n, 1, 1), 1)] -= inv;
                g[a.index(geom_g.grid.neighbor(n, 1, -1), 1)] += inv;
                g
            },
        )
        .linear_flagged();
        oracle.push(f);
    }

    let observables = vec![
        Observable::new("H", {
            let geom = Arc::clone(&geom);
            let zg = generator.clone();
            move |p: &StateVector| geom.hamiltonian(p, &zg)
        }),
        Observable::new("flatness_max", {
            let geom = Arc::clone(&geom);
            move |p: &StateVector| {
                geom.flatness(p).iter().fold(0.0_f64, |a, x| a.max(x.abs()))
            }
        }),
        Observable::new("wilson1", {
            let geom = Arc::clone(&geom);
            move |p: &StateVector| geom.wilson_line(p, 0)
        }),
        Observable::new("wilson2", {
            let geom = Arc::clone(&geom);
            move |p: &StateVector| geom.wilson_line(p, 1)
        }),
    ];

    let geom_rhs = Arc::clone(&geom);
    let geom_h = Arc::clone(&geom);
    let geom_em = Arc::clone(&geom);
    let geom_mm = Arc::clone(&geom);
    Ok(TheorySpec::new(
        "chern_simons",
        system,
        LapseShift::flat(2),
        generator,
        move |p, zg, _ls| geom_rhs.rhs(p, zg),
        move |p, zg| geom_h.hamiltonian(p, zg),
        move |p, zg| geom_em.energy_momentum(p, zg),
        Some(Arc::new(move |p, zg| geom_mm.momentum_map(p, zg))),
        oracle,
        observables,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn theory() -> TheorySpec {
        chern_simons_build(&ChernSimonsConfig::default()).unwrap()
    }

    fn random_state(theory: &TheorySpec, seed: u64) -> StateVector {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut p = StateVector::zeros(Arc::clone(&theory.system.layout));
        for x in p.coords.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        p
    }

    #[test]
    fn constant_connection_is_static_and_flat() {
        let theory = theory();
        let mut p = StateVector::zeros(Arc::clone(&theory.system.layout));
        let nodes = theory.system.layout.block("a").node_count;
        for n in 0..nodes {
            p.set("a", n, 0, 0.4);
            p.set("a", n, 1, -0.3);
            p.set("a", n, 2, 0.9);
        }
        let zg = SlicingGenerator::transverse(1.0, vec![0.2, -0.5]);
        let rhs = theory.evolution_rhs(&p, &zg);
        assert!(rhs.amax() < 1e-15);
        assert_eq!(theory.observable("flatness_max").unwrap().value(&p), 0.0);
        assert!(theory.hamiltonian_at(&p, &zg).abs() < 1e-15);
    }

    #[test]
    fn pure_gauge_connection_is_exactly_flat() {
        // A_i = D_i phi has F_12 = 0 to roundoff by commuting differences.
        let theory = theory();
        let grid = Grid::new(2, 3, 1.0 / 3.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let phi: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut p = StateVector::zeros(Arc::clone(&theory.system.layout));
        for i in 0..2 {
            let d = grid.diff(i, &phi);
            for n in 0..9 {
                p.set("a", n, i + 1, d[n]);
            }
        }
        let fmax = theory.observable("flatness_max").unwrap().value(&p);
        assert!(fmax < 1e-15, "flatness {fmax:.3e}");
    }

    #[test]
    fn hamiltonian_vanishes_on_flat_states() {
        // Project a random state onto flatness and evaluate H there.
        let theory = theory();
        let p0 = random_state(&theory, 21);
        let records: Vec<ConstraintRecord> = theory
            .oracle_secondaries
            .iter()
            .map(|f| ConstraintRecord::declared(f.clone()))
            .collect();
        let p = crate::gnh::project_to_constraints(&p0, &records, 1e-12, 60, 1e-9).unwrap();
        let zg = SlicingGenerator {
            zeta0: 1.2,
            zeta: vec![0.3, -0.8],
            chi: Vec::new(),
        };
        let scale = p.coords.amax().max(1.0);
        assert!(theory.hamiltonian_at(&p, &zg).abs() <= 1e-10 * scale);
    }

    #[test]
    fn hamiltonian_gradient_matches_fd() {
        let config = ChernSimonsConfig {
            generator: SlicingGenerator {
                zeta0: 0.7,
                zeta: vec![0.4, -0.9],
                chi: Vec::new(),
            },
            ..ChernSimonsConfig::default()
        };
        let theory = chern_simons_build(&config).unwrap();
        let p = random_state(&theory, 4);
        assert!(theory.system.hamiltonian.gradient_check(&p, 1e-5) < 1e-6);
        for c in theory.oracle_secondaries.iter().take(2) {
            assert!(c.gradient_check(&p, 1e-5) < 1e-6);
        }
    }

    #[test]
    fn duality_defect_is_the_smeared_flatness() {
        // <E,(zeta,chi)> + H = -cell * sum chi * F_12 exactly.
        let theory = theory();
        let p = random_state(&theory, 33);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(55);
        let chi: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let zg = SlicingGenerator {
            zeta0: 0.9,
            zeta: vec![-0.4, 0.6],
            chi: chi.clone(),
        };
        let defect = theory.energy_momentum_vs_hamiltonian(&p, &zg);
        let geom = CsGeometry {
            grid: Grid::new(2, 3, 1.0 / 3.0),
            cell: Grid::new(2, 3, 1.0 / 3.0).cell_volume(),
        };
        let f12 = geom.flatness(&p);
        let expected: f64 =
            -geom.cell * chi.iter().zip(f12.iter()).map(|(c, f)| c * f).sum::<f64>();
        assert_relative_eq!(defect, expected, epsilon = 1e-13);
        // chi = 0 anywhere: defect vanishes
        let zg0 = SlicingGenerator {
            chi: Vec::new(),
            ..zg
        };
        assert!(theory.energy_momentum_vs_hamiltonian(&p, &zg0).abs() < 1e-13);
    }

    #[test]
    fn tangent_pairing_equals_momentum_map() {
        let theory = theory();
        let p = random_state(&theory, 41);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(66);
        let zg = SlicingGenerator {
            zeta0: 0.0,
            zeta: vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            chi: (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        let em = theory.tangent_energy_momentum(&p, &zg);
        let mm = theory.momentum_map(&p, &zg).unwrap();
        assert_relative_eq!(em, mm, epsilon = 1e-13, max_relative = 1e-12);
    }

    #[test]
    fn wilson_lines_are_gauge_invariant() {
        let theory = theory();
        let grid = Grid::new(2, 3, 1.0 / 3.0);
        let p = random_state(&theory, 8);
        let w1 = theory.observable("wilson1").unwrap().value(&p);
        let w2 = theory.observable("wilson2").unwrap().value(&p);
        // gauge kick A -> A + D phi
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let phi: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut q = p.clone();
        for i in 0..2 {
            let d = grid.diff(i, &phi);
            for n in 0..9 {
                q.set("a", n, i + 1, p.get("a", n, i + 1) + d[n]);
            }
        }
        assert_relative_eq!(
            theory.observable("wilson1").unwrap().value(&q),
            w1,
            epsilon = 1e-13
        );
        assert_relative_eq!(
            theory.observable("wilson2").unwrap().value(&q),
            w2,
            epsilon = 1e-13
        );
    }
}
