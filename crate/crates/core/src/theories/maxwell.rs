//! Lattice electromagnetism on a static background: chart `(A_mu, E^i)` with
//! the temporal momentum eliminated, presymplectic form pairing `A_i` with
//! `E^i`, and a divergence-form evolution that conserves the discrete Gauss
//! expression to roundoff at every state.
//!
//! Field strength convention: `F_ij = D_i A_j - D_j A_i`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
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
pub struct MaxwellConfig {
    pub grid: Grid,
    /// Static background; `None` means Minkowski (unit lapse, zero shift,
    /// flat spatial metric).
    pub lapse_shift: Option<LapseShift>,
    pub generator: SlicingGenerator,
    pub seed_count: usize,
    pub rng_seed: u64,
}

impl Default for MaxwellConfig {
    fn default() -> Self {
        MaxwellConfig {
            grid: Grid::new(3, 3, 1.0 / 3.0),
            lapse_shift: None,
            generator: SlicingGenerator::transverse(1.0, vec![0.0, 0.0, 0.0]),
            seed_count: 3,
            rng_seed: 2,
        }
    }
}

/// Static geometry shared by all evaluators.
struct Geometry {
    grid: Grid,
    lapse: f64,
    shift: [f64; 3],
    gamma: DMatrix<f64>,
    gamma_inv: DMatrix<f64>,
    /// sqrt(det gamma)
    sg: f64,
    cell: f64,
}

impl Geometry {
    fn new(grid: Grid, ls: &LapseShift) -> Result<Self> {
        if grid.spatial_dim != 3 {
            return Err(CoreError::InvalidInput("maxwell needs a 3D grid".into()));
        }
        if ls.spatial_dim() != 3 {
            return Err(CoreError::InvalidInput(
                "background lapse-shift must be 3-dimensional".into(),
            ));
        }
        let gamma = ls.gamma_matrix();
        let det = gamma.determinant();
        if det <= 0.0 || ls.lapse <= 0.0 {
            return Err(CoreError::Signature(
                "background slice is not spacelike".into(),
            ));
        }
        let gamma_inv = gamma
            .clone()
            .try_inverse()
            .ok_or_else(|| CoreError::Signature("spatial metric is singular".into()))?;
        Ok(Geometry {
            grid,
            lapse: ls.lapse,
            shift: [ls.shift[0], ls.shift[1], ls.shift[2]],
            gamma,
            gamma_inv,
            sg: det.sqrt(),
            cell: grid.cell_volume(),
        })
    }

    fn a_field(&self, p: &StateVector, mu: usize) -> Vec<f64> {
        (0..self.grid.node_count()).map(|n| p.get("a", n, mu)).collect()
    }

    fn e_field(&self, p: &StateVector, i: usize) -> Vec<f64> {
        (0..self.grid.node_count()).map(|n| p.get("e", n, i)).collect()
    }

    /// `F_ij = D_i A_j - D_j A_i` for all pairs, as 3x3 nodal arrays.
    fn field_strength(&self, p: &StateVector) -> [[Vec<f64>; 3]; 3] {
        let nodes = self.grid.node_count();
        let a: Vec<Vec<f64>> = (1..4).map(|mu| self.a_field(p, mu)).collect();
        let mut f: [[Vec<f64>; 3]; 3] = Default::default();
        for i in 0..3 {
            for j in 0..3 {
                f[i][j] = vec![0.0; nodes];
            }
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let dij = self.grid.diff(i, &a[j]);
                let dji = self.grid.diff(j, &a[i]);
                for n in 0..nodes {
                    let v = dij[n] - dji[n];
                    f[i][j][n] = v;
                    f[j][i][n] = -v;
                }
            }
        }
        f
    }

    fn divergence_e(&self, p: &StateVector) -> Vec<f64> {
        let nodes = self.grid.node_count();
        let mut div = vec![0.0; nodes];
        for i in 0..3 {
            let e = self.e_field(p, i);
            let de = self.grid.diff(i, &e);
            for n in 0..nodes {
                div[n] += de[n];
            }
        }
        div
    }

    /// Hamiltonian density pieces multiplying zeta^0: electric + magnetic +
    /// shift coupling + the temporal-potential term.
    fn transverse_energy(&self, p: &StateVector) -> f64 {
        let nodes = self.grid.node_count();
        let f = self.field_strength(p);
        let e: Vec<Vec<f64>> = (0..3).map(|i| self.e_field(p, i)).collect();
        let a0 = self.a_field(p, 0);
        let ce = self.lapse / (2.0 * self.sg);
        let cb = self.sg / (4.0 * self.lapse);
        let mut total = 0.0;
        for n in 0..nodes {
            let mut elec = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    elec += self.gamma[(i, j)] * e[i][n] * e[j][n];
                }
            }
            let mut mag = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for m in 0..3 {
                            mag += self.gamma_inv[(i, k)]
                                * self.gamma_inv[(j, m)]
                                * f[i][j][n]
                                * f[k][m][n];
                        }
                    }
                }
            }
            let mut shift_term = 0.0;
            for m in 0..3 {
                for j in 0..3 {
                    shift_term += self.shift[m] * e[j][n] * f[m][j][n];
                }
            }
            let mut a0_term = 0.0;
            for i in 0..3 {
                a0_term += e[i][n] * self.grid.diff_at(i, &a0, n);
            }
            total += ce * elec + cb * mag + shift_term + a0_term;
        }
        total
    }

    /// Pieces multiplying zeta^m: `sum_n E^j D_m A_j`.
    fn momentum_density(&self, p: &StateVector, m: usize) -> f64 {
        let nodes = self.grid.node_count();
        let mut total = 0.0;
        for j in 0..3 {
            let aj = self.a_field(p, j + 1);
            let daj = self.grid.diff(m, &aj);
            let ej = self.e_field(p, j);
            for n in 0..nodes {
                total += ej[n] * daj[n];
            }
        }
        total
    }

    /// `sum_n E^i D_i chi`.
    fn chi_pairing(&self, p: &StateVector, chi: &[f64]) -> f64 {
        if chi.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..3 {
            let dchi = self.grid.diff(i, chi);
            let e = self.e_field(p, i);
            for n in 0..self.grid.node_count() {
                total += e[n] * dchi[n];
            }
        }
        total
    }

    fn hamiltonian(&self, p: &StateVector, zg: &SlicingGenerator) -> f64 {
        let mut h = zg.zeta0 * self.transverse_energy(p);
        for m in 0..3 {
            if zg.zeta[m] != 0.0 {
                h += zg.zeta[m] * self.momentum_density(p, m);
            }
        }
        h -= self.chi_pairing(p, &zg.chi);
        h * self.cell
    }

    fn hamiltonian_gradient(&self, p: &StateVector, zg: &SlicingGenerator) -> DVector<f64> {
        let nodes = self.grid.node_count();
        let mut grad = DVector::zeros(p.dim());
        let layout = &p.layout;
        let a_block = layout.block("a");
        let e_block = layout.block("e");
        let f = self.field_strength(p);
        let e: Vec<Vec<f64>> = (0..3).map(|i| self.e_field(p, i)).collect();
        let a0 = self.a_field(p, 0);
        let z0 = zg.zeta0;

        // dH/dE^i = cell * (z0 [ (N/sg) gamma_ij E^j + M^m F_mi + D_i A0 ]
        //                   + zeta^m D_m A_i - D_i chi)
        for i in 0..3 {
            let ai = self.a_field(p, i + 1);
            let da0 = self.grid.diff(i, &a0);
            let dchi = if zg.chi.is_empty() {
                vec![0.0; nodes]
            } else {
                self.grid.diff(i, &zg.chi)
            };
            let drags: Vec<Vec<f64>> = (0..3).map(|m| self.grid.diff(m, &ai)).collect();
            for n in 0..nodes {
                let mut v = 0.0;
                for j in 0..3 {
                    v += self.lapse / self.sg * self.gamma[(i, j)] * e[j][n];
                }
                for m in 0..3 {
                    v += self.shift[m] * f[m][i][n];
                }
                v += da0[n];
                v *= z0;
                for m in 0..3 {
                    v += zg.zeta[m] * drags[m][n];
                }
                v -= dchi[n];
                grad[e_block.index(n, i)] = v * self.cell;
            }
        }

        // dH/dA0 = -cell * z0 * div E
        let div = self.divergence_e(p);
        for n in 0..nodes {
            grad[a_block.index(n, 0)] = -self.cell * z0 * div[n];
        }

        // dH/dA_j = -cell * D_i [ (z0 sg / N) gamma^{ik} gamma^{jm} F_km
        //                         + z0 (M^i E^j - M^j E^i) + zeta^i E^j ]
        let c_mag = z0 * self.sg / self.lapse;
        for j in 0..3 {
            let mut accum = vec![0.0; nodes];
            for i in 0..3 {
                let mut flux = vec![0.0; nodes];
                for n in 0..nodes {
                    let mut raised = 0.0;
                    for k in 0..3 {
                        for m in 0..3 {
                            raised +=
                                self.gamma_inv[(i, k)] * self.gamma_inv[(j, m)] * f[k][m][n];
                        }
                    }
                    flux[n] = c_mag * raised
                        + z0 * (self.shift[i] * e[j][n] - self.shift[j] * e[i][n])
                        + zg.zeta[i] * e[j][n];
                }
                let dflux = self.grid.diff(i, &flux);
                for n in 0..nodes {
                    accum[n] += dflux[n];
                }
            }
            for n in 0..nodes {
                grad[a_block.index(n, j + 1)] = -self.cell * accum[n];
            }
        }
        grad
    }

    /// Evolution right-hand side; the electric-field equation is written as
    /// the divergence of an antisymmetric flux so the Gauss expression is
    /// conserved identically.
    fn rhs(&self, p: &StateVector, zg: &SlicingGenerator) -> DVector<f64> {
        let nodes = self.grid.node_count();
        let mut out = DVector::zeros(p.dim());
        let layout = &p.layout;
        let a_block = layout.block("a");
        let e_block = layout.block("e");
        let f = self.field_strength(p);
        let e: Vec<Vec<f64>> = (0..3).map(|i| self.e_field(p, i)).collect();
        let a0 = self.a_field(p, 0);
        let z0 = zg.zeta0;

        // dA_i/dl = z0 [ (N/sg) gamma_ij E^j + M^m F_mi + D_i A0 ]
        //           + zeta^m D_m A_i - D_i chi      (dA0/dl = 0, kinematic)
        for i in 0..3 {
            let ai = self.a_field(p, i + 1);
            let da0 = self.grid.diff(i, &a0);
            let dchi = if zg.chi.is_empty() {
                vec![0.0; nodes]
            } else {
                self.grid.diff(i, &zg.chi)
            };
            let drags: Vec<Vec<f64>> = (0..3).map(|m| self.grid.diff(m, &ai)).collect();
            for n in 0..nodes {
                let mut v = 0.0;
                for j in 0..3 {
                    v += self.lapse / self.sg * self.gamma[(i, j)] * e[j][n];
                }
                for m in 0..3 {
                    v += self.shift[m] * f[m][i][n];
                }
                v += da0[n];
                v *= z0;
                for m in 0..3 {
                    v += zg.zeta[m] * drags[m][n];
                }
                v -= dchi[n];
                out[a_block.index(n, i + 1)] = v;
            }
        }

        // dE^i/dl = D_j [ (z0 sg/N) gamma^{jk} gamma^{im} F_km
        //                 + (z0 M^j + zeta^j) E^i - (z0 M^i + zeta^i) E^j ]
        let c_mag = z0 * self.sg / self.lapse;
        for i in 0..3 {
            let mut accum = vec![0.0; nodes];
            for j in 0..3 {
                let bj = z0 * self.shift[j] + zg.zeta[j];
                let bi = z0 * self.shift[i] + zg.zeta[i];
                let mut flux = vec![0.0; nodes];
                for n in 0..nodes {
                    let mut raised = 0.0;
                    for k in 0..3 {
                        for m in 0..3 {
                            raised +=
                                self.gamma_inv[(j, k)] * self.gamma_inv[(i, m)] * f[k][m][n];
                        }
                    }
                    flux[n] = c_mag * raised + bj * e[i][n] - bi * e[j][n];
                }
                let dflux = self.grid.diff(j, &flux);
                for n in 0..nodes {
                    accum[n] += dflux[n];
                }
            }
            for n in 0..nodes {
                out[e_block.index(n, i)] = accum[n];
            }
        }
        out
    }

    /// Energy-momentum pairing, grouped as in the covariant computation:
    /// `E . D(chi - xi.A) + xi^j E^i F_ij - xi^0 (energy terms)`.
    fn energy_momentum(&self, p: &StateVector, zg: &SlicingGenerator) -> f64 {
        let nodes = self.grid.node_count();
        let f = self.field_strength(p);
        let e: Vec<Vec<f64>> = (0..3).map(|i| self.e_field(p, i)).collect();
        // chi - xi^mu A_mu as one nodal field
        let mut phase: Vec<f64> = (0..nodes)
            .map(|n| {
                let mut v = zg.chi_at(n) - zg.zeta0 * p.get("a", n, 0);
                for k in 0..3 {
                    v -= zg.zeta[k] * p.get("a", n, k + 1);
                }
                v
            })
            .collect();
        let mut total = 0.0;
        for i in 0..3 {
            let dphase = self.grid.diff(i, &phase);
            for n in 0..nodes {
                total += e[i][n] * dphase[n];
            }
        }
        for j in 0..3 {
            if zg.zeta[j] != 0.0 {
                for i in 0..3 {
                    for n in 0..nodes {
                        total += zg.zeta[j] * e[i][n] * f[i][j][n];
                    }
                }
            }
        }
        if zg.zeta0 != 0.0 {
            let ce = self.lapse / (2.0 * self.sg);
            let cb = self.sg / (4.0 * self.lapse);
            let mut energy = 0.0;
            for n in 0..nodes {
                let mut elec = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        elec += self.gamma[(i, j)] * e[i][n] * e[j][n];
                    }
                }
                let mut mag = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            for m in 0..3 {
                                mag += self.gamma_inv[(i, k)]
                                    * self.gamma_inv[(j, m)]
                                    * f[i][j][n]
                                    * f[k][m][n];
                            }
                        }
                    }
                }
                let mut shift_term = 0.0;
                for m in 0..3 {
                    for j in 0..3 {
                        shift_term += self.shift[m] * e[j][n] * f[m][j][n];
                    }
                }
                energy += ce * elec + cb * mag + shift_term;
            }
            total -= zg.zeta0 * energy;
        }
        phase.clear();
        total * self.cell
    }

    /// Momentum map for tangent generators: `E^i (D_i chi - xi^j D_j A_i)`.
    fn momentum_map(&self, p: &StateVector, zg: &SlicingGenerator) -> f64 {
        let nodes = self.grid.node_count();
        let mut total = 0.0;
        for i in 0..3 {
            let e = self.e_field(p, i);
            if !zg.chi.is_empty() {
                let dchi = self.grid.diff(i, &zg.chi);
                for n in 0..nodes {
                    total += e[n] * dchi[n];
                }
            }
            let ai = self.a_field(p, i + 1);
            for j in 0..3 {
                if zg.zeta[j] != 0.0 {
                    let daj = self.grid.diff(j, &ai);
                    for n in 0..nodes {
                        total -= zg.zeta[j] * e[n] * daj[n];
                    }
                }
            }
        }
        total * self.cell
    }
}

pub fn maxwell_build(config: &MaxwellConfig) -> Result<TheorySpec> {
    let ls = config
        .lapse_shift
        .clone()
        .unwrap_or_else(|| LapseShift::flat(3));
    let geom = Arc::new(Geometry::new(config.grid, &ls)?);
    let grid = config.grid;
    let nodes = grid.node_count();

    let layout = Arc::new(BlockLayout::new(&[("a", nodes, 4), ("e", nodes, 3)]));
    // omega = cell * sum_n dA_i ^ dE^i; A0 spans the kernel.
    let mut pairs = Vec::with_capacity(3 * nodes);
    {
        let a = layout.block("a");
        let e = layout.block("e");
        for n in 0..nodes {
            for i in 0..3 {
                pairs.push((a.index(n, i + 1), e.index(n, i)));
            }
        }
    }
    let omega = TwoFormField::constant(paired_form(
        layout.total_dim(),
        &pairs,
        grid.cell_volume(),
    ));

    let generator = config.generator.clone();
    if !generator.chi.is_empty() && generator.chi.len() != nodes {
        return Err(CoreError::InvalidInput(
            "chi field must have one value per node".into(),
        ));
    }
    if generator.zeta.len() != 3 {
        return Err(CoreError::InvalidInput(
            "maxwell generator needs three spatial components".into(),
        ));
    }

    let hamiltonian = {
        let geom = Arc::clone(&geom);
        let geom_g = Arc::clone(&geom);
        let zg = generator.clone();
        let zg_g = generator.clone();
        ScalarFunction::new(
            "hamiltonian",
            move |p| geom.hamiltonian(p, &zg),
            move |p| geom_g.hamiltonian_gradient(p, &zg_g),
        )
    };

    // Ambient: full cotangent chart including the temporal momentum, with
    // the sole primary E^0 = 0 per node.
    let ambient_layout = Arc::new(BlockLayout::new(&[
        ("a", nodes, 4),
        ("e", nodes, 3),
        ("e0", nodes, 1),
    ]));
    let mut amb_pairs = Vec::with_capacity(4 * nodes);
    {
        let a = ambient_layout.block("a");
        let e = ambient_layout.block("e");
        let e0 = ambient_layout.block("e0");
        for n in 0..nodes {
            amb_pairs.push((a.index(n, 0), e0.index(n, 0)));
            for i in 0..3 {
                amb_pairs.push((a.index(n, i + 1), e.index(n, i)));
            }
        }
    }
    let ambient_omega = TwoFormField::constant(paired_form(
        ambient_layout.total_dim(),
        &amb_pairs,
        grid.cell_volume(),
    ));
    let mut ambient_primaries = Vec::with_capacity(nodes);
    for n in 0..nodes {
        let amb_layout = Arc::clone(&ambient_layout);
        let amb_layout_g = Arc::clone(&ambient_layout);
        let dim = ambient_layout.total_dim();
        let f = ScalarFunction::new(
            format!("e0[{}]", grid.node_label(n)),
            move |p| p.coords[amb_layout.block("e0").index(n, 0)],
            move |p| {
                let mut g = DVector::zeros(p.dim().max(dim));
                g[amb_layout_g.block("e0").index(n, 0)] = 1.0;
                g
            },
        )
        .linear_flagged();
        ambient_primaries
            .push(ConstraintRecord::declared(f).with_node(grid.node_label(n)));
    }
    // Embedding of the chart into the ambient space: copy the shared blocks
    // and put the eliminated momentum on its constraint value E^0 = 0.
    let embed_layout = Arc::clone(&ambient_layout);
    let ambient = AmbientSpec::new(
        Arc::clone(&layout),
        Arc::clone(&ambient_layout),
        ambient_omega,
        move |p: &StateVector| {
            let mut q = StateVector::zeros(Arc::clone(&embed_layout));
            let nodes = embed_layout.block("e0").node_count;
            for n in 0..nodes {
                for mu in 0..4 {
                    q.set("a", n, mu, p.get("a", n, mu));
                }
                for i in 0..3 {
                    q.set("e", n, i, p.get("e", n, i));
                }
            }
            q
        },
        ambient_primaries,
    );

    // Seeds: random fields.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut seeds = Vec::with_capacity(config.seed_count.max(1));
    for _ in 0..config.seed_count.max(1) {
        let mut p = StateVector::zeros(Arc::clone(&layout));
        for n in 0..nodes {
            for mu in 0..4 {
                p.set("a", n, mu, rng.gen_range(-1.0..1.0));
            }
            for i in 0..3 {
                p.set("e", n, i, rng.gen_range(-1.0..1.0));
            }
        }
        seeds.push(p);
    }

    let mut node_labels = BTreeMap::new();
    let labels: Vec<String> = (0..nodes).map(|n| grid.node_label(n)).collect();
    node_labels.insert("a".to_string(), labels.clone());
    node_labels.insert("e".to_string(), labels);

    let system = PresymplecticSystem {
        name: "maxwell".into(),
        layout: Arc::clone(&layout),
        omega,
        hamiltonian,
        primaries: Vec::new(),
        seed_points: seeds,
        ambient: Some(ambient),
        node_labels,
    };

    // Oracle secondaries: the discrete Gauss expression per node.
    let mut oracle = Vec::with_capacity(nodes);
    for n in 0..nodes {
        let geom_v = Arc::clone(&geom);
        let geom_g = Arc::clone(&geom);
        let f = ScalarFunction::new(
            format!("gauss[{}]", grid.node_label(n)),
            move |p| {
                let mut v = 0.0;
                for i in 0..3 {
                    let e = geom_v.e_field(p, i);
                    v += geom_v.grid.diff_at(i, &e, n);
                }
                v
            },
            move |p| {
                let mut g = DVector::zeros(p.dim());
                let e_block = p.layout.block("e");
                let inv = 1.0 / (2.0 * geom_g.grid.spacing);
                for i in 0..3 {
                    g[e_block.index(geom_g.grid.neighbor(n, i, 1), i)] += inv;
                    g[e_block.index(geom_g.grid.neighbor(n, i, -1), i)] -= inv;
                }
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
        Observable::new("gauss_max", {
            let geom = Arc::clone(&geom);
            move |p: &StateVector| {
                geom.divergence_e(p)
                    .iter()
                    .fold(0.0_f64, |a, x| a.max(x.abs()))
            }
        }),
        Observable::new("field_energy", {
            let geom = Arc::clone(&geom);
            move |p: &StateVector| {
                let nodes = geom.grid.node_count();
                let f = geom.field_strength(p);
                let mut total = 0.0;
                for n in 0..nodes {
                    for i in 0..3 {
                        let e = p.get("e", n, i);
                        total += 0.5 * e * e;
                        for j in 0..3 {
                            total += 0.25 * f[i][j][n] * f[i][j][n];
                        }
                    }
                }
                total * geom.cell
            }
        }),
    ];

    let geom_rhs = Arc::clone(&geom);
    let geom_h = Arc::clone(&geom);
    let geom_em = Arc::clone(&geom);
    let geom_mm = Arc::clone(&geom);
    Ok(TheorySpec::new(
        "maxwell",
        system,
        ls,
        generator,
        move |p, zg, _ls| geom_rhs.rhs(p, zg),
        move |p, zg| geom_h.hamiltonian(p, zg),
        move |p, zg| geom_em.energy_momentum(p, zg),
        Some(Arc::new(move |p, zg| geom_mm.momentum_map(p, zg))),
        oracle,
        observables,
    ))
}
