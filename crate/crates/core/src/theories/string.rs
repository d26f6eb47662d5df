//! Closed bosonic string on a flat target: chart `(phi^A, pi_A, h_ab)` per
//! node of a periodic 1D grid, with the metric momenta eliminated. The
//! worldsheet metric block sits in the kernel of the form; its per-node
//! lapse-shift split feeds the densitized constraint combination that is the
//! Hamiltonian.
//!
//! Nodewise constraints: `h = pi^2 + (Dphi)^2` and `j = pi . Dphi`.

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
use crate::system::PresymplecticSystem;
use crate::theories::{Observable, TargetMetric, TheorySpec};
use crate::twoform::{paired_form, TwoFormField};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StringConfig {
    pub grid: Grid,
    pub target_metric: Option<TargetMetric>,
    /// Uniform worldsheet metric for the seeds, as lapse-shift data
    /// (1-dimensional). `None` means the flat metric diag(-1, 1).
    pub worldsheet: Option<LapseShift>,
    pub generator: SlicingGenerator,
    pub seed_count: usize,
    pub rng_seed: u64,
    /// Relative amplitude of the random per-node wiggle added to the seed
    /// worldsheet metric.
    pub metric_jitter: f64,
}

impl Default for StringConfig {
    fn default() -> Self {
        StringConfig {
            grid: Grid::new(1, 8, 0.125),
            target_metric: None,
            worldsheet: None,
            generator: SlicingGenerator::transverse(1.0, vec![0.0]),
            seed_count: 3,
            rng_seed: 4,
            metric_jitter: 0.1,
        }
    }
}

/// Per-node split of the worldsheet metric components `(h00, h01, h11)`.
/// Returns `(a, b)` with `a = zeta0 N / (2 sqrt(gamma))`,
/// `b = zeta0 M + zeta1`; NaN on degenerate metrics so blow-up detection
/// catches them.
fn metric_coefficients(h00: f64, h01: f64, h11: f64, zeta0: f64, zeta1: f64) -> (f64, f64) {
    if h11 <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let shift = h01 / h11;
    let n_sq = h01 * shift - h00;
    if n_sq <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let a = 0.5 * zeta0 * (n_sq / h11).sqrt();
    let b = zeta0 * shift + zeta1;
    (a, b)
}

struct StringGeometry {
    grid: Grid,
    target_dim: usize,
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
}

impl StringGeometry {
    fn phi(&self, p: &StateVector, a: usize) -> Vec<f64> {
        (0..self.grid.node_count()).map(|n| p.get("phi", n, a)).collect()
    }

    fn pi(&self, p: &StateVector, a: usize) -> Vec<f64> {
        (0..self.grid.node_count()).map(|n| p.get("pi", n, a)).collect()
    }

    fn dphi(&self, p: &StateVector) -> Vec<Vec<f64>> {
        (0..self.target_dim)
            .map(|a| self.grid.diff(0, &self.phi(p, a)))
            .collect()
    }

    fn coefficients(&self, p: &StateVector, zg: &SlicingGenerator) -> (Vec<f64>, Vec<f64>) {
        let nodes = self.grid.node_count();
        let mut a = vec![0.0; nodes];
        let mut b = vec![0.0; nodes];
        for n in 0..nodes {
            let (an, bn) = metric_coefficients(
                p.get("h", n, 0),
                p.get("h", n, 1),
                p.get("h", n, 2),
                zg.zeta0,
                zg.zeta[0],
            );
            a[n] = an;
            b[n] = bn;
        }
        (a, b)
    }

    /// Nodewise `pi^2 + (Dphi)^2`.
    fn super_hamiltonian(&self, p: &StateVector) -> Vec<f64> {
        let nodes = self.grid.node_count();
        let dphi = self.dphi(p);
        let pi: Vec<Vec<f64>> = (0..self.target_dim).map(|a| self.pi(p, a)).collect();
        // The two quadratic forms are accumulated separately in mirrored
        // order so exact null data cancels to literal zero.
        (0..nodes)
            .map(|n| {
                let mut pi_sq = 0.0;
                let mut dphi_sq = 0.0;
                for a in 0..self.target_dim {
                    for b in 0..self.target_dim {
                        pi_sq += self.g_inv[(a, b)] * pi[a][n] * pi[b][n];
                        dphi_sq += self.g[(a, b)] * dphi[a][n] * dphi[b][n];
                    }
                }
                pi_sq + dphi_sq
            })
            .collect()
    }

    /// Nodewise `pi . Dphi`.
    fn super_momentum(&self, p: &StateVector) -> Vec<f64> {
        let nodes = self.grid.node_count();
        let dphi = self.dphi(p);
        let pi: Vec<Vec<f64>> = (0..self.target_dim).map(|a| self.pi(p, a)).collect();
        (0..nodes)
            .map(|n| {
                (0..self.target_dim)
                    .map(|a| pi[a][n] * dphi[a][n])
                    .sum::<f64>()
            })
            .collect()
    }

    fn hamiltonian(&self, p: &StateVector, zg: &SlicingGenerator) -> f64 {
        let (a, b) = self.coefficients(p, zg);
        let sh = self.super_hamiltonian(p);
        let sm = self.super_momentum(p);
        let mut total = 0.0;
        for n in 0..self.grid.node_count() {
            total += a[n] * sh[n] + b[n] * sm[n];
        }
        total * self.grid.spacing
    }

    fn hamiltonian_gradient(&self, p: &StateVector, zg: &SlicingGenerator) -> DVector<f64> {
        let nodes = self.grid.node_count();
        let dim = self.target_dim;
        let mut grad = DVector::zeros(p.dim());
        let phi_block = p.layout.block("phi");
        let pi_block = p.layout.block("pi");
        let h_block = p.layout.block("h");
        let (a, b) = self.coefficients(p, zg);
        let dphi = self.dphi(p);
        let pi: Vec<Vec<f64>> = (0..dim).map(|c| self.pi(p, c)).collect();
        let dx = self.grid.spacing;

        // dH/dpi_A(n) = dx (2 a g^{AB} pi_B + b Dphi^A)
        for n in 0..nodes {
            for c in 0..dim {
                let mut v = 0.0;
                for d in 0..dim {
                    v += 2.0 * a[n] * self.g_inv[(c, d)] * pi[d][n];
                }
                v += b[n] * dphi[c][n];
                grad[pi_block.index(n, c)] = dx * v;
            }
        }

        // dH/dphi^A(k) = -dx [ 2 g_{AB} D(a Dphi^B) + D(b pi_A) ](k)
        for c in 0..dim {
            let mut weighted = vec![0.0; nodes];
            for n in 0..nodes {
                let mut v = 0.0;
                for d in 0..dim {
                    v += 2.0 * self.g[(c, d)] * a[n] * dphi[d][n];
                }
                v += b[n] * pi[c][n];
                weighted[n] = v;
            }
            let dw = self.grid.diff(0, &weighted);
            for k in 0..nodes {
                grad[phi_block.index(k, c)] = -dx * dw[k];
            }
        }

        // dH/dh_c(n) = dx ( da/dh_c * sh + db/dh_c * sm )
        let sh = self.super_hamiltonian(p);
        let sm = self.super_momentum(p);
        for n in 0..nodes {
            let h00 = p.get("h", n, 0);
            let h01 = p.get("h", n, 1);
            let h11 = p.get("h", n, 2);
            let u = h01 / h11;
            let w = h00 / h11;
            let disc = (u * u - w).sqrt(); // = N / sqrt(gamma)
            let z0 = zg.zeta0;
            let da = [
                -z0 / (4.0 * h11 * disc),
                z0 * u / (2.0 * h11 * disc),
                z0 * (w - 2.0 * u * u) / (4.0 * h11 * disc),
            ];
            let db = [0.0, z0 / h11, -z0 * u / h11];
            for c in 0..3 {
                grad[h_block.index(n, c)] = dx * (da[c] * sh[n] + db[c] * sm[n]);
            }
        }
        grad
    }

    /// `dphi^A = 2 a g^{AB} pi_B + b Dphi^A`,
    /// `dpi_A = 2 g_{AB} D(a Dphi^B) + D(b pi_A)`, `dh = 0`.
    fn rhs(&self, p: &StateVector, zg: &SlicingGenerator) -> DVector<f64> {
        let nodes = self.grid.node_count();
        let dim = self.target_dim;
        let mut out = DVector::zeros(p.dim());
        let phi_block = p.layout.block("phi");
        let pi_block = p.layout.block("pi");
        let (a, b) = self.coefficients(p, zg);
        let dphi = self.dphi(p);
        let pi: Vec<Vec<f64>> = (0..dim).map(|c| self.pi(p, c)).collect();
        for n in 0..nodes {
            for c in 0..dim {
                let mut v = 0.0;
                for d in 0..dim {
                    v += 2.0 * a[n] * self.g_inv[(c, d)] * pi[d][n];
                }
                v += b[n] * dphi[c][n];
                out[phi_block.index(n, c)] = v;
            }
        }
        for c in 0..dim {
            let mut weighted = vec![0.0; nodes];
            for n in 0..nodes {
                let mut v = 0.0;
                for d in 0..dim {
                    v += 2.0 * self.g[(c, d)] * a[n] * dphi[d][n];
                }
                v += b[n] * pi[c][n];
                weighted[n] = v;
            }
            let dw = self.grid.diff(0, &weighted);
            for n in 0..nodes {
                out[pi_block.index(n, c)] = dw[n];
            }
        }
        out
    }
}

pub fn string_build(config: &StringConfig) -> Result<TheorySpec> {
    if config.grid.spatial_dim != 1 {
        return Err(CoreError::InvalidInput("string needs a 1D grid".into()));
    }
    let grid = config.grid;
    let nodes = grid.node_count();
    let target = config
        .target_metric
        .clone()
        .unwrap_or_else(|| TargetMetric::minkowski(2));
    let dim = target.dim();
    let geom = Arc::new(StringGeometry {
        grid,
        target_dim: dim,
        g: target.matrix(),
        g_inv: target.inverse()?,
    });

    let generator = config.generator.clone();
    if generator.zeta.len() != 1 {
        return Err(CoreError::InvalidInput(
            "string generator needs one spatial component".into(),
        ));
    }

    // Uniform seed worldsheet metric from lapse-shift data.
    let ws = config.worldsheet.clone().unwrap_or_else(|| LapseShift {
        lapse: 1.0,
        shift: vec![0.0],
        gamma: vec![vec![1.0]],
    });
    if ws.spatial_dim() != 1 {
        return Err(CoreError::InvalidInput(
            "worldsheet lapse-shift must be 1-dimensional".into(),
        ));
    }
    let gamma = ws.gamma[0][0];
    if gamma <= 0.0 || ws.lapse <= 0.0 {
        return Err(CoreError::Signature(
            "worldsheet metric is degenerate".into(),
        ));
    }
    let h_uniform = [
        gamma * ws.shift[0] * ws.shift[0] - ws.lapse * ws.lapse,
        gamma * ws.shift[0],
        gamma,
    ];

    let layout = Arc::new(BlockLayout::new(&[
        ("phi", nodes, dim),
        ("pi", nodes, dim),
        ("h", nodes, 3),
    ]));
    let mut pairs = Vec::with_capacity(nodes * dim);
    {
        let phi = layout.block("phi");
        let pi = layout.block("pi");
        for n in 0..nodes {
            for c in 0..dim {
                pairs.push((phi.index(n, c), pi.index(n, c)));
            }
        }
    }
    let omega = TwoFormField::constant(paired_form(
        layout.total_dim(),
        &pairs,
        grid.spacing,
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

    // Seeds on the exact discrete null branch pi_0 = Dphi^1, pi_1 = -Dphi^0
    // (a smooth component of the constraint variety where the nodewise
    // constraint brackets vanish identically). Requires a Lorentzian target
    // with the standard (0,1) null plane; otherwise fall back to the
    // constant sector.
    let lorentzian =
        dim >= 2 && target.entries[0][0] < 0.0 && target == TargetMetric::minkowski(dim);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut seeds = Vec::with_capacity(config.seed_count.max(1));
    for _ in 0..config.seed_count.max(1) {
        let mut p = StateVector::zeros(Arc::clone(&layout));
        if lorentzian {
            let phi0: Vec<f64> = (0..nodes).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let phi1: Vec<f64> = (0..nodes).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d0 = grid.diff(0, &phi0);
            let d1 = grid.diff(0, &phi1);
            for n in 0..nodes {
                p.set("phi", n, 0, phi0[n]);
                p.set("phi", n, 1, phi1[n]);
                p.set("pi", n, 0, d1[n]);
                p.set("pi", n, 1, -d0[n]);
                for c in 2..dim {
                    p.set("phi", n, c, 0.3);
                }
            }
        } else {
            let c0 = rng.gen_range(-1.0..1.0);
            for n in 0..nodes {
                for c in 0..dim {
                    p.set("phi", n, c, c0);
                }
            }
        }
        for n in 0..nodes {
            let jitter = config.metric_jitter;
            p.set("h", n, 0, h_uniform[0] - jitter * rng.gen_range(0.0..1.0));
            p.set("h", n, 1, h_uniform[1] + jitter * rng.gen_range(-1.0..1.0));
            p.set("h", n, 2, h_uniform[2] + jitter * rng.gen_range(0.0..1.0));
        }
        seeds.push(p);
    }

    let mut node_labels = BTreeMap::new();
    let labels: Vec<String> = (0..nodes).map(|n| grid.node_label(n)).collect();
    for name in ["phi", "pi", "h"] {
        node_labels.insert(name.to_string(), labels.clone());
    }

    let system = PresymplecticSystem {
        name: "string".into(),
        layout: Arc::clone(&layout),
        omega,
        hamiltonian,
        primaries: Vec::new(),
        seed_points: seeds,
        ambient: None,
        node_labels,
    };

    // Oracle secondaries: nodewise super-hamiltonian and super-momentum.
    let mut oracle = Vec::with_capacity(2 * nodes);
    for n in 0..nodes {
        let geom_v = Arc::clone(&geom);
        let geom_g = Arc::clone(&geom);
        oracle.push(ScalarFunction::new(
            format!("superham[{}]", grid.node_label(n)),
            move |p| geom_v.super_hamiltonian(p)[n],
            move |p| {
                let dim = geom_g.target_dim;
                let mut g = DVector::zeros(p.dim());
                let phi_block = p.layout.block("phi");
                let pi_block = p.layout.block("pi");
                let dphi = geom_g.dphi(p);
                let inv = 1.0 / (2.0 * geom_g.grid.spacing);
                let plus = geom_g.grid.neighbor(n, 0, 1);
                let minus = geom_g.grid.neighbor(n, 0, -1);
                for c in 0..dim {
                    let mut dpi = 0.0;
                    for d in 0..dim {
                        dpi += 2.0 * geom_g.g_inv[(c, d)] * p.get("pi", n, d);
                    }
                    g[pi_block.index(n, c)] = dpi;
                    let mut lowered = 0.0;
                    for d in 0..dim {
                        lowered += 2.0 * geom_g.g[(c, d)] * dphi[d][n];
                    }
                    g[phi_block.index(plus, c)] += lowered * inv;
                    g[phi_block.index(minus, c)] -= lowered * inv;
                }
                g
            },
        ));
        let geom_v = Arc::clone(&geom);
        let geom_g = Arc::clone(&geom);
        oracle.push(ScalarFunction::new(
            format!("supermom[{}]", grid.node_label(n)),
            move |p| geom_v.super_momentum(p)[n],
            move |p| {
                let dim = geom_g.target_dim;
                let mut g = DVector::zeros(p.dim());
                let phi_block = p.layout.block("phi");
                let pi_block = p.layout.block("pi");
                let dphi = geom_g.dphi(p);
                let inv = 1.0 / (2.0 * geom_g.grid.spacing);
                let plus = geom_g.grid.neighbor(n, 0, 1);
                let minus = geom_g.grid.neighbor(n, 0, -1);
                for c in 0..dim {
                    g[pi_block.index(n, c)] = dphi[c][n];
                    let pi_c = p.get("pi", n, c);
                    g[phi_block.index(plus, c)] += pi_c * inv;
                    g[phi_block.index(minus, c)] -= pi_c * inv;
                }
                g
            },
        ));
    }

    let observables = vec![
        Observable::new("H", {
            let geom = Arc::clone(&geom);
            let zg = generator.clone();
            move |p: &StateVector| geom.hamiltonian(p, &zg)
        }),
        Observable::new("superham_max", {
            let geom = Arc::clone(&geom);
            move |p: &StateVector| {
                geom.super_hamiltonian(p)
                    .iter()
                    .fold(0.0_f64, |acc, x| acc.max(x.abs()))
            }
        }),
        Observable::new("supermom_max", {
            let geom = Arc::clone(&geom);
            move |p: &StateVector| {
                geom.super_momentum(p)
                    .iter()
                    .fold(0.0_f64, |acc, x| acc.max(x.abs()))
            }
        }),
    ];

    let geom_rhs = Arc::clone(&geom);
    let geom_h = Arc::clone(&geom);
    let geom_em = Arc::clone(&geom);
    let geom_mm = Arc::clone(&geom);
    Ok(TheorySpec::new(
        "string",
        system,
        ws,
        generator,
        move |p, zg, _ls| geom_rhs.rhs(p, zg),
        move |p, zg| geom_h.hamiltonian(p, zg),
        // Energy-momentum pairing = -(a_xi . sh + b_xi . sm), summed in the
        // mirrored order of the Hamiltonian.
        move |p, zg| {
            let (a, b) = geom_em.coefficients(p, zg);
            let sh = geom_em.super_hamiltonian(p);
            let sm = geom_em.super_momentum(p);
            let mut total = 0.0;
            for n in 0..geom_em.grid.node_count() {
                total += a[n] * sh[n] + b[n] * sm[n];
            }
            -total * geom_em.grid.spacing
        },
        // Momentum map for tangent generators: -zeta^1 integral of j.
        Some(Arc::new(move |p, zg| {
            let sm = geom_mm.super_momentum(p);
            -zg.zeta[0] * sm.iter().sum::<f64>() * geom_mm.grid.spacing
        })),
        oracle,
        observables,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn theory() -> TheorySpec {
        string_build(&StringConfig::default()).unwrap()
    }

    #[test]
    fn constant_fields_are_static_with_zero_constraints() {
        let theory = theory();
        let mut p = StateVector::zeros(Arc::clone(&theory.system.layout));
        let nodes = theory.system.layout.block("h").node_count;
        for n in 0..nodes {
            p.set("phi", n, 0, 0.7);
            p.set("phi", n, 1, -0.2);
            p.set("h", n, 0, -1.0);
            p.set("h", n, 2, 1.0);
        }
        let zg = SlicingGenerator::transverse(1.3, vec![0.4]);
        assert_eq!(theory.observable("superham_max").unwrap().value(&p), 0.0);
        assert_eq!(theory.observable("supermom_max").unwrap().value(&p), 0.0);
        assert_eq!(theory.hamiltonian_at(&p, &zg), 0.0);
        assert_eq!(theory.evolution_rhs(&p, &zg).amax(), 0.0);
    }

    #[test]
    fn branch_seeds_satisfy_the_constraints_exactly() {
        let theory = theory();
        for p in &theory.system.seed_points {
            assert_eq!(theory.observable("superham_max").unwrap().value(p), 0.0);
            assert_eq!(theory.observable("supermom_max").unwrap().value(p), 0.0);
        }
    }

    #[test]
    fn generator_scaling_doubles_the_hamiltonian_exactly() {
        let theory = theory();
        let p = theory.system.seed_points[0].clone();
        // use an off-shell state so H is nonzero
        let mut q = p.clone();
        q.set("pi", 0, 0, q.get("pi", 0, 0) + 0.9);
        let zg = SlicingGenerator::transverse(0.7, vec![0.3]);
        let doubled = SlicingGenerator::transverse(1.4, vec![0.6]);
        let h1 = theory.hamiltonian_at(&q, &zg);
        assert!(h1.abs() > 1e-6);
        assert_relative_eq!(
            theory.hamiltonian_at(&q, &doubled),
            2.0 * h1,
            max_relative = 1e-13
        );
    }

    #[test]
    fn hamiltonian_gradient_matches_fd() {
        let theory = theory();
        let mut p = theory.system.seed_points[0].clone();
        // move off shell so all terms contribute
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for x in p.coords.iter_mut() {
            *x += 0.1 * rng.gen_range(-1.0..1.0);
        }
        // keep the metric block admissible
        let nodes = theory.system.layout.block("h").node_count;
        for n in 0..nodes {
            p.set("h", n, 0, -1.2);
            p.set("h", n, 1, 0.2);
            p.set("h", n, 2, 1.1);
        }
        assert!(theory.system.hamiltonian.gradient_check(&p, 1e-6) < 1e-6);
        for c in theory.oracle_secondaries.iter().take(4) {
            assert!(c.gradient_check(&p, 1e-6) < 1e-6);
        }
    }

    #[test]
    fn duality_holds_everywhere_for_the_string() {
        let theory = theory();
        let mut p = theory.system.seed_points[1].clone();
        p.set("pi", 2, 0, p.get("pi", 2, 0) + 1.3); // off shell too
        let zg = SlicingGenerator::transverse(0.9, vec![-0.6]);
        let defect = theory.energy_momentum_vs_hamiltonian(&p, &zg);
        assert!(defect.abs() <= 1e-12);
    }

    #[test]
    fn tangent_pairing_is_the_momentum_map() {
        let theory = theory();
        let mut p = theory.system.seed_points[0].clone();
        p.set("pi", 1, 1, p.get("pi", 1, 1) - 0.8);
        let zg = SlicingGenerator::transverse(0.0, vec![0.7]);
        let em = theory.tangent_energy_momentum(&p, &zg);
        let mm = theory.momentum_map(&p, &zg).unwrap();
        assert_relative_eq!(em, mm, epsilon = 1e-14);
    }

    #[test]
    fn euclidean_target_warns_into_constant_sector() {
        let config = StringConfig {
            target_metric: Some(TargetMetric::euclidean(2)),
            ..StringConfig::default()
        };
        let theory = string_build(&config).unwrap();
        for p in &theory.system.seed_points {
            assert_eq!(theory.observable("superham_max").unwrap().value(p), 0.0);
        }
    }

    #[test]
    fn degenerate_worldsheet_is_rejected() {
        let config = StringConfig {
            worldsheet: Some(LapseShift {
                lapse: 1.0,
                shift: vec![0.0],
                gamma: vec![vec![-1.0]],
            }),
            ..StringConfig::default()
        };
        assert!(matches!(
            string_build(&config),
            Err(CoreError::Signature(_))
        ));
    }
}
