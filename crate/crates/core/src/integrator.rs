//! Fixed-step RK4 integration with constraint and observable monitoring,
//! optional projection onto the final constraint set, and gauge kicks.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};
use crate::gnh::{gauge_basis, project_to_constraints};
use crate::layout::StateVector;
use crate::system::{ConstraintRecord, Tolerances};
use crate::theories::TheorySpec;

/// A named scalar evaluated every `cadence` steps (holding its last value in
/// between).
#[derive(Clone)]
pub struct Monitor {
    pub name: String,
    pub evaluator: Arc<dyn Fn(&StateVector) -> f64 + Send + Sync>,
    pub cadence: usize,
}

impl Monitor {
    pub fn new(
        name: impl Into<String>,
        cadence: usize,
        evaluator: impl Fn(&StateVector) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(cadence >= 1);
        Monitor {
            name: name.into(),
            evaluator: Arc::new(evaluator),
            cadence,
        }
    }
}

/// Column-oriented trajectory record.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub columns: Vec<(String, Vec<f64>)>,
    pub dt: f64,
    pub steps: usize,
}

impl TimeSeries {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, v)| v.len())
    }
}

/// One classical fourth-order Runge-Kutta update.
pub fn rk4_step(
    rhs: &dyn Fn(&StateVector) -> DVector<f64>,
    p: &StateVector,
    dt: f64,
) -> Result<StateVector> {
    let k1 = rhs(p);
    let mut stage = p.clone();
    stage.coords = &p.coords + &k1 * (dt / 2.0);
    let k2 = rhs(&stage);
    stage.coords = &p.coords + &k2 * (dt / 2.0);
    let k3 = rhs(&stage);
    stage.coords = &p.coords + &k3 * dt;
    let k4 = rhs(&stage);
    let mut out = p.clone();
    out.coords = &p.coords + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if !out.is_finite() {
        return Err(CoreError::BlowUp { step: 0 });
    }
    Ok(out)
}

/// Outcome of `evolve`: the series plus the step at which integration blew
/// up, if it did (the series retains everything up to that step).
pub struct EvolveOutcome {
    pub series: TimeSeries,
    pub final_state: StateVector,
    pub blow_up: Option<usize>,
}

/// The theory's final constraint set as records: declared chart primaries
/// plus the oracle secondaries.
pub fn final_constraints(theory: &TheorySpec) -> Vec<ConstraintRecord> {
    let mut records = theory.system.primaries.clone();
    for f in &theory.oracle_secondaries {
        let mut r = ConstraintRecord::declared(f.clone());
        r.level = 2;
        records.push(r);
    }
    records
}

/// Integrate the theory's evolution equations from `p0` for `steps` steps of
/// size `dt`, recording lambda, every theory observable, and any extra
/// monitors. `project_every = Some(k)` re-projects onto the final constraint
/// set every `k` steps.
pub fn evolve(
    theory: &TheorySpec,
    p0: &StateVector,
    dt: f64,
    steps: usize,
    monitors: &[Monitor],
    project_every: Option<usize>,
    tol: &Tolerances,
) -> Result<EvolveOutcome> {
    let zg = theory.generator.clone();
    let rhs = move |p: &StateVector| theory.evolution_rhs(p, &zg);
    let constraints = final_constraints(theory);

    let mut names: Vec<String> = vec!["lambda".into()];
    names.extend(theory.observables.iter().map(|o| o.name.clone()));
    names.extend(monitors.iter().map(|m| m.name.clone()));
    let mut columns: Vec<(String, Vec<f64>)> =
        names.into_iter().map(|n| (n, Vec::with_capacity(steps + 1))).collect();

    let record =
        |columns: &mut Vec<(String, Vec<f64>)>, p: &StateVector, lambda: f64, step: usize| {
            let mut idx = 0;
            columns[idx].1.push(lambda);
            idx += 1;
            for obs in &theory.observables {
                columns[idx].1.push(obs.value(p));
                idx += 1;
            }
            for m in monitors {
                let value = if step % m.cadence == 0 || columns[idx].1.is_empty() {
                    (m.evaluator)(p)
                } else {
                    *columns[idx].1.last().unwrap()
                };
                columns[idx].1.push(value);
                idx += 1;
            }
        };

    let mut p = p0.clone();
    record(&mut columns, &p, 0.0, 0);
    let mut blow_up = None;
    for step in 1..=steps {
        match rk4_step(&rhs, &p, dt) {
            Ok(next) => p = next,
            Err(CoreError::BlowUp { .. }) => {
                blow_up = Some(step);
                break;
            }
            Err(e) => return Err(e),
        }
        if let Some(k) = project_every {
            if k >= 1 && step % k == 0 && !constraints.is_empty() {
                p = project_to_constraints(
                    &p,
                    &constraints,
                    tol.proj_tol,
                    tol.proj_max_iter,
                    tol.eps_rank,
                )?;
            }
        }
        record(&mut columns, &p, step as f64 * dt, step);
    }

    Ok(EvolveOutcome {
        series: TimeSeries {
            columns,
            dt,
            steps,
        },
        final_state: p,
        blow_up,
    })
}

/// Move `p` along the gauge algebra by `coefficients` and re-project onto
/// the final constraint set. Physical observables are unchanged.
pub fn gauge_kick(
    theory: &TheorySpec,
    p: &StateVector,
    coefficients: &[f64],
    tol: &Tolerances,
) -> Result<StateVector> {
    let constraints = final_constraints(theory);
    let basis = gauge_basis(p, &theory.system, &constraints, tol)?;
    if coefficients.len() > basis.gauge.dim() {
        return Err(CoreError::InvalidInput(format!(
            "got {} coefficients for a {}-dimensional gauge basis",
            coefficients.len(),
            basis.gauge.dim()
        )));
    }
    let mut q = p.clone();
    for (k, &c) in coefficients.iter().enumerate() {
        q.coords += basis.gauge.column(k) * c;
    }
    if constraints.is_empty() {
        return Ok(q);
    }
    project_to_constraints(&q, &constraints, tol.proj_tol, tol.proj_max_iter, tol.eps_rank)
}

/// Exact reference flow for an affine right-hand side `x' = L x + c`,
/// computed from the matrix exponential of the augmented system. Returns
/// the state after time `t`.
pub fn affine_reference_flow(
    rhs: &dyn Fn(&StateVector) -> DVector<f64>,
    p0: &StateVector,
    t: f64,
) -> StateVector {
    let n = p0.dim();
    let zero = {
        let mut z = p0.clone();
        z.coords = DVector::zeros(n);
        z
    };
    let c = rhs(&zero);
    let mut l = DMatrix::zeros(n, n);
    let mut probe = zero.clone();
    for j in 0..n {
        probe.coords[j] = 1.0;
        l.set_column(j, &(rhs(&probe) - &c));
        probe.coords[j] = 0.0;
    }
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&l);
    for i in 0..n {
        aug[(i, n)] = c[i];
    }
    let exp = matrix_exponential(&(aug * t));
    let mut x = DVector::zeros(n + 1);
    x.rows_mut(0, n).copy_from(&p0.coords);
    x[n] = 1.0;
    let y = exp * x;
    let mut out = p0.clone();
    out.coords = y.rows(0, n).into_owned();
    out
}

/// Scaling-and-squaring matrix exponential with a high-order Taylor kernel.
pub fn matrix_exponential(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.iter().fold(0.0_f64, |a, x| a.max(x.abs())) * n as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / 2.0_f64.powi(squarings as i32);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..=16 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    let mut result = sum;
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::BlockLayout;
    use crate::theories::{
        chern_simons_build, maxwell_build, particle_build, ChernSimonsConfig, MaxwellConfig,
        ParticleConfig,
    };
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc as StdArc;

    fn state(vals: &[f64]) -> StateVector {
        let layout = StdArc::new(BlockLayout::new(&[("x", 1, vals.len())]));
        StateVector::new(DVector::from_vec(vals.to_vec()), layout).unwrap()
    }

    #[test]
    fn zero_rhs_is_identity() {
        let p = state(&[1.0, -2.0, 3.0]);
        let rhs = |q: &StateVector| DVector::zeros(q.dim());
        let next = rk4_step(&rhs, &p, 0.1).unwrap();
        assert_eq!(next.coords, p.coords);
    }

    #[test]
    fn linear_rhs_matches_matrix_exponential_at_fifth_order() {
        // one RK4 step on x' = A x agrees with expm(A dt) up to O(dt^5)
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let rhs = {
            let a = a.clone();
            move |q: &StateVector| &a * &q.coords
        };
        let p = state(&[1.0, 0.4]);
        let mut errors = Vec::new();
        for &dt in &[0.1, 0.05] {
            let stepped = rk4_step(&rhs, &p, dt).unwrap();
            let exact = matrix_exponential(&(a.clone() * dt)) * &p.coords;
            errors.push((stepped.coords - exact).norm());
        }
        let ratio = errors[0] / errors[1];
        // local truncation error ~ dt^5: halving dt gives a factor near 32
        assert!(
            (20.0..48.0).contains(&ratio),
            "per-step convergence ratio {ratio:.2}"
        );
    }

    #[test]
    fn oscillator_convergence_orders() {
        // Harmonic oscillator q'' = -q. Global solution error is O(dt^4)
        // (ratio ~16 under halving); the energy drift of RK4 on a linear
        // oscillation is O(dt^5) globally (ratio ~32), which the oracle
        // below freezes.
        let rhs = |p: &StateVector| DVector::from_vec(vec![p.coords[1], -p.coords[0]]);
        let window = 2.0;
        let measure = |dt: f64| -> (f64, f64) {
            let mut p = state(&[1.0, 0.0]);
            let e0 = 0.5 * (p.coords[0] * p.coords[0] + p.coords[1] * p.coords[1]);
            let steps = (window / dt).round() as usize;
            for _ in 0..steps {
                p = rk4_step(&rhs, &p, dt).unwrap();
            }
            let t = steps as f64 * dt;
            let exact = state(&[t.cos(), -t.sin()]);
            let sol_err = (&p.coords - &exact.coords).norm();
            let e1 = 0.5 * (p.coords[0] * p.coords[0] + p.coords[1] * p.coords[1]);
            (sol_err, (e1 - e0).abs())
        };
        let (sol_a, en_a) = measure(0.02);
        let (sol_b, en_b) = measure(0.01);
        let sol_ratio = sol_a / sol_b;
        let energy_ratio = en_a / en_b;
        assert!(
            (12.0..20.0).contains(&sol_ratio),
            "solution error ratio {sol_ratio:.2}"
        );
        assert!(
            (24.0..40.0).contains(&energy_ratio),
            "energy drift ratio {energy_ratio:.2}"
        );
    }

    #[test]
    fn blow_up_is_reported_with_partial_series() {
        // x' = x^2 from x = 1 blows up around t = 1.
        let config = ParticleConfig::default();
        let theory = particle_build(&config).unwrap();
        let _ = theory; // evolve is exercised against real theories below
        let rhs = |p: &StateVector| {
            DVector::from_vec(vec![p.coords[0] * p.coords[0]])
        };
        let mut p = state(&[1.0]);
        let mut blew = false;
        for _ in 0..2000 {
            match rk4_step(&rhs, &p, 0.01) {
                Ok(next) => p = next,
                Err(CoreError::BlowUp { .. }) => {
                    blew = true;
                    break;
                }
                Err(_) => unreachable!(),
            }
        }
        assert!(blew);
    }

    #[test]
    fn maxwell_uniform_data_keeps_all_columns_constant() {
        let theory = maxwell_build(&MaxwellConfig::default()).unwrap();
        let mut p = StateVector::zeros(StdArc::clone(&theory.system.layout));
        let nodes = theory.system.layout.block("e").node_count;
        for n in 0..nodes {
            for i in 0..3 {
                p.set("e", n, i, 0.4);
                p.set("a", n, i + 1, -0.2);
            }
        }
        let out = evolve(&theory, &p, 0.01, 50, &[], None, &Tolerances::default()).unwrap();
        assert!(out.blow_up.is_none());
        for (name, col) in &out.series.columns {
            if name == "lambda" {
                continue;
            }
            for v in col {
                assert_relative_eq!(*v, col[0], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn particle_worldline_stays_straight() {
        // zeta = 0, k = 1/(2m): q(lambda) moves on the straight line through
        // q(0) with direction g^{-1} pi; 1000 steps at dt = 1e-3.
        let theory = particle_build(&ParticleConfig::default()).unwrap();
        let p0 = theory.system.seed_points[0].clone();
        let out = evolve(&theory, &p0, 1e-3, 1000, &[], None, &Tolerances::default()).unwrap();
        let p1 = out.final_state;
        let q0 = DVector::from_vec(p0.block_vec("q"));
        let q1 = DVector::from_vec(p1.block_vec("q"));
        let pi = DVector::from_vec(p0.block_vec("pi"));
        // direction g^{-1} pi with Minkowski metric
        let mut dir = pi.clone();
        dir[0] = -dir[0];
        let dir = dir.normalize();
        let dq = &q1 - &q0;
        let off_line = &dq - &dir * dir.dot(&dq);
        assert!(off_line.norm() < 1e-9, "off-line distance {:.3e}", off_line.norm());
        assert!(dq.norm() > 0.5, "the point should actually move");
    }

    #[test]
    fn chern_simons_flat_data_stays_flat_and_wilson_lines_freeze() {
        let theory = chern_simons_build(&ChernSimonsConfig {
            generator: crate::slicing::SlicingGenerator::transverse(1.0, vec![0.3, -0.4]),
            ..ChernSimonsConfig::default()
        })
        .unwrap();
        // random exactly flat data: A_i = D_i phi plus a constant
        let grid = crate::grid::Grid::new(2, 3, 1.0 / 3.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let phi: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut p = StateVector::zeros(StdArc::clone(&theory.system.layout));
        for i in 0..2 {
            let d = grid.diff(i, &phi);
            for n in 0..9 {
                p.set("a", n, i + 1, d[n] + 0.2);
            }
        }
        for n in 0..9 {
            p.set("a", n, 0, rng.gen_range(-1.0..1.0));
        }
        let out = evolve(&theory, &p, 0.02, 1000, &[], None, &Tolerances::default()).unwrap();
        let fmax = out.series.column("flatness_max").unwrap();
        let w1 = out.series.column("wilson1").unwrap();
        let w2 = out.series.column("wilson2").unwrap();
        for i in 0..fmax.len() {
            assert!(fmax[i] <= 1e-12, "flatness drift {:.3e}", fmax[i]);
            assert!((w1[i] - w1[0]).abs() <= 1e-12 * w1[0].abs().max(1.0));
            assert!((w2[i] - w2[0]).abs() <= 1e-12 * w2[0].abs().max(1.0));
        }
    }

    #[test]
    fn gauge_kick_with_zero_coefficients_is_identity() {
        let theory = particle_build(&ParticleConfig::default()).unwrap();
        let p = theory.system.seed_points[0].clone();
        let q = gauge_kick(&theory, &p, &[], &Tolerances::default()).unwrap();
        assert_eq!(q.coords, p.coords);
    }

    #[test]
    fn particle_kick_moves_along_the_worldline() {
        let theory = particle_build(&ParticleConfig::default()).unwrap();
        let p = theory.system.seed_points[0].clone();
        let q = gauge_kick(&theory, &p, &[0.7], &Tolerances::default()).unwrap();
        // direction of the worldline
        let pi = DVector::from_vec(p.block_vec("pi"));
        let mut dir = pi.clone();
        dir[0] = -dir[0];
        let dir = dir.normalize();
        let dq = DVector::from_vec(q.block_vec("q")) - DVector::from_vec(p.block_vec("q"));
        let off = &dq - &dir * dir.dot(&dq);
        assert!(off.norm() <= 1e-10, "off-line {:.3e}", off.norm());
        assert!(dq.norm() > 1e-3, "kick should move the point");
        // momenta unchanged
        let dpi = DVector::from_vec(q.block_vec("pi")) - pi;
        assert!(dpi.norm() <= 1e-10);
    }

    #[test]
    fn maxwell_kick_preserves_fields_exactly() {
        let theory = maxwell_build(&MaxwellConfig::default()).unwrap();
        // project a seed onto the Gauss set first
        let constraints = final_constraints(&theory);
        let tol = Tolerances::default();
        let p = project_to_constraints(
            &theory.system.seed_points[0],
            &constraints,
            tol.proj_tol,
            tol.proj_max_iter,
            tol.eps_rank,
        )
        .unwrap();
        let basis = gauge_basis(&p, &theory.system, &constraints, &tol).unwrap();
        let coeffs: Vec<f64> = (0..basis.gauge.dim())
            .map(|k| 0.05 * ((k % 7) as f64 - 3.0))
            .collect();
        let q = gauge_kick(&theory, &p, &coeffs, &tol).unwrap();
        let e_before = theory.observable("field_energy").unwrap().value(&p);
        let e_after = theory.observable("field_energy").unwrap().value(&q);
        assert_relative_eq!(e_before, e_after, max_relative = 1e-10);
        let h_before = theory.observable("H").unwrap().value(&p);
        let h_after = theory.observable("H").unwrap().value(&q);
        assert!((h_before - h_after).abs() <= 1e-10 * h_before.abs().max(1.0));
        // E components unchanged
        for n in 0..27 {
            for i in 0..3 {
                assert_relative_eq!(
                    p.get("e", n, i),
                    q.get("e", n, i),
                    epsilon = 1e-10
                );
            }
        }
    }
}
