//! The presymplectic constraint algorithm.
//!
//! Starting from the declared level-1 set, each pass computes the symplectic
//! polar of the current tangent space inside the level-1 tangent space,
//! differentiates the Hamiltonian along those directions, and keeps every
//! direction whose derivative does not already vanish on the set. The chain
//! stops when no consistency candidate is new, or when the set empties out.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::layout::StateVector;
use crate::linear::{hamiltonian_vector_field, kernel, polar};
use crate::scalar::{fd_gradient, fd_hessian_apply, ScalarFunction};
use crate::subspace::{nullspace, Subspace};
use crate::system::{
    ConstraintClass, ConstraintRecord, PresymplecticSystem, Provenance, Tolerances,
};
use crate::twoform::TwoFormField;

/// Gauss-Newton projection of `p0` onto the zero set of `constraints`.
pub fn project_to_constraints(
    p0: &StateVector,
    constraints: &[ConstraintRecord],
    tol: f64,
    max_iter: usize,
    eps_rank: f64,
) -> Result<StateVector> {
    if constraints.is_empty() {
        return Ok(p0.clone());
    }
    let mut p = p0.clone();
    let m = constraints.len();
    let mut residual = f64::MAX;
    for _ in 0..max_iter {
        let values = DVector::from_fn(m, |i, _| constraints[i].function.value(&p));
        residual = values.amax();
        if residual <= tol {
            return Ok(p);
        }
        let mut jac = DMatrix::zeros(m, p.dim());
        for (i, c) in constraints.iter().enumerate() {
            jac.set_row(i, &c.function.gradient(&p).transpose());
        }
        let svd = jac.clone().svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        if smax == 0.0 {
            break; // constraints locally constant and nonzero: no descent
        }
        let step = svd
            .solve(&values, eps_rank * smax)
            .expect("svd solve with both factors");
        // Damped update: halve until the residual improves.
        let mut alpha = 1.0;
        let norm0 = values.norm();
        let mut accepted = false;
        while alpha > 1e-6 {
            let mut candidate = p.clone();
            candidate.coords -= &step * alpha;
            let cand_norm = DVector::from_fn(m, |i, _| constraints[i].function.value(&candidate))
                .norm();
            if cand_norm < norm0 {
                p = candidate;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let values = DVector::from_fn(m, |i, _| constraints[i].function.value(&p));
    residual = residual.min(values.amax());
    if values.amax() <= tol {
        Ok(p)
    } else {
        Err(CoreError::ProjectionFailure {
            iterations: max_iter,
            residual,
        })
    }
}

/// Tangent space of the zero set of `constraints` at `p`: the nullspace of
/// the stacked gradients.
pub fn tangent_space(
    p: &StateVector,
    constraints: &[ConstraintRecord],
    eps_rank: f64,
) -> Subspace {
    let dim = p.dim();
    if constraints.is_empty() {
        return Subspace::full(dim);
    }
    let mut jac = DMatrix::zeros(constraints.len(), dim);
    for (i, c) in constraints.iter().enumerate() {
        jac.set_row(i, &c.function.gradient(p).transpose());
    }
    nullspace(&jac, eps_rank)
}

fn split_levels(active: &[ConstraintRecord]) -> (Vec<ConstraintRecord>, Vec<ConstraintRecord>) {
    let level1 = active.iter().filter(|c| c.level == 1).cloned().collect();
    let all = active.to_vec();
    (level1, all)
}

/// Consistency directions at `p`: canonical basis of
/// `polar(T_p P^l, within T_p P^1)`.
pub fn polar_directions(
    omega: &TwoFormField,
    p: &StateVector,
    active: &[ConstraintRecord],
    tol: &Tolerances,
) -> Result<Vec<DVector<f64>>> {
    let (level1, all) = split_levels(active);
    let t_level = tangent_space(p, &all, tol.eps_rank);
    let within = if level1.is_empty() {
        None
    } else {
        Some(tangent_space(p, &level1, tol.eps_rank))
    };
    let k = polar(omega, p, &t_level, within.as_ref(), tol.eps_rank)?;
    Ok(k.canonical_basis(tol.eps_rank))
}

/// Build the consistency-candidate functions for the current level.
///
/// Each candidate is `p' -> v_k(p') . grad H(p')` with the polar direction
/// `v_k` recomputed at the evaluation point. When the form is constant and
/// all active constraints are linear the directions cannot vary, and the
/// candidate gradient is the Hessian row `Hess(H) v_k`; otherwise both value
/// and gradient fall back to the recomputed pipeline.
pub fn consistency_candidates(
    system: &PresymplecticSystem,
    p: &StateVector,
    active: &[ConstraintRecord],
    level: usize,
    tol: &Tolerances,
) -> Result<Vec<ScalarFunction>> {
    let directions = polar_directions(&system.omega, p, active, tol)?;
    let constant_directions =
        system.omega.is_constant() && active.iter().all(|c| c.function.linear);
    let hamiltonian = system.hamiltonian.clone();
    let mut out = Vec::with_capacity(directions.len());
    for (k, v) in directions.iter().enumerate() {
        let name = candidate_name(system, v, level, k);
        let func = if constant_directions {
            let v_value = v.clone();
            let v_grad = v.clone();
            let h_value = hamiltonian.clone();
            let h_grad = hamiltonian.clone();
            let fd = tol.fd_step;
            ScalarFunction::new(
                name,
                move |q| v_value.dot(&h_value.gradient(q)),
                move |q| fd_hessian_apply(|r| h_grad.gradient(r), q, &v_grad, fd),
            )
        } else {
            let omega = system.omega.clone();
            let active: Arc<Vec<ConstraintRecord>> = Arc::new(active.to_vec());
            let active_g = Arc::clone(&active);
            let h_value = hamiltonian.clone();
            let tol_v = *tol;
            let omega_g = omega.clone();
            let h_g = hamiltonian.clone();
            let value = move |q: &StateVector| -> f64 {
                match polar_directions(&omega, q, &active, &tol_v) {
                    Ok(dirs) if k < dirs.len() => dirs[k].dot(&h_value.gradient(q)),
                    _ => 0.0,
                }
            };
            let fd = tol.fd_step;
            ScalarFunction::new(name, value, move |q| {
                let omega = omega_g.clone();
                let active = Arc::clone(&active_g);
                let h = h_g.clone();
                let tol_v = tol_v;
                fd_gradient(
                    |r| match polar_directions(&omega, r, &active, &tol_v) {
                        Ok(dirs) if k < dirs.len() => dirs[k].dot(&h.gradient(r)),
                        _ => 0.0,
                    },
                    q,
                    fd,
                )
            })
        };
        out.push(func);
    }
    Ok(out)
}

fn candidate_name(
    system: &PresymplecticSystem,
    direction: &DVector<f64>,
    level: usize,
    index: usize,
) -> String {
    // Axis-aligned directions get node-indexed names; anything else keeps a
    // positional tag.
    let mut best = 0usize;
    for i in 0..direction.len() {
        if direction[i].abs() > direction[best].abs() {
            best = i;
        }
    }
    if direction[best].abs() > 1.0 - 1e-9 {
        if let Some((block, node, comp)) = system.axis_label(best) {
            return format!("dH/d{block}[{node}].{comp}");
        }
    }
    format!("consistency[L{level}#{index}]")
}

/// Novelty verdict for a consistency candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Novelty {
    /// Nonzero somewhere on the current set: starts a new level.
    NewLevel,
    /// Vanishes on the samples but its gradient leaves the active span;
    /// recorded, does not extend the chain.
    VanishingNovelGradient,
    Redundant,
}

/// Decide whether candidate `f` is a new constraint relative to `existing`,
/// judged at the given on-set sample points. Only value-level novelty (a
/// candidate that fails to vanish somewhere on the set) extends the chain;
/// a candidate that vanishes but has a gradient outside the active span is
/// surfaced as metadata. The gradient comparison samples the first point.
pub fn is_new_constraint(
    f: &ScalarFunction,
    existing: &[ConstraintRecord],
    points: &[StateVector],
    eps_con: f64,
    eps_rank: f64,
) -> Novelty {
    let nonzero = points.iter().any(|p| f.value(p).abs() > eps_con);
    if nonzero {
        return Novelty::NewLevel;
    }
    if let Some(p) = points.first() {
        let grad = f.gradient(p);
        if grad.norm() > 1e-7 {
            let span = if existing.is_empty() {
                Subspace::zero(p.dim())
            } else {
                let cols: Vec<DVector<f64>> = existing
                    .iter()
                    .map(|c| c.function.gradient(p))
                    .collect();
                Subspace::span(&DMatrix::from_columns(&cols), eps_rank)
            };
            if span.relative_distance(&grad) > 1e-6 {
                return Novelty::VanishingNovelGradient;
            }
        }
    }
    Novelty::Redundant
}

/// Heuristic linearity probe: a function whose gradient agrees at two well
/// separated points is treated as having constant gradient, which lets the
/// next level reuse constant polar directions.
fn probe_linear(f: &ScalarFunction, base: &StateVector) -> bool {
    let g0 = f.gradient(base);
    let mut shifted = base.clone();
    for (i, x) in shifted.coords.iter_mut().enumerate() {
        *x += if i % 2 == 0 { 0.31 } else { -0.47 };
    }
    let g1 = f.gradient(&shifted);
    let scale = g0.norm().max(g1.norm()).max(1.0);
    (g1 - g0).norm() <= 1e-7 * scale
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub name: String,
    pub node: Option<String>,
    pub class: String,
    pub provenance: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub constraints: Vec<ConstraintReport>,
    pub tangent_dim: usize,
    pub polar_dim: usize,
}

/// Transcript of one complete constraint-algorithm run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GnhReport {
    pub version: String,
    pub theory: String,
    pub levels: Vec<LevelReport>,
    /// Dimension of the final set; -1 when the set is empty.
    pub final_set_dim: i64,
    pub gauge_dim: i64,
    pub kinematic_dim: i64,
    pub terminated: bool,
    pub classifications: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

pub const REPORT_VERSION: &str = "1";

/// Gauge and kinematic directions at a point of the final set.
pub struct GaugeBasis {
    /// `T_p C ∩ T_p C^⊥`, polars taken inside the level-1 tangent space.
    pub gauge: Subspace,
    /// `ker ω ∩ T_p C`.
    pub kinematic: Subspace,
}

/// Compute the gauge algebra basis at `p` for the given final constraints.
pub fn gauge_basis(
    p: &StateVector,
    system: &PresymplecticSystem,
    final_constraints: &[ConstraintRecord],
    tol: &Tolerances,
) -> Result<GaugeBasis> {
    let (level1, all) = split_levels(final_constraints);
    let tc = tangent_space(p, &all, tol.eps_rank);
    let within = if level1.is_empty() {
        None
    } else {
        Some(tangent_space(p, &level1, tol.eps_rank))
    };
    let tc_polar = polar(&system.omega, p, &tc, within.as_ref(), tol.eps_rank)?;
    let gauge = tc.intersect(&tc_polar, tol.eps_rank);
    let ker = kernel(&system.omega, p, tol.eps_rank)?;
    let kinematic = ker.intersect(&tc, tol.eps_rank);
    Ok(GaugeBasis { gauge, kinematic })
}

/// First/second-class test: `f` is first class iff every polar basis vector
/// annihilates it, `|v . grad f| <= eps_con * |grad f|`.
fn polar_class_test(polar_basis: &Subspace, grad: &DVector<f64>, eps_con: f64) -> ConstraintClass {
    let scale = grad.norm();
    if scale == 0.0 {
        return ConstraintClass::First;
    }
    for j in 0..polar_basis.dim() {
        if polar_basis.column(j).dot(grad).abs() > eps_con * scale.max(1.0) {
            return ConstraintClass::Second;
        }
    }
    ConstraintClass::First
}

/// Classify a primary constraint against the ambient symplectic form: the
/// final set is carried into the ambient space and the polar of its tangent
/// space is tested against the constraint gradient.
pub fn classify_primary_ambient(
    f: &ScalarFunction,
    ambient_points: &[StateVector],
    ambient_omega: &TwoFormField,
    ambient_constraints: &[ConstraintRecord],
    tol: &Tolerances,
) -> Result<ConstraintClass> {
    for p in ambient_points {
        let tc = tangent_space(p, ambient_constraints, tol.eps_rank);
        let pol = polar(ambient_omega, p, &tc, None, tol.eps_rank)?;
        if polar_class_test(&pol, &f.gradient(p), tol.eps_con) == ConstraintClass::Second {
            return Ok(ConstraintClass::Second);
        }
    }
    Ok(ConstraintClass::First)
}

/// Classify a secondary constraint inside the chart: the polar is taken
/// within the level-1 tangent space using the system's form.
pub fn classify_secondary_intrinsic(
    f: &ScalarFunction,
    points: &[StateVector],
    system: &PresymplecticSystem,
    final_constraints: &[ConstraintRecord],
    tol: &Tolerances,
) -> Result<ConstraintClass> {
    let (level1, all) = split_levels(final_constraints);
    for p in points {
        let tc = tangent_space(p, &all, tol.eps_rank);
        let within = if level1.is_empty() {
            None
        } else {
            Some(tangent_space(p, &level1, tol.eps_rank))
        };
        let pol = polar(&system.omega, p, &tc, within.as_ref(), tol.eps_rank)?;
        if polar_class_test(&pol, &f.gradient(p), tol.eps_con) == ConstraintClass::Second {
            return Ok(ConstraintClass::Second);
        }
    }
    Ok(ConstraintClass::First)
}

/// Residual of the best tangential solution of Hamilton's equation at `p`:
/// minimize `|B^T (Omega^T B y - dH)|` over tangential fields `X = B y`.
pub fn tangential_residual(
    system: &PresymplecticSystem,
    p: &StateVector,
    final_constraints: &[ConstraintRecord],
    tol: &Tolerances,
) -> Result<f64> {
    let tc = tangent_space(p, final_constraints, tol.eps_rank);
    let omega = system.omega.matrix_checked(p)?;
    let dh = system.hamiltonian.gradient(p);
    if tc.dim() == 0 {
        return Ok(dh.norm());
    }
    let b = tc.basis();
    let a = b.transpose() * omega.transpose() * b;
    let rhs = b.transpose() * &dh;
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = if smax > 0.0 { tol.eps_rank * smax } else { f64::MAX };
    let y = svd.solve(&rhs, cutoff).expect("svd solve");
    Ok((a * y - rhs).norm())
}

struct SeedSet {
    points: Vec<StateVector>,
}

impl SeedSet {
    fn project(
        &mut self,
        constraints: &[ConstraintRecord],
        tol: &Tolerances,
        warnings: &mut Vec<String>,
        level: usize,
    ) -> bool {
        let mut projected = Vec::with_capacity(self.points.len());
        let mut failures = 0;
        for p in &self.points {
            match project_to_constraints(p, constraints, tol.proj_tol, tol.proj_max_iter, tol.eps_rank)
            {
                Ok(q) => projected.push(q),
                Err(_) => failures += 1,
            }
        }
        if projected.is_empty() {
            return false;
        }
        if failures > 0 {
            warnings.push(format!(
                "level {level}: {failures} seed(s) failed projection and were dropped"
            ));
        }
        self.points = projected;
        true
    }
}

/// Run the complete constraint algorithm on `system`.
pub fn run_gnh(system: &PresymplecticSystem, tol: &Tolerances) -> Result<GnhReport> {
    if system.seed_points.is_empty() {
        return Err(CoreError::InvalidInput("no seed points supplied".into()));
    }
    let dim = system.dim();
    let max_levels = dim + 2;
    let mut warnings: Vec<String> = Vec::new();
    let mut active: Vec<ConstraintRecord> = system.primaries.clone();
    let mut seeds = SeedSet {
        points: system.seed_points.clone(),
    };
    let mut levels: Vec<LevelReport> = Vec::new();
    let mut terminated = false;
    let mut empty_set = false;

    // Constraints whose report entry opens the current level: the declared
    // primaries at level 1 (ambient ones included), generated ones later.
    let mut entering: Vec<ConstraintReport> = Vec::new();
    if let Some(amb) = &system.ambient {
        for c in &amb.primaries {
            entering.push(ConstraintReport {
                name: c.function.name.clone(),
                node: c.node.clone(),
                class: ConstraintClass::Unknown.to_string(),
                provenance: c.provenance.to_string(),
            });
        }
    }
    for c in &active {
        entering.push(ConstraintReport {
            name: c.function.name.clone(),
            node: c.node.clone(),
            class: ConstraintClass::Unknown.to_string(),
            provenance: c.provenance.to_string(),
        });
    }

    if !seeds.project(&active, tol, &mut warnings, 1) {
        warnings.push("level 1: set empty (no seed projection converged)".into());
        return Ok(GnhReport {
            version: REPORT_VERSION.into(),
            theory: system.name.clone(),
            levels: vec![LevelReport {
                level: 1,
                constraints: entering,
                tangent_dim: 0,
                polar_dim: 0,
            }],
            final_set_dim: -1,
            gauge_dim: -1,
            kinematic_dim: -1,
            terminated: false,
            classifications: BTreeMap::new(),
            warnings,
        });
    }

    let mut level = 1usize;
    loop {
        // Dimensions at this level, checked for agreement across seeds.
        let dims: Vec<usize> = seeds
            .points
            .iter()
            .map(|p| tangent_space(p, &active, tol.eps_rank).dim())
            .collect();
        let tangent_dim = dims[0];
        if dims.iter().any(|&d| d != tangent_dim) {
            warnings.push(format!(
                "level {level}: point-dependent structure (tangent dims {dims:?})"
            ));
        }
        let polar_dims: Vec<usize> = seeds
            .points
            .iter()
            .map(|p| {
                polar_directions(&system.omega, p, &active, tol).map(|d| d.len())
            })
            .collect::<Result<_>>()?;
        let polar_dim = polar_dims[0];
        if polar_dims.iter().any(|&d| d != polar_dim) {
            warnings.push(format!(
                "level {level}: point-dependent structure (polar dims {polar_dims:?})"
            ));
        }
        levels.push(LevelReport {
            level,
            constraints: std::mem::take(&mut entering),
            tangent_dim,
            polar_dim,
        });

        if level >= max_levels {
            warnings.push(format!("chain cut off at {max_levels} levels"));
            break;
        }

        let candidates = consistency_candidates(system, &seeds.points[0], &active, level, tol)?;
        let mut new_records: Vec<ConstraintRecord> = Vec::new();
        for (k, cand) in candidates.into_iter().enumerate() {
            if active.iter().any(|c| c.function.name == cand.name)
                || new_records.iter().any(|c| c.function.name == cand.name)
            {
                continue;
            }
            match is_new_constraint(&cand, &active, &seeds.points, tol.eps_con, tol.eps_rank) {
                Novelty::NewLevel => {
                    let node = cand.name.clone();
                    let node_label = node
                        .split('[')
                        .nth(1)
                        .and_then(|s| s.split(']').next())
                        .map(str::to_string);
                    let cand = if probe_linear(&cand, &seeds.points[0]) {
                        cand.linear_flagged()
                    } else {
                        cand
                    };
                    new_records.push(ConstraintRecord {
                        function: cand,
                        level: level + 1,
                        class: ConstraintClass::Unknown,
                        provenance: Provenance::Generated {
                            from_level: level,
                            direction_index: k,
                        },
                        node: node_label,
                    });
                }
                Novelty::VanishingNovelGradient => {
                    warnings.push(format!(
                        "level {level}: candidate {} vanishes but has a novel gradient (dependent)",
                        cand.name
                    ));
                }
                Novelty::Redundant => {}
            }
        }

        if new_records.is_empty() {
            terminated = true;
            break;
        }

        for c in &new_records {
            entering.push(ConstraintReport {
                name: c.function.name.clone(),
                node: c.node.clone(),
                class: ConstraintClass::Unknown.to_string(),
                provenance: c.provenance.to_string(),
            });
        }
        active.extend(new_records);
        level += 1;
        if !seeds.project(&active, tol, &mut warnings, level) {
            warnings.push(format!(
                "level {level}: set empty (no seed projection converged)"
            ));
            empty_set = true;
            levels.push(LevelReport {
                level,
                constraints: std::mem::take(&mut entering),
                tangent_dim: 0,
                polar_dim: 0,
            });
            break;
        }
    }

    if empty_set {
        return Ok(GnhReport {
            version: REPORT_VERSION.into(),
            theory: system.name.clone(),
            levels,
            final_set_dim: -1,
            gauge_dim: -1,
            kinematic_dim: -1,
            terminated: false,
            classifications: BTreeMap::new(),
            warnings,
        });
    }

    // Final-set dimensions, gauge algebra, classifications.
    let final_dims: Vec<usize> = seeds
        .points
        .iter()
        .map(|p| tangent_space(p, &active, tol.eps_rank).dim())
        .collect();
    let final_set_dim = final_dims[0];
    if final_dims.iter().any(|&d| d != final_set_dim) {
        warnings.push(format!(
            "point-dependent structure (final set dims {final_dims:?})"
        ));
    }
    let mut gauge_dims = Vec::new();
    let mut kin_dims = Vec::new();
    for p in &seeds.points {
        let gb = gauge_basis(p, system, &active, tol)?;
        gauge_dims.push(gb.gauge.dim());
        kin_dims.push(gb.kinematic.dim());
    }
    if gauge_dims.iter().any(|&d| d != gauge_dims[0]) {
        warnings.push(format!(
            "point-dependent structure (gauge dims {gauge_dims:?})"
        ));
    }
    if kin_dims.iter().any(|&d| d != kin_dims[0]) {
        warnings.push(format!(
            "point-dependent structure (kinematic dims {kin_dims:?})"
        ));
    }

    let mut classifications: BTreeMap<String, String> = BTreeMap::new();

    // Ambient context: embed the final seeds and stack every constraint that
    // cuts the final set out of the ambient space.
    let ambient_ctx = match &system.ambient {
        Some(amb) => {
            let points: Vec<StateVector> = seeds.points.iter().map(|p| amb.embed(p)).collect();
            let mut constraints: Vec<ConstraintRecord> = amb.primaries.clone();
            for c in &active {
                let mut lifted = c.clone();
                lifted.function = amb.lift(&c.function);
                constraints.push(lifted);
            }
            Some((points, constraints))
        }
        None => None,
    };

    // Primary constraints: ambient-declared ones plus chart-declared ones.
    if let Some(amb) = &system.ambient {
        let (points, constraints) = ambient_ctx.as_ref().unwrap();
        for c in &amb.primaries {
            let class =
                classify_primary_ambient(&c.function, points, &amb.omega, constraints, tol)?;
            classifications.insert(c.function.name.clone(), class.to_string());
        }
    }
    for c in active.iter().filter(|c| c.level == 1) {
        let class = match &ambient_ctx {
            Some((points, constraints)) => {
                let amb = system.ambient.as_ref().unwrap();
                let lifted = amb.lift(&c.function);
                classify_primary_ambient(&lifted, points, &amb.omega, constraints, tol)?
            }
            None => classify_primary_ambient(
                &c.function,
                &seeds.points,
                &system.omega,
                &active,
                tol,
            )?,
        };
        classifications.insert(c.function.name.clone(), class.to_string());
    }
    for c in active.iter().filter(|c| c.level >= 2) {
        let class =
            classify_secondary_intrinsic(&c.function, &seeds.points, system, &active, tol)?;
        classifications.insert(c.function.name.clone(), class.to_string());
    }

    // Copy classes back into the per-level report entries.
    for lvl in &mut levels {
        for entry in &mut lvl.constraints {
            if let Some(class) = classifications.get(&entry.name) {
                entry.class = class.clone();
            }
        }
    }

    Ok(GnhReport {
        version: REPORT_VERSION.into(),
        theory: system.name.clone(),
        levels,
        final_set_dim: final_set_dim as i64,
        gauge_dim: gauge_dims[0] as i64,
        kinematic_dim: kin_dims[0] as i64,
        terminated,
        classifications,
        warnings,
    })
}

/// Hamiltonian vector fields of all final constraints at `p` (ambient or
/// chart), for the span test of the classification-consistency property.
pub fn constraint_field_span(
    omega: &TwoFormField,
    p: &StateVector,
    constraints: &[ConstraintRecord],
    eps_rank: f64,
) -> Result<Option<Subspace>> {
    let mut fields: Vec<DVector<f64>> = Vec::new();
    for c in constraints {
        match hamiltonian_vector_field(omega, p, &c.function.gradient(p), eps_rank)? {
            Some(x) => fields.push(x),
            None => return Ok(None),
        }
    }
    if fields.is_empty() {
        return Ok(Some(Subspace::zero(p.dim())));
    }
    Ok(Some(Subspace::span(
        &DMatrix::from_columns(&fields),
        eps_rank,
    )))
}
