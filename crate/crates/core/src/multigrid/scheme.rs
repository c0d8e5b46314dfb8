use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hierarchy::{Hierarchy, Level};
use super::trace::{IterationTrace, TraceRecord};
use crate::assembly::AssembledOperators;
use crate::eigen::{
    eigen_residual, m_orthonormalize, rayleigh_ritz, EigenPairEstimate, SpectrumResult,
};
use crate::linalg::{
    dot, minres, norm, BuiltPreconditioner, DenseLu, KrylovOptions, PreconditionerKind,
    SolveMethod, SolveReport, C64,
};
use crate::{Error, Result};

/// Relative size of the imaginary parts of `uᴴSu` and `uᴴMu` tolerated by
/// [`rayleigh_quotient`].
pub const FORM_IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    /// Shift each level with the previous level's Rayleigh quotient.
    RayleighQuotient,
    /// Rayleigh-quotient shifts on levels `1..=i0`, then the level-`i0`
    /// value on every later level. `i0 = 0` uses the coarse eigenvalue
    /// throughout; `i0 ≥ l` never freezes the shift.
    FixedShift { i0: usize },
}

/// How the members of a multiple eigenvalue are kept apart after each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterOrthogonalization {
    /// `M`-orthonormal Gram-Schmidt in member order.
    GramSchmidt,
    /// Rayleigh-Ritz on the span of the members.
    #[default]
    RayleighRitz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelSolveOptions {
    /// Relative residual of the shifted solve.
    pub tol: f64,
    pub max_iter: usize,
    /// Levels with at most this many DOFs are solved by dense LU.
    pub dense_threshold: usize,
    /// Preconditioner of the Krylov solve, built from `S + |shift| M`.
    pub preconditioner: PreconditionerKind,
}

impl Default for LevelSolveOptions {
    fn default() -> Self {
        LevelSolveOptions {
            tol: 1e-10,
            max_iter: 5000,
            dense_threshold: 1000,
            preconditioner: PreconditionerKind::Jacobi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Index of the first targeted coarse eigenpair.
    pub target: usize,
    /// Members of the target eigenvalue; `None` takes the coarse cluster
    /// that contains `target`.
    pub cluster_size: Option<usize>,
    pub solve: LevelSolveOptions,
    pub orthogonalization: ClusterOrthogonalization,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, target: usize) -> Self {
        SchemeConfig {
            scheme,
            target,
            cluster_size: None,
            solve: LevelSolveOptions::default(),
            orthogonalization: ClusterOrthogonalization::default(),
        }
    }

    /// Shift used on fine level `i ≥ 1` given the Rayleigh quotients of
    /// levels `0..i`.
    pub fn shift_for(&self, i: usize, history: &[f64]) -> f64 {
        match self.scheme {
            Scheme::FixedShift { i0 } if i > i0 => history[i0],
            _ => history[i - 1],
        }
    }
}

/// `Re(uᴴSu) / Re(uᴴMu)`.
pub fn rayleigh_quotient(ops: &AssembledOperators, u: &[C64]) -> Result<f64> {
    let a = dot(u, &ops.stiffness.mul_vec(u));
    let m = dot(u, &ops.mass.mul_vec(u));
    if !(m.re > 0.0) {
        return Err(Error::ZeroVector);
    }
    for form in [a, m] {
        if form.im.abs() > FORM_IMAG_TOL * form.re.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NonHermitianForm {
                relative: form.im.abs() / form.re.abs(),
            });
        }
    }
    Ok(a.re / m.re)
}

/// Solves `(S − shift·M) x = rhs` on one level.
pub fn solve_shifted_system(
    ops: &AssembledOperators,
    shift: f64,
    rhs: &[C64],
    opts: &LevelSolveOptions,
) -> Result<(Vec<C64>, SolveReport)> {
    let a = ops.shifted(shift);
    if ops.n_edge <= opts.dense_threshold {
        let lu = DenseLu::factor(a.to_dense())?;
        let x = lu.solve(rhs);
        let ax = a.mul_vec(&x);
        let r: Vec<C64> = ax.iter().zip(rhs).map(|(p, q)| p - q).collect();
        let b = norm(rhs);
        let rel = if b == 0.0 { 0.0 } else { norm(&r) / b };
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                relative_residual: rel,
                converged: rel <= opts.tol.max(1e-12),
                method: SolveMethod::DenseLu,
            },
        ));
    }
    let precond = BuiltPreconditioner::build(opts.preconditioner, &ops.shifted(-shift.abs()))?;
    Ok(minres(
        &a,
        rhs,
        KrylovOptions {
            tol: opts.tol,
            max_iter: opts.max_iter,
        },
        Some(&precond),
    ))
}

/// Output of one level solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedSolution {
    /// `u′ / ‖u′‖_a`.
    pub u: Vec<C64>,
    /// `u′ / ‖u′‖_A` with `‖v‖²_A = ‖v‖²_a + (γ/β)‖v‖²_M`.
    pub u_hat: Vec<C64>,
    /// `a(u′, u′)` before normalization.
    pub energy: f64,
    pub report: SolveReport,
}

/// Prolongs `rhs_coarse` from the level below, solves
/// `(S − shift·M) u′ = M P rhs_coarse` and normalizes the result.
///
/// Fails with [`Error::GradientCollapse`] (member 0) when `a(u′, u′)` is
/// not positive, i.e. the iterate fell into the gradient kernel.
pub fn shifted_solve(
    level: &Level,
    shift: f64,
    rhs_coarse: &[C64],
    opts: &LevelSolveOptions,
) -> Result<ShiftedSolution> {
    let p = level
        .prolongation
        .as_ref()
        .ok_or_else(|| Error::InvalidScheme("the coarse level has no level below it".into()))?;
    let prolonged = p.matvec(rhs_coarse)?;
    let ops = &level.ops;
    let rhs = ops.mass.mul_vec(&prolonged);
    let (x, report) = solve_shifted_system(ops, shift, &rhs, opts)?;
    let energy = dot(&x, &ops.stiffness.mul_vec(&x)).re;
    let mass = dot(&x, &ops.mass.mul_vec(&x)).re;
    if !(energy > 1e-12 * shift.abs().max(1.0) * mass) {
        return Err(Error::GradientCollapse {
            level: level.index,
            member: 0,
            energy,
        });
    }
    let a_scale = 1.0 / energy.sqrt();
    let big_a_scale = 1.0 / (energy + ops.constants.shift * mass).sqrt();
    Ok(ShiftedSolution {
        u: x.iter().map(|v| v * a_scale).collect(),
        u_hat: x.iter().map(|v| v * big_a_scale).collect(),
        energy,
        report,
    })
}

/// Result of [`run_scheme`].
#[derive(Debug, Clone)]
pub struct SchemeOutput {
    /// Final estimates on the finest level, ascending.
    pub estimates: Vec<EigenPairEstimate>,
    pub trace: IterationTrace,
    /// Members on every level, coarse first.
    pub iterates: Vec<Vec<EigenPairEstimate>>,
}

/// Runs the configured scheme over all fine levels of `hierarchy`, starting
/// from the target cluster of `coarse`.
pub fn run_scheme(
    hierarchy: &Hierarchy,
    cfg: &SchemeConfig,
    coarse: &SpectrumResult,
) -> Result<SchemeOutput> {
    let k = cfg.target;
    let cluster = coarse.cluster_of(k).ok_or_else(|| {
        Error::InvalidScheme(format!(
            "target {k} is not among the {} coarse pairs",
            coarse.pairs.len()
        ))
    })?;
    let q = match cfg.cluster_size {
        Some(q) => q,
        None => coarse.clusters[cluster].iter().filter(|&&i| i >= k).count(),
    };
    if q == 0 || k + q > coarse.pairs.len() {
        return Err(Error::InvalidScheme(format!(
            "members {k}..{} requested but the coarse solve returned {} pairs",
            k + q,
            coarse.pairs.len()
        )));
    }
    if (k..k + q).any(|i| coarse.zero_modes.contains(&i)) {
        return Err(Error::ZeroModeTarget(k));
    }
    let coarse_ops = &hierarchy.coarse().ops;
    if coarse.pairs[k].vector.len() != coarse_ops.n_edge {
        return Err(Error::DimensionMismatch {
            expected: coarse_ops.n_edge,
            found: coarse.pairs[k].vector.len(),
        });
    }

    let mut trace = IterationTrace::default();
    let mut members: Vec<EigenPairEstimate> = coarse.pairs[k..k + q].to_vec();
    // Rayleigh quotients per member and level
    let mut history: Vec<Vec<f64>> = members.iter().map(|p| vec![p.lambda]).collect();
    for (j, p) in members.iter().enumerate() {
        trace.records.push(TraceRecord {
            target: k + j,
            member: j,
            level: 0,
            dof: coarse_ops.n_edge,
            shift: None,
            lambda: p.lambda,
            a_norm_residual: a_norm_residual(coarse_ops, p.lambda, &p.vector),
            residual: p.residual,
            divergence: divergence(coarse_ops, &p.vector),
            solve: None,
            wall_seconds: 0.0,
        });
    }
    let mut iterates = vec![members.clone()];

    for level in &hierarchy.levels()[1..] {
        let shifts: Vec<f64> = history
            .iter()
            .map(|h| cfg.shift_for(level.index, h))
            .collect();
        let step = advance_level(level, cfg, &members, &shifts)?;
        for (j, (p, record)) in step.members.iter().zip(step.records).enumerate() {
            history[j].push(p.lambda);
            trace.records.push(TraceRecord {
                target: k + j,
                ..record
            });
        }
        members = step.members;
        iterates.push(members.clone());
    }

    let mut estimates = members;
    if hierarchy.depth() > 0 {
        for p in estimates.iter_mut() {
            crate::eigen::fix_phase(&mut p.vector);
        }
    }
    estimates.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(SchemeOutput {
        estimates,
        trace,
        iterates,
    })
}

/// Members and trace records produced by one level of the scheme.
#[derive(Debug, Clone)]
pub struct LevelStep {
    pub members: Vec<EigenPairEstimate>,
    /// Records with `target` set to the member index.
    pub records: Vec<TraceRecord>,
}

/// One level of the scheme: a shifted solve per member from the previous
/// level's iterates, then re-orthonormalization of the cluster.
pub fn advance_level(
    level: &Level,
    cfg: &SchemeConfig,
    members: &[EigenPairEstimate],
    shifts: &[f64],
) -> Result<LevelStep> {
    let i = level.index;
    let ops = &level.ops;
    let q = members.len();
    if shifts.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            found: shifts.len(),
        });
    }
    let mut block = Vec::with_capacity(q);
    let mut solves = Vec::with_capacity(q);
    let mut times = Vec::with_capacity(q);
    for (j, (m, &shift)) in members.iter().zip(shifts).enumerate() {
        let started = Instant::now();
        let sol = shifted_solve(level, shift, &m.vector, &cfg.solve).map_err(|e| match e {
            Error::GradientCollapse { level, energy, .. } => Error::GradientCollapse {
                level,
                member: j,
                energy,
            },
            other => other.at_level(i),
        })?;
        block.push(sol.u);
        solves.push(sol.report);
        times.push(started.elapsed().as_secs_f64());
    }
    if q > 1 {
        block = match cfg.orthogonalization {
            ClusterOrthogonalization::GramSchmidt => {
                let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
                m_orthonormalize(&ops.mass, &mut block, &mut rng);
                block
            }
            ClusterOrthogonalization::RayleighRitz => {
                rayleigh_ritz(&ops.stiffness, &ops.mass, &block)?.1
            }
        };
        for (j, u) in block.iter_mut().enumerate() {
            let energy = dot(u, &ops.stiffness.mul_vec(u)).re;
            if !(energy > 0.0) {
                return Err(Error::GradientCollapse {
                    level: i,
                    member: j,
                    energy,
                });
            }
            let s = 1.0 / energy.sqrt();
            for v in u.iter_mut() {
                *v *= s;
            }
        }
    }
    let mut step = LevelStep {
        members: Vec::with_capacity(q),
        records: Vec::with_capacity(q),
    };
    for (j, u) in block.into_iter().enumerate() {
        let lambda = rayleigh_quotient(ops, &u).map_err(|e| e.at_level(i))?;
        let residual = eigen_residual(ops, lambda, &u);
        step.records.push(TraceRecord {
            target: j,
            member: j,
            level: i,
            dof: ops.n_edge,
            shift: Some(shifts[j]),
            lambda,
            a_norm_residual: a_norm_residual(ops, lambda, &u),
            residual,
            divergence: divergence(ops, &u),
            solve: Some(solves[j].clone()),
            wall_seconds: times[j],
        });
        step.members.push(EigenPairEstimate {
            lambda,
            residual,
            vector: u,
            multiplier: None,
            level: i,
        });
    }
    Ok(step)
}

/// `‖S u − λ M u‖ / ‖u‖`.
fn a_norm_residual(ops: &AssembledOperators, lambda: f64, u: &[C64]) -> f64 {
    let su = ops.stiffness.mul_vec(u);
    let mu = ops.mass.mul_vec(u);
    let r: Vec<C64> = su.iter().zip(&mu).map(|(s, m)| s - m * lambda).collect();
    norm(&r) / norm(u)
}

/// `‖B u‖ / ‖u‖`.
fn divergence(ops: &AssembledOperators, u: &[C64]) -> f64 {
    if ops.n_vertex == 0 {
        return 0.0;
    }
    norm(&ops.coupling.mul_vec(u)) / norm(u)
}
