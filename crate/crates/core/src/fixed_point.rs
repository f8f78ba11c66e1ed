//! Outer existence machinery: `T(u) = B(x, u, grad u) + L g(u)`,
//! `Lambda = S o T`, the homotopy `H(t, u) = S(T(u) + t lambda0)`, damped
//! fixed-point iteration on the cone of nonnegative fields, and the
//! `r < |u| < R` annulus bookkeeping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mesh::{Field, Mesh};
use crate::numeric::par_map;
use crate::solver::{
    direct_solve, inner_solve, inner_solve_from, residual, DiscreteProblem, ResidualMode, SolveReport, SolverError,
    SolverOptions,
};

/// Clipping threshold for the cone projection.
pub const CONE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedPointConfig {
    /// Damping `omega` in `u <- (1 - omega) u + omega Lambda(u)`.
    pub damping: f64,
    pub homotopy_t: f64,
    pub lambda0: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub max_outer: usize,
    pub tol_outer: f64,
    pub inner_tol: f64,
    /// Bump heights for the multi-start driver.
    pub amplitudes: Vec<f64>,
    /// Relative size of the random multiplicative jitter on starts.
    pub jitter: f64,
    pub newton_fallback: bool,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            damping: 0.5,
            homotopy_t: 0.0,
            lambda0: 0.0,
            r: 1e-2,
            big_r: 1e2,
            max_outer: 500,
            tol_outer: 1e-8,
            inner_tol: 1e-10,
            amplitudes: vec![0.1, 1.0, 3.0, 10.0],
            jitter: 1e-2,
            newton_fallback: true,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidProblem(m));
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping {} not in (0, 1]", self.damping));
        }
        if !(self.r > 0.0 && self.big_r > self.r) {
            return bad(format!("need 0 < r < R, got r = {}, R = {}", self.r, self.big_r));
        }
        if !(0.0..=1.0).contains(&self.homotopy_t) || !(self.lambda0 >= 0.0) {
            return bad("need homotopy_t in [0, 1] and lambda0 >= 0".into());
        }
        Ok(())
    }

    fn inner_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.inner_tol,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "converged")]
    Converged,
    #[serde(rename = "escaped_R")]
    EscapedR,
    #[serde(rename = "collapsed_to_zero")]
    CollapsedToZero,
    #[serde(rename = "max_iters")]
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub sup_norm: f64,
    pub c1_norm: f64,
    pub update: f64,
    pub inner_iters: usize,
    pub inner_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub outcome: Outcome,
    pub inner_failure: bool,
    /// Nodes clipped below `-1e-10` when projecting onto the cone.
    pub cone_violations: usize,
    /// `|u - Lambda(u)|_sup` at the final iterate (converged runs only).
    pub fixed_point_gap: Option<f64>,
    /// l2 norm of the weak residual of the full problem at the final iterate.
    pub weak_residual: Option<f64>,
    #[serde(skip)]
    best: Option<(f64, Field)>,
}

impl IterationTrace {
    /// Most nearly stationary iterate inside the annulus: smallest relative
    /// update `|u_{k+1} - u_k| / |u_k|` with `r <= |u_k| <= R`.
    pub fn best_iterate(&self) -> Option<&Field> {
        self.best.as_ref().map(|b| &b.1)
    }
}

/// `sup |u| + max_T |grad u|_T`.
pub fn c1_norm(mesh: &Mesh, u: &[f64]) -> f64 {
    let g = (0..mesh.n_elements()).fold(0.0f64, |m, e| {
        let a = mesh.element_gradient(u, e);
        m.max(a[0].hypot(a[1]))
    });
    u.iter().fold(0.0f64, |m, v| m.max(v.abs())) + g
}

/// `T(u) = B(x_v, u_v, grad u(x_v)) + L g(u_v) + lambda` at every vertex.
pub fn apply_t(dp: &DiscreteProblem, u: &[f64]) -> Result<Field, SolverError> {
    dp.mesh.check_field(u)?;
    let b = dp.source_values(u)?;
    let t: Vec<f64> = b
        .iter()
        .zip(u)
        .map(|(b, &x)| b + dp.l * dp.signed_g(x) + dp.lambda)
        .collect();
    match t.iter().position(|v| !v.is_finite()) {
        Some(node) => Err(SolverError::NonFinite { node }),
        None => Ok(Field(t)),
    }
}

/// `Lambda(u) = S(T(u) + t lambda0)`, projected onto the cone. Returns the
/// image, the inner report and the number of nodes clipped below `-1e-10`.
pub fn apply_lambda(
    dp: &DiscreteProblem,
    u: &[f64],
    cfg: &FixedPointConfig,
) -> Result<(Field, SolveReport, usize), SolverError> {
    let mut psi = apply_t(dp, u)?;
    let shift = cfg.homotopy_t * cfg.lambda0;
    for v in psi.iter_mut() {
        *v += shift;
    }
    let (mut w, report) = inner_solve_from(dp, &psi, u, &cfg.inner_options())?;
    let mut violations = 0;
    for x in w.iter_mut() {
        if *x < -CONE_SLACK {
            violations += 1;
        }
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    Ok((w, report, violations))
}

/// The problem whose weak solutions are the fixed points of `H(t, .)`.
fn homotopy_problem(dp: &DiscreteProblem, cfg: &FixedPointConfig) -> DiscreteProblem {
    dp.clone().with_lambda(dp.lambda + cfg.homotopy_t * cfg.lambda0)
}

/// Damped iteration `u <- (1 - omega) u + omega Lambda(u)` from `u0`.
pub fn iterate(
    dp: &DiscreteProblem,
    u0: &[f64],
    cfg: &FixedPointConfig,
) -> Result<(Field, IterationTrace), SolverError> {
    cfg.validate()?;
    dp.validate()?;
    dp.mesh.check_field(u0)?;
    let mesh = &dp.mesh;
    let mut u = Field(u0.iter().map(|x| x.max(0.0)).collect());
    mesh.apply_dirichlet(&mut u);
    let mut trace = IterationTrace {
        records: Vec::new(),
        outcome: Outcome::MaxIters,
        inner_failure: false,
        cone_violations: 0,
        fixed_point_gap: None,
        weak_residual: None,
        best: None,
    };
    let omega = cfg.damping;
    for k in 1..=cfg.max_outer {
        let (lu, rep, clips) = apply_lambda(dp, &u, cfg)?;
        trace.cone_violations += clips;
        if !rep.converged {
            trace.inner_failure = true;
            trace.outcome = Outcome::MaxIters;
            break;
        }
        let next = Field(
            u.iter()
                .zip(lu.iter())
                .map(|(a, b)| (1.0 - omega) * a + omega * b)
                .collect(),
        );
        let diff = next.axpy(-1.0, &u);
        let update = c1_norm(mesh, &diff);
        let sup = u.sup_norm();
        if sup >= cfg.r && sup <= cfg.big_r {
            let score = diff.sup_norm() / sup;
            if trace.best.as_ref().is_none_or(|b| score < b.0) {
                trace.best = Some((score, u.clone()));
            }
        }
        u = next;
        let sup = u.sup_norm();
        trace.records.push(IterationRecord {
            iter: k,
            sup_norm: sup,
            c1_norm: c1_norm(mesh, &u),
            update,
            inner_iters: rep.iterations,
            inner_converged: rep.converged,
        });
        if update <= cfg.tol_outer {
            trace.outcome = Outcome::Converged;
            break;
        }
        if sup > cfg.big_r {
            trace.outcome = Outcome::EscapedR;
            break;
        }
        if sup < 1e-2 * cfg.r {
            trace.outcome = Outcome::CollapsedToZero;
            break;
        }
    }
    if trace.outcome == Outcome::Converged {
        annotate_fixed_point(dp, &u, cfg, &mut trace)?;
    }
    Ok((u, trace))
}

fn annotate_fixed_point(
    dp: &DiscreteProblem,
    u: &Field,
    cfg: &FixedPointConfig,
    trace: &mut IterationTrace,
) -> Result<(), SolverError> {
    let (lu, _, _) = apply_lambda(dp, u, cfg)?;
    trace.fixed_point_gap = Some(lu.max_abs_diff(u));
    let r = residual(&homotopy_problem(dp, cfg), u, ResidualMode::Direct)?;
    trace.weak_residual = Some(r.iter().map(|x| x * x).sum::<f64>().sqrt());
    Ok(())
}

/// Positive bump vanishing on the boundary: the torsion-like profile
/// `S(1)` of the problem's operator with `L = 0`, normalized to sup 1.
pub fn bump_profile(dp: &DiscreteProblem) -> Result<Field, SolverError> {
    let plain = dp.clone().with_l(0.0);
    let one = Field(vec![1.0; dp.n()]);
    let (u, _) = inner_solve(&plain, &one, &SolverOptions::default())?;
    let s = u.sup_norm();
    if !(s > 0.0) {
        return Err(SolverError::InvalidProblem("mesh has no interior vertex".into()));
    }
    Ok(u.scaled(1.0 / s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FixedPoint,
    NewtonFallback,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRun {
    pub amplitude: f64,
    pub trace: IterationTrace,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiStartResult {
    pub runs: Vec<StartRun>,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newton: Option<SolveReport>,
    pub sup_norm: Option<f64>,
    pub weak_residual: Option<f64>,
    pub fixed_point_gap: Option<f64>,
    #[serde(skip)]
    pub solution: Option<Field>,
}

/// Damped iteration from bumps of several heights (jittered with a seeded
/// generator); if none converges to a nontrivial fixed point, damped Newton
/// on the full problem is seeded with the most nearly stationary iterates.
pub fn multistart(dp: &DiscreteProblem, cfg: &FixedPointConfig, seed: u64) -> Result<MultiStartResult, SolverError> {
    cfg.validate()?;
    let bump = bump_profile(dp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<(f64, Field)> = cfg
        .amplitudes
        .iter()
        .map(|&a| {
            let f = Field(
                bump.iter()
                    .map(|b| a * b * (1.0 + cfg.jitter * (2.0 * rng.gen::<f64>() - 1.0)))
                    .collect(),
            );
            (a, f)
        })
        .collect();
    let results = par_map(&starts, |(a, u0)| iterate(dp, u0, cfg).map(|(u, t)| (*a, u, t)));
    let mut runs = Vec::with_capacity(results.len());
    let mut found: Option<(Field, f64, f64)> = None;
    let mut candidates: Vec<(f64, Field)> = Vec::new();
    for res in results {
        let (amplitude, u, trace) = res?;
        let sup = u.sup_norm();
        if trace.outcome == Outcome::Converged && sup >= cfg.r && found.is_none() {
            found = Some((
                u,
                trace.weak_residual.unwrap_or(f64::NAN),
                trace.fixed_point_gap.unwrap_or(f64::NAN),
            ));
        }
        if let Some((score, f)) = &trace.best {
            candidates.push((*score, f.clone()));
        }
        runs.push(StartRun { amplitude, trace });
    }
    if let Some((u, wr, gap)) = found {
        return Ok(MultiStartResult {
            runs,
            method: Method::FixedPoint,
            newton: None,
            sup_norm: Some(u.sup_norm()),
            weak_residual: Some(wr),
            fixed_point_gap: Some(gap),
            solution: Some(u),
        });
    }
    let mut out = MultiStartResult {
        runs,
        method: Method::None,
        newton: None,
        sup_norm: None,
        weak_residual: None,
        fixed_point_gap: None,
        solution: None,
    };
    if !cfg.newton_fallback {
        return Ok(out);
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let hp = homotopy_problem(dp, cfg);
    let opts = SolverOptions {
        enforce_positive: true,
        escape_bound: cfg.big_r,
        ..SolverOptions::default()
    };
    for (_, seed_field) in candidates {
        let (u, rep) = direct_solve(&hp, &seed_field, &opts)?;
        if rep.converged && u.sup_norm() >= cfg.r {
            let (lu, _, _) = apply_lambda(dp, &u, cfg)?;
            out.fixed_point_gap = Some(lu.max_abs_diff(&u));
            out.weak_residual = Some(rep.final_residual());
            out.sup_norm = Some(u.sup_norm());
            out.method = Method::NewtonFallback;
            out.newton = Some(rep);
            out.solution = Some(u);
            return Ok(out);
        }
        out.newton = Some(rep);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusRow {
    pub t: f64,
    /// `min |u - t Lambda(u)|_sup / r` over the probe fields with `|u| = r`.
    pub min_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusProbe {
    pub r: f64,
    pub rows: Vec<AnnulusRow>,
    /// No probe field came within `1e-3 r` of solving `u = t Lambda(u)`.
    pub passed: bool,
}

/// Probes the inner-sphere condition `u != t Lambda(u)` for `|u|_sup = r` at
/// the given `t` values on `n_fields` positive fields (a bump plus seeded
/// random modulations of it). A probe, not a verification.
pub fn annulus_probe(
    dp: &DiscreteProblem,
    cfg: &FixedPointConfig,
    ts: &[f64],
    n_fields: usize,
    seed: u64,
) -> Result<AnnulusProbe, SolverError> {
    cfg.validate()?;
    let bump = bump_profile(dp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fields = vec![bump.scaled(cfg.r)];
    for _ in 1..n_fields.max(1) {
        let (k1, k2, ph): (f64, f64, f64) = (
            rng.gen_range(1.0..6.0),
            rng.gen_range(1.0..6.0),
            rng.gen_range(0.0..6.3),
        );
        let amp: f64 = rng.gen_range(0.0..0.9);
        let mut f = Field(
            dp.mesh
                .vertices()
                .iter()
                .zip(bump.iter())
                .map(|(x, b)| b * (1.0 + amp * (k1 * x[0] + k2 * x[1] + ph).sin()))
                .collect(),
        );
        let s = f.sup_norm();
        for v in f.iter_mut() {
            *v *= cfg.r / s;
        }
        fields.push(f);
    }
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let mut min_gap = f64::INFINITY;
        for f in &fields {
            let (lu, _, _) = apply_lambda(dp, f, cfg)?;
            let gap = f
                .iter()
                .zip(lu.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - t * b).abs()));
            min_gap = min_gap.min(gap / cfg.r);
        }
        rows.push(AnnulusRow { t, min_gap });
    }
    let passed = rows.iter().all(|r| r.min_gap > 1e-3);
    Ok(AnnulusProbe { r: cfg.r, rows, passed })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::mesh::{build_mesh, Shape};
    use crate::source::SourceTerm;
    use crate::young::YoungFunction;

    fn lane_emden_1d(h: f64) -> DiscreteProblem {
        let mesh = Arc::new(build_mesh(&Shape::Interval { a: 0.0, b: 1.0 }, h).unwrap());
        DiscreteProblem::new(mesh, YoungFunction::power(2.0).unwrap(), SourceTerm::lane_emden(4.0)).with_l(1.0)
    }

    #[test]
    fn t_examples() {
        let dp = lane_emden_1d(0.1);
        let z = dp.zero_field();
        assert!(apply_t(&dp, &z).unwrap().iter().all(|v| *v == 0.0));
        let two = Field(vec![2.0; dp.n()]);
        assert!(apply_t(&dp, &two).unwrap().iter().all(|v| (*v - 10.0).abs() < 1e-14));
    }

    #[test]
    fn lambda_of_zero_is_zero() {
        let dp = lane_emden_1d(0.1);
        let (w, rep, clips) = apply_lambda(&dp, &dp.zero_field(), &FixedPointConfig::default()).unwrap();
        assert!(rep.converged && clips == 0);
        assert_eq!(w.sup_norm(), 0.0);
    }

    #[test]
    fn constant_map_converges_in_two_steps() {
        let mesh = Arc::new(build_mesh(&Shape::Interval { a: 0.0, b: 1.0 }, 1.0 / 32.0).unwrap());
        let src = SourceTerm::custom("psi0", true, |x, _, _| 1.0 + x[0]);
        let dp = DiscreteProblem::new(mesh, YoungFunction::power(2.0).unwrap(), src);
        let cfg = FixedPointConfig {
            damping: 1.0,
            ..Default::default()
        };
        let u0 = dp.mesh.field_from(|x| x[0] * (1.0 - x[0]));
        let (u, trace) = iterate(&dp, &u0, &cfg).unwrap();
        assert_eq!(trace.outcome, Outcome::Converged);
        assert!(trace.records.len() <= 2);
        let psi = dp.mesh.field_from(|x| 1.0 + x[0]);
        let (s, _) = inner_solve(
            &dp,
            &psi,
            &SolverOptions {
                tol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(u.max_abs_diff(&s) < 1e-9);
    }

    #[test]
    fn tiny_start_collapses() {
        let dp = lane_emden_1d(1.0 / 64.0);
        let bump = bump_profile(&dp).unwrap();
        let (_, trace) = iterate(&dp, &bump.scaled(1e-6), &FixedPointConfig::default()).unwrap();
        assert_eq!(trace.outcome, Outcome::CollapsedToZero);
        assert_eq!(trace.cone_violations, 0);
    }

    #[test]
    fn multistart_finds_the_positive_solution() {
        let dp = lane_emden_1d(1.0 / 64.0);
        let res = multistart(&dp, &FixedPointConfig::default(), 7).unwrap();
        assert_ne!(res.method, Method::None);
        let sup = res.sup_norm.unwrap();
        // u'' + u^3 = 0 on (0, 1): max = 2 sqrt(2) * 1.311028777...
        assert!((sup - 3.7081493546).abs() < 2e-2, "{sup}");
        assert!(res.weak_residual.unwrap() <= 1e-6);
        assert!(res.fixed_point_gap.unwrap() <= 1e-6);
    }

    #[test]
    fn annulus_probe_small_sphere() {
        let dp = lane_emden_1d(1.0 / 32.0);
        let p = annulus_probe(&dp, &FixedPointConfig::default(), &[0.0, 0.25, 0.5, 0.75, 1.0], 4, 3).unwrap();
        assert!(p.passed, "{p:?}");
        assert!((p.rows[0].min_gap - 1.0).abs() < 1e-12);
    }
}
