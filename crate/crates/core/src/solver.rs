//! Discrete g-Laplace problems on P1 meshes.
//!
//! The inner solver realizes the solution operator `S`: it minimizes the
//! strictly convex energy
//! `E(u) = sum_T |T| G(|grad u|_eps) + sum_v m_v [L G(|u_v|) - psi_v u_v]`
//! by damped Newton. The direct solver runs damped Newton on the weak
//! residual of `Delta_g u + B(x, u, grad u) + lambda = 0`.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, SparseBuilder};
use crate::mesh::{Field, Mesh, MeshError};
use crate::numeric::compensated_sum;
use crate::source::{Point, SourceTerm};
use crate::young::YoungFunction;

pub const DEFAULT_EPSILON: f64 = 1e-6;
const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("non-finite residual at node {node}")]
    NonFinite { node: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Mesh, Young function, source and the scalar data of one problem.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub mesh: Arc<Mesh>,
    pub young: YoungFunction,
    pub source: SourceTerm,
    pub lambda: f64,
    pub l: f64,
    pub epsilon: f64,
}

impl DiscreteProblem {
    pub fn new(mesh: Arc<Mesh>, young: YoungFunction, source: SourceTerm) -> Self {
        DiscreteProblem {
            mesh,
            young,
            source,
            lambda: 0.0,
            l: 0.0,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_l(mut self, l: f64) -> Self {
        self.l = l;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-2) {
            return Err(SolverError::InvalidProblem(format!(
                "epsilon = {} not in (0, 1e-2]",
                self.epsilon
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(SolverError::InvalidProblem(format!(
                "lambda = {} must be >= 0",
                self.lambda
            )));
        }
        if !(self.l >= 0.0 && self.l.is_finite()) {
            return Err(SolverError::InvalidProblem(format!("L = {} must be >= 0", self.l)));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn zero_field(&self) -> Field {
        Field::zeros(self.n())
    }

    /// `g(|t|) sgn(t)`.
    pub fn signed_g(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            t.signum() * self.young.g(t.abs())
        }
    }

    fn regularized(&self, a: Point) -> f64 {
        (a[0] * a[0] + a[1] * a[1] + self.epsilon * self.epsilon).sqrt()
    }

    /// Nodal source values `B(x_v, u_v, grad u(x_v))`, gradients averaged to
    /// vertices.
    pub fn source_values(&self, u: &[f64]) -> Result<Vec<f64>, SolverError> {
        let mesh = &self.mesh;
        let needs_p = self.source.depends_on_gradient();
        (0..self.n())
            .map(|v| {
                let p = if needs_p {
                    mesh.vertex_gradient(u, v)
                } else {
                    [0.0, 0.0]
                };
                let b = self.source.eval(mesh.vertex(v), u[v], p);
                if b.is_finite() {
                    Ok(b)
                } else {
                    Err(SolverError::NonFinite { node: v })
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Sup-norm above which the direct solver gives up and flags an escape.
    pub escape_bound: f64,
    /// Project direct-solver iterates onto `u >= 0`.
    pub enforce_positive: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 200,
            escape_bound: 1e8,
            enforce_positive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_history: Option<Vec<f64>>,
    pub final_sup_norm: f64,
    /// Excluded from serialized output so artifacts stay reproducible.
    #[serde(skip)]
    pub wall_time: f64,
    pub escaped: bool,
    pub stalled: bool,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ResidualMode<'a> {
    /// `-Delta_g u + L g(u) - psi`
    Inner(&'a [f64]),
    /// `-Delta_g u - B(x, u, grad u) - lambda`
    Direct,
}

/// Nodal weak residual against the hat functions. Boundary rows hold `u_v`.
pub fn residual(dp: &DiscreteProblem, u: &[f64], mode: ResidualMode) -> Result<Field, SolverError> {
    dp.mesh.check_field(u)?;
    if let ResidualMode::Inner(psi) = mode {
        dp.mesh.check_field(psi)?;
    }
    let mesh = &dp.mesh;
    let mut r = vec![0.0; dp.n()];
    for e in 0..mesh.n_elements() {
        let a = mesh.element_gradient(u, e);
        let rho = dp.regularized(a);
        let k = mesh.element_measures()[e] * dp.young.g(rho) / rho;
        for (&v, b) in mesh.element(e).iter().zip(mesh.basis_gradients(e)) {
            r[v] += k * (a[0] * b[0] + a[1] * b[1]);
        }
    }
    let masses = mesh.vertex_masses();
    match mode {
        ResidualMode::Inner(psi) => {
            for v in 0..dp.n() {
                r[v] += masses[v] * (dp.l * dp.signed_g(u[v]) - psi[v]);
            }
        }
        ResidualMode::Direct => {
            let b = dp.source_values(u)?;
            for v in 0..dp.n() {
                r[v] -= masses[v] * (b[v] + dp.lambda);
            }
        }
    }
    for v in 0..dp.n() {
        if mesh.is_boundary(v) {
            r[v] = u[v];
        }
        if !r[v].is_finite() {
            return Err(SolverError::NonFinite { node: v });
        }
    }
    Ok(Field(r))
}

fn norm2(r: &[f64]) -> f64 {
    compensated_sum(r.iter().map(|x| x * x)).sqrt()
}

/// Discrete inner energy.
pub fn inner_energy(dp: &DiscreteProblem, u: &[f64], psi: &[f64]) -> f64 {
    let mesh = &dp.mesh;
    let grad = (0..mesh.n_elements())
        .map(|e| mesh.element_measures()[e] * dp.young.big_g(dp.regularized(mesh.element_gradient(u, e))));
    let zeroth = (0..dp.n()).map(|v| mesh.vertex_masses()[v] * (dp.l * dp.young.big_g(u[v].abs()) - psi[v] * u[v]));
    compensated_sum(grad.chain(zeroth))
}

/// `G(b) - G(a)` without cancellation for nearby arguments.
fn g_increment(yf: &YoungFunction, a: f64, b: f64) -> f64 {
    let d = b - a;
    if d.abs() <= 1e-3 * a.abs().max(b.abs()) {
        d / 6.0 * (yf.g(a) + 4.0 * yf.g(0.5 * (a + b)) + yf.g(b))
    } else {
        yf.big_g(b) - yf.big_g(a)
    }
}

/// `E(u + step) - E(u)` summed term by term, accurate to the size of the
/// difference rather than of `E`.
fn energy_change(dp: &DiscreteProblem, u: &[f64], step: &[f64], psi: &[f64]) -> f64 {
    let mesh = &dp.mesh;
    let yf = &dp.young;
    let eps2 = dp.epsilon * dp.epsilon;
    let grad = (0..mesh.n_elements()).map(|e| {
        let a = mesh.element_gradient(u, e);
        let d = mesh.element_gradient(step, e);
        let rho = (a[0] * a[0] + a[1] * a[1] + eps2).sqrt();
        let b = [a[0] + d[0], a[1] + d[1]];
        let rho_new = (b[0] * b[0] + b[1] * b[1] + eps2).sqrt();
        // |b|^2 - |a|^2 = d . (a + b), divided by rho + rho_new.
        let drho = (d[0] * (a[0] + b[0]) + d[1] * (a[1] + b[1])) / (rho + rho_new);
        let inc = if drho.abs() <= 1e-3 * rho {
            drho / 6.0 * (yf.g(rho) + 4.0 * yf.g(rho + 0.5 * drho) + yf.g(rho + drho))
        } else {
            yf.big_g(rho_new) - yf.big_g(rho)
        };
        mesh.element_measures()[e] * inc
    });
    let zeroth = (0..dp.n()).map(|v| {
        let (a, b) = (u[v].abs(), (u[v] + step[v]).abs());
        mesh.vertex_masses()[v] * (dp.l * g_increment(yf, a, b) - psi[v] * step[v])
    });
    compensated_sum(grad.chain(zeroth))
}

/// Interior numbering: `index[v]` for free vertices, `usize::MAX` on the boundary.
fn interior_index(mesh: &Mesh) -> (Vec<usize>, usize) {
    let mut index = vec![usize::MAX; mesh.n_vertices()];
    let mut n = 0;
    for (v, &b) in mesh.boundary_flags().iter().enumerate() {
        if !b {
            index[v] = n;
            n += 1;
        }
    }
    (index, n)
}

/// Element part of the Jacobian: `|T| grad phi_i . M grad phi_j` with
/// `M = g'(rho) P + g(rho)/rho (I - P)`, `P = a a^T / rho^2`.
fn assemble_stiffness(dp: &DiscreteProblem, u: &[f64], index: &[usize], jac: &mut SparseBuilder) {
    let mesh = &dp.mesh;
    for e in 0..mesh.n_elements() {
        let a = mesh.element_gradient(u, e);
        let rho = dp.regularized(a);
        let k = dp.young.g(rho) / rho;
        let kp = dp.young.g_prime(rho);
        let w = mesh.element_measures()[e];
        let m = [
            [
                k + (kp - k) * a[0] * a[0] / (rho * rho),
                (kp - k) * a[0] * a[1] / (rho * rho),
            ],
            [
                (kp - k) * a[1] * a[0] / (rho * rho),
                k + (kp - k) * a[1] * a[1] / (rho * rho),
            ],
        ];
        let cell = mesh.element(e);
        let grads = mesh.basis_gradients(e);
        for (i, &vi) in cell.iter().enumerate() {
            if index[vi] == usize::MAX {
                continue;
            }
            let gi = grads[i];
            let mgi = [m[0][0] * gi[0] + m[0][1] * gi[1], m[1][0] * gi[0] + m[1][1] * gi[1]];
            for (j, &vj) in cell.iter().enumerate() {
                if index[vj] == usize::MAX {
                    continue;
                }
                let gj = grads[j];
                jac.add(index[vi], index[vj], w * (mgi[0] * gj[0] + mgi[1] * gj[1]));
            }
        }
    }
}

/// Zeroth-order stiffness floor for `g'` at the origin when `p < 2`.
fn g_prime_guarded(dp: &DiscreteProblem, t: f64) -> f64 {
    dp.young.g_prime(t.abs().max(dp.epsilon))
}

/// `S(psi)` starting from zero.
pub fn inner_solve(
    dp: &DiscreteProblem,
    psi: &[f64],
    opts: &SolverOptions,
) -> Result<(Field, SolveReport), SolverError> {
    inner_solve_from(dp, psi, &dp.zero_field(), opts)
}

/// `S(psi)` by damped Newton on the inner energy from the initial guess `u0`
/// (its boundary values are reset to zero).
pub fn inner_solve_from(
    dp: &DiscreteProblem,
    psi: &[f64],
    u0: &[f64],
    opts: &SolverOptions,
) -> Result<(Field, SolveReport), SolverError> {
    dp.validate()?;
    dp.mesh.check_field(psi)?;
    dp.mesh.check_field(u0)?;
    let start = Instant::now();
    let mesh = &dp.mesh;
    let (index, n_free) = interior_index(mesh);
    let mut u = Field(u0.to_vec());
    mesh.apply_dirichlet(&mut u);

    let mut energy = inner_energy(dp, &u, psi);
    let mut r = residual(dp, &u, ResidualMode::Inner(psi))?;
    let mut rn = norm2(&r);
    let mut report = SolveReport {
        converged: false,
        iterations: 0,
        residual_history: vec![rn],
        energy_history: Some(vec![energy]),
        final_sup_norm: 0.0,
        wall_time: 0.0,
        escaped: false,
        stalled: false,
    };
    while rn > opts.tol && report.iterations < opts.max_iter {
        let mut jac = SparseBuilder::with_capacity(n_free, 9 * mesh.n_elements() + n_free);
        assemble_stiffness(dp, &u, &index, &mut jac);
        for v in 0..dp.n() {
            if index[v] != usize::MAX {
                jac.add(
                    index[v],
                    index[v],
                    mesh.vertex_masses()[v] * dp.l * g_prime_guarded(dp, u[v]),
                );
            }
        }
        let rhs: Vec<f64> = (0..dp.n()).filter(|&v| index[v] != usize::MAX).map(|v| -r[v]).collect();
        let free_step = solve_with_shift(&jac, &rhs)?;
        let mut step = vec![0.0; dp.n()];
        for v in 0..dp.n() {
            if index[v] != usize::MAX {
                step[v] = free_step[index[v]];
            }
        }
        let mut slope: f64 = compensated_sum(step.iter().zip(r.iter()).map(|(s, r)| s * r));
        if !(slope < 0.0) {
            // Rounding broke descent: fall back to steepest descent.
            for v in 0..dp.n() {
                step[v] = if index[v] == usize::MAX { 0.0 } else { -r[v] };
            }
            slope = -compensated_sum(step.iter().map(|s| s * s));
        }
        let mut alpha = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = step.iter().map(|s| alpha * s).collect();
            let de = energy_change(dp, &u, &trial, psi);
            if de <= ARMIJO_C * alpha * slope && de <= 0.0 {
                break Some((trial, de));
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                break None;
            }
        };
        let Some((trial, de)) = accepted else {
            report.stalled = true;
            break;
        };
        for (x, d) in u.iter_mut().zip(&trial) {
            *x += d;
        }
        energy += de;
        report.iterations += 1;
        r = residual(dp, &u, ResidualMode::Inner(psi))?;
        rn = norm2(&r);
        report.residual_history.push(rn);
        if let Some(h) = report.energy_history.as_mut() {
            h.push(energy);
        }
    }
    report.converged = rn <= opts.tol;
    report.final_sup_norm = u.sup_norm();
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((u, report))
}

fn solve_with_shift(jac: &SparseBuilder, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
    match jac.solve_spd(rhs, 0.0) {
        Ok(x) => Ok(x),
        Err(LinalgError::NotPositiveDefinite | LinalgError::NonFinite) => {
            let scale = jac.max_diagonal().max(f64::MIN_POSITIVE);
            let mut shift = 1e-12 * scale;
            for _ in 0..12 {
                if let Ok(x) = jac.solve_spd(rhs, shift) {
                    return Ok(x);
                }
                shift *= 10.0;
            }
            Err(LinalgError::NotPositiveDefinite.into())
        }
        Err(e) => Err(e.into()),
    }
}

/// Damped Newton on the direct residual from `u0`.
pub fn direct_solve(
    dp: &DiscreteProblem,
    u0: &[f64],
    opts: &SolverOptions,
) -> Result<(Field, SolveReport), SolverError> {
    dp.validate()?;
    dp.mesh.check_field(u0)?;
    let start = Instant::now();
    let mesh = &dp.mesh;
    let (index, n_free) = interior_index(mesh);
    let project = |u: &mut [f64]| {
        mesh.apply_dirichlet(u);
        if opts.enforce_positive {
            for x in u.iter_mut() {
                *x = x.max(0.0);
            }
        }
    };
    let mut u = Field(u0.to_vec());
    project(&mut u);
    let mut report = SolveReport {
        converged: false,
        iterations: 0,
        residual_history: Vec::new(),
        energy_history: None,
        final_sup_norm: 0.0,
        wall_time: 0.0,
        escaped: false,
        stalled: false,
    };
    let finish = |u: Field, mut report: SolveReport, converged: bool| {
        report.converged = converged;
        report.final_sup_norm = u.sup_norm();
        report.wall_time = start.elapsed().as_secs_f64();
        (u, report)
    };
    let mut r = match residual(dp, &u, ResidualMode::Direct) {
        Ok(r) => r,
        Err(SolverError::NonFinite { .. }) => {
            report.escaped = true;
            return Ok(finish(u, report, false));
        }
        Err(e) => return Err(e),
    };
    let mut rn = norm2(&r);
    report.residual_history.push(rn);
    while rn > opts.tol && report.iterations < opts.max_iter {
        let jac = direct_jacobian(dp, &u, &index, n_free);
        let rhs: Vec<f64> = (0..dp.n()).filter(|&v| index[v] != usize::MAX).map(|v| -r[v]).collect();
        let free_step = match jac.solve_general(&rhs) {
            Ok(x) => x,
            Err(_) => {
                report.stalled = true;
                break;
            }
        };
        let mut step = vec![0.0; dp.n()];
        for v in 0..dp.n() {
            if index[v] != usize::MAX {
                step[v] = free_step[index[v]];
            }
        }
        let mut alpha = 1.0;
        let accepted = loop {
            let mut trial = Field(u.iter().zip(&step).map(|(x, s)| x + alpha * s).collect());
            project(&mut trial);
            if let Ok(rt) = residual(dp, &trial, ResidualMode::Direct) {
                let tn = norm2(&rt);
                if tn <= (1.0 - ARMIJO_C * alpha) * rn {
                    break Some((trial, rt, tn));
                }
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                break None;
            }
        };
        let Some((trial, rt, tn)) = accepted else {
            report.stalled = true;
            break;
        };
        u = trial;
        r = rt;
        rn = tn;
        report.iterations += 1;
        report.residual_history.push(rn);
        if rn > 1e6 || u.sup_norm() > opts.escape_bound {
            report.escaped = true;
            break;
        }
    }
    let converged = rn <= opts.tol && !report.escaped;
    Ok(finish(u, report, converged))
}

fn direct_jacobian(dp: &DiscreteProblem, u: &[f64], index: &[usize], n_free: usize) -> SparseBuilder {
    let mesh = &dp.mesh;
    let mut jac = SparseBuilder::with_capacity(n_free, 9 * mesh.n_elements() + 8 * n_free);
    assemble_stiffness(dp, u, index, &mut jac);
    let needs_p = dp.source.depends_on_gradient();
    for v in 0..dp.n() {
        let iv = index[v];
        if iv == usize::MAX {
            continue;
        }
        let x = mesh.vertex(v);
        let m = mesh.vertex_masses()[v];
        let p = if needs_p {
            mesh.vertex_gradient(u, v)
        } else {
            [0.0, 0.0]
        };
        jac.add(iv, iv, -m * dp.source.d_dt(x, u[v], p));
        if needs_p {
            let dbdp = dp.source.d_dp(x, u[v], p);
            let star = mesh.star(v);
            let total: f64 = star.iter().map(|&e| mesh.element_measures()[e]).sum();
            for &e in star {
                let w = mesh.element_measures()[e] / total;
                for (&vw, g) in mesh.element(e).iter().zip(mesh.basis_gradients(e)) {
                    if index[vw] != usize::MAX {
                        jac.add(iv, index[vw], -m * w * (dbdp[0] * g[0] + dbdp[1] * g[1]));
                    }
                }
            }
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, Shape};
    use crate::source::ScalarLaw;

    fn interval(a: f64, b: f64, h: f64) -> Arc<Mesh> {
        Arc::new(build_mesh(&Shape::Interval { a, b }, h).unwrap())
    }

    fn plap(p: f64, mesh: Arc<Mesh>) -> DiscreteProblem {
        DiscreteProblem::new(mesh, YoungFunction::power(p).unwrap(), SourceTerm::zero())
    }

    #[test]
    fn zero_data_gives_zero_residual_and_solution() {
        let dp = plap(3.0, interval(0.0, 1.0, 0.1)).with_l(2.5);
        let z = dp.zero_field();
        assert!(residual(&dp, &z, ResidualMode::Inner(&z))
            .unwrap()
            .iter()
            .all(|r| *r == 0.0));
        let (u, rep) = inner_solve(&dp, &z, &SolverOptions::default()).unwrap();
        assert!(rep.converged && rep.iterations <= 1);
        assert_eq!(u.sup_norm(), 0.0);
    }

    #[test]
    fn linear_case_matches_hand_assembled_tridiagonal_system() {
        // h = 1/4, p = 2, psi = 1: (1/h) tridiag(-1, 2, -1) u = h * 1.
        let dp = plap(2.0, interval(0.0, 1.0, 0.25)).with_epsilon(1e-8);
        let psi = Field(vec![1.0; 5]);
        let (u, rep) = inner_solve(
            &dp,
            &psi,
            &SolverOptions {
                tol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.converged);
        // Lumped linear FEM is nodally exact for -u'' = 1: u = x(1-x)/2.
        for (k, x) in [0.25, 0.5, 0.75].iter().enumerate() {
            assert!((u[k + 1] - x * (1.0 - x) / 2.0).abs() < 1e-12);
        }
        assert!(residual(&dp, &u, ResidualMode::Inner(&psi))
            .unwrap()
            .iter()
            .all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn p3_closed_form_and_energy_descent() {
        let dp = plap(3.0, interval(-1.0, 1.0, 1.0 / 128.0));
        let psi = Field(vec![1.0; dp.n()]);
        let (u, rep) = inner_solve(&dp, &psi, &SolverOptions::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!((u.sup_norm() - 2.0 / 3.0).abs() < 5e-3);
        let e = rep.energy_history.unwrap();
        assert!(e.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn direct_mode_poisson_and_p3() {
        let mesh = interval(0.0, 1.0, 1.0 / 64.0);
        let dp = plap(2.0, mesh).with_lambda(1.0);
        let (u, rep) = direct_solve(&dp, &dp.zero_field(), &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert!((u.sup_norm() - 0.125).abs() < 1e-10);

        let dp = plap(3.0, interval(-1.0, 1.0, 1.0 / 128.0)).with_lambda(1.0);
        let u0 = dp.mesh.field_from(|x| 0.5 * (1.0 - x[0] * x[0]));
        let (u, rep) = direct_solve(&dp, &u0, &SolverOptions::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!((u.sup_norm() - 2.0 / 3.0).abs() < 5e-3);
    }

    #[test]
    fn direct_zero_source_collapses_to_zero() {
        let dp = plap(2.0, interval(0.0, 1.0, 0.05));
        let u0 = dp.mesh.field_from(|x| (x[0] * 7.0).sin() + 3.0);
        let (u, rep) = direct_solve(&dp, &u0, &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(u.sup_norm() < 1e-9);
    }

    #[test]
    fn modes_agree_when_source_mimics_inner_problem() {
        let mesh = interval(0.0, 1.0, 1.0 / 32.0);
        let yf = YoungFunction::plog(2.5, 1.0).unwrap();
        let l = 0.7;
        let inner = DiscreteProblem::new(mesh.clone(), yf.clone(), SourceTerm::zero()).with_l(l);
        let psi = mesh.field_from(|x| 1.0 + x[0]);
        let opts = SolverOptions {
            tol: 1e-12,
            ..Default::default()
        };
        let (ui, _) = inner_solve(&inner, &psi, &opts).unwrap();
        let yf2 = yf.clone();
        let src = SourceTerm::custom("psi-minus-Lg", true, move |x, t, _| {
            let sg = if t == 0.0 { 0.0 } else { t.signum() * yf2.g(t.abs()) };
            1.0 + x[0] - l * sg
        });
        let direct = DiscreteProblem::new(mesh, yf, src);
        let (ud, rep) = direct_solve(&direct, &ui.scaled(0.5), &opts).unwrap();
        assert!(rep.converged);
        assert!(ui.max_abs_diff(&ud) < 1e-8);
    }

    #[test]
    fn gradient_dependent_jacobian_converges_quadratically() {
        let mesh = interval(0.0, 1.0, 1.0 / 64.0);
        let src = SourceTerm::composite(0.0, ScalarLaw::Zero).with_h(0.5, ScalarLaw::Power { exponent: 1.5 });
        let dp = DiscreteProblem::new(mesh, YoungFunction::power(2.0).unwrap(), src).with_lambda(1.0);
        let (_, rep) = direct_solve(
            &dp,
            &dp.zero_field(),
            &SolverOptions {
                tol: 1e-11,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.converged && rep.iterations <= 8, "{rep:?}");
    }
}
