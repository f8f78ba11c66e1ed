//! Blow-up diagnostics: rescaled fields and domains, the rescaled
//! nonlinearities `g_k` and `B_k`, lambda-continuation of positive solutions
//! (an empirical a priori bound) and the expanding-ball scaling probe for the
//! Lane-Emden-type problem `Delta_p u + u^(q-1) = 0`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixed_point::{bump_profile, multistart, FixedPointConfig, Method};
use crate::mesh::{build_mesh, interpolate, Field, Mesh, MeshError, Shape};
use crate::numeric::{ls_slope, par_map};
use crate::solver::{direct_solve, inner_solve_from, DiscreteProblem, SolveReport, SolverError, SolverOptions};
use crate::source::{Point, SourceError, SourceTerm};
use crate::young::{phi_implicit, YoungError, YoungFunction};

#[derive(Debug, Error)]
pub enum BlowupError {
    #[error("field vanishes identically; case 1 needs a positive maximum")]
    ZeroField,
    #[error("scale phi(N) = {0} is not finite")]
    BadScale(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Young(#[from] YoungError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleCase {
    /// `N = max u`, centered at the maximizer.
    Case1,
    /// `N = f^{-1}(lambda)`, centered at the origin.
    Case2,
}

pub const DEFAULT_HALF_WIDTH: f64 = 10.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RescaleResult {
    pub case: ScaleCase,
    pub m_k: f64,
    pub x_k: Point,
    pub n_k: f64,
    pub y_k: Point,
    /// The center fell back to the domain centroid because the origin lies
    /// outside the mesh.
    pub center_flagged: bool,
    pub phi_nk: f64,
    pub mu_k: f64,
    /// Distance from the rescaled maximizer to the rescaled boundary,
    /// `phi(N) dist(x_k, boundary)`.
    pub boundary_distance: f64,
    pub sup_v: f64,
    #[serde(skip)]
    pub v: Field,
    #[serde(skip)]
    pub rescaled_mesh: Option<Arc<Mesh>>,
}

/// `v(x) = u(y + x / phi(N)) / N` on the image of the mesh under
/// `x -> phi(N) (x - y)`, truncated to the box `|x_i| <= half_width`.
///
/// The rescaled mesh is the affine image of the source mesh, so nodal values
/// carry over exactly.
pub fn rescale(
    u: &[f64],
    dp: &DiscreteProblem,
    case: ScaleCase,
    lambda_k: f64,
    half_width: f64,
) -> Result<RescaleResult, BlowupError> {
    let mesh = &dp.mesh;
    mesh.check_field(u)?;
    let field = Field(u.to_vec());
    let (m_k, imax) = field.argmax();
    let x_k = mesh.vertex(imax);
    let f = dp.source.f;
    let (n_k, y_k, center_flagged) = match case {
        ScaleCase::Case1 => {
            if !(m_k > 0.0) {
                return Err(BlowupError::ZeroField);
            }
            (m_k, x_k, false)
        }
        ScaleCase::Case2 => {
            let n = dp.source.f_inverse(lambda_k)?;
            let origin = [0.0, 0.0];
            let inside = matches!(interpolate(mesh, u, &[origin]), Ok(r) if r.clamped.is_empty());
            if inside {
                (n, origin, false)
            } else {
                (n, centroid(mesh), true)
            }
        }
    };
    let phi = phi_implicit(&dp.young, |t| f.eval(t), n_k)?;
    if !phi.is_finite() || !(phi > 0.0) {
        return Err(BlowupError::BadScale(phi));
    }
    let mu_k = lambda_k / f.eval(n_k);
    let (rmesh, old) = mesh.affine_crop(y_k, phi, half_width)?;
    let v = Field(old.iter().map(|&i| u[i] / n_k).collect());
    let boundary_distance = phi
        * mesh
            .vertices()
            .iter()
            .zip(mesh.boundary_flags())
            .filter(|(_, b)| **b)
            .map(|(p, _)| (p[0] - x_k[0]).hypot(p[1] - x_k[1]))
            .fold(f64::INFINITY, f64::min);
    Ok(RescaleResult {
        case,
        m_k,
        x_k,
        n_k,
        y_k,
        center_flagged,
        phi_nk: phi,
        mu_k,
        boundary_distance,
        sup_v: v.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x)),
        v,
        rescaled_mesh: Some(Arc::new(rmesh)),
    })
}

fn centroid(mesh: &Mesh) -> Point {
    let mut c = [0.0, 0.0];
    let mut w = 0.0;
    for (p, m) in mesh.vertices().iter().zip(mesh.vertex_masses()) {
        c[0] += m * p[0];
        c[1] += m * p[1];
        w += m;
    }
    [c[0] / w, c[1] / w]
}

/// A positive bump of the given height, vanishing on the boundary.
pub fn synthetic_bump(dp: &DiscreteProblem, height: f64) -> Result<Field, BlowupError> {
    Ok(bump_profile(dp)?.scaled(height))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub n: f64,
    /// Gradient scale `N phi(N)`.
    pub scale: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkTable {
    pub exponent: f64,
    pub rows: Vec<DeviationRow>,
    /// Deviations are non-increasing in `N` (slack `1e-10`).
    pub monotone: bool,
}

/// `sup_t |g_k(t) - t^(p-1)|` with `g_k(t) = g(N phi(N) t) / g(N phi(N))`.
///
/// `p` is the regular-variation exponent estimated on the default grids
/// unless `exponent` is given.
pub fn gk_limit_check(
    yf: &YoungFunction,
    f: impl Fn(f64) -> f64,
    n_list: &[f64],
    t_grid: &[f64],
    exponent: Option<f64>,
) -> Result<GkTable, BlowupError> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BlowupError::Invalid("N_list must be increasing".into()));
    }
    let p = match exponent {
        Some(p) => p,
        None => {
            yf.regvar_exponent(&crate::young::default_s_list(), &crate::young::default_t_grid())?
                .p_hat
        }
    };
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let s = n * phi_implicit(yf, &f, n)?;
        let gs = yf.g(s);
        let deviation = t_grid
            .iter()
            .map(|&t| (yf.g(s * t) / gs - t.powf(p - 1.0)).abs())
            .fold(0.0, f64::max);
        rows.push(DeviationRow { n, scale: s, deviation });
    }
    let monotone = rows.windows(2).all(|w| w[1].deviation <= w[0].deviation + 1e-10);
    Ok(GkTable {
        exponent: p,
        rows,
        monotone,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BkTable {
    pub q_hat: f64,
    pub b_hat: f64,
    pub rows: Vec<DeviationRow>,
    /// `max |B_k| / (1 + f(N t)/f(N) + h(N phi(N) |p|)/f(N))` per `N`.
    pub growth_ratio: Vec<f64>,
    /// Log-log slope of deviation against `N` (finite deviations only).
    pub decay_slope: f64,
    /// Deviations fail to shrink: a critical term survives the rescaling.
    pub plateau: bool,
}

/// Deviation of `B_k(x, t, p) = B(y + x/phi(N), N t, N phi(N) p) / f(N)`
/// from the frozen profile `b(y + x/phi(N)) t^(q-1)` with the declared `q`.
pub fn bk_limit_check(
    st: &SourceTerm,
    yf: &YoungFunction,
    n_list: &[f64],
    t_grid: &[f64],
    p_grid: &[f64],
    x_samples: &[Point],
    center: Point,
) -> Result<BkTable, BlowupError> {
    if n_list.is_empty() || t_grid.is_empty() {
        return Err(BlowupError::Invalid("empty grids".into()));
    }
    let f = st.f;
    let mut rows = Vec::with_capacity(n_list.len());
    let mut growth_ratio = Vec::with_capacity(n_list.len());
    let mut last_phi = 1.0;
    for &n in n_list {
        let phi = phi_implicit(yf, |t| f.eval(t), n)?;
        let s = n * phi;
        let fn_ = f.eval(n);
        last_phi = phi;
        let mut dev: f64 = 0.0;
        let mut gr: f64 = 0.0;
        for &x in x_samples {
            let xp = [center[0] + x[0] / phi, center[1] + x[1] / phi];
            let b = st.limit_coefficient(xp);
            for &t in t_grid {
                for &p in p_grid {
                    let bk = st.eval(xp, n * t, [s * p, 0.0]) / fn_;
                    dev = dev.max((bk - b * t.abs().powf(st.q - 1.0)).abs());
                    let denom = 1.0 + f.eval(n * t).abs() / fn_ + st.c.abs() * st.h.eval(s * p).abs() / fn_;
                    gr = gr.max(bk.abs() / denom);
                }
            }
        }
        rows.push(DeviationRow {
            n,
            scale: s,
            deviation: dev,
        });
        growth_ratio.push(gr);
    }
    let n_top = *n_list.last().unwrap();
    let phi = last_phi;
    let x0 = [center[0] + x_samples.first().map_or(0.0, |x| x[0]) / phi, center[1]];
    let (lx, ly): (Vec<f64>, Vec<f64>) = t_grid
        .iter()
        .filter_map(|&t| {
            let v = st.eval(x0, n_top * t, [0.0, 0.0]) / f.eval(n_top);
            (t > 0.0 && v > 0.0).then(|| (t.ln(), v.ln()))
        })
        .unzip();
    let q_hat = if lx.len() >= 2 {
        1.0 + ls_slope(&lx, &ly)
    } else {
        f64::NAN
    };
    let b_hat = st.eval(x0, n_top, [0.0, 0.0]) / f.eval(n_top);
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.deviation > 0.0 && r.deviation.is_finite())
        .map(|r| (r.n.ln(), r.deviation.ln()))
        .collect();
    let decay_slope = if fit.len() >= 2 {
        let (a, b): (Vec<f64>, Vec<f64>) = fit.into_iter().unzip();
        ls_slope(&a, &b)
    } else {
        f64::NEG_INFINITY
    };
    let first = rows[0].deviation;
    let last = rows.last().unwrap().deviation;
    let plateau = last > 1e-10 * (1.0 + first) && last > 0.5 * first;
    Ok(BkTable {
        q_hat,
        b_hat,
        rows,
        growth_ratio,
        decay_slope,
        plateau,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationConfig {
    /// Attempts per lambda before declaring failure.
    pub starts: usize,
    pub bisection_steps: usize,
    pub solver: SolverOptions,
    /// Used for the multi-start solve at the first lambda.
    pub fixed_point: FixedPointConfig,
    pub seed: u64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            starts: 4,
            bisection_steps: 6,
            solver: SolverOptions {
                enforce_positive: true,
                escape_bound: 1e6,
                ..SolverOptions::default()
            },
            fixed_point: FixedPointConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRow {
    pub lambda: f64,
    pub sup_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationTable {
    pub rows: Vec<ContinuationRow>,
    /// Midpoint of the final bracket; `+inf` when every lambda converged.
    pub lambda_star: f64,
    /// `max (sup u + lambda)` over converged rows: the empirical bound.
    pub max_bound_observed: f64,
    pub note: String,
    #[serde(skip)]
    pub first_solution: Option<Field>,
}

struct Attempt {
    u: Field,
    report: SolveReport,
}

fn attempt(
    dp: &DiscreteProblem,
    lambda: f64,
    seeds: &[Field],
    opts: &SolverOptions,
) -> Result<Option<Attempt>, BlowupError> {
    let p = dp.clone().with_lambda(lambda);
    for s in seeds {
        let (u, report) = direct_solve(&p, s, opts)?;
        if report.converged {
            return Ok(Some(Attempt { u, report }));
        }
    }
    Ok(None)
}

fn warm_seeds(prev: &Field, n: usize) -> Vec<Field> {
    [1.0, 1.1, 0.9, 1.25]
        .iter()
        .take(n.max(1))
        .map(|&c| prev.scaled(c))
        .collect()
}

/// Follows positive solutions of `Delta_g u + B + lambda = 0` along the
/// increasing `lambda_grid`, warm-starting each solve from the previous
/// solution. After the first failure the bracket is refined by bisection;
/// the failure criterion cannot tell nonexistence from solver failure.
pub fn lambda_continuation(
    dp_base: &DiscreteProblem,
    lambda_grid: &[f64],
    cfg: &ContinuationConfig,
) -> Result<ContinuationTable, BlowupError> {
    if lambda_grid.is_empty() || lambda_grid.windows(2).any(|w| w[1] <= w[0]) || lambda_grid[0] < 0.0 {
        return Err(BlowupError::Invalid(
            "lambda grid must be nonnegative and strictly increasing".into(),
        ));
    }
    let mut rows = Vec::new();
    let l0 = lambda_grid[0];
    // First lambda: multi-start through the fixed-point driver, preferring a
    // nontrivial solution; accept the trivial one only if nothing else exists.
    let dp0 = dp_base.clone().with_lambda(l0);
    let ms = multistart(&dp0, &cfg.fixed_point, cfg.seed)?;
    let mut current = match (ms.method, ms.solution) {
        (Method::FixedPoint | Method::NewtonFallback, Some(u)) => {
            let (u, report) = direct_solve(&dp0, &u, &cfg.solver)?;
            report.converged.then_some(Attempt { u, report })
        }
        _ => None,
    };
    if current.is_none() {
        current = attempt(dp_base, l0, &[dp_base.zero_field()], &cfg.solver)?;
    }
    let Some(first) = current else {
        rows.push(ContinuationRow {
            lambda: l0,
            sup_norm: f64::NAN,
            converged: false,
            iterations: 0,
        });
        return Ok(ContinuationTable {
            rows,
            lambda_star: l0,
            max_bound_observed: f64::NAN,
            note: "no solution at the first lambda".into(),
            first_solution: None,
        });
    };
    rows.push(ContinuationRow {
        lambda: l0,
        sup_norm: first.u.sup_norm(),
        converged: true,
        iterations: first.report.iterations,
    });
    let first_solution = Some(first.u.clone());
    let mut prev = first.u;
    let mut prev_lambda = l0;
    let mut lambda_star = f64::INFINITY;
    for &lam in &lambda_grid[1..] {
        match attempt(dp_base, lam, &warm_seeds(&prev, cfg.starts), &cfg.solver)? {
            Some(a) => {
                rows.push(ContinuationRow {
                    lambda: lam,
                    sup_norm: a.u.sup_norm(),
                    converged: true,
                    iterations: a.report.iterations,
                });
                prev = a.u;
                prev_lambda = lam;
            }
            None => {
                rows.push(ContinuationRow {
                    lambda: lam,
                    sup_norm: f64::NAN,
                    converged: false,
                    iterations: 0,
                });
                let (mut lo, mut hi) = (prev_lambda, lam);
                for _ in 0..cfg.bisection_steps {
                    let mid = 0.5 * (lo + hi);
                    match attempt(dp_base, mid, &warm_seeds(&prev, cfg.starts), &cfg.solver)? {
                        Some(a) => {
                            rows.push(ContinuationRow {
                                lambda: mid,
                                sup_norm: a.u.sup_norm(),
                                converged: true,
                                iterations: a.report.iterations,
                            });
                            prev = a.u;
                            lo = mid;
                        }
                        None => {
                            rows.push(ContinuationRow {
                                lambda: mid,
                                sup_norm: f64::NAN,
                                converged: false,
                                iterations: 0,
                            });
                            hi = mid;
                        }
                    }
                }
                lambda_star = 0.5 * (lo + hi);
                break;
            }
        }
    }
    rows.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let max_bound_observed = rows
        .iter()
        .filter(|r| r.converged)
        .map(|r| r.sup_norm + r.lambda)
        .fold(f64::NEG_INFINITY, f64::max);
    let note = if lambda_star.is_finite() {
        format!(
            "failure = no convergence from {} warm starts; this does not distinguish nonexistence from solver failure",
            cfg.starts
        )
    } else {
        "every lambda converged; no bound detected on this grid".into()
    };
    Ok(ContinuationTable {
        rows,
        lambda_star,
        max_bound_observed,
        note,
        first_solution,
    })
}

/// Positive solution of `-Delta_p u = u^(q-1)` by normalized inverse
/// iteration: `w = (-Delta_p)^{-1} v^(q-1)`, `v <- w / max w`; at a fixed
/// point `-Delta_p v = mu v^(q-1)` and `u = mu^(1/(q-p)) v`.
pub fn ground_state_seed(dp: &DiscreteProblem, p: f64, q: f64, iters: usize) -> Result<Field, BlowupError> {
    let plain = dp.clone().with_l(0.0);
    let mut v = bump_profile(&plain)?;
    let opts = SolverOptions {
        tol: 1e-10,
        ..SolverOptions::default()
    };
    let mut c = 1.0;
    for _ in 0..iters {
        let rhs = Field(v.iter().map(|x| x.max(0.0).powf(q - 1.0)).collect());
        let guess = v.scaled(c);
        let (w, _) = inner_solve_from(&plain, &rhs, &guess, &opts)?;
        c = w.sup_norm();
        if !(c > 0.0) {
            return Err(BlowupError::ZeroField);
        }
        let next = w.scaled(1.0 / c);
        let change = next.max_abs_diff(&v);
        v = next;
        if change < 1e-9 {
            break;
        }
    }
    let mu = c.powf(1.0 - p);
    Ok(v.scaled(mu.powf(1.0 / (q - p))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleRow {
    pub radius: f64,
    pub sup_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n_vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleReport {
    pub p: f64,
    pub q: f64,
    pub h: f64,
    pub rows: Vec<LiouvilleRow>,
    /// Slope of `log sup u_R` against `log R`, smallest radius excluded.
    pub slope: f64,
    /// `-p / (q - p)` from the scaling symmetry.
    pub expected_slope: f64,
    pub flags: Vec<String>,
}

/// Solves `Delta_p u + u^(q-1) = 0`, `u = 0` on the polygonal disk of
/// radius `R` (mesh size `h` fixed across radii), positive branch, and fits
/// the decay of `sup u_R` in `R`.
pub fn liouville_scaling_probe(p: f64, q: f64, radii: &[f64], h: f64) -> Result<LiouvilleReport, BlowupError> {
    if !(p > 1.0 && q > p) || radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(BlowupError::Invalid("need 1 < p < q and positive radii".into()));
    }
    // G = t^p / p, so g(t) = t^(p-1) and Delta_g is the p-Laplacian.
    let yf_std = YoungFunction::power(p)?;
    let source = SourceTerm::lane_emden(q);
    let opts = SolverOptions {
        enforce_positive: true,
        tol: 1e-9,
        escape_bound: 1e6,
        ..SolverOptions::default()
    };
    let rows: Vec<Result<LiouvilleRow, BlowupError>> = par_map(radii, |&radius| {
        let sides = ((std::f64::consts::TAU * radius / h).round() as usize).max(16);
        let mesh = Arc::new(build_mesh(
            &Shape::Disk {
                radius,
                sides: Some(sides),
                center: [0.0, 0.0],
            },
            h,
        )?);
        let dp = DiscreteProblem::new(mesh.clone(), yf_std.clone(), source.clone());
        let seed = ground_state_seed(&dp, p, q, 200)?;
        let (u, report) = direct_solve(&dp, &seed, &opts)?;
        Ok(LiouvilleRow {
            radius,
            sup_norm: u.sup_norm(),
            converged: report.converged && u.sup_norm() > 0.0,
            iterations: report.iterations,
            n_vertices: mesh.n_vertices(),
        })
    });
    let rows: Vec<LiouvilleRow> = rows.into_iter().collect::<Result<_, _>>()?;
    let mut flags = Vec::new();
    for r in rows.iter().filter(|r| !r.converged) {
        flags.push(format!("solver failed at R = {}", r.radius));
    }
    let mut usable: Vec<&LiouvilleRow> = rows.iter().filter(|r| r.converged).collect();
    usable.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    if usable.len() >= 3 {
        usable.remove(0);
    }
    let slope = if usable.len() >= 2 {
        let x: Vec<f64> = usable.iter().map(|r| r.radius.ln()).collect();
        let y: Vec<f64> = usable.iter().map(|r| r.sup_norm.ln()).collect();
        ls_slope(&x, &y)
    } else {
        flags.push("fewer than two usable radii".into());
        f64::NAN
    };
    Ok(LiouvilleReport {
        p,
        q,
        h,
        rows,
        slope,
        expected_slope: -p / (q - p),
        flags,
    })
}
