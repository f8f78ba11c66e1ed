//! Young functions `G`, their derivatives `g = G'` and `g'`, and numerical
//! diagnostics for the structural conditions the g-Laplacian relies on:
//! the Lieberman ratio bounds, the Δ2 doubling constant, regular variation
//! at infinity, the complementary function and Young's inequality.
//!
//! Every condition is stated for all `t > 0`; here it is checked on a
//! log-spaced sample of [`YoungFunction::eval_domain`] and reported as a band.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{linspace, logspace, ls_slope, solve_increasing, RootError};

/// Default sampling window `[t_min, t_max]`.
pub const DEFAULT_DOMAIN: [f64; 2] = [1e-3, 1e3];
/// Default number of log-spaced samples used by the condition checks.
pub const DEFAULT_SAMPLES: usize = 400;

const ROOT_REL_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum YoungError {
    #[error("argument {0} is negative")]
    Domain(f64),
    #[error("t = {t} lies beyond ten times the table range (max {max})")]
    Range { t: f64, max: f64 },
    #[error("t = {t} exceeds the supremum of g on the numeric domain")]
    Saturation { t: f64 },
    #[error("degenerate sample: g or G vanishes at t = {0}")]
    Degenerate(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// Which of `G`, `g` or `g'` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "G")]
    BigG,
    #[serde(rename = "g")]
    LittleG,
    #[serde(rename = "gprime")]
    GPrime,
}

/// The closed-form families plus a user table of `(t, g(t))` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum YoungKind {
    /// `G(t) = t^p / p`
    Power {
        p: f64,
    },
    /// `G(t) = t^p ln^alpha(1 + t)`
    Plog {
        p: f64,
        alpha: f64,
    },
    /// `G(t) = t^p / p + t^q / q`
    DoublePower {
        p: f64,
        q: f64,
    },
    Tabulated(Table),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "YoungSpec", into = "YoungSpec")]
pub struct YoungFunction {
    kind: YoungKind,
    eval_domain: [f64; 2],
    scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct YoungSpec {
    #[serde(flatten)]
    kind: YoungKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eval_domain: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
}

impl TryFrom<YoungSpec> for YoungFunction {
    type Error = YoungError;

    fn try_from(spec: YoungSpec) -> Result<Self, Self::Error> {
        let mut yf = YoungFunction::new(spec.kind)?;
        if let Some(d) = spec.eval_domain {
            yf = yf.with_domain(d[0], d[1])?;
        }
        if let Some(s) = spec.scale {
            yf = yf.with_scale(s)?;
        }
        Ok(yf)
    }
}

impl From<YoungFunction> for YoungSpec {
    fn from(yf: YoungFunction) -> Self {
        YoungSpec {
            kind: yf.kind,
            eval_domain: Some(yf.eval_domain),
            scale: (yf.scale != 1.0).then_some(yf.scale),
        }
    }
}

fn invalid(msg: impl Into<String>) -> YoungError {
    YoungError::InvalidParameter(msg.into())
}

/// `c * t^e` with the conventions `0^0 = 1` and `0^e = inf` for `e < 0`.
fn scaled_pow(c: f64, t: f64, e: f64) -> f64 {
    if t == 0.0 {
        if e > 0.0 {
            0.0
        } else if e == 0.0 {
            c
        } else {
            f64::INFINITY
        }
    } else {
        c * t.powf(e)
    }
}

impl YoungFunction {
    pub fn new(kind: YoungKind) -> Result<Self, YoungError> {
        let domain = match &kind {
            YoungKind::Power { p } => {
                if !(*p > 1.0 && p.is_finite()) {
                    return Err(invalid(format!("power exponent p = {p} must exceed 1")));
                }
                DEFAULT_DOMAIN
            }
            YoungKind::Plog { p, alpha } => {
                if !(*p > 1.0 && p.is_finite()) || !(*alpha > 0.0 && alpha.is_finite()) {
                    return Err(invalid(format!("plog needs p > 1 and alpha > 0 (got {p}, {alpha})")));
                }
                DEFAULT_DOMAIN
            }
            YoungKind::DoublePower { p, q } => {
                if !(*p > 1.0 && *q > 1.0 && p.is_finite() && q.is_finite()) {
                    return Err(invalid(format!("double_power needs p, q > 1 (got {p}, {q})")));
                }
                DEFAULT_DOMAIN
            }
            YoungKind::Tabulated(table) => [table.t[0], *table.t.last().unwrap()],
        };
        Ok(YoungFunction {
            kind,
            eval_domain: domain,
            scale: 1.0,
        })
    }

    pub fn power(p: f64) -> Result<Self, YoungError> {
        Self::new(YoungKind::Power { p })
    }

    pub fn plog(p: f64, alpha: f64) -> Result<Self, YoungError> {
        Self::new(YoungKind::Plog { p, alpha })
    }

    pub fn double_power(p: f64, q: f64) -> Result<Self, YoungError> {
        Self::new(YoungKind::DoublePower { p, q })
    }

    pub fn tabulated(t: Vec<f64>, g: Vec<f64>) -> Result<Self, YoungError> {
        Self::new(YoungKind::Tabulated(Table::new(t, g)?))
    }

    pub fn with_domain(mut self, t_min: f64, t_max: f64) -> Result<Self, YoungError> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
            return Err(invalid(format!(
                "eval_domain [{t_min}, {t_max}] must satisfy 0 < a < b"
            )));
        }
        self.eval_domain = [t_min, t_max];
        Ok(self)
    }

    /// Multiplies `G` (and hence `g`, `g'`) by a positive constant; e.g. the
    /// power kind with `scale = p` is `G(t) = t^p`.
    pub fn with_scale(mut self, scale: f64) -> Result<Self, YoungError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid(format!("scale {scale} must be positive")));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn kind(&self) -> &YoungKind {
        &self.kind
    }

    pub fn eval_domain(&self) -> [f64; 2] {
        self.eval_domain
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Log-spaced sample points on the evaluation domain.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        logspace(self.eval_domain[0], self.eval_domain[1], n)
    }

    /// `G(t)` for `t >= 0`. Tables extrapolate without a range check.
    pub fn big_g(&self, t: f64) -> f64 {
        let v = match &self.kind {
            YoungKind::Power { p } => scaled_pow(1.0 / p, t, *p),
            YoungKind::Plog { p, alpha } => {
                if t == 0.0 {
                    0.0
                } else {
                    t.powf(*p) * t.ln_1p().powf(*alpha)
                }
            }
            YoungKind::DoublePower { p, q } => scaled_pow(1.0 / p, t, *p) + scaled_pow(1.0 / q, t, *q),
            YoungKind::Tabulated(table) => table.big_g(t),
        };
        self.scale * v
    }

    /// `g(t) = G'(t)` for `t >= 0`.
    pub fn g(&self, t: f64) -> f64 {
        let v = match &self.kind {
            YoungKind::Power { p } => scaled_pow(1.0, t, p - 1.0),
            YoungKind::Plog { p, alpha } => {
                if t == 0.0 {
                    0.0
                } else {
                    let l = t.ln_1p();
                    p * t.powf(p - 1.0) * l.powf(*alpha) + alpha * t.powf(*p) * l.powf(alpha - 1.0) / (1.0 + t)
                }
            }
            YoungKind::DoublePower { p, q } => scaled_pow(1.0, t, p - 1.0) + scaled_pow(1.0, t, q - 1.0),
            YoungKind::Tabulated(table) => table.g(t),
        };
        self.scale * v
    }

    /// `g'(t)` for `t >= 0`; may be infinite at `t = 0`.
    pub fn g_prime(&self, t: f64) -> f64 {
        let v = match &self.kind {
            YoungKind::Power { p } => scaled_pow(p - 1.0, t, p - 2.0),
            YoungKind::Plog { p, alpha } => {
                if t == 0.0 {
                    // G ~ t^(p + alpha) near zero
                    let e = p + alpha;
                    scaled_pow(e * (e - 1.0), 0.0, e - 2.0)
                } else {
                    let l = t.ln_1p();
                    let s = 1.0 + t;
                    p * (p - 1.0) * t.powf(p - 2.0) * l.powf(*alpha)
                        + 2.0 * alpha * p * t.powf(p - 1.0) * l.powf(alpha - 1.0) / s
                        + alpha * t.powf(*p) * l.powf(alpha - 2.0) * (alpha - 1.0 - l) / (s * s)
                }
            }
            YoungKind::DoublePower { p, q } => scaled_pow(p - 1.0, t, p - 2.0) + scaled_pow(q - 1.0, t, q - 2.0),
            YoungKind::Tabulated(table) => {
                if t == 0.0 {
                    table.g_prime_at_zero()
                } else {
                    let d = 1e-6 * t;
                    (table.g(t + d) - table.g(t - d)) / (2.0 * d)
                }
            }
        };
        self.scale * v
    }

    /// Checked evaluation of `G`, `g` or `g'`.
    pub fn evaluate(&self, which: Quantity, t: f64) -> Result<f64, YoungError> {
        self.evaluate_flagged(which, t).map(|(v, _)| v)
    }

    /// Like [`evaluate`](Self::evaluate), also returning whether a tabulated
    /// function had to extrapolate.
    pub fn evaluate_flagged(&self, which: Quantity, t: f64) -> Result<(f64, bool), YoungError> {
        if t < 0.0 || t.is_nan() {
            return Err(YoungError::Domain(t));
        }
        let mut extrapolated = false;
        if let YoungKind::Tabulated(table) = &self.kind {
            let max = *table.t.last().unwrap();
            if t > 10.0 * max {
                return Err(YoungError::Range { t, max });
            }
            extrapolated = t < table.t[0] || t > max;
        }
        let v = match which {
            Quantity::BigG => self.big_g(t),
            Quantity::LittleG => self.g(t),
            Quantity::GPrime => self.g_prime(t),
        };
        Ok((v, extrapolated))
    }

    /// `G^{-1}(y)`: the `t >= 0` with `G(t) = y`.
    pub fn inverse_g(&self, y: f64) -> Result<f64, YoungError> {
        if y < 0.0 || y.is_nan() {
            return Err(YoungError::Domain(y));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let g = |t: f64| self.g(t);
        Ok(solve_increasing(|t| self.big_g(t), Some(&g), y, 1.0, ROOT_REL_TOL)?)
    }

    /// The complementary function `G~(t) = sup_w { t w - G(w) }`, evaluated at
    /// the maximiser `w*` solving `g(w*) = t`.
    pub fn complementary(&self, t: f64) -> Result<f64, YoungError> {
        if t < 0.0 || t.is_nan() {
            return Err(YoungError::Domain(t));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if let YoungKind::Tabulated(table) = &self.kind {
            let sup = self.scale * table.g(10.0 * table.t.last().unwrap());
            if t > sup {
                return Err(YoungError::Saturation { t });
            }
        }
        let gp = |w: f64| self.g_prime(w);
        let w = solve_increasing(|w| self.g(w), Some(&gp), t, 1.0, ROOT_REL_TOL)
            .map_err(|_| YoungError::Saturation { t })?;
        Ok(t * w - self.big_g(w))
    }

    fn check_sample(&self, t: f64) -> Result<(f64, f64, f64), YoungError> {
        let (big, g, gp) = (self.big_g(t), self.g(t), self.g_prime(t));
        if !(big > 0.0 && g > 0.0) || !big.is_finite() || !g.is_finite() {
            return Err(YoungError::Degenerate(t));
        }
        Ok((big, g, gp))
    }

    /// Lieberman bands on the default sample grid.
    ///
    /// `t g(t) / G(t)` averages the index `1 + s g'(s) / g(s)` over `(0, t]`,
    /// so for closed-form kinds the index is also sampled over six decades
    /// below the domain; otherwise the `tg/G` band leaks out of the index band
    /// near `t_min`.
    pub fn lieberman_exponents(&self) -> Result<LiebermanBands, YoungError> {
        let mut bands = self.lieberman_exponents_on(&self.samples(DEFAULT_SAMPLES))?;
        if !matches!(self.kind, YoungKind::Tabulated(_)) {
            let lo = self.eval_domain[0];
            let tail = self.lieberman_exponents_on(&logspace(lo * 1e-6, lo, 121))?;
            bands.p_minus_hat = bands.p_minus_hat.min(tail.p_minus_hat);
            bands.p_plus_hat = bands.p_plus_hat.max(tail.p_plus_hat);
        }
        Ok(bands)
    }

    /// `1 + min/max g'(t) t / g(t)` and `min/max t g(t) / G(t)` over `samples`.
    pub fn lieberman_exponents_on(&self, samples: &[f64]) -> Result<LiebermanBands, YoungError> {
        let mut r1 = (f64::INFINITY, f64::NEG_INFINITY);
        let mut r2 = (f64::INFINITY, f64::NEG_INFINITY);
        for &t in samples {
            let (big, g, gp) = self.check_sample(t)?;
            let a = gp * t / g;
            let b = t * g / big;
            r1 = (r1.0.min(a), r1.1.max(a));
            r2 = (r2.0.min(b), r2.1.max(b));
        }
        Ok(LiebermanBands {
            p_minus_hat: 1.0 + r1.0,
            p_plus_hat: 1.0 + r1.1,
            ratio2_min: r2.0,
            ratio2_max: r2.1,
        })
    }

    /// `max G(2t) / G(t)` over the default sample grid.
    pub fn delta2_constant(&self) -> Result<f64, YoungError> {
        let mut c: f64 = 1.0;
        for t in self.samples(DEFAULT_SAMPLES) {
            let (big, _, _) = self.check_sample(t)?;
            c = c.max(self.big_g(2.0 * t) / big);
        }
        Ok(c)
    }

    /// Estimates the exponent at infinity from `g(st)/g(s) -> t^(p-1)`.
    pub fn regvar_exponent(&self, s_list: &[f64], t_grid: &[f64]) -> Result<RegVarReport, YoungError> {
        if s_list.is_empty() || t_grid.is_empty() {
            return Err(invalid("regvar_exponent needs non-empty s_list and t_grid"));
        }
        if t_grid.iter().any(|&t| t <= 0.0) {
            return Err(invalid("t_grid must lie in (0, T]"));
        }
        let log_t: Vec<f64> = t_grid.iter().map(|t| t.ln()).collect();
        let mut slopes = Vec::with_capacity(s_list.len());
        let mut quotients = Vec::with_capacity(s_list.len());
        for &s in s_list {
            let gs = self.g(s);
            if !(gs > 0.0) {
                return Err(YoungError::Degenerate(s));
            }
            let q: Vec<f64> = t_grid.iter().map(|&t| self.g(s * t) / gs).collect();
            let log_q: Vec<f64> = q.iter().map(|v| v.ln()).collect();
            slopes.push(ls_slope(&log_t, &log_q));
            quotients.push(q);
        }
        let p_hat = 1.0 + *slopes.last().unwrap();
        let deviation_history: Vec<f64> = quotients
            .iter()
            .map(|q| {
                q.iter()
                    .zip(t_grid)
                    .map(|(v, t)| (v - t.powf(p_hat - 1.0)).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let monotone = deviation_history.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        Ok(RegVarReport {
            p_hat,
            s_list: s_list.to_vec(),
            slopes,
            deviation_history,
            warning: (!monotone).then(|| "not regularly varying: deviations are not monotone in s".to_string()),
        })
    }

    /// `max g(t) s / (G(t) + G(s))` over a 2D log grid on the evaluation domain.
    pub fn young_inequality_constant(&self) -> Result<f64, YoungError> {
        let grid = self.samples(200);
        let bigs: Vec<f64> = grid.iter().map(|&t| self.big_g(t)).collect();
        let gs: Vec<f64> = grid.iter().map(|&t| self.g(t)).collect();
        let mut c: f64 = 0.0;
        for (i, _) in grid.iter().enumerate() {
            for (j, &s) in grid.iter().enumerate() {
                let den = bigs[i] + bigs[j];
                if den > 0.0 {
                    c = c.max(gs[i] * s / den);
                }
            }
        }
        if !c.is_finite() {
            return Err(YoungError::Degenerate(grid[0]));
        }
        Ok(c)
    }

    /// All condition estimates on the default grids.
    pub fn exponent_report(&self) -> Result<ExponentReport, YoungError> {
        let bands = self.lieberman_exponents()?;
        let delta2 = self.delta2_constant()?;
        let regvar = self.regvar_exponent(&default_s_list(), &default_t_grid())?;
        Ok(ExponentReport {
            p_minus_hat: bands.p_minus_hat,
            p_plus_hat: bands.p_plus_hat,
            ratio2_min: bands.ratio2_min,
            ratio2_max: bands.ratio2_max,
            delta2_constant: delta2,
            regvar_p_hat: regvar.p_hat,
            young_constant: self.young_inequality_constant()?,
            sample_range: self.eval_domain,
            n_samples: DEFAULT_SAMPLES,
            warnings: regvar.warning.into_iter().collect(),
        })
    }
}

/// `s = 10, 10^2, ..., 10^6`.
pub fn default_s_list() -> Vec<f64> {
    (1..=6).map(|k| 10f64.powi(k)).collect()
}

/// 100 evenly spaced points on `[0.02, 2]`.
pub fn default_t_grid() -> Vec<f64> {
    linspace(0.02, 2.0, 100)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiebermanBands {
    pub p_minus_hat: f64,
    pub p_plus_hat: f64,
    pub ratio2_min: f64,
    pub ratio2_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegVarReport {
    pub p_hat: f64,
    pub s_list: Vec<f64>,
    /// Least-squares estimates of `p - 1`, one per `s`.
    pub slopes: Vec<f64>,
    pub deviation_history: Vec<f64>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub p_minus_hat: f64,
    pub p_plus_hat: f64,
    pub ratio2_min: f64,
    pub ratio2_max: f64,
    pub delta2_constant: f64,
    pub regvar_p_hat: f64,
    pub young_constant: f64,
    pub sample_range: [f64; 2],
    pub n_samples: usize,
    pub warnings: Vec<String>,
}

impl ExponentReport {
    /// Internal consistency of the estimates (the invariants a well-formed
    /// Young function must satisfy on the sample grid).
    pub fn violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.p_minus_hat > 1.0 && self.p_plus_hat.is_finite()) {
            out.push(format!(
                "Lieberman band [{}, {}] is not inside (1, inf)",
                self.p_minus_hat, self.p_plus_hat
            ));
        }
        if self.p_minus_hat > self.p_plus_hat {
            out.push("p_minus_hat exceeds p_plus_hat".into());
        }
        if self.delta2_constant < 1.0 {
            out.push("delta2 constant below 1".into());
        }
        if self.regvar_p_hat < self.p_minus_hat - tol || self.regvar_p_hat > self.p_plus_hat + tol {
            out.push(format!(
                "regular-variation exponent {} outside [{}, {}]",
                self.regvar_p_hat, self.p_minus_hat, self.p_plus_hat
            ));
        }
        out
    }
}

/// `phi(t)`: the `c > 0` with `c g(t c) = f(t)`.
pub fn phi_implicit(yf: &YoungFunction, f: impl Fn(f64) -> f64, t: f64) -> Result<f64, YoungError> {
    let ft = f(t);
    if !(t > 0.0) {
        return Err(YoungError::Domain(t));
    }
    if !(ft > 0.0) || !ft.is_finite() {
        return Err(YoungError::Domain(ft));
    }
    let d = |c: f64| yf.g(t * c) + c * t * yf.g_prime(t * c);
    Ok(solve_increasing(|c| c * yf.g(t * c), Some(&d), ft, 1.0, ROOT_REL_TOL)?)
}

/// `varphi(t) = G^{-1}(t f(t)) / t`.
pub fn varphi(yf: &YoungFunction, f: impl Fn(f64) -> f64, t: f64) -> Result<f64, YoungError> {
    if !(t > 0.0) {
        return Err(YoungError::Domain(t));
    }
    let y = t * f(t);
    if !(y > 0.0) {
        return Err(YoungError::Domain(y));
    }
    Ok(yf.inverse_g(y)? / t)
}

/// Empirical constants `(k_-, k_+)` bracketing `phi / varphi` on `grid`.
pub fn phi_ratio_band(yf: &YoungFunction, f: impl Fn(f64) -> f64, grid: &[f64]) -> Result<(f64, f64), YoungError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &t in grid {
        let r = phi_implicit(yf, &f, t)? / varphi(yf, &f, t)?;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

/// Monotone table of `(t, g(t))` samples: `g` is a monotone cubic (PCHIP)
/// interpolant, `G` its exact integral, with power-law extrapolation outside
/// the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableSpec", into = "TableSpec")]
pub struct Table {
    t: Vec<f64>,
    g: Vec<f64>,
    slopes: Vec<f64>,
    cumulative: Vec<f64>,
    low_exp: f64,
    high_exp: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TableSpec {
    t: Vec<f64>,
    g: Vec<f64>,
}

impl TryFrom<TableSpec> for Table {
    type Error = YoungError;
    fn try_from(s: TableSpec) -> Result<Self, YoungError> {
        Table::new(s.t, s.g)
    }
}

impl From<Table> for TableSpec {
    fn from(t: Table) -> Self {
        TableSpec { t: t.t, g: t.g }
    }
}

impl Table {
    pub fn new(t: Vec<f64>, g: Vec<f64>) -> Result<Self, YoungError> {
        if t.len() < 2 || t.len() != g.len() {
            return Err(invalid("table needs at least two (t, g) pairs of equal length"));
        }
        if !(t[0] > 0.0 && g[0] > 0.0) {
            return Err(invalid("table samples must be positive"));
        }
        for w in t.windows(2).zip(g.windows(2)) {
            if !(w.0[1] > w.0[0] && w.1[1] > w.1[0]) {
                return Err(invalid("table t and g must be strictly increasing"));
            }
        }
        if t.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(invalid("table contains non-finite values"));
        }
        let n = t.len();
        let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (g[i + 1] - g[i]) / h[i]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes = vec![delta[0]; 2];
        } else {
            for k in 1..n - 1 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                slopes[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
            slopes[0] = pchip_edge(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = pchip_edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        let low_exp = (g[1] / g[0]).ln() / (t[1] / t[0]).ln();
        let high_exp = (g[n - 1] / g[n - 2]).ln() / (t[n - 1] / t[n - 2]).ln();
        let mut cumulative = vec![g[0] * t[0] / (low_exp + 1.0); n];
        for i in 0..n - 1 {
            cumulative[i + 1] = cumulative[i] + hermite_integral(h[i], g[i], g[i + 1], slopes[i], slopes[i + 1], 1.0);
        }
        Ok(Table {
            t,
            g,
            slopes,
            cumulative,
            low_exp,
            high_exp,
        })
    }

    fn interval(&self, t: f64) -> usize {
        let k = self.t.partition_point(|&x| x <= t);
        k.clamp(1, self.t.len() - 1) - 1
    }

    fn g(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= 0.0 {
            0.0
        } else if t < self.t[0] {
            self.g[0] * (t / self.t[0]).powf(self.low_exp)
        } else if t > self.t[n - 1] {
            self.g[n - 1] * (t / self.t[n - 1]).powf(self.high_exp)
        } else {
            let i = self.interval(t);
            let h = self.t[i + 1] - self.t[i];
            let s = (t - self.t[i]) / h;
            let (s2, s3) = (s * s, s * s * s);
            (2.0 * s3 - 3.0 * s2 + 1.0) * self.g[i]
                + (s3 - 2.0 * s2 + s) * h * self.slopes[i]
                + (-2.0 * s3 + 3.0 * s2) * self.g[i + 1]
                + (s3 - s2) * h * self.slopes[i + 1]
        }
    }

    fn big_g(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= 0.0 {
            0.0
        } else if t < self.t[0] {
            self.g[0] * self.t[0] / (self.low_exp + 1.0) * (t / self.t[0]).powf(self.low_exp + 1.0)
        } else if t > self.t[n - 1] {
            let (tn, gn, e) = (self.t[n - 1], self.g[n - 1], self.high_exp);
            self.cumulative[n - 1] + gn * tn / (e + 1.0) * ((t / tn).powf(e + 1.0) - 1.0)
        } else {
            let i = self.interval(t);
            let h = self.t[i + 1] - self.t[i];
            let sigma = (t - self.t[i]) / h;
            self.cumulative[i]
                + hermite_integral(h, self.g[i], self.g[i + 1], self.slopes[i], self.slopes[i + 1], sigma)
        }
    }

    fn g_prime_at_zero(&self) -> f64 {
        scaled_pow(
            self.low_exp * self.g[0] / self.t[0].powf(self.low_exp),
            0.0,
            self.low_exp - 1.0,
        )
    }
}

fn pchip_edge(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Integral of the cubic Hermite interpolant over `[t_i, t_i + sigma h]`.
fn hermite_integral(h: f64, y0: f64, y1: f64, d0: f64, d1: f64, sigma: f64) -> f64 {
    let (s2, s3, s4) = (sigma * sigma, sigma.powi(3), sigma.powi(4));
    h * (y0 * (sigma - s3 + 0.5 * s4)
        + h * d0 * (0.5 * s2 - 2.0 * s3 / 3.0 + 0.25 * s4)
        + y1 * (s3 - 0.5 * s4)
        + h * d1 * (0.25 * s4 - s3 / 3.0))
}
