//! The nonlinear source `B(x, t, p)` and report-only validators for the
//! structural conditions imposed on it: growth, `t f(t) >> G(t)`, the
//! gradient compatibility of `h`, the limit profile `b(x) t^(q-1)`,
//! positivity/superlinearity near zero and subcriticality `q in (p, p*)`.
//!
//! None of the checks fail hard; each returns a [`ConditionReport`] so that
//! solvers can still be run on non-conforming sources.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{linspace, logspace, ls_slope, solve_increasing};
use crate::young::YoungFunction;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SourceError {
    #[error("invalid source parameter: {0}")]
    InvalidParameter(String),
    #[error("custom source `{0}` cannot be serialized")]
    NotSerializable(String),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("value {0} is outside the range of f")]
    NotInvertible(f64),
}

/// A scalar growth law used for `f`, `f0` and `h`.
///
/// Powers are extended oddly to negative arguments, `sgn(t) |t|^e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawSpec", into = "LawSpec")]
pub enum ScalarLaw {
    Zero,
    Power { exponent: f64 },
    Exp { rate: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LawSpec {
    kind: String,
    /// Power law `t^(q-1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    /// Power law `t^r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
}

impl TryFrom<LawSpec> for ScalarLaw {
    type Error = SourceError;
    fn try_from(s: LawSpec) -> Result<Self, SourceError> {
        match s.kind.as_str() {
            "zero" => Ok(ScalarLaw::Zero),
            "power" => {
                let exponent = match (s.q, s.r) {
                    (Some(q), None) => q - 1.0,
                    (None, Some(r)) => r,
                    _ => {
                        return Err(SourceError::InvalidParameter(
                            "power law needs exactly one of `q` (t^(q-1)) or `r` (t^r)".into(),
                        ))
                    }
                };
                if !(exponent > 0.0 && exponent.is_finite()) {
                    return Err(SourceError::InvalidParameter(format!(
                        "power exponent {exponent} must be positive"
                    )));
                }
                Ok(ScalarLaw::Power { exponent })
            }
            "exp" => Ok(ScalarLaw::Exp {
                rate: s.rate.unwrap_or(1.0),
            }),
            other => Err(SourceError::InvalidParameter(format!("unknown law kind `{other}`"))),
        }
    }
}

impl From<ScalarLaw> for LawSpec {
    fn from(l: ScalarLaw) -> Self {
        let blank = |kind: &str| LawSpec {
            kind: kind.into(),
            q: None,
            r: None,
            rate: None,
        };
        match l {
            ScalarLaw::Zero => blank("zero"),
            ScalarLaw::Power { exponent } => LawSpec {
                r: Some(exponent),
                ..blank("power")
            },
            ScalarLaw::Exp { rate } => LawSpec {
                rate: Some(rate),
                ..blank("exp")
            },
        }
    }
}

impl ScalarLaw {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            ScalarLaw::Zero => 0.0,
            ScalarLaw::Power { exponent } => {
                if t == 0.0 {
                    0.0
                } else {
                    t.signum() * t.abs().powf(exponent)
                }
            }
            ScalarLaw::Exp { rate } => (rate * t).exp(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            ScalarLaw::Zero => 0.0,
            ScalarLaw::Power { exponent } => {
                if t == 0.0 {
                    if exponent == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    exponent * t.abs().powf(exponent - 1.0)
                }
            }
            ScalarLaw::Exp { rate } => rate * (rate * t).exp(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarLaw::Zero)
    }
}

/// Spatial coefficient `b(x)`: `c0 + c1 * x1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Profile {
    pub c0: f64,
    pub c1: f64,
}

impl Profile {
    pub const ONE: Profile = Profile { c0: 1.0, c1: 0.0 };
    pub const ONE_PLUS_X1: Profile = Profile { c0: 1.0, c1: 1.0 };

    pub fn eval(&self, x: Point) -> f64 {
        self.c0 + self.c1 * x[0]
    }
}

impl TryFrom<String> for Profile {
    type Error = SourceError;
    fn try_from(s: String) -> Result<Self, SourceError> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        match compact.as_str() {
            "1" => Ok(Profile::ONE),
            "1+x1" => Ok(Profile::ONE_PLUS_X1),
            other => other
                .parse::<f64>()
                .map(|c0| Profile { c0, c1: 0.0 })
                .map_err(|_| SourceError::InvalidParameter(format!("unsupported profile `{other}`"))),
        }
    }
}

impl From<Profile> for String {
    fn from(p: Profile) -> String {
        if p == Profile::ONE {
            "1".into()
        } else if p == Profile::ONE_PLUS_X1 {
            "1+x1".into()
        } else if p.c1 == 0.0 {
            format!("{}", p.c0)
        } else {
            format!("{}+{}*x1", p.c0, p.c1)
        }
    }
}

type SourceFn = dyn Fn(Point, f64, Point) -> f64 + Send + Sync;

/// How `B` is evaluated.
#[derive(Clone)]
pub enum SourceLaw {
    /// `B = A b(x) f(t) + B0 f0(t) + C h(|p|)`
    Composite,
    /// Named closed-form fixture or user closure.
    Custom {
        name: String,
        eval: Arc<SourceFn>,
        gradient_free: bool,
    },
}

impl fmt::Debug for SourceLaw {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceLaw::Composite => write!(fmt, "Composite"),
            SourceLaw::Custom { name, .. } => write!(fmt, "Custom({name})"),
        }
    }
}

/// The source `B(x, t, p)` together with the auxiliary data the structural
/// conditions refer to.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SourceSpec", into = "SourceSpec")]
pub struct SourceTerm {
    pub law: SourceLaw,
    /// Principal growth in `t`.
    pub f: ScalarLaw,
    pub f0: ScalarLaw,
    /// Gradient growth.
    pub h: ScalarLaw,
    pub a: f64,
    pub f0_coef: f64,
    pub c: f64,
    pub b: Profile,
    /// Limit-profile exponent.
    pub q: f64,
    /// Growth constant.
    pub k: f64,
    /// Positivity shift.
    pub l: f64,
    /// Amplitude window for the growth checks.
    pub m0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SourceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fixture: Option<String>,
    #[serde(rename = "A", default = "one")]
    a: f64,
    #[serde(default = "zero_law")]
    f: ScalarLaw,
    #[serde(rename = "B", default)]
    b0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f0: Option<ScalarLaw>,
    #[serde(rename = "C", default)]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<ScalarLaw>,
    #[serde(default = "one_profile")]
    b: Profile,
    #[serde(rename = "L", default)]
    l: f64,
    #[serde(rename = "K", default = "one")]
    k: f64,
    #[serde(rename = "M0", default = "ten")]
    m0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
}

fn one() -> f64 {
    1.0
}
fn ten() -> f64 {
    10.0
}
fn zero_law() -> ScalarLaw {
    ScalarLaw::Zero
}
fn one_profile() -> Profile {
    Profile::ONE
}

impl TryFrom<SourceSpec> for SourceTerm {
    type Error = SourceError;
    fn try_from(s: SourceSpec) -> Result<Self, SourceError> {
        let mut st = match s.fixture.as_deref() {
            None => SourceTerm::composite(s.a, s.f),
            Some("exp") => SourceTerm::exponential(),
            Some(other) => return Err(SourceError::UnknownFixture(other.into())),
        };
        if s.fixture.is_none() {
            if let Some(f0) = s.f0 {
                st = st.with_f0(s.b0.unwrap_or(1.0), f0);
            }
            if let Some(h) = s.h {
                st = st.with_h(s.c.unwrap_or(1.0), h);
            }
            st.b = s.b;
        }
        st.l = s.l;
        st.k = s.k;
        st.m0 = s.m0;
        if let Some(q) = s.q {
            st.q = q;
        }
        st.validate()?;
        Ok(st)
    }
}

impl From<SourceTerm> for SourceSpec {
    fn from(st: SourceTerm) -> Self {
        let fixture = match &st.law {
            SourceLaw::Composite => None,
            SourceLaw::Custom { name, .. } => Some(name.clone()),
        };
        SourceSpec {
            fixture,
            a: st.a,
            f: st.f,
            b0: (!st.f0.is_zero()).then_some(st.f0_coef),
            f0: (!st.f0.is_zero()).then_some(st.f0),
            c: (!st.h.is_zero()).then_some(st.c),
            h: (!st.h.is_zero()).then_some(st.h),
            b: st.b,
            l: st.l,
            k: st.k,
            m0: st.m0,
            q: Some(st.q),
        }
    }
}

impl SourceTerm {
    /// `B = a f(t)` with the limit exponent read off a power law `f`.
    pub fn composite(a: f64, f: ScalarLaw) -> Self {
        let q = match f {
            ScalarLaw::Power { exponent } => exponent + 1.0,
            _ => 2.0,
        };
        SourceTerm {
            law: SourceLaw::Composite,
            f,
            f0: ScalarLaw::Zero,
            h: ScalarLaw::Zero,
            a,
            f0_coef: 0.0,
            c: 0.0,
            b: Profile::ONE,
            q,
            k: 1.0,
            l: 0.0,
            m0: 10.0,
        }
    }

    /// `B = t^(q-1)`.
    pub fn lane_emden(q: f64) -> Self {
        Self::composite(1.0, ScalarLaw::Power { exponent: q - 1.0 })
    }

    /// `B = 0`.
    pub fn zero() -> Self {
        let mut st = Self::composite(0.0, ScalarLaw::Zero);
        st.q = 2.0;
        st
    }

    /// `B = e^t` with `f = t^3`: a source violating the growth condition.
    pub fn exponential() -> Self {
        let mut st = Self::custom("exp", true, |_, t, _| t.exp());
        st.f = ScalarLaw::Power { exponent: 3.0 };
        st.q = 4.0;
        st.m0 = 50.0;
        st
    }

    /// User-supplied `B`. `gradient_free` declares that `B` ignores `p`.
    pub fn custom(
        name: impl Into<String>,
        gradient_free: bool,
        eval: impl Fn(Point, f64, Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let mut st = Self::composite(1.0, ScalarLaw::Zero);
        st.law = SourceLaw::Custom {
            name: name.into(),
            eval: Arc::new(eval),
            gradient_free,
        };
        st
    }

    pub fn with_f0(mut self, coef: f64, f0: ScalarLaw) -> Self {
        self.f0_coef = coef;
        self.f0 = f0;
        self
    }

    pub fn with_h(mut self, coef: f64, h: ScalarLaw) -> Self {
        self.c = coef;
        self.h = h;
        self
    }

    pub fn with_profile(mut self, b: Profile) -> Self {
        self.b = b;
        self
    }

    pub fn with_l(mut self, l: f64) -> Self {
        self.l = l;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn with_m0(mut self, m0: f64) -> Self {
        self.m0 = m0;
        self
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        if !(self.q > 1.0) {
            return Err(SourceError::InvalidParameter(format!("q = {} must exceed 1", self.q)));
        }
        if !(self.k > 0.0) {
            return Err(SourceError::InvalidParameter(format!(
                "K = {} must be positive",
                self.k
            )));
        }
        if !(self.l >= 0.0) || !(self.m0 > 0.0) {
            return Err(SourceError::InvalidParameter("need L >= 0 and M0 > 0".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        match &self.law {
            SourceLaw::Composite => "composite",
            SourceLaw::Custom { name, .. } => name,
        }
    }

    /// `B(x, t, p)`.
    pub fn eval(&self, x: Point, t: f64, p: Point) -> f64 {
        match &self.law {
            SourceLaw::Composite => {
                let pn = (p[0] * p[0] + p[1] * p[1]).sqrt();
                self.a * self.b.eval(x) * self.f.eval(t) + self.f0_coef * self.f0.eval(t) + self.c * self.h.eval(pn)
            }
            SourceLaw::Custom { eval, .. } => eval(x, t, p),
        }
    }

    pub fn depends_on_gradient(&self) -> bool {
        match &self.law {
            SourceLaw::Composite => self.c != 0.0 && !self.h.is_zero(),
            SourceLaw::Custom { gradient_free, .. } => !gradient_free,
        }
    }

    /// `dB/dt`.
    pub fn d_dt(&self, x: Point, t: f64, p: Point) -> f64 {
        match &self.law {
            SourceLaw::Composite => {
                self.a * self.b.eval(x) * self.f.derivative(t) + self.f0_coef * self.f0.derivative(t)
            }
            SourceLaw::Custom { eval, .. } => {
                let d = 1e-7 * t.abs().max(1.0);
                (eval(x, t + d, p) - eval(x, t - d, p)) / (2.0 * d)
            }
        }
    }

    /// `dB/dp`.
    pub fn d_dp(&self, x: Point, t: f64, p: Point) -> Point {
        match &self.law {
            SourceLaw::Composite => {
                let pn = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if pn == 0.0 || self.c == 0.0 {
                    return [0.0, 0.0];
                }
                let s = self.c * self.h.derivative(pn) / pn;
                [s * p[0], s * p[1]]
            }
            SourceLaw::Custom {
                eval, gradient_free, ..
            } => {
                if *gradient_free {
                    return [0.0, 0.0];
                }
                let mut out = [0.0; 2];
                for (k, o) in out.iter_mut().enumerate() {
                    let d = 1e-7 * p[k].abs().max(1.0);
                    let (mut lo, mut hi) = (p, p);
                    lo[k] -= d;
                    hi[k] += d;
                    *o = (eval(x, t, hi) - eval(x, t, lo)) / (2.0 * d);
                }
                out
            }
        }
    }

    /// Limit coefficient in `B(x, M t, a p) / f(M) -> b(x) t^(q-1)`.
    pub fn limit_coefficient(&self, x: Point) -> f64 {
        self.a * self.b.eval(x)
    }

    /// `f^{-1}(y)` for `y > 0` by monotone root finding.
    pub fn f_inverse(&self, y: f64) -> Result<f64, SourceError> {
        if !(y > 0.0) {
            return Err(SourceError::NotInvertible(y));
        }
        let f = self.f;
        let d = move |t: f64| f.derivative(t);
        solve_increasing(|t| f.eval(t), Some(&d), y, 1.0, 1e-16).map_err(|_| SourceError::NotInvertible(y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionId {
    Growth,
    #[serde(rename = "fG")]
    FG,
    Eti1,
    LimitB,
    Positivity,
    Superlinearity,
    Subcritical,
    #[serde(rename = "lieberman_B")]
    LiebermanB,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    Sample { x: Point, t: f64, p: f64, value: f64 },
    Scalar { at: f64, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition_id: ConditionId,
    pub passed: bool,
    pub witness: Option<Witness>,
    pub estimate: Option<f64>,
    pub details: String,
    pub warnings: Vec<String>,
}

impl ConditionReport {
    fn new(id: ConditionId, passed: bool, estimate: Option<f64>, witness: Option<Witness>, details: String) -> Self {
        ConditionReport {
            condition_id: id,
            passed,
            witness: if passed { None } else { witness },
            estimate,
            details,
            warnings: Vec::new(),
        }
    }
}

/// Sample grid for the `(x, t, p)` sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub x_samples: Vec<Point>,
    pub n_t: usize,
    pub n_p: usize,
    pub p_max: f64,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid {
            x_samples: vec![[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]],
            n_t: 201,
            n_p: 61,
            p_max: 1e3,
        }
    }
}

impl SampleGrid {
    fn p_norms(&self) -> Vec<f64> {
        let mut v = vec![0.0];
        v.extend(logspace(1e-3, self.p_max, self.n_p));
        v
    }
}

const DIRECTIONS: [Point; 2] = [
    [1.0, 0.0],
    [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
];

struct Sweep {
    max: f64,
    witness: Option<Witness>,
}

fn sweep(grid: &SampleGrid, m0: f64, mut ratio: impl FnMut(Point, f64, f64, Point) -> f64) -> Sweep {
    let ts = linspace(-m0, m0, grid.n_t);
    let ps = grid.p_norms();
    let mut best = Sweep {
        max: 0.0,
        witness: None,
    };
    for &x in &grid.x_samples {
        for &t in &ts {
            for &pn in &ps {
                for dir in DIRECTIONS {
                    let p = [pn * dir[0], pn * dir[1]];
                    let r = ratio(x, t, pn, p);
                    if r.is_nan() || r > best.max || (!r.is_finite() && best.max.is_finite()) {
                        best.max = if r.is_nan() { f64::INFINITY } else { r };
                        best.witness = Some(Witness::Sample { x, t, p: pn, value: r });
                    }
                }
            }
        }
    }
    best
}

/// Growth bound `|B| <= K (1 + f(t) + h(|p|))` on `|t| <= M0`; also reports
/// the regularity bound constant `max |B| / (1 + g(|p|)|p|)`.
pub fn check_growth(st: &SourceTerm, yf: &YoungFunction, grid: &SampleGrid) -> ConditionReport {
    let k1 = sweep(grid, st.m0, |x, t, pn, p| {
        st.eval(x, t, p).abs() / (1.0 + st.f.eval(t).abs() + st.h.eval(pn).abs())
    });
    let k2 = sweep(grid, st.m0, |x, t, pn, p| {
        st.eval(x, t, p).abs() / (1.0 + yf.g(pn) * pn)
    });
    let passed = k1.max.is_finite() && k2.max.is_finite() && k1.max <= st.k;
    let mut r = ConditionReport::new(
        ConditionId::Growth,
        passed,
        Some(k1.max),
        k1.witness,
        format!("K_hat = {:e}, K_hat_2 = {:e}, declared K = {}", k1.max, k2.max, st.k),
    );
    if !k2.max.is_finite() {
        r.warnings.push("regularity bound constant is not finite".into());
    }
    r
}

/// `|B| <= K (1 + g(|p|)|p|)` for `|t| <= M0`.
pub fn check_lieberman_bound(st: &SourceTerm, yf: &YoungFunction, grid: &SampleGrid) -> ConditionReport {
    let k2 = sweep(grid, st.m0, |x, t, pn, p| {
        st.eval(x, t, p).abs() / (1.0 + yf.g(pn) * pn)
    });
    ConditionReport::new(
        ConditionId::LiebermanB,
        k2.max.is_finite() && k2.max <= st.k,
        Some(k2.max),
        k2.witness,
        format!("K_hat_2 = {:e} on |t| <= {}", k2.max, st.m0),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub c: f64,
    /// Smallest sampled `t0` beyond which `t f(t) >= G(C t)`; `None` if the
    /// inequality still fails at the top of the grid.
    pub t0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgReport {
    pub report: ConditionReport,
    pub thresholds: Vec<Threshold>,
}

/// Default `t` grid for [`check_fg`].
pub fn default_fg_grid() -> Vec<f64> {
    logspace(1e-3, 1e6, 400)
}

/// `t f(t) >= G(C t)` eventually, for every `C` in `c_list`.
pub fn check_fg(st: &SourceTerm, yf: &YoungFunction, c_list: &[f64]) -> FgReport {
    check_fg_on(st, yf, c_list, &default_fg_grid())
}

pub fn check_fg_on(st: &SourceTerm, yf: &YoungFunction, c_list: &[f64], grid: &[f64]) -> FgReport {
    let mut thresholds = Vec::with_capacity(c_list.len());
    let mut witness = None;
    for &c in c_list {
        let holds: Vec<bool> = grid.iter().map(|&t| t * st.f.eval(t) >= yf.big_g(c * t)).collect();
        let t0 = match holds.iter().rposition(|h| !h) {
            None => Some(grid[0]),
            Some(i) if i + 1 < grid.len() => Some(grid[i + 1]),
            Some(_) => None,
        };
        if t0.is_none() && witness.is_none() {
            let t = *grid.last().unwrap();
            witness = Some(Witness::Scalar {
                at: c,
                value: t * st.f.eval(t) - yf.big_g(c * t),
            });
        }
        thresholds.push(Threshold { c, t0 });
    }
    let passed = thresholds.iter().all(|t| t.t0.is_some());
    let details = thresholds
        .iter()
        .map(|t| match t.t0 {
            Some(t0) => format!("C = {}: t0 = {:e}", t.c, t0),
            None => format!("C = {}: fails at top of grid", t.c),
        })
        .collect::<Vec<_>>()
        .join("; ");
    FgReport {
        report: ConditionReport::new(ConditionId::FG, passed, None, witness, details),
        thresholds,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eti1Grid {
    pub s_max: f64,
    pub n_s: usize,
    pub t_max: f64,
    pub n_t: usize,
}

impl Default for Eti1Grid {
    fn default() -> Self {
        Eti1Grid {
            s_max: 1e6,
            n_s: 40,
            t_max: 1e2,
            n_t: 401,
        }
    }
}

/// `h(G^{-1}(s f(s)) t) / f(s) <= C (1 + G(t))` for `s > s0`.
///
/// Passes when the per-`s` constant is finite and non-increasing over the
/// last quarter of the `s` grid.
pub fn check_eti1(st: &SourceTerm, yf: &YoungFunction, s0: f64, grid: &Eti1Grid) -> ConditionReport {
    let ss = logspace(s0, grid.s_max.max(s0 * 10.0), grid.n_s);
    let ts = linspace(0.0, grid.t_max, grid.n_t);
    let mut per_s = Vec::with_capacity(ss.len());
    for &s in &ss {
        let fs = st.f.eval(s);
        let scale = match yf.inverse_g(s * fs) {
            Ok(v) if fs > 0.0 && v.is_finite() => v,
            _ => {
                return ConditionReport::new(
                    ConditionId::Eti1,
                    false,
                    None,
                    Some(Witness::Scalar {
                        at: s,
                        value: f64::INFINITY,
                    }),
                    format!("saturation: G^-1(s f(s)) not representable at s = {s:e}"),
                );
            }
        };
        let c = ts
            .iter()
            .map(|&t| st.h.eval(scale * t).abs() / (fs * (1.0 + yf.big_g(t))))
            .fold(0.0, f64::max);
        per_s.push(c);
    }
    let c_hat = per_s.iter().cloned().fold(0.0, f64::max);
    let tail = &per_s[per_s.len() - (per_s.len() / 4).max(2)..];
    let stable = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-300);
    let passed = c_hat.is_finite() && stable;
    let last = *per_s.last().unwrap();
    ConditionReport::new(
        ConditionId::Eti1,
        passed,
        Some(c_hat),
        Some(Witness::Scalar {
            at: *ss.last().unwrap(),
            value: last,
        }),
        format!(
            "C_hat = {c_hat:e}; tail {} in s",
            if stable { "non-increasing" } else { "growing" }
        ),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitGrid {
    pub m_list: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub x_samples: Vec<Point>,
    /// Prefactor on the gradient scale `a_k = c G^{-1}(M f(M))`.
    pub prefactor: f64,
}

impl Default for LimitGrid {
    fn default() -> Self {
        LimitGrid {
            m_list: (1..=5).map(|k| 10f64.powi(k)).collect(),
            t_grid: linspace(0.05, 2.0, 40),
            p_grid: linspace(0.0, 2.0, 21),
            x_samples: vec![[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]],
            prefactor: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub report: ConditionReport,
    pub q_hat: f64,
    pub b_hat: Vec<f64>,
    pub m_list: Vec<f64>,
    pub deviations: Vec<f64>,
    /// `f0(M) / f(M)` along `m_list`.
    pub f0_ratios: Vec<f64>,
}

/// Rescaled quotient `B(x, M t, a p) / f(M)` against `b(x) t^(q-1)`.
pub fn check_limit_profile(st: &SourceTerm, yf: &YoungFunction, grid: &LimitGrid) -> LimitReport {
    let quotient = |m: f64, x: Point, t: f64, p: f64| -> f64 {
        let fm = st.f.eval(m);
        let a = grid.prefactor * yf.inverse_g(m * fm).unwrap_or(f64::INFINITY);
        st.eval(x, m * t, [a * p, 0.0]) / fm
    };
    let m_top = *grid.m_list.last().unwrap();
    let x0 = grid.x_samples[0];
    let (lx, ly): (Vec<f64>, Vec<f64>) = grid
        .t_grid
        .iter()
        .filter_map(|&t| {
            let v = quotient(m_top, x0, t, 0.0);
            (t > 0.0 && v > 0.0 && v.is_finite()).then(|| (t.ln(), v.ln()))
        })
        .unzip();
    let q_hat = if lx.len() >= 2 {
        1.0 + ls_slope(&lx, &ly)
    } else {
        f64::NAN
    };
    let b_hat: Vec<f64> = grid.x_samples.iter().map(|&x| quotient(m_top, x, 1.0, 0.0)).collect();

    let mut deviations = Vec::with_capacity(grid.m_list.len());
    let mut witness = None;
    let mut limit_scale: f64 = 0.0;
    for &m in &grid.m_list {
        let mut dev: f64 = 0.0;
        for &x in &grid.x_samples {
            let bx = st.limit_coefficient(x);
            for &t in &grid.t_grid {
                let target = bx * t.abs().powf(q_hat - 1.0);
                limit_scale = limit_scale.max(target.abs());
                for &p in &grid.p_grid {
                    let v = quotient(m, x, t, p);
                    let d = (v - target).abs();
                    if !d.is_finite() {
                        witness.get_or_insert(Witness::Sample { x, t, p, value: v });
                        dev = f64::INFINITY;
                    } else {
                        dev = dev.max(d);
                    }
                }
            }
        }
        deviations.push(dev);
    }
    let f0_ratios: Vec<f64> = grid
        .m_list
        .iter()
        .map(|&m| st.f0_coef * st.f0.eval(m) / st.f.eval(m))
        .collect();

    let first = deviations[0];
    let last = *deviations.last().unwrap();
    let converged = last <= 1e-10 * (1.0 + limit_scale);
    let monotone = deviations.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
    let shrinking = monotone && last <= 0.5 * first;
    let finite = deviations.iter().all(|d| d.is_finite()) && q_hat.is_finite();
    let passed = finite && (converged || shrinking);
    let mut report = ConditionReport::new(
        ConditionId::LimitB,
        passed,
        Some(last),
        witness.or(Some(Witness::Scalar { at: m_top, value: last })),
        format!("q_hat = {q_hat}, deviation {first:e} -> {last:e}"),
    );
    if finite && !passed {
        report
            .warnings
            .push("deviations stall: a term of the source is critical under the rescaling".into());
    }
    if (q_hat - st.q).abs() > 1e-2 {
        report
            .warnings
            .push(format!("fitted q_hat = {q_hat} differs from declared q = {}", st.q));
    }
    if !st.f0.is_zero() && f0_ratios.windows(2).any(|w| w[1].abs() > w[0].abs()) {
        report.warnings.push("f0/f does not decrease along M".into());
    }
    LimitReport {
        report,
        q_hat,
        b_hat,
        m_list: grid.m_list.clone(),
        deviations,
        f0_ratios,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsReport {
    pub positivity: ConditionReport,
    pub superlinearity: ConditionReport,
    /// Smallest shift making the positivity check pass on the grid.
    pub l_hat: f64,
    /// Smallness ratio at scale `2^-k`, `k = 0..=k_max`.
    pub ratios: Vec<f64>,
}

/// Positivity `B + L g(t) >= 0` and superlinearity
/// `B + L g(t) = o(g(t) + g(|p|))` on dyadic scales `2^-k`, `k <= k_max`.
pub fn check_ps(st: &SourceTerm, yf: &YoungFunction, x_samples: &[Point], k_max: u32, threshold: f64) -> PsReport {
    let scales: Vec<f64> = (0..=k_max).map(|k| 0.5f64.powi(k as i32)).collect();
    let mut values = vec![0.0];
    values.extend(&scales);

    let mut l_hat: f64 = 0.0;
    let mut worst = (0.0, None);
    let mut impossible = None;
    for &x in x_samples {
        for &t in &values {
            for &pn in &values {
                let p = [pn, 0.0];
                let b = st.eval(x, t, p);
                let shifted = b + st.l * yf.g(t);
                if shifted < worst.0 {
                    worst = (
                        shifted,
                        Some(Witness::Sample {
                            x,
                            t,
                            p: pn,
                            value: shifted,
                        }),
                    );
                }
                if t > 0.0 {
                    l_hat = l_hat.max(-b / yf.g(t));
                } else if b < -1e-12 {
                    impossible.get_or_insert(Witness::Sample { x, t, p: pn, value: b });
                }
            }
        }
    }
    if impossible.is_some() {
        l_hat = f64::INFINITY;
    }
    let pos_ok = worst.0 >= -1e-12;
    let positivity = ConditionReport::new(
        ConditionId::Positivity,
        pos_ok,
        Some(l_hat),
        worst.1.or(impossible),
        format!("min B + L g = {:e} with L = {}; L_hat = {:e}", worst.0, st.l, l_hat),
    );

    let mut ratios = Vec::with_capacity(scales.len());
    let mut last_witness = None;
    for &s in &scales {
        let mut rho: f64 = 0.0;
        for &x in x_samples {
            for (t, pn) in [(s, 0.0), (s, s), (0.0, s)] {
                let v = st.eval(x, t, [pn, 0.0]) + st.l * yf.g(t);
                let r = v.abs() / (yf.g(t) + yf.g(pn));
                if r >= rho {
                    rho = r;
                    last_witness = Some(Witness::Sample { x, t, p: pn, value: r });
                }
            }
        }
        ratios.push(rho);
    }
    let final_ratio = *ratios.last().unwrap();
    let sup_ok = final_ratio < threshold;
    let superlinearity = ConditionReport::new(
        ConditionId::Superlinearity,
        sup_ok,
        Some(final_ratio),
        last_witness,
        format!("ratio at scale 2^-{k_max} = {final_ratio:e} (threshold {threshold:e})"),
    );
    PsReport {
        positivity,
        superlinearity,
        l_hat,
        ratios,
    }
}

/// `p < q < p*` with `p* = n p / (n - p)` (infinite when `p >= n`).
///
/// For the pure power `B = t^(q-1)` the Liouville differential condition
/// `r B >= t B'` holds with the minimal `r = q - 1`, and `r < p* - 1` is the
/// same inequality as `q < p*`.
pub fn check_subcritical(q: f64, p: f64, n: u32) -> ConditionReport {
    let nf = n as f64;
    let p_star = if p < nf { nf * p / (nf - p) } else { f64::INFINITY };
    let passed = p < q && q < p_star;
    let mut r = ConditionReport::new(
        ConditionId::Subcritical,
        passed,
        Some(p_star),
        Some(Witness::Scalar { at: q, value: p_star }),
        format!("p = {p}, q = {q}, n = {n}, p* = {p_star}"),
    );
    if p >= nf {
        r.warnings
            .push("p >= n: the Liouville theorem assumes p < n, p* taken as infinity".into());
    }
    r
}
