//! Small numerical helpers shared by the other modules: sample grids,
//! compensated summation and monotone root finding.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RootError {
    #[error("target {target} is not attained: bracket expansion overflowed")]
    Saturated { target: f64 },
    #[error("function returned a non-finite value at x = {at}")]
    NonFinite { at: f64 },
}

/// `n` logarithmically spaced points on `[a, b]`, endpoints included.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b >= a, "logspace needs 0 < a <= b");
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let (la, lb) = (a.ln(), b.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        a
                    } else if i == n - 1 {
                        b
                    } else {
                        (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// `n` evenly spaced points on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Neumaier-compensated sum; the result does not depend on thread scheduling
/// because callers always feed terms in a fixed order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Worker count: `GLAP_THREADS` when set to a positive integer, otherwise
/// the available parallelism.
pub fn thread_budget() -> usize {
    std::env::var("GLAP_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Maps `f` over `items` on up to [`thread_budget`] scoped threads. Output
/// order matches input order, so results do not depend on scheduling.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = thread_budget().min(items.len()).max(1);
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                s.spawn(move || c.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Scientific notation with 17 significant digits, enough to round-trip any
/// `f64`.
pub fn sci17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Solves `f(x) = target` for `x > 0` where `f` is nondecreasing.
///
/// Brackets by doubling/halving from `x0`, bisects (geometrically while the
/// bracket spans orders of magnitude) until the bracket is `rel_tol` tight,
/// then applies one Newton polish when a derivative is supplied. The polish
/// is only kept if it stays inside the bracket and reduces the misfit.
pub fn solve_increasing(
    f: impl Fn(f64) -> f64,
    df: Option<&dyn Fn(f64) -> f64>,
    target: f64,
    x0: f64,
    rel_tol: f64,
) -> Result<f64, RootError> {
    let eval = |x: f64| -> Result<f64, RootError> {
        let v = f(x);
        if v.is_nan() {
            Err(RootError::NonFinite { at: x })
        } else {
            Ok(v)
        }
    };
    let mut lo;
    let mut hi;
    let start = if x0 > 0.0 && x0.is_finite() { x0 } else { 1.0 };
    if eval(start)? < target {
        lo = start;
        hi = start * 2.0;
        while eval(hi)? < target {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(RootError::Saturated { target });
            }
        }
    } else {
        hi = start;
        lo = start * 0.5;
        while eval(lo)? >= target {
            hi = lo;
            lo *= 0.5;
            if lo < f64::MIN_POSITIVE {
                return Ok(0.0);
            }
        }
    }
    // Invariant: f(lo) < target <= f(hi).
    for _ in 0..4000 {
        if hi - lo <= rel_tol * hi {
            break;
        }
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut best = if (eval(lo)? - target).abs() < (eval(hi)? - target).abs() {
        lo
    } else {
        hi
    };
    if let Some(df) = df {
        let fb = eval(best)? - target;
        let d = df(best);
        if d > 0.0 && d.is_finite() {
            let cand = best - fb / d;
            if cand >= lo && cand <= hi && (eval(cand)? - target).abs() < fb.abs() {
                best = cand;
            }
        }
    }
    Ok(best)
}
