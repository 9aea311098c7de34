//! Globally adaptive composite Simpson quadrature.
//!
//! The interval is cut at caller-supplied breakpoints (kinks of tabulated
//! integrands), each piece gets a Simpson pair with a Richardson error
//! estimate, and the piece with the largest estimate is bisected until the
//! summed estimate drops below the tolerance. Working globally rather than
//! with per-level tolerance halving lets jump discontinuities converge.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Absolute tolerance used for interim payoff integrals.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Evaluation budget (2^16 nodes).
pub const DEFAULT_MAX_EVALS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub tol: f64,
    pub max_evals: usize,
    /// Each breakpoint interval starts as this many equal segments.
    pub min_segments: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            tol: DEFAULT_TOL,
            max_evals: DEFAULT_MAX_EVALS,
            min_segments: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    fl: f64,
    fr: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn simpson(h: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

struct Evaluator<F> {
    f: F,
    evaluations: usize,
}

impl<F: Fn(f64) -> f64> Evaluator<F> {
    fn eval(&mut self, x: f64) -> f64 {
        self.evaluations += 1;
        (self.f)(x)
    }

    fn segment(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> Segment {
        let m = 0.5 * (a + b);
        let fl = self.eval(0.5 * (a + m));
        let fr = self.eval(0.5 * (m + b));
        let whole = simpson(b - a, fa, fm, fb);
        let halves = simpson(m - a, fa, fl, fm) + simpson(b - m, fm, fr, fb);
        let diff = halves - whole;
        Segment {
            a,
            b,
            fa,
            fm,
            fb,
            fl,
            fr,
            value: halves + diff / 15.0,
            // The unscaled difference; the /15 Richardson factor is too
            // optimistic next to kinks and jumps.
            error: diff.abs(),
        }
    }
}

impl Quadrature {
    pub fn with_tol(tol: f64) -> Self {
        Quadrature {
            tol,
            ..Quadrature::default()
        }
    }

    /// Integrates `f` over `[a, b]`. Breakpoints outside `(a, b)` are ignored.
    pub fn integrate<F>(&self, f: F, a: f64, b: f64, breakpoints: &[f64]) -> Result<Estimate>
    where
        F: Fn(f64) -> f64,
    {
        if a == b {
            return Ok(Estimate {
                value: 0.0,
                error: 0.0,
                evaluations: 0,
            });
        }
        if a > b {
            let e = self.integrate(f, b, a, breakpoints)?;
            return Ok(Estimate {
                value: -e.value,
                ..e
            });
        }

        let mut cuts = Vec::with_capacity(breakpoints.len() + 2);
        cuts.push(a);
        let mut inner: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&x| x > a && x < b)
            .collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        cuts.extend(inner);
        cuts.push(b);

        let mut ev = Evaluator { f, evaluations: 0 };
        let mut heap = BinaryHeap::new();
        let mut settled: Vec<Segment> = Vec::new();
        let pieces = self.min_segments.max(1);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let step = (hi - lo) / pieces as f64;
            let mut left = lo;
            let mut f_left = ev.eval(left);
            for k in 1..=pieces {
                let right = if k == pieces { hi } else { lo + step * k as f64 };
                let f_right = ev.eval(right);
                let f_mid = ev.eval(0.5 * (left + right));
                heap.push(ev.segment(left, right, f_left, f_mid, f_right));
                left = right;
                f_left = f_right;
            }
        }

        let scale = (b - a).abs().max(a.abs()).max(b.abs());
        let mut total_error: f64 = heap.iter().map(|s| s.error).sum();
        while total_error > self.tol {
            let Some(worst) = heap.pop() else { break };
            if !worst.error.is_finite() {
                return Err(Error::Quadrature {
                    evaluations: ev.evaluations,
                    estimate: worst.error,
                    tol: self.tol,
                });
            }
            let m = 0.5 * (worst.a + worst.b);
            if (worst.b - worst.a) <= 64.0 * f64::EPSILON * scale {
                // Cannot bisect further; accept what we have.
                total_error -= worst.error;
                settled.push(worst);
                continue;
            }
            if ev.evaluations + 4 > self.max_evals {
                heap.push(worst);
                let estimate = heap.iter().chain(settled.iter()).map(|s| s.error).sum();
                return Err(Error::Quadrature {
                    evaluations: ev.evaluations,
                    estimate,
                    tol: self.tol,
                });
            }
            let left = ev.segment(worst.a, m, worst.fa, worst.fl, worst.fm);
            let right = ev.segment(m, worst.b, worst.fm, worst.fr, worst.fb);
            total_error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
            if total_error <= self.tol {
                // Guard against drift in the running sum.
                total_error = heap.iter().chain(settled.iter()).map(|s| s.error).sum();
            }
        }

        let mut all: Vec<Segment> = heap.into_vec();
        all.extend(settled);
        all.sort_by(|x, y| x.a.total_cmp(&y.a));
        let value = all.iter().map(|s| s.value).sum();
        let error = all.iter().map(|s| s.error).sum();
        if !f64::is_finite(value) {
            return Err(Error::Quadrature {
                evaluations: ev.evaluations,
                estimate: f64::INFINITY,
                tol: self.tol,
            });
        }
        Ok(Estimate {
            value,
            error,
            evaluations: ev.evaluations,
        })
    }
}
