use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{check_finite, OptimError, OptimizerReport, Termination};
use crate::circuit::ParameterVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LbfgsConfig {
    /// Stop when successive energies or the gradient infinity norm fall below this.
    pub tol: f64,
    /// Budget of objective+gradient evaluations.
    pub max_evals: usize,
    pub max_steps: usize,
    pub memory: usize,
    pub c1: f64,
    pub c2: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_evals: 5000,
            max_steps: 2000,
            memory: 10,
            c1: 1e-4,
            c2: 0.9,
        }
    }
}

impl LbfgsConfig {
    fn validate(&self) -> Result<(), OptimError> {
        if !(self.tol >= 0.0) || self.memory == 0 || self.max_evals == 0 {
            return Err(OptimError::InvalidConfig(
                "lbfgs needs tol >= 0, memory >= 1, max_evals >= 1".into(),
            ));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(OptimError::InvalidConfig(
                "lbfgs needs 0 < c1 < c2 < 1".into(),
            ));
        }
        Ok(())
    }
}

struct Evaluator<F, G> {
    f: F,
    g: G,
    count: usize,
    max: usize,
}

impl<F, G> Evaluator<F, G>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    fn exhausted(&self) -> bool {
        self.count >= self.max
    }

    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>), OptimError> {
        self.count += 1;
        let fx = check_finite(self.count, (self.f)(x))?;
        let gx = (self.g)(x);
        if gx.len() != x.len() {
            return Err(OptimError::GradientLength {
                expected: x.len(),
                got: gx.len(),
            });
        }
        if let Some(&bad) = gx.iter().find(|v| !v.is_finite()) {
            return Err(OptimError::NonFinite {
                evaluation: self.count,
                value: bad,
            });
        }
        Ok((fx, gx))
    }
}

#[derive(Clone)]
struct Point {
    a: f64,
    f: f64,
    /// Directional derivative along the search direction.
    d: f64,
    g: Vec<f64>,
}

enum Search {
    Accepted(Point),
    Failed,
    Budget,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
}

/// Minimizer of the cubic through two points with slopes, safeguarded to the
/// inner 80% of the interval; bisection otherwise.
fn cubic_step(p: &Point, q: &Point) -> f64 {
    let (lo, hi) = (p.a.min(q.a), p.a.max(q.a));
    let width = hi - lo;
    let mid = 0.5 * (lo + hi);
    let d1 = p.d + q.d - 3.0 * (p.f - q.f) / (p.a - q.a);
    let disc = d1 * d1 - p.d * q.d;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (q.a - p.a).signum() * disc.sqrt();
    let a = q.a - (q.a - p.a) * (q.d + d2 - d1) / (q.d - p.d + 2.0 * d2);
    if a.is_finite() && a > lo + 0.1 * width && a < hi - 0.1 * width {
        a
    } else {
        mid
    }
}

struct LineSearch<'a> {
    x: &'a [f64],
    dir: &'a [f64],
    f0: f64,
    d0: f64,
    c1: f64,
    c2: f64,
}

impl LineSearch<'_> {
    fn probe<F, G>(&self, ev: &mut Evaluator<F, G>, a: f64) -> Result<Point, OptimError>
    where
        F: FnMut(&[f64]) -> f64,
        G: FnMut(&[f64]) -> Vec<f64>,
    {
        let (f, g) = ev.eval(&axpy(self.x, a, self.dir))?;
        Ok(Point {
            a,
            f,
            d: dot(&g, self.dir),
            g,
        })
    }

    fn armijo(&self, p: &Point) -> bool {
        p.f <= self.f0 + self.c1 * p.a * self.d0
    }

    fn curvature(&self, p: &Point) -> bool {
        p.d.abs() <= -self.c2 * self.d0
    }

    /// Strong Wolfe search: bracketing phase then zoom.
    fn run<F, G>(&self, ev: &mut Evaluator<F, G>, a_init: f64) -> Result<Search, OptimError>
    where
        F: FnMut(&[f64]) -> f64,
        G: FnMut(&[f64]) -> Vec<f64>,
    {
        let mut prev = Point {
            a: 0.0,
            f: self.f0,
            d: self.d0,
            g: Vec::new(),
        };
        let mut a = a_init;
        for i in 0..25 {
            if ev.exhausted() {
                return Ok(Search::Budget);
            }
            let p = self.probe(ev, a)?;
            if !self.armijo(&p) || (i > 0 && p.f >= prev.f) {
                return self.zoom(ev, prev, p);
            }
            if self.curvature(&p) {
                return Ok(Search::Accepted(p));
            }
            if p.d >= 0.0 {
                return self.zoom(ev, p, prev);
            }
            prev = p;
            a *= 2.0;
        }
        Ok(Search::Failed)
    }

    fn zoom<F, G>(
        &self,
        ev: &mut Evaluator<F, G>,
        mut lo: Point,
        mut hi: Point,
    ) -> Result<Search, OptimError>
    where
        F: FnMut(&[f64]) -> f64,
        G: FnMut(&[f64]) -> Vec<f64>,
    {
        for _ in 0..40 {
            if (hi.a - lo.a).abs() <= 1e-16 * lo.a.abs().max(1.0) {
                break;
            }
            if ev.exhausted() {
                return Ok(Search::Budget);
            }
            let p = self.probe(ev, cubic_step(&lo, &hi))?;
            if !self.armijo(&p) || p.f >= lo.f {
                hi = p;
            } else {
                if self.curvature(&p) {
                    return Ok(Search::Accepted(p));
                }
                if p.d * (hi.a - lo.a) >= 0.0 {
                    hi = lo;
                }
                lo = p;
            }
        }
        Ok(Search::Failed)
    }
}

/// Limited-memory BFGS with a strong-Wolfe line search.
///
/// Evaluations are counted as objective+gradient pairs. A failed line search
/// is replaced by a backtracking steepest-descent step.
pub fn minimize_lbfgs<F, G>(
    f: F,
    grad: G,
    x0: &[f64],
    cfg: &LbfgsConfig,
) -> Result<OptimizerReport, OptimError>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    cfg.validate()?;
    let mut ev = Evaluator {
        f,
        g: grad,
        count: 0,
        max: cfg.max_evals,
    };
    let mut x = x0.to_vec();
    let (mut fx, mut gx) = ev.eval(&x)?;
    let mut trace = vec![(ev.count, fx)];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut recoveries = 0;
    let mut steps = 0;

    let termination = loop {
        if inf_norm(&gx) < cfg.tol {
            break Termination::Tolerance;
        }
        if steps >= cfg.max_steps {
            break Termination::MaxSteps;
        }
        if ev.exhausted() {
            break Termination::MaxEvals;
        }

        let mut dir = two_loop(&gx, &history);
        let mut d0 = dot(&gx, &dir);
        if !(d0 < 0.0) {
            history.clear();
            dir = gx.iter().map(|v| -v).collect();
            d0 = -dot(&gx, &gx);
        }
        let a_init = if history.is_empty() {
            (1.0 / inf_norm(&gx)).min(1.0)
        } else {
            1.0
        };
        let search = LineSearch {
            x: &x,
            dir: &dir,
            f0: fx,
            d0,
            c1: cfg.c1,
            c2: cfg.c2,
        };
        let accepted = match search.run(&mut ev, a_init)? {
            Search::Accepted(p) => Some((p, dir)),
            Search::Budget => break Termination::MaxEvals,
            Search::Failed => {
                recoveries += 1;
                history.clear();
                match steepest_descent(&mut ev, &x, fx, &gx, cfg.c1)? {
                    Search::Accepted(p) => Some((p, gx.iter().map(|v| -v).collect())),
                    Search::Budget => break Termination::MaxEvals,
                    Search::Failed => None,
                }
            }
        };
        let Some((p, dir)) = accepted else {
            // No descent available at working precision.
            break Termination::Tolerance;
        };

        let s: Vec<f64> = dir.iter().map(|d| p.a * d).collect();
        let y: Vec<f64> = p.g.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s.clone(), y, 1.0 / sy));
        }
        x.iter_mut().zip(&s).for_each(|(xi, si)| *xi += si);
        let previous = fx;
        fx = p.f;
        gx = p.g;
        steps += 1;
        trace.push((ev.count, fx));
        if (previous - fx).abs() < cfg.tol {
            break Termination::Tolerance;
        }
    };

    Ok(OptimizerReport {
        trace,
        final_parameters: ParameterVector::new(x).expect("iterates are finite"),
        final_energy: fx,
        termination,
        evaluations_used: ev.count,
        recoveries,
    })
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn steepest_descent<F, G>(
    ev: &mut Evaluator<F, G>,
    x: &[f64],
    fx: f64,
    gx: &[f64],
    c1: f64,
) -> Result<Search, OptimError>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let dir: Vec<f64> = gx.iter().map(|v| -v).collect();
    let d0 = -dot(gx, gx);
    let mut a = (1.0 / inf_norm(gx)).min(1.0);
    for _ in 0..40 {
        if ev.exhausted() {
            return Ok(Search::Budget);
        }
        let (f, g) = ev.eval(&axpy(x, a, &dir))?;
        if f <= fx + c1 * a * d0 && f < fx {
            let d = dot(&g, &dir);
            return Ok(Search::Accepted(Point { a, f, d, g }));
        }
        a *= 0.5;
    }
    Ok(Search::Failed)
}
