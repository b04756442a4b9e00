//! Derivative-free minimizers: golden-section search on an interval and
//! cyclic coordinate descent built from golden sections.
//!
//! Both searches visit a fixed, deterministic sequence of points. The
//! evaluation budget only truncates that sequence, and the best point seen so
//! far is returned, so a larger budget can never produce a worse objective.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Outcome of a bounded minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Objective wrapper that enforces the budget and remembers the best point.
struct Budgeted<F> {
    f: F,
    evals: usize,
    max_evals: usize,
    best_x: Vec<f64>,
    best_value: f64,
}

impl<F: FnMut(&[f64]) -> f64> Budgeted<F> {
    fn new(f: F, max_evals: usize, dim: usize) -> Self {
        Self {
            f,
            evals: 0,
            max_evals,
            best_x: vec![f64::NAN; dim],
            best_value: f64::INFINITY,
        }
    }

    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.evals >= self.max_evals {
            return None;
        }
        self.evals += 1;
        let v = (self.f)(x);
        // NaN objectives never become the incumbent
        if v < self.best_value || (self.best_x[0].is_nan() && !v.is_nan()) {
            self.best_value = v;
            self.best_x.copy_from_slice(x);
        }
        Some(v)
    }
}

/// Golden-section search along coordinate `axis` of `x` within `[lo, hi]`.
/// Returns `None` when the budget ran out before the bracket closed.
fn golden_axis<F: FnMut(&[f64]) -> f64>(
    obj: &mut Budgeted<F>,
    x: &mut [f64],
    axis: usize,
    (mut lo, mut hi): (f64, f64),
    tol: f64,
) -> Option<()> {
    let at = |obj: &mut Budgeted<F>, t: f64| {
        let mut p = x.to_vec();
        p[axis] = t;
        obj.eval(&p)
    };
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = at(obj, c)?;
    let mut fd = at(obj, d)?;
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = at(obj, c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = at(obj, d)?;
        }
    }
    x[axis] = if fc <= fd { c } else { d };
    Some(())
}

/// Minimizes a function of one variable on `[lo, hi]` until the bracket is
/// narrower than `tol` or `max_evals` evaluations have been spent.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64, max_evals: usize) -> Minimum {
    coordinate_descent(|x: &[f64]| f(x[0]), &[(lo, hi)], tol, max_evals)
}

/// Cyclic coordinate descent: each sweep runs a full golden-section search on
/// every axis in turn, holding the others fixed. Stops once a sweep moves no
/// coordinate by more than `tol`. With one axis this is a single golden
/// section.
pub fn coordinate_descent<F: FnMut(&[f64]) -> f64>(f: F, bounds: &[(f64, f64)], tol: f64, max_evals: usize) -> Minimum {
    assert!(!bounds.is_empty(), "coordinate_descent needs at least one axis");
    let mut obj = Budgeted::new(f, max_evals, bounds.len());
    let mut x: Vec<f64> = bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();

    let converged = 'outer: loop {
        let before = x.clone();
        for (axis, &range) in bounds.iter().enumerate() {
            if golden_axis(&mut obj, &mut x, axis, range, tol).is_none() {
                break 'outer false;
            }
        }
        if bounds.len() == 1 {
            break true;
        }
        let moved = before.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if moved <= tol {
            break true;
        }
    };

    Minimum {
        x: obj.best_x,
        value: obj.best_value,
        evals: obj.evals,
        converged,
    }
}
