//! Box-constrained Nelder–Mead maximization.
//!
//! Trial points are projected onto the box, so every evaluated point is
//! feasible. Objective failures (`None`) rank below any finite value and the
//! best-so-far value never decreases.

use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct NelderMeadOptions<T> {
    /// Iterations (reflection steps), each of which produces one trace record.
    pub max_iters: usize,
    /// Hard cap on objective evaluations, including the initial simplex.
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this...
    pub ftol: T,
    /// ...and the simplex diameter falls below this.
    pub xtol: T,
    /// Initial simplex edge as a fraction of each bound width.
    pub initial_step: T,
}

impl<T: Scalar> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        Self { max_iters: 1000, max_evals: 500, ftol: T::lit(1e-10), xtol: T::lit(1e-7), initial_step: T::lit(0.1) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    pub evaluations: usize,
    pub best_value: T,
    pub best_point: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    MaxEvaluations,
}

#[derive(Debug, Clone)]
pub struct MaximizeResult<T> {
    pub point: Vec<T>,
    /// `None` when no evaluated point was feasible.
    pub value: Option<T>,
    pub trace: Vec<IterationRecord<T>>,
    pub evaluations: usize,
    pub stop: StopReason,
}

#[derive(Debug, Clone)]
struct Vertex<T> {
    x: Vec<T>,
    f: Option<T>,
}

/// `a` strictly better than `b`.
fn better<T: Scalar>(a: Option<T>, b: Option<T>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x > y,
        (Some(_), None) => true,
        _ => false,
    }
}

struct Counter<F> {
    f: F,
    used: usize,
    budget: usize,
}

impl<F> Counter<F> {
    /// `Err(())` once the budget is spent.
    fn eval<T: Scalar>(&mut self, x: &[T]) -> Result<Option<T>, ()>
    where
        F: FnMut(&[T]) -> Option<T>,
    {
        if self.used >= self.budget {
            return Err(());
        }
        self.used += 1;
        Ok((self.f)(x).filter(|v| v.is_finite()))
    }
}

fn project<T: Scalar>(x: &mut [T], lower: &[T], upper: &[T]) {
    for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.max(lo).min(hi);
    }
}

/// Maximizes `f` over the box `[lower, upper]` starting from `x0`.
///
/// Panics if the dimensions disagree, a bound is inverted, or `x0` lies
/// outside the box.
pub fn maximize<T, F>(mut f: F, x0: &[T], lower: &[T], upper: &[T], opts: &NelderMeadOptions<T>) -> MaximizeResult<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> Option<T>,
{
    let dim = x0.len();
    assert!(dim > 0 && lower.len() == dim && upper.len() == dim, "dimension mismatch");
    assert!(lower.iter().zip(upper).all(|(l, u)| l <= u), "inverted bounds");
    assert!(x0.iter().zip(lower).zip(upper).all(|((x, l), u)| x >= l && x <= u), "initial point outside bounds");

    let (alpha, gamma, rho, shrink) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    let mut counter = Counter { f: &mut f, used: 0, budget: opts.max_evals.max(1) };
    let mut trace = Vec::new();

    let f0 = counter.eval(x0).unwrap_or(None);
    let mut simplex = vec![Vertex { x: x0.to_vec(), f: f0 }];
    let mut best = simplex[0].clone();
    let mut stop = StopReason::MaxIterations;

    'build: for i in 0..dim {
        let mut x = x0.to_vec();
        let width = upper[i] - lower[i];
        let step = opts.initial_step * width;
        x[i] = if x[i] + step <= upper[i] { x[i] + step } else { x[i] - step };
        project(&mut x, lower, upper);
        match counter.eval(&x) {
            Ok(fx) => simplex.push(Vertex { x, f: fx }),
            Err(()) => {
                stop = StopReason::MaxEvaluations;
                break 'build;
            }
        }
    }

    let done_early = simplex.len() < dim + 1;
    for v in &simplex {
        if better(v.f, best.f) {
            best = v.clone();
        }
    }

    let mut iteration = 0;
    while !done_early && iteration < opts.max_iters {
        // Best first.
        simplex.sort_by(|a, b| {
            if better(a.f, b.f) {
                std::cmp::Ordering::Less
            } else if better(b.f, a.f) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });

        if let (Some(fb), Some(fw)) = (simplex[0].f, simplex[dim].f) {
            let spread = fb - fw;
            let diameter = simplex[1..]
                .iter()
                .map(|v| v.x.iter().zip(&simplex[0].x).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max))
                .fold(T::zero(), T::max);
            if spread <= opts.ftol && diameter <= opts.xtol {
                stop = StopReason::Converged;
                break;
            }
        }

        iteration += 1;
        match step(&mut counter, &mut simplex, lower, upper, alpha, gamma, rho, shrink) {
            Ok(()) => {}
            Err(()) => stop = StopReason::MaxEvaluations,
        }
        for v in &simplex {
            if better(v.f, best.f) {
                best = v.clone();
            }
        }
        trace.push(IterationRecord {
            iteration,
            evaluations: counter.used,
            best_value: best.f.unwrap_or(T::neg_infinity()),
            best_point: best.x.clone(),
        });
        if stop == StopReason::MaxEvaluations {
            break;
        }
    }
    if done_early {
        stop = StopReason::MaxEvaluations;
    }

    MaximizeResult { point: best.x, value: best.f, trace, evaluations: counter.used, stop }
}

#[allow(clippy::too_many_arguments)]
fn step<T, F>(
    counter: &mut Counter<F>,
    simplex: &mut [Vertex<T>],
    lower: &[T],
    upper: &[T],
    alpha: T,
    gamma: T,
    rho: T,
    shrink: T,
) -> Result<(), ()>
where
    T: Scalar,
    F: FnMut(&[T]) -> Option<T>,
{
    let dim = simplex.len() - 1;
    let n_t = T::from_usize_lossy(dim);
    let centroid: Vec<T> = (0..dim).map(|j| simplex[..dim].iter().map(|v| v.x[j]).sum::<T>() / n_t).collect();
    let along = |from: &[T], to: &[T], t: T| -> Vec<T> {
        let mut x: Vec<T> = from.iter().zip(to).map(|(&c, &w)| c + t * (w - c)).collect();
        project(&mut x, lower, upper);
        x
    };

    let worst = simplex[dim].clone();
    let xr = along(&centroid, &worst.x, -alpha);
    let fr = counter.eval(&xr)?;

    if better(fr, simplex[0].f) {
        let xe = along(&centroid, &xr, gamma);
        let fe = counter.eval(&xe)?;
        simplex[dim] = if better(fe, fr) { Vertex { x: xe, f: fe } } else { Vertex { x: xr, f: fr } };
        return Ok(());
    }
    if better(fr, simplex[dim - 1].f) {
        simplex[dim] = Vertex { x: xr, f: fr };
        return Ok(());
    }

    let outside = better(fr, worst.f);
    let xc = if outside { along(&centroid, &xr, rho) } else { along(&centroid, &worst.x, rho) };
    let fc = counter.eval(&xc)?;
    let reference = if outside { fr } else { worst.f };
    if better(fc, reference) || (fc.is_some() && fc == reference) {
        simplex[dim] = Vertex { x: xc, f: fc };
        return Ok(());
    }

    let best_x = simplex[0].x.clone();
    for v in simplex[1..].iter_mut() {
        let x = along(&best_x, &v.x, shrink);
        let fx = counter.eval(&x)?;
        *v = Vertex { x, f: fx };
    }
    Ok(())
}
