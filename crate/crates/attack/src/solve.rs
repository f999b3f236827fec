//! Scalar root finding: sign-change bracketing on a log-spaced grid, then
//! safeguarded Newton iterations (bisection fallback) inside each bracket.

use fedmf_core::Real;

/// Search domain and tolerances for the bracketing solver.
#[derive(Debug, Clone)]
pub struct RootSearch {
    /// Smallest magnitude scanned.
    pub min_abs: f64,
    /// Largest magnitude scanned.
    pub max_abs: f64,
    /// Grid points per decade of magnitude.
    pub per_decade: usize,
    /// Accept once |f(x)| drops below this.
    pub tolerance: f64,
    /// Iteration cap per bracket.
    pub max_iterations: usize,
}

impl Default for RootSearch {
    fn default() -> Self {
        Self {
            min_abs: 1e-6,
            max_abs: 1e3,
            per_decade: 60,
            tolerance: 1e-12,
            max_iterations: 100,
        }
    }
}

/// Plain Newton iteration from a starting point. Returns the first iterate
/// with `|f| < tol`, or `None` on divergence, a flat derivative, or running
/// out of iterations.
pub fn newton<R: Real>(
    f: impl Fn(R) -> R,
    df: impl Fn(R) -> R,
    x0: R,
    tol: R,
    max_iter: usize,
) -> Option<R> {
    let mut x = x0;
    for _ in 0..max_iter {
        let fx = f(x);
        if !fx.is_finite() {
            return None;
        }
        if fx.abs() < tol {
            return Some(x);
        }
        let dfx = df(x);
        if !dfx.is_finite() || dfx == R::zero() {
            return None;
        }
        let next = x - fx / dfx;
        if !next.is_finite() {
            return None;
        }
        x = next;
    }
    if f(x).abs() < tol {
        Some(x)
    } else {
        None
    }
}

/// Newton refinement constrained to a sign-change bracket `[a, b]`: any step
/// that leaves the bracket (or hits a flat derivative) becomes a bisection
/// step, and the bracket shrinks around the root as iterations proceed.
/// Convergence is `|f(x)| < tolerance * max(1, scale(x))`, where `scale`
/// measures the magnitude of the equation's terms, so badly conditioned
/// equations (with cancelling large terms) are judged relative to their own
/// size. Returns the root only if the tolerance was actually met, so
/// brackets around poles come back `None`.
fn refine<R: Real>(
    f: &impl Fn(R) -> R,
    df: &impl Fn(R) -> R,
    scale: &impl Fn(R) -> R,
    mut a: R,
    mut b: R,
    mut fa: R,
    search: &RootSearch,
) -> Option<R> {
    let tol = R::of(search.tolerance);
    let half = R::of(0.5);
    let mut x = (a + b) * half;
    for _ in 0..search.max_iterations {
        let fx = f(x);
        if !fx.is_finite() {
            // Landed on a pole; probe off-center instead.
            x = a * R::of(0.75) + b * R::of(0.25);
            continue;
        }
        if fx.abs() < tol * scale(x).max(R::one()) {
            return Some(x);
        }
        // Maintain the sign-change invariant.
        if (fx > R::zero()) == (fa > R::zero()) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let dfx = df(x);
        let newton_step = if dfx.is_finite() && dfx != R::zero() {
            x - fx / dfx
        } else {
            R::nan()
        };
        let lo = a.min(b);
        let hi = a.max(b);
        x = if newton_step.is_finite() && newton_step > lo && newton_step < hi {
            newton_step
        } else {
            (a + b) * half
        };
    }
    None
}

/// All roots found by scanning both signs of the log-spaced grid. Roots are
/// deduplicated within 1e-9 relative distance.
pub fn bracketed_roots<R: Real>(
    f: impl Fn(R) -> R,
    df: impl Fn(R) -> R,
    search: &RootSearch,
) -> Vec<R> {
    bracketed_roots_scaled(f, df, |_| R::one(), search)
}

/// [`bracketed_roots`] with a caller-supplied term-magnitude estimate used
/// to make the convergence test relative.
pub fn bracketed_roots_scaled<R: Real>(
    f: impl Fn(R) -> R,
    df: impl Fn(R) -> R,
    scale: impl Fn(R) -> R,
    search: &RootSearch,
) -> Vec<R> {
    let decades = (search.max_abs / search.min_abs).log10();
    let steps = (decades * search.per_decade as f64).ceil() as usize;
    let mut roots: Vec<R> = Vec::new();
    for sign in [1.0f64, -1.0] {
        let mut prev: Option<(R, R)> = None;
        for i in 0..=steps {
            let mag = search.min_abs * 10f64.powf(decades * i as f64 / steps as f64);
            let x = R::of(sign * mag);
            let fx = f(x);
            if !fx.is_finite() {
                prev = None;
                continue;
            }
            if let Some((px, pfx)) = prev {
                if (pfx > R::zero()) != (fx > R::zero()) {
                    if let Some(root) = refine(&f, &df, &scale, px, x, pfx, search) {
                        let dup = roots.iter().any(|&r| {
                            (r - root).abs() <= R::of(1e-9) * root.abs().max(R::of(1e-300))
                        });
                        if !dup {
                            roots.push(root);
                        }
                    }
                }
            }
            prev = Some((x, fx));
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_textbook_square_root() {
        // x^2 - 4 from x0 = 3 converges to 2
        let root = newton(|x: f64| x * x - 4.0, |x| 2.0 * x, 3.0, 1e-12, 100).unwrap();
        assert!((root - 2.0).abs() < 1e-9);
    }

    #[test]
    fn newton_gives_up_on_flat_derivative() {
        assert!(newton(|_: f64| 1.0, |_| 0.0, 1.0, 1e-12, 50).is_none());
    }

    #[test]
    fn brackets_find_symmetric_roots() {
        let search = RootSearch::default();
        let mut roots = bracketed_roots(|x: f64| x * x - 4.0, |x| 2.0 * x, &search);
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(roots.len(), 2);
        assert!((roots[0] + 2.0).abs() < 1e-10);
        assert!((roots[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn pole_brackets_are_rejected() {
        // 1/x - 1e-9 has a pole at 0 flanked by a sign change on the negative
        // side and a genuine root at 1e9 (outside the grid); nothing inside
        // the domain should be reported.
        let search = RootSearch::default();
        let roots = bracketed_roots(|x: f64| 1.0 / x - 1e-9, |x| -1.0 / (x * x), &search);
        assert!(roots.is_empty(), "got {roots:?}");
    }

    #[test]
    fn steep_root_needs_bisection_fallback() {
        // tanh-like steepness: pure Newton from a midpoint far away overshoots
        let f = |x: f64| (50.0 * (x - 1.0)).tanh();
        let df = |x: f64| 50.0 / (50.0 * (x - 1.0)).cosh().powi(2);
        let roots = bracketed_roots(f, df, &RootSearch::default());
        assert!(roots.iter().any(|r| (r - 1.0).abs() < 1e-6), "{roots:?}");
    }
}
