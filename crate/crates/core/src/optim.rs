//! Derivative-free simplex minimization (Nelder-Mead).
//!
//! The meta-d' likelihood is smooth but lives behind an order-preserving
//! reparameterization, so a gradient-free method on the unconstrained
//! coordinates is the robust choice. Standard coefficients: reflection 1,
//! expansion 2, contraction 0.5, shrink 0.5.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Hard cap on objective evaluations.
    pub max_evals: usize,
    /// Converged when the simplex function spread satisfies
    /// 2|f_worst - f_best| <= rel_tol (|f_worst| + |f_best| + eps).
    pub rel_tol: f64,
    /// Absolute offset used to build the initial simplex around x0.
    pub init_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { max_evals: 100_000, rel_tol: 1e-8, init_step: 0.25 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: u64,
    pub converged: bool,
}

/// Minimize `f` starting from `x0`.
pub fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    assert!(n >= 1, "nothing to optimize");

    let mut evals: u64 = 0;
    let mut eval = |x: &[f64], evals: &mut u64| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // simplex of n+1 vertices: x0 and x0 + step * e_i
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    simplex.push((eval(x0, &mut evals), x0.to_vec()));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.init_step;
        simplex.push((eval(&v, &mut evals), v));
    }
    simplex.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut converged = false;
    while evals < opts.max_evals as u64 {
        let f_best = simplex[0].0;
        let f_worst = simplex[n].0;
        if 2.0 * (f_worst - f_best).abs()
            <= opts.rel_tol * (f_worst.abs() + f_best.abs() + 1e-12)
        {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for (_, v) in simplex.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let worst = simplex[n].1.clone();
        let point_along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = point_along(1.0);
        let f_reflected = eval(&reflected, &mut evals);

        if f_reflected < simplex[0].0 {
            // try expanding past the reflection
            let expanded = point_along(2.0);
            let f_expanded = eval(&expanded, &mut evals);
            if f_expanded < f_reflected {
                simplex[n] = (f_expanded, expanded);
            } else {
                simplex[n] = (f_reflected, reflected);
            }
        } else if f_reflected < simplex[n - 1].0 {
            simplex[n] = (f_reflected, reflected);
        } else {
            // contract toward the centroid, outside or inside
            let (t, f_ref) = if f_reflected < simplex[n].0 {
                (0.5, f_reflected)
            } else {
                (-0.5, simplex[n].0)
            };
            let contracted = point_along(t);
            let f_contracted = eval(&contracted, &mut evals);
            if f_contracted < f_ref {
                simplex[n] = (f_contracted, contracted);
            } else {
                // shrink everything toward the best vertex
                let best = simplex[0].1.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for (x, b) in entry.1.iter_mut().zip(&best) {
                        *x = b + 0.5 * (*x - b);
                    }
                    entry.0 = eval(&entry.1.clone(), &mut evals);
                }
            }
        }
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let (value, x) = simplex.swap_remove(0);
    Minimum { x, value, evals, converged }
}
