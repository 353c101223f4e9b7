//! Derivative-free minimisation (Nelder–Mead downhill simplex).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Offset of the initial vertices along each axis.
    pub step: f64,
    pub max_iterations: usize,
    /// Stop once the spread of vertex values is at most this.
    pub ftol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            step: 0.5,
            max_iterations: 200,
            ftol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// All initial vertices scored the same, so the search never moved.
    pub flat_start: bool,
}

fn spread(best: f64, worst: f64) -> f64 {
    if best == worst {
        0.0
    } else {
        worst - best
    }
}

fn combine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t * (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Minimises `f` from `start`. Non-finite objective values are treated as
/// `+inf` and ordered above everything else.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    opts: SimplexOptions,
) -> SimplexResult {
    let n = start.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start)));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += opts.step;
        let v = eval(&x);
        simplex.push((x, v));
    }
    let sort = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    sort(&mut simplex);
    let flat_start = n == 0 || spread(simplex[0].1, simplex[n].1) == 0.0;

    let mut iterations = 0;
    while n > 0 && iterations < opts.max_iterations {
        if spread(simplex[0].1, simplex[n].1) <= opts.ftol {
            break;
        }
        iterations += 1;
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = combine(&centroid, &worst.0, -1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = combine(&centroid, &worst.0, -2.0);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < worst.1 {
                let x = combine(&centroid, &reflected, 0.5);
                let v = eval(&x);
                (x, v)
            } else {
                let x = combine(&centroid, &worst.0, 0.5);
                let v = eval(&x);
                (x, v)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x = combine(&best, &vertex.0, 0.5);
                    let v = eval(&x);
                    *vertex = (x, v);
                }
            }
        }
        sort(&mut simplex);
    }
    let (point, value) = simplex.swap_remove(0);
    SimplexResult {
        point,
        value,
        iterations,
        flat_start,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum() {
        let r = nelder_mead(
            |x| (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2),
            &[1.0, 1.0],
            SimplexOptions {
                ftol: 1e-12,
                ..SimplexOptions::default()
            },
        );
        assert!((r.point[0] - 3.0).abs() < 1e-3, "{r:?}");
        assert!((r.point[1] + 1.0).abs() < 1e-3, "{r:?}");
        assert!(!r.flat_start);
    }

    #[test]
    fn step_function() {
        let r = nelder_mead(
            |x| if x[0] > 1.2 { 0.0 } else { 1.0 },
            &[1.0],
            SimplexOptions::default(),
        );
        assert_eq!(r.value, 0.0);
        assert!(r.point[0] > 1.2);
    }

    #[test]
    fn flat_start_is_reported() {
        let r = nelder_mead(|_| 2.0, &[1.0, 1.0], SimplexOptions::default());
        assert!(r.flat_start);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn infinite_values_are_worst() {
        let r = nelder_mead(
            |x| {
                if x[0] < 0.0 {
                    f64::NAN
                } else {
                    (x[0] - 2.0).abs()
                }
            },
            &[1.0],
            SimplexOptions::default(),
        );
        assert!((r.point[0] - 2.0).abs() < 1e-3);
    }
}
