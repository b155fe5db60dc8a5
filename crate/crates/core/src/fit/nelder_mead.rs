/// Outcome of a Nelder–Mead run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Best objective value after each iteration (non-increasing).
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Minimizes `f` from `simplex` (n+1 vertices) with the standard coefficients
/// (reflection 1, expansion 2, contraction ½, shrink ½). Stops when `done`
/// accepts the ordered simplex or after `max_iterations`.
pub fn nelder_mead<F, D>(f: F, simplex: Vec<Vec<f64>>, max_iterations: usize, done: D) -> Minimum
where
    F: Fn(&[f64]) -> f64,
    D: Fn(&[Vec<f64>], &[f64]) -> bool,
{
    let n = simplex.len() - 1;
    let mut pts = simplex;
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut history = Vec::new();
    let along = |from: &[f64], to: &[f64], s: f64| -> Vec<f64> {
        from.iter().zip(to).map(|(a, b)| a + s * (b - a)).collect()
    };

    for iteration in 0..max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if done(&pts, &vals) {
            return Minimum {
                x: pts[0].clone(),
                value: vals[0],
                iterations: iteration,
                history,
                converged: true,
            };
        }

        let centroid: Vec<f64> = (0..pts[0].len())
            .map(|k| pts[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = pts[n].clone();
        let reflected = along(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        if fr < vals[0] {
            let expanded = along(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            (pts[n], vals[n]) = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < vals[n - 1] {
            (pts[n], vals[n]) = (reflected, fr);
        } else {
            let (candidate, fc) = if fr < vals[n] {
                let c = along(&centroid, &reflected, 0.5);
                let fc = f(&c);
                (c, fc)
            } else {
                let c = along(&centroid, &worst, 0.5);
                let fc = f(&c);
                (c, fc)
            };
            if fc < vals[n].min(fr) {
                (pts[n], vals[n]) = (candidate, fc);
            } else {
                let best = pts[0].clone();
                for i in 1..=n {
                    pts[i] = along(&best, &pts[i], 0.5);
                    vals[i] = f(&pts[i]);
                }
            }
        }
        history.push(vals.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let best = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap();
    Minimum {
        x: pts[best].clone(),
        value: vals[best],
        iterations: max_iterations,
        history,
        converged: false,
    }
}
