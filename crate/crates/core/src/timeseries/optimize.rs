//! Box-constrained Nelder–Mead.

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub lower: f64,
    pub upper: f64,
    /// Stop when simplex values and coordinates both spread less than this.
    pub tolerance: f64,
    pub max_iter: usize,
}

fn clamp_all(x: &mut [f64], lo: f64, hi: f64) {
    for v in x {
        *v = v.clamp(lo, hi);
    }
}

/// Minimizes `f` over the box `[lower, upper]^d`; trial points are projected
/// onto the box.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let d = x0.len();
    let eval = |x: &mut Vec<f64>| {
        clamp_all(x, opts.lower, opts.upper);
        f(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let mut start = x0.to_vec();
    let v0 = eval(&mut start);
    simplex.push((start.clone(), v0));
    for i in 0..d {
        let mut p = start.clone();
        p[i] += if p[i] + opts.initial_step <= opts.upper {
            opts.initial_step
        } else {
            -opts.initial_step
        };
        let v = eval(&mut p);
        simplex.push((p, v));
    }

    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[d].1;
        let spread_x = simplex
            .iter()
            .skip(1)
            .flat_map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= opts.tolerance * best.abs().max(1e-300)
            && spread_x <= opts.tolerance
        {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(p, _)| p[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[d].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let mut xr = along(-1.0);
        let fr = eval(&mut xr);
        if fr < simplex[0].1 {
            let mut xe = along(-2.0);
            let fe = eval(&mut xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[d].1 {
                let mut xc = along(-0.5);
                let fc = eval(&mut xc);
                (xc, fc)
            } else {
                let mut xc = along(0.5);
                let fc = eval(&mut xc);
                (xc, fc)
            };
            if fc < simplex[d].1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let b = simplex[0].0.clone();
                for (p, v) in simplex.iter_mut().skip(1) {
                    for (pj, bj) in p.iter_mut().zip(&b) {
                        *pj = bj + 0.5 * (*pj - bj);
                    }
                    *v = eval(p);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.4).powi(2) + 1.0;
        let m = nelder_mead(
            f,
            &[0.1, 0.1],
            NelderMeadOptions {
                initial_step: 0.1,
                lower: -0.999,
                upper: 0.999,
                tolerance: 1e-12,
                max_iter: 5000,
            },
        );
        assert!((m.x[0] - 0.3).abs() < 1e-6);
        assert!((m.x[1] + 0.4).abs() < 1e-6);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] - 5.0).powi(2);
        let m = nelder_mead(
            f,
            &[0.1],
            NelderMeadOptions {
                initial_step: 0.1,
                lower: -0.999,
                upper: 0.999,
                tolerance: 1e-12,
                max_iter: 5000,
            },
        );
        assert_eq!(m.x[0], 0.999);
    }
}
