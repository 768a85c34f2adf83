/// Ordinary least squares fit `y ~ a*x + b`, returning `(a, b)`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let a = sxy / sxx;
    Some((a, my - a * mx))
}

/// Root-mean-square residual of the fit `(a, b)` over the same data.
pub(crate) fn fit_rms(xs: &[f64], ys: &[f64], a: f64, b: f64) -> f64 {
    let n = xs.len().max(1) as f64;
    let ss = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (a * x + b);
            r * r
        })
        .sum::<f64>();
    (ss / n).sqrt()
}

/// Piecewise-linear interpolation of `(xs, ys)` at `x`; `xs` strictly
/// increasing. Clamps outside the table.
pub(crate) fn lerp_table(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    debug_assert!(!xs.is_empty());
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let j = xs.partition_point(|&v| v < x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let (y0, y1) = (ys[j - 1], ys[j]);
    let t = (x - x0) / (x1 - x0);
    y0 + t * (y1 - y0)
}
