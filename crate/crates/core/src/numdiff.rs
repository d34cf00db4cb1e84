//! Richardson-extrapolated central differences.

/// Binomial-stencil central difference of order `n` with spacing `h`.
///
/// Sample points sit at `x + (n/2 - k) h`, `k = 0..=n`, so odd orders use
/// half-integer offsets. The truncation error is a series in `h²`.
pub fn central_difference<F: Fn(f64) -> f64>(f: &F, x: f64, n: u32, h: f64) -> f64 {
    let mut acc = 0.0;
    let mut c = 1.0;
    for k in 0..=n {
        let offset = (n as f64 / 2.0 - k as f64) * h;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * c * f(x + offset);
        c = c * (n - k) as f64 / (k + 1) as f64;
    }
    acc / h.powi(n as i32)
}

/// n-th derivative of `f` at `x` by Richardson extrapolation over `levels`
/// successive halvings of the base step `h`.
pub fn richardson<F: Fn(f64) -> f64>(f: &F, x: f64, n: u32, h: f64, levels: usize) -> f64 {
    extrapolate((0..levels.max(1)).map(|j| central_difference(f, x, n, h / 2f64.powi(j as i32))))
}

/// Mixed derivative `∂²f/∂x∂y` at `(x, y)` by Richardson extrapolation.
pub fn richardson_mixed<F: Fn(f64, f64) -> f64>(f: &F, x: f64, y: f64, h: f64, levels: usize) -> f64 {
    extrapolate((0..levels.max(1)).map(|j| {
        let s = h / 2f64.powi(j as i32);
        (f(x + s, y + s) - f(x + s, y - s) - f(x - s, y + s) + f(x - s, y - s)) / (4.0 * s * s)
    }))
}

fn extrapolate(estimates: impl Iterator<Item = f64>) -> f64 {
    let mut table: Vec<f64> = Vec::new();
    for e in estimates {
        let mut row = vec![e];
        for (k, prev) in table.iter().enumerate() {
            let factor = 4f64.powi(k as i32 + 1);
            let last = row[k];
            row.push(last + (last - prev) / (factor - 1.0));
        }
        table = row;
    }
    *table.last().expect("at least one level")
}
