//! Grid builders. All structure in this problem lives near x = 0, so
//! the default grids are logarithmic in x (uniform in r = -log x).

/// Logarithmically spaced grid on [lo, hi], `ppd` points per decade
/// (at least 2 points total), increasing order.
pub fn log_grid(lo: f64, hi: f64, ppd: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo);
    let decades = (hi / lo).log10();
    let n = ((decades * ppd as f64).ceil() as usize).max(1);
    let l0 = lo.ln();
    let l1 = hi.ln();
    (0..=n).map(|i| (l0 + (l1 - l0) * i as f64 / n as f64).exp()).collect()
}

/// Uniform grid on [lo, hi] with n+1 points.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1);
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}
