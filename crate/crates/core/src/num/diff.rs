//! Finite differences with Richardson extrapolation.

/// First derivative by central differences with one Richardson step,
/// relative step h = x * rel_step (absolute fallback near zero).
pub fn d1_central<F: Fn(f64) -> f64>(f: &F, x: f64, rel_step: f64) -> f64 {
    let h = step(x, rel_step);
    let d_h = (f(x + h) - f(x - h)) / (2.0 * h);
    let d_h2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
    (4.0 * d_h2 - d_h) / 3.0
}

/// Second derivative by the 5-point stencil.
pub fn d2_central<F: Fn(f64) -> f64>(f: &F, x: f64, rel_step: f64) -> f64 {
    let h = step(x, rel_step);
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h * h)
}

fn step(x: f64, rel_step: f64) -> f64 {
    let h = x.abs() * rel_step;
    if h > 0.0 {
        // snap so that x + h and x - h straddle x exactly
        let tmp = x + h;
        tmp - x
    } else {
        rel_step
    }
}
