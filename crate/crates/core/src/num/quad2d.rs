//! Adaptive 2D quadrature on rectangles: tensor Gauss-Legendre with an
//! embedded lower-order estimate, error-driven cell subdivision. Cells
//! adjacent to an integrable point singularity are refined geometrically
//! by the same mechanism until their contribution falls below tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const X4: [f64; 2] = [0.3399810435848563, 0.8611363115940526];
const W4: [f64; 2] = [0.6521451548625461, 0.3478548451374538];
const X8: [f64; 4] = [
    0.1834346424956498,
    0.5255324099163290,
    0.7966664774136267,
    0.9602898564975363,
];
const W8: [f64; 4] = [
    0.3626837833783620,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

fn nodes4(a: f64, b: f64) -> [(f64, f64); 4] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    [
        (c - h * X4[1], W4[1] * h),
        (c - h * X4[0], W4[0] * h),
        (c + h * X4[0], W4[0] * h),
        (c + h * X4[1], W4[1] * h),
    ]
}

fn nodes8(a: f64, b: f64) -> [(f64, f64); 8] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 8];
    for j in 0..4 {
        out[3 - j] = (c - h * X8[j], W8[j] * h);
        out[4 + j] = (c + h * X8[j], W8[j] * h);
    }
    out
}

fn tensor<F: Fn(f64, f64) -> f64>(f: &F, r: &Rect) -> (f64, f64) {
    let nx8 = nodes8(r.x0, r.x1);
    let ny8 = nodes8(r.y0, r.y1);
    let mut g8 = 0.0;
    for &(x, wx) in nx8.iter() {
        for &(y, wy) in ny8.iter() {
            g8 += wx * wy * f(x, y);
        }
    }
    let nx4 = nodes4(r.x0, r.x1);
    let ny4 = nodes4(r.y0, r.y1);
    let mut g4 = 0.0;
    for &(x, wx) in nx4.iter() {
        for &(y, wy) in ny4.iter() {
            g4 += wx * wy * f(x, y);
        }
    }
    (g8, (g8 - g4).abs())
}

#[derive(Clone, Copy, Debug)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

struct Cell {
    rect: Rect,
    value: f64,
    err: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Quad2dResult {
    pub value: f64,
    pub err: f64,
    pub converged: bool,
    pub cells: usize,
}

/// Integrates `f` over [x0,x1]x[y0,y1] with forced initial grid lines
/// (`cuts_x`, `cuts_y`: support edges, kink lines, singular abscissae).
pub fn integrate2d<F: Fn(f64, f64) -> f64>(
    f: &F,
    outer: Rect,
    cuts_x: &[f64],
    cuts_y: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_cells: usize,
) -> Quad2dResult {
    let mut xs = vec![outer.x0, outer.x1];
    xs.extend(cuts_x.iter().copied().filter(|&v| v > outer.x0 && v < outer.x1));
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let mut ys = vec![outer.y0, outer.y1];
    ys.extend(cuts_y.iter().copied().filter(|&v| v > outer.y0 && v < outer.y1));
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup();

    let mut heap: BinaryHeap<Cell> = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut n_cells = 0usize;
    for wx in xs.windows(2) {
        for wy in ys.windows(2) {
            let rect = Rect { x0: wx[0], x1: wx[1], y0: wy[0], y1: wy[1] };
            let (v, e) = tensor(f, &rect);
            total += v;
            total_err += e;
            heap.push(Cell { rect, value: v, err: e });
            n_cells += 1;
        }
    }

    while n_cells < max_cells {
        let tol = abs_tol.max(rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        let worst = match heap.pop() {
            Some(c) => c,
            None => break,
        };
        let r = worst.rect;
        let mx = 0.5 * (r.x0 + r.x1);
        let my = 0.5 * (r.y0 + r.y1);
        if mx <= r.x0 || mx >= r.x1 || my <= r.y0 || my >= r.y1 {
            total_err -= worst.err;
            continue;
        }
        total -= worst.value;
        total_err -= worst.err;
        for child in [
            Rect { x0: r.x0, x1: mx, y0: r.y0, y1: my },
            Rect { x0: mx, x1: r.x1, y0: r.y0, y1: my },
            Rect { x0: r.x0, x1: mx, y0: my, y1: r.y1 },
            Rect { x0: mx, x1: r.x1, y0: my, y1: r.y1 },
        ] {
            let (v, e) = tensor(f, &child);
            total += v;
            total_err += e;
            heap.push(Cell { rect: child, value: v, err: e });
            n_cells += 1;
        }
    }

    let tol = abs_tol.max(rel_tol * total.abs());
    Quad2dResult { value: total, err: total_err, converged: total_err <= tol, cells: n_cells }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_polynomial() {
        let r = integrate2d(
            &|x, y| x * x * y,
            Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 2.0 },
            &[],
            &[],
            1e-12,
            1e-12,
            10_000,
        );
        assert!((r.value - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn integrable_corner_singularity() {
        // ∫∫_{[0,1]^2} (x^2+y^2)^{-1/2} = 2 ln(1+sqrt 2)
        let exact = 2.0 * (1.0 + 2.0f64.sqrt()).ln();
        let r = integrate2d(
            &|x, y| 1.0 / (x * x + y * y).sqrt(),
            Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 },
            &[],
            &[],
            1e-10,
            1e-7,
            60_000,
        );
        assert!(
            ((r.value - exact) / exact).abs() < 1e-5,
            "value {} exact {} cells {}",
            r.value,
            exact,
            r.cells
        );
    }
}
