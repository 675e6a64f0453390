//! Shared inputs for the criterion benchmarks.

use sublevel::{GreenParams, PlaneBox};

/// Deterministic grid of sample points over `[-6, 6]^2`.
pub fn sample_points(n: usize) -> Vec<(f64, f64)> {
    let side = (n as f64).sqrt().ceil() as usize;
    (0..n)
        .map(|k| {
            let (i, j) = (k % side, k / side);
            (
                -6.0 + 12.0 * (i as f64 + 0.37) / side as f64,
                -6.0 + 12.0 * (j as f64 + 0.61) / side as f64,
            )
        })
        .collect()
}

/// Boxes of side `h` centred on [`sample_points`].
pub fn sample_boxes(n: usize, h: f64) -> Vec<PlaneBox> {
    sample_points(n)
        .into_iter()
        .map(|(x, y)| PlaneBox::from_bounds(x - h / 2.0, x + h / 2.0, y - h / 2.0, y + h / 2.0))
        .collect()
}

pub fn params() -> GreenParams {
    GreenParams::default()
}
