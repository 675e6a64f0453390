use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{verified_bbox, AreaError};
use crate::green::{eval_g, ComplexPoint, GreenParams};

/// Samples per substream. Chunk `k` draws from stream `k` of the seeded
/// generator, so the estimate is independent of the thread count.
pub const MC_CHUNK: u64 = 1 << 16;

pub const MC_MIN_SAMPLES: u64 = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub hits: u64,
    pub n: u64,
    pub seed: u64,
}

impl McEstimate {
    /// `|a - estimate| <= k * stderr`.
    pub fn agrees_with(&self, a: f64, k: f64) -> bool {
        (a - self.estimate).abs() <= k * self.stderr
    }
}

/// Uniform hit-or-miss estimate of the area of `{t_lo < G < t_hi}` over the
/// verified bounding box.
pub fn monte_carlo_area(t_lo: f64, t_hi: f64, n: u64, seed: u64, p: &GreenParams) -> Result<McEstimate, AreaError> {
    if n < MC_MIN_SAMPLES {
        return Err(AreaError::TooFewSamples(n));
    }
    if t_lo.is_nan() || t_hi.is_nan() || !(t_lo < t_hi) {
        return Err(AreaError::EmptyBand { t_lo, t_hi });
    }
    if t_hi > 0.0 {
        return Err(AreaError::LevelOutsideDomain(t_hi));
    }
    let bbox = verified_bbox(p)?.bbox;
    let (x0, y0) = (bbox.x.lo(), bbox.y.lo());
    let (w, h) = (bbox.x.hi() - x0, bbox.y.hi() - y0);
    let chunks = n.div_ceil(MC_CHUNK);

    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let len = MC_CHUNK.min(n - k * MC_CHUNK);
            let mut hits = 0u64;
            for _ in 0..len {
                let x = x0 + w * rng.gen::<f64>();
                let y = y0 + h * rng.gen::<f64>();
                let g = eval_g(ComplexPoint::new(x, y), p);
                if t_lo < g && g < t_hi {
                    hits += 1;
                }
            }
            hits
        })
        .sum();

    let area = w * h;
    let frac = hits as f64 / n as f64;
    Ok(McEstimate {
        estimate: area * frac,
        stderr: area * (frac * (1.0 - frac) / n as f64).sqrt(),
        hits,
        n,
        seed,
    })
}

/// Sample counts of the slots `G < t_0`, `t_0 <= G < t_1`, ...,
/// `G >= t_last` for increasing levels, all from one sample set. Linear
/// combinations of the sublevel areas then come with their exact joint
/// variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McPartition {
    pub levels: Vec<f64>,
    pub counts: Vec<u64>,
    pub n: u64,
    pub seed: u64,
    pub box_area: f64,
}

impl McPartition {
    /// Estimate of `s(levels[i])`.
    pub fn area(&self, i: usize) -> McEstimate {
        let hits: u64 = self.counts[..=i].iter().sum();
        let frac = hits as f64 / self.n as f64;
        McEstimate {
            estimate: self.box_area * frac,
            stderr: self.box_area * (frac * (1.0 - frac) / self.n as f64).sqrt(),
            hits,
            n: self.n,
            seed: self.seed,
        }
    }

    /// Estimate and standard error of `sum_i coeffs[i] * s(levels[i])`.
    pub fn combination(&self, coeffs: &[f64]) -> (f64, f64) {
        // A sample in slot k lies in every sublevel set with index >= k.
        let value = |k: usize| -> f64 { coeffs.iter().skip(k).sum() };
        let n = self.n as f64;
        let mut mean = 0.0;
        let mut second = 0.0;
        for (k, &c) in self.counts.iter().enumerate() {
            let x = if k < coeffs.len() { value(k) } else { 0.0 };
            mean += c as f64 * x / n;
            second += c as f64 * x * x / n;
        }
        let var = (second - mean * mean).max(0.0);
        (self.box_area * mean, self.box_area * (var / n).sqrt())
    }
}

/// One pass of `n` uniform samples over the verified bounding box, counted
/// against several increasing sublevels at once.
pub fn monte_carlo_partition(levels: &[f64], n: u64, seed: u64, p: &GreenParams) -> Result<McPartition, AreaError> {
    if n < MC_MIN_SAMPLES {
        return Err(AreaError::TooFewSamples(n));
    }
    for w in levels.windows(2) {
        if w[0].is_nan() || !(w[0] < w[1]) {
            return Err(AreaError::EmptyBand { t_lo: w[0], t_hi: w[1] });
        }
    }
    if let Some(&last) = levels.last() {
        if !(last <= 0.0) {
            return Err(AreaError::LevelOutsideDomain(last));
        }
    }
    let bbox = verified_bbox(p)?.bbox;
    let (x0, y0) = (bbox.x.lo(), bbox.y.lo());
    let (w, h) = (bbox.x.hi() - x0, bbox.y.hi() - y0);
    let chunks = n.div_ceil(MC_CHUNK);
    let slots = levels.len() + 1;
    let per_chunk: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let len = MC_CHUNK.min(n - k * MC_CHUNK);
            let mut counts = vec![0u64; slots];
            for _ in 0..len {
                let x = x0 + w * rng.gen::<f64>();
                let y = y0 + h * rng.gen::<f64>();
                let g = eval_g(ComplexPoint::new(x, y), p);
                let slot = levels.iter().position(|&t| g < t).unwrap_or(levels.len());
                counts[slot] += 1;
            }
            counts
        })
        .collect();
    let mut counts = vec![0u64; slots];
    for c in per_chunk {
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
    }
    Ok(McPartition {
        levels: levels.to_vec(),
        counts,
        n,
        seed,
        box_area: w * h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_is_bit_identical() {
        let p = GreenParams::default();
        let a = monte_carlo_area(f64::NEG_INFINITY, -0.2, 100_000, 42, &p).unwrap();
        let b = monte_carlo_area(f64::NEG_INFINITY, -0.2, 100_000, 42, &p).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_area(f64::NEG_INFINITY, -0.2, 100_000, 43, &p).unwrap();
        assert_ne!(a.hits, c.hits);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let p = GreenParams::default();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo_area(f64::NEG_INFINITY, -0.3, 300_000, 9, &p).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn partition_matches_single_level_runs() {
        let p = GreenParams::default();
        let part = monte_carlo_partition(&[-0.5, -0.2], 200_000, 3, &p).unwrap();
        let single = monte_carlo_area(f64::NEG_INFINITY, -0.2, 200_000, 3, &p).unwrap();
        // Same seed, same sample points.
        assert_eq!(part.area(1), single);
        assert_eq!(part.counts.iter().sum::<u64>(), 200_000);
        let (d, sd) = part.combination(&[-1.0, 1.0]);
        let band = monte_carlo_area(-0.5, -0.2, 200_000, 3, &p).unwrap();
        assert!((d - band.estimate).abs() < 1e-9);
        assert!((sd - band.stderr).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let p = GreenParams::default();
        assert!(matches!(
            monte_carlo_area(f64::NEG_INFINITY, -0.2, 10, 1, &p),
            Err(AreaError::TooFewSamples(10))
        ));
        assert!(monte_carlo_area(-0.1, -0.2, 10_000, 1, &p).is_err());
        assert!(monte_carlo_area(f64::NEG_INFINITY, 1.0, 10_000, 1, &p).is_err());
    }

    #[test]
    fn near_zero_level_gives_domain_area() {
        let p = GreenParams::default();
        let a = monte_carlo_area(f64::NEG_INFINITY, -1e-9, 1_000, 5, &p).unwrap();
        let b = monte_carlo_area(f64::NEG_INFINITY, -1e-3, 1_000, 5, &p).unwrap();
        assert!(a.estimate > 0.0 && a.estimate < 144.0);
        assert!(a.hits >= b.hits);
    }
}
