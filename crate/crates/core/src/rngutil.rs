//! Seeded sampling helpers shared by the verification and simulation code.
//!
//! Gaussian variates use the polar method on an explicitly seeded generator
//! so that results are reproducible across platforms.

use rand::Rng;

/// One standard normal variate via the polar (Box-Muller-style) method.
pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    standard_normal_pair(rng).0
}

/// Two independent standard normal variates.
pub(crate) fn standard_normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    loop {
        let v1 = 2.0 * rng.random::<f64>() - 1.0;
        let v2 = 2.0 * rng.random::<f64>() - 1.0;
        let s = v1 * v1 + v2 * v2;
        if s > 0.0 && s < 1.0 {
            let f = (-2.0 * s.ln() / s).sqrt();
            return (v1 * f, v2 * f);
        }
    }
}

/// Uniform draw from the closed Euclidean ball of the given radius.
pub(crate) fn sample_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
        return dir.into_iter().map(|x| x * r / norm).collect();
    }
}
