//! Seeded, portable random sampling helpers. All generators in this crate
//! draw from ChaCha8 streams in a fixed documented order (matrix entries
//! row-major), so runs reproduce bit-for-bit across platforms.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Standard normal draws via Box-Muller.
pub(crate) fn standard_normal_vec(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out.push(r * theta.cos());
        if out.len() < count {
            out.push(r * theta.sin());
        }
    }
    out
}
