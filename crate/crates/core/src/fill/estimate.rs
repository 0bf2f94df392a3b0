use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fill_sequential, FillError, MAX_HALVINGS};
use crate::geometry::{BoxDomain, Domain, Point};
use crate::spacing::SpacingFn;

static PACKING: [OnceLock<f64>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];

/// Pilot spacing per dimension for the packing calibration.
const PILOT_H: [f64; 3] = [1e-3, 0.02, 0.06];

/// Points per unit of `h^-d` volume, measured once per dimension by a
/// sequential fill of the unit box with constant spacing.
pub fn packing_constant<const D: usize>() -> f64 {
    assert!((1..=3).contains(&D), "packing constant is calibrated for 1-3 dimensions");
    *PACKING[D - 1].get_or_init(|| {
        let h = PILOT_H[D - 1];
        let dom = BoxDomain::<D>::unit();
        let seed = dom.bounding_box().center();
        let set = fill_sequential(&dom, &SpacingFn::constant(h), &[seed], 12, 0, None)
            .expect("pilot fill of the unit box cannot fail");
        set.len() as f64 * h.powi(D as i32)
    })
}

/// Monte Carlo estimate of how many points a fill with spacing `h` places.
///
/// `n = c_d * vol(bbox) / samples * sum(h(x)^-d)` over the samples inside the
/// domain, where `c_d` is [`packing_constant`].
pub fn estimate_point_count<const D: usize, G: Domain<D> + ?Sized>(
    domain: &G,
    h: &SpacingFn,
    mc_samples: usize,
    rng_seed: u64,
) -> Result<usize, FillError> {
    if mc_samples < 1000 {
        return Err(FillError::InvalidConfig(format!("need at least 1000 Monte Carlo samples, got {mc_samples}")));
    }
    let bb = domain.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut sum = 0.0;
    let mut inside = 0usize;
    for _ in 0..mc_samples {
        let p = Point(std::array::from_fn(|k| {
            let (lo, hi) = (bb.lo.0[k], bb.hi.0[k]);
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        }));
        if domain.contains(&p) {
            inside += 1;
            sum += h.at(&p)?.powi(-(D as i32));
        }
    }
    if inside == 0 {
        return Err(FillError::NoSamplesInside);
    }
    let n = packing_constant::<D>() * bb.volume() / mc_samples as f64 * sum;
    Ok((n.round() as usize).max(1))
}

/// Copy of `h` rescaled so that the estimated point count is `target`.
pub fn spacing_for_target<const D: usize, G: Domain<D> + ?Sized>(
    domain: &G,
    h: &SpacingFn,
    target: usize,
    mc_samples: usize,
    rng_seed: u64,
) -> Result<SpacingFn, FillError> {
    if target == 0 {
        return Err(FillError::InvalidConfig("target point count must be positive".into()));
    }
    let est = estimate_point_count(domain, h, mc_samples, rng_seed)?;
    Ok(h.scaled((est as f64 / target as f64).powf(1.0 / D as f64)))
}

/// Generates at least `n_s` well-separated seeds.
///
/// Starts from `a = 10 (n_p / n_s)^(1/d)` and fills with spacing `a h`,
/// halving `a` until the fill yields `n_s` points. The factor never drops
/// below 1, which keeps the seeds at least `h` apart.
pub fn bootstrap_seeds<const D: usize, G: Domain<D> + ?Sized>(
    domain: &G,
    h: &SpacingFn,
    user_seeds: &[Point<D>],
    n_s: usize,
    n_p_estimate: usize,
    n_c: usize,
    rng_seed: u64,
) -> Result<Vec<Point<D>>, FillError> {
    super::sequential::check_seeds(domain, user_seeds)?;
    if n_s == 0 || n_p_estimate == 0 {
        return Err(FillError::InvalidConfig("n_s and n_p must be positive".into()));
    }
    if user_seeds.len() >= n_s {
        return Ok(user_seeds.to_vec());
    }
    let mut a = initial_factor(n_p_estimate, n_s, D);
    let mut got = user_seeds.len();
    for _ in 0..=MAX_HALVINGS {
        let set = fill_sequential(domain, &h.scaled(a), user_seeds, n_c, rng_seed, None)?;
        if set.len() >= n_s {
            return Ok(set.positions());
        }
        got = set.len();
        if a == 1.0 {
            break;
        }
        a = (a / 2.0).max(1.0);
    }
    Err(FillError::BootstrapExhausted { requested: n_s, got })
}

/// `10 (n_p / n_s)^(1/d)`.
pub fn initial_factor(n_p: usize, n_s: usize, dim: usize) -> f64 {
    10.0 * (n_p as f64 / n_s as f64).powf(1.0 / dim as f64)
}
