use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// How an ensemble draws per-member training weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resampling {
    /// Weight `k ~ Poisson(lambda)`.
    Poisson(f64),
    /// Every member sees every sample with this weight.
    Fixed(u32),
}

impl Resampling {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> u32 {
        match self {
            Self::Poisson(lambda) => poisson(lambda, rng),
            Self::Fixed(k) => k,
        }
    }
}

pub(crate) fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(lambda).expect("positive poisson rate");
    let k: f64 = dist.sample(rng);
    k as u32
}
