//! Time signals: reference inputs and bounded disturbances.
//!
//! Every signal is a pure function of time. Bounds are certified
//! analytically at construction: a vector of sinusoids with amplitudes
//! a_i satisfies sup_t ||s(t)|| <= sqrt(sum a_i^2) (root-sum-square; an
//! upper bound, not necessarily attained, so it is conservative).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::scalar::Real;

/// One sinusoid a * sin(omega t + phase).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidChannel<T> {
    pub amplitude: T,
    pub omega: T,
    pub phase: T,
}

impl<T: Real> SinusoidChannel<T> {
    #[inline]
    fn eval(&self, t: T) -> T {
        self.amplitude * (self.omega * t + self.phase).sin()
    }

    #[inline]
    fn eval_derivative(&self, t: T) -> T {
        self.amplitude * self.omega * (self.omega * t + self.phase).cos()
    }
}

/// Reference input r(t), one channel per input dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSignal<T> {
    Zero,
    Constant(Vector<T>),
    Sinusoid(Vec<SinusoidChannel<T>>),
}

impl<T: Real> ReferenceSignal<T> {
    pub fn eval(&self, t: T, dim: usize) -> Vector<T> {
        match self {
            ReferenceSignal::Zero => Vector::zeros(dim),
            ReferenceSignal::Constant(c) => c.clone(),
            ReferenceSignal::Sinusoid(channels) => {
                Vector::from_vec(channels.iter().map(|c| c.eval(t)).collect())
            }
        }
    }

    /// d/dt r(t); used by the baseline controller's algebraic input rate.
    pub fn eval_derivative(&self, t: T, dim: usize) -> Vector<T> {
        match self {
            ReferenceSignal::Zero | ReferenceSignal::Constant(_) => Vector::zeros(dim),
            ReferenceSignal::Sinusoid(channels) => {
                Vector::from_vec(channels.iter().map(|c| c.eval_derivative(t)).collect())
            }
        }
    }

    /// Analytic bound r_bar >= sup ||r(t)||.
    pub fn r_bar(&self) -> T {
        match self {
            ReferenceSignal::Zero => T::zero(),
            ReferenceSignal::Constant(c) => c.norm(),
            ReferenceSignal::Sinusoid(channels) => channels
                .iter()
                .map(|c| c.amplitude * c.amplitude)
                .fold(T::zero(), |s, a| s + a)
                .sqrt(),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            ReferenceSignal::Zero => None,
            ReferenceSignal::Constant(c) => Some(c.dim()),
            ReferenceSignal::Sinusoid(ch) => Some(ch.len()),
        }
    }
}

/// Bounded disturbance d(t) with sup ||d(t)|| < bound, certified at
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceSignal<T> {
    Zero,
    /// One sinusoid per state channel.
    Sinusoid {
        channels: Vec<SinusoidChannel<T>>,
        bound: T,
    },
    /// Smooth pseudo-random multisine, reproducible from the seed.
    RandomSmooth {
        channels: Vec<Vec<SinusoidChannel<T>>>,
        bound: T,
        seed: u64,
    },
}

impl<T: Real> DisturbanceSignal<T> {
    pub fn sinusoid(channels: Vec<SinusoidChannel<T>>, bound: T) -> Result<Self> {
        let rss = channels
            .iter()
            .map(|c| c.amplitude * c.amplitude)
            .fold(T::zero(), |s, a| s + a)
            .sqrt();
        if rss > bound {
            return Err(Error::InvalidInput(format!(
                "disturbance amplitude RSS {rss:e} exceeds declared bound {bound:e}"
            )));
        }
        Ok(DisturbanceSignal::Sinusoid { channels, bound })
    }

    /// Builds a reproducible smooth disturbance: 8 sinusoids per channel
    /// with amplitudes scaled so the analytic RSS bound is 0.99 * bound.
    pub fn random_smooth(dim: usize, bound: T, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut channels: Vec<Vec<SinusoidChannel<T>>> = Vec::with_capacity(dim);
        for _ in 0..dim {
            let ch: Vec<SinusoidChannel<T>> = (0..8)
                .map(|_| SinusoidChannel {
                    amplitude: T::of(rng.gen_range(0.2..1.0)),
                    omega: T::of(rng.gen_range(0.3..3.0)),
                    phase: T::of(rng.gen_range(0.0..std::f64::consts::TAU)),
                })
                .collect();
            channels.push(ch);
        }
        // per-channel sup <= sum of |amplitudes|; overall sup <= RSS of those
        let rss = channels
            .iter()
            .map(|ch| {
                let s: T = ch.iter().map(|c| c.amplitude.abs()).sum();
                s * s
            })
            .fold(T::zero(), |s, a| s + a)
            .sqrt();
        let scale = T::of(0.99) * bound / rss;
        for ch in &mut channels {
            for c in ch.iter_mut() {
                c.amplitude = c.amplitude * scale;
            }
        }
        DisturbanceSignal::RandomSmooth {
            channels,
            bound,
            seed,
        }
    }

    pub fn eval(&self, t: T, dim: usize) -> Vector<T> {
        match self {
            DisturbanceSignal::Zero => Vector::zeros(dim),
            DisturbanceSignal::Sinusoid { channels, .. } => {
                Vector::from_vec(channels.iter().map(|c| c.eval(t)).collect())
            }
            DisturbanceSignal::RandomSmooth { channels, .. } => Vector::from_vec(
                channels
                    .iter()
                    .map(|ch| ch.iter().map(|c| c.eval(t)).fold(T::zero(), |s, v| s + v))
                    .collect(),
            ),
        }
    }

    /// Declared bound on sup ||d(t)||.
    pub fn bound(&self) -> T {
        match self {
            DisturbanceSignal::Zero => T::zero(),
            DisturbanceSignal::Sinusoid { bound, .. }
            | DisturbanceSignal::RandomSmooth { bound, .. } => *bound,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            DisturbanceSignal::Zero => None,
            DisturbanceSignal::Sinusoid { channels, .. } => Some(channels.len()),
            DisturbanceSignal::RandomSmooth { channels, .. } => Some(channels.len()),
        }
    }
}
