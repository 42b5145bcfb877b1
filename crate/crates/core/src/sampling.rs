//! Random streams and increment samplers.
//!
//! Streams are ChaCha8 generators keyed by `(master_seed, stream_id)`; the
//! stream id selects one of ChaCha's 2^64 independent streams, so path `p`
//! can be simulated on any worker without coordinating with the others.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::levy::{JumpNoiseSpec, LevyFamily, SubordinatorKind, SubordinatorSpec};

pub const MAX_REJECTIONS: usize = 1_000_000;
pub const MAX_EXPECTED_JUMPS: f64 = 1e7;
/// Upper bound on the expected jump count per step used when picking a
/// default small-jump cutoff.
pub const DEFAULT_JUMPS_PER_STEP: f64 = 100.0;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for one `(master_seed, stream_id)` pair.
#[derive(Debug, Clone)]
pub struct RandomStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    /// An independent stream for one component (`tag`) of the same path.
    pub fn substream(master_seed: u64, stream_id: u64, tag: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(master_seed ^ splitmix64(tag)));
        rng.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn exponential(&mut self) -> f64 {
        self.rng.sample(Exp1)
    }

    pub fn poisson(&mut self, mean: f64) -> Result<u64> {
        if mean <= 0.0 {
            return Ok(0);
        }
        let d = Poisson::new(mean)
            .map_err(|e| Error::NumericalFailure(format!("Poisson({mean}): {e}")))?;
        Ok(d.sample(&mut self.rng) as u64)
    }
}

/// `S` with `E[e^{-uS}] = e^{-u^α}` (Kanter's representation).
fn positive_stable_unit(alpha: f64, rng: &mut RandomStream) -> f64 {
    if alpha == 0.5 {
        // Lévy distribution: S = 1 / (2 Z²).
        let z = rng.normal();
        return 0.5 / (z * z);
    }
    let u = PI * rng.uniform();
    let e = rng.exponential();
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    a * ((((1.0 - alpha) * u).sin()) / e).powf((1.0 - alpha) / alpha)
}

pub fn stable_subordinator_increment(alpha: f64, dt: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("stable subordinator needs α in (0, 1), got {alpha}"));
    }
    if !(dt > 0.0) {
        return domain(format!("increment length must be positive, got {dt}"));
    }
    Ok(dt.powf(1.0 / alpha) * positive_stable_unit(alpha, rng))
}

pub fn tempered_stable_increment(
    alpha: f64,
    lambda: f64,
    dt: f64,
    rng: &mut RandomStream,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("tempered stable needs α in (0, 1), got {alpha}"));
    }
    if !(lambda >= 0.0) {
        return domain(format!("tempering rate must be nonnegative, got {lambda}"));
    }
    if !(dt > 0.0) {
        return domain(format!("increment length must be positive, got {dt}"));
    }
    let scale = dt.powf(1.0 / alpha);
    for _ in 0..MAX_REJECTIONS {
        let s = scale * positive_stable_unit(alpha, rng);
        if lambda == 0.0 || rng.uniform() <= (-lambda * s).exp() {
            return Ok(s);
        }
    }
    Err(Error::NumericalFailure(format!(
        "tempered stable rejection exceeded {MAX_REJECTIONS} iterations (α={alpha}, λ={lambda}, dt={dt})"
    )))
}

/// `X` with `E[e^{iuX}] = e^{-|u|^α}` (Chambers–Mallows–Stuck).
fn symmetric_stable_unit(alpha: f64, rng: &mut RandomStream) -> f64 {
    let v = PI * (rng.uniform() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w = rng.exponential();
    (alpha * v).sin() / v.cos().powf(1.0 / alpha)
        * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

pub fn symmetric_stable_increment(alpha: f64, dt: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return domain(format!("symmetric stable needs α in (0, 2), got {alpha}"));
    }
    if !(dt > 0.0) {
        return domain(format!("increment length must be positive, got {dt}"));
    }
    Ok(dt.powf(1.0 / alpha) * symmetric_stable_unit(alpha, rng))
}

pub fn brownian_increment(dt: f64, rng: &mut RandomStream) -> f64 {
    dt.sqrt() * rng.normal()
}

/// Result of one compound-Poisson step of a truncated symmetric measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedIncrement {
    /// Large jumps plus the Gaussian stand-in for jumps below ε.
    pub jump_sum: f64,
    /// `-dt ∫_{ε<|x|<c} x ν(dx)`; zero for symmetric measures.
    pub compensator_drift: f64,
    pub jump_count: u64,
}

pub fn truncated_symmetric_levy_increment(
    noise: &JumpNoiseSpec,
    dt: f64,
    eps: f64,
    gaussian_correction: bool,
    rng: &mut RandomStream,
) -> Result<TruncatedIncrement> {
    let (alpha, r_max) = match noise.measure.family() {
        LevyFamily::TruncatedSymmetricStable { alpha, r_max } => (alpha, r_max),
        other => {
            return Err(Error::Unsupported(format!(
                "compound-Poisson sampler needs a truncated symmetric measure, got {other:?}"
            )))
        }
    };
    if !(eps > 0.0 && eps < noise.jump_cutoff) {
        return domain(format!(
            "small-jump cutoff ε={eps} must lie in (0, {})",
            noise.jump_cutoff
        ));
    }
    let m = &noise.measure;
    let one_side = m.tail(eps)?;
    let mean_count = dt * 2.0 * one_side;
    if mean_count > MAX_EXPECTED_JUMPS {
        return Err(Error::Resource(format!(
            "expected {mean_count:.3e} jumps per step; increase the small-jump cutoff ε={eps}"
        )));
    }
    let count = rng.poisson(mean_count)?;
    let c = m.stable_constant();
    let r_pow = r_max.powf(-alpha);
    let mut sum = 0.0;
    for _ in 0..count {
        // Inverse of ν((x, r_max)) / ν((ε, r_max)).
        let u = rng.uniform();
        let x = (alpha * u * one_side / c + r_pow).powf(-1.0 / alpha);
        sum += if rng.uniform() < 0.5 { -x } else { x };
    }
    if gaussian_correction {
        let var = dt * m.moment_range(2, 0.0, eps)?;
        sum += var.sqrt() * rng.normal();
    }
    Ok(TruncatedIncrement {
        jump_sum: sum,
        compensator_drift: 0.0,
        jump_count: count,
    })
}

/// Default ε: the Gaussian part carries 10⁻⁴ of the jump variance, unless
/// that would exceed [`DEFAULT_JUMPS_PER_STEP`] expected jumps per step.
pub fn default_small_jump_cutoff(noise: &JumpNoiseSpec, dt: f64) -> Result<f64> {
    match noise.measure.family() {
        LevyFamily::TruncatedSymmetricStable { alpha, r_max } => {
            let variance_rule = r_max * 1e-4f64.powf(1.0 / (2.0 - alpha));
            let per_side = DEFAULT_JUMPS_PER_STEP / (2.0 * dt);
            let c = noise.measure.stable_constant();
            let count_rule = (alpha * per_side / c + r_max.powf(-alpha)).powf(-1.0 / alpha);
            Ok(variance_rule.max(count_rule).min(0.5 * noise.jump_cutoff.min(r_max)))
        }
        _ => Err(Error::Unsupported(
            "small-jump cutoff only applies to truncated measures".into(),
        )),
    }
}

/// Increment sampler for a subordinator on a fixed `dγ`.
#[derive(Debug, Clone, Copy)]
pub enum SubordinatorSampler {
    Stable { alpha: f64, scale: f64 },
    Tempered { alpha: f64, lambda: f64, dgamma: f64 },
    Drift { dgamma: f64 },
}

impl SubordinatorSampler {
    pub fn new(spec: &SubordinatorSpec, dgamma: f64) -> Result<Self> {
        if !(dgamma > 0.0) {
            return domain(format!("dγ must be positive, got {dgamma}"));
        }
        Ok(match spec.kind() {
            SubordinatorKind::UnitDrift => Self::Drift { dgamma },
            SubordinatorKind::Levy(m) => match m.family() {
                LevyFamily::OneSidedStable { alpha } => Self::Stable {
                    alpha,
                    scale: dgamma.powf(1.0 / alpha),
                },
                LevyFamily::TemperedStable { alpha, lambda } => Self::Tempered {
                    alpha,
                    lambda,
                    dgamma,
                },
                other => {
                    return Err(Error::Unsupported(format!(
                        "no subordinator sampler for {other:?}"
                    )))
                }
            },
        })
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Result<f64> {
        match *self {
            Self::Stable { alpha, scale } => Ok(scale * positive_stable_unit(alpha, rng)),
            Self::Tempered {
                alpha,
                lambda,
                dgamma,
            } => tempered_stable_increment(alpha, lambda, dgamma, rng),
            Self::Drift { dgamma } => Ok(dgamma),
        }
    }
}

/// Increment sampler for the jump noise `L` on a fixed `dγ`.
#[derive(Debug, Clone, Copy)]
pub enum NoiseSampler {
    Symmetric { alpha: f64, scale: f64 },
    Truncated { noise: JumpNoiseSpec, dgamma: f64, eps: f64 },
    /// Totally skewed stable or tempered, shifted by `-dγ ∫_B x ν(dx)`.
    OneSided { alpha: f64, lambda: f64, dgamma: f64, shift: f64 },
}

impl NoiseSampler {
    pub fn new(noise: &JumpNoiseSpec, dgamma: f64) -> Result<Self> {
        if !(dgamma > 0.0) {
            return domain(format!("dγ must be positive, got {dgamma}"));
        }
        Ok(match noise.measure.family() {
            LevyFamily::SymmetricStable { alpha } => Self::Symmetric {
                alpha,
                scale: dgamma.powf(1.0 / alpha),
            },
            LevyFamily::TruncatedSymmetricStable { .. } => {
                let eps = match noise.small_jump_cutoff {
                    Some(e) => e,
                    None => default_small_jump_cutoff(noise, dgamma)?,
                };
                Self::Truncated {
                    noise: *noise,
                    dgamma,
                    eps,
                }
            }
            LevyFamily::OneSidedStable { alpha } => Self::OneSided {
                alpha,
                lambda: 0.0,
                dgamma,
                shift: -dgamma * noise.compensator_mean()?,
            },
            LevyFamily::TemperedStable { alpha, lambda } => Self::OneSided {
                alpha,
                lambda,
                dgamma,
                shift: -dgamma * noise.compensator_mean()?,
            },
        })
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Result<f64> {
        match self {
            Self::Symmetric { alpha, scale } => Ok(scale * symmetric_stable_unit(*alpha, rng)),
            Self::Truncated { noise, dgamma, eps } => {
                let inc = truncated_symmetric_levy_increment(noise, *dgamma, *eps, true, rng)?;
                Ok(inc.jump_sum + inc.compensator_drift)
            }
            Self::OneSided {
                alpha,
                lambda,
                dgamma,
                shift,
            } => Ok(tempered_stable_increment(*alpha, *lambda, *dgamma, rng)? + shift),
        }
    }
}
