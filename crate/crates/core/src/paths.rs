//! Subordinator paths, their inverse, the jump SDE in operational time and
//! the time-changed process `X(t) = Y⁻(S(t))`.
//!
//! Every path `p` draws from three substreams of `(seed, p)`: subordinator
//! increments, Brownian increments and jump-noise increments. Keeping them
//! apart means the stored-path functions and the streaming Monte Carlo loop
//! consume identical random numbers and give bit-identical results.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::exprparse::CoefficientField;
use crate::levy::{JumpNoiseSpec, SubordinatorSpec};
use crate::sampling::{brownian_increment, NoiseSampler, RandomStream, SubordinatorSampler};

pub const DEFAULT_DGAMMA: f64 = 1e-3;
pub const DEFAULT_MAX_STEPS: usize = 100_000_000;

const TAG_SUBORDINATOR: u64 = 1;
const TAG_BROWNIAN: u64 = 2;
const TAG_NOISE: u64 = 3;

/// `T_j = T(jΔγ)` with `T_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    dgamma: f64,
    values: Vec<f64>,
}

impl SubordinatorPath {
    /// Builds a path from explicit values; they must start at 0 and be
    /// nondecreasing.
    pub fn from_values(dgamma: f64, values: Vec<f64>) -> Result<Self> {
        if !(dgamma > 0.0) {
            return domain(format!("Δγ must be positive, got {dgamma}"));
        }
        if values.first() != Some(&0.0) {
            return Err(Error::Contract("subordinator path must start at T_0 = 0".into()));
        }
        if values.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::Contract("subordinator path must be nondecreasing".into()));
        }
        Ok(Self { dgamma, values })
    }

    pub fn dgamma(&self) -> f64 {
        self.dgamma
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    /// `min{j : T_j > t}`.
    fn first_passage_index(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) {
            return domain(format!("inverse subordinator needs t ≥ 0, got {t}"));
        }
        let j = self.values.partition_point(|&v| v <= t);
        if j >= self.values.len() {
            return Err(Error::Range(format!(
                "t={t} is beyond the path horizon T={}; sample a longer path",
                self.last()
            )));
        }
        Ok(j)
    }
}

pub fn sample_subordinator_path(
    spec: &SubordinatorSpec,
    dgamma: f64,
    horizon_t: f64,
    rng: &mut RandomStream,
    max_steps: usize,
) -> Result<SubordinatorPath> {
    let sampler = SubordinatorSampler::new(spec, dgamma)?;
    let mut values = vec![0.0];
    let mut t = 0.0;
    while t <= horizon_t {
        if values.len() > max_steps {
            return Err(Error::Resource(format!(
                "subordinator path needs more than {max_steps} steps to pass t={horizon_t}"
            )));
        }
        t += sampler.sample(rng)?;
        values.push(t);
    }
    Ok(SubordinatorPath { dgamma, values })
}

/// `S(t) = Δγ · min{j : T_j > t}`.
pub fn inverse_subordinator(path: &SubordinatorPath, t: f64) -> Result<f64> {
    Ok(path.first_passage_index(t)? as f64 * path.dgamma)
}

/// `(Y_j, Z_j)` on the γ-grid; `Y_j` is the pre-jump value of step `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPath {
    pub dgamma: f64,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// Samplers and coefficients for one SDE in operational time.
#[derive(Debug, Clone)]
pub struct SdeModel {
    pub coeffs: CoefficientField,
    pub subordinator: SubordinatorSpec,
    pub noise: Option<JumpNoiseSpec>,
    pub dgamma: f64,
    pub x0: f64,
    pub max_steps: usize,
}

impl SdeModel {
    pub fn new(
        coeffs: CoefficientField,
        subordinator: SubordinatorSpec,
        noise: Option<JumpNoiseSpec>,
        dgamma: f64,
    ) -> Result<Self> {
        if !(dgamma > 0.0 && dgamma.is_finite()) {
            return domain(format!("Δγ must be positive, got {dgamma}"));
        }
        Ok(Self {
            coeffs,
            subordinator,
            noise,
            dgamma,
            x0: 0.0,
            max_steps: DEFAULT_MAX_STEPS,
        })
    }
}

/// Per-path stepping state shared by the stored and streaming drivers.
struct Stepper<'a> {
    coeffs: &'a CoefficientField,
    noise: Option<NoiseSampler>,
    dgamma: f64,
    use_sigma: bool,
    use_jump: bool,
    brown: RandomStream,
    noise_rng: RandomStream,
}

impl<'a> Stepper<'a> {
    fn new(
        coeffs: &'a CoefficientField,
        noise: Option<&JumpNoiseSpec>,
        dgamma: f64,
        brown: RandomStream,
        noise_rng: RandomStream,
    ) -> Result<Self> {
        let use_jump = noise.is_some() && !coeffs.jump.is_zero_literal();
        let noise = match noise {
            Some(n) if use_jump => Some(NoiseSampler::new(n, dgamma)?),
            _ => None,
        };
        Ok(Self {
            coeffs,
            noise,
            dgamma,
            use_sigma: !coeffs.sigma.is_zero_literal(),
            use_jump,
            brown,
            noise_rng,
        })
    }

    /// One Euler step from the left limit `(y, z)`.
    fn step(&mut self, y: f64, z: f64, index: usize) -> Result<f64> {
        let fail = |reason: String| Error::PathFailure {
            step: index,
            reason,
        };
        let mut next = y + self.coeffs.drift(y, z) * self.dgamma;
        if self.use_sigma {
            let s = self.coeffs.sigma(y, z).map_err(|e| fail(e.to_string()))?;
            next += s * brownian_increment(self.dgamma, &mut self.brown);
        }
        if self.use_jump {
            if let Some(sampler) = &self.noise {
                let dl = sampler.sample(&mut self.noise_rng).map_err(|e| fail(e.to_string()))?;
                next += self.coeffs.jump(y, z) * dl;
            }
        }
        if !next.is_finite() {
            return Err(fail(format!("state became {next} from Y={y} at T={z}")));
        }
        Ok(next)
    }
}

/// Euler–Maruyama for `dY = F dγ + σ dB + h dL` along `sub_path`, with
/// coefficients evaluated at the left limits `(Y_j, T_j)`.
pub fn integrate_jump_sde(
    coeffs: &CoefficientField,
    sub_path: &SubordinatorPath,
    noise: Option<&JumpNoiseSpec>,
    x0: f64,
    brown: RandomStream,
    noise_rng: RandomStream,
) -> Result<CoupledPath> {
    let dgamma = sub_path.dgamma;
    let mut stepper = Stepper::new(coeffs, noise, dgamma, brown, noise_rng)?;
    let z = sub_path.values.clone();
    let mut y = Vec::with_capacity(z.len());
    y.push(x0);
    for j in 0..z.len() - 1 {
        let next = stepper.step(y[j], z[j], j)?;
        y.push(next);
    }
    Ok(CoupledPath { dgamma, y, z })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeChangedSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// `X(t_k) = Y_{j*-1}` with `j* = min{j : T_j > t_k}`.
pub fn time_change_evaluate(
    cp: &CoupledPath,
    sp: &SubordinatorPath,
    times: &[f64],
) -> Result<TimeChangedSample> {
    if cp.y.len() != sp.values.len() {
        return Err(Error::Contract("coupled path and subordinator path differ in length".into()));
    }
    let values = times
        .iter()
        .map(|&t| sp.first_passage_index(t).map(|j| cp.y[j - 1]))
        .collect::<Result<_>>()?;
    Ok(TimeChangedSample {
        times: times.to_vec(),
        values,
    })
}

fn streams(seed: u64, path: u64) -> (RandomStream, RandomStream, RandomStream) {
    (
        RandomStream::substream(seed, path, TAG_SUBORDINATOR),
        RandomStream::substream(seed, path, TAG_BROWNIAN),
        RandomStream::substream(seed, path, TAG_NOISE),
    )
}

fn check_times(times: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return domain("at least one observation time is required");
    }
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return domain("observation times must be finite and nonnegative");
    }
    Ok(times.iter().copied().fold(0.0, f64::max))
}

/// One path through the stored-path functions.
pub fn simulate_path(model: &SdeModel, times: &[f64], seed: u64, path: u64) -> Result<Vec<f64>> {
    let horizon = check_times(times)?;
    let (mut sub_rng, brown, noise_rng) = streams(seed, path);
    let sp = sample_subordinator_path(
        &model.subordinator,
        model.dgamma,
        horizon,
        &mut sub_rng,
        model.max_steps,
    )?;
    let cp = integrate_jump_sde(&model.coeffs, &sp, model.noise.as_ref(), model.x0, brown, noise_rng)?;
    Ok(time_change_evaluate(&cp, &sp, times)?.values)
}

/// Same draws and arithmetic as [`simulate_path`] without storing the path.
pub fn simulate_path_streaming(
    model: &SdeModel,
    times: &[f64],
    seed: u64,
    path: u64,
) -> Result<Vec<f64>> {
    let horizon = check_times(times)?;
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let (mut sub_rng, brown, noise_rng) = streams(seed, path);
    let sampler = SubordinatorSampler::new(&model.subordinator, model.dgamma)?;
    let mut stepper = Stepper::new(&model.coeffs, model.noise.as_ref(), model.dgamma, brown, noise_rng)?;
    let mut out = vec![0.0; times.len()];
    let mut pending = 0;
    let mut y = model.x0;
    let mut t = 0.0;
    let mut step = 0;
    while t <= horizon {
        if step + 1 > model.max_steps {
            return Err(Error::Resource(format!(
                "subordinator path needs more than {} steps to pass t={horizon}",
                model.max_steps
            )));
        }
        let t_next = t + sampler.sample(&mut sub_rng)?;
        while pending < order.len() && times[order[pending]] < t_next {
            out[order[pending]] = y;
            pending += 1;
        }
        y = stepper.step(y, t, step)?;
        t = t_next;
        step += 1;
    }
    Ok(out)
}

/// Row-major `n_paths × times.len()` sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub n_paths: usize,
    pub failed: usize,
    pub first_failure: Option<String>,
}

impl SampleMatrix {
    pub fn row(&self, p: usize) -> &[f64] {
        let k = self.times.len();
        &self.values[p * k..(p + 1) * k]
    }

    /// Samples of `X(times[k])` across paths.
    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n_paths).map(|p| self.row(p)[k]).collect()
    }
}

/// Runs `f(path)` for every path in index order, on `threads` workers when
/// given. Output order never depends on the worker count.
pub fn parallel_map<T, F>(n: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let run = || (0..n as u64).into_par_iter().map(&f).collect::<Vec<T>>();
    match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Resource(format!("cannot start {k} worker threads: {e}")))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

/// `n_paths` independent paths, path `i` on stream `i`. Fails if more than
/// 1% of the paths fail; otherwise failed paths are dropped and counted.
pub fn run_monte_carlo(
    model: &SdeModel,
    times: &[f64],
    n_paths: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<SampleMatrix> {
    if n_paths == 0 {
        return domain("Monte Carlo needs at least one path");
    }
    check_times(times)?;
    let results = parallel_map(n_paths, threads, |p| simulate_path_streaming(model, times, seed, p))?;
    let mut values = Vec::with_capacity(n_paths * times.len());
    let mut failed = 0;
    let mut first_failure = None;
    for (p, r) in results.into_iter().enumerate() {
        match r {
            Ok(row) => values.extend(row),
            Err(e @ (Error::Resource(_) | Error::Domain(_) | Error::Unsupported(_))) => return Err(e),
            Err(e) => {
                failed += 1;
                first_failure.get_or_insert_with(|| format!("path {p}: {e}"));
            }
        }
    }
    if failed * 100 > n_paths {
        return Err(Error::TooManyPathFailures {
            failed,
            total: n_paths,
            first: first_failure.unwrap_or_default(),
        });
    }
    Ok(SampleMatrix {
        times: times.to_vec(),
        n_paths: n_paths - failed,
        values,
        failed,
        first_failure,
    })
}

/// `S(t)` for `n` independent subordinator paths, streaming.
pub fn inverse_subordinator_samples(
    spec: &SubordinatorSpec,
    dgamma: f64,
    t: f64,
    n: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<f64>> {
    let sampler = SubordinatorSampler::new(spec, dgamma)?;
    parallel_map(n, threads, |p| {
        let mut rng = RandomStream::substream(seed, p, TAG_SUBORDINATOR);
        let mut total = 0.0;
        let mut j = 0usize;
        while total <= t {
            total += sampler.sample(&mut rng)?;
            j += 1;
            if j > DEFAULT_MAX_STEPS {
                return Err(Error::Resource("inverse subordinator exceeded the step cap".into()));
            }
        }
        Ok(j as f64 * dgamma)
    })?
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::empirical_moment;
    use crate::levy::LevyMeasureSpec;
    use statrs::function::gamma::gamma;

    fn model(f: &str, s: &str, h: &str, sub: SubordinatorSpec, noise: Option<JumpNoiseSpec>, dg: f64) -> SdeModel {
        SdeModel::new(CoefficientField::parse(f, s, h).unwrap(), sub, noise, dg).unwrap()
    }

    #[test]
    fn drift_stub_path_is_the_grid() {
        let mut rng = RandomStream::new(0, 0);
        let p = sample_subordinator_path(&SubordinatorSpec::unit_drift(), 0.25, 1.0, &mut rng, 100)
            .unwrap();
        assert_eq!(p.values(), &[0.0, 0.25, 0.5, 0.75, 1.0, 1.25]);
    }

    #[test]
    fn paths_are_monotone_and_hit_the_cap() {
        let spec = SubordinatorSpec::stable(0.7).unwrap();
        for id in 0..50 {
            let mut rng = RandomStream::new(1, id);
            let p = sample_subordinator_path(&spec, 1e-2, 2.0, &mut rng, 1_000_000).unwrap();
            assert_eq!(p.values()[0], 0.0);
            assert!(p.values().windows(2).all(|w| w[1] >= w[0]));
            assert!(p.last() > 2.0);
        }
        let mut rng = RandomStream::new(1, 0);
        let r = sample_subordinator_path(&SubordinatorSpec::unit_drift(), 1e-3, 10.0, &mut rng, 100);
        assert!(matches!(r, Err(Error::Resource(_))));
    }

    #[test]
    fn subordinator_path_laplace_transform() {
        let spec = SubordinatorSpec::stable(0.5).unwrap();
        let n = 10_000;
        let vals: Vec<f64> = (0..n)
            .map(|id| {
                let mut rng = RandomStream::new(2, id);
                let sampler = SubordinatorSampler::new(&spec, 0.01).unwrap();
                let t1: f64 = (0..100).map(|_| sampler.sample(&mut rng).unwrap()).sum();
                (-t1).exp()
            })
            .collect();
        let (m, se) = empirical_moment(&vals, 1).unwrap();
        assert!((m - (-1f64).exp()).abs() <= 4.0 * se);
    }

    #[test]
    fn inverse_of_simple_paths() {
        let dg = 1e-3;
        let line: Vec<f64> = (0..=1000).map(|j| 2.0 * j as f64 * dg).collect();
        let p = SubordinatorPath::from_values(dg, line).unwrap();
        let s = inverse_subordinator(&p, 1.0).unwrap();
        assert!(s >= 0.5 && s <= 0.5 + dg + 1e-12);

        let mut jump: Vec<f64> = (0..1000).map(|j| j as f64 * dg).collect();
        jump.push(3.0);
        let p = SubordinatorPath::from_values(dg, jump).unwrap();
        assert!((inverse_subordinator(&p, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(inverse_subordinator(&p, 3.0), Err(Error::Range(_))));
        assert!(SubordinatorPath::from_values(dg, vec![0.0, 1.0, 0.5]).is_err());
    }

    #[test]
    fn inverse_subordinator_mean() {
        // E[S(1)] = 1/Γ(1.5); checked through P(S(t) ≤ γ) = P(T(γ) ≥ t) as
        // well, using only the subordinator sampler.
        let spec = SubordinatorSpec::stable(0.5).unwrap();
        let samples = inverse_subordinator_samples(&spec, 1e-3, 1.0, 20_000, 3, None).unwrap();
        let (m, se) = empirical_moment(&samples, 1).unwrap();
        let target = 1.0 / gamma(1.5);
        assert!((m - target).abs() <= 4.0 * se + 1e-3, "{m} vs {target}");
        let gamma_probe = 0.8;
        let below = samples.iter().filter(|&&s| s <= gamma_probe).count() as f64 / samples.len() as f64;
        let mut rng = RandomStream::new(4, 0);
        let n = 20_000;
        let exceed = (0..n)
            .filter(|_| {
                crate::sampling::stable_subordinator_increment(0.5, gamma_probe, &mut rng).unwrap() >= 1.0
            })
            .count() as f64
            / n as f64;
        let se = (0.25f64 / n as f64).sqrt() * 2f64.sqrt();
        assert!((below - exceed).abs() <= 4.0 * se + 1e-3, "{below} vs {exceed}");
    }

    #[test]
    fn deterministic_drift_and_brownian_variance() {
        let m = model("1", "0", "0", SubordinatorSpec::unit_drift(), None, 1e-3);
        let mut rng = RandomStream::new(0, 0);
        let sp = sample_subordinator_path(&m.subordinator, 1e-3, 1.0, &mut rng, 10_000).unwrap();
        let cp = integrate_jump_sde(&m.coeffs, &sp, None, 0.0, RandomStream::new(0, 1), RandomStream::new(0, 2))
            .unwrap();
        for (j, y) in cp.y.iter().enumerate() {
            assert!((y - j as f64 * 1e-3).abs() < 1e-12);
        }
        assert_eq!(cp.z, sp.values());

        let m = model("0", "1", "0", SubordinatorSpec::unit_drift(), None, 1e-2);
        let xs = run_monte_carlo(&m, &[1.0], 100_000, 5, None).unwrap().column(0);
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let (v, se) = empirical_moment(&sq, 1).unwrap();
        assert!((v - 1.0).abs() <= 4.0 * se + 0.011, "{v}");
    }

    #[test]
    fn stable_noise_characteristic_function() {
        let noise = JumpNoiseSpec::new(LevyMeasureSpec::symmetric_stable(1.5).unwrap());
        let m = model("0", "0", "1", SubordinatorSpec::unit_drift(), Some(noise), 1e-2);
        let xs = run_monte_carlo(&m, &[0.999], 100_000, 6, None).unwrap().column(0);
        // unit drift: X(0.999) is the sum of 99 noise increments of Δγ = 0.01
        let steps: f64 = (0.999f64 / 0.01).floor();
        let scale = steps * 0.01;
        let cosines: Vec<f64> = xs.iter().map(|x| x.cos()).collect();
        let (mean, se) = empirical_moment(&cosines, 1).unwrap();
        assert!((mean - (-scale).exp()).abs() <= 4.0 * se, "{mean}");
    }

    #[test]
    fn subdiffusive_second_moment() {
        let m = model("0", "1", "0", SubordinatorSpec::stable(0.5).unwrap(), None, 1e-3);
        let xs = run_monte_carlo(&m, &[1.0], 20_000, 7, None).unwrap().column(0);
        let (m2, se) = empirical_moment(&xs, 2).unwrap();
        let target = 1.0 / gamma(1.5);
        assert!((m2 - target).abs() <= 4.0 * se, "{m2} vs {target}");
    }

    #[test]
    fn streaming_matches_stored_paths() {
        let noise = JumpNoiseSpec::new(LevyMeasureSpec::symmetric_stable(1.2).unwrap());
        let m = model("-x", "0.5", "1 + 0.1*sin(x)", SubordinatorSpec::stable(0.7).unwrap(), Some(noise), 1e-2);
        let times = [0.7, 0.1, 1.5, 0.0];
        for p in 0..20 {
            let a = simulate_path(&m, &times, 9, p).unwrap();
            let b = simulate_path_streaming(&m, &times, 9, p).unwrap();
            assert_eq!(a, b);
            assert_eq!(a[3], 0.0);
        }
        let one = run_monte_carlo(&m, &times, 1, 9, None).unwrap();
        assert_eq!(one.row(0), simulate_path(&m, &times, 9, 0).unwrap().as_slice());
    }

    #[test]
    fn worker_count_does_not_change_samples() {
        let m = model("-x", "1.41421356", "0", SubordinatorSpec::tempered(0.6, 1.0).unwrap(), None, 1e-2);
        let a = run_monte_carlo(&m, &[0.5, 1.0], 200, 10, Some(1)).unwrap();
        let b = run_monte_carlo(&m, &[0.5, 1.0], 200, 10, Some(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn drift_stub_time_change_is_plain_sde() {
        // dyadic step: the drift-stub grid sums exactly
        let dg = 1.0 / 1024.0;
        let m = model("-x", "1", "0", SubordinatorSpec::unit_drift(), None, dg);
        let mut sub_rng = RandomStream::new(0, 0);
        let sp = sample_subordinator_path(&m.subordinator, dg, 1.0, &mut sub_rng, 10_000).unwrap();
        let cp = integrate_jump_sde(&m.coeffs, &sp, None, 0.0, RandomStream::new(1, 0), RandomStream::new(2, 0))
            .unwrap();
        let x = time_change_evaluate(&cp, &sp, &[0.25, 0.5]).unwrap();
        assert_eq!(x.values[0], cp.y[256]);
        assert_eq!(x.values[1], cp.y[512]);
    }

    #[test]
    fn zero_path_and_plateaus() {
        let m = model("0", "0", "0", SubordinatorSpec::stable(0.5).unwrap(), None, 1e-2);
        let xs = run_monte_carlo(&m, &[0.5, 1.0], 10, 0, None).unwrap();
        assert!(xs.values.iter().all(|v| *v == 0.0));

        let m = model("0", "1", "0", SubordinatorSpec::stable(0.5).unwrap(), None, 1e-2);
        let times: Vec<f64> = (1..=100).map(|k| k as f64 * 0.01).collect();
        let mut sub_rng = RandomStream::substream(3, 0, TAG_SUBORDINATOR);
        let sp = sample_subordinator_path(&m.subordinator, 1e-2, 1.0, &mut sub_rng, 1_000_000).unwrap();
        let cp = integrate_jump_sde(
            &m.coeffs,
            &sp,
            None,
            0.0,
            RandomStream::substream(3, 0, TAG_BROWNIAN),
            RandomStream::substream(3, 0, TAG_NOISE),
        )
        .unwrap();
        let x = time_change_evaluate(&cp, &sp, &times).unwrap();
        let mut plateaus = 0;
        for a in 0..times.len() {
            for b in a + 1..times.len() {
                let (sa, sb) = (
                    inverse_subordinator(&sp, times[a]).unwrap(),
                    inverse_subordinator(&sp, times[b]).unwrap(),
                );
                assert!(sa <= sb);
                if sa == sb {
                    plateaus += 1;
                    assert_eq!(x.values[a], x.values[b]);
                }
            }
        }
        assert!(plateaus > 0);
    }

    #[test]
    fn singular_coefficient_aborts() {
        let m = model("1/t", "0", "0", SubordinatorSpec::stable(0.5).unwrap(), None, 1e-2);
        let r = run_monte_carlo(&m, &[1.0], 50, 0, None);
        assert!(matches!(r, Err(Error::TooManyPathFailures { failed: 50, total: 50, .. })), "{r:?}");
        let m = model("0", "x", "0", SubordinatorSpec::stable(0.5).unwrap(), None, 1e-2);
        let mut rng = RandomStream::new(0, 0);
        let sp = sample_subordinator_path(&m.subordinator, 1e-2, 1.0, &mut rng, 1_000_000).unwrap();
        let r = integrate_jump_sde(&m.coeffs, &sp, None, -1.0, RandomStream::new(1, 0), RandomStream::new(2, 0));
        assert!(matches!(r, Err(Error::PathFailure { step: 0, .. })));
    }
}
