//! Density estimates from samples and distances between them.

use crate::error::{domain, Error, Result};

/// Uniform grid `x_i = x_min + i Δx`, `i = 0..n_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_x: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_x: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return domain(format!("grid needs x_min < x_max, got [{x_min}, {x_max}]"));
        }
        if n_x < 3 {
            return domain(format!("grid needs at least 3 points, got {n_x}"));
        }
        Ok(Self { x_min, x_max, n_x })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_x
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_x - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| self.x(i)).collect()
    }

    /// Index of the bin `[x_i - Δx/2, x_i + Δx/2)` containing `v`.
    pub fn bin_of(&self, v: f64) -> Option<usize> {
        let k = ((v - self.x_min) / self.dx() + 0.5).floor();
        if k >= 0.0 && k < self.n_x as f64 {
            Some(k as usize)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityMethod {
    Histogram,
    GaussianKde { bandwidth: f64 },
}

/// How to estimate; `None` bandwidth selects Silverman's rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorSpec {
    Histogram,
    GaussianKde { bandwidth: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub method: DensityMethod,
    pub n_samples: usize,
    /// Probability mass that fell outside the grid's bins.
    pub out_of_range_mass: f64,
    /// Standard error of each `q_i` (KDE only).
    pub std_errors: Option<Vec<f64>>,
}

impl DensityEstimate {
    /// `Σ q_i Δx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `1.06 min(sd, IQR/1.34) N^{-1/5}`, falling back to whichever spread is
/// nonzero.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let finite: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 2 {
        return domain("KDE needs at least two finite samples");
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let sd = (finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = finite;
    sorted.sort_by(f64::total_cmp);
    let iqr = (quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => {
            return domain("all samples are identical; KDE bandwidth is degenerate");
        }
    };
    Ok(1.06 * spread * n.powf(-0.2))
}

pub fn estimate_density(samples: &[f64], grid: &Grid, spec: EstimatorSpec) -> Result<DensityEstimate> {
    let n = samples.len();
    if n == 0 {
        return domain("density estimation needs at least one sample");
    }
    let dx = grid.dx();
    match spec {
        EstimatorSpec::Histogram => {
            let mut counts = vec![0u64; grid.len()];
            let mut outside = 0u64;
            for &v in samples {
                match grid.bin_of(v) {
                    Some(i) if v.is_finite() => counts[i] += 1,
                    _ => outside += 1,
                }
            }
            let scale = 1.0 / (n as f64 * dx);
            Ok(DensityEstimate {
                grid: *grid,
                values: counts.iter().map(|&c| c as f64 * scale).collect(),
                method: DensityMethod::Histogram,
                n_samples: n,
                out_of_range_mass: outside as f64 / n as f64,
                std_errors: None,
            })
        }
        EstimatorSpec::GaussianKde { bandwidth } => {
            if n < 2 {
                return domain("KDE needs at least two samples");
            }
            let h = match bandwidth {
                Some(h) if h > 0.0 && h.is_finite() => h,
                Some(h) => return domain(format!("KDE bandwidth must be positive, got {h}")),
                None => silverman_bandwidth(samples)?,
            };
            let mut sum = vec![0.0; grid.len()];
            let mut sum_sq = vec![0.0; grid.len()];
            let reach = 10.0 * h;
            let mut outside = 0.0;
            let mut weights = Vec::new();
            for &v in samples {
                if !v.is_finite() {
                    outside += 1.0;
                    continue;
                }
                // Kernel sampled on the grid's lattice extended past its ends,
                // normalized to unit lattice mass; the part landing beyond the
                // grid is the reported out-of-range mass.
                let first = ((v - reach - grid.x_min()) / dx).ceil();
                let last = ((v + reach - grid.x_min()) / dx).floor();
                weights.clear();
                let mut total = 0.0;
                let mut k = first;
                while k <= last {
                    let z = (grid.x_min() + k * dx - v) / h;
                    let w = (-0.5 * z * z).exp();
                    weights.push(w);
                    total += w;
                    k += 1.0;
                }
                if total == 0.0 {
                    outside += 1.0;
                    continue;
                }
                let scale = 1.0 / (total * dx);
                let mut inside = 0.0;
                for (offset, w) in weights.iter().enumerate() {
                    let idx = first + offset as f64;
                    if idx < 0.0 || idx >= grid.len() as f64 {
                        continue;
                    }
                    let i = idx as usize;
                    let q = w * scale;
                    sum[i] += q;
                    sum_sq[i] += q * q;
                    inside += w;
                }
                outside += 1.0 - inside / total;
            }
            let nf = n as f64;
            let values: Vec<f64> = sum.iter().map(|s| s / nf).collect();
            let std_errors = values
                .iter()
                .zip(&sum_sq)
                .map(|(m, s2)| ((s2 / nf - m * m).max(0.0) / nf).sqrt())
                .collect();
            Ok(DensityEstimate {
                grid: *grid,
                values,
                method: DensityMethod::GaussianKde { bandwidth: h },
                n_samples: n,
                out_of_range_mass: outside / nf,
                std_errors: Some(std_errors),
            })
        }
    }
}

fn check_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::Contract(format!("grid mismatch: {a:?} vs {b:?}")));
    }
    Ok(())
}

/// `Σ |a_i - b_i| Δx` over grid values.
pub fn l1_distance_values(grid: &Grid, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != grid.len() || b.len() != grid.len() {
        return Err(Error::Contract("value vectors do not match the grid".into()));
    }
    Ok(a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum::<f64>() * grid.dx())
}

pub fn l1_distance(a: &DensityEstimate, b: &DensityEstimate) -> Result<f64> {
    check_same_grid(&a.grid, &b.grid)?;
    l1_distance_values(&a.grid, &a.values, &b.values)
}

/// `sup |F_N - F_q|` over the samples, where `F_q` is the step CDF of the
/// grid solution, `F_q(x) = Σ_{x_i ≤ x} q_i Δx`. Both one-sided limits are
/// compared at every sample.
pub fn ks_distance(samples: &[f64], grid: &Grid, q: &[f64]) -> Result<f64> {
    if q.len() != grid.len() {
        return Err(Error::Contract("grid solution does not match the grid".into()));
    }
    if samples.is_empty() {
        return Ok(0.0);
    }
    let dx = grid.dx();
    let mut cdf = Vec::with_capacity(q.len());
    let mut acc = 0.0;
    for &v in q {
        acc += v.max(0.0) * dx;
        cdf.push(acc);
    }
    // F_q(x) and F_q(x-) via the number of nodes at or below / strictly below x.
    let step = |count: usize| if count == 0 { 0.0 } else { cdf[count - 1] };
    let nodes_le = |x: f64| -> usize {
        let k = ((x - grid.x_min()) / dx).floor();
        let mut c = (k + 1.0).clamp(0.0, grid.len() as f64) as usize;
        while c > 0 && grid.x(c - 1) > x {
            c -= 1;
        }
        while c < grid.len() && grid.x(c) <= x {
            c += 1;
        }
        c
    };
    let nodes_lt = |x: f64| -> usize {
        let mut c = nodes_le(x);
        while c > 0 && grid.x(c - 1) >= x {
            c -= 1;
        }
        c
    };
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut worst = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let emp_left = i as f64 / n;
        let emp_right = j as f64 / n;
        worst = worst
            .max((emp_right - step(nodes_le(x))).abs())
            .max((emp_left - step(nodes_lt(x))).abs());
        i = j;
    }
    Ok(worst.min(1.0))
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `(1/N) Σ x^k` and its standard error.
pub fn empirical_moment(samples: &[f64], k: u32) -> Result<(f64, f64)> {
    if k == 0 {
        return domain("moment order must be at least 1");
    }
    if samples.is_empty() {
        return domain("moment of an empty sample");
    }
    let n = samples.len() as f64;
    let powers: Vec<f64> = samples.iter().map(|x| x.powi(k as i32)).collect();
    let mean = powers.iter().sum::<f64>() / n;
    let se = if samples.len() > 1 {
        (powers.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{self, QuadOptions};
    use std::f64::consts::PI;
    use crate::sampling::RandomStream;
    use proptest::prelude::*;

    fn phi(x: f64, s: f64) -> f64 {
        (-0.5 * (x / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())
    }

    #[test]
    fn histogram_point_mass() {
        let grid = Grid::new(-1.0, 1.0, 21).unwrap();
        let d = estimate_density(&[0.3; 10], &grid, EstimatorSpec::Histogram).unwrap();
        let i = grid.bin_of(0.3).unwrap();
        assert_eq!(i, 13);
        assert!((d.values[i] - 1.0 / grid.dx()).abs() < 1e-9);
        assert_eq!(d.values.iter().filter(|&&v| v != 0.0).count(), 1);
        assert!((d.mass() - 1.0).abs() < 1e-9);
        assert_eq!(d.out_of_range_mass, 0.0);

        let d = estimate_density(&[5.0, -7.0, f64::NAN], &grid, EstimatorSpec::Histogram).unwrap();
        assert_eq!(d.mass(), 0.0);
        assert_eq!(d.out_of_range_mass, 1.0);
    }

    #[test]
    fn kde_of_normal_samples() {
        let mut rng = RandomStream::new(1, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.normal()).collect();
        let grid = Grid::new(-6.0, 6.0, 1201).unwrap();
        let d = estimate_density(&xs, &grid, EstimatorSpec::GaussianKde { bandwidth: None }).unwrap();
        let sup = grid
            .points()
            .iter()
            .zip(&d.values)
            .map(|(x, q)| (q - phi(*x, 1.0)).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 0.02, "{sup}");
        assert!((d.mass() + d.out_of_range_mass - 1.0).abs() < 1e-6);
        assert!(d.std_errors.as_ref().unwrap().iter().all(|s| *s >= 0.0));
    }

    #[test]
    fn kde_reports_truncated_mass() {
        let grid = Grid::new(-1.0, 1.0, 401).unwrap();
        let xs = [0.9, 0.95, 0.7, -0.2, 0.99];
        let d = estimate_density(&xs, &grid, EstimatorSpec::GaussianKde { bandwidth: Some(0.1) })
            .unwrap();
        assert!(d.out_of_range_mass > 0.05);
        assert!(d.mass() <= 1.0);
        assert!((d.mass() + d.out_of_range_mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn kde_rejects_degenerate_samples() {
        let grid = Grid::new(-1.0, 1.0, 11).unwrap();
        let r = estimate_density(&[0.5; 20], &grid, EstimatorSpec::GaussianKde { bandwidth: None });
        assert!(matches!(r, Err(Error::Domain(_))));
        assert!(estimate_density(&[0.5; 20], &grid, EstimatorSpec::Histogram).is_ok());
    }

    #[test]
    fn l1_examples() {
        let grid = Grid::new(-1.0, 1.0, 21).unwrap();
        let a = estimate_density(&[0.0], &grid, EstimatorSpec::Histogram).unwrap();
        let b = estimate_density(&[0.5], &grid, EstimatorSpec::Histogram).unwrap();
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        assert!((l1_distance(&a, &b).unwrap() - 2.0).abs() < 1e-12);
        let other = Grid::new(-1.0, 1.0, 23).unwrap();
        let c = estimate_density(&[0.0], &other, EstimatorSpec::Histogram).unwrap();
        assert!(matches!(l1_distance(&a, &c), Err(Error::Contract(_))));
    }

    #[test]
    fn l1_of_two_normals() {
        let grid = Grid::new(-8.0, 8.0, 16001).unwrap();
        let a: Vec<f64> = grid.points().iter().map(|&x| phi(x, 1.0)).collect();
        let b: Vec<f64> = grid.points().iter().map(|&x| phi(x, 1.1)).collect();
        let got = l1_distance_values(&grid, &a, &b).unwrap();
        // The densities cross at ±c with c² = 2 ln(1.1) · 1.1² / (1.1² - 1).
        let c = (2.0 * 1.1f64.ln() * 1.21 / 0.21).sqrt();
        let split = |lo: f64, hi: f64| {
            quadrature::integrate(|x| (phi(x, 1.0) - phi(x, 1.1)).abs(), lo, hi, QuadOptions::default())
                .unwrap()
                .0
        };
        let oracle = split(-8.0, -c) + split(-c, c) + split(c, 8.0);
        assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
    }

    #[test]
    fn ks_examples() {
        let grid = Grid::new(-1.0, 2.0, 31).unwrap();
        let dx = grid.dx();
        let mut at0 = vec![0.0; 31];
        at0[10] = 1.0 / dx;
        let mut at1 = vec![0.0; 31];
        at1[20] = 1.0 / dx;
        assert!(ks_distance(&[0.0; 5], &grid, &at0).unwrap() < 1e-12);
        assert!((ks_distance(&[0.0; 5], &grid, &at1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_of_samples_from_the_grid_solution() {
        let grid = Grid::new(-5.0, 5.0, 501).unwrap();
        let q: Vec<f64> = grid.points().iter().map(|&x| phi(x - 0.3, 0.8)).collect();
        let dx = grid.dx();
        let total: f64 = q.iter().sum::<f64>() * dx;
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for v in &q {
            acc += v * dx / total;
            cdf.push(acc);
        }
        let q: Vec<f64> = q.iter().map(|v| v / total).collect();
        let mut rng = RandomStream::new(3, 0);
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let u = rng.uniform();
                let i = cdf.partition_point(|&c| c < u).min(grid.len() - 1);
                grid.x(i)
            })
            .collect();
        let d = ks_distance(&xs, &grid, &q).unwrap();
        assert!(d <= 1.63 / (n as f64).sqrt(), "{d}");
    }

    #[test]
    fn moments() {
        assert_eq!(empirical_moment(&[3.0; 4], 2).unwrap().0, 9.0);
        let mut rng = RandomStream::new(4, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.normal()).collect();
        let (m2, se2) = empirical_moment(&xs, 2).unwrap();
        assert!((m2 - 1.0).abs() <= 4.0 * se2);
        let (m1, se1) = empirical_moment(&xs, 1).unwrap();
        assert!(m1.abs() <= 4.0 * se1);
        assert!(empirical_moment(&xs, 0).is_err());
    }

    #[test]
    fn two_sample_ks() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 0.0], &[1.0, 1.0]), 1.0);
    }

    proptest! {
        #[test]
        fn histogram_mass_accounts_for_every_sample(xs in prop::collection::vec(-3.0f64..3.0, 1..200)) {
            let grid = Grid::new(-2.0, 2.0, 41).unwrap();
            let d = estimate_density(&xs, &grid, EstimatorSpec::Histogram).unwrap();
            prop_assert!((d.mass() + d.out_of_range_mass - 1.0).abs() < 1e-9);
            prop_assert!(d.values.iter().all(|v| *v >= 0.0));
        }

        #[test]
        fn l1_is_a_metric(
            a in prop::collection::vec(0.0f64..2.0, 11),
            b in prop::collection::vec(0.0f64..2.0, 11),
            c in prop::collection::vec(0.0f64..2.0, 11),
        ) {
            let g = Grid::new(0.0, 1.0, 11).unwrap();
            let ab = l1_distance_values(&g, &a, &b).unwrap();
            let ba = l1_distance_values(&g, &b, &a).unwrap();
            let bc = l1_distance_values(&g, &b, &c).unwrap();
            let ac = l1_distance_values(&g, &a, &c).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert_eq!(l1_distance_values(&g, &a, &a).unwrap(), 0.0);
        }
    }
}
