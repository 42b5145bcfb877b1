//! Grid solver for fractional Fokker–Planck equations
//! `∂q/∂t = L_x[Φ_t q]` with absorbing boundaries.

pub mod operators;

use crate::density::Grid;
use crate::error::{Error, Result};
use crate::exprparse::{CoefficientField, Var};
use crate::kernels::{DiscreteMemoryOperator, MemoryScheme};
use crate::levy::{JumpNoiseSpec, LevyMeasureSpec, Support, SubordinatorSpec};

use operators::{
    drift_diffusion_matrix, general_series_apply, general_series_matrix, series_coefficients,
    stable_jump_matrix, symmetric_jump_matrix, Banded, BandedLu, JumpMatrix, SERIES_MAX_TERMS,
    SERIES_MIN_TERMS,
};

/// Largest admissible `Δt·ρ·|W(−1)|/2` for the explicit part.
pub const STABILITY_LIMIT: f64 = 0.8;
/// Per-step and cumulative mass-ledger tolerance.
pub const MASS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum JumpVariant {
    NoJump,
    /// Fractional Laplacian with multiplier `|h|^α`.
    StableJump { alpha: f64 },
    /// Pushforward quadrature of a symmetric measure.
    SymmetricJump(LevyMeasureSpec),
    /// Derivative series truncated after `terms` orders.
    GeneralSeriesJump { noise: JumpNoiseSpec, terms: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialOperatorConfig {
    pub variant: JumpVariant,
    pub coeffs: CoefficientField,
}

impl SpatialOperatorConfig {
    pub fn new(variant: JumpVariant, coeffs: CoefficientField) -> Result<Self> {
        match &variant {
            JumpVariant::NoJump => {}
            JumpVariant::StableJump { alpha } => {
                if *alpha == 1.0 {
                    return Err(Error::Unsupported(
                        "stable-jump operator excludes α = 1 (singular Riesz normalization)".into(),
                    ));
                }
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(Error::Domain(format!("stable-jump α must lie in (0,2), got {alpha}")));
                }
            }
            JumpVariant::SymmetricJump(m) => {
                if m.support() != Support::Symmetric {
                    return Err(Error::Contract("symmetric-jump operator needs a symmetric measure".into()));
                }
            }
            JumpVariant::GeneralSeriesJump { noise, terms } => {
                if !(SERIES_MIN_TERMS..=SERIES_MAX_TERMS).contains(terms) {
                    return Err(Error::Domain(format!(
                        "series truncation K must lie in [{SERIES_MIN_TERMS}, {SERIES_MAX_TERMS}], got {terms}"
                    )));
                }
                series_coefficients(noise, *terms)?;
            }
        }
        Ok(Self { variant, coeffs })
    }

    fn time_dependent(&self) -> bool {
        let c = &self.coeffs;
        c.drift.depends_on(Var::T) || c.sigma.depends_on(Var::T) || c.jump.depends_on(Var::T)
    }

    /// Drift–diffusion plus any banded series part go into `local`; the
    /// full-width jump operators go into `nonlocal`.
    fn assemble(&self, grid: &Grid, t: f64) -> Result<Assembled> {
        let mut local = Banded::from_tridiagonal(&drift_diffusion_matrix(grid, &self.coeffs, t)?);
        let nonlocal = match &self.variant {
            JumpVariant::NoJump => None,
            _ if self.coeffs.jump.is_zero_literal() => None,
            JumpVariant::StableJump { alpha } => Some(stable_jump_matrix(grid, &self.coeffs, t, *alpha)?),
            JumpVariant::SymmetricJump(m) => {
                Some(JumpMatrix::Sparse(symmetric_jump_matrix(grid, &self.coeffs, t, m)?))
            }
            JumpVariant::GeneralSeriesJump { noise, terms } => {
                let series = general_series_matrix(grid, &self.coeffs, t, noise, *terms)?;
                let (mut kl, mut ku) = (0, 0);
                for (i, j, _) in series.entries() {
                    kl = kl.max(i.saturating_sub(j));
                    ku = ku.max(j.saturating_sub(i));
                }
                local = local.widen(kl, ku);
                for (i, j, v) in series.entries() {
                    local.add(i, j, v);
                }
                None
            }
        };
        let local_cols = local.column_sums();
        let nonlocal_cols = nonlocal.as_ref().map(|j| j.column_sums());
        Ok(Assembled {
            local,
            nonlocal,
            local_cols,
            nonlocal_cols,
        })
    }
}

struct Assembled {
    local: Banded,
    nonlocal: Option<JumpMatrix>,
    local_cols: Vec<f64>,
    nonlocal_cols: Option<Vec<f64>>,
}

impl Assembled {
    fn nonlocal_add(&self, g: &[f64], scale: f64, out: &mut [f64]) {
        if let Some(j) = &self.nonlocal {
            j.apply_add(g, scale, out);
        }
    }

    fn nonlocal_flux(&self, g: &[f64]) -> f64 {
        self.nonlocal_cols.as_ref().map_or(0.0, |c| dot(c, g))
    }

    fn nonlocal_row_bound(&self) -> f64 {
        self.nonlocal.as_ref().map_or(0.0, |j| j.max_row_abs_sum())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeScheme {
    /// `qⁿ⁺¹ = qⁿ + Δt·L[(Φq)ⁿ]`.
    #[default]
    Explicit,
    /// Local part (drift–diffusion, series) implicit in the newest memory term, nonlocal jumps explicit.
    Imex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialCondition {
    /// One cell of height `1/Δx` at the node nearest 0.
    #[default]
    Delta,
    /// Normalized Gaussian of width `2Δx` centred at 0.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: TimeScheme,
    pub initial: InitialCondition,
    pub memory: MemoryScheme,
}

impl SolverSettings {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            scheme: TimeScheme::default(),
            initial: InitialCondition::default(),
            memory: MemoryScheme::default(),
        }
    }

    pub fn with_scheme(mut self, scheme: TimeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_initial(mut self, initial: InitialCondition) -> Self {
        self.initial = initial;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub step: usize,
    pub t: f64,
    pub interior_mass: f64,
    /// Cumulative mass that left through the operator's column deficits.
    pub outflow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpeState {
    pub grid: Grid,
    pub dt: f64,
    /// `q⁰ … qⁿ`.
    pub history: Vec<Vec<f64>>,
    pub ledger: Vec<LedgerEntry>,
    pub stability_number: f64,
    pub truncation_warning: bool,
}

impl FpeState {
    fn step_of(&self, t: f64) -> Result<usize> {
        let n = step_count(t, self.dt)?;
        if n >= self.history.len() {
            return Err(Error::Range(format!("t={t} is past the solved horizon")));
        }
        Ok(n)
    }

    pub fn at(&self, t: f64) -> Result<&[f64]> {
        Ok(&self.history[self.step_of(t)?])
    }

    pub fn last(&self) -> &[f64] {
        self.history.last().expect("history holds q⁰")
    }

    pub fn mass(&self, q: &[f64]) -> f64 {
        q.iter().sum::<f64>() * self.grid.dx()
    }
}

fn step_count(t: f64, dt: f64) -> Result<usize> {
    let n = (t / dt).round();
    if !(t >= 0.0) || (n * dt - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::Domain(format!("time {t} is not a multiple of Δt = {dt}")));
    }
    Ok(n as usize)
}

pub fn initial_condition(grid: &Grid, kind: InitialCondition) -> Result<Vec<f64>> {
    if !(grid.x_min() <= 0.0 && grid.x_max() >= 0.0) {
        return Err(Error::Domain("the initial point 0 lies outside the grid".into()));
    }
    let dx = grid.dx();
    let mut q = vec![0.0; grid.len()];
    match kind {
        InitialCondition::Delta => {
            let i = ((0.0 - grid.x_min()) / dx).round() as usize;
            q[i.min(grid.len() - 1)] = 1.0 / dx;
        }
        InitialCondition::Gaussian => {
            let w = 2.0 * dx;
            for (i, v) in q.iter_mut().enumerate() {
                let x = grid.x(i);
                *v = (-0.5 * x * x / (w * w)).exp();
            }
            let mass = q.iter().sum::<f64>() * dx;
            q.iter_mut().for_each(|v| *v /= mass);
        }
    }
    Ok(q)
}

/// `Σ_{j=from}^{n} w_j q^{n−j}` over the stored history.
fn memory_sum(weights: &[f64], history: &[Vec<f64>], n: usize, from: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    if weights.is_empty() {
        return;
    }
    let last = n.min(weights.len().saturating_sub(1));
    for j in from..=last {
        let w = weights[j];
        if w == 0.0 {
            continue;
        }
        for (o, q) in out.iter_mut().zip(&history[n - j]) {
            *o += w * q;
        }
    }
}

/// `Δt·ρ·|W(−1)|/2` with `ρ` the Gershgorin bound of the explicit part at
/// `t = 0, t_end/2, t_end`. Under IMEX only the nonlocal part is explicit.
fn stability_number(
    op: &SpatialOperatorConfig,
    grid: &Grid,
    settings: &SolverSettings,
    memory: &mut DiscreteMemoryOperator,
    n_steps: usize,
) -> Result<f64> {
    let mut rho = 0.0f64;
    for t in [0.0, 0.5 * settings.t_end, settings.t_end] {
        let a = op.assemble(grid, t)?;
        let explicit_local = match settings.scheme {
            TimeScheme::Explicit => a.local.max_row_abs_sum(),
            TimeScheme::Imex => 0.0,
        };
        rho = rho.max(explicit_local + a.nonlocal_row_bound());
    }
    let w = memory.alternating_weight_sum(n_steps + 1)?;
    Ok(settings.dt * rho * w / 2.0)
}

pub fn solve_fpe(
    op: &SpatialOperatorConfig,
    subordinator: &SubordinatorSpec,
    grid: &Grid,
    settings: &SolverSettings,
) -> Result<FpeState> {
    let dt = settings.dt;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("Δt must be positive, got {dt}")));
    }
    let n_steps = step_count(settings.t_end, dt)?;
    let mut memory = DiscreteMemoryOperator::for_subordinator(subordinator, dt, settings.memory)?;
    memory.ensure_len(n_steps + 2)?;
    let stability = stability_number(op, grid, settings, &mut memory, n_steps)?;
    if stability > STABILITY_LIMIT {
        return Err(Error::Configuration(format!(
            "stability precheck failed: Δt·ρ·|W(−1)|/2 = {stability:.4} exceeds {STABILITY_LIMIT}; reduce Δt"
        )));
    }
    let weights = memory.weights().to_vec();
    let w0 = weights[0];
    let dx = grid.dx();
    let n_x = grid.len();

    let q0 = initial_condition(grid, settings.initial)?;
    let mut history = Vec::with_capacity(n_steps + 1);
    history.push(q0);
    let mut ledger = vec![LedgerEntry {
        step: 0,
        t: 0.0,
        interior_mass: history[0].iter().sum::<f64>() * dx,
        outflow: 0.0,
    }];

    let time_dependent = op.time_dependent();
    let mut current = op.assemble(grid, 0.0)?;
    // Factors of I − Δt·w₀·A_local, reused when the coefficients ignore t.
    let mut implicit: Option<(Assembled, BandedLu)> = None;
    let mut phi = vec![0.0; n_x];
    let mut rest = vec![0.0; n_x];
    for n in 0..n_steps {
        let t_n = n as f64 * dt;
        let t_next = (n + 1) as f64 * dt;
        if time_dependent && n > 0 {
            current = op.assemble(grid, t_n)?;
        }
        memory_sum(&weights, &history, n, 0, &mut phi);
        let q_n = &history[n];
        let (q_next, flux) = match settings.scheme {
            TimeScheme::Explicit => {
                let mut next = q_n.clone();
                current.local.apply_add(&phi, dt, &mut next);
                current.nonlocal_add(&phi, dt, &mut next);
                let flux = dt * dx * (dot(&current.local_cols, &phi) + current.nonlocal_flux(&phi));
                (next, flux)
            }
            TimeScheme::Imex => {
                if time_dependent || implicit.is_none() {
                    let a = op.assemble(grid, t_next)?;
                    let lu = a.local.factor_shifted(dt * w0)?;
                    implicit = Some((a, lu));
                }
                let (a, lu) = implicit.as_ref().unwrap();
                // Σ_{j≥1} w_j q^{n+1−j}
                memory_sum(&weights[1..], &history, n, 0, &mut rest);
                let mut rhs = q_n.clone();
                a.local.apply_add(&rest, dt, &mut rhs);
                current.nonlocal_add(&phi, dt, &mut rhs);
                let next = lu.solve(&rhs);
                let newest: Vec<f64> = next.iter().zip(&rest).map(|(q, r)| w0 * q + r).collect();
                let flux = dt * dx * (dot(&a.local_cols, &newest) + current.nonlocal_flux(&phi));
                (next, flux)
            }
        };
        if let Some(bad) = q_next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "solution became {} at x={} in step {}",
                q_next[bad],
                grid.x(bad),
                n + 1
            )));
        }
        let prev = *ledger.last().unwrap();
        let mass = q_next.iter().sum::<f64>() * dx;
        let outflow = prev.outflow - flux;
        let step_gap = (mass - prev.interior_mass - flux).abs();
        let total_gap = (mass + outflow - 1.0).abs();
        if step_gap > MASS_TOLERANCE || total_gap > MASS_TOLERANCE {
            return Err(Error::Integrity(format!(
                "mass ledger broken at step {}: interior {mass}, outflow {outflow}",
                n + 1
            )));
        }
        ledger.push(LedgerEntry {
            step: n + 1,
            t: t_next,
            interior_mass: mass,
            outflow,
        });
        history.push(q_next);
    }

    let truncation_warning = match &op.variant {
        JumpVariant::GeneralSeriesJump { noise, terms } => {
            let q = history.last().unwrap();
            general_series_apply(q, grid, &op.coeffs, settings.t_end, noise, *terms)?.truncation_warning
        }
        _ => false,
    };

    Ok(FpeState {
        grid: *grid,
        dt,
        history,
        ledger,
        stability_number: stability,
        truncation_warning,
    })
}

/// Second moment `Σ x² q Δx`.
pub fn second_moment(grid: &Grid, q: &[f64]) -> f64 {
    grid.points().iter().zip(q).map(|(x, v)| x * x * v).sum::<f64>() * grid.dx()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::l1_distance_values;
    use statrs::function::gamma::gamma;
    use std::f64::consts::PI;

    fn cfg(variant: JumpVariant, f: &str, s: &str, h: &str) -> SpatialOperatorConfig {
        SpatialOperatorConfig::new(variant, CoefficientField::parse(f, s, h).unwrap()).unwrap()
    }

    #[test]
    fn zero_operator_keeps_the_initial_condition() {
        let grid = Grid::new(-1.0, 1.0, 41).unwrap();
        let sub = SubordinatorSpec::stable(0.7).unwrap();
        let s = solve_fpe(&cfg(JumpVariant::NoJump, "0", "0", "0"), &sub, &grid, &SolverSettings::new(0.01, 0.5))
            .unwrap();
        for q in &s.history {
            assert_eq!(q, &s.history[0]);
        }
        assert!((s.mass(s.last()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initial_conditions_have_unit_mass() {
        let grid = Grid::new(-2.0, 3.0, 101).unwrap();
        for kind in [InitialCondition::Delta, InitialCondition::Gaussian] {
            let q = initial_condition(&grid, kind).unwrap();
            assert!((q.iter().sum::<f64>() * grid.dx() - 1.0).abs() < 1e-12);
        }
        let far = Grid::new(1.0, 3.0, 11).unwrap();
        assert!(initial_condition(&far, InitialCondition::Delta).is_err());
    }

    #[test]
    fn subdiffusive_second_moment() {
        let grid = Grid::new(-10.0, 10.0, 1001).unwrap();
        let sub = SubordinatorSpec::stable(0.8).unwrap();
        let settings = SolverSettings::new(1e-3, 1.0).with_scheme(TimeScheme::Imex);
        let s = solve_fpe(&cfg(JumpVariant::NoJump, "0", "1", "0"), &sub, &grid, &settings).unwrap();
        let m2 = second_moment(&grid, s.at(1.0).unwrap());
        let target = 1.0 / gamma(1.8);
        assert!((m2 / target - 1.0).abs() <= 0.03, "{m2} vs {target}");
    }

    #[test]
    fn ornstein_uhlenbeck_reaches_stationary_gaussian() {
        let grid = Grid::new(-10.0, 10.0, 1001).unwrap();
        let settings = SolverSettings::new(1e-2, 10.0).with_scheme(TimeScheme::Imex);
        let s = solve_fpe(
            &cfg(JumpVariant::NoJump, "-x", "1.4142135623730951", "0"),
            &SubordinatorSpec::unit_drift(),
            &grid,
            &settings,
        )
        .unwrap();
        let target: Vec<f64> = grid.points().iter().map(|x| (-0.5 * x * x).exp() / (2.0 * PI).sqrt()).collect();
        let l1 = l1_distance_values(&grid, s.at(10.0).unwrap(), &target).unwrap();
        assert!(l1 <= 0.01, "{l1}");
    }

    #[test]
    fn explicit_and_imex_converge_together() {
        let grid = Grid::new(-4.0, 4.0, 81).unwrap();
        let sub = SubordinatorSpec::stable(0.6).unwrap();
        let op = cfg(JumpVariant::NoJump, "-0.5*x", "1", "0");
        let gap = |dt: f64| {
            let base = SolverSettings::new(dt, 0.2).with_initial(InitialCondition::Gaussian);
            let a = solve_fpe(&op, &sub, &grid, &base).unwrap();
            let b = solve_fpe(&op, &sub, &grid, &base.clone().with_scheme(TimeScheme::Imex)).unwrap();
            l1_distance_values(&grid, a.last(), b.last()).unwrap()
        };
        // the initial layer limits both schemes to order Δt^α
        let (g1, g2) = (gap(2e-4), gap(1e-4));
        assert!(g1 / g2 >= 1.4 && g2 < 0.006, "{g1} {g2}");
    }

    #[test]
    fn stability_violation_is_a_configuration_error() {
        let grid = Grid::new(-10.0, 10.0, 1001).unwrap();
        let sub = SubordinatorSpec::stable(0.8).unwrap();
        let r = solve_fpe(&cfg(JumpVariant::NoJump, "0", "1", "0"), &sub, &grid, &SolverSettings::new(1e-2, 1.0));
        assert!(matches!(r, Err(Error::Configuration(_))), "{r:?}");
        let r = solve_fpe(
            &cfg(JumpVariant::StableJump { alpha: 1.5 }, "0", "0", "1"),
            &sub,
            &grid,
            &SolverSettings::new(1e-2, 1.0).with_scheme(TimeScheme::Imex),
        );
        assert!(matches!(r, Err(Error::Configuration(_))));
    }

    #[test]
    fn variant_validation() {
        let c = CoefficientField::parse("0", "0", "1").unwrap();
        assert!(SpatialOperatorConfig::new(JumpVariant::StableJump { alpha: 1.0 }, c.clone()).is_err());
        let one_sided = LevyMeasureSpec::one_sided_stable(0.5).unwrap();
        assert!(SpatialOperatorConfig::new(JumpVariant::SymmetricJump(one_sided), c.clone()).is_err());
        let noise = JumpNoiseSpec::new(LevyMeasureSpec::truncated_symmetric_stable(1.5, 1.0).unwrap());
        assert!(SpatialOperatorConfig::new(JumpVariant::GeneralSeriesJump { noise, terms: 1 }, c).is_err());
    }

    #[test]
    fn mass_ledger_balances_for_every_variant() {
        let grid = Grid::new(-3.0, 3.0, 61).unwrap();
        let sub = SubordinatorSpec::stable(0.8).unwrap();
        let trunc = LevyMeasureSpec::truncated_symmetric_stable(1.5, 0.5).unwrap();
        let variants = [
            JumpVariant::NoJump,
            JumpVariant::StableJump { alpha: 1.5 },
            JumpVariant::SymmetricJump(LevyMeasureSpec::symmetric_stable(1.2).unwrap()),
            JumpVariant::GeneralSeriesJump {
                noise: JumpNoiseSpec::new(trunc),
                terms: 4,
            },
        ];
        for v in variants {
            let op = cfg(v.clone(), "-x", "0.5", "1+0.1*sin(x+t)");
            let s = solve_fpe(&op, &sub, &grid, &SolverSettings::new(1e-4, 0.05)).unwrap();
            let last = s.ledger.last().unwrap();
            assert!((last.interior_mass + last.outflow - 1.0).abs() <= 1e-6, "{v:?}");
            // nonlocal jumps leave the grid from the first step
            if matches!(v, JumpVariant::StableJump { .. } | JumpVariant::SymmetricJump(_)) {
                assert!(last.outflow > 0.0, "{v:?}");
            }
        }
    }

    #[test]
    fn stable_jump_sign_of_h_does_not_matter() {
        let grid = Grid::new(-5.0, 5.0, 101).unwrap();
        let sub = SubordinatorSpec::stable(0.8).unwrap();
        let settings = SolverSettings::new(5e-4, 0.1);
        let a = solve_fpe(&cfg(JumpVariant::StableJump { alpha: 1.5 }, "0", "0", "1"), &sub, &grid, &settings)
            .unwrap();
        let b = solve_fpe(&cfg(JumpVariant::StableJump { alpha: 1.5 }, "0", "0", "-1"), &sub, &grid, &settings)
            .unwrap();
        assert_eq!(a.last(), b.last());
    }
}
