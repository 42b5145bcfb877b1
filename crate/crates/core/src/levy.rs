//! Lévy measures, Laplace exponents, tails and symbols.
//!
//! Two roles use these measures: the subordinator that drives operational
//! time ([`SubordinatorSpec`], positive support) and the jump noise `L(t)`
//! of the SDE ([`JumpNoiseSpec`]). They are kept in separate specs even
//! though both are "the Lévy measure ν".
//!
//! Stable densities use `ν(dx) = C |x|^{-1-α} dx`. The one-sided constant is
//! `C = α / Γ(1-α)`, which gives `Ψ(u) = u^α`. The symmetric constant is
//! `C = α / (2 Γ(1-α) cos(πα/2))`, the normalization for which the symbol is
//! exactly `-|u|^α` (it is `1/π` at `α = 1`).

use num_complex::Complex64;
use statrs::function::gamma::{gamma, gamma_lr};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::quadrature::{self, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyFamily {
    OneSidedStable { alpha: f64 },
    TemperedStable { alpha: f64, lambda: f64 },
    SymmetricStable { alpha: f64 },
    TruncatedSymmetricStable { alpha: f64, r_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    PositiveHalfLine,
    Symmetric,
}

/// A validated parametric Lévy measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyMeasureSpec {
    family: LevyFamily,
    constant: f64,
}

fn one_sided_constant(alpha: f64) -> f64 {
    alpha / gamma(1.0 - alpha)
}

fn symmetric_constant(alpha: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-12 {
        1.0 / PI
    } else {
        alpha / (2.0 * gamma(1.0 - alpha) * (PI * alpha / 2.0).cos())
    }
}

impl LevyMeasureSpec {
    pub fn new(family: LevyFamily) -> Result<Self> {
        let constant = match family {
            LevyFamily::OneSidedStable { alpha } => {
                check_open(alpha, 0.0, 1.0, "one-sided stable α")?;
                one_sided_constant(alpha)
            }
            LevyFamily::TemperedStable { alpha, lambda } => {
                check_open(alpha, 0.0, 1.0, "tempered stable α")?;
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return domain(format!("tempering rate λ must be positive, got {lambda}"));
                }
                one_sided_constant(alpha)
            }
            LevyFamily::SymmetricStable { alpha } => {
                check_open(alpha, 0.0, 2.0, "symmetric stable α")?;
                symmetric_constant(alpha)
            }
            LevyFamily::TruncatedSymmetricStable { alpha, r_max } => {
                check_open(alpha, 0.0, 2.0, "truncated symmetric stable α")?;
                if !(r_max > 0.0 && r_max.is_finite()) {
                    return domain(format!("truncation radius must be positive, got {r_max}"));
                }
                symmetric_constant(alpha)
            }
        };
        let spec = Self { family, constant };
        // ∫ min(x², 1) ν(dx) is finite for every α in the admitted ranges;
        // evaluate it anyway so a bad constant cannot slip through.
        let small = spec.square_integrable_part();
        if !(small.is_finite() && small >= 0.0) {
            return Err(Error::NumericalFailure(format!(
                "∫ min(x², 1) ν(dx) is not finite for {family:?}"
            )));
        }
        Ok(spec)
    }

    pub fn one_sided_stable(alpha: f64) -> Result<Self> {
        Self::new(LevyFamily::OneSidedStable { alpha })
    }

    pub fn tempered_stable(alpha: f64, lambda: f64) -> Result<Self> {
        Self::new(LevyFamily::TemperedStable { alpha, lambda })
    }

    pub fn symmetric_stable(alpha: f64) -> Result<Self> {
        Self::new(LevyFamily::SymmetricStable { alpha })
    }

    pub fn truncated_symmetric_stable(alpha: f64, r_max: f64) -> Result<Self> {
        Self::new(LevyFamily::TruncatedSymmetricStable { alpha, r_max })
    }

    pub fn family(&self) -> LevyFamily {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        match self.family {
            LevyFamily::OneSidedStable { alpha }
            | LevyFamily::TemperedStable { alpha, .. }
            | LevyFamily::SymmetricStable { alpha }
            | LevyFamily::TruncatedSymmetricStable { alpha, .. } => alpha,
        }
    }

    pub fn support(&self) -> Support {
        match self.family {
            LevyFamily::OneSidedStable { .. } | LevyFamily::TemperedStable { .. } => {
                Support::PositiveHalfLine
            }
            _ => Support::Symmetric,
        }
    }

    /// The prefactor `C` in `ν(dx) = C |x|^{-1-α} (·) dx`.
    pub fn stable_constant(&self) -> f64 {
        self.constant
    }

    /// Lebesgue density of ν at `x`.
    pub fn density(&self, x: f64) -> f64 {
        let a = x.abs();
        if a == 0.0 {
            return 0.0;
        }
        let alpha = self.alpha();
        let base = self.constant * a.powf(-1.0 - alpha);
        match self.family {
            LevyFamily::OneSidedStable { .. } => {
                if x > 0.0 {
                    base
                } else {
                    0.0
                }
            }
            LevyFamily::TemperedStable { lambda, .. } => {
                if x > 0.0 {
                    base * (-lambda * x).exp()
                } else {
                    0.0
                }
            }
            LevyFamily::SymmetricStable { .. } => base,
            LevyFamily::TruncatedSymmetricStable { r_max, .. } => {
                if a < r_max {
                    base
                } else {
                    0.0
                }
            }
        }
    }

    /// `ν(R∖{0})`; infinite for every stable-type family.
    pub fn total_mass(&self) -> f64 {
        f64::INFINITY
    }

    /// `∫ min(x², 1) ν(dx)`, closed form per family.
    pub fn square_integrable_part(&self) -> f64 {
        let alpha = self.alpha();
        let sides = match self.support() {
            Support::PositiveHalfLine => 1.0,
            Support::Symmetric => 2.0,
        };
        let near = self.moment_range(2, 0.0, 1.0).unwrap_or(f64::NAN);
        let far = match self.family {
            LevyFamily::TruncatedSymmetricStable { r_max, .. } if r_max <= 1.0 => 0.0,
            _ => sides * self.tail(1.0).unwrap_or(f64::NAN),
        };
        let _ = alpha;
        near + far
    }

    /// `ν((w, ∞))`.
    pub fn tail(&self, w: f64) -> Result<f64> {
        if !(w > 0.0) {
            return domain(format!("tail argument must be positive, got {w}"));
        }
        let alpha = self.alpha();
        let c = self.constant;
        Ok(match self.family {
            LevyFamily::OneSidedStable { .. } => w.powf(-alpha) / gamma(1.0 - alpha),
            LevyFamily::TemperedStable { lambda, .. } => {
                let z = lambda * w;
                if z > 30.0 {
                    let (v, _) = quadrature::integrate_semi_infinite(
                        |x| self.density(x),
                        w,
                        QuadOptions::default(),
                    )?;
                    v
                } else {
                    // Γ(-α, z) = (z^{-α} e^{-z} - Γ(1-α, z)) / α
                    let upper = gamma(1.0 - alpha) * (1.0 - gamma_lr(1.0 - alpha, z));
                    let g_neg = (z.powf(-alpha) * (-z).exp() - upper) / alpha;
                    c * lambda.powf(alpha) * g_neg
                }
            }
            LevyFamily::SymmetricStable { .. } => c * w.powf(-alpha) / alpha,
            LevyFamily::TruncatedSymmetricStable { r_max, .. } => {
                if w >= r_max {
                    0.0
                } else {
                    c * (w.powf(-alpha) - r_max.powf(-alpha)) / alpha
                }
            }
        })
    }

    /// `ν((a, b])` on the positive side.
    pub fn mass_between(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let upper = if b.is_infinite() { 0.0 } else { self.tail(b)? };
        Ok((self.tail(a)? - upper).max(0.0))
    }

    /// `∫_0^s G(r) dr = ∫_{(0,∞)} min(x, s) ν(dx)`.
    pub fn integrated_tail(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return domain(format!("integrated tail needs s ≥ 0, got {s}"));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        let alpha = self.alpha();
        match self.family {
            LevyFamily::OneSidedStable { .. } => Ok(s.powf(1.0 - alpha) / gamma(2.0 - alpha)),
            _ => {
                if alpha >= 1.0 {
                    return domain("∫ min(x, s) ν(dx) diverges for α ≥ 1");
                }
                let first = match self.family {
                    LevyFamily::TruncatedSymmetricStable { r_max, .. } => {
                        self.moment_range(1, 0.0, s.min(r_max))? / 2.0
                    }
                    LevyFamily::SymmetricStable { .. } => {
                        self.constant * s.powf(1.0 - alpha) / (1.0 - alpha)
                    }
                    _ => self.moment_range(1, 0.0, s)?,
                };
                Ok(first + s * self.tail(s)?)
            }
        }
    }

    /// `∫_0^s r G(r) dr = ½ ∫_{(0,∞)} min(x, s)² ν(dx)`.
    pub fn tail_first_moment(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return domain(format!("tail moment needs s ≥ 0, got {s}"));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        Ok(0.5 * (self.second_moment_below(s)? + s * s * self.tail(s)?))
    }

    /// `∫_{lo ≤ |x| < hi} x^k ν(dx)` for `k ≥ 1`. Infinite when the range
    /// reaches a divergent end.
    pub fn moment_range(&self, k: u32, lo: f64, hi: f64) -> Result<f64> {
        let m = self.positive_moment(k, lo, hi)?;
        Ok(match self.support() {
            Support::PositiveHalfLine => m,
            Support::Symmetric if k % 2 == 1 => 0.0,
            Support::Symmetric => 2.0 * m,
        })
    }

    /// `∫_{lo ≤ x < hi} x^k ν(dx)` over the positive half-line only.
    pub fn positive_moment(&self, k: u32, lo: f64, hi: f64) -> Result<f64> {
        if k == 0 {
            return domain("moment order must be at least 1");
        }
        if !(lo >= 0.0) || hi < lo {
            return domain(format!("invalid moment range [{lo}, {hi})"));
        }
        let alpha = self.alpha();
        let c = self.constant;
        let p = k as f64 - alpha;
        let power_integral = |a: f64, b: f64| -> f64 {
            if b <= a {
                0.0
            } else if b.is_infinite() {
                f64::INFINITY
            } else if p == 0.0 {
                if a == 0.0 {
                    f64::INFINITY
                } else {
                    (b / a).ln()
                }
            } else {
                (b.powf(p) - a.powf(p)) / p
            }
        };
        Ok(match self.family {
            LevyFamily::OneSidedStable { .. } | LevyFamily::SymmetricStable { .. } => {
                c * power_integral(lo, hi)
            }
            LevyFamily::TemperedStable { lambda, .. } => {
                let lower = |x: f64| {
                    if x.is_infinite() {
                        1.0
                    } else if x <= 0.0 {
                        0.0
                    } else {
                        gamma_lr(p, lambda * x)
                    }
                };
                c * lambda.powf(-p) * gamma(p) * (lower(hi) - lower(lo))
            }
            LevyFamily::TruncatedSymmetricStable { r_max, .. } => {
                c * power_integral(lo.min(r_max), hi.min(r_max))
            }
        })
    }

    /// `∫_0^a x² ν(dx)` on the positive side only.
    pub fn second_moment_below(&self, a: f64) -> Result<f64> {
        self.positive_moment(2, 0.0, a)
    }
}

fn check_open(v: f64, lo: f64, hi: f64, what: &str) -> Result<()> {
    if v > lo && v < hi {
        Ok(())
    } else {
        domain(format!("{what} must lie in ({lo}, {hi}), got {v}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubordinatorKind {
    Levy(LevyMeasureSpec),
    /// Pure unit drift `T(γ) = γ`, `Ψ(u) = u`. No memory, no trapping.
    UnitDrift,
}

/// Driving subordinator of operational time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinatorSpec {
    kind: SubordinatorKind,
    closed_form_psi: bool,
}

impl SubordinatorSpec {
    pub fn new(measure: LevyMeasureSpec) -> Result<Self> {
        if measure.support() != Support::PositiveHalfLine {
            return domain("subordinator Lévy measure must live on the positive half-line");
        }
        if measure.total_mass().is_finite() {
            return domain("subordinator Lévy measure must have infinite mass");
        }
        let spec = Self {
            kind: SubordinatorKind::Levy(measure),
            closed_form_psi: true,
        };
        spec.check_psi_shape()?;
        Ok(spec)
    }

    pub fn stable(alpha: f64) -> Result<Self> {
        Self::new(LevyMeasureSpec::one_sided_stable(alpha)?)
    }

    pub fn tempered(alpha: f64, lambda: f64) -> Result<Self> {
        Self::new(LevyMeasureSpec::tempered_stable(alpha, lambda)?)
    }

    pub fn unit_drift() -> Self {
        Self {
            kind: SubordinatorKind::UnitDrift,
            closed_form_psi: true,
        }
    }

    /// Forces [`psi_exponent`] onto the quadrature route.
    pub fn with_quadrature_psi(mut self) -> Self {
        self.closed_form_psi = false;
        self
    }

    pub fn kind(&self) -> SubordinatorKind {
        self.kind
    }

    pub fn measure(&self) -> Option<&LevyMeasureSpec> {
        match &self.kind {
            SubordinatorKind::Levy(m) => Some(m),
            SubordinatorKind::UnitDrift => None,
        }
    }

    /// Stability index when the measure is stable or tempered stable.
    pub fn alpha(&self) -> Option<f64> {
        self.measure().map(|m| m.alpha())
    }

    pub fn has_closed_form_psi(&self) -> bool {
        self.closed_form_psi
    }

    fn check_psi_shape(&self) -> Result<()> {
        let grid: Vec<f64> = (0..=40).map(|i| 10f64.powf(-3.0 + 0.125 * i as f64)).collect();
        let mut prev = (0.0, 0.0);
        let mut prev_slope = f64::INFINITY;
        for &u in &grid {
            let v = psi_closed_form(self, Complex64::new(u, 0.0)).re;
            if v < prev.1 {
                return Err(Error::NumericalFailure("Ψ is not nondecreasing".into()));
            }
            let slope = (v - prev.1) / (u - prev.0);
            if slope > prev_slope * (1.0 + 1e-9) {
                return Err(Error::NumericalFailure("Ψ is not concave".into()));
            }
            prev_slope = slope;
            prev = (u, v);
        }
        Ok(())
    }
}

/// Closed-form `Ψ(s)` continued to `Re s > -λ` (principal branch).
pub fn psi_closed_form(spec: &SubordinatorSpec, s: Complex64) -> Complex64 {
    match spec.kind {
        SubordinatorKind::UnitDrift => s,
        SubordinatorKind::Levy(m) => match m.family {
            LevyFamily::OneSidedStable { alpha } => {
                if s == Complex64::new(0.0, 0.0) {
                    s
                } else {
                    s.powf(alpha)
                }
            }
            LevyFamily::TemperedStable { alpha, lambda } => {
                (s + lambda).powf(alpha) - lambda.powf(alpha)
            }
            _ => Complex64::new(f64::NAN, f64::NAN),
        },
    }
}

/// `Ψ(u) = ∫_0^∞ (1 - e^{-ux}) ν(dx)` by adaptive quadrature.
pub fn psi_quadrature(measure: &LevyMeasureSpec, u: f64) -> Result<f64> {
    if u < 0.0 {
        return domain(format!("Ψ needs u ≥ 0, got {u}"));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let (v, err) = quadrature::integrate_positive_half_line(
        |x| -(-u * x).exp_m1() * measure.density(x),
        QuadOptions::default(),
    )?;
    if err > quadrature::FAILURE_REL_ERR * v.abs() {
        return Err(Error::NumericalFailure(format!(
            "Ψ({u}) quadrature error {err} exceeds tolerance"
        )));
    }
    Ok(v)
}

/// Laplace exponent `Ψ(u)`.
pub fn psi_exponent(spec: &SubordinatorSpec, u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return domain(format!("Ψ needs u ≥ 0, got {u}"));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    match (spec.kind, spec.closed_form_psi) {
        (SubordinatorKind::UnitDrift, _) => Ok(u),
        (SubordinatorKind::Levy(_), true) => Ok(psi_closed_form(spec, Complex64::new(u, 0.0)).re),
        (SubordinatorKind::Levy(m), false) => psi_quadrature(&m, u),
    }
}

/// `G(w) = ν((w, ∞))`.
pub fn tail_g(measure: &LevyMeasureSpec, w: f64) -> Result<f64> {
    measure.tail(w)
}

/// The jump noise `L(t)` with compensation set `B = {|x| < jump_cutoff}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpNoiseSpec {
    pub measure: LevyMeasureSpec,
    pub jump_cutoff: f64,
    /// Small-jump cutoff ε for compound-Poisson approximations; `None` picks
    /// a default from the step size.
    pub small_jump_cutoff: Option<f64>,
}

impl JumpNoiseSpec {
    pub fn new(measure: LevyMeasureSpec) -> Self {
        Self {
            measure,
            jump_cutoff: 1.0,
            small_jump_cutoff: None,
        }
    }

    pub fn with_cutoff(measure: LevyMeasureSpec, jump_cutoff: f64) -> Result<Self> {
        if !(jump_cutoff > 0.0 && jump_cutoff.is_finite()) {
            return domain(format!("jump cutoff must be positive, got {jump_cutoff}"));
        }
        Ok(Self {
            measure,
            jump_cutoff,
            small_jump_cutoff: None,
        })
    }

    /// `∫_{|x| < cutoff} x ν(dx)`, the compensator rate.
    pub fn compensator_mean(&self) -> Result<f64> {
        self.measure.moment_range(1, 0.0, self.jump_cutoff)
    }
}

/// `η(u) = ∫ (e^{iux} - 1 - iux 1_B(x)) ν(dx)`.
pub fn levy_symbol(noise: &JumpNoiseSpec, u: f64) -> Result<Complex64> {
    if u == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let m = &noise.measure;
    let i = Complex64::new(0.0, 1.0);
    match m.family() {
        LevyFamily::SymmetricStable { alpha } => Ok(Complex64::new(-u.abs().powf(alpha), 0.0)),
        LevyFamily::TruncatedSymmetricStable { r_max, .. } => {
            let (v, err) = quadrature::integrate_from_zero(
                |x| {
                    let s = (0.5 * u * x).sin();
                    -2.0 * s * s * m.density(x)
                },
                r_max,
                QuadOptions::default(),
            )?;
            if err > quadrature::FAILURE_REL_ERR * v.abs() {
                return Err(Error::NumericalFailure("symbol quadrature did not converge".into()));
            }
            Ok(Complex64::new(2.0 * v, 0.0))
        }
        LevyFamily::OneSidedStable { alpha } => {
            let comp = noise.compensator_mean()?;
            Ok(-(-i * u).powf(alpha) - i * u * comp)
        }
        LevyFamily::TemperedStable { alpha, lambda } => {
            let comp = noise.compensator_mean()?;
            Ok(-((lambda - i * u).powf(alpha) - lambda.powf(alpha)) - i * u * comp)
        }
    }
}
