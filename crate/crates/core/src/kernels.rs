//! Memory kernel `M`, the memory operator `Φ` and the tail convolution `Θ`.

use num_complex::Complex64;
use statrs::function::gamma::gamma;
use std::cell::Cell;
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::levy::{psi_closed_form, LevyFamily, LevyMeasureSpec, SubordinatorKind, SubordinatorSpec};
use crate::quadrature::{self, QuadOptions};

pub const DEFAULT_TALBOT_NODES: usize = 32;
const TALBOT_AGREEMENT: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSource {
    /// `M(t) = t^{α-1} / Γ(α)`.
    ClosedFormStable { alpha: f64 },
    /// Fixed-Talbot inversion of `1/Ψ(s)`.
    NumericLaplaceInversion(SubordinatorSpec),
}

#[derive(Debug, Clone)]
pub struct MemoryKernel {
    source: KernelSource,
    nodes: usize,
    table: Vec<(f64, f64)>,
}

impl MemoryKernel {
    pub fn closed_form_stable(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("stable kernel needs α in (0, 1), got {alpha}"));
        }
        Ok(Self {
            source: KernelSource::ClosedFormStable { alpha },
            nodes: DEFAULT_TALBOT_NODES,
            table: Vec::new(),
        })
    }

    pub fn numeric(spec: SubordinatorSpec) -> Self {
        Self {
            source: KernelSource::NumericLaplaceInversion(spec),
            nodes: DEFAULT_TALBOT_NODES,
            table: Vec::new(),
        }
    }

    /// Closed form for one-sided stable subordinators, Talbot otherwise.
    pub fn for_subordinator(spec: &SubordinatorSpec) -> Self {
        match spec.measure().map(|m| m.family()) {
            Some(LevyFamily::OneSidedStable { alpha }) => Self {
                source: KernelSource::ClosedFormStable { alpha },
                nodes: DEFAULT_TALBOT_NODES,
                table: Vec::new(),
            },
            _ => Self::numeric(*spec),
        }
    }

    pub fn with_nodes(mut self, nodes: usize) -> Result<Self> {
        if nodes < 8 {
            return domain("Talbot inversion needs at least 8 nodes");
        }
        self.nodes = nodes;
        Ok(self)
    }

    pub fn source(&self) -> KernelSource {
        self.source
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return domain(format!("memory kernel needs t > 0, got {t}"));
        }
        match self.source {
            KernelSource::ClosedFormStable { alpha } => Ok(t.powf(alpha - 1.0) / gamma(alpha)),
            KernelSource::NumericLaplaceInversion(spec) => {
                // Polar inverse: `inv()` overflows |s|² for the huge nodes used at tiny t.
                let f = |s: Complex64| {
                    let p = psi_closed_form(&spec, s);
                    Complex64::from_polar(1.0 / p.norm(), -p.arg())
                };
                let fine = talbot(f, t, self.nodes);
                let coarse = talbot(f, t, (3 * self.nodes) / 4);
                if !fine.is_finite() || (fine - coarse).abs() > TALBOT_AGREEMENT * fine.abs() {
                    return Err(Error::NumericalFailure(format!(
                        "Talbot inversion of 1/Ψ at t={t} unstable: {fine} vs {coarse}"
                    )));
                }
                if fine <= 0.0 {
                    return Err(Error::NumericalFailure(format!(
                        "memory kernel M({t}) = {fine} is not positive"
                    )));
                }
                Ok(fine)
            }
        }
    }

    /// Evaluates and caches `M` on `grid`.
    pub fn tabulate(&mut self, grid: &[f64]) -> Result<&[(f64, f64)]> {
        self.table = grid
            .iter()
            .map(|&t| self.eval(t).map(|m| (t, m)))
            .collect::<Result<_>>()?;
        Ok(&self.table)
    }

    pub fn table(&self) -> &[(f64, f64)] {
        &self.table
    }

    /// `∫_0^∞ e^{-ut} M(t) dt` by quadrature, for checking against `1/Ψ(u)`.
    pub fn laplace_transform(&self, u: f64) -> Result<f64> {
        let failure: Cell<Option<Error>> = Cell::new(None);
        let (v, _) = quadrature::integrate_positive_half_line(
            |t| {
                let damp = (-u * t).exp();
                if damp == 0.0 {
                    return 0.0;
                }
                match self.eval(t) {
                    Ok(m) => damp * m,
                    Err(e) => {
                        failure.set(Some(e));
                        0.0
                    }
                }
            },
            QuadOptions {
                rel_tol: 1e-8,
                ..QuadOptions::default()
            },
        )?;
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
}

/// Fixed-Talbot inversion of `F` at `t` with `n` nodes.
pub fn talbot<F: Fn(Complex64) -> Complex64>(f: F, t: f64, n: usize) -> f64 {
    let nf = n as f64;
    let r = 2.0 * nf / (5.0 * t);
    let mut sum = 0.5 * (f(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..n {
        let theta = k as f64 * PI / nf;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        sum += ((s * t).exp() * f(s) * Complex64::new(1.0, sigma)).re;
    }
    r / nf * sum
}

pub fn memory_kernel_eval(kernel: &MemoryKernel, t: f64) -> Result<f64> {
    kernel.eval(t)
}

#[derive(Debug, Clone)]
pub enum MemoryOperatorKind {
    /// Grünwald–Letnikov approximation of the Riemann–Liouville derivative of
    /// order `β = 1 - α`.
    GrunwaldLetnikov { beta: f64 },
    ConvolutionQuadrature(MemoryKernel),
    /// `Φ f = f`; the memory operator of the unit-drift subordinator.
    Identity,
}

/// Which discretization of `Φ` to build for a subordinator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemoryScheme {
    /// GL for stable, convolution quadrature otherwise, identity for drift.
    #[default]
    Auto,
    GrunwaldLetnikov,
    ConvolutionQuadrature,
}

/// `Φ` on a uniform grid, written as `Φ^n = Σ_j w_j f^{n-j}`.
#[derive(Debug, Clone)]
pub struct DiscreteMemoryOperator {
    kind: MemoryOperatorKind,
    dt: f64,
    /// GL: `g_j`. CQ: `M((j + 1/2) Δt)`.
    raw: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMemoryOperator {
    pub fn grunwald_letnikov(alpha: f64, dt: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return domain(format!("GL memory needs α in (0, 1], got {alpha}"));
        }
        Self::build(MemoryOperatorKind::GrunwaldLetnikov { beta: 1.0 - alpha }, dt)
    }

    pub fn convolution(kernel: MemoryKernel, dt: f64) -> Result<Self> {
        Self::build(MemoryOperatorKind::ConvolutionQuadrature(kernel), dt)
    }

    pub fn identity(dt: f64) -> Result<Self> {
        Self::build(MemoryOperatorKind::Identity, dt)
    }

    pub fn for_subordinator(spec: &SubordinatorSpec, dt: f64, scheme: MemoryScheme) -> Result<Self> {
        let stable_alpha = match spec.kind() {
            SubordinatorKind::UnitDrift => return Self::identity(dt),
            SubordinatorKind::Levy(m) => match m.family() {
                LevyFamily::OneSidedStable { alpha } => Some(alpha),
                _ => None,
            },
        };
        match (scheme, stable_alpha) {
            (MemoryScheme::Auto | MemoryScheme::GrunwaldLetnikov, Some(a)) => {
                Self::grunwald_letnikov(a, dt)
            }
            (MemoryScheme::GrunwaldLetnikov, None) => Err(Error::Unsupported(
                "Grünwald–Letnikov memory needs a one-sided stable subordinator".into(),
            )),
            _ => Self::convolution(MemoryKernel::for_subordinator(spec), dt),
        }
    }

    fn build(kind: MemoryOperatorKind, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return domain(format!("time step must be positive, got {dt}"));
        }
        let mut op = Self {
            kind,
            dt,
            raw: Vec::new(),
            weights: Vec::new(),
        };
        op.ensure_len(1)?;
        Ok(op)
    }

    pub fn kind(&self) -> &MemoryOperatorKind {
        &self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Grows the weight table to at least `n` entries. The identity operator
    /// keeps a single weight.
    pub fn ensure_len(&mut self, n: usize) -> Result<()> {
        match &self.kind {
            MemoryOperatorKind::Identity => {
                if self.weights.is_empty() {
                    self.raw.push(1.0);
                    self.weights.push(1.0);
                }
            }
            MemoryOperatorKind::GrunwaldLetnikov { beta } => {
                let beta = *beta;
                let scale = self.dt.powf(-beta);
                while self.raw.len() < n {
                    let j = self.raw.len();
                    let g = if j == 0 {
                        1.0
                    } else {
                        self.raw[j - 1] * ((j as f64 - 1.0 - beta) / j as f64)
                    };
                    self.raw.push(g);
                    self.weights.push(scale * g);
                }
            }
            MemoryOperatorKind::ConvolutionQuadrature(kernel) => {
                while self.raw.len() < n {
                    let j = self.raw.len();
                    let m = kernel.eval((j as f64 + 0.5) * self.dt)?;
                    self.raw.push(m);
                    self.weights.push(if j == 0 { m } else { m - self.raw[j - 1] });
                }
            }
        }
        Ok(())
    }

    /// Current weight table `w_0, w_1, ...`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Raw table: GL coefficients `g_j` or kernel samples `M((j+1/2)Δt)`.
    pub fn raw_table(&self) -> &[f64] {
        &self.raw
    }

    /// `(Φ f)(t_n)` from the uniformly spaced history `f(t_0), ..., f(t_n)`.
    pub fn apply(&mut self, history: &[f64]) -> Result<f64> {
        if history.is_empty() {
            return Err(Error::Contract("memory operator needs a non-empty history".into()));
        }
        self.ensure_len(history.len())?;
        let n = history.len() - 1;
        Ok(self
            .weights
            .iter()
            .take(history.len())
            .enumerate()
            .map(|(j, w)| w * history[n - j])
            .sum())
    }

    /// Sum `|Σ_k (-1)^k w_k|` over the current table; the amplification of
    /// the highest-frequency mode, used by explicit-stability estimates.
    pub fn alternating_weight_sum(&mut self, n: usize) -> Result<f64> {
        self.ensure_len(n)?;
        Ok(self
            .weights
            .iter()
            .take(n)
            .enumerate()
            .map(|(k, w)| if k % 2 == 0 { *w } else { -*w })
            .sum::<f64>()
            .abs())
    }
}

/// `(Φ f)(t_n)` with the sample times checked for uniform spacing `op.dt()`.
pub fn phi_apply(op: &mut DiscreteMemoryOperator, times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::Contract("times and values differ in length".into()));
    }
    let dt = op.dt();
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(w[1].abs()) {
            return Err(Error::Contract(format!(
                "history is not uniformly spaced by Δt={dt}: step {} at t={}",
                w[1] - w[0],
                w[0]
            )));
        }
    }
    op.apply(values)
}

/// A kernel `G` usable by [`theta_apply`] through its running integral.
pub trait TailKernel {
    /// `G(s)` for `s > 0`.
    fn tail(&self, s: f64) -> Result<f64>;
    /// `H(s) = ∫_0^s G(r) dr`.
    fn integrated_tail(&self, s: f64) -> Result<f64>;
    /// `K(s) = ∫_0^s r G(r) dr`.
    fn tail_first_moment(&self, s: f64) -> Result<f64>;
}

impl TailKernel for LevyMeasureSpec {
    fn tail(&self, s: f64) -> Result<f64> {
        LevyMeasureSpec::tail(self, s)
    }

    fn integrated_tail(&self, s: f64) -> Result<f64> {
        LevyMeasureSpec::integrated_tail(self, s)
    }

    fn tail_first_moment(&self, s: f64) -> Result<f64> {
        LevyMeasureSpec::tail_first_moment(self, s)
    }
}

/// `G ≡ c`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantTail(pub f64);

impl TailKernel for ConstantTail {
    fn tail(&self, _s: f64) -> Result<f64> {
        Ok(self.0)
    }

    fn integrated_tail(&self, s: f64) -> Result<f64> {
        Ok(self.0 * s)
    }

    fn tail_first_moment(&self, s: f64) -> Result<f64> {
        Ok(0.5 * self.0 * s * s)
    }
}

/// `Θ_w g = ∫_0^w G(w - z) g(z) dz` for `g` sampled at `z_j = jΔ`,
/// `w = (len - 1) Δ`. Product rule: `g` is interpolated linearly and each
/// cell is integrated exactly against `G` through `H` and `K`, which keeps
/// second order next to the kernel singularity at `z = w`.
pub fn theta_apply<K: TailKernel + ?Sized>(kernel: &K, g: &[f64], delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return domain(format!("Θ spacing must be positive, got {delta}"));
    }
    if g.len() < 2 {
        return Ok(0.0);
    }
    let m = g.len() - 1;
    let mut s_hi = m as f64 * delta;
    let mut h_hi = kernel.integrated_tail(s_hi)?;
    let mut k_hi = kernel.tail_first_moment(s_hi)?;
    let mut acc = 0.0;
    for j in 0..m {
        let s_lo = (m - j - 1) as f64 * delta;
        let h_lo = kernel.integrated_tail(s_lo)?;
        let k_lo = kernel.tail_first_moment(s_lo)?;
        let dh = h_hi - h_lo;
        // ∫ (s_hi - s) G(s) ds over the cell
        let lever = s_hi * dh - (k_hi - k_lo);
        acc += g[j] * dh + (g[j + 1] - g[j]) / delta * lever;
        s_hi = s_lo;
        h_hi = h_lo;
        k_hi = k_lo;
    }
    Ok(acc)
}

/// [`theta_apply`] with the subordinator's tail. For the unit drift `Θ` is
/// the identity and the last sample is returned.
pub fn theta_apply_spec(spec: &SubordinatorSpec, g: &[f64], delta: f64) -> Result<f64> {
    match spec.measure() {
        Some(m) => theta_apply(m, g, delta),
        None => g
            .last()
            .copied()
            .ok_or_else(|| Error::Contract("Θ needs at least one sample".into())),
    }
}

/// Rows `(t, M(t), G(t))`; `G` is NaN for the drift stub.
pub fn kernel_table(spec: &SubordinatorSpec, times: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let kernel = MemoryKernel::for_subordinator(spec);
    times
        .iter()
        .map(|&t| {
            let m = kernel.eval(t)?;
            let g = match spec.measure() {
                Some(measure) => measure.tail(t)?,
                None => f64::NAN,
            };
            Ok((t, m, g))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn talbot_reproduces_stable_kernel() {
        let closed = MemoryKernel::closed_form_stable(0.5).unwrap();
        let numeric = MemoryKernel::numeric(SubordinatorSpec::stable(0.5).unwrap());
        let m = closed.eval(1.0).unwrap();
        assert!(rel(m, 1.0 / PI.sqrt()) < 1e-14);
        assert!(rel(numeric.eval(1.0).unwrap(), m) < 1e-8);

        let closed = MemoryKernel::closed_form_stable(0.8).unwrap();
        let numeric = MemoryKernel::numeric(SubordinatorSpec::stable(0.8).unwrap());
        let oracle = 0.5f64.powf(-0.2) / gamma(0.8);
        assert!(rel(closed.eval(0.5).unwrap(), oracle) < 1e-14);
        assert!(rel(numeric.eval(0.5).unwrap(), oracle) < 1e-4);
    }

    #[test]
    fn drift_stub_kernel_is_one() {
        let k = MemoryKernel::numeric(SubordinatorSpec::unit_drift());
        assert!((k.eval(2.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kernel_rejects_nonpositive_time() {
        let k = MemoryKernel::closed_form_stable(0.5).unwrap();
        assert!(k.eval(0.0).is_err());
        assert!(k.eval(-1.0).is_err());
    }

    #[test]
    fn tempered_kernel_laplace_consistency() {
        let spec = SubordinatorSpec::tempered(0.6, 1.0).unwrap();
        let mut k = MemoryKernel::numeric(spec);
        let grid: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
        for &(_, m) in k.tabulate(&grid).unwrap() {
            assert!(m > 0.0);
        }
        for u in [1.0, 2.0, 5.0] {
            let back = k.laplace_transform(u).unwrap();
            let target = 1.0 / crate::levy::psi_exponent(&spec, u).unwrap();
            assert!(rel(back, target) < 1e-3, "u={u}: {back} vs {target}");
        }
    }

    #[test]
    fn gl_weights_recurrence_and_partial_sums() {
        let mut op = DiscreteMemoryOperator::grunwald_letnikov(0.3, 1.0).unwrap();
        op.ensure_len(10_001).unwrap();
        let g = op.raw_table();
        assert_eq!(g[0], 1.0);
        let beta = 0.7;
        let mut partial = 0.0f64;
        let mut prev_abs = f64::INFINITY;
        for j in 0..g.len() {
            if j > 0 {
                assert!(rel(g[j], g[j - 1] * (j as f64 - 1.0 - beta) / j as f64) < 1e-15);
            }
            partial += g[j];
            assert!(partial.abs() <= prev_abs + 1e-15);
            prev_abs = partial.abs();
        }
        assert!(partial.abs() < 0.01);
    }

    #[test]
    fn identity_operator_returns_last_value() {
        let mut op = DiscreteMemoryOperator::identity(0.1).unwrap();
        assert_eq!(op.apply(&[3.0, -1.0, 2.5]).unwrap(), 2.5);
        let mut cq = DiscreteMemoryOperator::convolution(
            MemoryKernel::numeric(SubordinatorSpec::unit_drift()),
            0.1,
        )
        .unwrap();
        assert!((cq.apply(&[3.0, -1.0, 2.5]).unwrap() - 2.5).abs() < 1e-8);
    }

    #[test]
    fn gl_matches_riemann_liouville_derivative() {
        let dt = 1e-3;
        let n = 1000;
        for alpha in [0.5, 0.8] {
            for beta in [1, 2] {
                let mut op = DiscreteMemoryOperator::grunwald_letnikov(alpha, dt).unwrap();
                let times: Vec<f64> = (0..=n).map(|j| j as f64 * dt).collect();
                let values: Vec<f64> = times.iter().map(|t| t.powi(beta)).collect();
                let got = phi_apply(&mut op, &times, &values).unwrap();
                let b = beta as f64;
                let want = gamma(b + 1.0) / gamma(b + alpha);
                assert!(rel(got, want) < 1e-2, "α={alpha} β={beta}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn phi_rejects_nonuniform_history() {
        let mut op = DiscreteMemoryOperator::grunwald_letnikov(0.5, 0.1).unwrap();
        let err = phi_apply(&mut op, &[0.0, 0.1, 0.25], &[0.0, 1.0, 2.0]);
        assert!(matches!(err, Err(Error::Contract(_))));
        assert!(matches!(op.apply(&[]), Err(Error::Contract(_))));
    }

    #[test]
    fn theta_examples() {
        let g = vec![1.0; 201];
        assert!((theta_apply(&ConstantTail(1.0), &g, 0.01).unwrap() - 2.0).abs() < 1e-12);
        let m = LevyMeasureSpec::one_sided_stable(0.5).unwrap();
        let g = vec![1.0; 1001];
        let v = theta_apply(&m, &g, 1e-3).unwrap();
        assert!(rel(v, 2.0 / PI.sqrt()) < 1e-12);
        assert_eq!(theta_apply(&m, &vec![0.0; 50], 0.1).unwrap(), 0.0);
    }

    #[test]
    fn theta_matches_direct_quadrature() {
        let m = LevyMeasureSpec::tempered_stable(0.4, 1.5).unwrap();
        let w = 1.3;
        let n = 2600;
        let delta = w / n as f64;
        let g: Vec<f64> = (0..=n).map(|j| (j as f64 * delta).cos()).collect();
        let got = theta_apply(&m, &g, delta).unwrap();
        let (want, _) = quadrature::integrate_from_zero(
            |s| m.tail(s).unwrap() * (w - s).cos(),
            w,
            QuadOptions::default(),
        )
        .unwrap();
        assert!(rel(got, want) < 1e-6, "{got} vs {want}");
    }

    fn inverse_identity_error(spec: &SubordinatorSpec, n: usize) -> f64 {
        let dt = 1.0 / n as f64;
        let f = |t: f64| (2.0 * t).sin() + t * t;
        let fs: Vec<f64> = (0..=n).map(|k| f(k as f64 * dt)).collect();
        let thetas: Vec<f64> = (0..=n)
            .map(|k| theta_apply_spec(spec, &fs[..=k], dt).unwrap())
            .collect();
        let mut op = DiscreteMemoryOperator::for_subordinator(spec, dt, MemoryScheme::Auto).unwrap();
        (1..=n)
            .map(|k| (op.apply(&thetas[..=k]).unwrap() - fs[k]).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn phi_inverts_theta() {
        for spec in [
            SubordinatorSpec::stable(0.5).unwrap(),
            SubordinatorSpec::stable(0.8).unwrap(),
            SubordinatorSpec::tempered(0.6, 1.0).unwrap(),
        ] {
            let e1 = inverse_identity_error(&spec, 100);
            let e2 = inverse_identity_error(&spec, 200);
            assert!(e1 / e2 >= 1.5, "{spec:?}: {e1} -> {e2}");
        }
    }

    #[test]
    fn theta_commutes_with_time_derivative() {
        let m = LevyMeasureSpec::one_sided_stable(0.6).unwrap();
        let err = |n: usize| {
            let dt = 1.0 / n as f64;
            let f = |t: f64| t * t * (1.0 + t);
            let fs: Vec<f64> = (0..=n).map(|k| f(k as f64 * dt)).collect();
            let diffs: Vec<f64> = fs.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
            (1..n)
                .map(|k| {
                    let lhs = (theta_apply(&m, &fs[..=k + 1], dt).unwrap()
                        - theta_apply(&m, &fs[..=k], dt).unwrap())
                        / dt;
                    let rhs = theta_apply(&m, &diffs[..=k], dt).unwrap();
                    (lhs - rhs).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(100), err(200));
        assert!(e1 / e2 >= 1.5, "{e1} -> {e2}");
    }

    proptest! {
        #[test]
        fn phi_is_linear(a in -3.0f64..3.0, xs in prop::collection::vec(-1.0f64..1.0, 1..40)) {
            let mut op = DiscreteMemoryOperator::grunwald_letnikov(0.7, 0.01).unwrap();
            let scaled: Vec<f64> = xs.iter().map(|x| a * x).collect();
            let lhs = op.apply(&scaled).unwrap();
            let rhs = a * op.apply(&xs).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            prop_assert_eq!(op.apply(&vec![0.0; xs.len()]).unwrap(), 0.0);
        }
    }
}
