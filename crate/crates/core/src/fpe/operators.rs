//! Spatial operators on a uniform grid with zero extension outside it.
//!
//! Each operator can be applied directly or assembled into a matrix; the
//! solver uses the assembled form to get row sums (stability) and column
//! sums (mass leaving the grid).

use std::collections::HashMap;

use crate::density::Grid;
use crate::error::{Error, Result};
use crate::exprparse::CoefficientField;
use crate::levy::{JumpNoiseSpec, LevyMeasureSpec, Support};

/// Tridiagonal matrix; `lower[i]` multiplies `g[i-1]`, `upper[i]` `g[i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        self.apply_add(g, 1.0, &mut out);
        out
    }

    /// `out += scale · A g`.
    pub fn apply_add(&self, g: &[f64], scale: f64, out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * g[i];
            if i > 0 {
                v += self.lower[i] * g[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * g[i + 1];
            }
            out[i] += scale * v;
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut s = self.diag[j];
                if j > 0 {
                    s += self.upper[j - 1];
                }
                if j + 1 < n {
                    s += self.lower[j + 1];
                }
                s
            })
            .collect()
    }

    pub fn max_row_abs_sum(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.lower[i].abs();
                }
                if i + 1 < n {
                    s += self.upper[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }
}

/// Band matrix; row `i` stores columns `i − kl ..= i + ku`.
#[derive(Debug, Clone, PartialEq)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn from_tridiagonal(t: &Tridiagonal) -> Self {
        let mut b = Self::zeros(t.len(), 1, 1);
        for i in 0..t.len() {
            b.add(i, i, t.diag[i]);
            if i > 0 {
                b.add(i, i - 1, t.lower[i]);
            }
            if i + 1 < t.len() {
                b.add(i, i + 1, t.upper[i]);
            }
        }
        b
    }

    /// Widens the band to at least `kl` below and `ku` above.
    pub fn widen(&self, kl: usize, ku: usize) -> Self {
        let (kl, ku) = (kl.max(self.kl), ku.max(self.ku));
        if (kl, ku) == (self.kl, self.ku) {
            return self.clone();
        }
        let mut b = Self::zeros(self.n, kl, ku);
        for i in 0..self.n {
            for j in self.cols(i) {
                b.add(i, j, self.get(i, j));
            }
        }
        b
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` at `(i, j)`; panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i},{j}) lies outside the band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn apply_add(&self, g: &[f64], scale: f64, out: &mut [f64]) {
        for i in 0..self.n {
            let mut v = 0.0;
            for j in self.cols(i) {
                v += self.data[self.idx(i, j)] * g[j];
            }
            out[i] += scale * v;
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for i in 0..self.n {
            for j in self.cols(i) {
                s[j] += self.data[self.idx(i, j)];
            }
        }
        s
    }

    pub fn max_row_abs_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| self.cols(i).map(|j| self.data[self.idx(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// LU factors of `I − c A`, without pivoting.
    pub fn factor_shifted(&self, c: f64) -> Result<BandedLu> {
        let mut m = self.clone();
        for v in m.data.iter_mut() {
            *v *= -c;
        }
        for i in 0..m.n {
            let k = m.idx(i, i);
            m.data[k] += 1.0;
        }
        for k in 0..m.n {
            let pivot = m.data[m.idx(k, k)];
            if !(pivot.abs() > 1e-300) || !pivot.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "implicit solve hit a zero pivot at row {k}"
                )));
            }
            for i in k + 1..(k + m.kl + 1).min(m.n) {
                let ik = m.idx(i, k);
                let l = m.data[ik] / pivot;
                m.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..(k + m.ku + 1).min(m.n) {
                    let kj = m.data[m.idx(k, j)];
                    let ij = m.idx(i, j);
                    m.data[ij] -= l * kj;
                }
            }
        }
        Ok(BandedLu { m })
    }
}

/// Factored `I − c A` from [`Banded::factor_shifted`].
#[derive(Debug, Clone, PartialEq)]
pub struct BandedLu {
    m: Banded,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = &self.m;
        let mut y = rhs.to_vec();
        for i in 0..m.n {
            let mut v = y[i];
            for j in i.saturating_sub(m.kl)..i {
                v -= m.data[m.idx(i, j)] * y[j];
            }
            y[i] = v;
        }
        for i in (0..m.n).rev() {
            let mut v = y[i];
            for j in i + 1..(i + m.ku + 1).min(m.n) {
                v -= m.data[m.idx(i, j)] * y[j];
            }
            y[i] = v / m.data[m.idx(i, i)];
        }
        y
    }
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRows {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    /// Builds from per-row `(column, value)` lists; duplicate columns are summed.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply_add(&self, g: &[f64], scale: f64, out: &mut [f64]) {
        for i in 0..self.n {
            let mut v = 0.0;
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                v += self.vals[e] * g[self.cols[e]];
            }
            out[i] += scale * v;
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for (c, v) in self.cols.iter().zip(&self.vals) {
            s[*c] += v;
        }
        s
    }

    pub fn max_row_abs_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().map(|v| v.abs()).sum())
            .fold(0.0, f64::max)
    }

    /// `(row, column, value)` for every stored entry.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |e| (i, self.cols[e], self.vals[e]))
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[i][self.cols[e]] += self.vals[e];
            }
        }
        d
    }
}

/// `A_ij = col[|i − j|]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricToeplitz {
    pub col: Vec<f64>,
}

impl SymmetricToeplitz {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.col[i.abs_diff(j)]
    }

    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let n = self.col.len();
        (0..n)
            .map(|i| {
                let mut v = 0.0;
                for (j, gj) in g.iter().enumerate() {
                    v += self.col[i.abs_diff(j)] * gj;
                }
                v
            })
            .collect()
    }
}

/// Jump part of the spatial operator, assembled at one time level.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpMatrix {
    /// `A · diag(m)` with `A` the fractional-Laplacian matrix.
    Scaled { base: SymmetricToeplitz, multiplier: Vec<f64> },
    Sparse(SparseRows),
}

impl JumpMatrix {
    pub fn apply_add(&self, g: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            JumpMatrix::Scaled { base, multiplier } => {
                let mg: Vec<f64> = g.iter().zip(multiplier).map(|(a, b)| a * b).collect();
                for (o, v) in out.iter_mut().zip(base.apply(&mg)) {
                    *o += scale * v;
                }
            }
            JumpMatrix::Sparse(s) => s.apply_add(g, scale, out),
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        match self {
            JumpMatrix::Scaled { base, multiplier } => {
                let n = base.col.len();
                let mut prefix = vec![0.0; n + 1];
                for d in 0..n {
                    prefix[d + 1] = prefix[d] + base.col[d];
                }
                // Σ_i col[|i−j|] = Σ_{d≤j} col[d] + Σ_{d≤n−1−j} col[d] − col[0]
                (0..n)
                    .map(|j| multiplier[j] * (prefix[j + 1] + prefix[n - j] - base.col[0]))
                    .collect()
            }
            JumpMatrix::Sparse(s) => s.column_sums(),
        }
    }

    pub fn max_row_abs_sum(&self) -> f64 {
        match self {
            JumpMatrix::Scaled { base, multiplier } => {
                let n = base.col.len();
                (0..n)
                    .map(|i| (0..n).map(|j| (base.col[i.abs_diff(j)] * multiplier[j]).abs()).sum())
                    .fold(0.0, f64::max)
            }
            JumpMatrix::Sparse(s) => s.max_row_abs_sum(),
        }
    }
}

fn eval_nodes(grid: &Grid, f: impl Fn(f64) -> f64, lo_pad: usize, hi_pad: usize) -> Vec<f64> {
    let dx = grid.dx();
    let n = grid.len() as isize;
    (-(lo_pad as isize)..n + hi_pad as isize)
        .map(|i| f(grid.x_min() + i as f64 * dx))
        .collect()
}

/// Flux-form central differences for `−∂ₓ(F g) + ½∂ₓₓ(σ² g)` at time `t`.
pub fn drift_diffusion_matrix(grid: &Grid, coeffs: &CoefficientField, t: f64) -> Result<Tridiagonal> {
    let n = grid.len();
    if n < 5 {
        return Err(Error::Domain(format!("drift-diffusion needs n_x ≥ 5, got {n}")));
    }
    let dx = grid.dx();
    // nodes −1..=n, so f[i + 1] is node i
    let f = eval_nodes(grid, |x| coeffs.drift(x, t), 1, 1);
    if let Some(bad) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::Contract(format!(
            "drift is {} at x={}",
            f[bad],
            grid.x_min() + (bad as f64 - 1.0) * dx
        )));
    }
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let s = coeffs.sigma(grid.x(i), t)?;
        d.push(0.5 * s * s);
    }
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let dx2 = dx * dx;
    for i in 0..n {
        let f_minus = 0.5 * (f[i] + f[i + 1]);
        let f_plus = 0.5 * (f[i + 1] + f[i + 2]);
        lower[i] = f_minus / (2.0 * dx);
        upper[i] = -f_plus / (2.0 * dx);
        diag[i] = -(f_plus - f_minus) / (2.0 * dx) - 2.0 * d[i] / dx2;
        if i > 0 {
            lower[i] += d[i - 1] / dx2;
        }
        if i + 1 < n {
            upper[i] += d[i + 1] / dx2;
        }
    }
    Ok(Tridiagonal { lower, diag, upper })
}

pub fn drift_diffusion_apply(g: &[f64], grid: &Grid, coeffs: &CoefficientField, t: f64) -> Result<Vec<f64>> {
    check_len(g, grid)?;
    Ok(drift_diffusion_matrix(grid, coeffs, t)?.apply(g))
}

fn check_len(g: &[f64], grid: &Grid) -> Result<()> {
    if g.len() != grid.len() {
        return Err(Error::Contract(format!(
            "grid function has {} values for a grid of {}",
            g.len(),
            grid.len()
        )));
    }
    Ok(())
}

fn check_stable_alpha(alpha: f64) -> Result<()> {
    if alpha == 1.0 {
        return Err(Error::Unsupported(
            "the Riesz normalization 1/(2cos(πα/2)) is singular at α = 1".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("fractional Laplacian needs α in (0,2), got {alpha}")));
    }
    Ok(())
}

/// GL coefficients `w_k = (−1)^k C(α, k)`.
pub fn gl_coefficients(alpha: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n);
    let mut cur = 1.0;
    for k in 0..n {
        if k > 0 {
            cur *= 1.0 - (alpha + 1.0) / k as f64;
        }
        w.push(cur);
    }
    w
}

/// Matrix of `−(−Δ)^{α/2}` from two-sided shifted GL sums on `n` nodes.
pub fn frac_laplacian_matrix(n: usize, dx: f64, alpha: f64) -> Result<SymmetricToeplitz> {
    check_stable_alpha(alpha)?;
    let shift = if alpha > 1.0 { 1 } else { 0 };
    let w = gl_coefficients(alpha, n + 2);
    let c = -1.0 / (2.0 * (std::f64::consts::FRAC_PI_2 * alpha).cos() * dx.powf(alpha));
    let col = (0..n)
        .map(|d| {
            let right = w[d + shift];
            let left = if d <= shift { w[shift - d] } else { 0.0 };
            c * (right + left)
        })
        .collect();
    Ok(SymmetricToeplitz { col })
}

pub fn frac_laplacian_apply(g: &[f64], grid: &Grid, alpha: f64) -> Result<Vec<f64>> {
    check_len(g, grid)?;
    Ok(frac_laplacian_matrix(grid.len(), grid.dx(), alpha)?.apply(g))
}

/// Pointwise multiplier `|h(x,t)|^α` of the stable-jump operator.
///
/// The multiplier is even in `h`: the driving noise is symmetric, so `h` and
/// `−h` give the same process law.
pub fn stable_jump_multiplier(grid: &Grid, coeffs: &CoefficientField, t: f64, alpha: f64) -> Result<Vec<f64>> {
    (0..grid.len())
        .map(|i| {
            let h = coeffs.jump(grid.x(i), t);
            if !h.is_finite() {
                return Err(Error::Contract(format!("jump coefficient is {h} at x={}", grid.x(i))));
            }
            Ok(h.abs().powf(alpha))
        })
        .collect()
}

pub fn stable_jump_matrix(grid: &Grid, coeffs: &CoefficientField, t: f64, alpha: f64) -> Result<JumpMatrix> {
    Ok(JumpMatrix::Scaled {
        base: frac_laplacian_matrix(grid.len(), grid.dx(), alpha)?,
        multiplier: stable_jump_multiplier(grid, coeffs, t, alpha)?,
    })
}

pub fn stable_jump_apply(g: &[f64], grid: &Grid, coeffs: &CoefficientField, t: f64, alpha: f64) -> Result<Vec<f64>> {
    check_len(g, grid)?;
    let m = stable_jump_multiplier(grid, coeffs, t, alpha)?;
    let mg: Vec<f64> = g.iter().zip(&m).map(|(a, b)| a * b).collect();
    frac_laplacian_apply(&mg, grid, alpha)
}

/// Positive half of a symmetric jump measure, as seen by the quadrature.
pub trait RadialMeasure {
    /// `ν((s, ∞))`.
    fn tail(&self, s: f64) -> Result<f64>;
    /// `∫_{lo ≤ s < hi} s^k ν(ds)` for `k ∈ {1, 2}`.
    fn moment(&self, k: u32, lo: f64, hi: f64) -> Result<f64>;
}

impl RadialMeasure for LevyMeasureSpec {
    fn tail(&self, s: f64) -> Result<f64> {
        LevyMeasureSpec::tail(self, s)
    }

    fn moment(&self, k: u32, lo: f64, hi: f64) -> Result<f64> {
        self.positive_moment(k, lo, hi)
    }
}

/// Geometric radii in `r`-space and their grid offsets.
struct RadialNodes {
    r: Vec<f64>,
    r_taylor: f64,
    r_far: f64,
}

const TAYLOR_CELLS: f64 = 4.0;
const NODE_RATIO: f64 = 1.05;

impl RadialNodes {
    fn new(grid: &Grid) -> Self {
        let dx = grid.dx();
        let r_taylor = TAYLOR_CELLS * dx;
        let r_far = grid.x_max() - grid.x_min() + dx;
        let m = ((r_far / r_taylor).ln() / NODE_RATIO.ln()).ceil().max(1.0) as usize;
        let ratio = (r_far / r_taylor).powf(1.0 / m as f64);
        let r = (0..=m).map(|q| r_taylor * ratio.powi(q as i32)).collect();
        Self { r, r_taylor, r_far }
    }
}

/// Symmetric stencil `(offset, weight)` of `∫_{s>0}[g(x+sa)+g(x−sa)−2g(x)]ν(ds)`.
fn symmetric_stencil<M: RadialMeasure + ?Sized>(
    measure: &M,
    a: f64,
    nodes: &RadialNodes,
    dx: f64,
) -> Result<Vec<(isize, f64)>> {
    let mut acc: HashMap<isize, f64> = HashMap::new();
    let mut add = |o: isize, w: f64| *acc.entry(o).or_insert(0.0) += w;
    // r ↦ ν'(dr) is ν(dr/a)
    let r = &nodes.r;
    let mut node_w = vec![0.0; r.len()];
    for q in 0..r.len() - 1 {
        let (lo, hi) = (r[q] / a, r[q + 1] / a);
        let m0 = measure.tail(lo)? - measure.tail(hi)?;
        let m1 = a * measure.moment(1, lo, hi)?;
        let width = r[q + 1] - r[q];
        let upper = ((m1 - r[q] * m0) / width).clamp(0.0, m0);
        node_w[q] += m0 - upper;
        node_w[q + 1] += upper;
    }
    for (q, w) in node_w.iter().enumerate() {
        let pos = r[q] / dx;
        let k = pos.floor();
        let theta = pos - k;
        let k = k as isize;
        add(k, w * (1.0 - theta));
        add(k + 1, w * theta);
        add(-k, w * (1.0 - theta));
        add(-k - 1, w * theta);
        add(0, -2.0 * w);
    }
    let near = a * a * measure.moment(2, 0.0, nodes.r_taylor / a)? / (dx * dx);
    add(1, near);
    add(-1, near);
    add(0, -2.0 * near);
    add(0, -2.0 * measure.tail(nodes.r_far / a)?);
    let mut out: Vec<(isize, f64)> = acc.into_iter().filter(|(_, w)| *w != 0.0).collect();
    out.sort_by_key(|e| e.0);
    Ok(out)
}

fn jump_values(grid: &Grid, coeffs: &CoefficientField, t: f64) -> Result<Vec<f64>> {
    (0..grid.len())
        .map(|i| {
            let h = coeffs.jump(grid.x(i), t);
            if h.is_finite() {
                Ok(h)
            } else {
                Err(Error::Contract(format!("jump coefficient is {h} at x={}", grid.x(i))))
            }
        })
        .collect()
}

/// Assembles the pushforward quadrature for an arbitrary radial measure.
pub fn symmetric_jump_matrix_with<M: RadialMeasure + ?Sized>(
    grid: &Grid,
    coeffs: &CoefficientField,
    t: f64,
    measure: &M,
) -> Result<SparseRows> {
    let n = grid.len();
    let nodes = RadialNodes::new(grid);
    let h = jump_values(grid, coeffs, t)?;
    let mut cache: HashMap<u64, Vec<(isize, f64)>> = HashMap::new();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let a = h[i].abs();
        let mut row = Vec::new();
        if a > 1e-300 {
            if let std::collections::hash_map::Entry::Vacant(e) = cache.entry(a.to_bits()) {
                e.insert(symmetric_stencil(measure, a, &nodes, grid.dx())?);
            }
            for &(o, w) in &cache[&a.to_bits()] {
                let j = i as isize + o;
                if j >= 0 && (j as usize) < n {
                    row.push((j as usize, w));
                }
            }
        }
        rows.push(row);
    }
    Ok(SparseRows::from_rows(n, rows))
}

fn require_symmetric(measure: &LevyMeasureSpec) -> Result<()> {
    if measure.support() != Support::Symmetric {
        return Err(Error::Contract(
            "the symmetric jump operator needs a symmetric Lévy measure".into(),
        ));
    }
    Ok(())
}

pub fn symmetric_jump_matrix(
    grid: &Grid,
    coeffs: &CoefficientField,
    t: f64,
    measure: &LevyMeasureSpec,
) -> Result<SparseRows> {
    require_symmetric(measure)?;
    symmetric_jump_matrix_with(grid, coeffs, t, measure)
}

pub fn symmetric_jump_apply(
    g: &[f64],
    grid: &Grid,
    coeffs: &CoefficientField,
    t: f64,
    measure: &LevyMeasureSpec,
) -> Result<Vec<f64>> {
    check_len(g, grid)?;
    let m = symmetric_jump_matrix(grid, coeffs, t, measure)?;
    let mut out = vec![0.0; g.len()];
    m.apply_add(g, 1.0, &mut out);
    Ok(out)
}

/// Finite-difference weights (Fornberg) for derivatives `0..=m` at `z`.
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Second-order central stencil for the `k`-th derivative on unit spacing.
pub fn central_stencil(k: usize) -> Vec<(isize, f64)> {
    let half = k.div_ceil(2);
    let offsets: Vec<f64> = (-(half as isize)..=half as isize).map(|o| o as f64).collect();
    let w = fd_weights(0.0, &offsets, k);
    offsets.iter().zip(&w[k]).map(|(o, w)| (*o as isize, *w)).collect()
}

pub const SERIES_MIN_TERMS: usize = 2;
pub const SERIES_MAX_TERMS: usize = 12;

/// Coefficients `c_k` of `Σ_k c_k ∂ᵏ(hᵏ g)`, index `k − 1`.
///
/// `c_k = (−1)^k μ_k / k!` for `k ≥ 2`; the first-order term keeps only the
/// jumps beyond the cutoff, `c_1 = −∫_{|r|≥cutoff} r ν(dr)`.
pub fn series_coefficients(noise: &JumpNoiseSpec, k_max: usize) -> Result<Vec<f64>> {
    if !(SERIES_MIN_TERMS..=SERIES_MAX_TERMS).contains(&k_max) {
        return Err(Error::Domain(format!(
            "series truncation K must lie in [{SERIES_MIN_TERMS}, {SERIES_MAX_TERMS}], got {k_max}"
        )));
    }
    let m = &noise.measure;
    let mut out = Vec::with_capacity(k_max);
    let mut factorial = 1.0;
    for k in 1..=k_max {
        factorial *= k as f64;
        let mu = if k == 1 {
            m.moment_range(1, noise.jump_cutoff, f64::INFINITY)?
        } else {
            m.moment_range(k as u32, 0.0, f64::INFINITY)?
        };
        if !mu.is_finite() {
            return Err(Error::Unsupported(format!(
                "the derivative series needs finite jump moments; moment {k} of this measure diverges"
            )));
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out.push(sign * mu / factorial);
    }
    Ok(out)
}

/// Result of the series operator, with its truncation diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesOutput {
    pub values: Vec<f64>,
    /// Per-order contributions `c_k ∂ᵏ(hᵏ g)`, index `k − 1`.
    pub terms: Vec<Vec<f64>>,
    /// Set when the last nonvanishing term outweighs the one before it.
    pub truncation_warning: bool,
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn truncation_warning(terms: &[Vec<f64>], coeffs: &[f64]) -> bool {
    let live: Vec<f64> = terms
        .iter()
        .zip(coeffs)
        .filter(|(_, c)| **c != 0.0)
        .map(|(t, _)| l2(t))
        .collect();
    live.len() >= 2 && live[live.len() - 1] > live[live.len() - 2]
}

fn series_rows(grid: &Grid, h: &[f64], coeffs: &[f64], only: Option<usize>) -> SparseRows {
    let n = grid.len();
    let dx = grid.dx();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (idx, c) in coeffs.iter().enumerate() {
        let k = idx + 1;
        if *c == 0.0 || only.is_some_and(|o| o != k) {
            continue;
        }
        let scale = c / dx.powi(k as i32);
        let stencil = central_stencil(k);
        for (i, row) in rows.iter_mut().enumerate() {
            for &(o, w) in &stencil {
                let j = i as isize + o;
                if j >= 0 && (j as usize) < n {
                    let j = j as usize;
                    row.push((j, scale * w * h[j].powi(k as i32)));
                }
            }
        }
    }
    SparseRows::from_rows(n, rows)
}

pub fn general_series_matrix(
    grid: &Grid,
    coeffs: &CoefficientField,
    t: f64,
    noise: &JumpNoiseSpec,
    k_max: usize,
) -> Result<SparseRows> {
    let c = series_coefficients(noise, k_max)?;
    let h = jump_values(grid, coeffs, t)?;
    Ok(series_rows(grid, &h, &c, None))
}

pub fn general_series_apply(
    g: &[f64],
    grid: &Grid,
    coeffs: &CoefficientField,
    t: f64,
    noise: &JumpNoiseSpec,
    k_max: usize,
) -> Result<SeriesOutput> {
    check_len(g, grid)?;
    let c = series_coefficients(noise, k_max)?;
    let h = jump_values(grid, coeffs, t)?;
    let mut values = vec![0.0; g.len()];
    let mut terms = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut term = vec![0.0; g.len()];
        series_rows(grid, &h, &c, Some(k)).apply_add(g, 1.0, &mut term);
        for (v, t) in values.iter_mut().zip(&term) {
            *v += t;
        }
        terms.push(term);
    }
    let truncation_warning = truncation_warning(&terms, &c);
    Ok(SeriesOutput {
        values,
        terms,
        truncation_warning,
    })
}
