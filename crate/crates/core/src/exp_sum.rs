//! Finite exponential sums Σ_α a_α e^{ik(m_α·L)} on an integer frequency lattice.
//!
//! Frequencies are kept as exact integer vectors over the bonds; the physical
//! frequency S = m·L is derived from the bond lengths and cached per term.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::numeric::{Compensated, CompensatedComplex};

/// Coefficients below this fraction of the largest magnitude are dropped.
pub const DEFAULT_PURGE: f64 = 1e-14;

/// Default truncation order of [`ExponentialSum::log_expansion`].
pub const DEFAULT_LOG_ORDER: usize = 12;

/// Integer traversal counts, one per bond.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrequencyVector(SmallVec<[i32; 8]>);

impl FrequencyVector {
    pub fn zeros(dim: usize) -> Self {
        Self(SmallVec::from_elem(0, dim))
    }

    pub fn unit(dim: usize, bond: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[bond] = 1;
        v
    }

    pub fn uniform(dim: usize, value: i32) -> Self {
        Self(SmallVec::from_elem(value, dim))
    }

    pub fn from_counts(counts: &[i32]) -> Self {
        Self(SmallVec::from_slice(counts))
    }

    pub fn counts(&self) -> &[i32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Sum of counts (number of bond traversals for nonnegative vectors).
    pub fn total(&self) -> i64 {
        self.0.iter().map(|&c| c as i64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&c| c >= 0)
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: i32) -> Self {
        Self(self.0.iter().map(|a| a * factor).collect())
    }

    pub fn neg(&self) -> Self {
        self.scale(-1)
    }

    /// Physical frequency Σ m_i L_i.
    pub fn physical(&self, lengths: &[f64]) -> f64 {
        let mut acc = Compensated::new();
        for (&m, &l) in self.0.iter().zip(lengths) {
            if m != 0 {
                acc.add(m as f64 * l);
            }
        }
        acc.value()
    }
}

impl fmt::Debug for FrequencyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl fmt::Display for FrequencyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(" "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithmeticOp {
    Add,
    Mul,
}

/// Result of [`ExponentialSum::recenter`].
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseRecord {
    /// The sum was multiplied by e^{−ik(shift·L)}.
    pub shift: FrequencyVector,
    /// ... and by e^{iθ}.
    pub theta: f64,
    /// Recentered sum is real on the real axis (structurally and on the sample grid).
    pub real: bool,
    /// max |Im| over the grid, relative to Σ|a_α|.
    pub max_imag: f64,
}

#[derive(Clone, Debug)]
pub struct LogOptions {
    pub order: usize,
    /// Drop every product term of total traversal count above this.
    pub max_degree: Option<i64>,
    /// Interval for the |h| < 1 check; defaults to 200 periods of the slowest term.
    pub window: Option<(f64, f64)>,
    pub grid_points: usize,
}

impl Default for LogOptions {
    fn default() -> Self {
        Self {
            order: DEFAULT_LOG_ORDER,
            max_degree: None,
            window: None,
            grid_points: 4096,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LogExpansion {
    pub sum: ExponentialSum,
    /// |h| < 1 held on the whole sample grid.
    pub convergent: bool,
    pub max_abs_h: f64,
}

#[derive(Clone)]
pub struct ExponentialSum {
    lengths: Arc<[f64]>,
    freqs: Vec<FrequencyVector>,
    coeffs: Vec<Complex64>,
    phys: Vec<f64>,
    purge_tol: f64,
}

impl fmt::Debug for ExponentialSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_map();
        for (m, c) in self.freqs.iter().zip(&self.coeffs) {
            list.entry(m, c);
        }
        list.finish()
    }
}

impl ExponentialSum {
    pub fn zero(lengths: &[f64]) -> Self {
        Self::from_shared(lengths.into(), DEFAULT_PURGE)
    }

    fn from_shared(lengths: Arc<[f64]>, purge_tol: f64) -> Self {
        Self {
            lengths,
            freqs: Vec::new(),
            coeffs: Vec::new(),
            phys: Vec::new(),
            purge_tol,
        }
    }

    pub fn constant(lengths: &[f64], c: Complex64) -> Self {
        Self::monomial(lengths, FrequencyVector::zeros(lengths.len()), c)
    }

    pub fn monomial(lengths: &[f64], m: FrequencyVector, c: Complex64) -> Self {
        Self::from_terms(lengths, [(m, c)])
    }

    /// Build from (frequency, coefficient) pairs; repeated frequencies are merged.
    pub fn from_terms<I>(lengths: &[f64], terms: I) -> Self
    where
        I: IntoIterator<Item = (FrequencyVector, Complex64)>,
    {
        let base = Self::zero(lengths);
        let mut acc: HashMap<FrequencyVector, CompensatedComplex> = HashMap::new();
        for (m, c) in terms {
            assert_eq!(m.dim(), lengths.len(), "frequency vector has wrong dimension");
            acc.entry(m).or_default().add(c);
        }
        base.assemble(acc)
    }

    /// A new empty sum sharing this sum's lengths and purge tolerance.
    pub fn empty_like(&self) -> Self {
        Self::from_shared(self.lengths.clone(), self.purge_tol)
    }

    fn assemble(&self, acc: HashMap<FrequencyVector, CompensatedComplex>) -> Self {
        let mut items: Vec<(FrequencyVector, Complex64)> =
            acc.into_iter().map(|(m, c)| (m, c.value())).collect();
        items.sort_by(|a, b| a.0.cmp(&b.0));
        self.assemble_sorted(items)
    }

    fn assemble_sorted(&self, items: Vec<(FrequencyVector, Complex64)>) -> Self {
        let max = items.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        let cut = self.purge_tol * max;
        let mut out = self.empty_like();
        for (m, c) in items {
            let a = c.norm();
            if a == 0.0 || a < cut {
                continue;
            }
            out.phys.push(m.physical(&self.lengths));
            out.freqs.push(m);
            out.coeffs.push(c);
        }
        out
    }

    /// Same sum, re-purged with a new relative tolerance that later ops inherit.
    pub fn with_purge_tolerance(&self, tol: f64) -> Self {
        let mut base = self.empty_like();
        base.purge_tol = tol;
        base.assemble_sorted(self.iter().map(|(m, c, _)| (m.clone(), c)).collect())
    }

    /// Drop terms below `tol` times `scale` (absolute cut relative to an external scale).
    pub fn purge_below(&self, tol: f64, scale: f64) -> Self {
        let cut = tol * scale;
        let mut out = self.empty_like();
        for (m, c, s) in self.iter() {
            if c.norm() >= cut && c.norm() > 0.0 {
                out.freqs.push(m.clone());
                out.coeffs.push(c);
                out.phys.push(s);
            }
        }
        out
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn purge_tolerance(&self) -> f64 {
        self.purge_tol
    }

    /// Terms in ascending frequency-vector order: (m, a, S).
    pub fn iter(&self) -> impl Iterator<Item = (&FrequencyVector, Complex64, f64)> + '_ {
        self.freqs
            .iter()
            .zip(self.coeffs.iter().copied())
            .zip(self.phys.iter().copied())
            .map(|((m, c), s)| (m, c, s))
    }

    pub fn coefficient(&self, m: &FrequencyVector) -> Complex64 {
        match self.freqs.binary_search(m) {
            Ok(i) => self.coeffs[i],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Σ|a_α|·|S_α|^j, an upper bound on |j-th derivative| along the real axis.
    pub fn magnitude_bound(&self, j: u32) -> f64 {
        let mut acc = Compensated::new();
        for (_, c, s) in self.iter() {
            acc.add(c.norm() * s.abs().powi(j as i32));
        }
        acc.value()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        if !Arc::ptr_eq(&self.lengths, &other.lengths) && self.lengths[..] != other.lengths[..] {
            return Err(Error::LengthMismatch);
        }
        Ok(())
    }

    pub fn arithmetic(&self, other: &Self, op: ArithmeticOp) -> Result<Self> {
        match op {
            ArithmeticOp::Add => self.add(other),
            ArithmeticOp::Mul => self.mul(other),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut acc: HashMap<FrequencyVector, CompensatedComplex> =
            HashMap::with_capacity(self.len() + other.len());
        for (m, c, _) in self.iter().chain(other.iter()) {
            acc.entry(m.clone()).or_default().add(c);
        }
        let mut out = self.assemble(acc);
        out.purge_tol = self.purge_tol.min(other.purge_tol);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_truncated(other, None)
    }

    /// Product keeping only terms with total traversal count ≤ `max_degree`.
    pub fn mul_truncated(&self, other: &Self, max_degree: Option<i64>) -> Result<Self> {
        match max_degree {
            None => self.mul_filtered(other, |_| true),
            Some(limit) => self.mul_filtered(other, |m| m.total() <= limit),
        }
    }

    /// Product keeping only frequency vectors accepted by `keep`.
    pub fn mul_filtered<F>(&self, other: &Self, keep: F) -> Result<Self>
    where
        F: Fn(&FrequencyVector) -> bool,
    {
        self.check_compatible(other)?;
        let mut acc: HashMap<FrequencyVector, CompensatedComplex> =
            HashMap::with_capacity(self.len().max(other.len()));
        for (ma, ca, _) in self.iter() {
            for (mb, cb, _) in other.iter() {
                let m = ma.add(mb);
                if keep(&m) {
                    acc.entry(m).or_default().add(ca * cb);
                }
            }
        }
        let mut out = self.assemble(acc);
        out.purge_tol = self.purge_tol.min(other.purge_tol);
        Ok(out)
    }

    /// Σ w_i·s_i over sums sharing `self`'s lengths.
    pub fn linear_combination(&self, items: &[(Complex64, &ExponentialSum)]) -> Result<Self> {
        let mut acc: HashMap<FrequencyVector, CompensatedComplex> = HashMap::new();
        for (w, s) in items {
            self.check_compatible(s)?;
            for (m, c, _) in s.iter() {
                acc.entry(m.clone()).or_default().add(c * w);
            }
        }
        Ok(self.assemble(acc))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let items = self.iter().map(|(m, a, _)| (m.clone(), a * c)).collect();
        self.assemble_sorted(items)
    }

    /// Multiply by e^{ik(shift·L)}; `shift` may have negative entries.
    pub fn shift(&self, shift: &FrequencyVector) -> Self {
        assert_eq!(shift.dim(), self.dim());
        let items = self.iter().map(|(m, a, _)| (m.add(shift), a)).collect();
        // componentwise addition of a constant vector preserves lexicographic order
        self.assemble_sorted(items)
    }

    /// j-th derivative in k: a_α → a_α (iS_α)^j.
    pub fn differentiate(&self, j: u32) -> Self {
        if j == 0 {
            return self.clone();
        }
        let items = self
            .iter()
            .map(|(m, a, s)| (m.clone(), a * Complex64::new(0.0, s).powu(j)))
            .collect();
        self.assemble_sorted(items)
    }

    pub fn evaluate(&self, k: f64) -> Complex64 {
        let mut acc = CompensatedComplex::default();
        for (c, &s) in self.coeffs.iter().zip(&self.phys) {
            let (sn, cs) = (k * s).sin_cos();
            acc.add(Complex64::new(c.re * cs - c.im * sn, c.re * sn + c.im * cs));
        }
        acc.value()
    }

    /// Real part of [`evaluate`](Self::evaluate), cheaper for realified sums.
    pub fn evaluate_real(&self, k: f64) -> f64 {
        let mut acc = Compensated::new();
        for (c, &s) in self.coeffs.iter().zip(&self.phys) {
            let (sn, cs) = (k * s).sin_cos();
            acc.add(c.re * cs - c.im * sn);
        }
        acc.value()
    }

    /// Evaluation off the real axis.
    pub fn evaluate_complex(&self, k: Complex64) -> Complex64 {
        let mut acc = CompensatedComplex::default();
        for (c, &s) in self.coeffs.iter().zip(&self.phys) {
            let damp = (-k.im * s).exp();
            let (sn, cs) = (k.re * s).sin_cos();
            acc.add(*c * Complex64::new(cs * damp, sn * damp));
        }
        acc.value()
    }

    /// Terms with the smallest and largest physical frequency (indices into iteration order).
    pub fn extreme_terms(&self) -> Option<(usize, usize)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = 0;
        let mut hi = 0;
        for i in 1..self.len() {
            if self.phys[i] < self.phys[lo] {
                lo = i;
            }
            if self.phys[i] > self.phys[hi] {
                hi = i;
            }
        }
        Some((lo, hi))
    }

    pub fn term(&self, index: usize) -> (&FrequencyVector, Complex64, f64) {
        (&self.freqs[index], self.coeffs[index], self.phys[index])
    }

    pub fn frequency_range(&self) -> Option<(f64, f64)> {
        self.extreme_terms().map(|(lo, hi)| (self.phys[lo], self.phys[hi]))
    }

    /// Shift the frequency midpoint to zero and rotate the constant phase so the
    /// sum is real on the axis when its coefficients pair up as c(−m) = conj c(m).
    pub fn recenter(&self) -> Result<(Self, PhaseRecord)> {
        let (lo, hi) = self
            .extreme_terms()
            .ok_or_else(|| Error::InvalidArgument("cannot recenter the zero sum".into()))?;
        let (m_lo, c_lo, _) = self.term(lo);
        let (m_hi, c_hi, _) = self.term(hi);
        let twice = m_lo.add(m_hi);
        let integral = twice.counts().iter().all(|c| c % 2 == 0);
        let mid = FrequencyVector(twice.counts().iter().map(|c| c.div_euclid(2)).collect());
        let theta = -(c_lo.arg() + c_hi.arg()) / 2.0;
        let out = self.shift(&mid.neg()).scale(Complex64::from_polar(1.0, theta));

        let total = out.magnitude_bound(0);
        let mut pairing: f64 = 0.0;
        for (m, c, _) in out.iter() {
            let partner = out.coefficient(&m.neg());
            pairing = pairing.max((c - partner.conj()).norm());
        }
        let pairing = pairing / out.max_abs_coefficient();
        let width = out.frequency_range().map(|(a, b)| b - a).unwrap_or(0.0);
        let span = if width > 0.0 {
            400.0 * std::f64::consts::PI / width
        } else {
            1.0
        };
        let mut max_imag: f64 = 0.0;
        let n = 1000;
        for i in 0..n {
            let k = span * (i as f64 + 0.5) / n as f64;
            max_imag = max_imag.max(out.evaluate(k).im.abs());
        }
        let max_imag = max_imag / total;
        let real = integral && pairing < 1e-10 && max_imag < 1e-10;
        Ok((
            out,
            PhaseRecord {
                shift: mid,
                theta,
                real,
                max_imag,
            },
        ))
    }

    /// Truncated series log(1+h) = h − h²/2 + … ± h^M/M.
    pub fn log_expansion(&self, opts: &LogOptions) -> Result<LogExpansion> {
        if self.is_empty() {
            return Ok(LogExpansion {
                sum: self.clone(),
                convergent: true,
                max_abs_h: 0.0,
            });
        }
        if self.phys.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidArgument(
                "log expansion needs strictly positive frequencies".into(),
            ));
        }
        if opts.max_degree.is_some() && self.freqs.iter().any(|m| !m.is_nonnegative()) {
            return Err(Error::InvalidArgument(
                "degree truncation needs nonnegative frequency vectors".into(),
            ));
        }
        let s_min = self.phys.iter().copied().fold(f64::INFINITY, f64::min);
        let (a, b) = opts
            .window
            .unwrap_or((0.0, 200.0 * std::f64::consts::TAU / s_min));
        let mut max_abs_h: f64 = 0.0;
        let n = opts.grid_points.max(2);
        for i in 0..n {
            let k = a + (b - a) * i as f64 / (n - 1) as f64;
            max_abs_h = max_abs_h.max(self.evaluate(k).norm());
        }
        let convergent = max_abs_h < 1.0;
        if !convergent {
            log::warn!("log expansion outside its disc of convergence: max |h| = {max_abs_h:.3}");
        }

        let mut power = self.clone();
        let mut acc: HashMap<FrequencyVector, CompensatedComplex> = HashMap::new();
        for order in 1..=opts.order.max(1) {
            if order > 1 {
                power = power.mul_truncated(self, opts.max_degree)?;
                if power.is_empty() {
                    break;
                }
            }
            let sign = if order % 2 == 1 { 1.0 } else { -1.0 };
            let w = Complex64::new(sign / order as f64, 0.0);
            for (m, c, _) in power.iter() {
                acc.entry(m.clone()).or_default().add(c * w);
            }
        }
        Ok(LogExpansion {
            sum: self.assemble(acc),
            convergent,
            max_abs_h,
        })
    }
}
