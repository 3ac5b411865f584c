//! The spectral determinant Δ(k) = det(I − T(k)), its derivative levels and
//! their real roots, and the level densities built from them.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exp_sum::{ExponentialSum, FrequencyVector, LogOptions, PhaseRecord};
use crate::graph::TransitionMatrix;
use crate::numeric::{wrap_angle, CompensatedComplex};

/// Bisection stops once the bracket is narrower than this many mean spacings.
pub const BISECTION_TOL: f64 = 1e-12;
/// Endpoint nudge, in mean spacings.
pub const ENDPOINT_EPS: f64 = 1e-9;
/// Half-height of the argument-principle contour, in mean spacings.
pub const CONTOUR_ETA: f64 = 1e-4;

/// tr(T^m) for m = 1..=max_m.
///
/// With `cap = Some(c)`, terms whose count on any bond exceeds `c` are dropped
/// from every intermediate power. This is exact for the truncated traces because
/// counts never decrease under multiplication by T.
pub fn trace_powers(t: &TransitionMatrix, max_m: usize, cap: Option<i32>) -> Vec<ExponentialSum> {
    let n = t.dim();
    let lengths = t.lengths().to_vec();
    let zero = ExponentialSum::zero(&lengths);
    let columns: Vec<Vec<(usize, Complex64, FrequencyVector)>> = (0..n).map(|c| t.column(c)).collect();
    let keep = |m: &FrequencyVector| cap.map_or(true, |c| m.counts().iter().all(|&x| x <= c));

    let mut power: Vec<ExponentialSum> = (0..n * n).map(|i| t.entry(i / n, i % n).clone()).collect();
    let mut traces = Vec::with_capacity(max_m);
    for m in 1..=max_m {
        if m > 1 {
            let rows: Vec<Vec<ExponentialSum>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let col = &columns[j];
                            if col.is_empty() {
                                return zero.clone();
                            }
                            let items: Vec<(Complex64, &ExponentialSum)> =
                                col.iter().map(|(l, s, _)| (*s, &power[i * n + l])).collect();
                            let combined = zero.linear_combination(&items).expect("same lengths");
                            let shifted = combined.shift(&col[0].2);
                            if cap.is_some() {
                                filter_terms(&shifted, keep)
                            } else {
                                shifted
                            }
                        })
                        .collect()
                })
                .collect();
            power = rows.into_iter().flatten().collect();
        }
        let diag: Vec<(Complex64, &ExponentialSum)> =
            (0..n).map(|i| (Complex64::new(1.0, 0.0), &power[i * n + i])).collect();
        traces.push(zero.linear_combination(&diag).expect("same lengths"));
    }
    traces
}

fn filter_terms<F: Fn(&FrequencyVector) -> bool>(s: &ExponentialSum, keep: F) -> ExponentialSum {
    ExponentialSum::from_terms(
        s.lengths(),
        s.iter().filter(|(m, _, _)| keep(m)).map(|(m, c, _)| (m.clone(), c)),
    )
    .with_purge_tolerance(s.purge_tolerance())
}

/// det(I − T) as an exponential sum, via Newton's identities on the traces.
pub fn determinant_sum(t: &TransitionMatrix) -> Result<ExponentialSum> {
    let n = t.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty transition matrix".into()));
    }
    // every bond has two directed copies, so no principal minor traverses a bond more than twice
    let cap = 2;
    let traces = trace_powers(t, n, Some(cap));
    let lengths = t.lengths().to_vec();
    let within_cap = |m: &FrequencyVector| m.counts().iter().all(|&x| x <= cap);

    let mut e: Vec<ExponentialSum> = vec![ExponentialSum::constant(&lengths, Complex64::new(1.0, 0.0))];
    let mut scale: f64 = 1.0;
    for m in 1..=n {
        let mut parts = Vec::with_capacity(m);
        let mut local: f64 = 0.0;
        for i in 1..=m {
            let p = e[m - i].mul_filtered(&traces[i - 1], within_cap)?;
            local = local.max(p.max_abs_coefficient());
            parts.push(p);
        }
        let items: Vec<(Complex64, &ExponentialSum)> = parts
            .iter()
            .enumerate()
            .map(|(idx, p)| {
                let i = idx + 1;
                let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                (Complex64::new(sign / m as f64, 0.0), p)
            })
            .collect();
        let em = e[0].linear_combination(&items)?;
        // cancellations leave residues at roundoff level of the summands
        e.push(em.purge_below(1e-12, local));
        scale = scale.max(local);
    }
    let items: Vec<(Complex64, &ExponentialSum)> = e
        .iter()
        .enumerate()
        .map(|(m, s)| (Complex64::new(if m % 2 == 0 { 1.0 } else { -1.0 }, 0.0), s))
        .collect();
    Ok(e[0].linear_combination(&items)?.purge_below(1e-12, scale))
}

/// A realified derivative level of the spectral determinant.
#[derive(Clone, Debug)]
pub struct SecularFunction {
    level: usize,
    sum: ExponentialSum,
    record: PhaseRecord,
    half_width: f64,
    zero_order: usize,
    cluster_radius: f64,
    magnitude: f64,
}

/// Δ(k) built from T, recentered and checked for reality.
pub fn determinant(t: &TransitionMatrix) -> Result<SecularFunction> {
    SecularFunction::from_sum(determinant_sum(t)?)
}

impl SecularFunction {
    /// Level 0 from an arbitrary (unrecentered) exponential sum.
    pub fn from_sum(raw: ExponentialSum) -> Result<Self> {
        let (sum, record) = raw.recenter()?;
        Ok(Self::assemble(0, sum, record))
    }

    fn assemble(level: usize, sum: ExponentialSum, record: PhaseRecord) -> Self {
        let (lo, hi) = sum.frequency_range().unwrap_or((0.0, 0.0));
        let half_width = (hi - lo) / 2.0;
        let magnitude = sum.magnitude_bound(0);
        let mut f = Self {
            level,
            sum,
            record,
            half_width,
            zero_order: 0,
            cluster_radius: 0.0,
            magnitude,
        };
        f.zero_order = f.order_at_zero();
        f.cluster_radius = f.compute_cluster_radius();
        f
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn sum(&self) -> &ExponentialSum {
        &self.sum
    }

    pub fn phase_record(&self) -> &PhaseRecord {
        &self.record
    }

    pub fn is_real(&self) -> bool {
        self.record.real
    }

    /// L₀: half the spread between extreme frequencies.
    pub fn total_length(&self) -> f64 {
        self.half_width
    }

    /// π/L₀.
    pub fn mean_spacing(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Order of the zero at k = 0 (0 when f(0) ≠ 0).
    pub fn zero_order(&self) -> usize {
        self.zero_order
    }

    /// Half-width of the neighbourhood of 0 that root scans skip when f(0) = 0.
    pub fn cluster_radius(&self) -> f64 {
        self.cluster_radius
    }

    /// Σ|a_α|, the scale against which |f| is judged small.
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// j-th derivative of the realified level-0 function, or of this level shifted by `target − level`.
    pub fn derivative_level(&self, target: usize) -> Result<Self> {
        if target < self.level {
            return Err(Error::InvalidArgument(format!(
                "cannot go from level {} up to level {target}",
                self.level
            )));
        }
        let sum = self.sum.differentiate((target - self.level) as u32);
        let mut record = self.record.clone();
        if record.real {
            // (iS)^j keeps conj-pairing: c(−m)(−iS)^j = conj(c(m)(iS)^j)
            record.real = sum.iter().all(|(m, c, _)| {
                let p = sum.coefficient(&m.neg());
                (c - p.conj()).norm() <= 1e-10 * sum.max_abs_coefficient()
            });
        }
        Ok(Self::assemble(target, sum, record))
    }

    pub fn value(&self, k: f64) -> f64 {
        self.sum.evaluate_real(k)
    }

    pub fn value_complex(&self, k: Complex64) -> Complex64 {
        self.sum.evaluate_complex(k)
    }

    /// Value of the unrecentered determinant (level 0 only meaningful) at real k.
    pub fn unrecentered(&self, k: f64) -> Complex64 {
        let s = self.record.shift.physical(self.sum.lengths());
        self.sum.evaluate(k) * Complex64::from_polar(1.0, k * s - self.record.theta)
    }

    /// d^i f/dk^i at k = 0.
    fn derivative_at_zero(&self, i: u32) -> Complex64 {
        let mut acc = CompensatedComplex::default();
        for (_, c, s) in self.sum.iter() {
            acc.add(c * Complex64::new(0.0, s).powu(i));
        }
        acc.value()
    }

    fn order_at_zero(&self) -> usize {
        if self.sum.is_empty() {
            return 0;
        }
        let cap = 4 * self.sum.dim() + 4;
        for i in 0..=cap {
            let v = self.derivative_at_zero(i as u32).norm();
            if v > 1e-9 * self.sum.magnitude_bound(i as u32) {
                return i;
            }
        }
        cap
    }

    fn compute_cluster_radius(&self) -> f64 {
        let m = self.zero_order;
        if m == 0 || self.half_width == 0.0 {
            return 0.0;
        }
        let cell = self.mean_spacing();
        let lead = self.derivative_at_zero(m as u32).norm();
        let factorial: f64 = (1..=m).map(|i| i as f64).product();
        let floor = 1e-12 * self.magnitude;
        let mut r = 1e-3 * cell;
        while lead * r.powi(m as i32) / factorial < floor && r < 0.05 * cell {
            r *= 2.0;
        }
        r
    }

    fn pieces(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let r = self.cluster_radius;
        if r == 0.0 {
            return vec![(a, b)];
        }
        let mut out = Vec::new();
        if a < -r {
            out.push((a, b.min(-r)));
        }
        if b > r {
            out.push((a.max(r), b));
        }
        out.retain(|(lo, hi)| lo < hi);
        out
    }

    fn cluster_inside(&self, a: f64, b: f64) -> usize {
        if self.zero_order > 0 && a < 0.0 && 0.0 < b {
            self.zero_order
        } else {
            0
        }
    }

    fn near_zero(&self, k: f64) -> bool {
        let v = if self.record.real {
            self.value(k).abs()
        } else {
            self.sum.evaluate(k).norm()
        };
        v < 1e-13 * self.magnitude
    }

    fn nudge(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        let eps = ENDPOINT_EPS * self.mean_spacing();
        let mut lo = a;
        let mut hi = b;
        if self.near_zero(lo) {
            lo += eps;
            if self.near_zero(lo) {
                return Err(Error::EndpointOnRoot { k: a });
            }
        }
        if self.near_zero(hi) {
            hi -= eps;
            if self.near_zero(hi) {
                return Err(Error::EndpointOnRoot { k: b });
            }
        }
        Ok((lo, hi))
    }

    /// Number of roots in the open interval (a, b), counted with multiplicity at k = 0.
    pub fn count_roots(&self, a: f64, b: f64) -> Result<usize> {
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("empty interval ({a}, {b})")));
        }
        let mut total = self.cluster_inside(a, b);
        for (lo, hi) in self.pieces(a, b) {
            let (lo, hi) = self.nudge(lo, hi)?;
            if lo >= hi {
                continue;
            }
            total += if self.record.real {
                self.count_sign_changes(lo, hi)
            } else {
                self.count_winding(lo, hi)
            };
        }
        Ok(total)
    }

    /// Root count by the argument principle regardless of the reality flag.
    pub fn count_roots_argument(&self, a: f64, b: f64) -> Result<usize> {
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("empty interval ({a}, {b})")));
        }
        let mut total = self.cluster_inside(a, b);
        for (lo, hi) in self.pieces(a, b) {
            let (lo, hi) = self.nudge(lo, hi)?;
            if lo < hi {
                total += self.count_winding(lo, hi);
            }
        }
        Ok(total)
    }

    fn sign_changes_on_grid(&self, a: f64, b: f64, n: usize) -> usize {
        let mut count = 0;
        let mut last = self.value(a).signum();
        for i in 1..=n {
            let k = if i == n { b } else { a + (b - a) * i as f64 / n as f64 };
            let v = self.value(k);
            if v == 0.0 {
                continue;
            }
            let s = v.signum();
            if last != 0.0 && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    fn count_sign_changes(&self, a: f64, b: f64) -> usize {
        let cells = (b - a) / self.mean_spacing();
        let mut n = ((16.0 * cells).ceil() as usize).max(8);
        let mut prev = self.sign_changes_on_grid(a, b, n);
        let cap = ((1usize << 16) as f64 * cells.max(1.0)) as usize;
        loop {
            n *= 2;
            let next = self.sign_changes_on_grid(a, b, n);
            if next == prev || n > cap {
                return next;
            }
            prev = next;
        }
    }

    /// Winding of f around the rectangle [a, b] × [−η, η].
    fn count_winding(&self, a: f64, b: f64) -> usize {
        self.count_zeros_in_box(a, b, CONTOUR_ETA * self.mean_spacing())
    }

    /// Winding of f around [a, b] × [−height, height].
    pub fn count_zeros_in_box(&self, a: f64, b: f64, height: f64) -> usize {
        let corners = [
            Complex64::new(a, -height),
            Complex64::new(b, -height),
            Complex64::new(b, height),
            Complex64::new(a, height),
        ];
        let lip = self.derivative_bound(height);
        let min_len = 1e-6 * CONTOUR_ETA * self.mean_spacing();
        let mut total = 0.0;
        for i in 0..4 {
            total += self.arg_change(corners[i], corners[(i + 1) % 4], lip, min_len);
        }
        (total / std::f64::consts::TAU).round().max(0.0) as usize
    }

    /// Σ|c||S|e^{|S|y}: bounds |f'| on the strip |Im k| ≤ y.
    fn derivative_bound(&self, y: f64) -> f64 {
        self.sum.iter().map(|(_, c, s)| c.norm() * s.abs() * (s.abs() * y).exp()).sum()
    }

    fn arg_change(&self, z0: Complex64, z1: Complex64, lip: f64, min_len: f64) -> f64 {
        let len = (z1 - z0).norm();
        let step = 0.1 * self.mean_spacing();
        let n = ((len / step).ceil() as usize).max(1);
        let mut total = 0.0;
        let mut prev_z = z0;
        let mut prev_f = self.value_complex(z0);
        for i in 1..=n {
            let z = if i == n { z1 } else { z0 + (z1 - z0) * (i as f64 / n as f64) };
            let f = self.value_complex(z);
            total += self.refine_arg(prev_z, prev_f, z, f, lip, min_len, 0);
            prev_z = z;
            prev_f = f;
        }
        total
    }

    /// Split until |f| cannot reach zero on the segment, so the wrapped difference is exact.
    #[allow(clippy::too_many_arguments)]
    fn refine_arg(
        &self,
        z0: Complex64,
        f0: Complex64,
        z1: Complex64,
        f1: Complex64,
        lip: f64,
        min_len: f64,
        depth: usize,
    ) -> f64 {
        let h = (z1 - z0).norm();
        let safe = lip * h < 0.5 * f0.norm().min(f1.norm());
        if safe || h < min_len || depth > 80 {
            return wrap_angle(f1.arg() - f0.arg());
        }
        let zm = (z0 + z1) * 0.5;
        let fm = self.value_complex(zm);
        self.refine_arg(z0, f0, zm, fm, lip, min_len, depth + 1)
            + self.refine_arg(zm, fm, z1, f1, lip, min_len, depth + 1)
    }

    /// Bisection for a sign change in [a, b], to `BISECTION_TOL` mean spacings.
    pub fn bisect(&self, a: f64, b: f64) -> Result<f64> {
        if !self.record.real {
            return Err(Error::NotReal { level: self.level });
        }
        let tol = BISECTION_TOL * self.mean_spacing();
        let (mut lo, mut hi) = (a, b);
        let mut flo = self.value(lo);
        let fhi = self.value(hi);
        if flo == 0.0 {
            return Ok(lo);
        }
        if fhi == 0.0 {
            return Ok(hi);
        }
        if flo.signum() == fhi.signum() {
            return Err(Error::InvalidArgument(format!("no sign change on [{a}, {b}]")));
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = self.value(mid);
            if fm == 0.0 {
                return Ok(mid);
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// All roots in (a, b), ascending; the zero at k = 0 is repeated by its order.
    pub fn roots_in(&self, a: f64, b: f64) -> Result<Vec<f64>> {
        if !self.record.real {
            return Err(Error::NotReal { level: self.level });
        }
        let mut out = Vec::new();
        let cluster = self.cluster_inside(a, b);
        for (lo, hi) in self.pieces(a, b) {
            let (lo, hi) = self.nudge(lo, hi)?;
            if lo >= hi {
                continue;
            }
            let cells = (hi - lo) / self.mean_spacing();
            let n = ((64.0 * cells).ceil() as usize).max(16);
            let grid: Vec<f64> = (0..=n).map(|i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 }).collect();
            let values: Vec<f64> = grid.par_iter().map(|&k| self.value(k)).collect();
            let mut brackets = Vec::new();
            let mut last = 0usize;
            for i in 1..=n {
                if values[i] == 0.0 {
                    continue;
                }
                if values[last] != 0.0 && values[i].signum() != values[last].signum() {
                    brackets.push((grid[last], grid[i]));
                }
                last = i;
            }
            let found: Vec<f64> = brackets
                .par_iter()
                .map(|&(x, y)| self.bisect(x, y))
                .collect::<Result<_>>()?;
            out.extend(found);
        }
        out.extend(std::iter::repeat(0.0).take(cluster));
        out.sort_by(|x, y| x.partial_cmp(y).expect("finite roots"));
        Ok(out)
    }

    /// Height above which the extreme pair dominates and no zeros can lie.
    pub fn zero_free_height(&self) -> f64 {
        let Some((lo, hi)) = self.sum.extreme_terms() else {
            return 0.0;
        };
        let (_, c_hi, s_hi) = self.sum.term(hi);
        let (_, c_lo, s_lo) = self.sum.term(lo);
        // at Im k = y > 0 the −L₀ term grows as e^{yL₀}; require it to beat the rest
        let mut y = self.mean_spacing();
        for _ in 0..200 {
            let dominant = c_lo.norm() * (-y * s_lo).exp();
            let mut rest = c_hi.norm() * (-y * s_hi).exp();
            for (i, (_, c, s)) in self.sum.iter().enumerate() {
                if i != lo && i != hi {
                    rest += c.norm() * (-y * s).exp();
                }
            }
            if dominant > 1.01 * rest {
                return y;
            }
            y *= 1.25;
        }
        y
    }

    /// Decompose f = c·e^{−ikL₀}(1 + h) around the lowest-frequency term.
    pub fn dominant_decomposition(&self) -> Result<(Complex64, ExponentialSum)> {
        let (lo, _) = self
            .sum
            .extreme_terms()
            .ok_or_else(|| Error::Empty("secular function has no terms".into()))?;
        let (m_lo, c_lo, _) = self.sum.term(lo);
        let m_lo = m_lo.clone();
        let shifted = self.sum.shift(&m_lo.neg()).scale(c_lo.inv());
        let h = shifted.sub(&ExponentialSum::constant(self.sum.lengths(), Complex64::new(1.0, 0.0)))?;
        Ok((c_lo, h))
    }

    /// ρ(k) = L₀/π − (1/π) d/dk Im log(1 + h(k + i0)), with log(1+h) expanded to `order`.
    ///
    /// Terms are kept up to total traversal count `order` (orbits of at most
    /// `order` bonds at level 0), which gives exact Taylor coefficients up to
    /// that count.
    pub fn density_expansion(&self, order: usize) -> Result<LevelDensity> {
        let (_, h) = self.dominant_decomposition()?;
        let opts = LogOptions {
            order,
            max_degree: Some(order as i64),
            window: Some((0.0, 200.0 * self.mean_spacing())),
            grid_points: 8192,
        };
        let log = h.log_expansion(&opts)?;
        Ok(LevelDensity {
            level: self.level,
            total_length: self.half_width,
            log: log.sum,
            convergent: log.convergent,
            max_abs_h: log.max_abs_h,
            order,
        })
    }
}

/// Level density ρ⁽ʲ⁾(k) = L₀/π + Re Σ S_α A_α e^{ikS_α}, stored through b_α of log(1+h) = Σ b_α e^{ikS_α}.
#[derive(Clone, Debug)]
pub struct LevelDensity {
    pub level: usize,
    pub total_length: f64,
    /// log(1 + h) truncated.
    pub log: ExponentialSum,
    /// |h| < 1 on the sampled window of the real axis.
    pub convergent: bool,
    pub max_abs_h: f64,
    pub order: usize,
}

impl LevelDensity {
    pub fn mean(&self) -> f64 {
        self.total_length / std::f64::consts::PI
    }

    /// Oscillatory coefficients S_α A_α with A_α = −b_α/π.
    pub fn oscillatory(&self) -> ExponentialSum {
        let items = self
            .log
            .iter()
            .map(|(m, b, s)| (m.clone(), b * (-s / std::f64::consts::PI)))
            .collect::<Vec<_>>();
        ExponentialSum::from_terms(self.log.lengths(), items)
    }

    /// (S_α, A_α) pairs in the density normalization.
    pub fn amplitudes(&self) -> Vec<(FrequencyVector, f64, Complex64)> {
        self.log
            .iter()
            .map(|(m, b, s)| (m.clone(), s, -b / std::f64::consts::PI))
            .collect()
    }

    pub fn density(&self, k: f64) -> f64 {
        let mut acc = crate::numeric::Compensated::new();
        acc.add(self.mean());
        for (_, b, s) in self.log.iter() {
            let z = b * Complex64::from_polar(1.0, k * s);
            acc.add(-s * z.re / std::f64::consts::PI);
        }
        acc.value()
    }

    /// ∫_{k1}^{k2} ρ(k) dk.
    pub fn integrate(&self, k1: f64, k2: f64) -> f64 {
        let mut acc = crate::numeric::Compensated::new();
        acc.add(self.mean() * (k2 - k1));
        for (_, b, s) in self.log.iter() {
            let d = b * (Complex64::from_polar(1.0, k2 * s) - Complex64::from_polar(1.0, k1 * s));
            acc.add(-d.im / std::f64::consts::PI);
        }
        acc.value()
    }

    /// ∫ ρ(k)·k dk over [k1, k2]: the root location when exactly one root lies inside.
    pub fn first_moment(&self, k1: f64, k2: f64) -> f64 {
        let mut acc = crate::numeric::Compensated::new();
        acc.add(self.mean() * (k2 * k2 - k1 * k1) / 2.0);
        for (_, b, s) in self.log.iter() {
            // ∫ k d/dk[−Im(b e^{iks})/π] = boundary − ∫ (−Im(b e^{iks})/π) dk
            let e2 = b * Complex64::from_polar(1.0, k2 * s);
            let e1 = b * Complex64::from_polar(1.0, k1 * s);
            let boundary = -(k2 * e2.im - k1 * e1.im) / std::f64::consts::PI;
            let integral = -((e2 - e1) / Complex64::new(0.0, s)).im / std::f64::consts::PI;
            acc.add(boundary - integral);
        }
        acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{library, transition_matrix};

    #[test]
    fn scalar_determinant() {
        // 1×1: Δ = 1 − t
        let l = [1.5];
        let t = ExponentialSum::monomial(&l, FrequencyVector::unit(1, 0), Complex64::new(0.5, 0.0));
        let raw = ExponentialSum::constant(&l, Complex64::new(1.0, 0.0)).sub(&t).unwrap();
        let f = SecularFunction::from_sum(raw.clone()).unwrap();
        for k in [0.1, 1.0, 2.7] {
            assert!((f.unrecentered(k) - raw.evaluate(k)).norm() < 1e-14);
        }
    }

    #[test]
    fn single_bond_roots_are_multiples() {
        let l = 1.3;
        let g = library::single_bond(l);
        let f = determinant(&transition_matrix(&g)).unwrap();
        assert!(f.is_real());
        assert_eq!(f.zero_order(), 1);
        let cell = std::f64::consts::PI / l;
        assert_eq!(f.count_roots(0.5 * cell, 3.5 * cell).unwrap(), 3);
        let roots = f.roots_in(0.5 * cell, 5.5 * cell).unwrap();
        assert_eq!(roots.len(), 5);
        for (i, r) in roots.iter().enumerate() {
            assert!((r - (i + 1) as f64 * cell).abs() < 1e-11);
        }
    }

    #[test]
    fn empty_interval_counts_nothing() {
        let f = determinant(&transition_matrix(&library::single_bond(1.0))).unwrap();
        let k = 1.0;
        assert_eq!(f.count_roots(k - 1e-12, k).unwrap(), 0);
        assert!(f.count_roots(2.0, 1.0).is_err());
    }

    #[test]
    fn quadrangle_zero_at_origin_has_order_four() {
        let f = determinant(&transition_matrix(&library::standard_quadrangle())).unwrap();
        assert!(f.is_real());
        assert_eq!(f.zero_order(), 4);
        // Δ is even in k, so odd derivatives keep a simple zero beyond the cluster
        for (j, order) in [(1, 3), (2, 2), (3, 1), (4, 0), (5, 1), (6, 0)] {
            let d = f.derivative_level(j).unwrap();
            assert_eq!(d.zero_order(), order, "level {j}");
        }
    }
}
