//! Separator hierarchy and the physical spectrum.
//!
//! Roots of Δ⁽ʳ⁾ are locked one per periodic cell; each step down brackets
//! root n of Δ⁽ʲ⁻¹⁾ between roots n−1 and n of Δ⁽ʲ⁾. Level j stores indices
//! 1−j ..= N so that level 0 ends up with 1 ..= N.
//!
//! Δ of a graph with β independent cycles can vanish at k = 0 to higher order
//! (β + 1 for Neumann vertices). Those coincident roots are kept as exact
//! zeros; a bracket (0, 0) or a bracket with a 0 endpoint and no interior
//! root yields a zero at the level below.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::orbits::ExpansionTerm;
use crate::secular::{SecularFunction, ENDPOINT_EPS};

/// Required distance of a locked root from its cell edges, in cells.
pub const CELL_MARGIN: f64 = 1e-3;

/// Positive indices used to fix the cell labels, whatever N is.
const PILOT_CELLS: usize = 400;

/// πn/L₀.
pub fn weyl_eigenvalue(n: i64, total_length: f64) -> f64 {
    std::f64::consts::PI * n as f64 / total_length
}

/// The lowest derivative level whose roots sit one per periodic cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularLevel {
    pub r: usize,
    /// Cells are (π/L₀)(n − ½ + phase, n + ½ + phase).
    pub phase: f64,
    /// Smallest distance of a root from its cell edge, in cells.
    pub margin: f64,
}

fn frac_centered(x: f64) -> f64 {
    x - x.round()
}

/// Cell phase suggested by the extreme +L₀ term: roots of 2|c|cos(kL₀ + ψ).
fn analytic_phase(f: &SecularFunction) -> f64 {
    let Some((_, hi)) = f.sum().extreme_terms() else {
        return 0.0;
    };
    let (_, c, _) = f.sum().term(hi);
    frac_centered(0.5 - c.arg() / std::f64::consts::PI)
}

/// Circular mean of root positions modulo one cell.
fn fitted_phase(roots: &[f64], cell: f64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &k in roots.iter().filter(|k| **k != 0.0) {
        acc += Complex64::from_polar(1.0, std::f64::consts::TAU * k / cell);
    }
    acc.arg() / std::f64::consts::TAU
}

/// Assign roots to cells; `Some(margin)` if every index in `lo..=hi` gets exactly one root.
fn cell_lock(roots: &[f64], cell: f64, phase: f64, lo: i64, hi: i64) -> Option<f64> {
    let count = (hi - lo + 1) as usize;
    if roots.len() != count {
        return None;
    }
    let mut margin = f64::INFINITY;
    for (i, &k) in roots.iter().enumerate() {
        let u = k / cell - phase;
        let n = u.round() as i64;
        if n != lo + i as i64 {
            return None;
        }
        margin = margin.min(0.5 - (u - n as f64).abs());
    }
    (margin >= CELL_MARGIN).then_some(margin)
}

fn window_bounds(cell: f64, phase: f64, lo: i64, hi: i64) -> (f64, f64) {
    ((lo as f64 - 0.5 + phase) * cell, (hi as f64 + 0.5 + phase) * cell)
}

fn try_lock(f: &SecularFunction, lo: i64, hi: i64) -> Result<Option<RegularLevel>> {
    if !f.is_real() || f.zero_order() > 1 {
        return Ok(None);
    }
    let cell = f.mean_spacing();
    let mut phase = analytic_phase(f);
    for attempt in 0..3 {
        let (a, b) = window_bounds(cell, phase, lo, hi);
        let roots = match f.roots_in(a, b) {
            Ok(r) => r,
            Err(Error::EndpointOnRoot { .. }) => {
                phase += 0.01;
                continue;
            }
            Err(e) => return Err(e),
        };
        if let Some(margin) = cell_lock(&roots, cell, phase, lo, hi) {
            return Ok(Some(RegularLevel {
                r: f.level(),
                phase,
                margin,
            }));
        }
        if attempt == 0 {
            phase = frac_centered(fitted_phase(&roots, cell));
        } else {
            break;
        }
    }
    Ok(None)
}

/// Smallest j ≤ `j_max` whose roots lock into cells over level-0 indices `lo..=hi`
/// (level j is tested on `lo − j ..= hi`).
pub fn find_regular_level(delta: &SecularFunction, lo: i64, hi: i64, j_max: usize) -> Result<RegularLevel> {
    if hi - lo + 1 < 200 {
        return Err(Error::InvalidArgument(format!(
            "regularity window must cover at least 200 cells, got {}",
            hi - lo + 1
        )));
    }
    for j in delta.level()..=j_max {
        let f = delta.derivative_level(j)?;
        if let Some(level) = try_lock(&f, lo - j as i64, hi)? {
            return Ok(level);
        }
    }
    Err(Error::NoRegularLevel { j_max })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRoots {
    pub level: usize,
    /// Index of `roots[0]`.
    pub first_index: i64,
    pub roots: Vec<f64>,
}

impl LevelRoots {
    pub fn index(&self, i: usize) -> i64 {
        self.first_index + i as i64
    }

    pub fn get(&self, n: i64) -> Option<f64> {
        let i = n - self.first_index;
        (i >= 0).then(|| self.roots.get(i as usize).copied()).flatten()
    }

    /// (n, k̂_n, δ_n) for every stored root.
    pub fn entries(&self, total_length: f64) -> impl Iterator<Item = (i64, f64, f64)> + '_ {
        self.roots.iter().enumerate().map(move |(i, &k)| {
            let n = self.index(i);
            (n, k, k * total_length / std::f64::consts::PI - n as f64)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralHierarchy {
    pub r: usize,
    pub phase: f64,
    pub total_length: f64,
    pub n: usize,
    /// `levels[j]` holds level j.
    pub levels: Vec<LevelRoots>,
}

impl SpectralHierarchy {
    pub fn level(&self, j: usize) -> Option<&LevelRoots> {
        self.levels.get(j)
    }

    /// Level-0 roots with index ≥ 1 and k > 0, as (n, k, δ).
    pub fn spectrum(&self) -> Vec<(i64, f64, f64)> {
        self.positive(0)
    }

    /// Entries of level j with index ≥ 1 and k > 0.
    pub fn positive(&self, j: usize) -> Vec<(i64, f64, f64)> {
        self.levels[j]
            .entries(self.total_length)
            .filter(|&(n, k, _)| n >= 1 && k > 0.0)
            .collect()
    }

    pub fn mean_spacing(&self) -> f64 {
        std::f64::consts::PI / self.total_length
    }
}

/// Outcome of re-checking k̂_{n−1}⁽ʲ⁾ < k̂_n⁽ʲ⁻¹⁾ < k̂_n⁽ʲ⁾ across a hierarchy.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct InterlacingReport {
    pub checked: usize,
    pub violations: usize,
    /// Comparisons that tie only because both sides are the exact zero at k = 0.
    pub zero_ties: usize,
    pub first_violation: Option<(usize, i64)>,
}

pub fn check_interlacing(h: &SpectralHierarchy, limit: Option<usize>) -> InterlacingReport {
    let mut rep = InterlacingReport::default();
    let note = |rep: &mut InterlacingReport, ok: bool, tie: bool, j: usize, n: i64| {
        rep.checked += 1;
        if tie {
            rep.zero_ties += 1;
        } else if !ok {
            rep.violations += 1;
            rep.first_violation.get_or_insert((j, n));
        }
    };
    for j in 1..h.levels.len() {
        let upper = &h.levels[j];
        let lower = &h.levels[j - 1];
        let take = limit.unwrap_or(usize::MAX);
        for (i, &k) in lower.roots.iter().enumerate().take(take) {
            let n = lower.index(i);
            let (Some(a), Some(b)) = (upper.get(n - 1), upper.get(n)) else {
                continue;
            };
            note(&mut rep, a < k, a == 0.0 && k == 0.0, j, n);
            note(&mut rep, k < b, b == 0.0 && k == 0.0, j, n);
        }
    }
    for lv in &h.levels {
        for (i, w) in lv.roots.windows(2).enumerate().take(limit.unwrap_or(usize::MAX)) {
            let tie = w[0] == 0.0 && w[1] == 0.0;
            note(&mut rep, w[0] < w[1], tie, lv.level, lv.index(i + 1));
        }
    }
    rep
}

/// One root per cell, each found on its own cell grid so that results do not depend on the window.
fn lock_level(f: &SecularFunction, phase: f64, lo: i64, hi: i64) -> Result<Vec<f64>> {
    let cell = f.mean_spacing();
    (lo..=hi)
        .into_par_iter()
        .map(|n| {
            let (ca, cb) = window_bounds(cell, phase, n, n);
            let roots = f.roots_in(ca, cb)?;
            if roots.len() == 1 {
                Ok(roots[0])
            } else {
                Err(Error::HierarchyViolation {
                    level: f.level(),
                    index: n,
                    lo: ca,
                    hi: cb,
                    count: roots.len(),
                })
            }
        })
        .collect()
}

/// Root n of `lower` inside (a, b) where a, b are roots n−1, n of the level above.
fn descend_one(lower: &SecularFunction, a: f64, b: f64, n: i64) -> Result<f64> {
    let violation = |count| Error::HierarchyViolation {
        level: lower.level(),
        index: n,
        lo: a,
        hi: b,
        count,
    };
    if a == 0.0 && b == 0.0 {
        return if lower.zero_order() >= 1 { Ok(0.0) } else { Err(violation(0)) };
    }
    if !(a < b) {
        return Err(violation(0));
    }
    let eps = ENDPOINT_EPS * lower.mean_spacing();
    let lo = if a == 0.0 { a } else { a + eps };
    let hi = if b == 0.0 { b } else { b - eps };
    let count = lower.count_roots(lo, hi)?;
    let zero_inside = lower.zero_order() >= 1 && lo < 0.0 && 0.0 < hi;
    match count {
        1 if zero_inside => Ok(0.0),
        1 => {
            // bracket away from the excluded neighbourhood of 0
            let r = lower.cluster_radius();
            let (x, y) = if r > 0.0 && lo < r && hi > -r {
                if hi > r {
                    (lo.max(r), hi)
                } else {
                    (lo, hi.min(-r))
                }
            } else {
                (lo, hi)
            };
            lower.bisect(x, y).map_err(|_| violation(1))
        }
        0 if (a == 0.0 || b == 0.0) && lower.zero_order() >= 1 => Ok(0.0),
        c => Err(violation(c)),
    }
}

fn run_bootstrap(delta: &SecularFunction, r: usize, phase: f64, n_max: usize) -> Result<Vec<LevelRoots>> {
    let hi = n_max as i64;
    let top = delta.derivative_level(r)?;
    let mut current = LevelRoots {
        level: r,
        first_index: 1 - r as i64,
        roots: lock_level(&top, phase, 1 - r as i64, hi)?,
    };
    let mut levels = vec![current.clone()];
    for j in (1..=r).rev() {
        let lower = delta.derivative_level(j - 1)?;
        let first = 1 - (j as i64 - 1);
        let roots: Vec<f64> = (first..=hi)
            .into_par_iter()
            .map(|n| {
                let a = current.get(n - 1).expect("upper root n−1");
                let b = current.get(n).expect("upper root n");
                descend_one(&lower, a, b, n)
            })
            .collect::<Result<_>>()?;
        let zeros = roots.iter().filter(|&&k| k == 0.0).count();
        let lo_edge = current.roots.first().copied().unwrap_or(0.0);
        if lower.zero_order() > 0 && lo_edge < 0.0 && zeros != lower.zero_order() {
            return Err(Error::HierarchyViolation {
                level: j - 1,
                index: 0,
                lo: -lower.cluster_radius(),
                hi: lower.cluster_radius(),
                count: zeros,
            });
        }
        current = LevelRoots {
            level: j - 1,
            first_index: first,
            roots,
        };
        levels.push(current.clone());
    }
    levels.reverse();
    Ok(levels)
}

/// Descend from the regular level to level 0 for indices 1..=N.
///
/// The integer offset of the cell labels is chosen so that the level-0 mean
/// fluctuation over the first few hundred positive roots lies in [−½, ½).
pub fn bootstrap(delta: &SecularFunction, regular: &RegularLevel, n_max: usize) -> Result<SpectralHierarchy> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if !delta.is_real() {
        return Err(Error::NotReal { level: delta.level() });
    }
    let l0 = delta.total_length();
    let r = regular.r;
    let pilot_n = PILOT_CELLS.max(r + 8);
    let pilot = run_bootstrap(delta, r, regular.phase, pilot_n)?;
    let deltas: Vec<f64> = pilot[0]
        .entries(l0)
        .filter(|&(n, k, _)| n >= 1 && k > 0.0)
        .map(|(_, _, d)| d)
        .collect();
    let shift = if deltas.is_empty() {
        0.0
    } else {
        (deltas.iter().sum::<f64>() / deltas.len() as f64 + 0.5).floor()
    };
    let phase = regular.phase - shift;
    let levels = if shift == 0.0 && pilot_n >= n_max {
        pilot
            .into_iter()
            .map(|mut lv| {
                lv.roots.truncate((n_max as i64 - lv.first_index + 1) as usize);
                lv
            })
            .collect()
    } else {
        run_bootstrap(delta, r, phase, n_max)?
    };
    Ok(SpectralHierarchy {
        r,
        phase,
        total_length: l0,
        n: n_max,
        levels,
    })
}

/// Explicit periodic-orbit series for the eigenvalues of a regular graph.
#[derive(Clone, Debug)]
pub struct OrbitSeries {
    terms: Vec<ExpansionTerm>,
    total_length: f64,
}

impl OrbitSeries {
    /// `r` is the regular level of the graph; anything but 0 is rejected.
    pub fn new(terms: Vec<ExpansionTerm>, total_length: f64, r: usize) -> Result<Self> {
        if r > 0 {
            return Err(Error::Irregular { r });
        }
        Ok(Self { terms, total_length })
    }

    pub fn terms(&self) -> &[ExpansionTerm] {
        &self.terms
    }

    /// k_n = πn/L₀ − (2/L₀) Σ (sin(ω/2)/ω) Im(a e^{iωn}).
    pub fn eigenvalue(&self, n: i64) -> f64 {
        let mut acc = crate::numeric::Compensated::new();
        acc.add(weyl_eigenvalue(n, self.total_length));
        for t in &self.terms {
            let z = t.amplitude() * Complex64::from_polar(1.0, t.omega * n as f64);
            acc.add(-2.0 / self.total_length * (t.omega / 2.0).sin() / t.omega * z.im);
        }
        acc.value()
    }

    /// (2/L₀) Σ |a| |sin(ω/2)/ω|, bounding the oscillatory part.
    pub fn bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| 2.0 / self.total_length * t.amplitude().norm() * ((t.omega / 2.0).sin() / t.omega).abs())
            .sum()
    }

    /// s_{n,m} = k_{n+m} − k_n = πm/L₀ − Σ D_{p,m} Re(â e^{iω(n+m/2)}),
    /// D = (4/L₀)(|a|/ω) sin(ω/2) sin(ωm/2), â = a/|a|.
    pub fn spacing(&self, n: i64, m: i64) -> f64 {
        let mut acc = crate::numeric::Compensated::new();
        acc.add(weyl_eigenvalue(m, self.total_length));
        for t in &self.terms {
            let w = t.omega;
            let d = 4.0 / self.total_length / w * (w / 2.0).sin() * (w * m as f64 / 2.0).sin();
            let z = t.amplitude() * Complex64::from_polar(1.0, w * (n as f64 + m as f64 / 2.0));
            acc.add(-d * z.re);
        }
        acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{library, transition_matrix};
    use crate::secular::determinant;

    #[test]
    fn weyl_values() {
        assert_eq!(weyl_eigenvalue(100, std::f64::consts::PI), 100.0);
        assert!((weyl_eigenvalue(1, 2.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-16);
    }

    #[test]
    fn single_bond_is_regular_with_zero_fluctuations() {
        let g = library::single_bond(1.1);
        let d = determinant(&transition_matrix(&g)).unwrap();
        let reg = find_regular_level(&d, 1, 300, 4).unwrap();
        assert_eq!(reg.r, 0);
        let h = bootstrap(&d, &reg, 300).unwrap();
        for (n, k, delta) in h.spectrum() {
            assert!(delta.abs() < 1e-10, "n = {n}, k = {k}");
        }
    }

    #[test]
    fn irregular_series_rejected() {
        assert_eq!(OrbitSeries::new(vec![], 1.0, 2).unwrap_err(), Error::Irregular { r: 2 });
    }

    #[test]
    fn series_without_orbits_is_weyl() {
        let s = OrbitSeries::new(vec![], 2.5, 0).unwrap();
        assert_eq!(s.eigenvalue(7), weyl_eigenvalue(7, 2.5));
        assert_eq!(s.spacing(3, 0), 0.0);
    }
}
