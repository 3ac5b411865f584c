//! Periodic orbits of the directed-bond graph.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exp_sum::FrequencyVector;
use crate::graph::{transition_matrix, QuantumGraph};
use crate::secular::{trace_powers, LevelDensity};

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbit {
    /// Directed bonds of the primitive cycle, rotated to its lexicographically smallest form.
    pub cycle: Vec<usize>,
    /// Scattering events in the primitive cycle.
    pub period: usize,
    pub repetition: usize,
    /// Bond traversal counts of the full (repeated) orbit.
    pub m: FrequencyVector,
    /// Product of vertex amplitudes around the full orbit, A_p^r.
    pub amplitude: Complex64,
    /// m·L.
    pub length: f64,
    /// π(m·L)/L₀.
    pub omega: f64,
}

impl PeriodicOrbit {
    /// Scattering events of the full orbit, n_p·r.
    pub fn events(&self) -> usize {
        self.period * self.repetition
    }
}

/// One oscillatory term a·e^{iωn} of the explicit series, with a = A_p^r/r for orbits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionTerm {
    pub m: Vec<i32>,
    pub a_re: f64,
    pub a_im: f64,
    pub omega: f64,
}

impl ExpansionTerm {
    pub fn new(m: &FrequencyVector, a: Complex64, omega: f64) -> Self {
        Self {
            m: m.counts().to_vec(),
            a_re: a.re,
            a_im: a.im,
            omega,
        }
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.a_re, self.a_im)
    }

    /// m·x
    pub fn phase(&self, x: &[f64]) -> f64 {
        self.m.iter().zip(x).map(|(&c, &xi)| c as f64 * xi).sum()
    }
}

fn is_lyndon(w: &[usize]) -> bool {
    let n = w.len();
    (1..n).all(|s| {
        for i in 0..n {
            let a = w[i];
            let b = w[(i + s) % n];
            if a != b {
                return a < b;
            }
        }
        false
    })
}

/// Primitive cycles up to `l` scattering events plus their repetitions.
pub fn enumerate_orbits(g: &QuantumGraph, l: usize) -> Vec<PeriodicOrbit> {
    let n = g.basis().len();
    let mut succ: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
    for (out, inc, s) in g.scattering_amplitudes() {
        succ[inc].push((out, s));
    }
    for s in &mut succ {
        s.sort_by_key(|e| e.0);
    }
    let lengths = g.lengths();
    let l0 = g.total_length();
    let b = g.bond_count();

    let mut primitive: Vec<(Vec<usize>, Complex64)> = Vec::new();
    let mut path: Vec<usize> = Vec::with_capacity(l);
    for start in 0..n {
        path.clear();
        path.push(start);
        dfs(start, &succ, l, &mut path, Complex64::new(1.0, 0.0), &mut primitive);
    }

    let mut out = Vec::new();
    for (cycle, amp) in primitive {
        let mut base = FrequencyVector::zeros(b);
        for &d in &cycle {
            base = base.add(&FrequencyVector::unit(b, d / 2));
        }
        let period = cycle.len();
        for r in 1..=l / period {
            let m = base.scale(r as i32);
            let length = m.physical(&lengths);
            out.push(PeriodicOrbit {
                cycle: cycle.clone(),
                period,
                repetition: r,
                amplitude: amp.powu(r as u32),
                omega: std::f64::consts::PI * length / l0,
                length,
                m,
            });
        }
    }
    out.sort_by(|x, y| {
        x.events()
            .cmp(&y.events())
            .then_with(|| x.cycle.cmp(&y.cycle))
            .then_with(|| x.repetition.cmp(&y.repetition))
    });
    out
}

fn dfs(
    start: usize,
    succ: &[Vec<(usize, Complex64)>],
    l: usize,
    path: &mut Vec<usize>,
    amp: Complex64,
    found: &mut Vec<(Vec<usize>, Complex64)>,
) {
    let last = *path.last().expect("nonempty path");
    for &(next, s) in &succ[last] {
        // a Lyndon word starts at its minimum but may revisit it
        if next == start && is_lyndon(path) {
            found.push((path.clone(), amp * s));
        }
        if next >= start && path.len() < l {
            path.push(next);
            dfs(start, succ, l, path, amp * s, found);
            path.pop();
        }
    }
}

/// max over `ks` of |Σ_{n_p r = m} n_p A_p^r e^{ik m_p·L} − tr(T^m)(k)|.
pub fn trace_identity_check(g: &QuantumGraph, m: usize, ks: &[f64]) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("orbit period must be at least 1".into()));
    }
    if m > 6 * g.bond_count() {
        return Err(Error::InvalidArgument(format!(
            "period {m} beyond the practical cutoff 6B = {}",
            6 * g.bond_count()
        )));
    }
    let orbits = enumerate_orbits(g, m);
    let traces = trace_powers(&transition_matrix(g), m, None);
    let trace = &traces[m - 1];
    let mut worst: f64 = 0.0;
    for &k in ks {
        let mut acc = crate::numeric::CompensatedComplex::default();
        for p in orbits.iter().filter(|p| p.events() == m) {
            acc.add(p.amplitude * p.period as f64 * Complex64::from_polar(1.0, k * p.length));
        }
        worst = worst.max((acc.value() - trace.evaluate(k)).norm());
    }
    Ok(worst)
}

/// Orbits whose amplitude magnitude exceeds 1 (beyond roundoff).
pub fn amplitude_violations(orbits: &[PeriodicOrbit]) -> usize {
    orbits.iter().filter(|p| p.amplitude.norm() > 1.0 + 1e-12).count()
}

/// Terms of the explicit series: a = A_p^r/r at frequency ω_p.
pub fn expansion_terms(orbits: &[PeriodicOrbit]) -> Vec<ExpansionTerm> {
    orbits
        .iter()
        .filter(|p| p.amplitude.norm() > 0.0)
        .map(|p| ExpansionTerm::new(&p.m, p.amplitude / p.repetition as f64, p.omega))
        .collect()
}

/// Terms a = −b_α of a level density, the same normalization as [`expansion_terms`].
pub fn density_terms(d: &LevelDensity) -> Vec<ExpansionTerm> {
    d.log
        .iter()
        .map(|(m, b, s)| ExpansionTerm::new(m, -b, std::f64::consts::PI * s / d.total_length))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::library;

    #[test]
    fn lyndon_words() {
        assert!(is_lyndon(&[0, 1]));
        assert!(!is_lyndon(&[1, 0]));
        assert!(!is_lyndon(&[0, 1, 0, 1]));
        assert!(is_lyndon(&[0, 0, 1]));
        assert!(is_lyndon(&[3]));
    }

    #[test]
    fn single_bond_bounce() {
        let g = library::single_bond(1.2);
        let orbits = enumerate_orbits(&g, 4);
        assert_eq!(orbits.len(), 2);
        let p = &orbits[0];
        assert_eq!(p.period, 2);
        assert_eq!(p.repetition, 1);
        assert_eq!(p.m.counts(), &[2]);
        assert_eq!(p.amplitude, Complex64::new(1.0, 0.0));
        assert_eq!(orbits[1].repetition, 2);
        assert_eq!(orbits[1].m.counts(), &[4]);
    }

    #[test]
    fn neumann_centre_kills_backscatter_orbit() {
        let g = library::two_bond_star(1.0, 1.3, 0.0);
        let orbits = enumerate_orbits(&g, 4);
        assert!(orbits.iter().all(|p| p.m.counts() != [2, 0]));
        let star = library::regular_star();
        let bounce = enumerate_orbits(&star, 2)
            .into_iter()
            .find(|p| p.m.counts() == [2, 0])
            .unwrap();
        assert!((bounce.amplitude.re - library::STAR_RHO).abs() < 1e-15);
    }

    #[test]
    fn no_period_one_orbits_without_loops() {
        let g = library::standard_quadrangle();
        assert!(enumerate_orbits(&g, 1).is_empty());
        let dev = trace_identity_check(&g, 1, &[0.3, 1.7]).unwrap();
        assert_eq!(dev, 0.0);
    }
}
