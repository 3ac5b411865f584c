use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::QuantumGraph;
use crate::numeric::looks_rational;

/// Denominator bound and tolerance for flagging Ω_i as rational.
const RATIONAL_DEN: u64 = 1000;
const RATIONAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquidistributionReport {
    pub bond: usize,
    pub omega: f64,
    pub n_max: usize,
    /// Kolmogorov–Smirnov distance to the uniform law on [0, 2π).
    pub statistic: f64,
    pub rational_warning: bool,
}

/// KS distance of {πΩ_i n mod 2π : 1 ≤ n ≤ n_max} from uniform.
pub fn equidistribution_ks(g: &QuantumGraph, bond: usize, n_max: usize) -> Result<EquidistributionReport> {
    let omegas = g.omegas();
    let &omega = omegas.get(bond).ok_or_else(|| {
        Error::InvalidArgument(format!("bond index {bond} out of range (graph has {})", omegas.len()))
    })?;
    let report = phase_ks(omega, n_max)?;
    Ok(EquidistributionReport { bond, ..report })
}

pub fn phase_ks(omega: f64, n_max: usize) -> Result<EquidistributionReport> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    // x_n/2π = (Ω/2)·n mod 1
    let half = omega / 2.0;
    let rational = looks_rational(half, RATIONAL_DEN, RATIONAL_TOL);
    if rational {
        log::warn!("Ω = {omega} is close to a rational; phases will not equidistribute");
    }
    let mut u: Vec<f64> = (1..=n_max as u64).map(|n| (half * n as f64).rem_euclid(1.0)).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let statistic = u
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).max((i + 1) as f64 / n - v))
        .fold(0.0, f64::max);
    Ok(EquidistributionReport {
        bond: 0,
        omega,
        n_max,
        statistic,
        rational_warning: rational,
    })
}

/// GOE Wigner surmise (πs/2)e^{−πs²/4}.
pub fn wigner_surmise(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    let pi = std::f64::consts::PI;
    pi * s / 2.0 * (-pi * s * s / 4.0).exp()
}

/// Poisson spacing law e^{−s}.
pub fn poisson_spacing(s: f64) -> f64 {
    if s < 0.0 {
        0.0
    } else {
        (-s).exp()
    }
}

/// Standard normal density.
pub fn gaussian(x: f64) -> f64 {
    (-x * x / 2.0).exp() / (std::f64::consts::TAU).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReferencePoint {
    pub s: f64,
    pub wigner: f64,
    pub poisson: f64,
    pub gaussian: f64,
}

pub fn reference_curves(grid: &[f64]) -> Vec<ReferencePoint> {
    grid.iter()
        .map(|&s| ReferencePoint {
            s,
            wigner: wigner_surmise(s),
            poisson: poisson_spacing(s),
            gaussian: gaussian(s),
        })
        .collect()
}
