use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::characteristic::{check_symmetric_grid, invert, product_value};
use super::distributions::{merge_terms, OscillatoryTerm, RandomPhaseSeries};
use super::histogram::{mean_variance, Binning, DistributionHistogram};
use super::sampler::TorusSampler;
use crate::error::{Error, Result};
use crate::orbits::{density_terms, ExpansionTerm};
use crate::secular::LevelDensity;

/// Expansion of level j−1 used to step fluctuations down from level j.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropagationCoefficients {
    /// The level produced, j − 1.
    pub level: usize,
    pub terms: Vec<ExpansionTerm>,
}

impl PropagationCoefficients {
    pub fn new(level: usize, terms: &[ExpansionTerm]) -> Self {
        Self {
            level,
            terms: merge_terms(terms),
        }
    }

    pub fn from_density(d: &LevelDensity) -> Self {
        Self::new(d.level, &density_terms(d))
    }

    pub fn dim(&self) -> Option<usize> {
        self.terms.first().map(|t| t.m.len())
    }

    /// f = (δ₁ − δ₂ − δ₁² + δ₂²)/2.
    pub fn drift(d1: f64, d2: f64) -> f64 {
        (d1 - d2 - d1 * d1 + d2 * d2) / 2.0
    }

    /// C_p = (2/π)(|a|/ω) sin(ω/2)(δ₁ − δ₂ + 1).
    pub fn amplitude(t: &ExpansionTerm, d1: f64, d2: f64) -> f64 {
        2.0 / std::f64::consts::PI * t.amplitude().norm() / t.omega * (t.omega / 2.0).sin() * (d1 - d2 + 1.0)
    }

    /// φ_p = ω(δ₁ + δ₂ − 1)/2, plus arg a for complex amplitudes.
    pub fn phase(t: &ExpansionTerm, d1: f64, d2: f64) -> f64 {
        t.omega * (d1 + d2 - 1.0) / 2.0 + t.amplitude().arg()
    }

    /// δ⁽ʲ⁻¹⁾ = f − Σ C_p sin(m_p·x + φ_p) for fixed separators.
    pub fn series(&self, d1: f64, d2: f64) -> RandomPhaseSeries {
        RandomPhaseSeries {
            offset: Self::drift(d1, d2),
            terms: self
                .terms
                .iter()
                .map(|t| OscillatoryTerm {
                    m: t.m.clone(),
                    c: Self::amplitude(t, d1, d2),
                    phase: Self::phase(t, d1, d2),
                })
                .collect(),
        }
    }

    fn evaluate(&self, x: &[f64], d1: f64, d2: f64) -> f64 {
        let mut acc = crate::numeric::Compensated::new();
        acc.add(Self::drift(d1, d2));
        for t in &self.terms {
            let arg = t.phase(x) + Self::phase(t, d1, d2);
            acc.add(-Self::amplitude(t, d1, d2) * arg.sin());
        }
        acc.value()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Source {
    PointMass(f64),
    Values(Vec<f64>),
    Histogram(DistributionHistogram),
}

/// P⁽ʲ⁾ in a form that can be sampled.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelDistribution {
    pub level: usize,
    pub source: Source,
}

impl LevelDistribution {
    /// The fictitious level above the regular one, where every separator sits at ½.
    pub fn separators(level: usize) -> Self {
        Self {
            level,
            source: Source::PointMass(0.5),
        }
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        match &self.source {
            Source::PointMass(v) => Ok(*v),
            Source::Values(v) => {
                if v.is_empty() {
                    return Err(Error::Empty("distribution has no values".into()));
                }
                Ok(v[rng.gen_range(0..v.len())])
            }
            Source::Histogram(h) => h.quantile(rng.gen::<f64>(), rng.gen::<f64>()),
        }
    }

    pub fn mean_variance(&self) -> (f64, f64) {
        match &self.source {
            Source::PointMass(v) => (*v, 0.0),
            Source::Values(v) => mean_variance(v),
            Source::Histogram(h) => (h.mean, h.variance),
        }
    }

    pub fn histogram(&self, binning: Binning) -> Result<DistributionHistogram> {
        match &self.source {
            Source::PointMass(v) => DistributionHistogram::from_values(&[*v], binning),
            Source::Values(v) => DistributionHistogram::from_values(v, binning),
            Source::Histogram(h) => Ok(h.clone()),
        }
    }
}

fn check_levels(input: &LevelDistribution, coeffs: &PropagationCoefficients) -> Result<()> {
    if input.level != coeffs.level + 1 {
        return Err(Error::InvalidArgument(format!(
            "coefficients produce level {} but the input is level {}",
            coeffs.level, input.level
        )));
    }
    Ok(())
}

/// Monte Carlo step from P⁽ʲ⁾ to P⁽ʲ⁻¹⁾ with δ₁, δ₂ drawn independently from P⁽ʲ⁾.
pub fn propagate_level(
    input: &LevelDistribution,
    coeffs: &PropagationCoefficients,
    samples: usize,
    sampler: &mut TorusSampler,
) -> Result<LevelDistribution> {
    check_levels(input, coeffs)?;
    if let Some(d) = coeffs.dim() {
        sampler.check_dim(d)?;
    }
    if let Source::Values(v) = &input.source {
        if v.is_empty() {
            return Err(Error::Empty("distribution has no values".into()));
        }
    }
    if let Source::Histogram(h) = &input.source {
        h.quantile(0.5, 0.5)?;
    }
    let values = sampler.map(samples, |x, rng| {
        let d1 = input.draw(rng).expect("checked source");
        let d2 = input.draw(rng).expect("checked source");
        coeffs.evaluate(x, d1, d2)
    });
    Ok(LevelDistribution {
        level: coeffs.level,
        source: Source::Values(values),
    })
}

/// Step down through `coeffs` (levels in decreasing order), returning every level produced.
pub fn cascade(
    top: &LevelDistribution,
    coeffs: &[PropagationCoefficients],
    samples: usize,
    sampler: &mut TorusSampler,
) -> Result<Vec<LevelDistribution>> {
    let mut out: Vec<LevelDistribution> = Vec::with_capacity(coeffs.len());
    for c in coeffs {
        let next = propagate_level(out.last().unwrap_or(top), c, samples, sampler)?;
        out.push(next);
    }
    Ok(out)
}

/// Order of the separator average and the inverse transform in the
/// characteristic-function route.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TransformOrdering {
    /// Invert ⟨e^{−iκf} F(κ; δ₁, δ₂)⟩.
    AverageThenInvert,
    /// Average the densities obtained from each separator draw.
    InvertThenAverage,
}

/// P⁽ʲ⁻¹⁾ on `delta` from the product-form characteristic function averaged over
/// `draws` separator pairs.
pub fn propagate_characteristic(
    input: &LevelDistribution,
    coeffs: &PropagationCoefficients,
    kappa: &[f64],
    delta: &[f64],
    draws: usize,
    sampler: &mut TorusSampler,
    ordering: TransformOrdering,
) -> Result<Vec<f64>> {
    check_levels(input, coeffs)?;
    check_symmetric_grid(kappa)?;
    if draws == 0 {
        return Err(Error::InvalidArgument("need at least one separator draw".into()));
    }
    let start = sampler.reserve(draws);
    let pairs: Vec<(f64, f64)> = (0..draws as u64)
        .map(|i| {
            let mut rng = sampler.stream(start + i);
            Ok((input.draw(&mut rng)?, input.draw(&mut rng)?))
        })
        .collect::<Result<_>>()?;
    let tables: Vec<Vec<Complex64>> = pairs
        .par_iter()
        .map(|&(d1, d2)| {
            let s = coeffs.series(d1, d2);
            kappa.iter().map(|&k| product_value(&s, k)).collect()
        })
        .collect();
    let n = draws as f64;
    Ok(match ordering {
        TransformOrdering::AverageThenInvert => {
            let mean: Vec<Complex64> = (0..kappa.len())
                .map(|i| tables.iter().map(|t| t[i]).sum::<Complex64>() / n)
                .collect();
            invert(kappa, &mean, delta)
        }
        TransformOrdering::InvertThenAverage => {
            let dens: Vec<Vec<f64>> = tables.par_iter().map(|t| invert(kappa, t, delta)).collect();
            (0..delta.len())
                .map(|i| dens.iter().map(|d| d[i]).sum::<f64>() / n)
                .collect()
        }
    })
}
