use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use super::histogram::{Binning, DistributionHistogram};
use super::sampler::TorusSampler;
use crate::error::{Error, Result};
use crate::orbits::ExpansionTerm;
use crate::spectrum::SpectralHierarchy;

/// One term −c·sin(m·x + phase) of a random-phase series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OscillatoryTerm {
    pub m: Vec<i32>,
    pub c: f64,
    pub phase: f64,
}

impl OscillatoryTerm {
    pub fn value(&self, x: &[f64]) -> f64 {
        let arg: f64 = self.m.iter().zip(x).map(|(&mi, &xi)| mi as f64 * xi).sum();
        -self.c * (arg + self.phase).sin()
    }
}

/// Σ −c sin(m·x + phase) plus a constant.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RandomPhaseSeries {
    pub offset: f64,
    pub terms: Vec<OscillatoryTerm>,
}

impl RandomPhaseSeries {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut acc = crate::numeric::Compensated::new();
        acc.add(self.offset);
        for t in &self.terms {
            acc.add(t.value(x));
        }
        acc.value()
    }

    /// Σ|c|, the largest possible excursion from the offset.
    pub fn bound(&self) -> f64 {
        self.terms.iter().map(|t| t.c.abs()).sum()
    }

    pub fn dim(&self) -> Option<usize> {
        self.terms.first().map(|t| t.m.len())
    }
}

/// Sum complex amplitudes of terms sharing a frequency vector.
pub fn merge_terms(terms: &[ExpansionTerm]) -> Vec<ExpansionTerm> {
    let mut map: BTreeMap<Vec<i32>, (Complex64, f64)> = BTreeMap::new();
    for t in terms {
        let e = map.entry(t.m.clone()).or_insert((Complex64::new(0.0, 0.0), t.omega));
        e.0 += t.amplitude();
    }
    map.into_iter()
        .filter(|(_, (a, _))| a.norm() > 0.0)
        .map(|(m, (a, omega))| ExpansionTerm {
            m,
            a_re: a.re,
            a_im: a.im,
            omega,
        })
        .collect()
}

/// δ_x = −(2/π) Σ (|a|/ω) sin(ω/2) sin(m·x + arg a).
pub fn fluctuation_series(terms: &[ExpansionTerm]) -> RandomPhaseSeries {
    let terms = merge_terms(terms)
        .into_iter()
        .map(|t| {
            let a = t.amplitude();
            OscillatoryTerm {
                c: 2.0 / std::f64::consts::PI * a.norm() / t.omega * (t.omega / 2.0).sin(),
                phase: a.arg(),
                m: t.m,
            }
        })
        .collect();
    RandomPhaseSeries { offset: 0.0, terms }
}

/// s_m in mean spacings: m − Σ (4/π)(|a|/ω) sin(ω/2) sin(ωm/2) cos(m·x + ωm/2 + arg a).
pub fn spacing_series(terms: &[ExpansionTerm], m: usize) -> RandomPhaseSeries {
    let mf = m as f64;
    let terms = if m == 0 {
        Vec::new()
    } else {
        merge_terms(terms)
            .into_iter()
            .map(|t| {
                let a = t.amplitude();
                let w = t.omega;
                OscillatoryTerm {
                    c: 4.0 / std::f64::consts::PI * a.norm() / w * (w / 2.0).sin() * (w * mf / 2.0).sin(),
                    phase: w * mf / 2.0 + a.arg() + std::f64::consts::FRAC_PI_2,
                    m: t.m,
                }
            })
            .collect()
    };
    RandomPhaseSeries { offset: mf, terms }
}

/// Draw the series on the next `samples` torus points.
pub fn sample_series(series: &RandomPhaseSeries, samples: usize, sampler: &mut TorusSampler) -> Result<Vec<f64>> {
    if let Some(d) = series.dim() {
        sampler.check_dim(d)?;
    }
    Ok(sampler.map(samples, |x, _| series.evaluate(x)))
}

pub fn mc_delta(
    terms: &[ExpansionTerm],
    samples: usize,
    sampler: &mut TorusSampler,
    binning: Binning,
) -> Result<DistributionHistogram> {
    let values = sample_series(&fluctuation_series(terms), samples, sampler)?;
    DistributionHistogram::from_values(&values, binning)
}

pub fn mc_spacing(
    terms: &[ExpansionTerm],
    m: usize,
    samples: usize,
    sampler: &mut TorusSampler,
    binning: Binning,
) -> Result<DistributionHistogram> {
    let values = sample_series(&spacing_series(terms, m), samples, sampler)?;
    DistributionHistogram::from_values(&values, binning)
}

/// δ_n⁽ʲ⁾ for n ≥ 1 with k > 0.
pub fn fluctuation_values(h: &SpectralHierarchy, j: usize) -> Result<Vec<f64>> {
    if h.level(j).is_none() {
        return Err(Error::Empty(format!("level {j} is not in the hierarchy")));
    }
    let v: Vec<f64> = h.positive(j).into_iter().map(|(_, _, d)| d).collect();
    if v.is_empty() {
        return Err(Error::Empty(format!("level {j} has no positive roots")));
    }
    Ok(v)
}

pub fn empirical_fluctuations(h: &SpectralHierarchy, j: usize, binning: Binning) -> Result<DistributionHistogram> {
    DistributionHistogram::from_values(&fluctuation_values(h, j)?, binning)
}

/// (k_{n+m} − k_n)·L₀/π over consecutive positive roots of level j.
pub fn spacing_values(h: &SpectralHierarchy, j: usize, m: usize) -> Result<Vec<f64>> {
    if h.level(j).is_none() {
        return Err(Error::Empty(format!("level {j} is not in the hierarchy")));
    }
    let ks: Vec<f64> = h.positive(j).into_iter().map(|(_, k, _)| k).collect();
    if m >= ks.len() {
        return Err(Error::InvalidArgument(format!(
            "spacing order {m} needs more than {} roots",
            ks.len()
        )));
    }
    let scale = h.total_length / std::f64::consts::PI;
    Ok(ks.windows(m + 1).map(|w| (w[m] - w[0]) * scale).collect())
}

pub fn empirical_spacings(h: &SpectralHierarchy, j: usize, m: usize, binning: Binning) -> Result<DistributionHistogram> {
    DistributionHistogram::from_values(&spacing_values(h, j, m)?, binning)
}
