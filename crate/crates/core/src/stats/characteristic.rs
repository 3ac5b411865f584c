use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::distributions::{sample_series, RandomPhaseSeries};
use super::sampler::TorusSampler;
use crate::error::{Error, Result};
use crate::numeric::{bessel_j0, CompensatedComplex};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CfMode {
    /// Torus average of e^{−iκδ(x)}.
    MonteCarlo { samples: usize },
    /// e^{−iκ·offset} Π J₀(κ c_p): treats every phase as independent, so it is an
    /// approximation whenever terms share or combine frequency vectors.
    Product,
}

/// F(κ) = ⟨e^{−iκδ}⟩ on a symmetric grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicTable {
    pub kappa: Vec<f64>,
    pub values: Vec<Complex64>,
    pub approximate: bool,
}

pub fn check_symmetric_grid(kappa: &[f64]) -> Result<()> {
    if kappa.len() < 3 {
        return Err(Error::InvalidArgument("κ grid needs at least 3 points".into()));
    }
    let scale = kappa.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let n = kappa.len();
    let h = (kappa[n - 1] - kappa[0]) / (n - 1) as f64;
    for i in 0..n {
        if (kappa[i] + kappa[n - 1 - i]).abs() > 1e-12 * scale {
            return Err(Error::InvalidArgument("κ grid is not symmetric about 0".into()));
        }
        if (kappa[i] - (kappa[0] + i as f64 * h)).abs() > 1e-9 * scale {
            return Err(Error::InvalidArgument("κ grid is not uniform".into()));
        }
    }
    Ok(())
}

/// n points uniformly on [−κ_max, κ_max].
pub fn symmetric_grid(kappa_max: f64, n: usize) -> Vec<f64> {
    let h = 2.0 * kappa_max / (n - 1) as f64;
    (0..n)
        .map(|i| if 2 * i + 1 == n { 0.0 } else { -kappa_max + i as f64 * h })
        .collect()
}

pub fn characteristic_function(
    series: &RandomPhaseSeries,
    kappa: &[f64],
    mode: CfMode,
    sampler: &mut TorusSampler,
) -> Result<CharacteristicTable> {
    check_symmetric_grid(kappa)?;
    let values = match mode {
        CfMode::Product => kappa.iter().map(|&k| product_value(series, k)).collect(),
        CfMode::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("need at least one sample".into()));
            }
            let draws = sample_series(series, samples, sampler)?;
            empirical_characteristic(&draws, kappa)
        }
    };
    Ok(CharacteristicTable {
        kappa: kappa.to_vec(),
        values,
        approximate: matches!(mode, CfMode::Product),
    })
}

pub(crate) fn product_value(series: &RandomPhaseSeries, k: f64) -> Complex64 {
    let mut v = Complex64::from_polar(1.0, -k * series.offset);
    for t in &series.terms {
        v *= bessel_j0(k * t.c);
    }
    v
}

/// (1/M) Σ e^{−iκ v_s} at every κ.
pub fn empirical_characteristic(values: &[f64], kappa: &[f64]) -> Vec<Complex64> {
    let n = values.len().max(1) as f64;
    kappa
        .par_iter()
        .map(|&k| {
            let mut acc = CompensatedComplex::default();
            for &v in values {
                acc.add(Complex64::from_polar(1.0, -k * v));
            }
            acc.value() / n
        })
        .collect()
}

/// P(δ) = (1/2π) ∫ e^{iκδ} F(κ) dκ by the trapezoid rule.
pub fn inverse_transform(table: &CharacteristicTable, delta: &[f64]) -> Result<Vec<f64>> {
    check_symmetric_grid(&table.kappa)?;
    Ok(invert(&table.kappa, &table.values, delta))
}

pub(crate) fn invert(kappa: &[f64], values: &[Complex64], delta: &[f64]) -> Vec<f64> {
    let n = kappa.len();
    let h = (kappa[n - 1] - kappa[0]) / (n - 1) as f64;
    delta
        .iter()
        .map(|&d| {
            let mut acc = CompensatedComplex::default();
            for (i, (&k, &f)) in kappa.iter().zip(values).enumerate() {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                acc.add(f * Complex64::from_polar(w, k * d));
            }
            acc.value().re * h / std::f64::consts::TAU
        })
        .collect()
}
