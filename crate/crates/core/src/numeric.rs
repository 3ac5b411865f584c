//! Small numeric helpers shared across modules.

use num_complex::Complex64;

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated accumulator for complex values (real and imaginary parts separately).
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedComplex {
    re: Compensated,
    im: Compensated,
}

impl CompensatedComplex {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Compensated::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Dense row-major complex matrix. Only what the scattering checks need.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(n: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data has wrong size");
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self[(i, l)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[l * n + j];
                }
            }
        }
        out
    }

    /// max |(M M†)_{ij} − δ_ij|
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.mul(&self.adjoint());
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - target).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Bessel J0 from the integral (1/π)∫₀^π cos(x sin t) dt.
///
/// The integrand is smooth and periodic, so the trapezoid rule converges
/// geometrically once the node count exceeds about |x|/2.
pub fn bessel_j0(x: f64) -> f64 {
    let n = 64 + 2 * (x.abs().ceil() as usize);
    let h = std::f64::consts::PI / n as f64;
    let mut acc = Compensated::new();
    for i in 0..n {
        acc.add((x * (i as f64 * h).sin()).cos());
    }
    acc.value() / n as f64
}

/// Best rational approximation p/q of `x` with q ≤ `max_den`, via continued fractions.
pub fn rational_approximation(x: f64, max_den: u64) -> (i64, u64) {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i64;
        let h2 = ai.saturating_mul(h1).saturating_add(h0);
        let k2 = (ai.unsigned_abs()).saturating_mul(k1).saturating_add(k0);
        if k2 > max_den {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = v - a;
        if frac.abs() < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if k1 == 0 {
        (x.round() as i64, 1)
    } else {
        (h1, k1)
    }
}

/// True when `x` is within `tol` of a rational with denominator at most `max_den`.
pub fn looks_rational(x: f64, max_den: u64, tol: f64) -> bool {
    let (p, q) = rational_approximation(x, max_den);
    (x - p as f64 / q as f64).abs() <= tol
}

/// Wrap an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn j0_reference_values() {
        // Abramowitz & Stegun table values.
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(5.0) + 0.177_596_771_314_338_3).abs() < 1e-14);
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-14);
        assert!((bessel_j0(-3.0) - bessel_j0(3.0)).abs() < 1e-15);
    }

    #[test]
    fn j0_large_argument_matches_asymptotic() {
        let x = 200.0f64;
        let asym = (2.0 / (std::f64::consts::PI * x)).sqrt()
            * ((x - std::f64::consts::FRAC_PI_4).cos()
                + (x - std::f64::consts::FRAC_PI_4).sin() / (8.0 * x));
        assert!((bessel_j0(x) - asym).abs() < 1e-6);
    }

    #[test]
    fn rational_detection() {
        assert!(looks_rational(0.375, 1000, 1e-12));
        assert!(looks_rational(2.0 / 7.0, 1000, 1e-12));
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!(!looks_rational(golden, 1000, 1e-9));
        assert!(!looks_rational(std::f64::consts::SQRT_2 - 1.0, 1000, 1e-9));
    }

    #[test]
    fn unitarity_of_identity() {
        assert_eq!(CMatrix::identity(3).unitarity_deviation(), 0.0);
    }
}
