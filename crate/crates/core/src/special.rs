//! Gamma function and modified Bessel function of the second kind for real
//! order, as needed by the Matérn kernel.
//!
//! `K_ν(x)` follows Temme's method: the order is split as `ν = μ + l` with
//! `|μ| ≤ 1/2`, `K_μ` and `K_{μ+1}` come from Temme's series (`x < 2`) or
//! Steed's continued fraction (`x ≥ 2`), and forward recurrence lifts them to
//! order `ν`. The `Γ(1 ± μ)` terms use the Taylor series of `1/Γ(1+z)`.

use crate::scalar::Scalar;

/// Taylor coefficients of `1/Γ(1+z)` about zero.
const RGAMMA_TAYLOR: [f64; 30] = [
    1.0,
    0.577_215_664_901_532_860_61,
    -0.655_878_071_520_253_881_08,
    -0.042_002_635_034_095_235_529,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_748,
    -0.009_621_971_527_876_973_562_1,
    0.007_218_943_246_663_099_542_4,
    -0.001_165_167_591_859_065_112_1,
    -0.000_215_241_674_114_950_972_82,
    0.000_128_050_282_388_116_186_15,
    -0.000_020_134_854_780_788_238_656,
    -1.250_493_482_142_670_657_3e-6,
    1.133_027_231_981_695_882_4e-6,
    -2.056_338_416_977_607_103_5e-7,
    6.116_095_104_481_415_817_9e-9,
    5.002_007_644_469_222_930_1e-9,
    -1.181_274_570_487_020_144_6e-9,
    1.043_426_711_691_100_510_5e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708_2e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783_2e-14,
    -5.348_122_539_423_017_982_4e-15,
    1.226_778_628_238_260_790_2e-15,
    -1.181_259_301_697_458_769_5e-16,
    1.186_692_254_751_600_332_6e-18,
    1.412_380_655_318_031_781_6e-18,
    -2.298_745_684_435_370_206_6e-19,
    1.714_406_321_927_337_433_4e-20,
];

const MAX_ITERATIONS: usize = 10_000;

/// `Γ(1+μ)` and `Γ(1−μ)` related quantities for `|μ| ≤ 1/2`.
#[derive(Debug, Clone, Copy)]
struct TemmeGammas<T> {
    /// `(1/Γ(1−μ) − 1/Γ(1+μ)) / 2μ`
    gam1: T,
    /// `(1/Γ(1−μ) + 1/Γ(1+μ)) / 2`
    gam2: T,
    /// `1/Γ(1+μ)`
    gampl: T,
    /// `1/Γ(1−μ)`
    gammi: T,
}

impl<T: Scalar> TemmeGammas<T> {
    fn new(mu: T) -> Self {
        // Even part of the series gives gam2, odd part gives gam1 without the
        // cancellation of the defining difference near μ = 0.
        let mut even = T::zero();
        let mut odd = T::zero();
        let mu2 = mu * mu;
        let mut pow = T::one();
        for pair in RGAMMA_TAYLOR.chunks(2) {
            even += T::lit(pair[0]) * pow;
            if let Some(&c) = pair.get(1) {
                odd += T::lit(c) * pow;
            }
            pow *= mu2;
        }
        let gampl = even + odd * mu;
        let gammi = even - odd * mu;
        Self { gam1: -odd, gam2: even, gampl, gammi }
    }
}

/// Gamma function for positive real arguments.
///
/// Reduces to `Γ(1+μ)` with `|μ| ≤ 1/2` and applies the recurrence.
pub fn gamma<T: Scalar>(x: T) -> T {
    if !(x > T::zero()) || !x.is_finite() {
        return T::nan();
    }
    let half = T::lit(0.5);
    let l = (x + half).floor();
    let mu = x - l;
    let g1mu = TemmeGammas::new(mu).gampl.recip(); // Γ(1+μ)
    if l == T::zero() {
        // x = μ ∈ (0, 1/2)
        return g1mu / mu;
    }
    let mut g = g1mu;
    let mut k = T::one();
    while k < l {
        g *= mu + k;
        k += T::one();
    }
    g
}

/// Modified Bessel function of the second kind `K_ν` for a fixed real order.
///
/// Order-dependent constants are computed once so that repeated evaluation
/// (filling a covariance matrix) only pays for the argument-dependent work.
#[derive(Debug, Clone)]
pub struct BesselK<T> {
    nu: T,
    mu: T,
    steps: usize,
    gammas: TemmeGammas<T>,
}

impl<T: Scalar> BesselK<T> {
    /// Panics if `nu` is negative or not finite.
    pub fn new(nu: T) -> Self {
        assert!(nu >= T::zero() && nu.is_finite(), "order must be finite and non-negative");
        let l = (nu + T::lit(0.5)).floor();
        let mu = nu - l;
        let steps = l.to_usize().expect("order too large");
        Self { nu, mu, steps, gammas: TemmeGammas::new(mu) }
    }

    pub fn order(&self) -> T {
        self.nu
    }

    /// `K_ν(x)` for `x > 0`. Returns NaN for non-positive or non-finite `x`.
    pub fn eval(&self, x: T) -> T {
        if !(x > T::zero()) || !x.is_finite() {
            return T::nan();
        }
        let (k_mu, k_mu1) = if x < T::lit(2.0) { self.temme_series(x) } else { self.steed_cf2(x) };
        self.recur_up(x, k_mu, k_mu1)
    }

    fn recur_up(&self, x: T, mut k_mu: T, mut k_mu1: T) -> T {
        let xi2 = T::lit(2.0) / x;
        for i in 1..=self.steps {
            let next = (self.mu + T::from_usize_lossy(i)) * xi2 * k_mu1 + k_mu;
            k_mu = k_mu1;
            k_mu1 = next;
        }
        k_mu
    }

    /// `K_μ(x)` and `K_{μ+1}(x)` by Temme's series, `0 < x < 2`.
    fn temme_series(&self, x: T) -> (T, T) {
        let eps = T::epsilon();
        let mu = self.mu;
        let mu2 = mu * mu;
        let half = T::lit(0.5);
        let x2 = half * x;
        let pimu = T::PI() * mu;
        let fact = if pimu.abs() < eps { T::one() } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < eps { T::one() } else { e.sinh() / e };
        let TemmeGammas { gam1, gam2, gampl, gammi } = self.gammas;

        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = half * ee / gampl;
        let mut q = half / (ee * gammi);
        let mut c = T::one();
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..=MAX_ITERATIONS {
            let fi = T::from_usize_lossy(i);
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * eps {
                break;
            }
        }
        (sum, sum1 * T::lit(2.0) / x)
    }

    /// `K_μ(x)` and `K_{μ+1}(x)` by Steed's continued fraction, `x ≥ 2`.
    fn steed_cf2(&self, x: T) -> (T, T) {
        let eps = T::epsilon();
        let mu = self.mu;
        let two = T::lit(2.0);
        let mut b = two * (T::one() + x);
        let mut d = b.recip();
        let mut delh = d;
        let mut h = d;
        let mut q1 = T::zero();
        let mut q2 = T::one();
        let a1 = T::lit(0.25) - mu * mu;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = T::one() + q * delh;
        for i in 2..=MAX_ITERATIONS {
            let fi = T::from_usize_lossy(i);
            a -= two * (fi - T::one());
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += two;
            d = (b + a * d).recip();
            delh = (b * d - T::one()) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < eps {
                break;
            }
        }
        h = a1 * h;
        let k_mu = (T::PI() / (two * x)).sqrt() * (-x).exp() / s;
        let k_mu1 = k_mu * (mu + x + T::lit(0.5) - h) / x;
        (k_mu, k_mu1)
    }
}

/// One-shot `K_ν(x)`.
pub fn bessel_k<T: Scalar>(nu: T, x: T) -> T {
    BesselK::new(nu).eval(x)
}
