//! Sample cross-correlation over a symmetric lag window, with white-noise
//! significance bands.
//!
//! `r(k)` estimates `corr(X(t), Y(t + k))`:
//!
//! ```text
//! r(k) = (1/n) * sum_t (x_t - mean_x)(y_{t+k} - mean_y) / (sd_x * sd_y)
//! ```
//!
//! with full-series means and divide-by-`n` standard deviations. The sum runs
//! over the `n - |k|` overlapping pairs. Positive `k` pairs `x` with later `y`;
//! negative `k` means `y` leads `x`.

use std::fmt;

use thiserror::Error;

use crate::series::{Period, TimeSeries};

/// Slack allowed above `|r| = 1` before the estimator is considered broken.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CcfError {
    #[error("series lengths differ ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("time indices differ at position {index} ({x} vs {y})")]
    IndexMismatch { index: usize, x: Period, y: Period },
    #[error("need at least 3 points, have {0}")]
    TooShort(usize),
    #[error("{0} series has zero variance")]
    ZeroVariance(&'static str),
    #[error("max lag {max_lag} too large for {n} points (limit n - 2 = {limit})", limit = .n - 2)]
    MaxLagTooLarge { max_lag: usize, n: usize },
    #[error("max lag must be positive")]
    ZeroMaxLag,
    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("sample size must be positive")]
    ZeroSampleSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn of(r: f64) -> Sign {
        if r < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    pub fn symbol(&self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// One lag whose correlation fell outside the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignificantLag {
    pub lag: i64,
    pub correlation: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcfResult {
    /// `-max_lag..=max_lag`.
    pub lags: Vec<i64>,
    pub correlations: Vec<f64>,
    /// Series length used for normalization and the band.
    pub n: usize,
    /// Band half-width.
    pub threshold: f64,
    pub alpha: f64,
}

impl CcfResult {
    pub fn max_lag(&self) -> usize {
        self.lags.last().map_or(0, |&l| l as usize)
    }

    pub fn at(&self, lag: i64) -> Option<f64> {
        let max = self.max_lag() as i64;
        if lag.abs() > max {
            return None;
        }
        Some(self.correlations[(lag + max) as usize])
    }

    /// Lag with the largest `|r|`; ties resolve to the smaller lag.
    pub fn argmax_abs(&self) -> (i64, f64) {
        let mut best = (self.lags[0], self.correlations[0]);
        for (&lag, &r) in self.lags.iter().zip(&self.correlations).skip(1) {
            if r.abs() > best.1.abs() {
                best = (lag, r);
            }
        }
        best
    }
}

fn check_alpha(alpha: f64) -> Result<(), CcfError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CcfError::AlphaOutOfRange(alpha))
    }
}

/// Cross-correlation of two aligned series over `-max_lag..=max_lag`.
pub fn cross_correlation(
    x: &TimeSeries,
    y: &TimeSeries,
    max_lag: usize,
    alpha: f64,
) -> Result<CcfResult, CcfError> {
    if x.len() != y.len() {
        return Err(CcfError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    if let Some((index, (a, b))) = x
        .periods()
        .zip(y.periods())
        .enumerate()
        .find(|(_, (a, b))| a != b)
    {
        return Err(CcfError::IndexMismatch { index, x: a, y: b });
    }
    cross_correlation_values(&x.values(), &y.values(), max_lag, alpha)
}

/// Same estimator on raw, already-aligned value slices.
pub fn cross_correlation_values(
    x: &[f64],
    y: &[f64],
    max_lag: usize,
    alpha: f64,
) -> Result<CcfResult, CcfError> {
    if x.len() != y.len() {
        return Err(CcfError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(CcfError::TooShort(n));
    }
    if max_lag == 0 {
        return Err(CcfError::ZeroMaxLag);
    }
    if max_lag > n - 2 {
        return Err(CcfError::MaxLagTooLarge { max_lag, n });
    }
    check_alpha(alpha)?;

    let xc = centered(x);
    let yc = centered(y);
    let sx = biased_sd(&xc);
    let sy = biased_sd(&yc);
    if is_degenerate(x, sx) {
        return Err(CcfError::ZeroVariance("first"));
    }
    if is_degenerate(y, sy) {
        return Err(CcfError::ZeroVariance("second"));
    }
    let scale = sx * sy;
    let nf = n as f64;

    let max = max_lag as i64;
    let lags: Vec<i64> = (-max..=max).collect();
    let correlations = lags
        .iter()
        .map(|&k| {
            // Products run in ascending time order, so swapping the arguments
            // and negating the lag sums identical terms in identical order.
            let (a, b) = if k >= 0 {
                let k = k as usize;
                (&xc[..n - k], &yc[k..])
            } else {
                let k = (-k) as usize;
                (&xc[k..], &yc[..n - k])
            };
            let sum: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
            let r = (sum / nf) / scale;
            debug_assert!(r.abs() <= 1.0 + BOUND_SLACK, "r = {r} out of bounds");
            r.clamp(-1.0, 1.0)
        })
        .collect();

    Ok(CcfResult {
        lags,
        correlations,
        n,
        threshold: significance_threshold(n, alpha)?,
        alpha,
    })
}

fn centered(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

fn biased_sd(centered: &[f64]) -> f64 {
    (centered.iter().map(|c| c * c).sum::<f64>() / centered.len() as f64).sqrt()
}

// Variance indistinguishable from rounding noise of the mean.
fn is_degenerate(v: &[f64], sd: f64) -> bool {
    let magnitude = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    sd <= 8.0 * f64::EPSILON * magnitude || sd == 0.0
}

/// `z_{1 - alpha/2} / sqrt(n)`.
pub fn significance_threshold(n: usize, alpha: f64) -> Result<f64, CcfError> {
    if n == 0 {
        return Err(CcfError::ZeroSampleSize);
    }
    check_alpha(alpha)?;
    Ok(normal_quantile(1.0 - alpha / 2.0) / (n as f64).sqrt())
}

/// Every lag with `|r|` strictly above the band, by ascending lag.
pub fn significant_lags(r: &CcfResult) -> Vec<SignificantLag> {
    r.lags
        .iter()
        .zip(&r.correlations)
        .filter(|(_, c)| c.abs() > r.threshold)
        .map(|(&lag, &correlation)| SignificantLag {
            lag,
            correlation,
            sign: Sign::of(correlation),
        })
        .collect()
}

/// Inverse standard normal CDF.
///
/// Wichura's algorithm AS 241 (PPND16), Applied Statistics 37 (1988). Relative
/// accuracy is about 1e-16 over `(0, 1)`.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability {p} outside (0, 1)");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&CENTRAL_NUM, r) / poly(&CENTRAL_DEN, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let z = if r <= 5.0 {
        let r = r - 1.6;
        poly(&MID_NUM, r) / poly(&MID_DEN, r)
    } else {
        let r = r - 5.0;
        poly(&FAR_NUM, r) / poly(&FAR_DEN, r)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

// Horner evaluation, coefficients in ascending powers.
fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

const CENTRAL_NUM: [f64; 8] = [
    3.387_132_872_796_366_5,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_3e3,
    1.373_169_376_550_946e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const CENTRAL_DEN: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545e3,
];
const MID_NUM: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_546,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const MID_DEN: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_7e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const FAR_NUM: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288e-7,
];
const FAR_DEN: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn quantile_matches_reference_values() {
        // Reference quantiles from high-precision tables.
        let cases = [
            (0.5, 0.0),
            (0.95, 1.644_853_626_951_472_2),
            (0.975, 1.959_963_984_540_054),
            (0.995, 2.575_829_303_548_900_4),
            (0.999_5, 3.290_526_731_491_926),
            (0.025, -1.959_963_984_540_054),
            (1e-10, -6.361_340_902_404_056),
            (1e-300, -37.047_096_499_690_27),
        ];
        for (p, z) in cases {
            let got = normal_quantile(p);
            assert!(
                close(got, z, 1e-8 * z.abs().max(1.0)),
                "p={p}: {got} vs {z}"
            );
        }
    }

    #[test]
    fn threshold_examples() {
        assert!(close(significance_threshold(6, 0.1).unwrap(), 0.6715, 1e-4));
        assert!(close(significance_threshold(1, 0.1).unwrap(), 1.6449, 1e-4));
        assert!(close(
            significance_threshold(100, 0.05).unwrap(),
            0.19600,
            1e-5
        ));
        assert_eq!(
            significance_threshold(6, 0.0),
            Err(CcfError::AlphaOutOfRange(0.0))
        );
        assert_eq!(
            significance_threshold(6, 1.0),
            Err(CcfError::AlphaOutOfRange(1.0))
        );
        assert_eq!(
            significance_threshold(0, 0.1),
            Err(CcfError::ZeroSampleSize)
        );
    }

    #[test]
    fn self_and_anti_correlation_at_zero_lag() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = cross_correlation_values(&x, &x, 1, 0.1).unwrap();
        assert!(close(r.at(0).unwrap(), 1.0, 1e-15));

        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [4.0, 3.0, 2.0, 1.0];
        let r = cross_correlation_values(&x, &y, 1, 0.1).unwrap();
        assert!(close(r.at(0).unwrap(), -1.0, 1e-15));
        assert_eq!(r.lags, vec![-1, 0, 1]);
        assert_eq!(r.n, 4);
    }

    #[test]
    fn lagged_value_by_hand() {
        // x = [1,2,3], y = [3,1,2]: means 2, sd_x = sd_y = sqrt(2/3).
        // lag 1 pairs (x0,y1), (x1,y2): (-1)(-1) + 0*0 = 1; r = (1/3)/(2/3) = 0.5
        let r = cross_correlation_values(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0], 1, 0.1).unwrap();
        assert!(close(r.at(1).unwrap(), 0.5, 1e-15));
        // lag -1 pairs (x1,y0), (x2,y1): 0*1 + 1*(-1) = -1; r = -0.5
        assert!(close(r.at(-1).unwrap(), -0.5, 1e-15));
    }

    #[test]
    fn precondition_errors() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            cross_correlation_values(&a, &a[..3], 1, 0.1),
            Err(CcfError::LengthMismatch { x: 4, y: 3 })
        );
        assert_eq!(
            cross_correlation_values(&a[..2], &a[..2], 1, 0.1),
            Err(CcfError::TooShort(2))
        );
        assert_eq!(
            cross_correlation_values(&a, &a, 3, 0.1),
            Err(CcfError::MaxLagTooLarge { max_lag: 3, n: 4 })
        );
        assert_eq!(
            cross_correlation_values(&a, &a, 0, 0.1),
            Err(CcfError::ZeroMaxLag)
        );
        assert_eq!(
            cross_correlation_values(&[0.1; 4], &a, 1, 0.1),
            Err(CcfError::ZeroVariance("first"))
        );
        assert_eq!(
            cross_correlation_values(&a, &[7.0; 4], 1, 0.1),
            Err(CcfError::ZeroVariance("second"))
        );
        assert_eq!(
            cross_correlation_values(&a, &a, 1, 1.5),
            Err(CcfError::AlphaOutOfRange(1.5))
        );
    }

    #[test]
    fn index_mismatch_is_reported() {
        let x = TimeSeries::annual(2004, &[1.0, 2.0, 4.0]).unwrap();
        let y = TimeSeries::annual(2005, &[1.0, 2.0, 4.0]).unwrap();
        assert!(matches!(
            cross_correlation(&x, &y, 1, 0.1),
            Err(CcfError::IndexMismatch { index: 0, .. })
        ));
    }

    fn result(correlations: Vec<f64>, threshold: f64) -> CcfResult {
        let max = (correlations.len() / 2) as i64;
        CcfResult {
            lags: (-max..=max).collect(),
            correlations,
            n: 6,
            threshold,
            alpha: 0.1,
        }
    }

    #[test]
    fn significant_lags_examples() {
        assert!(significant_lags(&result(vec![0.0; 7], 0.6715)).is_empty());

        let r = result(vec![0.1, -0.2, 0.8, 0.3, -0.5, 0.0, 0.2], 0.6715);
        assert_eq!(
            significant_lags(&r),
            vec![SignificantLag {
                lag: -1,
                correlation: 0.8,
                sign: Sign::Positive
            }]
        );

        let r = result(vec![0.0, 0.5, -0.5, 0.0, 0.0], 0.5);
        assert!(significant_lags(&r).is_empty());
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        let r = result(vec![0.5, -0.9, 0.9], 0.1);
        assert_eq!(r.argmax_abs(), (0, -0.9));
    }
}
