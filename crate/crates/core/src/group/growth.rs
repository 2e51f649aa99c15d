use serde::{Deserialize, Serialize};

use super::ball::BallCounts;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    SpectralRadius,
    BfsFit,
}

/// An exponential growth rate in nats per unit length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub rate: f64,
    pub method: Method,
    /// Inclusive radius interval the estimate was read from.
    pub window: (usize, usize),
    pub error_bound: f64,
}

impl GrowthEstimate {
    pub fn spectral(rate: f64, radius: usize, error_bound: f64) -> Self {
        GrowthEstimate {
            rate: rate.max(0.0),
            method: Method::SpectralRadius,
            window: (0, radius),
            error_bound,
        }
    }

    /// Whether two estimates overlap within their combined error bounds.
    pub fn agrees_with(&self, other: &GrowthEstimate) -> bool {
        (self.rate - other.rate).abs() <= self.error_bound + other.error_bound + 1e-12
    }
}

pub const MIN_WINDOW: usize = 3;
pub const DEFAULT_WINDOW: usize = 5;

/// Default window: the last five radii (or fewer, down to three).
pub fn default_window(radius: usize) -> (usize, usize) {
    let lo = radius.saturating_sub(DEFAULT_WINDOW - 1).max(1);
    (lo, radius)
}

pub fn growth_rate(counts: &BallCounts, method: Method) -> Result<GrowthEstimate> {
    growth_rate_window(counts, method, default_window(counts.radius))
}

/// Growth rate from ball counts over the inclusive radius window `(lo, hi)`.
///
/// * `BfsFit`: least-squares slope of `log |B(r)|` over the window. The error
///   bound is the spread between the slope and the per-radius estimates
///   `(1/r) log |B(r)|`; the true rate lies inside that spread for the
///   quasi-convex subsets handled here, where `(1/r) log |B(r)|` decreases to
///   its limit.
/// * `ClosedForm`: mean log-ratio of sphere sizes across the window,
///   `(log s_hi - log s_lo) / (hi - lo)`. Sphere sizes of both group families
///   satisfy a linear recurrence, so over a window spanning whole periods
///   this is the exact rate (`log(2k-1)` for `F_k`). The error bound is the
///   largest deviation of a single-step ratio from it.
pub fn growth_rate_window(
    counts: &BallCounts,
    method: Method,
    window: (usize, usize),
) -> Result<GrowthEstimate> {
    let (lo, hi) = window;
    let have = if hi >= lo { hi - lo + 1 } else { 0 };
    if have < MIN_WINDOW || hi > counts.radius || lo == 0 {
        return Err(Error::WindowTooSmall {
            needed: MIN_WINDOW,
            have: have.min(counts.radius),
        });
    }
    match method {
        Method::BfsFit => {
            let xs: Vec<f64> = (lo..=hi).map(|r| r as f64).collect();
            let ys: Vec<f64> = (lo..=hi)
                .map(|r| (counts.cumulative[r].max(1) as f64).ln())
                .collect();
            let n = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / n;
            let my = ys.iter().sum::<f64>() / n;
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            let slope = (sxy / sxx).max(0.0);
            let mut hi_est = slope;
            let mut lo_est = slope;
            for (x, y) in xs.iter().zip(&ys) {
                let e = y / x;
                hi_est = hi_est.max(e);
                lo_est = lo_est.min(e);
            }
            Ok(GrowthEstimate {
                rate: slope,
                method,
                window,
                error_bound: hi_est - lo_est,
            })
        }
        Method::ClosedForm => {
            let (s_lo, s_hi) = (counts.sphere_sizes[lo], counts.sphere_sizes[hi]);
            if s_lo == 0 || s_hi == 0 {
                return Ok(GrowthEstimate {
                    rate: 0.0,
                    method,
                    window,
                    error_bound: 0.0,
                });
            }
            let rate = (((s_hi as f64).ln() - (s_lo as f64).ln()) / (hi - lo) as f64).max(0.0);
            let err = (lo + 1..=hi)
                .filter(|&r| counts.sphere_sizes[r - 1] > 0)
                .map(|r| {
                    let q = (counts.sphere_sizes[r] as f64 / counts.sphere_sizes[r - 1] as f64).ln();
                    (q - rate).abs()
                })
                .fold(0.0, f64::max);
            Ok(GrowthEstimate {
                rate,
                method,
                window,
                error_bound: err,
            })
        }
        Method::SpectralRadius => Err(Error::UnsupportedMethod("spectral_radius")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Ball, MarkedGroup};

    #[test]
    fn free_group_closed_form_is_log3() {
        // oracle: sphere sizes 4 * 3^(r-1)
        let spheres: Vec<u64> = (0..=12u32)
            .map(|r| if r == 0 { 1 } else { 4 * 3u64.pow(r - 1) })
            .collect();
        let counts = BallCounts::from_spheres(spheres);
        let g = MarkedGroup::parse("free:2").unwrap();
        assert_eq!(Ball::new(&g, 12).counts().unwrap(), counts);
        let est = growth_rate(&counts, Method::ClosedForm).unwrap();
        assert!((est.rate - 3f64.ln()).abs() < 1e-6);
        let fit = growth_rate_window(&counts, Method::BfsFit, (8, 12)).unwrap();
        assert!((fit.rate - 3f64.ln()).abs() < 1e-3);
        assert!(fit.agrees_with(&est));
    }

    #[test]
    fn trivial_group_rate_zero() {
        let counts = BallCounts::from_spheres(vec![1, 0, 0, 0, 0, 0]);
        for m in [Method::BfsFit, Method::ClosedForm] {
            let est = growth_rate(&counts, m).unwrap();
            assert_eq!(est.rate, 0.0);
        }
    }

    #[test]
    fn window_too_small() {
        let counts = BallCounts::from_spheres(vec![1, 4, 12]);
        assert!(matches!(
            growth_rate(&counts, Method::BfsFit),
            Err(Error::WindowTooSmall { .. })
        ));
        let counts = BallCounts::from_spheres(vec![1, 4, 12, 36]);
        assert!(growth_rate(&counts, Method::BfsFit).is_ok());
        assert!(matches!(
            growth_rate(&counts, Method::SpectralRadius),
            Err(Error::UnsupportedMethod(_))
        ));
    }

    #[test]
    fn free_product_fit_matches_transfer_matrix() {
        // oracle: sphere sizes of Z2*Z3 alternate x with y^{+-1}:
        // s_r = 2^floor(r/2) + 2^ceil(r/2), growth base sqrt(2)
        let g = MarkedGroup::parse("product:2,3").unwrap();
        let counts = Ball::new(&g, 14).counts().unwrap();
        for r in 1..=14u32 {
            let expected = 2u64.pow(r / 2) + 2u64.pow(r.div_ceil(2));
            assert_eq!(counts.sphere_sizes[r as usize], expected);
        }
        let est = growth_rate(&counts, Method::ClosedForm).unwrap();
        assert!((est.rate - 2f64.sqrt().ln()).abs() < 1e-3, "{}", est.rate);
        // the cumulative fit converges more slowly but stays within its bound
        let fit = growth_rate(&counts, Method::BfsFit).unwrap();
        assert!(fit.agrees_with(&est));
        assert!((fit.rate - 2f64.sqrt().ln()).abs() < 1e-2);
    }
}
