//! Ratio curves and windowed limit estimators.
//!
//! The limits the theory is stated in (limsup/liminf of tail ratios as
//! x → ∞) are replaced at desk scale by estimates over the last decade of
//! admissible x, with explicit flags. A curve is reported as diverging when
//! it grows monotonically through the window and either exceeds the
//! configured ceiling or grows by more than `growth_factor` across the
//! window; the second clause matters because light tails underflow f64
//! before ratios like 1 + x can reach any fixed ceiling.

use serde::{Deserialize, Serialize};

use crate::conv::convolve_tail;
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::grid::{discretize, GridSpec, TailGrid};

/// Windowed estimation parameters; defaults follow the crate-wide contract.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WindowParams {
    /// Denominator floor: points below it are inadmissible.
    pub floor: f64,
    /// Hard ceiling for the divergence flag.
    pub ceiling: f64,
    /// Relative growth across the window that also flags divergence.
    pub growth_factor: f64,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams {
            floor: 1e-12,
            ceiling: 1e3,
            growth_factor: 3.0,
        }
    }
}

impl WindowParams {
    /// Floor for quadrature-sourced tails, which keep relative precision far
    /// below the default floor (meant for sampled/noisy curves).
    pub fn quadrature() -> Self {
        WindowParams {
            floor: 1e-250,
            ..WindowParams::default()
        }
    }
}

/// Paired (x, ratio) samples with windowed liminf/limsup estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioCurve {
    pub points: Vec<(f64, f64)>,
    pub window_liminf: f64,
    pub window_limsup: f64,
    pub diverging: bool,
    /// Index range [start, end) of `points` forming the last decade of x.
    pub window: (usize, usize),
}

impl RatioCurve {
    /// Build from admissible (x, numerator, denominator) triples.
    pub fn from_samples(samples: &[(f64, f64, f64)], params: &WindowParams) -> Result<RatioCurve> {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|(x, _, d)| *x > 0.0 && *d >= params.floor)
            .map(|(x, n, d)| (*x, n / d))
            .collect();
        if pts.is_empty() {
            return Err(Error::EmptyWindow { floor: params.floor });
        }
        let x_hi = pts.last().unwrap().0;
        let start = pts.partition_point(|(x, _)| *x < x_hi / 10.0);
        let window = &pts[start..];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, r) in window {
            lo = lo.min(*r);
            hi = hi.max(*r);
        }
        let monotone = window.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-9));
        let last = window.last().unwrap().1;
        let first = window.first().unwrap().1;
        let diverging =
            monotone && window.len() >= 2 && (last >= params.ceiling || last >= params.growth_factor * first);
        Ok(RatioCurve {
            window: (start, pts.len()),
            points: pts,
            window_liminf: lo,
            window_limsup: hi,
            diverging,
        })
    }

    /// Pointwise ratio of two tails on a shared grid.
    pub fn from_grids(numer: &TailGrid, denom: &TailGrid, params: &WindowParams) -> Result<RatioCurve> {
        if numer.spec() != denom.spec() {
            return Err(Error::GridMismatch);
        }
        let samples: Vec<(f64, f64, f64)> = numer
            .xs()
            .iter()
            .zip(numer.vals().iter().zip(denom.vals()))
            .map(|(x, (n, d))| (*x, *n, *d))
            .collect();
        RatioCurve::from_samples(&samples, params)
    }

    /// Whether the windowed values are monotone (either direction) within
    /// relative slack; separates trending curves from oscillating ones.
    pub fn window_is_monotone(&self) -> bool {
        let w = &self.points[self.window.0..self.window.1];
        let nondecr = w.windows(2).all(|p| p[1].1 >= p[0].1 * (1.0 - 1e-9));
        let nonincr = w.windows(2).all(|p| p[1].1 <= p[0].1 * (1.0 + 1e-9));
        nondecr || nonincr
    }

    /// Value averaged over the top `k` admissible points; the stable
    /// one-sided surrogate for the limit at x → ∞.
    pub fn top_value(&self, k: usize) -> f64 {
        let n = self.points.len();
        let k = k.min(n).max(1);
        self.points[n - k..].iter().map(|(_, r)| r).sum::<f64>() / k as f64
    }

    /// Largest admissible x.
    pub fn x_top(&self) -> f64 {
        self.points.last().map(|(x, _)| *x).unwrap_or(0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,ratio\n");
        for (x, r) in &self.points {
            s.push_str(&format!("{x},{r}\n"));
        }
        s
    }
}

/// Outcome of a weak tail-equivalence probe: both ratio bounds positive and
/// finite, no divergence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakEquiv {
    pub liminf: f64,
    pub limsup: f64,
    pub equivalent: bool,
    pub diverging: bool,
}

/// Weak asymptotic equivalence of two tails on a shared grid, from the
/// windowed bounds of the ratio a/b.
pub fn weak_equiv(a: &TailGrid, b: &TailGrid, params: &WindowParams) -> Result<WeakEquiv> {
    let curve = RatioCurve::from_grids(a, b, params)?;
    let equivalent = !curve.diverging
        && curve.window_liminf > 1.0 / params.ceiling.max(2.0)
        && curve.window_limsup < params.ceiling.max(2.0);
    Ok(WeakEquiv {
        liminf: curve.window_liminf,
        limsup: curve.window_limsup,
        equivalent,
        diverging: curve.diverging,
    })
}

/// Result of the O-subexponentiality constant estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CfValue {
    Finite(f64),
    Diverging,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CfEstimate {
    pub curve: RatioCurve,
    pub value: CfValue,
}

impl CfEstimate {
    pub fn finite(&self) -> Option<f64> {
        match self.value {
            CfValue::Finite(v) => Some(v),
            CfValue::Diverging => None,
        }
    }
}

/// Estimate c_F = limsup F̄²*(x)/F̄(x).
///
/// The two-fold tail comes from the grid convolution. Curve samples are the
/// grid points plus, for atomic laws, points just above and below every atom
/// of the law and of the two-fold law — the ratio spikes live immediately
/// above atoms and a geometric grid misses them. For smoothly converging
/// curves the window trend `r(x) ≈ c + b·ln(x)/x` is extrapolated to get the
/// limit (the finite-x ratio of light one-big-jump laws converges too slowly
/// to read off directly); oscillating curves report the window limsup.
pub fn estimate_cf(dist: &Dist, spec: &GridSpec) -> Result<CfEstimate> {
    let tg = discretize(dist, spec)?;
    let two = convolve_tail(&tg, &tg)?;
    let params = WindowParams::quadrature();

    let mut xs: Vec<f64> = tg.xs().to_vec();
    let x_end = tg.x_end();
    for &(loc, _) in tg.atoms().iter().chain(two.atoms()) {
        if loc > 0.0 && loc < x_end {
            xs.push(loc * (1.0 - 1e-9));
            xs.push(loc * (1.0 + 1e-9));
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let samples: Vec<(f64, f64, f64)> = xs
        .iter()
        .map(|&x| (x, two.eval(x), tg.eval(x)))
        .collect();
    let curve = RatioCurve::from_samples(&samples, &params)?;

    if curve.diverging {
        return Ok(CfEstimate {
            curve,
            value: CfValue::Diverging,
        });
    }
    let spread = (curve.window_limsup - curve.window_liminf) / curve.window_liminf.max(1e-300);
    let value = if spread > 0.25 {
        // oscillatory: the window limsup is the honest estimate
        curve.window_limsup
    } else {
        extrapolate_window_limit(&curve).unwrap_or(curve.window_limsup)
    };
    Ok(CfEstimate {
        curve,
        value: CfValue::Finite(value.max(1.0)),
    })
}

/// Least-squares fit of r(x) = c + b·ln(x)/x over the top half of the
/// window; returns c. None when too few points or the fit runs away from
/// the observed window (then the caller falls back to the window limsup).
fn extrapolate_window_limit(curve: &RatioCurve) -> Option<f64> {
    let (start, end) = curve.window;
    let pts = &curve.points[start..end];
    let x_hi = pts.last()?.0;
    let fit_pts: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(x, _)| *x >= 0.5 * x_hi)
        .map(|(x, r)| (x.ln() / x, *r))
        .collect();
    if fit_pts.len() < 8 {
        return None;
    }
    let n = fit_pts.len() as f64;
    let sg: f64 = fit_pts.iter().map(|(g, _)| g).sum();
    let sr: f64 = fit_pts.iter().map(|(_, r)| r).sum();
    let sgg: f64 = fit_pts.iter().map(|(g, _)| g * g).sum();
    let sgr: f64 = fit_pts.iter().map(|(g, r)| g * r).sum();
    let det = n * sgg - sg * sg;
    if det.abs() < 1e-300 {
        return None;
    }
    let b = (n * sgr - sg * sr) / det;
    let c = (sr - b * sg) / n;
    // sanity: the limit must not run away from the window
    if c > 1.5 * curve.window_limsup || c < 0.5 * curve.window_liminf {
        return None;
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_ratio_is_one() {
        let g = discretize(&Dist::pareto(1.0, 1.0).unwrap(), &GridSpec::new(100.0)).unwrap();
        let c = RatioCurve::from_grids(&g, &g, &WindowParams::default()).unwrap();
        assert_eq!(c.window_liminf, 1.0);
        assert_eq!(c.window_limsup, 1.0);
        assert!(!c.diverging);
    }

    #[test]
    fn exp_twofold_ratio_is_one_plus_x_and_diverges() {
        let e = discretize(&Dist::exponential(1.0).unwrap(), &GridSpec::new(60.0)).unwrap();
        let two = convolve_tail(&e, &e).unwrap();
        let c = RatioCurve::from_grids(&two, &e, &WindowParams::default()).unwrap();
        for (x, r) in &c.points {
            if *x > 0.0 {
                assert!(
                    (r - (1.0 + x)).abs() / (1.0 + x) < 0.01,
                    "x={x} r={r} want {}",
                    1.0 + x
                );
            }
        }
        assert!(c.diverging);
    }

    #[test]
    fn pareto_twofold_window_near_two() {
        let p = discretize(&Dist::pareto(1.0, 1.0).unwrap(), &GridSpec::new(1e4)).unwrap();
        let two = convolve_tail(&p, &p).unwrap();
        let c = RatioCurve::from_grids(&two, &p, &WindowParams::default()).unwrap();
        assert!(c.window_liminf >= 1.9 && c.window_limsup <= 2.1, "{c:?}");
        assert!(!c.diverging);
    }

    #[test]
    fn empty_window_is_reported() {
        let spec = GridSpec::new(10.0);
        let zero = TailGrid::new(spec, vec![0.0; spec.points().len()], vec![]).unwrap();
        let one = discretize(&Dist::exponential(1.0).unwrap(), &spec).unwrap();
        assert!(matches!(
            RatioCurve::from_grids(&one, &zero, &WindowParams::default()),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn weak_equiv_pareto_vs_peterpaul() {
        let spec = GridSpec::new(1e4);
        let pp = discretize(&Dist::PeterPaul, &spec).unwrap();
        let pr = discretize(&Dist::pareto(1.0, 1.0).unwrap(), &spec).unwrap();
        let we = weak_equiv(&pp, &pr, &WindowParams::default()).unwrap();
        assert!(we.liminf >= 0.95, "{we:?}");
        assert!(we.limsup <= 2.05, "{we:?}");
        assert!(we.equivalent);

        let ex = discretize(&Dist::exponential(1.0).unwrap(), &spec).unwrap();
        let we = weak_equiv(&pr, &ex, &WindowParams::default()).unwrap();
        assert!(we.diverging);
        assert!(!we.equivalent);
    }

    #[test]
    fn cf_estimates() {
        // Pareto(1,1): limit is 2
        let cf = estimate_cf(&Dist::pareto(1.0, 1.0).unwrap(), &GridSpec::new(1e4)).unwrap();
        let v = cf.finite().unwrap();
        assert!((v - 2.0).abs() <= 0.1, "cf = {v}");
        // Exponential: diverging
        let cf = estimate_cf(&Dist::exponential(1.0).unwrap(), &GridSpec::new(60.0)).unwrap();
        assert!(matches!(cf.value, CfValue::Diverging));
    }
}
