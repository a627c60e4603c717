//! Random sums S_N = X_1 + ... + X_N via the weighted convolution series.
//!
//! The compound tail is Σ_k p_k F̄^{k*}(x), truncated at the first index K
//! where a certified remainder bound drops below tolerance. Two bounds are
//! available and the smaller wins:
//!
//! * geometric: c · Σ_{k>K} p_k (c_F + ε − 1)^k with the constant c fitted
//!   on the first three convolution powers and doubled (the bound holds for
//!   O-subexponential claims with finite c_F);
//! * trivial: P(N > K), since every convolution tail is at most 1.
//!
//! When neither bound meets the tolerance by the index cap, the error
//! carries the partial sum so probes can still use it (flagged uncertified).

use serde::{Deserialize, Serialize};

use crate::conv::convolve_tail;
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, TailGrid};
use crate::ratio::{weak_equiv, RatioCurve, WeakEquiv, WindowParams};
use crate::rng::{stream, tags};

/// Claim-count law. JSON form uses a `kind` tag, e.g.
/// `{"kind":"geometric","p":0.5}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Counter {
    /// p_n = c^n e^{-c} / n!
    #[serde(rename = "poisson")]
    Poisson { c: f64 },
    /// p_n = (1-p) p^n, n >= 0
    #[serde(rename = "geometric")]
    Geometric { p: f64 },
    /// p_n = C(n+r-1, n) p^n (1-p)^r
    #[serde(rename = "negative_binomial")]
    NegativeBinomial { r: f64, p: f64 },
    #[serde(rename = "deterministic")]
    Deterministic { n: u32 },
    /// weights[k] = P(N = k), k from 0
    #[serde(rename = "explicit")]
    Explicit { weights: Vec<f64> },
}

impl Counter {
    pub fn validate(&self) -> Result<()> {
        match self {
            Counter::Poisson { c } if *c <= 0.0 => {
                Err(Error::InvalidParameter("poisson counter needs c > 0".into()))
            }
            Counter::Geometric { p } | Counter::NegativeBinomial { p, .. }
                if !(*p > 0.0 && *p < 1.0) =>
            {
                Err(Error::InvalidParameter("counter needs p in (0,1)".into()))
            }
            Counter::NegativeBinomial { r, .. } if *r <= 0.0 => {
                Err(Error::InvalidParameter("negative binomial needs r > 0".into()))
            }
            Counter::Deterministic { n } if *n == 0 => {
                Err(Error::InvalidParameter("deterministic counter needs n >= 1".into()))
            }
            Counter::Explicit { weights } => {
                if weights.iter().any(|w| *w < 0.0) {
                    return Err(Error::InvalidParameter("explicit weights must be nonnegative".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "explicit weights must sum to 1 within 1e-12, got {total}"
                    )));
                }
                if weights.first().copied().unwrap_or(0.0) >= 1.0 {
                    return Err(Error::InvalidParameter("p_0 must be < 1".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// P(N = k).
    pub fn weight(&self, k: usize) -> f64 {
        match self {
            Counter::Poisson { c } => {
                let mut w = (-c).exp();
                for i in 1..=k {
                    w *= c / i as f64;
                }
                w
            }
            Counter::Geometric { p } => (1.0 - p) * p.powi(k as i32),
            Counter::NegativeBinomial { r, p } => {
                let mut w = (1.0 - p).powf(*r);
                for i in 1..=k {
                    w *= p * (i as f64 + r - 1.0) / i as f64;
                }
                w
            }
            Counter::Deterministic { n } => {
                if k == *n as usize {
                    1.0
                } else {
                    0.0
                }
            }
            Counter::Explicit { weights } => weights.get(k).copied().unwrap_or(0.0),
        }
    }

    /// P(N > k).
    pub fn tail_mass(&self, k: usize) -> f64 {
        match self {
            Counter::Geometric { p } => p.powi(k as i32 + 1),
            Counter::Deterministic { n } => {
                if (*n as usize) > k {
                    1.0
                } else {
                    0.0
                }
            }
            Counter::Explicit { weights } => weights.iter().skip(k + 1).sum(),
            _ => {
                // complement of the running sum; flooring at 0 absorbs rounding
                let mut acc = 0.0;
                for i in 0..=k {
                    acc += self.weight(i);
                }
                (1.0 - acc).max(0.0)
            }
        }
    }

    /// Σ_{j>k0} p_j z^j, or None when the series diverges.
    pub fn weighted_tail_sum(&self, k0: usize, z: f64) -> Option<f64> {
        match self {
            Counter::Geometric { p } => {
                let q = p * z;
                if q >= 1.0 {
                    return None;
                }
                Some((1.0 - p) * q.powi(k0 as i32 + 1) / (1.0 - q))
            }
            Counter::Deterministic { n } => Some(if (*n as usize) > k0 {
                z.powi(*n as i32)
            } else {
                0.0
            }),
            Counter::NegativeBinomial { p, .. } if p * z >= 1.0 => None,
            _ => {
                // term-by-term until negligible; Poisson and negative binomial
                // terms eventually decay geometrically (factorial/pz-ratio)
                let mut acc = 0.0;
                let mut k = k0 + 1;
                let mut stale = 0;
                loop {
                    let t = self.weight(k) * z.powi(k as i32);
                    acc += t;
                    if t <= acc.max(1e-300) * 1e-15 {
                        stale += 1;
                        if stale > 3 {
                            return Some(acc);
                        }
                    } else {
                        stale = 0;
                    }
                    k += 1;
                    if k > k0 + 100_000 {
                        return None;
                    }
                }
            }
        }
    }

    /// One seeded draw of N.
    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> u64 {
        match self {
            Counter::Deterministic { n } => *n as u64,
            Counter::Geometric { p } => {
                // count of successes before the first failure
                let mut k = 0;
                while rng.gen::<f64>() < *p {
                    k += 1;
                }
                k
            }
            _ => {
                let u: f64 = rng.gen::<f64>();
                let mut acc = 0.0;
                for k in 0..100_000 {
                    acc += self.weight(k);
                    if u < acc {
                        return k as u64;
                    }
                }
                100_000
            }
        }
    }
}

/// Compound tail with its truncation certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompoundTail {
    pub tail: TailGrid,
    pub truncation_index: usize,
    /// Certified upper bound on the dropped remainder (uniform in x).
    pub remainder_bound: f64,
    /// Fitted Kesten constant, when a finite c_F was supplied.
    pub kesten_constant: Option<f64>,
    pub certified: bool,
}

/// Default series tolerance: 1e-8 of the claim tail at 0.
pub fn default_tol(claim: &TailGrid) -> f64 {
    1e-8 * claim.vals()[0].max(f64::MIN_POSITIVE)
}

/// Σ_k p_k F̄^{k*} with certified truncation.
///
/// `c_f` is the claim's O-subexponentiality constant when known; `eps` the
/// Kesten slack. The index cap bounds runtime; hitting it returns
/// [`Error::TruncationFailure`] carrying the partial sum.
pub fn compound_tail(
    claim: &TailGrid,
    counter: &Counter,
    c_f: Option<f64>,
    eps: f64,
    tol: f64,
    cap: usize,
) -> Result<CompoundTail> {
    counter.validate()?;
    let n = claim.len();
    let mut acc = vec![0.0f64; n];
    // k = 0 term is the Dirac at 0: zero tail on x >= 0.
    let mut kfold = claim.clone();
    let z = c_f.map(|c| c + eps - 1.0);

    // Kesten constant: fitted on the first three powers, then doubled.
    let kesten_c = match z {
        Some(z) if z > 0.0 => {
            let two = convolve_tail(claim, claim)?;
            let three = convolve_tail(&two, claim)?;
            let mut c_hat: f64 = 0.0;
            for (i, base) in claim.vals().iter().enumerate() {
                if *base > 1e-300 {
                    c_hat = c_hat
                        .max(claim.vals()[i] / base / z)
                        .max(two.vals()[i] / base / (z * z))
                        .max(three.vals()[i] / base / (z * z * z));
                }
            }
            Some(2.0 * c_hat)
        }
        _ => None,
    };

    let mut k = 1usize;
    loop {
        let w = counter.weight(k);
        if w > 0.0 {
            for (a, v) in acc.iter_mut().zip(kfold.vals()) {
                *a += w * v;
            }
        }
        let trivial = counter.tail_mass(k);
        let kesten = match (kesten_c, z) {
            (Some(c), Some(z)) => counter.weighted_tail_sum(k, z).map(|s| c * s),
            _ => None,
        };
        let bound = match kesten {
            Some(b) => b.min(trivial),
            None => trivial,
        };
        if bound < tol {
            let tail = TailGrid::new(*claim.spec(), acc, vec![])?;
            return Ok(CompoundTail {
                tail,
                truncation_index: k,
                remainder_bound: bound,
                kesten_constant: kesten_c,
                certified: true,
            });
        }
        if k >= cap {
            return Err(Error::TruncationFailure {
                remainder: bound,
                tol,
                cap,
                partial: acc,
            });
        }
        kfold = convolve_tail(&kfold, claim)?;
        k += 1;
    }
}

/// Compound tail for probes that accept an uncertified partial sum at the cap.
pub fn compound_tail_lenient(
    claim: &TailGrid,
    counter: &Counter,
    c_f: Option<f64>,
    eps: f64,
    tol: f64,
    cap: usize,
) -> Result<CompoundTail> {
    match compound_tail(claim, counter, c_f, eps, tol, cap) {
        Ok(ct) => Ok(ct),
        Err(Error::TruncationFailure { remainder, partial, .. }) => Ok(CompoundTail {
            tail: TailGrid::new(*claim.spec(), partial, vec![])?,
            truncation_index: cap,
            remainder_bound: remainder,
            kesten_constant: None,
            certified: false,
        }),
        Err(e) => Err(e),
    }
}

/// Seeded Monte Carlo estimate of P(S_N > x); the independent oracle for
/// the series path.
pub fn compound_mc(
    claim: &Dist,
    counter: &Counter,
    x: f64,
    paths: u64,
    seed: u64,
) -> (f64, f64) {
    let mut rng = stream(seed, tags::COMPOUND_MC);
    let mut hits = 0u64;
    for _ in 0..paths {
        let n = counter.sample(&mut rng);
        let mut s = 0.0;
        for _ in 0..n {
            s += claim.sample(&mut rng);
            if s > x {
                break;
            }
        }
        if s > x {
            hits += 1;
        }
    }
    let p = hits as f64 / paths as f64;
    (p, (p * (1.0 - p) / paths as f64).sqrt())
}

/// Convergence check of Σ p_k (c_F + ε − 1)^k.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesCondition {
    pub finite: bool,
    /// Series value when finite.
    pub value: Option<f64>,
}

/// Evaluates Σ_{k>=1} p_k (c_F + ε − 1)^k in closed form for the catalog
/// counters (ratio test), numerically otherwise.
pub fn series_condition(counter: &Counter, c_f: f64, eps: f64) -> SeriesCondition {
    let z = c_f + eps - 1.0;
    match counter.weighted_tail_sum(0, z) {
        Some(v) => SeriesCondition {
            finite: true,
            value: Some(v),
        },
        None => SeriesCondition {
            finite: false,
            value: None,
        },
    }
}

/// Evidence from compounding a light one-big-jump claim with a heavy count:
/// the ratio compound/claim diverges once the count tail outweighs the
/// claim's Kesten geometry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleProbe {
    pub p: f64,
    pub curve: RatioCurve,
    pub certified: bool,
    pub truncation_index: usize,
}

impl CounterexampleProbe {
    /// Ratio at the grid point nearest x.
    pub fn ratio_at(&self, x: f64) -> Option<f64> {
        self.curve
            .points
            .iter()
            .min_by(|(a, _), (b, _)| {
                (a - x).abs().partial_cmp(&(b - x).abs()).unwrap()
            })
            .map(|(_, r)| *r)
    }
}

pub fn counterexample_probe(
    claim: &TailGrid,
    p: f64,
    c_f: Option<f64>,
    eps: f64,
    cap: usize,
) -> Result<CounterexampleProbe> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter("geometric parameter must lie in (0,1)".into()));
    }
    let counter = Counter::Geometric { p };
    let ct = compound_tail_lenient(claim, &counter, c_f, eps, default_tol(claim), cap)?;
    let params = WindowParams {
        floor: 1e-250,
        ceiling: f64::INFINITY, // the ratio may legitimately explode; keep all points
        ..WindowParams::default()
    };
    let curve = RatioCurve::from_grids(&ct.tail, claim, &params)?;
    Ok(CounterexampleProbe {
        p,
        curve,
        certified: ct.certified,
        truncation_index: ct.truncation_index,
    })
}

/// Transfer probe between a claim law and its random sum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootProbe {
    /// Whether the count law satisfies the convolution-tail growth condition
    /// (holds for Poisson, geometric and negative binomial counters).
    pub counter_condition: bool,
    pub weak: WeakEquiv,
    /// Smallest m <= 8 with F̄^{m*} weakly equivalent to the compound tail.
    pub equivalent_power: Option<u32>,
}

pub fn root_probe(
    claim: &TailGrid,
    compound: &CompoundTail,
    counter: &Counter,
    params: &WindowParams,
) -> Result<RootProbe> {
    let counter_condition = matches!(
        counter,
        Counter::Poisson { .. } | Counter::Geometric { .. } | Counter::NegativeBinomial { .. }
    );
    let weak = weak_equiv(claim, &compound.tail, params)?;
    let mut equivalent_power = None;
    let mut power = claim.clone();
    for m in 1..=8u32 {
        if m > 1 {
            power = convolve_tail(&power, claim)?;
        }
        if let Ok(we) = weak_equiv(&power, &compound.tail, params) {
            if we.equivalent {
                equivalent_power = Some(m);
                break;
            }
        }
    }
    Ok(RootProbe {
        counter_condition,
        weak,
        equivalent_power,
    })
}

/// Grid helper for [`crate::dist::Dist`] claims.
pub fn compound_of_dist(
    claim: &Dist,
    counter: &Counter,
    spec: &GridSpec,
    c_f: Option<f64>,
    eps: f64,
    cap: usize,
) -> Result<(TailGrid, CompoundTail)> {
    let tg = crate::grid::discretize(claim, spec)?;
    let tol = default_tol(&tg);
    let ct = compound_tail(&tg, counter, c_f, eps, tol, cap)?;
    Ok((tg, ct))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::discretize;

    #[test]
    fn geometric_of_exponential_closed_form() {
        // classical: compound tail is p e^{-(1-p)x}
        let e = discretize(&Dist::exponential(1.0).unwrap(), &GridSpec::new(40.0)).unwrap();
        let counter = Counter::Geometric { p: 0.5 };
        let ct = compound_tail(&e, &counter, None, 0.1, default_tol(&e), 512).unwrap();
        for x in [1.0, 2.0, 4.0] {
            let want = 0.5 * (-(0.5) * x as f64).exp();
            let got = ct.tail.eval(x);
            assert!(
                (got - want).abs() / want < 0.01,
                "x={x}: got {got}, want {want}"
            );
        }
        assert!(ct.certified);
    }

    #[test]
    fn deterministic_one_is_claim() {
        let e = discretize(&Dist::exponential(1.0).unwrap(), &GridSpec::new(30.0)).unwrap();
        let ct = compound_tail(&e, &Counter::Deterministic { n: 1 }, None, 0.1, 1e-10, 512).unwrap();
        for (a, b) in ct.tail.vals().iter().zip(e.vals()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(ct.truncation_index, 1);
    }

    #[test]
    fn deterministic_matches_nfold() {
        let p = discretize(&Dist::pareto(2.0, 1.0).unwrap(), &GridSpec::new(200.0)).unwrap();
        let ct = compound_tail(&p, &Counter::Deterministic { n: 3 }, Some(2.0), 0.1, 1e-10, 512)
            .unwrap();
        let three = crate::conv::nfold_tail(&p, 3).unwrap();
        for (a, b) in ct.tail.vals().iter().zip(three.vals()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn series_condition_closed_forms() {
        // geometric: finite iff p (c_F + ε − 1) < 1
        let c = series_condition(&Counter::Geometric { p: 0.5 }, 2.0, 0.01);
        assert!(c.finite);
        let c = series_condition(&Counter::Geometric { p: 0.995 }, 2.0, 0.01);
        assert!(!c.finite);
        // Poisson: always finite (factorial decay)
        let c = series_condition(&Counter::Poisson { c: 1.0 }, 50.0, 0.1);
        assert!(c.finite);
        // geometric(0.99) with the light one-big-jump claim's constant: diverges
        let c = series_condition(&Counter::Geometric { p: 0.99 }, 5.055, 0.1);
        assert!(!c.finite);
    }

    #[test]
    fn poisson_compound_matches_mc_oracle() {
        let claim = Dist::pareto(2.0, 1.0).unwrap();
        let spec = GridSpec::new(100.0);
        let (_, ct) =
            compound_of_dist(&claim, &Counter::Poisson { c: 1.0 }, &spec, Some(2.05), 0.1, 512)
                .unwrap();
        let x = 10.0;
        let (mc, se) = compound_mc(&claim, &Counter::Poisson { c: 1.0 }, x, 10_000_000, 99);
        let got = ct.tail.eval(x);
        assert!(
            (got - mc).abs() <= 3.0 * se + 1e-4,
            "series {got} vs mc {mc} ± {se}"
        );
    }

    #[test]
    fn remainder_bound_is_certified() {
        // doubling the cap must not move any grid value by more than tol
        let e = discretize(&Dist::exponential(1.0).unwrap(), &GridSpec::new(30.0)).unwrap();
        let tol = default_tol(&e);
        let counter = Counter::Geometric { p: 0.5 };
        let short = compound_tail(&e, &counter, None, 0.1, tol, 512).unwrap();
        let long = compound_tail(&e, &counter, None, 0.1, tol * 1e-4, 512).unwrap();
        for (a, b) in short.tail.vals().iter().zip(long.tail.vals()) {
            assert!((a - b).abs() <= tol);
        }
    }

    #[test]
    fn single_term_lower_bound() {
        let p = discretize(&Dist::pareto(2.0, 1.0).unwrap(), &GridSpec::new(100.0)).unwrap();
        let counter = Counter::Geometric { p: 0.3 };
        let ct = compound_tail(&p, &counter, Some(2.05), 0.1, default_tol(&p), 512).unwrap();
        let p1 = counter.weight(1);
        for (c, v) in ct.tail.vals().iter().zip(p.vals()) {
            assert!(*c >= p1 * v - 1e-12);
        }
    }
}
