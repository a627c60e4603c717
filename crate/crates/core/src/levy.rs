//! Finite-activity infinitely divisible laws on [0, ∞) as compound Poisson.
//!
//! A spec carries the normalized jump law ν₁ (the Lévy measure beyond 1,
//! normalized to a probability), the activity λ₁ = ν(1, ∞) and an optional
//! mean drift standing in for the truncated small jumps. The law itself is
//! then the compound Poisson μ̄(x) = Σ_k e^{−λ₁} λ₁^k/k! · ν̄₁^{k*}(x),
//! shifted by the small-jump mean; the module checks how its tail relates
//! to ν̄₁.

use serde::{Deserialize, Serialize};

use crate::classify::{grid_law_verdicts, ClassifyConfig, GridLawVerdicts};
use crate::compound::{compound_tail, Counter};
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::grid::{discretize, GridSpec, TailEval, TailGrid};
use crate::ratio::{weak_equiv, RatioCurve, WeakEquiv, WindowParams};
use crate::rng::{stream, tags};

fn default_small_jump() -> f64 {
    0.0
}

/// JSON form: `{"nu1":{...},"lambda1":1.0,"small_jump_mean":0.0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevySpec {
    /// Normalized Lévy measure restricted beyond 1.
    pub nu1: Dist,
    /// ν(1, ∞).
    pub lambda1: f64,
    /// Mean of the truncated small-jump part, applied as a deterministic
    /// shift of the compound grid.
    #[serde(default = "default_small_jump")]
    pub small_jump_mean: f64,
}

impl LevySpec {
    pub fn validate(&self) -> Result<()> {
        self.nu1.validate()?;
        if self.lambda1 <= 0.0 {
            return Err(Error::InvalidParameter("lambda1 must be positive".into()));
        }
        if self.small_jump_mean < 0.0 {
            return Err(Error::InvalidParameter("small-jump mean must be nonnegative".into()));
        }
        if self.nu1.tail(1.0) < 1.0 - 1e-9 {
            return Err(Error::InvalidParameter(
                "nu1 must be supported beyond 1 (tail(1) = 1 after normalization)".into(),
            ));
        }
        Ok(())
    }
}

/// Tail of the compound law with its truncation certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuTail {
    pub tail: TailGrid,
    pub truncation_index: usize,
    pub remainder_bound: f64,
}

/// μ̄ on the grid: Poisson-weighted convolution powers of ν₁, truncated at
/// the factorial remainder, then shifted by the small-jump mean.
pub fn mu_tail(spec: &LevySpec, grid: &GridSpec, tol: f64) -> Result<MuTail> {
    spec.validate()?;
    let nu = discretize(&spec.nu1, grid)?;
    let counter = Counter::Poisson { c: spec.lambda1 };
    let ct = compound_tail(&nu, &counter, None, 0.1, tol, 256)?;
    let tail = if spec.small_jump_mean > 0.0 {
        shift_grid(&ct.tail, spec.small_jump_mean)?
    } else {
        ct.tail
    };
    Ok(MuTail {
        tail,
        truncation_index: ct.truncation_index,
        remainder_bound: ct.remainder_bound,
    })
}

/// Resample a tail shifted right by m onto its own grid.
fn shift_grid(g: &TailGrid, m: f64) -> Result<TailGrid> {
    let ev = TailEval::new(g);
    let vals: Vec<f64> = g.xs().iter().map(|&x| ev.eval(x - m)).collect();
    let atoms = g
        .atoms()
        .iter()
        .map(|(l, mass)| (l + m, *mass))
        .filter(|(l, _)| *l <= g.x_end())
        .collect();
    TailGrid::new(*g.spec(), vals, atoms)
}

/// Seeded Monte Carlo of the compound Poisson tail at one point.
pub fn mu_mc(spec: &LevySpec, x: f64, paths: u64, seed: u64) -> (f64, f64) {
    let mut rng = stream(seed, tags::LEVY_MC);
    let counter = Counter::Poisson { c: spec.lambda1 };
    let mut hits = 0u64;
    for _ in 0..paths {
        let n = counter.sample(&mut rng);
        let mut s = spec.small_jump_mean;
        for _ in 0..n {
            s += spec.nu1.sample(&mut rng);
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

/// Tail-equivalence report between μ and ν₁.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevyReport {
    pub mu_verdicts: GridLawVerdicts,
    pub nu_verdicts: GridLawVerdicts,
    pub weak: WeakEquiv,
    /// μ̄(x) / (λ₁ ν̄₁(x)); → 1 for subexponential ν₁.
    pub strong_ratio: RatioCurve,
    pub strong_ratio_top: f64,
    pub truncation_index: usize,
}

pub fn levy_equiv_check(
    spec: &LevySpec,
    grid: &GridSpec,
    config: &ClassifyConfig,
) -> Result<LevyReport> {
    let nu = discretize(&spec.nu1, grid)?;
    let mu = mu_tail(spec, grid, 1e-10)?;
    let params = WindowParams {
        floor: config.quad_floor,
        ..config.window
    };
    let weak = weak_equiv(&mu.tail, &nu, &params)?;
    let lambda1 = spec.lambda1;
    let samples: Vec<(f64, f64, f64)> = nu
        .xs()
        .iter()
        .zip(mu.tail.vals().iter().zip(nu.vals()))
        .map(|(x, (m, n))| (*x, *m, lambda1 * n))
        .collect();
    let strong_ratio = RatioCurve::from_samples(&samples, &params)?;
    let strong_ratio_top = strong_ratio.top_value(5);

    let mu_verdicts = grid_law_verdicts(&mu.tail.with_zero_atom(), config)?;
    let nu_verdicts = grid_law_verdicts(&nu, config)?;

    Ok(LevyReport {
        mu_verdicts,
        nu_verdicts,
        weak,
        strong_ratio,
        strong_ratio_top,
        truncation_index: mu.truncation_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto_spec(lambda1: f64) -> LevySpec {
        LevySpec {
            nu1: Dist::pareto(2.0, 2.0).unwrap(),
            lambda1,
            small_jump_mean: 0.0,
        }
    }

    #[test]
    fn low_activity_first_order() {
        // λ₁ = 0.01: μ̄(x) ≈ λ₁ ν̄₁(x) at moderate x
        let spec = pareto_spec(0.01);
        let mu = mu_tail(&spec, &GridSpec::new(400.0), 1e-12).unwrap();
        let x = 100.0;
        let want = 0.01 * spec.nu1.tail(x);
        let got = mu.tail.eval(x);
        assert!((got - want).abs() / want < 0.02, "got {got}, want {want}");
    }

    #[test]
    fn at_least_one_jump_probability() {
        let spec = pareto_spec(1.0);
        let mu = mu_tail(&spec, &GridSpec::new(400.0), 1e-12).unwrap();
        // μ̄(0+) = P(N >= 1) = 1 − e^{−λ₁}; exact at any x below the support of ν₁
        let want = 1.0 - (-1.0f64).exp();
        let got = mu.tail.eval(0.5);
        assert!((got - want).abs() < 1e-9, "got {got}, want {want}");
    }

    #[test]
    fn series_matches_mc_oracle() {
        let spec = pareto_spec(1.0);
        let mu = mu_tail(&spec, &GridSpec::new(400.0), 1e-12).unwrap();
        let x = 50.0;
        let (mc, se) = mu_mc(&spec, x, 10_000_000, 21);
        let got = mu.tail.eval(x);
        assert!(
            (got - mc).abs() <= 3.0 * se + 1e-5,
            "series {got} vs mc {mc} ± {se}"
        );
    }

    #[test]
    fn monotone_in_activity() {
        let g = GridSpec::new(200.0);
        let lo = mu_tail(&pareto_spec(0.5), &g, 1e-12).unwrap();
        let hi = mu_tail(&pareto_spec(1.5), &g, 1e-12).unwrap();
        for (a, b) in lo.tail.vals().iter().zip(hi.tail.vals()) {
            assert!(a <= &(b + 1e-12));
        }
    }
}
