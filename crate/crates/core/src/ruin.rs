//! Sparre Andersen / Cramér-Lundberg risk models.
//!
//! Claims X_i arrive after waiting times W_i while premium accrues at rate
//! c; ruin of the initial capital u is equivalent to the random walk of
//! increments X_k − c·W_k exceeding u in supremum. The module provides the
//! drift, the increment tail, the tail-integrated distribution, ladder-height
//! simulation, the compound-geometric supremum tail (which *is* the ruin
//! function), direct ruin Monte Carlo, and the tail-equivalence report that
//! cross-checks all of them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{grid_law_verdicts, ClassifyConfig, GridLawVerdicts};
use crate::compound::{compound_tail, default_tol, CompoundTail, Counter};
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::grid::{discretize, GridSpec, TailGrid};
use crate::ratio::{weak_equiv, RatioCurve, WeakEquiv, WindowParams};
use crate::rng::{stream, tags};

/// Claim law, interarrival law and premium rate. JSON form:
/// `{"claim":{...},"interarrival":{...},"premium_rate":4.0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskModel {
    pub claim: Dist,
    pub interarrival: Dist,
    pub premium_rate: f64,
}

impl RiskModel {
    pub fn validate(&self) -> Result<()> {
        self.claim.validate()?;
        self.interarrival.validate()?;
        if self.premium_rate <= 0.0 {
            return Err(Error::InvalidParameter("premium rate must be positive".into()));
        }
        if self.claim.mean().is_none() {
            return Err(Error::InvalidParameter("claim law needs a finite mean".into()));
        }
        if self.interarrival.mean().is_none() {
            return Err(Error::InvalidParameter("interarrival law needs a finite mean".into()));
        }
        Ok(())
    }

    /// One increment X − c·W.
    pub fn sample_increment<R: rand::Rng>(&self, rng: &mut R) -> f64 {
        self.claim.sample(rng) - self.premium_rate * self.interarrival.sample(rng)
    }
}

/// Drift a = E[X] − c·E[W]; errors out when a >= 0 (ruin certain).
pub fn net_profit(model: &RiskModel) -> Result<f64> {
    model.validate()?;
    let a = model.claim.mean().unwrap() - model.premium_rate * model.interarrival.mean().unwrap();
    if a >= 0.0 {
        return Err(Error::NonNegativeDrift { a });
    }
    Ok(a)
}

/// Tail of the increment X − c·W on x >= 0:
/// P(X − cW > x) = ∫ F̄_X(x + c·w) dF_W(w).
pub fn increment_tail(model: &RiskModel, spec: &GridSpec) -> Result<TailGrid> {
    model.validate()?;
    // discretize W out to where its tail is numerically spent
    let mut w_max = 64.0;
    while model.interarrival.tail(w_max) > 1e-16 && w_max < 1e9 {
        w_max *= 2.0;
    }
    let w_grid = discretize(&model.interarrival, &GridSpec::new(w_max))?;
    let (mids, masses) = w_grid.quad_cells();
    let w_beyond = *w_grid.vals().last().unwrap();
    let c = model.premium_rate;
    let xs = spec.points();
    let vals: Vec<f64> = xs
        .par_iter()
        .map(|&x| {
            let mut acc = 0.0;
            for (m, mass) in mids.iter().zip(&masses) {
                acc += mass * model.claim.tail(x + c * m);
            }
            for &(loc, mass) in w_grid.atoms() {
                acc += mass * model.claim.tail(x + c * loc);
            }
            acc + w_beyond * model.claim.tail(x + c * w_max)
        })
        .collect();
    TailGrid::new(*spec, vals, vec![])
}

/// Tail-integrated distribution of the increment law,
/// F̄_I(x) = min(1, ∫_x^∞ F̄_{X̄}(y) dy), on the requested grid.
///
/// The increment tail is integrated over a 5× longer internal grid so the
/// fitted extrapolation remainder carries little weight anywhere on the
/// requested window.
pub fn f_i(model: &RiskModel, spec: &GridSpec) -> Result<TailGrid> {
    let ext = GridSpec {
        x_max: spec.x_max * 5.0,
        ..*spec
    };
    let inc = increment_tail(model, &ext)?;
    let fi_ext = inc.tail_integrated()?;
    fi_ext.truncate_to(spec)
}

/// Ladder-height simulation output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderEstimate {
    /// P(τ₊ < ∞): fraction of paths that climbed above 0 before −B.
    pub p_hat: f64,
    pub p_se: f64,
    /// Empirical tail of the ladder height, conditional on laddering.
    pub ladder_tail: TailGrid,
    pub n_paths: u64,
    pub n_ladders: u64,
    /// Path truncation barrier.
    pub barrier: f64,
    /// Fraction of paths stopped at −B; each could still have laddered, so
    /// p_hat is a lower estimate with at most this weight of exposure.
    pub truncated_fraction: f64,
}

/// Default barrier 30·|a|·(1 + cv) with the increment coefficient of
/// variation estimated from a pilot sample (clamped to [0.5, 10]).
fn default_barrier(model: &RiskModel, a: f64, seed: u64) -> f64 {
    let mut rng = stream(seed, tags::cell(tags::LADDER, 0xB));
    let n = 10_000;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..n {
        let v = model.sample_increment(&mut rng);
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / n as f64;
    let var = (sum2 / n as f64 - mean * mean).max(0.0);
    let cv = (var.sqrt() / mean.abs().max(1e-9)).clamp(0.5, 10.0);
    30.0 * a.abs() * (1.0 + cv)
}

const SIM_CHUNKS: u64 = 64;

/// Walk the increment random walk per path until it climbs above 0 (ladder
/// height recorded) or falls below −B (counted truncated).
pub fn simulate_ladder(
    model: &RiskModel,
    spec: &GridSpec,
    seed: u64,
    n_paths: u64,
    barrier: Option<f64>,
) -> Result<LadderEstimate> {
    if n_paths < 1_000 {
        return Err(Error::TooFewPaths { min: 1_000, got: n_paths });
    }
    let a = net_profit(model)?;
    let b = barrier.unwrap_or_else(|| default_barrier(model, a, seed));

    let per_chunk = n_paths / SIM_CHUNKS;
    let chunks: Vec<(Vec<f64>, u64)> = (0..SIM_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream(seed, tags::cell(tags::LADDER, chunk + 1));
            let mut heights = Vec::new();
            let mut done = 0u64;
            let todo = if chunk == SIM_CHUNKS - 1 {
                n_paths - per_chunk * (SIM_CHUNKS - 1)
            } else {
                per_chunk
            };
            for _ in 0..todo {
                let mut s = 0.0;
                loop {
                    s += model.sample_increment(&mut rng);
                    if s > 0.0 {
                        heights.push(s);
                        break;
                    }
                    if s < -b {
                        done += 1;
                        break;
                    }
                }
            }
            (heights, done)
        })
        .collect();

    let mut heights: Vec<f64> = Vec::new();
    let mut truncated = 0u64;
    for (h, t) in chunks {
        heights.extend(h);
        truncated += t;
    }
    let n_ladders = heights.len() as u64;
    let p_hat = n_ladders as f64 / n_paths as f64;
    let p_se = (p_hat * (1.0 - p_hat) / n_paths as f64).sqrt();

    heights.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let xs = spec.points();
    let vals: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let above = heights.len() - heights.partition_point(|h| *h <= x);
            above as f64 / n_ladders.max(1) as f64
        })
        .collect();
    let ladder_tail = TailGrid::new(*spec, vals, vec![])?;

    Ok(LadderEstimate {
        p_hat,
        p_se,
        ladder_tail,
        n_paths,
        n_ladders,
        barrier: b,
        truncated_fraction: truncated as f64 / n_paths as f64,
    })
}

/// Supremum tail (= ruin function) from a ladder estimate: the compound
/// geometric Σ (1−p) p^n Ḡ^n* of the empirical ladder tail. Truncation uses
/// the count tail p^{K+1}, which certifies for any claim law.
pub fn supremum_tail_ladder(est: &LadderEstimate) -> Result<CompoundTail> {
    if !(est.p_hat < 1.0) {
        return Err(Error::InvalidParameter("ladder probability must be < 1".into()));
    }
    let counter = Counter::Geometric { p: est.p_hat };
    compound_tail(
        &est.ladder_tail,
        &counter,
        None,
        0.1,
        default_tol(&est.ladder_tail),
        512,
    )
}

/// Direct ruin Monte Carlo estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuinEstimate {
    pub u: f64,
    pub psi_hat: f64,
    pub std_err: f64,
    pub n_paths: u64,
    pub barrier: f64,
    pub truncated_fraction: f64,
}

/// Fraction of paths whose running walk exceeds u before dropping below −B.
pub fn simulate_ruin(
    model: &RiskModel,
    u: f64,
    spec_seed: u64,
    n_paths: u64,
    barrier: Option<f64>,
) -> Result<RuinEstimate> {
    let a = net_profit(model)?;
    let b = barrier.unwrap_or_else(|| default_barrier(model, a, spec_seed));
    let per_chunk = n_paths / SIM_CHUNKS;
    let counts: Vec<(u64, u64)> = (0..SIM_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream(spec_seed, tags::cell(tags::RUIN, chunk + 1));
            let todo = if chunk == SIM_CHUNKS - 1 {
                n_paths - per_chunk * (SIM_CHUNKS - 1)
            } else {
                per_chunk
            };
            let mut ruined = 0u64;
            let mut truncated = 0u64;
            for _ in 0..todo {
                let mut s = 0.0;
                loop {
                    s += model.sample_increment(&mut rng);
                    if s > u {
                        ruined += 1;
                        break;
                    }
                    if s < -b {
                        truncated += 1;
                        break;
                    }
                }
            }
            (ruined, truncated)
        })
        .collect();
    let ruined: u64 = counts.iter().map(|(r, _)| r).sum();
    let truncated: u64 = counts.iter().map(|(_, t)| t).sum();
    let psi_hat = ruined as f64 / n_paths as f64;
    Ok(RuinEstimate {
        u,
        psi_hat,
        std_err: (psi_hat * (1.0 - psi_hat) / n_paths as f64).sqrt(),
        n_paths,
        barrier: b,
        truncated_fraction: truncated as f64 / n_paths as f64,
    })
}

/// Tail-equivalence report across the three ruin quantities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PveReport {
    pub a: f64,
    /// Reference level −1/a for the supremum/integrated-tail ratio.
    pub neg_inv_a: f64,
    pub p_hat: f64,
    pub barrier: f64,
    pub truncated_fraction: f64,
    pub fm_over_fi: RatioCurve,
    pub fm_over_g: RatioCurve,
    pub g_over_fi: RatioCurve,
    pub weak_fm_fi: WeakEquiv,
    pub weak_fm_g: WeakEquiv,
    pub weak_g_fi: WeakEquiv,
    pub fi_verdicts: GridLawVerdicts,
    pub g_verdicts: GridLawVerdicts,
    pub fm_verdicts: GridLawVerdicts,
    /// p·(ĉ_G − 1) < 1: the geometric-sum certificate applied to the ladder law.
    pub condition_i_ok: bool,
    pub c_g_hat: f64,
}

pub struct PveArtifacts {
    pub report: PveReport,
    pub f_i: TailGrid,
    pub ladder: LadderEstimate,
    pub supremum: CompoundTail,
}

pub fn pve_check(
    model: &RiskModel,
    spec: &GridSpec,
    config: &ClassifyConfig,
    seed: u64,
    n_paths: u64,
) -> Result<PveArtifacts> {
    let a = net_profit(model)?;
    let fi = f_i(model, spec)?;
    let ladder = simulate_ladder(model, spec, seed, n_paths, None)?;
    let supremum = supremum_tail_ladder(&ladder)?;

    let params = WindowParams {
        floor: 1e-200,
        ..config.window
    };
    let fm_over_fi = RatioCurve::from_grids(&supremum.tail, &fi, &params)?;
    let fm_over_g = RatioCurve::from_grids(&supremum.tail, &ladder.ladder_tail, &params)?;
    let g_over_fi = RatioCurve::from_grids(&ladder.ladder_tail, &fi, &params)?;
    let weak_fm_fi = weak_equiv(&supremum.tail, &fi, &params)?;
    let weak_fm_g = weak_equiv(&supremum.tail, &ladder.ladder_tail, &params)?;
    let weak_g_fi = weak_equiv(&ladder.ladder_tail, &fi, &params)?;

    let fi_verdicts = grid_law_verdicts(&fi.with_zero_atom(), config)?;
    let g_verdicts = grid_law_verdicts(&ladder.ladder_tail, config)?;
    let fm_verdicts = grid_law_verdicts(&supremum.tail.with_zero_atom(), config)?;

    // condition (i): p (c_G + ε − 1) < 1 for some ε > 0; measured at ε → 0
    let g2 = crate::conv::convolve_tail(&ladder.ladder_tail, &ladder.ladder_tail)?;
    let c_g_curve = RatioCurve::from_grids(&g2, &ladder.ladder_tail, &params)?;
    let c_g_hat = c_g_curve.window_limsup;
    let condition_i_ok = !c_g_curve.diverging && ladder.p_hat * (c_g_hat - 1.0) < 1.0;

    let report = PveReport {
        a,
        neg_inv_a: -1.0 / a,
        p_hat: ladder.p_hat,
        barrier: ladder.barrier,
        truncated_fraction: ladder.truncated_fraction,
        fm_over_fi,
        fm_over_g,
        g_over_fi,
        weak_fm_fi,
        weak_fm_g,
        weak_g_fi,
        fi_verdicts,
        g_verdicts,
        fm_verdicts,
        condition_i_ok,
        c_g_hat,
    };
    Ok(PveArtifacts {
        report,
        f_i: fi,
        ladder,
        supremum,
    })
}

/// Classical Cramér-Lundberg helper: load ρ = λ μ_X / c, the known value of
/// p for Poisson arrivals.
pub fn poisson_load(model: &RiskModel) -> Option<f64> {
    let mu = model.claim.mean()?;
    let lambda = 1.0 / model.interarrival.mean()?;
    Some(lambda * mu / model.premium_rate)
}

/// Exact increment-tail evaluation for special cases used by tests: claim
/// Exp(β), interarrival Exp(λ): P(X − cW > x) = λ/(λ + cβ) · e^{−βx}.
pub fn exp_exp_increment_tail(beta: f64, lambda: f64, c: f64, x: f64) -> f64 {
    lambda / (lambda + c * beta) * (-beta * x.max(0.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classical() -> RiskModel {
        // Exp(1) claims, Poisson(1) arrivals, premium 2: ρ = 0.5
        RiskModel {
            claim: Dist::exponential(1.0).unwrap(),
            interarrival: Dist::exponential(1.0).unwrap(),
            premium_rate: 2.0,
        }
    }

    fn pareto_model() -> RiskModel {
        RiskModel {
            claim: Dist::pareto(2.0, 1.0).unwrap(),
            interarrival: Dist::exponential(1.0).unwrap(),
            premium_rate: 4.0,
        }
    }

    #[test]
    fn drift_closed_forms() {
        let m = RiskModel {
            claim: Dist::exponential(1.0).unwrap(),
            interarrival: Dist::exponential(2.0).unwrap(),
            premium_rate: 3.0,
        };
        assert!((net_profit(&m).unwrap() + 0.5).abs() < 1e-12);
        assert!((net_profit(&pareto_model()).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn nonnegative_drift_is_flagged() {
        let m = RiskModel {
            claim: Dist::exponential(1.0).unwrap(),
            interarrival: Dist::exponential(1.0).unwrap(),
            premium_rate: 0.5,
        };
        assert!(matches!(net_profit(&m), Err(Error::NonNegativeDrift { .. })));
    }

    #[test]
    fn increment_tail_dirac_interarrival_is_shift() {
        let m = RiskModel {
            claim: Dist::exponential(1.0).unwrap(),
            interarrival: Dist::Dirac { point: 0.5 },
            premium_rate: 2.0,
        };
        let g = increment_tail(&m, &GridSpec::new(20.0)).unwrap();
        for (x, v) in g.xs().iter().zip(g.vals()).step_by(29) {
            let want = (-(x + 1.0)).exp();
            assert!((v - want).abs() < 1e-12, "x={x} v={v} want={want}");
        }
    }

    #[test]
    fn increment_tail_exp_exp_closed_form() {
        let m = classical();
        let g = increment_tail(&m, &GridSpec::new(20.0)).unwrap();
        for (x, v) in g.xs().iter().zip(g.vals()).step_by(31) {
            let want = exp_exp_increment_tail(1.0, 1.0, 2.0, *x);
            assert!(
                (v - want).abs() / want < 2e-3,
                "x={x} v={v} want={want}"
            );
        }
    }

    #[test]
    fn f_i_degenerate_interarrival_is_exp() {
        // claims Exp(1), c·W ≡ 0: F̄_I(x) = e^{−x}
        let m = RiskModel {
            claim: Dist::exponential(1.0).unwrap(),
            interarrival: Dist::Dirac { point: 0.0 },
            premium_rate: 1.0,
        };
        let fi = f_i(&m, &GridSpec::new(30.0)).unwrap();
        for (x, v) in fi.xs().iter().zip(fi.vals()).step_by(23) {
            if *x < 25.0 {
                let want = (-x).exp();
                assert!((v - want).abs() / want < 0.01, "x={x} v={v}");
            }
        }
        assert!(fi.vals()[0] <= 1.0);
    }

    #[test]
    fn classical_ladder_matches_pollaczek_khinchine() {
        let m = classical();
        let est = simulate_ladder(&m, &GridSpec::new(40.0), 42, 200_000, None).unwrap();
        // p = ρ = 0.5
        assert!(
            (est.p_hat - 0.5).abs() <= 3.0 * est.p_se,
            "p_hat {} ± {}",
            est.p_hat,
            est.p_se
        );
        // ladder height of Exp(1) claims is Exp(1)
        assert!((est.ladder_tail.vals()[0] - 1.0).abs() < 1e-9);
        for x in [0.5, 1.0, 2.0, 4.0] {
            let got = est.ladder_tail.eval(x);
            let want = (-x).exp();
            let se = (want * (1.0 - want) / est.n_ladders as f64).sqrt();
            assert!(
                (got - want).abs() <= 4.0 * se + 2e-3,
                "x={x}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn classical_ruin_probability() {
        let m = classical();
        let u = 2.0;
        let want = 0.5 * (-1.0f64).exp(); // ρ e^{−(1−ρ)u}
        let est = simulate_ruin(&m, u, 7, 400_000, None).unwrap();
        assert!(
            (est.psi_hat - want).abs() <= 3.5 * est.std_err,
            "psi {} ± {} vs {want}",
            est.psi_hat,
            est.std_err
        );
        let ladder = simulate_ladder(&m, &GridSpec::new(40.0), 43, 400_000, None).unwrap();
        let sup = supremum_tail_ladder(&ladder).unwrap();
        let got = sup.tail.eval(u);
        assert!((got - want).abs() < 0.01, "ladder-route {got} vs {want}");
        // Ψ(0) = p_hat
        // within the certified series truncation tolerance
        assert!((sup.tail.vals()[0] - ladder.p_hat).abs() < 2e-8);
    }

    #[test]
    fn too_few_paths_is_refused() {
        let m = classical();
        assert!(matches!(
            simulate_ladder(&m, &GridSpec::new(10.0), 1, 10, None),
            Err(Error::TooFewPaths { .. })
        ));
    }
}
