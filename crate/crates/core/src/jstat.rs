//! Estimators for the one-big-jump conditional statistics.
//!
//! The working quantity is the defect
//!     D(K, x) = P(X_{2,n} > K | S_n > x)
//! (second-largest summand escapes level K given a large sum) and its
//! max-form companion
//!     D₃(K, x) = P(X_{1,n} <= x − K | S_n > x).
//! Membership-style evidence corresponds to D → 0 for large K at the far
//! end of the x window.
//!
//! For n = 2 both statistics are deterministic Stieltjes quadratures over a
//! tail grid. For n >= 3 they are estimated by seeded Monte Carlo: plain
//! rejection on {S_n > x}, or a stratified estimator that conditions on the
//! number of coordinates beyond x − K (one forced big jump rescues cells far
//! beyond rejection reach; the zero-big-jump stratum is exactly empty when
//! n·(x−K) <= x and is sampled conditionally otherwise).

use serde::{Deserialize, Serialize};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::grid::{TailEval, TailGrid};
use crate::rng::{stream, tags};

/// How a statistic was computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JMethod {
    /// Deterministic grid quadrature (n = 2 only).
    Quadrature,
    /// Plain rejection Monte Carlo with a proposal budget.
    Rejection { budget: u64 },
    /// Stratified one-big-jump importance sampling.
    BigJump { draws_per_stratum: u64 },
}

impl Default for JMethod {
    fn default() -> Self {
        JMethod::Rejection { budget: 10_000_000 }
    }
}

/// Which equivalent form a statistic instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JForm {
    /// D(K,x) = P(X_{2,n} > K | S_n > x).
    SecondLargest,
    /// D₃(K,x) = P(X_{1,n} <= x−K | S_n > x).
    MaxDefect,
}

/// One estimated conditional statistic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JPoint {
    pub value: f64,
    /// Zero for the quadrature path.
    pub std_err: f64,
    pub method: JMethod,
    pub form: JForm,
}

// ---------------------------------------------------------------------------
// quadrature path (n = 2)
// ---------------------------------------------------------------------------

/// Deterministic n = 2 statistics over a discretized law.
///
/// Probabilities are Stieltjes integrals against the grid measure:
/// midpoint sub-cells of the continuous part with boundaries clipped
/// exactly to the integration region, exact atoms, and the exact closure
/// term for mass beyond the grid end.
pub struct JQuadrature<'a> {
    grid: &'a TailGrid,
    eval: TailEval<'a>,
    /// Coarse (location, mass) cells of the whole measure (continuous
    /// sub-cells capped at 8 per grid cell, plus atoms) for the tensor
    /// quadratures of the n = 3 statistics.
    coarse: Vec<(f64, f64)>,
}

impl<'a> JQuadrature<'a> {
    pub fn new(grid: &'a TailGrid) -> Self {
        let eval = TailEval::new(grid);
        let xs = grid.xs();
        let mut coarse: Vec<(f64, f64)> = Vec::new();
        for i in 0..xs.len() - 1 {
            let (x0, x1) = (xs[i], xs[i + 1]);
            let c0 = eval.cont_eval(x0);
            let c1 = eval.cont_eval(x1);
            if c0 - c1 <= 0.0 {
                continue;
            }
            let nsub = (((x1 - x0) / 0.25).ceil() as usize).clamp(1, 8);
            let mut prev = c0;
            for j in 1..=nsub {
                let t = j as f64 / nsub as f64;
                let c = if j == nsub {
                    c1
                } else {
                    eval.cont_eval(x0 + (x1 - x0) * t)
                };
                let mass = prev - c;
                if mass > 0.0 {
                    coarse.push((x0 + (x1 - x0) * (j as f64 - 0.5) / nsub as f64, mass));
                }
                prev = c;
            }
        }
        coarse.extend(grid.atoms().iter().copied());
        coarse.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        JQuadrature { grid, eval, coarse }
    }

    pub fn tail(&self, x: f64) -> f64 {
        self.eval.eval(x)
    }

    /// Mass of dF strictly beyond the grid end.
    fn beyond_grid(&self) -> f64 {
        *self.grid.vals().last().unwrap()
    }

    /// ∫ g(y) dF(y) over y in (lo, hi], continuous part + atoms.
    fn stieltjes<G: Fn(f64) -> f64>(&self, lo: f64, hi: f64, g: G) -> f64 {
        let mut acc = 0.0;
        for &(loc, m) in self.grid.atoms() {
            if loc > lo && loc <= hi {
                acc += m * g(loc);
            }
        }
        let xs = self.grid.xs();
        for i in 0..xs.len() - 1 {
            let (x0, x1) = (xs[i], xs[i + 1]);
            if x1 <= lo {
                continue;
            }
            if x0 >= hi {
                break;
            }
            let u0 = x0.max(lo);
            let u1 = x1.min(hi);
            if u1 <= u0 {
                continue;
            }
            let c0 = self.eval.cont_eval(u0);
            let c1 = self.eval.cont_eval(u1);
            if c0 - c1 <= 0.0 {
                continue;
            }
            let nsub = (((u1 - u0) / 0.25).ceil() as usize).clamp(4, 64);
            let mut prev = c0;
            for j in 1..=nsub {
                let t = j as f64 / nsub as f64;
                let c = if j == nsub {
                    c1
                } else {
                    self.eval.cont_eval(u0 + (u1 - u0) * t)
                };
                let mass = prev - c;
                if mass > 0.0 {
                    acc += mass * g(u0 + (u1 - u0) * (j as f64 - 0.5) / nsub as f64);
                }
                prev = c;
            }
        }
        acc
    }

    /// P(S₂ > x) = F̄(x) + ∫_[0,x] F̄(x−y) dF(y).
    pub fn sum_tail(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        let acc = self.tail(x) + self.stieltjes(-1.0, x, |y| self.tail(x - y));
        acc.min(1.0)
    }

    /// P(X₁ > K, X₂ > K, S₂ > x) = ∫_{y>K} F̄(max(K, x−y)) dF(y).
    pub fn min_exceeds_and_sum(&self, k: f64, x: f64) -> f64 {
        let end = self.grid.x_end();
        self.stieltjes(k, end, |y| self.tail((x - y).max(k))) + self.beyond_grid() * self.tail(k)
    }

    /// P(X_{1,2} > x−K, S₂ > x) by inclusion-exclusion.
    pub fn max_exceeds_and_sum(&self, k: f64, x: f64) -> f64 {
        let t = x - k;
        if t <= 0.0 {
            return self.sum_tail(x);
        }
        let end = self.grid.x_end();
        let single = self.stieltjes(t, end, |y| self.tail(x - y)) + self.beyond_grid();
        let both =
            self.stieltjes(t, end, |y| self.tail((x - y).max(t))) + self.beyond_grid() * self.tail(t);
        (2.0 * single - both).clamp(0.0, 1.0)
    }

    /// D(K, x) = P(X_{2,2} > K | S₂ > x); returns (value, conditioning tail).
    pub fn d_second(&self, k: f64, x: f64) -> (f64, f64) {
        let den = self.sum_tail(x);
        if den <= 0.0 {
            return (f64::NAN, 0.0);
        }
        ((self.min_exceeds_and_sum(k, x) / den).min(1.0), den)
    }

    /// D₃(K, x) = P(X_{1,2} <= x−K | S₂ > x); returns (value, conditioning tail).
    pub fn d_max_defect(&self, k: f64, x: f64) -> (f64, f64) {
        let den = self.sum_tail(x);
        if den <= 0.0 {
            return (f64::NAN, 0.0);
        }
        let v = 1.0 - self.max_exceeds_and_sum(k, x) / den;
        (v.clamp(0.0, 1.0), den)
    }

    /// P(X_{1,2} > x−c, X_{2,2} > K | S₂ > x): the joint escape probability
    /// that must vanish as K grows, for any fixed offset c.
    pub fn joint_escape(&self, c: f64, k: f64, x: f64) -> f64 {
        let den = self.sum_tail(x);
        if den <= 0.0 {
            return f64::NAN;
        }
        let t = (x - c).max(k);
        let end = self.grid.x_end();
        let single =
            self.stieltjes(t, end, |y| self.tail((x - y).max(k))) + self.beyond_grid() * self.tail(k);
        let both =
            self.stieltjes(t, end, |y| self.tail((x - y).max(t))) + self.beyond_grid() * self.tail(t);
        ((2.0 * single - both).clamp(0.0, 1.0) / den).min(1.0)
    }

    /// D(K, x) = P(X_{2,3} > K | S₃ > x) for n = 3 by deterministic tensor
    /// quadrature: the two non-maximal coordinates run over the coarse cell
    /// list while the maximal one is integrated in closed form through the
    /// tail. Exact decomposition for continuous laws (ties in atomic laws
    /// are not handled; those remain within Monte Carlo reach anyway).
    ///
    /// P(S₃ > x) = 3 E[F̄(max(x − Y_a − Y_b, Y_a, Y_b))], and the numerator
    /// restricts to max(Y_a, Y_b) > K (the second largest of the triple).
    pub fn d_second_n3(&self, k: f64, x: f64) -> (f64, f64) {
        let mut den = 0.0;
        let mut num = 0.0;
        let cells = &self.coarse;
        for (i, &(ya, ma)) in cells.iter().enumerate() {
            // symmetric in (a, b): run b <= a and double the off-diagonal
            let mut den_row = 0.0;
            let mut num_row = 0.0;
            for &(yb, mb) in &cells[..i] {
                let w = mb * self.tail((x - ya - yb).max(ya).max(yb));
                den_row += 2.0 * w;
                if ya.max(yb) > k {
                    num_row += 2.0 * w;
                }
            }
            let w = ma * self.tail((x - 2.0 * ya).max(ya));
            den_row += w;
            if ya > k {
                num_row += w;
            }
            den += ma * den_row;
            num += ma * num_row;
        }
        // mass of the pair (Y_a, Y_b) beyond the grid end is itself a deep
        // tail event twice over; negligible against the retained terms
        if den <= 0.0 {
            return (f64::NAN, 0.0);
        }
        ((num / den).min(1.0), 3.0 * den)
    }

    /// Largest grid point where the conditioning tail P(S₂ > x) stays above
    /// `floor`; the far end of the usable x window.
    pub fn x_top(&self, floor: f64) -> Option<f64> {
        let xs = self.grid.xs();
        // sum_tail is nonincreasing: binary search the last admissible index
        if self.sum_tail(xs[0]) < floor {
            return None;
        }
        let (mut lo, mut hi) = (0usize, xs.len() - 1);
        if self.sum_tail(xs[hi]) >= floor {
            return Some(xs[hi]);
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.sum_tail(xs[mid]) >= floor {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(xs[lo])
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo paths (any n >= 2)
// ---------------------------------------------------------------------------

fn order_stats(draws: &[f64]) -> (f64, f64) {
    let mut m1 = f64::NEG_INFINITY;
    let mut m2 = f64::NEG_INFINITY;
    for &v in draws {
        if v > m1 {
            m2 = m1;
            m1 = v;
        } else if v > m2 {
            m2 = v;
        }
    }
    (m1, m2)
}

/// Plain rejection estimate of both forms at (K, x); errors out when fewer
/// than 200 conditioning hits arrive within the budget.
pub fn mc_rejection(
    dist: &Dist,
    n: u32,
    k: f64,
    x: f64,
    budget: u64,
    seed: u64,
) -> Result<(JPoint, JPoint)> {
    let mut rng = stream(seed, tags::JSTAT);
    let mut hits = 0u64;
    let mut second_hits = 0u64;
    let mut max_defect_hits = 0u64;
    let mut buf = vec![0.0f64; n as usize];
    for _ in 0..budget {
        let mut s = 0.0;
        for b in buf.iter_mut() {
            *b = dist.sample(&mut rng);
            s += *b;
        }
        if s > x {
            hits += 1;
            let (m1, m2) = order_stats(&buf);
            if m2 > k {
                second_hits += 1;
            }
            if m1 <= x - k {
                max_defect_hits += 1;
            }
        }
    }
    if hits < 200 {
        return Err(Error::McBudgetExhausted {
            hits,
            needed: 200,
            proposals: budget,
        });
    }
    let mk = |num: u64, form: JForm| {
        let p = num as f64 / hits as f64;
        JPoint {
            value: p,
            std_err: (p * (1.0 - p) / hits as f64).sqrt(),
            method: JMethod::Rejection { budget },
            form,
        }
    };
    Ok((
        mk(second_hits, JForm::SecondLargest),
        mk(max_defect_hits, JForm::MaxDefect),
    ))
}

/// Stratified one-big-jump estimate of D(K,x) (second-largest form).
///
/// Strata fix the number m of coordinates beyond T = x−K, weighted by exact
/// binomial probabilities, with coordinates drawn conditionally above/below
/// T. Unbiased; the m = 0 stratum is exactly empty when n·T <= x.
pub fn mc_big_jump(
    dist: &Dist,
    n: u32,
    k: f64,
    x: f64,
    draws_per_stratum: u64,
    seed: u64,
) -> Result<JPoint> {
    let t = x - k;
    if t <= 0.0 {
        return mc_rejection(dist, n, k, x, draws_per_stratum * (n as u64 + 1), seed)
            .map(|(d1, _)| d1);
    }
    let ft = dist.tail(t);
    let nn = n as usize;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut var_num = 0.0;
    let mut var_den = 0.0;
    let mut buf = vec![0.0f64; nn];
    for m in 0..=nn {
        let w = binomial(nn, m) * ft.powi(m as i32) * (1.0 - ft).powi((nn - m) as i32);
        if w <= 0.0 {
            continue;
        }
        if m == 0 && (nn as f64) * t <= x {
            continue; // all coordinates below T cannot sum past x
        }
        let mut rng = stream(seed, tags::cell(tags::JSTAT, m as u64 + 1));
        let mut den_hits = 0u64;
        let mut num_hits = 0u64;
        let mut performed = 0u64;
        'outer: for _ in 0..draws_per_stratum {
            let mut s = 0.0;
            for (i, b) in buf.iter_mut().enumerate() {
                let v = if i < m {
                    match dist.sample_above(t, &mut rng) {
                        Some(v) => v,
                        None => break 'outer,
                    }
                } else {
                    let mut v = dist.sample(&mut rng);
                    let mut guard = 0;
                    while v > t {
                        v = dist.sample(&mut rng);
                        guard += 1;
                        if guard > 1_000_000 {
                            break 'outer;
                        }
                    }
                    v
                };
                *b = v;
                s += v;
            }
            performed += 1;
            if s > x {
                den_hits += 1;
                let (_, m2) = order_stats(&buf);
                if m2 > k {
                    num_hits += 1;
                }
            }
        }
        if performed == 0 {
            return Err(Error::McBudgetExhausted {
                hits: 0,
                needed: draws_per_stratum,
                proposals: 0,
            });
        }
        let pd = den_hits as f64 / performed as f64;
        let pn = num_hits as f64 / performed as f64;
        den += w * pd;
        num += w * pn;
        var_den += w * w * pd * (1.0 - pd) / performed as f64;
        var_num += w * w * pn * (1.0 - pn) / performed as f64;
    }
    if den <= 0.0 {
        return Err(Error::McBudgetExhausted {
            hits: 0,
            needed: 1,
            proposals: draws_per_stratum,
        });
    }
    let d = (num / den).min(1.0);
    // delta method, covariance dropped (conservative)
    let se = ((var_num / (den * den)) + (num * num * var_den) / den.powi(4)).sqrt();
    Ok(JPoint {
        value: d,
        std_err: se,
        method: JMethod::BigJump { draws_per_stratum },
        form: JForm::SecondLargest,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{discretize, GridSpec};

    fn quad_for(dist: &Dist, x_max: f64) -> TailGrid {
        discretize(dist, &GridSpec::new(x_max)).unwrap()
    }

    #[test]
    fn exp_second_form_matches_closed_form() {
        // For Exp(1), D(K,x) = (x−2K+1)/(x+1) when x >= 2K
        let e = Dist::exponential(1.0).unwrap();
        let g = quad_for(&e, 60.0);
        let q = JQuadrature::new(&g);
        let (d, _) = q.d_second(1.0, 10.0);
        assert!((d - 9.0 / 11.0).abs() < 2e-3, "d = {d}, want {}", 9.0 / 11.0);
        let (d, _) = q.d_second(5.0, 30.0);
        assert!((d - 21.0 / 31.0).abs() < 2e-3, "d = {d}, want {}", 21.0 / 31.0);
    }

    #[test]
    fn any_continuous_dist_k_zero_gives_one() {
        let e = Dist::exponential(1.0).unwrap();
        let g = quad_for(&e, 40.0);
        let q = JQuadrature::new(&g);
        let (d, _) = q.d_second(0.0, 5.0);
        assert!((d - 1.0).abs() < 1e-9, "d = {d}");
    }

    #[test]
    fn sum_tail_matches_gamma() {
        let e = Dist::exponential(1.0).unwrap();
        let g = quad_for(&e, 40.0);
        let q = JQuadrature::new(&g);
        for x in [0.5f64, 2.0, 7.3, 20.0] {
            let want = (1.0 + x) * (-x).exp();
            let got = q.sum_tail(x);
            assert!((got - want).abs() / want < 2e-3, "x={x} got={got} want={want}");
        }
    }

    #[test]
    fn quadrature_and_rejection_agree_for_pareto() {
        let p = Dist::pareto(1.0, 1.0).unwrap();
        let g = quad_for(&p, 1e4);
        let q = JQuadrature::new(&g);
        let (dq, _) = q.d_second(100.0, 1e4);
        let (mc, _) = mc_rejection(&p, 2, 100.0, 1e4, 10_000_000, 7).unwrap();
        assert!(
            (dq - mc.value).abs() <= 3.0 * mc.std_err + 1e-3,
            "quad {dq} vs mc {} ± {}",
            mc.value,
            mc.std_err
        );
    }

    #[test]
    fn stratified_matches_rejection_where_both_work() {
        let p = Dist::pareto(1.0, 1.0).unwrap();
        let bj = mc_big_jump(&p, 3, 20.0, 200.0, 40_000, 11).unwrap();
        let (rej, _) = mc_rejection(&p, 3, 20.0, 200.0, 2_000_000, 13).unwrap();
        let joint = (bj.std_err.powi(2) + rej.std_err.powi(2)).sqrt();
        assert!(
            (bj.value - rej.value).abs() <= 3.5 * joint,
            "bj {} ± {} vs rej {} ± {}",
            bj.value,
            bj.std_err,
            rej.value,
            rej.std_err
        );
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let e = Dist::exponential(1.0).unwrap();
        let err = mc_rejection(&e, 2, 1.0, 60.0, 10_000, 3).unwrap_err();
        assert!(matches!(err, Error::McBudgetExhausted { .. }));
    }

    #[test]
    fn d_is_nonincreasing_in_k_quadrature() {
        let p = Dist::pareto(1.0, 1.0).unwrap();
        let g = quad_for(&p, 1e3);
        let q = JQuadrature::new(&g);
        let x = 800.0;
        let mut prev = f64::INFINITY;
        for k in [0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0] {
            let (d, _) = q.d_second(k, x);
            assert!(d <= prev + 1e-9, "D must be nonincreasing in K");
            prev = d;
        }
    }
}
