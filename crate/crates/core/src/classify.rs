//! Distribution class diagnostics and verdicts.
//!
//! Eight classes are probed, each through its defining ratio or statistic:
//!
//! * `J`   — one-big-jump: D(K,x) = P(X_{2,2} > K | S₂ > x) small at the far
//!           end of the window for K = K*.
//! * `S`   — subexponential: two-fold ratio F̄²*(x)/F̄(x) converging to 2.
//! * `L`   — long-tailed: unit-shift ratio F̄(x+1)/F̄(x) converging to 1;
//!           the fitted decay rate γ̂ = −ln(limit) is reported either way.
//! * `D`   — dominated variation: F̄(x/2)/F̄(x) bounded.
//! * `OS`  — O-subexponential: two-fold ratio bounded.
//! * `OL`  — O-long-tailed: F̄(x−1)/F̄(x) bounded.
//! * `K`   — heavy-tailed: ∫ e^{λx} dF divergent for every probe λ.
//! * `K*`  — strongly heavy-tailed: e^{λx} F̄(x) → ∞ for every probe λ.
//!
//! Verdicts are member-consistent / nonmember-consistent / inconclusive —
//! deterministic functions of the windowed evidence and the thresholds in
//! [`ClassifyConfig`]. Known inclusions between the classes are enforced
//! afterwards: a violating pair is downgraded to inconclusive and logged.
//!
//! Atomic laws get extra probe points just above and below every atom (and
//! unit-shift neighbours): step-tail ratio spikes live there and a geometric
//! grid almost surely misses them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::conv::convolve_tail;
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::grid::{discretize, GridSpec, TailEval, TailGrid};
use crate::jstat::{mc_big_jump, mc_rejection, JForm, JMethod, JPoint, JQuadrature};
use crate::ratio::{RatioCurve, WindowParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassId {
    J,
    S,
    L,
    D,
    #[serde(rename = "OS")]
    Os,
    #[serde(rename = "OL")]
    Ol,
    K,
    #[serde(rename = "K*")]
    KStar,
}

pub const ALL_CLASSES: [ClassId; 8] = [
    ClassId::J,
    ClassId::S,
    ClassId::L,
    ClassId::D,
    ClassId::Os,
    ClassId::Ol,
    ClassId::K,
    ClassId::KStar,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "member-consistent")]
    Member,
    #[serde(rename = "nonmember-consistent")]
    NonMember,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

/// All verdict thresholds in one block; echoed into every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub grid: GridSpec,
    pub window: WindowParams,
    /// Floor for quadrature-sourced statistics (J, K probes), far below the
    /// default floor that guards sampled curves.
    pub quad_floor: f64,
    /// K lattice for the J profile.
    pub k_probes: Vec<f64>,
    /// Largest K used for the J verdict; clamped to x_top/5.
    pub k_max: f64,
    /// J member threshold on D(K*, x_top).
    pub j_member: f64,
    /// J nonmember threshold on D(K*, x_top).
    pub j_nonmember: f64,
    /// |γ̂| below this is long-tailed (γ = 0).
    pub gamma_tol: f64,
    /// |two-fold window limit − 2| tolerance for the S verdict.
    pub s_limit_tol: f64,
    /// Relative window spread above which a curve counts as oscillating.
    pub spread_tol: f64,
    /// Exponential-moment probes for K and K*.
    pub lambda_probes: Vec<f64>,
    /// Last-decade mass share that flags ∫ e^{λx} dF as divergent.
    pub k_share: f64,
    pub master_seed: u64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            grid: GridSpec::new(1e4),
            window: WindowParams::default(),
            quad_floor: 1e-250,
            k_probes: vec![1.0, 2.0, 5.0, 10.0, 25.0, 50.0],
            k_max: 50.0,
            j_member: 0.05,
            j_nonmember: 0.35,
            gamma_tol: 0.05,
            s_limit_tol: 0.15,
            spread_tol: 0.25,
            lambda_probes: vec![0.01, 0.1, 1.0],
            k_share: 0.5,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub class_id: ClassId,
    pub verdict: Verdict,
    /// Fitted decay rate of the unit-shift ratio (L probe only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub detail: String,
}

/// J-profile evidence: the D(K, x) lattice plus the verdict statistic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JProfile {
    pub n: u32,
    pub ks: Vec<f64>,
    pub xs: Vec<f64>,
    /// cells[i][j] = D(ks[i], xs[j]); None marks a budget failure.
    pub cells: Vec<Vec<Option<JPoint>>>,
    pub k_star: f64,
    pub x_top: f64,
    /// D(K*, ·) averaged over the top grid points.
    pub top_d: f64,
    pub top_d_se: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub config: ClassifyConfig,
    pub verdicts: Vec<ClassVerdict>,
    pub conflicts: Vec<String>,
    pub j_profile: JProfile,
    /// Evidence curves keyed by class name.
    pub curves: BTreeMap<String, RatioCurve>,
}

impl ClassifyReport {
    pub fn verdict(&self, id: ClassId) -> Verdict {
        self.verdicts
            .iter()
            .find(|v| v.class_id == id)
            .map(|v| v.verdict)
            .unwrap_or(Verdict::Inconclusive)
    }

    pub fn gamma(&self) -> Option<f64> {
        self.verdicts.iter().find_map(|v| v.gamma)
    }
}

// ---------------------------------------------------------------------------
// probe point enrichment
// ---------------------------------------------------------------------------

/// Probe points: grid points plus, for atomic laws, points hugging each atom
/// and its unit-shift neighbours.
fn enriched_points(grid: &TailGrid, extra_atoms: &[(f64, f64)], lo: f64, hi: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = grid
        .xs()
        .iter()
        .copied()
        .filter(|x| *x > lo && *x <= hi)
        .collect();
    let mut push = |x: f64| {
        if x > lo && x <= hi {
            pts.push(x);
        }
    };
    for &(loc, _) in grid.atoms().iter().chain(extra_atoms) {
        let eps = (loc * 1e-9).max(1e-12);
        push(loc - eps);
        push(loc + eps);
        push(loc - 0.5);
        push(loc + 0.5);
        push(loc - 1.5);
        push(loc + 1.5);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

fn ratio_probe(
    pts: &[f64],
    num: impl Fn(f64) -> f64,
    den: impl Fn(f64) -> f64,
    params: &WindowParams,
) -> Result<RatioCurve> {
    let samples: Vec<(f64, f64, f64)> = pts.iter().map(|&x| (x, num(x), den(x))).collect();
    RatioCurve::from_samples(&samples, params)
}

fn spread(curve: &RatioCurve) -> f64 {
    (curve.window_limsup - curve.window_liminf) / curve.window_liminf.max(1e-300)
}

/// The defining ratio of one comparison class as an evidence curve.
///
/// For K/K* the reported values are e^{λx}F̄(x) at λ = 0.01, capped at 1e300
/// (divergence decisions are made in log domain by the classifier).
pub fn class_ratios(dist: &Dist, class_id: ClassId, config: &ClassifyConfig) -> Result<RatioCurve> {
    if !dist.has_unbounded_support() {
        return Err(Error::BoundedSupport);
    }
    let tg = discretize(dist, &config.grid)?;
    let ev = TailEval::new(&tg);
    let end = tg.x_end();
    match class_id {
        ClassId::S | ClassId::Os | ClassId::J => {
            let two = convolve_tail(&tg, &tg)?;
            let two_ev = TailEval::new(&two);
            let pts = enriched_points(&tg, two.atoms(), 0.0, end);
            ratio_probe(&pts, |x| two_ev.eval(x), |x| ev.eval(x), &config.window)
        }
        ClassId::L => {
            let pts = enriched_points(&tg, &[], 0.0, end - 1.0);
            ratio_probe(&pts, |x| ev.eval(x + 1.0), |x| ev.eval(x), &config.window)
        }
        ClassId::Ol => {
            let pts = enriched_points(&tg, &[], 1.0, end);
            ratio_probe(&pts, |x| ev.eval(x - 1.0), |x| ev.eval(x), &config.window)
        }
        ClassId::D => {
            let pts = enriched_points(&tg, &[], 0.0, end);
            ratio_probe(&pts, |x| ev.eval(x / 2.0), |x| ev.eval(x), &config.window)
        }
        ClassId::K | ClassId::KStar => {
            let lambda = 0.01;
            let pts = enriched_points(&tg, &[], 0.0, end);
            let params = WindowParams {
                floor: config.quad_floor,
                ..config.window
            };
            ratio_probe(
                &pts,
                |x| ((lambda * x + ev.eval(x).max(1e-320).ln()).min(690.0)).exp(),
                |_| 1.0,
                &params,
            )
        }
    }
}

// ---------------------------------------------------------------------------
// K / K* probes (log domain)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpMomentProbe {
    pub lambda: f64,
    /// e^{λx} F̄(x) grows through the window (K* evidence).
    pub weighted_tail_diverges: bool,
    /// last-decade share of ∫ e^{λy} dF(y) (K evidence when above threshold).
    pub last_decade_share: f64,
}

fn exp_moment_probes(tg: &TailGrid, config: &ClassifyConfig) -> Vec<ExpMomentProbe> {

    let admissible: Vec<(f64, f64)> = tg
        .xs()
        .iter()
        .zip(tg.vals())
        .filter(|(x, v)| **x > 0.0 && **v >= config.quad_floor)
        .map(|(x, v)| (*x, *v))
        .collect();
    let (mids, masses) = tg.quad_cells();
    let mut out = Vec::new();
    for &lambda in &config.lambda_probes {
        if admissible.len() < 4 {
            out.push(ExpMomentProbe {
                lambda,
                weighted_tail_diverges: false,
                last_decade_share: 0.0,
            });
            continue;
        }
        let x_hi = admissible.last().unwrap().0;
        let window: Vec<(f64, f64)> = admissible
            .iter()
            .filter(|(x, _)| *x >= x_hi / 10.0)
            .map(|(x, v)| (*x, lambda * x + v.ln()))
            .collect();
        let t_first = window.first().unwrap().1;
        let t_last = window.last().unwrap().1;
        let t_max = window.iter().map(|(_, t)| *t).fold(f64::NEG_INFINITY, f64::max);
        let diverges = t_last - t_first >= config.window.growth_factor.ln()
            && t_last >= t_max - 1e-6;

        // ∫ e^{λy} dF(y): log-sum-exp over quadrature cells and atoms
        let mut terms: Vec<(f64, f64)> = Vec::new(); // (y, ln mass + λ y)
        for (m, mass) in mids.iter().zip(&masses) {
            if *mass > 0.0 {
                terms.push((*m, mass.ln() + lambda * m));
            }
        }
        for &(loc, mass) in tg.atoms() {
            terms.push((loc, mass.ln() + lambda * loc));
        }
        let lse = |it: &[(f64, f64)]| -> f64 {
            let mx = it.iter().map(|(_, t)| *t).fold(f64::NEG_INFINITY, f64::max);
            if mx == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            mx + it.iter().map(|(_, t)| (t - mx).exp()).sum::<f64>().ln()
        };
        let total = lse(&terms);
        let last: Vec<(f64, f64)> = terms.iter().copied().filter(|(y, _)| *y >= x_hi / 10.0).collect();
        let share = if total == f64::NEG_INFINITY {
            0.0
        } else {
            (lse(&last) - total).exp()
        };
        out.push(ExpMomentProbe {
            lambda,
            weighted_tail_diverges: diverges,
            last_decade_share: share,
        });
    }
    out
}

// ---------------------------------------------------------------------------
// J profile
// ---------------------------------------------------------------------------

/// Quadrature J profile (n = 2) over a discretized law.
pub fn j_profile_quad(grid: &TailGrid, config: &ClassifyConfig) -> Result<JProfile> {
    let quad = JQuadrature::new(grid);
    let x_top = quad
        .x_top(config.quad_floor)
        .ok_or(Error::EmptyWindow { floor: config.quad_floor })?;
    let k_star = config.k_max.min(x_top / 5.0);
    if k_star < 1.0 {
        return Err(Error::EmptyWindow { floor: config.quad_floor });
    }
    let mut ks: Vec<f64> = config
        .k_probes
        .iter()
        .copied()
        .filter(|k| *k < k_star)
        .collect();
    ks.push(k_star);
    // x lattice: log-spaced through the last decade
    let xs: Vec<f64> = (0..8)
        .map(|i| x_top * 10.0f64.powf(i as f64 / 7.0 - 1.0))
        .collect();
    let cells: Vec<Vec<Option<JPoint>>> = ks
        .iter()
        .map(|&k| {
            xs.iter()
                .map(|&x| {
                    let (d, den) = quad.d_second(k, x);
                    (den > 0.0).then_some(JPoint {
                        value: d,
                        std_err: 0.0,
                        method: JMethod::Quadrature,
                        form: JForm::SecondLargest,
                    })
                })
                .collect()
        })
        .collect();
    // verdict statistic: D(K*, ·) averaged over the top three admissible grid points
    let top_xs = top_grid_points(grid, x_top, 3);
    let mut top_d = 0.0;
    let mut cnt = 0;
    for &x in &top_xs {
        let (d, den) = quad.d_second(k_star, x);
        if den > 0.0 && d.is_finite() {
            top_d += d;
            cnt += 1;
        }
    }
    if cnt == 0 {
        return Err(Error::EmptyWindow { floor: config.quad_floor });
    }
    top_d /= cnt as f64;
    let verdict = j_verdict_from(top_d, 0.0, config);
    Ok(JProfile {
        n: 2,
        ks,
        xs,
        cells,
        k_star,
        x_top,
        top_d,
        top_d_se: 0.0,
        verdict,
    })
}

/// Monte Carlo J profile for n >= 2 on a shared lattice.
pub fn j_profile_mc(
    dist: &Dist,
    n: u32,
    ks: &[f64],
    xs: &[f64],
    method: JMethod,
    config: &ClassifyConfig,
) -> Result<JProfile> {
    let mut cells: Vec<Vec<Option<JPoint>>> = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let mut row = Vec::with_capacity(xs.len());
        for (j, &x) in xs.iter().enumerate() {
            let seed = config
                .master_seed
                .wrapping_add((i as u64) << 32)
                .wrapping_add(j as u64)
                .wrapping_add(n as u64);
            let pt = match method {
                JMethod::Quadrature => {
                    return Err(Error::InvalidParameter(
                        "quadrature profile only supports n = 2; use j_profile_quad".into(),
                    ))
                }
                JMethod::Rejection { budget } => {
                    mc_rejection(dist, n, k, x, budget, seed).map(|(d1, _)| d1)
                }
                JMethod::BigJump { draws_per_stratum } => {
                    mc_big_jump(dist, n, k, x, draws_per_stratum, seed)
                }
            };
            row.push(pt.ok());
        }
        cells.push(row);
    }
    let x_top = *xs.last().unwrap();
    let k_star = config.k_max.min(x_top / 5.0).max(1.0);
    // verdict from the largest-K row at the largest x
    let (mut top_d, mut top_se, mut cnt) = (0.0, 0.0, 0);
    if let Some(row) = cells.last() {
        if let Some(Some(pt)) = row.last() {
            top_d = pt.value;
            top_se = pt.std_err;
            cnt = 1;
        }
    }
    if cnt == 0 {
        return Err(Error::McBudgetExhausted {
            hits: 0,
            needed: 200,
            proposals: 0,
        });
    }
    let verdict = j_verdict_from(top_d, top_se, config);
    Ok(JProfile {
        n,
        ks: ks.to_vec(),
        xs: xs.to_vec(),
        cells,
        k_star,
        x_top,
        top_d,
        top_d_se: top_se,
        verdict,
    })
}

fn j_verdict_from(top_d: f64, se: f64, config: &ClassifyConfig) -> Verdict {
    if top_d + se < config.j_member {
        Verdict::Member
    } else if top_d - se > config.j_nonmember {
        Verdict::NonMember
    } else {
        Verdict::Inconclusive
    }
}

fn top_grid_points(grid: &TailGrid, x_top: f64, count: usize) -> Vec<f64> {
    let xs = grid.xs();
    let idx = xs.partition_point(|x| *x <= x_top);
    xs[idx.saturating_sub(count)..idx].to_vec()
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

pub fn classify(dist: &Dist, config: &ClassifyConfig) -> Result<ClassifyReport> {
    if !dist.has_unbounded_support() {
        return Err(Error::BoundedSupport);
    }
    let tg = discretize(dist, &config.grid)?;
    let two = convolve_tail(&tg, &tg)?;
    let ev = TailEval::new(&tg);
    let two_ev = TailEval::new(&two);
    let end = tg.x_end();

    let mut curves = BTreeMap::new();
    let mut verdicts = Vec::new();

    // --- OS and S share the two-fold ratio with atom-adjacent enrichment
    let s_pts = enriched_points(&tg, two.atoms(), 0.0, end);
    let two_curve = ratio_probe(&s_pts, |x| two_ev.eval(x), |x| ev.eval(x), &config.window)?;
    let os_verdict = if two_curve.diverging {
        Verdict::NonMember
    } else {
        Verdict::Member
    };
    verdicts.push(ClassVerdict {
        class_id: ClassId::Os,
        verdict: os_verdict,
        gamma: None,
        detail: format!(
            "two-fold ratio window [{:.4}, {:.4}], diverging={}",
            two_curve.window_liminf, two_curve.window_limsup, two_curve.diverging
        ),
    });
    let s_top = two_curve.top_value(5);
    let s_spread = spread(&two_curve);
    let s_verdict = if two_curve.diverging {
        Verdict::NonMember
    } else if s_spread <= config.spread_tol && (s_top - 2.0).abs() <= config.s_limit_tol {
        Verdict::Member
    } else if s_spread > config.spread_tol || (s_top - 2.0).abs() >= 0.5 {
        Verdict::NonMember
    } else {
        Verdict::Inconclusive
    };
    verdicts.push(ClassVerdict {
        class_id: ClassId::S,
        verdict: s_verdict,
        gamma: None,
        detail: format!("two-fold window limit {s_top:.4}, spread {s_spread:.3}"),
    });
    curves.insert("OS".into(), two_curve.clone());
    curves.insert("S".into(), two_curve);

    // --- L: unit-shift ratio, γ̂ from the window limit. A wide spread only
    // counts as oscillation when the window is not monotone; slowly
    // converging monotone curves still yield a γ̂ from the top.
    let l_pts = enriched_points(&tg, &[], 0.0, end - 1.0);
    let l_curve = ratio_probe(&l_pts, |x| ev.eval(x + 1.0), |x| ev.eval(x), &config.window)?;
    let l_spread = spread(&l_curve);
    let (l_verdict, gamma) = if l_spread > config.spread_tol && !l_curve.window_is_monotone() {
        (Verdict::NonMember, None) // persistent oscillation: no shift limit
    } else {
        let gamma_hat = -(l_curve.top_value(5).max(1e-300).ln());
        if gamma_hat.abs() <= config.gamma_tol {
            (Verdict::Member, Some(0.0))
        } else {
            (Verdict::NonMember, Some(gamma_hat))
        }
    };
    verdicts.push(ClassVerdict {
        class_id: ClassId::L,
        verdict: l_verdict,
        gamma,
        detail: format!(
            "shift ratio window [{:.4}, {:.4}], spread {:.3}",
            l_curve.window_liminf, l_curve.window_limsup, l_spread
        ),
    });
    curves.insert("L".into(), l_curve);

    // --- OL: downward unit-shift ratio bounded
    let ol_pts = enriched_points(&tg, &[], 1.0, end);
    let ol_curve = ratio_probe(&ol_pts, |x| ev.eval(x - 1.0), |x| ev.eval(x), &config.window)?;
    let ol_verdict = if ol_curve.diverging {
        Verdict::NonMember
    } else {
        Verdict::Member
    };
    verdicts.push(ClassVerdict {
        class_id: ClassId::Ol,
        verdict: ol_verdict,
        gamma: None,
        detail: format!(
            "down-shift ratio window [{:.4}, {:.4}], diverging={}",
            ol_curve.window_liminf, ol_curve.window_limsup, ol_curve.diverging
        ),
    });
    curves.insert("OL".into(), ol_curve);

    // --- D: half-argument ratio bounded
    let d_pts = enriched_points(&tg, &[], 0.0, end);
    let d_curve = ratio_probe(&d_pts, |x| ev.eval(x / 2.0), |x| ev.eval(x), &config.window)?;
    let d_verdict = if d_curve.diverging {
        Verdict::NonMember
    } else {
        Verdict::Member
    };
    verdicts.push(ClassVerdict {
        class_id: ClassId::D,
        verdict: d_verdict,
        gamma: None,
        detail: format!(
            "half-argument ratio window [{:.4}, {:.4}], diverging={}",
            d_curve.window_liminf, d_curve.window_limsup, d_curve.diverging
        ),
    });
    curves.insert("D".into(), d_curve);

    // --- K and K*: exponential moment probes
    let probes = exp_moment_probes(&tg, config);
    let kstar_verdict = if probes.iter().all(|p| p.weighted_tail_diverges) {
        Verdict::Member
    } else {
        Verdict::NonMember
    };
    let k_verdict = if probes
        .iter()
        .all(|p| p.weighted_tail_diverges || p.last_decade_share >= config.k_share)
    {
        Verdict::Member
    } else {
        Verdict::NonMember
    };
    let detail = probes
        .iter()
        .map(|p| {
            format!(
                "λ={}: tail {}, share {:.3}",
                p.lambda,
                if p.weighted_tail_diverges { "diverges" } else { "bounded" },
                p.last_decade_share
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    verdicts.push(ClassVerdict {
        class_id: ClassId::K,
        verdict: k_verdict,
        gamma: None,
        detail: detail.clone(),
    });
    verdicts.push(ClassVerdict {
        class_id: ClassId::KStar,
        verdict: kstar_verdict,
        gamma: None,
        detail,
    });

    // --- J: quadrature profile
    let j_profile = j_profile_quad(&tg, config)?;
    verdicts.push(ClassVerdict {
        class_id: ClassId::J,
        verdict: j_profile.verdict,
        gamma: None,
        detail: format!(
            "D(K*={:.1}, x_top={:.1}) = {:.4}",
            j_profile.k_star, j_profile.x_top, j_profile.top_d
        ),
    });

    let mut report = ClassifyReport {
        config: config.clone(),
        verdicts,
        conflicts: Vec::new(),
        j_profile,
        curves,
    };
    repair_consistency(&mut report);
    Ok(report)
}

/// Inclusions the verdict table must respect; (A, B) means A ⊆ B.
const INCLUSIONS: [(ClassId, ClassId); 8] = [
    (ClassId::S, ClassId::L),
    (ClassId::S, ClassId::J),
    (ClassId::L, ClassId::KStar),
    (ClassId::D, ClassId::KStar),
    (ClassId::KStar, ClassId::K),
    (ClassId::D, ClassId::J),
    (ClassId::J, ClassId::Os),
    (ClassId::Os, ClassId::Ol),
];

fn repair_consistency(report: &mut ClassifyReport) {
    loop {
        let mut changed = false;
        for (a, b) in INCLUSIONS {
            if report.verdict(a) == Verdict::Member && report.verdict(b) == Verdict::NonMember {
                report
                    .conflicts
                    .push(format!("{a:?} member but {b:?} nonmember; both downgraded"));
                set_verdict(report, a, Verdict::Inconclusive);
                set_verdict(report, b, Verdict::Inconclusive);
                changed = true;
            }
        }
        // J ∩ L = S
        if report.verdict(ClassId::J) == Verdict::Member
            && report.verdict(ClassId::L) == Verdict::Member
            && report.verdict(ClassId::S) == Verdict::NonMember
        {
            report
                .conflicts
                .push("J and L member but S nonmember; all three downgraded".into());
            set_verdict(report, ClassId::J, Verdict::Inconclusive);
            set_verdict(report, ClassId::L, Verdict::Inconclusive);
            set_verdict(report, ClassId::S, Verdict::Inconclusive);
            changed = true;
        }
        if !changed {
            break;
        }
    }
}

fn set_verdict(report: &mut ClassifyReport, id: ClassId, v: Verdict) {
    if let Some(cv) = report.verdicts.iter_mut().find(|c| c.class_id == id) {
        cv.verdict = v;
    }
}

// ---------------------------------------------------------------------------
// grid-backed laws (integrated tails, ladder heights, supremum laws)
// ---------------------------------------------------------------------------

/// Key verdicts for a law given directly as a (proper) tail grid. Defective
/// grids must be normalized with [`TailGrid::with_zero_atom`] first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridLawVerdicts {
    pub j: Verdict,
    pub j_top_d: f64,
    pub os: Verdict,
    pub ol: Verdict,
    pub kstar: Verdict,
}

pub fn grid_law_verdicts(grid: &TailGrid, config: &ClassifyConfig) -> Result<GridLawVerdicts> {
    let two = convolve_tail(grid, grid)?;
    let ev = TailEval::new(grid);
    let two_ev = TailEval::new(&two);
    let end = grid.x_end();

    let s_pts = enriched_points(grid, two.atoms(), 0.0, end);
    let two_curve = ratio_probe(&s_pts, |x| two_ev.eval(x), |x| ev.eval(x), &config.window)?;
    let os = if two_curve.diverging {
        Verdict::NonMember
    } else {
        Verdict::Member
    };

    let ol_pts = enriched_points(grid, &[], 1.0, end);
    let ol_curve = ratio_probe(&ol_pts, |x| ev.eval(x - 1.0), |x| ev.eval(x), &config.window)?;
    let ol = if ol_curve.diverging {
        Verdict::NonMember
    } else {
        Verdict::Member
    };

    let jp = j_profile_quad(grid, config)?;

    let probes = exp_moment_probes(grid, config);
    let kstar = if probes.iter().all(|p| p.weighted_tail_diverges) {
        Verdict::Member
    } else {
        Verdict::NonMember
    };

    Ok(GridLawVerdicts {
        j: jp.verdict,
        j_top_d: jp.top_d,
        os,
        ol,
        kstar,
    })
}

// ---------------------------------------------------------------------------
// form consistency
// ---------------------------------------------------------------------------

/// Cross-check of the equivalent J forms and of n against n+1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormConsistency {
    pub n: u32,
    pub ks: Vec<f64>,
    pub xs: Vec<f64>,
    pub second_form: Vec<Vec<Option<JPoint>>>,
    pub max_form: Vec<Vec<Option<JPoint>>>,
    /// max |D − D₃| over valid lattice cells.
    pub max_gap: f64,
    pub second_verdict: Verdict,
    pub max_verdict: Verdict,
    /// Verdict from the (n+1)-fold statistic (Monte Carlo).
    pub next_n_verdict: Verdict,
    pub next_n_top_d: f64,
}

pub fn form_consistency(dist: &Dist, n: u32, config: &ClassifyConfig) -> Result<FormConsistency> {
    if n != 2 && n != 3 {
        return Err(Error::InvalidParameter("form consistency supports n in {2, 3}".into()));
    }
    if !dist.has_unbounded_support() {
        return Err(Error::BoundedSupport);
    }
    let tg = discretize(dist, &config.grid)?;
    let quad = JQuadrature::new(&tg);
    let x_top = quad
        .x_top(config.quad_floor)
        .ok_or(Error::EmptyWindow { floor: config.quad_floor })?;
    let k_star = config.k_max.min(x_top / 5.0).max(1.0);
    let mut ks: Vec<f64> = config.k_probes.iter().copied().filter(|k| *k < k_star).collect();
    ks.push(k_star);
    let xs = vec![x_top / 2.0, x_top];

    let make_cells = |form: JForm| -> Vec<Vec<Option<JPoint>>> {
        ks.iter()
            .map(|&k| {
                xs.iter()
                    .map(|&x| {
                        let (d, den) = match form {
                            JForm::SecondLargest => quad.d_second(k, x),
                            JForm::MaxDefect => quad.d_max_defect(k, x),
                        };
                        (den > 0.0 && d.is_finite()).then_some(JPoint {
                            value: d,
                            std_err: 0.0,
                            method: JMethod::Quadrature,
                            form,
                        })
                    })
                    .collect()
            })
            .collect()
    };

    let continuous = tg.atoms().is_empty();
    let (second_form, max_form, second_verdict, max_verdict, max_gap) = if n == 2 {
        let sf = make_cells(JForm::SecondLargest);
        let mf = make_cells(JForm::MaxDefect);
        // the gap is limit-relevant only along the largest-K row: at small
        // fixed K the two forms legitimately sit far apart at finite x
        let mut gap = 0.0f64;
        if let (Some(r1), Some(r3)) = (sf.last(), mf.last()) {
            for (c1, c3) in r1.iter().zip(r3) {
                if let (Some(p1), Some(p3)) = (c1, c3) {
                    gap = gap.max((p1.value - p3.value).abs());
                }
            }
        }
        let (d1, _) = quad.d_second(k_star, x_top);
        let (d3, _) = quad.d_max_defect(k_star, x_top);
        (
            sf,
            mf,
            j_verdict_from(d1, 0.0, config),
            j_verdict_from(d3, 0.0, config),
            gap,
        )
    } else {
        // n = 3: tensor quadrature for continuous laws (deep cells are far
        // beyond any Monte Carlo reach for light tails); rejection draws for
        // atomic laws, whose windows stay reachable
        let mut sf: Vec<Vec<Option<JPoint>>> = Vec::new();
        let mut mf: Vec<Vec<Option<JPoint>>> = Vec::new();
        let mut gap = 0.0f64;
        for (i, &k) in ks.iter().enumerate() {
            let mut row1 = Vec::new();
            let mut row3 = Vec::new();
            for (j, &x) in xs.iter().enumerate() {
                if continuous {
                    let (d, den) = quad.d_second_n3(k, x);
                    row1.push((den > 0.0 && d.is_finite()).then_some(JPoint {
                        value: d,
                        std_err: 0.0,
                        method: JMethod::Quadrature,
                        form: JForm::SecondLargest,
                    }));
                    row3.push(None);
                } else {
                    let seed = config.master_seed.wrapping_add(((i * 31 + j) as u64) << 8);
                    match mc_rejection(dist, 3, k, x, 4_000_000, seed) {
                        Ok((d1, d3)) => {
                            if i + 1 == ks.len() {
                                gap = gap.max((d1.value - d3.value).abs());
                            }
                            row1.push(Some(d1));
                            row3.push(Some(d3));
                        }
                        Err(_) => {
                            row1.push(mc_big_jump(dist, 3, k, x, 100_000, seed).ok());
                            row3.push(None);
                        }
                    }
                }
            }
            sf.push(row1);
            mf.push(row3);
        }
        let v1 = sf
            .last()
            .and_then(|r| r.last().cloned().flatten())
            .map(|p| j_verdict_from(p.value, p.std_err, config))
            .unwrap_or(Verdict::Inconclusive);
        let v3 = mf
            .last()
            .and_then(|r| r.last().cloned().flatten())
            .map(|p| j_verdict_from(p.value, p.std_err, config))
            .unwrap_or(v1);
        (sf, mf, v1, v3, gap)
    };

    // n vs n+1: the (n+1)-fold statistic at (k_star, x_top)
    let (next_verdict, next_top_d) = if n == 2 && continuous {
        let (d, den) = quad.d_second_n3(k_star, x_top);
        if den > 0.0 && d.is_finite() {
            (j_verdict_from(d, 0.0, config), d)
        } else {
            (Verdict::Inconclusive, f64::NAN)
        }
    } else {
        match mc_rejection(dist, n + 1, k_star, x_top, 4_000_000, config.master_seed ^ 0xA5) {
            Ok((d1, _)) => (j_verdict_from(d1.value, d1.std_err, config), d1.value),
            Err(_) => match mc_big_jump(dist, n + 1, k_star, x_top, 100_000, config.master_seed ^ 0xA5)
            {
                Ok(d1) => (j_verdict_from(d1.value, d1.std_err, config), d1.value),
                Err(_) => (Verdict::Inconclusive, f64::NAN),
            },
        }
    };

    Ok(FormConsistency {
        n,
        ks,
        xs,
        second_form,
        max_form,
        max_gap,
        second_verdict,
        max_verdict,
        next_n_verdict: next_verdict,
        next_n_top_d: next_top_d,
    })
}
