//! Distribution catalog and combinators.
//!
//! A [`Dist`] is an immutable law on [0, ∞) exposing its survival function
//! (the primitive every numeric routine works with), optional density,
//! atoms, mean and a seeded sampler. Closed-form laws are exact; `Empirical`
//! and `PeterPaul` are purely atomic step tails; `FromGrid` wraps a computed
//! [`TailGrid`] so that derived objects (integrated tails, ladder heights,
//! compound tails) can be fed back into the classifiers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TailGrid;
use crate::quad::adaptive_simpson;

fn default_scale() -> f64 {
    1.0
}

/// Distribution descriptor. JSON form uses a `kind` tag, e.g.
/// `{"kind":"pareto","alpha":1.0,"scale":1.0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Dist {
    /// Tail (scale/x)^alpha beyond `scale`, 1 below.
    #[serde(rename = "pareto")]
    Pareto {
        alpha: f64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    #[serde(rename = "exponential")]
    Exponential { rate: f64 },
    /// Atoms at 2^k with mass 2^-k, k >= 1; tail 2^-k on [2^k, 2^(k+1)).
    #[serde(rename = "peterpaul")]
    PeterPaul,
    /// Density C e^{-x} / (1 + x^2); light-tailed but with one-big-jump
    /// behaviour. C is determined by normalization.
    #[serde(rename = "bigjumplight")]
    BigJumpLight,
    #[serde(rename = "weibull")]
    Weibull { shape: f64, scale: f64 },
    #[serde(rename = "lognormal")]
    Lognormal { mu: f64, sigma: f64 },
    /// Step tail over observed samples (right-continuous).
    #[serde(rename = "empirical")]
    Empirical { samples: Vec<f64> },
    #[serde(rename = "dirac")]
    Dirac { point: f64 },
    /// p F + (1-p) G.
    #[serde(rename = "mixture")]
    Mixture { a: Box<Dist>, b: Box<Dist>, p: f64 },
    /// Pointwise maximum of independent draws.
    #[serde(rename = "max")]
    MaxOf { a: Box<Dist>, b: Box<Dist> },
    /// Pointwise minimum of independent draws.
    #[serde(rename = "min")]
    MinOf { a: Box<Dist>, b: Box<Dist> },
    /// inner + by (by >= 0).
    #[serde(rename = "shift")]
    Shifted { inner: Box<Dist>, by: f64 },
    /// A law given by a computed tail grid.
    #[serde(rename = "grid")]
    FromGrid { grid: TailGrid },
}

/// Normalizing constant of the BigJumpLight density, `1 / ∫_0^∞ e^{-x}/(1+x²) dx`.
///
/// Quadrature runs on [0, X*] with X* = 40; the dropped remainder is below
/// e^{-X*} < 5e-18, comfortably inside the 1e-12 contract.
pub fn bigjump_normalizer() -> f64 {
    static C: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *C.get_or_init(|| {
        let integral = adaptive_simpson(&|x: f64| (-x).exp() / (1.0 + x * x), 0.0, 40.0, 1e-14)
            .expect("normalizer quadrature cannot fail on a smooth bounded integrand");
        1.0 / integral
    })
}

/// Survival function of BigJumpLight.
///
/// Factors out e^{-x} before integrating so the result keeps full relative
/// precision all the way down to the f64 underflow threshold.
fn bigjump_tail(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let c = bigjump_normalizer();
    // ∫_x^∞ e^{-y}/(1+y²) dy = e^{-x} ∫_0^∞ e^{-t}/(1+(x+t)²) dt
    let scale = 1.0 / (1.0 + x * x);
    let j = adaptive_simpson(
        &|t: f64| (-t).exp() / (1.0 + (x + t) * (x + t)),
        0.0,
        45.0,
        1e-13 * scale,
    )
    .expect("bigjump tail quadrature cannot fail on a smooth bounded integrand");
    (c * j * (-x).exp()).min(1.0)
}

fn bigjump_mean() -> f64 {
    static M: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *M.get_or_init(|| {
        bigjump_normalizer()
            * adaptive_simpson(&|x: f64| x * (-x).exp() / (1.0 + x * x), 0.0, 45.0, 1e-14)
                .expect("mean quadrature cannot fail on a smooth bounded integrand")
    })
}

/// Smallest Peter-and-Paul atom index kept in enumerations: masses below
/// 2^-60 are beyond f64 relevance for any tail this crate evaluates.
const PETER_PAUL_MAX_K: u32 = 60;

impl Dist {
    pub fn pareto(alpha: f64, scale: f64) -> Result<Self> {
        if alpha <= 0.0 || scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pareto needs alpha > 0 and scale > 0, got alpha={alpha}, scale={scale}"
            )));
        }
        Ok(Dist::Pareto { alpha, scale })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "exponential needs rate > 0, got {rate}"
            )));
        }
        Ok(Dist::Exponential { rate })
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidParameter(
                "empirical needs a non-empty list of finite nonnegative samples".into(),
            ));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Dist::Empirical { samples })
    }

    pub fn mixture(a: Dist, b: Dist, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mixture weight must lie in (0,1), got {p}"
            )));
        }
        Ok(Dist::Mixture {
            a: Box::new(a),
            b: Box::new(b),
            p,
        })
    }

    pub fn max_of(a: Dist, b: Dist) -> Self {
        Dist::MaxOf {
            a: Box::new(a),
            b: Box::new(b),
        }
    }

    pub fn min_of(a: Dist, b: Dist) -> Self {
        Dist::MinOf {
            a: Box::new(a),
            b: Box::new(b),
        }
    }

    pub fn shifted(inner: Dist, by: f64) -> Result<Self> {
        if by < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "shift must be nonnegative, got {by}"
            )));
        }
        Ok(Dist::Shifted {
            inner: Box::new(inner),
            by,
        })
    }

    /// Validate parameters after deserializing a descriptor.
    pub fn validate(&self) -> Result<()> {
        match self {
            Dist::Pareto { alpha, scale } => {
                Self::pareto(*alpha, *scale)?;
            }
            Dist::Exponential { rate } => {
                Self::exponential(*rate)?;
            }
            Dist::Weibull { shape, scale } => {
                if *shape <= 0.0 || *scale <= 0.0 {
                    return Err(Error::InvalidParameter("weibull needs shape, scale > 0".into()));
                }
            }
            Dist::Lognormal { sigma, .. } => {
                if *sigma <= 0.0 {
                    return Err(Error::InvalidParameter("lognormal needs sigma > 0".into()));
                }
            }
            Dist::Empirical { samples } => {
                Self::empirical(samples.clone())?;
            }
            Dist::Dirac { point } => {
                if !point.is_finite() || *point < 0.0 {
                    return Err(Error::InvalidParameter("dirac point must be finite and >= 0".into()));
                }
            }
            Dist::Mixture { a, b, p } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "mixture weight must lie in (0,1), got {p}"
                    )));
                }
                a.validate()?;
                b.validate()?;
            }
            Dist::MaxOf { a, b } | Dist::MinOf { a, b } => {
                a.validate()?;
                b.validate()?;
            }
            Dist::Shifted { inner, by } => {
                if *by < 0.0 {
                    return Err(Error::InvalidParameter("shift must be nonnegative".into()));
                }
                inner.validate()?;
            }
            Dist::PeterPaul | Dist::BigJumpLight | Dist::FromGrid { .. } => {}
        }
        Ok(())
    }

    /// P(X > x). Exactly 1 below the support, exactly 0 above a finite
    /// support bound.
    pub fn tail(&self, x: f64) -> f64 {
        match self {
            Dist::Pareto { alpha, scale } => {
                if x <= *scale {
                    1.0
                } else {
                    (scale / x).powf(*alpha)
                }
            }
            Dist::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Dist::PeterPaul => {
                if x < 2.0 {
                    1.0
                } else {
                    let k = x.log2().floor();
                    (0.5f64).powf(k)
                }
            }
            Dist::BigJumpLight => bigjump_tail(x),
            Dist::Weibull { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-(x / scale).powf(*shape)).exp()
                }
            }
            Dist::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    let z = (x.ln() - mu) / (sigma * std::f64::consts::SQRT_2);
                    0.5 * statrs::function::erf::erfc(z)
                }
            }
            Dist::Empirical { samples } => {
                // right-continuous step: #\{s > x\}/n
                let n = samples.len();
                let above = n - samples.partition_point(|s| *s <= x);
                above as f64 / n as f64
            }
            Dist::Dirac { point } => {
                if x < *point {
                    1.0
                } else {
                    0.0
                }
            }
            Dist::Mixture { a, b, p } => p * a.tail(x) + (1.0 - p) * b.tail(x),
            Dist::MaxOf { a, b } => {
                let (ta, tb) = (a.tail(x), b.tail(x));
                1.0 - (1.0 - ta) * (1.0 - tb)
            }
            Dist::MinOf { a, b } => a.tail(x) * b.tail(x),
            Dist::Shifted { inner, by } => inner.tail(x - by),
            Dist::FromGrid { grid } => grid.eval(x),
        }
    }

    /// Density where one exists in closed form.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Dist::Pareto { alpha, scale } => Some(if x < *scale {
                0.0
            } else {
                alpha * scale.powf(*alpha) / x.powf(alpha + 1.0)
            }),
            Dist::Exponential { rate } => Some(if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() }),
            Dist::BigJumpLight => Some(if x < 0.0 {
                0.0
            } else {
                bigjump_normalizer() * (-x).exp() / (1.0 + x * x)
            }),
            Dist::Weibull { shape, scale } => Some(if x <= 0.0 {
                0.0
            } else {
                let t = (x / scale).powf(shape - 1.0);
                shape / scale * t * (-(x / scale) * t).exp()
            }),
            Dist::Lognormal { mu, sigma } => Some(if x <= 0.0 {
                0.0
            } else {
                let z = (x.ln() - mu) / sigma;
                (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
            }),
            Dist::Mixture { a, b, p } => match (a.density(x), b.density(x)) {
                (Some(da), Some(db)) => Some(p * da + (1.0 - p) * db),
                _ => None,
            },
            _ => None,
        }
    }

    /// Atoms (location, mass) with location <= x_max, sorted by location.
    pub fn atoms_below(&self, x_max: f64) -> Vec<(f64, f64)> {
        match self {
            Dist::PeterPaul => {
                let mut out = Vec::new();
                for k in 1..=PETER_PAUL_MAX_K {
                    let loc = (2.0f64).powi(k as i32);
                    if loc > x_max {
                        break;
                    }
                    out.push((loc, (0.5f64).powi(k as i32)));
                }
                out
            }
            Dist::Empirical { samples } => {
                let n = samples.len() as f64;
                let mut out: Vec<(f64, f64)> = Vec::new();
                for &s in samples.iter().take_while(|s| **s <= x_max) {
                    match out.last_mut() {
                        Some((loc, m)) if *loc == s => *m += 1.0 / n,
                        _ => out.push((s, 1.0 / n)),
                    }
                }
                out
            }
            Dist::Dirac { point } => {
                if *point <= x_max {
                    vec![(*point, 1.0)]
                } else {
                    vec![]
                }
            }
            Dist::Mixture { a, b, p } => {
                let mut out: Vec<(f64, f64)> = a
                    .atoms_below(x_max)
                    .into_iter()
                    .map(|(l, m)| (l, p * m))
                    .collect();
                out.extend(b.atoms_below(x_max).into_iter().map(|(l, m)| (l, (1.0 - p) * m)));
                merge_atoms(out)
            }
            Dist::MaxOf { a, b } => {
                // P(max = v) = P(A = v) P(B <= v) + P(B = v) P(A < v)
                let mut out = Vec::new();
                for (l, m) in a.atoms_below(x_max) {
                    out.push((l, m * (1.0 - b.tail(l))));
                }
                for (l, m) in b.atoms_below(x_max) {
                    let a_lt = 1.0 - a.tail(l) - a.atom_mass_at(l);
                    out.push((l, m * a_lt));
                }
                merge_atoms(out)
            }
            Dist::MinOf { a, b } => {
                // P(min = v) = P(A = v) P(B > v) + P(B = v) P(A > v) + P(A = v) P(B = v)
                let mut out = Vec::new();
                for (l, m) in a.atoms_below(x_max) {
                    out.push((l, m * (b.tail(l) + b.atom_mass_at(l))));
                }
                for (l, m) in b.atoms_below(x_max) {
                    out.push((l, m * a.tail(l)));
                }
                merge_atoms(out)
            }
            Dist::Shifted { inner, by } => inner
                .atoms_below(x_max - by)
                .into_iter()
                .map(|(l, m)| (l + by, m))
                .collect(),
            Dist::FromGrid { grid } => grid
                .atoms()
                .iter()
                .copied()
                .filter(|(l, _)| *l <= x_max)
                .collect(),
            _ => vec![],
        }
    }

    fn atom_mass_at(&self, loc: f64) -> f64 {
        self.atoms_below(loc)
            .iter()
            .rev()
            .take_while(|(l, _)| *l >= loc)
            .map(|(_, m)| m)
            .sum()
    }

    /// Finite first moment when it exists.
    pub fn mean(&self) -> Option<f64> {
        match self {
            Dist::Pareto { alpha, scale } => (*alpha > 1.0).then(|| alpha * scale / (alpha - 1.0)),
            Dist::Exponential { rate } => Some(1.0 / rate),
            Dist::PeterPaul => None, // sum_k 2^k 2^-k diverges
            Dist::BigJumpLight => Some(bigjump_mean()),
            Dist::Weibull { shape, scale } => {
                Some(scale * statrs::function::gamma::gamma(1.0 + 1.0 / shape))
            }
            Dist::Lognormal { mu, sigma } => Some((mu + 0.5 * sigma * sigma).exp()),
            Dist::Empirical { samples } => {
                Some(samples.iter().sum::<f64>() / samples.len() as f64)
            }
            Dist::Dirac { point } => Some(*point),
            Dist::Mixture { a, b, p } => Some(p * a.mean()? + (1.0 - p) * b.mean()?),
            Dist::MaxOf { a, b } | Dist::MinOf { a, b } => {
                // E = ∫_0^∞ tail; both components need finite means.
                a.mean()?;
                b.mean()?;
                let f = |x: f64| self.tail(x);
                let mut acc = 0.0;
                let mut lo = 0.0;
                let mut hi = 64.0;
                loop {
                    acc += adaptive_simpson(&f, lo, hi, 1e-11).ok()?;
                    if self.tail(hi) * hi < 1e-9 || hi > 1e12 {
                        break;
                    }
                    lo = hi;
                    hi *= 4.0;
                }
                Some(acc)
            }
            Dist::Shifted { inner, by } => Some(inner.mean()? + by),
            Dist::FromGrid { grid } => grid.integral_with_remainder().ok(),
        }
    }

    /// (inf of support, sup of support when finite).
    pub fn support(&self) -> (f64, Option<f64>) {
        match self {
            Dist::Pareto { scale, .. } => (*scale, None),
            Dist::Exponential { .. } | Dist::BigJumpLight => (0.0, None),
            Dist::PeterPaul => (2.0, None),
            Dist::Weibull { .. } | Dist::Lognormal { .. } => (0.0, None),
            Dist::Empirical { samples } => (samples[0], Some(*samples.last().unwrap())),
            Dist::Dirac { point } => (*point, Some(*point)),
            Dist::Mixture { a, b, .. } => {
                let (la, ha) = a.support();
                let (lb, hb) = b.support();
                (la.min(lb), ha.zip(hb).map(|(x, y)| x.max(y)))
            }
            Dist::MaxOf { a, b } => {
                let (la, ha) = a.support();
                let (lb, hb) = b.support();
                (la.max(lb), ha.zip(hb).map(|(x, y)| x.max(y)))
            }
            Dist::MinOf { a, b } => {
                let (la, ha) = a.support();
                let (lb, hb) = b.support();
                let hi = match (ha, hb) {
                    (None, None) => None,
                    (Some(h), None) | (None, Some(h)) => Some(h),
                    (Some(x), Some(y)) => Some(x.min(y)),
                };
                (la.min(lb), hi)
            }
            Dist::Shifted { inner, by } => {
                let (l, h) = inner.support();
                (l + by, h.map(|v| v + by))
            }
            Dist::FromGrid { .. } => (0.0, None),
        }
    }

    /// Whether the law belongs to the working family: nonnegative with
    /// unbounded support. Bounded laws are admitted as combinator inputs
    /// only; the classifier refuses them.
    pub fn has_unbounded_support(&self) -> bool {
        self.support().1.is_none()
    }

    /// One seeded draw.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Dist::Pareto { alpha, scale } => {
                let u: f64 = rng.gen::<f64>();
                scale * (1.0 - u).powf(-1.0 / alpha)
            }
            Dist::Exponential { rate } => sample_exp(rng) / rate,
            Dist::PeterPaul => {
                let mut k = 1;
                while k < PETER_PAUL_MAX_K && rng.gen::<f64>() < 0.5 {
                    k += 1;
                }
                (2.0f64).powi(k as i32)
            }
            Dist::BigJumpLight => loop {
                let x = sample_exp(rng);
                if rng.gen::<f64>() * (1.0 + x * x) <= 1.0 {
                    return x;
                }
            },
            Dist::Weibull { shape, scale } => scale * sample_exp(rng).powf(1.0 / shape),
            Dist::Lognormal { mu, sigma } => {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                (mu + sigma * z).exp()
            }
            Dist::Empirical { samples } => samples[rng.gen_range(0..samples.len())],
            Dist::Dirac { point } => *point,
            Dist::Mixture { a, b, p } => {
                if rng.gen::<f64>() < *p {
                    a.sample(rng)
                } else {
                    b.sample(rng)
                }
            }
            Dist::MaxOf { a, b } => a.sample(rng).max(b.sample(rng)),
            Dist::MinOf { a, b } => a.sample(rng).min(b.sample(rng)),
            Dist::Shifted { inner, by } => inner.sample(rng) + by,
            Dist::FromGrid { grid } => grid.sample(rng),
        }
    }

    /// One draw conditioned on X > t. Exact for catalog laws; falls back to
    /// rejection from the unconditional sampler (None if the budget runs out).
    pub fn sample_above<R: Rng>(&self, t: f64, rng: &mut R) -> Option<f64> {
        if self.tail(t) >= 1.0 {
            return Some(self.sample(rng));
        }
        match self {
            Dist::Pareto { alpha, scale } => {
                let base = t.max(*scale);
                let u: f64 = rng.gen::<f64>();
                Some(base * (1.0 - u).powf(-1.0 / alpha))
            }
            Dist::Exponential { rate } => Some(t.max(0.0) + sample_exp(rng) / rate),
            Dist::PeterPaul => {
                let mut k = (t.log2().floor() as u32 + 1).max(1);
                while k < PETER_PAUL_MAX_K && rng.gen::<f64>() < 0.5 {
                    k += 1;
                }
                Some((2.0f64).powi(k as i32))
            }
            Dist::BigJumpLight => {
                // proposal t + Exp(1); accept with (1+t²)/(1+y²)
                let t = t.max(0.0);
                for _ in 0..100_000 {
                    let y = t + sample_exp(rng);
                    if rng.gen::<f64>() * (1.0 + y * y) <= 1.0 + t * t {
                        return Some(y);
                    }
                }
                None
            }
            Dist::Weibull { shape, scale } => {
                let base = (t.max(0.0) / scale).powf(*shape);
                Some(scale * (base + sample_exp(rng)).powf(1.0 / shape))
            }
            Dist::MinOf { a, b } => {
                // min > t iff both > t
                Some(a.sample_above(t, rng)?.min(b.sample_above(t, rng)?))
            }
            Dist::Shifted { inner, by } => Some(inner.sample_above(t - by, rng)? + by),
            Dist::FromGrid { grid } => grid.sample_above(t, rng),
            _ => {
                // generic rejection; fine while F(t) is not too deep
                for _ in 0..1_000_000 {
                    let x = self.sample(rng);
                    if x > t {
                        return Some(x);
                    }
                }
                None
            }
        }
    }
}

/// Unit-rate exponential draw; uses the open-interval transform so ln(0)
/// cannot occur.
fn sample_exp<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen::<f64>();
    -(1.0 - u).ln()
}

fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (l, m) in atoms {
        if m <= 0.0 {
            continue;
        }
        match out.last_mut() {
            Some((loc, mass)) if *loc == l => *mass += m,
            _ => out.push((l, m)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_tails_match_closed_forms() {
        let p = Dist::pareto(1.0, 1.0).unwrap();
        assert_eq!(p.tail(10.0), 0.1);
        assert_eq!(p.tail(0.5), 1.0);

        let pp = Dist::PeterPaul;
        assert_eq!(pp.tail(5.0), 0.25); // 5 in [4,8) -> 2^-2
        assert_eq!(pp.tail(1.5), 1.0);
        assert_eq!(pp.tail(2.0), 0.5);

        let e = Dist::exponential(1.0).unwrap();
        assert!((e.tail(1.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn normalizer_matches_reported_value() {
        let c = bigjump_normalizer();
        assert!(c > 1.608 && c < 1.610, "C = {c}");
    }

    #[test]
    fn peter_paul_atoms_sum_to_one() {
        let atoms = Dist::PeterPaul.atoms_below(f64::INFINITY);
        let total: f64 = atoms.iter().map(|(_, m)| m).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(atoms[0], (2.0, 0.5));
        assert_eq!(atoms[1], (4.0, 0.25));
    }

    #[test]
    fn mixture_rejects_bad_weight() {
        let a = Dist::exponential(1.0).unwrap();
        let b = Dist::pareto(1.0, 1.0).unwrap();
        assert!(Dist::mixture(a.clone(), b.clone(), 0.0).is_err());
        assert!(Dist::mixture(a, b, 1.0).is_err());
    }

    #[test]
    fn mixture_tail_is_convex_combination() {
        let a = Dist::pareto(1.0, 1.0).unwrap();
        let b = Dist::exponential(1.0).unwrap();
        let m = Dist::mixture(a.clone(), b.clone(), 0.5).unwrap();
        let x = 10.0;
        let want = 0.5 * 0.1 + 0.5 * (-10.0f64).exp();
        assert!((m.tail(x) - want).abs() < 1e-15);
        let lo = a.tail(x).min(b.tail(x));
        let hi = a.tail(x).max(b.tail(x));
        assert!(m.tail(x) >= lo && m.tail(x) <= hi);
    }

    #[test]
    fn min_max_combinator_tails() {
        let e = Dist::exponential(1.0).unwrap();
        let m = Dist::min_of(e.clone(), e.clone());
        assert!((m.tail(3.0) - (-6.0f64).exp()).abs() < 1e-15);

        let p = Dist::pareto(1.0, 1.0).unwrap();
        let mx = Dist::max_of(p.clone(), p);
        assert!((mx.tail(10.0) - 0.19).abs() < 1e-12);

        let ident = Dist::max_of(e.clone(), Dist::Dirac { point: 0.0 });
        for x in [0.5, 1.0, 7.0] {
            assert!((ident.tail(x) - e.tail(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn empirical_tail_is_right_continuous_step() {
        let d = Dist::empirical(vec![1.0, 2.0, 2.0, 5.0]).unwrap();
        assert_eq!(d.tail(0.9), 1.0);
        assert_eq!(d.tail(1.0), 0.75);
        assert_eq!(d.tail(2.0), 0.25);
        assert_eq!(d.tail(5.0), 0.0);
        assert_eq!(d.atoms_below(10.0), vec![(1.0, 0.25), (2.0, 0.5), (5.0, 0.25)]);
    }

    #[test]
    fn descriptor_round_trip() {
        let json = r#"{"kind":"pareto","alpha":1.0}"#;
        let d: Dist = serde_json::from_str(json).unwrap();
        d.validate().unwrap();
        assert_eq!(d.tail(10.0), 0.1); // default scale 1
        let json = r#"{"kind":"mixture","p":0.5,
                       "a":{"kind":"pareto","alpha":2.0,"scale":1.0},
                       "b":{"kind":"exponential","rate":1.0}}"#;
        let d: Dist = serde_json::from_str(json).unwrap();
        d.validate().unwrap();
    }

    #[test]
    fn bounded_laws_are_flagged() {
        assert!(!Dist::Dirac { point: 1.0 }.has_unbounded_support());
        assert!(!Dist::empirical(vec![1.0, 2.0]).unwrap().has_unbounded_support());
        assert!(Dist::PeterPaul.has_unbounded_support());
        assert!(Dist::min_of(
            Dist::pareto(1.0, 1.0).unwrap(),
            Dist::pareto(1.0, 1.0).unwrap()
        )
        .has_unbounded_support());
    }
}
