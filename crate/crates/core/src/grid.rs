//! Discretized tail functions.
//!
//! A [`TailGrid`] stores survival probabilities on a fixed grid: linear
//! spacing on [0,1] (step 1/64) joined to a geometric segment (ratio 1.02)
//! reaching `x_max`. Atoms are carried alongside so step tails stay exact
//! under Stieltjes integration and between-grid evaluation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::Dist;
use crate::error::{Error, Result};

fn default_linear_step() -> f64 {
    1.0 / 64.0
}

fn default_ratio() -> f64 {
    1.02
}

/// Grid layout parameters. Two grids are compatible iff their specs are equal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_max: f64,
    #[serde(default = "default_linear_step")]
    pub linear_step: f64,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
}

impl GridSpec {
    pub fn new(x_max: f64) -> Self {
        GridSpec {
            x_max,
            linear_step: default_linear_step(),
            ratio: default_ratio(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid x_max must be positive, got {}",
                self.x_max
            )));
        }
        if !(self.ratio > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grid ratio must exceed 1, got {}",
                self.ratio
            )));
        }
        if !(self.linear_step > 0.0) {
            return Err(Error::InvalidParameter("grid linear step must be positive".into()));
        }
        if self.points().len() < 64 {
            return Err(Error::InvalidParameter(
                "grid must have at least 64 points; raise x_max or shrink the step".into(),
            ));
        }
        Ok(())
    }

    /// Grid points: 0, step, ..., then geometric from 1 until x_max is covered.
    pub fn points(&self) -> Vec<f64> {
        let mut xs = Vec::new();
        if self.x_max <= 1.0 {
            let step = (self.linear_step).min(self.x_max / 64.0);
            let mut x = 0.0;
            while x < self.x_max {
                xs.push(x);
                x += step;
            }
            xs.push(self.x_max);
            return xs;
        }
        let mut x = 0.0;
        while x < 1.0 - 0.5 * self.linear_step {
            xs.push(x);
            x += self.linear_step;
        }
        let mut g = 1.0;
        loop {
            xs.push(g);
            if g >= self.x_max {
                break;
            }
            g *= self.ratio;
        }
        xs
    }
}

/// A survival function sampled on a [`GridSpec`], with atoms carried exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailGrid {
    spec: GridSpec,
    xs: Vec<f64>,
    vals: Vec<f64>,
    /// (location, mass), sorted by location, all locations <= grid end.
    atoms: Vec<(f64, f64)>,
}

impl TailGrid {
    pub fn new(spec: GridSpec, vals: Vec<f64>, atoms: Vec<(f64, f64)>) -> Result<Self> {
        let xs = spec.points();
        if vals.len() != xs.len() {
            return Err(Error::InvalidParameter(format!(
                "value count {} does not match grid point count {}",
                vals.len(),
                xs.len()
            )));
        }
        let vals: Vec<f64> = vals.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(TailGrid { spec, xs, vals, atoms })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_end(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Mass of atoms strictly beyond x.
    pub fn atom_tail(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .rev()
            .take_while(|(l, _)| *l > x)
            .map(|(_, m)| m)
            .sum()
    }

    /// Continuous part of the tail at grid index i.
    fn cont_at(&self, i: usize) -> f64 {
        (self.vals[i] - self.atom_tail(self.xs[i])).max(0.0)
    }

    /// Tail at an arbitrary point. The continuous part interpolates
    /// log-linearly between grid values (exact for exponential tails, tight
    /// for power tails at ratio-1.02 spacing); atoms contribute their exact
    /// step. Beyond the grid end the last value is held.
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        let n = self.xs.len();
        if x >= self.xs[n - 1] {
            return self.vals[n - 1];
        }
        let i = self.xs.partition_point(|g| *g <= x) - 1;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (c0, c1) = (self.cont_at(i), self.cont_at(i + 1));
        let t = (x - x0) / (x1 - x0);
        let c = interp_cont(c0, c1, t);
        (c + self.atom_tail(x)).min(1.0)
    }

    /// Quadrature cells for Stieltjes integration against this tail:
    /// the continuous part of each grid cell is split into midpoint
    /// sub-cells (more where cells are wide), atoms are returned exactly.
    /// Returns (mids, masses) for the continuous part.
    pub fn quad_cells(&self) -> (Vec<f64>, Vec<f64>) {
        let mut mids = Vec::new();
        let mut masses = Vec::new();
        for i in 0..self.xs.len() - 1 {
            let (x0, x1) = (self.xs[i], self.xs[i + 1]);
            let (c0, c1) = (self.cont_at(i), self.cont_at(i + 1));
            if c0 <= 0.0 {
                break; // continuous mass exhausted
            }
            let width = x1 - x0;
            let nsub = ((width / 0.25).ceil() as usize).clamp(4, 64);
            let mut prev = c0;
            for j in 1..=nsub {
                let t = j as f64 / nsub as f64;
                let c = if j == nsub { c1 } else { interp_cont(c0, c1, t) };
                let mass = prev - c;
                if mass > 0.0 {
                    let tm = (j as f64 - 0.5) / nsub as f64;
                    mids.push(x0 + width * tm);
                    masses.push(mass);
                }
                prev = c;
            }
        }
        (mids, masses)
    }

    /// ∫_0^∞ tail dx over the grid plus a fitted extrapolation remainder.
    /// Errors when the fitted decay is too slow to integrate.
    pub fn integral_with_remainder(&self) -> Result<f64> {
        let mut acc = self.tail_remainder()?;
        for i in (0..self.xs.len() - 1).rev() {
            acc += integrate_cell(
                self.xs[i],
                self.xs[i + 1],
                self.vals[i],
                self.vals[i + 1],
            );
        }
        Ok(acc)
    }

    /// Extrapolated ∫_{x_end}^∞ tail dx from the decay measured over the
    /// last decade: remainder = v_end · x_end / (α̂ − 1) for a fitted local
    /// power-law exponent α̂ (which also covers exponential decay, where
    /// α̂ ≈ λ·x_end and the remainder is negligible anyway).
    pub fn tail_remainder(&self) -> Result<f64> {
        let n = self.xs.len();
        let v_end = self.vals[n - 1];
        if v_end <= 0.0 {
            return Ok(0.0);
        }
        let x_end = self.xs[n - 1];
        let x_lo = x_end / 10.0;
        let start = self.xs.partition_point(|g| *g < x_lo.max(f64::MIN_POSITIVE));
        let (x0, v0) = (self.xs[start], self.vals[start]);
        if !(v0 > v_end * (1.0 + 1e-12)) {
            // flat over the decade: treat as non-integrable
            return Err(Error::NonIntegrableTail { alpha_hat: 0.0 });
        }
        let alpha_hat = -(v_end.ln() - v0.ln()) / (x_end.ln() - x0.ln());
        if alpha_hat <= 1.05 {
            return Err(Error::NonIntegrableTail { alpha_hat });
        }
        Ok(v_end * x_end / (alpha_hat - 1.0))
    }

    /// Tail-integrated distribution: x ↦ min(1, ∫_x^∞ tail(y) dy),
    /// cumulative trapezoid from the right plus the fitted remainder.
    pub fn tail_integrated(&self) -> Result<TailGrid> {
        let rem = self.tail_remainder()?;
        let n = self.xs.len();
        let mut out = vec![0.0; n];
        let mut acc = rem;
        out[n - 1] = acc.min(1.0);
        for i in (0..n - 1).rev() {
            acc += integrate_cell(
                self.xs[i],
                self.xs[i + 1],
                self.vals[i],
                self.vals[i + 1],
            );
            out[i] = acc.min(1.0);
        }
        TailGrid::new(self.spec, out, vec![])
    }

    /// Inverse-transform draw by bisection on the evaluated tail.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen::<f64>();
        self.invert_tail(u * self.vals[0].max(f64::MIN_POSITIVE).min(1.0))
    }

    /// Draw conditioned on X > t.
    pub fn sample_above<R: Rng>(&self, t: f64, rng: &mut R) -> Option<f64> {
        let vt = self.eval(t);
        if vt <= 0.0 {
            return None;
        }
        let u: f64 = rng.gen::<f64>();
        Some(self.invert_tail(u * vt).max(t))
    }

    fn invert_tail(&self, v: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.x_end());
        if self.eval(hi) >= v {
            return hi;
        }
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) > v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Restrict to a coarser spec whose points are a prefix of this grid's
    /// (same linear step and ratio, smaller x_max).
    pub fn truncate_to(&self, spec: &GridSpec) -> Result<TailGrid> {
        if spec.linear_step != self.spec.linear_step || spec.ratio != self.spec.ratio {
            return Err(Error::GridMismatch);
        }
        let pts = spec.points();
        if pts.len() > self.xs.len() || self.xs[..pts.len()] != pts[..] {
            return Err(Error::GridMismatch);
        }
        let atoms = self
            .atoms
            .iter()
            .copied()
            .filter(|(l, _)| *l <= pts[pts.len() - 1])
            .collect();
        TailGrid::new(*spec, self.vals[..pts.len()].to_vec(), atoms)
    }

    /// Interpret a defective tail (vals[0] < 1) as a proper law with the
    /// missing mass sitting at 0. Required before feeding derived tails
    /// (supremum laws, integrated tails) to the class probes.
    pub fn with_zero_atom(&self) -> TailGrid {
        let recorded: f64 = self
            .atoms
            .iter()
            .filter(|(l, _)| *l == 0.0)
            .map(|(_, m)| m)
            .sum();
        let deficit = (1.0 - self.vals[0] - recorded).max(0.0);
        if deficit <= 1e-15 {
            return self.clone();
        }
        let mut atoms = self.atoms.clone();
        atoms.insert(0, (0.0, deficit));
        TailGrid::new(self.spec, self.vals.clone(), atoms).expect("same grid layout")
    }

    /// CSV serialization: header `x,tail`, shortest round-trip decimals.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,tail\n");
        for (x, v) in self.xs.iter().zip(&self.vals) {
            s.push_str(&format!("{x},{v}\n"));
        }
        s
    }
}

/// Trapezoid over one grid cell, subdivided with
/// log-linearly interpolated values (panel width <= 1/16). Wide geometric
/// cells would otherwise lose ~h²/12 relative accuracy on exponential tails.
fn integrate_cell(x0: f64, x1: f64, v0: f64, v1: f64) -> f64 {
    let width = x1 - x0;
    if width <= 0.0 || v0 <= 0.0 {
        return 0.0;
    }
    let nsub = ((width / 0.0625).ceil() as usize).clamp(1, 512);
    let mut acc = 0.0;
    let mut prev = v0;
    for j in 1..=nsub {
        let t = j as f64 / nsub as f64;
        let v = if j == nsub { v1 } else { interp_cont(v0, v1, t) };
        acc += 0.5 * (prev + v) * (width / nsub as f64);
        prev = v;
    }
    acc
}

fn interp_cont(c0: f64, c1: f64, t: f64) -> f64 {
    if c0 > 0.0 && c1 > 0.0 {
        c0 * (c1 / c0).powf(t)
    } else {
        c0 + (c1 - c0) * t
    }
}

/// Precomputed evaluator for hot loops: continuous values and atom suffix
/// sums are materialized once so each `eval` is a pair of binary searches.
pub(crate) struct TailEval<'a> {
    xs: &'a [f64],
    cont: Vec<f64>,
    atom_locs: Vec<f64>,
    /// atom_suffix[i] = total mass of atoms with index >= i
    atom_suffix: Vec<f64>,
}

impl<'a> TailEval<'a> {
    pub fn new(grid: &'a TailGrid) -> Self {
        let atom_locs: Vec<f64> = grid.atoms.iter().map(|(l, _)| *l).collect();
        let mut atom_suffix = vec![0.0; atom_locs.len() + 1];
        for i in (0..atom_locs.len()).rev() {
            atom_suffix[i] = atom_suffix[i + 1] + grid.atoms[i].1;
        }
        let mut ev = TailEval {
            xs: &grid.xs,
            cont: Vec::new(),
            atom_locs,
            atom_suffix,
        };
        ev.cont = grid
            .xs
            .iter()
            .zip(&grid.vals)
            .map(|(x, v)| (v - ev.atom_tail(*x)).max(0.0))
            .collect();
        ev
    }

    pub fn atom_tail(&self, x: f64) -> f64 {
        let i = self.atom_locs.partition_point(|l| *l <= x);
        self.atom_suffix[i]
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        (self.cont_eval(x) + self.atom_tail(x)).min(1.0)
    }

    /// Continuous part only, interpolated.
    pub fn cont_eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return self.cont[0];
        }
        let n = self.xs.len();
        if x >= self.xs[n - 1] {
            return self.cont[n - 1];
        }
        let i = self.xs.partition_point(|g| *g <= x) - 1;
        let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        interp_cont(self.cont[i], self.cont[i + 1], t)
    }
}

/// Sample a distribution's tail onto a grid; atoms within the grid range are
/// carried along exactly.
pub fn discretize(dist: &Dist, spec: &GridSpec) -> Result<TailGrid> {
    spec.validate()?;
    let xs = spec.points();
    let vals: Vec<f64> = xs.iter().map(|x| dist.tail(*x)).collect();
    let atoms = dist.atoms_below(*xs.last().unwrap());
    TailGrid::new(*spec, vals, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_layout() {
        let spec = GridSpec::new(20.0);
        let xs = spec.points();
        assert_eq!(xs[0], 0.0);
        assert!((xs[1] - 1.0 / 64.0).abs() < 1e-15);
        assert_eq!(xs[64], 1.0);
        assert!((xs[65] / xs[64] - 1.02).abs() < 1e-12);
        assert!(*xs.last().unwrap() >= 20.0);
        spec.validate().unwrap();
    }

    #[test]
    fn discretize_exponential_matches_tail() {
        let e = Dist::exponential(1.0).unwrap();
        let g = discretize(&e, &GridSpec::new(20.0)).unwrap();
        for (x, v) in g.xs().iter().zip(g.vals()) {
            assert!((v - (-x).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn discretize_carries_peter_paul_atoms() {
        let g = discretize(&Dist::PeterPaul, &GridSpec::new(64.0)).unwrap();
        let locs: Vec<f64> = g.atoms().iter().map(|(l, _)| *l).collect();
        assert_eq!(locs, vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
        // step tail reconstructs exactly between grid points
        assert_eq!(g.eval(5.0), 0.25);
        assert_eq!(g.eval(31.9), 0.0625);
        assert_eq!(g.eval(32.0), 0.03125);
    }

    #[test]
    fn discretize_pareto_probe() {
        let g = discretize(&Dist::pareto(1.0, 1.0).unwrap(), &GridSpec::new(100.0)).unwrap();
        assert!((g.eval(10.0) - 0.1).abs() < 1e-5);
    }

    #[test]
    fn tail_integrated_closed_forms() {
        // Exp(1): integrated tail is e^{-x}
        let e = discretize(&Dist::exponential(1.0).unwrap(), &GridSpec::new(60.0)).unwrap();
        let fi = e.tail_integrated().unwrap();
        for (x, v) in fi.xs().iter().zip(fi.vals()).step_by(37) {
            if *x > 0.5 && *x < 30.0 {
                assert!(
                    (v - (-x).exp()).abs() / (-x).exp() < 1e-3,
                    "x={x} v={v} want={}",
                    (-x).exp()
                );
            }
        }
        // Pareto(2,1): integrated tail is 1/x for x >= 1
        let p = discretize(&Dist::pareto(2.0, 1.0).unwrap(), &GridSpec::new(1e4)).unwrap();
        let fi = p.tail_integrated().unwrap();
        for (x, v) in fi.xs().iter().zip(fi.vals()).step_by(53) {
            if *x > 2.0 {
                assert!((v - 1.0 / x).abs() * x < 1e-3, "x={x} v={v}");
            }
        }
        assert!(fi.vals()[0] <= 1.0);
    }

    #[test]
    fn non_integrable_tail_is_flagged() {
        let p = discretize(&Dist::pareto(1.0, 1.0).unwrap(), &GridSpec::new(1e4)).unwrap();
        match p.tail_integrated() {
            Err(Error::NonIntegrableTail { alpha_hat }) => {
                assert!((alpha_hat - 1.0).abs() < 0.05)
            }
            other => panic!("expected non-integrable flag, got {other:?}"),
        }
    }

    #[test]
    fn quad_cell_masses_telescope() {
        let e = discretize(&Dist::exponential(1.0).unwrap(), &GridSpec::new(30.0)).unwrap();
        let (_, masses) = e.quad_cells();
        let total: f64 = masses.iter().sum();
        // continuous mass on [0, x_end] = 1 - tail(x_end)
        assert!((total - (1.0 - e.vals()[e.len() - 1])).abs() < 1e-12);
    }
}
