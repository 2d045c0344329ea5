//! Convergence of independent-coordinate Dirichlet forms to the Poisson and
//! Brownian forms on `[0, 1]`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::McEstimate;

const CDF_CELLS: usize = 4096;

/// Reference measure on `[0, 1]` given by a density.
#[derive(Clone)]
pub struct Density {
    kind: DensityKind,
    /// Cumulative masses on a uniform grid, normalized.
    cdf: Vec<f64>,
}

#[derive(Clone)]
enum DensityKind {
    Uniform,
    Linear,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Density {
    pub fn uniform() -> Self {
        Density {
            kind: DensityKind::Uniform,
            cdf: Vec::new(),
        }
    }

    /// Density `2x`.
    pub fn linear() -> Self {
        Density {
            kind: DensityKind::Linear,
            cdf: Vec::new(),
        }
    }

    /// Arbitrary nonnegative density, normalized numerically.
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let h = 1.0 / CDF_CELLS as f64;
        let mut cdf = Vec::with_capacity(CDF_CELLS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..CDF_CELLS {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let vals = [f(a), f(0.5 * (a + b)), f(b)];
            if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::BadDensity(format!(
                    "density is negative or not finite near {a}"
                )));
            }
            acc += h * (vals[0] + 4.0 * vals[1] + vals[2]) / 6.0;
            cdf.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::BadDensity(format!(
                "total mass {acc} cannot be normalized"
            )));
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        Ok(Density {
            kind: DensityKind::Custom(Arc::new(move |x| f(x) / acc)),
            cdf,
        })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DensityKind::Uniform => "uniform",
            DensityKind::Linear => "linear",
            DensityKind::Custom(_) => "custom",
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match &self.kind {
            DensityKind::Uniform => 1.0,
            DensityKind::Linear => 2.0 * x,
            DensityKind::Custom(f) => f(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self.kind {
            DensityKind::Uniform => x,
            DensityKind::Linear => x * x,
            DensityKind::Custom(_) => {
                let pos = x * CDF_CELLS as f64;
                let i = (pos.floor() as usize).min(CDF_CELLS - 1);
                let frac = pos - i as f64;
                self.cdf[i] + frac * (self.cdf[i + 1] - self.cdf[i])
            }
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self.kind {
            DensityKind::Uniform => u,
            DensityKind::Linear => u.sqrt(),
            DensityKind::Custom(_) => {
                let i = self.cdf.partition_point(|&c| c < u).clamp(1, CDF_CELLS);
                let (lo, hi) = (self.cdf[i - 1], self.cdf[i]);
                let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
                (i as f64 - 1.0 + frac) / CDF_CELLS as f64
            }
        }
    }

    /// `int_0^1 g dM` by composite Simpson.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let m = 2048;
        let h = 1.0 / m as f64;
        let mut acc = g(0.0) * self.pdf(0.0) + g(1.0) * self.pdf(1.0);
        for k in 1..m {
            let x = k as f64 * h;
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(x) * self.pdf(x);
        }
        acc * h / 3.0
    }
}

/// Partition of `[0, 1]` into `N` cells with masses and anchors.
#[derive(Clone, Debug)]
pub struct PartitionScheme {
    pub density: Density,
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub anchors: Vec<f64>,
    /// `N * sup_k p_k`.
    pub spread_constant: f64,
}

impl PartitionScheme {
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// `|sum_k p_k g(zeta_k) - int g dM|`.
    pub fn riemann_gap(&self, g: impl Fn(f64) -> f64) -> f64 {
        let sum: f64 = self
            .masses
            .iter()
            .zip(&self.anchors)
            .map(|(p, z)| p * g(*z))
            .sum();
        (sum - self.density.integrate(g)).abs()
    }

    /// Largest Riemann gap over a fixed family of smooth test functions.
    pub fn riemann_check(&self) -> f64 {
        let family: [fn(f64) -> f64; 5] = [
            |_| 1.0,
            |x| x,
            |x| x * x,
            |x| (std::f64::consts::PI * x).sin(),
            |x| (2.0 * std::f64::consts::PI * x).cos(),
        ];
        family
            .iter()
            .map(|g| self.riemann_gap(g))
            .fold(0.0, f64::max)
    }
}

/// Equal-mass cells with anchors at the mass midpoints.
pub fn poisson_scheme(density: &Density, n: usize) -> Result<PartitionScheme> {
    if n == 0 {
        return Err(Error::BadParameters(
            "a partition needs at least one cell".into(),
        ));
    }
    let nf = n as f64;
    let edges: Vec<f64> = (0..=n).map(|k| density.quantile(k as f64 / nf)).collect();
    let masses: Vec<f64> = edges
        .windows(2)
        .map(|w| density.cdf(w[1]) - density.cdf(w[0]))
        .collect();
    let anchors = (0..n)
        .map(|k| density.quantile((k as f64 + 0.5) / nf))
        .collect();
    let spread_constant = nf * masses.iter().copied().fold(0.0, f64::max);
    Ok(PartitionScheme {
        density: density.clone(),
        edges,
        masses,
        anchors,
        spread_constant,
    })
}

/// Finite point configuration on `[0, 1]` with multiplicities.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PointConfiguration {
    points: Vec<(f64, u64)>,
}

impl PointConfiguration {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Merges repeated locations and drops zero multiplicities.
    pub fn new(points: impl IntoIterator<Item = (f64, u64)>) -> Self {
        let mut c = Self::empty();
        for (x, m) in points {
            c.add(x, m);
        }
        c
    }

    pub fn add(&mut self, x: f64, m: u64) {
        if m == 0 {
            return;
        }
        match self.points.iter_mut().find(|(y, _)| *y == x) {
            Some((_, k)) => *k += m,
            None => self.points.push((x, m)),
        }
    }

    pub fn with_point(&self, x: f64) -> Self {
        let mut c = self.clone();
        c.add(x, 1);
        c
    }

    pub fn points(&self) -> &[(f64, u64)] {
        &self.points
    }

    pub fn total_mass(&self) -> u64 {
        self.points.iter().map(|(_, m)| m).sum()
    }

    /// `omega([a, b))`.
    pub fn count_in(&self, a: f64, b: f64) -> u64 {
        self.points
            .iter()
            .filter(|(x, _)| (a..b).contains(x))
            .map(|(_, m)| m)
            .sum()
    }

    /// Total variation distance: sum of multiplicity differences.
    pub fn tv_distance(&self, other: &Self) -> u64 {
        let mut d = 0;
        for (x, m) in &self.points {
            let k = other.points.iter().find(|(y, _)| y == x).map_or(0, |p| p.1);
            d += m.abs_diff(k);
        }
        for (y, k) in &other.points {
            if !self.points.iter().any(|(x, _)| x == y) {
                d += k;
            }
        }
        d
    }
}

/// Functionals of point configurations.
#[derive(Clone)]
pub enum PointFunctional {
    Constant(f64),
    /// `omega(Y)`.
    TotalMass,
    /// `min(omega(Y), cap)`.
    CappedMass(u64),
    /// `omega([a, b))`.
    CountIn(f64, f64),
    Custom(Arc<dyn Fn(&PointConfiguration) -> f64 + Send + Sync>),
}

impl fmt::Debug for PointFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointFunctional::Constant(c) => write!(f, "Constant({c})"),
            PointFunctional::TotalMass => f.write_str("TotalMass"),
            PointFunctional::CappedMass(c) => write!(f, "CappedMass({c})"),
            PointFunctional::CountIn(a, b) => write!(f, "CountIn({a}, {b})"),
            PointFunctional::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl PointFunctional {
    pub fn eval(&self, w: &PointConfiguration) -> f64 {
        match self {
            PointFunctional::Constant(c) => *c,
            PointFunctional::TotalMass => w.total_mass() as f64,
            PointFunctional::CappedMass(cap) => w.total_mass().min(*cap) as f64,
            PointFunctional::CountIn(a, b) => w.count_in(*a, *b) as f64,
            PointFunctional::Custom(f) => f(w),
        }
    }

    /// Weight `w(x)` when `F = sum_x w(x) omega({x})` plus a constant.
    pub fn linear_weight(&self) -> Option<Box<dyn Fn(f64) -> f64 + '_>> {
        match self {
            PointFunctional::Constant(_) => Some(Box::new(|_| 0.0)),
            PointFunctional::TotalMass => Some(Box::new(|_| 1.0)),
            PointFunctional::CountIn(a, b) => {
                Some(Box::new(move |x| ((*a..*b).contains(&x)) as u8 as f64))
            }
            _ => None,
        }
    }

    /// `E[int |D_x F|^2 dM]` where known in closed form.
    pub fn analytic_limit(&self, density: &Density) -> Option<f64> {
        match self {
            PointFunctional::Constant(_) => Some(0.0),
            PointFunctional::TotalMass => Some(1.0),
            PointFunctional::CountIn(a, b) => Some(density.cdf(*b) - density.cdf(*a)),
            // D_x F = 1 exactly when omega(Y) < cap; omega(Y) is Poisson(1).
            PointFunctional::CappedMass(cap) => {
                let mut term = (-1f64).exp();
                let mut acc = 0.0;
                for k in 0..*cap {
                    acc += term;
                    term /= (k + 1) as f64;
                }
                Some(acc)
            }
            PointFunctional::Custom(_) => None,
        }
    }
}

/// Value of an approximating form with its error budget.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormValue {
    pub value: f64,
    /// Monte-Carlo standard error; zero for exact evaluations.
    pub mc_se: f64,
    /// Largest Poisson tail mass dropped by truncation.
    pub truncated_mass: f64,
}

fn poisson_pmf_truncated(p: f64, tail_eps: f64) -> Result<Vec<f64>> {
    const MAX_TERMS: usize = 10_000;
    if tail_eps < 1e-14 {
        return Err(Error::TruncationFailure(format!(
            "tail mass {tail_eps} is below double precision resolution"
        )));
    }
    let mut pmf = vec![(-p).exp()];
    let mut acc = pmf[0];
    while 1.0 - acc >= tail_eps {
        if pmf.len() >= MAX_TERMS || pmf.last() == Some(&0.0) {
            return Err(Error::TruncationFailure(format!(
                "tail mass {} of Poisson({p}) does not drop below {tail_eps}",
                1.0 - acc
            )));
        }
        let k = pmf.len() as f64;
        let next = pmf[pmf.len() - 1] * p / k;
        acc += next;
        pmf.push(next);
    }
    Ok(pmf)
}

fn check_eps(tail_eps: f64) -> Result<()> {
    if tail_eps > 0.0 && tail_eps < 1.0 {
        Ok(())
    } else {
        Err(Error::BadParameters(format!(
            "tail_eps must lie in (0, 1), got {tail_eps}"
        )))
    }
}

fn configuration(anchors: &[f64], counts: &[u64]) -> PointConfiguration {
    PointConfiguration::new(anchors.iter().copied().zip(counts.iter().copied()))
}

/// `sum_l mu(l) (F(l) - sum_tau mu(tau) F(tau))^2` at a fixed `omega_(m)`.
fn coordinate_variance(
    f: &PointFunctional,
    anchors: &[f64],
    counts: &mut [u64],
    m: usize,
    pmf: &[f64],
) -> f64 {
    let vals: Vec<f64> = (0..pmf.len())
        .map(|tau| {
            counts[m] = tau as u64;
            f.eval(&configuration(anchors, counts))
        })
        .collect();
    counts[m] = 0;
    let mass: f64 = pmf.iter().sum();
    let mean = vals.iter().zip(pmf).map(|(v, p)| v * p).sum::<f64>() / mass;
    vals.iter()
        .zip(pmf)
        .map(|(v, p)| p * (v - mean).powi(2))
        .sum::<f64>()
        / mass
}

/// Exact path for functionals linear in the counts: `sum_m w(zeta_m)^2 p_m`.
pub fn poisson_form_linear(f: &PointFunctional, scheme: &PartitionScheme) -> Result<FormValue> {
    let w = f
        .linear_weight()
        .ok_or_else(|| Error::BadParameters(format!("{f:?} is not linear in the counts")))?;
    let value = scheme
        .masses
        .iter()
        .zip(&scheme.anchors)
        .map(|(p, z)| w(*z).powi(2) * p)
        .sum();
    Ok(FormValue {
        value,
        mc_se: 0.0,
        truncated_mass: 0.0,
    })
}

/// Enumeration over truncated Poisson products; for small `N`.
pub fn poisson_form_enumerated(
    f: &PointFunctional,
    scheme: &PartitionScheme,
    tail_eps: f64,
) -> Result<FormValue> {
    check_eps(tail_eps)?;
    const MAX_STATES: f64 = 1e7;
    let n = scheme.len();
    let pmfs: Vec<Vec<f64>> = scheme
        .masses
        .iter()
        .map(|&p| poisson_pmf_truncated(p, tail_eps))
        .collect::<Result<_>>()?;
    let states: f64 = pmfs.iter().map(|p| p.len() as f64).product();
    if states * n as f64 > MAX_STATES {
        return Err(Error::EnumOverflow(format!(
            "{states} truncated configurations"
        )));
    }
    let mut value = 0.0;
    let mut counts = vec![0u64; n];
    for m in 0..n {
        let others: Vec<usize> = (0..n).filter(|&k| k != m).collect();
        let mut digits = vec![0usize; others.len()];
        loop {
            let mut weight = 1.0;
            for (d, &k) in digits.iter().zip(&others) {
                counts[k] = *d as u64;
                weight *= pmfs[k][*d];
            }
            value += weight * coordinate_variance(f, &scheme.anchors, &mut counts, m, &pmfs[m]);
            let mut pos = 0;
            loop {
                if pos == digits.len() {
                    break;
                }
                digits[pos] += 1;
                if digits[pos] < pmfs[others[pos]].len() {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == digits.len() {
                break;
            }
        }
        counts.iter_mut().for_each(|c| *c = 0);
    }
    Ok(FormValue {
        value,
        mc_se: 0.0,
        truncated_mass: tail_eps,
    })
}

/// Monte Carlo over `omega_(m)`; the inner sums are exact up to the tail cut.
pub fn poisson_form_mc<R: Rng + ?Sized>(
    f: &PointFunctional,
    scheme: &PartitionScheme,
    tail_eps: f64,
    samples: usize,
    rng: &mut R,
) -> Result<FormValue> {
    check_eps(tail_eps)?;
    if samples < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples,
        });
    }
    let n = scheme.len();
    let pmfs: Vec<Vec<f64>> = scheme
        .masses
        .iter()
        .map(|&p| poisson_pmf_truncated(p, tail_eps))
        .collect::<Result<_>>()?;
    let laws: Vec<Poisson<f64>> = scheme
        .masses
        .iter()
        .map(|&p| Poisson::new(p).map_err(|e| Error::BadParameters(e.to_string())))
        .collect::<Result<_>>()?;
    let mut counts = vec![0u64; n];
    let draws: Vec<f64> = (0..samples)
        .map(|_| {
            for (c, law) in counts.iter_mut().zip(&laws) {
                *c = law.sample(rng) as u64;
            }
            (0..n)
                .map(|m| {
                    let keep = counts[m];
                    counts[m] = 0;
                    let v = coordinate_variance(f, &scheme.anchors, &mut counts, m, &pmfs[m]);
                    counts[m] = keep;
                    v
                })
                .sum()
        })
        .collect();
    let est = McEstimate::from_samples(&draws);
    Ok(FormValue {
        value: est.mean,
        mc_se: est.std_error,
        truncated_mass: tail_eps,
    })
}

/// Sample a Poisson process with intensity `M` (total mass one).
pub fn sample_poisson_process<R: Rng + ?Sized>(
    density: &Density,
    rng: &mut R,
) -> PointConfiguration {
    let total = Poisson::new(1.0).expect("unit intensity").sample(rng) as u64;
    PointConfiguration::new((0..total).map(|_| (density.quantile(rng.random::<f64>()), 1)))
}

/// `E[int |F(omega + eps_x) - F(omega)|^2 dM(x)]` by Monte Carlo over `omega`
/// and midpoint quadrature in `x`.
pub fn poisson_limit<R: Rng + ?Sized>(
    f: &PointFunctional,
    density: &Density,
    samples: usize,
    grid: usize,
    rng: &mut R,
) -> Result<FormValue> {
    if samples < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples,
        });
    }
    let grid = grid.max(1);
    let nodes: Vec<(f64, f64)> = (0..grid)
        .map(|i| {
            let (a, b) = (i as f64 / grid as f64, (i + 1) as f64 / grid as f64);
            (0.5 * (a + b), density.cdf(b) - density.cdf(a))
        })
        .collect();
    let draws: Vec<f64> = (0..samples)
        .map(|_| {
            let w = sample_poisson_process(density, rng);
            let base = f.eval(&w);
            nodes
                .iter()
                .map(|(x, m)| m * (f.eval(&w.with_point(*x)) - base).powi(2))
                .sum()
        })
        .collect();
    let est = McEstimate::from_samples(&draws);
    Ok(FormValue {
        value: est.mean,
        mc_se: est.std_error,
        truncated_mass: 0.0,
    })
}

/// Law of the i.i.d. centered unit-variance steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepLaw {
    #[default]
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
}

impl StepLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            StepLaw::Gaussian => rng.sample(StandardNormal),
            StepLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            StepLaw::Uniform => 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0),
        }
    }

    /// `(mean, variance)`.
    pub fn moments(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
}

/// `omega^N = sum_k M_k h_k^N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WalkScheme {
    pub n: usize,
    pub steps: StepLaw,
}

impl WalkScheme {
    pub fn new(n: usize, steps: StepLaw) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadParameters(
                "a walk needs at least one step".into(),
            ));
        }
        Ok(WalkScheme { n, steps })
    }

    /// `h_k(t) = sqrt(N) |[0, t] ∩ [(k-1)/N, k/N)|`, `k` 1-based.
    pub fn h(&self, k: usize, t: f64) -> f64 {
        let nf = self.n as f64;
        let (a, b) = ((k as f64 - 1.0) / nf, k as f64 / nf);
        nf.sqrt() * (t.clamp(a, b) - a)
    }

    /// Path value at `t` for a step vector.
    pub fn path(&self, steps: &[f64], t: f64) -> f64 {
        steps
            .iter()
            .enumerate()
            .map(|(k, m)| m * self.h(k + 1, t))
            .sum()
    }

    /// Derivatives of the `h_k` as step vectors on the `N` cells.
    pub fn h_derivatives(&self) -> Vec<Vec<f64>> {
        let s = (self.n as f64).sqrt();
        (0..self.n)
            .map(|k| (0..self.n).map(|j| if j == k { s } else { 0.0 }).collect())
            .collect()
    }
}

/// Largest deviation of the `h_k` Gram matrix in `H` from the identity.
pub fn h_orthonormality(scheme: &WalkScheme) -> f64 {
    let d = scheme.h_derivatives();
    let cell = 1.0 / scheme.n as f64;
    let mut worst = 0.0f64;
    for (j, dj) in d.iter().enumerate() {
        for (k, dk) in d.iter().enumerate() {
            let ip: f64 = dj.iter().zip(dk).map(|(a, b)| a * b * cell).sum();
            worst = worst.max((ip - (j == k) as u8 as f64).abs());
        }
    }
    worst
}

/// Functional of the step vector of a walk.
pub type PathFn = Arc<dyn Fn(&WalkScheme, &[f64]) -> f64 + Send + Sync>;

/// Functionals of continuous paths on `[0, 1]`.
#[derive(Clone)]
pub enum PathFunctional {
    Constant(f64),
    /// `omega(1)`.
    Endpoint,
    /// `int_0^1 omega(t) dt`.
    TimeIntegral,
    /// `int_0^1 g(t) omega(t) dt`.
    Weighted(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Arbitrary functional of the step vector.
    Custom(PathFn),
}

impl fmt::Debug for PathFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFunctional::Constant(c) => write!(f, "Constant({c})"),
            PathFunctional::Endpoint => f.write_str("Endpoint"),
            PathFunctional::TimeIntegral => f.write_str("TimeIntegral"),
            PathFunctional::Weighted(_) => f.write_str("Weighted"),
            PathFunctional::Custom(_) => f.write_str("Custom"),
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let m = m + m % 2;
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for k in 1..m {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

impl PathFunctional {
    /// `<grad F, h_k>_H` for the linear built-ins, `k` 1-based.
    pub fn h_coefficients(&self, scheme: &WalkScheme) -> Option<Vec<f64>> {
        let nf = scheme.n as f64;
        let cells = 1..=scheme.n;
        match self {
            PathFunctional::Constant(_) => Some(vec![0.0; scheme.n]),
            PathFunctional::Endpoint => Some(vec![1.0 / nf.sqrt(); scheme.n]),
            PathFunctional::TimeIntegral => Some(
                cells
                    .map(|k| (1.0 - (k as f64 - 0.5) / nf) / nf.sqrt())
                    .collect(),
            ),
            PathFunctional::Weighted(g) => {
                // <grad F, h_k> = sqrt(N) int_cell G(s) ds with G(s) = int_s^1 g.
                let big_g = |s: f64| simpson(|u| g(u), s, 1.0, 64);
                Some(
                    cells
                        .map(|k| {
                            let (a, b) = ((k as f64 - 1.0) / nf, k as f64 / nf);
                            nf.sqrt() * simpson(big_g, a, b, 8)
                        })
                        .collect(),
                )
            }
            PathFunctional::Custom(_) => None,
        }
    }

    pub fn eval(&self, scheme: &WalkScheme, steps: &[f64]) -> f64 {
        match self {
            PathFunctional::Constant(c) => *c,
            PathFunctional::Custom(f) => f(scheme, steps),
            linear => {
                let c = linear.h_coefficients(scheme).expect("linear built-in");
                c.iter().zip(steps).map(|(c, m)| c * m).sum()
            }
        }
    }
}

/// `sum_k <grad F, h_k>^2` for linear functionals.
pub fn walk_form_exact(f: &PathFunctional, scheme: &WalkScheme) -> Result<FormValue> {
    let c = f
        .h_coefficients(scheme)
        .ok_or_else(|| Error::BadParameters("exact walk form needs a linear built-in".into()))?;
    Ok(FormValue {
        value: c.iter().map(|v| v * v).sum(),
        mc_se: 0.0,
        truncated_mass: 0.0,
    })
}

/// `sum_k E[(F(omega) - E'[F(omega_(k) + M'_k h_k)])^2]` with `inner >= 2` draws of `M'_k`.
pub fn walk_form_mc<R: Rng + ?Sized>(
    f: &PathFunctional,
    scheme: &WalkScheme,
    samples: usize,
    inner: usize,
    rng: &mut R,
) -> Result<FormValue> {
    if samples < 2 || inner < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.min(inner),
        });
    }
    let mut steps = vec![0.0; scheme.n];
    let draws: Vec<f64> = (0..samples)
        .map(|_| {
            steps.iter_mut().for_each(|m| *m = scheme.steps.sample(rng));
            let base = f.eval(scheme, &steps);
            (0..scheme.n)
                .map(|k| {
                    let keep = steps[k];
                    let inner_vals: Vec<f64> = (0..inner)
                        .map(|_| {
                            steps[k] = scheme.steps.sample(rng);
                            f.eval(scheme, &steps)
                        })
                        .collect();
                    steps[k] = keep;
                    let avg = McEstimate::from_samples(&inner_vals);
                    // Remove the inner-average noise so the estimate is unbiased.
                    (base - avg.mean).powi(2) - avg.std_error.powi(2)
                })
                .sum()
        })
        .collect();
    let est = McEstimate::from_samples(&draws);
    Ok(FormValue {
        value: est.mean,
        mc_se: est.std_error,
        truncated_mass: 0.0,
    })
}

/// `E ||grad F||_H^2` for the linear built-ins.
pub fn walk_limit(f: &PathFunctional) -> Result<f64> {
    match f {
        PathFunctional::Constant(_) => Ok(0.0),
        PathFunctional::Endpoint => Ok(1.0),
        PathFunctional::TimeIntegral => Ok(1.0 / 3.0),
        PathFunctional::Weighted(g) => Ok(simpson(
            |s| simpson(|u| g(u), s, 1.0, 64).powi(2),
            0.0,
            1.0,
            256,
        )),
        PathFunctional::Custom(_) => Err(Error::BadParameters(
            "no closed-form limit for a custom functional".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scheme_examples() {
        let s = poisson_scheme(&Density::uniform(), 4).unwrap();
        assert_eq!(s.masses, vec![0.25; 4]);
        assert_eq!(s.anchors, vec![0.125, 0.375, 0.625, 0.875]);
        let s = poisson_scheme(&Density::linear(), 2).unwrap();
        assert!((s.edges[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(s.masses.iter().all(|p| (p - 0.5).abs() < 1e-15));
        let s = poisson_scheme(&Density::uniform(), 1).unwrap();
        assert_eq!(s.masses, vec![1.0]);
        let c = Density::custom(|x| 3.0 * x * x).unwrap();
        let s = poisson_scheme(&c, 8).unwrap();
        assert!(s.masses.iter().all(|p| (p - 0.125).abs() < 1e-6));
        assert!(s.riemann_check() < 0.05);
        assert!(poisson_scheme(&c, 64).unwrap().riemann_check() < 2e-3);
        assert!(
            poisson_scheme(&Density::linear(), 64)
                .unwrap()
                .riemann_check()
                < 1e-3
        );
        assert!(matches!(
            Density::custom(|x| x - 0.5),
            Err(Error::BadDensity(_))
        ));
        assert!(matches!(
            Density::custom(|_| 0.0),
            Err(Error::BadDensity(_))
        ));
    }

    #[test]
    fn poisson_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1usize, 4, 16, 256] {
            let s = poisson_scheme(&Density::uniform(), n).unwrap();
            let v = poisson_form_linear(&PointFunctional::TotalMass, &s).unwrap();
            assert!((v.value - 1.0).abs() < 1e-12);
        }
        let s = poisson_scheme(&Density::uniform(), 8).unwrap();
        let capped = PointFunctional::CappedMass(1);
        let exact = poisson_form_enumerated(&capped, &s, 1e-6).unwrap();
        let closed = 8.0 * (-1f64).exp() * (1.0 - (-0.125f64).exp());
        assert!(
            (exact.value - closed).abs() < 1e-5,
            "{} vs {closed}",
            exact.value
        );
        let mc = poisson_form_mc(&capped, &s, 1e-9, 4000, &mut rng).unwrap();
        assert!((mc.value - exact.value).abs() < 3.0 * mc.mc_se, "{mc:?}");
        let c = PointFunctional::Constant(2.0);
        assert_eq!(poisson_form_enumerated(&c, &s, 1e-6).unwrap().value, 0.0);
        assert!(matches!(
            poisson_form_mc(&capped, &s, 0.0, 10, &mut rng),
            Err(Error::BadParameters(_))
        ));
        assert!(matches!(
            poisson_pmf_truncated(1.0, 1e-300),
            Err(Error::TruncationFailure(_))
        ));
    }

    #[test]
    fn poisson_limit_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = Density::uniform();
        let v = poisson_limit(&PointFunctional::TotalMass, &u, 200, 16, &mut rng).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
        let capped = PointFunctional::CappedMass(1);
        let v = poisson_limit(&capped, &u, 20_000, 4, &mut rng).unwrap();
        let e = (-1f64).exp();
        assert!((v.value - e).abs() < 3.0 * v.mc_se);
        assert_eq!(capped.analytic_limit(&u), Some(e));
        let v = poisson_limit(&PointFunctional::Constant(1.0), &u, 100, 4, &mut rng).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn tv_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fs = [
            PointFunctional::TotalMass,
            PointFunctional::CappedMass(2),
            PointFunctional::CountIn(0.2, 0.7),
        ];
        for _ in 0..500 {
            let w = sample_poisson_process(&Density::linear(), &mut rng);
            let mut eta = w.clone();
            for _ in 0..rng.random_range(0..3) {
                eta.add(rng.random(), 1);
            }
            let eta =
                PointConfiguration::new(eta.points().iter().copied().skip(rng.random_range(0..2)));
            let d = w.tv_distance(&eta) as f64;
            for f in &fs {
                assert!((f.eval(&w) - f.eval(&eta)).abs() <= d);
            }
        }
    }

    #[test]
    fn walk_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [1usize, 8, 64] {
            let s = WalkScheme::new(n, StepLaw::Gaussian).unwrap();
            assert!(
                (walk_form_exact(&PathFunctional::Endpoint, &s)
                    .unwrap()
                    .value
                    - 1.0)
                    .abs()
                    < 1e-12
            );
            assert!(h_orthonormality(&s) < 1e-14);
            assert!((s.h(n, 1.0) - 1.0 / (n as f64).sqrt()).abs() < 1e-15);
        }
        let s = WalkScheme::new(16, StepLaw::Gaussian).unwrap();
        let ti = walk_form_exact(&PathFunctional::TimeIntegral, &s)
            .unwrap()
            .value;
        assert!((ti - (1.0 / 3.0 - 1.0 / (12.0 * 256.0))).abs() < 1e-12);
        let g = PathFunctional::Weighted(Arc::new(|_| 1.0));
        assert!((walk_form_exact(&g, &s).unwrap().value - ti).abs() < 1e-10);
        assert!((walk_limit(&g).unwrap() - 1.0 / 3.0).abs() < 1e-10);
        let zero = PathFunctional::Weighted(Arc::new(|_| 0.0));
        assert_eq!(walk_limit(&zero).unwrap(), 0.0);
        assert_eq!(
            walk_form_exact(&PathFunctional::Constant(1.0), &s)
                .unwrap()
                .value,
            0.0
        );
        let mc = walk_form_mc(&PathFunctional::TimeIntegral, &s, 2000, 64, &mut rng).unwrap();
        assert!((mc.value - ti).abs() < 3.0 * mc.mc_se, "{mc:?} vs {ti}");
        // Integral of the path agrees with the coefficient form.
        let steps: Vec<f64> = (0..16).map(|_| s.steps.sample(&mut rng)).collect();
        let direct = simpson(|t| s.path(&steps, t), 0.0, 1.0, 1600);
        assert!((direct - PathFunctional::TimeIntegral.eval(&s, &steps)).abs() < 1e-6);
    }
}
