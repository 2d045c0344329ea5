//! Stein-Malliavin distance bounds for Gaussian and Gamma targets.

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma, Normal};
use statrs::function::gamma::gamma as gamma_fn;

use crate::calculus::{gradient_at, invert_number_operator};
use crate::error::{Error, Result};
use crate::space::{conditional_drop, expectation, Coordinate, Functional, ProductSpace};

/// Symmetric kernel on `A^2` vanishing on the diagonal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    /// Row-major entries; symmetry and the zero diagonal are checked to `1e-12`.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::BadKernel(format!(
                "{} entries for size {n}",
                data.len()
            )));
        }
        for i in 0..n {
            if data[i * n + i].abs() > 1e-12 {
                return Err(Error::BadKernel(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if !a.is_finite() || (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::BadKernel(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(KernelMatrix { n, data })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let data = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                if i == j {
                    0.0
                } else {
                    f(i.min(j), i.max(j))
                }
            })
            .collect();
        KernelMatrix::new(n, data)
    }

    /// `c` off the diagonal.
    pub fn constant(n: usize, c: f64) -> Self {
        KernelMatrix::from_fn(n, |_, _| c).expect("constant kernel")
    }

    /// Comma-separated rows.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("`{v}`: {e}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::BadKernel("kernel matrix must be square".into()));
        }
        KernelMatrix::new(n, rows.concat())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn scale(&self, c: f64) -> Self {
        KernelMatrix {
            n: self.n,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }
}

/// `f *_1^1 f`, `f *_2^1 f`, the influences and `nu`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contractions {
    pub star11: Vec<Vec<f64>>,
    pub star21: Vec<f64>,
    pub influence: Vec<f64>,
    pub nu: f64,
}

pub fn contractions(f: &KernelMatrix) -> Contractions {
    let n = f.n;
    let star11 = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| f.get(i, k) * f.get(j, k)).sum())
                .collect()
        })
        .collect();
    let star21: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| f.get(i, j).powi(2)).sum())
        .collect();
    let influence = (0..n)
        .map(|a| (0..n).map(|i| f.get(i, a).powi(2)).sum())
        .collect();
    let nu = star21.iter().sum();
    Contractions {
        star11,
        star21,
        influence,
        nu,
    }
}

/// Target law of a Stein bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Gaussian,
    /// `Gamma(r, lambda) - r/lambda`.
    CenteredGamma {
        r: f64,
        lambda: f64,
    },
}

impl Target {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Target::Gaussian => Normal::standard().cdf(x),
            Target::CenteredGamma { r, lambda } => {
                let y = x + r / lambda;
                if y <= 0.0 {
                    0.0
                } else {
                    Gamma::new(r, lambda).expect("validated parameters").cdf(y)
                }
            }
        }
    }

    /// `E[g(Z)]` by quadrature.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        match *self {
            Target::Gaussian => {
                let c = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
                simpson(|x| g(x) * c * (-0.5 * x * x).exp(), -12.0, 12.0, 8000)
            }
            Target::CenteredGamma { r, lambda } => {
                // y = s^{1/r} turns y^{r-1} dy into ds / r.
                let shift = r / lambda;
                let smax = (60.0 / lambda).powf(r);
                let c = lambda.powf(r) / gamma_fn(r) / r;
                simpson(
                    |s| {
                        let y = s.powf(1.0 / r);
                        c * g(y - shift) * (-lambda * y).exp()
                    },
                    0.0,
                    smax,
                    20000,
                )
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Target::Gaussian => Ok(()),
            Target::CenteredGamma { r, lambda } if r > 0.0 && lambda > 0.0 => Ok(()),
            Target::CenteredGamma { r, lambda } => Err(Error::BadParameters(format!(
                "Gamma target needs r > 0 and lambda > 0, got ({r}, {lambda})"
            ))),
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Explicit constants applied to the Gamma brackets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantPolicy {
    pub c1: f64,
    pub c2: f64,
    pub note: String,
}

impl ConstantPolicy {
    /// `c1 = 2 lambda max(1, 1/r)`, `c2 = lambda (max(lambda, lambda/r) + 1)`.
    pub fn gamma(r: f64, lambda: f64) -> Self {
        ConstantPolicy {
            c1: 2.0 * lambda * 1f64.max(1.0 / r),
            c2: lambda * (lambda.max(lambda / r) + 1.0),
            note: "c1 = ||f'_g|| bound with ||g'|| <= 1; c2 = half the ||f''_g|| bound with \
                   ||g'||, ||g''|| <= 1 (Taylor remainder)"
                .into(),
        }
    }
}

/// Components of a Stein bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteinReport {
    pub target: Target,
    pub t1: f64,
    pub t2: f64,
    pub total: f64,
    pub constants: Option<ConstantPolicy>,
    /// Max over the smooth test family of the first term of the refined
    /// Gaussian bound; a lower approximation of its supremum.
    pub refined_first_lower: Option<f64>,
}

/// `(sum_a D_aF (-D_a L^{-1} F), T2, [(D_aF, -D_a L^{-1} F)])`.
type SteinPieces = (Functional, f64, Vec<(Functional, Functional)>);

/// Shared pieces: `sum_a D_aF (-D_a L^{-1} F)` and the remainder term.
fn stein_pieces(space: &ProductSpace, f: &Functional) -> Result<SteinPieces> {
    let f = space.tabulate(f)?;
    let g = invert_number_operator(space, &f)?;
    let mut gamma_sum = Functional::zeros(space)?;
    let mut t2 = 0.0;
    let f2 = &f * &f;
    let mut grads = Vec::new();
    for a in f.deps().iter() {
        let daf = gradient_at(space, &f, a)?;
        let dag = gradient_at(space, &g, a)?;
        gamma_sum = &gamma_sum - &(&daf * &dag);
        // int (F - F(X_{A\a}; x))^2 dP_a(x) = F^2 - 2 F E_a F + E_a F^2.
        let ef = conditional_drop(space, &f, a)?;
        let ef2 = conditional_drop(space, &f2, a)?;
        let spread = &(&f2 - &(&f * &ef).scale(2.0)) + &ef2;
        t2 += expectation(space, &(&spread * &dag.map(f64::abs)))?;
        grads.push((daf, dag));
    }
    Ok((gamma_sum, t2, grads))
}

/// Gaussian Stein bound `T1 + T2` for centered `F`.
pub fn gaussian_bound(space: &ProductSpace, f: &Functional) -> Result<SteinReport> {
    let (gamma_sum, t2, grads) = stein_pieces(space, f)?;
    let t1 = expectation(space, &gamma_sum.map(|v| (1.0 - v).abs()))?;
    let f = space.tabulate(f)?;
    let mut best = 0.0f64;
    for phi in smooth_family() {
        let psi = |x: f64| 2.0 * phi.eval(x);
        let mut val = expectation(space, &f.map(psi))?;
        for (a, (daf, dag)) in f.deps().iter().zip(&grads) {
            let swapped = conditional_drop(space, &f.map(psi), a)?;
            val += expectation(space, &(&(&swapped * daf) * dag))?;
        }
        best = best.max(val.abs());
    }
    Ok(SteinReport {
        target: Target::Gaussian,
        t1,
        t2,
        total: t1 + t2,
        constants: None,
        refined_first_lower: Some(best),
    })
}

/// Gamma Stein bound with the explicit constant policy of [`ConstantPolicy::gamma`].
pub fn gamma_bound(
    space: &ProductSpace,
    f: &Functional,
    r: f64,
    lambda: f64,
) -> Result<SteinReport> {
    let target = Target::CenteredGamma { r, lambda };
    target.validate()?;
    let (gamma_sum, t2, _) = stein_pieces(space, f)?;
    let f = space.tabulate(f)?;
    let shift = r / (lambda * lambda);
    let inner = f.zip_with(&gamma_sum, |fv, g| (fv / lambda + shift - g).abs());
    let t1 = expectation(space, &inner)?;
    let policy = ConstantPolicy::gamma(r, lambda);
    Ok(SteinReport {
        target,
        t1,
        t2,
        total: policy.c1 * t1 + policy.c2 * t2,
        constants: Some(policy),
        refined_first_lower: None,
    })
}

/// Gaussian bound for `(X_1 + ... + X_n - n m) / sqrt(n sigma^2)` with i.i.d. `X_a`.
///
/// Closed form: `T2 = n^{-1/2} sigma^{-3} (E|Y|^3 + sigma^2 E|Y|)` with `Y = X - m`,
/// and `T1 = E|1 - sum Y_a^2 / (n sigma^2)|` summed exactly over count vectors.
pub fn gaussian_bound_iid_sum(base: &Coordinate, n: usize) -> Result<SteinReport> {
    const MAX_COUNT_VECTORS: f64 = 5e7;
    let values = base
        .values()
        .ok_or_else(|| Error::BadParameters("coordinate without real values".into()))?;
    if n == 0 {
        return Err(Error::BadParameters("n must be positive".into()));
    }
    let m = base.moment(1).unwrap_or(0.0);
    let pmf = base.pmf();
    let centered: Vec<f64> = values.iter().map(|v| v - m).collect();
    let e =
        |g: &dyn Fn(f64) -> f64| -> f64 { centered.iter().zip(pmf).map(|(y, p)| p * g(*y)).sum() };
    let var = e(&|y| y * y);
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance(0));
    }
    let nf = n as f64;
    let t2 = (e(&|y| y.abs().powi(3)) + var * e(&|y| y.abs())) / (nf.sqrt() * var.powf(1.5));

    // Law of Y^2 on its distinct values.
    let mut squares: Vec<(f64, f64)> = Vec::new();
    for (y, p) in centered.iter().zip(pmf) {
        let v = y * y;
        match squares
            .iter_mut()
            .find(|(w, _)| (w - v).abs() <= 1e-12 * v.max(1.0))
        {
            Some((_, q)) => *q += p,
            None => squares.push((v, *p)),
        }
    }
    let k = squares.len();
    let vectors = crate::ustat::binomial(n + k - 1, k - 1);
    if vectors > MAX_COUNT_VECTORS {
        return Err(Error::EnumOverflow(format!("{vectors} count vectors")));
    }
    let ln_fact: Vec<f64> = (0..=n)
        .scan(0.0, |acc, i| {
            if i > 0 {
                *acc += (i as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let mut t1 = 0.0;
    let mut counts = vec![0usize; k];
    fn walk(pos: usize, left: usize, counts: &mut [usize], f: &mut dyn FnMut(&[usize])) {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            f(counts);
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            walk(pos + 1, left - c, counts, f);
        }
    }
    walk(0, n, &mut counts, &mut |c: &[usize]| {
        let mut ln_p = ln_fact[n];
        let mut total = 0.0;
        for (ci, (v, q)) in c.iter().zip(&squares) {
            ln_p += *ci as f64 * q.ln() - ln_fact[*ci];
            total += *ci as f64 * v;
        }
        t1 += ln_p.exp() * (1.0 - total / (nf * var)).abs();
    });
    Ok(SteinReport {
        target: Target::Gaussian,
        t1,
        t2,
        total: t1 + t2,
        constants: None,
        refined_first_lower: None,
    })
}

/// `2 (sqrt 2 + 1) s_n^{-3} sum E|X_j - E X_j|^3` from `(variance, third absolute central moment)` pairs.
pub fn lyapounov_bound(moments: &[(f64, f64)]) -> Result<f64> {
    if let Some(j) = moments.iter().position(|(v, _)| !(*v > 0.0)) {
        return Err(Error::DegenerateVariance(j));
    }
    let s2: f64 = moments.iter().map(|(v, _)| v).sum();
    let third: f64 = moments.iter().map(|(_, m)| m).sum();
    Ok(2.0 * (2f64.sqrt() + 1.0) * third / s2.powf(1.5))
}

/// Bracket terms of the homogeneous quadratic sum bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomogeneousReport {
    /// `sum_{(i,a)} f^4(i,a)`.
    pub term1: f64,
    /// `||f *_2^1 f||^2`.
    pub term2: f64,
    /// `||f - f *_1^1 f||^2`.
    pub term3: f64,
    pub bracket: f64,
    pub fourth_moment: f64,
    /// `E[X^4]^2 * bracket` with the unspecified constant set to one.
    pub bound_unit_constant: f64,
    /// `E[X^4]^2 (max Inf + term3)`, constant set to one.
    pub influence_bound_unit_constant: f64,
    pub max_influence: f64,
    pub nu: f64,
    pub constant_unspecified: bool,
}

pub fn homogeneous_gamma_bound(f: &KernelMatrix, fourth_moment: f64) -> Result<HomogeneousReport> {
    if !(fourth_moment >= 1.0) {
        return Err(Error::BadParameters(format!(
            "fourth moment {fourth_moment} is below one for a unit-variance variable"
        )));
    }
    let c = contractions(f);
    let n = f.n;
    let term1 = f.data.iter().map(|v| v.powi(4)).sum();
    let term2 = c.star21.iter().map(|v| v * v).sum();
    let mut term3 = 0.0;
    for i in 0..n {
        for j in 0..n {
            term3 += (f.get(i, j) - c.star11[i][j]).powi(2);
        }
    }
    let bracket = term1 + term2 + term3;
    let max_influence = c.influence.iter().copied().fold(0.0, f64::max);
    let m2 = fourth_moment * fourth_moment;
    Ok(HomogeneousReport {
        term1,
        term2,
        term3,
        bracket,
        fourth_moment,
        bound_unit_constant: m2 * bracket,
        influence_bound_unit_constant: m2 * (max_influence + term3),
        max_influence,
        nu: c.nu,
        constant_unspecified: true,
    })
}

/// `F = sum_{(i,j) distinct} f(i,j) X_i X_j` on the first `n` coordinates.
pub fn quadratic_form(space: &ProductSpace, f: &KernelMatrix) -> Result<Functional> {
    let n = f.n;
    if n > space.dim() {
        return Err(Error::Mismatch(format!(
            "kernel of size {n} on {} coordinates",
            space.dim()
        )));
    }
    let mut x = vec![0.0; n];
    space.from_fn_on(crate::space::DepSet::new(0..n), |cfg| {
        for (a, slot) in x.iter_mut().enumerate() {
            *slot = space.value(a, cfg[a]);
        }
        quadratic_value(f, &x)
    })
}

fn quadratic_value(f: &KernelMatrix, x: &[f64]) -> f64 {
    let n = f.n;
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            acc += f.get(i, j) * x[i] * x[j];
        }
    }
    2.0 * acc
}

/// Combinatorial sums over distinct index tuples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelSums {
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    /// `sum_{(i,j,k)} f_ij^2 f_ik^2`.
    pub q: f64,
    /// `sum_{(i,j,k)} f_ij^2 f_ik f_kj`.
    pub w: f64,
    /// `sum_{(i,j,k)} f_ij f_jk f_ki`.
    pub t: f64,
    /// `sum_{(i,j,k,l)} f_ij f_jk f_kl f_li`.
    pub c4: f64,
}

pub fn kernel_sums(f: &KernelMatrix) -> KernelSums {
    let n = f.n;
    let g = |i: usize, j: usize| f.get(i, j);
    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    let (mut q, mut w, mut t, mut c4) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let fij = g(i, j);
            s2 += fij * fij;
            s3 += fij.powi(3);
            s4 += fij.powi(4);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                q += fij * fij * g(i, k).powi(2);
                w += fij * fij * g(i, k) * g(k, j);
                t += fij * g(j, k) * g(k, i);
                for l in 0..n {
                    if l == i || l == j || l == k {
                        continue;
                    }
                    c4 += fij * g(j, k) * g(k, l) * g(l, i);
                }
            }
        }
    }
    KernelSums {
        s2,
        s3,
        s4,
        q,
        w,
        t,
        c4,
    }
}

/// `E[F^4] - 12 E[F^3] - 12 nu^2 + 48 nu` against its closed forms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourthMomentCheck {
    pub lhs: f64,
    /// Standard error when `lhs` was sampled.
    pub lhs_se: Option<f64>,
    /// The stated combinatorial display.
    pub rhs_stated: f64,
    /// The expansion obtained by expanding the moments term by term.
    pub rhs_expansion: f64,
    pub residual_stated: f64,
    pub residual_expansion: f64,
    /// `|lhs - rhs_stated|` above tolerance.
    pub stated_discrepancy: bool,
    pub nu: f64,
    pub second_moment: f64,
}

fn fourth_moment_rhs(f: &KernelMatrix, m3: f64, m4: f64) -> (f64, f64, f64) {
    let s = kernel_sums(f);
    let stated = s.s4 * m4 * m4 + 6.0 * s.q * m4 + 12.0 * m3 * m3 * (s.w - s.s3)
        - 48.0 * (s.t - s.s2)
        - 12.0 * s.s4;
    let expansion = 8.0 * m4 * m4 * s.s4 + 48.0 * (m4 - 1.0) * s.q + 96.0 * m3 * m3 * s.w
        - 48.0 * m3 * m3 * s.s3
        + 48.0 * s.c4
        - 96.0 * s.t
        - 24.0 * s.s4
        + 48.0 * s.s2;
    (stated, expansion, s.s2)
}

fn standard_moments(base: &Coordinate) -> Result<(f64, f64)> {
    let (m1, m2) = (
        base.moment(1)
            .ok_or_else(|| Error::BadParameters("coordinate without real values".into()))?,
        base.moment(2).unwrap_or(f64::NAN),
    );
    if m1.abs() > 1e-9 || (m2 - 1.0).abs() > 1e-9 {
        return Err(Error::BadParameters(format!(
            "coordinate must be centered with unit variance (mean {m1}, second moment {m2})"
        )));
    }
    Ok((base.moment(3).unwrap_or(0.0), base.moment(4).unwrap_or(0.0)))
}

/// Exact check on `n` i.i.d. copies of a centered unit-variance coordinate.
pub fn fourth_moment_check(space: &ProductSpace, f: &KernelMatrix) -> Result<FourthMomentCheck> {
    let base = space.coord(0).clone();
    for a in 1..f.n {
        if !space.coord(a).same_law(&base) {
            return Err(Error::NotIid(format!(
                "coordinate {a} differs from coordinate 0"
            )));
        }
    }
    let (m3, m4) = standard_moments(&base)?;
    let q = quadratic_form(space, f)?;
    let e2 = expectation(space, &q.map(|v| v * v))?;
    let e3 = expectation(space, &q.map(|v| v.powi(3)))?;
    let e4 = expectation(space, &q.map(|v| v.powi(4)))?;
    let (rhs_stated, rhs_expansion, nu) = fourth_moment_rhs(f, m3, m4);
    let lhs = e4 - 12.0 * e3 - 12.0 * nu * nu + 48.0 * nu;
    Ok(fourth_moment_report(
        lhs,
        None,
        rhs_stated,
        rhs_expansion,
        nu,
        e2,
    ))
}

/// Sampled variant for spaces too large to enumerate.
pub fn fourth_moment_check_mc<R: Rng + ?Sized>(
    base: &Coordinate,
    f: &KernelMatrix,
    samples: usize,
    rng: &mut R,
) -> Result<FourthMomentCheck> {
    let (m3, m4) = standard_moments(base)?;
    if samples < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples,
        });
    }
    let (rhs_stated, rhs_expansion, nu) = fourth_moment_rhs(f, m3, m4);
    let mut x = vec![0.0; f.n];
    let vals: Vec<(f64, f64)> = (0..samples)
        .map(|_| {
            for slot in x.iter_mut() {
                *slot = base.value(base.sample(rng)).unwrap_or(0.0);
            }
            let v = quadratic_value(f, &x);
            (v.powi(4) - 12.0 * v.powi(3), v * v)
        })
        .collect();
    let est = crate::space::McEstimate::from_samples(&vals.iter().map(|v| v.0).collect::<Vec<_>>());
    let e2 = vals.iter().map(|v| v.1).sum::<f64>() / samples as f64;
    let lhs = est.mean - 12.0 * nu * nu + 48.0 * nu;
    Ok(fourth_moment_report(
        lhs,
        Some(est.std_error),
        rhs_stated,
        rhs_expansion,
        nu,
        e2,
    ))
}

fn fourth_moment_report(
    lhs: f64,
    lhs_se: Option<f64>,
    rhs_stated: f64,
    rhs_expansion: f64,
    nu: f64,
    second_moment: f64,
) -> FourthMomentCheck {
    let tol = match lhs_se {
        Some(se) => 4.0 * se,
        None => 1e-9 * lhs.abs().max(1.0),
    };
    FourthMomentCheck {
        lhs,
        lhs_se,
        rhs_stated,
        rhs_expansion,
        residual_stated: (lhs - rhs_stated).abs(),
        residual_expansion: (lhs - rhs_expansion).abs(),
        stated_discrepancy: (lhs - rhs_stated).abs() > tol,
        nu,
        second_moment,
    }
}

/// One member of the fixed smooth test family; `|phi'|, |phi''| <= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `sin(x + phase)`.
    Sine { phase: f64 },
    /// `width * tanh((x - centre) / width)`.
    Ramp { centre: f64, width: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Sine { phase } => (x + phase).sin(),
            TestFunction::Ramp { centre, width } => width * ((x - centre) / width).tanh(),
        }
    }
}

/// Version tag of [`smooth_family`].
pub const SMOOTH_FAMILY_VERSION: u32 = 1;

/// 16 phase-shifted sines and 48 tanh ramps (24 centres in `[-3, 3]`, widths 1 and 2).
pub fn smooth_family() -> Vec<TestFunction> {
    let mut out: Vec<TestFunction> = (0..16)
        .map(|j| TestFunction::Sine {
            phase: 2.0 * std::f64::consts::PI * j as f64 / 16.0,
        })
        .collect();
    for width in [1.0, 2.0] {
        for c in 0..24 {
            out.push(TestFunction::Ramp {
                centre: -3.0 + 6.0 * c as f64 / 23.0,
                width,
            });
        }
    }
    out
}

/// Kolmogorov statistic and smooth-class lower estimate with bootstrap errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalDistance {
    pub samples: usize,
    pub kolmogorov: f64,
    pub kolmogorov_se: f64,
    /// `max_phi |mean phi(samples) - E phi(Z)|`, a lower estimate of the smooth distance.
    pub smooth_lower: f64,
    pub smooth_lower_se: f64,
    pub family_version: u32,
}

/// Minimum sample count accepted by [`empirical_distance`].
pub const MIN_EMPIRICAL_SAMPLES: usize = 1000;

fn kolmogorov_sorted(sorted: &[f64], target: &Target) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let cdf = target.cdf(x);
        d = d
            .max((j as f64 / n - cdf).abs())
            .max((cdf - i as f64 / n).abs());
        i = j;
    }
    d
}

pub fn empirical_distance<R: Rng + ?Sized>(
    samples: &[f64],
    target: Target,
    bootstrap: usize,
    rng: &mut R,
) -> Result<EmpiricalDistance> {
    target.validate()?;
    if samples.len() < MIN_EMPIRICAL_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_EMPIRICAL_SAMPLES,
            got: samples.len(),
        });
    }
    let n = samples.len();
    let family = smooth_family();
    let means: Vec<f64> = family
        .iter()
        .map(|phi| target.expect(|x| phi.eval(x)))
        .collect();
    let values: Vec<Vec<f64>> = family
        .iter()
        .map(|phi| samples.iter().map(|&x| phi.eval(x)).collect())
        .collect();
    let smooth_stat = |idx: Option<&[usize]>| -> f64 {
        values
            .iter()
            .zip(&means)
            .map(|(v, m)| {
                let s: f64 = match idx {
                    Some(ix) => ix.iter().map(|&i| v[i]).sum(),
                    None => v.iter().sum(),
                };
                (s / n as f64 - m).abs()
            })
            .fold(0.0, f64::max)
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let kolmogorov = kolmogorov_sorted(&sorted, &target);
    let smooth_lower = smooth_stat(None);

    let mut ks = Vec::with_capacity(bootstrap);
    let mut sl = Vec::with_capacity(bootstrap);
    let mut idx = vec![0usize; n];
    let mut buf = vec![0.0; n];
    for _ in 0..bootstrap {
        for (slot, b) in idx.iter_mut().zip(buf.iter_mut()) {
            *slot = rng.random_range(0..n);
            *b = samples[*slot];
        }
        buf.sort_by(f64::total_cmp);
        ks.push(kolmogorov_sorted(&buf, &target));
        sl.push(smooth_stat(Some(&idx)));
    }
    let sd = |xs: &[f64]| -> f64 {
        if xs.len() < 2 {
            return 0.0;
        }
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    Ok(EmpiricalDistance {
        samples: n,
        kolmogorov,
        kolmogorov_se: sd(&ks),
        smooth_lower,
        smooth_lower_se: sd(&sl),
        family_version: SMOOTH_FAMILY_VERSION,
    })
}

/// Sums `(X_1 + ... + X_n)/sqrt(n)` of i.i.d. fair signs.
pub fn rademacher_sums<R: Rng + ?Sized>(n: usize, samples: usize, rng: &mut R) -> Vec<f64> {
    let scale = 1.0 / (n as f64).sqrt();
    (0..samples)
        .map(|_| {
            let s: i64 = (0..n)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .sum();
            s as f64 * scale
        })
        .collect()
}

/// Degenerate quadratic U-statistic against its Gamma limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegenerateUstatReport {
    pub n: usize,
    pub sigma2: f64,
    pub fourth_moment: f64,
    pub target: Target,
    /// Bracket terms for `f = 2/(n-1)` on the standardized variables.
    pub bound: HomogeneousReport,
    pub sqrt_bracket: f64,
    /// `E[F^2]` against the target variance `r / lambda^2`.
    pub second_moment: f64,
    pub target_variance: f64,
    /// Bracket terms for `f = 1/n`, whose variance matches the target.
    pub matched_scaling: HomogeneousReport,
    pub distance: Option<EmpiricalDistance>,
}

/// `F = 2/(n-1) sum_{(i,j) distinct} X_i X_j` against `Gamma(1/2, 1/(2 sigma^2))` centered.
pub fn degenerate_ustat_experiment<R: Rng + ?Sized>(
    n: usize,
    coordinate: &Coordinate,
    samples: usize,
    bootstrap: usize,
    rng: &mut R,
) -> Result<DegenerateUstatReport> {
    if n < 2 {
        return Err(Error::BadParameters("n must be at least 2".into()));
    }
    let values = coordinate
        .values()
        .ok_or_else(|| Error::BadParameters("coordinate without real values".into()))?;
    let mean = coordinate.moment(1).unwrap_or(0.0);
    if mean.abs() > 1e-9 {
        return Err(Error::NotCentered { mean });
    }
    let sigma2 = coordinate.moment(2).unwrap_or(0.0);
    if !(sigma2 > 0.0) {
        return Err(Error::DegenerateVariance(0));
    }
    let m4 = coordinate.moment(4).unwrap_or(0.0);
    let target = Target::CenteredGamma {
        r: 0.5,
        lambda: 1.0 / (2.0 * sigma2),
    };
    let w = 2.0 / (n as f64 - 1.0);
    let standardized_m4 = m4 / (sigma2 * sigma2);
    let bound = homogeneous_gamma_bound(&KernelMatrix::constant(n, w), standardized_m4)?;
    let matched =
        homogeneous_gamma_bound(&KernelMatrix::constant(n, 1.0 / n as f64), standardized_m4)?;
    let second_moment = 2.0 * bound.nu * sigma2 * sigma2;
    let distance = if samples > 0 {
        let mut xs = vec![0.0; n];
        let draws: Vec<f64> = (0..samples)
            .map(|_| {
                for slot in xs.iter_mut() {
                    *slot = values[coordinate.sample(rng)];
                }
                let s: f64 = xs.iter().sum();
                let sq: f64 = xs.iter().map(|x| x * x).sum();
                w * (s * s - sq)
            })
            .collect();
        Some(empirical_distance(&draws, target, bootstrap, rng)?)
    } else {
        None
    };
    Ok(DegenerateUstatReport {
        n,
        sigma2,
        fourth_moment: m4,
        target,
        sqrt_bracket: bound.bracket.sqrt(),
        bound,
        second_moment,
        target_variance: 2.0 * sigma2 * sigma2,
        matched_scaling: matched,
        distance,
    })
}
