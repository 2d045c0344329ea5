//! U-statistics and their Hoeffding decomposition.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::calculus::{anova, number_operator, IdentityCheck};
use crate::decompose::clark_symmetric_blocks;
use crate::error::{Error, Result};
use crate::space::{expectation, Coordinate, DepSet, Functional, ProductSpace};

/// `C(n, k)` as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Increasing `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
            break;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
    out
}

pub type KernelFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A kernel `h : R^m -> R` assumed invariant under argument permutations.
#[derive(Clone)]
pub struct SymmetricKernel {
    arity: usize,
    eval: KernelFn,
}

impl std::fmt::Debug for SymmetricKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymmetricKernel")
            .field("arity", &self.arity)
            .finish()
    }
}

impl SymmetricKernel {
    pub fn new<F>(arity: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if arity == 0 {
            return Err(Error::ArityError("kernel arity must be at least 1".into()));
        }
        Ok(SymmetricKernel {
            arity,
            eval: Arc::new(f),
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Largest change under a random transposition of random arguments.
    pub fn symmetry_defect<R: Rng + ?Sized>(&self, rng: &mut R, trials: usize) -> f64 {
        let mut worst = 0.0f64;
        if self.arity < 2 {
            return worst;
        }
        for _ in 0..trials {
            let x: Vec<f64> = (0..self.arity)
                .map(|_| rng.random_range(-3.0..3.0))
                .collect();
            let mut y = x.clone();
            let i = rng.random_range(0..self.arity);
            let j = rng.random_range(0..self.arity);
            y.swap(i, j);
            worst = worst.max((self.eval(&x) - self.eval(&y)).abs());
        }
        worst
    }
}

/// Checks that the first `n` coordinates share one law with real embeddings.
fn iid_base(space: &ProductSpace, n: usize) -> Result<Coordinate> {
    if n == 0 || n > space.dim() {
        return Err(Error::ArityError(format!(
            "n = {n} with {} coordinates available",
            space.dim()
        )));
    }
    let base = space.coord(0).clone();
    if base.values().is_none() {
        return Err(Error::NotIid(format!(
            "coordinate `{}` has no real embedding",
            base.id()
        )));
    }
    for a in 1..n {
        if !space.coord(a).same_law(&base) {
            return Err(Error::NotIid(format!(
                "coordinate `{}` differs from `{}`",
                space.coord(a).id(),
                base.id()
            )));
        }
    }
    Ok(base)
}

/// `U_n = C(n,m)^{-1} sum_{|A| = m} h(X_A)` over the first `n` coordinates.
pub fn u_statistic(space: &ProductSpace, h: &SymmetricKernel, n: usize) -> Result<Functional> {
    let m = h.arity();
    if n < m {
        return Err(Error::ArityError(format!(
            "n = {n} is smaller than the arity {m}"
        )));
    }
    iid_base(space, n)?;
    let subsets = combinations(n, m);
    let norm = 1.0 / binomial(n, m);
    let mut buf = vec![0.0; m];
    space.from_fn_on(DepSet::new(0..n), |x| {
        let total: f64 = subsets
            .iter()
            .map(|s| {
                for (slot, &a) in buf.iter_mut().zip(s) {
                    *slot = space.value(a, x[a]);
                }
                h.eval(&buf)
            })
            .sum();
        norm * total
    })
}

/// `theta` and the degenerate kernels `g_1, ..., g_m` tabulated on the base support.
#[derive(Clone, Debug)]
pub struct HoeffdingKernels {
    pub theta: f64,
    /// `tables[k-1]` holds `g_k` indexed row-major over `support^k`.
    pub tables: Vec<Vec<f64>>,
    support: usize,
}

impl HoeffdingKernels {
    pub fn arity(&self) -> usize {
        self.tables.len()
    }

    /// `g_k` at outcome indices `x` (length `k`).
    pub fn g(&self, x: &[usize]) -> f64 {
        let idx = x.iter().fold(0, |acc, &i| acc * self.support + i);
        self.tables[x.len() - 1][idx]
    }

    pub fn is_zero(&self, k: usize, tol: f64) -> bool {
        self.tables[k - 1].iter().all(|v| v.abs() <= tol)
    }
}

/// Recursive Hoeffding kernels of `h` under the law of `base`.
pub fn hoeffding_kernels(h: &SymmetricKernel, base: &Coordinate) -> Result<HoeffdingKernels> {
    let m = h.arity();
    let values = base.values().ok_or_else(|| {
        Error::NotIid(format!("coordinate `{}` has no real embedding", base.id()))
    })?;
    let s = values.len();
    let pmf = base.pmf();
    let total = s
        .checked_pow(m as u32)
        .filter(|t| *t <= 1 << 24)
        .ok_or_else(|| Error::ArityError(format!("support {s} to the power {m} is too large")))?;
    let mut x = vec![0.0; m];
    let hm: Vec<f64> = (0..total)
        .map(|mut i| {
            for slot in x.iter_mut().rev() {
                *slot = values[i % s];
                i /= s;
            }
            h.eval(&x)
        })
        .collect();
    // h_k: integrate the trailing arguments out, one at a time.
    let mut h_tables = vec![hm];
    for _ in 1..m {
        let prev = h_tables.last().expect("nonempty");
        let next: Vec<f64> = prev
            .chunks(s)
            .map(|c| c.iter().zip(pmf).map(|(v, p)| v * p).sum())
            .collect();
        h_tables.push(next);
    }
    h_tables.reverse(); // h_tables[k-1] = h_k
    let theta: f64 = h_tables[0].iter().zip(pmf).map(|(v, p)| v * p).sum();

    let mut tables: Vec<Vec<f64>> = Vec::with_capacity(m);
    for k in 1..=m {
        let size = s.pow(k as u32);
        let mut g = vec![0.0; size];
        let mut idx = vec![0usize; k];
        for (i, gi) in g.iter_mut().enumerate() {
            let mut r = i;
            for slot in idx.iter_mut().rev() {
                *slot = r % s;
                r /= s;
            }
            let mut acc = h_tables[k - 1][i] - theta;
            for j in 1..k {
                for sub in combinations(k, j) {
                    let pos = sub.iter().fold(0, |a, &b| a * s + idx[b]);
                    acc -= tables[j - 1][pos];
                }
            }
            *gi = acc;
        }
        tables.push(g);
    }
    Ok(HoeffdingKernels {
        theta,
        tables,
        support: s,
    })
}

/// Smallest `k` with `g_k` not identically zero, `None` when every layer vanishes.
pub fn degeneracy_order(h: &SymmetricKernel, base: &Coordinate) -> Result<Option<usize>> {
    let kernels = hoeffding_kernels(h, base)?;
    let scale = kernels
        .tables
        .iter()
        .flatten()
        .fold(kernels.theta.abs(), |m, v| m.max(v.abs()))
        .max(1.0);
    Ok((1..=h.arity()).find(|&k| !kernels.is_zero(k, 1e-12 * scale)))
}

/// The Hoeffding layers of a U-statistic with their cross-checks.
#[derive(Clone, Debug)]
pub struct HoeffdingReport {
    pub theta: f64,
    /// `H^{(k)}_n`, the U-statistic of kernel `g_k`.
    pub h: Vec<Functional>,
    /// `C(m,k) H^{(k)}_n`, the layers that sum to `U_n - theta`.
    pub layers: Vec<Functional>,
    /// `sup |theta + sum layers - U_n|`.
    pub residual: f64,
    /// Gram matrix of the layers.
    pub gram: Vec<Vec<f64>>,
    pub variance: f64,
    /// `sup |theta + sum H^{(k)} - U_n|`: the sum without binomial weights.
    pub unweighted_residual: f64,
    /// Worst gap between a layer and the order-`k` regrouping of the
    /// symmetric Clark blocks.
    pub symmetric_clark_gap: f64,
    /// Worst gap between a layer and the order-`k` ANOVA component of `U_n`.
    pub anova_gap: f64,
}

/// Serializable digest of a [`HoeffdingReport`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HoeffdingSummary {
    pub theta: f64,
    pub layer_norms: Vec<f64>,
    pub variance: f64,
    pub residual: f64,
    pub unweighted_residual: f64,
    pub max_offdiag: f64,
    pub symmetric_clark_gap: f64,
    pub anova_gap: f64,
}

impl HoeffdingReport {
    pub fn max_offdiag(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, row) in self.gram.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    pub fn summary(&self) -> HoeffdingSummary {
        HoeffdingSummary {
            theta: self.theta,
            layer_norms: self
                .gram
                .iter()
                .enumerate()
                .map(|(k, r)| r[k].sqrt())
                .collect(),
            variance: self.variance,
            residual: self.residual,
            unweighted_residual: self.unweighted_residual,
            max_offdiag: self.max_offdiag(),
            symmetric_clark_gap: self.symmetric_clark_gap,
            anova_gap: self.anova_gap,
        }
    }
}

pub fn hoeffding_decompose(
    space: &ProductSpace,
    h: &SymmetricKernel,
    n: usize,
) -> Result<HoeffdingReport> {
    let m = h.arity();
    let base = iid_base(space, n)?;
    let u = u_statistic(space, h, n)?;
    let kernels = hoeffding_kernels(h, &base)?;
    let mut hs = Vec::with_capacity(m);
    for k in 1..=m {
        let subsets = combinations(n, k);
        let norm = 1.0 / binomial(n, k);
        let mut idx = vec![0usize; k];
        let hk = space.from_fn_on(DepSet::new(0..n), |x| {
            let total: f64 = subsets
                .iter()
                .map(|s| {
                    for (slot, &a) in idx.iter_mut().zip(s) {
                        *slot = x[a];
                    }
                    kernels.g(&idx)
                })
                .sum();
            norm * total
        })?;
        hs.push(hk);
    }
    let layers: Vec<Functional> = hs
        .iter()
        .enumerate()
        .map(|(i, hk)| hk.scale(binomial(m, i + 1)))
        .collect();

    let theta_f = Functional::constant(space, kernels.theta)?;
    let weighted = layers.iter().fold(theta_f.clone(), |acc, l| &acc + l);
    let unweighted = hs.iter().fold(theta_f, |acc, l| &acc + l);
    let gram = layers
        .iter()
        .map(|a| {
            layers
                .iter()
                .map(|b| expectation(space, &(a * b)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let centered = u.add_constant(-kernels.theta);
    let variance = expectation(space, &(&centered * &centered))?;

    // ANOVA of U_n, bucketed by order.
    let dec = anova(space, &u)?;
    let mut by_order = vec![Functional::zeros(space)?; n + 1];
    for (s, comp) in dec.iter() {
        by_order[s.len()] = &by_order[s.len()] + comp;
    }
    // Symmetric Clark blocks, each split into its ANOVA orders.
    let mut regrouped = vec![Functional::zeros(space)?; n + 1];
    if space.dim() <= crate::decompose::SYMMETRIC_MAX_DIM {
        let restricted = restrict(space, n)?;
        let u_r = u_statistic(&restricted, h, n)?;
        for (_, block) in clark_symmetric_blocks(&restricted, &u_r)? {
            for (s, comp) in anova(&restricted, &block)?.iter() {
                regrouped[s.len()] = &regrouped[s.len()] + &lift(space, &restricted, comp, n)?;
            }
        }
    }
    let mut symmetric_clark_gap = 0.0f64;
    let mut anova_gap = 0.0f64;
    for k in 1..=n {
        let layer = if k <= m {
            layers[k - 1].clone()
        } else {
            Functional::zeros(space)?
        };
        symmetric_clark_gap = symmetric_clark_gap.max(layer.max_abs_diff(&regrouped[k]));
        anova_gap = anova_gap.max(layer.max_abs_diff(&by_order[k]));
    }
    Ok(HoeffdingReport {
        theta: kernels.theta,
        h: hs,
        residual: weighted.max_abs_diff(&u),
        unweighted_residual: unweighted.max_abs_diff(&u),
        layers,
        gram,
        variance,
        symmetric_clark_gap,
        anova_gap,
    })
}

/// The sub-space of the first `n` coordinates.
fn restrict(space: &ProductSpace, n: usize) -> Result<ProductSpace> {
    if n == space.dim() {
        return Ok(space.clone());
    }
    ProductSpace::new(space.coords()[..n].to_vec())
}

/// Lifts a table on the first `n` coordinates to the full space.
fn lift(space: &ProductSpace, sub: &ProductSpace, f: &Functional, n: usize) -> Result<Functional> {
    if n == space.dim() {
        return Ok(f.clone());
    }
    space.from_fn_on(f.deps().clone(), |x| f.eval(sub, &x[..n]))
}

/// `L(U_n - theta) = -m (U_n - theta)` for a kernel degenerate up to order `m - 1`.
pub fn check_degenerate_eigen(
    space: &ProductSpace,
    h: &SymmetricKernel,
    n: usize,
) -> Result<IdentityCheck> {
    let base = iid_base(space, n)?;
    let kernels = hoeffding_kernels(h, &base)?;
    let u = u_statistic(space, h, n)?.add_constant(-kernels.theta);
    let lu = number_operator(space, &u)?;
    let m = h.arity() as f64;
    Ok(IdentityCheck::pointwise(
        "degenerate_eigen",
        &lu,
        &u.scale(-m),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(m: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> SymmetricKernel {
        SymmetricKernel::new(m, f).unwrap()
    }

    fn skewed() -> Coordinate {
        Coordinate::real("y", &[-1.0, 0.5, 2.0], &[0.3, 0.5, 0.2]).unwrap()
    }

    #[test]
    fn combinatorics() {
        assert_eq!(binomial(6, 3), 20.0);
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(2, 3).is_empty());
    }

    #[test]
    fn u_statistic_examples() {
        let s = ProductSpace::fair_signs(3);
        let u = u_statistic(&ProductSpace::fair_signs(2), &kernel(2, |x| x[0] * x[1]), 2).unwrap();
        let s2 = ProductSpace::fair_signs(2);
        assert!(u.max_abs_diff(&s2.from_values(|x| x[0] * x[1]).unwrap()) < 1e-15);
        let u = u_statistic(&s, &kernel(1, |x| x[0]), 3).unwrap();
        assert!(u.max_abs_diff(&s.from_values(|x| (x[0] + x[1] + x[2]) / 3.0).unwrap()) < 1e-15);
        let u = u_statistic(&s, &kernel(2, |x| x[0] + x[1]), 3).unwrap();
        let want = s.from_values(|x| 2.0 / 3.0 * (x[0] + x[1] + x[2])).unwrap();
        assert!(u.max_abs_diff(&want) < 1e-15);
        assert!(matches!(
            u_statistic(&s, &kernel(2, |x| x[0]), 1),
            Err(Error::ArityError(_))
        ));
        let mixed = ProductSpace::new(vec![Coordinate::fair_sign("a"), skewed()]).unwrap();
        assert!(matches!(
            u_statistic(&mixed, &kernel(2, |x| x[0] * x[1]), 2),
            Err(Error::NotIid(_))
        ));
    }

    #[test]
    fn kernel_examples() {
        let base = Coordinate::fair_sign("x");
        let k = hoeffding_kernels(&kernel(2, |x| x[0] * x[1]), &base).unwrap();
        assert_eq!(k.theta, 0.0);
        assert!(k.is_zero(1, 0.0));
        assert_eq!(k.g(&[0, 1]), -1.0);
        let k = hoeffding_kernels(&kernel(2, |x| x[0] + x[1]), &base).unwrap();
        assert_eq!((k.g(&[0]), k.g(&[1])), (-1.0, 1.0));
        assert!(k.is_zero(2, 1e-15));
        let k = hoeffding_kernels(&kernel(2, |x| (x[0] + x[1]).powi(2)), &base).unwrap();
        assert_eq!(k.theta, 2.0);
        assert!(k.is_zero(1, 1e-15));
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let (x, y) = (base.value(i).unwrap(), base.value(j).unwrap());
            assert!((k.g(&[i, j]) - 2.0 * x * y).abs() < 1e-15);
        }
    }

    #[test]
    fn degeneracy_examples() {
        let base = Coordinate::fair_sign("x");
        assert_eq!(
            degeneracy_order(&kernel(2, |x| x[0] * x[1]), &base).unwrap(),
            Some(2)
        );
        assert_eq!(
            degeneracy_order(&kernel(2, |x| x[0] + x[1]), &base).unwrap(),
            Some(1)
        );
        assert_eq!(degeneracy_order(&kernel(2, |_| 3.0), &base).unwrap(), None);
        let s = ProductSpace::fair_signs(3);
        assert!(check_degenerate_eigen(&s, &kernel(2, |x| x[0] * x[1]), 3)
            .unwrap()
            .holds(1e-12));
    }

    #[test]
    fn decomposition_examples() {
        let s = ProductSpace::fair_signs(3);
        let r = hoeffding_decompose(&s, &kernel(2, |x| x[0] * x[1]), 3).unwrap();
        assert!(r.layers[0].sup_norm() < 1e-15);
        let u = u_statistic(&s, &kernel(2, |x| x[0] * x[1]), 3).unwrap();
        assert!(r.layers[1].max_abs_diff(&u) < 1e-15);
        let r = hoeffding_decompose(&s, &kernel(2, |x| x[0] + x[1]), 3).unwrap();
        assert!(r.layers[1].sup_norm() < 1e-15);
        let want = s.from_values(|x| 2.0 / 3.0 * (x[0] + x[1] + x[2])).unwrap();
        assert!(r.layers[0].max_abs_diff(&want) < 1e-15);
        assert!(r.unweighted_residual > 0.1);
        let r = hoeffding_decompose(&s, &kernel(2, |_| 1.5), 3).unwrap();
        assert_eq!(r.theta, 1.5);
        assert!(r.layers.iter().all(|l| l.sup_norm() < 1e-15));
    }

    #[test]
    fn cross_checks() {
        let kernels = [
            kernel(1, |x| x[0].powi(3)),
            kernel(2, |x| (x[0] - x[1]).powi(2) + x[0] * x[1]),
            kernel(3, |x| {
                x[0] * x[1] * x[2] + x[0] + x[1] + x[2] + (x[0] * x[1] * x[2]).abs()
            }),
        ];
        for base in [Coordinate::fair_sign("x"), skewed()] {
            for h in &kernels {
                for n in h.arity()..=5 {
                    let s = ProductSpace::iid(&base, n);
                    let r = hoeffding_decompose(&s, h, n).unwrap();
                    assert!(r.residual < 1e-12, "residual {}", r.residual);
                    assert!(
                        r.symmetric_clark_gap < 1e-12,
                        "gap {}",
                        r.symmetric_clark_gap
                    );
                    assert!(r.anova_gap < 1e-12);
                    assert!(r.max_offdiag() < 1e-12);
                    let energy: f64 = (0..r.gram.len()).map(|k| r.gram[k][k]).sum();
                    assert!((energy - r.variance).abs() < 1e-12);
                }
            }
        }
    }
}
