//! Ewens permutations through the index space `I_1 x ... x I_N`.
//!
//! Indices and permutation images are 0-based: coordinate `k` ranges over
//! `0..=k` and the permutation acts on `0..N`. Outcome labels and real
//! embeddings of the index space are the 1-based values.

use rand::Rng;
use serde::Serialize;

use crate::decompose::{clark_reverse, permutations};
use crate::error::{Error, Result};
use crate::space::{Coordinate, DepSet, Functional, Outcome, ProductSpace};

/// Largest `N` for which `N!` enumeration is attempted.
pub const ENUM_MAX_N: usize = 8;

/// A bijection of `0..N` given by its image array.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, bound: n });
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::BadParameters(format!("image {v} repeated")));
            }
        }
        Ok(Permutation(images))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (x, &y) in self.0.iter().enumerate() {
            inv[y] = x;
        }
        Permutation(inv)
    }

    pub fn fixed_points(&self) -> usize {
        self.0.iter().enumerate().filter(|(x, y)| x == *y).count()
    }

    pub fn cycles(&self) -> usize {
        let mut seen = vec![false; self.0.len()];
        let mut count = 0;
        for start in 0..self.0.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                x = self.0[x];
            }
        }
        count
    }
}

fn check_index_vector(i: &[usize]) -> Result<()> {
    for (k, &v) in i.iter().enumerate() {
        if v > k {
            return Err(Error::IndexOutOfRange {
                index: v,
                bound: k + 1,
            });
        }
    }
    Ok(())
}

/// `Gamma(i) = (N-1, i_{N-1}) o ... o (1, i_1)`, right-most factor first.
pub fn gamma_map(i: &[usize]) -> Result<Permutation> {
    check_index_vector(i)?;
    let n = i.len();
    let mut img: Vec<usize> = (0..n).collect();
    let mut inv: Vec<usize> = (0..n).collect();
    for (k, &ik) in i.iter().enumerate().skip(1) {
        // Post-compose with the transposition (k, ik): swap the values k and ik.
        let (pk, pi) = (inv[k], inv[ik]);
        img[pk] = ik;
        img[pi] = k;
        inv.swap(k, ik);
    }
    Ok(Permutation(img))
}

/// Peels `i_{N-1} = sigma(N-1)` and recurses on `(N-1, i_{N-1}) o sigma`.
pub fn gamma_inverse(sigma: &Permutation) -> Vec<usize> {
    let n = sigma.len();
    let mut img = sigma.0.clone();
    let mut inv = sigma.inverse().0;
    let mut i = vec![0; n];
    for k in (1..n).rev() {
        let ik = img[k];
        i[k] = ik;
        let (pk, pi) = (inv[k], inv[ik]);
        img[pk] = ik;
        img[pi] = k;
        inv.swap(k, ik);
    }
    i
}

/// Feller coupling: `sigma_{k+1} = sigma_k o (sigma_k^{-1}(i_k), k)`.
pub fn feller_map(i: &[usize]) -> Result<Permutation> {
    check_index_vector(i)?;
    let n = i.len();
    let mut img: Vec<usize> = (0..n).collect();
    let mut inv: Vec<usize> = (0..n).collect();
    for (k, &ik) in i.iter().enumerate().skip(1) {
        let a = inv[ik];
        // sigma o (a, k): position a now maps to sigma(k) = k, position k to sigma(a).
        let (sa, sk) = (img[a], img[k]);
        img[a] = sk;
        img[k] = sa;
        inv[sk] = a;
        inv[sa] = k;
    }
    Ok(Permutation(img))
}

/// The Ewens model with parameter `t > 0` on `N` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EwensModel {
    n: usize,
    t: f64,
}

impl EwensModel {
    pub fn new(n: usize, t: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadParameters("N must be at least 1".into()));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::BadParameters(format!("t = {t} must be positive")));
        }
        Ok(EwensModel { n, t })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `p_k = 1/(t+k-1)`, 1-based `k`.
    pub fn p(&self, k: usize) -> f64 {
        1.0 / (self.t + k as f64 - 1.0)
    }

    /// `prod_{j>k} (1 - p_j) = (t+k-1)/(t+N-1)`, the probability that no later
    /// index hits `k`.
    pub fn alpha(&self, k: usize) -> f64 {
        (self.t + k as f64 - 1.0) / (self.t + self.n as f64 - 1.0)
    }

    /// `prod_{j=k+1}^N (j-1)/(t+j-1)` as stated; equals [`Self::alpha`] only at `t = 1`.
    pub fn alpha_stated(&self, k: usize) -> f64 {
        (k + 1..=self.n)
            .map(|j| (j as f64 - 1.0) / (self.t + j as f64 - 1.0))
            .product()
    }

    /// Law of `I_k` (1-based `k`) as a coordinate with values `1..=k`.
    pub fn coordinate(&self, k: usize) -> Coordinate {
        let p = self.p(k);
        let outcomes = (1..=k).map(|j| Outcome {
            label: j.to_string(),
            value: Some(j as f64),
        });
        let pmf = (1..=k)
            .map(|j| if j == k { self.t * p } else { p })
            .collect();
        Coordinate::new(format!("I{k}"), outcomes.collect(), pmf).expect("Ewens coordinate")
    }

    /// The index space `I_1 x ... x I_N` with the product of the `P_k`.
    pub fn space(&self) -> ProductSpace {
        ProductSpace::new((1..=self.n).map(|k| self.coordinate(k)).collect()).expect("index space")
    }

    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        (0..self.n)
            .map(|k| {
                let u: f64 = rng.random::<f64>() * (self.t + k as f64);
                if u < self.t {
                    k
                } else {
                    ((u - self.t).floor() as usize).min(k.saturating_sub(1))
                }
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        gamma_map(&self.sample_indices(rng)).expect("sampled indices are valid")
    }

    pub fn sample_feller<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        feller_map(&self.sample_indices(rng)).expect("sampled indices are valid")
    }
}

/// `prod_k P_k({i_k})` with `i = Gamma^{-1}(sigma)`.
pub fn ewens_pmf(sigma: &Permutation, t: f64) -> Result<f64> {
    let model = EwensModel::new(sigma.len().max(1), t)?;
    Ok(gamma_inverse(sigma)
        .iter()
        .enumerate()
        .map(|(k, &ik)| {
            let p = model.p(k + 1);
            if ik == k {
                t * p
            } else {
                p
            }
        })
        .product())
}

/// `t^{cyc(sigma)} / ((t+1)...(t+N-1))`, the stated closed form.
pub fn ewens_pmf_stated(sigma: &Permutation, t: f64) -> f64 {
    let denom: f64 = (1..sigma.len()).map(|j| t + j as f64).product();
    t.powi(sigma.cycles() as i32) / denom
}

/// `U_k = 1(I_k = k) prod_{m>k} 1(I_m != k)` for 1-based `k`.
pub fn fixed_point_indicator(model: &EwensModel, k: usize) -> Result<Functional> {
    let space = model.space();
    let k0 = k - 1;
    space.from_fn_on(DepSet::new(k0..model.n), |i| {
        let hit = i[k0] == k0 && i[k0 + 1..].iter().all(|&m| m != k0);
        hit as u8 as f64
    })
}

/// `U_1, ..., U_N` on the index space.
pub fn fixed_point_field(model: &EwensModel) -> Result<Vec<Functional>> {
    (1..=model.n)
        .map(|k| fixed_point_indicator(model, k))
        .collect()
}

/// Closed-form reverse-Clark pieces of `U_k`: the mean followed by the terms
/// attached to coordinates `k, k+1, ..., N`.
pub fn fixed_point_expansion(model: &EwensModel, k: usize) -> Result<Vec<Functional>> {
    let space = model.space();
    let t = model.t;
    let n = model.n;
    let k0 = k - 1;
    let pk = model.p(k);
    let mut out = vec![Functional::constant(&space, t * pk * model.alpha(k))?];
    out.push(space.from_fn_on(DepSet::new(k0..n), |i| {
        let lead = (i[k0] == k0) as u8 as f64 - t * pk;
        let tail = i[k0 + 1..].iter().all(|&m| m != k0);
        lead * tail as u8 as f64
    })?);
    for l in k + 1..=n {
        let l0 = l - 1;
        let coef = -t * pk * (t + k as f64 - 1.0) / (t + l as f64 - 2.0);
        let pl = model.p(l);
        out.push(space.from_fn_on(DepSet::new(l0..n), |i| {
            let lead = (i[l0] == k0) as u8 as f64 - pl;
            let tail = i[l0 + 1..].iter().all(|&m| m != k0);
            coef * lead * tail as u8 as f64
        })?);
    }
    Ok(out)
}

/// The expansion as stated: the inner sum stops at `j = N-k-1` and uses the
/// stated `alpha_k`.
pub fn fixed_point_expansion_stated(model: &EwensModel, k: usize) -> Result<Functional> {
    let space = model.space();
    let t = model.t;
    let n = model.n;
    let k0 = k - 1;
    let pk = model.p(k);
    let alpha = model.alpha_stated(k);
    space.from_fn(|i| {
        let tail_from = |l0: usize| i[l0 + 1..].iter().all(|&m| m != k0) as u8 as f64;
        let mut v = t * pk * alpha + ((i[k0] == k0) as u8 as f64 - t * pk) * tail_from(k0);
        for j in 1..(n - k) {
            let l = k + j;
            let coef = (t + k as f64 - 1.0) / (t + l as f64 - 2.0);
            v -= t * pk * coef * ((i[l - 1] == k0) as u8 as f64 - model.p(l)) * tail_from(l - 1);
        }
        v
    })
}

/// `E[T_l^2]` for the reverse-Clark term of `C_1` attached to coordinate `l`.
fn clark_term_energy(model: &EwensModel, l: usize) -> f64 {
    let t = model.t;
    let pl = model.p(l);
    let q = model.alpha(l);
    let r: f64 = (l + 1..=model.n).map(|m| 1.0 - 2.0 * model.p(m)).product();
    let a2 = t * pl * (1.0 - t * pl) * q;
    if l == 1 {
        return a2;
    }
    let c = t / (t + l as f64 - 2.0);
    let lm1 = (l - 1) as f64;
    let lm2 = (l - 2) as f64;
    let b2 = c * c * (lm1 * pl * (1.0 - pl) * q - lm1 * lm2 * pl * pl * r);
    let ab = -c * lm1 * t * pl * pl * r;
    a2 - 2.0 * ab + b2
}

/// `t N/(t+N-1) (t/(t+N-1) + 1 - (2t^2/N) sum_k 1/(t+k-1))`, as stated.
pub fn variance_stated(model: &EwensModel) -> f64 {
    let (t, n) = (model.t, model.n as f64);
    let h: f64 = (1..=model.n).map(|k| model.p(k)).sum();
    n * t / (t + n - 1.0) * (t / (t + n - 1.0) + 1.0 - 2.0 * t * t / n * h)
}

/// Fixed-point statistics of an Ewens permutation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct C1Stats {
    pub n: usize,
    pub t: f64,
    /// `tN/(t+N-1)`.
    pub mean_formula: f64,
    pub mean_enum: Option<f64>,
    /// The stated variance display evaluated literally.
    pub var_paper_formula: f64,
    /// Sum of the squared norms of the reverse-Clark terms (closed form).
    pub var_clark: f64,
    /// The same sum with every term computed by enumeration of the index space.
    pub var_clark_enum: Option<f64>,
    pub var_enum: Option<f64>,
    /// `|var_paper_formula - var_clark| > 1e-9`.
    pub var_discrepancy: bool,
    pub var_discrepancy_size: f64,
    /// `|mean_formula - mean_enum| > 1e-12`.
    pub mean_discrepancy: bool,
}

/// Mean and variance statistics; `enumerate` adds the `N!` oracles.
pub fn c1_stats(model: &EwensModel, enumerate: bool) -> Result<C1Stats> {
    let (t, n) = (model.t, model.n);
    let mean_formula = t * n as f64 / (t + n as f64 - 1.0);
    let var_paper_formula = variance_stated(model);
    let var_clark: f64 = (1..=n).map(|l| clark_term_energy(model, l)).sum();
    let (mean_enum, var_enum, var_clark_enum) = if enumerate {
        if n > ENUM_MAX_N {
            return Err(Error::EnumOverflow(format!("N = {n} exceeds {ENUM_MAX_N}")));
        }
        let (m, v) = enumerate_c1(model)?;
        (Some(m), Some(v), Some(clark_variance_enum(model)?))
    } else {
        (None, None, None)
    };
    let gap = (var_paper_formula - var_clark).abs();
    Ok(C1Stats {
        n,
        t,
        mean_formula,
        mean_enum,
        var_paper_formula,
        var_clark,
        var_clark_enum,
        var_enum,
        var_discrepancy: gap > 1e-9,
        var_discrepancy_size: gap,
        mean_discrepancy: mean_enum.is_some_and(|m| (m - mean_formula).abs() > 1e-12),
    })
}

/// `(E C_1, var C_1)` by summing the pmf over every permutation of `S_N`.
pub fn enumerate_c1(model: &EwensModel) -> Result<(f64, f64)> {
    if model.n > ENUM_MAX_N {
        return Err(Error::EnumOverflow(format!(
            "N = {} exceeds {ENUM_MAX_N}",
            model.n
        )));
    }
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for images in permutations(model.n) {
        let sigma = Permutation(images);
        let p = ewens_pmf(&sigma, model.t)?;
        let c = sigma.fixed_points() as f64;
        m1 += p * c;
        m2 += p * c * c;
    }
    Ok((m1, m2 - m1 * m1))
}

/// `sum_l E[T_l^2]` with the reverse-Clark terms of `C_1` computed generically.
pub fn clark_variance_enum(model: &EwensModel) -> Result<f64> {
    if model.n > ENUM_MAX_N {
        return Err(Error::EnumOverflow(format!(
            "N = {} exceeds {ENUM_MAX_N}",
            model.n
        )));
    }
    let space = model.space();
    let c1 = space.from_fn(|i| {
        gamma_map(i)
            .map(|s| s.fixed_points() as f64)
            .unwrap_or(f64::NAN)
    })?;
    let order: Vec<usize> = (0..model.n).collect();
    Ok(clark_reverse(&space, &c1, &order)?.term_energy)
}

/// Sampled mean and variance of the fixed-point count with standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct C1MonteCarlo {
    pub samples: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub var: f64,
    pub var_se: f64,
}

pub fn c1_monte_carlo<R: Rng + ?Sized>(
    model: &EwensModel,
    samples: usize,
    rng: &mut R,
) -> Result<C1MonteCarlo> {
    if samples < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples,
        });
    }
    let xs: Vec<f64> = (0..samples)
        .map(|_| model.sample(rng).fixed_points() as f64)
        .collect();
    let n = samples as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    Ok(C1MonteCarlo {
        samples,
        mean,
        mean_se: (var / n).sqrt(),
        var,
        var_se: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    })
}
