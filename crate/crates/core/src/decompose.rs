//! Clark representations, Helmholtz decomposition, covariance and Poincaré.

use serde::Serialize;

use crate::calculus::{
    divergence, gradient, gradient_at, invert_number_operator, CoordinateField, IdentityCheck,
};
use crate::error::{Error, Result};
use crate::space::{check_order, conditional_on, expectation, Functional, ProductSpace};
use crate::ustat::binomial;

/// Largest space accepted by the subset-sum symmetric Clark formula.
pub const SYMMETRIC_MAX_DIM: usize = 12;

/// Terms of a Clark-type decomposition with their diagnostics.
#[derive(Clone, Debug)]
pub struct DecompositionReport {
    /// Coordinate attached to each term.
    pub order: Vec<usize>,
    pub terms: Vec<Functional>,
    /// `sup |F - E[F] - sum terms|`.
    pub residual: f64,
    pub gram: Vec<Vec<f64>>,
    pub variance: f64,
    /// `sum_k E[T_k^2]`.
    pub term_energy: f64,
    /// Whether the terms are orthogonal by construction.
    pub orthogonal: bool,
}

/// Serializable digest of a [`DecompositionReport`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionSummary {
    pub order: Vec<usize>,
    pub term_norms: Vec<f64>,
    pub residual: f64,
    pub max_offdiag: f64,
    pub variance: f64,
    pub term_energy: f64,
    pub orthogonal: bool,
}

impl DecompositionReport {
    fn build(
        space: &ProductSpace,
        f: &Functional,
        order: Vec<usize>,
        terms: Vec<Functional>,
        orthogonal: bool,
    ) -> Result<Self> {
        let mean = expectation(space, f)?;
        let centered = f.add_constant(-mean);
        let mut total = Functional::zeros(space)?;
        for t in &terms {
            total = &total + t;
        }
        let residual = total.max_abs_diff(&centered);
        let gram = terms
            .iter()
            .map(|a| {
                terms
                    .iter()
                    .map(|b| expectation(space, &(a * b)))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let variance = expectation(space, &(&centered * &centered))?;
        let term_energy = (0..terms.len()).map(|k| gram[k][k]).sum();
        Ok(DecompositionReport {
            order,
            terms,
            residual,
            gram,
            variance,
            term_energy,
            orthogonal,
        })
    }

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

    pub fn summary(&self) -> DecompositionSummary {
        DecompositionSummary {
            order: self.order.clone(),
            term_norms: self
                .gram
                .iter()
                .enumerate()
                .map(|(k, r)| r[k].sqrt())
                .collect(),
            residual: self.residual,
            max_offdiag: self.max_offdiag(),
            variance: self.variance,
            term_energy: self.term_energy,
            orthogonal: self.orthogonal,
        }
    }
}

/// Forward Clark: `T_k = D_k E[F | F_k]`.
pub fn clark(space: &ProductSpace, f: &Functional, order: &[usize]) -> Result<DecompositionReport> {
    check_order(space, order)?;
    let f = space.tabulate(f)?;
    let terms = (0..order.len())
        .map(|k| gradient_at(space, &conditional_on(space, &f, &order[..=k])?, order[k]))
        .collect::<Result<Vec<_>>>()?;
    DecompositionReport::build(space, &f, order.to_vec(), terms, true)
}

/// Reverse Clark: `T_k = D_k E[F | H_{k-1}]`, `H_{k-1}` generated by the
/// coordinates from position `k` onward.
pub fn clark_reverse(
    space: &ProductSpace,
    f: &Functional,
    order: &[usize],
) -> Result<DecompositionReport> {
    check_order(space, order)?;
    let f = space.tabulate(f)?;
    let terms = (0..order.len())
        .map(|k| gradient_at(space, &conditional_on(space, &f, &order[k..])?, order[k]))
        .collect::<Result<Vec<_>>>()?;
    DecompositionReport::build(space, &f, order.to_vec(), terms, true)
}

fn subsets_of(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1usize..(1 << n)).map(move |mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
}

/// Symmetric Clark: `sum_B C(|A|,|B|)^{-1} |B|^{-1} sum_{b in B} D_b E[F | X_B]`,
/// one term per coordinate `b`.
pub fn clark_symmetric(space: &ProductSpace, f: &Functional) -> Result<DecompositionReport> {
    let n = space.dim();
    if n > SYMMETRIC_MAX_DIM {
        return Err(Error::ExactModeOverflow(format!(
            "symmetric Clark over {n} coordinates (limit {SYMMETRIC_MAX_DIM})"
        )));
    }
    let f = space.tabulate(f)?;
    let mut terms = vec![Functional::zeros(space)?; n];
    for b_set in subsets_of(n) {
        let w = 1.0 / (binomial(n, b_set.len()) * b_set.len() as f64);
        let cond = conditional_on(space, &f, &b_set)?;
        for &b in &b_set {
            terms[b] = &terms[b] + &gradient_at(space, &cond, b)?.scale(w);
        }
    }
    DecompositionReport::build(space, &f, (0..n).collect(), terms, false)
}

/// Pieces of the symmetric Clark sum indexed by the subset `B`:
/// `C(|A|,|B|)^{-1} |B|^{-1} sum_{b in B} D_b E[F | X_B]`.
pub fn clark_symmetric_blocks(
    space: &ProductSpace,
    f: &Functional,
) -> Result<Vec<(Vec<usize>, Functional)>> {
    let n = space.dim();
    if n > SYMMETRIC_MAX_DIM {
        return Err(Error::ExactModeOverflow(format!(
            "symmetric Clark over {n} coordinates (limit {SYMMETRIC_MAX_DIM})"
        )));
    }
    let f = space.tabulate(f)?;
    subsets_of(n)
        .map(|b_set| {
            let w = 1.0 / (binomial(n, b_set.len()) * b_set.len() as f64);
            let cond = conditional_on(space, &f, &b_set)?;
            let mut acc = Functional::zeros(space)?;
            for &b in &b_set {
                acc = &acc + &gradient_at(space, &cond, b)?;
            }
            Ok((b_set, acc.scale(w)))
        })
        .collect()
}

/// Per-coordinate forward Clark terms averaged over every order.
pub fn clark_order_average(space: &ProductSpace, f: &Functional) -> Result<Vec<Functional>> {
    let n = space.dim();
    if n > 8 {
        return Err(Error::EnumOverflow(format!("{n}! orders")));
    }
    let mut acc = vec![Functional::zeros(space)?; n];
    let mut count = 0usize;
    for order in permutations(n) {
        let rep = clark(space, f, &order)?;
        for (k, t) in rep.terms.iter().enumerate() {
            acc[order[k]] = &acc[order[k]] + t;
        }
        count += 1;
    }
    Ok(acc.iter().map(|t| t.scale(1.0 / count as f64)).collect())
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("successor");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

/// `U = D phi + V` with `E[phi] = 0` and `delta V = 0`.
#[derive(Clone, Debug)]
pub struct Helmholtz {
    pub phi: Functional,
    pub v: CoordinateField,
    /// `sup_a sup |U_a - D_a phi - V_a|`.
    pub residual: f64,
    /// `sup |delta V|`.
    pub divergence_v: f64,
    pub mean_phi: f64,
}

/// Helmholtz decomposition with `phi = -L^{-1} delta U`.
pub fn helmholtz(space: &ProductSpace, u: &CoordinateField) -> Result<Helmholtz> {
    let du = divergence(space, u)?;
    let phi = invert_number_operator(space, &du)?.scale(-1.0);
    let grad = gradient(space, &phi)?;
    let mut v = CoordinateField::new();
    for a in 0..space.dim() {
        let ua = u.component(space, a)?;
        let dphi = match grad.get(a) {
            Some(g) => g.clone(),
            None => Functional::zeros(space)?,
        };
        let va = &ua - &dphi;
        if u.get(a).is_some() || va.sup_norm() > 0.0 {
            v.insert(a, va);
        }
    }
    helmholtz_diagnostics(space, u, phi, v)
}

/// The construction `V_a = E[U_a | G_a]`, `phi = sum_k E[D_k U_k | F_k]`,
/// evaluated as stated; its residuals show whether it decomposes `U`.
pub fn helmholtz_literal(
    space: &ProductSpace,
    u: &CoordinateField,
    order: &[usize],
) -> Result<Helmholtz> {
    check_order(space, order)?;
    let mut phi = Functional::zeros(space)?;
    for (pos, &k) in order.iter().enumerate() {
        let duk = gradient_at(space, &u.component(space, k)?, k)?;
        phi = &phi + &conditional_on(space, &duk, &order[..=pos])?;
    }
    let mut v = CoordinateField::new();
    for a in 0..space.dim() {
        let ua = u.component(space, a)?;
        v.insert(a, crate::space::conditional_drop(space, &ua, a)?);
    }
    helmholtz_diagnostics(space, u, phi, v)
}

fn helmholtz_diagnostics(
    space: &ProductSpace,
    u: &CoordinateField,
    phi: Functional,
    v: CoordinateField,
) -> Result<Helmholtz> {
    let mut residual = 0.0f64;
    for a in 0..space.dim() {
        let rebuilt = &gradient_at(space, &phi, a)? + &v.component(space, a)?;
        residual = residual.max(rebuilt.max_abs_diff(&u.component(space, a)?));
    }
    let divergence_v = divergence(space, &v)?.sup_norm();
    let mean_phi = expectation(space, &phi)?;
    Ok(Helmholtz {
        phi,
        v,
        residual,
        divergence_v,
        mean_phi,
    })
}

/// Decomposes `D phi + V` again and reports the distance to `(phi, V)`.
pub fn check_helmholtz_round_trip(space: &ProductSpace, h: &Helmholtz) -> Result<IdentityCheck> {
    let mut rebuilt = CoordinateField::new();
    for a in 0..space.dim() {
        rebuilt.insert(
            a,
            &gradient_at(space, &h.phi, a)? + &h.v.component(space, a)?,
        );
    }
    let again = helmholtz(space, &rebuilt)?;
    let mut gap = again.phi.max_abs_diff(&h.phi);
    for a in 0..space.dim() {
        gap = gap.max(
            again
                .v
                .component(space, a)?
                .max_abs_diff(&h.v.component(space, a)?),
        );
    }
    Ok(IdentityCheck {
        name: "helmholtz_round_trip".into(),
        lhs: h.phi.sup_norm(),
        rhs: again.phi.sup_norm(),
        residual: gap,
    })
}

/// `cov(F, G) = E[sum_k D_k E[F | F_k] D_k G]`.
pub fn covariance_identity(
    space: &ProductSpace,
    f: &Functional,
    g: &Functional,
    order: &[usize],
) -> Result<IdentityCheck> {
    check_order(space, order)?;
    let f = space.tabulate(f)?;
    let g = space.tabulate(g)?;
    let lhs = expectation(space, &(&f * &g))? - expectation(space, &f)? * expectation(space, &g)?;
    let mut rhs = 0.0;
    for (pos, &k) in order.iter().enumerate() {
        let t = gradient_at(space, &conditional_on(space, &f, &order[..=pos])?, k)?;
        rhs += expectation(space, &(&t * &gradient_at(space, &g, k)?))?;
    }
    Ok(IdentityCheck::new("covariance", lhs, rhs))
}

/// `(var F, ||DF||^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Poincare {
    pub variance: f64,
    pub energy: f64,
}

impl Poincare {
    pub fn holds(&self) -> bool {
        self.variance <= self.energy + 1e-12
    }
}

pub fn poincare(space: &ProductSpace, f: &Functional) -> Result<Poincare> {
    let f = space.tabulate(f)?;
    let mean = expectation(space, &f)?;
    let c = f.add_constant(-mean);
    Ok(Poincare {
        variance: expectation(space, &(&c * &c))?,
        energy: gradient(space, &f)?.norm_sq(space)?,
    })
}

/// `D_k E[F | F_k] = E[D_k F | F_k]` along `order`; worst pointwise residual.
pub fn check_conditional_commutation(
    space: &ProductSpace,
    f: &Functional,
    order: &[usize],
) -> Result<IdentityCheck> {
    check_order(space, order)?;
    let mut worst = 0.0f64;
    for (pos, &k) in order.iter().enumerate() {
        let prefix = &order[..=pos];
        let lhs = gradient_at(space, &conditional_on(space, f, prefix)?, k)?;
        let rhs = conditional_on(space, &gradient_at(space, f, k)?, prefix)?;
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    Ok(IdentityCheck {
        name: "conditional_commutation".into(),
        lhs: 0.0,
        rhs: 0.0,
        residual: worst,
    })
}
