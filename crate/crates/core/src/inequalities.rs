//! Log-Sobolev and concentration inequalities.

use rand::Rng;
use serde::Serialize;

use crate::calculus::gradient_at;
use crate::error::{Error, Result};
use crate::space::{
    check_order, conditional_drop, conditional_on, expectation, Functional, ProductSpace,
};

/// `(Ent(G), sum_k E[|D_k G|^2 / E[G | G_k]])`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogSobolev {
    pub entropy: f64,
    pub rhs: f64,
}

impl LogSobolev {
    pub fn holds(&self) -> bool {
        self.entropy <= self.rhs + 1e-12
    }
}

pub fn log_sobolev(space: &ProductSpace, g: &Functional) -> Result<LogSobolev> {
    let g = space.tabulate(g)?;
    let min = g.min();
    if !(min > 0.0) {
        return Err(Error::NonPositiveFunctional(min));
    }
    let mean = expectation(space, &g)?;
    let entropy = expectation(space, &g.map(|v| v * v.ln()))? - mean * mean.ln();
    let mut rhs = 0.0;
    for k in g.deps().iter() {
        let dk = gradient_at(space, &g, k)?;
        let ek = conditional_drop(space, &g, k)?;
        rhs += expectation(space, &dk.zip_with(&ek, |d, e| d * d / e))?;
    }
    Ok(LogSobolev {
        entropy: entropy.max(0.0),
        rhs,
    })
}

/// `l(x, y) = (x+y) log(x+y) - x log x - (log x + 1) y` for `x > 0`, `x + y > 0`.
pub fn ell(x: f64, y: f64) -> f64 {
    (x + y) * (x + y).ln() - x * x.ln() - (x.ln() + 1.0) * y
}

/// Herbst-type constant `M` and the tail bound it yields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Concentration {
    pub m: f64,
    /// False when `M` comes from sampling and is only a lower estimate.
    pub certified: bool,
}

impl Concentration {
    /// Bound on `P(F - E[F] >= x)`.
    pub fn tail_bound(&self, x: f64) -> f64 {
        if self.m <= 0.0 {
            if x <= 0.0 {
                1.0
            } else {
                0.0
            }
        } else if x <= 0.0 {
            1.0
        } else {
            (-x * x / (2.0 * self.m)).exp()
        }
    }
}

/// `M = sup_X sum_k |D_k F(X)| E[|D_k F| | F_k](X)`, exact.
pub fn concentration(
    space: &ProductSpace,
    f: &Functional,
    order: &[usize],
) -> Result<Concentration> {
    check_order(space, order)?;
    let f = space.tabulate(f)?;
    let mut acc = Functional::zeros(space)?;
    for (pos, &k) in order.iter().enumerate() {
        let dk = gradient_at(space, &f, k)?.map(f64::abs);
        let cond = conditional_on(space, &dk, &order[..=pos])?;
        acc = &acc + &(&dk * &cond);
    }
    Ok(Concentration {
        m: acc.values().iter().copied().fold(0.0, f64::max),
        certified: true,
    })
}

/// Sampled maximum of the same quantity; a lower estimate of `M`.
///
/// Works on black boxes: `D_k F` sums over the support of coordinate `k`
/// and `E[|D_k F| | F_k]` is averaged over `inner` fresh suffixes.
pub fn concentration_sampled<R: Rng + ?Sized>(
    space: &ProductSpace,
    f: &Functional,
    order: &[usize],
    samples: usize,
    inner: usize,
    rng: &mut R,
) -> Result<Concentration> {
    check_order(space, order)?;
    let grad_abs = |x: &[usize], k: usize| -> f64 {
        let mut y = x.to_vec();
        let avg: f64 = space
            .coord(k)
            .pmf()
            .iter()
            .enumerate()
            .map(|(v, p)| {
                y[k] = v;
                p * f.eval(space, &y)
            })
            .sum();
        (f.eval(space, x) - avg).abs()
    };
    let mut best = 0.0f64;
    for _ in 0..samples {
        let x = space.sample_config(rng).0;
        let mut total = 0.0;
        for (pos, &k) in order.iter().enumerate() {
            let d = grad_abs(&x, k);
            if d == 0.0 {
                continue;
            }
            let mut cond = 0.0;
            for _ in 0..inner {
                let mut y = x.clone();
                for &b in &order[pos + 1..] {
                    y[b] = space.coord(b).sample(rng);
                }
                cond += grad_abs(&y, k);
            }
            total += d * cond / inner as f64;
        }
        best = best.max(total);
    }
    Ok(Concentration {
        m: best,
        certified: false,
    })
}

/// `P(F - E[F] >= x)` by enumeration.
pub fn exact_tail(space: &ProductSpace, f: &Functional, x: f64) -> Result<f64> {
    let mean = expectation(space, f)?;
    let w = space.weights()?;
    let f = space.tabulate(f)?;
    Ok(f.values()
        .iter()
        .zip(w)
        .filter(|(v, _)| **v - mean >= x)
        .map(|(_, w)| w)
        .sum())
}

/// `(x, exact tail, bound)` rows on a grid.
pub fn tail_table(
    space: &ProductSpace,
    f: &Functional,
    conc: &Concentration,
    grid: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    grid.iter()
        .map(|&x| Ok((x, exact_tail(space, f, x)?, conc.tail_bound(x))))
        .collect()
}
