//! The Ornstein-Uhlenbeck semigroup: Mehler formula, jump simulator, resolvent.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::calculus::{gradient_at, mask_to_subset, subset_conditionals, IdentityCheck};
use crate::error::{Error, Result};
use crate::space::{
    check_order, conditional_on, expectation, Configuration, Functional, ProductSpace,
};

/// Which branch of the per-coordinate mixture receives the weight `e^{-t}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MehlerConvention {
    /// Keep the current outcome with probability `e^{-t}`.
    #[default]
    KeepDecays,
    /// Keep with probability `1 - e^{-t}`.
    KeepGrows,
}

impl MehlerConvention {
    pub fn keep_probability(self, t: f64) -> f64 {
        match self {
            MehlerConvention::KeepDecays => (-t).exp(),
            MehlerConvention::KeepGrows => -(-t).exp_m1(),
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

/// Applies the keep/resample mixture on every dependency except `frozen`.
fn mix(
    space: &ProductSpace,
    f: &Functional,
    keep: f64,
    frozen: Option<usize>,
) -> Result<Functional> {
    let f = space.tabulate(f)?;
    let mut values = f.values().to_vec();
    for a in f.deps().iter().filter(|&a| Some(a) != frozen) {
        values = space.mix_coordinate(&values, a, keep);
    }
    Functional::from_table(space, values, f.deps().clone())
}

/// `P_t F` with keep-probability `e^{-t}`.
pub fn mehler_apply(space: &ProductSpace, f: &Functional, t: f64) -> Result<Functional> {
    mehler_apply_with(space, f, t, MehlerConvention::default())
}

pub fn mehler_apply_with(
    space: &ProductSpace,
    f: &Functional,
    t: f64,
    convention: MehlerConvention,
) -> Result<Functional> {
    check_time(t)?;
    mix(space, f, convention.keep_probability(t), None)
}

/// `P_t` acting on every coordinate except `a`.
pub fn mehler_apply_except(
    space: &ProductSpace,
    f: &Functional,
    t: f64,
    a: usize,
) -> Result<Functional> {
    check_time(t)?;
    space.check_index(a)?;
    mix(space, f, (-t).exp(), Some(a))
}

/// Sample path of the jump process behind `P_t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub initial: Configuration,
    /// `(time, coordinate, new outcome)` with strictly increasing times.
    pub jumps: Vec<(f64, usize, usize)>,
}

impl Trajectory {
    pub fn state_at(&self, t: f64) -> Configuration {
        let mut x = self.initial.clone();
        for &(s, a, k) in &self.jumps {
            if s > t {
                break;
            }
            x.0[a] = k;
        }
        x
    }

    pub fn final_state(&self) -> Configuration {
        self.state_at(f64::INFINITY)
    }
}

/// Rate-`|A|` Poisson clock; each ring resamples a uniformly chosen coordinate.
pub fn simulate<R: Rng + ?Sized>(
    space: &ProductSpace,
    x0: &Configuration,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    check_time(horizon)?;
    space.check_config(&x0.0)?;
    let n = space.dim();
    let mut jumps = Vec::new();
    if n > 0 {
        let clock = Exp::new(n as f64).map_err(|e| Error::BadParameters(e.to_string()))?;
        let mut t = clock.sample(rng);
        while t <= horizon {
            let a = rng.random_range(0..n);
            jumps.push((t, a, space.coord(a).sample(rng)));
            t += clock.sample(rng);
        }
    }
    Ok(Trajectory {
        initial: x0.clone(),
        jumps,
    })
}

/// `k! (n-k)! / (n+1)!`.
pub fn beta_weight(k: usize, n: usize) -> f64 {
    let mut binom = 1.0;
    for i in 0..k.min(n - k) {
        binom = binom * (n - i) as f64 / (i + 1) as f64;
    }
    1.0 / ((n + 1) as f64 * binom)
}

fn resolvent_over(
    space: &ProductSpace,
    g: &Functional,
    frozen: Option<usize>,
) -> Result<Functional> {
    let g = space.tabulate(g)?;
    let deps = match frozen {
        Some(a) => g.deps().without(a),
        None => g.deps().clone(),
    };
    let n = deps.len();
    let tables = subset_conditionals(space, &g.clone().with_deps(deps.clone()))?;
    let mut acc = vec![0.0; g.values().len()];
    for (mask, table) in tables.iter().enumerate() {
        let w = beta_weight(mask_to_subset(&deps, mask).len(), n);
        for (o, v) in acc.iter_mut().zip(table) {
            *o += w * v;
        }
    }
    Functional::from_table(space, acc, g.deps().clone())
}

/// `int_0^inf e^{-t} P_t G dt`, exact via the subset expansion.
pub fn resolvent(space: &ProductSpace, g: &Functional) -> Result<Functional> {
    resolvent_over(space, g, None)
}

/// `int_0^inf e^{-t} P_t^{(A \ a)} G dt`, the semigroup frozen on coordinate `a`.
pub fn resolvent_except(space: &ProductSpace, g: &Functional, a: usize) -> Result<Functional> {
    space.check_index(a)?;
    resolvent_over(space, g, Some(a))
}

/// Both sides of the semigroup covariance identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovarianceCheck {
    /// `cov(F, G)` by enumeration.
    pub lhs: f64,
    /// `sum_k E[D_k F int e^{-t} P_t^{(A\k)} D_k G dt]`.
    pub rhs: f64,
    /// `sum_k E[D_k F int e^{-t} P_t E[D_k G | F_k] dt]`, the literal form.
    pub rhs_literal: f64,
    pub residual: f64,
}

pub fn covariance_semigroup(
    space: &ProductSpace,
    f: &Functional,
    g: &Functional,
    order: &[usize],
) -> Result<CovarianceCheck> {
    check_order(space, order)?;
    let f = space.tabulate(f)?;
    let g = space.tabulate(g)?;
    let ef = expectation(space, &f)?;
    let eg = expectation(space, &g)?;
    let lhs = expectation(space, &(&f * &g))? - ef * eg;
    let mut rhs = 0.0;
    let mut rhs_literal = 0.0;
    for (pos, &k) in order.iter().enumerate() {
        let dkf = gradient_at(space, &f, k)?;
        let dkg = gradient_at(space, &g, k)?;
        rhs += expectation(space, &(&dkf * &resolvent_except(space, &dkg, k)?))?;
        let adapted = conditional_on(space, &dkg, &order[..=pos])?;
        rhs_literal += expectation(space, &(&dkf * &resolvent(space, &adapted)?))?;
    }
    Ok(CovarianceCheck {
        lhs,
        rhs,
        rhs_literal,
        residual: (lhs - rhs).abs(),
    })
}

/// Commutation of `D_a` with the semigroup.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutationCheck {
    /// `D_a P_t F` against `e^{-t} P_t^{(A\a)} D_a F`.
    pub frozen: IdentityCheck,
    /// `D_a P_t F` against `P_t D_a F`.
    pub plain: IdentityCheck,
    /// `D_a P_t F` against `e^{-t} P_t D_a F`, keep-probability `e^{-t}`.
    pub literal: IdentityCheck,
    /// The literal form under the opposite keep-probability `1 - e^{-t}`.
    pub literal_swapped: IdentityCheck,
}

pub fn check_commutation(
    space: &ProductSpace,
    f: &Functional,
    t: f64,
    a: usize,
) -> Result<CommutationCheck> {
    let decay = (-t).exp();
    let lhs = gradient_at(space, &mehler_apply(space, f, t)?, a)?;
    let daf = gradient_at(space, f, a)?;
    let frozen = mehler_apply_except(space, &daf, t, a)?.scale(decay);
    let plain = mehler_apply(space, &daf, t)?;
    let literal = plain.scale(decay);
    let swapped = MehlerConvention::KeepGrows;
    let lhs_swapped = gradient_at(space, &mehler_apply_with(space, f, t, swapped)?, a)?;
    let rhs_swapped = mehler_apply_with(space, &daf, t, swapped)?.scale(decay);
    Ok(CommutationCheck {
        frozen: IdentityCheck::pointwise("commutation_frozen", &lhs, &frozen),
        plain: IdentityCheck::pointwise("commutation_plain", &lhs, &plain),
        literal: IdentityCheck::pointwise("commutation_literal", &lhs, &literal),
        literal_swapped: IdentityCheck::pointwise(
            "commutation_literal_swapped",
            &lhs_swapped,
            &rhs_swapped,
        ),
    })
}

/// `P_s P_t F = P_{s+t} F`.
pub fn check_semigroup_law(
    space: &ProductSpace,
    f: &Functional,
    s: f64,
    t: f64,
) -> Result<IdentityCheck> {
    let lhs = mehler_apply(space, &mehler_apply(space, f, s)?, t)?;
    let rhs = mehler_apply(space, f, s + t)?;
    Ok(IdentityCheck::pointwise("semigroup_law", &lhs, &rhs))
}

/// Pushforward of the product law under one jump of the chain.
pub fn check_stationarity(space: &ProductSpace) -> Result<IdentityCheck> {
    let w = space.weights()?;
    let n = space.dim();
    let mut push = vec![0.0; w.len()];
    for a in 0..n {
        // A jump on `a` sends the mass of every x sharing y off `a` to y
        // with probability P_a(y_a).
        let pmf = space.coord(a).pmf();
        let mut x = vec![0; n];
        for (i, p) in push.iter_mut().enumerate() {
            space.fill_config(i, &mut x);
            let other: f64 = (0..pmf.len())
                .map(|k| {
                    let mut y = x.clone();
                    y[a] = k;
                    w[space.index_of(&y)]
                })
                .sum();
            *p += other * pmf[x[a]] / n as f64;
        }
    }
    let residual = push
        .iter()
        .zip(w)
        .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    Ok(IdentityCheck {
        name: "stationarity".into(),
        lhs: 1.0,
        rhs: 1.0,
        residual,
    })
}

/// `(t, sup |P_t F - E F|)` rows.
pub fn decay_table(space: &ProductSpace, f: &Functional, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mean = expectation(space, f)?;
    times
        .iter()
        .map(|&t| Ok((t, mehler_apply(space, f, t)?.add_constant(-mean).sup_norm())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_functional, random_space};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mehler_examples() {
        let s = ProductSpace::fair_signs(2);
        let f = s.from_values(|x| x[0] * x[1] + 0.3 * x[0]).unwrap();
        assert!(mehler_apply(&s, &f, 0.0).unwrap().max_abs_diff(&f) < 1e-15);
        let far = mehler_apply(&s, &f, 50.0).unwrap();
        assert!(far.sup_norm() < 1e-12);
        let prod = s.from_values(|x| x[0] * x[1]).unwrap();
        for t in [0.1, 0.7, 2.0] {
            let p = mehler_apply(&s, &prod, t).unwrap();
            assert!(p.max_abs_diff(&prod.scale((-2.0 * t).exp())) < 1e-15);
        }
        assert!(matches!(
            mehler_apply(&s, &f, -1.0),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn resolvent_examples() {
        let s = ProductSpace::fair_signs(2);
        let c = Functional::constant(&s, 2.5).unwrap();
        assert!(resolvent(&s, &c).unwrap().max_abs_diff(&c) < 1e-15);
        let x1 = s.coordinate_value(0).unwrap();
        assert!(resolvent(&s, &x1).unwrap().max_abs_diff(&x1.scale(0.5)) < 1e-15);
        let prod = s.from_values(|x| x[0] * x[1]).unwrap();
        assert!(
            resolvent(&s, &prod)
                .unwrap()
                .max_abs_diff(&prod.scale(1.0 / 3.0))
                < 1e-15
        );
    }

    #[test]
    fn beta_weights_sum() {
        for n in 0..10 {
            let total: f64 = (0..=n)
                .map(|k| beta_weight(k, n) * crate::ustat::binomial(n, k))
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!((beta_weight(1, 2) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn covariance_examples() {
        let s = ProductSpace::fair_signs(2);
        let sum = s.from_values(|x| x[0] + x[1]).unwrap();
        let c = covariance_semigroup(&s, &sum, &sum, &[0, 1]).unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-14 && (c.rhs - 2.0).abs() < 1e-14);
        let x1 = s.coordinate_value(0).unwrap();
        let x2 = s.coordinate_value(1).unwrap();
        let c = covariance_semigroup(&s, &x1, &x2, &[0, 1]).unwrap();
        assert!(c.lhs.abs() < 1e-14 && c.rhs.abs() < 1e-14);
        let prod = s.from_values(|x| x[0] * x[1]).unwrap();
        let c = covariance_semigroup(&s, &prod, &prod, &[0, 1]).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-14 && (c.rhs - 1.0).abs() < 1e-14);
        assert!((c.rhs_literal - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn random_semigroup_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..40 {
            let s = random_space(&mut rng, 3, 3);
            let f = random_functional(&s, &mut rng);
            assert!(check_semigroup_law(&s, &f, 0.3, 0.9).unwrap().holds(1e-12));
            for t in [0.1, 0.7, 2.0] {
                let a = rng.random_range(0..s.dim());
                let c = check_commutation(&s, &f, t, a).unwrap();
                assert!(c.frozen.holds(1e-12));
                assert!(c.plain.holds(1e-12));
                let pf = mehler_apply(&s, &f, t).unwrap();
                assert!(
                    expectation(&s, &(&pf * &pf)).unwrap()
                        <= expectation(&s, &(&f * &f)).unwrap() + 1e-12
                );
            }
            assert!(check_stationarity(&s).unwrap().residual < 1e-15);
            let g = random_functional(&s, &mut rng);
            let order: Vec<usize> = (0..s.dim()).collect();
            let c = covariance_semigroup(&s, &f, &g, &order).unwrap();
            assert!(c.residual < 1e-12);
        }
    }

    #[test]
    fn simulator_examples() {
        let s = ProductSpace::fair_signs(2);
        let x0 = Configuration(vec![1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(simulate(&s, &x0, 0.0, &mut rng).unwrap().jumps.is_empty());
        let one = ProductSpace::fair_signs(1);
        let counts: Vec<f64> = (0..4000)
            .map(|_| {
                simulate(&one, &Configuration(vec![0]), 3.0, &mut rng)
                    .unwrap()
                    .jumps
                    .len() as f64
            })
            .collect();
        let est = crate::space::McEstimate::from_samples(&counts);
        assert!((est.mean - 3.0).abs() < 3.0 * est.std_error);
    }
}
