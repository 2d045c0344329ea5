//! Gradient, divergence, number operator and the ANOVA decomposition.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{
    conditional_drop, conditional_on, expectation, DepSet, Functional, ProductSpace,
};

/// Largest dependency set accepted by subset expansions.
pub const MAX_SUBSET_DEPS: usize = 20;

/// Memory budget (in f64 entries) for holding all subset conditionals at once.
pub const SUBSET_TABLE_BUDGET: usize = 1 << 26;

/// A family `(U_a)` of functionals; absent indices are zero.
#[derive(Clone, Debug, Default)]
pub struct CoordinateField {
    entries: BTreeMap<usize, Functional>,
}

impl CoordinateField {
    pub fn new() -> Self {
        Self::default()
    }

    /// Field with `U_a = f(a)` for every coordinate.
    pub fn from_fn(
        space: &ProductSpace,
        mut f: impl FnMut(usize) -> Result<Functional>,
    ) -> Result<Self> {
        let mut out = Self::new();
        for a in 0..space.dim() {
            out.insert(a, f(a)?);
        }
        Ok(out)
    }

    pub fn insert(&mut self, a: usize, u: Functional) {
        self.entries.insert(a, u);
    }

    pub fn get(&self, a: usize) -> Option<&Functional> {
        self.entries.get(&a)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Functional)> {
        self.entries.iter().map(|(&a, u)| (a, u))
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `U_a` as a table, zero when absent.
    pub fn component(&self, space: &ProductSpace, a: usize) -> Result<Functional> {
        match self.entries.get(&a) {
            Some(u) => space.tabulate(u),
            None => Functional::zeros(space),
        }
    }

    /// `<U, V>` in `L^2(A x E_A)`.
    pub fn inner(&self, space: &ProductSpace, other: &CoordinateField) -> Result<f64> {
        let mut total = 0.0;
        for (a, u) in self.iter() {
            if let Some(v) = other.get(a) {
                total += expectation(space, &(&space.tabulate(u)? * &space.tabulate(v)?))?;
            }
        }
        Ok(total)
    }

    pub fn norm_sq(&self, space: &ProductSpace) -> Result<f64> {
        self.inner(space, self)
    }

    /// Pointwise sum `sum_a U_a`.
    pub fn sum(&self, space: &ProductSpace) -> Result<Functional> {
        let mut acc = Functional::zeros(space)?;
        for (_, u) in self.iter() {
            acc = &acc + &space.tabulate(u)?;
        }
        Ok(acc)
    }
}

/// `D_a F = F - E[F | G_a]`.
pub fn gradient_at(space: &ProductSpace, f: &Functional, a: usize) -> Result<Functional> {
    space.check_index(a)?;
    let f = space.tabulate(f)?;
    if !f.deps().contains(a) {
        return Functional::zeros(space);
    }
    let d = &f - &conditional_drop(space, &f, a)?;
    Ok(d.with_deps(f.deps().clone()))
}

/// The gradient field, stored over the dependency set of `F`.
pub fn gradient(space: &ProductSpace, f: &Functional) -> Result<CoordinateField> {
    let f = space.tabulate(f)?;
    let mut field = CoordinateField::new();
    for a in f.deps().iter() {
        field.insert(a, gradient_at(space, &f, a)?);
    }
    Ok(field)
}

/// `delta U = sum_a D_a U_a`.
pub fn divergence(space: &ProductSpace, u: &CoordinateField) -> Result<Functional> {
    let mut acc = Functional::zeros(space)?;
    for (a, ua) in u.iter() {
        acc = &acc + &gradient_at(space, ua, a)?;
    }
    Ok(acc)
}

/// `L F = -sum_a D_a F`.
pub fn number_operator(space: &ProductSpace, f: &Functional) -> Result<Functional> {
    let f = space.tabulate(f)?;
    let mut acc = Functional::zeros(space)?;
    for a in f.deps().iter() {
        acc = &acc - &gradient_at(space, &f, a)?;
    }
    Ok(acc.with_deps(f.deps().clone()))
}

/// Orthogonal decomposition `F = sum_S F_S` over subsets of `dep(F)`.
#[derive(Clone, Debug)]
pub struct AnovaDecomposition {
    components: BTreeMap<Vec<usize>, Functional>,
}

impl AnovaDecomposition {
    pub fn component(&self, subset: &[usize]) -> Option<&Functional> {
        self.components.get(subset)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], &Functional)> {
        self.components.iter().map(|(s, f)| (s.as_slice(), f))
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `E[F_S^2]` aggregated by order `|S|`.
    pub fn energy_by_order(&self, space: &ProductSpace) -> Result<Vec<f64>> {
        let top = self.components.keys().map(Vec::len).max().unwrap_or(0);
        let mut out = vec![0.0; top + 1];
        for (s, f) in &self.components {
            out[s.len()] += expectation(space, &(f * f))?;
        }
        Ok(out)
    }
}

fn check_subset_budget(space: &ProductSpace, deps: &DepSet) -> Result<usize> {
    let count = space.require_exact()?;
    if deps.len() > MAX_SUBSET_DEPS {
        return Err(Error::ExactModeOverflow(format!(
            "subset expansion over {} coordinates (limit {MAX_SUBSET_DEPS})",
            deps.len()
        )));
    }
    Ok(count)
}

/// Subset tables `E[F | X_T]` for every `T` in `dep(F)`, indexed by bitmask
/// over the positions of `dep(F)`.
pub(crate) fn subset_conditionals(space: &ProductSpace, f: &Functional) -> Result<Vec<Vec<f64>>> {
    let f = space.tabulate(f)?;
    let deps = f.deps().clone();
    let count = check_subset_budget(space, &deps)?;
    let d = deps.len();
    let full = (1usize << d) - 1;
    if (full + 1).saturating_mul(count) > SUBSET_TABLE_BUDGET {
        return Err(Error::ExactModeOverflow(format!(
            "2^{d} subset tables of {count} entries exceed the memory budget"
        )));
    }
    let mut tables: Vec<Vec<f64>> = vec![Vec::new(); full + 1];
    tables[full] = f.values().to_vec();
    for mask in (0..full).rev() {
        let bit = (!mask & full).trailing_zeros() as usize;
        let parent = std::mem::take(&mut tables[mask | (1 << bit)]);
        tables[mask] = space.integrate_out(&parent, deps.as_slice()[bit]);
        tables[mask | (1 << bit)] = parent;
    }
    Ok(tables)
}

pub(crate) fn mask_to_subset(deps: &DepSet, mask: usize) -> Vec<usize> {
    deps.iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, a)| a)
        .collect()
}

/// Möbius inversion of the subset conditionals.
pub fn anova(space: &ProductSpace, f: &Functional) -> Result<AnovaDecomposition> {
    let f = space.tabulate(f)?;
    let deps = f.deps().clone();
    let mut tables = subset_conditionals(space, &f)?;
    let d = deps.len();
    for i in 0..d {
        for mask in 0..tables.len() {
            if mask >> i & 1 == 1 {
                let (lo, hi) = tables.split_at_mut(mask);
                let sub = &lo[mask ^ (1 << i)];
                for (v, s) in hi[0].iter_mut().zip(sub) {
                    *v -= s;
                }
            }
        }
    }
    let mut components = BTreeMap::new();
    for (mask, values) in tables.into_iter().enumerate() {
        let subset = mask_to_subset(&deps, mask);
        let comp = Functional::from_table(space, values, DepSet::new(subset.iter().copied()))?;
        components.insert(subset, comp);
    }
    Ok(AnovaDecomposition { components })
}

fn check_centered(space: &ProductSpace, f: &Functional) -> Result<()> {
    let mean = expectation(space, f)?;
    let scale = f.sup_norm().max(1.0);
    if mean.abs() > 1e-10 * scale {
        return Err(Error::NotCentered { mean });
    }
    Ok(())
}

/// Pseudo-inverse `L^{-1}` on centered functionals.
///
/// Rescales ANOVA components when the subset tables fit in memory and falls
/// back to conjugate gradients otherwise.
pub fn invert_number_operator(space: &ProductSpace, f: &Functional) -> Result<Functional> {
    let f = space.tabulate(f)?;
    check_centered(space, &f)?;
    match anova(space, &f) {
        Ok(dec) => {
            let mut acc = Functional::zeros(space)?;
            for (s, comp) in dec.iter() {
                if !s.is_empty() {
                    acc = &acc - &comp.scale(1.0 / s.len() as f64);
                }
            }
            Ok(acc.with_deps(f.deps().clone()))
        }
        Err(Error::ExactModeOverflow(_)) if f.deps().len() <= 64 => {
            invert_number_operator_cg(space, &f)
        }
        Err(e) => Err(e),
    }
}

/// Matrix-free conjugate gradients for `-L G = -F` in the weighted inner product.
pub fn invert_number_operator_cg(space: &ProductSpace, f: &Functional) -> Result<Functional> {
    let f = space.tabulate(f)?;
    check_centered(space, &f)?;
    let deps = f.deps().clone();
    let w = space.weights()?.to_vec();
    let dot =
        |x: &[f64], y: &[f64]| -> f64 { w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum() };
    let apply = |x: &[f64]| -> Vec<f64> {
        // -L x = sum_a (x - E_a x)
        let mut out = vec![0.0; x.len()];
        for a in deps.iter() {
            let avg = space.integrate_out(x, a);
            for ((o, xi), m) in out.iter_mut().zip(x).zip(&avg) {
                *o += xi - m;
            }
        }
        out
    };
    let b: Vec<f64> = f.values().iter().map(|v| -v).collect();
    let mut x = vec![0.0; b.len()];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = 1e-28 * dot(&b, &b).max(1e-300);
    for _ in 0..(4 * b.len()).max(100) {
        if rr <= target {
            break;
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
    }
    let mean = dot(&x, &vec![1.0; x.len()]);
    let x = x.into_iter().map(|v| v - mean).collect();
    Functional::from_table(space, x, deps)
}

/// `E[sum_{a,b} D_a U_b D_b V_a]`.
pub fn trace_form(space: &ProductSpace, u: &CoordinateField, v: &CoordinateField) -> Result<f64> {
    let mut total = 0.0;
    for (b, ub) in u.iter() {
        for (a, va) in v.iter() {
            let dub = gradient_at(space, ub, a)?;
            let dva = gradient_at(space, va, b)?;
            total += expectation(space, &(&dub * &dva))?;
        }
    }
    Ok(total)
}

/// Outcome of an identity validator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        IdentityCheck {
            name: name.into(),
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
        }
    }

    /// Pointwise check: `lhs`/`rhs` are sup norms, `residual` the sup-norm gap.
    pub fn pointwise(name: impl Into<String>, lhs: &Functional, rhs: &Functional) -> Self {
        IdentityCheck {
            name: name.into(),
            lhs: lhs.sup_norm(),
            rhs: rhs.sup_norm(),
            residual: lhs.max_abs_diff(rhs),
        }
    }

    /// Residual within `tol` relative to the scale `max(1, |lhs|, |rhs|)`.
    pub fn holds(&self, tol: f64) -> bool {
        self.residual <= tol * self.lhs.abs().max(self.rhs.abs()).max(1.0)
    }
}

/// `<DF, U> = E[F delta U]`.
pub fn check_integration_by_parts(
    space: &ProductSpace,
    f: &Functional,
    u: &CoordinateField,
) -> Result<IdentityCheck> {
    let lhs = gradient(space, f)?.inner(space, u)?;
    let rhs = expectation(space, &(&space.tabulate(f)? * &divergence(space, u)?))?;
    Ok(IdentityCheck::new("integration_by_parts", lhs, rhs))
}

/// `E[delta U delta V] = E[trace(DU o DV)]`.
pub fn check_weitzenbock(
    space: &ProductSpace,
    u: &CoordinateField,
    v: &CoordinateField,
) -> Result<IdentityCheck> {
    let lhs = expectation(space, &(&divergence(space, u)? * &divergence(space, v)?))?;
    let rhs = trace_form(space, u, v)?;
    Ok(IdentityCheck::new("weitzenbock", lhs, rhs))
}

/// `D_a(FG) = F D_aG + G D_aF - D_aF D_aG - E[FG|G_a] + E[F|G_a] E[G|G_a]`.
pub fn check_product_rule(
    space: &ProductSpace,
    f: &Functional,
    g: &Functional,
    a: usize,
) -> Result<IdentityCheck> {
    let f = space.tabulate(f)?;
    let g = space.tabulate(g)?;
    let fg = &f * &g;
    let lhs = gradient_at(space, &fg, a)?;
    let (df, dg) = (gradient_at(space, &f, a)?, gradient_at(space, &g, a)?);
    let ef = conditional_drop(space, &f, a)?;
    let eg = conditional_drop(space, &g, a)?;
    let efg = conditional_drop(space, &fg, a)?;
    let rhs = &(&(&(&(&f * &dg) + &(&g * &df)) - &(&df * &dg)) - &efg) + &(&ef * &eg);
    Ok(IdentityCheck::pointwise("product_rule", &lhs, &rhs))
}

/// `D_a D_a F = D_a F` and `D_a D_b F = D_b D_a F`; reports the worst residual.
pub fn check_gradient_commutation(space: &ProductSpace, f: &Functional) -> Result<IdentityCheck> {
    let f = space.tabulate(f)?;
    let n = space.dim();
    let grads: Vec<Functional> = (0..n)
        .map(|a| gradient_at(space, &f, a))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for a in 0..n {
        let daa = gradient_at(space, &grads[a], a)?;
        worst = worst.max(daa.max_abs_diff(&grads[a]));
        scale = scale.max(grads[a].sup_norm());
        for b in (a + 1)..n {
            let ab = gradient_at(space, &grads[b], a)?;
            let ba = gradient_at(space, &grads[a], b)?;
            worst = worst.max(ab.max_abs_diff(&ba));
        }
    }
    Ok(IdentityCheck {
        name: "gradient_commutation".into(),
        lhs: scale,
        rhs: scale,
        residual: worst,
    })
}

/// For an adapted field (each `U_n` depends on coordinates `0..=n` only):
/// `E[(delta U)^2] = sum_n E[(U_n - E[U_n | F_{n-1}])^2]`.
pub fn check_innovation(space: &ProductSpace, u: &CoordinateField) -> Result<IdentityCheck> {
    for (n, un) in u.iter() {
        if un.deps().iter().any(|b| b > n) {
            return Err(Error::Mismatch(format!(
                "field entry {n} is not adapted to the coordinate order"
            )));
        }
    }
    let du = divergence(space, u)?;
    let lhs = expectation(space, &(&du * &du))?;
    let mut rhs = 0.0;
    for (n, un) in u.iter() {
        let un = space.tabulate(un)?;
        let past: Vec<usize> = (0..n).collect();
        let innov = &un - &conditional_on(space, &un, &past)?;
        rhs += expectation(space, &(&innov * &innov))?;
    }
    Ok(IdentityCheck::new("innovation", lhs, rhs))
}

/// `L F_S = -|S| F_S` for every ANOVA component; worst pointwise residual.
pub fn check_eigenstructure(space: &ProductSpace, f: &Functional) -> Result<IdentityCheck> {
    let dec = anova(space, f)?;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for (s, comp) in dec.iter() {
        let lf = number_operator(space, comp)?;
        worst = worst.max(lf.max_abs_diff(&comp.scale(-(s.len() as f64))));
        scale = scale.max(comp.sup_norm());
    }
    Ok(IdentityCheck {
        name: "anova_eigenstructure".into(),
        lhs: scale,
        rhs: scale,
        residual: worst,
    })
}

/// `L L^{-1} F = F` on centered `F`.
pub fn check_inverse(space: &ProductSpace, f: &Functional) -> Result<IdentityCheck> {
    let g = invert_number_operator(space, f)?;
    let lg = number_operator(space, &g)?;
    Ok(IdentityCheck::pointwise(
        "number_operator_inverse",
        &lg,
        &space.tabulate(f)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, random_functional, random_space};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fair2() -> ProductSpace {
        ProductSpace::fair_signs(2)
    }

    #[test]
    fn gradient_examples() {
        let s = fair2();
        let f = s.from_values(|x| x[0] * x[1]).unwrap();
        let g = gradient(&s, &f).unwrap();
        assert!(g.get(0).unwrap().max_abs_diff(&f) < 1e-15);
        assert!(g.get(1).unwrap().max_abs_diff(&f) < 1e-15);
        let c = Functional::constant(&s, 3.0).unwrap();
        assert!(gradient(&s, &c).unwrap().is_empty());
        let eq = s.from_fn(|x| (x[0] == x[1]) as u8 as f64).unwrap();
        let g = gradient(&s, &eq).unwrap();
        let want = eq.add_constant(-0.5);
        assert!(g.get(0).unwrap().max_abs_diff(&want) < 1e-15);
        assert!(g.get(1).unwrap().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn divergence_examples() {
        let s = fair2();
        let u = CoordinateField::from_fn(&s, |a| s.coordinate_value(a)).unwrap();
        let sum = s.from_values(|x| x[0] + x[1]).unwrap();
        assert!(divergence(&s, &u).unwrap().max_abs_diff(&sum) < 1e-15);
        let ones = CoordinateField::from_fn(&s, |_| Functional::constant(&s, 1.0)).unwrap();
        assert!(divergence(&s, &ones).unwrap().sup_norm() < 1e-15);
        let mut u = CoordinateField::new();
        let x1x2 = s.from_values(|x| x[0] * x[1]).unwrap();
        u.insert(0, x1x2.clone());
        assert!(divergence(&s, &u).unwrap().max_abs_diff(&x1x2) < 1e-15);
    }

    #[test]
    fn number_operator_examples() {
        let s = fair2();
        let sum = s.from_values(|x| x[0] + x[1]).unwrap();
        assert!(number_operator(&s, &sum).unwrap().max_abs_diff(&-&sum) < 1e-15);
        let prod = s.from_values(|x| x[0] * x[1]).unwrap();
        assert!(
            number_operator(&s, &prod)
                .unwrap()
                .max_abs_diff(&prod.scale(-2.0))
                < 1e-15
        );
        let c = Functional::constant(&s, 4.0).unwrap();
        assert!(number_operator(&s, &c).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn anova_examples() {
        let s = fair2();
        let eq = s.from_fn(|x| (x[0] == x[1]) as u8 as f64).unwrap();
        let dec = anova(&s, &eq).unwrap();
        assert!((dec.component(&[]).unwrap().values()[0] - 0.5).abs() < 1e-15);
        assert!(dec.component(&[0]).unwrap().sup_norm() < 1e-15);
        assert!(dec.component(&[1]).unwrap().sup_norm() < 1e-15);
        assert!(
            dec.component(&[0, 1])
                .unwrap()
                .max_abs_diff(&eq.add_constant(-0.5))
                < 1e-15
        );
        let sum = s.from_values(|x| x[0] + x[1]).unwrap();
        let dec = anova(&s, &sum).unwrap();
        assert!(
            dec.component(&[0])
                .unwrap()
                .max_abs_diff(&s.coordinate_value(0).unwrap())
                < 1e-15
        );
        assert!(dec.component(&[0, 1]).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        let s = fair2();
        let x1 = s.coordinate_value(0).unwrap();
        assert!(invert_number_operator(&s, &x1).unwrap().max_abs_diff(&-&x1) < 1e-15);
        let prod = s.from_values(|x| x[0] * x[1]).unwrap();
        let g = invert_number_operator(&s, &prod).unwrap();
        assert!(g.max_abs_diff(&prod.scale(-0.5)) < 1e-15);
        let one = Functional::constant(&s, 1.0).unwrap();
        assert!(matches!(
            invert_number_operator(&s, &one),
            Err(Error::NotCentered { .. })
        ));
    }

    #[test]
    fn cg_matches_anova() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let s = random_space(&mut rng, 4, 3);
            let f = random_functional(&s, &mut rng);
            let f = f.add_constant(-expectation(&s, &f).unwrap());
            let a = invert_number_operator(&s, &f).unwrap();
            let b = invert_number_operator_cg(&s, &f).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-9, "{}", a.max_abs_diff(&b));
        }
    }

    #[test]
    fn trace_examples() {
        let s = fair2();
        let u = CoordinateField::from_fn(&s, |a| s.coordinate_value(a)).unwrap();
        assert!((trace_form(&s, &u, &u).unwrap() - 2.0).abs() < 1e-15);
        let ones = CoordinateField::from_fn(&s, |_| Functional::constant(&s, 1.0)).unwrap();
        assert_eq!(trace_form(&s, &ones, &ones).unwrap(), 0.0);
        let mut u = CoordinateField::new();
        u.insert(0, s.coordinate_value(1).unwrap());
        assert_eq!(trace_form(&s, &u, &u).unwrap(), 0.0);
        assert!(divergence(&s, &u).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn random_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let s = random_space(&mut rng, 3, 3);
            let f = random_functional(&s, &mut rng);
            let g = random_functional(&s, &mut rng);
            let u = random_field(&s, &mut rng);
            let v = random_field(&s, &mut rng);
            assert!(check_integration_by_parts(&s, &f, &u).unwrap().holds(1e-12));
            assert!(check_weitzenbock(&s, &u, &v).unwrap().holds(1e-12));
            assert!(check_product_rule(&s, &f, &g, 0).unwrap().holds(1e-12));
            assert!(check_gradient_commutation(&s, &f).unwrap().holds(1e-12));
            assert!(check_eigenstructure(&s, &f).unwrap().holds(1e-12));
            let fc = f.add_constant(-expectation(&s, &f).unwrap());
            assert!(check_inverse(&s, &fc).unwrap().holds(1e-10));
        }
    }

    #[test]
    fn innovation_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let s = random_space(&mut rng, 4, 3);
            let mut u = CoordinateField::new();
            for n in 0..s.dim() {
                let g = random_functional(&s, &mut rng);
                let keep: Vec<usize> = (0..=n).collect();
                u.insert(n, conditional_on(&s, &g, &keep).unwrap());
            }
            assert!(check_innovation(&s, &u).unwrap().holds(1e-12));
        }
    }

    #[test]
    fn anova_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let s = random_space(&mut rng, 4, 3);
            let f = random_functional(&s, &mut rng);
            let dec = anova(&s, &f).unwrap();
            let mut total = Functional::zeros(&s).unwrap();
            let comps: Vec<_> = dec.iter().collect();
            for (i, (si, fi)) in comps.iter().enumerate() {
                total = &total + fi;
                for (_, fj) in &comps[..i] {
                    assert!(expectation(&s, &(*fi * *fj)).unwrap().abs() < 1e-12);
                }
                for &a in si.iter() {
                    assert!(conditional_drop(&s, fi, a).unwrap().sup_norm() < 1e-12);
                }
            }
            assert!(total.max_abs_diff(&f) < 1e-12);
        }
    }
}
