//! Random small spaces, functionals and fields for property suites.

use rand::Rng;

use crate::calculus::CoordinateField;
use crate::space::{Coordinate, DepSet, Functional, ProductSpace};

/// Random pmf with entries bounded away from zero.
pub fn random_pmf<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut pmf: Vec<f64> = raw.iter().map(|p| p / total).collect();
    let head: f64 = pmf[..k - 1].iter().sum();
    pmf[k - 1] = 1.0 - head;
    pmf
}

/// Space with `1..=max_dim` coordinates of `2..=max_outcomes` real outcomes each.
pub fn random_space<R: Rng + ?Sized>(
    rng: &mut R,
    max_dim: usize,
    max_outcomes: usize,
) -> ProductSpace {
    let dim = rng.random_range(1..=max_dim.max(1));
    let coords = (0..dim)
        .map(|a| {
            let k = rng.random_range(2..=max_outcomes.max(2));
            let mut values: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            while values.len() < k {
                values.push(values.last().copied().unwrap_or(0.0) + 1.0);
            }
            let pmf = random_pmf(rng, k);
            Coordinate::real(format!("x{}", a + 1), &values, &pmf).expect("random coordinate")
        })
        .collect();
    ProductSpace::new(coords).expect("random space")
}

/// Uniform random table depending on every coordinate.
pub fn random_functional<R: Rng + ?Sized>(space: &ProductSpace, rng: &mut R) -> Functional {
    space
        .from_fn(|_| rng.random_range(-1.0..1.0))
        .expect("random functional")
}

/// Random table supported on the given coordinates.
pub fn random_functional_on<R: Rng + ?Sized>(
    space: &ProductSpace,
    deps: &DepSet,
    rng: &mut R,
) -> Functional {
    let sizes: Vec<usize> = deps.iter().map(|a| space.coord(a).len()).collect();
    let n: usize = sizes.iter().product();
    let table: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    space
        .from_fn_on(deps.clone(), |x| {
            let idx = deps
                .iter()
                .zip(&sizes)
                .fold(0, |acc, (a, &k)| acc * k + x[a]);
            table[idx]
        })
        .expect("random functional")
}

/// Random field with an entry for every coordinate.
pub fn random_field<R: Rng + ?Sized>(space: &ProductSpace, rng: &mut R) -> CoordinateField {
    CoordinateField::from_fn(space, |_| Ok(random_functional(space, rng))).expect("random field")
}
