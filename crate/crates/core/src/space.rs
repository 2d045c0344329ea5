//! Finite product probability spaces, configurations and functionals.
//!
//! A [`ProductSpace`] is an ordered family of finite [`Coordinate`]s with the
//! product law. Configurations are addressed by a mixed-radix index where the
//! last coordinate varies fastest. A [`Functional`] is either an exact table
//! over every configuration or a black-box evaluator with a declared
//! dependency set.

use std::borrow::Cow;
use std::fmt;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on the number of configurations for exact enumeration.
pub const DEFAULT_EXACT_CEILING: usize = 10_000_000;

/// Allowed deviation of a coordinate pmf from total mass one.
pub const PMF_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub label: String,
    /// Optional real embedding, used by functionals that need arithmetic.
    pub value: Option<f64>,
}

impl Outcome {
    pub fn real(value: f64) -> Self {
        Outcome {
            label: format!("{value}"),
            value: Some(value),
        }
    }

    pub fn labeled(label: impl Into<String>) -> Self {
        Outcome {
            label: label.into(),
            value: None,
        }
    }
}

/// One factor `(E_a, P_a)` of the product space.
#[derive(Clone, Debug, PartialEq)]
pub struct Coordinate {
    id: String,
    outcomes: Vec<Outcome>,
    pmf: Vec<f64>,
}

impl Coordinate {
    pub fn new(id: impl Into<String>, outcomes: Vec<Outcome>, pmf: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if outcomes.is_empty() {
            return Err(Error::EmptySupport(id));
        }
        if outcomes.len() != pmf.len() {
            return Err(Error::InvalidCoordinate {
                id,
                reason: format!(
                    "{} outcomes but {} probabilities",
                    outcomes.len(),
                    pmf.len()
                ),
            });
        }
        if let Some(p) = pmf.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidCoordinate {
                id,
                reason: format!("probability {p} is not strictly positive"),
            });
        }
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::UnnormalizedPmf { id, sum });
        }
        for (i, o) in outcomes.iter().enumerate() {
            if outcomes[..i].iter().any(|q| q.label == o.label) {
                return Err(Error::InvalidCoordinate {
                    id,
                    reason: format!("duplicate outcome label `{}`", o.label),
                });
            }
        }
        Ok(Coordinate { id, outcomes, pmf })
    }

    /// Coordinate with real-valued outcomes labelled by their values.
    pub fn real(id: impl Into<String>, values: &[f64], pmf: &[f64]) -> Result<Self> {
        let outcomes = values.iter().map(|&v| Outcome::real(v)).collect();
        Coordinate::new(id, outcomes, pmf.to_vec())
    }

    /// Fair `{-1, +1}` coordinate.
    pub fn fair_sign(id: impl Into<String>) -> Self {
        Coordinate::real(id, &[-1.0, 1.0], &[0.5, 0.5]).expect("fair sign coordinate")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn value(&self, k: usize) -> Option<f64> {
        self.outcomes.get(k).and_then(|o| o.value)
    }

    /// All real embeddings, if every outcome carries one.
    pub fn values(&self) -> Option<Vec<f64>> {
        self.outcomes.iter().map(|o| o.value).collect()
    }

    /// `E[X^p]` for the real embedding.
    pub fn moment(&self, p: i32) -> Option<f64> {
        let values = self.values()?;
        Some(
            values
                .iter()
                .zip(&self.pmf)
                .map(|(v, q)| q * v.powi(p))
                .sum(),
        )
    }

    /// Same support embedding and same pmf (up to `1e-12`).
    pub fn same_law(&self, other: &Coordinate) -> bool {
        self.len() == other.len()
            && self
                .outcomes
                .iter()
                .zip(&other.outcomes)
                .all(|(a, b)| a.value == b.value && (a.value.is_some() || a.label == b.label))
            && self
                .pmf
                .iter()
                .zip(&other.pmf)
                .all(|(p, q)| (p - q).abs() <= 1e-12)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, p) in self.pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.pmf.len() - 1
    }
}

/// Sorted set of coordinate indices a functional may depend on.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DepSet(Vec<usize>);

impl DepSet {
    pub fn empty() -> Self {
        DepSet(Vec::new())
    }

    pub fn all(dim: usize) -> Self {
        DepSet((0..dim).collect())
    }

    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        DepSet(v)
    }

    pub fn contains(&self, a: usize) -> bool {
        self.0.binary_search(&a).is_ok()
    }

    pub fn without(&self, a: usize) -> Self {
        DepSet(self.0.iter().copied().filter(|&b| b != a).collect())
    }

    pub fn union(&self, other: &DepSet) -> Self {
        DepSet::new(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn intersect(&self, keep: impl Fn(usize) -> bool) -> Self {
        DepSet(self.0.iter().copied().filter(|&b| keep(b)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// One outcome index per coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration(pub Vec<usize>);

impl Configuration {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

pub type Evaluator = Arc<dyn Fn(&[usize]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Table(Vec<f64>),
    BlackBox(Evaluator),
}

/// A real random variable on a product space.
#[derive(Clone)]
pub struct Functional {
    repr: Repr,
    deps: DepSet,
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Table(v) => f
                .debug_struct("Functional::Table")
                .field("deps", &self.deps)
                .field("values", v)
                .finish(),
            Repr::BlackBox(_) => f
                .debug_struct("Functional::BlackBox")
                .field("deps", &self.deps)
                .finish_non_exhaustive(),
        }
    }
}

impl Functional {
    /// Exact table indexed by configuration index.
    pub fn from_table(space: &ProductSpace, values: Vec<f64>, deps: DepSet) -> Result<Self> {
        let count = space.require_exact()?;
        if values.len() != count {
            return Err(Error::Mismatch(format!(
                "table has {} entries, space has {count} configurations",
                values.len()
            )));
        }
        if let Some(&a) = deps.as_slice().last() {
            if a >= space.dim() {
                return Err(Error::IndexOutOfRange {
                    index: a,
                    bound: space.dim(),
                });
            }
        }
        Ok(Functional {
            repr: Repr::Table(values),
            deps,
        })
    }

    /// Black-box evaluator; `deps` must contain every coordinate `f` reads.
    pub fn black_box<F>(deps: DepSet, f: F) -> Self
    where
        F: Fn(&[usize]) -> f64 + Send + Sync + 'static,
    {
        Functional {
            repr: Repr::BlackBox(Arc::new(f)),
            deps,
        }
    }

    pub fn constant(space: &ProductSpace, c: f64) -> Result<Self> {
        let count = space.require_exact()?;
        Ok(Functional {
            repr: Repr::Table(vec![c; count]),
            deps: DepSet::empty(),
        })
    }

    pub fn zeros(space: &ProductSpace) -> Result<Self> {
        Functional::constant(space, 0.0)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.repr, Repr::Table(_))
    }

    pub fn deps(&self) -> &DepSet {
        &self.deps
    }

    pub fn with_deps(mut self, deps: DepSet) -> Self {
        self.deps = deps;
        self
    }

    /// Table values, if this is an exact functional.
    pub fn table(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Table(v) => Some(v),
            Repr::BlackBox(_) => None,
        }
    }

    /// Table values; panics on black boxes. Use [`ProductSpace::tabulate`] first.
    pub fn values(&self) -> &[f64] {
        self.table()
            .expect("black-box functional used where a table is required; tabulate it first")
    }

    pub fn eval(&self, space: &ProductSpace, x: &[usize]) -> f64 {
        match &self.repr {
            Repr::Table(v) => v[space.index_of(x)],
            Repr::BlackBox(f) => f(x),
        }
    }

    fn table_map(&self, f: impl Fn(f64) -> f64) -> Functional {
        Functional {
            repr: Repr::Table(self.values().iter().map(|&v| f(v)).collect()),
            deps: self.deps.clone(),
        }
    }

    fn table_zip(&self, other: &Functional, f: impl Fn(f64, f64) -> f64) -> Functional {
        let (a, b) = (self.values(), other.values());
        assert_eq!(a.len(), b.len(), "functionals live on different spaces");
        Functional {
            repr: Repr::Table(a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()),
            deps: self.deps.union(&other.deps),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Functional {
        self.table_map(f)
    }

    pub fn zip_with(&self, other: &Functional, f: impl Fn(f64, f64) -> f64) -> Functional {
        self.table_zip(other, f)
    }

    pub fn scale(&self, c: f64) -> Functional {
        self.table_map(|v| c * v)
    }

    pub fn add_constant(&self, c: f64) -> Functional {
        self.table_map(|v| v + c)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Sup-norm distance between two exact functionals.
    pub fn max_abs_diff(&self, other: &Functional) -> f64 {
        self.values()
            .iter()
            .zip(other.values())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl std::ops::Add for &Functional {
    type Output = Functional;
    fn add(self, rhs: &Functional) -> Functional {
        self.table_zip(rhs, |a, b| a + b)
    }
}

impl std::ops::Sub for &Functional {
    type Output = Functional;
    fn sub(self, rhs: &Functional) -> Functional {
        self.table_zip(rhs, |a, b| a - b)
    }
}

impl std::ops::Mul for &Functional {
    type Output = Functional;
    fn mul(self, rhs: &Functional) -> Functional {
        self.table_zip(rhs, |a, b| a * b)
    }
}

impl std::ops::Neg for &Functional {
    type Output = Functional;
    fn neg(self) -> Functional {
        self.table_map(|a| -a)
    }
}

/// The probability space `(E_A, P_A)`.
#[derive(Debug)]
pub struct ProductSpace {
    coords: Vec<Coordinate>,
    strides: Vec<usize>,
    config_count: Option<usize>,
    ceiling: usize,
    weights: OnceLock<Vec<f64>>,
}

impl Clone for ProductSpace {
    fn clone(&self) -> Self {
        ProductSpace {
            coords: self.coords.clone(),
            strides: self.strides.clone(),
            config_count: self.config_count,
            ceiling: self.ceiling,
            weights: OnceLock::new(),
        }
    }
}

/// Validates coordinates and builds the product space.
pub fn build_space(coords: Vec<Coordinate>) -> Result<ProductSpace> {
    ProductSpace::new(coords)
}

impl ProductSpace {
    pub fn new(coords: Vec<Coordinate>) -> Result<Self> {
        for c in &coords {
            if c.is_empty() {
                return Err(Error::EmptySupport(c.id.clone()));
            }
        }
        let mut strides = vec![0usize; coords.len()];
        let mut count: Option<usize> = Some(1);
        for a in (0..coords.len()).rev() {
            strides[a] = count.unwrap_or(0);
            count = count.and_then(|c| c.checked_mul(coords[a].len()));
        }
        Ok(ProductSpace {
            coords,
            strides,
            config_count: count,
            ceiling: DEFAULT_EXACT_CEILING,
            weights: OnceLock::new(),
        })
    }

    pub fn with_ceiling(mut self, ceiling: usize) -> Self {
        self.ceiling = ceiling;
        self
    }

    /// `n` independent fair `{-1, +1}` coordinates.
    pub fn fair_signs(n: usize) -> Self {
        let coords = (0..n)
            .map(|a| Coordinate::fair_sign(format!("x{}", a + 1)))
            .collect();
        ProductSpace::new(coords).expect("fair sign space")
    }

    /// `n` copies of one coordinate law.
    pub fn iid(base: &Coordinate, n: usize) -> Self {
        let coords = (0..n)
            .map(|a| {
                let mut c = base.clone();
                c.id = format!("{}{}", base.id, a + 1);
                c
            })
            .collect();
        ProductSpace::new(coords).expect("iid space")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn coord(&self, a: usize) -> &Coordinate {
        &self.coords[a]
    }

    pub fn check_index(&self, a: usize) -> Result<()> {
        if a >= self.dim() {
            Err(Error::IndexOutOfRange {
                index: a,
                bound: self.dim(),
            })
        } else {
            Ok(())
        }
    }

    /// Number of configurations, `None` when it overflows `usize`.
    pub fn config_count(&self) -> Option<usize> {
        self.config_count
    }

    pub fn ceiling(&self) -> usize {
        self.ceiling
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.config_count, Some(c) if c <= self.ceiling)
    }

    /// Configuration count, or `ExactModeOverflow` above the ceiling.
    pub fn require_exact(&self) -> Result<usize> {
        match self.config_count {
            Some(c) if c <= self.ceiling => Ok(c),
            Some(c) => Err(Error::ExactModeOverflow(format!(
                "{c} configurations exceed the ceiling {}",
                self.ceiling
            ))),
            None => Err(Error::ExactModeOverflow(
                "configuration count overflows usize".into(),
            )),
        }
    }

    pub fn stride(&self, a: usize) -> usize {
        self.strides[a]
    }

    pub fn index_of(&self, x: &[usize]) -> usize {
        x.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    pub fn fill_config(&self, mut index: usize, out: &mut [usize]) {
        for (a, c) in self.coords.iter().enumerate() {
            out[a] = index / self.strides[a];
            index %= self.strides[a];
            debug_assert!(out[a] < c.len());
        }
    }

    pub fn config_at(&self, index: usize) -> Configuration {
        let mut x = vec![0; self.dim()];
        self.fill_config(index, &mut x);
        Configuration(x)
    }

    /// Validates a configuration against the supports.
    pub fn check_config(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Mismatch(format!(
                "configuration has {} entries, space has {} coordinates",
                x.len(),
                self.dim()
            )));
        }
        for (&k, c) in x.iter().zip(&self.coords) {
            if k >= c.len() {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    bound: c.len(),
                });
            }
        }
        Ok(())
    }

    /// Probability of every configuration, in index order.
    pub fn weights(&self) -> Result<&[f64]> {
        let count = self.require_exact()?;
        Ok(self.weights.get_or_init(|| {
            let mut w = vec![1.0; count];
            let mut x = vec![0; self.dim()];
            for (i, wi) in w.iter_mut().enumerate() {
                self.fill_config(i, &mut x);
                *wi = x.iter().zip(&self.coords).map(|(&k, c)| c.pmf[k]).product();
            }
            w
        }))
    }

    pub fn sample_config<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        Configuration(self.coords.iter().map(|c| c.sample(rng)).collect())
    }

    /// Real embedding of outcome `k` of coordinate `a` (zero when absent).
    pub fn value(&self, a: usize, k: usize) -> f64 {
        self.coords[a].value(k).unwrap_or(0.0)
    }

    /// Exact functional depending on every coordinate.
    pub fn from_fn(&self, f: impl FnMut(&[usize]) -> f64) -> Result<Functional> {
        self.from_fn_on(DepSet::all(self.dim()), f)
    }

    /// Exact functional with a declared dependency set.
    pub fn from_fn_on(
        &self,
        deps: DepSet,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Functional> {
        let count = self.require_exact()?;
        let mut x = vec![0; self.dim()];
        let values = (0..count)
            .map(|i| {
                self.fill_config(i, &mut x);
                f(&x)
            })
            .collect();
        Functional::from_table(self, values, deps)
    }

    /// Functional of the real embeddings `(x_1, ..., x_n)`.
    pub fn from_values(&self, f: impl Fn(&[f64]) -> f64) -> Result<Functional> {
        let mut buf = vec![0.0; self.dim()];
        self.from_fn(|x| {
            for (a, &k) in x.iter().enumerate() {
                buf[a] = self.value(a, k);
            }
            f(&buf)
        })
    }

    /// The coordinate variable `X_a` through its real embedding.
    pub fn coordinate_value(&self, a: usize) -> Result<Functional> {
        self.check_index(a)?;
        self.from_fn_on(DepSet::new([a]), |x| self.value(a, x[a]))
    }

    /// Materialises a functional as a table.
    pub fn tabulate(&self, f: &Functional) -> Result<Functional> {
        if f.is_exact() {
            return Ok(f.clone());
        }
        self.from_fn_on(f.deps.clone(), |x| f.eval(self, x))
    }

    pub(crate) fn values_of<'a>(&self, f: &'a Functional) -> Result<Cow<'a, [f64]>> {
        match &f.repr {
            Repr::Table(v) => {
                if v.len() != self.require_exact()? {
                    return Err(Error::Mismatch("table length differs from space".into()));
                }
                Ok(Cow::Borrowed(v))
            }
            Repr::BlackBox(_) => Ok(Cow::Owned(self.tabulate(f)?.values().to_vec())),
        }
    }

    /// Integrates coordinate `a` out of a table: `sum_x v(.., x, ..) P_a(x)`.
    pub(crate) fn integrate_out(&self, values: &[f64], a: usize) -> Vec<f64> {
        let s = self.strides[a];
        let pmf = &self.coords[a].pmf;
        let n = pmf.len();
        let block = s * n;
        let mut out = vec![0.0; values.len()];
        for outer in (0..values.len()).step_by(block) {
            for inner in 0..s {
                let acc: f64 = (0..n).map(|x| pmf[x] * values[outer + x * s + inner]).sum();
                for x in 0..n {
                    out[outer + x * s + inner] = acc;
                }
            }
        }
        out
    }

    /// Mixes a table with its integral over coordinate `a`:
    /// `keep * v + (1 - keep) * E_a v`.
    pub(crate) fn mix_coordinate(&self, values: &[f64], a: usize, keep: f64) -> Vec<f64> {
        let avg = self.integrate_out(values, a);
        values
            .iter()
            .zip(avg)
            .map(|(v, m)| keep * v + (1.0 - keep) * m)
            .collect()
    }

    /// Parses a space description (TOML).
    pub fn parse(text: &str) -> Result<Self> {
        let file: SpaceFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let coords = file
            .coordinate
            .into_iter()
            .map(|c| {
                let (outcomes, pmf) = c
                    .outcomes
                    .into_iter()
                    .map(|o| {
                        (
                            Outcome {
                                label: o.label,
                                value: o.value,
                            },
                            o.p,
                        )
                    })
                    .unzip();
                Coordinate::new(c.id, outcomes, pmf)
            })
            .collect::<Result<Vec<_>>>()?;
        ProductSpace::new(coords)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Parse(format!("{}: {e}", path.as_ref().display())))?;
        ProductSpace::parse(&text)
    }

    /// Serialises the space description (TOML).
    pub fn to_toml(&self) -> String {
        let file = SpaceFile {
            coordinate: self
                .coords
                .iter()
                .map(|c| CoordinateSpec {
                    id: c.id.clone(),
                    outcomes: c
                        .outcomes
                        .iter()
                        .zip(&c.pmf)
                        .map(|(o, &p)| OutcomeSpec {
                            label: o.label.clone(),
                            p,
                            value: o.value,
                        })
                        .collect(),
                })
                .collect(),
        };
        toml::to_string(&file).expect("space serialises")
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    coordinate: Vec<CoordinateSpec>,
}

#[derive(Serialize, Deserialize)]
struct CoordinateSpec {
    id: String,
    outcomes: Vec<OutcomeSpec>,
}

#[derive(Serialize, Deserialize)]
struct OutcomeSpec {
    label: String,
    p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
}

/// Estimate returned by Monte-Carlo paths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        McEstimate {
            mean,
            std_error: (var / n).sqrt(),
            samples: xs.len(),
        }
    }
}

/// Exact `E[F]`.
pub fn expectation(space: &ProductSpace, f: &Functional) -> Result<f64> {
    let w = space.weights()?;
    let v = space.values_of(f)?;
    Ok(w.iter().zip(v.iter()).map(|(w, v)| w * v).sum())
}

/// Sample mean of `F` with its standard error.
pub fn expectation_mc<R: Rng + ?Sized>(
    space: &ProductSpace,
    f: &Functional,
    samples: usize,
    rng: &mut R,
) -> McEstimate {
    let xs: Vec<f64> = (0..samples)
        .map(|_| {
            let x = space.sample_config(rng);
            f.eval(space, &x.0)
        })
        .collect();
    McEstimate::from_samples(&xs)
}

/// `E[F | G_a]`: integrates coordinate `a` out.
pub fn conditional_drop(space: &ProductSpace, f: &Functional, a: usize) -> Result<Functional> {
    space.check_index(a)?;
    if !f.deps.contains(a) {
        return Ok(f.clone());
    }
    let deps = f.deps.without(a);
    match &f.repr {
        Repr::Table(v) => Ok(Functional {
            repr: Repr::Table(space.integrate_out(v, a)),
            deps,
        }),
        Repr::BlackBox(eval) => {
            let eval = eval.clone();
            let pmf = space.coord(a).pmf.clone();
            Ok(Functional::black_box(deps, move |x: &[usize]| {
                let mut y = x.to_vec();
                pmf.iter()
                    .enumerate()
                    .map(|(k, p)| {
                        y[a] = k;
                        p * eval(&y)
                    })
                    .sum()
            }))
        }
    }
}

/// `E[F | X_keep]` for an arbitrary set of kept coordinates.
pub fn conditional_on(space: &ProductSpace, f: &Functional, keep: &[usize]) -> Result<Functional> {
    for &a in keep {
        space.check_index(a)?;
    }
    let drop: Vec<usize> = f.deps.iter().filter(|a| !keep.contains(a)).collect();
    let mut g = f.clone();
    if let Repr::Table(_) = g.repr {
        for a in drop {
            g = conditional_drop(space, &g, a)?;
        }
        return Ok(g);
    }
    for a in drop {
        g = conditional_drop(space, &g, a)?;
    }
    Ok(g)
}

/// Validates that `order` is a permutation of the coordinate indices.
pub fn check_order(space: &ProductSpace, order: &[usize]) -> Result<()> {
    let n = space.dim();
    if order.len() != n {
        return Err(Error::Mismatch(format!(
            "order has {} entries, space has {n} coordinates",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &a in order {
        if a >= n {
            return Err(Error::IndexOutOfRange { index: a, bound: n });
        }
        if std::mem::replace(&mut seen[a], true) {
            return Err(Error::Mismatch(format!("order repeats coordinate {a}")));
        }
    }
    Ok(())
}

/// `E[F | F_k]` with `F_k = sigma(X_order[0], ..., X_order[k-1])`.
pub fn conditional_prefix(
    space: &ProductSpace,
    f: &Functional,
    k: usize,
    order: &[usize],
) -> Result<Functional> {
    check_order(space, order)?;
    if k > order.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            bound: order.len(),
        });
    }
    conditional_on(space, f, &order[..k])
}

/// Resamples coordinates outside the declared dependency set and reports the
/// largest change in value. Zero for an honest declaration.
pub fn dependency_violation<R: Rng + ?Sized>(
    space: &ProductSpace,
    f: &Functional,
    trials: usize,
    rng: &mut R,
) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let x = space.sample_config(rng);
        let mut y = x.0.clone();
        for (a, ya) in y.iter_mut().enumerate() {
            if !f.deps.contains(a) {
                *ya = space.coord(a).sample(rng);
            }
        }
        worst = worst.max((f.eval(space, &x.0) - f.eval(space, &y)).abs());
    }
    worst
}
