use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use malliavin_core::calculus::{
    check_eigenstructure, check_gradient_commutation, check_innovation, check_integration_by_parts,
    check_inverse, check_product_rule, check_weitzenbock,
};
use malliavin_core::decompose::{
    check_helmholtz_round_trip, clark_reverse, clark_symmetric, covariance_identity, poincare,
};
use malliavin_core::ewens::{c1_monte_carlo, c1_stats};
use malliavin_core::inequalities::{concentration_sampled, tail_table};
use malliavin_core::limits::{
    poisson_form_enumerated, poisson_form_linear, poisson_form_mc, walk_form_mc, FormValue, StepLaw,
};
use malliavin_core::random::{random_field, random_functional, random_functional_on, random_space};
use malliavin_core::semigroup::{
    check_commutation, check_semigroup_law, check_stationarity, decay_table,
};
use malliavin_core::stein::{
    contractions, degenerate_ustat_experiment, empirical_distance, fourth_moment_check,
    gaussian_bound_iid_sum, quadratic_form, rademacher_sums,
};
use malliavin_core::ustat::{check_degenerate_eigen, degeneracy_order};
use malliavin_core::{
    clark, concentration, expectation, gamma_bound, gaussian_bound, helmholtz, hoeffding_decompose,
    homogeneous_gamma_bound, log_sobolev, lyapounov_bound, mehler_apply, poisson_scheme, simulate,
    walk_form_exact, walk_limit, Configuration, Coordinate, Density, DepSet, EwensModel,
    Functional, KernelMatrix, PathFunctional, PointFunctional, ProductSpace, SymmetricKernel,
    WalkScheme,
};

use crate::args::*;
use crate::error::CliError;
use crate::report::Table;

pub struct Output {
    pub result: Value,
    pub table: Option<Table>,
}

type Res<T> = Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::InvalidParameter(msg.into())
}

fn rng(global: &GlobalArgs, purpose: &str) -> Res<ChaCha8Rng> {
    global
        .seed
        .map(ChaCha8Rng::seed_from_u64)
        .ok_or_else(|| invalid(format!("--seed is required for {purpose}")))
}

fn to_value<T: serde::Serialize>(v: &T) -> Res<Value> {
    Ok(serde_json::to_value(v)?)
}

fn base_law(kind: BaseLaw) -> Coordinate {
    match kind {
        BaseLaw::Fair => Coordinate::fair_sign("x"),
        BaseLaw::Skewed => {
            Coordinate::real("y", &[-1.0, 0.5, 2.0], &[0.3, 0.5, 0.2]).expect("skewed law")
        }
    }
}

fn load_space(args: &SpaceArgs) -> Res<ProductSpace> {
    match &args.space {
        Some(path) => Ok(ProductSpace::load(path)?),
        None if args.n == 0 => Err(invalid("--n must be positive")),
        None => Ok(ProductSpace::fair_signs(args.n)),
    }
}

fn build_functional(
    space: &ProductSpace,
    args: &SpaceArgs,
    global: &GlobalArgs,
) -> Res<Functional> {
    let f = match args.functional {
        FunctionalKind::Sum => space.from_values(|x| x.iter().sum()),
        FunctionalKind::Product => space.from_values(|x| x.iter().product()),
        FunctionalKind::Max => {
            space.from_values(|x| x.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        }
        FunctionalKind::Majority => space.from_values(|x| {
            let s: f64 = x.iter().sum();
            if s > 0.0 {
                1.0
            } else if s < 0.0 {
                -1.0
            } else {
                0.0
            }
        }),
        FunctionalKind::Random => {
            let mut r = rng(global, "a random functional")?;
            return Ok(random_functional(space, &mut r));
        }
    };
    Ok(f?)
}

pub fn identities(args: &IdentitiesArgs, global: &GlobalArgs) -> Res<Output> {
    const TOL: f64 = 1e-10;
    let trials = global.trials.unwrap_or(500);
    if args.max_dim == 0 || args.max_outcomes < 2 {
        return Err(invalid("need --max-dim >= 1 and --max-outcomes >= 2"));
    }
    let mut rng = rng(global, "random identity trials")?;
    let names = [
        "integration_by_parts",
        "product_rule",
        "gradient_commutation",
        "weitzenbock",
        "innovation",
        "anova_eigenstructure",
        "number_operator_inverse",
        "helmholtz_round_trip",
        "covariance",
        "clark_forward",
    ];
    let mut worst = [0.0f64; 10];
    for _ in 0..trials {
        let s = random_space(&mut rng, args.max_dim, args.max_outcomes);
        let f = random_functional(&s, &mut rng);
        let g = random_functional(&s, &mut rng);
        let (u, v) = (random_field(&s, &mut rng), random_field(&s, &mut rng));
        let mut adapted = malliavin_core::CoordinateField::new();
        for k in 0..s.dim() {
            adapted.insert(k, random_functional_on(&s, &DepSet::new(0..=k), &mut rng));
        }
        let order: Vec<usize> = (0..s.dim()).collect();
        let fc = f.add_constant(-expectation(&s, &f)?);
        let mut product = 0.0f64;
        for a in 0..s.dim() {
            product = product.max(check_product_rule(&s, &f, &g, a)?.residual);
        }
        let residuals = [
            check_integration_by_parts(&s, &f, &u)?.residual,
            product,
            check_gradient_commutation(&s, &f)?.residual,
            check_weitzenbock(&s, &u, &v)?.residual,
            check_innovation(&s, &adapted)?.residual,
            check_eigenstructure(&s, &f)?.residual,
            check_inverse(&s, &fc)?.residual,
            check_helmholtz_round_trip(&s, &helmholtz(&s, &u)?)?.residual,
            covariance_identity(&s, &f, &g, &order)?.residual,
            clark(&s, &f, &order)?.residual,
        ];
        for (w, r) in worst.iter_mut().zip(residuals) {
            *w = w.max(r);
        }
    }
    let rows: Vec<Value> = names
        .iter()
        .zip(worst)
        .map(|(n, r)| json!({ "name": n, "max_residual": r, "within": r <= TOL }))
        .collect();
    let mut table = Table::new(&["index", "max_residual"]);
    for (i, r) in worst.iter().enumerate() {
        table.push(vec![i as f64, *r]);
    }
    Ok(Output {
        result: json!({
            "trials": trials,
            "tolerance": TOL,
            "identities": rows,
            "all_within": worst.iter().all(|r| *r <= TOL),
        }),
        table: Some(table),
    })
}

pub fn semigroup(args: &SemigroupArgs, global: &GlobalArgs) -> Res<Output> {
    let space = load_space(&args.space)?;
    let f = build_functional(&space, &args.space, global)?;
    if args.times.iter().any(|t| t.is_nan() || *t < 0.0) {
        return Err(invalid("times must be nonnegative"));
    }
    let decay = decay_table(&space, &f, &args.times)?;
    let mut law = 0.0f64;
    let mut commutation = Vec::new();
    for (i, &s) in args.times.iter().enumerate() {
        for &t in &args.times[i..] {
            law = law.max(check_semigroup_law(&space, &f, s, t)?.residual);
        }
        let (mut frozen, mut plain, mut literal) = (0.0f64, 0.0f64, 0.0f64);
        for a in 0..space.dim() {
            let c = check_commutation(&space, &f, s, a)?;
            frozen = frozen.max(c.frozen.residual);
            plain = plain.max(c.plain.residual);
            literal = literal.max(c.literal.residual);
        }
        commutation.push(json!({ "t": s, "frozen": frozen, "plain": plain, "literal": literal }));
    }
    let stationarity = check_stationarity(&space)?.residual;
    let mc = global.mode == Mode::Mc;
    let mut table = if mc {
        Table::new(&["t", "sup_distance", "exact_value", "mc_value", "mc_se"])
    } else {
        Table::new(&["t", "sup_distance"])
    };
    let mut simulated = Vec::new();
    let mut r = if mc {
        Some(rng(global, "trajectory simulation")?)
    } else {
        None
    };
    let start = Configuration(vec![0; space.dim()]);
    for &(t, d) in &decay {
        if let Some(r) = r.as_mut() {
            let trials = global.trials.unwrap_or(10_000);
            let exact = mehler_apply(&space, &f, t)?.eval(&space, &start.0);
            let draws: Vec<f64> = (0..trials)
                .map(|_| Ok(f.eval(&space, &simulate(&space, &start, t, r)?.final_state().0)))
                .collect::<Res<_>>()?;
            let est = malliavin_core::McEstimate::from_samples(&draws);
            simulated
                .push(json!({ "t": t, "exact": exact, "mc": est.mean, "mc_se": est.std_error }));
            table.push(vec![t, d, exact, est.mean, est.std_error]);
        } else {
            table.push(vec![t, d]);
        }
    }
    Ok(Output {
        result: json!({
            "decay": decay.iter().map(|(t, d)| json!({ "t": t, "sup_distance": d })).collect::<Vec<_>>(),
            "semigroup_law_residual": law,
            "commutation": commutation,
            "stationarity_residual": stationarity,
            "simulation": simulated,
        }),
        table: Some(table),
    })
}

pub fn clark_cmd(args: &ClarkArgs, global: &GlobalArgs) -> Res<Output> {
    let space = load_space(&args.space)?;
    let f = build_functional(&space, &args.space, global)?;
    let order = args
        .order
        .clone()
        .unwrap_or_else(|| (0..space.dim()).collect());
    let mut forms = serde_json::Map::new();
    let want = |k: ClarkForm| args.form == k || args.form == ClarkForm::All;
    if want(ClarkForm::Forward) {
        forms.insert(
            "forward".into(),
            to_value(&clark(&space, &f, &order)?.summary())?,
        );
    }
    if want(ClarkForm::Reverse) {
        forms.insert(
            "reverse".into(),
            to_value(&clark_reverse(&space, &f, &order)?.summary())?,
        );
    }
    if want(ClarkForm::Symmetric) {
        forms.insert(
            "symmetric".into(),
            to_value(&clark_symmetric(&space, &f)?.summary())?,
        );
    }
    Ok(Output {
        result: json!({ "order": order, "forms": forms, "poincare": to_value(&poincare(&space, &f)?)? }),
        table: None,
    })
}

pub fn inequalities(args: &InequalitiesArgs, global: &GlobalArgs) -> Res<Output> {
    let space = load_space(&args.space)?;
    let f = build_functional(&space, &args.space, global)?;
    let order: Vec<usize> = (0..space.dim()).collect();
    let conc = match global.mode {
        Mode::Exact => concentration(&space, &f, &order)?,
        Mode::Mc => {
            let mut r = rng(global, "sampled concentration")?;
            concentration_sampled(
                &space,
                &f,
                &order,
                global.trials.unwrap_or(1000),
                64,
                &mut r,
            )?
        }
    };
    let rows = tail_table(&space, &f, &conc, &args.grid)?;
    let ls = log_sobolev(&space, &f.map(f64::exp))?;
    let mut table = Table::new(&["x", "exact_tail", "bound"]);
    for &(x, e, b) in &rows {
        table.push(vec![x, e, b]);
    }
    Ok(Output {
        result: json!({
            "concentration": to_value(&conc)?,
            "log_sobolev_exp_f": to_value(&ls)?,
            "log_sobolev_holds": ls.holds(),
            "tails": rows.iter().map(|(x, e, b)| json!({ "x": x, "exact_tail": e, "bound": b })).collect::<Vec<_>>(),
            "bound_dominates": rows.iter().all(|(_, e, b)| e <= &(b + 1e-12)),
        }),
        table: Some(table),
    })
}

fn build_kernel(kind: KernelKind, m: usize, mean: f64) -> Res<SymmetricKernel> {
    let k = match kind {
        KernelKind::Product => SymmetricKernel::new(m, |x| x.iter().product()),
        KernelKind::Sum => SymmetricKernel::new(m, |x| x.iter().sum()),
        KernelKind::Mixed => SymmetricKernel::new(m, |x| {
            x.iter().product::<f64>() + x.iter().sum::<f64>() + x.iter().map(|v| v * v).sum::<f64>()
        }),
        KernelKind::Centered => {
            SymmetricKernel::new(m, move |x| x.iter().map(|v| v - mean).product())
        }
    };
    Ok(k?)
}

pub fn hoeffding(args: &HoeffdingArgs, _global: &GlobalArgs) -> Res<Output> {
    if args.m == 0 || args.n < args.m {
        return Err(invalid("need 1 <= m <= n"));
    }
    let base = base_law(args.coordinate);
    let space = ProductSpace::iid(&base, args.n);
    let mean = base.moment(1).unwrap_or(0.0);
    let h = build_kernel(args.kernel, args.m, mean)?;
    let report = hoeffding_decompose(&space, &h, args.n)?;
    let degeneracy = degeneracy_order(&h, &base)?;
    let eigen = if degeneracy == Some(args.m) {
        Some(check_degenerate_eigen(&space, &h, args.n)?.residual)
    } else {
        None
    };
    Ok(Output {
        result: json!({
            "summary": to_value(&report.summary())?,
            "first_nonzero_layer": degeneracy,
            "degenerate_eigen_residual": eigen,
        }),
        table: None,
    })
}

pub fn ewens(args: &EwensArgs, global: &GlobalArgs) -> Res<Output> {
    let model = EwensModel::new(args.n, args.t)?;
    let stats = c1_stats(&model, args.enumerate)?;
    let mc = match global.mode {
        Mode::Exact => None,
        Mode::Mc => {
            let mut r = rng(global, "Ewens sampling")?;
            Some(c1_monte_carlo(
                &model,
                global.trials.unwrap_or(10_000),
                &mut r,
            )?)
        }
    };
    Ok(Output {
        result: json!({ "stats": to_value(&stats)?, "monte_carlo": to_value(&mc)? }),
        table: None,
    })
}

pub fn stein_gaussian(args: &SteinGaussianArgs, global: &GlobalArgs) -> Res<Output> {
    let base = base_law(args.coordinate);
    let bound = gaussian_bound_iid_sum(&base, args.n)?;
    let m = base.moment(1).unwrap_or(0.0);
    let values = base.values().unwrap_or_default();
    let var: f64 = values
        .iter()
        .zip(base.pmf())
        .map(|(v, p)| p * (v - m).powi(2))
        .sum();
    let third: f64 = values
        .iter()
        .zip(base.pmf())
        .map(|(v, p)| p * (v - m).abs().powi(3))
        .sum();
    let lyapounov = lyapounov_bound(&vec![(var, third); args.n])?;
    let engine = if args.n <= 12 {
        let space = ProductSpace::iid(&base, args.n);
        let scale = 1.0 / (var * args.n as f64).sqrt();
        let f = space.from_values(|x| x.iter().map(|v| v - m).sum::<f64>() * scale)?;
        Some(gaussian_bound(&space, &f)?)
    } else {
        None
    };
    let empirical = match global.mode {
        Mode::Exact => None,
        Mode::Mc => {
            let mut r = rng(global, "empirical distances")?;
            let samples = global.trials.unwrap_or(100_000);
            let draws = match args.coordinate {
                BaseLaw::Fair => rademacher_sums(args.n, samples, &mut r),
                BaseLaw::Skewed => {
                    let scale = 1.0 / (var * args.n as f64).sqrt();
                    (0..samples)
                        .map(|_| {
                            (0..args.n)
                                .map(|_| values[base.sample(&mut r)] - m)
                                .sum::<f64>()
                                * scale
                        })
                        .collect()
                }
            };
            Some(empirical_distance(
                &draws,
                malliavin_core::Target::Gaussian,
                50,
                &mut r,
            )?)
        }
    };
    Ok(Output {
        result: json!({
            "bound": to_value(&bound)?,
            "total": bound.total,
            "lyapounov": lyapounov,
            "engine": to_value(&engine)?,
            "empirical": to_value(&empirical)?,
        }),
        table: None,
    })
}

pub fn stein_gamma(args: &SteinGammaArgs, global: &GlobalArgs) -> Res<Output> {
    if args.n < 2 {
        return Err(invalid("--n must be at least 2"));
    }
    let w = 2.0 / (args.n as f64 - 1.0);
    let kernel = KernelMatrix::constant(args.n, w);
    let homogeneous = homogeneous_gamma_bound(&kernel, 1.0)?;
    let (bound, fourth) = if args.n <= 12 {
        let space = ProductSpace::fair_signs(args.n);
        let f = quadratic_form(&space, &kernel)?;
        (
            Some(gamma_bound(&space, &f, args.r, args.lambda)?),
            if args.n <= 8 {
                Some(fourth_moment_check(&space, &kernel)?)
            } else {
                None
            },
        )
    } else {
        (None, None)
    };
    let experiment = match global.mode {
        Mode::Exact => None,
        Mode::Mc => {
            let mut r = rng(global, "the U-statistic experiment")?;
            let samples = global.trials.unwrap_or(100_000);
            Some(degenerate_ustat_experiment(
                args.n,
                &Coordinate::fair_sign("x"),
                samples,
                50,
                &mut r,
            )?)
        }
    };
    Ok(Output {
        result: json!({
            "gamma_bound": to_value(&bound)?,
            "homogeneous": to_value(&homogeneous)?,
            "fourth_moment": to_value(&fourth)?,
            "experiment": to_value(&experiment)?,
        }),
        table: None,
    })
}

pub fn stein_homog(args: &SteinHomogArgs, _global: &GlobalArgs) -> Res<Output> {
    let kernel = match &args.kernel {
        Some(path) => KernelMatrix::parse_csv(&std::fs::read_to_string(path)?)?,
        None if args.n >= 2 => KernelMatrix::constant(args.n, 2.0 / (args.n as f64 - 1.0)),
        None => return Err(invalid("--n must be at least 2")),
    };
    let c = contractions(&kernel);
    let report = homogeneous_gamma_bound(&kernel, args.fourth_moment)?;
    Ok(Output {
        result: json!({
            "size": kernel.size(),
            "nu": c.nu,
            "influence": c.influence,
            "star21": c.star21,
            "bound": to_value(&report)?,
        }),
        table: None,
    })
}

fn sweep(sizes: &[usize], grid: bool, standard: &[usize]) -> Res<Vec<usize>> {
    let out = if grid {
        standard.to_vec()
    } else {
        sizes.to_vec()
    };
    if out.is_empty() || out.contains(&0) {
        return Err(invalid("partition sizes must be positive"));
    }
    Ok(out)
}

fn limit_table(rows: &[(usize, FormValue, f64)]) -> (Table, Value) {
    let mut table = Table::new(&["N", "form", "limit", "gap", "mc_se"]);
    let mut json_rows = Vec::new();
    for (n, v, limit) in rows {
        let gap = (v.value - limit).abs();
        table.push(vec![*n as f64, v.value, *limit, gap, v.mc_se]);
        json_rows.push(json!({
            "N": n, "form": v.value, "limit": limit, "gap": gap, "mc_se": v.mc_se,
            "truncated_mass": v.truncated_mass,
        }));
    }
    (table, Value::Array(json_rows))
}

pub fn limits_poisson(args: &LimitsPoissonArgs, global: &GlobalArgs) -> Res<Output> {
    let sizes = sweep(&args.sizes, args.grid, &[4, 16, 64, 256])?;
    let density = match args.density {
        DensityKind::Uniform => Density::uniform(),
        DensityKind::Linear => Density::linear(),
    };
    let f = match args.functional {
        PointKind::Total => PointFunctional::TotalMass,
        PointKind::Capped => PointFunctional::CappedMass(1),
        PointKind::Count => PointFunctional::CountIn(0.0, 0.5),
    };
    let limit = f
        .analytic_limit(&density)
        .expect("built-in limits are closed form");
    let mut r = match global.mode {
        Mode::Mc => Some(rng(global, "Poisson sampling")?),
        Mode::Exact => None,
    };
    let mut rows = Vec::new();
    for &n in &sizes {
        let scheme = poisson_scheme(&density, n)?;
        let value = match (r.as_mut(), f.linear_weight().is_some()) {
            (Some(r), _) => {
                poisson_form_mc(&f, &scheme, args.tail_eps, global.trials.unwrap_or(2000), r)?
            }
            (None, true) => poisson_form_linear(&f, &scheme)?,
            (None, false) => {
                poisson_form_enumerated(&f, &scheme, args.tail_eps).map_err(|e| match e {
                    malliavin_core::Error::EnumOverflow(m) => {
                        invalid(format!("{m}; raise --tail-eps or use --mode mc"))
                    }
                    other => other.into(),
                })?
            }
        };
        rows.push((n, value, limit));
    }
    let (table, json_rows) = limit_table(&rows);
    Ok(Output {
        result: json!({ "rows": json_rows, "spread_constants": sizes.iter().map(|&n| poisson_scheme(&density, n).map(|s| s.spread_constant)).collect::<Result<Vec<_>, _>>()? }),
        table: Some(table),
    })
}

pub fn limits_walk(args: &LimitsWalkArgs, global: &GlobalArgs) -> Res<Output> {
    let sizes = sweep(&args.sizes, args.grid, &[8, 16, 32, 64, 128, 256])?;
    let steps = match args.steps {
        StepKind::Gaussian => StepLaw::Gaussian,
        StepKind::Rademacher => StepLaw::Rademacher,
        StepKind::Uniform => StepLaw::Uniform,
    };
    let f = match args.functional {
        PathKind::Endpoint => PathFunctional::Endpoint,
        PathKind::Integral => PathFunctional::TimeIntegral,
    };
    let limit = walk_limit(&f)?;
    let mut r = match global.mode {
        Mode::Mc => Some(rng(global, "walk sampling")?),
        Mode::Exact => None,
    };
    let mut rows = Vec::new();
    for &n in &sizes {
        let scheme = WalkScheme::new(n, steps)?;
        let value = match r.as_mut() {
            Some(r) => walk_form_mc(&f, &scheme, global.trials.unwrap_or(2000), 16, r)?,
            None => walk_form_exact(&f, &scheme)?,
        };
        rows.push((n, value, limit));
    }
    let (table, json_rows) = limit_table(&rows);
    Ok(Output {
        result: json!({ "rows": json_rows }),
        table: Some(table),
    })
}
