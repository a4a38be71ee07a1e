use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use series_prior::basis::{fit_coefficients, simplex_coefficients, unit_grid};
use series_prior::harness::experiment::run_experiment;
use series_prior::harness::{io, ExperimentConfig};
use series_prior::rates::{log_grid, parse_rational, solve_sieve, Metric, SieveConstants};
use series_prior::regression::GPriorParams;
use series_prior::summary::DEFAULT_TERM_CAP;
use series_prior::{
    rate_exponents, Basis, BasisFamily, BinaryModel, Covariates, DensityDataset, DensityModel,
    Evaluation, GaussianModel, Hyper, KeyValues, ModelSizePrior, Moments, Norm, PoissonModel,
    PosteriorSummary, RateProblem, RegressionDataset, ResponseKind,
};

use crate::{
    ApproxArgs, ConjugateRegArgs, DensityFitArgs, ExpansionArgs, FunregArgs, Mode, NormArg,
    PriorArgs, RatesArgs, SimulateArgs, Target,
};

fn load(config: &Option<PathBuf>) -> Result<KeyValues> {
    match config {
        Some(p) => Ok(KeyValues::from_file(p)?),
        None => Ok(KeyValues::default()),
    }
}

fn put<T: ToString>(kv: &mut KeyValues, key: &str, value: &Option<T>) {
    if let Some(v) = value {
        kv.set(key, v.to_string());
    }
}

fn merge_prior(kv: &mut KeyValues, a: &PriorArgs) {
    put(kv, "q", &a.q);
    put(kv, "J.min", &a.jmin);
    put(kv, "J.max", &a.jmax);
    put(kv, "J.p", &a.p);
}

fn merge_expansion(kv: &mut KeyValues, a: &ExpansionArgs) {
    put(kv, "N", &a.draws);
    put(kv, "seed", &a.seed);
    put(kv, "cap", &a.cap);
    put(kv, "grid", &a.grid);
    put(kv, "band", &a.band);
    let mode = a.mode.map(|m| match m {
        Mode::Auto => "auto",
        Mode::Exact => "exact",
        Mode::Mc => "mc",
    });
    put(kv, "mode", &mode);
}

fn hyper(kv: &KeyValues, key: &str, default: f64) -> Result<Hyper> {
    Ok(match kv.float_list(key)? {
        None => Hyper::Scalar(default),
        Some(v) if v.len() == 1 => Hyper::Scalar(v[0]),
        Some(v) => Hyper::PerCoordinate(v),
    })
}

fn evaluation(kv: &KeyValues) -> Result<Evaluation> {
    let draws = kv.parsed_or("N", 3000usize)?;
    let seed = kv.parsed_or("seed", 1u64)?;
    Ok(match kv.get("mode").unwrap_or("auto") {
        "auto" => Evaluation::Auto { draws, seed },
        "exact" => Evaluation::Exact,
        "mc" => Evaluation::MonteCarlo { draws, seed },
        other => bail!("unknown mode {other:?} (expected auto, exact, mc)"),
    })
}

/// Band level from `band`; absent or 0 means no band.
fn band_level(kv: &KeyValues) -> Result<Option<f64>> {
    Ok(kv.parsed::<f64>("band")?.filter(|l| *l > 0.0))
}

fn finish_summary(kv: &KeyValues, summary: PosteriorSummary) -> Result<PosteriorSummary> {
    Ok(match band_level(kv)? {
        Some(level) => summary.with_credible_band(level)?,
        None => summary,
    })
}

fn moments(kv: &KeyValues) -> Result<Moments> {
    Ok(if band_level(kv)?.is_some() {
        Moments::Second
    } else {
        Moments::First
    })
}

/// `foo.csv` → `foo_j.csv`.
fn sidecar(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("summary");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_j.{ext}"),
        None => format!("{stem}_j"),
    };
    path.with_file_name(name)
}

fn emit_summary(summary: &PosteriorSummary, out: Option<&Path>, weights: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            io::write_summary(path, summary)?;
            let w = weights.map(Path::to_path_buf).unwrap_or_else(|| sidecar(path));
            io::write_j_weights(&w, summary)?;
            eprintln!("wrote {} and {}", path.display(), w.display());
        }
        None => {
            let sd = summary.sd();
            writeln!(std::io::stdout(), "x,mean,sd,band_low,band_high,mc_se")?;
            for i in 0..summary.grid.len() {
                let sd_i = sd.as_ref().map(|s| s[i].to_string()).unwrap_or_default();
                let (lo, hi) = summary
                    .band
                    .as_ref()
                    .map(|b| (b.low[i].to_string(), b.high[i].to_string()))
                    .unwrap_or_default();
                writeln!(
                    std::io::stdout(),
                    "{},{},{},{},{},{}",
                    summary.grid[i], summary.mean[i], sd_i, lo, hi, summary.mc_se[i]
                )?;
            }
            if let Some(w) = weights {
                io::write_j_weights(w, summary)?;
            }
        }
    }
    Ok(())
}

pub fn density_fit(a: DensityFitArgs) -> Result<()> {
    let mut kv = load(&a.prior.config)?;
    merge_prior(&mut kv, &a.prior);
    merge_expansion(&mut kv, &a.expansion);
    put(&mut kv, "theta.a", &a.alpha);
    put(&mut kv, "input", &a.input.as_ref().map(|p| p.display().to_string()));
    if a.rescale {
        kv.set("rescale", "true");
    }
    let input = kv.get("input").context("missing --input")?.to_string();
    let raw = io::read_observations(Path::new(&input))?;
    let (data, rescale) = if kv.parsed_or("rescale", false)? {
        let (d, r) = DensityDataset::rescaled(raw)?;
        (d, Some(r))
    } else {
        (DensityDataset::new(raw)?, None)
    };
    let order = kv.parsed_or("q", 1usize)?;
    let model = DensityModel::new(order, ModelSizePrior::from_config(&kv, 5, 25)?, hyper(&kv, "theta.a", 1.0)?)?
        .with_term_cap(kv.parsed_or("cap", DEFAULT_TERM_CAP)?);
    let grid = unit_grid(kv.parsed_or("grid", 101usize)?);
    let summary = model.posterior(&data, &grid, moments(&kv)?, evaluation(&kv)?)?;
    let mut summary = finish_summary(&kv, summary)?;
    if let Some(r) = rescale {
        // Report on the original scale.
        let f = r.density_factor();
        for x in summary.grid.iter_mut() {
            *x = r.backward(*x);
        }
        for v in summary.mean.iter_mut().chain(summary.mc_se.iter_mut()) {
            *v *= f;
        }
        if let Some(m2) = summary.second_moment.as_mut() {
            m2.iter_mut().for_each(|v| *v *= f * f);
        }
        if let Some(b) = summary.band.as_mut() {
            b.low.iter_mut().chain(b.high.iter_mut()).for_each(|v| *v *= f);
        }
    }
    let out = a.out.or_else(|| kv.get("out").map(PathBuf::from));
    emit_summary(&summary, out.as_deref(), a.weights.as_deref())
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let mut kv = load(&a.prior.config)?;
    merge_prior(&mut kv, &a.prior);
    merge_expansion(&mut kv, &a.expansion);
    put(&mut kv, "density", &a.density);
    put(&mut kv, "n", &a.n);
    put(&mut kv, "reps", &a.reps);
    put(&mut kv, "out", &a.out.as_ref().map(|p| p.display().to_string()));
    if !kv.contains("out") {
        kv.set("out", "results");
    }
    if let Some(m) = kv.get("mode").filter(|m| *m != "auto") {
        bail!("simulate always uses auto mode, got mode={m}");
    }
    let mut config = ExperimentConfig::from_config(&kv)?;
    config.band_level = band_level(&kv)?;
    let report = run_experiment(&config)?;
    writeln!(
        std::io::stdout(),
        "density={} n={} q={} reps={} mean_l1={} se_l1={} mean_l2={} se_l2={} mean_seconds={}",
        config.density.name(),
        config.n,
        config.order,
        config.replications,
        report.mean_l1,
        report.se_l1,
        report.mean_l2,
        report.se_l2,
        report.mean_seconds
    )?;
    if let Some(dir) = &config.output_dir {
        eprintln!("wrote {}", dir.join("metrics.csv").display());
    }
    Ok(())
}

fn target(t: Target) -> fn(f64) -> f64 {
    match t {
        Target::Sin => |x| (2.0 * std::f64::consts::PI * x).sin(),
        Target::Beta22 => |x| 6.0 * x * (1.0 - x),
        Target::Exp => |x| x.exp() / (std::f64::consts::E - 1.0),
    }
}

pub fn approx_check(a: ApproxArgs) -> Result<()> {
    let f = target(a.function);
    let norm = match a.norm {
        NormArg::Linf => Norm::Linf,
        NormArg::L2 => Norm::L2,
    };
    let dims = a
        .dims
        .split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad dimension {s:?}")))
        .collect::<Result<Vec<_>>>()?;
    if dims.is_empty() {
        bail!("no dimensions given");
    }
    if a.simplex {
        writeln!(std::io::stdout(), "j,error,simplex_error")?;
    } else {
        writeln!(std::io::stdout(), "j,error")?;
    }
    let mut points = Vec::new();
    for &j in &dims {
        let basis = Basis::with_dimension(a.q, j)?;
        let fit = fit_coefficients(f, &basis, norm)?;
        points.push(((j as f64).ln(), fit.error.ln()));
        if a.simplex {
            let s = match simplex_coefficients(f, &basis) {
                Ok(s) => s.error.to_string(),
                Err(e) => {
                    eprintln!("J={j}: {e}");
                    String::new()
                }
            };
            writeln!(std::io::stdout(), "{j},{},{s}", fit.error)?;
        } else {
            writeln!(std::io::stdout(), "{j},{}", fit.error)?;
        }
    }
    if points.len() >= 2 {
        let m = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
        let my = points.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        eprintln!("slope={}", sxy / sxx);
    }
    Ok(())
}

pub fn rates(a: RatesArgs) -> Result<()> {
    let family: BasisFamily = a.family.parse()?;
    let alpha = a
        .alpha
        .split(',')
        .map(|s| parse_rational(s.trim()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let t2 = parse_rational(&a.t2)?;
    let mut problem = RateProblem::new(family, alpha[0], t2);
    problem.alpha = alpha;
    problem.t1 = match &a.t1 {
        Some(t) => parse_rational(t)?,
        None => t2,
    };
    problem.t3 = parse_rational(&a.t3)?;
    problem.metric = a.metric.parse::<Metric>()?;
    writeln!(std::io::stdout(), "{}", rate_exponents(&problem)?)?;
    if let Some(path) = &a.sieve {
        let constants = SieveConstants {
            c1: a.c1,
            c3: a.c3,
            c0: a.c0,
            b: a.b,
        };
        let report = solve_sieve(&problem, constants, &log_grid(a.nmin, a.nmax, a.points))?;
        let b = |v: bool| u8::from(v).to_string();
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.j_bar.to_string(),
                    r.j_n.to_string(),
                    r.eps_bar.to_string(),
                    r.eps_n.to_string(),
                    r.m_n.to_string(),
                    b(r.checks.prior_mass_dimension),
                    b(r.checks.coefficient_bound),
                    b(r.checks.approximation),
                    b(r.checks.prior_concentration),
                    b(r.checks.ordering),
                    b(r.checks.well_posed),
                ]
            })
            .collect();
        io::write_table(
            path,
            "n,j_bar,j_n,eps_bar,eps_n,m_n,prior_mass_dimension,coefficient_bound,approximation,prior_concentration,ordering,well_posed",
            &rows,
        )?;
        match report.threshold {
            Some(n) => writeln!(std::io::stdout(), "threshold={n}")?,
            None => writeln!(std::io::stdout(), "threshold=none")?,
        }
    }
    Ok(())
}

fn read_responses(path: &Path) -> Result<Vec<f64>> {
    Ok(io::read_observations(path)?)
}

fn functional(path: &Path, responses: Option<&Path>, rescale: bool) -> Result<(Covariates, Vec<f64>)> {
    let table = io::read_functional(path, responses.is_none())?;
    let x = match responses {
        Some(r) => read_responses(r)?,
        None => table.responses.unwrap_or_default(),
    };
    if x.len() != table.curves.len() {
        bail!(
            "{}: {} curves but {} responses",
            path.display(),
            table.curves.len(),
            x.len()
        );
    }
    let grid = if rescale {
        io::rescale_grid(&table.grid)?
    } else {
        table.grid
    };
    Ok((Covariates::functional(grid, table.curves)?, x))
}

pub fn funreg(a: FunregArgs) -> Result<()> {
    let mut kv = load(&a.prior.config)?;
    merge_prior(&mut kv, &a.prior);
    put(&mut kv, "g", &a.g);
    put(&mut kv, "sigma.a", &a.a);
    put(&mut kv, "sigma.b", &a.b);
    put(&mut kv, "grid", &a.grid);
    put(&mut kv, "train", &a.train.as_ref().map(|p| p.display().to_string()));
    put(&mut kv, "test", &a.test.as_ref().map(|p| p.display().to_string()));
    if a.rescale_grid {
        kv.set("rescale_grid", "true");
    }
    let rescale = kv.parsed_or("rescale_grid", false)?;
    let train = kv.get("train").context("missing --train")?.to_string();
    let (covariates, x) = functional(Path::new(&train), a.responses.as_deref(), rescale)?;
    let params = GPriorParams {
        g: kv.parsed("g")?,
        a: kv.parsed_or("sigma.a", 1.0)?,
        b: kv.parsed_or("sigma.b", 1.0)?,
    };
    let order = kv.parsed_or("q", 3usize)?;
    let model = GaussianModel::new(order, ModelSizePrior::from_config(&kv, 5, 15)?, params)?;
    let posterior = model.fit(&covariates, &x)?;
    for (j, reason) in &posterior.infeasible {
        eprintln!("warning: J={j} excluded: {reason}");
    }
    let j_values: Vec<usize> = posterior.components.iter().map(|c| c.dimension).collect();
    if let Some(out) = &a.out {
        let grid = unit_grid(kv.parsed_or("grid", 101usize)?);
        let beta = posterior.mean_function(&grid)?;
        let rows: Vec<Vec<String>> = grid
            .iter()
            .zip(&beta)
            .map(|(t, b)| vec![t.to_string(), b.to_string()])
            .collect();
        io::write_table(out, "t,beta", &rows)?;
        io::write_weights(&sidecar(out), &j_values, &posterior.j_weights)?;
    }
    for (j, w) in j_values.iter().zip(&posterior.j_weights) {
        eprintln!("J={j} weight={w}");
    }
    if let Some(test) = kv.get("test") {
        let (test_cov, test_x) = functional(Path::new(test), a.test_responses.as_deref(), rescale)?;
        let predictions = posterior.predict(&test_cov)?;
        let mse = predictions
            .iter()
            .zip(&test_x)
            .map(|(p, x)| (p.mean - x).powi(2))
            .sum::<f64>()
            / predictions.len() as f64;
        writeln!(std::io::stdout(), "rmse={}", mse.sqrt())?;
        if let Some(path) = &a.predictions {
            io::write_predictions(path, &predictions)?;
        }
    } else if a.predictions.is_some() {
        bail!("--predictions needs --test");
    }
    Ok(())
}

pub fn conjugate_regression(a: ConjugateRegArgs, poisson: bool) -> Result<()> {
    let mut kv = load(&a.prior.config)?;
    merge_prior(&mut kv, &a.prior);
    merge_expansion(&mut kv, &a.expansion);
    put(&mut kv, "theta.a", &a.a);
    put(&mut kv, "theta.b", &a.b);
    put(&mut kv, "input", &a.input.as_ref().map(|p| p.display().to_string()));
    let input = kv.get("input").context("missing --input")?.to_string();
    let (z, x) = io::read_pairs(Path::new(&input))?;
    let kind = if poisson {
        ResponseKind::Count
    } else {
        ResponseKind::Binary
    };
    let data = RegressionDataset::new(z, x, kind)?;
    let order = kv.parsed_or("q", 1usize)?;
    let size_prior = ModelSizePrior::from_config(&kv, 5, 15)?;
    let cap = kv.parsed_or("cap", DEFAULT_TERM_CAP)?;
    let (a_hyper, b_hyper) = (hyper(&kv, "theta.a", 1.0)?, hyper(&kv, "theta.b", 1.0)?);
    let grid = unit_grid(kv.parsed_or("grid", 101usize)?);
    let (m, e) = (moments(&kv)?, evaluation(&kv)?);
    let summary = if poisson {
        PoissonModel::new(order, size_prior, a_hyper, b_hyper)?
            .with_term_cap(cap)
            .posterior(&data, &grid, m, e)?
    } else {
        BinaryModel::new(order, size_prior, a_hyper, b_hyper)?
            .with_term_cap(cap)
            .posterior(&data, &grid, m, e)?
    };
    let summary = finish_summary(&kv, summary)?;
    let out = a.out.or_else(|| kv.get("out").map(PathBuf::from));
    emit_summary(&summary, out.as_deref(), a.weights.as_deref())
}
