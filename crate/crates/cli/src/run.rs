//! Command dispatch.

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng as _;
use serde::Serialize;

use schur_lab::geometry::{classify, ClassifyOptions, Verdict};
use schur_lab::groups::{
    boundary_subalgebra_verdict, cotlar_pointwise_check, fourier_multiplier_norm_finite_cyclic, subalgebra_residual,
    GroupElement, GroupField, GroupId, LieAlgebraBasis, SubalgebraVerdict, VerdictOptions, BOUNDARY_VERDICT_TOL,
    SUBALGEBRA_TOL,
};
use schur_lab::harmonic::{square_function_test, GridFunction};
use schur_lab::multiplier::{
    growth_summary, norm_growth_experiment, records_to_csv, SamplerConfig, Trend, DEFAULT_SLOPE_THRESHOLD,
};
use schur_lab::rng;
use schur_lab::C64;

use crate::config::{Command, Expect, ExperimentConfig, Format, SymbolPayload};
use crate::error::CliError;
use crate::report::{
    CotlarRun, Envelope, GroupcheckReport, NormsReport, Outcome, SquarefnReport, SubalgebraRun, TransferReport,
    TransferRow, SCHEMA,
};
use crate::svg::norm_growth_svg;

/// Everything the command line can override.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub command: Option<Command>,
    pub config: ExperimentConfig,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub expect: Option<Expect>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub command: Command,
    pub outcome: Outcome,
    pub format: Format,
    pub text: String,
    pub out: Option<PathBuf>,
    pub exit_code: i32,
}

/// Result of one command before formatting.
enum Body {
    Classify(schur_lab::geometry::ClassificationReport),
    Norms(NormsReport),
    Squarefn(SquarefnReport),
    Cotlar(CotlarRun),
    Groupcheck(GroupcheckReport),
    Transfer(TransferReport),
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

/// Resolve overrides, run the command on a pool of `jobs` workers and
/// format the report. Nothing is written to disk here.
pub fn run(opts: &RunOptions) -> Result<RunOutput, CliError> {
    let cfg = &opts.config;
    let command = match (opts.command, cfg.command) {
        (Some(a), Some(b)) if a != b => {
            return Err(invalid(format!("command '{a}' does not match config command '{b}'")))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(invalid("no command given")),
    };
    let seed = opts.seed.unwrap_or(cfg.seed);
    let format = opts.format.or(cfg.format).unwrap_or_default();
    let out = opts.out.clone().or_else(|| cfg.out.as_ref().map(PathBuf::from));
    match (command, format) {
        (_, Format::Json) | (Command::Norms, _) | (Command::Transfer, Format::Csv) => {}
        (c, f) => return Err(invalid(format!("{c} has no {f:?} output").to_lowercase())),
    }
    if opts.jobs == Some(0) {
        return Err(invalid("--jobs must be at least 1"));
    }

    let start = Instant::now();
    let body = with_pool(opts.jobs, || dispatch(command, cfg, seed))??;
    let wall_ms = start.elapsed().as_millis() as u64;

    let outcome = outcome_of(&body);
    let text = match (format, &body) {
        (Format::Csv, Body::Norms(r)) => records_to_csv(&r.records),
        (Format::Csv, Body::Transfer(r)) => r.to_csv(),
        (Format::Svg, Body::Norms(r)) => norm_growth_svg(&r.records),
        _ => envelope_json(command, seed, outcome, wall_ms, &body)?,
    };
    let exit_code = match opts.expect {
        Some(Expect::Pass) if outcome == Outcome::Fail => 2,
        Some(Expect::Fail) if outcome == Outcome::Pass => 2,
        _ => 0,
    };
    Ok(RunOutput {
        command,
        outcome,
        format,
        text,
        out,
        exit_code,
    })
}

fn envelope_json(command: Command, seed: u64, outcome: Outcome, wall_ms: u64, body: &Body) -> Result<String, CliError> {
    fn render<R: Serialize>(env: Envelope<&R>) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(&env).map_err(|e| CliError::Schema(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
    macro_rules! env {
        ($r:expr) => {
            render(Envelope {
                schema: SCHEMA.to_string(),
                command,
                seed,
                outcome,
                wall_ms,
                report: $r,
            })
        };
    }
    match body {
        Body::Classify(r) => env!(r),
        Body::Norms(r) => env!(r),
        Body::Squarefn(r) => env!(r),
        Body::Cotlar(r) => env!(r),
        Body::Groupcheck(r) => env!(r),
        Body::Transfer(r) => env!(r),
    }
}

#[cfg(feature = "parallel")]
fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn with_pool<T: Send>(_jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    Ok(f())
}

fn outcome_of(body: &Body) -> Outcome {
    let pass = match body {
        Body::Classify(r) => r.verdict == Verdict::TriangularModel,
        Body::Norms(r) => r.summary.is_none_or(|s| s.trend == Trend::Plateau),
        Body::Squarefn(r) => r.result.pass,
        Body::Cotlar(r) => r.result.failures == 0,
        Body::Groupcheck(GroupcheckReport::Subalgebra(r)) => r.verdict == SubalgebraVerdict::Pass,
        Body::Groupcheck(GroupcheckReport::Boundary(r)) => r.verdict == SubalgebraVerdict::Pass,
        Body::Transfer(r) => r.violations == 0,
    };
    if pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn dispatch(command: Command, cfg: &ExperimentConfig, seed: u64) -> Result<Body, CliError> {
    match command {
        Command::Classify => run_classify(cfg, seed),
        Command::Norms => run_norms(cfg, seed),
        Command::Squarefn => run_squarefn(cfg, seed),
        Command::Cotlar => run_cotlar(cfg, seed),
        Command::Groupcheck => run_groupcheck(cfg, seed),
        Command::Transfer => run_transfer(cfg, seed),
    }
}

fn run_classify(cfg: &ExperimentConfig, seed: u64) -> Result<Body, CliError> {
    let spec = cfg.symbol_spec()?.into_spec().map_err(|e| invalid(e.to_string()))?;
    let (x0, y0) = match &cfg.point {
        Some(p) => (p.x.clone(), p.y.clone()),
        None => {
            let mid = |b: &[(f64, f64)]| b.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect::<Vec<_>>();
            (mid(&spec.domain().x), mid(&spec.domain().y))
        }
    };
    let mut opts = ClassifyOptions::with_seed(seed);
    if let Some(s) = cfg.samples {
        opts.samples = s;
    }
    opts.radius = cfg.radius;
    Ok(Body::Classify(classify(&spec, &x0, &y0, &opts)?))
}

fn run_norms(cfg: &ExperimentConfig, seed: u64) -> Result<Body, CliError> {
    let spec = cfg.symbol_spec()?.into_spec().map_err(|e| invalid(e.to_string()))?;
    let p = cfg.exponent()?;
    let sizes = cfg.sizes.clone().ok_or_else(|| invalid("missing 'sizes'"))?;
    let mut sampler = SamplerConfig::default();
    if let Some(t) = cfg.trials {
        sampler.trials = t;
    }
    if let Some(s) = cfg.ascent_steps {
        sampler.ascent_steps = s;
    }
    let records = norm_growth_experiment(&spec, p, &sizes, &sampler, seed)?;
    let monotone = records.windows(2).all(|w| w[1].lower_bound >= w[0].lower_bound);
    let summary = growth_summary(&records, cfg.threshold.unwrap_or(DEFAULT_SLOPE_THRESHOLD));
    Ok(Body::Norms(NormsReport {
        symbol_id: spec.id().to_string(),
        p,
        monotone,
        records,
        summary,
    }))
}

fn run_squarefn(cfg: &ExperimentConfig, seed: u64) -> Result<Body, CliError> {
    let shape = cfg.shape.clone().ok_or_else(|| invalid("missing 'shape'"))?;
    let p = cfg.exponent()?;
    let dim = shape.len();
    let mut fs = Vec::new();
    let mut us = Vec::new();
    match &cfg.terms {
        Some(terms) => {
            for t in terms {
                let modes: Vec<(Vec<i64>, C64)> = t.modes.iter().map(|(k, c)| (k.clone(), C64::new(c[0], c[1]))).collect();
                fs.push(GridFunction::trig_poly(shape.clone(), &modes)?);
                us.push(t.direction.clone());
            }
        }
        None => {
            let count = cfg.count.unwrap_or(4);
            let degree = cfg.degree.unwrap_or(3) as i64;
            for j in 0..count {
                let mut r = rng::rng_for(seed, j as u64);
                let modes: Vec<(Vec<i64>, C64)> = (0..6)
                    .map(|_| {
                        let k = (0..dim).map(|_| r.random_range(-degree..=degree)).collect();
                        (k, C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
                    })
                    .collect();
                fs.push(GridFunction::trig_poly(shape.clone(), &modes)?);
                us.push((0..dim).map(|_| r.random_range(-1.0..1.0)).collect());
            }
        }
    }
    let constant = cfg.constant.unwrap_or(1.0);
    let result = square_function_test(&fs, &us, p, constant)?;
    Ok(Body::Squarefn(SquarefnReport {
        shape,
        p,
        terms: fs.len(),
        result,
    }))
}

fn group_of(cfg: &ExperimentConfig) -> Result<GroupId, CliError> {
    let name = cfg.group.as_deref().ok_or_else(|| invalid("missing 'group'"))?;
    GroupId::parse(name).map_err(|e| invalid(e.to_string()))
}

fn run_cotlar(cfg: &ExperimentConfig, seed: u64) -> Result<Body, CliError> {
    let id = group_of(cfg)?;
    let samples = cfg.samples.unwrap_or(100_000);
    let result = cotlar_pointwise_check(id, samples, seed).map_err(|e| invalid(e.to_string()))?;
    Ok(Body::Cotlar(CotlarRun { group: id.name(), result }))
}

fn run_groupcheck(cfg: &ExperimentConfig, seed: u64) -> Result<Body, CliError> {
    if let Some(name) = &cfg.algebra {
        let subspace = cfg.subspace.clone().ok_or_else(|| invalid("missing 'subspace'"))?;
        let basis = LieAlgebraBasis::builtin(name)
            .map_err(|e| invalid(e.to_string()))?
            .with_candidate(subspace.clone());
        basis.validate().map_err(|e| invalid(e.to_string()))?;
        let tolerance = cfg.tolerance.unwrap_or(SUBALGEBRA_TOL);
        let residual = subalgebra_residual(&basis)?;
        return Ok(Body::Groupcheck(GroupcheckReport::Subalgebra(SubalgebraRun {
            algebra: basis.name.clone(),
            subspace,
            residual,
            tolerance,
            verdict: if residual <= tolerance {
                SubalgebraVerdict::Pass
            } else {
                SubalgebraVerdict::Fail
            },
        })));
    }
    let id = group_of(cfg)?;
    let field = match &cfg.symbol {
        Some(SymbolPayload::Field(f)) => GroupField::parse(f).map_err(|e| invalid(e.to_string()))?,
        _ => return Err(invalid("groupcheck needs 'symbol' as a field name or expression, or 'algebra'")),
    };
    let g0 = cfg.g0.unwrap_or_else(|| GroupElement::identity(id));
    if g0.group_id() != id {
        return Err(invalid(format!("g0 lies in {}, not {}", g0.group_id().name(), id.name())));
    }
    let opts = VerdictOptions {
        tol: cfg.tolerance.unwrap_or(BOUNDARY_VERDICT_TOL),
        ad_points: cfg.samples.unwrap_or(32),
        radius: cfg.radius.unwrap_or(0.1),
        seed,
    };
    let v = boundary_subalgebra_verdict(&field, &g0, &opts)?;
    Ok(Body::Groupcheck(GroupcheckReport::Boundary(v)))
}

/// Random 0/1 symbol on `Z_n`.
pub fn random_cyclic_symbol(n: usize, seed: u64) -> Vec<C64> {
    let mut r = rng::rng_for(seed, n as u64);
    (0..n).map(|_| C64::new(f64::from(u8::from(r.random_bool(0.5))), 0.0)).collect()
}

fn run_transfer(cfg: &ExperimentConfig, seed: u64) -> Result<Body, CliError> {
    let ps: Vec<f64> = match (&cfg.ps, cfg.p) {
        (Some(ps), _) => ps.iter().map(|e| e.0).collect(),
        (None, Some(p)) => vec![p.0],
        (None, None) => vec![4.0 / 3.0, 4.0],
    };
    let trials = cfg.trials.unwrap_or(4);
    let mut cases: Vec<(usize, Vec<C64>)> = Vec::new();
    match &cfg.multiplier {
        Some(m) => cases.push((0, m.iter().map(|c| C64::new(c[0], c[1])).collect())),
        None => {
            let sizes = cfg.sizes.clone().unwrap_or_else(|| vec![8, 16, 32]);
            let count = cfg.count.unwrap_or(30);
            for &n in &sizes {
                for i in 0..count {
                    cases.push((i, random_cyclic_symbol(n, rng::derive(seed, i as u64))));
                }
            }
        }
    }
    let mut rows = Vec::new();
    for &p in &ps {
        for (index, m) in &cases {
            let r = fourier_multiplier_norm_finite_cyclic(m, p, trials, rng::derive(seed, *index as u64))?;
            rows.push(TransferRow {
                n: r.n,
                p,
                index: *index,
                fourier_lb: r.fourier_lb,
                schur_lb: r.schur_lb,
                holds: r.fourier_lb <= r.schur_lb * (1.0 + 1e-9),
            });
        }
    }
    let violations = rows.iter().filter(|r| !r.holds).count();
    Ok(Body::Transfer(TransferReport { rows, violations }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn command_resolution() {
        let mut opts = RunOptions {
            config: cfg(r#"{"command": "cotlar", "group": "real", "samples": 50}"#),
            ..RunOptions::default()
        };
        assert_eq!(run(&opts).unwrap().command, Command::Cotlar);
        opts.command = Some(Command::Norms);
        assert_eq!(run(&opts).unwrap_err().exit_code(), 64);
        opts.command = None;
        opts.format = Some(Format::Svg);
        assert_eq!(run(&opts).unwrap_err().exit_code(), 64);
    }

    #[test]
    fn expect_flag_sets_exit_code() {
        let mut opts = RunOptions {
            command: Some(Command::Groupcheck),
            config: cfg(r#"{"algebra": "so3", "subspace": [[1, 0, 0], [0, 1, 0]]}"#),
            ..RunOptions::default()
        };
        let out = run(&opts).unwrap();
        assert_eq!((out.outcome, out.exit_code), (Outcome::Fail, 0));
        opts.expect = Some(Expect::Pass);
        assert_eq!(run(&opts).unwrap().exit_code, 2);
        opts.expect = Some(Expect::Fail);
        assert_eq!(run(&opts).unwrap().exit_code, 0);
    }

    #[test]
    fn bad_group_is_a_config_error() {
        let opts = RunOptions {
            command: Some(Command::Cotlar),
            config: cfg(r#"{"group": "so3"}"#),
            ..RunOptions::default()
        };
        assert_eq!(run(&opts).unwrap_err().exit_code(), 64);
    }
}
