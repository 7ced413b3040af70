use std::io::Write;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use rmq_core::distributions::{NoncentralChiSquared1, ScalarDistribution, StdNormal};
use rmq_core::io::{self, PriceRow};
use rmq_core::oracles::{
    black_scholes, cn_bermudan, empirical_cdf, mc_prices, Claim, FdConfig, McConfig, OptionKind,
    PathModel, ZeroBoundary,
};
use rmq_core::pricing::{
    barrier_up_out_price, bermudan_price, european_price, BarrierSpec, VanillaPayoff,
};
use rmq_core::rmq::{rmq_run, BoundaryMode, QuantizationSequence};
use rmq_core::schemes::Scheme;
use rmq_core::sde_models::gbm_exact_marginal;
use rmq_core::studies::{marginal_error_profile, weak_order_study, ErrorProfile, WeakOrderSetup};
use rmq_core::vq1d::{initial_guess, newton_quantize_report, GuessFamily};
use serde::Serialize;

use crate::config::{
    open_output, parse_range, parse_steps_list, Format, Model, ModelSpec, Settings,
};
use crate::UsageError;

/// Gradient sup-norm below which `vq` reports convergence.
const VQ_CONVERGED: f64 = 1e-8;
const PROFILE_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistKind {
    Normal,
    Ncx2,
}

#[derive(Debug, Clone, Args)]
pub struct VqArgs {
    #[arg(long, value_enum)]
    pub dist: DistKind,
    /// Noncentrality of the ncx2 law.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Number of codewords (falls back to --N, then 50).
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// Newton iterations (falls back to --iters-vq).
    #[arg(long)]
    pub iters: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PayoffKind {
    Put,
    Call,
}

#[derive(Debug, Clone, Args)]
pub struct ContractArgs {
    #[arg(long, value_enum, default_value = "put")]
    pub kind: PayoffKind,
    /// Monte Carlo paths for references that need them.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Euler substeps per grid step for CEV Monte Carlo references.
    #[arg(long = "mc-substeps", default_value_t = 20)]
    pub mc_substeps: usize,
}

#[derive(Debug, Clone, Subcommand)]
pub enum PriceCommand {
    European {
        /// Strikes as multiples of s0, `a:b:n`.
        #[arg(long, default_value = "0.7:1.3:13")]
        strikes: String,
        #[command(flatten)]
        contract: ContractArgs,
    },
    /// Exercisable at every grid date.
    Bermudan {
        #[arg(long, default_value = "1:1:1")]
        strikes: String,
        #[command(flatten)]
        contract: ContractArgs,
    },
    /// Up-and-out, monitored at every grid date.
    Barrier {
        /// Barrier levels as multiples of the strike, `a:b:n`.
        #[arg(long, default_value = "1.05:1.5:10")]
        levels: String,
        /// Strike as a multiple of s0.
        #[arg(long, default_value_t = 1.0)]
        strike: f64,
        #[command(flatten)]
        contract: ContractArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    /// Comma-separated step counts.
    #[arg(long, default_value = "2,4,8,16,32,64")]
    pub ks: String,
}

#[derive(Debug, Clone, Args)]
pub struct DistErrorArgs {
    /// Monte Carlo paths for the CEV reference.
    #[arg(long, default_value_t = 200_000)]
    pub paths: usize,
    /// Euler substeps per grid step for the CEV reference.
    #[arg(long = "mc-substeps", default_value_t = 20)]
    pub mc_substeps: usize,
}

fn schemes(s: &Settings) -> Vec<Scheme> {
    match s.scheme {
        Some(x) => vec![x],
        None => Scheme::ALL.to_vec(),
    }
}

fn write_output(
    s: &Settings,
    csv: impl FnOnce(&mut dyn Write) -> rmq_core::Result<()>,
    json: impl FnOnce(&mut dyn Write) -> rmq_core::Result<()>,
) -> Result<()> {
    let mut w = open_output(&s.out)?;
    match s.format {
        Format::Csv => csv(&mut w)?,
        Format::Json => {
            json(&mut w)?;
            writeln!(w)?;
        }
    }
    w.flush().context("cannot flush output")?;
    Ok(())
}

pub fn vq(args: &VqArgs, s: &Settings) -> Result<()> {
    let n = args.n.or(s.n).unwrap_or(50);
    let iters = args.iters.unwrap_or(s.iters_vq);
    if n == 0 || iters == 0 {
        return Err(UsageError("--n and --iters must be positive".into()).into());
    }
    let (dist, family): (Box<dyn ScalarDistribution>, _) = match args.dist {
        DistKind::Normal => (Box::new(StdNormal), GuessFamily::Normal),
        DistKind::Ncx2 => {
            let d =
                NoncentralChiSquared1::new(args.lambda).map_err(|e| UsageError(e.to_string()))?;
            (
                Box::new(d),
                GuessFamily::Ncx2 {
                    lambda: args.lambda,
                },
            )
        }
    };
    let guess = initial_guess(family, n)?;
    let (q, report) = newton_quantize_report(dist.as_ref(), &guess, iters)?;
    write_output(
        s,
        |w| io::write_quantizer_csv(&q, w),
        |w| io::write_json(io::QUANTIZER_SCHEMA, &q, w),
    )?;
    if report.gradient_norm.is_nan() || report.gradient_norm > VQ_CONVERGED {
        bail!(
            "quantizer did not converge: gradient sup-norm {:e} after {} iterations (raise --iters)",
            report.gradient_norm,
            report.iterations
        );
    }
    Ok(())
}

fn run_sequence(
    model: &Model,
    scheme: Scheme,
    s: &Settings,
    n: usize,
) -> Result<QuantizationSequence> {
    let schedule = s.schedule(n)?;
    rmq_run(model.as_sde(), scheme, s.model.s0(), &schedule, s.boundary)
        .with_context(|| format!("{scheme} quantization failed"))
}

pub fn rmq(s: &Settings) -> Result<()> {
    let model = s.model.build()?;
    let scheme = s.scheme.unwrap_or(Scheme::Weak2);
    let seq = run_sequence(&model, scheme, s, s.n.unwrap_or(200))?;
    write_output(
        s,
        |w| io::write_grid_csv(&seq, w),
        |w| io::write_sequence_json(&seq, w),
    )?;
    eprintln!(
        "{scheme}: {} steps, final mean {:.10}, absorbed mass {:.3e}",
        seq.len(),
        seq.final_quantizer().mean(),
        seq.steps.last().map_or(0.0, |r| r.absorbed_mass)
    );
    Ok(())
}

fn payoff(kind: PayoffKind, strike: f64) -> Result<VanillaPayoff> {
    let p = match kind {
        PayoffKind::Put => VanillaPayoff::put(strike),
        PayoffKind::Call => VanillaPayoff::call(strike),
    };
    p.map_err(|e| UsageError(e.to_string()).into())
}

/// Euler paths for CEV follow the grid's zero boundary; free grids are
/// compared with truncated paths since zero is absorbing for the model.
fn path_model<'a>(spec: &ModelSpec, model: &'a Model, boundary: BoundaryMode) -> PathModel<'a> {
    match spec {
        ModelSpec::Gbm(p) => PathModel::ExactGbm(*p),
        ModelSpec::Cev(p) => PathModel::Euler {
            model: model.as_sde(),
            s0: p.s0,
            boundary: match boundary {
                BoundaryMode::Reflecting => ZeroBoundary::Reflecting,
                _ => ZeroBoundary::Absorbing,
            },
        },
    }
}

fn mc_config(
    s: &Settings,
    spec: &ModelSpec,
    paths: Option<usize>,
    substeps: usize,
) -> Result<McConfig> {
    let substeps = match spec {
        ModelSpec::Gbm(_) => 1,
        ModelSpec::Cev(_) => substeps,
    };
    if substeps == 0 {
        return Err(UsageError("--mc-substeps must be positive".into()).into());
    }
    let default_paths = match spec {
        ModelSpec::Gbm(_) => 1_000_000,
        ModelSpec::Cev(_) => 200_000,
    };
    Ok(McConfig {
        paths: paths.unwrap_or(default_paths),
        steps: s.steps * substeps,
        horizon: s.horizon,
        seed: s.require_seed()?,
        monitoring_stride: substeps,
    })
}

pub fn price(cmd: &PriceCommand, s: &Settings) -> Result<()> {
    let spec = s.model;
    let (s0, r) = (spec.s0(), spec.r());
    let model = spec.build()?;
    let mut rows = Vec::new();
    match cmd {
        PriceCommand::European { strikes, contract } => {
            let strikes: Vec<f64> = parse_range(strikes)?.iter().map(|m| m * s0).collect();
            let payoffs = strikes
                .iter()
                .map(|&k| payoff(contract.kind, k))
                .collect::<Result<Vec<_>>>()?;
            let references: Vec<(f64, Option<f64>)> = match spec {
                ModelSpec::Gbm(p) => {
                    let kind = match contract.kind {
                        PayoffKind::Put => OptionKind::Put,
                        PayoffKind::Call => OptionKind::Call,
                    };
                    strikes
                        .iter()
                        .map(|&k| Ok((black_scholes(kind, s0, k, r, p.sigma, s.horizon)?, None)))
                        .collect::<Result<_>>()?
                }
                ModelSpec::Cev(_) => {
                    let cfg = mc_config(s, &spec, contract.paths, contract.mc_substeps)?;
                    let claims: Vec<Claim> = payoffs.iter().cloned().map(Claim::European).collect();
                    mc_prices(path_model(&spec, &model, s.boundary), &claims, &cfg, r)?
                        .into_iter()
                        .map(|e| (e.price, Some(e.std_error)))
                        .collect()
                }
            };
            for scheme in schemes(s) {
                let seq = run_sequence(&model, scheme, s, s.n.unwrap_or(200))?;
                for ((&k, h), &(reference, se)) in strikes.iter().zip(&payoffs).zip(&references) {
                    let mut row = PriceRow::new(
                        scheme,
                        "european",
                        k,
                        european_price(&seq, h, r),
                        Some(reference),
                    );
                    row.std_error = se;
                    rows.push(row);
                }
            }
        }
        PriceCommand::Bermudan { strikes, contract } => {
            let strikes: Vec<f64> = parse_range(strikes)?.iter().map(|m| m * s0).collect();
            let payoffs = strikes
                .iter()
                .map(|&k| payoff(contract.kind, k))
                .collect::<Result<Vec<_>>>()?;
            let dates: Vec<f64> = (1..=s.steps)
                .map(|k| s.horizon * k as f64 / s.steps as f64)
                .collect();
            let references = payoffs
                .iter()
                .map(|h| {
                    cn_bermudan(
                        model.as_sde(),
                        h,
                        s0,
                        s.horizon,
                        &dates,
                        r,
                        &FdConfig::default(),
                    )
                })
                .collect::<rmq_core::Result<Vec<_>>>()?;
            for scheme in schemes(s) {
                let seq = run_sequence(&model, scheme, s, s.n.unwrap_or(200))?;
                for ((&k, h), &reference) in strikes.iter().zip(&payoffs).zip(&references) {
                    rows.push(PriceRow::new(
                        scheme,
                        "bermudan",
                        k,
                        bermudan_price(&seq, h, r)?,
                        Some(reference),
                    ));
                }
            }
        }
        PriceCommand::Barrier {
            levels,
            strike,
            contract,
        } => {
            let strike = strike * s0;
            let h = payoff(contract.kind, strike)?;
            let levels: Vec<f64> = parse_range(levels)?.iter().map(|m| m * strike).collect();
            let barriers = levels
                .iter()
                .map(|&l| BarrierSpec::up_and_out(l).map_err(|e| UsageError(e.to_string()).into()))
                .collect::<Result<Vec<_>>>()?;
            let cfg = mc_config(s, &spec, contract.paths, contract.mc_substeps)?;
            let claims: Vec<Claim> = levels
                .iter()
                .map(|&level| Claim::UpAndOut {
                    payoff: h.clone(),
                    level,
                })
                .collect();
            let references = mc_prices(path_model(&spec, &model, s.boundary), &claims, &cfg, r)?;
            for scheme in schemes(s) {
                let seq = run_sequence(&model, scheme, s, s.n.unwrap_or(200))?;
                for ((&l, b), e) in levels.iter().zip(&barriers).zip(&references) {
                    let mut row = PriceRow::new(
                        scheme,
                        "barrier",
                        l,
                        barrier_up_out_price(&seq, &h, b, r)?,
                        Some(e.price),
                    );
                    row.std_error = Some(e.std_error);
                    rows.push(row);
                }
            }
        }
    }
    write_output(
        s,
        |w| io::write_prices_csv(&rows, w),
        |w| io::write_json(io::PRICES_SCHEMA, &rows, w),
    )
}

pub fn convergence(args: &ConvergenceArgs, s: &Settings) -> Result<()> {
    let ks = parse_steps_list(&args.ks)?;
    if ks.len() < 3 {
        return Err(UsageError(format!(
            "a slope needs at least 3 step counts, got {}",
            ks.len()
        ))
        .into());
    }
    let spec = s.model;
    let model = spec.build()?;
    let setup = WeakOrderSetup {
        s0: spec.s0(),
        horizon: s.horizon,
        step_counts: ks,
        n: s.n.unwrap_or(1000),
        n_max_vq: s.iters_vq,
        n_max_rmq: s.iters_rmq,
        boundary: s.boundary,
        exact_mean: spec.s0() * (spec.r() * s.horizon).exp(),
    };
    let mut reports = Vec::new();
    for scheme in schemes(s) {
        let rep = weak_order_study(model.as_sde(), scheme, &setup)
            .with_context(|| format!("{scheme} convergence run failed"))?;
        eprintln!("{scheme}: beta = {:.4}", rep.beta);
        reports.push(rep);
    }
    write_output(
        s,
        |w| io::write_convergence_csv(&reports, w),
        |w| io::write_json(io::CONVERGENCE_SCHEMA, &reports, w),
    )
}

#[derive(Serialize)]
struct SchemeProfile<'a> {
    scheme: Scheme,
    #[serde(flatten)]
    profile: &'a ErrorProfile,
}

pub fn dist_error(args: &DistErrorArgs, s: &Settings) -> Result<()> {
    let spec = s.model;
    let model = spec.build()?;
    let reference: Box<dyn Fn(f64) -> f64> = match spec {
        ModelSpec::Gbm(p) => {
            let exact = gbm_exact_marginal(p, s.horizon)?;
            Box::new(move |x| exact.cdf(x))
        }
        ModelSpec::Cev(_) => {
            let cfg = mc_config(s, &spec, Some(args.paths), args.mc_substeps)?;
            let empirical = empirical_cdf(path_model(&spec, &model, s.boundary), &cfg)?;
            Box::new(move |x| empirical.cdf(x))
        }
    };
    let mut profiles = Vec::new();
    for scheme in schemes(s) {
        let seq = run_sequence(&model, scheme, s, s.n.unwrap_or(200))?;
        let p = marginal_error_profile(&seq, &reference, PROFILE_POINTS)?;
        eprintln!("{scheme}: sup-norm error {:.4e}", p.sup_norm);
        profiles.push((scheme, p));
    }
    let doc: Vec<SchemeProfile> = profiles
        .iter()
        .map(|(scheme, profile)| SchemeProfile {
            scheme: *scheme,
            profile,
        })
        .collect();
    write_output(
        s,
        |w| io::write_error_profiles_csv(&profiles, w),
        |w| io::write_json(io::ERROR_PROFILE_SCHEMA, &doc, w),
    )
}
