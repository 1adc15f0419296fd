use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde_json::json;

use seqadapt::harness::{run_experiment, small_ball_mc, white_noise_curves, white_noise_grid, SmallBallEstimate};
use seqadapt::posterior::TAIL_MASS_WARNING;
use seqadapt::regression::{estimate_regression, read_sample_csv, reconstruct, write_reconstruction_csv};
use seqadapt::{
    simulate_observation, CoefVector, EstimatorKind, EstimatorSpec, HyperParams, ModelSpec, PreparedEstimator,
    SievePosterior,
};

use crate::config::FileConfig;
use crate::error::{config_err, CliError, CliResult};
use crate::Format;

fn check_tail_mass(cfg: &FileConfig, hp: &HyperParams) -> CliResult<()> {
    let mass = hp.truncated_tail_mass();
    if mass > TAIL_MASS_WARNING {
        if cfg.strict_tail_mass {
            return Err(CliError::TailMass {
                mass,
                threshold: TAIL_MASS_WARNING,
            });
        }
        log::warn!("truncated prior tail mass {mass:.3e} exceeds {TAIL_MASS_WARNING:.0e}");
    }
    Ok(())
}

fn uses_proposed(kinds: &[EstimatorKind]) -> bool {
    kinds.iter().any(|k| matches!(k, EstimatorKind::Proposed))
}

fn prepare(kinds: &[EstimatorKind], hp: HyperParams, model: ModelSpec) -> CliResult<Vec<PreparedEstimator>> {
    kinds
        .iter()
        .map(|k| Ok(EstimatorSpec::new(k.clone(), hp, model)?.prepare()?))
        .collect()
}

fn true_theta(cfg: &FileConfig, model: &ModelSpec) -> CliResult<CoefVector> {
    Ok(cfg.theta_source()?.vector(cfg.single_b2()?.sqrt(), model.p)?)
}

/// The configured observation, or one simulated at the configured `θ`.
fn observation(cfg: &FileConfig, model: &ModelSpec) -> CliResult<CoefVector> {
    match &cfg.x {
        Some(x) => {
            if x.len() != model.p {
                return Err(config_err(format!("`x` has length {} but p = {}", x.len(), model.p)));
            }
            Ok(CoefVector::new(x.clone())?)
        }
        None => Ok(simulate_observation(&true_theta(cfg, model)?, model, &cfg.rng())?),
    }
}

fn join(values: impl IntoIterator<Item = String>) -> String {
    values.into_iter().collect::<Vec<_>>().join(",")
}

pub fn simulate(cfg: &FileConfig, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let model = cfg.model()?;
    let theta = true_theta(cfg, &model)?;
    let x = simulate_observation(&theta, &model, &cfg.rng())?;
    match format {
        Format::Json => write_json(out, &json!({ "seed": cfg.seed, "theta": theta, "x": x })),
        Format::Csv => {
            writeln!(out, "i,theta,x")?;
            for (i, (t, v)) in theta.iter().zip(x.iter()).enumerate() {
                writeln!(out, "{},{t},{v}", i + 1)?;
            }
            Ok(())
        }
    }
}

pub fn estimate(cfg: &FileConfig, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let model = cfg.model()?;
    let hp = cfg.hyper_params(model.p)?;
    let kinds = cfg.estimator_kinds()?;
    if uses_proposed(&kinds) {
        check_tail_mass(cfg, &hp)?;
    }
    let x = observation(cfg, &model)?;
    let estimators = prepare(&kinds, hp, model)?;
    let results: Vec<(String, CoefVector)> = estimators
        .iter()
        .map(|e| Ok((e.name(), e.estimate(&x)?)))
        .collect::<CliResult<_>>()?;
    match format {
        Format::Json => {
            let estimates: Vec<_> = results
                .iter()
                .map(|(n, c)| json!({ "estimator": n, "coefs": c }))
                .collect();
            write_json(out, &json!({ "x": x, "estimates": estimates }))
        }
        Format::Csv => {
            writeln!(out, "i,x,{}", join(results.iter().map(|r| r.0.clone())))?;
            for (i, xi) in x.iter().enumerate() {
                writeln!(
                    out,
                    "{},{xi},{}",
                    i + 1,
                    join(results.iter().map(|r| r.1[i].to_string()))
                )?;
            }
            Ok(())
        }
    }
}

pub fn posterior(cfg: &FileConfig, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let model = cfg.model()?;
    let hp = cfg.hyper_params(model.p)?;
    check_tail_mass(cfg, &hp)?;
    let x = observation(cfg, &model)?;
    let post = SievePosterior::new(&hp, &model)?;
    let summary = post.summary(&x)?;
    let draws = if cfg.draws > 0 {
        post.sample(&x, cfg.draws, &cfg.rng().substream(1))?
    } else {
        Vec::new()
    };
    match format {
        Format::Json => {
            let log_f: Vec<f64> = summary.log_f_post.clone();
            write_json(
                out,
                &json!({
                    "x": x,
                    "mean": summary.mean,
                    "log_f_post": log_f,
                    "tail_mass_bound": summary.tail_mass_bound,
                    "draws": draws,
                }),
            )
        }
        Format::Csv => {
            let header = (1..=draws.len()).map(|j| format!("draw_{j}"));
            let mut cols = vec!["i".to_string(), "x".into(), "mean".into()];
            cols.extend(header);
            writeln!(out, "{}", cols.join(","))?;
            for (i, xi) in x.iter().enumerate() {
                let mut row = vec![(i + 1).to_string(), xi.to_string(), summary.mean[i].to_string()];
                row.extend(draws.iter().map(|d| d[i].to_string()));
                writeln!(out, "{}", row.join(","))?;
            }
            Ok(())
        }
    }
}

pub fn risk_sweep(cfg: &FileConfig, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let exp = cfg.experiment()?;
    if uses_proposed(&exp.estimators) {
        check_tail_mass(cfg, &exp.hp)?;
    }
    let report = run_experiment(&exp)?;
    match format {
        Format::Json => report.write_json(&mut *out)?,
        Format::Csv => report.write_csv(&mut *out)?,
    }
    Ok(())
}

pub fn regression(cfg: &FileConfig, base_dir: Option<&Path>, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let p = cfg.p.ok_or_else(|| config_err("missing required key `p`"))?;
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| config_err("missing required key `data`"))?;
    let path = match base_dir {
        Some(dir) if data.is_relative() => dir.join(data),
        _ => data.clone(),
    };
    let file = File::open(&path).map_err(|source| CliError::File {
        path: path.display().to_string(),
        source,
    })?;
    let sample = read_sample_csv(file, p)?;
    let hp = HyperParams::new(cfg.eta, cfg.gamma, cfg.k_max, p)?;
    check_tail_mass(cfg, &hp)?;
    let est = estimate_regression(&sample, &hp)?;
    let grid = white_noise_grid();
    let values = reconstruct(&est, &grid)?;
    match format {
        Format::Json => write_json(
            out,
            &json!({
                "n": sample.n(),
                "p": p,
                "eps2": 1.0 / sample.n() as f64,
                "coefs": est.coefs,
                "t": grid,
                "fhat": values,
            }),
        ),
        Format::Csv => Ok(write_reconstruction_csv(&grid, &values, &mut *out)?),
    }
}

pub fn whitenoise(cfg: &FileConfig, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let model = cfg.model()?;
    let hp = cfg.hyper_params(model.p)?;
    let kinds = cfg.estimator_kinds()?;
    if uses_proposed(&kinds) {
        check_tail_mass(cfg, &hp)?;
    }
    let theta = true_theta(cfg, &model)?;
    let estimators = prepare(&kinds, hp, model)?;
    let curves = white_noise_curves(&theta, &estimators, &model, &white_noise_grid(), &cfg.rng())?;
    match format {
        Format::Json => {
            let estimates: Vec<_> = curves
                .estimates
                .iter()
                .map(|(n, v)| json!({ "estimator": n, "values": v }))
                .collect();
            write_json(
                out,
                &json!({
                    "t": curves.grid,
                    "true": curves.truth,
                    "observation": curves.observation,
                    "estimates": estimates,
                }),
            )
        }
        Format::Csv => Ok(curves.write_csv(&mut *out)?),
    }
}

pub fn small_ball(cfg: &FileConfig, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let alpha = cfg.alpha.ok_or_else(|| config_err("missing required key `alpha`"))?;
    let d = cfg.d.ok_or_else(|| config_err("missing required key `d`"))?;
    let v = cfg.v.clone().unwrap_or_else(|| vec![0.0; d]);
    let est = small_ball_mc(alpha, d, &v, cfg.reps as u64, &cfg.rng())?;
    match format {
        Format::Json => write_json(out, &json!({ "alpha": alpha, "d": d, "v": v, "result": est })),
        Format::Csv => {
            writeln!(out, "d,alpha,probability,std_error,hits,reps,upper_bound")?;
            match est {
                SmallBallEstimate::Estimate {
                    probability,
                    std_error,
                    hits,
                    reps,
                } => writeln!(out, "{d},{alpha},{probability},{std_error},{hits},{reps},")?,
                SmallBallEstimate::UpperBound { bound, reps } => writeln!(out, "{d},{alpha},,,0,{reps},{bound}")?,
            }
            Ok(())
        }
    }
}

fn write_json(out: &mut dyn Write, value: &serde_json::Value) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}
