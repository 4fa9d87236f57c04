use std::fs::File;
use std::path::PathBuf;

use qareg_core::config::{parse_toml, to_canonical_toml, EstimateFile};
use qareg_core::estimator::{
    numerator_denominator, regression_estimate, small_ball_empirical, EstimatorConfig,
};
use qareg_core::hilbert::{FunctionalSample, HilbertVector};
use qareg_core::{CoreError, Result};

use crate::commands::cell;
use crate::manifest::{read_config, RunContext};
use crate::RunArgs;

pub fn run(args: &RunArgs) -> Result<()> {
    let text = read_config(&args.config)?;
    let file: EstimateFile = parse_toml(&text)?;
    let mut ctx = RunContext::new("estimate", &args.config, &args.out)?;

    let sample_path = PathBuf::from(&file.estimate.sample);
    let sample_path = if sample_path.is_absolute() {
        sample_path
    } else {
        ctx.config_dir().join(sample_path)
    };
    let sample = FunctionalSample::read_csv(File::open(&sample_path).map_err(|e| {
        CoreError::InvalidArgument(format!("cannot open sample {}: {e}", sample_path.display()))
    })?)?;

    let cfg = EstimatorConfig::new(
        file.estimate.h,
        file.estimator.kernel,
        file.estimator.transform.build(),
    )?
    .with_b0(file.estimator.b0)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x_id", "h", "n_neighbors", "r_hat", "g_n", "f_n", "mode", "status"])?;
    let mut ok = 0usize;
    let mut missed = 0usize;
    for (x_id, coords) in file.estimate.queries.iter().enumerate() {
        let x = HilbertVector::new(coords.clone())?;
        let n_neighbors = sample
            .iter()
            .filter(|(xi, _)| xi.distance(&x).map(|d| d <= cfg.h).unwrap_or(false))
            .count();
        match regression_estimate(&sample, &x, &cfg) {
            Ok(r_hat) => {
                // Self-normalized pair: norm = F_hat(h, x) * mean kernel value.
                let f_hat = small_ball_empirical(&sample, &x, &[cfg.h])?.f_hat[0];
                let norm = f_hat * cfg.kernel.mean_integral();
                let (g_n, f_n) = numerator_denominator(&sample, &x, &cfg, norm)?;
                w.write_record([
                    x_id.to_string(),
                    cfg.h.to_string(),
                    n_neighbors.to_string(),
                    cell(Some(r_hat)),
                    cell(Some(g_n)),
                    cell(Some(f_n)),
                    "empirical".into(),
                    "ok".into(),
                ])?;
                ok += 1;
            }
            Err(CoreError::NoNeighbors { .. }) => {
                w.write_record([
                    x_id.to_string(),
                    cfg.h.to_string(),
                    "0".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "empirical".into(),
                    "no_neighbors".into(),
                ])?;
                missed += 1;
            }
            Err(e) => return Err(e),
        }
    }
    let buf = w
        .into_inner()
        .map_err(|e| CoreError::InvalidArgument(format!("CSV buffering: {e}")))?;
    ctx.write_output("estimates.csv", &buf)?;
    println!("estimate: {ok} ok, {missed} without neighbors -> estimates.csv");
    ctx.finish(to_canonical_toml(&file)?, None)
}
