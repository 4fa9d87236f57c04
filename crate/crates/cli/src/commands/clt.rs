use qareg_core::config::{parse_toml, to_canonical_toml, ExperimentFile};
use qareg_core::montecarlo::run_clt_experiment;
use qareg_core::{CoreError, Result};

use crate::commands::cell;
use crate::manifest::{read_config, RunContext};
use crate::RunArgs;

pub fn run(args: &RunArgs) -> Result<()> {
    let text = read_config(&args.config)?;
    let mut file: ExperimentFile = parse_toml(&text)?;
    if let Some(seed) = args.seed {
        file.experiment.seed = seed;
    }
    let exp = file.build()?;
    let mut ctx = RunContext::new("clt", &args.config, &args.out)?;

    let result = run_clt_experiment(&exp)?;

    let mut stats = csv::Writer::from_writer(Vec::new());
    stats.write_record([
        "replicate",
        "n",
        "h",
        "r_hat",
        "statistic_oracle",
        "statistic_plugin",
    ])?;
    for run in &result.runs {
        for row in &run.rows {
            stats.write_record([
                row.replicate.to_string(),
                row.n.to_string(),
                row.h.to_string(),
                cell(row.r_hat),
                cell(row.statistic_oracle),
                cell(row.statistic_plugin),
            ])?;
        }
    }
    let buf = stats
        .into_inner()
        .map_err(|e| CoreError::InvalidArgument(format!("CSV buffering: {e}")))?;
    ctx.write_output("stats.csv", &buf)?;

    let mut qq = csv::Writer::from_writer(Vec::new());
    qq.write_record(["n", "theoretical", "empirical"])?;
    for run in &result.runs {
        for (t, e) in &run.report.qq_pairs {
            qq.write_record([run.n.to_string(), t.to_string(), e.to_string()])?;
        }
    }
    let buf = qq
        .into_inner()
        .map_err(|e| CoreError::InvalidArgument(format!("CSV buffering: {e}")))?;
    ctx.write_output("qq.csv", &buf)?;

    let report = serde_json::to_vec_pretty(&result)
        .map_err(|e| CoreError::InvalidArgument(format!("report serialization: {e}")))?;
    ctx.write_output("report.json", &report)?;

    for run in &result.runs {
        println!(
            "clt: n = {}, h = {} -> ks = {:.4} (threshold {:.4}), mean = {:+.3}, var = {:.3}{}",
            run.n,
            run.h,
            run.report.ks_distance,
            run.report.ks_threshold_alpha01,
            run.report.mean,
            run.report.variance,
            if run.degenerate_experiment { " [degenerate]" } else { "" }
        );
    }
    ctx.finish(to_canonical_toml(&file)?, Some(file.experiment.seed))
}
