use qareg_core::config::{parse_toml, to_canonical_toml, ExperimentFile};
use qareg_core::montecarlo::run_variance_experiment;
use qareg_core::{CoreError, Result};

use crate::manifest::{read_config, RunContext};
use crate::RunArgs;

pub fn run(args: &RunArgs) -> Result<()> {
    let text = read_config(&args.config)?;
    let mut file: ExperimentFile = parse_toml(&text)?;
    if let Some(seed) = args.seed {
        file.experiment.seed = seed;
    }
    let exp = file.build()?;
    let mut ctx = RunContext::new("variance", &args.config, &args.out)?;

    let result = run_variance_experiment(&exp)?;

    let mut runs = csv::Writer::from_writer(Vec::new());
    runs.write_record([
        "n",
        "h",
        "phi_h",
        "ratio_sigma1",
        "ci1_lo",
        "ci1_hi",
        "ratio_sigma2",
        "ci2_lo",
        "ci2_hi",
    ])?;
    for run in &result.runs {
        runs.write_record([
            run.n.to_string(),
            run.h.to_string(),
            run.phi_h.to_string(),
            run.ratio_sigma1.to_string(),
            run.ci_sigma1.0.to_string(),
            run.ci_sigma1.1.to_string(),
            run.ratio_sigma2.to_string(),
            run.ci_sigma2.0.to_string(),
            run.ci_sigma2.1.to_string(),
        ])?;
    }
    let buf = runs
        .into_inner()
        .map_err(|e| CoreError::InvalidArgument(format!("CSV buffering: {e}")))?;
    ctx.write_output("ratios.csv", &buf)?;

    let report = serde_json::to_vec_pretty(&result)
        .map_err(|e| CoreError::InvalidArgument(format!("report serialization: {e}")))?;
    ctx.write_output("report.json", &report)?;

    for run in &result.runs {
        println!(
            "variance: n = {}, h = {} -> sigma1 ratio = {:.3} [{:.3}, {:.3}], sigma2 ratio = {:.3} [{:.3}, {:.3}]",
            run.n,
            run.h,
            run.ratio_sigma1,
            run.ci_sigma1.0,
            run.ci_sigma1.1,
            run.ratio_sigma2,
            run.ci_sigma2.0,
            run.ci_sigma2.1,
        );
    }
    ctx.finish(to_canonical_toml(&file)?, Some(file.experiment.seed))
}
