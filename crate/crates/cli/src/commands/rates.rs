use qareg_core::asymptotics::check_rate_conditions;
use qareg_core::config::{parse_toml, to_canonical_toml, RatesFile};
use qareg_core::{CoreError, Result};

use crate::manifest::{read_config, RunContext};
use crate::RunArgs;

pub fn run(args: &RunArgs) -> Result<()> {
    let text = read_config(&args.config)?;
    let file: RatesFile = parse_toml(&text)?;
    let params = file.params()?;
    let mut ctx = RunContext::new("rates", &args.config, &args.out)?;

    let report = check_rate_conditions(&params, &file.rates.schedule)?;
    let json = serde_json::to_vec_pretty(&report)
        .map_err(|e| CoreError::InvalidArgument(format!("report serialization: {e}")))?;
    ctx.write_output("report.json", &json)?;

    println!(
        "rates: a = {} vs threshold (2+b)/(delta*b) = {:.4} -> {}",
        report.params.a,
        report.exponent_threshold,
        if report.exponent_pass { "pass" } else { "fail" }
    );
    println!("{:>10} {:>12} {:>12} {:>16} {:>16} {:>16}", "n", "h", "phi_h", "cov_tail", "eff_sample", "bias_term");
    for row in &report.rows {
        println!(
            "{:>10} {:>12.6} {:>12.6} {:>16.6e} {:>16.6e} {:>16.6e}",
            row.n, row.h, row.phi_h, row.covariance_tail, row.effective_sample, row.bias_term
        );
    }
    println!(
        "trends: cov_tail decreasing = {}, eff_sample increasing = {}, bias_term decreasing = {}",
        report.covariance_tail_decreasing,
        report.effective_sample_increasing,
        report.bias_term_decreasing
    );
    ctx.finish(to_canonical_toml(&file)?, None)
}
