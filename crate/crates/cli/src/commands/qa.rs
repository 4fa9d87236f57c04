use qareg_core::config::{parse_toml, to_canonical_toml, QaFile};
use qareg_core::dependence::qa_inequality_check;
use qareg_core::{CoreError, Result};

use crate::manifest::{read_config, RunContext};
use crate::RunArgs;

pub fn run(args: &RunArgs) -> Result<()> {
    let text = read_config(&args.config)?;
    let mut file: QaFile = parse_toml(&text)?;
    if let Some(seed) = args.seed {
        file.qa.seed = seed;
    }
    let model = file.model.build()?;
    let reg = file.regression.build()?;
    let mut ctx = RunContext::new("qa-check", &args.config, &args.out)?;

    let report = qa_inequality_check(&model, &reg, &file.qa)?;
    let json = serde_json::to_vec_pretty(&report)
        .map_err(|e| CoreError::InvalidArgument(format!("report serialization: {e}")))?;
    ctx.write_output("report.json", &json)?;

    println!(
        "qa-check: {} probes, {} violations, worst margin {:.6}",
        report.probes, report.violations, report.worst_margin
    );
    ctx.finish(to_canonical_toml(&file)?, Some(file.qa.seed))
}
