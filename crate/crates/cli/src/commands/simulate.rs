use qareg_core::config::{parse_toml, to_canonical_toml, SimulateFile};
use qareg_core::simulate;
use qareg_core::Result;

use crate::manifest::{read_config, RunContext};
use crate::RunArgs;

pub fn run(args: &RunArgs) -> Result<()> {
    let text = read_config(&args.config)?;
    let mut file: SimulateFile = parse_toml(&text)?;
    if let Some(seed) = args.seed {
        file.simulate.seed = seed;
    }
    let model = file.model.build()?;
    let reg = file.regression.build()?;

    let mut ctx = RunContext::new("simulate", &args.config, &args.out)?;
    let sample = simulate::simulate(&model, &reg, file.simulate.n, file.simulate.seed)?;
    let mut buf = Vec::new();
    sample.write_csv(&mut buf)?;
    ctx.write_output("sample.csv", &buf)?;
    println!(
        "simulate: wrote sample.csv ({} rows, dim {})",
        sample.len(),
        sample.dim()
    );
    ctx.finish(to_canonical_toml(&file)?, Some(file.simulate.seed))
}
