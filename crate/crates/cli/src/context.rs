use std::fs;
use std::path::Path;

use hpcready_pipeline::{fetch_workflow_files, parse_container_config, render_build_context};

use crate::exit::{CliError, CliResult};

/// Writes the build context for `config` into `out` and prints the
/// canonical digest.
pub fn run(config: &Path, workflows: &Path, out: &Path) -> CliResult {
    let text = fs::read_to_string(config).map_err(|e| CliError::invalid(format!("{}: {e}", config.display())))?;
    let cfg = parse_container_config(&text).map_err(|e| CliError::invalid(format!("{}: {e}", config.display())))?;
    let (manifest, recipes) =
        fetch_workflow_files(&cfg.workflow, &cfg.step_id, workflows).map_err(CliError::invalid)?;
    let ctx = render_build_context(&cfg, &manifest, &recipes, &cfg.machine).map_err(CliError::invalid)?;
    ctx.write_to(out).map_err(|e| CliError::write(format!("{}: {e}", out.display())))?;
    println!("{}", ctx.canonical.digest.to_hex());
    Ok(())
}
