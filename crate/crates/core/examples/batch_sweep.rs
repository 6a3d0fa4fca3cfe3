//! Configuration file to result table: expand a grid, run it on a worker
//! pool and write CSV plus manifest into a directory (default `out`).

use std::path::PathBuf;

use otto_cd::batch::{emit_results, load_config_str, prepare_output_dir, Format, RunManifest};
use otto_cd::cycle::sweep;

const CONFIG: &str = r#"
N = [1, 2, 3]
p = [0, 1, 3]
clip_p = true
tau = [1.0, 5.0]
steps_per_unit_time = 500
"#;

fn main() -> otto_cd::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "out".into()).into();
    prepare_output_dir(&out)?;
    let grid = load_config_str(CONFIG)?;
    let manifest = RunManifest::begin(&grid, Format::Csv);
    let outcomes = sweep(&grid, 2);
    let written = emit_results(&outcomes, manifest, &out)?;
    println!("{} rows -> {}", grid.len(), written.table.display());
    println!("digest {}", written.manifest_data.config_digest);
    print!("{}", std::fs::read_to_string(&written.table).map_err(|e| otto_cd::Error::Io {
        path: written.table.display().to_string(),
        source: e,
    })?);
    Ok(())
}
