use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use otto_cd::batch::{self, Format, Preset, RunManifest};
use otto_cd::cycle::sweep;

#[derive(Parser)]
#[command(version, about = "Quantum Otto refrigerator with counter-diabatic driving")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cycle of a configuration grid and write a result table.
    Run {
        /// TOML configuration; overlays the preset when both are given.
        #[arg(long, required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        steps_per_unit_time: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> otto_cd::Result<()> {
    let Command::Run {
        config,
        preset,
        out,
        format,
        workers,
        steps_per_unit_time,
    } = cli.command;
    let preset = preset.map(|p| match p {
        PresetArg::Fig2 => Preset::Fig2,
        PresetArg::Fig3 => Preset::Fig3,
        PresetArg::Fig4 => Preset::Fig4,
        PresetArg::Fig5 => Preset::Fig5,
    });
    let mut grid = match (preset, &config) {
        (Some(p), Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| otto_cd::Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            batch::merge_documents(p.source(), &text)?
        }
        (Some(p), None) => p.load()?,
        (None, Some(path)) => batch::load_config(path)?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    if let Some(s) = steps_per_unit_time {
        for c in &mut grid {
            c.steps_per_unit_time = s;
            c.validate()?;
        }
    }
    let format = match format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    batch::prepare_output_dir(&out)?;
    let workers = workers.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    let manifest = RunManifest::begin(&grid, format);
    eprintln!("running {} cycles on {workers} workers", grid.len());
    let outcomes = sweep(&grid, workers);
    let emitted = batch::emit_results(&outcomes, manifest, &out)?;
    for f in &emitted.manifest_data.failures {
        eprintln!("failed point {}: {}", f.point.index, f.error);
    }
    println!("{}", emitted.table.display());
    println!("{}", emitted.manifest.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use otto_cd::batch::{parse_csv, ResultRow, MANIFEST_FILE};
    use std::fs;

    fn otto(args: &[&str]) -> otto_cd::Result<()> {
        run(Cli::try_parse_from(std::iter::once("otto").chain(args.iter().copied())).unwrap())
    }

    #[test]
    fn fig3_rows_with_complete_ansatz_have_no_cd_work() {
        let dir = tempfile::tempdir().unwrap();
        let overlay = dir.path().join("small.toml");
        fs::write(&overlay, "N = [2, 3, 4]\n").unwrap();
        let out = dir.path().join("fig3");
        otto(&[
            "run",
            "--preset",
            "fig3",
            "--config",
            overlay.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--workers",
            "2",
            "--steps-per-unit-time",
            "1000",
        ])
        .unwrap();
        let rows = parse_csv(&fs::read_to_string(out.join("results.csv")).unwrap()).unwrap();
        assert_eq!(rows.len(), 12);
        for r in rows.iter().filter(|r| r.p >= r.n) {
            assert!(r.wcd_total.abs() <= 1e-6, "N={} p={} W_CD={}", r.n, r.p, r.wcd_total);
        }
        assert!(rows.iter().any(|r| r.p < r.n && r.wcd_total.abs() > 1e-3));
        assert!(out.join(MANIFEST_FILE).exists());
    }

    #[test]
    fn config_errors_name_the_key() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.toml");
        let out = dir.path().to_str().unwrap().to_owned();
        fs::write(&cfg, "N = 2\nwhat = 1\n").unwrap();
        let err = otto(&["run", "--config", cfg.to_str().unwrap(), "--out", &out]).unwrap_err();
        assert!(err.to_string().contains("what"), "{err}");
        fs::write(&cfg, "").unwrap();
        let err = otto(&["run", "--config", cfg.to_str().unwrap(), "--out", &out]).unwrap_err();
        assert!(err.to_string().contains("N, p"), "{err}");
    }

    #[test]
    fn config_or_preset_is_required() {
        assert!(Cli::try_parse_from(["otto", "run"]).is_err());
        assert!(Cli::try_parse_from(["otto", "run", "--preset", "fig9"]).is_err());
        assert!(Cli::try_parse_from(["otto", "run", "--preset", "fig4"]).is_ok());
    }

    #[test]
    fn json_output() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("one.toml");
        fs::write(&cfg, "N = 1\np = 1\ntau = 1.0\nsteps_per_unit_time = 500\n").unwrap();
        let out = dir.path().join("o");
        otto(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json"])
            .unwrap();
        let rows: Vec<ResultRow> =
            serde_json::from_str(&fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].cop.unwrap() - 2.0 / 3.0).abs() < 1e-5);
    }
}
