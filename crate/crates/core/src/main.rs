use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use paradiff::runner::{emit_plotdata, run, selftest, RunConfig, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "paradiff", version, about = "Paradifferential NLS solver on the torus")]
struct Cli {
    /// Worker threads for the parallel sections (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; falls back to the config's `output`, then
        /// `$PARADIFF_OUTPUT_ROOT/<config stem>`, then `runs/<config stem>`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// `section.key=value`, parsed as TOML. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Quick invariant checks; prints JSON with per-suite pass counts.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tidy plotting CSVs from a finished run directory.
    EmitPlots { run_dir: PathBuf },
}

fn output_dir(cfg: &RunConfig, config: &Path, flag: Option<PathBuf>) -> PathBuf {
    let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    flag.or_else(|| cfg.output.clone())
        .unwrap_or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| "runs".into()).join(stem))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Run { config, output, overrides } => (|| {
            let text = std::fs::read_to_string(&config).map_err(|e| paradiff::Error::io(config.display().to_string(), e))?;
            let cfg = RunConfig::parse_with_overrides(&text, &overrides)?;
            let out = output_dir(&cfg, &config, output);
            let base = config.parent().unwrap_or(Path::new("."));
            let art = run(&cfg, base, &out)?;
            println!("{}", out.display());
            Ok(art.success)
        })(),
        Command::Selftest { seed } => {
            let art = selftest(seed);
            print!("{}", art.files["selftest.json"]);
            Ok(art.success)
        }
        Command::EmitPlots { run_dir } => emit_plotdata(&run_dir).map(|files| {
            for f in files {
                println!("{}", f.display());
            }
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
