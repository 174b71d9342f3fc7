use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zeroshot::{
    cmd_adaptive, cmd_classify, cmd_eval, cmd_normalize, cmd_render, cmd_validate, exit, CliError,
    ExperimentConfig, MetricChoice, SetupRef, DEFAULT_TOP_K,
};

#[derive(Parser)]
#[command(
    name = "zeroshot",
    version,
    about = "Zero-shot audio classification over precomputed embeddings"
)]
struct Cli {
    /// Worker threads (0 = one per core). Output does not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that manifest, audio and text embeddings agree.
    Validate(BundleArgs),
    /// Write predictions for one setup.
    Classify {
        #[command(flatten)]
        bundle: BundleArgs,
        #[arg(long)]
        setup_id: String,
    },
    /// Score every setup and the template ensemble.
    Eval(BundleArgs),
    /// Cross-validated per-class selection between setups.
    Adaptive {
        #[command(flatten)]
        bundle: BundleArgs,
        /// Per-class change rows shown in the summary.
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        top_k: usize,
    },
    /// Write the prompt text of every setup as JSONL.
    Render {
        #[command(flatten)]
        bundle: BundleArgs,
        /// Defaults to <out>/prompts.jsonl.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// L2-normalize the rows of an AEMB file.
    Normalize { input: PathBuf, output: PathBuf },
}

#[derive(Args)]
struct BundleArgs {
    /// JSON file with any of the options below; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    audio: Option<PathBuf>,
    /// <id>=<spec>[:<path>], e.g. cls=upper_period:text/cls.aemb. Repeatable.
    #[arg(long = "setup", value_name = "SETUP")]
    setups: Vec<SetupRef>,
    #[arg(long, value_enum)]
    metric: Option<MetricChoice>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reject unknown manifest keys and unnormalized embeddings.
    #[arg(long)]
    strict: bool,
    /// Baseline setup for adaptive selection.
    #[arg(long)]
    baseline: Option<String>,
    /// Template registry file; the built-in registry otherwise.
    #[arg(long)]
    templates: Option<PathBuf>,
}

impl BundleArgs {
    fn into_config(self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_json_file(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => {$(if let Some(v) = self.$f { cfg.$f = Some(v); })*};
        }
        take!(manifest, audio, baseline, templates);
        if !self.setups.is_empty() {
            cfg.setups = self.setups;
        }
        cfg.metric = self.metric.unwrap_or(cfg.metric);
        cfg.folds = self.folds.unwrap_or(cfg.folds);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.out = self.out.unwrap_or(cfg.out);
        cfg.strict |= self.strict;
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate(b) => cmd_validate(&b.into_config()?, &mut std::io::stdout().lock()),
        Command::Classify { bundle, setup_id } => {
            let path = cmd_classify(&bundle.into_config()?, &setup_id)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Eval(b) => {
            print!("{}", cmd_eval(&b.into_config()?)?.summary);
            Ok(())
        }
        Command::Adaptive { bundle, top_k } => {
            print!("{}", cmd_adaptive(&bundle.into_config()?, top_k)?.summary);
            Ok(())
        }
        Command::Render { bundle, output } => {
            let path = cmd_render(&bundle.into_config()?, output.as_deref())?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Normalize { input, output } => cmd_normalize(&input, &output),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::CONTRACT as u8
            } else {
                0
            });
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit::CONTRACT as u8);
        }
    };
    // `validate` already lists violations on stdout.
    let list_violations = !matches!(cli.command, Command::Validate(_));
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let (CliError::Violations(v), true) = (&e, list_violations) {
                for item in v {
                    eprintln!("violation: {item}");
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
