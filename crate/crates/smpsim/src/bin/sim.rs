//! Experiment runner.
//!
//! Usage:
//!   sim `<experiment-id>` [--param value]... [--config PATH] --seed S [--out PATH]
//!   sim all [--config PATH] --seed S [--out DIR]
//!   sim list
//!
//! A single experiment writes its CSV to --out (or stdout when omitted); the
//! `all` form writes one CSV per experiment plus summary.csv and
//! plotdata.csv into the output directory. Exit status is 0 iff every check
//! passed, 1 on a violated bound, 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use smpsim::harness::report::{plot_data_csv, summary_csv, summary_line, table_csv, write_table};
use smpsim::harness::{run_experiment, ExperimentConfig, ExperimentId, ALL_EXPERIMENTS};
use smpsim::{Error, Result};

struct Cli {
    target: String,
    seed: Option<u64>,
    out: Option<PathBuf>,
    config: Option<PathBuf>,
    params: Vec<(String, String)>,
}

fn parse_args(args: &[String]) -> Result<Cli> {
    let mut it = args.iter();
    let target = it
        .next()
        .ok_or_else(|| Error::usage("missing experiment id (try `sim list`)"))?
        .clone();
    let mut cli = Cli {
        target,
        seed: None,
        out: None,
        config: None,
        params: Vec::new(),
    };
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| Error::usage(format!("expected --<param>, got {flag:?}")))?;
        let value = it
            .next()
            .ok_or_else(|| Error::usage(format!("--{key} requires a value")))?;
        match key {
            "seed" => {
                cli.seed = Some(
                    value
                        .parse()
                        .map_err(|_| Error::usage(format!("--seed: bad integer {value:?}")))?,
                )
            }
            "out" => cli.out = Some(PathBuf::from(value)),
            "config" => cli.config = Some(PathBuf::from(value)),
            _ => cli.params.push((key.to_string(), value.clone())),
        }
    }
    Ok(cli)
}

fn build_config(id: ExperimentId, cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(id, 0);
    let mut have_seed = false;
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply_config_text(&text)?;
        have_seed = text
            .lines()
            .any(|l| l.trim_start().starts_with("seed") && l.contains('='));
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        have_seed = true;
    }
    if !have_seed {
        return Err(Error::usage(
            "a seed is required (--seed S or `seed = S` in the config)",
        ));
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    for (k, v) in &cli.params {
        cfg.set_param(k, v);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    if cli.target == "list" {
        for id in ALL_EXPERIMENTS {
            println!("{id}");
        }
        return Ok(true);
    }
    if cli.target == "all" {
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("results"));
        std::fs::create_dir_all(&dir)?;
        let mut tables = Vec::new();
        let mut ok = true;
        for id in ALL_EXPERIMENTS {
            let mut cfg = build_config(id, cli)?;
            cfg.out = Some(dir.join(format!("{id}.csv")));
            let table = run_experiment(&cfg)?;
            write_table(&table, cfg.out.as_ref().unwrap())?;
            println!("{}", summary_line(&table));
            ok &= table.all_pass();
            tables.push(table);
        }
        std::fs::write(dir.join("summary.csv"), summary_csv(&tables))?;
        std::fs::write(dir.join("plotdata.csv"), plot_data_csv(&tables))?;
        return Ok(ok);
    }

    let id = ExperimentId::from_str(&cli.target)?;
    let cfg = build_config(id, cli)?;
    let table = run_experiment(&cfg)?;
    match &cfg.out {
        Some(path) => write_table(&table, path)?,
        None => print!("{}", table_csv(&table)),
    }
    eprintln!("{}", summary_line(&table));
    Ok(table.all_pass())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse_args(&args) {
        Ok(cli) => cli,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Usage(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
