use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use fqs::io::{self, ExperimentConfig, HamiltonianSource, LandscapeGrid};
use fqs::oracle::Oracle;
use fqs::{Error, Result};

#[derive(Parser)]
#[command(name = "fqs", version, about = "Coordinate-wise closed-form gate optimization for time evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridKind {
    Angle,
    Sphere,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment config and write CSV trajectories plus metadata.json.
    ///
    /// Without an output path the directory comes from FQS_OUTPUT_DIR.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config and the environment default.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Dense ground-state reference for a Hamiltonian file or `heisenberg1d[:sites[:j[:h[:open]]]]`.
    Oracle {
        #[arg(long)]
        hamiltonian: String,
    },
    /// Per-checkpoint quantiles across trajectory CSVs.
    Compare {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sample one slot's objective on a grid at the initial parameters.
    Landscape {
        #[arg(long)]
        config: PathBuf,
        /// 0-based slot index.
        #[arg(long)]
        slot: usize,
        #[arg(long, value_enum, default_value = "angle")]
        grid: GridKind,
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn emit(text: &str, output: Option<PathBuf>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(&p, text).map_err(|e| Error::Io { path: p, source: e }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evolve { config, output } => {
            let mut c = ExperimentConfig::load(&config)?;
            if output.is_some() {
                c.output = output;
            }
            let summary = io::run_experiment(&c)?;
            for s in &summary.seeds {
                let last = s.rows.last().expect("initial checkpoint always present");
                println!(
                    "seed {}: step {} energy {} fidelity_ground {}",
                    s.seed,
                    last.step,
                    last.energy,
                    last.fidelity_ground.map_or("-".into(), |f| f.to_string())
                );
            }
            println!("wrote {}", summary.metadata.display());
            let v = summary.violations();
            if v > 0 {
                return Err(Error::Contract(format!("{v} slot updates lowered their objective")));
            }
            Ok(())
        }
        Command::Oracle { hamiltonian } => {
            let h = HamiltonianSource::from_cli(&hamiltonian)?.build()?;
            let o = Oracle::new(&h)?;
            let out = json!({
                "qubits": h.qubit_count(),
                "terms": h.len(),
                "ground_energy": o.ground_energy(),
                "ground_degeneracy": o.degeneracy(),
                "lowest_energies": o.energies().iter().take(4).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("plain json"));
            Ok(())
        }
        Command::Compare { csv, output } => emit(&io::quantile_csv(&io::compare_report(&csv)?)?, output),
        Command::Landscape {
            config,
            slot,
            grid,
            points,
            output,
        } => {
            let c = ExperimentConfig::load(&config)?;
            let g = match grid {
                GridKind::Angle => LandscapeGrid::Angle(points),
                GridKind::Sphere => LandscapeGrid::Sphere(points),
            };
            emit(&io::landscape_dump(&c, slot, g)?, output)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("fqs").chain(args.iter().copied()))
    }

    fn write_config(dir: &Path, optimizer: &str, preset: &str, steps: usize, seeds: &str) -> PathBuf {
        let p = dir.join(format!("{optimizer}-{steps}.toml"));
        let text = format!(
            "optimizer = \"{optimizer}\"\nstep = 0.5\nsteps = {steps}\nseeds = {seeds}\n\n\
             [hamiltonian]\nsource = \"heisenberg1d\"\nsites = 5\n\n[ansatz]\npreset = \"{preset}\"\nlayers = 2\n"
        );
        std::fs::write(&p, text).unwrap();
        p
    }

    fn evolve(config: &Path, out: &Path) -> Result<()> {
        let args = ["evolve", "--config", config.to_str().unwrap(), "--output", out.to_str().unwrap()];
        run(parse(&args).unwrap())
    }

    #[test]
    fn usage_errors() {
        assert!(parse(&[]).is_err());
        assert!(parse(&["evolve"]).is_err());
        assert!(parse(&["landscape", "--config", "c.toml", "--slot", "x"]).is_err());
        assert!(parse(&["compare"]).is_err());
        assert!(parse(&["--help"]).is_err_and(|e| !e.use_stderr()));
    }

    #[test]
    fn runtime_errors_map_to_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("missing.toml");
        let e = evolve(&missing, dir.path()).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        let e = run(parse(&["oracle", "--hamiltonian", "heisenberg1d:0"]).unwrap()).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert_eq!(Error::Contract("x".into()).exit_code(), 2);
    }

    #[test]
    fn zero_steps_write_the_initial_row() {
        let dir = tempfile::tempdir().unwrap();
        let c = write_config(dir.path(), "fqs-1q3p", "ladder-general", 0, "[3]");
        evolve(&c, &dir.path().join("out")).unwrap();
        let rows = io::read_trajectory(dir.path().join("out/seed-3.csv")).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].0, 0);
    }

    #[test]
    fn smoke_runs_and_reports() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_config(dir.path(), "fqs-1q3p", "ladder-general", 5, "[0, 1]");
        let out_a = dir.path().join("a");
        evolve(&a, &out_a).unwrap();
        let csvs = [out_a.join("seed-0.csv"), out_a.join("seed-1.csv")];
        for p in &csvs {
            let rows = io::read_trajectory(p).unwrap();
            assert_eq!(rows.len(), 6);
            assert!(rows.iter().all(|r| r.3.is_some() && r.4.is_some()));
        }
        let report = dir.path().join("q.csv");
        let mut args = vec!["compare".to_string()];
        args.extend(csvs.iter().map(|p| p.display().to_string()));
        args.extend(["--output".to_string(), report.display().to_string()]);
        run(Cli::try_parse_from(std::iter::once("fqs".to_string()).chain(args)).unwrap()).unwrap();
        let text = std::fs::read_to_string(&report).unwrap();
        assert_eq!(text.lines().count(), 1 + 6 * 3);

        let b = write_config(dir.path(), "rzryrz-nft", "ladder-rzryrz", 1, "[0]");
        let out_b = dir.path().join("b");
        evolve(&b, &out_b).unwrap();
        let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_b.join("metadata.json")).unwrap()).unwrap();
        assert_eq!(meta["parameterized_slots"], 45);
        assert_eq!(meta["trotter_terms"], 20);
        assert_eq!(meta["measurement_types_per_update"]["3"], 45 * 20);

        let scan = dir.path().join("scan.csv");
        let args = ["landscape", "--config", a.to_str().unwrap(), "--slot", "2", "--grid", "sphere", "--points", "10", "--output", scan.to_str().unwrap()];
        run(parse(&args).unwrap()).unwrap();
        let text = std::fs::read_to_string(&scan).unwrap();
        assert!(text.starts_with("theta,nx,ny,nz,objective\n"));
        assert_eq!(text.lines().count(), 11);
    }
}
