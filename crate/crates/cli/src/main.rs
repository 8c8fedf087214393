//! `lamfem`: run interface benchmarks from JSON configurations.
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments, 3 solver
//! divergence, 1 anything else (I/O).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lamfem::bench::{self, LaminatePathConfig, RunConfig};
use lamfem::fem::output::{class_code, write_csv};
use lamfem::geometry::{classify_element, ElementClass};
use lamfem::{Error, Method};

#[derive(Parser)]
#[command(name = "lamfem", version, about = "Laminated-element interface solver on structured meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration; writes summary.json, load_curve.csv and solution.vtk.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Mesh-convergence study; writes convergence.csv and convergence.json.
    Study {
        #[command(flatten)]
        common: Common,
        /// Elements along x, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
        resolutions: Vec<usize>,
        /// Methods to compare, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "ELA,GPLA,LET")]
        methods: Vec<Method>,
    },
    /// Drive a single laminate material point along F = I + tH; writes laminate_path.csv.
    LaminatePath {
        config: PathBuf,
        #[arg(long, env = "LAMFEM_OUT")]
        out: Option<PathBuf>,
    },
    /// Classify every element against the level set; writes classification.csv.
    Classify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    config: PathBuf,
    /// Override the configured method (ELA, GPLA or LET).
    #[arg(long)]
    method: Option<Method>,
    /// Override the mesh, as `N` or `NXxNY`.
    #[arg(long, value_parser = parse_mesh)]
    mesh: Option<(usize, usize)>,
    /// Output directory; defaults to the configured one.
    #[arg(long, env = "LAMFEM_OUT")]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf), Error> {
        let mut cfg = RunConfig::from_file(&self.config)?;
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some((nx, ny)) = self.mesh {
            cfg.mesh.nx = nx;
            cfg.mesh.ny = ny;
        }
        cfg.validate()?;
        let out = self.out.clone().unwrap_or_else(|| cfg.output.clone());
        Ok((cfg, out))
    }
}

fn parse_mesh(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().ok().filter(|&n| n > 0);
    let dims = match s.split_once(['x', 'X']) {
        Some((a, b)) => parse(a).zip(parse(b)),
        None => parse(s).map(|n| (n, n)),
    };
    dims.ok_or_else(|| format!("expected N or NXxNY with positive integers, got `{s}`"))
}

fn simulate(common: &Common) -> Result<(), Error> {
    let (cfg, out) = common.load()?;
    let summary = bench::run(&cfg, &out)?;
    println!(
        "{} {} {}x{}: {} steps, {} iterations, final load {}",
        summary.name,
        summary.method,
        summary.nx,
        summary.ny,
        summary.steps.len(),
        summary.total_iterations,
        summary.final_load
    );
    if let Some(e) = &summary.error {
        println!("error vs {}: L2 {:e}, energy {:e}", e.reference, e.l2, e.energy);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn study(common: &Common, resolutions: &[usize], methods: &[Method]) -> Result<(), Error> {
    let (cfg, out) = common.load()?;
    if resolutions.contains(&0) {
        return Err(Error::Config("resolutions: must be positive".into()));
    }
    std::fs::create_dir_all(&out)?;
    let rows = bench::convergence_study(&cfg, resolutions, methods)?;
    bench::write_convergence_csv(&out.join("convergence.csv"), &rows)?;
    let json = serde_json::to_string_pretty(&rows).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(out.join("convergence.json"), json + "\n")?;
    for r in &rows {
        match &r.failure {
            None => println!("{:>4} n={:<4} L2 {:.3e}  energy {:.3e}", r.method, r.n, r.error_l2, r.error_energy),
            Some(msg) => println!("{:>4} n={:<4} failed: {msg}", r.method, r.n),
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn laminate_path(config: &Path, out: Option<&Path>) -> Result<(), Error> {
    let text = std::fs::read_to_string(config).map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
    let cfg: LaminatePathConfig = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let out = out.map(Path::to_path_buf).or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let rows = bench::laminate_path(&cfg)?;
    std::fs::create_dir_all(&out)?;
    write_csv(&out.join("laminate_path.csv"), &bench::LAMINATE_PATH_HEADER, &rows)?;
    println!("wrote {} rows to {}", rows.len(), out.join("laminate_path.csv").display());
    Ok(())
}

fn classify(common: &Common) -> Result<(), Error> {
    let (cfg, out) = common.load()?;
    let mesh = cfg.build_mesh()?;
    let ls = cfg.level_set.build()?;
    let mut rows = Vec::with_capacity(mesh.n_elements());
    let mut counts = [0usize; 3];
    for e in 0..mesh.n_elements() {
        let rect = mesh.element_rect(e);
        let class = classify_element(&ls, &rect, cfg.n_sub)?;
        let [cx, cy] = rect.centroid();
        let (eta, n) = match class {
            ElementClass::Phase1 => (0.0, [0.0; 2]),
            ElementClass::Phase2 => (1.0, [0.0; 2]),
            ElementClass::Cut { eta, normal } => (eta, [normal[0], normal[1]]),
        };
        let code = class_code(&class);
        counts[code as usize - 1] += 1;
        rows.push(vec![e as f64, cx, cy, code as f64, eta, n[0], n[1]]);
    }
    std::fs::create_dir_all(&out)?;
    write_csv(&out.join("classification.csv"), &["element", "x", "y", "class", "eta", "n1", "n2"], &rows)?;
    println!("phase 1: {}, phase 2: {}, cut: {}", counts[0], counts[1], counts[2]);
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) | Error::InvalidParameter(_) | Error::MeshMismatch(_) => 2,
        Error::Io(_) => 1,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("LAMFEM_THREADS") {
        // read by rayon when its global pool is first used
        std::env::set_var("RAYON_NUM_THREADS", n);
    }
    let result = match &cli.command {
        Command::Simulate { common } => simulate(common),
        Command::Study { common, resolutions, methods } => study(common, resolutions, methods),
        Command::LaminatePath { config, out } => laminate_path(config, out.as_deref()),
        Command::Classify { common } => classify(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lamfem: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_flag() {
        assert_eq!(parse_mesh("32"), Ok((32, 32)));
        assert_eq!(parse_mesh("64x16"), Ok((64, 16)));
        assert_eq!(parse_mesh("8X8"), Ok((8, 8)));
        assert!(parse_mesh("0").is_err());
        assert!(parse_mesh("4x").is_err());
        assert!(parse_mesh("ax4").is_err());
    }
}
