//! Command-line front end: `inspect | remesh | solve | compare | converge`
//! plus `generate` for benchmark surfaces.
//!
//! Exit codes: 0 ok, 1 I/O or usage, 2 mesh validation, 3 singular system,
//! 4 comparison above threshold.

pub mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::fieldstat::{
    convergence_report, curve_deviation, default_ranks, percentile_curve, PercentileCurve,
    DEFAULT_CONVERGENCE_RANK_MIN, DEFAULT_CONVERGENCE_THRESHOLD, DEFAULT_RANK_MIN,
};
use crate::geometry::{
    boundary_loops, load_stl_with_report, make_blob, make_bumpy_sphere, make_clipped_sphere,
    make_icosphere, make_open_cylinder, orient_outward, quality_report, save_stl, save_stl_ascii,
    tri_clip_openings, DEFAULT_WELD_TOLERANCE,
};
use crate::remesh::{isotropic_remesh, RemeshParams, DEFAULT_ITERATIONS};
use crate::vtk::write_polydata;
use crate::{Error, Result};

pub use config::{ClampPolicy, RunConfig, SCHEMA_VERSION};
pub use pipeline::{run_solve, solve_surface, ResultBundle, Summary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_THRESHOLD: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "wallten",
    version,
    about = "Shell-model wall tension on vessel surfaces"
)]
pub struct Cli {
    /// Single-threaded solve and timing-free outputs for byte-identical reruns.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Worker threads for assembly and factorization (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load an STL, weld and validate it, and print a quality report.
    Inspect {
        mesh: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WELD_TOLERANCE)]
        weld_tolerance: f64,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remesh a surface toward a target edge length.
    Remesh {
        mesh: PathBuf,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iterations: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WELD_TOLERANCE)]
        weld_tolerance: f64,
        /// Reverse the orientation after outward orientation.
        #[arg(long)]
        flip: bool,
        /// Write ASCII instead of binary STL.
        #[arg(long)]
        ascii: bool,
    },
    /// Solve the shell model described by a config file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        flip: bool,
    },
    /// Compare two percentile CSVs; the first is the reference.
    Compare {
        reference: PathBuf,
        candidate: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RANK_MIN)]
        rank_min: f64,
        /// Exit with code 4 when the deviation exceeds this.
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remesh and solve at several element sizes and tabulate convergence.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Element sizes in mm, e.g. 0.6,0.3,0.2,0.15
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        flip: bool,
        #[arg(long, value_enum, default_value_t = FieldChoice::MpwtMidsurface)]
        field: FieldChoice,
        #[arg(long, default_value_t = DEFAULT_CONVERGENCE_RANK_MIN)]
        rank_min: f64,
        #[arg(long, default_value_t = DEFAULT_CONVERGENCE_THRESHOLD)]
        threshold: f64,
    },
    /// Write a benchmark surface as STL.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldChoice {
    MpsInner,
    MpsMid,
    MpsOuter,
    MpwtIntegrated,
    MpwtMidsurface,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Sphere,
    Cylinder,
    /// Sphere with three circular openings.
    TriClip,
    Bumpy,
    /// Lobed sac with a dome and three vessel openings.
    Blob,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub shape: Shape,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.5)]
    pub edge: f64,
    /// Cylinder length.
    #[arg(long, default_value_t = 40.0)]
    pub length: f64,
    /// Relative bump height of the bumpy sphere.
    #[arg(long, default_value_t = 0.05)]
    pub amplitude: f64,
    #[arg(long)]
    pub ascii: bool,
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not configure {n} threads: {e}");
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::NonManifold { edges } = &e {
                for (a, b) in edges.iter().take(20) {
                    eprintln!("  edge ({a}, {b}) has more than two triangles");
                }
            }
            e.exit_code()
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> String {
    let s = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    print!("{s}");
    s
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Inspect {
            mesh,
            weld_tolerance,
            out,
        } => {
            let (m, load) = load_stl_with_report(mesh, *weld_tolerance)?;
            let report = quality_report(&m)?;
            #[derive(Serialize)]
            struct Inspect<'a> {
                load: &'a crate::geometry::StlLoadReport,
                quality: &'a crate::geometry::MeshQualityReport,
            }
            let text = print_json(&Inspect {
                load: &load,
                quality: &report,
            });
            if let Some(out) = out {
                write_file(out, &text)?;
            }
            Ok(EXIT_OK)
        }
        Command::Remesh {
            mesh,
            target,
            iterations,
            out,
            weld_tolerance,
            flip,
            ascii,
        } => {
            let m = pipeline::load_surface(mesh, *weld_tolerance, *flip)?;
            let params = RemeshParams::new(*target)?.with_iterations(*iterations)?;
            let before = quality_report(&m)?;
            let r = isotropic_remesh(&m, &params)?;
            let after = quality_report(&r)?;
            if *ascii {
                save_stl_ascii(&r, out)?;
            } else {
                save_stl(&r, out)?;
            }
            #[derive(Serialize)]
            struct Remeshed {
                before: crate::geometry::MeshQualityReport,
                after: crate::geometry::MeshQualityReport,
            }
            print_json(&Remeshed { before, after });
            Ok(EXIT_OK)
        }
        Command::Solve { config, out, flip } => {
            let mut cfg = RunConfig::load(config)?;
            cfg.deterministic |= cli.deterministic;
            if let Some(o) = out {
                cfg.output_dir = o.clone();
            }
            let bundle = run_solve(&cfg, *flip)?;
            let summary = bundle.write(&cfg.output_dir, &cfg, cfg.deterministic)?;
            print_json(&summary);
            Ok(EXIT_OK)
        }
        Command::Compare {
            reference,
            candidate,
            rank_min,
            threshold,
            out,
        } => {
            let a = PercentileCurve::read_csv(reference)?;
            let b = PercentileCurve::read_csv(candidate)?;
            let cmp = curve_deviation(&b, &a, *rank_min)?;
            #[derive(Serialize)]
            struct Compared {
                #[serde(flatten)]
                comparison: crate::fieldstat::CurveComparison,
                threshold: f64,
                passed: bool,
            }
            let passed = cmp.max_relative_deviation <= *threshold;
            let text = print_json(&Compared {
                comparison: cmp,
                threshold: *threshold,
                passed,
            });
            if let Some(out) = out {
                write_file(out, &text)?;
            }
            Ok(if passed { EXIT_OK } else { EXIT_THRESHOLD })
        }
        Command::Converge {
            config,
            sizes,
            out,
            flip,
            field,
            rank_min,
            threshold,
        } => {
            let mut cfg = RunConfig::load(config)?;
            cfg.deterministic |= cli.deterministic;
            if let Some(o) = out {
                cfg.output_dir = o.clone();
            }
            converge(&cfg, sizes, *flip, *field, *rank_min, *threshold)
        }
        Command::Generate(args) => {
            generate(args)?;
            Ok(EXIT_OK)
        }
    }
}

#[derive(Debug, Serialize)]
struct ConvergeRun {
    size: f64,
    vertices: usize,
    dof: usize,
    median: f64,
    max: f64,
    seconds: Option<f64>,
}

fn converge(
    cfg: &RunConfig,
    sizes: &[f64],
    flip: bool,
    field: FieldChoice,
    rank_min: f64,
    threshold: f64,
) -> Result<i32> {
    if sizes.len() < 2 {
        return Err(Error::InvalidParameter(
            "convergence needs at least two element sizes".into(),
        ));
    }
    let mut sizes = sizes.to_vec();
    sizes.sort_by(|a, b| b.total_cmp(a));
    let mesh = pipeline::load_surface(&cfg.mesh, cfg.weld_tolerance, cfg.flip ^ flip)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut curves = Vec::new();
    let mut runs = Vec::new();
    for &h in &sizes {
        let start = Instant::now();
        let mut run_cfg = cfg.clone();
        run_cfg.target_edge = Some(h);
        let bundle = solve_surface(mesh.clone(), &run_cfg)?;
        let seconds = start.elapsed().as_secs_f64();
        let f = match field {
            FieldChoice::MpsInner => &bundle.fields.mps_inner,
            FieldChoice::MpsMid => &bundle.fields.mps_mid,
            FieldChoice::MpsOuter => &bundle.fields.mps_outer,
            FieldChoice::MpwtIntegrated => &bundle.fields.mpwt_integrated,
            FieldChoice::MpwtMidsurface => &bundle.fields.mpwt_midsurface,
        };
        let curve = percentile_curve(f, &default_ranks())?;
        write_polydata(
            dir.join(format!("converge_h{h}.vtk")),
            &bundle.model.analysis_mesh,
            &bundle.fields.all(),
            &format!("element size {h}"),
        )?;
        curve.write_csv(dir.join(format!("converge_h{h}_{}.csv", f.name)))?;
        eprintln!(
            "h = {h}: {} vertices, {} DOF, median {:.6} {}, {:.2}s",
            bundle.model.analysis_mesh.vertex_count(),
            bundle.stats.dof,
            curve.value_at(50.0).unwrap_or(f64::NAN),
            f.units,
            seconds
        );
        runs.push(ConvergeRun {
            size: h,
            vertices: bundle.model.analysis_mesh.vertex_count(),
            dof: bundle.stats.dof,
            median: curve.value_at(50.0).unwrap_or(f64::NAN),
            max: f.max(),
            seconds: (!cfg.deterministic).then_some(seconds),
        });
        curves.push((h, curve));
    }
    let report = convergence_report(&curves, rank_min, threshold)?;
    write_file(&dir.join("convergence.csv"), &report.to_csv())?;
    #[derive(Serialize)]
    struct Converged<'a> {
        field: &'a str,
        runs: Vec<ConvergeRun>,
        report: crate::fieldstat::ConvergenceReport,
    }
    let name = match field {
        FieldChoice::MpsInner => "MPS_inner",
        FieldChoice::MpsMid => "MPS_mid",
        FieldChoice::MpsOuter => "MPS_outer",
        FieldChoice::MpwtIntegrated => "MPWT_integrated",
        FieldChoice::MpwtMidsurface => "MPWT_midsurface",
    };
    let text = print_json(&Converged {
        field: name,
        runs,
        report,
    });
    write_file(&dir.join("convergence.json"), &text)?;
    Ok(EXIT_OK)
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let (r, e) = (args.radius, args.edge);
    let mesh = match args.shape {
        Shape::Sphere => make_icosphere(r, e)?,
        Shape::Cylinder => make_open_cylinder(r, args.length, e)?,
        Shape::TriClip => make_clipped_sphere(r, e, &tri_clip_openings())?,
        Shape::Bumpy => make_bumpy_sphere(r, e, args.amplitude)?,
        Shape::Blob => make_blob(r, e)?,
    };
    let mesh = orient_outward(&mesh)?;
    log::info!(
        "{} vertices, {} triangles, {} boundary loops",
        mesh.vertex_count(),
        mesh.triangle_count(),
        boundary_loops(&mesh)?.len()
    );
    if args.ascii {
        save_stl_ascii(&mesh, &args.out)
    } else {
        save_stl(&mesh, &args.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_with_io_code() {
        assert_eq!(main_with_args(["wallten", "frobnicate"]), EXIT_IO);
        assert_eq!(main_with_args(["wallten", "--help"]), EXIT_OK);
    }

    #[test]
    fn converge_needs_two_sizes() {
        let cfg = RunConfig::new("missing.stl", crate::Pressure::MmHg(100.0));
        assert!(matches!(
            converge(&cfg, &[0.5], false, FieldChoice::MpwtMidsurface, 50.0, 0.02),
            Err(Error::InvalidParameter(_))
        ));
    }
}
