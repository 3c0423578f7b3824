//! Command-line front end.
//!
//! Subcommands: `check-manifold`, `factor`, `perturb-matrix`,
//! `blend-verify`, `calabi`. Exit codes follow the documented contract:
//! check-manifold returns 0 when the obstruction criterion is
//! satisfied, 1 when not, 2 when inconclusive, 3 on input errors;
//! factor returns 0 for a witness, 1 for a proved no, 2 for a bounded
//! no, 3 on input errors. Structured output (`--format structured`) is
//! byte-identical for identical inputs.

mod hamspec;
mod mapspec;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use sympl_core::blend::{blended_map, verify_blend, VerifyOptions};
use sympl_core::calabi::{
    calabi, compose_hamiltonians, orbit_copy, sigma_displaceable, OrbitCopyConfig,
    QuadratureOptions,
};
use sympl_core::catalog;
use sympl_core::factor::{
    obstruction_report, FactorizationVerdict, ObstructionStatus, SearchConfig,
};
use sympl_core::report::Doc;
use sympl_core::ring::{parse_manifold_spec, ManifoldData};
use sympl_core::symplectic::{
    self, identity_order, perturb_to_rational_angles, ClassifyOptions, SymplecticMatrix,
};

const ENV_BOUND: &str = "SYMPL_BOUND";

#[derive(Parser)]
#[command(
    name = "sympl",
    about = "Chern-class factorization obstructions and desk-scale symplectic constructions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Args)]
struct ManifoldArgs {
    /// Built-in manifold name (cp1..cp8, s2, blowup-cp3, cp2xcp2).
    #[arg(long, conflicts_with = "spec")]
    catalog: Option<String>,
    /// Path to a manifold spec file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Coefficient bound for the fallback search (default 50, or the
    /// SYMPL_BOUND environment variable).
    #[arg(long)]
    bound: Option<i64>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full obstruction report for a manifold.
    CheckManifold(ManifoldArgs),
    /// Decide the existence of an even factorization.
    Factor(ManifoldArgs),
    /// Perturb an elliptic symplectic matrix to rational angles.
    PerturbMatrix {
        /// Matrix file: dimension line, then entries row-major.
        #[arg(long)]
        input: PathBuf,
        /// Angle tolerance (fraction of a full turn).
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Blend a polynomial symplectic map to its linearization and report
    /// the closeness defects.
    BlendVerify {
        /// Map spec file.
        #[arg(long)]
        map: PathBuf,
        /// Blending radius delta.
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Calabi invariant experiments.
    Calabi {
        /// Hamiltonian spec file.
        #[arg(long)]
        hamiltonian: PathBuf,
        /// Operation: cal, compose, or orbit-copy.
        #[arg(long, value_parser = ["cal", "compose", "orbit-copy"])]
        op: String,
        /// Second Hamiltonian (for compose).
        #[arg(long)]
        with: Option<PathBuf>,
        /// Number of copies (for orbit-copy).
        #[arg(long, default_value_t = 3)]
        copies: usize,
        /// Spacing between copies along the q1 axis (for orbit-copy).
        #[arg(long, default_value_t = 0.4)]
        spacing: f64,
        /// Total volume for the sigma line (defaults to the box volume).
        #[arg(long)]
        volume: Option<f64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {:#}", err);
            3
        }
    };
    ExitCode::from(code)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::CheckManifold(args) => check_manifold(args),
        Command::Factor(args) => factor(args),
        Command::PerturbMatrix { input, eps, format } => perturb_matrix(&input, eps, format),
        Command::BlendVerify { map, delta, format } => blend_verify(&map, delta, format),
        Command::Calabi {
            hamiltonian,
            op,
            with,
            copies,
            spacing,
            volume,
            format,
        } => calabi_cmd(&hamiltonian, &op, with.as_deref(), copies, spacing, volume, format),
    }
}

fn resolve_bound(explicit: Option<i64>) -> Result<i64> {
    let bound = match explicit {
        Some(b) => b,
        None => match std::env::var(ENV_BOUND) {
            Ok(v) => v
                .parse()
                .map_err(|_| anyhow!("invalid {} value `{}`", ENV_BOUND, v))?,
            Err(_) => 50,
        },
    };
    if bound < 1 {
        bail!("coefficient bound must be at least 1, got {}", bound);
    }
    Ok(bound)
}

fn load_manifold(args: &ManifoldArgs) -> Result<(ManifoldData, Option<String>)> {
    if let Some(name) = &args.catalog {
        let entry = catalog::lookup(name).ok_or_else(|| {
            anyhow!(
                "unknown catalog manifold `{}` (known: {})",
                name,
                catalog::names().join(", ")
            )
        })?;
        return Ok((entry.data, Some(entry.name)));
    }
    if let Some(path) = &args.spec {
        let src = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let parsed = parse_manifold_spec(&src)
            .map_err(|e| anyhow!("{}: {}", path.display(), e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string());
        return Ok((parsed.manifold, name));
    }
    bail!("one of --catalog or --spec is required");
}

fn search_config(bound: i64) -> SearchConfig {
    SearchConfig {
        coeff_bound: bound,
        ..SearchConfig::default()
    }
}

fn check_manifold(args: ManifoldArgs) -> Result<u8> {
    let bound = resolve_bound(args.bound)?;
    let (manifold, name) = load_manifold(&args)?;
    let report = obstruction_report(&manifold, name.as_deref(), &search_config(bound))?;
    match args.format {
        Format::Text => print!("{}", report.render_text()),
        Format::Structured => print!("{}", report.to_doc().render()),
    }
    Ok(match report.status {
        ObstructionStatus::Satisfied => 0,
        ObstructionStatus::NotSatisfied | ObstructionStatus::NotApplicable => 1,
        ObstructionStatus::Inconclusive => 2,
    })
}

fn factor(args: ManifoldArgs) -> Result<u8> {
    let bound = resolve_bound(args.bound)?;
    let (manifold, name) = load_manifold(&args)?;
    let trace =
        sympl_core::factor::decide_even_factorization(&manifold, &search_config(bound))?;
    match args.format {
        Format::Text => {
            if let Some(n) = &name {
                println!("manifold: {}", n);
            }
            match &trace.verdict {
                FactorizationVerdict::Yes(w) => {
                    println!("even factorization: YES");
                    println!("  alpha = {} (degree {})", w.alpha, w.deg_alpha);
                    println!("  beta  = {} (degree {})", w.beta, w.deg_beta);
                }
                FactorizationVerdict::NoProved(m) => {
                    println!("even factorization: NO (proved, {})", m);
                }
                FactorizationVerdict::NoWithinBound { bound } => {
                    println!(
                        "even factorization: none with |coefficients| <= {} (inconclusive)",
                        bound
                    );
                }
            }
            let report = obstruction_report(&manifold, name.as_deref(), &search_config(bound))?;
            for line in report.render_text().lines() {
                if line.starts_with("split")
                    || line.starts_with("  ")
                    || line.starts_with("gcd criterion")
                {
                    println!("{}", line);
                }
            }
        }
        Format::Structured => {
            let mut doc = Doc::new();
            if let Some(n) = &name {
                doc.push("manifold", n);
            }
            doc.nest("factorization", trace.to_doc());
            print!("{}", doc.render());
        }
    }
    Ok(match trace.verdict {
        FactorizationVerdict::Yes(_) => 0,
        FactorizationVerdict::NoProved(_) => 1,
        FactorizationVerdict::NoWithinBound { .. } => 2,
    })
}

fn perturb_matrix(input: &std::path::Path, eps: f64, format: Format) -> Result<u8> {
    if eps <= 0.0 {
        bail!("eps must be positive, got {}", eps);
    }
    let src = std::fs::read_to_string(input)
        .with_context(|| format!("cannot read {}", input.display()))?;
    let mat = symplectic::io::parse_matrix(&src).map_err(|e| anyhow!("{}", e))?;
    let sm = SymplecticMatrix::new(mat, 1e-8).map_err(|e| anyhow!("{}", e))?;
    let opts = ClassifyOptions::default();
    let out = perturb_to_rational_angles(&sm, eps, &opts).map_err(|e| {
        // non-elliptic input: print the classification before failing
        if let sympl_core::symplectic::SymplecticError::NotElliptic(detail) = &e {
            eprintln!("input is not elliptic: {}", detail);
        }
        anyhow!("{}", e)
    })?;
    let order = identity_order(&out.angles).map_err(|e| anyhow!("{}", e))?;
    match format {
        Format::Text => {
            println!("perturbed matrix (symplectic defect {:e}):", out.matrix.defect());
            print!("{}", symplectic::io::format_matrix(out.matrix.matrix()));
            let angles: Vec<String> = out.angles.iter().map(|a| a.to_string()).collect();
            println!("angles: {}", angles.join(", "));
            println!("order: {}", order);
            println!("distance to input: {:e}", out.distance);
            println!("basis condition number: {:e}", out.cond_basis);
        }
        Format::Structured => {
            let mut doc = Doc::new();
            doc.push("matrix", symplectic::io::format_matrix(out.matrix.matrix()).replace('\n', ";"));
            for (i, a) in out.angles.iter().enumerate() {
                doc.push(format!("angle.{}", i), a);
            }
            doc.push("order", order);
            print!("{}", doc.render());
        }
    }
    Ok(0)
}

fn blend_verify(map_path: &std::path::Path, delta: f64, format: Format) -> Result<u8> {
    let src = std::fs::read_to_string(map_path)
        .with_context(|| format!("cannot read {}", map_path.display()))?;
    let map = mapspec::parse_map_spec(&src).map_err(|e| anyhow!("{}: {}", map_path.display(), e))?;
    let g = blended_map(&map, delta).map_err(|e| anyhow!("{}", e))?;
    let report = verify_blend(&map, &g, delta, &VerifyOptions::default())
        .map_err(|e| anyhow!("{}", e))?;
    match format {
        Format::Text => {
            println!("delta: {}", delta);
            println!("inside_defect:     {:e}", report.inside_defect);
            println!("outside_defect:    {:e}", report.outside_defect);
            println!("symplectic_defect: {:e}", report.symplectic_defect);
            println!("c1_distance:       {:e}", report.c1_distance);
        }
        Format::Structured => {
            let mut doc = Doc::new();
            doc.push("delta", delta);
            doc.push("inside_defect", report.inside_defect);
            doc.push("outside_defect", report.outside_defect);
            doc.push("symplectic_defect", report.symplectic_defect);
            doc.push("c1_distance", report.c1_distance);
            print!("{}", doc.render());
        }
    }
    Ok(0)
}

fn calabi_cmd(
    ham_path: &std::path::Path,
    op: &str,
    with: Option<&std::path::Path>,
    copies: usize,
    spacing: f64,
    volume: Option<f64>,
    format: Format,
) -> Result<u8> {
    let f = hamspec::load(ham_path)?;
    let opts = QuadratureOptions::default();
    let mut doc = Doc::new();
    match op {
        "cal" => {
            let c = calabi(&f, &opts).map_err(|e| anyhow!("{}", e))?;
            let v = volume.unwrap_or_else(|| f.box_().volume());
            let sigma = sigma_displaceable(&f, v, &opts).map_err(|e| anyhow!("{}", e))?;
            doc.push("calabi", c.value);
            doc.push("quad_error", c.quad_error);
            doc.push("sigma", sigma.value);
            doc.push("sigma_error", sigma.quad_error);
        }
        "compose" => {
            let with = with.ok_or_else(|| anyhow!("--with is required for compose"))?;
            let g = hamspec::load(with)?;
            let composed = compose_hamiltonians(&f, &g, 64).map_err(|e| anyhow!("{}", e))?;
            let cf = calabi(&f, &opts).map_err(|e| anyhow!("{}", e))?;
            let cg = calabi(&g, &opts).map_err(|e| anyhow!("{}", e))?;
            let cc = calabi(&composed, &opts).map_err(|e| anyhow!("{}", e))?;
            let defect = (cc.value - cf.value - cg.value).abs();
            let bound = 2.0 * (cc.quad_error + cf.quad_error + cg.quad_error);
            doc.push("calabi.composed", cc.value);
            doc.push("calabi.first", cf.value);
            doc.push("calabi.second", cg.value);
            doc.push("homomorphism_defect", defect);
            doc.push("error_bound", bound);
            doc.push("within_bound", defect <= bound);
        }
        "orbit-copy" => {
            let cfg = OrbitCopyConfig::translations(f.box_().n, copies, spacing);
            let copied = orbit_copy(&f, &cfg).map_err(|e| anyhow!("{}", e))?;
            let cf = calabi(&f, &opts).map_err(|e| anyhow!("{}", e))?;
            let cc = calabi(&copied, &opts).map_err(|e| anyhow!("{}", e))?;
            let defect = (cc.value - copies as f64 * cf.value).abs();
            let bound = copies as f64 * (cf.quad_error + cc.quad_error);
            doc.push("copies", copies);
            doc.push("calabi.base", cf.value);
            doc.push("calabi.copies", cc.value);
            doc.push("multiplicativity_defect", defect);
            doc.push("error_bound", bound);
            doc.push("within_bound", defect <= bound);
        }
        other => bail!("unknown operation `{}`", other),
    }
    match format {
        Format::Text => {
            for (k, v) in doc.entries() {
                println!("{}: {}", k, v);
            }
        }
        Format::Structured => print!("{}", doc.render()),
    }
    Ok(0)
}
