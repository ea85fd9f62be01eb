use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use lcbif::classify::{classify, ClassifyOptions};
use lcbif::oracle::{kernel_eigen_integral, SphereGrid};
use lcbif::reduction::{bifurcation_golden, golden_diff, reduce, to_real_eq, Convention};
use lcbif::sh_core::SHIndex;
use lcbif::sh_product::engine;
use lcbif::spectrum::{bifurcation_points, KernelSpec};
use lcbif::verify::{equivariance_residual, run_all, VerifyOptions};

#[derive(Parser)]
#[command(name = "lcbif", version, about = "Bifurcation analysis of the Onsager free energy on the sphere")]
struct Cli {
    /// Gauss points per axis for quadrature checks.
    #[arg(long, global = true, default_value_t = 48)]
    quad_order: usize,
    /// Seed for randomized property checks.
    #[arg(long, global = true, default_value_t = 20)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Onsager,
    MaierSaupe,
    Dipolar,
    Custom,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    Complex,
    Real,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConventionArg {
    Reference,
    Consistent,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Reference => Convention::Reference,
            ConventionArg::Consistent => Convention::Consistent,
        }
    }
}

#[derive(clap::Args)]
struct KernelOpts {
    #[arg(long, value_enum, default_value_t = KernelArg::Onsager)]
    kernel: KernelArg,
    /// JSON file `{"name": .., "taylor": ["1", "0", "-1/2", ..]}` for `--kernel custom`.
    #[arg(long)]
    taylor: Option<PathBuf>,
}

impl KernelOpts {
    fn spec(&self) -> Result<KernelSpec> {
        Ok(match self.kernel {
            KernelArg::Onsager => KernelSpec::onsager(),
            KernelArg::MaierSaupe => KernelSpec::maier_saupe(),
            KernelArg::Dipolar => KernelSpec::dipolar(),
            KernelArg::Custom => {
                let path = self.taylor.as_ref().ok_or_else(|| anyhow!("--kernel custom needs --taylor FILE"))?;
                KernelSpec::from_taylor_file(path)?
            }
        })
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues μ_s and bifurcation points λ_s.
    Spectrum {
        #[command(flatten)]
        kernel: KernelOpts,
        #[arg(long, default_value_t = 12)]
        smax: u32,
        /// Add a quadrature column computed on a grid of `--quad-order` points.
        #[arg(long)]
        check: bool,
    },
    /// Reduced bifurcation equation and its diff against the bundled golden data.
    Reduce {
        #[command(flatten)]
        kernel: KernelOpts,
        #[arg(long, default_value_t = 4)]
        order: u32,
        #[arg(long, value_enum, default_value_t = BasisArg::Real)]
        basis: BasisArg,
        #[arg(long, value_enum, default_value_t = ConventionArg::Reference)]
        convention: ConventionArg,
    },
    /// Recognition, branches, stability and global bounds.
    Classify {
        #[command(flatten)]
        kernel: KernelOpts,
        /// `lo:hi:step`
        #[arg(long, default_value = "0.05:0.15:0.01")]
        stability_sweep: String,
        #[arg(long)]
        check_equivariance: bool,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = ConventionArg::Reference)]
        convention: ConventionArg,
    },
    /// Run every acceptance check.
    Verify {
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Dump the expansion of `Y_a · Y_b`.
    Product {
        /// `l,m`
        #[arg(allow_hyphen_values = true)]
        a: String,
        #[arg(allow_hyphen_values = true)]
        b: String,
    },
}

enum Outcome {
    Ok,
    Mismatch,
}

fn parse_index(s: &str) -> Result<SHIndex> {
    let (l, m) = s.split_once(',').ok_or_else(|| anyhow!("expected l,m, got {s}"))?;
    let (l, m): (u32, i32) = (l.trim().parse()?, m.trim().parse()?);
    SHIndex::checked(l, m).ok_or_else(|| anyhow!("invalid index ({l},{m})"))
}

fn parse_sweep(s: &str) -> Result<(f64, f64, f64)> {
    let v: Vec<f64> = s.split(':').map(|x| x.trim().parse()).collect::<Result<_, _>>().with_context(|| format!("bad sweep {s}"))?;
    match v[..] {
        [lo, hi, step] if step > 0.0 && hi >= lo => Ok((lo, hi, step)),
        _ => bail!("sweep must be lo:hi:step with step > 0"),
    }
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut o = std::io::stdout().lock();
            let r = o.write_all(body.as_bytes()).and_then(|_| if body.ends_with('\n') { Ok(()) } else { o.write_all(b"\n") });
            match r {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn pretty(v: &serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn run(cli: Cli) -> Result<Outcome> {
    let out = cli.out.as_deref();
    match cli.cmd {
        Cmd::Spectrum { kernel, smax, check } => {
            let spec = kernel.spec()?;
            let table = bifurcation_points(&spec, smax);
            let quad: Option<Vec<(u32, f64)>> = check.then(|| {
                let grid = SphereGrid::new(cli.quad_order);
                // probe point off every nodal line of Y_s^0 used here
                let p = (0.4, 1.0);
                (0..=smax).filter_map(|s| kernel_eigen_integral(&spec, s, 0, p, &grid).ok().map(|v| (s, v))).collect()
            });
            let body = match cli.format {
                Format::Csv => {
                    let mut csv = table.to_csv();
                    if let Some(q) = &quad {
                        csv.push_str("\ns,quadrature\n");
                        for (s, v) in q {
                            csv.push_str(&format!("{s},{v:e}\n"));
                        }
                    }
                    csv
                }
                Format::Json => {
                    let mut v = json!({ "kernel": spec.name, "table": table });
                    if let Some(q) = quad {
                        v["quadrature"] = json!({ "order": cli.quad_order, "values": q });
                    }
                    pretty(&v)?
                }
            };
            emit(out, &body)?;
            Ok(Outcome::Ok)
        }
        Cmd::Reduce { kernel, order, basis, convention } => {
            let spec = kernel.spec()?;
            let f = reduce(&spec, convention.into(), order)?;
            let eq = match basis {
                BasisArg::Complex => f.clone(),
                BasisArg::Real => to_real_eq(&f)?,
            };
            // golden data exists for the Onsager kernel in the complex coordinates
            let report = (spec.name == "onsager").then(|| golden_diff(&f, &bifurcation_golden()));
            let body = match cli.format {
                Format::Json => pretty(&json!({ "kernel": spec.name, "equation": eq.to_json(), "golden": report }))?,
                Format::Csv => {
                    let mut s = String::from("component,exponents,coeff_exact,coeff_float\n");
                    for t in eq.terms() {
                        let e: Vec<String> = t.exponents.iter().map(|x| x.to_string()).collect();
                        s.push_str(&format!("{},{},\"{}\",{:e}\n", t.component, e.join(" "), t.coeff, t.float));
                    }
                    s
                }
            };
            emit(out, &body)?;
            match report {
                Some(r) => {
                    eprintln!(
                        "golden match: {:.0}% ({}/{} compared, {} beyond order {order})",
                        r.match_percent(),
                        r.matched,
                        r.compared,
                        r.beyond_order.len()
                    );
                    if r.is_match() {
                        Ok(Outcome::Ok)
                    } else {
                        for m in &r.mismatches {
                            eprintln!("  f[{}] {:?}: {:?}", m.component, m.exponents, m.kind);
                        }
                        Ok(Outcome::Mismatch)
                    }
                }
                None => {
                    eprintln!("no golden data for kernel {}", spec.name);
                    Ok(Outcome::Ok)
                }
            }
        }
        Cmd::Classify { kernel, stability_sweep, check_equivariance, trials, convention } => {
            let spec = kernel.spec()?;
            let opts =
                ClassifyOptions { convention: convention.into(), sweep: parse_sweep(&stability_sweep)?, ..ClassifyOptions::default() };
            let report = classify(&spec, &opts)?;
            let mut v = serde_json::to_value(&report)?;
            if check_equivariance {
                let f = reduce(&spec, opts.convention, opts.order)?;
                let r = equivariance_residual(&f, trials, cli.seed).map_err(|e| anyhow!(e))?;
                v["equivariance"] = json!({ "trials": trials, "seed": cli.seed, "max_residual": r });
                eprintln!("equivariance: max residual {r:.3e} over {trials} trials");
            }
            eprintln!("verdict: {}", report.verdict);
            let body = match cli.format {
                Format::Json => pretty(&v)?,
                Format::Csv => {
                    let mut s = String::from("lambda,stability\n");
                    for p in &report.stability {
                        s.push_str(&format!("{},{}\n", p.lambda, serde_json::to_value(p.verdict)?.as_str().unwrap_or("")));
                    }
                    s
                }
            };
            emit(out, &body)?;
            Ok(Outcome::Ok)
        }
        Cmd::Verify { trials } => {
            let checks = run_all(&VerifyOptions { seed: cli.seed, trials });
            let body = match cli.format {
                Format::Json => pretty(&serde_json::to_value(&checks)?)?,
                Format::Csv => {
                    let mut s = String::from("id,name,pass,seconds,detail\n");
                    for c in &checks {
                        s.push_str(&format!("{},{},{},{:.3},\"{}\"\n", c.id, c.name, c.pass, c.seconds, c.detail.replace('"', "'")));
                    }
                    s
                }
            };
            for c in &checks {
                eprintln!("{c}");
            }
            emit(out, &body)?;
            Ok(if checks.iter().all(|c| c.pass) { Outcome::Ok } else { Outcome::Mismatch })
        }
        Cmd::Product { a, b } => {
            let (a, b) = (parse_index(&a)?, parse_index(&b)?);
            let e = engine().product(a, b)?;
            let v = json!({ "a": [a.l, a.m], "b": [b.l, b.m], "product": e.to_json() });
            emit(out, &pretty(&v)?)?;
            Ok(Outcome::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Mismatch) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
