use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ogk::convalg::ConvolutionContext;
use ogk::fieldlab::{norm_continuity_profile, FamilyJson, ParametrizedFamily, Which, PRESETS};
use ogk::groupoid::{validate_groupoid, validate_haar, zoo_ids, FiniteGroupoid, GroupoidJson, HaarSystem};
use ogk::orlicz::{gauge_abs, orlicz_abs, Section, SectionJson};
use ogk::suites::{self, Fault, SuiteConfig, DEFAULT_TRIALS};
use ogk::young::{builtin_zoo, default_delta2_grid, delta2_estimate, Delta2, YoungFunction};

#[derive(Parser)]
#[command(name = "ogk", version, about = "Orlicz spaces over finite groupoids")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Show the built-in groupoids, Young functions and families.
    Zoo {
        /// Print ids only.
        #[arg(long)]
        list: bool,
    },
    /// Check the groupoid axioms and, optionally, a Haar system.
    Validate {
        /// Zoo id or groupoid JSON file.
        groupoid: String,
        #[arg(long)]
        haar: Option<PathBuf>,
    },
    /// Per-unit norms of a section.
    Norm {
        section: PathBuf,
        #[arg(long, default_value = "power:2")]
        phi: String,
        #[arg(long, value_enum, default_value = "gauge")]
        which: NormKind,
        #[arg(long)]
        groupoid: String,
        #[arg(long)]
        haar: Option<PathBuf>,
    },
    /// Convolution f * g, printed as section JSON.
    Convolve {
        f: PathBuf,
        g: PathBuf,
        #[arg(long)]
        groupoid: String,
        #[arg(long)]
        haar: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run check suites: `all`, a module name or a suite name.
    Check {
        selector: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// JSON report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV summary path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Restrict zoo groupoids (repeatable).
        #[arg(long = "groupoid")]
        groupoids: Vec<String>,
        /// Restrict Young functions (repeatable).
        #[arg(long = "young")]
        young: Vec<String>,
        #[arg(long)]
        inject_fault: Option<Fault>,
    },
    /// Norm profile of a parametrized family over a uniform unit grid.
    Field {
        /// Preset name or family JSON file.
        #[arg(long)]
        family: String,
        #[arg(long, default_value = "power:2")]
        phi: String,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        /// Also sample at twice the grid and report the modulus ratio.
        #[arg(long)]
        refine: bool,
        #[arg(long, value_enum, default_value = "gauge")]
        which: FieldNorm,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormKind {
    Gauge,
    Orlicz,
    L1,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldNorm {
    Gauge,
    Orlicz,
}

/// Config and input errors exit with 2, failed checks with 1.
enum Failure {
    Config(String),
    Check,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_groupoid(arg: &str) -> Result<FiniteGroupoid, Failure> {
    let p = Path::new(arg);
    if p.is_file() {
        let j: GroupoidJson = read_json(p)?;
        Ok(FiniteGroupoid::from_json(arg, &j)?)
    } else {
        Ok(FiniteGroupoid::from_id(arg)?)
    }
}

fn load_haar(g: &FiniteGroupoid, path: Option<&Path>) -> Result<HaarSystem, Failure> {
    match path {
        None => Ok(HaarSystem::counting(g)),
        Some(p) => {
            let j: BTreeMap<usize, Vec<f64>> = read_json(p)?;
            Ok(HaarSystem::from_fiber_weights(g, j)?)
        }
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Zoo { list } => zoo(list),
        Cmd::Validate { groupoid, haar } => {
            let g = load_groupoid(&groupoid)?;
            let rep = validate_groupoid(&g);
            let mut ok = rep.is_valid();
            println!("{}", serde_json::to_string_pretty(&rep)?);
            if ok {
                let h = load_haar(&g, haar.as_deref())?;
                let hr = validate_haar(&g, &h);
                ok = hr.is_valid();
                println!("{}", serde_json::to_string_pretty(&hr)?);
            }
            if ok {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
        Cmd::Norm {
            section,
            phi,
            which,
            groupoid,
            haar,
        } => {
            let g = load_groupoid(&groupoid)?;
            let h = load_haar(&g, haar.as_deref())?;
            let phi = YoungFunction::from_id(&phi)?;
            let s = Section::from_json(&g, &read_json::<SectionJson>(&section)?)?;
            let mut per_unit = BTreeMap::new();
            for &u in g.units() {
                let a = s.fiber(&g, u)?.abs();
                let w = h.fiber_weights(u).ok_or_else(|| Failure::Config(format!("no Haar weights for unit {u}")))?;
                let n = match which {
                    NormKind::Gauge => gauge_abs(&phi, &a, w)?,
                    NormKind::Orlicz => orlicz_abs(&phi, &a, w)?.0,
                    NormKind::L1 => a.iter().zip(w).map(|(a, w)| a * w).sum(),
                };
                per_unit.insert(u, n);
            }
            let sup = per_unit.values().copied().fold(0.0, f64::max);
            let out = serde_json::json!({ "per_unit": per_unit, "sup": sup });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
        Cmd::Convolve {
            f,
            g: gpath,
            groupoid,
            haar,
            out,
        } => {
            let g = load_groupoid(&groupoid)?;
            let h = load_haar(&g, haar.as_deref())?;
            let ctx = ConvolutionContext::new(g.clone(), h, YoungFunction::power(2.0)?)?;
            let a = Section::from_json(&g, &read_json::<SectionJson>(&f)?)?;
            let b = Section::from_json(&g, &read_json::<SectionJson>(&gpath)?)?;
            let text = serde_json::to_string_pretty(&ctx.convolve(&a, &b).to_json(&g))?;
            write_or_print(out.as_deref(), &text)
        }
        Cmd::Check {
            selector,
            seed,
            trials,
            out,
            csv,
            groupoids,
            young,
            inject_fault,
        } => {
            let mut cfg = SuiteConfig::new(seed, trials);
            cfg.fault = inject_fault;
            if !groupoids.is_empty() {
                cfg.groupoids = groupoids;
            }
            if !young.is_empty() {
                cfg.young = young;
            }
            let report = suites::run(&selector, &cfg)?;
            write_or_print(out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
            if let Some(p) = csv {
                std::fs::write(&p, report.to_csv()).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            }
            for s in &report.suites {
                for c in s.failures() {
                    eprintln!("FAIL {} {}: slack {:e} {}", s.suite, c.name, c.slack, c.witness.as_deref().unwrap_or(""));
                }
            }
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
        Cmd::Field {
            family,
            phi,
            grid,
            refine,
            which,
            out,
        } => {
            let fam = if Path::new(&family).is_file() {
                ParametrizedFamily::from_json(&read_json::<FamilyJson>(Path::new(&family))?)?
            } else {
                ParametrizedFamily::preset(&family)?
            };
            let phi = YoungFunction::from_id(&phi)?;
            let which = match which {
                FieldNorm::Gauge => Which::Gauge,
                FieldNorm::Orlicz => Which::Orlicz,
            };
            let r = norm_continuity_profile(&fam, &phi, which, grid)?;
            let profile = if refine { &r.fine } else { &r.coarse };
            write_or_print(out.as_deref(), profile.to_csv().trim_end())?;
            if refine {
                let ratio = r.ratio.map_or("none".to_string(), |x| x.to_string());
                eprintln!("modulus {} -> {}, ratio {ratio}", r.coarse.modulus, r.fine.modulus);
            }
            Ok(())
        }
    }
}

fn zoo(list: bool) -> Result<(), Failure> {
    if list {
        for id in zoo_ids() {
            println!("groupoid {id}");
        }
        for phi in builtin_zoo() {
            println!("young {}", phi.name());
        }
        for p in PRESETS {
            println!("family {p}");
        }
        return Ok(());
    }
    println!("groupoids:");
    for id in zoo_ids() {
        let g = FiniteGroupoid::from_id(id)?;
        println!(
            "  {id:<42} elements {:>3}  units {:>2}  group bundle {}",
            g.len(),
            g.units().len(),
            g.is_group_bundle()
        );
    }
    println!("young functions:");
    for phi in builtin_zoo() {
        let d2 = match delta2_estimate(&phi, &default_delta2_grid()) {
            Delta2::Bounded(k) => format!("{k:.6}"),
            Delta2::Divergent => "divergent".into(),
        };
        let conj = if phi.conjugate_closed_form().is_some() { "closed form" } else { "numeric" };
        println!("  {:<12} delta2 {d2:<10} conjugate {conj}", phi.name());
    }
    println!("families:");
    for p in PRESETS {
        println!("  {p}");
    }
    Ok(())
}
