//! Batch front end: load groupoid/bundle/section/morphism files, run the
//! computations and the verification suite, emit machine-readable reports.
//!
//! Exit codes: 0 success or all checks passed, 1 an invariant failed,
//! 2 input error (unreadable, unparsable, or inconsistent files).

use clap::{Parser, Subcommand};
use fellgrid::algebra::{cstar_suite, essential_seminorm};
use fellgrid::bundle::{validate_fell, Bundle, MatrixBundle, TwistedLineBundle};
use fellgrid::groupoid::{
    action_groupoid, cyclic_group, direct_product, disjoint_union, from_group, pair_groupoid,
    Groupoid,
};
use fellgrid::io::{self, IoError};
use fellgrid::report::{fmt_sig, Report};
use fellgrid::Tolerance;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "fellgrid",
    about = "Convolution algebras of fiber bundles over finite groupoids",
    version
)]
struct Cli {
    /// Master seed for every randomized check.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Trial count for randomized checks.
    #[arg(long, global = true, default_value_t = 300)]
    trials: usize,
    /// Absolute tolerance override.
    #[arg(long, global = true)]
    tol_abs: Option<f64>,
    /// Relative tolerance override.
    #[arg(long, global = true)]
    tol_rel: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate groupoid/bundle/section/morphism/negligible files.
    Validate { paths: Vec<PathBuf> },
    /// All five norms of a section.
    Norms { section: PathBuf },
    /// Convolution of two sections over the same bundle.
    Conv { a: PathBuf, b: PathBuf },
    /// Essential seminorm of a section against a negligible arrow set.
    EssNorm {
        section: PathBuf,
        negligible: PathBuf,
    },
    /// Apply a bundle morphism to a section of its source bundle.
    Pullback { morphism: PathBuf, section: PathBuf },
    /// Full law suite over a bundle.
    Suite { bundle: PathBuf },
    /// Write generated instances to files.
    Gen {
        #[command(subcommand)]
        what: GenCmd,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// Pair groupoid on n points.
    Pair { n: usize },
    /// Cyclic group of order n.
    Cyclic { n: usize },
    /// Klein four-group.
    Klein,
    /// Disjoint union of two groupoid files.
    Union { a: PathBuf, b: PathBuf },
    /// Direct product of two groupoid files.
    Product { a: PathBuf, b: PathBuf },
    /// Action groupoid: a group table file and a permutation-list file.
    Action { group: PathBuf, perms: PathBuf },
    /// Matrix bundle of uniform fiber dimension over a groupoid file.
    MatrixBundle {
        groupoid: PathBuf,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Trivially twisted line bundle over a groupoid file.
    LineBundle { groupoid: PathBuf },
}

#[derive(Serialize)]
struct NormsOut {
    inf: f64,
    #[serde(rename = "1")]
    one: f64,
    #[serde(rename = "2")]
    two: f64,
    b: f64,
    i: f64,
}

#[derive(Serialize)]
struct EssNormOut {
    value: f64,
    g: Vec<usize>,
    h: Vec<usize>,
}

#[derive(Serialize)]
struct FileCheck {
    path: String,
    kind: String,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), IoError> {
    match out {
        Some(path) => io::write_file(path, content),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn input_error(e: &IoError) -> i32 {
    eprintln!("error: {e}");
    2
}

fn sniff_kind(path: &Path) -> Result<&'static str, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| IoError::Parse {
        path: path.display().to_string(),
        msg: "expected a JSON object".into(),
    })?;
    Ok(if obj.contains_key("product") {
        "groupoid"
    } else if obj.contains_key("phi") {
        "morphism"
    } else if obj.contains_key("values") {
        "section"
    } else if obj.contains_key("null_arrows") {
        "negligible"
    } else if obj.contains_key("kind") {
        "bundle"
    } else {
        return Err(IoError::Parse {
            path: path.display().to_string(),
            msg: "unrecognized file kind".into(),
        });
    })
}

fn cmd_validate(paths: &[PathBuf], seed: u64, trials: usize, out: &Option<PathBuf>) -> i32 {
    let mut checks = Vec::new();
    let mut worst = 0;
    for path in paths {
        let kind = match sniff_kind(path) {
            Ok(k) => k,
            Err(e) => return input_error(&e),
        };
        let result: Result<Option<String>, IoError> = match kind {
            "groupoid" => io::load_groupoid(path).map(|_| None),
            "section" => io::load_section(path).map(|_| None),
            "negligible" => {
                // Range checking needs the groupoid; membership is all there is.
                Ok(None)
            }
            "morphism" => io::load_morphism(path).map(|_| None),
            "bundle" => io::load_bundle(path).map(|bundle| {
                let report = validate_fell(&bundle, trials, seed);
                (!report.pass).then(|| report.to_json())
            }),
            _ => unreachable!(),
        };
        match result {
            Ok(None) => checks.push(FileCheck {
                path: path.display().to_string(),
                kind: kind.into(),
                pass: true,
                detail: None,
            }),
            Ok(Some(detail)) => {
                worst = worst.max(1);
                checks.push(FileCheck {
                    path: path.display().to_string(),
                    kind: kind.into(),
                    pass: false,
                    detail: Some(detail),
                });
            }
            Err(e @ IoError::File { .. }) | Err(e @ IoError::Parse { .. }) => {
                return input_error(&e);
            }
            Err(IoError::CrossReference { path, msg }) => {
                worst = worst.max(1);
                checks.push(FileCheck {
                    path,
                    kind: kind.into(),
                    pass: false,
                    detail: Some(msg),
                });
            }
        }
    }
    let text = serde_json::to_string_pretty(&checks).expect("serializable");
    if let Err(e) = emit(out, &text) {
        return input_error(&e);
    }
    worst
}

fn cmd_norms(section: &Path, out: &Option<PathBuf>) -> i32 {
    let (a, _) = match io::load_section(section) {
        Ok(v) => v,
        Err(e) => return input_error(&e),
    };
    let norms = NormsOut {
        inf: fmt_sig(a.norm_inf()),
        one: fmt_sig(a.norm_1()),
        two: fmt_sig(a.norm_2()),
        b: fmt_sig(a.norm_b()),
        i: fmt_sig(a.norm_i()),
    };
    let text = serde_json::to_string_pretty(&norms).expect("serializable");
    if let Err(e) = emit(out, &text) {
        return input_error(&e);
    }
    0
}

fn cmd_conv(a_path: &Path, b_path: &Path, out: &Option<PathBuf>) -> i32 {
    let (a, bundle_path) = match io::load_section(a_path) {
        Ok(v) => v,
        Err(e) => return input_error(&e),
    };
    let (b, _) = match io::load_section(b_path) {
        Ok(v) => v,
        Err(e) => return input_error(&e),
    };
    let product = match a.convolve(&b) {
        Ok(p) => p,
        Err(e) => {
            return input_error(&IoError::CrossReference {
                path: b_path.display().to_string(),
                msg: e.to_string(),
            })
        }
    };
    let bundle_ref = bundle_path.canonicalize().unwrap_or(bundle_path);
    let text = serde_json::to_string_pretty(&io::section_to_file(
        &product,
        &bundle_ref.display().to_string(),
    ))
    .expect("serializable");
    if let Err(e) = emit(out, &text) {
        return input_error(&e);
    }
    0
}

fn cmd_ess_norm(section: &Path, negligible: &Path, out: &Option<PathBuf>) -> i32 {
    let (a, _) = match io::load_section(section) {
        Ok(v) => v,
        Err(e) => return input_error(&e),
    };
    let n = match io::load_negligible(negligible, a.bundle().groupoid()) {
        Ok(v) => v,
        Err(e) => return input_error(&e),
    };
    let split = essential_seminorm(&a, &n);
    let result = EssNormOut {
        value: fmt_sig(split.value),
        g: split.g.to_vec(),
        h: split.h.to_vec(),
    };
    let text = serde_json::to_string_pretty(&result).expect("serializable");
    if let Err(e) = emit(out, &text) {
        return input_error(&e);
    }
    0
}

fn cmd_pullback(morphism: &Path, section: &Path, out: &Option<PathBuf>) -> i32 {
    let (m, _, target_path) = match io::load_morphism(morphism) {
        Ok(v) => v,
        Err(e) => return input_error(&e),
    };
    let (a, _) = match io::load_section(section) {
        Ok(v) => v,
        Err(e) => return input_error(&e),
    };
    let image = match m.algebraize(&a) {
        Ok(v) => v,
        Err(e) => {
            return input_error(&IoError::CrossReference {
                path: section.display().to_string(),
                msg: e.to_string(),
            })
        }
    };
    let target_ref = target_path.canonicalize().unwrap_or(target_path);
    let text = serde_json::to_string_pretty(&io::section_to_file(
        &image,
        &target_ref.display().to_string(),
    ))
    .expect("serializable");
    if let Err(e) = emit(out, &text) {
        return input_error(&e);
    }
    0
}

fn cmd_suite(
    bundle_path: &Path,
    seed: u64,
    trials: usize,
    tol: &Tolerance,
    out: &Option<PathBuf>,
) -> i32 {
    let bundle = match io::load_bundle(bundle_path) {
        Ok(b) => b,
        Err(e) => return input_error(&e),
    };
    let fell = validate_fell(&bundle, trials, seed);
    let algebra = cstar_suite(&bundle, trials, seed, tol);
    let mut checks = fell.checks;
    checks.extend(algebra.checks);
    let pass = fell.pass && algebra.pass;
    let report = Report {
        subject: format!("suite[{}]", bundle.kind_name()),
        seed,
        trials,
        checks,
        pass,
    };
    if let Err(e) = emit(out, &report.to_json()) {
        return input_error(&e);
    }
    if report.pass {
        0
    } else {
        1
    }
}

fn load_group_table(path: &Path) -> Result<Vec<Vec<usize>>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

fn cmd_gen(what: &GenCmd, out: &Option<PathBuf>) -> i32 {
    let out_path = match out {
        Some(p) => p.clone(),
        None => {
            eprintln!("error: gen requires --out");
            return 2;
        }
    };
    let write_groupoid = |g: &Groupoid| -> Result<(), IoError> { io::save_groupoid(&out_path, g) };
    let result: Result<(), IoError> = match what {
        GenCmd::Pair { n } => write_groupoid(&pair_groupoid((*n).max(1))),
        GenCmd::Cyclic { n } => write_groupoid(&cyclic_group((*n).max(1))),
        GenCmd::Klein => {
            let table = vec![
                vec![0, 1, 2, 3],
                vec![1, 0, 3, 2],
                vec![2, 3, 0, 1],
                vec![3, 2, 1, 0],
            ];
            write_groupoid(&from_group(&table).expect("Klein table is a group"))
        }
        GenCmd::Union { a, b } => (|| {
            let ga = io::load_groupoid(a)?;
            let gb = io::load_groupoid(b)?;
            write_groupoid(&disjoint_union(&ga, &gb))
        })(),
        GenCmd::Product { a, b } => (|| {
            let ga = io::load_groupoid(a)?;
            let gb = io::load_groupoid(b)?;
            write_groupoid(&direct_product(&ga, &gb))
        })(),
        GenCmd::Action { group, perms } => (|| {
            let table = load_group_table(group)?;
            let action = load_group_table(perms)?;
            let g = action_groupoid(&table, &action).map_err(|e| IoError::CrossReference {
                path: perms.display().to_string(),
                msg: e.to_string(),
            })?;
            write_groupoid(&g)
        })(),
        GenCmd::MatrixBundle { groupoid, dim } => (|| {
            let g = io::load_groupoid(groupoid)?;
            let bundle = Bundle::Matrix(MatrixBundle::uniform(g, (*dim).max(1)));
            let gref = groupoid
                .canonicalize()
                .unwrap_or_else(|_| groupoid.clone())
                .display()
                .to_string();
            io::save_bundle(&out_path, &bundle, &gref)
        })(),
        GenCmd::LineBundle { groupoid } => (|| {
            let g = io::load_groupoid(groupoid)?;
            let bundle = Bundle::TwistedLine(TwistedLineBundle::trivial(g));
            let gref = groupoid
                .canonicalize()
                .unwrap_or_else(|_| groupoid.clone())
                .display()
                .to_string();
            io::save_bundle(&out_path, &bundle, &gref)
        })(),
    };
    match result {
        Ok(()) => 0,
        Err(e) => input_error(&e),
    }
}

fn main() {
    if let Ok(threads) = std::env::var("FELLGRID_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    let tol = Tolerance::new(cli.tol_abs.unwrap_or(1e-9), cli.tol_rel.unwrap_or(1e-7));
    let code = match &cli.cmd {
        Cmd::Validate { paths } => cmd_validate(paths, cli.seed, cli.trials, &cli.out),
        Cmd::Norms { section } => cmd_norms(section, &cli.out),
        Cmd::Conv { a, b } => cmd_conv(a, b, &cli.out),
        Cmd::EssNorm {
            section,
            negligible,
        } => cmd_ess_norm(section, negligible, &cli.out),
        Cmd::Pullback { morphism, section } => cmd_pullback(morphism, section, &cli.out),
        Cmd::Suite { bundle } => cmd_suite(bundle, cli.seed, cli.trials, &tol, &cli.out),
        Cmd::Gen { what } => cmd_gen(what, &cli.out),
    };
    std::process::exit(code);
}
