//! End-to-end checks of the command-line surface: file formats, golden
//! outputs, and the exit-code contract (0 pass, 1 violation, 2 input error).

use fellgrid::bundle::{Bundle, TwistedLineBundle};
use fellgrid::groupoid::pair_groupoid;
use fellgrid::io;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_fellgrid")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let output = Command::new(exe())
        .args(args)
        .output()
        .expect("binary runs");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

fn write_golden_inputs(dir: &Path) {
    let g = pair_groupoid(2);
    io::save_groupoid(&dir.join("g.json"), &g).unwrap();
    let bundle = Bundle::TwistedLine(TwistedLineBundle::trivial(Arc::new(g)));
    io::save_bundle(&dir.join("b.json"), &bundle, "g.json").unwrap();
    // The table [[1,1],[1,0]] over arrows (i,j) -> id 2i + j.
    io::write_file(
        &dir.join("fib.json"),
        r#"{"bundle":"b.json","values":[[0,[[1.0,0.0]]],[1,[[1.0,0.0]]],[2,[[1.0,0.0]]]]}"#,
    )
    .unwrap();
}

#[test]
fn norms_of_the_golden_section() {
    let dir = tempfile::tempdir().unwrap();
    write_golden_inputs(dir.path());
    let (code, stdout, _) = run(&["norms", dir.path().join("fib.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    let parsed: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(parsed["inf"], 1.0);
    assert_eq!(parsed["1"], 2.0);
    assert!((parsed["2"].as_f64().unwrap() - 2.0f64.sqrt()).abs() < 1e-9);
    assert!((parsed["b"].as_f64().unwrap() - (1.0 + 5.0f64.sqrt()) / 2.0).abs() < 1e-9);
    assert_eq!(parsed["i"], 2.0);
}

#[test]
fn convolution_of_zero_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_golden_inputs(dir.path());
    io::write_file(
        &dir.path().join("zero.json"),
        r#"{"bundle":"b.json","values":[]}"#,
    )
    .unwrap();
    let out = dir.path().join("out.json");
    let (code, _, _) = run(&[
        "conv",
        dir.path().join("zero.json").to_str().unwrap(),
        dir.path().join("fib.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let (section, _) = io::load_section(&out).unwrap();
    assert!(section.is_zero());
}

#[test]
fn convolution_squares_the_golden_table() {
    let dir = tempfile::tempdir().unwrap();
    write_golden_inputs(dir.path());
    let out = dir.path().join("sq.json");
    let fib = dir.path().join("fib.json");
    let (code, _, _) = run(&[
        "conv",
        fib.to_str().unwrap(),
        fib.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let (section, _) = io::load_section(&out).unwrap();
    // [[1,1],[1,0]]^2 = [[2,1],[1,1]].
    let expected = [2.0, 1.0, 1.0, 1.0];
    for (arrow, want) in expected.iter().enumerate() {
        assert_eq!(section.value(arrow)[(0, 0)].re, *want);
    }
}

#[test]
fn ess_norm_reports_value_and_split() {
    let dir = tempfile::tempdir().unwrap();
    write_golden_inputs(dir.path());
    io::write_file(&dir.path().join("null.json"), r#"{"null_arrows":[1]}"#).unwrap();
    let (code, stdout, _) = run(&[
        "ess-norm",
        dir.path().join("fib.json").to_str().unwrap(),
        dir.path().join("null.json").to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let parsed: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    // The pair groupoid is connected, so one negligible arrow saturates it.
    assert_eq!(parsed["value"], 0.0);
    assert_eq!(parsed["g"].as_array().unwrap().len(), 0);
    assert_eq!(parsed["h"].as_array().unwrap().len(), 4);
}

#[test]
fn suite_passes_and_validate_flags_corruption() {
    let dir = tempfile::tempdir().unwrap();
    write_golden_inputs(dir.path());
    let (code, _, _) = run(&[
        "suite",
        dir.path().join("b.json").to_str().unwrap(),
        "--seed",
        "42",
        "--trials",
        "60",
    ]);
    assert_eq!(code, 0);

    // Matrix bundle over a pair groupoid on three points, default seed/trials.
    let pair3 = dir.path().join("pair3.json");
    let mb = dir.path().join("mb.json");
    assert_eq!(
        run(&["gen", "pair", "3", "--out", pair3.to_str().unwrap()]).0,
        0
    );
    assert_eq!(
        run(&[
            "gen",
            "matrix-bundle",
            pair3.to_str().unwrap(),
            "--dim",
            "2",
            "--out",
            mb.to_str().unwrap()
        ])
        .0,
        0
    );
    let (code, _, _) = run(&[
        "suite",
        mb.to_str().unwrap(),
        "--seed",
        "42",
        "--trials",
        "300",
    ]);
    assert_eq!(code, 0);

    // A cocycle entry off the unit circle must be rejected as inconsistent.
    let text = std::fs::read_to_string(dir.path().join("b.json")).unwrap();
    let corrupted = text.replacen("1.0", "0.5", 1);
    io::write_file(&dir.path().join("bad.json"), &corrupted).unwrap();
    let (code, stdout, _) = run(&["validate", dir.path().join("bad.json").to_str().unwrap()]);
    assert_eq!(code, 1, "stdout: {stdout}");

    let (code, _, _) = run(&["validate", dir.path().join("b.json").to_str().unwrap()]);
    assert_eq!(code, 0);
}

#[test]
fn unparsable_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    io::write_file(&dir.path().join("junk.json"), "{this is not json").unwrap();
    let (code, _, stderr) = run(&["norms", dir.path().join("junk.json").to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("error"));
    let (code, _, _) = run(&["norms", "/nonexistent/file.json"]);
    assert_eq!(code, 2);
}

#[test]
fn pullback_through_a_saved_morphism() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = fellgrid::sample::trial_rng(77, 0);
    let g = fellgrid::sample::random_groupoid(&mut rng, 12);
    let rho = fellgrid::sample::random_bundle(&mut rng, &g, 2);
    let m = fellgrid::sample::random_fell_morphism(&mut rng, &rho);
    io::save_groupoid(&dir.path().join("gs.json"), g.as_ref()).unwrap();
    io::save_bundle(&dir.path().join("bs.json"), &rho, "gs.json").unwrap();
    io::save_groupoid(&dir.path().join("gt.json"), m.target().groupoid()).unwrap();
    io::save_bundle(&dir.path().join("bt.json"), m.target(), "gt.json").unwrap();
    io::save_morphism(&dir.path().join("m.json"), &m, "bs.json", "bt.json").unwrap();
    let a = fellgrid::sample::random_section(&mut rng, &rho, 1.0);
    io::save_section(&dir.path().join("a.json"), &a, "bs.json").unwrap();

    let out = dir.path().join("image.json");
    let (code, _, stderr) = run(&[
        "pullback",
        dir.path().join("m.json").to_str().unwrap(),
        dir.path().join("a.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let (image, _) = io::load_section(&out).unwrap();
    let expected = m.algebraize(&a).unwrap();
    assert_eq!(image.max_abs_diff(&expected), 0.0);
}

#[test]
fn gen_subcommands_produce_valid_files() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("pair.json");
    let cyclic = dir.path().join("cyclic.json");
    let union = dir.path().join("union.json");
    let product = dir.path().join("product.json");
    let bundle = dir.path().join("bundle.json");
    assert_eq!(
        run(&["gen", "pair", "3", "--out", pair.to_str().unwrap()]).0,
        0
    );
    assert_eq!(
        run(&["gen", "cyclic", "4", "--out", cyclic.to_str().unwrap()]).0,
        0
    );
    assert_eq!(
        run(&[
            "gen",
            "union",
            pair.to_str().unwrap(),
            cyclic.to_str().unwrap(),
            "--out",
            union.to_str().unwrap()
        ])
        .0,
        0
    );
    assert_eq!(
        run(&[
            "gen",
            "product",
            pair.to_str().unwrap(),
            cyclic.to_str().unwrap(),
            "--out",
            product.to_str().unwrap()
        ])
        .0,
        0
    );
    assert_eq!(
        run(&[
            "gen",
            "matrix-bundle",
            union.to_str().unwrap(),
            "--dim",
            "2",
            "--out",
            bundle.to_str().unwrap()
        ])
        .0,
        0
    );
    let loaded = io::load_bundle(&bundle).unwrap();
    assert_eq!(loaded.groupoid().len(), 9 + 4);
    let (code, _, _) = run(&[
        "validate",
        bundle.to_str().unwrap(),
        union.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
}
