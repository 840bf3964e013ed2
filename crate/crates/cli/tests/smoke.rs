//! End-to-end smoke test: every CLI path on a reduced 10-trial,
//! 1000-step configuration.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swarmverify"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn swarmverify")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(path: &Path) -> String {
    path.display().to_string()
}

#[test]
fn every_cli_path_on_the_reduced_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let camp = root.join("campaign");
    let clean = root.join("clean.csv");

    // simulate, twice to exercise the overwrite guard.
    let sim = run(&[
        "simulate", "--out", &p(&camp), "--trials", "10", "--seed", "42", "--smoke",
    ]);
    assert_ok(&sim, "simulate");
    let again = run(&["simulate", "--out", &p(&camp), "--trials", "10", "--smoke"]);
    assert_eq!(again.status.code(), Some(2), "overwrite without --force");
    let forced = run(&[
        "simulate", "--out", &p(&camp), "--trials", "10", "--seed", "42", "--smoke",
        "--force",
    ]);
    assert_ok(&forced, "simulate --force");

    // clean + discretize + stats.
    assert_ok(
        &run(&["clean", "--campaign", &p(&camp), "--out", &p(&clean)]),
        "clean",
    );
    assert_ok(
        &run(&[
            "discretize", "--clean", &p(&clean), "--out", &p(&root.join("disc.csv")),
            "--bins", &p(&root.join("bins.json")),
        ]),
        "discretize",
    );
    let stats = run(&[
        "stats", "--inputs", &p(&clean), "--out", &p(&root.join("stats.json")),
    ]);
    assert_ok(&stats, "stats");
    assert!(root.join("stats.json").exists());

    // macroscopic model.
    assert_ok(
        &run(&[
            "macro", "--campaign", &p(&camp), "--out", &p(&root.join("traj.csv")),
            "--steps", "50", "--params-out", &p(&root.join("params.json")),
        ]),
        "macro",
    );

    // build-model in both modes.
    let model = root.join("model.txt");
    assert_ok(
        &run(&[
            "build-model", "--clean", &p(&clean), "--out", &p(&model), "--mode",
            "searching",
        ]),
        "build-model searching",
    );
    assert_ok(
        &run(&[
            "build-model", "--clean", &p(&clean), "--out", &p(&root.join("joint.txt")),
            "--mode", "joint",
        ]),
        "build-model joint",
    );
    let bad = run(&[
        "build-model", "--clean", &p(&clean), "--out", &p(&model), "--mode", "bogus",
    ]);
    assert_eq!(bad.status.code(), Some(2), "unknown mode");

    // check: real properties, determinism, empty file.
    let props = root.join("props.txt");
    std::fs::write(
        &props,
        "red: P=? [ F<=T \"unsafe_red\" ]\nnever_red: A [ G !\"unsafe_red\" ]\n",
    )
    .unwrap();
    let results = root.join("results.csv");
    let check = run(&[
        "check", "--model", &p(&model), "--props", &p(&props), "--define", "T=10",
        "--out", &p(&results),
    ]);
    assert!(
        matches!(check.status.code(), Some(0 | 1)),
        "check exit: {:?}",
        check.status.code()
    );
    let first = std::fs::read(&results).unwrap();
    let rerun = run(&[
        "check", "--model", &p(&model), "--props", &p(&props), "--define", "T=10",
        "--out", &p(&results),
    ]);
    assert_eq!(rerun.status.code(), check.status.code());
    assert_eq!(std::fs::read(&results).unwrap(), first, "check is deterministic");

    let empty = root.join("empty.txt");
    std::fs::write(&empty, "// nothing here\n").unwrap();
    let none = run(&[
        "check", "--model", &p(&model), "--props", &p(&empty), "--out",
        &p(&root.join("none.csv")),
    ]);
    assert_eq!(none.status.code(), Some(0), "empty property file");
    let text = std::fs::read_to_string(root.join("none.csv")).unwrap();
    assert_eq!(text.lines().count(), 1, "header-only results");

    // experiment with CSV and SVG outputs.
    assert_ok(
        &run(&[
            "experiment", "--model", &p(&model), "--prop",
            "P=? [ F<=T \"unsafe_amber\" ]", "--sweep", "T=0:5:15", "--out",
            &p(&root.join("sweep.csv")), "--plot", &p(&root.join("sweep.svg")),
        ]),
        "experiment",
    );
    assert!(root.join("sweep.svg").exists());

    // ingest-hf and downsample-phys on tiny synthetic recordings.
    let hf = root.join("hf.csv");
    let mut body = String::from("robot_id,t_s,x_m,y_m\n");
    for t in 0..5 {
        for robot in 0..2 {
            body.push_str(&format!("{robot},{t},0.{robot},0.0\n"));
        }
    }
    std::fs::write(&hf, &body).unwrap();
    assert_ok(
        &run(&[
            "ingest-hf", "--input", &p(&hf), "--out", &p(&root.join("hf_clean.csv")),
        ]),
        "ingest-hf",
    );
    let phys = root.join("phys.csv");
    let mut body = String::from("robot_id,t_s,x_m,y_m\n");
    for k in 0..50 {
        body.push_str(&format!("0,{:.3},0.5,0.5\n", k as f64 * 0.1));
    }
    std::fs::write(&phys, &body).unwrap();
    assert_ok(
        &run(&[
            "downsample-phys", "--input", &p(&phys), "--out",
            &p(&root.join("phys_clean.csv")), "--duration", "5", "--report",
            &p(&root.join("avail.json")),
        ]),
        "downsample-phys",
    );
    assert!(root.join("avail.json").exists());

    // full pipeline + report; violations may legitimately occur (exit 1).
    let run_dir = root.join("run");
    let all = run(&[
        "all", "--out", &p(&run_dir), "--trials", "10", "--seed", "42", "--smoke",
    ]);
    assert!(
        matches!(all.status.code(), Some(0 | 1)),
        "all exit: {:?}\n{}",
        all.status.code(),
        String::from_utf8_lossy(&all.stderr)
    );
    for file in [
        "campaign/campaign.json", "clean_avg.csv", "discrete.csv", "bins.json",
        "model_lf.txt", "results.csv", "report.md", "manifest.json",
    ] {
        assert!(run_dir.join(file).exists(), "missing {file}");
    }
    assert_ok(&run(&["report", "--run", &p(&run_dir)]), "report");

    // Determinism across runs: same seed, byte-identical results.
    let run2 = root.join("run2");
    let all2 = run(&[
        "all", "--out", &p(&run2), "--trials", "10", "--seed", "42", "--smoke",
    ]);
    assert_eq!(all2.status.code(), all.status.code());
    let results1 = std::fs::read(run_dir.join("results.csv")).unwrap();
    let results2 = std::fs::read(run2.join("results.csv")).unwrap();
    assert_eq!(results1, results2, "results.csv reproducible from the seed");
    let data1 = std::fs::read(run_dir.join("clean_avg.csv")).unwrap();
    let data2 = std::fs::read(run2.join("clean_avg.csv")).unwrap();
    assert_eq!(data1, data2, "dataset reproducible from the seed");
}
