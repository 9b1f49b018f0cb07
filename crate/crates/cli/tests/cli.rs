use std::path::Path;
use std::process::{Command, Output};

use kspace_cli::plot::{series, Metric};
use kspace_cli::{read_csv, read_tensor, write_tensor};
use kspace_core::fft::fft_forward;

fn kspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kspace")).args(args).output().expect("spawn kspace")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn synth_then_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = kspace(&["synth", "--shape", "6,5,4", "--ranks", "2,2,2", "--seed", "3", "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let image = read_tensor(dir.path().join("image.atns")).unwrap();
    let recomputed = dir.path().join("fft.atns");
    write_tensor(&recomputed, &fft_forward(&image)).unwrap();
    let kpath = dir.path().join("kspace.atns");
    let m = kspace(&["metrics", "--recon", s(&recomputed), "--truth", s(&kpath)]);
    assert!(m.status.success());
    let k: f64 = stdout(&m).lines().next().unwrap().strip_prefix("k_test=").unwrap().parse().unwrap();
    assert!(k < 1e-24, "k_test {k}");

    let same = kspace(&["metrics", "--recon", s(&kpath), "--truth", s(&kpath)]);
    assert_eq!(stdout(&same), "k_test=0.0000000000000000e0\nser_db=inf\npsnr_db=inf\n");
}

#[test]
fn run_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            "phantom.shape=8,8,3\nphantom.ranks=2,2,2\nmask.center_fraction=0.25\nmask.random_line_fraction=0.25\n\
             solver.max_sweeps=20\nsolver.warm_start=false\nexperiment.method=varxlev,coherence\n\
             experiment.batch_size=2\nexperiment.num_batches=2\nexperiment.trials=2\nexperiment.output_dir={}\n",
            out_dir.display()
        ),
    )
    .unwrap();
    let run = kspace(&["run", "--config", s(&cfg)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = out_dir.join("metrics.csv");
    let rows = read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3);
    let order: Vec<(usize, &str)> = rows.iter().map(|r| (r.trial, r.method.as_str())).collect();
    assert_eq!(order[0], (0, "varxlev"));
    assert_eq!(order[3], (0, "coherence"));
    assert_eq!(order[6], (1, "varxlev"));

    let svg = dir.path().join("k.svg");
    let plot = kspace(&["plot", "--csv", s(&csv), "--metric", "k_test", "--out", s(&svg)]);
    assert!(plot.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 2);
    assert!(text.contains(">varxlev</text>") && text.contains(">coherence</text>"));

    // plotted y values are the per-(method, round) means of the CSV
    let ser = series(&rows, Metric::KTest);
    for s in &ser {
        for (round, &(_, y)) in s.points.iter().enumerate() {
            let group: Vec<f64> =
                rows.iter().filter(|r| r.method == s.method && r.round == round).map(|r| r.k_test).collect();
            assert_eq!(y, group.iter().sum::<f64>() / group.len() as f64);
        }
    }
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.atns");
    let out = kspace(&["metrics", "--recon", s(&missing), "--truth", s(&missing)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: reading"));

    assert!(!kspace(&["run", "--bogus"]).status.success());
    assert!(!kspace(&["frobnicate"]).status.success());

    let bad = dir.path().join("bad.atns");
    std::fs::write(&bad, b"XXXX\x01\x00\x02\x00").unwrap();
    let out = kspace(&["metrics", "--recon", s(&bad), "--truth", s(&bad)]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad magic"));

    let csv = dir.path().join("empty.csv");
    std::fs::write(&csv, "trial,round,method,observed_count,sampling_ratio,k_test,ser_db,psnr_db,wall_ms\n").unwrap();
    let out = kspace(&["plot", "--csv", s(&csv), "--metric", "k_test", "--out", s(&dir.path().join("x.svg"))]);
    assert!(!out.status.success());
    let out = kspace(&["plot", "--csv", s(&csv), "--metric", "mse", "--out", s(&dir.path().join("x.svg"))]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown metric"));
}
