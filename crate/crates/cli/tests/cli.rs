use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spinchain_core::{
    BandEntry, BandMap, Chain, DeviceBands, DeviceParams, Network, ProgrammingTable, TableEntry,
};
use tempfile::TempDir;

fn spinchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinchain"))
        .args(args)
        .output()
        .expect("spawn spinchain")
}

fn stderr_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).trim().to_string()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn device(id: u32, f_center: f64, split: f64) -> DeviceParams {
    DeviceParams {
        id,
        diameter: 500.0,
        f_center,
        polarity_split: split,
        linewidth: 8.0,
        responsivity: 120.0,
        asym: 0.2,
        sign: 1.0,
        band_width: 10.0,
        p_threshold: 3.0,
    }
}

fn write_chain(dir: &Path, name: &str, devices: Vec<DeviceParams>) -> String {
    let chain = Chain::new(name, devices);
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, chain.to_json().unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn json_without_timestamp(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn preset_writes_chains_and_network() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("preset");
    let out = spinchain(&["preset", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));

    let chain = Chain::from_json(
        "a",
        &fs::read_to_string(out_dir.join("chain_a.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(chain.len(), 11);
    let net =
        Network::from_json(&fs::read_to_string(out_dir.join("network.json")).unwrap()).unwrap();
    assert_eq!(net.chain1.len(), 11);
    assert!(out_dir.join("manifest.json").exists());
}

#[test]
fn calibrate_preset_reproduces_nominal_table() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("cal");
    let out = spinchain(&[
        "calibrate",
        "--chain",
        "preset:a",
        "--seed",
        "9",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));

    let table: ProgrammingTable =
        serde_json::from_str(&fs::read_to_string(out_dir.join("table.json")).unwrap()).unwrap();
    let nominal = ProgrammingTable::nominal(&spinchain_core::chain_a()).unwrap();
    assert_eq!(table.entries.len(), nominal.entries.len());
    for (got, want) in table.entries.iter().zip(&nominal.entries) {
        assert!((got.freq_up_to_down - want.freq_up_to_down).abs() <= 2.0);
        assert!((got.freq_down_to_up - want.freq_down_to_up).abs() <= 2.0);
        assert_eq!(got.power, want.power);
    }
    assert!(out_dir.join("raw_down.csv").exists());
    assert!(out_dir.join("raw_up.csv").exists());
}

#[test]
fn calibrate_fails_on_unresolvable_chain() {
    let tmp = TempDir::new().unwrap();
    // Two identical devices share both switching bands, so band extraction
    // cannot resolve two separate devices.
    let chain = write_chain(
        tmp.path(),
        "twins",
        vec![device(1, 300.0, 24.0), device(2, 300.0, 24.0)],
    );
    let out_dir = tmp.path().join("cal");
    let out = spinchain(&[
        "calibrate",
        "--chain",
        &chain,
        "--seed",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4, "{}", stderr_line(&out));
    assert!(stderr_line(&out).starts_with("error: calibration:"));
    // Raw sweep data still lands on disk for inspection.
    assert!(out_dir.join("raw_down.csv").exists());
    assert!(!out_dir.join("manifest.json").exists());
}

#[test]
fn program_rejects_bad_target_characters() {
    let tmp = TempDir::new().unwrap();
    let out = spinchain(&[
        "program",
        "--chain",
        "preset:a",
        "--target",
        "10x10011010",
        "--seed",
        "3",
        "--out",
        tmp.path().join("p").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let err = stderr_line(&out);
    assert!(err.starts_with("error: usage:"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn program_reaches_target_and_writes_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("prog");
    let out = spinchain(&[
        "program",
        "--chain",
        "preset:b",
        "--target",
        "01101001101",
        "--init",
        "11111111111",
        "--seed",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("result.json")).unwrap()).unwrap();
    assert_eq!(result["verified"], serde_json::Value::Bool(true));
    assert_eq!(result["final_state"], "01101001101");
    assert_eq!(result["readout"], "01101001101");
    assert!(out_dir.join("sequence.json").exists());
}

#[test]
fn sweep_all_programs_every_target_of_a_small_chain() {
    let tmp = TempDir::new().unwrap();
    let chain = write_chain(
        tmp.path(),
        "quad",
        (1..=4).map(|i| device(i, 260.0 + 40.0 * i as f64, 24.0)).collect(),
    );
    let out = spinchain(&[
        "program",
        "--chain",
        &chain,
        "--sweep-all",
        "--seed",
        "11",
        "--out",
        tmp.path().join("sweep").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("16/16 targets programmed successfully"), "{stdout}");
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("sweep/summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["successes"], 16);
    assert_eq!(summary["results"].as_array().unwrap().len(), 16);
}

#[test]
fn entangled_set_bands_are_unreachable() {
    let tmp = TempDir::new().unwrap();
    // Each device's set frequency sits inside the other's set band, so a
    // target with exactly one device Up cannot be written.
    let chain = write_chain(
        tmp.path(),
        "pair",
        vec![device(1, 260.0, 110.0), device(2, 262.0, 110.0)],
    );
    let table = ProgrammingTable {
        entries: vec![
            TableEntry {
                id: 1,
                freq_up_to_down: 205.0,
                freq_down_to_up: 315.0,
                power: 5.0,
            },
            TableEntry {
                id: 2,
                freq_up_to_down: 235.0,
                freq_down_to_up: 317.0,
                power: 5.0,
            },
        ],
    };
    let bands = BandMap {
        devices: vec![
            DeviceBands {
                id: 1,
                up_to_down: BandEntry {
                    f_lo: 200.0,
                    f_hi: 210.0,
                    power: 5.0,
                },
                down_to_up: BandEntry {
                    f_lo: 310.0,
                    f_hi: 320.0,
                    power: 5.0,
                },
            },
            DeviceBands {
                id: 2,
                up_to_down: BandEntry {
                    f_lo: 230.0,
                    f_hi: 240.0,
                    power: 5.0,
                },
                down_to_up: BandEntry {
                    f_lo: 312.0,
                    f_hi: 322.0,
                    power: 5.0,
                },
            },
        ],
    };
    let table_path = tmp.path().join("table.json");
    let bands_path = tmp.path().join("bands.json");
    fs::write(&table_path, serde_json::to_string(&table).unwrap()).unwrap();
    fs::write(&bands_path, serde_json::to_string(&bands).unwrap()).unwrap();

    let out = spinchain(&[
        "program",
        "--chain",
        &chain,
        "--table",
        table_path.to_str().unwrap(),
        "--bandmap",
        bands_path.to_str().unwrap(),
        "--target",
        "10",
        "--seed",
        "1",
        "--out",
        tmp.path().join("p").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 5, "{}", stderr_line(&out));
    assert!(stderr_line(&out).starts_with("error: unreachable:"));
}

#[test]
fn table_without_bandmap_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let table_path = tmp.path().join("table.json");
    fs::write(&table_path, "[]").unwrap();
    let out = spinchain(&[
        "program",
        "--chain",
        "preset:a",
        "--table",
        table_path.to_str().unwrap(),
        "--target",
        "10101010101",
        "--seed",
        "1",
        "--out",
        tmp.path().join("p").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_line(&out).contains("--table and --bandmap together"));
}

#[test]
fn dataset_runs_are_seed_deterministic() {
    let tmp = TempDir::new().unwrap();
    for (dir, seed) in [("a", "5"), ("b", "5"), ("c", "6")] {
        let out = spinchain(&[
            "dataset",
            "--make-synthetic",
            "drones-like",
            "--seed",
            seed,
            "--out",
            tmp.path().join(dir).to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    }
    let a = fs::read(tmp.path().join("a/dataset.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/dataset.csv")).unwrap();
    let c = fs::read(tmp.path().join("c/dataset.csv")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn malformed_dataset_exits_with_parse_code() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "label,f0,f1\n0,0.5,oops\n").unwrap();
    let out = spinchain(&[
        "encode",
        "--dataset",
        bad.to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        tmp.path().join("enc").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr_line(&out).starts_with("error: parse: line 2:"));
}

#[test]
fn encode_places_tones_on_the_grid_endpoints() {
    let tmp = TempDir::new().unwrap();
    let csv = tmp.path().join("tiny.csv");
    fs::write(&csv, "label,f0,f1,f2,f3\n0,0.1,0.9,0.4,0.6\n1,1.0,0.2,0.8,0.3\n").unwrap();
    let out_dir = tmp.path().join("enc");
    let out = spinchain(&[
        "encode",
        "--dataset",
        csv.to_str().unwrap(),
        "--seed",
        "4",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    let waves: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("waveforms.json")).unwrap()).unwrap();
    let waves = waves.as_array().unwrap();
    assert_eq!(waves.len(), 2);
    let tones = waves[0]["waveform"]["tones"].as_array().unwrap();
    assert_eq!(tones.len(), 4);
    assert_eq!(tones[0]["freq_mhz"], 240.0);
    assert_eq!(tones[3]["freq_mhz"], 600.0);
    assert_eq!(waves[1]["label"], 1);
}

fn write_tiny_task(dir: &Path) -> (String, String) {
    let net = Network::with_default_refs(
        Chain::new("c0", vec![device(1, 280.0, 30.0), device(2, 340.0, 30.0)]),
        Chain::new("c1", vec![device(1, 420.0, 30.0), device(2, 500.0, 30.0)]),
    )
    .unwrap();
    let net_path = dir.join("net.json");
    fs::write(&net_path, net.to_json().unwrap()).unwrap();

    let mut csv = String::from("label,f0,f1,f2,f3,f4\n");
    for k in 0..6 {
        let a = 0.6 + 0.05 * k as f64;
        csv.push_str(&format!("0,{a},0.05,0.6,0.05,0.1\n"));
        csv.push_str(&format!("1,0.05,{a},0.05,0.7,0.1\n"));
    }
    let csv_path = dir.join("task.csv");
    fs::write(&csv_path, csv).unwrap();
    (
        net_path.to_string_lossy().into_owned(),
        csv_path.to_string_lossy().into_owned(),
    )
}

#[test]
fn train_then_evaluate_agree_on_the_best_pair() {
    let tmp = TempDir::new().unwrap();
    let (net, csv) = write_tiny_task(tmp.path());
    let train_dir = tmp.path().join("train");
    let out = spinchain(&[
        "train",
        "--dataset",
        &csv,
        "--network",
        &net,
        "--seed",
        "2",
        "--out",
        train_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    let search: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(train_dir.join("search.json")).unwrap()).unwrap();
    assert_eq!(search["pairs_evaluated"], 16);
    let best0 = search["best_cfg0"].as_str().unwrap().to_string();
    let best1 = search["best_cfg1"].as_str().unwrap().to_string();
    let best_acc = search["best_accuracy"].as_f64().unwrap();

    let eval_dir = tmp.path().join("eval");
    let out = spinchain(&[
        "evaluate",
        "--dataset",
        &csv,
        "--network",
        &net,
        "--cfg0",
        &best0,
        "--cfg1",
        &best1,
        "--seed",
        "2",
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    let eval: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(eval_dir.join("evaluation.json")).unwrap())
            .unwrap();
    assert_eq!(eval["accuracy_mean"].as_f64().unwrap(), best_acc);
    assert_eq!(eval["accuracy_std"].as_f64().unwrap(), 0.0);
}

#[test]
fn train_cap_violation_exits_with_usage_code() {
    let tmp = TempDir::new().unwrap();
    let (net, csv) = write_tiny_task(tmp.path());
    let out = spinchain(&[
        "train",
        "--dataset",
        &csv,
        "--network",
        &net,
        "--cap",
        "1",
        "--seed",
        "2",
        "--out",
        tmp.path().join("t").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_line(&out).contains("exceeds the cap"));
}

#[test]
fn greedy_training_is_deterministic_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let (net, csv) = write_tiny_task(tmp.path());
    let mut outputs = Vec::new();
    for (dir, threads) in [("t1", "1"), ("t4", "4")] {
        let out_dir = tmp.path().join(dir);
        let out = Command::new(env!("CARGO_BIN_EXE_spinchain"))
            .env("RAYON_NUM_THREADS", threads)
            .args([
                "train",
                "--dataset",
                &csv,
                "--network",
                &net,
                "--method",
                "greedy",
                "--restarts",
                "8",
                "--seed",
                "7",
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", stderr_line(&out));
        outputs.push(fs::read(out_dir.join("search.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn identical_runs_differ_only_in_manifest_timestamp() {
    let tmp = TempDir::new().unwrap();
    for dir in ["a", "b"] {
        let out = spinchain(&[
            "density-map",
            "--chain",
            "preset:a",
            "--step",
            "5",
            "--out",
            tmp.path().join(dir).to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    }
    let a = fs::read(tmp.path().join("a/density.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/density.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        json_without_timestamp(&tmp.path().join("a/manifest.json")),
        json_without_timestamp(&tmp.path().join("b/manifest.json")),
    );
}

#[test]
fn spectrum_of_the_reference_config_is_flat_zero() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("spectra");
    let out = spinchain(&[
        "spectrum",
        "--chain",
        "preset:a",
        "--config",
        "00000000000",
        "--step",
        "10",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    let csv = fs::read_to_string(out_dir.join("spectrum_00000000000.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let val = line.split(',').nth(1).unwrap();
        assert_eq!(val, "0");
    }
}

#[test]
fn scaling_emits_anchor_row_and_consistency_warning() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("scaling");
    let out = spinchain(&["scaling", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    // The default anchor's power x duration misses its stated energy, which
    // is reported but not fatal.
    assert!(stderr_line(&out).starts_with("warning:"), "{}", stderr_line(&out));

    let csv = fs::read_to_string(out_dir.join("scaling.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 1 + 19);
    let anchor = rows.iter().find(|r| r.starts_with("250,")).unwrap();
    let cols: Vec<&str> = anchor.split(',').collect();
    assert_eq!(cols[1], "-11");
    assert_eq!(cols[2], "50");
    assert_eq!(cols[3], "5");

    let consistent = spinchain(&[
        "scaling",
        "--p-ref-dbm",
        "-10",
        "--out",
        tmp.path().join("s2").to_str().unwrap(),
    ]);
    assert_eq!(code(&consistent), 0);
    assert_eq!(stderr_line(&consistent), "");
}

#[test]
fn stochastic_commands_require_a_seed() {
    let tmp = TempDir::new().unwrap();
    let out = spinchain(&[
        "calibrate",
        "--chain",
        "preset:a",
        "--out",
        tmp.path().join("c").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_line(&out).contains("--seed"));
}

#[test]
fn missing_input_file_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = spinchain(&[
        "train",
        "--dataset",
        tmp.path().join("absent.csv").to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        tmp.path().join("t").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr_line(&out));
    assert!(stderr_line(&out).contains("absent.csv"));
}
