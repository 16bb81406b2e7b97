//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qam_onn::datasets::{load_image_dataset, DatasetName, Split};
use qam_onn::energy::{client_activation_energy, Variant};
use qam_onn::harness::{
    cell_means, emit_energy_table, read_energy_table, run_equivalence_sweep, run_noise_grid, CellMean,
    ExperimentConfig,
};
use qam_onn::network::{NetworkSpec, NetworkState, Params, Scalar, ValueKind};
use qam_onn::photonics::{
    four_engine_product, iq_inner_product, mixer_photocurrents, rolled_real_inner_product, two_mixer_product,
    NoiseSource, PhaseShift,
};
use qam_onn::quant::Constellation;
use qam_onn::training::{qat_forward_backward, Inputs, LabeledData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const ORACLE_REL_TOL: f64 = 1e-9;
const UNITARITY_TOL: f64 = 1e-12;
const ROLLED_REL_TOL: f64 = 1e-9;
const GRADIENT_REL_TOL: f64 = 1e-5;
/// Gradients smaller than this are compared on an absolute scale.
const GRADIENT_FLOOR: f64 = 1e-3;
const FD_STEP: f64 = 1e-6;
const ANCHOR_DROP_PP: f64 = 0.5;
const MONOTONE_SLACK_PP: f64 = 1.0;
const REGION_DROP_PP: f64 = 5.0;
const RF_BASELINE_ACCURACY: f64 = 0.90;
const HARDWARE_GAIN_PP: f64 = 2.0;
const LEVEL_FLOOR_PP: f64 = -1.0;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn mnist_dir() -> PathBuf {
    repo_root().join("data/mnist-subset")
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

fn digital_dot(w: &[Complex64], x: &[Complex64]) -> Complex64 {
    w.iter().zip(x).map(|(a, b)| a * b.conj()).sum()
}

fn optical_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for case in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let n = rng.random_range(1..=64);
        let w: Vec<_> = (0..n).map(|_| gaussian(&mut rng)).collect();
        let x: Vec<_> = (0..n).map(|_| gaussian(&mut rng)).collect();
        let optical = iq_inner_product(&w, &x, None, &mut NoiseSource::noiseless()).unwrap();
        let digital = digital_dot(&w, &x);
        worst = worst.max((optical - digital).norm() / digital.norm());
    }
    let mut scalar_gap: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1000 {
        let (w, x) = (gaussian(&mut rng), gaussian(&mut rng));
        let iq = iq_inner_product(&[w], &[x], None, &mut NoiseSource::noiseless()).unwrap();
        let (two, steps) = two_mixer_product(w, x);
        assert_eq!(steps, 2);
        scalar_gap = scalar_gap
            .max((four_engine_product(w, x) - iq).norm())
            .max((two - iq).norm());
    }
    Outcome::new(
        worst <= ORACLE_REL_TOL && scalar_gap <= ORACLE_REL_TOL,
        format!("max rel err {worst:.2e}, scalar engines max gap {scalar_gap:.2e}"),
    )
}

fn photocurrent_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut unitarity: f64 = 0.0;
    let (mut sum_re, mut sum_im) = (0.0, 0.0);
    let (w, x): (Vec<_>, Vec<_>) = (0..100).map(|_| (gaussian(&mut rng), gaussian(&mut rng))).unzip();
    for (&wj, &xj) in w.iter().zip(&x) {
        let power = wj.norm_sqr() + xj.norm_sqr();
        for shift in [PhaseShift::Zero, PhaseShift::HalfPi] {
            let p = mixer_photocurrents(wj, xj, shift);
            unitarity = unitarity.max((p.total() - power).abs());
        }
        sum_re += mixer_photocurrents(wj, xj, PhaseShift::Zero).balanced();
        sum_im += mixer_photocurrents(wj, xj, PhaseShift::HalfPi).balanced();
    }
    // zero path: 2 Re(w . x*); pi/2 path: -2 Im(w . x*)
    let dot = digital_dot(&w, &x);
    let path_err = (sum_re - 2.0 * dot.re).abs().max((sum_im + 2.0 * dot.im).abs());
    let path_tol = 1e-12 * w.iter().zip(&x).map(|(a, b)| 2.0 * a.norm() * b.norm()).sum::<f64>();
    Outcome::new(
        unitarity <= UNITARITY_TOL && path_err <= path_tol,
        format!("unitarity max err {unitarity:.2e}, balanced-sum err {path_err:.2e}"),
    )
}

fn rolling_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut steps_ok = true;
    for n in 1..=65usize {
        let a: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let direct: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
        let (value, steps) = rolled_real_inner_product(&a, &b, &mut NoiseSource::noiseless()).unwrap();
        let scale = a.iter().zip(&b).map(|(p, q)| (p * q).abs()).sum::<f64>();
        worst = worst.max((value - direct).abs() / scale);
        steps_ok &= steps == n.div_ceil(2);
    }
    Outcome::new(
        worst <= ROLLED_REL_TOL && steps_ok,
        format!("max rel err {worst:.2e}, timesteps = ceil(n/2): {steps_ok}"),
    )
}

fn table_reproduction() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("energy.csv");
    let levels = [4u64, 16, 64, 256];
    emit_energy_table(&levels, (7, 16, 10), &path).unwrap();
    let rows = read_energy_table(&path).unwrap();
    let real_values = 49 * 16 + 16 + 16 * 10 + 10;
    let mut mismatches = Vec::new();
    for (i, &n) in levels.iter().enumerate() {
        let side = (1..=n).find(|s| s * s == n).unwrap();
        let half_sq = |l: u64| ((l - 1) as f64 / 2.0).powi(2);
        let target = 2.0 * half_sq(side);
        let energy_levels = (2..).find(|&l| half_sq(l) >= target).unwrap();
        let expected = [
            (Variant::QamNet, n, (n as f64).log2() / 2.0, 2 * real_values, half_sq(side)),
            (Variant::LevelEq1D, n, (n as f64).log2(), real_values, half_sq(n)),
            (Variant::HardwareEq1D, side, (n as f64).log2() / 2.0, real_values, half_sq(side)),
            (Variant::EnergyEq1D, energy_levels, (energy_levels as f64).log2(), real_values, target),
        ];
        for (j, e) in expected.iter().enumerate() {
            let r = &rows[4 * i + j];
            let got = (r.variant, r.total_levels, r.bits_per_value, r.weight_values, r.energy_per_value);
            if got != *e {
                mismatches.push(format!("N={n} {}", e.0));
            }
        }
    }
    let n16: Vec<_> = rows[4..8].iter().map(|r| r.energy_per_value).collect();
    let n16_ok = n16 == [2.25, 56.25, 2.25, 4.5] && rows[7].total_levels == 6;
    Outcome::new(
        mismatches.is_empty() && n16_ok,
        format!("N=16 energies {n16:?}, EnergyEq1D levels {}; mismatches {mismatches:?}", rows[7].total_levels),
    )
}

fn activation_energy() -> Outcome {
    let one_d = client_activation_energy(&[49, 16, 10], 16, ValueKind::Real).unwrap();
    let qam = client_activation_energy(&[49, 16, 10], 16, ValueKind::Complex).unwrap();
    Outcome::new(
        one_d == 3656.25 && qam == 292.5,
        format!("1D {one_d} Δ², QAMNet {qam} Δ²"),
    )
}

fn bump<T: Scalar>(values: &mut [T], j: usize, axis: usize, d: f64) {
    values[j] = values[j].with_axis(axis, values[j].axis(axis) + d);
}

/// Worst `|fd - analytic| / max(|analytic|, floor)` over every parameter.
fn gradient_gap(state: &NetworkState, data: &LabeledData, batch: &[usize]) -> (f64, usize) {
    let fp = Constellation::FullPrecision;
    let (_, grads) = qat_forward_backward(state, data, batch, &fp).unwrap();
    let loss = |s: &NetworkState| qat_forward_backward(s, data, batch, &fp).unwrap().0;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut compare = |fd: f64, an: f64| {
        worst = worst.max((fd - an).abs() / an.abs().max(GRADIENT_FLOOR));
        checked += 1;
    };
    let fd = |edit: &dyn Fn(&mut NetworkState, f64)| {
        let (mut up, mut down) = (state.clone(), state.clone());
        edit(&mut up, FD_STEP);
        edit(&mut down, -FD_STEP);
        (loss(&up) - loss(&down)) / (2.0 * FD_STEP)
    };
    let layers = match &state.params {
        Params::Complex(l) => l.iter().map(|l| (l.weights.len(), l.biases.len())).collect::<Vec<_>>(),
        Params::Real(l) => l.iter().map(|l| (l.weights.len(), l.biases.len())).collect(),
    };
    let axes = match state.spec.value_kind {
        ValueKind::Complex => 2,
        ValueKind::Real => 1,
    };
    for (li, &(nw, nb)) in layers.iter().enumerate() {
        for (is_bias, count) in [(false, nw), (true, nb)] {
            for j in 0..count {
                for axis in 0..axes {
                    let numeric = fd(&|s: &mut NetworkState, d: f64| match &mut s.params {
                        Params::Complex(l) if is_bias => bump(&mut l[li].biases, j, axis, d),
                        Params::Complex(l) => bump(&mut l[li].weights, j, axis, d),
                        Params::Real(l) if is_bias => bump(&mut l[li].biases, j, axis, d),
                        Params::Real(l) => bump(&mut l[li].weights, j, axis, d),
                    });
                    let analytic = match &grads.layers {
                        Params::Complex(g) if is_bias => g[li].biases[j].axis(axis),
                        Params::Complex(g) => g[li].weights[j].axis(axis),
                        Params::Real(g) if is_bias => g[li].biases[j].axis(axis),
                        Params::Real(g) => g[li].weights[j].axis(axis),
                    };
                    compare(numeric, analytic);
                }
            }
        }
    }
    if let Some(table) = &grads.embedding {
        for (row, g) in table.iter().enumerate() {
            for axis in 0..2 {
                let numeric = fd(&|s: &mut NetworkState, d: f64| {
                    bump(&mut s.embedding.as_mut().unwrap().table, row, axis, d)
                });
                compare(numeric, g.axis(axis));
            }
        }
    }
    (worst, checked)
}

fn gradient_acceptance() -> Outcome {
    let mut images = load_image_dataset(mnist_dir(), Split::Train, DatasetName::Mnist).unwrap();
    images.truncate(32);
    let pixels = LabeledData::from_images(&images);
    let real = LabeledData::new(
        Inputs::Real(images.images.iter().map(|i| i.iter().map(|&p| f64::from(p) / 255.0).collect()).collect()),
        pixels.labels.clone(),
        10,
    )
    .unwrap();
    let batch: Vec<usize> = (0..32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let complex_net = NetworkState::init(NetworkSpec::complex(vec![49, 4, 10], true).unwrap(), &mut rng).unwrap();
    let real_net = NetworkState::init(NetworkSpec::real(vec![49, 4, 10]).unwrap(), &mut rng).unwrap();
    let (c_gap, c_n) = gradient_gap(&complex_net, &pixels, &batch);
    let (r_gap, r_n) = gradient_gap(&real_net, &real, &batch);
    Outcome::new(
        c_gap <= GRADIENT_REL_TOL && r_gap <= GRADIENT_REL_TOL,
        format!("complex max rel err {c_gap:.2e} over {c_n} params, real {r_gap:.2e} over {r_n}"),
    )
}

fn cell<'a>(means: &'a [CellMean], variant: &str, levels: u64) -> &'a CellMean {
    means
        .iter()
        .find(|m| m.variant == variant && m.total_levels == Some(levels))
        .unwrap_or_else(|| panic!("missing cell {variant} {levels}"))
}

fn noise_grid() -> (Outcome, Outcome) {
    let config = ExperimentConfig::load(repo_root().join("configs/noise_grid_rf.toml")).unwrap();
    let out = run_noise_grid(&config).unwrap();
    let means = cell_means(&out.records);
    let pp = |m: &CellMean| 100.0 * m.mean_drop;

    let anchor = means
        .iter()
        .find(|m| m.side == Some(1024) && m.snr_db == Some(f64::INFINITY))
        .expect("side 1024 at infinite SNR is in the grid");
    let mut monotone_violations = Vec::new();
    for &side in &config.grid.sides {
        let mut row: Vec<&CellMean> = means.iter().filter(|m| m.side == Some(side)).collect();
        row.sort_by(|a, b| a.snr_db.unwrap().total_cmp(&b.snr_db.unwrap()));
        for w in row.windows(2) {
            if pp(w[1]) > pp(w[0]) + MONOTONE_SLACK_PP {
                monotone_violations.push(format!("side {side} at {} dB", w[1].snr_db.unwrap()));
            }
        }
    }
    let region_worst = means
        .iter()
        .filter(|m| m.side.unwrap() >= 32 && m.snr_db.unwrap() >= 20.0)
        .map(pp)
        .fold(f64::NEG_INFINITY, f64::max);
    let grid = Outcome::new(
        pp(anchor) <= ANCHOR_DROP_PP && monotone_violations.is_empty() && region_worst <= REGION_DROP_PP,
        format!(
            "(a) drop {:.2} pp at side 1024/inf, (b) monotonicity violations {monotone_violations:?}, \
             (c) worst drop {region_worst:.2} pp for side >= 32, SNR >= 20 dB",
            pp(anchor)
        ),
    );
    let baseline = Outcome::new(
        out.digital_accuracy >= RF_BASELINE_ACCURACY,
        format!("digital accuracy {:.4} on k=4, T=32, 20 dB, h=32", out.digital_accuracy),
    );
    (grid, baseline)
}

fn equivalence_sweeps() -> Outcome {
    let with_data = |file: &str, levels: Vec<u64>| {
        let mut c = ExperimentConfig::load(repo_root().join("configs").join(file)).unwrap();
        if let Some(qam_onn::training::DatasetRef::Images { dir, .. }) = &mut c.dataset {
            *dir = mnist_dir();
        }
        c.grid.levels = levels;
        c.grid.hidden_sizes = vec![16];
        c.seeds = 3;
        c
    };
    let hardware = cell_means(&run_equivalence_sweep(&with_data("hardware_eq_mnist.toml", vec![16])).unwrap());
    let gain = 100.0 * (cell(&hardware, "QAMNet", 16).mean_accuracy - cell(&hardware, "HardwareEq1D", 4).mean_accuracy);
    let level = cell_means(&run_equivalence_sweep(&with_data("level_eq_mnist.toml", vec![64, 256])).unwrap());
    let level_gaps: Vec<f64> = [64u64, 256]
        .iter()
        .map(|&n| 100.0 * (cell(&level, "QAMNet", n).mean_accuracy - cell(&level, "LevelEq1D", n).mean_accuracy))
        .collect();
    Outcome::new(
        gain >= HARDWARE_GAIN_PP && level_gaps.iter().all(|&g| g >= LEVEL_FLOOR_PP),
        format!(
            "hardware N=16: QAMNet {:.4} vs 1D {:.4} ({gain:+.2} pp); level N=64, 256: {:+.2} pp, {:+.2} pp",
            cell(&hardware, "QAMNet", 16).mean_accuracy,
            cell(&hardware, "HardwareEq1D", 4).mean_accuracy,
            level_gaps[0],
            level_gaps[1]
        ),
    )
}

fn cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_qam-onn")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "qam-onn {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mnist = mnist_dir().display().to_string();
    let noise_cfg = d.join("noise.toml");
    std::fs::write(
        &noise_cfg,
        r#"version = 1
kind = "noise_grid"
master_seed = 5
seeds = 2
[dataset]
source = "rf"
classes = 4
train_per_class = 60
test_per_class = 30
snr_db = 20
seed = 1
[training]
epochs = 3
[grid]
sides = [4, 32]
snr_db = [10, inf]
[noise_grid]
calibration_size = 64
"#,
    )
    .unwrap();
    let sweep_cfg = d.join("sweep.toml");
    std::fs::write(
        &sweep_cfg,
        format!(
            r#"version = 1
kind = "hardware_eq"
master_seed = 5
seeds = 2
[dataset]
source = "images"
dir = "{mnist}"
name = "mnist"
train_limit = 300
test_limit = 100
[training]
epochs = 2
[grid]
levels = [16]
hidden_sizes = [8]
"#
        ),
    )
    .unwrap();
    let train_cfg = d.join("train.toml");
    std::fs::write(
        &train_cfg,
        format!(
            r#"version = 1
[train]
value_kind = "complex"
hidden_sizes = [8]
constellation = {{ kind = "qam", side = 4 }}
epochs = 2
seed = 9
[train.dataset]
source = "images"
dir = "{mnist}"
name = "mnist"
train_limit = 300
test_limit = 100
"#
        ),
    )
    .unwrap();

    let mut identical = Vec::new();
    let run = |tag: &str| -> Vec<PathBuf> {
        let p = |name: &str| d.join(format!("{tag}-{name}"));
        let s = |q: &Path| q.display().to_string();
        let paths = [p("energy.csv"), p("rf.csv"), p("noise.csv"), p("sweep.csv"), p("net.json")];
        cli(&["energy-table", "--out", &s(&paths[0])]);
        cli(&["rf-gen", "--per-class", "20", "--seed", "4", "--out", &s(&paths[1])]);
        cli(&["noise-grid", "--config", &s(&noise_cfg), "--out", &s(&paths[2])]);
        cli(&["equiv-sweep", "--config", &s(&sweep_cfg), "--out", &s(&paths[3])]);
        cli(&["train", "--config", &s(&train_cfg), "--out", &s(&paths[4])]);
        let mut all = paths.to_vec();
        all.push(p("noise.boundary.json"));
        all.push(p("net.history.csv"));
        all
    };
    let first = run("a");
    let second = run("b");
    for (a, b) in first.iter().zip(&second) {
        let same = std::fs::read(a).unwrap() == std::fs::read(b).unwrap();
        identical.push((a.file_name().unwrap().to_string_lossy()[2..].to_string(), same));
    }
    Outcome::new(
        identical.iter().all(|(_, same)| *same),
        format!(
            "byte-identical: {}",
            identical
                .iter()
                .map(|(n, s)| format!("{n}={s}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn with_limit(o: Outcome, elapsed: Duration, limit: Option<Duration>) -> Outcome {
    let within = limit.is_none_or(|l| elapsed <= l);
    let budget = limit.map_or(String::new(), |l| format!(" (limit {}s)", l.as_secs()));
    Outcome::new(
        o.pass && within,
        format!("{}; {:.1}s{budget}", o.detail, elapsed.as_secs_f64()),
    )
}

fn main() -> ExitCode {
    let secs = |s: u64| Some(Duration::from_secs(s));
    let mut results: Vec<(String, Outcome)> = Vec::new();
    let mut record = |label: &str, o: Outcome, elapsed: Duration, limit: Option<Duration>| {
        let o = with_limit(o, elapsed, limit);
        println!("{} {label}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((label.to_string(), o));
    };

    let (o, t) = timed(optical_oracle);
    record("1 optical oracle equivalence", o, t, secs(5));
    let (o, t) = timed(photocurrent_check);
    record("2 photocurrent unitarity and balanced sums", o, t, None);
    let (o, t) = timed(rolling_check);
    record("3 rolled real inner product", o, t, None);
    let (o, t) = timed(table_reproduction);
    record("4 equivalence table", o, t, None);
    let (o, t) = timed(activation_energy);
    record("5 client activation energy", o, t, None);
    let (o, t) = timed(gradient_acceptance);
    record("6 gradients vs finite differences", o, t, secs(30));
    let ((grid, baseline), t) = timed(noise_grid);
    record("7 noise grid on synthetic RF", grid, t, secs(15 * 60));
    record("  RF digital baseline", baseline, t, None);
    let (o, t) = timed(equivalence_sweeps);
    record("8 equivalence sweeps on 7x7 MNIST", o, t, secs(30 * 60));
    let (o, t) = timed(determinism);
    record("9 determinism of CLI outputs", o, t, None);

    let failed: Vec<_> = results.iter().filter(|(_, o)| !o.pass).map(|(l, _)| l.trim()).collect();
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {failed:?}");
        ExitCode::FAILURE
    }
}
