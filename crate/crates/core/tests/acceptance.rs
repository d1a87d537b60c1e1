//! End-to-end acceptance suite.
//!
//! Each test exercises one numbered acceptance criterion of the project —
//! coverage targets, region-size comparisons, multi-qubit scaling, the
//! unknown-visibility failure mode and its clustering repair, geometry
//! invariants, third-party oracle agreement, and bit-level determinism —
//! and prints a single `criterion N: PASS — …` line on success (visible
//! with `cargo test -- --nocapture`).
//!
//! Every experiment here pins a master seed, so the observed coverages and
//! volumes are exact reproducible numbers, not flaky samples: the asserted
//! bounds were chosen against those frozen runs with margin to spare.

use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smcregions::geometry::{chi2_quantile, mvee, PointCloud};
use smcregions::harness::{
    beta_hpd_interval, export_results, run_experiment, CoverageRow, ExperimentConfig,
    ExperimentResult,
};
use smcregions::inference::{bayes_update, init_cloud, Outcome};
use smcregions::models::{Model, PauliControl, Visibility};
use smcregions::regions::RegionKind;

fn run(toml: &str) -> ExperimentResult {
    let cfg = ExperimentConfig::from_toml_str(toml).expect("config parses");
    run_experiment(&cfg).expect("experiment runs")
}

fn row<'a>(result: &'a ExperimentResult, checkpoint: usize, kind: &str) -> &'a CoverageRow {
    result
        .summary
        .rows
        .iter()
        .find(|r| r.checkpoint == checkpoint && r.kind == kind)
        .unwrap_or_else(|| panic!("no summary row for checkpoint {checkpoint} kind {kind}"))
}

/// True when the 95% Beta interval `[lo, hi]` contains `p`, or sits entirely
/// above it.
fn contains_or_exceeds(lo: f64, hi: f64, p: f64) -> bool {
    (lo <= p && p <= hi) || lo > p
}

// ---------------------------------------------------------------------------
// 1. Single-qubit coverage with known visibility.
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_single_qubit_coverage() {
    let started = Instant::now();
    let mut details = Vec::new();
    for eta in [1.0, 0.9] {
        let result = run(&format!(
            r#"
seed = 1001
particles = 5000
measurements = 100
trials = 100
alpha = 0.05
checkpoints = [100]
kinds = ["pce"]

[model]
kind = "qubit"
qubits = 1
visibility = {eta}

[resample]
ess_threshold = 0.1
"#
        ));
        let r = row(&result, 100, "pce");
        assert!(
            (0.89..=0.99).contains(&r.coverage),
            "eta={eta}: PCE coverage {} outside [0.89, 0.99]",
            r.coverage
        );
        assert!(
            r.beta_lo <= 0.95 && 0.95 <= r.beta_hi,
            "eta={eta}: Beta interval [{}, {}] misses 0.95",
            r.beta_lo,
            r.beta_hi
        );
        details.push(format!(
            "eta={eta}: coverage {:.2} in [{:.3}, {:.3}]",
            r.coverage, r.beta_lo, r.beta_hi
        ));
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() <= 300, "runtime {elapsed:?} over 5 minutes");
    println!(
        "criterion 1: PASS — {}; {:.1}s",
        details.join("; "),
        elapsed.as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// 2 & 3. PCE vs MVEE size, and volume contraction, from one shared run.
// ---------------------------------------------------------------------------

fn size_run() -> &'static ExperimentResult {
    static RUN: OnceLock<ExperimentResult> = OnceLock::new();
    RUN.get_or_init(|| {
        run(r#"
seed = 1002
particles = 5000
measurements = 100
trials = 50
alpha = 0.05
checkpoints = [10, 100]
kinds = ["pce", "mvee"]

[model]
kind = "qubit"
qubits = 1
visibility = 1.0

[resample]
ess_threshold = 0.1
"#)
    })
}

/// Volume of the region of `kind` at measurement count `checkpoint`.
fn trial_volume(
    record: &smcregions::harness::TrialRecord,
    checkpoint: usize,
    kind: RegionKind,
) -> f64 {
    record
        .checkpoints
        .iter()
        .find(|cp| cp.measurements == checkpoint)
        .and_then(|cp| cp.regions.iter().find(|r| r.kind == kind))
        .and_then(|r| r.volume)
        .expect("volume recorded")
}

#[test]
fn criterion_2_pce_mvee_size() {
    let result = size_run();
    let trials = result.records.len() as f64;
    let mut rel = 0.0;
    let mut signed = 0.0;
    for rec in &result.records {
        let vp = trial_volume(rec, 100, RegionKind::Pce);
        let vm = trial_volume(rec, 100, RegionKind::Mvee);
        rel += (vp - vm).abs() / vm;
        signed += vp - vm;
    }
    rel /= trials;
    signed /= trials;
    assert!(rel <= 0.35, "mean relative volume gap {rel:.4} over 0.35");
    assert!(signed <= 0.0, "mean signed volume gap {signed:.4} above 0");
    println!(
        "criterion 2: PASS — mean |Vol(PCE)−Vol(MVEE)|/Vol(MVEE) = {rel:.3}, mean signed gap {signed:+.3}"
    );
}

#[test]
fn criterion_3_volume_contraction() {
    let result = size_run();
    let total = result.records.len();
    let contracted = result
        .records
        .iter()
        .filter(|rec| {
            trial_volume(rec, 100, RegionKind::Pce) < trial_volume(rec, 10, RegionKind::Pce)
        })
        .count();
    assert!(
        contracted * 10 >= total * 9,
        "PCE volume contracted in only {contracted}/{total} trials"
    );
    println!("criterion 3: PASS — PCE volume shrank from 10 to 100 measurements in {contracted}/{total} trials");
}

// ---------------------------------------------------------------------------
// 4. Two-qubit coverage plus a three-qubit smoke run.
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_multiqubit_coverage() {
    let started = Instant::now();
    let two = run(r#"
seed = 1084
particles = 10000
measurements = 200
trials = 25
alpha = 0.05
checkpoints = [200]
kinds = ["pce"]

[model]
kind = "qubit"
qubits = 2
visibility = 0.9

[resample]
ess_threshold = 0.2
a = 0.95
"#);
    let r = row(&two, 200, "pce");
    assert!(
        r.beta_lo <= 0.95 && 0.95 <= r.beta_hi,
        "two-qubit Beta interval [{}, {}] misses 0.95",
        r.beta_lo,
        r.beta_hi
    );

    let three = run(r#"
seed = 5005
particles = 10000
measurements = 100
trials = 1
alpha = 0.05
checkpoints = [100]
kinds = ["pce"]

[model]
kind = "qubit"
qubits = 3
visibility = 0.9

[resample]
ess_threshold = 0.2
a = 0.95
"#);
    let rec = &three.records[0];
    let region = rec.checkpoints.last().unwrap().regions.first().unwrap();
    assert!(
        region.contains_truth,
        "three-qubit truth escaped the 95% PCE"
    );

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() <= 900,
        "runtime {elapsed:?} over 15 minutes"
    );
    println!(
        "criterion 4: PASS — two-qubit coverage {:.2} in [{:.3}, {:.3}]; three-qubit truth contained; {:.1}s",
        r.coverage,
        r.beta_lo,
        r.beta_hi,
        elapsed.as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// 5. Unknown visibility: narrow prior works, wide prior degrades the PCE
//    while the clustered region repairs coverage, and a pinned run shows a
//    multi-modal cloud splitting into several clusters.
// ---------------------------------------------------------------------------

#[test]
fn criterion_5a_narrow_visibility_prior() {
    let result = run(r#"
seed = 1006
particles = 5000
measurements = 1000
trials = 50
alpha = 0.05
checkpoints = [1000]
kinds = ["pce"]

[model]
kind = "diagonal"
visibility_interval = [0.9, 1.0]

[resample]
ess_threshold = 0.1
"#);
    let r = row(&result, 1000, "pce");
    assert!(
        r.beta_lo <= 0.95 && 0.95 <= r.beta_hi,
        "joint PCE Beta interval [{}, {}] misses 0.95",
        r.beta_lo,
        r.beta_hi
    );
    println!(
        "criterion 5a: PASS — joint PCE coverage {:.2} in [{:.3}, {:.3}] with eta prior U[0.9, 1.0]",
        r.coverage, r.beta_lo, r.beta_hi
    );
}

/// Wide-prior run shared by criteria 5b and 8: a small, frequently resampled
/// cloud in the regime where the joint posterior rides the curve
/// `eta·(2p−1) = const` and the single-ellipsoid Gaussian summary fails.
const WIDE_PRIOR_TOML: &str = r#"
seed = 10007
particles = 1000
measurements = 1000
trials = 50
alpha = 0.05
checkpoints = [1000]
kinds = ["pce", "clustered"]

[model]
kind = "diagonal"
visibility_interval = [0.5, 1.0]

[resample]
ess_threshold = 0.9

[mvee]
tolerance = 1e-4

[dbscan]
eps = 0.02
"#;

#[test]
fn criterion_5b_wide_prior_degradation_and_repair() {
    let result = run(WIDE_PRIOR_TOML);
    let pce = row(&result, 1000, "pce");
    let clustered = row(&result, 1000, "clustered");
    assert!(
        pce.coverage < 0.90,
        "joint PCE coverage {} did not degrade below 0.90",
        pce.coverage
    );
    assert!(
        contains_or_exceeds(clustered.beta_lo, clustered.beta_hi, 0.95),
        "clustered Beta interval [{}, {}] below 0.95",
        clustered.beta_lo,
        clustered.beta_hi
    );
    println!(
        "criterion 5b: PASS — PCE coverage {:.2} < 0.90; clustered coverage {:.2} in [{:.3}, {:.3}]",
        pce.coverage, clustered.coverage, clustered.beta_lo, clustered.beta_hi
    );
}

#[test]
fn criterion_5c_bimodal_instance_clusters() {
    let result = run(r#"
seed = 20017
particles = 1000
measurements = 1000
trials = 1
alpha = 0.05
checkpoints = [1000]
kinds = ["mvee", "clustered"]

[model]
kind = "diagonal"
visibility_interval = [0.5, 1.0]

[resample]
ess_threshold = 0.9

[mvee]
tolerance = 1e-4

[dbscan]
eps = 0.02
"#);
    let checkpoint = result.records[0].checkpoints.last().unwrap();
    let clustered = checkpoint
        .regions
        .iter()
        .find(|r| r.kind == RegionKind::Clustered)
        .unwrap();
    let single = checkpoint
        .regions
        .iter()
        .find(|r| r.kind == RegionKind::Mvee)
        .unwrap();
    assert!(
        clustered.components.len() >= 2,
        "expected at least 2 clusters, got {}",
        clustered.components.len()
    );
    let (vc, vs) = (clustered.volume.unwrap(), single.volume.unwrap());
    assert!(
        vc < vs,
        "component volume sum {vc} not below the single enclosing ellipsoid volume {vs}"
    );
    println!(
        "criterion 5c: PASS — {} clusters; component volume sum {:.4} < single MVEE volume {:.4}",
        clustered.components.len(),
        vc,
        vs
    );
}

// ---------------------------------------------------------------------------
// 6. Geometry property suite.
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_geometry_properties() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    for &d in &[2usize, 3, 10] {
        for instance in 0..200 {
            let m = rng.random_range(d + 2..=40);
            let scale: Vec<f64> = (0..d)
                .map(|_| 10f64.powf(rng.random_range(-1.0..1.0)))
                .collect();
            let pts = DMatrix::from_fn(m, d, |_, j| {
                let g: f64 = rng.sample(rand_distr::StandardNormal);
                g * scale[j] + 3.0
            });
            let e = mvee(&PointCloud::new(pts.clone()).unwrap(), 1e-6).unwrap();

            // Containment of every input point, and an optimality witness:
            // a minimum-volume ellipsoid must be supported by at least d+1
            // points on (numerically, near) its boundary.
            let mut touching = 0;
            for i in 0..m {
                let x = DVector::from_fn(d, |j, _| pts[(i, j)]);
                assert!(
                    e.contains(&x).unwrap(),
                    "d={d} instance {instance}: input point escaped its MVEE"
                );
                if e.quadratic_form(&x) >= 1.0 - 1e-3 {
                    touching += 1;
                }
            }
            assert!(
                touching > d,
                "d={d} instance {instance}: only {touching} support points"
            );

            // Affine equivariance: mapping the points through a
            // well-conditioned x ↦ Ax + b must map the ellipsoid the same
            // way (center A·c + b, shape A·S·Aᵀ).
            let a = loop {
                let cand = DMatrix::from_fn(d, d, |_, _| {
                    let g: f64 = rng.sample(rand_distr::StandardNormal);
                    g
                });
                let sv = cand.clone().svd(false, false).singular_values;
                if sv.min() > 0.05 * sv.max() {
                    break cand;
                }
            };
            let b = DVector::from_fn(d, |_, _| rng.random_range(-5.0..5.0));
            let mapped = DMatrix::from_fn(m, d, |i, j| {
                let mut acc = b[j];
                for k in 0..d {
                    acc += a[(j, k)] * pts[(i, k)];
                }
                acc
            });
            let e2 = mvee(&PointCloud::new(mapped).unwrap(), 1e-6).unwrap();
            let c_map = &a * e.center() + &b;
            let s_map = &a * e.shape() * a.transpose();
            let center_dev = (e2.center() - &c_map).norm() / s_map.trace().sqrt();
            let shape_dev = (e2.shape() - &s_map).norm() / s_map.norm();
            assert!(
                center_dev < 1e-4 && shape_dev < 1e-4,
                "d={d} instance {instance}: affine equivariance broke \
                 (center dev {center_dev:.2e}, shape dev {shape_dev:.2e})"
            );
        }
    }

    // Rectangle corners (±a, ±b): the exact MVEE is centered at the origin
    // with shape diag(2a², 2b²).
    let (a, b) = (1.7f64, 0.4f64);
    let corners = DMatrix::from_row_slice(4, 2, &[a, b, a, -b, -a, b, -a, -b]);
    let e = mvee(&PointCloud::new(corners).unwrap(), 1e-9).unwrap();
    assert!(e.center().norm() < 1e-6, "rectangle MVEE drifted off-center");
    assert!(
        (e.shape()[(0, 0)] - 2.0 * a * a).abs() < 1e-4
            && (e.shape()[(1, 1)] - 2.0 * b * b).abs() < 1e-4
            && e.shape()[(0, 1)].abs() < 1e-4,
        "rectangle MVEE shape {:?} differs from diag({}, {})",
        e.shape(),
        2.0 * a * a,
        2.0 * b * b
    );

    // Dense samples of the unit sphere: the MVEE must approximate the unit
    // ball itself to within 2% in volume.
    let mut pts = DMatrix::zeros(2000, 3);
    for i in 0..2000 {
        let mut v = [0.0f64; 3];
        let mut norm = 0.0;
        while norm < 1e-6 {
            for x in v.iter_mut() {
                *x = rng.sample(rand_distr::StandardNormal);
            }
            norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        }
        for j in 0..3 {
            pts[(i, j)] = v[j] / norm;
        }
    }
    let e = mvee(&PointCloud::new(pts).unwrap(), 1e-6).unwrap();
    let ball = 4.0 * std::f64::consts::PI / 3.0;
    let ratio = e.volume().unwrap() / ball;
    assert!(
        (ratio - 1.0).abs() < 0.02,
        "sphere MVEE volume ratio {ratio} off the unit ball by more than 2%"
    );

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() <= 120,
        "runtime {elapsed:?} over 2 minutes"
    );
    println!(
        "criterion 6: PASS — 200 instances in each of d=2,3,10; rectangle and sphere oracles matched; {:.1}s",
        elapsed.as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// 7. Agreement with independent oracles.
// ---------------------------------------------------------------------------

/// Composite Simpson integral of `f` over `[a, b]`.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * k as f64);
    }
    acc * h / 3.0
}

#[test]
fn criterion_7_oracle_equivalences() {
    // (i) SMC posterior mean against the conjugate Beta posterior: for the
    // diagonal model with eta = 1, s plus outcomes in t Z measurements give
    // the exact posterior Beta(s+1, t−s+1). The weighted particle mean must
    // agree within 3 of its own Monte Carlo standard errors, for each of 20
    // independently seeded runs.
    let model = Model::diagonal(Visibility::Known(1.0)).unwrap();
    let control = PauliControl::new(3).unwrap();
    let mut worst_z = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + seed);
        let truth = [rng.random::<f64>()];
        let mut cloud = init_cloud(&model, 20_000, &mut rng).unwrap();
        let t = 20;
        let mut s = 0u32;
        for _ in 0..t {
            let datum = model.simulate_outcome(&truth, control, &mut rng).unwrap();
            if datum.outcome == Outcome::Plus {
                s += 1;
            }
            cloud = bayes_update(&cloud, &model, &datum).unwrap();
        }
        let (alpha, beta) = (f64::from(s) + 1.0, f64::from(t - s) + 1.0);
        let exact_mean = alpha / (alpha + beta);
        let exact_var = alpha * beta / ((alpha + beta).powi(2) * (alpha + beta + 1.0));
        let se = (exact_var / cloud.effective_sample_size()).sqrt();
        let z = (cloud.posterior_mean()[0] - exact_mean).abs() / se;
        worst_z = worst_z.max(z);
        assert!(
            z <= 3.0,
            "seed {seed}: particle mean off the Beta mean by {z:.2} standard errors"
        );
    }

    // (ii) Chi-square quantiles against values frozen from an independent
    // CDF-inversion implementation.
    let chi2_oracle = [
        (0.9, 1, 2.7055434540954),
        (0.95, 1, 3.84145882069412),
        (0.99, 1, 6.63489660102121),
        (0.9, 3, 6.25138863117033),
        (0.95, 3, 7.81472790325118),
        (0.99, 3, 11.3448667301444),
        (0.9, 15, 22.3071295815787),
        (0.95, 15, 24.9957901397286),
        (0.99, 15, 30.5779141668925),
        (0.9, 63, 77.7453848356949),
        (0.95, 63, 82.5287265414718),
        (0.99, 63, 92.0100236141321),
    ];
    let mut worst_chi2 = 0.0f64;
    for (p, dof, expect) in chi2_oracle {
        let got = chi2_quantile(p, dof).unwrap();
        worst_chi2 = worst_chi2.max((got - expect).abs());
        assert!(
            (got - expect).abs() <= 1e-6,
            "chi2_quantile({p}, {dof}) = {got}, oracle {expect}"
        );
    }

    // (iii) Beta highest-density intervals must enclose exactly their stated
    // mass, checked by direct numerical integration of the (unnormalized)
    // density x^s (1−x)^(t−s).
    let mut worst_mass = 0.0f64;
    for (s, t, mass) in [
        (46usize, 50usize, 0.95),
        (9, 10, 0.90),
        (0, 20, 0.95),
        (20, 20, 0.95),
        (12, 40, 0.99),
    ] {
        let (lo, hi) = beta_hpd_interval(s, t, mass).unwrap();
        let pdf = |x: f64| x.powi(s as i32) * (1.0 - x).powi((t - s) as i32);
        let total = simpson(pdf, 0.0, 1.0, 20_000);
        let inside = simpson(pdf, lo, hi, 20_000);
        let err = (inside / total - mass).abs();
        worst_mass = worst_mass.max(err);
        assert!(
            err <= 1e-6,
            "beta_hpd_interval({s}, {t}, {mass}) = [{lo}, {hi}] encloses {} (err {err:.2e})",
            inside / total
        );
    }

    println!(
        "criterion 7: PASS — worst conjugate-Beta z {:.2}; chi-square quantile dev {:.1e}; HPD mass dev {:.1e}",
        worst_z, worst_chi2, worst_mass
    );
}

// ---------------------------------------------------------------------------
// 8. Determinism of exported artifacts.
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_deterministic_reruns() {
    let cfg = ExperimentConfig::from_toml_str(WIDE_PRIOR_TOML).unwrap();
    let dirs: Vec<tempfile::TempDir> = (0..2)
        .map(|_| {
            let result = run_experiment(&cfg).unwrap();
            let dir = tempfile::tempdir().unwrap();
            export_results(&result, dir.path()).unwrap();
            dir
        })
        .collect();
    for name in ["summary.json", "records.jsonl"] {
        let first = std::fs::read(dirs[0].path().join(name)).unwrap();
        let second = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert!(first == second, "{name} differs between identical reruns");
    }
    println!("criterion 8: PASS — summary.json and records.jsonl byte-identical across reruns");
}
