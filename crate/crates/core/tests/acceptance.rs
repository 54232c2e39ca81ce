//! Acceptance suite: one line per criterion with its verdict, evidence and
//! runtime. Criteria that exercise an experiment run the checked-in default
//! config under configs/ and pass when every check of that run passes inside
//! the time budget.
//!
//! Usage: cargo test --release -p roughloop --test acceptance [-- <ids>]
//!
//! The process exits non-zero when a criterion fails that is not listed in
//! KNOWN_FAILURES, or when a listed one unexpectedly passes.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use roughloop::derham::{primitive_of_closed, FiniteForm1, Polynomial, FD_STEP};
use roughloop::experiments::{run, ExperimentConfig};
use roughloop::lie::{exp_alg, Group};
use roughloop::lift::{chen_defect, ibp_defect, lift};
use roughloop::loops::{
    casimir_terms, connection, field_bracket_defect, frame_sum_bracket, frame_sum_second_covariant,
    koszul_defect, metric_defect, torsion_defect, H0Frame, LoopOneForm,
};
use roughloop::sampler::{sample_brownian, SeededStream};

/// Criteria whose thresholds are not met by this implementation; the reasons
/// are written up in the decision notes.
const KNOWN_FAILURES: &[u32] = &[3, 12];

/// Stream ids used by the library-level criteria (experiments use their
/// registry index).
const STREAM_BASE: u64 = 1000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> ExperimentConfig {
    let path = root().join("configs").join(format!("{name}.ini"));
    ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {}", path.display(), e.join("; ")))
}

/// Runs a default experiment; the verdict is the conjunction of its checks.
fn experiment(name: &str) -> Verdict {
    let out = match run(&config(name)) {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("error: {e}")),
    };
    let failed: Vec<String> =
        out.checks.iter().filter(|c| !c.pass).map(|c| format!("{} ({})", c.name, c.detail)).collect();
    if failed.is_empty() {
        verdict(true, format!("{} checks pass", out.checks.len()))
    } else {
        verdict(false, format!("{}/{} checks fail: {}", failed.len(), out.checks.len(), failed.join(", ")))
    }
}

fn chen() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let s = SeededStream::new(seed, STREAM_BASE + 1);
        let l6 = lift(&sample_brownian(2, 6, &s.child(6)));
        let n = 1usize << 6;
        for a in 0..=n {
            for b in a..=n {
                for c in b..=n {
                    let d = chen_defect(&l6, a, b, c).expect("ordered triple");
                    worst = d.iter().fold(worst, |m, x| m.max(x.abs()));
                }
            }
        }
        let l10 = lift(&sample_brownian(2, 10, &s.child(10)));
        let mut rng = s.rng(0);
        for _ in 0..100 {
            let mut t = [0usize; 3].map(|_| rng.random_range(0..=1024usize));
            t.sort_unstable();
            let d = chen_defect(&l10, t[0], t[1], t[2]).expect("ordered triple");
            worst = d.iter().fold(worst, |m, x| m.max(x.abs()));
        }
    }
    verdict(worst < 1e-12, format!("max defect {worst:e} < 1e-12"))
}

fn ibp() -> Verdict {
    let worst = (0..20u64)
        .map(|seed| ibp_defect(&lift(&sample_brownian(2, 8, &SeededStream::new(seed, STREAM_BASE + 2)))))
        .fold(0.0f64, f64::max);
    verdict(worst < 1e-12, format!("max grid defect {worst:e} < 1e-12"))
}

fn poincare_lemma() -> Verdict {
    let s = SeededStream::new(0, STREAM_BASE + 7);
    let mut worst = 0.0f64;
    for i in 0..50u64 {
        let mut rng = s.rng(i);
        let n = rng.random_range(1..=3usize);
        let m = rng.random_range(1..=6 - n);
        let degree = rng.random_range(1..=4u32);
        let p = Polynomial::random(n + m, degree, 6, &mut rng);
        // Box in x times ball in y: star-shaped along the y-rays and along
        // each x-coordinate segment to the origin.
        let dom = move |z: &[f64]| {
            z[..n].iter().all(|x| x.abs() < 1.0) && z[n..].iter().map(|y| y * y).sum::<f64>() < 1.0
        };
        let alpha = FiniteForm1::exact(&p, n, m, dom).expect("dims agree");
        let probes: Vec<Vec<f64>> = (0..10)
            .map(|_| {
                let mut z: Vec<f64> = (0..n + m).map(|_| rng.random_range(-0.8..0.8)).collect();
                let r = z[n..].iter().map(|y| y * y).sum::<f64>().sqrt();
                if r > 0.8 {
                    z[n..].iter_mut().for_each(|y| *y *= 0.8 / r);
                }
                z
            })
            .collect();
        let base = vec![0.0; n + m];
        let g = match primitive_of_closed(&alpha, &base, &probes) {
            Ok(g) => g,
            Err(e) => return verdict(false, format!("form {i}: {e}")),
        };
        match g.gradient_defect(&probes, FD_STEP) {
            Ok(d) => worst = worst.max(d),
            Err(e) => return verdict(false, format!("form {i}: {e}")),
        }
    }
    verdict(worst < 1e-8, format!("50 forms, max gradient defect {worst:e} < 1e-8"))
}

fn bracket_calculus() -> Verdict {
    let g = Group::So3;
    let cas = (g.casimir() + Matrix3::identity() * 2.0).abs().max();

    let frame = H0Frame::new(g, 8, 8).expect("8 < 2^8");
    let mut koszul = 0.0f64;
    let mut torsion = 0.0f64;
    let mut metric = 0.0f64;
    let e = &frame.elements;
    for (i, h) in e.iter().enumerate().step_by(2) {
        for k in e.iter().skip(i % 5).step_by(3) {
            torsion = torsion.max(torsion_defect(g, h, k).expect("same shape"));
            for l in e.iter().skip(i % 3).step_by(5) {
                koszul = koszul.max(koszul_defect(g, h, k, l).expect("same shape"));
                metric = metric.max(metric_defect(g, h, k, l).expect("same shape"));
            }
        }
    }

    // Field brackets at the values of the modes along a random loop point.
    let s = SeededStream::new(0, STREAM_BASE + 11);
    let mut rng = s.rng(0);
    let mut field = 0.0f64;
    for _ in 0..50 {
        let gp = exp_alg(&Vector3::from_fn(|_, _| rng.random_range(-1.5..1.5)));
        let a = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let t = rng.random_range(0..=256usize);
        let mut mix = || -> Vector3<f64> {
            (0..4).map(|_| g.embed(e[rng.random_range(0..e.len())].point(t)) * rng.random_range(-2.0..2.0)).sum()
        };
        let (h, k) = (mix(), mix());
        field = field.max(field_bracket_defect(&h, &k, &gp, &a));
    }

    let t = Group::Torus;
    let tf = H0Frame::new(t, 8, 8).expect("8 < 2^8");
    let mut abelian = 0.0f64;
    for (i, h) in tf.elements.iter().enumerate() {
        let alpha = LoopOneForm::new(t, tf.elements[(i + 3) % tf.len()].scaled(1.7)).expect("dim 1");
        let (t2, t3) = casimir_terms(&alpha, h).expect("same shape");
        let conn = connection(t, h, &alpha.alpha).expect("same shape").sup_norm();
        let s1 = frame_sum_second_covariant(&alpha, h, &tf).expect("same shape");
        let s2 = frame_sum_bracket(&alpha, h, &tf).expect("same shape");
        abelian = [abelian, t2.abs(), t3.abs(), conn, s1.abs(), s2.abs()].into_iter().fold(0.0, f64::max);
    }

    let pass = cas < 1e-14 && koszul < 1e-8 && torsion < 1e-8 && metric < 1e-8 && field < 1e-8 && abelian < 1e-12;
    verdict(
        pass,
        format!(
            "casimir {cas:e} < 1e-14; koszul {koszul:e}, torsion {torsion:e}, metric {metric:e}, field {field:e} < 1e-8; abelian {abelian:e} < 1e-12"
        ),
    )
}

fn cli_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_roughloop");
    let dir = std::env::temp_dir().join(format!("roughloop-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let mut cfgs: Vec<PathBuf> = std::fs::read_dir(root().join("configs/smoke"))
        .expect("configs/smoke")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "ini"))
        .collect();
    cfgs.sort();
    let mut bad = Vec::new();
    for cfg in &cfgs {
        let stem = cfg.file_stem().unwrap().to_string_lossy().into_owned();
        let mut docs = Vec::new();
        for (tag, workers) in [("a", 1), ("b", 1), ("c", 4)] {
            let out = dir.join(format!("{stem}-{tag}.csv"));
            let st = Command::new(bin)
                .args(["run", "--zero-time", "--workers", &workers.to_string(), "--config"])
                .arg(cfg)
                .arg("--out")
                .arg(&out)
                .env_remove("ROUGHLOOP_SEED")
                .output()
                .expect("spawn roughloop");
            if !st.status.success() {
                bad.push(format!("{stem}: exit {}", st.status));
                break;
            }
            docs.push(std::fs::read(&out).expect("csv written"));
        }
        if docs.len() == 3 && !(docs[0] == docs[1] && docs[1] == docs[2]) {
            bad.push(format!("{stem}: bytes differ"));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    if bad.is_empty() {
        verdict(cfgs.len() == 10, format!("{} experiments byte-identical over runs and workers 1/4", cfgs.len()))
    } else {
        verdict(false, bad.join(", "))
    }
}

type Criterion = (u32, &'static str, u64, fn() -> Verdict);

const CRITERIA: [Criterion; 14] = [
    (1, "chen identity", 10, chen),
    (2, "ibp identity", 10, ibp),
    (3, "dyadic convergence rates", 300, || experiment("dyadic-convergence")),
    (4, "flow identities", 120, || experiment("flow-identities")),
    (5, "retraction", 180, || experiment("retraction-audit")),
    (6, "quasi-invariance", 300, || experiment("quasi-invariance-mc")),
    (7, "finite-dimensional poincare lemma", 60, poincare_lemma),
    (8, "stokes audits", 60, || experiment("stokes-audit")),
    (9, "gaussian convex poincare", 180, || experiment("poincare-mc")),
    (10, "small-ball positivity", 120, || experiment("small-ball")),
    (11, "casimir and bracket calculus", 30, bracket_calculus),
    (12, "weitzenboeck truncation", 120, || experiment("weitzenboeck-truncation")),
    (13, "ibp on pinned loops", 600, || experiment("ibp-mc")),
    (14, "cli determinism", 300, cli_determinism),
];

fn main() -> ExitCode {
    // Accept libtest-style flags so `cargo test` can pass its own arguments.
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if std::env::args().any(|a| a == "--list") {
        for (id, name, ..) in CRITERIA {
            println!("{id:>2}: {name}");
        }
        return ExitCode::SUCCESS;
    }
    let mut unexpected = Vec::new();
    for (id, name, limit, f) in CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = f();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(limit);
        let pass = v.pass && in_time;
        let known = KNOWN_FAILURES.contains(&id);
        println!(
            "criterion {id:>2} {}: {name}: {} [{:.1} s, limit {limit} s{}]{}",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64(),
            if in_time { "" } else { ", over budget" },
            if known { " (known failure)" } else { "" },
        );
        if pass == known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected verdicts for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
