//! Named experiments over the library, their key=value configuration, and
//! deterministic CSV output.
//!
//! Every experiment draws from `SeededStream::new(seed, stream_id)` with a
//! fixed per-experiment stream id and indexes its samples explicitly, and all
//! parallel work is collected in index order before any reduction. The CSV
//! bytes therefore depend on the configuration only, not on the worker count.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use ini::Ini;
use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rayon::prelude::*;

use crate::derham::{
    default_battery, gaussian_convex_poincare_mc, stokes_line, stokes_surface, CylinderPolynomial,
    Differential, GridFunctional, Polynomial, PolynomialCurve, PolynomialSurface,
};
use crate::error::{Error, Result};
use crate::flows::{
    left_translation_defect, round_trip_defect, z_identity_defect, zeta_identity_defect, GroupPath,
};
use crate::geometry::{
    endpoint_distance, inclusion_check, member_tube, quasi_invariance_weight, retract, retraction_shift,
    retraction_shift_discrete, TubeSpec, Verdict,
};
use crate::lie::{exp_alg, Group};
use crate::lift::estimate_area_constant;
use crate::loops::{
    abelian_ibp_oracle, ibp_mc_check, weitzenboeck_closed, weitzenboeck_truncation, LoopOneForm,
};
use crate::paths::{cm_norm, estimate_pair_constant, BesovParams, SampledPath};
use crate::sampler::{
    brownian_from_rng, convergence_experiment, positivity_constraints, small_ball_estimate,
    ConvStat, ConvergenceConfig, SeededStream,
};
use crate::stats::EstimateCI;

/// Environment variable that replaces the default seed when a config omits one.
pub const SEED_ENV: &str = "ROUGHLOOP_SEED";

pub const CSV_HEADER: [&str; 8] =
    ["experiment", "params", "statistic", "value", "stderr", "n", "seed", "wall_time_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    IntList,
    FloatList,
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
}

const fn param(key: &'static str, kind: Kind, default: &'static str) -> ParamSpec {
    ParamSpec { key, kind, default }
}

type Runner = fn(&ExperimentConfig, &SeededStream) -> Result<Outcome>;

pub struct ExperimentSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub level: u32,
    pub n_seeds: usize,
    pub params: &'static [ParamSpec],
    run: Runner,
}

static REGISTRY: [ExperimentSpec; 10] = [
    ExperimentSpec {
        name: "dyadic-convergence",
        description: "log2-slopes of the dyadic layer, area-step and cross-term norms of Brownian paths",
        level: 12,
        n_seeds: 200,
        params: &[
            param("dim", Kind::Int, "2"),
            param("n_min", Kind::Int, "2"),
            param("n_max", Kind::Int, "7"),
            param("quad_level", Kind::Int, "10"),
            param("n_boot", Kind::Int, "1000"),
        ],
        run: run_convergence,
    },
    ExperimentSpec {
        name: "flow-identities",
        description: "left translation, zeta and Z identities and the zeta/Z round trip across levels",
        level: 12,
        n_seeds: 50,
        params: &[
            param("levels", Kind::IntList, "8,10,12"),
            param("a_log", Kind::FloatList, "0.7,-0.4,1.1"),
            param("h_scale", Kind::Float, "0.8"),
            param("n_times", Kind::Int, "64"),
        ],
        run: run_flow_identities,
    },
    ExperimentSpec {
        name: "small-ball",
        description: "Wilson bounds for the small-ball probability of w(N) under norm and area constraints",
        level: 8,
        n_seeds: 10_000,
        params: &[param("levels", Kind::IntList, "3,6"), param("epsilon", Kind::Float, "1.5")],
        run: run_small_ball,
    },
    ExperimentSpec {
        name: "poincare-mc",
        description: "Var/Energy ratios of a test battery under Gaussians restricted to convex domains",
        level: 1,
        n_seeds: 100_000,
        params: &[],
        run: run_poincare,
    },
    ExperimentSpec {
        name: "inclusion-audit",
        description: "probes the U-ball inclusions under a small Cameron-Martin shift of the centre",
        level: 8,
        n_seeds: 500,
        params: &[
            param("radius", Kind::Float, "0.5"),
            param("delta", Kind::Float, "0.5"),
            param("r_est", Kind::Float, "0"),
            param("h_fraction", Kind::Float, "0.5"),
        ],
        run: run_inclusion,
    },
    ExperimentSpec {
        name: "stokes-audit",
        description: "line and surface Stokes identities for cylinder polynomials along H-curves and H-surfaces",
        level: 6,
        n_seeds: 20,
        params: &[
            param("n_surface", Kind::Int, "10"),
            param("n_quad", Kind::Int, "6"),
            param("dim", Kind::Int, "2"),
            param("degree", Kind::Int, "3"),
        ],
        run: run_stokes,
    },
    ExperimentSpec {
        name: "retraction-audit",
        description: "pinning and idempotency of the tube retraction onto the based loops",
        level: 12,
        n_seeds: 1000,
        params: &[param("epsilon", Kind::Float, "0.3")],
        run: run_retraction,
    },
    ExperimentSpec {
        name: "quasi-invariance-mc",
        description: "change of variables under the pinning shift, closed form on the torus and Monte Carlo on the group",
        level: 8,
        n_seeds: 10_000,
        params: &[param("a_log", Kind::FloatList, "0.3,-0.2,0.4"), param("n_abelian", Kind::Int, "100")],
        run: run_quasi_invariance,
    },
    ExperimentSpec {
        name: "weitzenboeck-truncation",
        description: "sine-frame sums of the Weitzenboeck proof against their Casimir limits",
        level: 10,
        n_seeds: 5,
        params: &[param("modes", Kind::IntList, "4,8,16,32"), param("tolerance", Kind::Float, "0.02")],
        run: run_weitzenboeck,
    },
    ExperimentSpec {
        name: "ibp-mc",
        description: "integration by parts for right-invariant fields on pinned loops",
        level: 6,
        n_seeds: 20_000,
        params: &[
            param("epsilons", Kind::FloatList, "0.3,0.15"),
            param("n_abelian", Kind::Int, "10000"),
            param("abelian_epsilon", Kind::Float, "0.3"),
        ],
        run: run_ibp,
    },
];

pub fn registry() -> &'static [ExperimentSpec] {
    &REGISTRY
}

pub fn find(name: &str) -> Result<(u64, &'static ExperimentSpec)> {
    REGISTRY
        .iter()
        .enumerate()
        .find(|(_, s)| s.name == name)
        .map(|(i, s)| (i as u64, s))
        .ok_or_else(|| Error::UnknownExperiment(name.to_string()))
}

/// Name/description pairs in registry order.
pub fn list_experiments() -> Vec<(&'static str, &'static str)> {
    REGISTRY.iter().map(|s| (s.name, s.description)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub level: u32,
    pub besov: BesovParams,
    pub relaxed: bool,
    pub group: Group,
    pub n_seeds: usize,
    /// Experiment-specific keys, always holding every declared key.
    pub params: BTreeMap<String, String>,
}

fn default_seed() -> std::result::Result<u64, String> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}

fn parse_kind(kind: Kind, v: &str) -> bool {
    let list = |f: &dyn Fn(&str) -> bool| !v.trim().is_empty() && v.split(',').all(|x| f(x.trim()));
    match kind {
        Kind::Int => v.trim().parse::<u64>().is_ok(),
        Kind::Float => v.trim().parse::<f64>().is_ok_and(f64::is_finite),
        Kind::IntList => list(&|x| x.parse::<u64>().is_ok()),
        Kind::FloatList => list(&|x| x.parse::<f64>().is_ok_and(f64::is_finite)),
    }
}

impl ExperimentConfig {
    /// Registry defaults; the seed comes from `ROUGHLOOP_SEED` or is 0.
    pub fn default_for(name: &str) -> Result<Self> {
        let mut c = Self::default_for_seedless(name)?;
        c.seed = default_seed().map_err(Error::Config)?;
        Ok(c)
    }

    /// Parses and validates config text, returning every problem found.
    pub fn parse(text: &str) -> std::result::Result<Self, Vec<String>> {
        let ini = Ini::load_from_str(text).map_err(|e| vec![format!("syntax: {e}")])?;
        let mut errs = Vec::new();
        let mut run: BTreeMap<String, String> = BTreeMap::new();
        let mut besov: BTreeMap<String, String> = BTreeMap::new();
        let mut params: BTreeMap<String, String> = BTreeMap::new();
        for (section, props) in ini.iter() {
            let target = match section {
                None | Some("run") => &mut run,
                Some("besov") => &mut besov,
                Some("params") => &mut params,
                Some(s) => {
                    errs.push(format!("unknown section [{s}]"));
                    continue;
                }
            };
            for (k, v) in props.iter() {
                if target.insert(k.to_string(), v.to_string()).is_some() {
                    errs.push(format!("duplicate key {k}"));
                }
            }
        }
        let Some(name) = run.remove("experiment") else {
            errs.push("missing key experiment".into());
            return Err(errs);
        };
        let mut cfg = match Self::default_for_seedless(&name) {
            Ok(c) => c,
            Err(e) => {
                errs.push(e.to_string());
                return Err(errs);
            }
        };
        if !run.contains_key("seed") {
            match default_seed() {
                Ok(v) => cfg.seed = v,
                Err(e) => errs.push(e),
            }
        }
        for (k, v) in &run {
            let r = match k.as_str() {
                "seed" => v.parse().map(|x| cfg.seed = x).map_err(|_| ()),
                "level" => v.parse().map(|x| cfg.level = x).map_err(|_| ()),
                "n_seeds" => v.parse().map(|x| cfg.n_seeds = x).map_err(|_| ()),
                "group" => Group::parse(v).map(|g| cfg.group = g).ok_or(()),
                _ => {
                    errs.push(format!("unknown key {k}"));
                    continue;
                }
            };
            if r.is_err() {
                errs.push(format!("bad value for {k}: {v:?}"));
            }
        }
        let (mut m, mut th, mut thp) = (cfg.besov.m, cfg.besov.theta, cfg.besov.theta_prime);
        for (k, v) in &besov {
            let r = match k.as_str() {
                "m" => v.parse().map(|x| m = x).map_err(|_| ()),
                "theta" => v.parse().map(|x| th = x).map_err(|_| ()),
                "theta_prime" => v.parse().map(|x| thp = x).map_err(|_| ()),
                "relaxed" => v.parse().map(|x| cfg.relaxed = x).map_err(|_| ()),
                _ => {
                    errs.push(format!("unknown key besov.{k}"));
                    continue;
                }
            };
            if r.is_err() {
                errs.push(format!("bad value for besov.{k}: {v:?}"));
            }
        }
        cfg.besov = BesovParams { m, theta: th, theta_prime: thp };
        for (k, v) in params {
            if let Some(slot) = cfg.params.get_mut(&k) {
                *slot = v;
            } else {
                errs.push(format!("unknown key params.{k} for {name}"));
            }
        }
        errs.extend(cfg.validate());
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(errs)
        }
    }

    fn default_for_seedless(name: &str) -> Result<Self> {
        let (_, spec) = find(name)?;
        Ok(ExperimentConfig {
            experiment: name.to_string(),
            seed: 0,
            level: spec.level,
            besov: BesovParams::default(),
            relaxed: false,
            group: Group::So3,
            n_seeds: spec.n_seeds,
            params: spec.params.iter().map(|p| (p.key.to_string(), p.default.to_string())).collect(),
        })
    }

    pub fn from_file(path: &std::path::Path) -> std::result::Result<Self, Vec<String>> {
        let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
        Self::parse(&text)
    }

    /// Sets one key, `section.key` for the besov and params sections.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut text = self.to_config_text();
        let (section, k) = key.split_once('.').unwrap_or(("run", key));
        text = text
            .lines()
            .filter(|l| !l.starts_with(&format!("{k} =")) || self.section_of(k) != section)
            .collect::<Vec<_>>()
            .join("\n");
        let mut out = String::new();
        let mut placed = false;
        for line in text.lines() {
            out.push_str(line);
            out.push('\n');
            if line.trim() == format!("[{section}]") {
                out.push_str(&format!("{k} = {value}\n"));
                placed = true;
            }
        }
        if !placed {
            out.push_str(&format!("[{section}]\n{k} = {value}\n"));
        }
        *self = Self::parse(&out).map_err(|e| Error::Config(e.join("; ")))?;
        Ok(())
    }

    fn section_of(&self, k: &str) -> &'static str {
        match k {
            "m" | "theta" | "theta_prime" | "relaxed" => "besov",
            _ if self.params.contains_key(k) => "params",
            _ => "run",
        }
    }

    /// Every problem with the configuration; empty when it is runnable.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let Ok((_, spec)) = find(&self.experiment) else {
            return vec![format!("unknown experiment: {}", self.experiment)];
        };
        let b = self.besov;
        let checked = if self.relaxed {
            BesovParams::relaxed(b.m, b.theta, b.theta_prime)
        } else {
            BesovParams::new(b.m, b.theta, b.theta_prime)
        };
        if let Err(e) = checked {
            errs.push(e.to_string());
        }
        if !(1..=16).contains(&self.level) {
            errs.push(format!("level={} must lie in 1..=16", self.level));
        }
        if self.n_seeds == 0 {
            errs.push("n_seeds must be positive".into());
        }
        for p in spec.params {
            let v = &self.params[p.key];
            if !parse_kind(p.kind, v) {
                errs.push(format!("bad value for params.{}: {v:?}", p.key));
            }
        }
        if errs.is_empty() {
            errs.extend(self.specific_checks());
        }
        errs
    }

    fn specific_checks(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let lv = self.level;
        match self.experiment.as_str() {
            "dyadic-convergence" => {
                let (a, b, q) = (self.int("n_min"), self.int("n_max"), self.int("quad_level"));
                if a == 0 || b < a || b as u32 >= lv {
                    errs.push(format!("need 1 <= n_min <= n_max < level, got {a}..{b} at level {lv}"));
                }
                if q as u32 > lv || q <= b {
                    errs.push("quad_level must lie in (n_max, level]".into());
                }
                if self.int("dim") == 0 {
                    errs.push("dim must be positive".into());
                }
            }
            "flow-identities" => {
                if self.ints("levels").iter().any(|&l| l == 0 || l as u32 > lv) {
                    errs.push("levels must lie in 1..=level".into());
                }
                if self.floats("a_log").len() != 3 {
                    errs.push("a_log needs three coordinates".into());
                }
            }
            "small-ball" => {
                if self.ints("levels").iter().any(|&l| l == 0 || l as u32 > lv) {
                    errs.push("levels must lie in 1..=level".into());
                }
                if self.float("epsilon") <= 0.0 {
                    errs.push("epsilon must be positive".into());
                }
            }
            "inclusion-audit" => {
                let d = self.float("delta");
                if !(d > 0.0 && d < 1.0) {
                    errs.push("delta must lie in (0,1)".into());
                }
                if self.float("radius") <= 0.0 {
                    errs.push("radius must be positive".into());
                }
            }
            "stokes-audit" => {
                if !(1..=6).contains(&self.int("dim")) || self.int("n_quad") == 0 {
                    errs.push("need dim in 1..=6 and n_quad >= 1".into());
                }
            }
            "retraction-audit" | "ibp-mc" => {
                let mut eps = self.floats(if self.experiment == "ibp-mc" { "epsilons" } else { "epsilon" });
                if self.experiment == "ibp-mc" {
                    eps.push(self.float("abelian_epsilon"));
                }
                if eps.iter().any(|&e| !(e > 0.0 && e < PI - 1e-6)) {
                    errs.push("tube radii must lie in (0, pi)".into());
                }
            }
            "quasi-invariance-mc" => {
                let a = self.floats("a_log");
                if a.len() != 3 || a.iter().map(|x| x * x).sum::<f64>().sqrt() >= PI - 1e-6 {
                    errs.push("a_log needs three coordinates of norm below pi".into());
                }
            }
            "weitzenboeck-truncation" => {
                let k = self.ints("modes");
                if k.windows(2).any(|w| w[1] <= w[0]) || k.iter().any(|&k| k == 0 || k >= 1 << lv) {
                    errs.push("modes must increase and lie in 1..2^level".into());
                }
            }
            _ => {}
        }
        errs
    }

    fn int(&self, key: &str) -> u64 {
        self.params[key].trim().parse().expect("validated")
    }

    fn float(&self, key: &str) -> f64 {
        self.params[key].trim().parse().expect("validated")
    }

    fn ints(&self, key: &str) -> Vec<u64> {
        self.params[key].split(',').map(|x| x.trim().parse().expect("validated")).collect()
    }

    fn floats(&self, key: &str) -> Vec<f64> {
        self.params[key].split(',').map(|x| x.trim().parse().expect("validated")).collect()
    }

    /// Canonical config text; parsing it gives back the same configuration.
    pub fn to_config_text(&self) -> String {
        let mut s = format!(
            "experiment = {}\nseed = {}\nlevel = {}\ngroup = {}\nn_seeds = {}\n\n[besov]\nm = {}\ntheta = {}\ntheta_prime = {}\nrelaxed = {}\n",
            self.experiment,
            self.seed,
            self.level,
            self.group.name(),
            self.n_seeds,
            self.besov.m,
            self.besov.theta,
            self.besov.theta_prime,
            self.relaxed
        );
        if !self.params.is_empty() {
            s.push_str("\n[params]\n");
            for (k, v) in &self.params {
                s.push_str(&format!("{k} = {v}\n"));
            }
        }
        s
    }

    /// `key=value` pairs separated by `;`, enough to rebuild the run.
    pub fn provenance(&self) -> String {
        let mut parts = vec![
            format!("level={}", self.level),
            format!("group={}", self.group.name()),
            format!("n_seeds={}", self.n_seeds),
            format!("m={}", self.besov.m),
            format!("theta={}", self.besov.theta),
            format!("theta_prime={}", self.besov.theta_prime),
            format!("relaxed={}", self.relaxed),
        ];
        parts.extend(self.params.iter().map(|(k, v)| format!("{k}={}", v.replace(',', " "))));
        parts.join(";")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub statistic: String,
    /// Parameter point of this row, appended to the config provenance.
    pub point: Vec<(String, String)>,
    pub value: f64,
    pub stderr: Option<f64>,
    pub n: usize,
}

/// One pass/fail verdict an experiment can assert.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub rows: Vec<ResultRow>,
    pub checks: Vec<Check>,
    pub wall_time_ms: u128,
}

impl Outcome {
    fn new() -> Self {
        Outcome { rows: Vec::new(), checks: Vec::new(), wall_time_ms: 0 }
    }

    fn row(&mut self, stat: impl Into<String>, point: &[(&str, String)], value: f64, stderr: Option<f64>, n: usize) {
        self.rows.push(ResultRow {
            statistic: stat.into(),
            point: point.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            value,
            stderr,
            n,
        });
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Value of the first row with this statistic and, if given, point.
    pub fn value(&self, stat: &str, point: Option<(&str, &str)>) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.statistic == stat
                    && point.is_none_or(|(k, v)| r.point.iter().any(|(a, b)| a == k && b == v))
            })
            .map(|r| r.value)
    }
}

/// Runs a validated configuration on the current rayon pool.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs.join("; ")));
    }
    let (stream_id, spec) = find(&cfg.experiment)?;
    let start = Instant::now();
    let mut out = (spec.run)(cfg, &SeededStream::new(cfg.seed, stream_id))?;
    out.wall_time_ms = start.elapsed().as_millis();
    Ok(out)
}

/// Runs on a dedicated pool of `workers` threads.
pub fn run_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| run(cfg))
}

fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// CSV document for one run. With `zero_time` the wall-time column is written
/// as 0 so that the whole document is byte-reproducible.
pub fn to_csv(cfg: &ExperimentConfig, out: &Outcome, zero_time: bool) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    let base = cfg.provenance();
    let time = if zero_time { 0 } else { out.wall_time_ms };
    for r in &out.rows {
        let mut params = base.clone();
        for (k, v) in &r.point {
            params.push_str(&format!(";{k}={v}"));
        }
        w.write_record([
            cfg.experiment.clone(),
            params,
            r.statistic.clone(),
            fmt_f64(r.value),
            r.stderr.map(fmt_f64).unwrap_or_default(),
            r.n.to_string(),
            cfg.seed.to_string(),
            time.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

fn p(k: &'static str, v: impl ToString) -> (&'static str, String) {
    (k, v.to_string())
}

fn run_convergence(c: &ExperimentConfig, s: &SeededStream) -> Result<Outcome> {
    let cfg = ConvergenceConfig {
        dim: c.int("dim") as usize,
        level: c.level,
        n_min: c.int("n_min") as u32,
        n_max: c.int("n_max") as u32,
        params: c.besov,
        n_seeds: c.n_seeds,
        quad_level: c.int("quad_level") as u32,
        n_boot: c.int("n_boot") as usize,
    };
    let rep = convergence_experiment(&cfg, s)?;
    let mut out = Outcome::new();
    for (si, stat) in ConvStat::ALL.iter().enumerate() {
        for (i, n) in rep.levels.iter().enumerate() {
            let e = &rep.estimates[si][i];
            out.row(format!("{}_median", stat.name()), &[p("N", n)], rep.medians[si][i], None, cfg.n_seeds);
            out.row(format!("{}_mean", stat.name()), &[p("N", n)], e.mean, Some(e.stderr), e.n);
        }
        let f = rep.slopes[si];
        out.row(format!("{}_slope", stat.name()), &[], f.slope, None, cfg.n_seeds);
        out.row(format!("{}_slope_ci_lo", stat.name()), &[], f.ci_lo, None, cfg.n_boot);
        out.row(format!("{}_slope_ci_hi", stat.name()), &[], f.ci_hi, None, cfg.n_boot);
        out.check(
            format!("{}_slope_negative", stat.name()),
            f.ci_hi < 0.0,
            format!("slope {:.4} with 95% CI [{:.4}, {:.4}]", f.slope, f.ci_lo, f.ci_hi),
        );
    }
    Ok(out)
}

/// Smooth Cameron-Martin path used as the shift h and, through φ_t = exp(h_t),
/// as the group path of the ζ identity.
fn smooth_h(group: Group, level: u32, scale: f64) -> SampledPath {
    let d = group.dim();
    SampledPath::from_fn(d, level, |t, o| {
        let v = [(PI * t).sin(), t * t, 2.0 * t * (1.0 - t)];
        for (i, x) in o.iter_mut().enumerate() {
            *x = scale * v[i];
        }
    })
}

fn exp_path(group: Group, h: &SampledPath) -> Result<GroupPath> {
    let vals = (0..=h.cells()).map(|k| exp_alg(&group.embed(h.point(k)))).collect();
    GroupPath::new(h.level(), vals)
}

const FLOW_STATS: [&str; 4] = ["left_translation", "zeta_identity", "z_identity", "round_trip"];

fn run_flow_identities(c: &ExperimentConfig, s: &SeededStream) -> Result<Outcome> {
    let g = c.group;
    let levels: Vec<u32> = c.ints("levels").iter().map(|&l| l as u32).collect();
    let al = c.floats("a_log");
    let a = exp_alg(&g.embed(&al[..g.dim()]));
    let scale = c.float("h_scale");
    let n_times = c.int("n_times") as usize;
    let per_seed: Vec<Vec<[f64; 4]>> = (0..c.n_seeds)
        .into_par_iter()
        .map(|i| -> Result<Vec<[f64; 4]>> {
            let w = brownian_from_rng(g.dim(), c.level, &mut s.rng(i as u64));
            levels
                .iter()
                .map(|&l| {
                    let wl = w.restrict(l)?;
                    let h = smooth_h(g, l, scale);
                    let phi = exp_path(g, &h)?;
                    Ok([
                        left_translation_defect(g, &a, &wl, n_times)?,
                        zeta_identity_defect(g, &phi, &wl)?,
                        z_identity_defect(g, &h, &wl)?,
                        round_trip_defect(g, &h, &wl)?,
                    ])
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out = Outcome::new();
    let mut means = vec![[0.0; 4]; levels.len()];
    let mut maxes = vec![[0.0; 4]; levels.len()];
    for (li, l) in levels.iter().enumerate() {
        for (k, name) in FLOW_STATS.iter().enumerate() {
            let xs: Vec<f64> = per_seed.iter().map(|v| v[li][k]).collect();
            let e = EstimateCI::from_samples(&xs);
            let mx = xs.iter().cloned().fold(0.0, f64::max);
            means[li][k] = e.mean;
            maxes[li][k] = mx;
            out.row(format!("{name}_max"), &[p("L", l)], mx, None, xs.len());
            out.row(format!("{name}_mean"), &[p("L", l)], e.mean, Some(e.stderr), xs.len());
        }
    }
    let top = maxes.last().copied().unwrap_or([0.0; 4]);
    if g == Group::Torus {
        for (k, name) in FLOW_STATS.iter().enumerate() {
            out.check(format!("{name}_abelian"), top[k] < 1e-10, format!("max {:e} < 1e-10", top[k]));
        }
    } else {
        out.check("left_translation", top[0] < 1e-12, format!("max {:e} < 1e-12", top[0]));
        for k in 1..4 {
            out.check(FLOW_STATS[k], top[k] < 1e-6, format!("max {:e} < 1e-6", top[k]));
        }
    }
    if levels.len() >= 2 {
        let (a, b) = (means[levels.len() - 2], means[levels.len() - 1]);
        for k in 1..4 {
            let ratio = a[k] / b[k];
            out.row(format!("{}_shrink", FLOW_STATS[k]), &[], ratio, None, c.n_seeds);
            // An identity that already holds at rounding level has nothing left to shrink.
            let exact = maxes.iter().all(|m| m[k] < 1e-12);
            out.check(
                format!("{}_shrink", FLOW_STATS[k]),
                exact || ratio >= 3.0,
                if exact {
                    format!("at rounding level (max {:e})", maxes.iter().map(|m| m[k]).fold(0.0, f64::max))
                } else {
                    format!("mean ratio {ratio:.2} >= 3")
                },
            );
        }
    }
    Ok(out)
}

fn run_small_ball(c: &ExperimentConfig, s: &SeededStream) -> Result<Outcome> {
    let q = c.level;
    let eps = c.float("epsilon");
    let z = SampledPath::from_fn(1, q, |t, o| o[0] = t);
    let cons = positivity_constraints(&[z], &c.besov, eps);
    let mut out = Outcome::new();
    let mut lows = Vec::new();
    for n in c.ints("levels") {
        let e = small_ball_estimate(&cons, n as u32, q, c.n_seeds, &s.child(n))?;
        out.row("acceptance", &[p("N", n)], e.mean, Some(e.stderr), e.n);
        out.row("wilson_lo", &[p("N", n)], e.lo, None, e.n);
        out.row("wilson_hi", &[p("N", n)], e.hi, None, e.n);
        out.check(format!("positive_N{n}"), e.lo > 0.0, format!("Wilson lower bound {:e} > 0", e.lo));
        lows.push(e.lo);
    }
    if let (Some(&a), Some(&b)) = (lows.first(), lows.last()) {
        let ratio = if a > 0.0 && b > 0.0 { (a / b).max(b / a) } else { f64::INFINITY };
        out.row("lower_bound_ratio", &[], ratio, None, c.n_seeds);
        out.check("stable_within_10x", ratio <= 10.0, format!("ratio {ratio:.3} <= 10"));
    }
    Ok(out)
}

type Domain = Box<dyn Fn(&[f64]) -> bool + Sync>;

/// Five convex domains in dimensions 2 to 6.
pub fn poincare_domains() -> Vec<(&'static str, usize, Domain)> {
    vec![
        ("box", 2, Box::new(|x: &[f64]| x.iter().all(|v| v.abs() <= 1.0))),
        ("ball", 3, Box::new(|x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() <= 1.44)),
        ("slab", 4, Box::new(|x: &[f64]| x[0] >= 0.0 && x[0] <= 1.0 && x.iter().all(|v| v.abs() <= 2.0))),
        ("simplex", 5, Box::new(|x: &[f64]| x.iter().all(|&v| v >= -1.0) && x.iter().sum::<f64>() <= 1.0)),
        (
            "ellipsoid",
            6,
            Box::new(|x: &[f64]| {
                const A: [f64; 6] = [0.8, 1.0, 1.2, 1.5, 2.0, 3.0];
                x.iter().zip(A).map(|(v, a)| (v / a) * (v / a)).sum::<f64>() <= 1.0
            }),
        ),
    ]
}

fn run_poincare(c: &ExperimentConfig, s: &SeededStream) -> Result<Outcome> {
    let battery = default_battery();
    let mut out = Outcome::new();
    for (i, (name, dim, dom)) in poincare_domains().into_iter().enumerate() {
        let rep = gaussian_convex_poincare_mc(dim, dom.as_ref(), &battery, c.n_seeds, &s.child(i as u64))?;
        out.row("acceptance", &[p("domain", name), p("dim", dim)], rep.acceptance, None, rep.n_samples);
        for r in &rep.ratios {
            out.row(
                "var_energy_ratio",
                &[p("domain", name), p("dim", dim), p("f", &r.name)],
                r.ratio,
                Some(r.stderr),
                rep.n_samples,
            );
            out.check(
                format!("{name}/{}", r.name),
                r.pass,
                format!("ratio {:.4} <= 1 + 3*{:.4}", r.ratio, r.stderr),
            );
        }
    }
    Ok(out)
}

fn run_inclusion(c: &ExperimentConfig, s: &SeededStream) -> Result<Outcome> {
    let lv = c.level;
    let bp = &c.besov;
    let phi1 = SampledPath::from_fn(2, lv, |t, o| {
        o[0] = 0.3 * (2.0 * PI * t).sin();
        o[1] = 0.2 * t * t;
    });
    let bump = SampledPath::from_fn(2, lv, |t, o| {
        o[0] = t * (1.0 - t);
        o[1] = -0.5 * t * t * t;
    });
    let mut r_est = c.float("r_est");
    if r_est <= 0.0 {
        // R = max(M², N) from empirical lower estimates over sampled scalar paths.
        let paths: Vec<SampledPath> =
            (0..16u64).map(|i| brownian_from_rng(1, lv, &mut s.child(9).rng(i))).collect();
        let m = estimate_pair_constant(&paths, bp.m, bp.theta)?;
        let pairs: Vec<_> = paths.chunks(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        let n = estimate_area_constant(&pairs, bp.m, bp.theta)?;
        r_est = (m * m).max(n);
    }
    let (r, delta) = (c.float("radius"), c.float("delta"));
    let dry = inclusion_check(&phi1, &phi1, r, delta, r_est, bp, 0, s)?;
    let bn = cm_norm(&bump.component(0)).max(cm_norm(&bump.component(1)));
    let phi2 = phi1.add(&bump.scaled(c.float("h_fraction") * dry.threshold / bn))?;
    let rep = inclusion_check(&phi1, &phi2, r, delta, r_est, bp, c.n_seeds, s)?;
    let mut out = Outcome::new();
    let n = rep.probes;
    out.row("r_est", &[], r_est, None, 16);
    out.row("h_distance", &[], rep.h_distance, None, 1);
    out.row("threshold", &[], rep.threshold, None, 1);
    out.row("probes", &[], n as f64, None, n);
    out.row("u_counterexamples", &[], rep.u_counterexamples as f64, None, n);
    out.row("v_counterexamples", &[], rep.v_counterexamples as f64, None, n);
    out.row("v_radius", &[], rep.v_radius, None, 1);
    out.row("max_omega_ratio", &[], rep.max_omega_ratio, None, n);
    out.row("proposal_scale", &[], rep.proposal_scale, None, 1);
    out.row("acceptance", &[], rep.acceptance.mean, Some(rep.acceptance.stderr), rep.acceptance.n);
    out.check("hypothesis", rep.hypothesis_holds, format!("{:e} <= {:e}", rep.h_distance, rep.threshold));
    out.check("u_inclusion", rep.u_counterexamples == 0, format!("{} of {n} probes outside", rep.u_counterexamples));
    out.check("v_inclusion", rep.v_counterexamples == 0, format!("{} of {n} probes outside", rep.v_counterexamples));
    Ok(out)
}

fn random_h<R: Rng + ?Sized>(dim: usize, level: u32, rng: &mut R) -> SampledPath {
    let c: Vec<[f64; 3]> = (0..dim)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    SampledPath::from_fn(dim, level, |t, o| {
        for (i, x) in o.iter_mut().enumerate() {
            *x = c[i][0] * (PI * t).sin() + c[i][1] * t * t + c[i][2] * (2.0 * PI * t).sin() * t;
        }
    })
}

fn random_cylinder<R: Rng + ?Sized>(dim: usize, level: u32, degree: u32, rng: &mut R) -> CylinderPolynomial {
    let n = 1usize << level;
    let functionals = (0..3)
        .map(|j| {
            let c = rng.random_range(0..dim);
            if j == 2 {
                GridFunctional::integral(dim, level, c)
            } else {
                GridFunctional::point(dim, level, rng.random_range(1..=n), c)
            }
        })
        .collect();
    CylinderPolynomial { functionals, poly: Polynomial::random(3, degree, 6, rng) }
}

fn run_stokes(c: &ExperimentConfig, s: &SeededStream) -> Result<Outcome> {
    let lv = c.level;
    let dim = c.int("dim") as usize;
    let deg = c.int("degree") as u32;
    let nq = c.int("n_quad") as usize;
    let lines: Vec<f64> = (0..c.n_seeds as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = s.child(1).rng(i);
            let w = brownian_from_rng(dim, lv, &mut rng);
            let f = random_cylinder(dim, lv, deg, &mut rng);
            let curve = PolynomialCurve { coeffs: (0..3).map(|_| random_h(dim, lv, &mut rng)).collect() };
            let (l, r) = stokes_line(&f, &w, &curve, nq)?;
            Ok((l - r).abs() / l.abs().max(r.abs()).max(1e-12))
        })
        .collect::<Result<_>>()?;
    let surfaces: Vec<f64> = (0..c.int("n_surface"))
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = s.child(2).rng(i);
            let w = brownian_from_rng(dim, lv, &mut rng);
            let f = random_cylinder(dim, lv, deg, &mut rng);
            let coeffs = (0..2).map(|_| (0..2).map(|_| random_h(dim, lv, &mut rng)).collect()).collect();
            let (b, a) = stokes_surface(&Differential(&f), &w, &PolynomialSurface { coeffs }, nq)?;
            Ok((b - a).abs())
        })
        .collect::<Result<_>>()?;
    let mut out = Outcome::new();
    let lmax = lines.iter().cloned().fold(0.0, f64::max);
    let smax = surfaces.iter().cloned().fold(0.0, f64::max);
    out.row("line_relative_defect_max", &[], lmax, None, lines.len());
    out.row("surface_defect_max", &[], smax, None, surfaces.len());
    out.check("line", lmax < 1e-8, format!("max relative defect {lmax:e} < 1e-8"));
    out.check("surface", smax < 1e-8, format!("max boundary difference {smax:e} < 1e-8"));
    Ok(out)
}

fn run_retraction(c: &ExperimentConfig, s: &SeededStream) -> Result<Outcome> {
    let g = c.group;
    let tube = TubeSpec::new(c.float("epsilon"))?;
    let chunk = 4096u64;
    let mut rows: Vec<[f64; 3]> = Vec::with_capacity(c.n_seeds);
    let mut tried = 0usize;
    let mut round = 0u64;
    while rows.len() < c.n_seeds {
        let batch: Vec<Option<[f64; 3]>> = (0..chunk)
            .into_par_iter()
            .map(|i| -> Result<Option<[f64; 3]>> {
                let w = brownian_from_rng(g.dim(), c.level, &mut s.rng(round * chunk + i));
                if member_tube(g, &tube, &w)? != Verdict::Inside {
                    return Ok(None);
                }
                let r = retract(g, &tube, &w)?;
                let pin = endpoint_distance(g, &r)?;
                let idem = cm_norm(&retract(g, &tube, &r)?.sub(&r)?);
                let a = crate::flows::endpoint(g, &w)?;
                let gap = cm_norm(&retraction_shift(g, &a, &w)?.sub(&r.sub(&w)?)?);
                Ok(Some([pin, idem, gap]))
            })
            .collect::<Result<_>>()?;
        for b in batch {
            if rows.len() == c.n_seeds {
                break;
            }
            tried += 1;
            if let Some(r) = b {
                rows.push(r);
            }
        }
        round += 1;
    }
    let mut out = Outcome::new();
    let n = rows.len();
    let acc = EstimateCI::wilson(n, tried);
    let pinned = rows.iter().filter(|r| r[0] < 1e-6).count();
    let col = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    out.row("tube_acceptance", &[], acc.mean, Some(acc.stderr), tried);
    out.row("pinned_fraction", &[], pinned as f64 / n as f64, None, n);
    out.row("pin_error_max", &[], col(0), None, n);
    out.row("idempotency_max", &[], col(1), None, n);
    out.row("quadrature_shift_gap_max", &[], col(2), None, n);
    out.check("pinned", pinned == n, format!("{pinned}/{n} within 1e-6"));
    out.check("idempotent", col(1) < 1e-6, format!("max second move {:e} < 1e-6", col(1)));
    Ok(out)
}

type PathStat = fn(Group, &SampledPath) -> Result<f64>;

/// Test functionals of the change-of-variables check.
pub const QI_FUNCTIONALS: [(&str, PathStat); 3] = [
    ("endpoint_00", |g, w| Ok(crate::flows::endpoint(g, w)?[(0, 0)])),
    ("mean_w1", |_, w| Ok((0..=w.cells()).map(|k| w.point(k)[0]).sum::<f64>() / (w.cells() + 1) as f64)),
    ("cos_w_half", |_, w| Ok(w.point(w.cells() / 2)[w.dim() - 1].cos())),
];

fn run_quasi_invariance(c: &ExperimentConfig, s: &SeededStream) -> Result<Outcome> {
    let al = c.floats("a_log");
    let mut out = Outcome::new();
    // Torus: the pinning shift is t·log a and the weight is the Cameron-Martin density.
    let t = Group::Torus;
    let ct = al[0];
    let at = exp_alg(&t.embed(&[ct]));
    let n_ab = c.int("n_abelian") as usize;
    let ab: Vec<[f64; 2]> = (0..n_ab as u64)
        .into_par_iter()
        .map(|i| -> Result<[f64; 2]> {
            let w = brownian_from_rng(1, c.level, &mut s.child(1).rng(i));
            let wt = quasi_invariance_weight(t, &at, &w)?;
            let closed = (-ct * w.end()[0] - 0.5 * ct * ct).exp();
            let sh = retraction_shift_discrete(t, &at.transpose(), &w)?;
            let lin = SampledPath::from_fn(1, c.level, |tt, o| o[0] = ct * tt);
            Ok([(wt - closed).abs() / closed, sh.sub(&lin)?.sup_norm()])
        })
        .collect::<Result<_>>()?;
    let dmax = ab.iter().map(|r| r[0]).fold(0.0, f64::max);
    let smax = ab.iter().map(|r| r[1]).fold(0.0, f64::max);
    out.row("abelian_density_rel_error_max", &[], dmax, None, n_ab);
    out.row("abelian_shift_error_max", &[], smax, None, n_ab);
    out.check("abelian_density", dmax < 1e-10 && smax < 1e-10, format!("density {dmax:e}, shift {smax:e} < 1e-10"));
    let g = c.group;
    let a = exp_alg(&g.embed(&al[..g.dim()]));
    let ainv = a.transpose();
    let d: Vec<[f64; 3]> = (0..c.n_seeds as u64)
        .into_par_iter()
        .map(|i| -> Result<[f64; 3]> {
            let w = brownian_from_rng(g.dim(), c.level, &mut s.child(2).rng(i));
            let shifted = w.add(&retraction_shift_discrete(g, &ainv, &w)?)?;
            let wt = quasi_invariance_weight(g, &a, &w)?;
            let mut r = [0.0; 3];
            for (k, (_, f)) in QI_FUNCTIONALS.iter().enumerate() {
                r[k] = f(g, &shifted)? * wt - f(g, &w)?;
            }
            Ok(r)
        })
        .collect::<Result<_>>()?;
    for (k, (name, _)) in QI_FUNCTIONALS.iter().enumerate() {
        let xs: Vec<f64> = d.iter().map(|r| r[k]).collect();
        let e = EstimateCI::from_samples(&xs);
        out.row("paired_difference", &[p("F", name)], e.mean, Some(e.stderr), e.n);
        out.check(
            format!("change_of_variables/{name}"),
            e.mean.abs() <= 3.0 * e.stderr,
            format!("|{:.3e}| <= 3*{:.3e}", e.mean, e.stderr),
        );
    }
    Ok(out)
}

/// Random smooth H₀ path with four modes per coordinate.
pub fn random_h0<R: Rng + ?Sized>(group: Group, level: u32, rng: &mut R) -> SampledPath {
    let d = group.dim();
    let c: Vec<[f64; 3]> = (0..4)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let mut h = SampledPath::from_fn(d, level, |t, o| {
        for (a, x) in o.iter_mut().enumerate() {
            *x = c[0][a] * t * (1.0 - t)
                + c[1][a] * (PI * t).sin()
                + c[2][a] * t * t * (1.0 - t)
                + c[3][a] * (2.0 * PI * t).sin() * 0.5;
        }
    });
    // sin(kπ) is not exactly zero in floating point; pin the loop.
    let n = h.cells();
    let mut v = h.values().to_vec();
    v[n * d..].fill(0.0);
    h = SampledPath::new(d, level, v).expect("same shape");
    h
}

fn run_weitzenboeck(c: &ExperimentConfig, s: &SeededStream) -> Result<Outcome> {
    let g = c.group;
    let modes: Vec<usize> = c.ints("modes").iter().map(|&k| k as usize).collect();
    let tol = c.float("tolerance");
    let mut out = Outcome::new();
    for i in 0..c.n_seeds as u64 {
        let mut rng = s.rng(i);
        let alpha = LoopOneForm::new(g, random_h0(g, c.level, &mut rng))?;
        let h = random_h0(g, c.level, &mut rng);
        let rows = weitzenboeck_truncation(&alpha, &h, &modes)?;
        let closed = weitzenboeck_closed(&alpha, &h)?;
        for r in &rows {
            out.row("s1", &[p("pair", i), p("K", r.modes)], r.s1, None, r.modes);
            out.row("s2", &[p("pair", i), p("K", r.modes)], r.s2, None, r.modes);
        }
        out.row("s1_closed", &[p("pair", i)], closed.s1, None, 1);
        out.row("s2_closed", &[p("pair", i)], closed.s2, None, 1);
        out.row("sum_closed", &[p("pair", i)], closed.sum, None, 1);
        let last = rows.last().copied();
        for (name, get, lim) in [
            ("s1", (|r: &crate::loops::TruncationRow| r.s1) as fn(&_) -> f64, closed.s1),
            ("s2", |r: &crate::loops::TruncationRow| r.s2, closed.s2),
        ] {
            let v: Vec<f64> = rows.iter().map(get).collect();
            let diffs: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            let cauchy = diffs.windows(2).all(|d| d[1] < d[0]) || diffs.iter().all(|&d| d < 1e-12);
            out.check(format!("cauchy_{name}/pair{i}"), cauchy, format!("successive differences {}", diffs.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(" ")));
            if let Some(lr) = last {
                let err = (get(&lr) - lim).abs();
                if g == Group::Torus {
                    out.row(format!("{name}_abs_error"), &[p("pair", i), p("K", lr.modes)], err, None, lr.modes);
                    let all = v.iter().all(|x| x.abs() < 1e-12) && lim.abs() < 1e-12;
                    out.check(format!("abelian_{name}/pair{i}"), all, "every frame term vanishes");
                } else {
                    let rel = err / lim.abs();
                    out.row(format!("{name}_rel_error"), &[p("pair", i), p("K", lr.modes)], rel, None, lr.modes);
                    out.check(format!("limit_{name}/pair{i}"), rel <= tol, format!("relative error {rel:.4} <= {tol}"));
                }
            }
        }
    }
    Ok(out)
}

fn f_test(g: &Matrix3<f64>) -> f64 {
    g[(0, 0)] + 0.5 * g[(1, 2)]
}

fn g_test(g: &Matrix3<f64>) -> f64 {
    1.0 + g[(0, 1)] * g[(2, 2)]
}

fn run_ibp(c: &ExperimentConfig, s: &SeededStream) -> Result<Outcome> {
    let mut out = Outcome::new();
    // Torus: γ(½) is rotation by the bridge value x ~ N(0,¼) about the third
    // axis, so f = cos x, g = 1 − sin x and X_h f·g = −h(½) sin x (1 − sin x).
    let t = Group::Torus;
    let ht = SampledPath::from_fn(1, c.level, |tt, o| o[0] = (PI * tt).sin());
    let h_half = ht.point(ht.cells() / 2)[0];
    let oracle = abelian_ibp_oracle(|x| -x.sin() * (1.0 - x.sin()), h_half);
    let ra = ibp_mc_check(t, f_test, g_test, &ht, &TubeSpec::new(c.float("abelian_epsilon"))?, c.int("n_abelian") as usize, &s.child(1))?;
    out.row("abelian_oracle", &[], oracle, None, 1);
    out.row("abelian_lhs", &[], ra.lhs, Some(ra.lhs_stderr), ra.accepted);
    out.row("abelian_rhs", &[], ra.rhs, Some(ra.rhs_stderr), ra.accepted);
    out.check(
        "abelian_lhs_vs_oracle",
        (ra.lhs - oracle).abs() <= 3.0 * ra.lhs_stderr,
        format!("|{:.4e}| <= 3*{:.3e}", ra.lhs - oracle, ra.lhs_stderr),
    );
    out.check(
        "abelian_rhs_vs_oracle",
        (ra.rhs - oracle).abs() <= 3.0 * ra.rhs_stderr,
        format!("|{:.4e}| <= 3*{:.3e}", ra.rhs - oracle, ra.rhs_stderr),
    );
    let g = c.group;
    let v = Vector3::new(1.0, -0.5, 0.8);
    let h = SampledPath::from_fn(g.dim(), c.level, |tt, o| {
        for (i, x) in o.iter_mut().enumerate() {
            *x = (PI * tt).sin() * v[i];
        }
    });
    let mut corrections = Vec::new();
    for (j, &eps) in c.floats("epsilons").iter().enumerate() {
        let r = ibp_mc_check(g, f_test, g_test, &h, &TubeSpec::new(eps)?, c.n_seeds, &s.child(10 + j as u64))?;
        let pt = [p("epsilon", eps)];
        let corr = (r.diff_unweighted - r.diff).abs();
        out.row("tube_acceptance", &pt, r.accepted as f64 / r.proposals as f64, None, r.proposals);
        out.row("lhs", &pt, r.lhs, Some(r.lhs_stderr), r.accepted);
        out.row("rhs", &pt, r.rhs, Some(r.rhs_stderr), r.accepted);
        out.row("difference", &pt, r.diff, Some(r.stderr), r.accepted);
        out.row("difference_unweighted", &pt, r.diff_unweighted, Some(r.stderr_unweighted), r.accepted);
        out.row("pinning_correction", &pt, corr, None, r.accepted);
        out.row("pin_error_max", &pt, r.max_pin_error, None, r.accepted);
        out.check(format!("ibp/eps={eps}"), r.within(3.0), format!("|{:.3e}| <= 3*{:.3e}", r.diff, r.stderr));
        corrections.push(corr);
    }
    if corrections.len() >= 2 {
        let (a, b) = (corrections[0], corrections[corrections.len() - 1]);
        out.check("refinement_bias_decreasing", b < a, format!("pinning correction {a:.3e} -> {b:.3e}"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for (name, _) in list_experiments() {
            let c = ExperimentConfig::default_for(name).unwrap();
            assert!(c.validate().is_empty(), "{name}");
            assert_eq!(ExperimentConfig::parse(&c.to_config_text()).unwrap(), c);
        }
    }

    #[test]
    fn rejects_unknown_and_bad_keys() {
        let e = ExperimentConfig::parse("experiment = small-ball\nfoo = 1\n[params]\nbar = 2\n").unwrap_err();
        assert_eq!(e.len(), 2);
        let e = ExperimentConfig::parse("experiment = small-ball\n[besov]\nm = 17\n").unwrap_err();
        assert!(e[0].contains("even"));
        let e = ExperimentConfig::parse("experiment = small-ball\n[besov]\ntheta = 0.8\ntheta_prime = 0.75\n")
            .unwrap_err();
        assert!(e[0].contains("theta'"));
        assert!(ExperimentConfig::parse("experiment = nope\n").is_err());
    }

    #[test]
    fn set_overrides_keys() {
        let mut c = ExperimentConfig::default_for("ibp-mc").unwrap();
        c.set("n_seeds", "10").unwrap();
        c.set("params.epsilons", "0.5").unwrap();
        c.set("besov.m", "20").unwrap();
        assert_eq!((c.n_seeds, c.params["epsilons"].as_str(), c.besov.m), (10, "0.5", 20));
    }
}
