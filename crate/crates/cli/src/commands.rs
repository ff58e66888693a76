//! Command runners. Each returns the finished JSON document plus the
//! process exit code; `main` only parses, dispatches and writes.

use std::f64::consts::PI;

use anyhow::{bail, Context};
use rayon::prelude::*;

use sqpc::adversary::{
    controlled_rotation_attack, detection_round_outcome, exact_detection, parse_attack,
    theorem1_check, AttackSpec, CaseStat, DetectionMethod, SampledDetection,
};
use sqpc::parties::ALL_CASES;
use sqpc::protocol::{run_protocol, to_groups, KeySource, SqpcConfig, Thresholds};
use sqpc::rng::{domain, stream};
use sqpc::sqkd;

use crate::args::{AttackSweepArgs, Command, OracleArgs, RunArgs, SqkdArgs, Theorem1Args};
use crate::report::{
    oracle_csv, run_report_csv, sweep_csv, Envelope, OracleConfigDoc, RunConfigDoc, SqkdConfigDoc,
    SqkdReportDoc, StatSummary, SweepConfigDoc, SweepReportDoc, Theorem1ConfigDoc,
    Theorem1PointDoc, Theorem1ReportDoc,
};

/// Tolerances for the probe-independence verdict.
pub const DETECTION_EPS: f64 = 1e-9;
pub const DISTINGUISHABILITY_EPS: f64 = 1e-6;

/// Exit code for a protocol (or key-establishment) abort.
pub const EXIT_ABORT: i32 = 2;

pub struct Outcome {
    pub json: String,
    pub csv: Option<String>,
    pub exit_code: i32,
}

pub fn execute(command: &Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Run(args) => run(args),
        Command::AttackSweep(args) => attack_sweep(args),
        Command::Oracle(args) => oracle(args),
        Command::Theorem1(args) => theorem1(args),
        Command::Sqkd(args) => sqkd_cmd(args),
    }
}

fn parse_key_source(text: &str, l: usize) -> anyhow::Result<KeySource> {
    if text == "sqkd" {
        return Ok(KeySource::default());
    }
    if let Some(hex) = text.strip_prefix("fixed:") {
        let value = u64::from_str_radix(hex, 16)
            .with_context(|| format!("`{hex}` is not a hex key value"))?;
        let bits = to_groups(value, l)
            .map_err(|e| anyhow::anyhow!("fixed key: {e}"))?
            .bits()
            .to_vec();
        return Ok(KeySource::Fixed(bits));
    }
    bail!("key source must be `sqkd` or `fixed:<hex>`, got `{text}`");
}

pub fn run(args: &RunArgs) -> anyhow::Result<Outcome> {
    let attack = parse_attack(&args.attack)?;
    let config = SqpcConfig {
        l: args.l,
        delta: args.delta,
        thresholds: Thresholds::uniform(args.threshold),
        seed: args.seed,
        key_source: parse_key_source(&args.key_source, args.l)?,
        attack,
    };
    let x = to_groups(args.x, args.l)?;
    let y = to_groups(args.y, args.l)?;
    let report = run_protocol(&config, &x, &y)?;
    let exit_code = if report.verdict.is_aborted() { EXIT_ABORT } else { 0 };
    let csv = args.csv.is_some().then(|| run_report_csv(&report));
    let envelope = Envelope::new(
        "run",
        Some(args.seed),
        RunConfigDoc {
            l: args.l,
            delta: args.delta,
            x: args.x,
            y: args.y,
            attack: config.attack.canonical_name(),
            key_source: args.key_source.clone(),
            threshold: args.threshold,
        },
        report,
    );
    Ok(Outcome {
        json: envelope.to_json(),
        csv,
        exit_code,
    })
}

/// Monte Carlo detection rounds fanned out across workers. Each round
/// draws only from its own `(seed, SWEEP, round)` stream and the tallies
/// are order-independent sums, so the result is bit-identical to the
/// serial [`sqpc::adversary::sampled_detection`].
pub fn parallel_sampled_detection(spec: &AttackSpec, samples: u64, seed: u64) -> SampledDetection {
    let attack = spec.build();
    let per_case = (0..samples)
        .into_par_iter()
        .fold(
            || [CaseStat::default(); 4],
            |mut acc, round| {
                let (case, error) = detection_round_outcome(attack.as_ref(), seed, round);
                acc[case.index()].rounds += 1;
                acc[case.index()].errors += u64::from(error);
                acc
            },
        )
        .reduce(
            || [CaseStat::default(); 4],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.rounds += y.rounds;
                    x.errors += y.errors;
                }
                a
            },
        );
    SampledDetection {
        attack: spec.canonical_name(),
        per_case,
        samples,
        seed,
    }
}

fn in_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    if threads == 0 {
        Ok(job())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .context("building worker pool")?;
        Ok(pool.install(job))
    }
}

pub fn attack_sweep(args: &AttackSweepArgs) -> anyhow::Result<Outcome> {
    if args.samples == 0 {
        bail!("--samples must be at least 1");
    }
    let spec = parse_attack(&args.attack)?;
    let exact = exact_detection(&spec)?;
    let sampled = in_pool(args.threads, || {
        parallel_sampled_detection(&spec, args.samples, args.seed)
    })?;

    let active = spec.build().active_cases();
    let mut metrics = Vec::new();
    let mut all_ok = true;
    for case in ALL_CASES {
        let idx = case.index();
        let stat = sampled.per_case[idx];
        let p = exact.per_case_detection[idx];
        let sigma = (p * (1.0 - p) / stat.rounds.max(1) as f64).sqrt();
        let diff = (stat.rate() - p).abs();
        all_ok &= diff <= 4.0 * sigma || (sigma == 0.0 && diff == 0.0);
        metrics.push(StatSummary {
            metric: format!("case_{}_detection", format!("{case:?}").to_lowercase()),
            estimate: stat.rate(),
            std_error: stat.std_error(),
            samples: stat.rounds,
            exact_value: Some(p),
        });
    }
    metrics.push(StatSummary {
        metric: "average_detection".into(),
        estimate: sampled.average_detection(&active),
        std_error: 0.0,
        samples: args.samples,
        exact_value: Some(exact.average_detection),
    });

    let doc = SweepReportDoc {
        oracle: exact,
        monte_carlo: sampled,
        metrics,
        all_within_four_sigma: all_ok,
    };
    let csv = args.csv.is_some().then(|| sweep_csv(&doc));
    let envelope = Envelope::new(
        "attack-sweep",
        Some(args.seed),
        SweepConfigDoc {
            attack: spec.canonical_name(),
            samples: args.samples,
        },
        doc,
    );
    Ok(Outcome {
        json: envelope.to_json(),
        csv,
        exit_code: 0,
    })
}

pub fn oracle(args: &OracleArgs) -> anyhow::Result<Outcome> {
    let spec = parse_attack(&args.attack)?;
    let report = exact_detection(&spec)?;
    debug_assert_eq!(report.method, DetectionMethod::Exact);
    let csv = args.csv.is_some().then(|| oracle_csv(&report));
    let envelope = Envelope::new(
        "oracle",
        None,
        OracleConfigDoc {
            attack: spec.canonical_name(),
        },
        report,
    );
    Ok(Outcome {
        json: envelope.to_json(),
        csv,
        exit_code: 0,
    })
}

pub fn theorem1(args: &Theorem1Args) -> anyhow::Result<Outcome> {
    if args.grid == 0 {
        bail!("--grid must be at least 1");
    }
    if args.probe_qubits == 0 {
        bail!("--probe-qubits must be at least 1");
    }
    let angles: Vec<f64> = if args.grid == 1 {
        vec![0.0]
    } else {
        (0..args.grid)
            .map(|i| PI * i as f64 / (args.grid - 1) as f64)
            .collect()
    };
    let pairs: Vec<(f64, f64)> = angles
        .iter()
        .flat_map(|&tb| angles.iter().map(move |&tc| (tb, tc)))
        .collect();

    let probe = args.probe_qubits;
    let (grid_points, compensated_points) = in_pool(args.threads, || {
        let grid_points: Vec<Theorem1PointDoc> = pairs
            .par_iter()
            .map(|&(tb, tc)| {
                let spec = controlled_rotation_attack(tb, tc, probe, false)
                    .expect("valid family parameters");
                let report = theorem1_check(&spec, DETECTION_EPS, DISTINGUISHABILITY_EPS)
                    .expect("entangle-measure spec");
                Theorem1PointDoc::from_report(tb, tc, &report)
            })
            .collect();
        let compensated_points: Vec<Theorem1PointDoc> = angles
            .par_iter()
            .map(|&theta| {
                let spec = controlled_rotation_attack(theta, theta, probe, true)
                    .expect("valid family parameters");
                let report = theorem1_check(&spec, DETECTION_EPS, DISTINGUISHABILITY_EPS)
                    .expect("entangle-measure spec");
                Theorem1PointDoc::from_report(theta, theta, &report)
            })
            .collect();
        (grid_points, compensated_points)
    })?;

    let violations = grid_points
        .iter()
        .chain(&compensated_points)
        .filter(|p| p.verdict == sqpc::adversary::Theorem1Verdict::Violated)
        .count();
    let compensated_all_quiet = compensated_points
        .iter()
        .all(|p| p.average_detection <= DETECTION_EPS && p.distinguishability <= DISTINGUISHABILITY_EPS);
    let doc = Theorem1ReportDoc {
        grid_points,
        compensated_points,
        violations,
        all_consistent: violations == 0,
        compensated_all_quiet,
    };
    let envelope = Envelope::new(
        "theorem1",
        Some(args.seed),
        Theorem1ConfigDoc {
            grid: args.grid,
            probe_qubits: args.probe_qubits,
            detection_eps: DETECTION_EPS,
            distinguishability_eps: DISTINGUISHABILITY_EPS,
        },
        doc,
    );
    Ok(Outcome {
        json: envelope.to_json(),
        csv: None,
        exit_code: 0,
    })
}

pub fn sqkd_cmd(args: &SqkdArgs) -> anyhow::Result<Outcome> {
    if args.l == 0 {
        bail!("--L must be at least 1");
    }
    if !(args.check_fraction > 0.0 && args.check_fraction < 1.0) {
        bail!("--check-fraction must lie strictly between 0 and 1");
    }
    let mut rng = stream(args.seed, &[domain::SQKD]);
    let (doc, exit_code) = match sqkd::establish_key(args.l, args.check_fraction, &mut rng) {
        Ok(result) => (SqkdReportDoc::Established(result), 0),
        Err(abort) => (
            SqkdReportDoc::Aborted {
                reason: abort.to_string(),
            },
            EXIT_ABORT,
        ),
    };
    let envelope = Envelope::new(
        "sqkd",
        Some(args.seed),
        SqkdConfigDoc {
            l: args.l,
            check_fraction: args.check_fraction,
        },
        doc,
    );
    Ok(Outcome {
        json: envelope.to_json(),
        csv: None,
        exit_code,
    })
}
