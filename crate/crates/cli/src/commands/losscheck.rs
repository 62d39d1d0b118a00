use lemurkit::losses::{finite_diff_check, grouped_mnr_loss, mnr_loss, EmbeddingMatrix, LossBatch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::LossCheckArgs;
use crate::config::Config;
use crate::output::write_output;
use crate::UsageError;

const TEMPERATURES: [f64; 3] = [0.05, 0.2, 1.0];
const STEP: f64 = 1e-5;
const GRADIENT_TOLERANCE: f64 = 1e-4;
const REDUCTION_TOLERANCE: f64 = 1e-12;

#[derive(Serialize)]
struct Summary {
    cases: usize,
    max_rel_error: f64,
    failures: usize,
}

fn random_matrix(r: &mut ChaCha8Rng, b: usize, d: usize) -> EmbeddingMatrix {
    loop {
        let data: Vec<f64> = (0..b * d).map(|_| r.gen_range(-2.0..2.0)).collect();
        if let Ok(m) = EmbeddingMatrix::new(b, d, data) {
            if (0..b).all(|i| m.row(i).iter().any(|x| x.abs() > 1e-3)) {
                return m;
            }
        }
    }
}

/// Runs one case; returns its worst gradient error and whether it failed.
fn run_case(r: &mut ChaCha8Rng, t: f64) -> anyhow::Result<(f64, bool)> {
    let b = r.gen_range(1..=8);
    let d = r.gen_range(1..=16);
    let batch = LossBatch::new(random_matrix(r, b, d), random_matrix(r, b, d), t)?;
    let groups: Vec<Vec<usize>> = (0..b).map(|i| (0..b).filter(|&j| j == i || r.gen_bool(0.35)).collect()).collect();

    let plain = finite_diff_check(&batch, STEP)?;
    let grouped = finite_diff_check(&batch.clone().with_groups(groups)?, STEP)?;
    let worst = plain.max(grouped);

    let singleton = batch.clone().with_groups((0..b).map(|i| vec![i]).collect())?;
    let gap = (mnr_loss(&batch)?.value - grouped_mnr_loss(&singleton)?.value).abs();
    let passed = worst < GRADIENT_TOLERANCE && gap <= REDUCTION_TOLERANCE;
    Ok((worst, !passed))
}

pub fn loss_check(args: &LossCheckArgs, config: &Config) -> anyhow::Result<()> {
    let temperature = args.temperature.or(config.temperature);
    if temperature.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
        return Err(UsageError("--temperature must be positive and finite".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed(args.seed));
    let mut summary = Summary { cases: args.cases, max_rel_error: 0.0, failures: 0 };
    for case in 0..args.cases {
        let t = temperature.unwrap_or(TEMPERATURES[case % TEMPERATURES.len()]);
        let (worst, failed) = run_case(&mut rng, t)?;
        summary.max_rel_error = summary.max_rel_error.max(worst);
        if failed {
            eprintln!("case {case}: check failed (temperature {t}, relative error {worst:e})");
            summary.failures += 1;
        }
    }
    let mut json = serde_json::to_string(&summary)?;
    json.push('\n');
    write_output(args.out.as_deref(), json.as_bytes())?;
    if summary.failures > 0 {
        anyhow::bail!("{} of {} cases failed", summary.failures, summary.cases);
    }
    Ok(())
}
