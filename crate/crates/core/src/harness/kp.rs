use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::HarnessError;
use crate::anneal::{anneal, kp_exact_dp, Schedule};
use crate::encode::{kp_qubo_log, kp_qubo_onehot, kp_qubo_unbalanced, QuboModel, KP_UNBALANCED_DEFAULTS};
use crate::model::KnapsackInstance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpRow {
    pub encoding: String,
    pub parameters: String,
    pub seed: u64,
    pub value: u64,
    pub weight: u64,
    pub exact_value: u64,
    pub optimal: bool,
    pub runtime_ms: Option<f64>,
}

/// The encodings run by the demo: log at two penalty scales, one-hot and
/// unbalanced.
pub fn kp_demo_models(kp: &KnapsackInstance) -> Result<Vec<(String, String, QuboModel<f64>)>, HarnessError> {
    let (lin, quad) = KP_UNBALANCED_DEFAULTS;
    Ok(vec![
        ("log".into(), "lambda0=1".into(), kp_qubo_log(kp, 1.0)?),
        ("log".into(), "lambda0=10000".into(), kp_qubo_log(kp, 1e4)?),
        ("one_hot".into(), "lambda0=0.1;lambda1=1000".into(), kp_qubo_onehot(kp, 0.1, 1e3)?),
        (
            "unbalanced".into(),
            format!("lambda_lin={lin};lambda_quad={quad}"),
            kp_qubo_unbalanced(kp, lin, quad, 1.0)?,
        ),
    ])
}

/// Anneals every demo encoding and compares the best feasible decoded
/// selection with the exact optimum. The selection is read from the item
/// bits of the lowest-energy sample that respects the capacity.
pub fn run_kp_demo(
    kp: &KnapsackInstance,
    schedule: &Schedule,
    record_runtime: bool,
) -> Result<Vec<KpRow>, HarnessError> {
    let (exact, _) = kp_exact_dp(kp);
    let n = kp.len();
    let mut rows = Vec::new();
    for (encoding, parameters, model) in kp_demo_models(kp)? {
        let start = Instant::now();
        let set = anneal(&model, schedule)?;
        let (weight, value) = set
            .samples
            .iter()
            .map(|s| kp.evaluate(&s.bits[..n]))
            .find(|&(w, _)| w <= kp.capacity())
            .unwrap_or((0, 0));
        rows.push(KpRow {
            encoding,
            parameters,
            seed: schedule.seed,
            value,
            weight,
            exact_value: exact,
            optimal: value == exact,
            runtime_ms: record_runtime.then(|| start.elapsed().as_secs_f64() * 1e3),
        });
    }
    Ok(rows)
}

pub fn write_kp_summary(path: &Path, rows: &[KpRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["encoding", "parameters", "seed", "value", "weight", "exact_value", "optimal", "runtime_ms"])?;
    for r in rows {
        w.write_record([
            r.encoding.clone(),
            r.parameters.clone(),
            r.seed.to_string(),
            r.value.to_string(),
            r.weight.to_string(),
            r.exact_value.to_string(),
            r.optimal.to_string(),
            r.runtime_ms.map(|t| format!("{t}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
