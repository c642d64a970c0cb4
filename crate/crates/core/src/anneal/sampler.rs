use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::schedule::{ResolvedSchedule, Schedule};
use super::AnnealError;
use crate::encode::QuboModel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub bits: Vec<u8>,
    pub energy: f64,
    pub multiplicity: usize,
}

impl Sample {
    pub fn bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub schedule: ResolvedSchedule,
    pub model_hash: String,
    pub dimension: usize,
    pub rng: String,
}

/// Distinct best-of-read states, sorted by energy; equal energies keep the
/// order in which reads first produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub metadata: SampleMetadata,
}

impl SampleSet {
    pub fn best(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn total_reads(&self) -> usize {
        self.samples.iter().map(|s| s.multiplicity).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnnealError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "energy", "multiplicity", "bitstring"])?;
        for (rank, s) in self.samples.iter().enumerate() {
            w.write_record([
                rank.to_string(),
                format!("{:?}", s.energy),
                s.multiplicity.to_string(),
                s.bitstring(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&self.metadata).expect("metadata serializes")
    }
}

struct ReadOutcome {
    best: Vec<u8>,
    trace: Vec<f64>,
}

fn read_rng(seed: u64, read: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(read as u64);
    rng
}

/// One read: random start, `sweeps` passes of `n` uniformly chosen flip
/// proposals with Metropolis acceptance. Local fields
/// `f_i = a_i + sum_j b_ij x_j` make a proposal O(1) and an accepted flip
/// O(degree).
fn single_read<S: Scalar>(
    model: &QuboModel<S>,
    schedule: &ResolvedSchedule,
    read: usize,
    traced: bool,
) -> ReadOutcome {
    let n = model.dimension();
    let mut rng = read_rng(schedule.seed, read);
    let mut x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
    let mut field: Vec<S> = model.linear().to_vec();
    for i in 0..n {
        if x[i] != 0 {
            for (j, b) in model.neighbors(i) {
                field[j] += b;
            }
        }
    }
    let mut energy = model.energy(&x);
    let mut best = x.clone();
    let mut best_energy = energy;
    let mut trace = Vec::with_capacity(if traced { schedule.sweeps } else { 0 });

    for k in 0..schedule.sweeps {
        let beta = 1.0 / schedule.temperature(k);
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            let delta = if x[i] == 0 { field[i] } else { -field[i] };
            let d = delta.as_f64();
            let accept = d <= 0.0 || rng.gen::<f64>() < (-d * beta).exp();
            if !accept {
                continue;
            }
            x[i] ^= 1;
            let sign = if x[i] != 0 { S::one() } else { -S::one() };
            for (j, b) in model.neighbors(i) {
                field[j] += sign * b;
            }
            energy += delta;
            if energy < best_energy {
                best_energy = energy;
                best.copy_from_slice(&x);
            }
        }
        if traced {
            trace.push(best_energy.as_f64());
        }
    }
    ReadOutcome { best, trace }
}

fn run<S: Scalar>(
    model: &QuboModel<S>,
    schedule: &Schedule,
    traced: bool,
) -> Result<(SampleSet, Vec<Vec<f64>>), AnnealError> {
    if model.dimension() == 0 {
        return Err(AnnealError::EmptyModel);
    }
    let resolved = schedule.resolve(model)?;
    let outcomes: Vec<ReadOutcome> = (0..resolved.reads)
        .into_par_iter()
        .map(|r| single_read(model, &resolved, r, traced))
        .collect();

    let mut index: HashMap<&[u8], usize> = HashMap::new();
    let mut samples: Vec<Sample> = Vec::new();
    for o in &outcomes {
        match index.get(o.best.as_slice()) {
            Some(&k) => samples[k].multiplicity += 1,
            None => {
                index.insert(&o.best, samples.len());
                samples.push(Sample {
                    bits: o.best.clone(),
                    energy: model.energy(&o.best).as_f64(),
                    multiplicity: 1,
                });
            }
        }
    }
    // stable sort keeps first-encountered order among equal energies
    samples.sort_by(|a, b| a.energy.total_cmp(&b.energy));

    let set = SampleSet {
        samples,
        metadata: SampleMetadata {
            schedule: resolved,
            model_hash: model.content_hash(),
            dimension: model.dimension(),
            rng: "ChaCha8Rng::seed_from_u64(seed), stream = read index".into(),
        },
    };
    let traces = outcomes.into_iter().map(|o| o.trace).collect();
    Ok((set, traces))
}

/// Simulated annealing over `schedule.reads` independent reads. Each read
/// keeps its best-so-far state. Results depend only on the model and the
/// schedule, not on the number of worker threads.
pub fn anneal<S: Scalar>(model: &QuboModel<S>, schedule: &Schedule) -> Result<SampleSet, AnnealError> {
    run(model, schedule, false).map(|(s, _)| s)
}

/// As [`anneal`], also returning per read the best energy after every sweep.
pub fn anneal_traced<S: Scalar>(
    model: &QuboModel<S>,
    schedule: &Schedule,
) -> Result<(SampleSet, Vec<Vec<f64>>), AnnealError> {
    run(model, schedule, true)
}
