use powersum_core::QuadConfig;
use serde::{Deserialize, Serialize};

/// A grid point moved off the origin, where the density formulas are
/// undefined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedPoint {
    pub index: usize,
    pub requested: f64,
    pub used: f64,
}

/// Everything needed to repeat a run. `argv` is replayed verbatim by
/// `powersum rerun`; the remaining fields describe the run for readers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub d: u32,
    pub n: u32,
    pub epsilon: Option<f64>,
    pub quadrature: QuadConfig,
    pub seed: u64,
    pub rng: Option<String>,
    pub version: String,
    pub threads: usize,
    pub argv: Vec<String>,
    pub duration_seconds: f64,
    pub shifted_points: Vec<ShiftedPoint>,
    pub converged: Vec<bool>,
    pub all_converged: bool,
}

impl RunManifest {
    pub fn new(
        command: &str,
        d: u32,
        n: u32,
        quadrature: QuadConfig,
        seed: u64,
        argv: &[String],
    ) -> Self {
        Self {
            command: command.to_string(),
            d,
            n,
            epsilon: None,
            quadrature,
            seed,
            rng: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            // the program name is not part of the replayable flags
            argv: argv.iter().skip(1).cloned().collect(),
            duration_seconds: 0.0,
            shifted_points: Vec::new(),
            converged: Vec::new(),
            all_converged: true,
        }
    }

    pub fn record_convergence(&mut self, flags: Vec<bool>) {
        self.all_converged = flags.iter().all(|&c| c);
        self.converged = flags;
    }
}
