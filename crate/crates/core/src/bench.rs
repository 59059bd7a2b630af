//! Encryption and routing timings over an `(n, b)` grid.

use std::fmt;
use std::io::{self, Write};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::encryption::CIPHERTEXT_PAYLOAD_BYTES;
use crate::error::Error;
use crate::sim::{run_setup, SimConfig, SimError};

pub const CSV_HEADER: &str = "n,b,enc_ms,route_ms,pairings,ct_bytes";

/// One measured grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub b: u32,
    /// Median over reps of the mean per-user encryption time.
    pub enc_ms: f64,
    /// Median over reps of the per-epoch routing time.
    pub route_ms: f64,
    pub pairings: u64,
    pub ct_bytes: usize,
}

impl fmt::Display for BenchRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{:.4},{:.4},{},{}",
            self.n, self.b, self.enc_ms, self.route_ms, self.pairings, self.ct_bytes
        )
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub ns: Vec<usize>,
    pub bits: Vec<u32>,
    pub reps: usize,
    pub seed: u64,
    pub parallel: bool,
}

impl BenchConfig {
    /// Fixed `n = 10`, varying message width.
    pub fn width_grid() -> Self {
        BenchConfig {
            ns: vec![10],
            bits: (6..=10).collect(),
            reps: 5,
            seed: 0,
            parallel: false,
        }
    }

    /// Fixed `b = 8`, varying the number of users.
    pub fn user_grid() -> Self {
        BenchConfig {
            ns: vec![5, 10, 15, 20, 25],
            bits: vec![8],
            reps: 3,
            seed: 0,
            parallel: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("n={n} b={b}: {source}")]
    Protocol { n: usize, b: u32, source: Error },
    #[error("n={n} b={b}: router output differs from the permuted input at epoch {epoch}")]
    WrongOutput { n: usize, b: u32, epoch: u64 },
    #[error("n={n} b={b}: counted {got} pairings, expected {expected}")]
    PairingCount { n: usize, b: u32, got: u64, expected: u64 },
    #[error("reps must be at least 1")]
    NoReps,
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

/// A grid point with the raw samples behind its medians.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub row: BenchRow,
    /// One entry per user per measured epoch.
    pub enc_samples_ms: Vec<f64>,
    /// One entry per measured epoch.
    pub route_samples_ms: Vec<f64>,
}

pub fn bench_point(n: usize, b: u32, reps: usize, seed: u64, parallel: bool) -> Result<BenchRow, BenchError> {
    measure_point(n, b, reps, seed, parallel).map(|m| m.row)
}

/// Sets up once, then runs one warm-up epoch and `reps` measured epochs.
pub fn measure_point(n: usize, b: u32, reps: usize, seed: u64, parallel: bool) -> Result<Measurement, BenchError> {
    if reps == 0 {
        return Err(BenchError::NoReps);
    }
    let mut cfg = SimConfig::new(n, b, reps as u64 + 1, seed);
    cfg.parallel = parallel;
    let mut sim = run_setup(&cfg)?;
    let mut msg_rng = ChaCha20Rng::seed_from_u64(seed ^ 0xbe0c);
    let proto = |source| BenchError::Protocol { n, b, source };
    let (mut enc, mut route) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
    let mut pairings = 0;
    let mut enc_samples = Vec::with_capacity(n * reps);
    for rep in 0..=reps {
        let t = sim.next_epoch();
        let inputs: Vec<u64> = (0..n).map(|_| msg_rng.gen_range(0..1u64 << b)).collect();
        let mut cts = Vec::with_capacity(n);
        let mut enc_times = Vec::with_capacity(n);
        for (i, &x) in inputs.iter().enumerate() {
            let sender = sim.sender_mut(i);
            let share = sender.share(t).map_err(proto)?;
            let start = Instant::now();
            let ct = sender.encrypt_with_share(&share, x, t, b).map_err(proto)?;
            enc_times.push(start.elapsed().as_secs_f64() * 1e3);
            cts.push(ct);
        }
        let router = sim.router_mut();
        router.reset_pairing_count();
        let start = Instant::now();
        let out = router.route(&cts, t).map_err(proto)?;
        let route_ms = start.elapsed().as_secs_f64() * 1e3;
        pairings = router.pairing_count();
        let expected = 8 * (n as u64).pow(2);
        if pairings != expected {
            return Err(BenchError::PairingCount {
                n,
                b,
                got: pairings,
                expected,
            });
        }
        if out != sim.expected_output(&inputs) {
            return Err(BenchError::WrongOutput { n, b, epoch: t.0 });
        }
        if rep > 0 {
            enc.push(enc_times.iter().sum::<f64>() / n as f64);
            route.push(route_ms);
            enc_samples.extend(enc_times);
        }
    }
    let row = BenchRow {
        n,
        b,
        enc_ms: median(&mut enc),
        route_ms: median(&mut route.clone()),
        pairings,
        ct_bytes: CIPHERTEXT_PAYLOAD_BYTES,
    };
    Ok(Measurement {
        row,
        enc_samples_ms: enc_samples,
        route_samples_ms: route,
    })
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, BenchError> {
    let mut rows = Vec::with_capacity(cfg.ns.len() * cfg.bits.len());
    for &n in &cfg.ns {
        for &b in &cfg.bits {
            rows.push(bench_point(n, b, cfg.reps, cfg.seed, cfg.parallel)?);
        }
    }
    Ok(rows)
}

/// Parallel runs carry a leading `# router=parallel` line.
pub fn write_csv(mut w: impl Write, rows: &[BenchRow], parallel: bool) -> io::Result<()> {
    if parallel {
        writeln!(w, "# router=parallel")?;
    }
    writeln!(w, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    Ok(())
}
