//! Open-boundary mixed-field Ising chain and the two experiments run on it:
//! relaxation of a single-spin observable, and the scaling of the estimator
//! distance with the number of dual states.
//!
//! Qubit ordering: site 0 is the slowest tensor index; `|0⟩` is spin up along z.

use serde::{Deserialize, Serialize};

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{herm_expm, paulis, Propagator};
use crate::randsrc::derive_seed;
use crate::rdual::{distance_report, evolved_state_values, exact_dual, DualSampler, EstimatorReport};
use crate::stats;
use crate::{ComplexMatrix, StateVector, C64};

/// Largest chain accepted unless the cap is raised explicitly.
pub const DEFAULT_SPIN_CAP: usize = 12;

fn default_cap() -> usize {
    DEFAULT_SPIN_CAP
}

/// `H = −Σ Z_i Z_{i+1} − g Σ X_i − h Σ Z_i` with open boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingConfig {
    pub n: usize,
    pub g: f64,
    pub h: f64,
    #[serde(default = "default_cap")]
    pub spin_cap: usize,
}

impl IsingConfig {
    pub fn new(n: usize, g: f64, h: f64) -> Result<Self> {
        let cfg = Self {
            n,
            g,
            h,
            spin_cap: DEFAULT_SPIN_CAP,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_spin_cap(mut self, cap: usize) -> Self {
        self.spin_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("chain needs at least 2 spins, got {}", self.n)));
        }
        if !self.g.is_finite() || !self.h.is_finite() {
            return Err(Error::Config("fields must be finite".into()));
        }
        if self.g == 0.0 && self.h == 0.0 {
            return Err(Error::Config("g and h must not both vanish".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    fn check_cap(&self) -> Result<()> {
        if self.n > self.spin_cap {
            return Err(Error::ResourceCap(format!(
                "{} spins exceed the cap of {} (dense {}x{} complex matrices need about {} MiB each)",
                self.n,
                self.spin_cap,
                self.dim(),
                self.dim(),
                memory_mib(self.dim())
            )));
        }
        Ok(())
    }
}

/// Memory of one dense `d × d` complex matrix in MiB.
pub fn memory_mib(d: usize) -> usize {
    (d * d * 16).div_ceil(1 << 20)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Self::X),
            "y" => Ok(Self::Y),
            "z" => Ok(Self::Z),
            other => Err(Error::Config(format!("unknown Pauli axis {other:?}"))),
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        let [x, y, z] = paulis::<f64>();
        match self {
            Self::X => x,
            Self::Y => y,
            Self::Z => z,
        }
    }
}

/// Initial product state: all spins up along z, or all along +y.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Z,
    Y,
}

impl Polarization {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "z" => Ok(Self::Z),
            "y" => Ok(Self::Y),
            other => Err(Error::Config(format!("unknown polarization {other:?}"))),
        }
    }

    pub fn axis(self) -> PauliAxis {
        match self {
            Self::Z => PauliAxis::Z,
            Self::Y => PauliAxis::Y,
        }
    }
}

/// `|↑_z⟩^⊗n` or `((|0⟩ + i|1⟩)/√2)^⊗n`.
pub fn product_state(n: usize, pol: Polarization) -> StateVector {
    let site = match pol {
        Polarization::Z => StateVector::basis(2, 0),
        Polarization::Y => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            StateVector::new(vec![C64::new(s, 0.0), C64::new(0.0, s)])
        }
    };
    (1..n).fold(site.clone(), |acc, _| acc.kron(&site))
}

/// Pauli on one site of an `n`-qubit register.
pub fn site_operator(n: usize, site: usize, axis: PauliAxis) -> Result<ComplexMatrix> {
    if site >= n {
        return Err(Error::Config(format!("site {site} outside a {n}-spin register")));
    }
    let left = ComplexMatrix::identity(1 << site);
    let right = ComplexMatrix::identity(1 << (n - site - 1));
    Ok(left.kron(&axis.matrix()).kron(&right))
}

pub fn ising_hamiltonian(cfg: &IsingConfig) -> Result<ComplexMatrix> {
    cfg.validate()?;
    cfg.check_cap()?;
    let n = cfg.n;
    let d = cfg.dim();
    let mut hm = ComplexMatrix::zeros(d, d);
    let z = |s: usize, i: usize| if (s >> (n - 1 - i)) & 1 == 0 { 1.0 } else { -1.0 };
    for s in 0..d {
        let bonds: f64 = (0..n - 1).map(|i| z(s, i) * z(s, i + 1)).sum();
        let field: f64 = (0..n).map(|i| z(s, i)).sum();
        hm[(s, s)] = C64::new(-bonds - cfg.h * field, 0.0);
        for i in 0..n {
            hm[(s ^ (1 << (n - 1 - i)), s)] += C64::new(-cfg.g, 0.0);
        }
    }
    Ok(hm)
}

/// `e^{−iHt}`.
pub fn evolve_unitary(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    herm_expm(h, t)
}

/// Channel of `U(t)` with input on the first `n_a` spins (the rest start in
/// `|0⟩`) and output on the first `n_b` spins.
pub fn ising_channel(cfg: &IsingConfig, t: f64, n_a: usize, n_b: usize) -> Result<QuantumChannel> {
    check_partition(cfg, n_a, n_b)?;
    let u = evolve_unitary(&ising_hamiltonian(cfg)?, t)?;
    partition_channel(cfg, u, n_a, n_b)
}

fn check_partition(cfg: &IsingConfig, n_a: usize, n_b: usize) -> Result<()> {
    if n_a == 0 || n_b == 0 || n_a > cfg.n || n_b > cfg.n {
        return Err(Error::Config(format!(
            "input and output spin counts must lie in 1..={}, got n_a={n_a}, n_b={n_b}",
            cfg.n
        )));
    }
    Ok(())
}

fn partition_channel(cfg: &IsingConfig, u: ComplexMatrix, n_a: usize, n_b: usize) -> Result<QuantumChannel> {
    if n_a == cfg.n {
        QuantumChannel::unitary_induced(u, 1 << n_b)
    } else {
        QuantumChannel::dilated(u, 1 << n_a, 1 << n_b)
    }
}

/// Grid `0, dt, 2dt, …` up to `t_max` inclusive.
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !dt.is_finite() || dt <= 0.0 || !t_max.is_finite() || t_max < 0.0 {
        return Err(Error::Config(format!("bad time grid: t_max={t_max}, dt={dt}")));
    }
    let steps = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=steps).map(|k| k as f64 * dt).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalizationRun {
    pub config: IsingConfig,
    pub polarization: Polarization,
    /// Pauli measured on the first spin.
    pub observable: PauliAxis,
    pub times: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl ThermalizationRun {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.times.is_empty() {
            return Err(Error::Config("no time points".into()));
        }
        if self.times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Config("times must be finite and nonnegative".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("times must be strictly increasing".into()));
        }
        if self.n_samples < 2 {
            return Err(Error::Config("need at least 2 samples per time point".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThermalRow {
    pub time: f64,
    pub exact: f64,
    pub estimate: f64,
    pub sigma_n: f64,
    /// `3·sigma_n`.
    pub bound: f64,
    pub empirical_sigma: f64,
    /// Square root of the intrinsic-variance bound on the per-sample spread.
    pub sigma_bound: f64,
}

/// Exact evolution against the randomized estimate at every time point.
/// Time point `k` draws its environment states from `derive_seed(seed, [k])`.
///
/// Only `U(t)|ψ₀⟩` is needed per time point. For the pure input `A = |ψ₀⟩⟨ψ₀|`
/// the variance bound reduces to `(d·⟨B²⟩_t − ⟨B⟩_t²)/(d_c + 1)`.
pub fn thermalization_experiment(run: &ThermalizationRun) -> Result<Vec<ThermalRow>> {
    run.validate()?;
    let cfg = &run.config;
    let prop = Propagator::new(&ising_hamiltonian(cfg)?)?;
    let psi0 = product_state(cfg.n, run.polarization);
    let d = cfg.dim();
    let dc = (d / 2) as f64;
    let b = run.observable.matrix();
    let b_full = b.kron(&ComplexMatrix::identity(d / 2));
    let b2_full = b.matmul(&b).kron(&ComplexMatrix::identity(d / 2));
    run.times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let psi_t = prop.evolve(t, &psi0);
            let exact = psi_t.expectation(&b_full).re;
            let second = psi_t.expectation(&b2_full).re;
            let sigma_bound = ((d as f64 * second - exact * exact) / (dc + 1.0)).max(0.0).sqrt();
            let values = evolved_state_values(&psi_t, 2, &b, run.n_samples, derive_seed(run.seed, &[k as u64]))?;
            let rep = EstimatorReport::from_values(&values)?.with_bound(sigma_bound);
            Ok(ThermalRow {
                time: t,
                exact,
                estimate: rep.estimate,
                sigma_n: rep.sigma_n,
                bound: rep.confidence_radius,
                empirical_sigma: rep.empirical_sigma,
                sigma_bound,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub config: IsingConfig,
    pub n_a: usize,
    pub n_b: usize,
    pub t: f64,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        check_partition(&self.config, self.n_a, self.n_b)?;
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::Config("N values must be positive and nonempty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("need at least one trial".into()));
        }
        if !self.t.is_finite() {
            return Err(Error::Config("evolution time must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n_samples: usize,
    pub trial: usize,
    pub hs_distance: f64,
    pub trace_distance: f64,
    /// `1/√N`.
    pub bound: f64,
}

/// Estimator distance to the exact dual for every `(N, trial)`; ensemble
/// `(N, trial)` is seeded by `derive_seed(seed, [N, trial])`.
pub fn distance_scaling_experiment(cfg: &ScalingConfig) -> Result<Vec<ScalingRow>> {
    cfg.validate()?;
    let ch = ising_channel(&cfg.config, cfg.t, cfg.n_a, cfg.n_b)?;
    channel_distance_scaling(&ch, &cfg.n_values, cfg.trials, cfg.seed)
}

/// Distance sweep for any channel.
pub fn channel_distance_scaling(
    ch: &QuantumChannel,
    n_values: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<ScalingRow>> {
    let exact = exact_dual(ch)?;
    let sampler = DualSampler::new(ch)?;
    let mut rows = Vec::with_capacity(n_values.len() * trials);
    for &n in n_values {
        for trial in 0..trials {
            let ens = sampler.ensemble(n, derive_seed(seed, &[n as u64, trial as u64]))?;
            let rep = distance_report(&ens, &exact)?;
            rows.push(ScalingRow {
                n_samples: n,
                trial,
                hs_distance: rep.hs_distance,
                trace_distance: rep.trace_distance,
                bound: rep.bound,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingSummary {
    pub n_samples: usize,
    pub mean_hs: f64,
    pub mean_hs_sq: f64,
    pub mean_trace: f64,
    pub bound: f64,
}

/// Per-`N` means in first-appearance order.
pub fn summarize_scaling(rows: &[ScalingRow]) -> Vec<ScalingSummary> {
    let mut ns: Vec<usize> = Vec::new();
    for r in rows {
        if !ns.contains(&r.n_samples) {
            ns.push(r.n_samples);
        }
    }
    ns.into_iter()
        .map(|n| {
            let sel: Vec<&ScalingRow> = rows.iter().filter(|r| r.n_samples == n).collect();
            let hs: Vec<f64> = sel.iter().map(|r| r.hs_distance).collect();
            let hs2: Vec<f64> = hs.iter().map(|x| x * x).collect();
            let tr: Vec<f64> = sel.iter().map(|r| r.trace_distance).collect();
            ScalingSummary {
                n_samples: n,
                mean_hs: stats::mean(&hs),
                mean_hs_sq: stats::mean(&hs2),
                mean_trace: stats::mean(&tr),
                bound: 1.0 / (n as f64).sqrt(),
            }
        })
        .collect()
}

/// Log-log slope of mean HS distance against `N`.
pub fn scaling_slope(summary: &[ScalingSummary]) -> f64 {
    let x: Vec<f64> = summary.iter().map(|s| s.n_samples as f64).collect();
    let y: Vec<f64> = summary.iter().map(|s| s.mean_hs).collect();
    stats::loglog_slope(&x, &y)
}
