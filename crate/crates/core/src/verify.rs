//! Invariant checks: Hermiticity, symmetries, unitarity, channel structure,
//! entropy identities and integrator health.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::pure_input;
use crate::channel::{
    apply_channel, bloch_state, evaluate_point, max_deviation, von_neumann_entropy, QubitChannel,
};
use crate::dynamics::{propagate, propagate_unitary, unitarity_defect, IntegratorOptions};
use crate::error::{Error, Result};
use crate::hilbert::{
    commutator, hermitian_eigenvalues, max_abs, number_operator, parity_operator, partial_trace,
    DensityMatrix, HilbertLayout, Operator, C64,
};
use crate::model::{hamiltonian, CtapParams, Protocol, PulseSchedule, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Hermiticity,
    Symmetry,
    Unitarity,
    Cptp,
    Entropy,
    Numerics,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Hermiticity,
        Suite::Symmetry,
        Suite::Unitarity,
        Suite::Cptp,
        Suite::Entropy,
        Suite::Numerics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Hermiticity => "hermiticity",
            Suite::Symmetry => "symmetry",
            Suite::Unitarity => "unitarity",
            Suite::Cptp => "cptp",
            Suite::Entropy => "entropy",
            Suite::Numerics => "numerics",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown suite '{s}'")))
    }
}

/// Optional overrides for the grid a suite runs on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyParams {
    pub d: Option<usize>,
    pub g: Option<f64>,
    pub seed: u64,
    pub samples: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            d: None,
            g: None,
            seed: 7,
            samples: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<12} {:<48} {} ({:.3}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite.name(),
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Runs `f`, which returns `(value, threshold)`; passes when `value < threshold`.
fn check(
    suite: Suite,
    name: impl Into<String>,
    f: impl FnOnce() -> Result<(f64, f64)>,
) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok((value, threshold)) => (
            value < threshold,
            format!("value {value:.3e} < {threshold:.0e}"),
        ),
        Err(e) => (false, format!("error: {e}")),
    };
    CheckOutcome {
        suite,
        name: name.into(),
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

pub fn run_suite(suite: Suite, params: &VerifyParams) -> Vec<CheckOutcome> {
    match suite {
        Suite::All => Suite::EACH
            .iter()
            .flat_map(|s| run_suite(*s, params))
            .collect(),
        Suite::Hermiticity => hermiticity(params),
        Suite::Symmetry => symmetry(params),
        Suite::Unitarity => unitarity(params),
        Suite::Cptp => cptp(params),
        Suite::Entropy => entropy(),
        Suite::Numerics => numerics(params),
    }
}

struct Sample {
    g: f64,
    d: usize,
    frac: f64,
    protocol: Protocol,
}

fn samples(params: &VerifyParams) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    (0..params.samples)
        .map(|k| Sample {
            g: params.g.unwrap_or_else(|| rng.gen_range(0.05..1.0)),
            d: params.d.unwrap_or_else(|| rng.gen_range(2..=8)),
            frac: rng.gen_range(0.0..1.0),
            protocol: if k % 2 == 0 {
                Protocol::QuantumBus
            } else {
                Protocol::Ctap
            },
        })
        .collect()
}

fn sample_hamiltonian(s: &Sample, rwa: bool) -> Result<(Operator, HilbertLayout)> {
    let config = SystemConfig::resonant(s.d, s.g, rwa);
    let schedule = PulseSchedule::for_protocol(s.protocol, s.g, CtapParams::default())?;
    let t = schedule.start() + s.frac * schedule.duration();
    let layout = config.system_layout()?;
    Ok((hamiltonian(&config, &schedule, t, &layout)?, layout))
}

fn hermiticity(params: &VerifyParams) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for rwa in [false, true] {
        out.push(check(
            Suite::Hermiticity,
            format!("H = H† ({}, {} samples)", model_name(rwa), params.samples),
            || {
                let mut worst = 0.0f64;
                for s in samples(params) {
                    let (h, _) = sample_hamiltonian(&s, rwa)?;
                    worst = worst.max(max_abs(&(&h - h.adjoint())));
                }
                Ok((worst, 1e-13))
            },
        ));
    }
    out
}

fn model_name(rwa: bool) -> &'static str {
    if rwa {
        "rwa"
    } else {
        "full"
    }
}

/// Largest deviation of `⟨op⟩/⟨ψ|ψ⟩` from its initial value along a trajectory.
fn trajectory_drift(
    config: &SystemConfig,
    schedule: &PulseSchedule,
    op: &Operator,
    theta: f64,
) -> Result<f64> {
    let psi0 = pure_input(config.d, theta, 0.3)?;
    let opts = IntegratorOptions {
        record_trajectory: true,
        ..IntegratorOptions::for_schedule(schedule)
    };
    let run = propagate(&psi0, config, schedule, &opts)?;
    let initial = psi0.expectation(op).re;
    let traj = run.trajectory.unwrap_or_default();
    Ok(traj
        .iter()
        .map(|(_, psi)| (psi.expectation(op).re / psi.norm_sqr() - initial).abs())
        .fold(0.0, f64::max))
}

fn symmetry(params: &VerifyParams) -> Vec<CheckOutcome> {
    let mut out = vec![
        check(Suite::Symmetry, "[H, Π] = 0 (full)", || {
            let mut worst = 0.0f64;
            for s in samples(params) {
                let (h, layout) = sample_hamiltonian(&s, false)?;
                worst = worst.max(max_abs(&commutator(&h, &parity_operator(&layout))));
            }
            Ok((worst, 1e-12))
        }),
        check(Suite::Symmetry, "[H, N] = 0 (rwa)", || {
            let mut worst = 0.0f64;
            for s in samples(params) {
                let (h, layout) = sample_hamiltonian(&s, true)?;
                worst = worst.max(max_abs(&commutator(&h, &number_operator(&layout))));
            }
            Ok((worst, 1e-12))
        }),
        check(Suite::Symmetry, "[H, N] != 0 (full)", || {
            let s = Sample {
                g: params.g.unwrap_or(0.5),
                d: params.d.unwrap_or(4),
                frac: 0.37,
                protocol: Protocol::Ctap,
            };
            let (h, layout) = sample_hamiltonian(&s, false)?;
            // Passes when the commutator is clearly non-zero.
            Ok((
                1.0 / max_abs(&commutator(&h, &number_operator(&layout))).max(1e-300),
                1e3,
            ))
        }),
    ];
    let g = params.g.unwrap_or(0.6);
    let d = params.d.unwrap_or(4);
    out.push(check(
        Suite::Symmetry,
        format!("<Π> conserved along ctap (full, g={g}, d={d})"),
        || {
            let config = SystemConfig::resonant(d, g, false);
            let schedule = PulseSchedule::ctap(g, CtapParams::default())?;
            let layout = config.system_layout()?;
            let drift = trajectory_drift(&config, &schedule, &parity_operator(&layout), 1.0)?;
            Ok((drift, 1e-7))
        },
    ));
    out.push(check(
        Suite::Symmetry,
        format!("<N> conserved along ctap (rwa, g={g}, d={d})"),
        || {
            let config = SystemConfig::resonant(d, g, true);
            let schedule = PulseSchedule::ctap(g, CtapParams::default())?;
            let layout = config.system_layout()?;
            let drift = trajectory_drift(&config, &schedule, &number_operator(&layout), 1.0)?;
            Ok((drift, 1e-8))
        },
    ));
    out
}

fn unitarity(params: &VerifyParams) -> Vec<CheckOutcome> {
    let g = params.g.unwrap_or(0.6);
    let d = params.d.unwrap_or(6);
    [Protocol::QuantumBus, Protocol::Ctap]
        .into_iter()
        .map(|protocol| {
            check(
                Suite::Unitarity,
                format!("U†U = 1 ({protocol}, full, g={g}, d={d})"),
                || {
                    let config = SystemConfig::resonant(d, g, false);
                    let schedule = PulseSchedule::for_protocol(protocol, g, CtapParams::default())?;
                    let u = propagate_unitary(
                        &config,
                        &schedule,
                        &IntegratorOptions::for_schedule(&schedule),
                        &config.system_layout()?,
                    )?;
                    Ok((unitarity_defect(&u), 1e-7))
                },
            )
        })
        .collect()
}

/// Smallest Choi eigenvalue (negated) and trace-preservation defect.
pub fn choi_defects(channel: &QubitChannel) -> (f64, f64) {
    let choi = channel.choi();
    let min_eig = hermitian_eigenvalues(&choi)[0];
    let rho = DensityMatrix::new(vec![2, 2], choi).expect("4x4");
    let tp = partial_trace(&rho, &[0]).expect("slot 0");
    let tp_defect = max_deviation(&tp.matrix, &Operator::identity(2, 2));
    (-min_eig, tp_defect)
}

fn cptp(params: &VerifyParams) -> Vec<CheckOutcome> {
    let gs: Vec<f64> = params.g.map_or(vec![0.3, 0.6], |g| vec![g]);
    let ds: Vec<usize> = params.d.map_or(vec![2, 4], |d| vec![d]);
    let mut out = Vec::new();
    for protocol in [Protocol::QuantumBus, Protocol::Ctap] {
        for &g in &gs {
            for &d in &ds {
                let start = Instant::now();
                let computed = (|| -> Result<QubitChannel> {
                    let config = SystemConfig::resonant(d, g, false);
                    let schedule = PulseSchedule::for_protocol(protocol, g, CtapParams::default())?;
                    QubitChannel::compute(
                        &config,
                        &schedule,
                        &IntegratorOptions::for_schedule(&schedule),
                    )
                })();
                let build_time = start.elapsed();
                let mut psd = check(
                    Suite::Cptp,
                    format!("Choi PSD ({protocol}, g={g}, d={d})"),
                    || {
                        Ok((
                            choi_defects(computed.as_ref().map_err(Clone::clone)?).0,
                            1e-8,
                        ))
                    },
                );
                psd.elapsed += build_time;
                out.push(psd);
                out.push(check(
                    Suite::Cptp,
                    format!("trace preserving ({protocol}, g={g}, d={d})"),
                    || {
                        Ok((
                            choi_defects(computed.as_ref().map_err(Clone::clone)?).1,
                            1e-8,
                        ))
                    },
                ));
            }
        }
    }
    let g = gs[0];
    let d = ds[0];
    out.push(check(
        Suite::Cptp,
        format!("linearity, 20 random pairs (qb, g={g}, d={d})"),
        || {
            let config = SystemConfig::resonant(d, g, false);
            let schedule = PulseSchedule::quantum_bus(g)?;
            let opts = IntegratorOptions::for_schedule(&schedule);
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let (a, b) = (random_bloch(&mut rng), random_bloch(&mut rng));
                let alpha: f64 = rng.gen_range(0.0..1.0);
                let mix = mix_states(&a, &b, alpha);
                let lhs = apply_channel(&config, &schedule, &opts, &mix)?;
                let ea = apply_channel(&config, &schedule, &opts, &a)?;
                let eb = apply_channel(&config, &schedule, &opts, &b)?;
                let rhs = ea.matrix * C64::new(alpha, 0.0) + eb.matrix * C64::new(1.0 - alpha, 0.0);
                worst = worst.max(max_deviation(&lhs.matrix, &rhs));
            }
            Ok((worst, 1e-9))
        },
    ));
    out
}

/// Uniformly random point in the Bloch ball.
pub fn random_bloch<R: Rng>(rng: &mut R) -> DensityMatrix {
    loop {
        let b = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        if b.iter().map(|x: &f64| x * x).sum::<f64>() <= 1.0 {
            return bloch_state(b);
        }
    }
}

pub fn mix_states(a: &DensityMatrix, b: &DensityMatrix, alpha: f64) -> DensityMatrix {
    let m = &a.matrix * C64::new(alpha, 0.0) + &b.matrix * C64::new(1.0 - alpha, 0.0);
    DensityMatrix::new(a.dims().to_vec(), m).expect("same dims")
}

fn entropy() -> Vec<CheckOutcome> {
    vec![
        check(Suite::Entropy, "S(½·1) = 1 bit", || {
            Ok((
                (von_neumann_entropy(&DensityMatrix::maximally_mixed_qubit())? - 1.0).abs(),
                1e-12,
            ))
        }),
        check(Suite::Entropy, "S(pure) = 0", || {
            Ok((
                von_neumann_entropy(&bloch_state([0.0, 0.6, 0.8]))?.abs(),
                1e-10,
            ))
        }),
        check(Suite::Entropy, "S(diag(¼, ¾)) = 0.8112781", || {
            let s = von_neumann_entropy(&bloch_state([0.0, 0.0, -0.5]))?;
            Ok(((s - 0.811_278_124_459_132_8).abs(), 1e-12))
        }),
        check(Suite::Entropy, "identity channel: I_c(½·1) = 1", || {
            let ic = QubitChannel::identity()
                .coherent_information(&DensityMatrix::maximally_mixed_qubit())?;
            Ok(((ic - 1.0).abs(), 1e-12))
        }),
        check(
            Suite::Entropy,
            "I_c: purified run vs basis-propagated map",
            || {
                let g = 0.45;
                let config = SystemConfig::resonant(4, g, false);
                let schedule = PulseSchedule::quantum_bus(g)?;
                let opts = IntegratorOptions::for_schedule(&schedule);
                let a = evaluate_point(&config, &schedule, &opts)?
                    .channel
                    .coherent_info;
                let b = QubitChannel::compute(&config, &schedule, &opts)?
                    .coherent_information(&DensityMatrix::maximally_mixed_qubit())?;
                Ok(((a - b).abs(), 1e-9))
            },
        ),
    ]
}

fn numerics(params: &VerifyParams) -> Vec<CheckOutcome> {
    let g = params.g.unwrap_or(0.4);
    let d = params.d.unwrap_or(4);
    let config = SystemConfig::resonant(d, g, false);
    vec![
        check(
            Suite::Numerics,
            format!("norm drift, ctap (full, g={g}, d={d})"),
            || {
                let schedule = PulseSchedule::ctap(g, CtapParams::default())?;
                let p = evaluate_point(
                    &config,
                    &schedule,
                    &IntegratorOptions::for_schedule(&schedule),
                )?;
                Ok((p.norm_drift, 1e-8))
            },
        ),
        check(
            Suite::Numerics,
            format!("qb exact vs adaptive (full, g={g}, d={d})"),
            || {
                let schedule = PulseSchedule::quantum_bus(g)?;
                let exact = IntegratorOptions::for_schedule(&schedule);
                let a = evaluate_point(&config, &schedule, &exact)?;
                let b = evaluate_point(&config, &schedule, &exact.adaptive())?;
                let diff = (&a.final_state.amplitudes - &b.final_state.amplitudes)
                    .iter()
                    .fold(0.0f64, |m, z| m.max(z.norm()));
                Ok((diff, 1e-7))
            },
        ),
        check(
            Suite::Numerics,
            format!("tolerance halving within error estimate (ctap, g={g}, d={d})"),
            || {
                let schedule = PulseSchedule::ctap(g, CtapParams::default())?;
                let opts = IntegratorOptions::for_schedule(&schedule);
                let a = evaluate_point(&config, &schedule, &opts)?;
                let b = evaluate_point(
                    &config,
                    &schedule,
                    &opts.with_tolerances(opts.rtol / 2.0, opts.atol / 2.0),
                )?;
                let diff = (&a.final_state.amplitudes - &b.final_state.amplitudes)
                    .iter()
                    .fold(0.0f64, |m, z| m.max(z.norm()));
                // Ratio to the declared estimate must stay below one.
                Ok((diff / a.error_estimate, 1.0))
            },
        ),
    ]
}
