//! The qubit channel `ρ ↦ Tr_{Q1,IC}[U (ρ ⊗ |0⟩⟨0| ⊗ |0⟩⟨0|) U†]`, its
//! coherent information and the leakage diagnostics.
//!
//! Entropies are in bits. The single-letter capacity is evaluated at the
//! unpolarized input `½·1`, purified by a reference qubit `R` that idles
//! through the evolution.

use nalgebra::SymmetricEigen;

use crate::dynamics::{evolve_block, propagate, IntegratorOptions};
use crate::error::{Error, Result};
use crate::hilbert::{
    partial_trace, projector_low_excitation, projector_target, DensityMatrix, HilbertLayout,
    Operator, StateVector, C64,
};
use crate::model::{HamiltonianParts, PulseSchedule, SystemConfig};

/// Eigenvalues below this contribute nothing to the entropy.
pub const ENTROPY_CLAMP: f64 = 1e-12;

// Slots in the (R, Q1, IC, Q2) layout.
const SLOT_R: usize = 0;
const SLOT_Q2: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelResult {
    /// `max(0, coherent_info)`.
    pub q1: f64,
    pub coherent_info: f64,
    pub s_output: f64,
    pub s_exchange: f64,
    pub norm_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageResult {
    /// Probability outside the sector with at most one excitation.
    pub leak_pair: f64,
    /// Probability outside `|0⟩_Q1 ⊗ |0⟩_IC ⊗ (any Q2)`.
    pub leak_target: f64,
}

/// Input fed to the leakage computation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LeakageInput {
    /// The maximally entangled purification used for the capacity.
    #[default]
    Purified,
    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩` on Q1.
    Pure { theta: f64, phi: f64 },
}

/// Outcome of one purified run: capacity and leakage from the same final state.
#[derive(Debug, Clone)]
pub struct PointEvaluation {
    pub channel: ChannelResult,
    pub leakage: LeakageResult,
    pub n_steps: usize,
    pub norm_drift: f64,
    pub error_estimate: f64,
    pub final_state: StateVector,
}

/// `-Tr ρ log₂ ρ`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of(&rho.matrix)
}

fn entropy_of(m: &Operator) -> Result<f64> {
    let mut s = 0.0;
    for lambda in m.clone().symmetric_eigenvalues().iter().copied() {
        if lambda < -1e-8 {
            return Err(Error::NotDensityMatrix(format!(
                "eigenvalue {lambda:e} is negative"
            )));
        }
        if lambda > ENTROPY_CLAMP {
            s -= lambda * lambda.log2();
        }
    }
    Ok(s.max(0.0))
}

/// `(|0⟩_R|0⟩_Q1 + |1⟩_R|1⟩_Q1)/√2 ⊗ |0⟩_IC ⊗ |0⟩_Q2`.
pub fn purified_input(d: usize) -> Result<StateVector> {
    let layout = HilbertLayout::with_reference(d)?;
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut psi = StateVector::basis(layout, layout.index(0, 0, 0, 0));
    psi.amplitudes[layout.index(0, 0, 0, 0)] = h;
    psi.amplitudes[layout.index(1, 1, 0, 0)] = h;
    Ok(psi)
}

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩` on Q1, everything else in the ground state.
pub fn pure_input(d: usize, theta: f64, phi: f64) -> Result<StateVector> {
    let layout = HilbertLayout::system(d)?;
    let mut psi = StateVector::basis(layout, 0);
    psi.amplitudes[layout.index(0, 0, 0, 0)] = C64::new((theta / 2.0).cos(), 0.0);
    psi.amplitudes[layout.index(0, 1, 0, 0)] = C64::from_polar((theta / 2.0).sin(), phi);
    Ok(psi)
}

/// Entropies of the final purified state. `state` must carry the reference qubit.
pub fn channel_result_from_state(state: &StateVector, norm_drift: f64) -> Result<ChannelResult> {
    if !state.layout.has_reference() {
        return Err(Error::InvalidConfig(
            "coherent information needs the reference qubit in the layout".into(),
        ));
    }
    let mut rho = DensityMatrix::from_pure(state);
    // Entropies are evaluated on the normalized state.
    let norm = state.norm_sqr();
    rho.matrix /= C64::new(norm, 0.0);
    let out = partial_trace(&rho, &[SLOT_Q2])?;
    let joint = partial_trace(&rho, &[SLOT_R, SLOT_Q2])?;
    let s_output = von_neumann_entropy(&out)?;
    let s_exchange = von_neumann_entropy(&joint)?;
    let coherent_info = s_output - s_exchange;
    Ok(ChannelResult {
        q1: coherent_info.max(0.0),
        coherent_info,
        s_output,
        s_exchange,
        norm_drift,
    })
}

/// Leakage of the final state, normalized by its squared norm.
pub fn leakage_from_state(state: &StateVector) -> LeakageResult {
    let layout = &state.layout;
    let norm = state.norm_sqr();
    let (mut outside_low, mut outside_target) = (0.0, 0.0);
    for (n, a) in state.amplitudes.iter().enumerate() {
        let [_, q1, m, q2] = layout.decompose(n);
        let p = a.norm_sqr();
        if q1 + m + q2 > 1 {
            outside_low += p;
        }
        if q1 != 0 || m != 0 {
            outside_target += p;
        }
    }
    LeakageResult {
        leak_pair: outside_low / norm,
        leak_target: outside_target / norm,
    }
}

/// `1 - ⟨ψ|P|ψ⟩/⟨ψ|ψ⟩` computed with the explicit projector matrices.
pub fn leakage_via_projectors(state: &StateVector) -> LeakageResult {
    let norm = state.norm_sqr();
    let low = projector_low_excitation(&state.layout);
    let tgt = projector_target(&state.layout);
    LeakageResult {
        leak_pair: 1.0 - state.expectation(&low).re / norm,
        leak_target: 1.0 - state.expectation(&tgt).re / norm,
    }
}

/// Propagates the purified unpolarized input once and evaluates both the
/// coherent information and the leakage on the final state.
pub fn evaluate_point(
    config: &SystemConfig,
    schedule: &PulseSchedule,
    opts: &IntegratorOptions,
) -> Result<PointEvaluation> {
    let psi0 = purified_input(config.d)?;
    let run = propagate(&psi0, config, schedule, opts)?;
    let channel = channel_result_from_state(&run.final_state, run.norm_drift)?;
    let leakage = leakage_from_state(&run.final_state);
    Ok(PointEvaluation {
        channel,
        leakage,
        n_steps: run.n_steps,
        norm_drift: run.norm_drift,
        error_estimate: run.error_estimate,
        final_state: run.final_state,
    })
}

pub fn coherent_information_unpolarized(
    config: &SystemConfig,
    schedule: &PulseSchedule,
    opts: &IntegratorOptions,
) -> Result<ChannelResult> {
    evaluate_point(config, schedule, opts).map(|p| p.channel)
}

/// Leakage for the purified input used by the capacity run.
pub fn leakage(
    config: &SystemConfig,
    schedule: &PulseSchedule,
    opts: &IntegratorOptions,
) -> Result<LeakageResult> {
    leakage_for_input(config, schedule, opts, LeakageInput::Purified)
}

pub fn leakage_for_input(
    config: &SystemConfig,
    schedule: &PulseSchedule,
    opts: &IntegratorOptions,
    input: LeakageInput,
) -> Result<LeakageResult> {
    let psi0 = match input {
        LeakageInput::Purified => purified_input(config.d)?,
        LeakageInput::Pure { theta, phi } => pure_input(config.d, theta, phi)?,
    };
    let run = propagate(&psi0, config, schedule, opts)?;
    Ok(leakage_from_state(&run.final_state))
}

/// Output of the channel for a qubit density matrix `rho_in`.
///
/// The input is split into its eigenvectors, each propagated as a pure state,
/// and the weighted Q2 marginals are summed.
pub fn apply_channel(
    config: &SystemConfig,
    schedule: &PulseSchedule,
    opts: &IntegratorOptions,
    rho_in: &DensityMatrix,
) -> Result<DensityMatrix> {
    if rho_in.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho_in.dim(),
        });
    }
    rho_in.validate()?;
    let layout = HilbertLayout::system(config.d)?;
    let eig = SymmetricEigen::new(rho_in.matrix.clone());
    let mut out = Operator::zeros(2, 2);
    for k in 0..2 {
        let weight = eig.eigenvalues[k];
        if weight <= 1e-15 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        let mut psi = StateVector::basis(layout, 0);
        psi.amplitudes[layout.index(0, 0, 0, 0)] = v[0];
        psi.amplitudes[layout.index(0, 1, 0, 0)] = v[1];
        let run = propagate(&psi, config, schedule, opts)?;
        let marginal = partial_trace(&DensityMatrix::from_pure(&run.final_state), &[SLOT_Q2])?;
        out += marginal.matrix * C64::new(weight, 0.0);
    }
    DensityMatrix::plain(out)
}

/// The channel as a linear map, fixed by its action on `|i⟩⟨j|`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitChannel {
    /// `transfer[i][j] = E(|i⟩⟨j|)`
    pub transfer: [[Operator; 2]; 2],
}

impl QubitChannel {
    /// Propagates `|0⟩` and `|1⟩` on Q1 together and reads off `E(|i⟩⟨j|)`.
    pub fn compute(
        config: &SystemConfig,
        schedule: &PulseSchedule,
        opts: &IntegratorOptions,
    ) -> Result<Self> {
        let parts = HamiltonianParts::new(config)?;
        let layout = parts.layout;
        let n = layout.system_dim();
        let mut block = Operator::zeros(n, 2);
        block[(layout.index(0, 0, 0, 0), 0)] = C64::new(1.0, 0.0);
        block[(layout.index(0, 1, 0, 0), 1)] = C64::new(1.0, 0.0);
        let evo = evolve_block(&parts, schedule, opts, block)?;

        let dims = layout.dims().to_vec();
        let transfer = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let outer = evo.block.column(i) * evo.block.column(j).adjoint();
                // Cannot fail: dimensions come from the layout.
                partial_trace(
                    &DensityMatrix::new(dims.clone(), outer).expect("layout dims"),
                    &[SLOT_Q2],
                )
                .expect("valid slot")
                .matrix
            })
        });
        Ok(Self { transfer })
    }

    pub fn identity() -> Self {
        Self {
            transfer: std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let mut m = Operator::zeros(2, 2);
                    m[(i, j)] = C64::new(1.0, 0.0);
                    m
                })
            }),
        }
    }

    /// Linear extension to an arbitrary 2×2 operator.
    pub fn apply(&self, op: &Operator) -> Operator {
        let mut out = Operator::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                out += &self.transfer[i][j] * op[(i, j)];
            }
        }
        out
    }

    /// Channel followed by the unitary `u` on the output.
    pub fn then_unitary(&self, u: &Operator) -> Self {
        Self {
            transfer: std::array::from_fn(|i| {
                std::array::from_fn(|j| u * &self.transfer[i][j] * u.adjoint())
            }),
        }
    }

    /// `Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)`, input factor first.
    pub fn choi(&self) -> Operator {
        let mut c = Operator::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                c.view_mut((2 * i, 2 * j), (2, 2))
                    .copy_from(&self.transfer[i][j]);
            }
        }
        c
    }

    /// Coherent information `S(E(ρ)) − S((1⊗E)(|ψ⟩⟨ψ|))` for any qubit input.
    pub fn coherent_information(&self, rho: &DensityMatrix) -> Result<f64> {
        rho.validate()?;
        let eig = SymmetricEigen::new(rho.matrix.clone());
        // |ψ⟩ = Σ_k √p_k |k⟩_R |v_k⟩, so the joint state is
        // Σ_kl √(p_k p_l) |k⟩⟨l| ⊗ E(|v_k⟩⟨v_l|).
        let mut joint = Operator::zeros(4, 4);
        for k in 0..2 {
            for l in 0..2 {
                let pk = eig.eigenvalues[k].max(0.0);
                let pl = eig.eigenvalues[l].max(0.0);
                let vk = eig.eigenvectors.column(k);
                let vl = eig.eigenvectors.column(l);
                let block = self.apply(&(vk * vl.adjoint())) * C64::new((pk * pl).sqrt(), 0.0);
                joint.view_mut((2 * k, 2 * l), (2, 2)).copy_from(&block);
            }
        }
        let output = self.apply(&rho.matrix);
        Ok(entropy_of(&output)? - entropy_of(&joint)?)
    }

    /// Largest coherent information over a grid of Bloch-ball inputs
    /// (`n_r` radii, `n_theta` polar angles, `n_phi` azimuths) together with
    /// the maximizing Bloch vector. Bounds the error of fixing the input at `½·1`.
    pub fn bloch_scan(&self, n_r: usize, n_theta: usize, n_phi: usize) -> Result<(f64, [f64; 3])> {
        let mut best = (
            self.coherent_information(&DensityMatrix::maximally_mixed_qubit())?,
            [0.0; 3],
        );
        for ir in 1..=n_r {
            let r = ir as f64 / (n_r + 1) as f64;
            for it in 0..=n_theta {
                let theta = std::f64::consts::PI * it as f64 / n_theta.max(1) as f64;
                for ip in 0..n_phi.max(1) {
                    let phi = 2.0 * std::f64::consts::PI * ip as f64 / n_phi.max(1) as f64;
                    let b = [
                        r * theta.sin() * phi.cos(),
                        r * theta.sin() * phi.sin(),
                        r * theta.cos(),
                    ];
                    let ic = self.coherent_information(&bloch_state(b))?;
                    if ic > best.0 {
                        best = (ic, b);
                    }
                }
            }
        }
        Ok(best)
    }
}

/// `½(1 + b·σ)`.
pub fn bloch_state(b: [f64; 3]) -> DensityMatrix {
    let half = |x: f64| C64::new(0.5 * x, 0.0);
    let m = Operator::from_row_slice(
        2,
        2,
        &[
            half(1.0 + b[2]),
            C64::new(0.5 * b[0], -0.5 * b[1]),
            C64::new(0.5 * b[0], 0.5 * b[1]),
            half(1.0 - b[2]),
        ],
    );
    DensityMatrix::new(vec![2], m).expect("2x2")
}

/// Result of raising `d` until the capacity settles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DConvergence {
    /// Smallest `d` whose coherent information agrees with `d + 2` within `tol`.
    pub d: usize,
    pub coherent_info: f64,
    pub converged: bool,
}

/// Increases `d` from `start_d` in steps of one until the coherent information
/// at `d` and `d + 2` agree within `tol`, or `max_d` is reached.
///
/// Used as the finite stand-in for a harmonic interconnect.
pub fn converge_in_d(
    base: &SystemConfig,
    schedule: &PulseSchedule,
    opts: &IntegratorOptions,
    start_d: usize,
    max_d: usize,
    tol: f64,
) -> Result<DConvergence> {
    let eval = |d: usize| -> Result<f64> {
        let config = SystemConfig { d, ..*base };
        Ok(coherent_information_unpolarized(&config, schedule, opts)?.coherent_info)
    };
    let mut cache: Vec<Option<f64>> = vec![None; max_d + 3];
    let mut get = |d: usize| -> Result<f64> {
        if let Some(v) = cache[d] {
            return Ok(v);
        }
        let v = eval(d)?;
        cache[d] = Some(v);
        Ok(v)
    };
    let start_d = start_d.max(2);
    for d in start_d..=max_d {
        let (a, b) = (get(d)?, get(d + 2)?);
        if (a - b).abs() < tol {
            return Ok(DConvergence {
                d,
                coherent_info: a,
                converged: true,
            });
        }
    }
    Ok(DConvergence {
        d: max_d,
        coherent_info: get(max_d)?,
        converged: false,
    })
}

/// `‖a − b‖_max` for operators of equal shape.
pub fn max_deviation(a: &Operator, b: &Operator) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CtapParams;

    fn diag(a: f64, b: f64) -> DensityMatrix {
        DensityMatrix::plain(Operator::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(a, 0.0),
            C64::new(b, 0.0),
        ])))
        .unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(&diag(1.0, 0.0)).unwrap().abs() < 1e-15);
        assert!(
            (von_neumann_entropy(&DensityMatrix::maximally_mixed_qubit()).unwrap() - 1.0).abs()
                < 1e-14
        );
        let s = von_neumann_entropy(&diag(0.25, 0.75)).unwrap();
        assert!((s - 0.811_278_124_459_132_8).abs() < 1e-12, "{s}");
    }

    #[test]
    fn entropy_rejects_negative_spectrum() {
        let err = von_neumann_entropy(&diag(1.1, -0.1)).unwrap_err();
        assert!(matches!(err, Error::NotDensityMatrix(_)));
        // Tiny negatives from roundoff are clamped.
        assert!(von_neumann_entropy(&diag(1.0 + 1e-11, -1e-11)).is_ok());
    }

    #[test]
    fn purified_input_marginal_is_unpolarized() {
        let psi = purified_input(3).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-15);
        let q1 = partial_trace(&DensityMatrix::from_pure(&psi), &[1]).unwrap();
        assert!(max_deviation(&q1.matrix, &DensityMatrix::maximally_mixed_qubit().matrix) < 1e-15);
    }

    #[test]
    fn uncoupled_channel_erases_input() {
        let config = SystemConfig::resonant(3, 0.0, false);
        let schedule = PulseSchedule::quantum_bus(0.3).unwrap();
        let opts = IntegratorOptions::for_schedule(&schedule);
        let p = evaluate_point(&config, &schedule, &opts).unwrap();
        assert!(p.channel.s_output.abs() < 1e-12);
        assert!((p.channel.s_exchange - 1.0).abs() < 1e-12);
        assert!((p.channel.coherent_info + 1.0).abs() < 1e-12);
        assert_eq!(p.channel.q1, 0.0);
        assert!(p.leakage.leak_pair.abs() < 1e-15);
        // Q1 keeps its excitation with probability ½.
        assert!((p.leakage.leak_target - 0.5).abs() < 1e-12);
        let ground = leakage_for_input(
            &config,
            &schedule,
            &opts,
            LeakageInput::Pure {
                theta: 0.0,
                phi: 0.0,
            },
        )
        .unwrap();
        assert_eq!(ground.leak_target, 0.0);

        let out = apply_channel(&config, &schedule, &opts, &diag(0.2, 0.8)).unwrap();
        assert!((out.matrix[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rwa_bus_is_ideal() {
        for d in [2, 5] {
            let g = 0.37;
            let config = SystemConfig::resonant(d, g, true);
            let schedule = PulseSchedule::quantum_bus(g).unwrap();
            let opts = IntegratorOptions::for_schedule(&schedule);
            let p = evaluate_point(&config, &schedule, &opts).unwrap();
            assert!((p.channel.q1 - 1.0).abs() < 1e-6);
            assert!(p.leakage.leak_pair < 1e-10);
        }
    }

    #[test]
    fn rwa_bus_output_is_phase_rotated_input() {
        let g = 0.25;
        let config = SystemConfig::resonant(2, g, true);
        let schedule = PulseSchedule::quantum_bus(g).unwrap();
        let opts = IntegratorOptions::for_schedule(&schedule);
        let rho = bloch_state([0.3, -0.4, 0.5]);
        let out = apply_channel(&config, &schedule, &opts, &rho).unwrap();
        assert!((out.purity() - rho.purity()).abs() < 1e-9);
        assert!((out.matrix[(1, 1)] - rho.matrix[(1, 1)]).norm() < 1e-9);
        assert!((out.matrix[(0, 1)].norm() - rho.matrix[(0, 1)].norm()).abs() < 1e-9);
    }

    #[test]
    fn identity_channel_has_unit_coherent_information() {
        let ch = QubitChannel::identity();
        let ic = ch
            .coherent_information(&DensityMatrix::maximally_mixed_qubit())
            .unwrap();
        assert!((ic - 1.0).abs() < 1e-12);
        let (best, _) = ch.bloch_scan(3, 4, 4).unwrap();
        assert!((best - 1.0).abs() < 1e-12);
        let c = ch.choi();
        assert_eq!(c[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(c[(0, 3)], C64::new(1.0, 0.0));
    }

    #[test]
    fn leakage_routes_agree() {
        let g = 0.5;
        let config = SystemConfig::resonant(4, g, false);
        let schedule = PulseSchedule::quantum_bus(g).unwrap();
        let opts = IntegratorOptions::for_schedule(&schedule);
        let p = evaluate_point(&config, &schedule, &opts).unwrap();
        let other = leakage_via_projectors(&p.final_state);
        assert!((p.leakage.leak_pair - other.leak_pair).abs() < 1e-12);
        assert!((p.leakage.leak_target - other.leak_target).abs() < 1e-12);
        assert!(p.leakage.leak_pair > 1e-3);
        assert!(p.leakage.leak_pair <= p.leakage.leak_target);
    }

    #[test]
    fn pure_leakage_input() {
        let g = 0.4;
        let config = SystemConfig::resonant(3, g, true);
        let schedule = PulseSchedule::ctap(g, CtapParams::default()).unwrap();
        let opts = IntegratorOptions::for_schedule(&schedule);
        let l = leakage_for_input(
            &config,
            &schedule,
            &opts,
            LeakageInput::Pure {
                theta: std::f64::consts::PI,
                phi: 0.0,
            },
        )
        .unwrap();
        assert!(l.leak_pair < 1e-12);
        assert!(l.leak_target < 1e-3);
    }

    #[test]
    fn apply_channel_rejects_invalid_input() {
        let config = SystemConfig::resonant(2, 0.3, false);
        let schedule = PulseSchedule::quantum_bus(0.3).unwrap();
        let opts = IntegratorOptions::for_schedule(&schedule);
        assert!(apply_channel(&config, &schedule, &opts, &diag(0.7, 0.7)).is_err());
    }

    #[test]
    fn coherent_information_needs_reference() {
        let psi = StateVector::basis(HilbertLayout::system(2).unwrap(), 0);
        assert!(channel_result_from_state(&psi, 0.0).is_err());
    }
}
