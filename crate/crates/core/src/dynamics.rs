//! Propagation of `i dψ/dt = H(t) ψ`.
//!
//! Piecewise-constant schedules are advanced segment by segment with the exact
//! exponential of each (Hermitian) segment Hamiltonian. Smooth schedules use
//! the Dormand–Prince 8(5,3) embedded pair with mixed absolute/relative error
//! control in max-norm. The state is never renormalized; the final norm drift is reported
//! and checked against `norm_tolerance`.
//!
//! States are advanced as blocks: the columns of a `system_dim × k` matrix are
//! evolved together under the same step sequence. A state carrying the
//! reference qubit is just the two-column block of its `r = 0, 1` halves,
//! since the reference is the slowest index and is acted on by the identity.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::hilbert::{max_abs, HilbertLayout, Operator, StateVector, C64, ZERO};
use crate::model::{HamiltonianParts, PulseSchedule, SystemConfig};

/// Largest total dimension accepted by [`propagate_unitary`].
pub const MAX_UNITARY_DIM: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact exponential on each constant segment.
    PiecewiseExact,
    /// Embedded Dormand–Prince 8(5,3).
    AdaptiveRungeKutta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: Option<f64>,
    pub norm_tolerance: f64,
    /// Keep the state after every accepted step (or segment).
    pub record_trajectory: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            method: Method::AdaptiveRungeKutta,
            rtol: 1e-10,
            atol: 1e-12,
            max_step: None,
            norm_tolerance: 1e-8,
            record_trajectory: false,
        }
    }
}

impl IntegratorOptions {
    /// Exact segments for the bus, adaptive steps capped at `T/50` for CTAP.
    pub fn for_schedule(schedule: &PulseSchedule) -> Self {
        match schedule {
            PulseSchedule::QuantumBus { .. } => Self {
                method: Method::PiecewiseExact,
                ..Self::default()
            },
            PulseSchedule::Ctap { width, .. } => Self {
                max_step: Some(width / 50.0),
                ..Self::default()
            },
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn adaptive(mut self) -> Self {
        self.method = Method::AdaptiveRungeKutta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.norm_tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerances must be positive: rtol={}, atol={}, norm_tolerance={}",
                self.rtol, self.atol, self.norm_tolerance
            )));
        }
        if let Some(h) = self.max_step {
            if h.is_nan() || h <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "max_step must be positive, got {h}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub final_state: StateVector,
    /// `|‖ψ(t_f)‖² − 1|`.
    pub norm_drift: f64,
    /// Accepted steps (adaptive) or segments (exact).
    pub n_steps: usize,
    /// Sum of the local error estimates in max-norm; zero for exact segments.
    pub error_estimate: f64,
    pub trajectory: Option<Vec<(f64, StateVector)>>,
}

/// Columns evolved together, plus integration statistics.
#[derive(Debug, Clone)]
pub(crate) struct BlockEvolution {
    pub block: Operator,
    pub n_steps: usize,
    pub error_estimate: f64,
    pub trajectory: Option<Vec<(f64, Operator)>>,
}

/// Evolves `psi0` from the start to the end of `schedule`.
pub fn propagate(
    psi0: &StateVector,
    config: &SystemConfig,
    schedule: &PulseSchedule,
    opts: &IntegratorOptions,
) -> Result<PropagationResult> {
    let layout = psi0.layout;
    if layout.interconnect_levels() != config.d {
        return Err(Error::DimensionMismatch {
            expected: config.d,
            found: layout.interconnect_levels(),
        });
    }
    let norm0 = psi0.norm_sqr();
    if (norm0 - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidConfig(format!(
            "initial state is not normalized (|psi|^2 = {norm0})"
        )));
    }
    let parts = HamiltonianParts::new(config)?;
    let block = state_to_block(psi0);
    let evo = evolve_block(&parts, schedule, opts, block)?;

    let final_state = block_to_state(layout, &evo.block);
    let norm_drift = (final_state.norm_sqr() - 1.0).abs();
    if norm_drift > opts.norm_tolerance {
        return Err(Error::IntegrationFailure {
            drift: norm_drift,
            tolerance: opts.norm_tolerance,
        });
    }
    let trajectory = evo.trajectory.map(|samples| {
        samples
            .into_iter()
            .map(|(t, b)| (t, block_to_state(layout, &b)))
            .collect()
    });
    Ok(PropagationResult {
        final_state,
        norm_drift,
        n_steps: evo.n_steps,
        error_estimate: evo.error_estimate,
        trajectory,
    })
}

/// Evolution operator `U(t_f, t_0)` on `layout`, built column by column.
pub fn propagate_unitary(
    config: &SystemConfig,
    schedule: &PulseSchedule,
    opts: &IntegratorOptions,
    layout: &HilbertLayout,
) -> Result<Operator> {
    if layout.interconnect_levels() != config.d {
        return Err(Error::DimensionMismatch {
            expected: config.d,
            found: layout.interconnect_levels(),
        });
    }
    if layout.dim() > MAX_UNITARY_DIM {
        return Err(Error::InvalidDimension(format!(
            "unitary of dimension {} exceeds the limit {MAX_UNITARY_DIM}",
            layout.dim()
        )));
    }
    let parts = HamiltonianParts::new(config)?;
    let n = layout.system_dim();
    let opts = IntegratorOptions {
        record_trajectory: false,
        ..*opts
    };
    let evo = evolve_block(&parts, schedule, &opts, Operator::identity(n, n))?;
    let u_sys = evo.block;

    let drift = u_sys
        .column_iter()
        .map(|c| (c.norm_squared() - 1.0).abs())
        .fold(0.0, f64::max);
    if drift > opts.norm_tolerance {
        return Err(Error::IntegrationFailure {
            drift,
            tolerance: opts.norm_tolerance,
        });
    }
    let r = layout.reference_dim();
    Ok(Operator::identity(r, r).kronecker(&u_sys))
}

/// `exp(-i h dt)` for Hermitian `h`.
pub fn expm_hermitian(h: &Operator, dt: f64) -> Operator {
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let phase = C64::new(0.0, -eig.eigenvalues[j] * dt).exp();
        col *= phase;
    }
    scaled * v.adjoint()
}

pub(crate) fn state_to_block(psi: &StateVector) -> Operator {
    let n = psi.layout.system_dim();
    let r = psi.layout.reference_dim();
    Operator::from_column_slice(n, r, psi.amplitudes.as_slice())
}

pub(crate) fn block_to_state(layout: HilbertLayout, block: &Operator) -> StateVector {
    StateVector {
        layout,
        amplitudes: nalgebra::DVector::from_column_slice(block.as_slice()),
    }
}

pub(crate) fn evolve_block(
    parts: &HamiltonianParts,
    schedule: &PulseSchedule,
    opts: &IntegratorOptions,
    block: Operator,
) -> Result<BlockEvolution> {
    opts.validate()?;
    schedule.validate()?;
    if block.nrows() != parts.layout.system_dim() {
        return Err(Error::DimensionMismatch {
            expected: parts.layout.system_dim(),
            found: block.nrows(),
        });
    }
    let breaks = schedule.breakpoints();
    let mut evo = BlockEvolution {
        trajectory: opts
            .record_trajectory
            .then(|| vec![(schedule.start(), block.clone())]),
        block,
        n_steps: 0,
        error_estimate: 0.0,
    };
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        match opts.method {
            Method::PiecewiseExact => {
                let PulseSchedule::QuantumBus { .. } = schedule else {
                    return Err(Error::InvalidConfig(
                        "exact segment propagation needs a piecewise-constant schedule".into(),
                    ));
                };
                let (f1, f2) = schedule.segment_envelope(a, b)?;
                let u = expm_hermitian(&parts.at(f1, f2), b - a);
                evo.block = u * &evo.block;
                evo.n_steps += 1;
                if let Some(traj) = evo.trajectory.as_mut() {
                    traj.push((b, evo.block.clone()));
                }
            }
            Method::AdaptiveRungeKutta => {
                dop853_interval(parts, schedule, opts, a, b, &mut evo)?;
            }
        }
        check_finite(&evo.block)?;
    }
    Ok(evo)
}

fn check_finite(block: &Operator) -> Result<()> {
    if block.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericFailure("non-finite amplitude".into()))
    }
}

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MAX_STEPS: usize = 50_000_000;

struct Rhs<'a> {
    parts: &'a HamiltonianParts,
    schedule: &'a PulseSchedule,
    h: Operator,
}

impl Rhs<'_> {
    /// `out = -i H(t) y`
    fn eval(&mut self, t: f64, y: &Operator, out: &mut Operator) -> Result<()> {
        let (f1, f2) = self.schedule.envelope(t)?;
        self.parts.assemble_into(f1, f2, &mut self.h);
        out.gemm(C64::new(0.0, -1.0), &self.h, y, ZERO);
        Ok(())
    }
}

/// `out = y + h Σ_j w_j k_j`, skipping zero weights.
fn combine(out: &mut Operator, y: &Operator, h: f64, weights: &[f64], k: &[Operator]) {
    out.copy_from(y);
    for (&w, kj) in weights.iter().zip(k) {
        if w == 0.0 {
            continue;
        }
        let w = h * w;
        for (o, x) in out.iter_mut().zip(kj.iter()) {
            *o += x * w;
        }
    }
}

/// Adaptive DOP853 over `[start, end]`, on which the envelopes are smooth.
fn dop853_interval(
    parts: &HamiltonianParts,
    schedule: &PulseSchedule,
    opts: &IntegratorOptions,
    start: f64,
    end: f64,
    evo: &mut BlockEvolution,
) -> Result<()> {
    use crate::tableau::{A, B, C, E3, E5, STAGES};

    let (rows, cols) = evo.block.shape();
    let n = parts.layout.system_dim();
    let mut rhs = Rhs {
        parts,
        schedule,
        h: Operator::zeros(n, n),
    };
    // k[0..12] are the stages, k[12] is f(t + h, y_new).
    let mut k: Vec<Operator> = (0..=STAGES).map(|_| Operator::zeros(rows, cols)).collect();
    let mut stage = Operator::zeros(rows, cols);
    let mut y_new = Operator::zeros(rows, cols);

    let span = end - start;
    let max_step = opts.max_step.unwrap_or(span).min(span);
    let mut h = (1e-2 * span).min(max_step).min(0.1);
    let mut t = start;
    let mut y = std::mem::replace(&mut evo.block, Operator::zeros(0, 0));
    rhs.eval(t, &y, &mut k[0])?;

    let mut steps = 0usize;
    while t < end {
        if steps > MAX_STEPS {
            return Err(Error::NumericFailure(format!(
                "step budget exhausted at t = {t}"
            )));
        }
        let last = t + h >= end;
        if last {
            h = end - t;
        }
        let t_next = if last { end } else { t + h };

        for s in 1..STAGES {
            combine(&mut stage, &y, h, &A[s][..s], &k[..s]);
            let ts = if C[s] == 1.0 { t_next } else { t + C[s] * h };
            let (done, rest) = k.split_at_mut(s);
            let _ = done;
            rhs.eval(ts, &stage, &mut rest[0])?;
        }
        combine(&mut y_new, &y, h, &B, &k[..STAGES]);
        {
            let (_, last_k) = k.split_at_mut(STAGES);
            rhs.eval(t_next, &y_new, &mut last_k[0])?;
        }

        // Max-norm version of Hairer's combined 5th/3rd-order error measure.
        let (mut err5, mut err3, mut raw5) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..y.len() {
            let mut e5 = ZERO;
            let mut e3 = ZERO;
            for (j, kj) in k.iter().enumerate() {
                if E5[j] != 0.0 {
                    e5 += kj[i] * E5[j];
                }
                if E3[j] != 0.0 {
                    e3 += kj[i] * E3[j];
                }
            }
            let scale = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err5 = err5.max(e5.norm() / scale);
            err3 = err3.max(e3.norm() / scale);
            raw5 = raw5.max(e5.norm());
        }
        let err = if err5 == 0.0 && err3 == 0.0 {
            0.0
        } else {
            h * err5 * err5 / (err5 * err5 + 0.01 * err3 * err3).sqrt()
        };
        if !err.is_finite() {
            return Err(Error::NumericFailure(format!(
                "error estimate not finite at t = {t}"
            )));
        }

        if err <= 1.0 {
            t = t_next;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, STAGES);
            steps += 1;
            evo.error_estimate += h * raw5;
            if let Some(traj) = evo.trajectory.as_mut() {
                traj.push((t, y.clone()));
            }
            let fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-1.0 / 8.0)).clamp(FAC_MIN, FAC_MAX)
            };
            h = (h * fac).min(max_step);
        } else {
            h *= (SAFETY * err.powf(-1.0 / 8.0)).clamp(FAC_MIN, 1.0);
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::NumericFailure(format!(
                    "step size underflow at t = {t}"
                )));
            }
        }
    }
    evo.block = y;
    evo.n_steps += steps;
    Ok(())
}

/// `‖U†U − 1‖_max`
pub fn unitarity_defect(u: &Operator) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - Operator::identity(n, n)))
}
