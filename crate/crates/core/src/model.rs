//! Two qubits coupled to a truncated d-level interconnect, and the two
//! transfer protocols driving the couplings.
//!
//! Energies are in units of the interconnect splitting (`omega_c = 1` by
//! default) and times in units of `1/omega_c`. All evolution happens in the
//! lab frame.

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hilbert::{
    embed, ladder_operator, sigma_minus, sigma_plus, Factor, HilbertLayout, Operator, C64,
};

/// Physical parameters of the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// Number of interconnect levels kept.
    pub d: usize,
    pub omega_c: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub g1: f64,
    pub g2: f64,
    /// Drop the counter-rotating terms.
    pub rwa: bool,
}

impl SystemConfig {
    /// Resonant qubits (`eps1 = eps2 = omega_c = 1`) with symmetric coupling `g`.
    pub fn resonant(d: usize, g: f64, rwa: bool) -> Self {
        Self {
            d,
            omega_c: 1.0,
            eps1: 1.0,
            eps2: 1.0,
            g1: g,
            g2: g,
            rwa,
        }
    }

    pub fn with_detunings(mut self, delta1: f64, delta2: f64) -> Self {
        self.eps1 = self.omega_c + delta1;
        self.eps2 = self.omega_c + delta2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidDimension(format!(
                "interconnect needs d >= 2, got {}",
                self.d
            )));
        }
        let finite = [self.omega_c, self.eps1, self.eps2, self.g1, self.g2]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        if self.omega_c <= 0.0 {
            return Err(Error::InvalidConfig("omega_c must be positive".into()));
        }
        if self.g1 < 0.0 || self.g2 < 0.0 {
            return Err(Error::InvalidConfig(
                "couplings must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn system_layout(&self) -> Result<HilbertLayout> {
        HilbertLayout::system(self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    /// Two sequential resonant swaps through the interconnect.
    QuantumBus,
    /// Counterintuitive Gaussian pulse pair.
    Ctap,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::QuantumBus => "qb",
            Protocol::Ctap => "ctap",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qb" | "bus" | "quantum-bus" => Ok(Protocol::QuantumBus),
            "ctap" => Ok(Protocol::Ctap),
            other => Err(Error::InvalidConfig(format!("unknown protocol '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseShape {
    /// `F(x) = exp(-x²)`
    Gaussian,
}

impl PulseShape {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            PulseShape::Gaussian => (-x * x).exp(),
        }
    }
}

/// CTAP timing in units of the pulse width `T`, with `T` fixed by the pulse area `gT`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtapParams {
    pub g_t: f64,
    pub tau_over_t: f64,
    pub half_window_over_t: f64,
}

impl Default for CtapParams {
    fn default() -> Self {
        Self {
            g_t: 20.0,
            tau_over_t: 0.7,
            half_window_over_t: 2.0 * SQRT_2,
        }
    }
}

/// Time dependence of the two couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseSchedule {
    /// Rectangular swaps: `(f1, f2) = (1, 0)` on `[0, swap_time)`, then
    /// `(0, 1)` on `[swap_time, 2 swap_time]`.
    QuantumBus { swap_time: f64 },
    /// `f1 = F((t - tau)/T)`, `f2 = F((t + tau)/T)` on `[start, end]`.
    Ctap {
        width: f64,
        half_delay: f64,
        start: f64,
        end: f64,
        shape: PulseShape,
    },
}

impl PulseSchedule {
    /// Quantum-bus schedule with swap time `π/(2g)`.
    pub fn quantum_bus(g: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "quantum bus needs a positive coupling to set the swap time, got {g}"
            )));
        }
        Ok(PulseSchedule::QuantumBus {
            swap_time: FRAC_PI_2 / g,
        })
    }

    /// Gaussian CTAP schedule with `T = gT / g`.
    pub fn ctap(g: f64, params: CtapParams) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "ctap needs a positive coupling to set the pulse width, got {g}"
            )));
        }
        if !(params.g_t > 0.0 && params.tau_over_t > 0.0 && params.half_window_over_t > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "ctap parameters must be positive: {params:?}"
            )));
        }
        let width = params.g_t / g;
        Ok(PulseSchedule::Ctap {
            width,
            half_delay: params.tau_over_t * width,
            start: -params.half_window_over_t * width,
            end: params.half_window_over_t * width,
            shape: PulseShape::Gaussian,
        })
    }

    pub fn for_protocol(protocol: Protocol, g: f64, params: CtapParams) -> Result<Self> {
        match protocol {
            Protocol::QuantumBus => Self::quantum_bus(g),
            Protocol::Ctap => Self::ctap(g, params),
        }
    }

    pub fn protocol(&self) -> Protocol {
        match self {
            PulseSchedule::QuantumBus { .. } => Protocol::QuantumBus,
            PulseSchedule::Ctap { .. } => Protocol::Ctap,
        }
    }

    pub fn start(&self) -> f64 {
        match *self {
            PulseSchedule::QuantumBus { .. } => 0.0,
            PulseSchedule::Ctap { start, .. } => start,
        }
    }

    pub fn end(&self) -> f64 {
        match *self {
            PulseSchedule::QuantumBus { swap_time } => 2.0 * swap_time,
            PulseSchedule::Ctap { end, .. } => end,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    /// Characteristic time reported alongside results: `T` for CTAP, the
    /// swap time for the bus.
    pub fn width(&self) -> f64 {
        match *self {
            PulseSchedule::QuantumBus { swap_time } => swap_time,
            PulseSchedule::Ctap { width, .. } => width,
        }
    }

    /// Half delay `tau` (zero for the bus).
    pub fn half_delay(&self) -> f64 {
        match *self {
            PulseSchedule::QuantumBus { .. } => 0.0,
            PulseSchedule::Ctap { half_delay, .. } => half_delay,
        }
    }

    /// Boundaries of the intervals on which the envelopes are smooth,
    /// including both window endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            PulseSchedule::QuantumBus { swap_time } => vec![0.0, swap_time, 2.0 * swap_time],
            PulseSchedule::Ctap { start, end, .. } => vec![start, end],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PulseSchedule::QuantumBus { swap_time } => swap_time > 0.0 && swap_time.is_finite(),
            PulseSchedule::Ctap {
                width,
                half_delay,
                start,
                end,
                ..
            } => {
                width > 0.0
                    && half_delay > 0.0
                    && start < end
                    && end.is_finite()
                    && start.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "ill-formed schedule {self:?}"
            )))
        }
    }

    /// Coupling envelopes `(f1, f2)` at time `t`.
    pub fn envelope(&self, t: f64) -> Result<(f64, f64)> {
        let (start, end) = (self.start(), self.end());
        // Runge-Kutta stages can land an ulp or so past the window edge.
        let slack = 1e-12 * (1.0 + start.abs().max(end.abs()));
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::OutsideWindow { t, start, end });
        }
        Ok(match *self {
            PulseSchedule::QuantumBus { swap_time } => {
                if t < swap_time {
                    (1.0, 0.0)
                } else {
                    (0.0, 1.0)
                }
            }
            PulseSchedule::Ctap {
                width,
                half_delay,
                shape,
                ..
            } => (
                shape.eval((t - half_delay) / width),
                shape.eval((t + half_delay) / width),
            ),
        })
    }

    /// Envelopes that hold on the open interval `(a, b)` of a piecewise-constant schedule.
    pub(crate) fn segment_envelope(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        self.envelope(0.5 * (a + b))
    }
}

/// The static pieces of the Hamiltonian on `Q1 ⊗ IC ⊗ Q2`:
/// `H(t) = drift + f1(t) coupling1 + f2(t) coupling2`.
#[derive(Debug, Clone)]
pub struct HamiltonianParts {
    pub layout: HilbertLayout,
    pub drift: Operator,
    pub coupling1: Operator,
    pub coupling2: Operator,
}

impl HamiltonianParts {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        let layout = config.system_layout()?;
        let a = embed(&ladder_operator(config.d)?, Factor::Interconnect, &layout)?;
        let ad = a.adjoint();
        let sm1 = embed(&sigma_minus(), Factor::Qubit1, &layout)?;
        let sp1 = embed(&sigma_plus(), Factor::Qubit1, &layout)?;
        let sm2 = embed(&sigma_minus(), Factor::Qubit2, &layout)?;
        let sp2 = embed(&sigma_plus(), Factor::Qubit2, &layout)?;

        let re = |x: f64| C64::new(x, 0.0);
        let drift = (&ad * &a) * re(config.omega_c)
            + (&sp1 * &sm1) * re(config.eps1)
            + (&sp2 * &sm2) * re(config.eps2);

        let interaction = |sm: &Operator, sp: &Operator| -> Operator {
            if config.rwa {
                &ad * sm + &a * sp
            } else {
                (&a + &ad) * (sm + sp)
            }
        };
        let coupling1 = interaction(&sm1, &sp1) * re(config.g1);
        let coupling2 = interaction(&sm2, &sp2) * re(config.g2);
        Ok(Self {
            layout,
            drift,
            coupling1,
            coupling2,
        })
    }

    pub fn at(&self, f1: f64, f2: f64) -> Operator {
        let mut h = self.drift.clone();
        self.assemble_into(f1, f2, &mut h);
        h
    }

    /// Writes `drift + f1 coupling1 + f2 coupling2` into `out` without allocating.
    pub(crate) fn assemble_into(&self, f1: f64, f2: f64, out: &mut Operator) {
        let (f1, f2) = (C64::new(f1, 0.0), C64::new(f2, 0.0));
        for (((o, d), v1), v2) in out
            .iter_mut()
            .zip(self.drift.iter())
            .zip(self.coupling1.iter())
            .zip(self.coupling2.iter())
        {
            *o = d + f1 * v1 + f2 * v2;
        }
    }
}

/// Full Hamiltonian at time `t` on `layout`; the reference factor, if present,
/// carries the identity.
pub fn hamiltonian(
    config: &SystemConfig,
    schedule: &PulseSchedule,
    t: f64,
    layout: &HilbertLayout,
) -> Result<Operator> {
    if layout.interconnect_levels() != config.d {
        return Err(Error::DimensionMismatch {
            expected: config.d,
            found: layout.interconnect_levels(),
        });
    }
    let (f1, f2) = schedule.envelope(t)?;
    let h = HamiltonianParts::new(config)?.at(f1, f2);
    let r = layout.reference_dim();
    Ok(Operator::identity(r, r).kronecker(&h))
}
