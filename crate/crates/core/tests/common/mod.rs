//! Reference implementations written directly from the model definition,
//! sharing no code with the library: explicit matrix elements, hand-rolled
//! envelopes and a fixed-step RK4 integrator.

#![allow(dead_code, clippy::needless_range_loop)]

use num_complex::Complex64 as C;

/// Real symmetric matrix stored densely.
pub type Real = Vec<Vec<f64>>;

pub struct OracleModel {
    pub d: usize,
    pub g: f64,
    pub diag: Vec<f64>,
    /// Coupling pattern of Q1 and Q2 with unit strength.
    pub v1: Real,
    pub v2: Real,
}

/// System index: `q1` slowest, then the interconnect level, then `q2`.
pub fn idx(d: usize, q1: usize, m: usize, q2: usize) -> usize {
    (q1 * d + m) * 2 + q2
}

impl OracleModel {
    pub fn new(d: usize, g: f64, rwa: bool, delta1: f64, delta2: f64) -> Self {
        let n = 4 * d;
        let mut diag = vec![0.0; n];
        let mut v1 = vec![vec![0.0; n]; n];
        let mut v2 = vec![vec![0.0; n]; n];
        for q1 in 0..2 {
            for m in 0..d {
                for q2 in 0..2 {
                    let i = idx(d, q1, m, q2);
                    diag[i] = m as f64 + (1.0 + delta1) * q1 as f64 + (1.0 + delta2) * q2 as f64;
                    // (a + a†) σx: flip the qubit, move the interconnect by one.
                    for (mp, amp) in [
                        (m + 1, ((m + 1) as f64).sqrt()),
                        (m.wrapping_sub(1), (m as f64).sqrt()),
                    ] {
                        if mp >= d {
                            continue;
                        }
                        let raising_ic = mp > m;
                        // qubit 1 flip
                        let qubit_lowered = q1 == 1;
                        if !rwa || raising_ic == qubit_lowered {
                            v1[idx(d, 1 - q1, mp, q2)][i] = amp;
                        }
                        let qubit_lowered = q2 == 1;
                        if !rwa || raising_ic == qubit_lowered {
                            v2[idx(d, q1, mp, 1 - q2)][i] = amp;
                        }
                    }
                }
            }
        }
        Self { d, g, diag, v1, v2 }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `-i H(f1, f2) psi`
    pub fn rhs(&self, f1: f64, f2: f64, psi: &[C]) -> Vec<C> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = C::new(self.diag[i], 0.0) * psi[i];
                for j in 0..n {
                    let h = self.g * (f1 * self.v1[i][j] + f2 * self.v2[i][j]);
                    if h != 0.0 {
                        acc += psi[j] * h;
                    }
                }
                C::new(0.0, -1.0) * acc
            })
            .collect()
    }

    pub fn hamiltonian(&self, f1: f64, f2: f64) -> Real {
        let n = self.dim();
        let mut h = vec![vec![0.0; n]; n];
        for i in 0..n {
            h[i][i] = self.diag[i];
            for j in 0..n {
                h[i][j] += self.g * (f1 * self.v1[i][j] + f2 * self.v2[i][j]);
            }
        }
        h
    }
}

/// Pulse timing, rebuilt from gT, tau/T and the half window.
#[derive(Clone, Copy)]
pub enum OracleSchedule {
    Bus {
        g: f64,
    },
    Ctap {
        g: f64,
        g_t: f64,
        tau_over_t: f64,
        half_window_over_t: f64,
    },
}

impl OracleSchedule {
    pub fn bus(g: f64) -> Self {
        OracleSchedule::Bus { g }
    }

    pub fn ctap(g: f64) -> Self {
        OracleSchedule::Ctap {
            g,
            g_t: 20.0,
            tau_over_t: 0.7,
            half_window_over_t: 2.0 * 2f64.sqrt(),
        }
    }

    /// Intervals on which the envelope is smooth.
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        match *self {
            OracleSchedule::Bus { g } => {
                let half = std::f64::consts::PI / (2.0 * g);
                vec![(0.0, half), (half, 2.0 * half)]
            }
            OracleSchedule::Ctap {
                g,
                g_t,
                half_window_over_t,
                ..
            } => {
                let t = g_t / g;
                vec![(-half_window_over_t * t, half_window_over_t * t)]
            }
        }
    }

    /// Envelope on piece `k` at time `t`.
    pub fn envelope(&self, k: usize, t: f64) -> (f64, f64) {
        match *self {
            OracleSchedule::Bus { .. } => {
                if k == 0 {
                    (1.0, 0.0)
                } else {
                    (0.0, 1.0)
                }
            }
            OracleSchedule::Ctap {
                g, g_t, tau_over_t, ..
            } => {
                let width = g_t / g;
                let tau = tau_over_t * width;
                let x1 = (t - tau) / width;
                let x2 = (t + tau) / width;
                ((-x1 * x1).exp(), (-x2 * x2).exp())
            }
        }
    }
}

/// Classical RK4 with `steps_per_unit` steps per unit time on each piece.
/// `observe` sees every intermediate state.
pub fn rk4(
    model: &OracleModel,
    schedule: &OracleSchedule,
    psi0: &[C],
    max_h: f64,
    mut observe: impl FnMut(f64, &[C]),
) -> Vec<C> {
    let mut psi = psi0.to_vec();
    for (k, (a, b)) in schedule.pieces().into_iter().enumerate() {
        let n = ((b - a) / max_h).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for s in 0..n {
            let t = a + s as f64 * h;
            let env = |t: f64| schedule.envelope(k, t);
            let axpy = |x: &[C], y: &[C], c: f64| -> Vec<C> {
                x.iter().zip(y).map(|(x, y)| x + y * c).collect()
            };
            let (f1, f2) = env(t);
            let k1 = model.rhs(f1, f2, &psi);
            let (f1, f2) = env(t + h / 2.0);
            let k2 = model.rhs(f1, f2, &axpy(&psi, &k1, h / 2.0));
            let k3 = model.rhs(f1, f2, &axpy(&psi, &k2, h / 2.0));
            let (f1, f2) = env(t + h);
            let k4 = model.rhs(f1, f2, &axpy(&psi, &k3, h));
            for i in 0..psi.len() {
                psi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
            observe(t + h, &psi);
        }
    }
    psi
}

pub fn basis(dim: usize, i: usize) -> Vec<C> {
    let mut v = vec![C::new(0.0, 0.0); dim];
    v[i] = C::new(1.0, 0.0);
    v
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
