//! Rate equations for entangled pairs, integrated with classical RK4.
//!
//! State components are evolved as fractions of the initial pair count `n_0`
//! and scaled on output, since the system is linear.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::analytic::{ChannelRates, RatePair};
use crate::error::{Error, Result};
use crate::series::write_columns;

/// Populations and cumulative photon counts at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KineticsState {
    pub t: f64,
    /// Entangled pairs.
    pub n_e: f64,
    /// Excited, already disentangled atoms of type A.
    pub n_a: f64,
    pub n_b: f64,
    /// Cumulative photons of type A.
    pub cap_n_a: f64,
    pub cap_n_b: f64,
    /// Cumulative first emissions.
    pub cap_n_f: f64,
}

impl KineticsState {
    /// All atoms excited and entangled.
    pub fn initial(n_0: f64) -> Self {
        Self {
            n_e: n_0,
            ..Self::default()
        }
    }

    /// `2 n_e + n_a + n_b + N_A + N_B`, which should stay at `2 n_0`.
    pub fn excitation_total(&self) -> f64 {
        2.0 * self.n_e + self.n_a + self.n_b + self.cap_n_a + self.cap_n_b
    }

    /// `N_f + n_e`, which should stay at `n_0`.
    pub fn pair_total(&self) -> f64 {
        self.cap_n_f + self.n_e
    }

    fn scaled(&self, k: f64) -> Self {
        Self {
            t: self.t,
            n_e: self.n_e * k,
            n_a: self.n_a * k,
            n_b: self.n_b * k,
            cap_n_a: self.cap_n_a * k,
            cap_n_b: self.cap_n_b * k,
            cap_n_f: self.cap_n_f * k,
        }
    }

    fn is_finite(&self) -> bool {
        [self.n_e, self.n_a, self.n_b, self.cap_n_a, self.cap_n_b, self.cap_n_f]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Time derivative of every population in [`KineticsState`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub dn_e: f64,
    pub dn_a: f64,
    pub dn_b: f64,
    pub dcap_n_a: f64,
    pub dcap_n_b: f64,
    pub dcap_n_f: f64,
}

impl Add for StateDerivative {
    type Output = StateDerivative;

    fn add(self, o: Self) -> Self {
        Self {
            dn_e: self.dn_e + o.dn_e,
            dn_a: self.dn_a + o.dn_a,
            dn_b: self.dn_b + o.dn_b,
            dcap_n_a: self.dcap_n_a + o.dcap_n_a,
            dcap_n_b: self.dcap_n_b + o.dcap_n_b,
            dcap_n_f: self.dcap_n_f + o.dcap_n_f,
        }
    }
}

impl Mul<f64> for StateDerivative {
    type Output = StateDerivative;

    fn mul(self, k: f64) -> Self {
        Self {
            dn_e: self.dn_e * k,
            dn_a: self.dn_a * k,
            dn_b: self.dn_b * k,
            dcap_n_a: self.dcap_n_a * k,
            dcap_n_b: self.dcap_n_b * k,
            dcap_n_f: self.dcap_n_f * k,
        }
    }
}

impl KineticsState {
    fn advanced(&self, d: &StateDerivative, dt: f64) -> Self {
        Self {
            t: self.t + dt,
            n_e: self.n_e + dt * d.dn_e,
            n_a: self.n_a + dt * d.dn_a,
            n_b: self.n_b + dt * d.dn_b,
            cap_n_a: self.cap_n_a + dt * d.dcap_n_a,
            cap_n_b: self.cap_n_b + dt * d.dcap_n_b,
            cap_n_f: self.cap_n_f + dt * d.dcap_n_f,
        }
    }
}

/// Right-hand side with the compatible channel rates.
pub fn derivative(state: &KineticsState, rates: &RatePair) -> StateDerivative {
    derivative_with(state, rates, &ChannelRates::closed_form(rates))
}

/// Right-hand side for arbitrary channel rates:
///
/// ```text
/// dn_e/dt = -gamma_f n_e
/// dn_i/dt = gamma_j n_e - Gamma_i n_i
/// dN_i/dt = gamma_i n_e + Gamma_i n_i
/// dN_f/dt = gamma_f n_e
/// ```
pub fn derivative_with(
    state: &KineticsState,
    rates: &RatePair,
    channels: &ChannelRates,
) -> StateDerivative {
    let (ga, gb) = (rates.gamma_a(), rates.gamma_b());
    let emit_a = ga * state.n_a;
    let emit_b = gb * state.n_b;
    StateDerivative {
        dn_e: -channels.gamma_f * state.n_e,
        dn_a: channels.channel_b * state.n_e - emit_a,
        dn_b: channels.channel_a * state.n_e - emit_b,
        dcap_n_a: channels.channel_a * state.n_e + emit_a,
        dcap_n_b: channels.channel_b * state.n_e + emit_b,
        dcap_n_f: channels.gamma_f * state.n_e,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub step: f64,
    pub t_end: f64,
    pub n_0: f64,
}

impl IntegratorConfig {
    pub fn new(step: f64, t_end: f64, n_0: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidParameter(format!("t_end must be non-negative, got {t_end}")));
        }
        if !(n_0.is_finite() && n_0 > 0.0) {
            return Err(Error::InvalidParameter(format!("n_0 must be positive, got {n_0}")));
        }
        Ok(Self { step, t_end, n_0 })
    }

    /// Number of steps; the last one is shortened so the run ends on `t_end`.
    fn n_steps(&self) -> usize {
        let raw = self.t_end / self.step;
        let rounded = raw.round();
        if (raw - rounded).abs() < 1e-9 * raw.max(1.0) {
            rounded as usize
        } else {
            raw.ceil() as usize
        }
    }
}

/// Integrates from `initial` (which must be the all-entangled state at `t = 0`
/// with `n_e = cfg.n_0`) and returns every step including the start.
pub fn integrate(
    initial: &KineticsState,
    rates: &RatePair,
    cfg: &IntegratorConfig,
) -> Result<Vec<KineticsState>> {
    integrate_with(initial, rates, &ChannelRates::closed_form(rates), cfg)
}

pub fn integrate_with(
    initial: &KineticsState,
    rates: &RatePair,
    channels: &ChannelRates,
    cfg: &IntegratorConfig,
) -> Result<Vec<KineticsState>> {
    let expected = KineticsState::initial(cfg.n_0);
    if *initial != expected {
        return Err(Error::InvalidParameter(
            "initial state must have every pair entangled at t = 0 with n_e = n_0".into(),
        ));
    }
    let n_steps = cfg.n_steps();
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut y = KineticsState::initial(1.0);
    out.push(y.scaled(cfg.n_0));
    for k in 1..=n_steps {
        let t_next = if k == n_steps { cfg.t_end } else { k as f64 * cfg.step };
        let h = t_next - y.t;
        y = rk4_step(&y, h, |s| derivative_with(s, rates, channels));
        y.t = t_next;
        if !y.is_finite() {
            return Err(Error::IntegrationBlowup { t: t_next });
        }
        out.push(y.scaled(cfg.n_0));
    }
    Ok(out)
}

fn rk4_step<F: Fn(&KineticsState) -> StateDerivative>(y: &KineticsState, h: f64, f: F) -> KineticsState {
    let k1 = f(y);
    let k2 = f(&y.advanced(&k1, 0.5 * h));
    let k3 = f(&y.advanced(&k2, 0.5 * h));
    let k4 = f(&y.advanced(&k3, h));
    let slope = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (1.0 / 6.0);
    y.advanced(&slope, h)
}

/// Writes the trajectory as `t,n_e,n_a,n_b,cap_n_a,cap_n_b,cap_n_f`.
pub fn write_csv<W: std::io::Write>(states: &[KineticsState], out: W) -> Result<()> {
    let col = |f: fn(&KineticsState) -> f64| states.iter().map(f).collect::<Vec<_>>();
    let columns = [
        col(|s| s.t),
        col(|s| s.n_e),
        col(|s| s.n_a),
        col(|s| s.n_b),
        col(|s| s.cap_n_a),
        col(|s| s.cap_n_b),
        col(|s| s.cap_n_f),
    ];
    let refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
    write_columns(
        out,
        &["t", "n_e", "n_a", "n_b", "cap_n_a", "cap_n_b", "cap_n_f"],
        &refs,
    )
}
