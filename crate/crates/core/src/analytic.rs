//! Closed-form emission laws for a pair of distinguishable atoms `A` and `B`.
//!
//! Entangled pairs decay through a single exponential with rate
//! `gamma_f = gamma_a + gamma_b`; after the first photon the survivor emits at
//! its own single-atom rate. Product-state pairs emit independently, and the
//! post-selected one-emission law is a normalized sum of three exponentials
//! that depends on the detection window `tau`.
//!
//! All distributions are returned as fractions of the initial pair count.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix4x3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atom (and photon) label. Photons of the two atoms have different
/// frequencies, so the channels are distinguishable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    A,
    B,
}

impl Channel {
    pub fn other(self) -> Channel {
        match self {
            Channel::A => Channel::B,
            Channel::B => Channel::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::A => "A",
            Channel::B => "B",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Channel::A),
            "B" | "b" => Ok(Channel::B),
            other => Err(Error::InvalidData(format!("unknown channel {other:?}"))),
        }
    }
}

/// Single-atom spontaneous emission rates of the two atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRatePair")]
pub struct RatePair {
    gamma_a: f64,
    gamma_b: f64,
}

#[derive(Deserialize)]
struct RawRatePair {
    gamma_a: f64,
    gamma_b: f64,
}

impl TryFrom<RawRatePair> for RatePair {
    type Error = Error;

    fn try_from(raw: RawRatePair) -> Result<Self> {
        RatePair::new(raw.gamma_a, raw.gamma_b)
    }
}

impl RatePair {
    pub fn new(gamma_a: f64, gamma_b: f64) -> Result<Self> {
        for (name, g) in [("gamma_a", gamma_a), ("gamma_b", gamma_b)] {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a positive finite rate, got {g}"
                )));
            }
        }
        Ok(Self { gamma_a, gamma_b })
    }

    pub fn gamma_a(&self) -> f64 {
        self.gamma_a
    }

    pub fn gamma_b(&self) -> f64 {
        self.gamma_b
    }

    pub fn rate(&self, which: Channel) -> f64 {
        match which {
            Channel::A => self.gamma_a,
            Channel::B => self.gamma_b,
        }
    }

    /// First-emission rate of the entangled pair.
    pub fn gamma_f(&self) -> f64 {
        self.gamma_a + self.gamma_b
    }

    /// Rate of first emissions through `which`; equal to that atom's own rate.
    pub fn channel_rate(&self, which: Channel) -> f64 {
        self.rate(which)
    }

    /// The same pair with the atom labels exchanged.
    pub fn swapped(&self) -> RatePair {
        RatePair {
            gamma_a: self.gamma_b,
            gamma_b: self.gamma_a,
        }
    }
}

/// How "both photons in one window" is decided for post-selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowMode {
    /// Fixed partition of the time axis into width-`tau` bins starting at 0.
    #[default]
    GridBin,
    /// Emissions closer than `tau` in time.
    Pairwise,
}

impl FromStr for WindowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid-bin" => Ok(WindowMode::GridBin),
            "pairwise" | "pairwise-difference" => Ok(WindowMode::Pairwise),
            other => Err(Error::InvalidParameter(format!("unknown window mode {other:?}"))),
        }
    }
}

impl fmt::Display for WindowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowMode::GridBin => "grid-bin",
            WindowMode::Pairwise => "pairwise",
        })
    }
}

/// Which single-atom window probability enters the one-emission law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowVariant {
    /// First-order form `tau * gamma * exp(-gamma t)`.
    #[default]
    Taylor,
    /// Exact exponential mass inside the window centred on `t`, clipped at 0.
    Exact,
}

impl FromStr for WindowVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "taylor" => Ok(WindowVariant::Taylor),
            "exact" => Ok(WindowVariant::Exact),
            other => Err(Error::InvalidParameter(format!(
                "unknown window variant {other:?}"
            ))),
        }
    }
}

impl fmt::Display for WindowVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowVariant::Taylor => "taylor",
            WindowVariant::Exact => "exact",
        })
    }
}

/// Detection window of width `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    tau: f64,
    mode: WindowMode,
}

impl WindowConfig {
    pub fn new(tau: f64, mode: WindowMode) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "window width tau must be positive and finite, got {tau}"
            )));
        }
        Ok(Self { tau, mode })
    }

    pub fn grid_bin(tau: f64) -> Result<Self> {
        Self::new(tau, WindowMode::GridBin)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mode(&self) -> WindowMode {
        self.mode
    }

    /// Checks `tau * gamma_a * gamma_b < gamma_a + gamma_b`.
    pub fn check_validity_bound(&self, rates: &RatePair) -> Result<()> {
        let lhs = self.tau * rates.gamma_a() * rates.gamma_b();
        let rhs = rates.gamma_f();
        if lhs < rhs {
            Ok(())
        } else {
            Err(Error::WindowTooWide { lhs, rhs })
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeTime(t))
    }
}

fn check_rate(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "rate must be positive and finite, got {gamma}"
        )))
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "window width must be non-negative and finite, got {tau}"
        )))
    }
}

/// `exp(-gamma a) - exp(-gamma b)` for `a <= b`, without cancellation.
fn exp_difference(gamma: f64, a: f64, b: f64) -> f64 {
    if b.is_infinite() {
        return (-gamma * a).exp();
    }
    exp_span(gamma, a, b - a)
}

/// `exp(-gamma a) - exp(-gamma (a + width))`.
fn exp_span(gamma: f64, a: f64, width: f64) -> f64 {
    -(-gamma * a).exp() * (-gamma * width).exp_m1()
}

/// `integral_a^b exp(-gamma t) dt`.
fn exp_integral(gamma: f64, a: f64, b: f64) -> f64 {
    exp_difference(gamma, a, b) / gamma
}

pub fn first_emission_rate(rates: &RatePair) -> f64 {
    rates.gamma_f()
}

/// Channel rates `(gamma_a, gamma_b)` together with the first-emission rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRates {
    pub channel_a: f64,
    pub channel_b: f64,
    pub gamma_f: f64,
}

impl ChannelRates {
    /// The compatible solution `gamma_i = Gamma_i`, `Gamma_f = Gamma_A + Gamma_B`.
    pub fn closed_form(rates: &RatePair) -> Self {
        Self {
            channel_a: rates.gamma_a(),
            channel_b: rates.gamma_b(),
            gamma_f: rates.gamma_f(),
        }
    }

    /// Channel rates implied by an arbitrary first-emission rate through
    /// `gamma_j = gamma_f - Gamma_i`. Only `gamma_f = Gamma_A + Gamma_B`
    /// satisfies the remaining compatibility relations.
    pub fn with_first_rate(rates: &RatePair, gamma_f: f64) -> Self {
        Self {
            channel_a: gamma_f - rates.gamma_b(),
            channel_b: gamma_f - rates.gamma_a(),
            gamma_f,
        }
    }

    pub fn channel(&self, which: Channel) -> f64 {
        match which {
            Channel::A => self.channel_a,
            Channel::B => self.channel_b,
        }
    }
}

/// Output of [`solve_compatibility`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatibilitySolution {
    pub channels: ChannelRates,
    pub iterations: usize,
    pub residual: f64,
}

const COMPAT_MAX_ITER: usize = 100;
const COMPAT_TOL: f64 = 1e-14;

/// Residuals of the four relations obtained by equating the time-ordered and
/// direct forms of `dN_i/dt`, in units of the scale `s = Gamma_A + Gamma_B`.
/// Unknowns are `(gamma_a, gamma_b, gamma_f) / s`. The ratio relations are
/// multiplied through by `gamma_f - Gamma_i`.
fn compat_residual(x: &Vector3<f64>, ga: f64, gb: f64) -> Vector4<f64> {
    let (ca, cb, gf) = (x[0], x[1], x[2]);
    Vector4::new(
        cb - (gf - ga),
        ca - (gf - gb),
        ca * (gf - ga) - ga * cb,
        cb * (gf - gb) - gb * ca,
    )
}

fn compat_jacobian(x: &Vector3<f64>, ga: f64, gb: f64) -> Matrix4x3<f64> {
    let (ca, cb, gf) = (x[0], x[1], x[2]);
    Matrix4x3::new(
        0.0, 1.0, -1.0, //
        1.0, 0.0, -1.0, //
        gf - ga, -ga, ca, //
        -gb, gf - gb, cb,
    )
}

/// Solves the compatibility relations numerically by Gauss-Newton on the
/// overdetermined (4 equations, 3 unknowns) but consistent system.
///
/// The start point sits above both single rates so that the iteration stays
/// on the branch where `gamma_f > max(Gamma_A, Gamma_B)`; the other algebraic
/// root `gamma_f = Gamma_i` makes the intermediate population singular and is
/// rejected.
pub fn solve_compatibility(rates: &RatePair) -> Result<CompatibilitySolution> {
    let scale = rates.gamma_f();
    let ga = rates.gamma_a() / scale;
    let gb = rates.gamma_b() / scale;
    let mut x = Vector3::new(0.5, 0.5, 2.0);
    let mut residual = compat_residual(&x, ga, gb).norm();
    for iteration in 1..=COMPAT_MAX_ITER {
        let r = compat_residual(&x, ga, gb);
        let j = compat_jacobian(&x, ga, gb);
        let jt = j.transpose();
        let normal: Matrix3<f64> = jt * j;
        let rhs = -(jt * r);
        let step = normal.lu().solve(&rhs).ok_or(Error::SolverNonConvergence {
            iterations: iteration,
            residual,
        })?;
        x += step;
        residual = compat_residual(&x, ga, gb).norm();
        if step.norm() < COMPAT_TOL && residual < COMPAT_TOL {
            if x[2] <= ga.max(gb) || !x.iter().all(|v| v.is_finite()) {
                break;
            }
            return Ok(CompatibilitySolution {
                channels: ChannelRates {
                    channel_a: x[0] * scale,
                    channel_b: x[1] * scale,
                    gamma_f: x[2] * scale,
                },
                iterations: iteration,
                residual: residual * scale * scale,
            });
        }
    }
    Err(Error::SolverNonConvergence {
        iterations: COMPAT_MAX_ITER,
        residual,
    })
}

/// Fraction of pairs still entangled: `exp(-gamma_f t)`.
pub fn entangled_survival(t: f64, rates: &RatePair) -> Result<f64> {
    check_time(t)?;
    Ok((-rates.gamma_f() * t).exp())
}

/// Cumulative first emissions of entangled pairs: `1 - exp(-gamma_f t)`.
pub fn first_emission_cdf_entangled(t: f64, rates: &RatePair) -> Result<f64> {
    check_time(t)?;
    Ok(-(-rates.gamma_f() * t).exp_m1())
}

/// Cumulative photons of one type, `1 - exp(-gamma_i t)`.
pub fn single_type_cdf(t: f64, gamma_i: f64) -> Result<f64> {
    check_time(t)?;
    check_rate(gamma_i)?;
    Ok(-(-gamma_i * t).exp_m1())
}

/// Excited atoms of type `which` whose partner has already emitted.
pub fn intermediate_population(t: f64, rates: &RatePair, which: Channel) -> Result<f64> {
    check_time(t)?;
    Ok(intermediate_population_with(
        t,
        rates,
        &ChannelRates::closed_form(rates),
        which,
    ))
}

/// `gamma_j / (Gamma_i - gamma_f) * (exp(-gamma_f t) - exp(-Gamma_i t))`.
/// `Gamma_i - gamma_f` is `-Gamma_j` on the compatible solution, never zero.
pub fn intermediate_population_with(
    t: f64,
    rates: &RatePair,
    channels: &ChannelRates,
    which: Channel,
) -> f64 {
    let gi = rates.rate(which);
    let gj_channel = channels.channel(which.other());
    let gf = channels.gamma_f;
    gj_channel / (gi - gf) * ((-gf * t).exp() - (-gi * t).exp())
}

/// `(1/n_0) dN_i/dt` from the time-ordered picture: first emissions in channel
/// `i` plus second emissions of disentangled `i` atoms.
pub fn emission_derivative_ordered(t: f64, rates: &RatePair, which: Channel) -> Result<f64> {
    check_time(t)?;
    Ok(emission_derivative_ordered_with(
        t,
        rates,
        &ChannelRates::closed_form(rates),
        which,
    ))
}

pub fn emission_derivative_ordered_with(
    t: f64,
    rates: &RatePair,
    channels: &ChannelRates,
    which: Channel,
) -> f64 {
    let gi = rates.rate(which);
    let ci = channels.channel(which);
    let cj = channels.channel(which.other());
    let gf = channels.gamma_f;
    let first = (-gf * t).exp();
    ci * first + gi * cj / (gi - gf) * (first - (-gi * t).exp())
}

/// `(1/n_0) dN_i/dt = Gamma_i exp(-Gamma_i t)`, ignoring emission order.
pub fn emission_derivative_direct(t: f64, gamma_i: f64) -> Result<f64> {
    check_time(t)?;
    check_rate(gamma_i)?;
    Ok(gamma_i * (-gamma_i * t).exp())
}

/// Cumulative second emissions, `N_A + N_B - N_f`.
pub fn second_emission_cdf(t: f64, rates: &RatePair) -> Result<f64> {
    Ok(single_type_cdf(t, rates.gamma_a())? + single_type_cdf(t, rates.gamma_b())?
        - first_emission_cdf_entangled(t, rates)?)
}

/// A window probability, flagged when the first-order form leaves `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowProbability {
    pub value: f64,
    pub breakdown: bool,
}

/// First-order window probability `tau * gamma_i * exp(-gamma_i t)`.
pub fn window_prob_taylor(t: f64, tau: f64, gamma_i: f64) -> Result<WindowProbability> {
    check_time(t)?;
    check_tau(tau)?;
    check_rate(gamma_i)?;
    let value = tau * gamma_i * (-gamma_i * t).exp();
    Ok(WindowProbability {
        value,
        breakdown: value > 1.0,
    })
}

/// Exact probability that an atom of rate `gamma_i` emits in
/// `[max(0, t - tau/2), t + tau/2]`.
pub fn window_prob_exact(t: f64, tau: f64, gamma_i: f64) -> Result<f64> {
    check_time(t)?;
    check_tau(tau)?;
    check_rate(gamma_i)?;
    Ok(window_exact_unchecked(t, tau, gamma_i))
}

fn window_exact_unchecked(t: f64, tau: f64, gamma: f64) -> f64 {
    let lo = t - 0.5 * tau;
    if lo >= 0.0 {
        exp_span(gamma, lo, tau)
    } else {
        exp_span(gamma, 0.0, t + 0.5 * tau)
    }
}

fn window_taylor_unchecked(t: f64, tau: f64, gamma: f64) -> f64 {
    tau * gamma * (-gamma * t).exp()
}

/// Probability of exactly one emission in the window around `t`:
/// `P_A + P_B - 2 P_A P_B`.
pub fn product_one_emission_unnormalized(
    t: f64,
    rates: &RatePair,
    window: &WindowConfig,
    variant: WindowVariant,
) -> Result<f64> {
    check_time(t)?;
    Ok(one_emission_unchecked(t, rates, window.tau(), variant))
}

fn one_emission_unchecked(t: f64, rates: &RatePair, tau: f64, variant: WindowVariant) -> f64 {
    let p = |g| match variant {
        WindowVariant::Taylor => window_taylor_unchecked(t, tau, g),
        WindowVariant::Exact => window_exact_unchecked(t, tau, g),
    };
    let pa = p(rates.gamma_a());
    let pb = p(rates.gamma_b());
    pa + pb - 2.0 * pa * pb
}

/// Post-selected one-emission law for product-state pairs.
///
/// For the Taylor variant the normalization is closed form,
/// `alpha = 1 / (2 - 2 tau Gamma_A Gamma_B / (Gamma_A + Gamma_B))`. For the
/// exact variant `alpha` is the reciprocal of the integrated unnormalized
/// probability, evaluated piecewise around the clipping point `t = tau/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedWindowModel {
    pub rates: RatePair,
    pub window: WindowConfig,
    pub variant: WindowVariant,
    pub alpha: f64,
}

/// Taylor-variant model; fails when the validity bound is violated.
pub fn normalization_alpha(rates: &RatePair, window: &WindowConfig) -> Result<NormalizedWindowModel> {
    NormalizedWindowModel::new(rates, window, WindowVariant::Taylor)
}

impl NormalizedWindowModel {
    pub fn new(rates: &RatePair, window: &WindowConfig, variant: WindowVariant) -> Result<Self> {
        let alpha = match variant {
            WindowVariant::Taylor => {
                window.check_validity_bound(rates)?;
                1.0 / (2.0 - taylor_cross_weight(rates, window.tau()))
            }
            WindowVariant::Exact => 1.0 / exact_mass(rates, window.tau(), 0.0, f64::INFINITY),
        };
        Ok(Self {
            rates: *rates,
            window: *window,
            variant,
            alpha,
        })
    }

    pub fn tau(&self) -> f64 {
        self.window.tau()
    }

    /// One-emission density (per unit time), `P(t, tau) / tau`.
    pub fn pdf(&self, t: f64) -> f64 {
        let tau = self.tau();
        match self.variant {
            WindowVariant::Taylor => {
                let (ga, gb) = (self.rates.gamma_a(), self.rates.gamma_b());
                self.alpha
                    * (ga * (-ga * t).exp() + gb * (-gb * t).exp()
                        - 2.0 * tau * ga * gb * (-(ga + gb) * t).exp())
            }
            WindowVariant::Exact => {
                self.alpha * one_emission_unchecked(t, &self.rates, tau, WindowVariant::Exact) / tau
            }
        }
    }

    /// Cumulative one-emission fraction, 0 at `t = 0` and 1 as `t -> inf`.
    pub fn cdf(&self, t: f64) -> f64 {
        let tau = self.tau();
        match self.variant {
            WindowVariant::Taylor => {
                let (ga, gb) = (self.rates.gamma_a(), self.rates.gamma_b());
                let cross = taylor_cross_weight(&self.rates, tau);
                1.0 - self.alpha * (-ga * t).exp() - self.alpha * (-gb * t).exp()
                    + self.alpha * cross * (-(ga + gb) * t).exp()
            }
            WindowVariant::Exact => {
                let head = exact_mass(&self.rates, tau, 0.0, t) * self.alpha;
                if head <= 0.5 {
                    head
                } else {
                    1.0 - exact_mass(&self.rates, tau, t, f64::INFINITY) * self.alpha
                }
            }
        }
    }
}

/// `2 tau Gamma_A Gamma_B / (Gamma_A + Gamma_B)`.
fn taylor_cross_weight(rates: &RatePair, tau: f64) -> f64 {
    2.0 * tau * rates.gamma_a() * rates.gamma_b() / rates.gamma_f()
}

/// `(1/tau) * integral_a^b P_exact^un(t) dt` for `0 <= a <= b <= inf`.
///
/// Below `h = tau/2` the window is clipped and `P^un = u_A + u_B - 2 u_A u_B`
/// with `u_i = exp(-Gamma_i (t + h))`. Above it `P_i = c_i exp(-Gamma_i t)`
/// with `c_i = 2 sinh(Gamma_i h)`.
fn exact_mass(rates: &RatePair, tau: f64, a: f64, b: f64) -> f64 {
    let h = 0.5 * tau;
    let (ga, gb, gf) = (rates.gamma_a(), rates.gamma_b(), rates.gamma_f());
    let mut total = 0.0;
    if a < h {
        let hi = b.min(h);
        total += (-ga * h).exp() * exp_integral(ga, a, hi) + (-gb * h).exp() * exp_integral(gb, a, hi)
            - 2.0 * (-gf * h).exp() * exp_integral(gf, a, hi);
    }
    if b > h {
        let lo = a.max(h);
        let ca = 2.0 * (ga * h).sinh();
        let cb = 2.0 * (gb * h).sinh();
        total += ca * exp_integral(ga, lo, b) + cb * exp_integral(gb, lo, b)
            - 2.0 * ca * cb * exp_integral(gf, lo, b);
    }
    total / tau
}

pub fn product_first_pdf(t: f64, model: &NormalizedWindowModel) -> Result<f64> {
    check_time(t)?;
    Ok(model.pdf(t))
}

pub fn product_first_cdf(t: f64, model: &NormalizedWindowModel) -> Result<f64> {
    check_time(t)?;
    Ok(model.cdf(t))
}

/// Probability that both photons of an independent (product-state) pair land
/// in the same window and the pair is discarded.
///
/// Grid-bin: `(1 - e^{-Gamma_A tau})(1 - e^{-Gamma_B tau}) / (1 - e^{-(Gamma_A+Gamma_B) tau})`.
/// Pairwise: `P(|t_A - t_B| < tau)`.
pub fn coincidence_probability(rates: &RatePair, window: &WindowConfig) -> f64 {
    let tau = window.tau();
    let (ga, gb, gf) = (rates.gamma_a(), rates.gamma_b(), rates.gamma_f());
    let qa = -(-ga * tau).exp_m1();
    let qb = -(-gb * tau).exp_m1();
    match window.mode() {
        WindowMode::GridBin => qa * qb / -(-gf * tau).exp_m1(),
        WindowMode::Pairwise => (ga * qb + gb * qa) / gf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use approx::assert_relative_eq;

    fn fig1() -> RatePair {
        RatePair::new(1.0, 1.5).unwrap()
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(RatePair::new(0.0, 1.0).is_err());
        assert!(RatePair::new(1.0, -2.0).is_err());
        assert!(RatePair::new(f64::NAN, 1.0).is_err());
        assert!(RatePair::new(1.0, f64::INFINITY).is_err());
        let json = r#"{"gamma_a": -1.0, "gamma_b": 1.0}"#;
        assert!(serde_json::from_str::<RatePair>(json).is_err());
    }

    #[test]
    fn first_rate_examples() {
        assert_eq!(first_emission_rate(&fig1()), 2.5);
        assert_eq!(first_emission_rate(&RatePair::new(1.5, 1.0).unwrap()), 2.5);
        assert_eq!(first_emission_rate(&RatePair::new(2.0, 2.0).unwrap()), 4.0);
    }

    #[test]
    fn compatibility_examples() {
        for (ga, gb) in [(1.0, 1.5), (2.0, 2.0), (1.0, 1.0e-3), (1.0e-3, 1.0), (7.0, 0.2)] {
            let rates = RatePair::new(ga, gb).unwrap();
            let sol = solve_compatibility(&rates).unwrap();
            let ch = sol.channels;
            assert!((ch.channel_a - ga).abs() < 1e-10 * (ga + gb), "{ga} {gb} {ch:?}");
            assert!((ch.channel_b - gb).abs() < 1e-10 * (ga + gb), "{ga} {gb} {ch:?}");
            assert!((ch.gamma_f - (ga + gb)).abs() < 1e-10 * (ga + gb), "{ga} {gb} {ch:?}");
        }
    }

    #[test]
    fn negative_time_is_domain_error() {
        let r = fig1();
        assert!(matches!(entangled_survival(-1.0, &r), Err(Error::NegativeTime(_))));
        assert!(first_emission_cdf_entangled(-0.1, &r).is_err());
        assert!(intermediate_population(-0.1, &r, Channel::A).is_err());
        assert!(single_type_cdf(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn survival_and_cdf_values() {
        let r = fig1();
        assert_eq!(entangled_survival(0.0, &r).unwrap(), 1.0);
        assert_relative_eq!(entangled_survival(0.4, &r).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert!(entangled_survival(200.0, &r).unwrap() < 1e-200);
        assert_eq!(first_emission_cdf_entangled(0.0, &r).unwrap(), 0.0);
        assert_relative_eq!(
            first_emission_cdf_entangled(0.4, &r).unwrap(),
            0.632_120_558_828_557_7,
            epsilon = 1e-15
        );
        for t in [0.0, 0.01, 0.4, 3.0, 50.0] {
            let s = entangled_survival(t, &r).unwrap() + first_emission_cdf_entangled(t, &r).unwrap();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_type_values() {
        assert_eq!(single_type_cdf(0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(single_type_cdf(1.0, 1.0).unwrap(), 0.632_120_558_828_557_7, epsilon = 1e-15);
        assert_relative_eq!(single_type_cdf(1.0, 1.5).unwrap(), 0.776_869_839_851_570_2, epsilon = 1e-15);
    }

    #[test]
    fn intermediate_population_values() {
        let r = fig1();
        assert_eq!(intermediate_population(0.0, &r, Channel::A).unwrap(), 0.0);
        let expected = (-1.0f64).exp() - (-2.5f64).exp();
        assert_relative_eq!(intermediate_population(1.0, &r, Channel::A).unwrap(), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.285_794_442_547_543_55, epsilon = 1e-15);
        assert!(intermediate_population(100.0, &r, Channel::B).unwrap().abs() < 1e-40);
        // equal rates: no singular denominator
        let eq = RatePair::new(2.0, 2.0).unwrap();
        assert!(intermediate_population(0.3, &eq, Channel::A).unwrap().is_finite());
    }

    #[test]
    fn ordered_and_direct_derivatives() {
        let r = fig1();
        assert_relative_eq!(emission_derivative_ordered(0.0, &r, Channel::A).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            emission_derivative_ordered(1.0, &r, Channel::A).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );
        assert_relative_eq!(emission_derivative_direct(1.0, 1.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(emission_derivative_direct(0.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn wrong_first_rate_breaks_compatibility() {
        let r = fig1();
        let bad = ChannelRates::with_first_rate(&r, 0.96 * r.gamma_f());
        let dev = (0..100)
            .map(|k| k as f64 * 0.04)
            .map(|t| {
                (emission_derivative_ordered_with(t, &r, &bad, Channel::A)
                    - emission_derivative_direct(t, 1.0).unwrap())
                .abs()
            })
            .fold(0.0, f64::max);
        assert!(dev > 1e-3);
    }

    #[test]
    fn second_emission_values() {
        let r = fig1();
        assert_eq!(second_emission_cdf(0.0, &r).unwrap(), 0.0);
        assert_relative_eq!(second_emission_cdf(60.0, &r).unwrap(), 1.0, epsilon = 1e-15);
        let expected = (1.0 - (-1.0f64).exp()) + (1.0 - (-1.5f64).exp()) - (1.0 - (-2.5f64).exp());
        assert_relative_eq!(second_emission_cdf(1.0, &r).unwrap(), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.491_075_397_304_026_66, epsilon = 1e-15);
    }

    #[test]
    fn taylor_window_values() {
        let p = window_prob_taylor(0.0, 0.1, 1.0).unwrap();
        assert_relative_eq!(p.value, 0.1);
        assert!(!p.breakdown);
        assert_eq!(window_prob_taylor(2.0, 0.0, 1.0).unwrap().value, 0.0);
        let p = window_prob_taylor(0.0, 5.0 / 6.0, 1.5).unwrap();
        assert_relative_eq!(p.value, 1.25, epsilon = 1e-15);
        assert!(p.breakdown);
    }

    #[test]
    fn exact_window_values() {
        assert_relative_eq!(window_prob_exact(0.5, 1.0, 1.0).unwrap(), 0.632_120_558_828_557_7, epsilon = 1e-15);
        let expected = (-2.85f64).exp() - (-3.15f64).exp();
        assert_relative_eq!(window_prob_exact(2.0, 0.2, 1.5).unwrap(), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.014_992_194_007_798_27, epsilon = 1e-15);
        // Taylor consistency as tau -> 0
        for t in [0.3, 1.0, 4.0] {
            let tau = 1e-7;
            let ratio = window_prob_taylor(t, tau, 1.5).unwrap().value / window_prob_exact(t, tau, 1.5).unwrap();
            assert!((ratio - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn one_emission_examples() {
        let r = fig1();
        let w = WindowConfig::grid_bin(5.0 / 6.0).unwrap();
        let p = product_one_emission_unnormalized(0.0, &r, &w, WindowVariant::Taylor).unwrap();
        assert!(p.abs() < 1e-15);
        let eq = RatePair::new(1.0, 1.0).unwrap();
        let w = WindowConfig::grid_bin(0.1).unwrap();
        let q = 0.1 * (-1.0f64).exp();
        let p = product_one_emission_unnormalized(1.0, &eq, &w, WindowVariant::Taylor).unwrap();
        assert_relative_eq!(p, 2.0 * q - 2.0 * q * q, epsilon = 1e-15);
        assert_relative_eq!(p, 0.070_869_182_569_556_21, epsilon = 1e-15);
    }

    #[test]
    fn alpha_examples() {
        let r = fig1();
        let m = normalization_alpha(&r, &WindowConfig::grid_bin(5.0 / 6.0).unwrap()).unwrap();
        assert!((m.alpha - 1.0).abs() < 1e-12);
        let m = normalization_alpha(&r, &WindowConfig::grid_bin(1e-12).unwrap()).unwrap();
        assert_relative_eq!(m.alpha, 0.5, epsilon = 1e-11);
        let err = normalization_alpha(&r, &WindowConfig::grid_bin(5.0 / 3.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::WindowTooWide { .. }));
        assert!(err.to_string().contains("gamma_a + gamma_b"));
    }

    #[test]
    fn product_pdf_and_cdf_examples() {
        let r = fig1();
        let m = normalization_alpha(&r, &WindowConfig::grid_bin(5.0 / 6.0).unwrap()).unwrap();
        assert!(product_first_pdf(0.0, &m).unwrap().abs() < 1e-15);
        assert!(product_first_cdf(0.0, &m).unwrap().abs() < 1e-15);
        assert_relative_eq!(product_first_cdf(80.0, &m).unwrap(), 1.0, epsilon = 1e-15);
        let expected = 1.0 - (-1.0f64).exp() - (-1.5f64).exp() + (-2.5f64).exp();
        assert_relative_eq!(product_first_cdf(1.0, &m).unwrap(), expected, epsilon = 1e-14);
        assert_relative_eq!(expected, 0.491_075_397_304_026_66, epsilon = 1e-15);

        // tau -> 0: equal-weight mixture of the single-atom densities
        let m0 = normalization_alpha(&r, &WindowConfig::grid_bin(1e-12).unwrap()).unwrap();
        for t in [0.0, 0.5, 2.0] {
            let mix = 0.5 * ((-t as f64).exp() + 1.5 * (-1.5 * t as f64).exp());
            assert_relative_eq!(m0.pdf(t), mix, epsilon = 1e-10);
        }
    }

    #[test]
    fn pdf_integrates_to_one_both_variants() {
        let r = fig1();
        for tau in [0.02, 0.3, 5.0 / 6.0] {
            for variant in [WindowVariant::Taylor, WindowVariant::Exact] {
                let m = NormalizedWindowModel::new(&r, &WindowConfig::grid_bin(tau).unwrap(), variant).unwrap();
                let t_max = 40.0 / r.gamma_a().min(r.gamma_b());
                let mut total = 0.0;
                // split at the clipping kink of the exact variant
                let kink = 0.5 * tau;
                total += integrate(|t| m.pdf(t), 0.0, kink, 1e-14).value;
                total += integrate(|t| m.pdf(t), kink, t_max, 1e-14).value;
                assert!((total - 1.0).abs() < 1e-6, "{tau} {variant:?} {total}");
            }
        }
    }

    #[test]
    fn exact_variant_cdf_matches_quadrature() {
        let r = fig1();
        let m = NormalizedWindowModel::new(&r, &WindowConfig::grid_bin(0.4).unwrap(), WindowVariant::Exact).unwrap();
        for x in [0.05, 0.2, 0.5, 1.0, 3.0] {
            let kink = 0.2f64.min(x);
            let q = integrate(|t| m.pdf(t), 0.0, kink, 1e-15).value
                + integrate(|t| m.pdf(t), kink, x, 1e-15).value;
            assert_relative_eq!(m.cdf(x), q, epsilon = 1e-12);
        }
        assert_eq!(m.cdf(0.0), 0.0);
    }

    #[test]
    fn coincidence_examples() {
        let r = fig1();
        let p = coincidence_probability(&r, &WindowConfig::grid_bin(0.1).unwrap());
        assert!((p - 0.0599).abs() < 5e-5, "{p}");
        assert!(coincidence_probability(&r, &WindowConfig::grid_bin(1e-300).unwrap()) < 1e-290);
        let tau = 1e-6;
        let small = coincidence_probability(&r, &WindowConfig::grid_bin(tau).unwrap());
        assert_relative_eq!(small / (tau * 1.5 / 2.5), 1.0, epsilon = 1e-5);
    }

    #[test]
    fn pairwise_coincidence_matches_quadrature() {
        // P(|tA - tB| < tau) = int gA e^{-gA a} (e^{-gB (a-tau)+} - e^{-gB (a+tau)}) da
        let r = fig1();
        let tau = 0.3;
        let w = WindowConfig::new(tau, WindowMode::Pairwise).unwrap();
        let f = |a: f64| {
            let lo = (a - tau).max(0.0);
            (-a).exp() * ((-1.5 * lo).exp() - (-1.5 * (a + tau)).exp())
        };
        let q = integrate(f, 0.0, tau, 1e-15).value + integrate(f, tau, 60.0, 1e-15).value;
        assert_relative_eq!(coincidence_probability(&r, &w), q, epsilon = 1e-12);
    }
}
