//! Fitting and model comparison on first-emission time samples.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::analytic::{NormalizedWindowModel, RatePair, WindowConfig, WindowVariant};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub rate_estimate: f64,
    pub std_error: f64,
    pub log_likelihood: f64,
    pub n_samples: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreferredModel {
    Entangled,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub ll_entangled: f64,
    pub ll_product: f64,
    pub preferred: PreferredModel,
    /// `ll_entangled - ll_product`; non-negative means entangled is preferred.
    pub log_likelihood_ratio: f64,
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidData("no samples".into()));
    }
    if let Some(bad) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidData(format!(
            "sample times must be positive and finite, found {bad}"
        )));
    }
    Ok(())
}

/// Exponential log-likelihood `sum(ln rate - rate t)` at a fixed rate.
pub fn log_likelihood_exponential(times: &[f64], rate: f64) -> Result<f64> {
    validate_times(times)?;
    let sum: f64 = times.iter().sum();
    Ok(times.len() as f64 * rate.ln() - rate * sum)
}

/// Maximum-likelihood exponential rate, `1 / mean`.
pub fn mle_exponential(times: &[f64]) -> Result<FitResult> {
    validate_times(times)?;
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let rate = 1.0 / mean;
    Ok(FitResult {
        rate_estimate: rate,
        std_error: rate / n.sqrt(),
        log_likelihood: log_likelihood_exponential(times, rate)?,
        n_samples: times.len() as u64,
    })
}

/// Two-sided Kolmogorov-Smirnov statistic of the samples against `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(times: &[f64], cdf: F) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::InvalidData("no samples".into()));
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &t) in sorted.iter().enumerate() {
        let f = cdf(t);
        let below = i as f64 / n;
        let above = (i + 1) as f64 / n;
        d = d.max((f - below).abs()).max((above - f).abs());
    }
    Ok(d)
}

/// Asymptotic KS critical value `sqrt(-ln(significance / 2) / 2) / sqrt(n)`;
/// 1.628/sqrt(n) at significance 0.01.
pub fn ks_critical_value(n: usize, significance: f64) -> f64 {
    (-0.5 * (0.5 * significance).ln()).sqrt() / (n as f64).sqrt()
}

/// `sum ln pdf(t_k)` under the post-selected product-state law.
pub fn log_likelihood_product(times: &[f64], model: &NormalizedWindowModel) -> Result<f64> {
    validate_times(times)?;
    let mut total = 0.0;
    for &t in times {
        let p = model.pdf(t);
        if !(p > 0.0) {
            return Err(Error::ModelInapplicable(format!(
                "product-state density is {p} at t = {t}"
            )));
        }
        total += p.ln();
    }
    Ok(total)
}

/// Compares the entangled exponential law (rate `Gamma_A + Gamma_B`) against
/// the product-state law with known single-atom rates and window.
pub fn discriminate(
    times: &[f64],
    rates: &RatePair,
    window: &WindowConfig,
    variant: WindowVariant,
) -> Result<ModelComparison> {
    validate_times(times)?;
    let model = NormalizedWindowModel::new(rates, window, variant)?;
    let ll_entangled = log_likelihood_exponential(times, rates.gamma_f())?;
    let ll_product = log_likelihood_product(times, &model)?;
    let ratio = ll_entangled - ll_product;
    Ok(ModelComparison {
        ll_entangled,
        ll_product,
        preferred: if ratio >= 0.0 {
            PreferredModel::Entangled
        } else {
            PreferredModel::Product
        },
        log_likelihood_ratio: ratio,
    })
}

/// Which photon times to take from a CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSelection {
    /// The `t_first` column only.
    #[default]
    First,
    /// `t_first` and `t_second` pooled: every single emission of a kept pair.
    Pooled,
}

impl std::str::FromStr for SampleSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(SampleSelection::First),
            "pooled" => Ok(SampleSelection::Pooled),
            other => Err(Error::InvalidParameter(format!("unknown sample selection {other:?}"))),
        }
    }
}

/// Reads sample times from a CSV with a `t_first` column (and `t_second` for
/// pooled selection). Other columns are ignored.
pub fn read_sample_times<R: Read>(input: R, selection: SampleSelection) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::InvalidData(format!("missing column {name:?}")))
    };
    let mut columns = vec![column("t_first")?];
    if selection == SampleSelection::Pooled {
        columns.push(column("t_second")?);
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::InvalidData(e.to_string()))?;
        for &c in &columns {
            let field = row
                .get(c)
                .ok_or_else(|| Error::InvalidData("short row".into()))?
                .trim();
            let t: f64 = field
                .parse()
                .map_err(|_| Error::InvalidData(format!("bad time value {field:?}")))?;
            out.push(t);
        }
    }
    Ok(out)
}
