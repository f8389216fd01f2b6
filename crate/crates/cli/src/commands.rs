use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twoatom_core::analytic::{first_emission_cdf_entangled, single_type_cdf};
use twoatom_core::estimation::{discriminate, mle_exponential, read_sample_times};
use twoatom_core::montecarlo::{channel_fractions, postselect, simulate, write_records_csv};
use twoatom_core::series::{uniform_grid, write_columns};
use twoatom_core::{
    analytic, kinetics, IntegratorConfig, KineticsState, NormalizedWindowModel, PairKind,
    RatePair, SimConfig, WindowConfig,
};

use crate::checks::run_checks;
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::params::{
    AnalyticParams, DiscriminateParams, FitParams, Invocation, KineticsParams, SimulateParams,
};

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
    /// JSON result echoed to stdout by `fit`, `discriminate` and `wavefunction`.
    pub stdout: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub kind: PairKind,
    pub n_pairs: u64,
    pub records_written: u64,
    pub kept: u64,
    pub discarded: u64,
    pub empirical_coincidence_rate: f64,
    /// Closed-form discard probability; product pairs only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coincidence_probability: Option<f64>,
    pub channel_a_fraction: f64,
    pub channel_b_fraction: f64,
}

/// Runs the invocation, writes its outputs and the manifest next to them.
pub fn execute(inv: &Invocation) -> Result<RunOutcome, CliError> {
    let (outputs, stdout) = match inv {
        Invocation::Analytic(p) => (cmd_analytic(p)?, None),
        Invocation::Simulate(p) => (cmd_simulate(p)?, None),
        Invocation::Fit(p) => {
            let json = cmd_fit(p)?;
            (vec![p.out.clone()], Some(json))
        }
        Invocation::Discriminate(p) => {
            let json = cmd_discriminate(p)?;
            (vec![p.out.clone()], Some(json))
        }
        Invocation::Kinetics(p) => (cmd_kinetics(p)?, None),
        Invocation::Wavefunction(p) => {
            let report = run_checks(p)?;
            let json = to_json(&report)?;
            write_text(&p.out, &json)?;
            (vec![p.out.clone()], Some(json))
        }
    };
    let manifest = RunManifest::new(inv, &outputs);
    let path = RunManifest::path_for(inv.out());
    write_text(&path, &to_json(&manifest)?)?;
    Ok(RunOutcome {
        outputs,
        manifest: path,
        stdout,
    })
}

/// Rows of `t,nf_entangled,nf_product,n_a,n_b`.
pub fn analytic_table(p: &AnalyticParams) -> Result<Vec<[f64; 5]>, CliError> {
    let rates = RatePair::new(p.gamma_a, p.gamma_b)?;
    let window = WindowConfig::new(p.tau, p.mode)?;
    let model = NormalizedWindowModel::new(&rates, &window, p.window_variant)?;
    if !(p.t_max.is_finite() && p.t_max > 0.0) {
        return Err(CliError::invalid_parameters(format!("t_max must be positive, got {}", p.t_max)));
    }
    if p.n_points < 2 {
        return Err(CliError::invalid_parameters("n_points must be at least 2"));
    }
    uniform_grid(0.0, p.t_max, p.n_points)
        .into_iter()
        .map(|t| {
            Ok([
                t,
                first_emission_cdf_entangled(t, &rates)?,
                analytic::product_first_cdf(t, &model)?,
                single_type_cdf(t, rates.gamma_a())?,
                single_type_cdf(t, rates.gamma_b())?,
            ])
        })
        .collect()
}

pub fn cmd_analytic(p: &AnalyticParams) -> Result<Vec<PathBuf>, CliError> {
    let rows = analytic_table(p)?;
    let columns: Vec<Vec<f64>> = (0..5).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
    let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    let mut out = create(&p.out)?;
    write_columns(&mut out, &["t", "nf_entangled", "nf_product", "n_a", "n_b"], &refs)?;
    out.flush()?;
    Ok(vec![p.out.clone()])
}

/// `sim.csv` -> `sim.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

pub fn cmd_simulate(p: &SimulateParams) -> Result<Vec<PathBuf>, CliError> {
    let rates = RatePair::new(p.gamma_a, p.gamma_b)?;
    let window = WindowConfig::new(p.tau, p.mode)?;
    let cfg = SimConfig::new(p.n_pairs, rates, p.kind, window, p.seed)?;
    let records = simulate(&cfg, p.workers)?;
    let (kept, post) = postselect(&records, &window);
    let written = match p.kind {
        PairKind::Entangled => &records,
        PairKind::Product => &kept,
    };
    let (fa, fb) = channel_fractions(written);
    let summary = SimulationSummary {
        kind: p.kind,
        n_pairs: p.n_pairs,
        records_written: written.len() as u64,
        kept: post.kept,
        discarded: post.discarded,
        empirical_coincidence_rate: post.empirical_coincidence_rate,
        coincidence_probability: (p.kind == PairKind::Product)
            .then(|| analytic::coincidence_probability(&rates, &window)),
        channel_a_fraction: fa,
        channel_b_fraction: fb,
    };
    let mut out = create(&p.out)?;
    write_records_csv(written, &mut out)?;
    out.flush()?;
    let summary_out = summary_path(&p.out);
    write_text(&summary_out, &to_json(&summary)?)?;
    Ok(vec![p.out.clone(), summary_out])
}

fn read_times(input: &Path, sample: twoatom_core::estimation::SampleSelection) -> Result<Vec<f64>, CliError> {
    let file = File::open(input).map_err(|e| {
        CliError::invalid_data(format!("cannot open input {}: {e}", input.display()))
    })?;
    Ok(read_sample_times(std::io::BufReader::new(file), sample)?)
}

pub fn cmd_fit(p: &FitParams) -> Result<String, CliError> {
    let times = read_times(&p.input, p.sample)?;
    let json = to_json(&mle_exponential(&times)?)?;
    write_text(&p.out, &json)?;
    Ok(json)
}

pub fn cmd_discriminate(p: &DiscriminateParams) -> Result<String, CliError> {
    let rates = RatePair::new(p.gamma_a, p.gamma_b)?;
    let window = WindowConfig::new(p.tau, p.mode)?;
    let times = read_times(&p.input, p.sample)?;
    let json = to_json(&discriminate(&times, &rates, &window, p.window_variant)?)?;
    write_text(&p.out, &json)?;
    Ok(json)
}

pub fn cmd_kinetics(p: &KineticsParams) -> Result<Vec<PathBuf>, CliError> {
    let rates = RatePair::new(p.gamma_a, p.gamma_b)?;
    let cfg = IntegratorConfig::new(p.step, p.t_end, p.n0)?;
    let states = kinetics::integrate(&KineticsState::initial(p.n0), &rates, &cfg)?;
    let mut out = create(&p.out)?;
    kinetics::write_csv(&states, &mut out)?;
    out.flush()?;
    Ok(vec![p.out.clone()])
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::new(crate::error::EXIT_FAILURE, format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use twoatom_core::{WindowMode, WindowVariant};

    fn fig1(t_max: f64) -> AnalyticParams {
        AnalyticParams {
            gamma_a: 1.0,
            gamma_b: 1.5,
            tau: 5.0 / 6.0,
            mode: WindowMode::GridBin,
            window_variant: WindowVariant::Taylor,
            t_max,
            n_points: 1000,
            out: "unused.csv".into(),
        }
    }

    #[test]
    fn analytic_first_row_is_zero_and_tail_saturates() {
        let rows = analytic_table(&fig1(8.0)).unwrap();
        assert_eq!(rows.len(), 1000);
        assert_eq!(rows[0], [0.0; 5]);
        let last = rows.last().unwrap();
        assert_eq!(last[0], 8.0);
        for v in &last[1..] {
            assert!((1.0 - v).abs() < 1e-3, "{last:?}");
        }
    }

    #[test]
    fn analytic_entangled_curve_dominates() {
        for r in analytic_table(&fig1(6.0)).unwrap() {
            assert!(r[1] >= r[2]);
            assert!(r[1] >= r[3].max(r[4]));
        }
    }

    #[test]
    fn analytic_reports_validity_bound() {
        let mut p = fig1(4.0);
        p.tau = 5.0 / 3.0;
        let err = analytic_table(&p).unwrap_err();
        assert_eq!(err.code, crate::error::EXIT_INVALID_PARAMETERS);
        assert!(err.message.contains("gamma_a + gamma_b"), "{}", err.message);
        p.n_points = 1;
        p.tau = 0.5;
        assert!(analytic_table(&p).is_err());
    }

    #[test]
    fn summary_path_replaces_extension() {
        assert_eq!(summary_path(Path::new("out/sim.csv")), PathBuf::from("out/sim.summary.json"));
        assert_eq!(summary_path(Path::new("sim")), PathBuf::from("sim.summary.json"));
    }
}
