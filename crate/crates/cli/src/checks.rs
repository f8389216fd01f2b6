//! Wavefunction checks reported by the `wavefunction` subcommand.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twoatom_core::wavefunction::{
    antisymmetrize, free_propagate, gaussian, oscillator_state, swap_overlap, symmetry_defects,
};
use twoatom_core::{Grid1D, TwoParticleAmplitude};

use crate::error::CliError;
use crate::params::{WavefunctionCheck, WavefunctionParams};

pub const DEFECT_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;
pub const N0F_TOL: f64 = 1e-10;
pub const OVERLAP_TOL: f64 = 1e-10;
pub const SPREADING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: WavefunctionCheck,
    pub pass: bool,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionReport {
    pub grid: Grid1D,
    pub t: f64,
    pub pass: bool,
    pub checks: Vec<CheckReport>,
}

const ALL: [WavefunctionCheck; 6] = [
    WavefunctionCheck::AntisymmetryPreservation,
    WavefunctionCheck::NormPreservation,
    WavefunctionCheck::N0fAntisymmetric,
    WavefunctionCheck::N0fProduct,
    WavefunctionCheck::SwapOverlap,
    WavefunctionCheck::GaussianSpreading,
];

pub fn run_checks(p: &WavefunctionParams) -> Result<WavefunctionReport, CliError> {
    let grid = Grid1D::new(p.x_min, p.x_max, p.n)?;
    if !p.t.is_finite() {
        return Err(CliError::invalid_parameters(format!("t must be finite, got {}", p.t)));
    }
    let list: Vec<WavefunctionCheck> = match p.check {
        WavefunctionCheck::All => ALL.to_vec(),
        one => vec![one],
    };
    let checks = list
        .into_iter()
        .map(|c| run_one(c, grid, p.t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(WavefunctionReport {
        grid,
        t: p.t,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

/// Ground and first excited oscillator orbitals, displaced so the product is
/// neither symmetric nor antisymmetric.
fn generic_product(grid: Grid1D) -> Result<TwoParticleAmplitude, CliError> {
    Ok(TwoParticleAmplitude::product(
        grid,
        |x| oscillator_state(0, x + 1.0),
        |y| oscillator_state(1, y - 0.5),
    )?)
}

fn report(check: WavefunctionCheck, pass: bool, metrics: &[(&str, f64)]) -> CheckReport {
    CheckReport {
        check,
        pass,
        metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        message: None,
    }
}

fn run_one(check: WavefunctionCheck, grid: Grid1D, t: f64) -> Result<CheckReport, CliError> {
    use WavefunctionCheck as C;
    Ok(match check {
        C::AntisymmetryPreservation => {
            let psi = antisymmetrize(&generic_product(grid)?)?.amplitude;
            let before = symmetry_defects(&psi).antisymmetric_defect;
            let evolved = free_propagate(&psi, t)?;
            let after = symmetry_defects(&evolved).antisymmetric_defect;
            report(
                check,
                after < DEFECT_TOL,
                &[("antisymmetric_defect_initial", before), ("antisymmetric_defect", after)],
            )
        }
        C::NormPreservation => {
            let psi = generic_product(grid)?;
            let evolved = free_propagate(&psi, t)?;
            let drift = (evolved.norm() - psi.norm()).abs();
            report(
                check,
                drift < NORM_TOL,
                &[("norm_initial", psi.norm()), ("norm_final", evolved.norm()), ("norm_drift", drift)],
            )
        }
        C::N0fAntisymmetric => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let psi = TwoParticleAmplitude::from_fn(grid, |x, y| {
                let v = oscillator_state(0, x) * oscillator_state(1, y)
                    - oscillator_state(1, x) * oscillator_state(0, y);
                Complex64::new(s * v, 0.0)
            })?
            .normalized()?;
            let n0f = antisymmetrize(&psi)?.n0f;
            report(check, (n0f - 0.5).abs() < N0F_TOL, &[("n0f", n0f), ("expected", 0.5)])
        }
        C::N0fProduct => {
            let psi = TwoParticleAmplitude::product(
                grid,
                |x| oscillator_state(0, x),
                |y| oscillator_state(1, y),
            )?;
            let n0f = antisymmetrize(&psi)?.n0f;
            let expected = std::f64::consts::FRAC_1_SQRT_2;
            report(check, (n0f - expected).abs() < N0F_TOL, &[("n0f", n0f), ("expected", expected)])
        }
        C::N0fSymmetricInput => {
            let psi = TwoParticleAmplitude::product(
                grid,
                |x| oscillator_state(0, x),
                |y| oscillator_state(0, y),
            )?;
            match antisymmetrize(&psi) {
                Ok(a) => report(check, false, &[("n0f", a.n0f)]),
                Err(e) => CheckReport {
                    message: Some(format!("input is symmetric under exchange, so antisymmetrization is undefined: {e}")),
                    ..report(check, false, &[])
                },
            }
        }
        C::SwapOverlap => {
            let psi = antisymmetrize(&generic_product(grid)?)?.amplitude;
            let overlap = swap_overlap(&psi)?;
            let defect = (overlap + 1.0).norm();
            report(
                check,
                defect < OVERLAP_TOL,
                &[("overlap_re", overlap.re), ("overlap_im", overlap.im), ("deviation", defect)],
            )
        }
        C::GaussianSpreading => {
            let sigma = 1.0;
            let psi = TwoParticleAmplitude::product(
                grid,
                |x| gaussian(x, 0.0, sigma),
                |y| gaussian(y, 0.0, sigma),
            )?;
            let evolved = free_propagate(&psi, t)?;
            let (_, spread) = evolved.marginal_x_moments();
            let expected = sigma * (1.0 + t * t / sigma.powi(4)).sqrt() / 2f64.sqrt();
            let err = (spread - expected).abs();
            report(
                check,
                err < SPREADING_TOL,
                &[("spread", spread), ("expected", expected), ("error", err)],
            )
        }
        C::All => unreachable!("expanded by run_checks"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(check: WavefunctionCheck) -> WavefunctionParams {
        WavefunctionParams {
            check,
            n: 128,
            x_min: -16.0,
            x_max: 16.0,
            t: 1.0,
            out: "unused.json".into(),
        }
    }

    #[test]
    fn all_checks_pass_on_default_style_grid() {
        let r = run_checks(&params(WavefunctionCheck::All)).unwrap();
        for c in &r.checks {
            assert!(c.pass, "{:?}: {:?}", c.check, c.metrics);
        }
        assert_eq!(r.checks.len(), 6);
    }

    #[test]
    fn symmetric_input_fails_with_message() {
        let r = run_checks(&params(WavefunctionCheck::N0fSymmetricInput)).unwrap();
        assert!(!r.pass);
        assert!(r.checks[0].message.as_deref().unwrap().contains("undefined"));
    }

    #[test]
    fn narrow_grid_is_invalid() {
        let mut p = params(WavefunctionCheck::NormPreservation);
        p.x_min = -3.0;
        p.x_max = 3.0;
        let err = run_checks(&p).unwrap_err();
        assert_eq!(err.code, crate::error::EXIT_INVALID_PARAMETERS);
    }
}
