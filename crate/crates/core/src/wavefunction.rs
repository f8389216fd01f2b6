//! Two-particle centre-of-mass amplitudes `psi(x, y)` on a square grid.
//!
//! Used to check the exchange-symmetry statements for identical fermions:
//! the antisymmetrization coefficient, the swap overlap, and preservation of
//! antisymmetry under free evolution. Units are hbar = m = 1, and the
//! coordinates are one-dimensional.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::format_f64;

/// Below this value of `2 - 2 Re<psi(x,y)|psi(y,x)>` the input is treated as
/// symmetric and antisymmetrization is refused.
pub const DEGENERATE_THRESHOLD: f64 = 1e-8;

/// Largest boundary amplitude (relative to the peak) accepted by
/// [`free_propagate`], whose spectral step assumes periodic wrap-around.
pub const BOUNDARY_LIMIT: f64 = 1e-10;

const NORMALIZED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidParameter(format!(
                "grid needs x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n < 16 {
            return Err(Error::InvalidParameter(format!("grid needs n >= 16 points, got {n}")));
        }
        Ok(Self { x_min, x_max, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i == self.n - 1 {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Angular wavenumbers in FFT order for a period of `n * h`.
    fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n;
        let dk = 2.0 * PI / (n as f64 * self.spacing());
        (0..n)
            .map(|m| {
                let m = if m < n.div_ceil(2) { m as f64 } else { m as f64 - n as f64 };
                m * dk
            })
            .collect()
    }
}

/// Complex amplitude sampled on `grid x grid`, row-major: `values[i * n + j]`
/// is `psi(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleAmplitude {
    grid: Grid1D,
    values: Vec<Complex64>,
    norm: f64,
}

impl TwoParticleAmplitude {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n * grid.n {
            return Err(Error::InvalidData(format!(
                "expected {} amplitude values, got {}",
                grid.n * grid.n,
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidData("amplitude contains non-finite values".into()));
        }
        let norm = quadrature_inner(&grid, &values, &values).re.sqrt();
        Ok(Self { grid, values, norm })
    }

    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(grid: Grid1D, f: F) -> Result<Self> {
        let xs = grid.points();
        let values = xs
            .iter()
            .flat_map(|&x| xs.iter().map(move |&y| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(grid, values)
    }

    /// `f(x) g(y)`.
    pub fn product<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(grid: Grid1D, f: F, g: G) -> Result<Self> {
        Self::from_fn(grid, |x, y| Complex64::new(f(x) * g(y), 0.0))
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `sqrt(sum |psi_ij|^2 h^2)`: the trapezoid rule for data that is
    /// periodic with period `n h`, which is what the spectral step assumes.
    /// This is the quantity the propagator conserves exactly.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.n + j]
    }

    pub fn normalized(&self) -> Result<Self> {
        if !(self.norm > 0.0) {
            return Err(Error::InvalidData("cannot normalize a zero amplitude".into()));
        }
        let k = 1.0 / self.norm;
        Self::new(self.grid, self.values.iter().map(|v| v * k).collect())
    }

    /// `psi(y, x)`.
    pub fn exchanged(&self) -> Self {
        let n = self.grid.n;
        let values = (0..n * n).map(|idx| self.values[(idx % n) * n + idx / n]).collect();
        Self {
            grid: self.grid,
            values,
            norm: self.norm,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn boundary_max(&self) -> f64 {
        let n = self.grid.n;
        (0..n)
            .flat_map(|k| [(0, k), (n - 1, k), (k, 0), (k, n - 1)])
            .map(|(i, j)| self.at(i, j).norm())
            .fold(0.0, f64::max)
    }

    /// Marginal mean and standard deviation of `|psi|^2` along `x`.
    pub fn marginal_x_moments(&self) -> (f64, f64) {
        let n = self.grid.n;
        let h2 = self.grid.spacing().powi(2);
        let xs = self.grid.points();
        let mut mass = 0.0;
        let mut first = 0.0;
        let mut second = 0.0;
        for i in 0..n {
            for j in 0..n {
                let w = h2 * self.at(i, j).norm_sqr();
                mass += w;
                first += w * xs[i];
                second += w * xs[i] * xs[i];
            }
        }
        let mean = first / mass;
        (mean, (second / mass - mean * mean).max(0.0).sqrt())
    }

    fn require_normalized(&self) -> Result<()> {
        if (self.norm - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be normalized, norm is {}",
                self.norm
            )));
        }
        Ok(())
    }
}

fn quadrature_inner(grid: &Grid1D, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let n = grid.n;
    let h2 = grid.spacing().powi(2);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += a[i * n + j].conj() * b[i * n + j];
        }
        acc += row;
    }
    acc * h2
}

/// `<psi(x,y)|psi(y,x)>` by the same quadrature as [`TwoParticleAmplitude::norm`].
pub fn swap_overlap(psi: &TwoParticleAmplitude) -> Result<Complex64> {
    psi.require_normalized()?;
    Ok(quadrature_inner(&psi.grid, &psi.values, &psi.exchanged().values))
}

/// Antisymmetrized amplitude with its coefficient
/// `N = 1 / sqrt(2 - 2 Re<psi(x,y)|psi(y,x)>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Antisymmetrized {
    pub amplitude: TwoParticleAmplitude,
    pub n0f: f64,
}

/// `N (psi(x,y) - psi(y,x))`, normalized by construction.
pub fn antisymmetrize(psi: &TwoParticleAmplitude) -> Result<Antisymmetrized> {
    let overlap = swap_overlap(psi)?;
    let denominator = 2.0 - 2.0 * overlap.re;
    if !(denominator > DEGENERATE_THRESHOLD) {
        return Err(Error::DegenerateAntisymmetrization {
            denominator,
            threshold: DEGENERATE_THRESHOLD,
        });
    }
    let n0f = 1.0 / denominator.sqrt();
    let swapped = psi.exchanged();
    let values = psi
        .values
        .iter()
        .zip(&swapped.values)
        .map(|(a, b)| (a - b) * n0f)
        .collect();
    Ok(Antisymmetrized {
        amplitude: TwoParticleAmplitude::new(psi.grid, values)?,
        n0f,
    })
}

/// Free evolution for time `t`: 2-D FFT, multiply by
/// `exp(-i (kx^2 + ky^2) t / 2)`, inverse FFT. The phase is symmetric in
/// `kx <-> ky`, so the step commutes with particle exchange.
pub fn free_propagate(psi: &TwoParticleAmplitude, t: f64) -> Result<TwoParticleAmplitude> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("propagation time must be finite, got {t}")));
    }
    let peak = psi.max_abs();
    let leakage = if peak > 0.0 { psi.boundary_max() / peak } else { 0.0 };
    if leakage >= BOUNDARY_LIMIT {
        return Err(Error::GridTooSmall {
            leakage,
            limit: BOUNDARY_LIMIT,
        });
    }
    if t == 0.0 {
        return Ok(psi.clone());
    }
    let n = psi.grid.n;
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut data = psi.values.clone();

    fft_2d(&mut data, n, |buf| forward.process(buf));
    let k = psi.grid.wavenumbers();
    let phases: Vec<Complex64> = k
        .iter()
        .map(|kx| Complex64::from_polar(1.0, -0.5 * kx * kx * t))
        .collect();
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] *= phases[i] * phases[j];
        }
    }
    fft_2d(&mut data, n, |buf| inverse.process(buf));
    let scale = 1.0 / (n * n) as f64;
    data.iter_mut().for_each(|v| *v *= scale);
    TwoParticleAmplitude::new(psi.grid, data)
}

fn fft_2d<F: Fn(&mut [Complex64])>(data: &mut [Complex64], n: usize, transform: F) {
    for row in data.chunks_exact_mut(n) {
        transform(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            column[i] = data[i * n + j];
        }
        transform(&mut column);
        for i in 0..n {
            data[i * n + j] = column[i];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryDefects {
    /// `max|psi(x,y) - psi(y,x)| / max|psi|`; zero for symmetric amplitudes.
    pub symmetric_defect: f64,
    /// `max|psi(x,y) + psi(y,x)| / max|psi|`; zero for antisymmetric amplitudes.
    pub antisymmetric_defect: f64,
}

pub fn symmetry_defects(psi: &TwoParticleAmplitude) -> SymmetryDefects {
    let n = psi.grid.n;
    let peak = psi.max_abs();
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    let mut sym: f64 = 0.0;
    let mut anti: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = psi.at(i, j);
            let b = psi.at(j, i);
            sym = sym.max((a - b).norm());
            anti = anti.max((a + b).norm());
        }
    }
    SymmetryDefects {
        symmetric_defect: sym * scale,
        antisymmetric_defect: anti * scale,
    }
}

/// Harmonic-oscillator eigenfunctions 0 and 1 (orthonormal on the line).
pub fn oscillator_state(level: u32, x: f64) -> f64 {
    let g = PI.powf(-0.25) * (-0.5 * x * x).exp();
    match level {
        0 => g,
        1 => 2f64.sqrt() * x * g,
        _ => {
            // Hermite recurrence for higher levels
            let (mut prev, mut cur) = (g, 2f64.sqrt() * x * g);
            for k in 1..level {
                let k = k as f64;
                let next = (2.0 / (k + 1.0)).sqrt() * x * cur - (k / (k + 1.0)).sqrt() * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Normalized Gaussian `exp(-(x - c)^2 / (2 sigma^2))`; under free evolution
/// `sigma` grows as `sigma sqrt(1 + t^2 / sigma^4)`.
pub fn gaussian(x: f64, center: f64, sigma: f64) -> f64 {
    (PI * sigma * sigma).powf(-0.25) * (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp()
}

/// Writes `x_index,y_index,re,im` rows.
pub fn write_amplitude_csv<W: Write>(psi: &TwoParticleAmplitude, out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    wtr.write_record(["x_index", "y_index", "re", "im"])?;
    let n = psi.grid.n;
    for i in 0..n {
        for j in 0..n {
            let v = psi.at(i, j);
            wtr.write_record([i.to_string(), j.to_string(), format_f64(v.re), format_f64(v.im)])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Grid metadata as the JSON header object that accompanies the CSV.
pub fn grid_header_json(grid: &Grid1D) -> Result<String> {
    Ok(serde_json::to_string_pretty(grid)?)
}

/// Reads rows written by [`write_amplitude_csv`]; missing entries are zero.
pub fn read_amplitude_csv<R: Read>(input: R, grid: Grid1D) -> Result<TwoParticleAmplitude> {
    let grid = Grid1D::new(grid.x_min, grid.x_max, grid.n)?;
    let n = grid.n;
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    let mut rdr = csv::Reader::from_reader(input);
    for row in rdr.records() {
        let row = row?;
        let field = |k: usize| {
            row.get(k)
                .ok_or_else(|| Error::InvalidData("short amplitude row".into()))
        };
        let idx = |k: usize| -> Result<usize> {
            let i: usize = field(k)?
                .parse()
                .map_err(|_| Error::InvalidData("bad grid index".into()))?;
            if i >= n {
                return Err(Error::InvalidData(format!("grid index {i} out of range")));
            }
            Ok(i)
        };
        let num = |k: usize| -> Result<f64> {
            field(k)?
                .parse()
                .map_err(|_| Error::InvalidData("bad amplitude value".into()))
        };
        values[idx(0)? * n + idx(1)?] = Complex64::new(num(2)?, num(3)?);
    }
    TwoParticleAmplitude::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(-12.0, 12.0, n).unwrap()
    }

    fn slater(n: usize) -> TwoParticleAmplitude {
        TwoParticleAmplitude::from_fn(grid(n), |x, y| {
            let v = oscillator_state(0, x) * oscillator_state(1, y)
                - oscillator_state(1, x) * oscillator_state(0, y);
            Complex64::new(v, 0.0)
        })
        .unwrap()
        .normalized()
        .unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(0.0, 1.0, 15).is_err());
        assert!(Grid1D::new(1.0, 1.0, 32).is_err());
        let g = grid(256);
        assert_eq!(g.point(255), 12.0);
        assert_eq!(g.wavenumbers()[128], -g.wavenumbers()[128].abs());
    }

    #[test]
    fn oscillator_states_are_orthonormal() {
        let g = grid(256);
        let h = g.spacing();
        let xs = g.points();
        for a in 0..4 {
            for b in 0..4 {
                let s: f64 = xs.iter().map(|&x| oscillator_state(a, x) * oscillator_state(b, x)).sum::<f64>() * h;
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((s - expected).abs() < 1e-12, "{a} {b} {s}");
            }
        }
    }

    #[test]
    fn overlap_examples() {
        let anti = slater(256);
        let o = swap_overlap(&anti).unwrap();
        assert!((o.re + 1.0).abs() < 1e-10 && o.im.abs() < 1e-12);

        let sym = TwoParticleAmplitude::product(grid(256), |x| oscillator_state(0, x), |y| oscillator_state(0, y))
            .unwrap()
            .normalized()
            .unwrap();
        assert!((swap_overlap(&sym).unwrap().re - 1.0).abs() < 1e-10);

        let prod = TwoParticleAmplitude::product(grid(256), |x| oscillator_state(0, x), |y| oscillator_state(1, y))
            .unwrap()
            .normalized()
            .unwrap();
        assert!(swap_overlap(&prod).unwrap().norm() < 1e-10);
    }

    #[test]
    fn overlap_requires_normalized_input() {
        let raw = TwoParticleAmplitude::product(grid(32), |x| 3.0 * gaussian(x, 0.0, 1.0), |y| gaussian(y, 0.0, 1.0))
            .unwrap();
        assert!(swap_overlap(&raw).is_err());
    }

    #[test]
    fn antisymmetrize_examples() {
        let anti = slater(256);
        let out = antisymmetrize(&anti).unwrap();
        assert!((out.n0f - 0.5).abs() < 1e-10);
        let diff = out
            .amplitude
            .values()
            .iter()
            .zip(anti.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);

        let sym = TwoParticleAmplitude::product(grid(128), |x| oscillator_state(0, x), |y| oscillator_state(0, y))
            .unwrap()
            .normalized()
            .unwrap();
        assert!(matches!(
            antisymmetrize(&sym),
            Err(Error::DegenerateAntisymmetrization { .. })
        ));

        let prod = TwoParticleAmplitude::product(grid(256), |x| oscillator_state(0, x), |y| oscillator_state(1, y))
            .unwrap()
            .normalized()
            .unwrap();
        let out = antisymmetrize(&prod).unwrap();
        assert!((out.n0f - 0.5f64.sqrt()).abs() < 1e-10);
        assert!((out.amplitude.norm() - 1.0).abs() < 1e-12);
        let reference = slater(256);
        // normalized Slater combination, up to the sign convention
        let diff = out
            .amplitude
            .values()
            .iter()
            .zip(reference.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn propagation_identity_and_leakage() {
        let anti = slater(64);
        assert_eq!(free_propagate(&anti, 0.0).unwrap(), anti);
        let wide = TwoParticleAmplitude::product(grid(64), |x| gaussian(x, 0.0, 6.0), |y| gaussian(y, 0.0, 6.0))
            .unwrap()
            .normalized()
            .unwrap();
        assert!(matches!(free_propagate(&wide, 1.0), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn propagation_preserves_antisymmetry_and_norm() {
        let anti = slater(256);
        let later = free_propagate(&anti, 1.0).unwrap();
        let d = symmetry_defects(&later);
        assert!(d.antisymmetric_defect < 1e-10, "{d:?}");
        assert!((later.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_spreading() {
        let sigma = 1.0;
        let psi = TwoParticleAmplitude::product(grid(256), |x| gaussian(x, 0.0, sigma), |y| gaussian(y, 0.0, 0.8))
            .unwrap()
            .normalized()
            .unwrap();
        for t in [0.5, 1.0, 2.0] {
            let later = free_propagate(&psi, t).unwrap();
            let (mean, std) = later.marginal_x_moments();
            let width = std * 2f64.sqrt();
            let expected = sigma * (1.0 + t * t / sigma.powi(4)).sqrt();
            assert!(mean.abs() < 1e-10);
            assert!((width - expected).abs() < 1e-8, "t={t} {width} {expected}");
        }
    }

    #[test]
    fn defects_examples() {
        let anti = slater(64);
        let d = symmetry_defects(&anti);
        assert!(d.antisymmetric_defect < 1e-12);
        assert!((d.symmetric_defect - 2.0).abs() < 1e-12);
        let sym = TwoParticleAmplitude::product(grid(64), |x| gaussian(x, 0.0, 1.0), |y| gaussian(y, 0.0, 1.0)).unwrap();
        assert!(symmetry_defects(&sym).symmetric_defect < 1e-12);
        let generic = TwoParticleAmplitude::product(grid(64), |x| gaussian(x, 0.5, 1.0), |y| gaussian(y, -1.0, 2.0)).unwrap();
        let d = symmetry_defects(&generic);
        assert!(d.symmetric_defect > 1e-3 && d.antisymmetric_defect > 1e-3);
    }

    #[test]
    fn amplitude_csv_round_trip() {
        let anti = slater(16);
        let mut buf = Vec::new();
        write_amplitude_csv(&anti, &mut buf).unwrap();
        let header = grid_header_json(anti.grid()).unwrap();
        let g: Grid1D = serde_json::from_str(&header).unwrap();
        let back = read_amplitude_csv(buf.as_slice(), g).unwrap();
        assert_eq!(back.values(), anti.values());
    }
}
