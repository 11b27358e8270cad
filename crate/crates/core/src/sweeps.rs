//! Grid and Monte-Carlo drivers for the four characterization protocols:
//! split-ratio tuning, polarization dependence, OAM tomography and Sagnac
//! visibility.
//!
//! Grid points are independent; they are evaluated in parallel with rayon and
//! collected in grid order, so results do not depend on the thread count.
//! Monte-Carlo repeats draw one imperfection set each from a ChaCha stream
//! keyed by `(seed, repeat)`, held fixed for the whole sweep of that repeat.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::circuits::{
    build_sagnac, build_tbs, detect, reflected_port, transmitted_port, SagnacConfig, TbsConfig,
    TomographySetup,
};
use crate::elements::{prepare_linear_state, ImperfectionParams};
use crate::error::{Error, Result};
use crate::metrics::{self, format_number, DbValue};
use crate::mode_space::{FieldState, ModeIndex, ModeSpace, Polarization};

/// Inclusive arithmetic grid `start, start + step, …` up to `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let g = Grid { start, stop, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Domain(format!(
                "grid step must be > 0, got {}",
                self.step
            )));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.stop >= self.start) {
            return Err(Error::Domain(format!(
                "bad grid bounds [{}, {}]",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    /// Full 0°–180° sweep at 0.1° (1801 points).
    pub fn half_turn() -> Self {
        Grid {
            start: 0.0,
            stop: 180.0,
            step: 0.1,
        }
    }

    /// 0°–90° at 0.1° (901 points).
    pub fn quarter_turn() -> Self {
        Grid {
            start: 0.0,
            stop: 90.0,
            step: 0.1,
        }
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Quantity varied along a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepVariable {
    Hwp2Theta,
    Hwp0Theta,
    PreparedL,
    Imperfection(String),
}

/// Gaussian spread around a nominal imperfection set. Zero sigma keeps the
/// field fixed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImperfectionDistribution {
    pub nominal: ImperfectionParams,
    pub sigma_hwp_angle_deg: f64,
    pub sigma_retardance_rad: f64,
    pub sigma_extinction_db: f64,
    pub sigma_coating_phase_rad: f64,
    /// Spread of each port transmittance listed in `nominal.port_loss`.
    pub sigma_transmittance: f64,
}

impl ImperfectionDistribution {
    pub fn fixed(nominal: ImperfectionParams) -> Self {
        ImperfectionDistribution {
            nominal,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.nominal.validate()?;
        for s in [
            self.sigma_hwp_angle_deg,
            self.sigma_retardance_rad,
            self.sigma_extinction_db,
            self.sigma_coating_phase_rad,
            self.sigma_transmittance,
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Domain(format!(
                    "sigma must be finite and ≥ 0, got {s}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_fixed(&self) -> bool {
        [
            self.sigma_hwp_angle_deg,
            self.sigma_retardance_rad,
            self.sigma_extinction_db,
            self.sigma_coating_phase_rad,
            self.sigma_transmittance,
        ]
        .iter()
        .all(|&s| s == 0.0)
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> ImperfectionParams {
        let mut draw = |mean: f64, sigma: f64| {
            if sigma == 0.0 {
                mean
            } else {
                Normal::new(mean, sigma).expect("finite sigma").sample(rng)
            }
        };
        let mut p = self.nominal.clone();
        p.hwp_angle_error_deg = draw(p.hwp_angle_error_deg, self.sigma_hwp_angle_deg);
        p.hwp_retardance_error_rad = draw(p.hwp_retardance_error_rad, self.sigma_retardance_rad);
        if p.pbs_extinction_db.is_finite() {
            p.pbs_extinction_db = draw(p.pbs_extinction_db, self.sigma_extinction_db).max(0.0);
        }
        p.coating_phase_rad = draw(p.coating_phase_rad, self.sigma_coating_phase_rad);
        for t in p.port_loss.values_mut() {
            *t = draw(*t, self.sigma_transmittance).clamp(0.0, 1.0);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Grid,
    pub repeats: usize,
    pub imp: ImperfectionDistribution,
    pub seed: u64,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, grid: Grid) -> Self {
        SweepSpec {
            variable,
            grid,
            repeats: 1,
            imp: ImperfectionDistribution::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.repeats == 0 {
            return Err(Error::Domain("repeats must be ≥ 1".into()));
        }
        self.imp.validate()
    }

    /// Imperfection set of repeat `r`.
    pub fn draw(&self, r: usize) -> ImperfectionParams {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(r as u64);
        self.imp.sample(&mut rng)
    }
}

/// Runs `f` once per repeat with that repeat's imperfections, in parallel,
/// returning results in repeat order.
pub fn monte_carlo<T, F>(spec: &SweepSpec, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &ImperfectionParams) -> Result<T> + Sync,
{
    spec.validate()?;
    (0..spec.repeats)
        .into_par_iter()
        .map(|r| f(r, &spec.draw(r)))
        .collect()
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// CSV text with a `#` comment preamble, fixed 12-significant-digit numbers.
pub fn csv_text(
    preamble: &str,
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> String {
    let mut out = String::new();
    for line in preamble.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{}", columns.join(","));
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(format_number).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

// ---------------------------------------------------------------- tuning

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningRow {
    pub theta2_deg: f64,
    pub i5: f64,
    pub i6: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningTable {
    pub rows: Vec<TuningRow>,
}

impl TuningTable {
    /// Tuning extinction ratio `max/min` of ports 5 and 6 over the sweep.
    pub fn extinction_ratios(&self) -> Result<(DbValue, DbValue)> {
        let er = |sel: fn(&TuningRow) -> f64| -> Result<DbValue> {
            let (lo, hi) = metrics::extrema(self.rows.iter().map(sel))
                .ok_or_else(|| Error::Domain("empty tuning table".into()))?;
            metrics::extinction_ratio(hi, lo)
        };
        Ok((er(|r| r.i5)?, er(|r| r.i6)?))
    }

    /// Angles where the two port curves cross, linearly interpolated.
    pub fn crossings(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.rows.windows(2) {
            let (d0, d1) = (w[0].i5 - w[0].i6, w[1].i5 - w[1].i6);
            if d0 == 0.0 {
                out.push(w[0].theta2_deg);
            } else if d0 * d1 < 0.0 {
                let t = d0 / (d0 - d1);
                out.push(w[0].theta2_deg + t * (w[1].theta2_deg - w[0].theta2_deg));
            }
        }
        if let Some(last) = self.rows.last() {
            if last.i5 == last.i6 {
                out.push(last.theta2_deg);
            }
        }
        out
    }

    pub fn to_csv(&self, preamble: &str) -> String {
        csv_text(
            preamble,
            &["theta2", "i5", "i6"],
            self.rows.iter().map(|r| vec![r.theta2_deg, r.i5, r.i6]),
        )
    }
}

/// Port-5/6 intensities of every input state at every `θ₂` of `grid`:
/// `result[grid index][state index] = [I₅, I₆]`.
pub fn tuning_intensities(
    space: &Arc<ModeSpace>,
    grid: &Grid,
    cfg: &TbsConfig,
    inputs: &[FieldState],
) -> Result<Vec<Vec<[f64; 2]>>> {
    grid.validate()?;
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let cfg = TbsConfig {
                theta2_deg: grid.point(i),
                ..cfg.clone()
            };
            let op = build_tbs(&cfg, space)?;
            inputs
                .iter()
                .map(|s| {
                    let out = op.apply(s)?;
                    Ok([out.port_intensity(5)?, out.port_intensity(6)?])
                })
                .collect()
        })
        .collect()
}

/// Port intensities against `θ₂` for a pure H or V beam entering `input_port`.
pub fn sweep_tuning(
    space: &Arc<ModeSpace>,
    grid: &Grid,
    cfg: &TbsConfig,
    pol: Polarization,
    input_port: u32,
) -> Result<TuningTable> {
    transmitted_port(input_port)?;
    let input = FieldState::basis(space, ModeIndex::new(input_port, pol, 0))?;
    let data = tuning_intensities(space, grid, cfg, std::slice::from_ref(&input))?;
    Ok(TuningTable {
        rows: data
            .iter()
            .enumerate()
            .map(|(i, v)| TuningRow {
                theta2_deg: grid.point(i),
                i5: v[0][0],
                i6: v[0][1],
            })
            .collect(),
    })
}

/// Least-squares fit of `A·cos²(2θ + φ)` to `(θ°, y)` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cos2Fit {
    pub amplitude: f64,
    pub phase_rad: f64,
    /// Largest absolute residual of the fitted `A·cos²(2θ + φ)`.
    pub max_residual: f64,
}

pub fn fit_cos2(thetas_deg: &[f64], ys: &[f64]) -> Result<Cos2Fit> {
    if thetas_deg.len() != ys.len() || ys.len() < 3 {
        return Err(Error::Domain("fit needs ≥ 3 paired samples".into()));
    }
    // A cos²(2θ+φ) = A/2 + (A/2)cos2φ·cos4θ − (A/2)sin2φ·sin4θ
    let basis = |t: f64| {
        let x = 4.0 * t.to_radians();
        Vector3::new(1.0, x.cos(), x.sin())
    };
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for (&t, &y) in thetas_deg.iter().zip(ys) {
        let b = basis(t);
        ata += b * b.transpose();
        aty += b * y;
    }
    let c = ata
        .lu()
        .solve(&aty)
        .ok_or_else(|| Error::Domain("degenerate fit grid".into()))?;
    let half = (c[1] * c[1] + c[2] * c[2]).sqrt();
    let amplitude = c[0] + half;
    let phase_rad = 0.5 * (-c[2]).atan2(c[1]);
    let max_residual = thetas_deg
        .iter()
        .zip(ys)
        .map(|(&t, &y)| (amplitude * (2.0 * t.to_radians() + phase_rad).cos().powi(2) - y).abs())
        .fold(0.0, f64::max);
    Ok(Cos2Fit {
        amplitude,
        phase_rad,
        max_residual,
    })
}

// ---------------------------------------------------------- polarization

/// `θ₂` (degrees) giving split ratio `sr_th` into the weak arm.
pub fn theta2_for_split_ratio(sr_th: f64) -> Result<f64> {
    if !(sr_th > 0.0 && sr_th <= 0.5) {
        return Err(Error::Domain(format!(
            "split ratio {sr_th} outside (0, 0.5]"
        )));
    }
    Ok(0.5 * sr_th.sqrt().asin().to_degrees())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationTable {
    pub sr_th: f64,
    pub theta2_deg: f64,
    /// `(θ₀, SR)` per grid point.
    pub rows: Vec<(f64, f64)>,
    pub pd: f64,
}

impl PolarizationTable {
    pub fn to_csv(&self, preamble: &str) -> String {
        csv_text(
            preamble,
            &["theta0", "sr"],
            self.rows.iter().map(|&(t, s)| vec![t, s]),
        )
    }
}

/// Split ratio against the input linear polarization (set by `θ₀`) with the
/// splitter tuned for `sr_th`.
pub fn sweep_polarization(
    space: &Arc<ModeSpace>,
    grid: &Grid,
    cfg: &TbsConfig,
    sr_th: f64,
    input_port: u32,
) -> Result<PolarizationTable> {
    grid.validate()?;
    let theta2_deg = theta2_for_split_ratio(sr_th)?;
    let op = build_tbs(
        &TbsConfig {
            theta2_deg,
            ..cfg.clone()
        },
        space,
    )?;
    let (refl, trans) = (reflected_port(input_port)?, transmitted_port(input_port)?);
    let rows = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let t0 = grid.point(i);
            let out = op.apply(&prepare_linear_state(space, t0, input_port, 0)?)?;
            Ok((
                t0,
                metrics::splitting_ratio(out.port_intensity(refl)?, out.port_intensity(trans)?)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let srs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(PolarizationTable {
        sr_th,
        theta2_deg,
        pd: metrics::polarization_dependence(&srs, sr_th)?,
        rows,
    })
}

/// Monte-Carlo spread of the polarization dependence.
#[derive(Debug, Clone, PartialEq)]
pub struct PdStatistics {
    pub sr_th: f64,
    pub per_repeat: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

pub fn polarization_monte_carlo(
    space: &Arc<ModeSpace>,
    spec: &SweepSpec,
    cfg: &TbsConfig,
    sr_th: f64,
    input_port: u32,
) -> Result<PdStatistics> {
    let per_repeat = monte_carlo(spec, |_, imp| {
        let cfg = TbsConfig {
            imp: imp.clone(),
            ..cfg.clone()
        };
        Ok(sweep_polarization(space, &spec.grid, &cfg, sr_th, input_port)?.pd)
    })?;
    let (mean, std) = mean_std(&per_repeat);
    Ok(PdStatistics {
        sr_th,
        per_repeat,
        mean,
        std,
    })
}

// ------------------------------------------------------------ tomography

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TomographyDevice {
    None,
    Pbs,
    Tbs,
}

impl std::str::FromStr for TomographyDevice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(TomographyDevice::None),
            "pbs" => Ok(TomographyDevice::Pbs),
            "tbs" => Ok(TomographyDevice::Tbs),
            other => Err(Error::Domain(format!(
                "unknown tomography device `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for TomographyDevice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TomographyDevice::None => "none",
            TomographyDevice::Pbs => "pbs",
            TomographyDevice::Tbs => "tbs",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    pub charges: Vec<i32>,
    /// Rows: prepared charge; columns: measured charge.
    pub matrix: DMatrix<f64>,
    pub er_oam: Vec<DbValue>,
    /// Largest intensity the device leaves on the `|l| = L` modes for a
    /// prepared charge strictly inside the truncation.
    pub boundary_leakage: f64,
}

impl TomographyResult {
    pub fn to_csv(&self, preamble: &str) -> String {
        let names: Vec<String> = std::iter::once("l_prepared".to_string())
            .chain(self.charges.iter().map(|l| format!("l{l}")))
            .collect();
        let cols: Vec<&str> = names.iter().map(String::as_str).collect();
        csv_text(
            preamble,
            &cols,
            self.charges.iter().enumerate().map(|(i, &l)| {
                std::iter::once(l as f64)
                    .chain(self.matrix.row(i).iter().copied())
                    .collect()
            }),
        )
    }
}

/// Prepares each charge `-L..=L`, measures it against every hologram order
/// and evaluates the per-row OAM extinction ratio.
pub fn sweep_tomography(
    space: &Arc<ModeSpace>,
    device: TomographyDevice,
    tbs: &TbsConfig,
    crosstalk_db: f64,
) -> Result<TomographyResult> {
    let setup = match device {
        TomographyDevice::None => TomographySetup::baseline(),
        TomographyDevice::Pbs => TomographySetup::pbs(space, &tbs.imp)?,
        TomographyDevice::Tbs => TomographySetup::tbs(space, tbs)?,
    };
    let charges: Vec<i32> = space.charges().collect();
    let bound = space.oam_range() as i32;
    let rows = charges
        .par_iter()
        .map(|&lp| {
            let field = setup.device_output(space, lp)?;
            let row = charges
                .iter()
                .map(|&lm| detect(space, &setup, &field, lm, crosstalk_db))
                .collect::<Result<Vec<f64>>>()?;
            let mut edge = 0.0;
            if lp.abs() < bound {
                for port in space.ports() {
                    edge += field.mode_intensity(*port, bound)?
                        + field.mode_intensity(*port, -bound)?;
                }
            }
            Ok((row, edge))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = charges.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| rows[i].0[j]);
    let er_oam = (0..n)
        .map(|i| metrics::er_oam(&matrix, i))
        .collect::<Result<Vec<_>>>()?;
    let boundary_leakage = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(TomographyResult {
        charges,
        matrix,
        er_oam,
        boundary_leakage,
    })
}

// ---------------------------------------------------------------- sagnac

/// Port whose fringe is recorded for light injected at `input_port`: the
/// other splitter input.
pub fn sagnac_detector_port(input_port: u32) -> Result<u32> {
    match input_port {
        1 => Ok(2),
        2 => Ok(1),
        p => Err(Error::Routing(format!("port {p} is not a splitter input"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SagnacRow {
    pub theta0_deg: f64,
    pub v_port1: f64,
    pub v_port2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SagnacTable {
    pub rows: Vec<SagnacRow>,
}

impl SagnacTable {
    pub fn to_csv(&self, preamble: &str) -> String {
        csv_text(
            preamble,
            &["theta0", "v_port1", "v_port2"],
            self.rows
                .iter()
                .map(|r| vec![r.theta0_deg, r.v_port1, r.v_port2]),
        )
    }

    pub fn mean_visibility(&self) -> (f64, f64) {
        let n = self.rows.len() as f64;
        (
            self.rows.iter().map(|r| r.v_port1).sum::<f64>() / n,
            self.rows.iter().map(|r| r.v_port2).sum::<f64>() / n,
        )
    }
}

/// For each input polarization `θ₀`, sweeps `θ₂` over `theta2_grid` and takes
/// the visibility of the detected intensity extrema, for both input ports.
pub fn sweep_sagnac(
    space: &Arc<ModeSpace>,
    theta0_grid: &Grid,
    theta2_grid: &Grid,
    cfg: &SagnacConfig,
) -> Result<SagnacTable> {
    theta0_grid.validate()?;
    theta2_grid.validate()?;
    // Per θ₂: detected-port amplitudes of the H and V columns of each input.
    type Columns = [[Vec<Complex64>; 2]; 2];
    let columns: Vec<Columns> = (0..theta2_grid.len())
        .into_par_iter()
        .map(|i| {
            let cfg = SagnacConfig {
                tbs: TbsConfig {
                    theta2_deg: theta2_grid.point(i),
                    ..cfg.tbs.clone()
                },
                ..cfg.clone()
            };
            let op = build_sagnac(&cfg, space)?;
            let col = |port: u32, pol: Polarization| -> Result<Vec<Complex64>> {
                let c = space.flatten(ModeIndex::new(port, pol, 0))?;
                let rows = space.port_indices(sagnac_detector_port(port)?)?;
                Ok(rows.map(|r| op.matrix()[(r, c)]).collect())
            };
            Ok([
                [col(1, Polarization::H)?, col(1, Polarization::V)?],
                [col(2, Polarization::H)?, col(2, Polarization::V)?],
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = (0..theta0_grid.len())
        .into_par_iter()
        .map(|i| {
            let t0 = theta0_grid.point(i);
            let (s, c) = (2.0 * t0.to_radians()).sin_cos();
            let mut v = [0.0; 2];
            for (k, vk) in v.iter_mut().enumerate() {
                let intensities = columns.iter().map(|cols| {
                    cols[k][0]
                        .iter()
                        .zip(&cols[k][1])
                        .map(|(h, vv)| (h * c + vv * s).norm_sqr())
                        .sum::<f64>()
                });
                let (lo, hi) = metrics::extrema(intensities).expect("nonempty θ₂ grid");
                *vk = metrics::visibility(hi, lo)?;
            }
            Ok(SagnacRow {
                theta0_deg: t0,
                v_port1: v[0],
                v_port2: v[1],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SagnacTable { rows })
}

/// Reference imperfection set used by the polarization and Sagnac studies:
/// 25 dB splitter extinction and a 2 % loss on the port-6 arm.
pub fn reference_imperfections() -> ImperfectionParams {
    let mut imp = ImperfectionParams {
        pbs_extinction_db: 25.0,
        ..Default::default()
    };
    for pol in Polarization::BOTH {
        imp.port_loss.insert((6, pol), 0.98);
    }
    imp
}

/// Total output intensity never exceeds the input for any tuning point.
pub fn output_never_exceeds_input(
    space: &Arc<ModeSpace>,
    grid: &Grid,
    cfg: &TbsConfig,
) -> Result<f64> {
    let states = [
        FieldState::basis(space, ModeIndex::new(1, Polarization::H, 0))?,
        FieldState::basis(space, ModeIndex::new(2, Polarization::V, 0))?,
    ];
    let data = tuning_intensities(space, grid, cfg, &states)?;
    Ok(data
        .iter()
        .flat_map(|row| row.iter().map(|[a, b]| a + b - 1.0))
        .fold(f64::NEG_INFINITY, f64::max))
}
