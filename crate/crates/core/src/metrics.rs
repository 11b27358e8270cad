//! Figures of merit computed from detected intensities: extinction ratio,
//! splitting ratio, polarization dependence, OAM extinction ratio and
//! interference visibility.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Denominator floor for the dB ratios. Ideal simulations produce exact
/// zeros where an experiment sees a noise floor.
pub const EPS_FLOOR: f64 = 1e-12;

/// `10·log10(1 / EPS_FLOOR)`: the value reported when the floor is hit with
/// a unit numerator.
pub const GUARD_CEILING_DB: f64 = 120.0;

/// Measured tuning extinction ratios of the real device (mean, min, max, dB).
/// Hardware values, kept for comparison in reports only.
pub const MEASURED_TUNING_ER_DB: (f64, f64, f64) = (34.0, 30.7, 40.1);

/// Measured polarization dependence per theoretical split ratio for the two
/// input lasers: `(sr_th, pd_1, pd_2)` as fractions.
pub const MEASURED_PD: [(f64, f64, f64); 5] = [
    (0.5, 0.0173, 0.0200),
    (0.4, 0.0200, 0.0242),
    (0.3, 0.0263, 0.0288),
    (0.2, 0.0368, 0.0369),
    (0.1, 0.0575, 0.0535),
];

/// Lower bound on the measured OAM extinction ratio (dB).
pub const MEASURED_ER_OAM_FLOOR_DB: f64 = 20.0;

/// Lower bound on the measured mean Sagnac visibility.
pub const MEASURED_VISIBILITY_FLOOR: f64 = 0.99;

/// A ratio in dB, flagged when the denominator was clamped to [`EPS_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbValue {
    pub db: f64,
    pub guard_hit: bool,
}

impl std::fmt::Display for DbValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.guard_hit {
            write!(f, "> {:.1} dB (guard)", self.db)
        } else {
            write!(f, "{:.3} dB", self.db)
        }
    }
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        Err(Error::Domain(format!(
            "{name} must be a nonnegative intensity, got {x}"
        )))
    } else {
        Ok(())
    }
}

fn ratio_db(num: f64, den: f64) -> DbValue {
    let guard_hit = den < EPS_FLOOR;
    DbValue {
        db: 10.0 * (num / den.max(EPS_FLOOR)).log10(),
        guard_hit,
    }
}

pub fn extinction_ratio(i_max: f64, i_min: f64) -> Result<DbValue> {
    check_nonneg("i_max", i_max)?;
    check_nonneg("i_min", i_min)?;
    if i_max < i_min {
        return Err(Error::Domain(format!("i_max {i_max} < i_min {i_min}")));
    }
    Ok(ratio_db(i_max, i_min))
}

/// `R / (R + T)`.
pub fn splitting_ratio(reflected: f64, transmitted: f64) -> Result<f64> {
    check_nonneg("reflected", reflected)?;
    check_nonneg("transmitted", transmitted)?;
    let total = reflected + transmitted;
    if total <= 0.0 {
        return Err(Error::Domain(
            "splitting ratio of zero total intensity".into(),
        ));
    }
    Ok(reflected / total)
}

/// Worst-case relative deviation of the sampled split ratios from `sr_th`.
pub fn polarization_dependence(sr_samples: &[f64], sr_th: f64) -> Result<f64> {
    if sr_samples.is_empty() {
        return Err(Error::Domain(
            "polarization dependence of an empty sweep".into(),
        ));
    }
    if !(sr_th > 0.0 && sr_th <= 0.5) {
        return Err(Error::Domain(format!(
            "theoretical split ratio {sr_th} outside (0, 0.5]"
        )));
    }
    Ok(sr_samples
        .iter()
        .map(|sr| (sr - sr_th).abs() / sr_th)
        .fold(0.0, f64::max))
}

/// OAM extinction ratio of row `i`: the identical-order intensity against the
/// summed intensity of every other order.
pub fn er_oam(crosstalk: &DMatrix<f64>, i: usize) -> Result<DbValue> {
    if i >= crosstalk.nrows() {
        return Err(Error::Index(format!(
            "row {i} of a {}-row matrix",
            crosstalk.nrows()
        )));
    }
    let row = crosstalk.row(i);
    for &x in row.iter() {
        check_nonneg("crosstalk entry", x)?;
    }
    let others: f64 = row
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, x)| x)
        .sum();
    Ok(ratio_db(row[i], others))
}

/// `(I_max − I_min)/(I_max + I_min)`, 0 when both vanish.
pub fn visibility(i_max: f64, i_min: f64) -> Result<f64> {
    check_nonneg("i_max", i_max)?;
    check_nonneg("i_min", i_min)?;
    if i_max < i_min {
        return Err(Error::Domain(format!("i_max {i_max} < i_min {i_min}")));
    }
    let total = i_max + i_min;
    Ok(if total == 0.0 {
        0.0
    } else {
        (i_max - i_min) / total
    })
}

/// Min and max of a nonempty sample.
pub fn extrema(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    values.into_iter().fold(None, |acc, x| match acc {
        None => Some((x, x)),
        Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
    })
}

/// Headline numbers of one scenario run. Fields not produced by the scenario
/// are `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub er_db: Option<f64>,
    pub sr: Option<f64>,
    pub pd: Option<f64>,
    pub er_oam_db: Option<f64>,
    pub visibility: Option<f64>,
    pub guard_hit: bool,
    pub provenance: String,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "er_db,sr,pd,er_oam_db,visibility,guard_hit,provenance";

    pub fn validate(&self) -> Result<()> {
        if let Some(sr) = self.sr {
            if !(0.0..=1.0).contains(&sr) {
                return Err(Error::Domain(format!("sr {sr} outside [0, 1]")));
            }
        }
        if let Some(v) = self.visibility {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("visibility {v} outside [0, 1]")));
            }
        }
        if let Some(pd) = self.pd {
            if pd.is_nan() || pd < 0.0 {
                return Err(Error::Domain(format!("pd {pd} negative")));
            }
        }
        Ok(())
    }

    /// One CSV data row matching [`Self::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let f = |x: Option<f64>| x.map(format_number).unwrap_or_default();
        let provenance = self.provenance.replace('"', "'");
        format!(
            "{},{},{},{},{},{},\"{provenance}\"",
            f(self.er_db),
            f(self.sr),
            f(self.pd),
            f(self.er_oam_db),
            f(self.visibility),
            self.guard_hit
        )
    }

    /// `key = value` block, one line per populated field.
    pub fn summary_block(&self) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("er_db", self.er_db),
            ("sr", self.sr),
            ("pd", self.pd),
            ("er_oam_db", self.er_oam_db),
            ("visibility", self.visibility),
        ] {
            if let Some(v) = v {
                let _ = writeln!(out, "{k} = {}", format_number(v));
            }
        }
        let _ = writeln!(out, "guard_hit = {}", self.guard_hit);
        let _ = writeln!(out, "provenance = {}", self.provenance);
        out
    }
}

/// Fixed, locale-free number format: 12 significant digits in scientific
/// notation, with negative zero printed as zero.
pub fn format_number(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}
