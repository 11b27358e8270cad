//! Scenario execution and artifact writing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use tbs_core::circuits::{
    build_sagnac, build_tbs, closed_form_tbs, reflected_port, transmitted_port,
};
use tbs_core::metrics::{
    self, format_number, MEASURED_PD, MEASURED_TUNING_ER_DB, MEASURED_VISIBILITY_FLOOR,
};
use tbs_core::mode_space::text;
use tbs_core::sweeps::{
    fit_cos2, polarization_monte_carlo, sweep_polarization, sweep_sagnac, sweep_tomography,
    sweep_tuning, theta2_for_split_ratio, SweepVariable,
};
use tbs_core::{FieldState, MetricsReport, ModeIndex, ModeSpace, ScatteringOperator};

use crate::config::{DumpTarget, Scenario, ScenarioConfig};

/// Split ratios of the polarization-dependence table.
pub const PD_LEVELS: [f64; 5] = [0.5, 0.4, 0.3, 0.2, 0.1];

/// What a scenario produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// Scenario-specific `key = value` lines followed by the metrics block.
    pub summary: String,
    pub headline: String,
    pub warnings: Vec<String>,
    pub report: MetricsReport,
}

struct Artifacts<'a> {
    dir: &'a Path,
    header: String,
    files: Vec<PathBuf>,
}

impl Artifacts<'_> {
    /// Writes `body` under a comment header carrying the resolved config.
    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = String::new();
        for line in self.header.lines() {
            let _ = writeln!(text, "# {line}");
        }
        text.push_str(body);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path);
        Ok(())
    }
}

#[derive(Default)]
struct Summary {
    lines: String,
    warnings: Vec<String>,
}

impl Summary {
    fn put(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.lines, "{key} = {value}");
    }
}

/// Runs the configured scenario and writes its artifacts into `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut art = Artifacts {
        dir: out_dir,
        header: cfg.header(),
        files: Vec::new(),
    };
    let space = Arc::new(cfg.space());
    let mut sum = Summary::default();
    sum.put("scenario", cfg.scenario);
    let (report, headline) = match cfg.scenario {
        Scenario::Tuning => tuning(cfg, &space, &mut art, &mut sum)?,
        Scenario::Polarization => polarization(cfg, &space, &mut art, &mut sum)?,
        Scenario::Tomography => tomography(cfg, &space, &mut art, &mut sum)?,
        Scenario::Sagnac => sagnac(cfg, &space, &mut art, &mut sum)?,
        Scenario::Dump => dump(cfg, &space, &mut art, &mut sum)?,
    };
    report.validate()?;
    sum.put("headline", &headline);
    let summary = format!(
        "[summary]\n{}\n[metrics]\n{}",
        sum.lines,
        report.summary_block()
    );
    art.write("summary.txt", &summary)?;
    art.write(
        "metrics.csv",
        &format!("{}\n{}\n", MetricsReport::CSV_HEADER, report.csv_row()),
    )?;
    Ok(RunOutcome {
        files: art.files,
        summary,
        headline,
        warnings: sum.warnings,
        report,
    })
}

fn tuning(
    cfg: &ScenarioConfig,
    space: &Arc<ModeSpace>,
    art: &mut Artifacts,
    sum: &mut Summary,
) -> Result<(MetricsReport, String)> {
    let port = cfg.sweep.input_port;
    let (t_port, r_port) = (transmitted_port(port)?, reflected_port(port)?);
    let table = sweep_tuning(
        space,
        &cfg.sweep.grid,
        &cfg.tbs,
        cfg.sweep.polarization,
        port,
    )?;
    art.write("tuning.csv", &table.to_csv(""))?;

    sum.put(
        "input",
        format!("|{}⟩ at port {port}", cfg.sweep.polarization),
    );
    let crossings = table.crossings();
    match crossings.first() {
        Some(c) => sum.put("crossing_deg", format!("{c:.6}")),
        None => sum
            .warnings
            .push("the port curves never cross on this grid".into()),
    }
    sum.put(
        "crossings_deg",
        crossings
            .iter()
            .map(|c| format!("{c:.6}"))
            .collect::<Vec<_>>()
            .join(", "),
    );
    let (er5, er6) = table.extinction_ratios()?;
    sum.put("er_port5", er5);
    sum.put("er_port6", er6);
    for (p, er) in [(5, er5), (6, er6)] {
        if er.guard_hit {
            sum.warnings.push(format!(
                "port {p} extinction ratio hit the {} dB guard",
                metrics::GUARD_CEILING_DB
            ));
        }
    }
    let thetas: Vec<f64> = table.rows.iter().map(|r| r.theta2_deg).collect();
    let i5: Vec<f64> = table.rows.iter().map(|r| r.i5).collect();
    let fit = fit_cos2(&thetas, &i5)?;
    sum.put(
        "fit_port5",
        format!(
            "A = {:.9}, phase = {:.9} rad, max residual = {:.3e}",
            fit.amplitude, fit.phase_rad, fit.max_residual
        ),
    );
    let (mean, lo, hi) = MEASURED_TUNING_ER_DB;
    sum.put(
        "measured_er_db",
        format!("mean {mean}, min {lo}, max {hi} (hardware reference)"),
    );

    let op = build_tbs(&cfg.tbs, space)?;
    let out = op.apply(&FieldState::basis(
        space,
        ModeIndex::new(port, cfg.sweep.polarization, 0),
    )?)?;
    let sr = metrics::splitting_ratio(out.port_intensity(r_port)?, out.port_intensity(t_port)?)?;
    sum.put(
        "sr_at_theta2",
        format!("{sr:.9} (θ₂ = {}°)", cfg.tbs.theta2_deg),
    );

    let er_t = if t_port == 5 { er5 } else { er6 };
    let report = MetricsReport {
        er_db: Some(er_t.db),
        sr: Some(sr),
        guard_hit: er5.guard_hit || er6.guard_hit,
        provenance: format!(
            "tuning sweep θ₂ {}..{} step {}, |{}⟩ into port {port}",
            cfg.sweep.grid.start, cfg.sweep.grid.stop, cfg.sweep.grid.step, cfg.sweep.polarization
        ),
        ..Default::default()
    };
    let headline = format!(
        "ER (port {t_port}) = {er_t}, crossing at {}",
        crossings
            .first()
            .map(|c| format!("{c:.3}°"))
            .unwrap_or_else(|| "none".into())
    );
    Ok((report, headline))
}

fn polarization(
    cfg: &ScenarioConfig,
    space: &Arc<ModeSpace>,
    art: &mut Artifacts,
    sum: &mut Summary,
) -> Result<(MetricsReport, String)> {
    let port = cfg.sweep.input_port;
    let grid = &cfg.sweep.grid;
    let main = sweep_polarization(space, grid, &cfg.tbs, cfg.sweep.sr_th, port)?;
    art.write("pd.csv", &main.to_csv(""))?;

    let spec = cfg.sweep_spec(SweepVariable::Hwp0Theta);
    let mc = !spec.imp.is_fixed();
    let mut table = String::from("sr_th,theta2,pd,pd_mean,pd_std,measured_pd_1,measured_pd_2\n");
    sum.put("input_port", port);
    sum.put("monte_carlo_repeats", if mc { spec.repeats } else { 0 });
    for (&sr_th, &(_, m1, m2)) in PD_LEVELS.iter().zip(MEASURED_PD.iter()) {
        let nominal = sweep_polarization(space, grid, &cfg.tbs, sr_th, port)?.pd;
        let (mean, std) = if mc {
            let s = polarization_monte_carlo(space, &spec, &cfg.tbs, sr_th, port)?;
            (s.mean, s.std)
        } else {
            (nominal, 0.0)
        };
        let theta2 = theta2_for_split_ratio(sr_th)?;
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{}",
            format_number(sr_th),
            format_number(theta2),
            format_number(nominal),
            format_number(mean),
            format_number(std),
            format_number(m1),
            format_number(m2)
        );
        sum.put(
            &format!("pd_table.sr_{sr_th}"),
            format!(
                "θ₂ = {theta2:.6}°, PD = {:.4}%, MC mean = {:.4}% ± {:.4}%, measured {:.2}% / {:.2}%",
                100.0 * nominal,
                100.0 * mean,
                100.0 * std,
                100.0 * m1,
                100.0 * m2
            ),
        );
    }
    art.write("pd_table.csv", &table)?;

    let mean_sr = main.rows.iter().map(|r| r.1).sum::<f64>() / main.rows.len() as f64;
    sum.put(
        "pd",
        format!("{:.6}% at SR {}", 100.0 * main.pd, cfg.sweep.sr_th),
    );
    let report = MetricsReport {
        sr: Some(mean_sr),
        pd: Some(main.pd),
        provenance: format!(
            "polarization sweep θ₀ {}..{} step {}, SR {}, port {port}",
            grid.start, grid.stop, grid.step, cfg.sweep.sr_th
        ),
        ..Default::default()
    };
    Ok((
        report,
        format!("PD = {:.4}% at SR {}", 100.0 * main.pd, cfg.sweep.sr_th),
    ))
}

fn tomography(
    cfg: &ScenarioConfig,
    space: &Arc<ModeSpace>,
    art: &mut Artifacts,
    sum: &mut Summary,
) -> Result<(MetricsReport, String)> {
    let r = sweep_tomography(space, cfg.device, &cfg.tbs, cfg.crosstalk_db)?;
    art.write("tomo.csv", &r.to_csv(""))?;

    sum.put("device", cfg.device);
    for (l, er) in r.charges.iter().zip(&r.er_oam) {
        sum.put(&format!("er_oam.l{l}"), er);
    }
    let all_guard = r.er_oam.iter().all(|e| e.guard_hit);
    let min = r.er_oam.iter().map(|e| e.db).fold(f64::INFINITY, f64::min);
    let verdict = if all_guard {
        format!(
            "all rows ER_OAM > {:.0} dB (guard)",
            metrics::GUARD_CEILING_DB
        )
    } else {
        format!("min ER_OAM = {min:.3} dB")
    };
    sum.put("er_oam", &verdict);
    sum.put("boundary_leakage", format_number(r.boundary_leakage));
    if r.boundary_leakage > 0.0 {
        sum.warnings.push(format!(
            "intensity {:.3e} reached the |l| = {} truncation boundary",
            r.boundary_leakage,
            space.oam_range()
        ));
    }
    let guard_rows = r.er_oam.iter().filter(|e| e.guard_hit).count();
    if guard_rows > 0 {
        sum.warnings.push(format!(
            "{guard_rows} of {} rows hit the {} dB guard",
            r.er_oam.len(),
            metrics::GUARD_CEILING_DB
        ));
    }
    let report = MetricsReport {
        er_oam_db: Some(min),
        guard_hit: guard_rows > 0,
        provenance: format!(
            "tomography, device {}, crosstalk {} dB",
            cfg.device, cfg.crosstalk_db
        ),
        ..Default::default()
    };
    Ok((report, verdict))
}

fn sagnac(
    cfg: &ScenarioConfig,
    space: &Arc<ModeSpace>,
    art: &mut Artifacts,
    sum: &mut Summary,
) -> Result<(MetricsReport, String)> {
    let grid = &cfg.sweep.grid;
    let sub = cfg.theta2_subsweep();
    let t = sweep_sagnac(space, grid, &sub, &cfg.sagnac_config())?;
    art.write("sagnac.csv", &t.to_csv(""))?;

    let (m1, m2) = t.mean_visibility();
    let mean = 0.5 * (m1 + m2);
    let min = t
        .rows
        .iter()
        .map(|r| r.v_port1.min(r.v_port2))
        .fold(f64::INFINITY, f64::min);
    let verdict = format!("mean V = {mean:.6}");
    sum.put("mean_v", format!("{mean:.6}"));
    sum.put("mean_v_port1", format!("{m1:.6}"));
    sum.put("mean_v_port2", format!("{m2:.6}"));
    sum.put("min_v", format!("{min:.6}"));
    sum.put(
        "theta2_subsweep",
        format!("0..{} step {}", sub.stop, sub.step),
    );
    sum.put(
        "measured_floor",
        format!(
            "{MEASURED_VISIBILITY_FLOOR} (hardware reference, {})",
            if mean > MEASURED_VISIBILITY_FLOOR {
                "above"
            } else {
                "below"
            }
        ),
    );
    let report = MetricsReport {
        visibility: Some(mean),
        provenance: format!(
            "sagnac, θ₀ {}..{} step {}, θ₂ subsweep step {}",
            grid.start, grid.stop, grid.step, sub.step
        ),
        ..Default::default()
    };
    Ok((report, verdict))
}

fn dump(
    cfg: &ScenarioConfig,
    space: &Arc<ModeSpace>,
    art: &mut Artifacts,
    sum: &mut Summary,
) -> Result<(MetricsReport, String)> {
    let op: ScatteringOperator = match cfg.dump_target {
        DumpTarget::Tbs => build_tbs(&cfg.tbs, space)?,
        DumpTarget::ClosedForm => closed_form_tbs(cfg.tbs.theta2_deg, space)?,
        DumpTarget::Sagnac => build_sagnac(&cfg.sagnac_config(), space)?,
        DumpTarget::Elements => compose_elements(cfg, space)?,
    };
    art.write("operator.txt", &text::write_operator(&op)?)?;
    sum.put("target", cfg.dump_target);
    sum.put("label", op.label());
    sum.put("dimension", space.dimension());
    sum.put("spectral_norm", format_number(op.spectral_norm()));
    sum.put("unitarity_defect", format_number(op.unitarity_defect()));
    let report = MetricsReport {
        provenance: format!("operator dump: {}", op.label()),
        ..Default::default()
    };
    Ok((
        report,
        format!(
            "{} ({}×{})",
            op.label(),
            space.dimension(),
            space.dimension()
        ),
    ))
}

fn compose_elements(cfg: &ScenarioConfig, space: &Arc<ModeSpace>) -> Result<ScatteringOperator> {
    let mut op: Option<ScatteringOperator> = None;
    for e in &cfg.elements {
        let next = e
            .build(space, &cfg.tbs.imp)
            .with_context(|| format!("building `{e}`"))?;
        op = Some(match op {
            None => next,
            Some(prev) => prev
                .then(&next)
                .with_context(|| format!("composing `{e}`"))?,
        });
    }
    let labels: Vec<String> = cfg.elements.iter().map(ToString::to_string).collect();
    Ok(op
        .expect("validated non-empty")
        .with_label(labels.join(" ; ")))
}
