//! Factories for the optical elements of the splitter and its benches.
//!
//! Every factory returns a full-space [`ScatteringOperator`] that acts on the
//! named ports and is the identity everywhere else. Ideal elements are
//! unitary. The imperfect variants stay passive (spectral norm ≤ 1).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode_space::operator::spectral_norm;
use crate::mode_space::{FieldState, ModeIndex, ModeSpace, Polarization, ScatteringOperator};

/// Deviations of the real components from their ideal models.
#[derive(Debug, Clone, PartialEq)]
pub struct ImperfectionParams {
    /// Power ratio of correctly routed to leaked polarization, in dB.
    /// `f64::INFINITY` is a perfect splitter.
    pub pbs_extinction_db: f64,
    /// Added to every waveplate angle.
    pub hwp_angle_error_deg: f64,
    /// Deviation of the waveplate retardance from π.
    pub hwp_retardance_error_rad: f64,
    /// Phase picked up by V light reflected off a coated film.
    pub coating_phase_rad: f64,
    /// Power transmittance per (port, polarization); missing entries are 1.
    pub port_loss: BTreeMap<(u32, Polarization), f64>,
}

impl Default for ImperfectionParams {
    fn default() -> Self {
        ImperfectionParams {
            pbs_extinction_db: f64::INFINITY,
            hwp_angle_error_deg: 0.0,
            hwp_retardance_error_rad: 0.0,
            coating_phase_rad: PI,
            port_loss: BTreeMap::new(),
        }
    }
}

impl ImperfectionParams {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.pbs_extinction_db.is_nan() || self.pbs_extinction_db < 0.0 {
            return Err(Error::Domain(format!(
                "extinction must be ≥ 0, got {}",
                self.pbs_extinction_db
            )));
        }
        for (name, v) in [
            ("hwp_angle_error_deg", self.hwp_angle_error_deg),
            ("hwp_retardance_error_rad", self.hwp_retardance_error_rad),
            ("coating_phase_rad", self.coating_phase_rad),
        ] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite, got {v}")));
            }
        }
        for (&(port, pol), &t) in &self.port_loss {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Domain(format!(
                    "transmittance of port {port} {pol} must lie in [0, 1], got {t}"
                )));
            }
        }
        Ok(())
    }

    pub fn transmittance(&self, port: u32, pol: Polarization) -> f64 {
        self.port_loss.get(&(port, pol)).copied().unwrap_or(1.0)
    }

    /// Amplitude leaked into the wrong port before renormalization.
    pub fn leakage_amplitude(&self) -> f64 {
        if self.pbs_extinction_db.is_infinite() {
            0.0
        } else {
            10f64.powf(-self.pbs_extinction_db / 20.0)
        }
    }
}

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

fn check_ports(space: &ModeSpace, ports: &[u32]) -> Result<()> {
    ports.iter().try_for_each(|&p| space.check_port(p))
}

/// Clears the rows and columns of every mode at `ports` in an identity matrix.
fn identity_except(space: &ModeSpace, ports: &[u32]) -> Result<DMatrix<Complex64>> {
    let n = space.dimension();
    let mut m = DMatrix::identity(n, n);
    for &p in ports {
        for k in space.port_indices(p)? {
            m[(k, k)] = Complex64::ZERO;
        }
    }
    Ok(m)
}

/// 2×2 Jones matrix of a waveplate with retardance `π + retardance_error`
/// whose fast axis sits at `theta_rad` from horizontal.
pub fn waveplate_jones(theta_rad: f64, retardance_error: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = theta_rad.sin_cos();
    // Slow-axis factor e^{i(π+δ)}.
    let slow = -cis(retardance_error);
    let one = Complex64::ONE;
    [
        [one * c * c + slow * s * s, (one - slow) * c * s],
        [(one - slow) * c * s, one * s * s + slow * c * c],
    ]
}

/// Half-wave plate at `theta_deg` on each of `ports`, all OAM charges.
///
/// Ideal action: `H → cos2θ·H + sin2θ·V`, `V → sin2θ·H − cos2θ·V`.
pub fn make_hwp(
    space: &Arc<ModeSpace>,
    theta_deg: f64,
    ports: &[u32],
    imp: &ImperfectionParams,
) -> Result<ScatteringOperator> {
    check_ports(space, ports)?;
    let theta = (theta_deg + imp.hwp_angle_error_deg).to_radians();
    let j = waveplate_jones(theta, imp.hwp_retardance_error_rad);
    let mut m = identity_except(space, ports)?;
    for &p in ports {
        for l in space.charges() {
            for (r, pol_out) in Polarization::BOTH.into_iter().enumerate() {
                for (c, pol_in) in Polarization::BOTH.into_iter().enumerate() {
                    let row = space.flatten(ModeIndex::new(p, pol_out, l))?;
                    let col = space.flatten(ModeIndex::new(p, pol_in, l))?;
                    m[(row, col)] = j[r][c];
                }
            }
        }
    }
    ScatteringOperator::new(
        space,
        m,
        ports.iter().copied(),
        ports.iter().copied(),
        format!("hwp({theta_deg}° on {ports:?})"),
        true,
    )
}

/// Which prism of the modified splitter carries the reflective film.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoatingSide {
    Left,
    Right,
}

impl std::str::FromStr for CoatingSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(CoatingSide::Left),
            "right" => Ok(CoatingSide::Right),
            other => Err(Error::Domain(format!("unknown coating side `{other}`"))),
        }
    }
}

impl fmt::Display for CoatingSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoatingSide::Left => "left",
            CoatingSide::Right => "right",
        })
    }
}

/// Port assignment of a two-in, two-out polarizing splitter.
///
/// From `inputs[0]`, V is reflected to `outputs[0]` and H transmitted to
/// `outputs[1]`; from `inputs[1]` the roles swap (V to `outputs[1]`, H to
/// `outputs[0]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PbsRouting {
    pub inputs: [u32; 2],
    pub outputs: [u32; 2],
}

impl PbsRouting {
    pub fn new(inputs: [u32; 2], outputs: [u32; 2]) -> Self {
        PbsRouting { inputs, outputs }
    }

    fn validate(&self, space: &ModeSpace) -> Result<()> {
        let all = [
            self.inputs[0],
            self.inputs[1],
            self.outputs[0],
            self.outputs[1],
        ];
        for (i, a) in all.iter().enumerate() {
            if all[i + 1..].contains(a) {
                return Err(Error::Routing(format!(
                    "port {a} appears twice in {self:?}"
                )));
            }
        }
        check_ports(space, &all).map_err(|e| Error::Routing(e.to_string()))
    }
}

/// Rhombic-prism polarizing splitter that keeps the OAM charge.
///
/// V light reflected off the film picks up `imp.coating_phase_rad`; the film
/// is met by V entering on the coated side (`inputs[0]` for a left coating,
/// `inputs[1]` for a right one). The total-internal-reflection legs carry no
/// phase. With finite extinction each polarization leaks into the wrong
/// output: with real amplitude `ε` from `inputs[0]` and `−ε·e^{i(γ₀+γ₁)}`
/// from `inputs[1]`, where γ are the phases of the two V paths (`γ = 0` for
/// H). That pairing keeps the element unitary and reciprocal. The reverse pass
/// (outputs back to inputs) is the transposed block.
pub fn make_modified_pbs(
    space: &Arc<ModeSpace>,
    coating: CoatingSide,
    routing: PbsRouting,
    imp: &ImperfectionParams,
) -> Result<ScatteringOperator> {
    routing.validate(space)?;
    imp.validate()?;
    let PbsRouting { inputs, outputs } = routing;
    let eps = imp.leakage_amplitude();
    let norm = (1.0 + eps * eps).sqrt();
    let (main, leak) = (1.0 / norm, eps / norm);

    let coated = match coating {
        CoatingSide::Left => 0,
        CoatingSide::Right => 1,
    };
    let v_phase = |k: usize| {
        if k == coated {
            imp.coating_phase_rad
        } else {
            0.0
        }
    };

    let mut m = identity_except(space, &[inputs[0], inputs[1], outputs[0], outputs[1]])?;
    let mut set = |out: ModeIndex, input: ModeIndex, z: Complex64| -> Result<()> {
        let (r, c) = (space.flatten(out)?, space.flatten(input)?);
        m[(r, c)] = z;
        m[(c, r)] = z;
        Ok(())
    };
    for l in space.charges() {
        for (k, &port_in) in inputs.iter().enumerate() {
            // V is reflected to outputs[k], H transmitted to the other output.
            let (refl, trans) = (outputs[k], outputs[1 - k]);
            let h = Polarization::H;
            let v = Polarization::V;
            set(
                ModeIndex::new(trans, h, l),
                ModeIndex::new(port_in, h, l),
                Complex64::from(main),
            )?;
            set(
                ModeIndex::new(refl, v, l),
                ModeIndex::new(port_in, v, l),
                cis(v_phase(k)) * main,
            )?;
            if leak > 0.0 {
                // Symmetric beam-splitter form: the leak is in quadrature with the
                // main path, offset on V by the mean film phase.
                let h_leak = Complex64::i() * leak;
                let v_leak = Complex64::i() * cis(0.5 * (v_phase(0) + v_phase(1))) * leak;
                set(
                    ModeIndex::new(refl, h, l),
                    ModeIndex::new(port_in, h, l),
                    h_leak,
                )?;
                set(
                    ModeIndex::new(trans, v, l),
                    ModeIndex::new(port_in, v, l),
                    v_leak,
                )?;
            }
        }
    }
    let label = format!(
        "pbs({coating}-coated, in {inputs:?} out {outputs:?}, film phase {:.6} on V from port {}, TIR phase 0, ext {} dB)",
        imp.coating_phase_rad, inputs[coated], imp.pbs_extinction_db
    );
    ScatteringOperator::new(space, m, inputs, outputs, label, true)
}

/// Per-(port, polarization) insertion loss on `ports`, taken from
/// `imp.port_loss`. Identity for ports without an entry.
pub fn make_port_loss(
    space: &Arc<ModeSpace>,
    ports: &[u32],
    imp: &ImperfectionParams,
) -> Result<ScatteringOperator> {
    check_ports(space, ports)?;
    imp.validate()?;
    let n = space.dimension();
    let mut m = DMatrix::identity(n, n);
    let mut lossless = true;
    for &p in ports {
        for pol in Polarization::BOTH {
            let t = imp.transmittance(p, pol);
            lossless &= t == 1.0;
            for l in space.charges() {
                let k = space.flatten(ModeIndex::new(p, pol, l))?;
                m[(k, k)] = Complex64::from(t.sqrt());
            }
        }
    }
    ScatteringOperator::new(
        space,
        m,
        ports.iter().copied(),
        ports.iter().copied(),
        format!("loss({ports:?})"),
        lossless,
    )
}

/// Plane mirror on `port`: `l → −l`, common phase `phase_rad`.
pub fn make_mirror(
    space: &Arc<ModeSpace>,
    port: u32,
    phase_rad: f64,
) -> Result<ScatteringOperator> {
    make_birefringent_mirror(space, port, phase_rad, 0.0)
}

/// Mirror with an extra phase `v_phase_rad` on V relative to H.
pub fn make_birefringent_mirror(
    space: &Arc<ModeSpace>,
    port: u32,
    phase_rad: f64,
    v_phase_rad: f64,
) -> Result<ScatteringOperator> {
    let mut m = identity_except(space, &[port])?;
    for pol in Polarization::BOTH {
        let z = cis(phase_rad
            + if pol == Polarization::V {
                v_phase_rad
            } else {
                0.0
            });
        for l in space.charges() {
            let r = space.flatten(ModeIndex::new(port, pol, -l))?;
            let c = space.flatten(ModeIndex::new(port, pol, l))?;
            m[(r, c)] = z;
        }
    }
    ScatteringOperator::new(
        space,
        m,
        [port],
        [port],
        format!("mirror(port {port}, {phase_rad:.6} rad)"),
        true,
    )
}

/// Free-space leg joining ports `a` and `b` in both directions with a common
/// (reciprocal) phase.
pub fn make_free_path(
    space: &Arc<ModeSpace>,
    a: u32,
    b: u32,
    phase_rad: f64,
) -> Result<ScatteringOperator> {
    if a == b {
        return Err(Error::Routing(format!("free path from port {a} to itself")));
    }
    let mut m = identity_except(space, &[a, b])?;
    let z = cis(phase_rad);
    for pol in Polarization::BOTH {
        for l in space.charges() {
            let ia = space.flatten(ModeIndex::new(a, pol, l))?;
            let ib = space.flatten(ModeIndex::new(b, pol, l))?;
            m[(ib, ia)] = z;
            m[(ia, ib)] = z;
        }
    }
    ScatteringOperator::new(
        space,
        m,
        [a, b],
        [a, b],
        format!("path({a}↔{b}, {phase_rad:.6} rad)"),
        true,
    )
}

/// OAM shifter (SLM hologram) together with the input charges whose main
/// target fell outside the truncation and was dropped.
#[derive(Debug, Clone)]
pub struct OamShifter {
    pub operator: ScatteringOperator,
    pub dropped: Vec<i32>,
}

/// Maps `l → l + delta_l` on `port`. With finite `neighbor_crosstalk_db`
/// each input also couples to `l + delta_l ± 1` with amplitude
/// `i·10^(−db/20)`; columns are normalized before truncation and the block
/// is rescaled if its spectral norm exceeds 1.
pub fn make_oam_shifter(
    space: &Arc<ModeSpace>,
    delta_l: i32,
    neighbor_crosstalk_db: f64,
    port: u32,
) -> Result<OamShifter> {
    space.check_port(port)?;
    let bound = space.oam_range() as i32;
    if delta_l.abs() > 2 * bound {
        return Err(Error::Domain(format!(
            "|Δl| = {} exceeds 2L = {}",
            delta_l.abs(),
            2 * bound
        )));
    }
    if neighbor_crosstalk_db.is_nan() || neighbor_crosstalk_db < 0.0 {
        return Err(Error::Domain(format!(
            "crosstalk must be ≥ 0 dB, got {neighbor_crosstalk_db}"
        )));
    }
    let eps = if neighbor_crosstalk_db.is_infinite() {
        0.0
    } else {
        10f64.powf(-neighbor_crosstalk_db / 20.0)
    };
    let n_l = space.oam_count();
    let mut block = DMatrix::<Complex64>::zeros(n_l, n_l);
    let mut dropped = Vec::new();
    let col_norm = (1.0 + 2.0 * eps * eps).sqrt();
    for (c, l) in space.charges().enumerate() {
        let target = l + delta_l;
        if !space.contains_charge(target) {
            dropped.push(l);
        }
        let mut put = |t: i32, z: Complex64| {
            if space.contains_charge(t) {
                block[((t + bound) as usize, c)] = z / col_norm;
            }
        };
        put(target, Complex64::ONE);
        if eps > 0.0 {
            put(target - 1, Complex64::I * eps);
            put(target + 1, Complex64::I * eps);
        }
    }
    let norm = spectral_norm(&block);
    if norm > 1.0 {
        block /= Complex64::from(norm);
    }
    let mut m = identity_except(space, &[port])?;
    for pol in Polarization::BOTH {
        let base = space.flatten(ModeIndex::new(port, pol, -bound))?;
        m.view_mut((base, base), (n_l, n_l)).copy_from(&block);
    }
    let lossless = eps == 0.0 && delta_l == 0;
    let operator = ScatteringOperator::new(
        space,
        m,
        [port],
        [port],
        format!("oam_shift(Δl={delta_l}, xt {neighbor_crosstalk_db} dB, port {port})"),
        lossless,
    )?;
    Ok(OamShifter { operator, dropped })
}

/// Output of a half-wave plate at `hwp0_deg` fed with horizontally polarized
/// light: `cos2θ₀·|h⊗l⟩ + sin2θ₀·|v⊗l⟩` at `port`.
pub fn prepare_linear_state(
    space: &Arc<ModeSpace>,
    hwp0_deg: f64,
    port: u32,
    l: i32,
) -> Result<FieldState> {
    let (s, c) = (2.0 * hwp0_deg.to_radians()).sin_cos();
    FieldState::polarized(space, port, l, Complex64::from(c), Complex64::from(s))
}

/// One element in the text form used by scenario files, e.g.
/// `hwp theta=22.5 ports=[3,4]` or `pbs coating=left in=[3,4] out=[5,6] ext_db=inf`.
#[derive(Debug, Clone, PartialEq)]
pub enum ElementSpec {
    Hwp {
        theta_deg: f64,
        ports: Vec<u32>,
    },
    Pbs {
        coating: CoatingSide,
        routing: PbsRouting,
        ext_db: Option<f64>,
    },
    Mirror {
        port: u32,
        phase_rad: f64,
        v_phase_rad: f64,
    },
    Path {
        a: u32,
        b: u32,
        phase_rad: f64,
    },
    Shifter {
        delta_l: i32,
        crosstalk_db: f64,
        port: u32,
    },
    Loss {
        ports: Vec<u32>,
    },
}

fn parse_list(s: &str) -> Result<Vec<u32>> {
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Domain(format!("expected `[a,b,…]`, got `{s}`")))?;
    inner
        .split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Domain(format!("bad port `{t}`")))
        })
        .collect()
}

fn parse_pair(s: &str) -> Result<[u32; 2]> {
    let v = parse_list(s)?;
    <[u32; 2]>::try_from(v.as_slice())
        .map_err(|_| Error::Routing(format!("expected exactly two ports, got `{s}`")))
}

fn parse_f64(s: &str) -> Result<f64> {
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        _ => s
            .parse()
            .map_err(|_| Error::Domain(format!("bad number `{s}`"))),
    }
}

impl std::str::FromStr for ElementSpec {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let mut words = line.split_whitespace();
        let kind = words
            .next()
            .ok_or_else(|| Error::Domain("empty element".into()))?;
        let mut args = BTreeMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::Domain(format!("expected key=value, got `{w}`")))?;
            if args.insert(k, v).is_some() {
                return Err(Error::Domain(format!("duplicate argument `{k}`")));
            }
        }
        let mut take = |k: &str| args.remove(k);
        fn req<'a>(v: Option<&'a str>, k: &str) -> Result<&'a str> {
            v.ok_or_else(|| Error::Domain(format!("missing argument `{k}`")))
        }
        let spec = match kind {
            "hwp" => ElementSpec::Hwp {
                theta_deg: parse_f64(req(take("theta"), "theta")?)?,
                ports: parse_list(req(take("ports"), "ports")?)?,
            },
            "pbs" => ElementSpec::Pbs {
                coating: req(take("coating"), "coating")?.parse()?,
                routing: PbsRouting::new(
                    parse_pair(req(take("in"), "in")?)?,
                    parse_pair(req(take("out"), "out")?)?,
                ),
                ext_db: take("ext_db").map(parse_f64).transpose()?,
            },
            "mirror" => ElementSpec::Mirror {
                port: parse_f64(req(take("port"), "port")?)? as u32,
                phase_rad: take("phase").map(parse_f64).transpose()?.unwrap_or(0.0),
                v_phase_rad: take("v_phase").map(parse_f64).transpose()?.unwrap_or(0.0),
            },
            "path" => ElementSpec::Path {
                a: parse_f64(req(take("a"), "a")?)? as u32,
                b: parse_f64(req(take("b"), "b")?)? as u32,
                phase_rad: take("phase").map(parse_f64).transpose()?.unwrap_or(0.0),
            },
            "shifter" => ElementSpec::Shifter {
                delta_l: req(take("dl"), "dl")?
                    .parse()
                    .map_err(|_| Error::Domain("shifter: bad `dl`".into()))?,
                crosstalk_db: take("xt_db")
                    .map(parse_f64)
                    .transpose()?
                    .unwrap_or(f64::INFINITY),
                port: parse_f64(req(take("port"), "port")?)? as u32,
            },
            "loss" => ElementSpec::Loss {
                ports: parse_list(req(take("ports"), "ports")?)?,
            },
            other => return Err(Error::Domain(format!("unknown element `{other}`"))),
        };
        if let Some(k) = args.keys().next() {
            return Err(Error::Domain(format!("{kind}: unknown argument `{k}`")));
        }
        Ok(spec)
    }
}

fn fmt_list(ports: &[u32]) -> String {
    let parts: Vec<String> = ports.iter().map(u32::to_string).collect();
    format!("[{}]", parts.join(","))
}

impl fmt::Display for ElementSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementSpec::Hwp { theta_deg, ports } => {
                write!(f, "hwp theta={theta_deg} ports={}", fmt_list(ports))
            }
            ElementSpec::Pbs {
                coating,
                routing,
                ext_db,
            } => {
                write!(
                    f,
                    "pbs coating={coating} in={} out={}",
                    fmt_list(&routing.inputs),
                    fmt_list(&routing.outputs)
                )?;
                if let Some(db) = ext_db {
                    write!(f, " ext_db={db}")?;
                }
                Ok(())
            }
            ElementSpec::Mirror {
                port,
                phase_rad,
                v_phase_rad,
            } => {
                write!(
                    f,
                    "mirror port={port} phase={phase_rad} v_phase={v_phase_rad}"
                )
            }
            ElementSpec::Path { a, b, phase_rad } => {
                write!(f, "path a={a} b={b} phase={phase_rad}")
            }
            ElementSpec::Shifter {
                delta_l,
                crosstalk_db,
                port,
            } => {
                write!(f, "shifter dl={delta_l} xt_db={crosstalk_db} port={port}")
            }
            ElementSpec::Loss { ports } => write!(f, "loss ports={}", fmt_list(ports)),
        }
    }
}

impl ElementSpec {
    pub fn build(
        &self,
        space: &Arc<ModeSpace>,
        imp: &ImperfectionParams,
    ) -> Result<ScatteringOperator> {
        match self {
            ElementSpec::Hwp { theta_deg, ports } => make_hwp(space, *theta_deg, ports, imp),
            ElementSpec::Pbs {
                coating,
                routing,
                ext_db,
            } => {
                let mut imp = imp.clone();
                if let Some(db) = ext_db {
                    imp.pbs_extinction_db = *db;
                }
                make_modified_pbs(space, *coating, *routing, &imp)
            }
            ElementSpec::Mirror {
                port,
                phase_rad,
                v_phase_rad,
            } => make_birefringent_mirror(space, *port, *phase_rad, *v_phase_rad),
            ElementSpec::Path { a, b, phase_rad } => make_free_path(space, *a, *b, *phase_rad),
            ElementSpec::Shifter {
                delta_l,
                crosstalk_db,
                port,
            } => make_oam_shifter(space, *delta_l, *crosstalk_db, *port).map(|s| s.operator),
            ElementSpec::Loss { ports } => make_port_loss(space, ports, imp),
        }
    }
}
