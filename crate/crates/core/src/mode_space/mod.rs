//! Finite mode basis `port ⊗ polarization ⊗ OAM charge` and the linear algebra
//! of field states and scattering operators on it.
//!
//! The flat index of a mode is port-major, then polarization (H before V),
//! then OAM charge ascending from `-L` to `+L`. Every matrix and amplitude
//! vector in the crate uses this ordering.

pub(crate) mod operator;
mod state;
pub mod text;

pub use operator::{compose, ScatteringOperator};
pub use state::FieldState;

use std::fmt;

use crate::error::{Error, Result};

/// Linear polarization basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    fn offset(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("h"),
            Polarization::V => f.write_str("v"),
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "h" => Ok(Polarization::H),
            "v" => Ok(Polarization::V),
            other => Err(Error::Domain(format!("unknown polarization `{other}`"))),
        }
    }
}

/// One basis element `|pol ⊗ l, port⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub port: u32,
    pub pol: Polarization,
    pub l: i32,
}

impl ModeIndex {
    pub fn new(port: u32, pol: Polarization, l: i32) -> Self {
        ModeIndex { port, pol, l }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}⊗{}, {}⟩", self.pol, self.l, self.port)
    }
}

/// The truncated basis: an ordered list of port labels, both polarizations
/// and OAM charges `-L..=L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSpace {
    ports: Vec<u32>,
    oam_range: u32,
}

impl ModeSpace {
    pub fn new(ports: Vec<u32>, oam_range: u32) -> Result<Self> {
        if ports.is_empty() {
            return Err(Error::Domain("mode space needs at least one port".into()));
        }
        let mut sorted = ports.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != ports.len() {
            return Err(Error::Domain(format!("duplicate port labels in {ports:?}")));
        }
        Ok(ModeSpace { ports, oam_range })
    }

    /// Ports `1..=count`.
    pub fn with_port_count(count: u32, oam_range: u32) -> Result<Self> {
        Self::new((1..=count).collect(), oam_range)
    }

    /// The six-port space of the splitter (ports 1–6).
    pub fn tbs(oam_range: u32) -> Self {
        Self::with_port_count(6, oam_range).expect("six distinct ports")
    }

    pub fn ports(&self) -> &[u32] {
        &self.ports
    }

    pub fn oam_range(&self) -> u32 {
        self.oam_range
    }

    /// Number of OAM charges per (port, polarization).
    pub fn oam_count(&self) -> usize {
        2 * self.oam_range as usize + 1
    }

    pub fn charges(&self) -> impl Iterator<Item = i32> {
        let l = self.oam_range as i32;
        -l..=l
    }

    pub fn dimension(&self) -> usize {
        self.ports.len() * 2 * self.oam_count()
    }

    pub fn has_port(&self, port: u32) -> bool {
        self.ports.contains(&port)
    }

    pub fn contains_charge(&self, l: i32) -> bool {
        l.unsigned_abs() <= self.oam_range
    }

    fn port_position(&self, port: u32) -> Result<usize> {
        self.ports
            .iter()
            .position(|&p| p == port)
            .ok_or_else(|| Error::Index(format!("port {port} not in {:?}", self.ports)))
    }

    pub fn check_port(&self, port: u32) -> Result<()> {
        self.port_position(port).map(|_| ())
    }

    pub fn flatten(&self, m: ModeIndex) -> Result<usize> {
        let pos = self.port_position(m.port)?;
        if !self.contains_charge(m.l) {
            return Err(Error::Index(format!(
                "OAM charge {} outside [-{}, {}]",
                m.l, self.oam_range, self.oam_range
            )));
        }
        let n_l = self.oam_count();
        let l_off = (m.l + self.oam_range as i32) as usize;
        Ok((pos * 2 + m.pol.offset()) * n_l + l_off)
    }

    pub fn unflatten(&self, index: usize) -> Result<ModeIndex> {
        if index >= self.dimension() {
            return Err(Error::Index(format!(
                "flat index {index} ≥ dimension {}",
                self.dimension()
            )));
        }
        let n_l = self.oam_count();
        let l = (index % n_l) as i32 - self.oam_range as i32;
        let pol = if (index / n_l).is_multiple_of(2) {
            Polarization::H
        } else {
            Polarization::V
        };
        let port = self.ports[index / (2 * n_l)];
        Ok(ModeIndex { port, pol, l })
    }

    /// All basis elements in flat order.
    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (0..self.dimension()).map(|i| self.unflatten(i).expect("in range"))
    }

    /// Flat indices of every mode at `port`.
    pub fn port_indices(&self, port: u32) -> Result<std::ops::Range<usize>> {
        let pos = self.port_position(port)?;
        let block = 2 * self.oam_count();
        Ok(pos * block..(pos + 1) * block)
    }
}
