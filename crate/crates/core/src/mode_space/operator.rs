use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{FieldState, ModeIndex, ModeSpace};
use crate::error::{Error, Result};

/// Linear map on the amplitudes of a [`ModeSpace`].
///
/// `input_ports` / `output_ports` record where light enters and leaves the
/// element; ports outside both sets pass through unchanged. The `unitary`
/// flag is a claim made by the constructor (lossless element), checked by
/// the test suites with [`ScatteringOperator::unitarity_defect`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringOperator {
    space: Arc<ModeSpace>,
    matrix: DMatrix<Complex64>,
    input_ports: BTreeSet<u32>,
    output_ports: BTreeSet<u32>,
    label: String,
    unitary: bool,
}

impl ScatteringOperator {
    pub fn new(
        space: &Arc<ModeSpace>,
        matrix: DMatrix<Complex64>,
        input_ports: impl IntoIterator<Item = u32>,
        output_ports: impl IntoIterator<Item = u32>,
        label: impl Into<String>,
        unitary: bool,
    ) -> Result<Self> {
        let n = space.dimension();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Index(format!(
                "matrix is {}×{}, space dimension is {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let input_ports: BTreeSet<u32> = input_ports.into_iter().collect();
        let output_ports: BTreeSet<u32> = output_ports.into_iter().collect();
        for &p in input_ports.iter().chain(&output_ports) {
            space.check_port(p)?;
        }
        Ok(ScatteringOperator {
            space: Arc::clone(space),
            matrix,
            input_ports,
            output_ports,
            label: label.into(),
            unitary,
        })
    }

    /// Identity; acts on no port.
    pub fn identity(space: &Arc<ModeSpace>) -> Self {
        let n = space.dimension();
        ScatteringOperator {
            space: Arc::clone(space),
            matrix: DMatrix::identity(n, n),
            input_ports: BTreeSet::new(),
            output_ports: BTreeSet::new(),
            label: "identity".into(),
            unitary: true,
        }
    }

    pub fn space(&self) -> &Arc<ModeSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn input_ports(&self) -> &BTreeSet<u32> {
        &self.input_ports
    }

    pub fn output_ports(&self) -> &BTreeSet<u32> {
        &self.output_ports
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Matrix element `⟨out| M |in⟩`.
    pub fn entry(&self, out: ModeIndex, input: ModeIndex) -> Result<Complex64> {
        Ok(self.matrix[(self.space.flatten(out)?, self.space.flatten(input)?)])
    }

    fn check_space(&self, other: &ModeSpace) -> Result<()> {
        if *self.space == *other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    pub fn apply(&self, s: &FieldState) -> Result<FieldState> {
        self.check_space(s.space())?;
        let mut out = DVector::zeros(self.space.dimension());
        for (k, a) in s.amplitudes().iter().enumerate() {
            if *a != Complex64::ZERO {
                out.axpy(*a, &self.matrix.column(k), Complex64::ONE);
            }
        }
        FieldState::from_amplitudes(&self.space, out)
    }

    /// Operator of `self` followed by `next`: matrix `next · self`.
    pub fn then(&self, next: &ScatteringOperator) -> Result<ScatteringOperator> {
        compose(self, next)
    }

    /// Reciprocal (time-reversed) pass through the same element: transposed
    /// matrix, input and output roles exchanged.
    pub fn reversed(&self) -> ScatteringOperator {
        ScatteringOperator {
            space: Arc::clone(&self.space),
            matrix: self.matrix.transpose(),
            input_ports: self.output_ports.clone(),
            output_ports: self.input_ports.clone(),
            label: format!("reverse({})", self.label),
            unitary: self.unitary,
        }
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }

    /// Largest absolute entry of `M†M − I`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.space.dimension();
        let gram = self.matrix.adjoint() * &self.matrix;
        (gram - DMatrix::<Complex64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Product `second · first`.
///
/// Fails if `second` reads from a port that `first` consumes, i.e. one of
/// `first`'s input ports that is not also one of its outputs.
pub fn compose(
    first: &ScatteringOperator,
    second: &ScatteringOperator,
) -> Result<ScatteringOperator> {
    first.check_space(&second.space)?;
    let consumed: BTreeSet<u32> = first
        .input_ports
        .difference(&first.output_ports)
        .copied()
        .collect();
    if let Some(p) = second.input_ports.intersection(&consumed).next() {
        return Err(Error::Routing(format!(
            "`{}` reads port {p}, which `{}` has already routed elsewhere",
            second.label, first.label
        )));
    }
    let input_ports = first
        .input_ports
        .iter()
        .chain(second.input_ports.difference(&first.output_ports))
        .copied()
        .collect();
    let output_ports = first
        .output_ports
        .difference(&second.input_ports)
        .chain(&second.output_ports)
        .copied()
        .collect();
    Ok(ScatteringOperator {
        space: Arc::clone(&first.space),
        matrix: sparse_product(&second.matrix, &first.matrix),
        input_ports,
        output_ports,
        label: format!("{} ∘ {}", second.label, first.label),
        unitary: first.unitary && second.unitary,
    })
}

/// `a · b`, skipping the zero entries of `b`. Element matrices carry a handful
/// of nonzeros per column, so this is far cheaper than a dense product.
pub(crate) fn sparse_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for j in 0..b.ncols() {
        let mut col = out.column_mut(j);
        for (k, &bkj) in b.column(j).iter().enumerate() {
            if bkj != Complex64::ZERO {
                col.axpy(bkj, &a.column(k), Complex64::ONE);
            }
        }
    }
    out
}

pub(crate) fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}
