//! Time reversal of dressed operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matmul3;
use crate::model::Operator;
use crate::{C64, CMatrix};

/// How the internal degrees of freedom transform under time reversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinStructure {
    /// Purely orbital internal index: conjugation alone.
    Spinless,
    /// Internal index grouped as (orbital, spin) pairs with spin fastest;
    /// conjugation is sandwiched with `iσ_y` on every pair.
    SpinHalf,
}

/// Antiunitary time reversal `η(A) = I⁻¹ Ā I`, tagged as living at the
/// reversed magnetic field.
///
/// Entrywise conjugation of the dressed matrix automatically conjugates the
/// dressing phases, so this is identical to stripping at `B`, conjugating the
/// bare kernel, and re-dressing at `−B`. The spin rotation `I` is real and
/// commutes with the (diagonal, real) position operators, hence
/// `η(∇A) = −∇(η(A))` holds exactly.
pub fn time_reversal(a: &Operator, spin: SpinStructure) -> Result<Operator> {
    let conj = a.matrix.mapv(|z| z.conj());
    let m = match spin {
        SpinStructure::Spinless => conj,
        SpinStructure::SpinHalf => {
            let rot = spin_rotation(a)?;
            let rot_inv = rot.t().to_owned(); // real orthogonal: I⁻¹ = Iᵀ
            matmul3(&rot_inv, &conj, &rot)
        }
    };
    Ok(Operator {
        lattice: a.lattice.clone(),
        field: a.field.negated(),
        matrix: m,
    })
}

/// Block-diagonal `iσ_y` on each (orbital, spin) pair of every cell.
fn spin_rotation(a: &Operator) -> Result<CMatrix> {
    let l = a.lattice.internal_dim();
    if l % 2 != 0 {
        return Err(Error::Geometry(format!(
            "spin-half time reversal needs an even internal dimension, got {l}"
        )));
    }
    let n = a.dim();
    let mut rot = CMatrix::zeros((n, n));
    for cell in a.lattice.iter_cells() {
        for pair in 0..l / 2 {
            let up = a.lattice.dof(cell, 2 * pair);
            let dn = a.lattice.dof(cell, 2 * pair + 1);
            rot[[up, dn]] = C64::new(1.0, 0.0);
            rot[[dn, up]] = C64::new(-1.0, 0.0);
        }
    }
    Ok(rot)
}
