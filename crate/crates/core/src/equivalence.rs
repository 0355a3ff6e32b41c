//! Gram equality and the constructive unitary equivalence of state families:
//! two index-aligned families are related by a unitary exactly when their
//! Gram matrices agree.

use crate::error::{Error, Result};
use crate::matrixcore::{
    factor_from_eigen, hermitian_eig, numerical_rank, orthonormal_extension, pad, polar_isometry, unitarity_defect,
    CMatrix, CVector, ToleranceConfig,
};
use crate::states::{gram, GramMatrix, PureState, StateFamily};

/// Largest `‖U aᵢ − bᵢ‖` a [`LinkingUnitary`] may have.
pub const LINK_RESIDUAL_BOUND: f64 = 1e-8;

/// Unitary on `C^D`, `D = max(dim A, dim B)`, carrying each zero-padded `aᵢ`
/// to the zero-padded `bᵢ`.
#[derive(Debug, Clone)]
pub struct LinkingUnitary {
    matrix: CMatrix,
    residual: f64,
}

impl LinkingUnitary {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn embed_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `maxᵢ ‖U aᵢ − bᵢ‖` measured at construction.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Applies the unitary to a state padded with zeros to `embed_dim`.
    pub fn apply(&self, state: &PureState) -> Result<CVector> {
        self.apply_vector(state.amplitudes())
    }

    pub fn apply_vector(&self, v: &CVector) -> Result<CVector> {
        if v.len() > self.embed_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.embed_dim(),
                found: v.len(),
            });
        }
        Ok(&self.matrix * pad(v, self.embed_dim()))
    }

    pub fn inverse(&self) -> LinkingUnitary {
        LinkingUnitary {
            matrix: self.matrix.adjoint(),
            residual: self.residual,
        }
    }
}

/// `max |G1ᵢⱼ − G2ᵢⱼ| ≤ eps_gram`.
pub fn grams_equal(g1: &GramMatrix, g2: &GramMatrix, tol: &ToleranceConfig) -> Result<bool> {
    if g1.size() != g2.size() {
        return Err(Error::SizeMismatch {
            left: g1.size(),
            right: g2.size(),
        });
    }
    Ok(g1.max_deviation(g2) <= tol.eps_gram)
}

fn padded_columns(f: &StateFamily, dim: usize) -> CMatrix {
    let cols = f.columns();
    let mut out = CMatrix::zeros(dim, cols.ncols());
    out.rows_mut(0, cols.nrows()).copy_from(&cols);
    out
}

/// Builds a unitary `U` with `U aᵢ = bᵢ` for every `i`.
///
/// The common Gram matrix is factored as `G = RᴴR` (`R` is `r × n`, `r` the
/// numerical rank). Each family is then written as `P·R` with `P` a
/// `D × r` isometry (least squares, cleaned to the nearest isometry), and
/// `U = Q_B Q_Aᴴ` where `Q_A`, `Q_B` are the orthonormal extensions of `P_A`,
/// `P_B`. Off `span(A)` the map is fixed by the deterministic extension order.
pub fn unitary_linking(a: &StateFamily, b: &StateFamily, tol: &ToleranceConfig) -> Result<LinkingUnitary> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let ga = gram(a);
    let gb = gram(b);
    if !grams_equal(&ga, &gb, tol)? {
        return Err(Error::GramMismatch {
            max_deviation: ga.max_deviation(&gb),
        });
    }

    let eig_a = hermitian_eig(ga.entries(), tol)?;
    let eig_b = hermitian_eig(gb.entries(), tol)?;
    let (rank_a, rank_b) = (numerical_rank(&eig_a, tol), numerical_rank(&eig_b, tol));
    if rank_a != rank_b {
        return Err(Error::NumericalRankInconsistency {
            source_rank: rank_a,
            target_rank: rank_b,
        });
    }

    let dim = a.dim().max(b.dim());
    let coords = factor_from_eigen(&eig_a, tol)?;
    // R R† = Λ_r, so the least-squares solution of X = P R is X R† Λ_r⁻¹.
    let mut pseudo = coords.adjoint();
    for k in 0..rank_a {
        pseudo.column_mut(k).unscale_mut(eig_a.values[k]);
    }
    let pa = polar_isometry(&(padded_columns(a, dim) * &pseudo));
    let pb = polar_isometry(&(padded_columns(b, dim) * &pseudo));

    let qa = orthonormal_extension(&pa)?;
    let qb = orthonormal_extension(&pb)?;
    let matrix = qb * qa.adjoint();

    let residual = max_residual(&matrix, a, b, dim);
    if residual > LINK_RESIDUAL_BOUND {
        return Err(Error::LinkResidual { residual });
    }
    Ok(LinkingUnitary { matrix, residual })
}

fn max_residual(u: &CMatrix, a: &StateFamily, b: &StateFamily, dim: usize) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (u * pad(x.amplitudes(), dim) - pad(y.amplitudes(), dim)).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkReport {
    pub unitarity_defect: f64,
    pub max_residual: f64,
}

/// Measures `‖U†U − I‖` and `maxᵢ ‖U aᵢ − bᵢ‖`; large values are reported,
/// not rejected.
pub fn verify_linking(u: &CMatrix, a: &StateFamily, b: &StateFamily) -> Result<LinkReport> {
    if u.nrows() != u.ncols() {
        return Err(Error::NotSquare {
            rows: u.nrows(),
            cols: u.ncols(),
        });
    }
    let needed = a.dim().max(b.dim());
    if u.nrows() < needed {
        return Err(Error::DimensionMismatch {
            expected: needed,
            found: u.nrows(),
        });
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(LinkReport {
        unitarity_defect: unitarity_defect(u),
        max_residual: max_residual(u, a, b, u.nrows()),
    })
}
