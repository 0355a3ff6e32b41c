//! Seeded Haar and Ginibre sampling for sweeps and for the `--twist` option
//! of the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrixcore::{CMatrix, CVector, C64};
use crate::states::{MixedState, PureState, StateFamily};

pub type TrialRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize, label: &str) -> PureState {
    let v = CVector::from_fn(dim, |_, _| gaussian(rng));
    let norm = v.norm();
    PureState::from_unit_vector(label, v.unscale(norm))
}

/// Haar-random unitary (QR of a Ginibre matrix with the R-diagonal phases removed).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let qr = ginibre(rng, dim, dim).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let col = q.column(k) * phase;
        q.set_column(k, &col);
    }
    q
}

pub fn random_family<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize) -> StateFamily {
    let members = (0..n).map(|i| random_state(rng, dim, &format!("s{i}"))).collect();
    StateFamily::new(members).expect("random members share a dimension")
}

/// Random family whose pairwise overlaps all exceed `min_overlap` in modulus
/// (rejection sampling on the whole family).
pub fn random_nonorthogonal_family<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    dim: usize,
    min_overlap: f64,
) -> StateFamily {
    loop {
        let fam = random_family(rng, n, dim);
        let ok = (0..n).all(|i| ((i + 1)..n).all(|j| fam.member(i).inner(fam.member(j)).norm() > min_overlap));
        if ok {
            return fam;
        }
    }
}

/// Applies `u` to every member (dimensions must agree).
pub fn apply_unitary(u: &CMatrix, fam: &StateFamily) -> StateFamily {
    let members = fam
        .iter()
        .map(|s| {
            let v = u * s.amplitudes();
            let norm = v.norm();
            PureState::from_unit_vector(s.label(), v.unscale(norm))
        })
        .collect();
    StateFamily::new(members).expect("unitary image keeps dimension")
}

/// Multiplies each member by an independent random global phase.
pub fn random_phases<R: Rng + ?Sized>(rng: &mut R, fam: &StateFamily) -> StateFamily {
    let members = fam
        .iter()
        .map(|s| {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            PureState::from_unit_vector(s.label(), s.amplitudes() * C64::from_polar(1.0, theta))
        })
        .collect();
    StateFamily::new(members).expect("phases keep dimension")
}

/// Random density matrix of the given rank (trace-normalized `GG†`).
pub fn random_mixed<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> MixedState {
    let g = ginibre(rng, dim, rank.max(1));
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    MixedState::from_density_unchecked(rho.unscale(tr))
}
