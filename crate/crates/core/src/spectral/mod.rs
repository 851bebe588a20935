//! Eigendecomposition, the Marcenko–Pastur law and participation diagnostics.

mod eigen;
mod fit;
mod ipr;
mod mp;

pub use eigen::{eigendecompose, eigendecompose_symmetric, symmetric_eigenvalues, EigenSystem};
pub use fit::{fit_mp, MpFit, MIN_NOISE_EIGENVALUES};
pub use ipr::{
    grmt_participation_baseline, ipr, participation, participation_series, relative_ipr,
    relative_ipr_profile, relative_ipr_series, ParticipationPoint, RelativeIprPoint,
};
pub use mp::{mp_band_edges, mp_cdf, mp_density};
