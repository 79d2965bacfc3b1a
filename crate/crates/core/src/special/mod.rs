//! Special functions used by the applications.

pub mod hadeler;
pub mod lambert;
pub mod transfer;
pub mod zolotarev;

pub use hadeler::{delay_zeros, hadeler_curve, hadeler_zeros, taylor_disk, TaylorDiskBound};
pub use lambert::lambert_w;
pub use transfer::transfer_matrix;
pub use zolotarev::{zolotarev_invsqrt, RationalInvSqrt};
