pub mod apply;
pub mod checks;
pub mod coercivity;
pub mod galerkin;
pub mod quadrature;
pub mod testfn;

pub use apply::{apply_diffusion, apply_fokker_planck, apply_kolmogorov, apply_transport};
pub use checks::{
    bs_identity_check, check_conjugation, check_invariance, check_symmetry_split, conjugation_defect, mu_kappa, BsDefects,
    SplitDefects,
};
pub use coercivity::{coercivity_constants, CoercivityConstants};
pub use galerkin::{estimate_gap_2d, estimate_gap_2d_dense, gap_refinement, GapEstimate, GapRefinement};
pub use quadrature::{ProductQuadrature, Weight};
pub use testfn::{Support, TestFunction};
