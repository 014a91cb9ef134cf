//! Spherical charts, sphere calculus, quadrature on `S^{d-1}` and Lie brackets.

pub mod calculus;
pub mod chart;
pub mod lie;
pub mod quadrature;

pub use calculus::{
    laplace_beltrami, laplace_beltrami_by_fields, laplace_beltrami_from_jet, laplace_beltrami_local,
    local_derivatives_fd, sphere_grad_linear, AmbientFunction, Differentiation, LocalDerivatives,
    SphereFunction,
};
pub use chart::{
    angles_from_point, chart_jacobian, embed_angles, log_density_derivative, metric_factor, push_forward,
    sphere_grad_local_coeffs, unit_tangent, SphericalAngles, UnitVector, POLE_TOLERANCE,
};
pub use lie::{hormander_rank, lie_bracket, HormanderReport};
pub use quadrature::{gauss_moment, random_unit_vector, sphere_quadrature, Estimate, RuleKind, SphereQuadrature};
