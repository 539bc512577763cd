//! Numerical toolkit for reaction-diffusion problems on thin domains around spheres.
//!
//! * [`geometry`]: projection onto `S^{n-1}(r)`, the squeeze map, `J_0`, `S_0`, shell
//!   quadrature and the lift of functions from the sphere to the shell.
//! * [`spectral`]: the weighted limit operator `A_μ` on the circle and its spectrum.
//! * [`gap`]: exact sphere spectra and the resolvent-interval certificate for `A_μ`.
//! * [`thin`]: the Neumann Laplacian on the squeezed annulus `Ω_ε` and its dynamics.
//! * [`manifold`]: Lyapunov–Perron evaluation of inertial-manifold graphs and the
//!   reduced vector field.

pub mod fourier;
pub mod gap;
pub mod geometry;
pub mod linalg;
pub mod manifold;
pub mod nonlinearity;
pub mod spectral;
pub mod thin;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
