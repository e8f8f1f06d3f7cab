//! Quantized variational inference.
//!
//! Deterministic, variance-free ELBO and gradient estimation for mean-field
//! Gaussian variational inference, built on optimal Voronoi quantization of
//! the standard normal base distribution, with Richardson extrapolation for
//! bias reduction and Monte Carlo / quasi-Monte Carlo / randomized QMC
//! baselines for comparison.
//!
//! The crate is organized around the pipeline:
//!
//! - [`grid`]: build, store, transform, and integrate against optimal
//!   quantizers of the base distribution.
//! - [`sampling`]: MC, Sobol QMC, and randomized QMC base samplers.
//! - [`difftape`]: reverse-mode automatic differentiation.
//! - [`varfamily`]: the mean-field Gaussian family and its
//!   reparametrization map.
//! - [`models`]: Bayesian linear regression, a hierarchical Poisson GLM,
//!   and a Bayesian neural network, as differentiable log-joint densities.
//! - [`estimators`]: ELBO and gradient estimators over all schemes.
//! - [`optimize`]: Adam-driven fitting, traces, and benchmarking.
//! - [`cli`]: the command-line surface.

pub mod difftape;
pub mod grid;
pub mod sampling;
pub mod varfamily;
