//! Experiment pipelines built on the solvers: color transfer, rigid
//! point-cloud registration, and runtime scaling.

pub mod cloud_io;
pub mod color;
pub mod kmeans;
pub mod ppm;
pub mod procrustes;
pub mod registration;
pub mod scaling;
pub mod synthetic;

pub use cloud_io::{read_xyz, write_xyz};
pub use color::{barycentric_projection, color_transfer, color_transfer_instance, recolor_pixels, ColorTransferResult};
pub use kmeans::{kmeans_quantize, ColorHistogram};
pub use ppm::{read_ppm, write_ppm, PixelImage};
pub use procrustes::{fit_rigid, RigidTransform};
pub use registration::{register_point_clouds, RegistrationConfig, RegistrationRecord, RegistrationResult};
pub use scaling::{bench_scaling, loglog_slope, ScalingConfig, ScalingPoint, ScalingReport};
