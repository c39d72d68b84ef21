//! Generation and evaluation of assistive signals — perturbations, patches,
//! and 3D textures optimized to raise a classifier's confidence in the
//! correct class — together with their deceptive (adversarial) counterparts.
//!
//! The crate is organized around a small set of numeric primitives
//! ([`image`], [`prob`]), a differentiable-classifier contract with a
//! from-scratch reference CNN ([`classifiers`]), 2D signal generators
//! ([`signals2d`]), a batched differentiable texture renderer ([`renderer`]),
//! 3D texture/patch optimizers ([`signals3d`]), an evaluation harness
//! ([`eval`]), and a config-driven experiment runner ([`experiment`]).

pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod image;
pub mod prob;
pub mod renderer;
pub mod rng;
pub mod signals2d;
pub mod signals3d;
pub mod synth;

pub use dataset::LabeledDataset;
pub use error::{Error, Result};
pub use image::{clip_unit, project_linf, Image, PixelGrad};
pub use prob::{argmax_label, cross_entropy, Direction, LossSpec, OptimConfig, ProbVector};
pub use rng::SeedTree;
