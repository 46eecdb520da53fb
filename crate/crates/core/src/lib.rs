//! Distributed coverage-hole prevention for camera-equipped quadcopters.

pub mod barrier;
pub mod config;
pub mod controller;
pub mod coverage;
pub mod geometry;
pub mod output;
pub mod qp;
pub mod sim;
