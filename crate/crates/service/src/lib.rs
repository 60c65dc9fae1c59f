//! HTTP build service: accepts container configurations, drives them through
//! the image pipeline as asynchronous jobs, and serves the resulting images.

pub mod config;
pub mod http;
pub mod job;
pub mod service;

pub use config::{BackendConfig, ServiceConfig};
pub use http::{router, serve, spawn};
pub use job::{is_legal_sequence, BuildJob, JobState, JobView, Transition};
pub use service::{BuildService, ServiceError};
