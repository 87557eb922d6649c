//! Reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod adm1_oracle;
pub mod rosenbrock;
