// SPDX-License-Identifier: Apache-2.0

//! Benchmark harness for LLM-generated HLS designs.

pub mod corpus;
pub mod dse;
pub mod engine;
pub mod gateway;
pub mod metrics;
pub mod reports;
pub mod toolchain;
