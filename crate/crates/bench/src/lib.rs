// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Benchmarks live in `benches/`; run them with `cargo bench -p jumpgrad-bench`.
