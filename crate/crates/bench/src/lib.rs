//! Benchmark crate; the measurements live in `benches/pipeline.rs`.
