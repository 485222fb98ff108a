"""Data collection, training orchestration, online synthesis and benchmarking."""
