//! Experiment pipelines (CSV/JSON-emitting) driven by the CLI.
