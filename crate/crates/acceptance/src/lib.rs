//! Acceptance suite for `casimir-work`; see `tests/acceptance.rs`.
