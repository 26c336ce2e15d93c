//! Fictitious-play coordination: normal-form games, classic and EKF-based
//! fictitious play, and a two-UAV encounter simulator with JSONL traces.

pub mod game;
pub mod learning;
pub mod sim;
pub mod trace;
