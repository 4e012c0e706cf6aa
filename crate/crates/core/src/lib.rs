pub mod adversary;
pub mod channel;
pub mod config;
pub mod engine;
pub mod harness;
pub mod ids;
pub mod math;
pub mod poset;
pub mod protocols;
pub mod verify;
