pub mod bilinear;
pub mod biometric;
pub mod counters;
pub mod cps;
pub mod encoding;
pub mod identity;
pub mod protocols;
pub mod registry;
pub mod secgames;
