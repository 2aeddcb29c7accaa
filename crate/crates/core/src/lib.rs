//! Energy-aware orchestration of cell-free massive MIMO over an optical
//! fronthaul: channel simulation, power modeling, a small conic solver and
//! the joint radio/optical/cloud optimizers built on top of them.

pub mod conic;
pub mod harness;
pub mod linalg;
pub mod orchestrate;
pub mod powermodel;
pub mod sysmodel;
