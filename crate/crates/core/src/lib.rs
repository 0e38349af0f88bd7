//! Flexible job shop scheduling with zone-restricted transbots and a
//! handoff point between zones.

pub mod bench;
pub mod engine;
pub mod formulations;
pub mod gantt;
pub mod io;
pub mod model;
pub mod routing;
pub mod verify;
