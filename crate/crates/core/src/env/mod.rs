//! The three environments: paint-shop scheduling, peak-load management and
//! lost-sales inventory control.

pub mod inventory;
pub mod lms;
pub mod paintshop;
