pub mod appraisal;
pub mod catalog;
pub mod deliberation;
pub mod engine;
pub mod error;
pub mod logic;
pub mod memory;
pub mod perception;
pub mod planner;
