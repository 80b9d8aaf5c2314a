pub mod calibrate;
pub mod montecarlo;
pub mod parse;
pub mod predict;
pub mod validate;
