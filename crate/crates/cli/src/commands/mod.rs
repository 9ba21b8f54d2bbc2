pub mod collapse;
pub mod frames;
pub mod localize;
pub mod scales;
pub mod unravel;
