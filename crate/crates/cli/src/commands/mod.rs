pub mod biasvar;
pub mod bounds;
pub mod selftest;
pub mod solve;
