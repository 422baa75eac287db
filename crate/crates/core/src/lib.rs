//! Numerical laboratory for twisted shifts `u f(v)` on the irrational
//! rotation algebra.
//!
//! The modules follow the computation: functions on the circle
//! ([`circlefn`]), rotation numbers and their convergents ([`diophantine`]),
//! Fuglede–Kadison determinants ([`fkdet`]), Birkhoff products along the
//! rotation ([`ergodic`]), finite clock-and-shift models ([`matrixmodel`]) and
//! the decision procedures built on top of them ([`classify`]).

pub mod circlefn;
pub mod classify;
pub mod diophantine;
pub mod ergodic;
pub mod fkdet;
pub mod matrixmodel;
pub mod numeric;
