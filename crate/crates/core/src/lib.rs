pub mod cms;
pub mod gen;
pub mod geometry;
pub mod graph;
pub mod ltl;
pub mod model;
pub mod rational;
pub mod regions;
pub mod run;
pub mod stats;
pub mod symbolic;
pub mod wsha;

pub use rational::Rational;
