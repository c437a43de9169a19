pub mod claims;
pub mod distortion;
pub mod instanceopt;
pub mod linprog;
pub mod metricspace;
pub mod profile;
pub mod rules;
pub mod tournament;
