pub mod comparison;
pub mod eigen;
pub mod error;
pub mod form;
pub mod galerkin;
pub mod ode;
pub mod oracle;
pub mod poly;
pub mod problem;
pub mod quad;
pub mod shooting;
pub mod winding;
