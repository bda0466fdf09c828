pub mod group;
pub mod quadrature;
pub mod special;
pub mod heat_kernel;
pub mod nonlinearity;
pub mod solver;
pub mod criteria;
