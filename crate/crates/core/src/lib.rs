pub mod carleson;
pub mod functionals;
pub mod growth;
pub mod modulus;
pub mod point;
pub mod quad;
pub mod sphere;
pub mod suites;
pub mod qcmaps;
