//! Linear solvers: tridiagonal elimination, sparse storage, AMG-preconditioned CG.

pub mod amg;
pub mod csr;
pub mod pcg;
pub mod tridiag;
