pub mod dd;
pub mod matrix;
pub mod schur;
pub mod model;
pub mod spectral;
pub mod bethe;
pub mod analysis;
pub mod verify;
pub mod io;
