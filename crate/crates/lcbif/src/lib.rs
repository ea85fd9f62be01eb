pub mod classify;
pub mod coeff_field;
pub mod oracle;
pub mod poly;
pub mod reduction;
pub mod sh_core;
pub mod sh_product;
pub mod spectrum;
pub mod symmetry;
pub mod verify;
