pub mod bigreal;
pub mod diagnostics;
pub mod funcsuite;
pub mod orderlab;
pub mod schemes;
pub mod tables;
