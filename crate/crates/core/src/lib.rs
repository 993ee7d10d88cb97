pub mod bgn;
pub mod dlog;
pub mod field;
pub mod gc;
pub mod graph;
pub mod ot;
pub mod pairing;
pub mod protocol;
pub mod prp;
