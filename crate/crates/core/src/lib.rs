pub mod lp;
pub mod bilevel;
pub mod model;
pub mod games;
pub mod oracle;
pub mod io;
pub mod sweep;
