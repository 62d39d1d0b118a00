mod corpus;
mod lcs;
mod losscheck;
mod retrieval;

pub use corpus::{pairs, split};
pub use lcs::lcs_score;
pub use losscheck::loss_check;
pub use retrieval::{compare, eval, index, search};

use std::fmt::Display;

fn report_diagnostics<D: Display>(diagnostics: &[D]) {
    for d in diagnostics {
        eprintln!("warning: {d}");
    }
}
