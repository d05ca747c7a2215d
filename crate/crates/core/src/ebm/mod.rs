//! The additive model: training, scoring, editing and persistence.

mod contrib;
mod interactions;
mod io;
mod model;
mod train;

pub use contrib::ContribMatrix;
pub use interactions::{pair_strengths, rank_pairs, PAIR_GRID};
pub use io::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use model::{EbmModel, Term, TermKind};
pub use train::{fit_ebm, fit_ebm_logged, BagLog, StageLog, TrainConfig, TrainLog};
