//! Far-field constants, decay rates and endpoint behaviour of `b_β`.

mod analysis;
mod shift;
mod sweep;

pub use analysis::{decay_bound, extract_bbeta, fit_decay, linear_fit, DecayFit, FarField, DECAY_SLACK};
pub use shift::{
    compute_shift_constants, supersub_construct, tau_formulas, Anchor, ShiftConstants, ShiftConstruction, TauChoice,
    TauRule,
};
pub use sweep::{
    sweep_endpoints, Endpoint, SweepOptions, SweepPoint, SweepRecord, SweepVerdict, BAND_WIDTH, DEFAULT_EPSILONS,
};
