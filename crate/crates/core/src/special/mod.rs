//! Special functions: incomplete gamma, the generalized Q-function, the DCSK
//! conditional BER kernel and the sum-of-gammas series.

mod gamma_sum;
mod incgamma;
mod qfunc;

pub use gamma_sum::{
    gamma_sum_eval, gamma_sum_pdf, gamma_sum_pdf_with, gamma_sum_series, has_equal_scales, GammaSumSeries,
    DEFAULT_MAX_TERMS,
};
pub use incgamma::{gamma_p, gamma_q, ln_gamma};
pub use qfunc::{dcsk_conditional_ber, q_generalized, DcskKernel, GeneralizedQ};
