//! Finite-alphabet laws, information measures, auxiliary search and
//! typical sets.

pub mod format;
pub mod law;
pub mod measures;
pub mod search;
pub mod typical;

pub use format::{parse_law, write_gp_law, write_wz_law, LawFile};
pub use law::{ConditionalLaw, GpChannel, GpLaw, JointLaw, JointTable, Var, WzLaw, WzSource};
pub use measures::{binary_entropy, entropy, gp_objective, info_measures, wz_objective, InfoMeasures, WzObjective};
pub use search::{search_gp, search_wz, GpOptimum, GridSpec, WzOptimum};
pub use typical::{enumerate_conditional_typical, is_jointly_typical, TypicalSet, TypicalitySpec};
