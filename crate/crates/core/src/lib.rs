//! Revenue-optimal subsidy programs for platforms that rent out resources
//! owners would otherwise use themselves.
//!
//! Owners split one unit of resource between self-use `x` and sharing
//! `s = 1 - x`, earning base pay `p s` plus a program bonus `W(s)`. The
//! platform keeps `q` per shared unit. Modules cover a single platform
//! ([`monopoly`], [`mtlp`]), two competitors ([`duopoly`]) and brute-force
//! reference solvers ([`oracle`]).

pub mod duopoly;
pub mod error;
pub mod monopoly;
pub mod mtlp;
pub mod numeric;
pub mod oracle;
pub mod programs;
pub mod utility;

pub use error::{Error, Result};
pub use programs::{llp, PlatformConfig, ScheduleDoc, SignUpBonus, SubsidySchedule, Violation};
pub use utility::{OwnerClass, SelfUseUtility, CASE_STUDY_GAMMA};
