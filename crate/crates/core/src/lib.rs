//! Colorings of the integers without monochromatic three-term progressions
//! whose common difference lies in a set that still meets every Bohr and
//! nil-Bohr neighborhood.
//!
//! The construction lives on the ℓ¹ torus: [`construction`] defines the sets
//! `S_m`, [`coloring`] the progression-blocking coloring, and [`bohr`] the
//! witness that `S_m` meets each Bohr set. [`projection`] pulls everything
//! back to ℤ along `n ↦ ({α₁n}, {α₂n}, …)`, and [`verify`] audits the result.

pub mod bohr;
pub mod circle;
pub mod coloring;
pub mod construction;
pub mod error;
pub mod genpoly;
pub mod l1;
pub mod projection;
pub mod verify;

pub use bohr::{build_witness, TorusBohrSet, WitnessReport};
pub use circle::{CircleValue, ComplexValue, GaussianResidue, DEFAULT_SLACK};
pub use coloring::{ColorGrid, ColorId, ObstructionRecord};
pub use construction::{
    is_member, sample, validate_params, EtaPolicy, MembershipCertificate, Params, ValidationReport,
};
pub use error::{Error, Result};
pub use genpoly::{NilBohrNbhd, SpecialGenPoly};
pub use l1::{Ambient, Index, SparsePoint};
pub use projection::{AlphaSchedule, Generator, IntegerSetReport, ScheduleSpec};
pub use verify::{AuditReport, Colorer, DiscrepancyReport, HitReport, IntegerColorer};
