//! Generative constructions: cotangent lifts, desingularization, folded
//! products, averaging, mapping tori and the 4-dimensional existence
//! construction, plus origami template checks.

pub mod averaging;
pub mod build4d;
pub mod delzant;
pub mod desing;
pub mod lifts;
pub mod mapping_torus;
pub mod product;

pub use averaging::{average_invariant_function, Averaged, AveragingReport, PointMap};
pub use build4d::{build_b_integrable_4d, check_system, Build4dParams, Build4dReport, Built4d, Polydisk};
pub use delzant::{delzant_check, parse_template, DelzantReport, OrigamiTemplate};
pub use desing::{desingularize, desingularize_system, smoothed_log, smoothed_log_derivative};
pub use lifts::{folded_cotangent_lift, folded_cotangent_lift_unit, modular_period, twisted_b_cotangent_lift};
pub use mapping_torus::{exceptional_orbits, obstruction_report, ExceptionalPoint, MappingTorus, ObstructionReport, Verdict};
pub use product::{product_with_folded_surface, FoldedSurface};
