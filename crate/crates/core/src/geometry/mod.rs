//! Charts, fields, singular 2-forms and their validation.

mod chart;
mod fields;
mod form;
mod validate;

pub use chart::{wrap01, wrap_half, Chart, Coord, CoordKind};
pub use fields::{OneFormField, ScalarField, SmoothFn, TwoFormField, FD_STEP};
pub use form::{FormKind, SingularForm};
pub use validate::{
    differential, extension_step, frame_coefficients, kernel_of_form, normalize_point, null_line, validate_form,
    validate_form_with, ValidationReport, ValidationTolerances, EXTENSION_REL, KERNEL_REL,
};
