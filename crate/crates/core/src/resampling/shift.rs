/// A sample re-expressed in another pixel's integration domain.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftResult<S> {
    pub sample: S,
    /// `|dy'/dy|` of the mapping.
    pub jacobian: f64,
    /// Invalid shifts contribute zero resampling weight.
    pub valid: bool,
}

impl<S> ShiftResult<S> {
    pub fn identity(sample: S) -> Self {
        ShiftResult {
            sample,
            jacobian: 1.0,
            valid: true,
        }
    }

    pub fn invalid(sample: S) -> Self {
        ShiftResult {
            sample,
            jacobian: 0.0,
            valid: false,
        }
    }
}
