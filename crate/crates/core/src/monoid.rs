//! The contract shared by every schema facet.

/// Raised when two facets built under different parameters are combined.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("cannot merge {facet}: {detail}")]
pub struct MergeError {
    pub facet: &'static str,
    pub detail: String,
}

impl MergeError {
    pub fn new(facet: &'static str, detail: impl Into<String>) -> MergeError {
        MergeError { facet, detail: detail.into() }
    }
}

/// A mergeable summary with an identity element.
///
/// `combine` must be commutative and associative. Facets whose parameters
/// are fixed at construction (sketch sizes, reservoir capacity) reject
/// combination with a differently-parameterized instance.
pub trait Monoid: Clone {
    /// The identity element carrying the same parameters as `self`.
    fn identity_like(&self) -> Self;

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError>;

    fn combine(&self, other: &Self) -> Result<Self, MergeError> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }
}

/// Merges an optional facet; both sides must agree on whether it is enabled.
pub(crate) fn merge_optional<F: Monoid>(
    into: &mut Option<F>,
    other: &Option<F>,
    name: &'static str,
) -> Result<(), MergeError> {
    match (into.as_mut(), other) {
        (Some(a), Some(b)) => a.merge_from(b),
        (None, None) => Ok(()),
        _ => Err(MergeError::new(name, "facet enabled on only one side")),
    }
}
