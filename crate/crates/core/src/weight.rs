use std::fmt::{Debug, Display};

use num_traits::{ToPrimitive, Unsigned};

/// Unsigned integer type used for weights, list sums and result counts.
///
/// Weights are products of list sums, so they grow like `|adom|^k` for a
/// query with `k` free variables. `u64` is enough for most workloads; `u128`
/// or `BigUint` remove the overflow concern at some speed cost.
pub trait Weight: Unsigned + ToPrimitive + Clone + Debug + Display + Send + Sync + 'static {}

impl<T> Weight for T where
    T: Unsigned + ToPrimitive + Clone + Debug + Display + Send + Sync + 'static
{
}

/// Product of the given values; `1` for an empty iterator.
pub(crate) fn product<W: Weight>(values: impl IntoIterator<Item = W>) -> W {
    values.into_iter().fold(W::one(), |acc, w| acc * w)
}
