//! The groups shipped in `configs/`, as disk centres and radii.

use crate::error::Result;
use crate::schottky::SchottkyData;

/// `(name, centres, radii)`; disk `a` pairs with disk `a + r`.
pub const SHIPPED: [(&str, &[f64], &[f64]); 3] = [
    ("symmetric_r2", &[-1.5, -0.4, 0.4, 1.5], &[0.45, 0.3, 0.3, 0.45]),
    ("asymmetric_r2", &[-1.2, -0.2, 0.7, 1.5], &[0.45, 0.4, 0.4, 0.3]),
    (
        "r3",
        &[-2.2, -1.2, -0.35, 0.5, 1.3, 2.3],
        &[0.3, 0.35, 0.3, 0.25, 0.35, 0.3],
    ),
];

/// Shipped group by name.
pub fn shipped(name: &str) -> Option<Result<SchottkyData>> {
    SHIPPED
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, c, r)| SchottkyData::from_disks(c, r))
}
