//! Golden-table reproduction against the bundled published values, and the
//! ledger of conflicting published values.

mod ledger;
mod reference;
mod reproduce;

pub use ledger::{inconsistency_ledger, Inconsistency};
pub use reference::{RefValue, ReferenceCell, ReferenceTable, TABLE_IDS};
pub use reproduce::{
    compare_table, model_cells, reproduce, CellComparison, ComparisonReport, ModelValue,
};
