//! Database schema catalog: tables, columns, foreign keys and descriptions.
//!
//! A catalog is loaded from a JSON schema document, validated once, and is
//! immutable afterwards. Table and column ids are dense integers assigned in
//! document order, so every downstream index can use them for tie-breaking
//! and direct vector addressing.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TableId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnId(pub u32);

impl TableId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ColumnId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

impl fmt::Display for ColumnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read schema document {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed schema document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("empty catalog")]
    Empty,
    #[error("tables[{index}]: duplicate table name '{name}'")]
    DuplicateTable { index: usize, name: String },
    #[error("tables[{table_index}] '{table}': table has no columns")]
    NoColumns { table_index: usize, table: String },
    #[error("tables[{table_index}].columns[{column_index}]: duplicate column name '{name}' in table '{table}'")]
    DuplicateColumn {
        table_index: usize,
        column_index: usize,
        table: String,
        name: String,
    },
    #[error("tables[{table_index}].foreign_keys[{fk_index}] ({table}.{column} -> {ref_table}.{ref_column}): {reason}")]
    BadForeignKey {
        table_index: usize,
        fk_index: usize,
        table: String,
        column: String,
        ref_table: String,
        ref_column: String,
        reason: &'static str,
    },
}

/// On-disk schema document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaDocument {
    pub tables: Vec<TableDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub columns: Vec<ColumnDoc>,
    #[serde(default)]
    pub foreign_keys: Vec<ForeignKeyDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub primary_key: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKeyDoc {
    pub column: String,
    pub ref_table: String,
    pub ref_column: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub id: ColumnId,
    pub table: TableId,
    pub name: String,
    /// Empty when the document carries no description.
    pub description: String,
    pub is_primary_key: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ForeignKey {
    pub from_table: TableId,
    pub from_column: ColumnId,
    pub to_table: TableId,
    pub to_column: ColumnId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub id: TableId,
    pub name: String,
    pub description: String,
    pub columns: Vec<Column>,
    pub foreign_keys: Vec<ForeignKey>,
}

impl Table {
    pub fn column_named(&self, name: &str) -> Option<&Column> {
        self.columns
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogStats {
    pub table_count: usize,
    pub column_count: usize,
    pub fk_per_table: Vec<usize>,
    pub columns_per_table: Vec<usize>,
    pub median_fk_per_table: f64,
    pub stddev_columns_per_table: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaCatalog {
    tables: Vec<Table>,
    name_index: HashMap<String, TableId>,
    /// column id -> (owning table, position within table)
    column_slots: Vec<(TableId, usize)>,
}

fn fold_name(name: &str) -> String {
    name.to_ascii_lowercase()
}

impl SchemaCatalog {
    /// Parses and validates a JSON schema document.
    pub fn from_json(source: &str) -> Result<Self, CatalogError> {
        let doc: SchemaDocument = serde_json::from_str(source)?;
        Self::from_document(&doc)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_document(doc: &SchemaDocument) -> Result<Self, CatalogError> {
        if doc.tables.is_empty() {
            return Err(CatalogError::Empty);
        }

        let mut name_index = HashMap::with_capacity(doc.tables.len());
        let mut tables = Vec::with_capacity(doc.tables.len());
        let mut column_slots = Vec::new();

        for (ti, tdoc) in doc.tables.iter().enumerate() {
            let tid = TableId(ti as u32);
            if name_index.insert(fold_name(&tdoc.name), tid).is_some() {
                return Err(CatalogError::DuplicateTable {
                    index: ti,
                    name: tdoc.name.clone(),
                });
            }
            if tdoc.columns.is_empty() {
                return Err(CatalogError::NoColumns {
                    table_index: ti,
                    table: tdoc.name.clone(),
                });
            }
            let mut seen = HashSet::with_capacity(tdoc.columns.len());
            let mut columns = Vec::with_capacity(tdoc.columns.len());
            for (ci, cdoc) in tdoc.columns.iter().enumerate() {
                if !seen.insert(fold_name(&cdoc.name)) {
                    return Err(CatalogError::DuplicateColumn {
                        table_index: ti,
                        column_index: ci,
                        table: tdoc.name.clone(),
                        name: cdoc.name.clone(),
                    });
                }
                let id = ColumnId(column_slots.len() as u32);
                column_slots.push((tid, ci));
                columns.push(Column {
                    id,
                    table: tid,
                    name: cdoc.name.clone(),
                    description: cdoc.description.clone().unwrap_or_default(),
                    is_primary_key: cdoc.primary_key,
                });
            }
            tables.push(Table {
                id: tid,
                name: tdoc.name.clone(),
                description: tdoc.description.clone().unwrap_or_default(),
                columns,
                foreign_keys: Vec::new(),
            });
        }

        // Foreign keys may point forward in the document, so they resolve in a second pass.
        for (ti, tdoc) in doc.tables.iter().enumerate() {
            let mut fks = Vec::with_capacity(tdoc.foreign_keys.len());
            for (fi, fk) in tdoc.foreign_keys.iter().enumerate() {
                let bad = |reason| CatalogError::BadForeignKey {
                    table_index: ti,
                    fk_index: fi,
                    table: tdoc.name.clone(),
                    column: fk.column.clone(),
                    ref_table: fk.ref_table.clone(),
                    ref_column: fk.ref_column.clone(),
                    reason,
                };
                let from = tables[ti]
                    .column_named(&fk.column)
                    .ok_or_else(|| bad("source column does not exist"))?
                    .id;
                let to_table = *name_index
                    .get(&fold_name(&fk.ref_table))
                    .ok_or_else(|| bad("referenced table does not exist"))?;
                let to = tables[to_table.index()]
                    .column_named(&fk.ref_column)
                    .ok_or_else(|| bad("referenced column does not exist"))?
                    .id;
                if from == to {
                    return Err(bad("foreign key references its own column"));
                }
                fks.push(ForeignKey {
                    from_table: TableId(ti as u32),
                    from_column: from,
                    to_table,
                    to_column: to,
                });
            }
            tables[ti].foreign_keys = fks;
        }

        Ok(Self {
            tables,
            name_index,
            column_slots,
        })
    }

    /// Renders the catalog back into its document form.
    pub fn to_document(&self) -> SchemaDocument {
        let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
        SchemaDocument {
            tables: self
                .tables
                .iter()
                .map(|t| TableDoc {
                    name: t.name.clone(),
                    description: opt(&t.description),
                    columns: t
                        .columns
                        .iter()
                        .map(|c| ColumnDoc {
                            name: c.name.clone(),
                            description: opt(&c.description),
                            primary_key: c.is_primary_key,
                        })
                        .collect(),
                    foreign_keys: t
                        .foreign_keys
                        .iter()
                        .map(|fk| ForeignKeyDoc {
                            column: self.column(fk.from_column).name.clone(),
                            ref_table: self.table(fk.to_table).name.clone(),
                            ref_column: self.column(fk.to_column).name.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("schema document serializes")
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    pub fn column_count(&self) -> usize {
        self.column_slots.len()
    }

    pub fn table(&self, id: TableId) -> &Table {
        &self.tables[id.index()]
    }

    pub fn column(&self, id: ColumnId) -> &Column {
        let (t, pos) = self.column_slots[id.index()];
        &self.tables[t.index()].columns[pos]
    }

    pub fn table_ids(&self) -> impl Iterator<Item = TableId> + '_ {
        self.tables.iter().map(|t| t.id)
    }

    pub fn columns(&self) -> impl Iterator<Item = &Column> + '_ {
        self.tables.iter().flat_map(|t| t.columns.iter())
    }

    pub fn foreign_keys(&self) -> impl Iterator<Item = &ForeignKey> + '_ {
        self.tables.iter().flat_map(|t| t.foreign_keys.iter())
    }

    /// Case-insensitive exact-name lookup.
    pub fn lookup_table(&self, name: &str) -> Option<TableId> {
        self.name_index.get(&fold_name(name)).copied()
    }

    pub fn lookup_column(&self, table: TableId, name: &str) -> Option<ColumnId> {
        self.table(table).column_named(name).map(|c| c.id)
    }

    pub fn stats(&self) -> CatalogStats {
        let fk_per_table: Vec<usize> = self.tables.iter().map(|t| t.foreign_keys.len()).collect();
        let columns_per_table: Vec<usize> = self.tables.iter().map(|t| t.columns.len()).collect();
        let n = columns_per_table.len() as f64;
        let mean = columns_per_table.iter().sum::<usize>() as f64 / n;
        let var = columns_per_table
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        CatalogStats {
            table_count: self.tables.len(),
            column_count: self.column_count(),
            median_fk_per_table: lower_median(&fk_per_table),
            stddev_columns_per_table: var.sqrt(),
            fk_per_table,
            columns_per_table,
        }
    }
}

/// Lower median: element ⌊(n−1)/2⌋ of the sorted values; 0 for an empty slice.
pub fn lower_median(values: &[usize]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted[(sorted.len() - 1) / 2] as f64
}
