use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::tokenizer::{tokenize_sql, SqlToken, TokenKind};
use super::SqlError;
use crate::catalog::{ColumnId, SchemaCatalog, TableId};

/// Tables and qualified columns a SQL statement touches.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevantSet {
    pub tables: BTreeSet<TableId>,
    pub columns: BTreeSet<(TableId, ColumnId)>,
}

impl RelevantSet {
    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Relevant set with tables only, used for manual overrides.
    pub fn from_tables(tables: impl IntoIterator<Item = TableId>) -> Self {
        Self {
            tables: tables.into_iter().collect(),
            columns: BTreeSet::new(),
        }
    }
}

fn fold(name: &str) -> String {
    name.to_ascii_lowercase()
}

/// What a name in a FROM clause binds to. `None` for CTEs, derived tables and
/// tables the catalog does not know.
type Binding = Option<TableId>;

struct Scanner<'a> {
    tokens: &'a [SqlToken],
    catalog: &'a SchemaCatalog,
    ctes: HashSet<String>,
    bindings: HashMap<String, Binding>,
    tables: BTreeSet<TableId>,
    /// Token positions consumed as table names or aliases.
    claimed: Vec<bool>,
}

impl<'a> Scanner<'a> {
    fn matching_paren(&self, open: usize) -> usize {
        let mut depth = 0usize;
        for (i, t) in self.tokens.iter().enumerate().skip(open) {
            if t.is_punct('(') {
                depth += 1;
            } else if t.is_punct(')') {
                depth -= 1;
                if depth == 0 {
                    return i;
                }
            }
        }
        self.tokens.len()
    }

    fn tok(&self, i: usize) -> Option<&'a SqlToken> {
        self.tokens.get(i)
    }

    fn scan_ctes(&mut self) {
        for i in 0..self.tokens.len() {
            if !self.tokens[i].is_keyword("WITH") {
                continue;
            }
            let mut j = i + 1;
            if self.tok(j).is_some_and(|t| t.is_keyword("RECURSIVE")) {
                j += 1;
            }
            loop {
                let Some(name) = self.tok(j).filter(|t| t.is_identifier()) else {
                    break;
                };
                self.ctes.insert(fold(&name.text));
                self.claimed[j] = true;
                j += 1;
                if self.tok(j).is_some_and(|t| t.is_punct('(')) {
                    j = self.matching_paren(j) + 1;
                }
                if !self.tok(j).is_some_and(|t| t.is_keyword("AS")) {
                    break;
                }
                j += 1;
                while self
                    .tok(j)
                    .is_some_and(|t| t.is_keyword("NOT") || t.is_keyword("MATERIALIZED"))
                {
                    j += 1;
                }
                if self.tok(j).is_some_and(|t| t.is_punct('(')) {
                    j = self.matching_paren(j) + 1;
                }
                if self.tok(j).is_some_and(|t| t.is_punct(',')) {
                    j += 1;
                } else {
                    break;
                }
            }
        }
    }

    fn scan_table_refs(&mut self) {
        for i in 0..self.tokens.len() {
            let t = &self.tokens[i];
            if t.kind != TokenKind::Keyword {
                continue;
            }
            match t.text.as_str() {
                "FROM" | "UPDATE" => self.table_list(i + 1, true, true),
                "JOIN" => self.table_list(i + 1, false, true),
                // `INTO t (a, b)`: the parenthesis is a column list.
                "INTO" => self.table_list(i + 1, false, false),
                _ => {}
            }
        }
    }

    fn table_list(&mut self, mut j: usize, allow_comma: bool, allow_call: bool) {
        loop {
            j = self.table_ref(j, allow_call);
            if allow_comma && self.tok(j).is_some_and(|t| t.is_punct(',')) {
                j += 1;
            } else {
                return;
            }
        }
    }

    /// Parses one table reference starting at `j`; returns the position after it.
    fn table_ref(&mut self, mut j: usize, allow_call: bool) -> usize {
        while self.tok(j).is_some_and(|t| t.is_keyword("LATERAL")) {
            j += 1;
        }
        let Some(first) = self.tok(j) else {
            return j;
        };

        let binding: Binding;
        let mut own_name = None;
        if first.is_punct('(') {
            // Derived table; its body is scanned on its own.
            j = self.matching_paren(j) + 1;
            binding = None;
        } else if first.is_identifier() {
            let mut name = &first.text;
            self.claimed[j] = true;
            j += 1;
            while self.tok(j).is_some_and(|t| t.is_punct('.'))
                && self.tok(j + 1).is_some_and(|t| t.is_identifier())
            {
                self.claimed[j + 1] = true;
                name = &self.tokens[j + 1].text;
                j += 2;
            }
            if allow_call && self.tok(j).is_some_and(|t| t.is_punct('(')) {
                // Table-valued function call, not a table.
                return self.matching_paren(j) + 1;
            }
            let key = fold(name);
            binding = if self.ctes.contains(&key) {
                None
            } else {
                self.catalog.lookup_table(name)
            };
            if let Some(tid) = binding {
                self.tables.insert(tid);
            }
            own_name = Some(key);
        } else {
            return j;
        }

        if let Some(key) = own_name {
            self.bindings.entry(key).or_insert(binding);
        }
        let mut alias_at = None;
        if self.tok(j).is_some_and(|t| t.is_keyword("AS")) {
            if self.tok(j + 1).is_some_and(|t| t.is_identifier()) {
                alias_at = Some(j + 1);
            }
        } else if self.tok(j).is_some_and(|t| t.is_identifier()) {
            alias_at = Some(j);
        }
        if let Some(a) = alias_at {
            self.claimed[a] = true;
            self.bindings.insert(fold(&self.tokens[a].text), binding);
            j = a + 1;
            // Column alias list: `AS d(x, y)`.
            if self.tok(j).is_some_and(|t| t.is_punct('(')) {
                let close = self.matching_paren(j);
                for c in self.claimed.iter_mut().take(close.min(self.tokens.len())).skip(j) {
                    *c = true;
                }
                j = close + 1;
            }
        }
        j
    }

    fn scan_columns(&self) -> BTreeSet<(TableId, ColumnId)> {
        let mut columns = BTreeSet::new();

        let mut i = 0;
        while i < self.tokens.len() {
            let t = &self.tokens[i];
            if !t.is_identifier() || self.claimed[i] {
                i += 1;
                continue;
            }
            let after_dot = i > 0 && self.tokens[i - 1].is_punct('.');
            let after_as = i > 0 && self.tokens[i - 1].is_keyword("AS");

            // Dotted chain `a.b[.c...]`.
            let mut parts = vec![i];
            let mut j = i + 1;
            while self.tok(j).is_some_and(|t| t.is_punct('.'))
                && self.tok(j + 1).is_some_and(|t| t.is_identifier())
            {
                parts.push(j + 1);
                j += 2;
            }
            let is_call = self.tok(j).is_some_and(|t| t.is_punct('('));

            if parts.len() >= 2 && !is_call && !after_dot {
                let qualifier = &self.tokens[parts[parts.len() - 2]].text;
                let column = &self.tokens[parts[parts.len() - 1]].text;
                if let Some(tid) = self.resolve_qualifier(qualifier) {
                    if let Some(cid) = self.catalog.lookup_column(tid, column) {
                        columns.insert((tid, cid));
                    }
                }
            } else if parts.len() == 1 && !is_call && !after_dot && !after_as {
                let name = &t.text;
                let key = fold(name);
                let shadowed = self.bindings.contains_key(&key) || self.ctes.contains(&key);
                if !shadowed {
                    let mut owners = self
                        .tables
                        .iter()
                        .filter_map(|&tid| self.catalog.lookup_column(tid, name).map(|c| (tid, c)));
                    if let (Some(owner), None) = (owners.next(), owners.next()) {
                        columns.insert(owner);
                    }
                }
            }
            i = j;
        }
        columns
    }

    fn resolve_qualifier(&self, qualifier: &str) -> Option<TableId> {
        match self.bindings.get(&fold(qualifier)) {
            Some(binding) => *binding,
            None => self
                .catalog
                .lookup_table(qualifier)
                .filter(|tid| self.tables.contains(tid)),
        }
    }
}

/// Extracts the catalog tables and `table.column` references of one SQL statement.
///
/// Unknown identifiers are ignored. Unqualified columns are attributed only when
/// exactly one referenced table owns a column of that name.
pub fn extract_relevant_set(sql: &str, catalog: &SchemaCatalog) -> Result<RelevantSet, SqlError> {
    if sql.trim().is_empty() {
        return Err(SqlError::Empty);
    }
    let tokens = tokenize_sql(sql)?;
    let mut scanner = Scanner {
        tokens: &tokens,
        catalog,
        ctes: HashSet::new(),
        bindings: HashMap::new(),
        tables: BTreeSet::new(),
        claimed: vec![false; tokens.len()],
    };
    scanner.scan_ctes();
    scanner.scan_table_refs();
    let columns = scanner.scan_columns();
    Ok(RelevantSet {
        tables: scanner.tables,
        columns,
    })
}
