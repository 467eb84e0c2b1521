//! Solver-neutral linear / mixed-integer models and the registry tying model
//! columns and rows back to market symbols.

use indexmap::IndexMap;
use serde::Serialize;
use std::fmt::{self, Write as _};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ColId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub integer: bool,
}

/// `lower <= sum(terms) <= upper`; either side may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub terms: Vec<(ColId, f64)>,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(c, a)| a * values[c.0]).sum()
    }

    /// Amount by which `values` violates the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        (self.lower - act).max(act - self.upper).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct LinearModel {
    pub sense: Sense,
    pub columns: Vec<Column>,
    pub rows: Vec<Constraint>,
    pub objective_offset: f64,
}

impl LinearModel {
    pub fn new(sense: Sense) -> Self {
        LinearModel {
            sense,
            columns: Vec::new(),
            rows: Vec::new(),
            objective_offset: 0.0,
        }
    }

    pub fn add_column(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> ColId {
        self.columns.push(Column {
            name: name.into(),
            lower,
            upper,
            cost,
            integer: false,
        });
        ColId(self.columns.len() - 1)
    }

    pub fn add_integer_column(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        cost: f64,
    ) -> ColId {
        let id = self.add_column(name, lower, upper, cost);
        self.columns[id.0].integer = true;
        id
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        terms: Vec<(ColId, f64)>,
    ) -> RowId {
        let mut row = Constraint {
            name: name.into(),
            lower,
            upper,
            terms: Vec::with_capacity(terms.len()),
        };
        for (c, a) in terms {
            push_term(&mut row.terms, c, a);
        }
        self.rows.push(row);
        RowId(self.rows.len() - 1)
    }

    /// Adds `coef * col` to an existing row, merging with any existing term.
    pub fn add_term(&mut self, row: RowId, col: ColId, coef: f64) {
        push_term(&mut self.rows[row.0].terms, col, coef);
    }

    pub fn add_cost(&mut self, col: ColId, cost: f64) {
        self.columns[col.0].cost += cost;
    }

    pub fn set_bounds(&mut self, col: ColId, lower: f64, upper: f64) {
        self.columns[col.0].lower = lower;
        self.columns[col.0].upper = upper;
    }

    pub fn column(&self, col: ColId) -> &Column {
        &self.columns[col.0]
    }

    pub fn row(&self, row: RowId) -> &Constraint {
        &self.rows[row.0]
    }

    pub fn num_integer(&self) -> usize {
        self.columns.iter().filter(|c| c.integer).count()
    }

    pub fn is_mip(&self) -> bool {
        self.columns.iter().any(|c| c.integer)
    }

    pub fn relax_integrality(&mut self) {
        for c in &mut self.columns {
            c.integer = false;
        }
    }

    pub fn objective(&self, values: &[f64]) -> f64 {
        self.objective_offset
            + self
                .columns
                .iter()
                .zip(values)
                .map(|(c, v)| c.cost * v)
                .sum::<f64>()
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .columns
            .iter()
            .zip(values)
            .map(|(c, &v)| (c.lower - v).max(v - c.upper).max(0.0));
        let rows = self.rows.iter().map(|r| r.violation(values));
        bounds.chain(rows).fold(0.0, f64::max)
    }

    /// CPLEX LP text, for inspection with external tools.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        let name = |c: ColId| sanitize(&self.columns[c.0].name);
        out.push_str(match self.sense {
            Sense::Maximize => "Maximize\n obj:",
            Sense::Minimize => "Minimize\n obj:",
        });
        let mut any = false;
        for (i, c) in self.columns.iter().enumerate() {
            if c.cost != 0.0 {
                write_term(&mut out, c.cost, &name(ColId(i)));
                any = true;
            }
        }
        if !any {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let body = |out: &mut String| {
                if r.terms.is_empty() {
                    out.push_str(" 0");
                }
                for (c, a) in &r.terms {
                    write_term(out, *a, &name(*c));
                }
            };
            let label = format!("r{}_{}", i, sanitize(&r.name));
            if r.lower == r.upper {
                let _ = write!(out, " {label}:");
                body(&mut out);
                let _ = writeln!(out, " = {}", r.upper);
            } else {
                if r.upper.is_finite() {
                    let _ = write!(out, " {label}_ub:");
                    body(&mut out);
                    let _ = writeln!(out, " <= {}", r.upper);
                }
                if r.lower.is_finite() {
                    let _ = write!(out, " {label}_lb:");
                    body(&mut out);
                    let _ = writeln!(out, " >= {}", r.lower);
                }
            }
        }
        out.push_str("Bounds\n");
        for (i, c) in self.columns.iter().enumerate() {
            let n = name(ColId(i));
            match (c.lower.is_finite(), c.upper.is_finite()) {
                (false, false) => {
                    let _ = writeln!(out, " {n} free");
                }
                (true, true) => {
                    let _ = writeln!(out, " {} <= {n} <= {}", c.lower, c.upper);
                }
                (true, false) => {
                    let _ = writeln!(out, " {n} >= {}", c.lower);
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {n} <= {}", c.upper);
                }
            }
        }
        let ints: Vec<String> = (0..self.columns.len())
            .filter(|&i| self.columns[i].integer)
            .map(|i| name(ColId(i)))
            .collect();
        if !ints.is_empty() {
            let _ = writeln!(out, "General\n {}", ints.join(" "));
        }
        out.push_str("End\n");
        out
    }
}

fn push_term(terms: &mut Vec<(ColId, f64)>, col: ColId, coef: f64) {
    if let Some(t) = terms.iter_mut().find(|(c, _)| *c == col) {
        t.1 += coef;
    } else {
        terms.push((col, coef));
    }
}

fn write_term(out: &mut String, coef: f64, name: &str) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {name}", -coef);
    } else {
        let _ = write!(out, " + {coef} {name}");
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

/// Market symbol carried by a model column. Indices are positions in the
/// instance lists (bid, sub-bid step, location, period, export var, resource).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
pub enum Symbol {
    HourlyAcceptance(usize),
    SubBidAcceptance(usize, usize),
    Commitment(usize),
    Export(usize),
    Price(usize, usize),
    ResourcePrice(usize),
    HourlySurplus(usize),
    SubBidMaxSurplus(usize, usize),
    SubBidMinSurplus(usize, usize),
    BidSurplus(usize),
    AcceptanceCost(usize),
    RejectionCost(usize),
    RampUpPrice(usize, usize),
    RampDownPrice(usize, usize),
    /// Unserved injection at a node, priced at the price bound.
    ExcessSupply(usize, usize),
    ExcessDemand(usize, usize),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Symbol::*;
        match *self {
            HourlyAcceptance(i) => write!(f, "x_i[{i}]"),
            SubBidAcceptance(c, h) => write!(f, "x_hc[{c},{h}]"),
            Commitment(c) => write!(f, "u[{c}]"),
            Export(k) => write!(f, "n[{k}]"),
            Price(l, t) => write!(f, "pi[{l},{t}]"),
            ResourcePrice(m) => write!(f, "v[{m}]"),
            HourlySurplus(i) => write!(f, "s_i[{i}]"),
            SubBidMaxSurplus(c, h) => write!(f, "s_max[{c},{h}]"),
            SubBidMinSurplus(c, h) => write!(f, "s_min[{c},{h}]"),
            BidSurplus(c) => write!(f, "s_c[{c}]"),
            AcceptanceCost(c) => write!(f, "du_a[{c}]"),
            RejectionCost(c) => write!(f, "du_r[{c}]"),
            RampUpPrice(c, t) => write!(f, "g_up[{c},{t}]"),
            RampDownPrice(c, t) => write!(f, "g_down[{c},{t}]"),
            ExcessSupply(l, t) => write!(f, "excess_supply[{l},{t}]"),
            ExcessDemand(l, t) => write!(f, "excess_demand[{l},{t}]"),
        }
    }
}

/// Constraint family and index of a model row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RowKey {
    HourlyCap(usize),
    SubBidMax(usize, usize),
    SubBidMin(usize, usize),
    CommitCap(usize),
    Balance(usize, usize),
    ResourceCap(usize),
    FixAccepted(usize),
    FixRejected(usize),
    RampUp(usize, usize),
    RampDown(usize, usize),
    StrongDuality,
    HourlyDual(usize),
    SubBidDual(usize, usize),
    CommitDual(usize),
    ExportDual(usize),
    RejectionDeactivation(usize),
    AcceptanceDeactivation(usize),
    MinIncome(usize),
    Cut(usize),
}

impl fmt::Display for RowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A model plus the registry of its market symbols and constraint families.
#[derive(Debug, Clone)]
pub struct ModelHandle {
    pub model: LinearModel,
    symbols: IndexMap<Symbol, ColId>,
    rows: IndexMap<RowKey, RowId>,
}

#[derive(Debug, Serialize)]
struct RegistryEntry<'a> {
    symbol: String,
    column: usize,
    name: &'a str,
}

#[derive(Debug, Serialize)]
struct RowEntry {
    row: String,
    index: usize,
}

impl ModelHandle {
    pub fn new(sense: Sense) -> Self {
        ModelHandle {
            model: LinearModel::new(sense),
            symbols: IndexMap::new(),
            rows: IndexMap::new(),
        }
    }

    /// Registers a continuous column for `symbol`.
    ///
    /// Panics if the symbol is already registered.
    pub fn var(&mut self, symbol: Symbol, lower: f64, upper: f64, cost: f64) -> ColId {
        let col = self.model.add_column(symbol.to_string(), lower, upper, cost);
        let prev = self.symbols.insert(symbol, col);
        assert!(prev.is_none(), "symbol {symbol} registered twice");
        col
    }

    pub fn int_var(&mut self, symbol: Symbol, lower: f64, upper: f64, cost: f64) -> ColId {
        let col = self.var(symbol, lower, upper, cost);
        self.model.columns[col.0].integer = true;
        col
    }

    pub fn row(&mut self, key: RowKey, lower: f64, upper: f64, terms: Vec<(ColId, f64)>) -> RowId {
        let row = self.model.add_row(key.to_string(), lower, upper, terms);
        let prev = self.rows.insert(key, row);
        assert!(prev.is_none(), "row {key} registered twice");
        row
    }

    pub fn col(&self, symbol: Symbol) -> Option<ColId> {
        self.symbols.get(&symbol).copied()
    }

    pub fn row_id(&self, key: RowKey) -> Option<RowId> {
        self.rows.get(&key).copied()
    }

    pub fn symbols(&self) -> impl Iterator<Item = (Symbol, ColId)> + '_ {
        self.symbols.iter().map(|(s, c)| (*s, *c))
    }

    pub fn row_keys(&self) -> impl Iterator<Item = (RowKey, RowId)> + '_ {
        self.rows.iter().map(|(k, r)| (*k, *r))
    }

    /// Value of `symbol` in a column-value vector, 0 when the symbol is absent.
    pub fn value(&self, values: &[f64], symbol: Symbol) -> f64 {
        self.col(symbol).map_or(0.0, |c| values[c.0])
    }

    pub fn count(&self, pred: impl Fn(&Symbol) -> bool) -> usize {
        self.symbols.keys().filter(|s| pred(s)).count()
    }

    pub fn count_rows(&self, pred: impl Fn(&RowKey) -> bool) -> usize {
        self.rows.keys().filter(|k| pred(k)).count()
    }

    pub fn registry_json(&self) -> serde_json::Value {
        let cols: Vec<RegistryEntry> = self
            .symbols
            .iter()
            .map(|(s, c)| RegistryEntry {
                symbol: s.to_string(),
                column: c.0,
                name: &self.model.columns[c.0].name,
            })
            .collect();
        let rows: Vec<RowEntry> = self
            .rows
            .iter()
            .map(|(k, r)| RowEntry {
                row: k.to_string(),
                index: r.0,
            })
            .collect();
        serde_json::json!({ "columns": cols, "rows": rows })
    }
}
