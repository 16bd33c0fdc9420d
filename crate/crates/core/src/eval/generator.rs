//! Seeded synthetic enterprise workloads: a catalog with a hub-heavy foreign
//! key graph and a trace of templated questions whose SQL joins a connected,
//! planted set of tables.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::catalog::{ColumnDoc, ForeignKeyDoc, SchemaCatalog, SchemaDocument, TableDoc, TableId};
use crate::contextual::TraceEntry;

/// `(table_count, column_count)` for the four benchmark groups.
pub const TABLE1_GROUPS: [(usize, usize); 4] = [(50, 701), (100, 1486), (200, 2567), (246, 3021)];

const BODY_MAX: usize = 6;
const TAIL_MAX: usize = 20;
const BODY_RATIO: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorProfile {
    pub table_count: usize,
    /// Target median of declared foreign keys per table.
    pub fk_median_target: f64,
    /// Target share of questions whose relevant set has 7 or more tables.
    pub tables_per_query_p_ge7: f64,
    pub tables_per_query_stddev: f64,
    pub columns_per_table_mean: f64,
    pub seed: u64,
    pub query_count: usize,
}

impl Default for GeneratorProfile {
    fn default() -> Self {
        Self::group(4)
    }
}

impl GeneratorProfile {
    /// Enterprise profile at the size of benchmark group `g` (1 to 4).
    ///
    /// # Panics
    /// If `g` is not in `1..=4`.
    pub fn group(g: usize) -> Self {
        let (tables, columns) = TABLE1_GROUPS[g - 1];
        Self {
            table_count: tables,
            fk_median_target: 7.5,
            tables_per_query_p_ge7: 0.25,
            tables_per_query_stddev: 3.3,
            columns_per_table_mean: columns as f64 / tables as f64,
            seed: 20_240_917,
            query_count: 500,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_query_count(mut self, n: usize) -> Self {
        self.query_count = n;
        self
    }

    pub fn column_target(&self) -> usize {
        (self.table_count as f64 * self.columns_per_table_mean).round() as usize
    }

    fn fk_degree(&self) -> usize {
        self.fk_median_target.ceil() as usize
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidProfile(m.into()));
        if self.table_count < 1 || self.query_count < 1 {
            return bad("table_count and query_count must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.tables_per_query_p_ge7) {
            return bad("tables_per_query_p_ge7 must be in [0, 1]");
        }
        if !(self.tables_per_query_stddev >= 0.0) || !(self.fk_median_target >= 0.0) {
            return bad("tables_per_query_stddev and fk_median_target must be non-negative");
        }
        if !(self.columns_per_table_mean >= 1.0) {
            return bad("columns_per_table_mean must be at least 1");
        }
        let d = self.fk_degree();
        if d + 1 > self.table_count {
            return Err(EvalError::Infeasible(format!(
                "fk_median_target {} needs at least {} tables",
                self.fk_median_target,
                d + 1
            )));
        }
        if (d + 1) as f64 > self.columns_per_table_mean {
            return Err(EvalError::Infeasible(format!(
                "fk_median_target {} exceeds columns per table {:.2} minus the primary key",
                self.fk_median_target, self.columns_per_table_mean
            )));
        }
        if self.tables_per_query_p_ge7 > 0.0 && self.table_count < BODY_MAX + 1 {
            return Err(EvalError::Infeasible("relevant sets of 7+ tables need at least 7 tables".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticWorkload {
    pub catalog: SchemaCatalog,
    pub trace: Vec<TraceEntry>,
    /// Planted relevant tables, aligned with `trace`.
    pub relevant: Vec<BTreeSet<TableId>>,
}

fn body_and_tail_sd(p_tail: f64, r: f64, max: usize) -> (Vec<f64>, f64) {
    let body_n = BODY_MAX.min(max);
    let mut p = vec![0.0; max];
    let body: Vec<f64> = (0..body_n).map(|i| BODY_RATIO.powi(i as i32)).collect();
    let bs: f64 = body.iter().sum();
    let body_mass = if max > BODY_MAX { 1.0 - p_tail } else { 1.0 };
    for (i, w) in body.iter().enumerate() {
        p[i] = w / bs * body_mass;
    }
    if max > BODY_MAX {
        let tail: Vec<f64> = (0..max - BODY_MAX).map(|i| r.powi(i as i32)).collect();
        let ts: f64 = tail.iter().sum();
        for (i, w) in tail.iter().enumerate() {
            p[BODY_MAX + i] = w / ts * p_tail;
        }
    }
    let mean: f64 = p.iter().enumerate().map(|(i, q)| (i + 1) as f64 * q).sum();
    let var: f64 = p
        .iter()
        .enumerate()
        .map(|(i, q)| q * ((i + 1) as f64 - mean).powi(2))
        .sum();
    (p, var.sqrt())
}

/// Probability of each relevant-set size `1..=len`: a geometric body over
/// sizes 1 to 6 and a geometric tail over 7 to 20 holding
/// `tables_per_query_p_ge7`, with the tail decay solved so the standard
/// deviation hits `tables_per_query_stddev`.
pub fn relevant_size_distribution(profile: &GeneratorProfile) -> Result<Vec<f64>, EvalError> {
    profile.validate()?;
    let max = TAIL_MAX.min(profile.table_count);
    let p_tail = profile.tables_per_query_p_ge7;
    if max <= BODY_MAX || p_tail == 0.0 {
        return Ok(body_and_tail_sd(0.0, 0.5, max.min(BODY_MAX)).0);
    }
    let target = profile.tables_per_query_stddev;
    let (mut lo, mut hi) = (1e-3, 1.5);
    let (_, sd_lo) = body_and_tail_sd(p_tail, lo, max);
    let (_, sd_hi) = body_and_tail_sd(p_tail, hi, max);
    if target < sd_lo || target > sd_hi {
        return Err(EvalError::Infeasible(format!(
            "tables_per_query_stddev {target} outside the reachable range [{sd_lo:.2}, {sd_hi:.2}]"
        )));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if body_and_tail_sd(p_tail, mid, max).1 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(body_and_tail_sd(p_tail, 0.5 * (lo + hi), max).0)
}

const TABLE_WORDS: &[&str] = &[
    "accounts", "addresses", "agents", "allocations", "approvals", "assets", "audits", "balances",
    "batches", "benefits", "bids", "bookings", "branches", "brands", "budgets", "bundles", "buyers",
    "campaigns", "carriers", "catalogs", "certificates", "channels", "charges", "claims", "clients",
    "commissions", "complaints", "containers", "contracts", "coupons", "credits", "currencies",
    "customers", "deliveries", "departments", "deposits", "devices", "discounts", "dispatches",
    "disputes", "distributors", "documents", "donations", "drivers", "employees", "enrollments",
    "equipment", "estimates", "events", "expenses", "facilities", "fees", "forecasts", "funds",
    "grants", "guarantees", "holidays", "incidents", "installments", "insurers", "inventories",
    "invoices", "items", "journals", "kiosks", "labels", "leads", "leases", "ledgers", "licenses",
    "loans", "locations", "lots", "machines", "manifests", "markets", "meetings", "members",
    "memberships", "merchants", "messages", "meters", "milestones", "orders", "outlets", "packages",
    "pallets", "partners", "patients", "payments", "payrolls", "pensions", "permits", "pickups",
    "plans", "policies", "portfolios", "positions", "premiums", "prescriptions", "prices",
    "projects", "promotions", "proposals", "providers", "purchases", "quotas", "quotes", "rates",
    "readings", "rebates", "receipts", "refunds", "regions", "registrations", "rentals", "repairs",
    "reservations", "resources", "returns", "reviews", "rewards", "routes", "salaries", "samples",
    "schedules", "sensors", "services", "sessions", "settlements", "shifts", "shipments", "sites",
    "skills", "sponsors", "stores", "students", "subscriptions", "suppliers", "surveys", "tariffs",
    "tasks", "teams", "tenants", "terminals", "territories", "tickets", "timesheets", "trainings",
    "transfers", "trips", "trucks", "units", "vehicles", "vendors", "vouchers", "wallets",
    "warehouses", "warranties", "withdrawals", "workflows", "zones",
];

const PREFIXES: &[&str] = &[
    "archived", "regional", "global", "pending", "legacy", "internal", "external", "monthly",
    "annual", "partner", "retail", "wholesale",
];

const DOMAINS: &[&str] = &[
    "finance", "logistics", "sales", "staffing", "inventory", "marketing", "support", "billing",
    "procurement", "compliance", "healthcare", "facilities",
];

const ATTRIBUTES: &[&str] = &[
    "amount", "status", "created_at", "updated_at", "quantity", "unit_price", "code", "title",
    "label", "score", "priority", "category", "currency_code", "start_date", "end_date", "notes",
    "rating", "balance", "weight", "volume", "capacity", "duration", "tax_rate", "discount_rate",
    "phone", "email", "city", "country", "postal_code", "latitude", "longitude", "revenue", "cost",
    "margin", "version", "owner_name", "channel_type", "risk_level", "approved_flag", "due_date",
];

const TEMPLATES: [(&str, &str); 8] = [
    ("how many {a} per {t}", " across {r}"),
    ("list the {a} of each {t}", " together with {r}"),
    ("show {t} {a}", " broken down by {r}"),
    ("what is the total {a} for {t}", " joined with {r}"),
    ("find {t} records by {a}", " matching {r}"),
    ("compare {a} of {t}", " between {r}"),
    ("which {t} has the highest {a}", " given {r}"),
    ("report {a} from {t}", " linked to {r}"),
];

fn words(name: &str) -> String {
    name.replace('_', " ")
}

fn table_names(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut base: Vec<&str> = TABLE_WORDS.to_vec();
    base.shuffle(rng);
    let mut names: Vec<String> = base.iter().take(n).map(|s| s.to_string()).collect();
    let mut taken: BTreeSet<String> = names.iter().cloned().collect();
    while names.len() < n {
        let name = format!(
            "{}_{}",
            PREFIXES.choose(rng).expect("prefixes"),
            TABLE_WORDS.choose(rng).expect("words")
        );
        if taken.insert(name.clone()) {
            names.push(name);
        }
    }
    names
}

/// Splits `total` into `n` positive-or-zero parts around `total / n` with
/// moderate spread, summing exactly to `total`.
fn spread(total: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.4..1.6)).collect();
    let ws: f64 = weights.iter().sum();
    let raw: Vec<f64> = weights.iter().map(|w| w / ws * total as f64).collect();
    let mut parts: Vec<usize> = raw.iter().map(|x| x.floor() as usize).collect();
    let mut rest = total - parts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        (raw[b] - raw[b].floor())
            .total_cmp(&(raw[a] - raw[a].floor()))
            .then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        parts[i] += 1;
        rest -= 1;
    }
    parts
}

/// Outgoing foreign-key targets per table. Out-degrees are balanced around
/// the median target; targets are drawn with probability proportional to
/// in-degree + 1, which grows hub tables.
fn fk_targets(profile: &GeneratorProfile, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let n = profile.table_count;
    let d = profile.fk_degree();
    let offsets = [0i64, -1, 1, -2, 2];
    let mut degrees: Vec<usize> = (0..n)
        .map(|i| (d as i64 + offsets[i % offsets.len()]).clamp(0, n as i64 - 1) as usize)
        .collect();
    degrees.shuffle(rng);

    let mut in_deg = vec![0usize; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut targets = vec![Vec::new(); n];
    for &src in &order {
        let mut chosen = BTreeSet::new();
        while chosen.len() < degrees[src] {
            let total: usize = (0..n)
                .filter(|&j| j != src && !chosen.contains(&j))
                .map(|j| in_deg[j] + 1)
                .sum();
            let mut pick = rng.gen_range(0..total);
            for j in (0..n).filter(|&j| j != src && !chosen.contains(&j)) {
                let w = in_deg[j] + 1;
                if pick < w {
                    chosen.insert(j);
                    in_deg[j] += 1;
                    break;
                }
                pick -= w;
            }
        }
        let mut picked: Vec<usize> = chosen.into_iter().collect();
        picked.shuffle(rng);
        targets[src] = picked;
    }
    targets
}

fn build_catalog(
    profile: &GeneratorProfile,
    names: &[String],
    targets: &[Vec<usize>],
    rng: &mut ChaCha8Rng,
) -> Result<(SchemaCatalog, Vec<Vec<String>>), EvalError> {
    let n = profile.table_count;
    let base: usize = targets.iter().map(|t| 1 + t.len()).sum();
    let total = profile.column_target();
    let extra = total.checked_sub(base).ok_or_else(|| {
        EvalError::Infeasible(format!(
            "{total} columns cannot hold {base} key columns for the requested foreign keys"
        ))
    })?;
    let extras = spread(extra, n, rng);

    let mut attributes = Vec::with_capacity(n);
    let mut tables = Vec::with_capacity(n);
    for i in 0..n {
        let name = &names[i];
        let tw = words(name);
        let mut columns = vec![ColumnDoc {
            name: format!("{name}_id"),
            description: Some(format!("identifier of {tw}")),
            primary_key: true,
        }];
        let mut foreign_keys = Vec::new();
        for &t in &targets[i] {
            let col = format!("{}_id", names[t]);
            columns.push(ColumnDoc {
                name: col.clone(),
                description: Some(format!("links {tw} to {}", words(&names[t]))),
                primary_key: false,
            });
            foreign_keys.push(ForeignKeyDoc {
                column: col.clone(),
                ref_table: names[t].clone(),
                ref_column: col,
            });
        }
        let mut pool: Vec<&str> = ATTRIBUTES.to_vec();
        pool.shuffle(rng);
        let attrs: Vec<String> = (0..extras[i])
            .map(|j| {
                let a = pool[j % pool.len()];
                if j < pool.len() {
                    a.to_string()
                } else {
                    format!("{a}_{}", j / pool.len() + 1)
                }
            })
            .collect();
        for a in &attrs {
            columns.push(ColumnDoc {
                name: a.clone(),
                description: Some(format!("{} of {tw}", words(a))),
                primary_key: false,
            });
        }
        tables.push(TableDoc {
            name: name.clone(),
            description: Some(format!("{tw} in the {} domain", DOMAINS.choose(rng).expect("domains"))),
            columns,
            foreign_keys,
        });
        attributes.push(attrs);
    }
    let catalog = SchemaCatalog::from_document(&SchemaDocument { tables })
        .map_err(|e| EvalError::Infeasible(format!("generated catalog rejected: {e}")))?;
    Ok((catalog, attributes))
}

/// Undirected FK adjacency: `(neighbor, child, parent)` for each edge.
fn adjacency(targets: &[Vec<usize>]) -> Vec<Vec<(usize, usize, usize)>> {
    let mut adj = vec![Vec::new(); targets.len()];
    for (child, ts) in targets.iter().enumerate() {
        for &parent in ts {
            adj[child].push((parent, child, parent));
            adj[parent].push((child, child, parent));
        }
    }
    adj
}

/// Grows a connected table set of `size` from a random seed table, returning
/// the tables in join order and the joining edge of every table after the first.
fn grow(
    size: usize,
    adj: &[Vec<(usize, usize, usize)>],
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<(usize, usize)>) {
    let start = rng.gen_range(0..adj.len());
    let mut members = vec![start];
    let mut edges = Vec::new();
    while members.len() < size {
        let frontier: Vec<(usize, usize, usize)> = members
            .iter()
            .flat_map(|&m| adj[m].iter().copied())
            .filter(|(nb, _, _)| !members.contains(nb))
            .collect();
        let Some(&(nb, child, parent)) = frontier.choose(rng) else {
            break;
        };
        members.push(nb);
        edges.push((child, parent));
    }
    (members, edges)
}

fn and_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn render_sql(members: &[usize], edges: &[(usize, usize)], names: &[String], attr: &str, aliased: bool) -> String {
    let refer = |t: usize| -> String {
        if aliased {
            format!("x{}", members.iter().position(|&m| m == t).expect("member"))
        } else {
            names[t].clone()
        }
    };
    let source = |t: usize| -> String {
        if aliased {
            format!("{} AS {}", names[t], refer(t))
        } else {
            names[t].clone()
        }
    };
    let head = refer(members[0]);
    let mut sql = format!("SELECT {head}.{attr}, COUNT(*) AS n FROM {}", source(members[0]));
    for (&t, &(child, parent)) in members[1..].iter().zip(edges) {
        let key = format!("{}_id", names[parent]);
        sql.push_str(&format!(
            " JOIN {} ON {}.{key} = {}.{key}",
            source(t),
            refer(child),
            refer(parent)
        ));
    }
    sql.push_str(&format!(" GROUP BY {head}.{attr}"));
    sql
}

/// Deterministic catalog and trace for `profile`.
pub fn generate_synthetic(profile: &GeneratorProfile) -> Result<SyntheticWorkload, EvalError> {
    let dist = relevant_size_distribution(profile)?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let names = table_names(profile.table_count, &mut rng);
    let targets = fk_targets(profile, &mut rng);
    let (catalog, attributes) = build_catalog(profile, &names, &targets, &mut rng)?;
    let adj = adjacency(&targets);

    // Stratified draws from the size distribution keep small traces on target.
    let q = profile.query_count;
    let mut cdf = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for p in &dist {
        acc += p;
        cdf.push(acc);
    }
    let mut sizes: Vec<usize> = (0..q)
        .map(|i| {
            let u = (i as f64 + 0.5) / q as f64;
            cdf.iter().position(|&c| u <= c).unwrap_or(dist.len() - 1) + 1
        })
        .collect();
    sizes.shuffle(&mut rng);

    let mut trace = Vec::with_capacity(q);
    let mut relevant = Vec::with_capacity(q);
    for size in sizes {
        let (members, edges) = grow(size, &adj, &mut rng);
        let head = members[0];
        let attr = attributes[head]
            .choose(&mut rng)
            .cloned()
            .unwrap_or_else(|| format!("{}_id", names[head]));
        let (lead, follow) = TEMPLATES[rng.gen_range(0..TEMPLATES.len())];
        let rest: Vec<String> = members[1..].iter().map(|&t| words(&names[t])).collect();
        let mut question = lead.replace("{a}", &words(&attr)).replace("{t}", &words(&names[head]));
        if !rest.is_empty() {
            question.push_str(&follow.replace("{r}", &and_list(&rest)));
        }
        let aliased = rng.gen_bool(0.5);
        trace.push(TraceEntry::new(question, render_sql(&members, &edges, &names, &attr, aliased)));
        relevant.push(members.iter().map(|&t| TableId(t as u32)).collect());
    }
    Ok(SyntheticWorkload {
        catalog,
        trace,
        relevant,
    })
}
