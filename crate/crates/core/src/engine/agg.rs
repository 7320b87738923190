//! Mergeable aggregator state and deterministic rendering.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::query::ast::{AggKind, OutputDecl, ScalarType};

/// An emitted key, value or weight.
#[derive(Debug, Clone)]
pub enum Scalar {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Time(i64),
}

impl Scalar {
    fn rank(&self) -> u8 {
        match self {
            Scalar::Int(_) => 0,
            Scalar::Float(_) => 1,
            Scalar::Str(_) => 2,
            Scalar::Bool(_) => 3,
            Scalar::Time(_) => 4,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Scalar::Int(v) | Scalar::Time(v) => v.to_string(),
            Scalar::Float(v) => format_float(*v),
            Scalar::Str(s) => s.clone(),
            Scalar::Bool(b) => b.to_string(),
        }
    }

    fn as_f64(&self) -> f64 {
        match self {
            Scalar::Int(v) | Scalar::Time(v) => *v as f64,
            Scalar::Float(v) => *v,
            _ => f64::NAN,
        }
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) | (Scalar::Time(a), Scalar::Time(b)) => a.cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => a.total_cmp(b),
            (Scalar::Str(a), Scalar::Str(b)) => a.cmp(b),
            (Scalar::Bool(a), Scalar::Bool(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

/// Shortest round-trip decimal; integral values keep a trailing `.0`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let mut s = v.to_string();
    if !s.contains('.') {
        s.push_str(".0");
    }
    s
}

const LIMBS: usize = 68;
const LIMB_BITS: u32 = 32;
const LIMB_MASK: i64 = (1 << LIMB_BITS) - 1;

/// Exact sum of f64 values as a fixed-point integer with unit 2^-1074.
/// Addition is exact, so the rounded result is independent of the order
/// in which values are added or partial sums merged.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    limbs: Vec<i64>,
    pending: u32,
    nan: bool,
    pos_inf: bool,
    neg_inf: bool,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        if x.is_nan() {
            self.nan = true;
            return;
        }
        if x.is_infinite() {
            if x > 0.0 {
                self.pos_inf = true;
            } else {
                self.neg_inf = true;
            }
            return;
        }
        if x == 0.0 {
            return;
        }
        if self.limbs.is_empty() {
            self.limbs = vec![0; LIMBS];
        }
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as u32;
        let frac = bits & ((1 << 52) - 1);
        let (mant, shift) = if exp == 0 {
            (frac, 0)
        } else {
            (frac | (1 << 52), exp - 1)
        };
        let v = (mant as u128) << (shift % LIMB_BITS);
        let base = (shift / LIMB_BITS) as usize;
        let sign = if x < 0.0 { -1 } else { 1 };
        for k in 0..3 {
            let part = ((v >> (LIMB_BITS * k)) as i64) & LIMB_MASK;
            self.limbs[base + k as usize] += sign * part;
        }
        self.pending += 1;
        if self.pending >= 1 << 29 {
            self.normalize();
        }
    }

    fn normalize(&mut self) {
        normalize_limbs(&mut self.limbs);
        self.pending = 0;
    }

    pub fn merge(&mut self, other: &ExactSum) {
        self.nan |= other.nan;
        self.pos_inf |= other.pos_inf;
        self.neg_inf |= other.neg_inf;
        if other.limbs.is_empty() {
            return;
        }
        if self.limbs.is_empty() {
            self.limbs = vec![0; LIMBS];
        }
        let mut o = other.limbs.clone();
        normalize_limbs(&mut o);
        self.normalize();
        for (a, b) in self.limbs.iter_mut().zip(o) {
            *a += b;
        }
        self.normalize();
    }

    /// The exact sum rounded to nearest, ties to even.
    pub fn value(&self) -> f64 {
        if self.nan || (self.pos_inf && self.neg_inf) {
            return f64::NAN;
        }
        if self.pos_inf {
            return f64::INFINITY;
        }
        if self.neg_inf {
            return f64::NEG_INFINITY;
        }
        if self.limbs.is_empty() {
            return 0.0;
        }
        let mut l = self.limbs.clone();
        normalize_limbs(&mut l);
        let negative = l[LIMBS - 1] < 0;
        if negative {
            l.iter_mut().for_each(|x| *x = -*x);
            normalize_limbs(&mut l);
        }
        let Some(k) = l.iter().rposition(|x| *x != 0) else {
            return 0.0;
        };
        let magnitude = if k < 2 {
            let v = l[..=k].iter().enumerate().fold(0u128, |acc, (i, x)| {
                acc | ((*x as u128) << (LIMB_BITS * i as u32))
            });
            round_to_f64(v, -1074, false)
        } else {
            let v = ((l[k] as u128) << 64) | ((l[k - 1] as u128) << 32) | (l[k - 2] as u128);
            let sticky = l[..k - 2].iter().any(|x| *x != 0);
            round_to_f64(v, LIMB_BITS as i64 * (k as i64 - 2) - 1074, sticky)
        };
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }
}

fn normalize_limbs(l: &mut [i64]) {
    for i in 0..l.len() - 1 {
        let carry = l[i] >> LIMB_BITS;
        l[i] -= carry << LIMB_BITS;
        l[i + 1] += carry;
    }
}

/// Rounds `v * 2^exp` (plus a sticky fraction below `v`) to the nearest f64.
fn round_to_f64(v: u128, exp: i64, sticky: bool) -> f64 {
    let len = 128 - v.leading_zeros() as i64;
    if len <= 53 {
        // Only reachable with exp == -1074: exact, and the bit pattern of a
        // value with unit 2^-1074 below 2^53 is the integer itself.
        debug_assert_eq!(exp, -1074);
        return f64::from_bits(v as u64);
    }
    let mut shift = len - 53;
    let mut mant = v >> shift;
    let rem = v & ((1u128 << shift) - 1);
    let half = 1u128 << (shift - 1);
    if rem > half || (rem == half && (sticky || mant & 1 == 1)) {
        mant += 1;
        if mant == 1 << 53 {
            mant >>= 1;
            shift += 1;
        }
    }
    let biased = exp + shift + 1075;
    if biased >= 2047 {
        return f64::INFINITY;
    }
    f64::from_bits(((biased as u64) << 52) | (mant as u64 & ((1 << 52) - 1)))
}

#[derive(Debug, Clone)]
enum Cell {
    SumInt(i128),
    SumFloat(ExactSum),
    MeanInt {
        count: u64,
        total: i128,
    },
    MeanFloat {
        count: u64,
        total: ExactSum,
    },
    Collection(Vec<Scalar>),
    Set(BTreeSet<Scalar>),
    Top {
        n: usize,
        items: Vec<(Scalar, Scalar)>,
    },
}

fn top_order(a: &(Scalar, Scalar), b: &(Scalar, Scalar)) -> Ordering {
    let wa = a.1.as_f64();
    let wb = b.1.as_f64();
    let by_weight = match (&a.1, &b.1) {
        (Scalar::Int(x), Scalar::Int(y)) => y.cmp(x),
        _ => wb.total_cmp(&wa),
    };
    by_weight
        .then_with(|| a.0.render().cmp(&b.0.render()))
        .then_with(|| a.0.cmp(&b.0))
}

impl Cell {
    fn new(spec: &OutputDecl) -> Cell {
        let float = spec.value_type == ScalarType::Float;
        match spec.kind {
            AggKind::Sum if float => Cell::SumFloat(ExactSum::new()),
            AggKind::Sum => Cell::SumInt(0),
            AggKind::Mean if float => Cell::MeanFloat {
                count: 0,
                total: ExactSum::new(),
            },
            AggKind::Mean => Cell::MeanInt { count: 0, total: 0 },
            AggKind::Collection => Cell::Collection(Vec::new()),
            AggKind::Set => Cell::Set(BTreeSet::new()),
            AggKind::Top => Cell::Top {
                n: spec.top_n.unwrap_or(1) as usize,
                items: Vec::new(),
            },
        }
    }

    fn update(&mut self, value: Scalar, weight: Option<Scalar>) -> Result<(), String> {
        match (self, value) {
            (Cell::SumInt(t), Scalar::Int(v)) => {
                *t += v as i128;
                if i64::try_from(*t).is_err() {
                    return Err("integer overflow in sum".into());
                }
            }
            (Cell::SumFloat(t), v) => t.add(v.as_f64()),
            (Cell::MeanInt { count, total }, Scalar::Int(v)) => {
                *count += 1;
                *total += v as i128;
            }
            (Cell::MeanFloat { count, total }, v) => {
                *count += 1;
                total.add(v.as_f64());
            }
            (Cell::Collection(items), v) => items.push(v),
            (Cell::Set(items), v) => {
                items.insert(v);
            }
            (Cell::Top { n, items }, v) => {
                let w = weight.ok_or("top output requires a weight")?;
                items.push((v, w));
                items.sort_by(top_order);
                items.truncate(*n);
            }
            (_, v) => return Err(format!("value {} does not fit this output", v.render())),
        }
        Ok(())
    }

    fn merge(&mut self, other: Cell) {
        match (self, other) {
            (Cell::SumInt(a), Cell::SumInt(b)) => *a += b,
            (Cell::SumFloat(a), Cell::SumFloat(b)) => a.merge(&b),
            (Cell::MeanInt { count, total }, Cell::MeanInt { count: c, total: t }) => {
                *count += c;
                *total += t;
            }
            (Cell::MeanFloat { count, total }, Cell::MeanFloat { count: c, total: t }) => {
                *count += c;
                total.merge(&t);
            }
            (Cell::Collection(a), Cell::Collection(b)) => a.extend(b),
            (Cell::Set(a), Cell::Set(b)) => a.extend(b),
            (Cell::Top { n, items }, Cell::Top { items: more, .. }) => {
                items.extend(more);
                items.sort_by(top_order);
                items.truncate(*n);
            }
            _ => unreachable!("cells of one output share a kind"),
        }
    }

    fn rows(&self) -> Vec<(String, Option<String>, Scalar, Option<Scalar>)> {
        let one = |s: String| vec![(s, None, Scalar::Int(0), None)];
        match self {
            Cell::SumInt(t) => one(t.to_string()),
            Cell::SumFloat(t) => one(format_float(t.value())),
            Cell::MeanInt { count, total } => one(format_float(*total as f64 / *count as f64)),
            Cell::MeanFloat { count, total } => one(format_float(total.value() / *count as f64)),
            Cell::Collection(items) => {
                let mut v = items.clone();
                v.sort();
                v.into_iter().map(|s| (s.render(), None, s, None)).collect()
            }
            Cell::Set(items) => items
                .iter()
                .map(|s| (s.render(), None, s.clone(), None))
                .collect(),
            Cell::Top { items, .. } => {
                let mut v = items.clone();
                v.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| top_order(a, b)));
                v.into_iter()
                    .map(|(s, w)| (s.render(), Some(w.render()), s, Some(w)))
                    .collect()
            }
        }
    }
}

/// Partial results for every output, keyed by (output index, key tuple).
#[derive(Debug, Clone, Default)]
pub struct AggState {
    cells: BTreeMap<(usize, Vec<Scalar>), Cell>,
}

impl AggState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn update(
        &mut self,
        outputs: &[OutputDecl],
        output: usize,
        keys: Vec<Scalar>,
        value: Scalar,
        weight: Option<Scalar>,
    ) -> Result<(), String> {
        let spec = &outputs[output];
        self.cells
            .entry((output, keys))
            .or_insert_with(|| Cell::new(spec))
            .update(value, weight)
            .map_err(|e| format!("output `{}`: {e}", spec.name))
    }

    pub fn merge(&mut self, other: AggState) {
        for (k, cell) in other.cells {
            match self.cells.get_mut(&k) {
                Some(mine) => mine.merge(cell),
                None => {
                    self.cells.insert(k, cell);
                }
            }
        }
    }
}

/// Adds one emission to `state`.
pub fn agg_update(
    state: &mut AggState,
    outputs: &[OutputDecl],
    output: usize,
    keys: Vec<Scalar>,
    value: Scalar,
    weight: Option<Scalar>,
) -> Result<(), String> {
    state.update(outputs, output, keys, value, weight)
}

pub fn agg_merge(mut a: AggState, b: AggState) -> AggState {
    a.merge(b);
    a
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub output: String,
    pub keys: Vec<String>,
    pub value: String,
    pub weight: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutputTable {
    pub rows: Vec<Row>,
}

impl OutputTable {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&r.output);
            if r.keys.is_empty() {
                out.push_str("[]");
            }
            for k in &r.keys {
                let _ = write!(out, "[{k}]");
            }
            let _ = write!(out, " = {}", r.value);
            if let Some(w) = &r.weight {
                let _ = write!(out, " weight {w}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn render_output(state: &AggState, outputs: &[OutputDecl]) -> OutputTable {
    let mut order: Vec<usize> = (0..outputs.len()).collect();
    order.sort_by(|a, b| outputs[*a].name.cmp(&outputs[*b].name));
    let mut rows = Vec::new();
    for idx in order {
        let name = &outputs[idx].name;
        let cells = state
            .cells
            .range((idx, Vec::new())..)
            .take_while(|((o, _), _)| *o == idx);
        for ((_, keys), cell) in cells {
            let rendered_keys: Vec<String> = keys.iter().map(Scalar::render).collect();
            for (value, weight, _, _) in cell.rows() {
                rows.push(Row {
                    output: name.clone(),
                    keys: rendered_keys.clone(),
                    value,
                    weight,
                });
            }
        }
    }
    OutputTable { rows }
}
